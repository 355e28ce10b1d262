//! The convolution-algebra engine behind every layer of the duality chain:
//! twisted convolution, integrated regular representations as block matrices,
//! operational norms, the dual action, the canonical embeddings and the
//! coefficient expectations.
//!
//! A context couples an index group (discrete with counting measure, or a
//! compact dual with normalized measure) to a coefficient algebra and an
//! isometric action. Contexts nest through
//! [`CoefficientAlgebra::Conv`](crate::algebra::CoefficientAlgebra), giving
//! iterated crossed products.

use crate::algebra::{Action, AlgebraElement, CoefficientAlgebra, ElementData};
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupElement, HaarWeight};
use crate::mat::CMatrix;
use crate::pnorm::{opnorm, Budget, NormEstimate, PExponent};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Whether the index set carries counting measure (a discrete group) or the
/// normalized Haar measure of total mass one (a compact dual group).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Discrete,
    CompactDual,
}

/// A convolution context: index group, Haar weight, coefficient algebra and
/// an isometric action of the index group on the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvContext {
    index_group: FiniteAbelianGroup,
    layer: LayerKind,
    coeff: CoefficientAlgebra,
    action: Action,
}

impl ConvContext {
    pub fn new(
        index_group: FiniteAbelianGroup,
        layer: LayerKind,
        coeff: CoefficientAlgebra,
        action: Action,
    ) -> Result<Arc<Self>> {
        if action.group().factors() != index_group.factors() {
            return Err(Error::ContextMismatch(
                "context action must be by the index group".into(),
            ));
        }
        action.validate_for(&coeff)?;
        Ok(Arc::new(ConvContext {
            index_group,
            layer,
            coeff,
            action,
        }))
    }

    pub fn index_group(&self) -> &FiniteAbelianGroup {
        &self.index_group
    }

    pub fn layer(&self) -> LayerKind {
        self.layer
    }

    pub fn coeff(&self) -> &CoefficientAlgebra {
        &self.coeff
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn weight(&self) -> HaarWeight {
        match self.layer {
            LayerKind::Discrete => HaarWeight::counting(),
            LayerKind::CompactDual => HaarWeight::normalized(self.index_group.order()),
        }
    }

    /// Dimension of the integrated representation space.
    pub fn rep_dim(&self) -> usize {
        self.index_group.order() * self.coeff.rep_dim()
    }

    /// Linear dimension of the convolution algebra.
    pub fn dim(&self) -> usize {
        self.index_group.order() * self.coeff.dim()
    }
}

/// A finitely supported coefficient map on a [`ConvContext`], stored densely
/// in the group's enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedElement {
    context: Arc<ConvContext>,
    coeffs: Vec<AlgebraElement>,
}

impl CrossedElement {
    pub fn new(context: Arc<ConvContext>, coeffs: Vec<AlgebraElement>) -> Result<Self> {
        if coeffs.len() != context.index_group.order() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                context.index_group.order(),
                coeffs.len()
            )));
        }
        for c in &coeffs {
            if c.algebra() != &context.coeff {
                return Err(Error::ContextMismatch(
                    "coefficient lives in the wrong algebra".into(),
                ));
            }
        }
        Ok(CrossedElement { context, coeffs })
    }

    pub fn from_fn(
        context: &Arc<ConvContext>,
        mut f: impl FnMut(&GroupElement) -> Result<AlgebraElement>,
    ) -> Result<Self> {
        let coeffs = context
            .index_group
            .enumerate()
            .iter()
            .map(&mut f)
            .collect::<Result<Vec<_>>>()?;
        CrossedElement::new(context.clone(), coeffs)
    }

    pub fn zero(context: &Arc<ConvContext>) -> Self {
        let coeffs = vec![context.coeff.zero(); context.index_group.order()];
        CrossedElement {
            context: context.clone(),
            coeffs,
        }
    }

    /// The multiplicative unit: the coefficient `weight^{-1} * 1` at the
    /// identity, so that the weighted convolution has a genuine unit on both
    /// discrete and compact layers.
    pub fn unit(context: &Arc<ConvContext>) -> Self {
        let inv_w = 1.0 / context.weight().value();
        Self::delta(
            context,
            &context.index_group.identity(),
            context.coeff.unit().scale(Complex64::new(inv_w, 0.0)),
        )
    }

    /// Point mass `coeff * delta_at`.
    pub fn delta(context: &Arc<ConvContext>, at: &GroupElement, coeff: AlgebraElement) -> Self {
        let mut coeffs = vec![context.coeff.zero(); context.index_group.order()];
        coeffs[context.index_group.index_of(at)] = coeff;
        CrossedElement {
            context: context.clone(),
            coeffs,
        }
    }

    pub fn random(context: &Arc<ConvContext>, rng: &mut ChaCha8Rng) -> Self {
        let coeffs = (0..context.index_group.order())
            .map(|_| context.coeff.random_element(rng))
            .collect();
        CrossedElement {
            context: context.clone(),
            coeffs,
        }
    }

    pub fn context(&self) -> &Arc<ConvContext> {
        &self.context
    }

    pub fn coeffs(&self) -> &[AlgebraElement] {
        &self.coeffs
    }

    pub fn coeff(&self, at: &GroupElement) -> &AlgebraElement {
        &self.coeffs[self.context.index_group.index_of(at)]
    }

    pub fn coeff_at(&self, index: usize) -> &AlgebraElement {
        &self.coeffs[index]
    }

    pub fn add(&self, other: &CrossedElement) -> Result<CrossedElement> {
        self.check_same_context(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(CrossedElement {
            context: self.context.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &CrossedElement) -> Result<CrossedElement> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> CrossedElement {
        let coeffs = self.coeffs.iter().map(|a| a.scale(c)).collect();
        CrossedElement {
            context: self.context.clone(),
            coeffs,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|a| a.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CrossedElement) -> f64 {
        self.sub(other)
            .map(|d| d.max_abs())
            .unwrap_or(f64::INFINITY)
    }

    /// Rebuilds the element by transforming every coefficient together with
    /// the group element it sits at.
    pub fn map_coeffs_indexed(
        &self,
        mut f: impl FnMut(&GroupElement, &AlgebraElement) -> Result<AlgebraElement>,
    ) -> Result<CrossedElement> {
        let elements = self.context.index_group.enumerate();
        let coeffs = elements
            .iter()
            .zip(&self.coeffs)
            .map(|(s, c)| f(s, c))
            .collect::<Result<Vec<_>>>()?;
        CrossedElement::new(self.context.clone(), coeffs)
    }

    fn check_same_context(&self, other: &CrossedElement) -> Result<()> {
        if self.context.as_ref() != other.context.as_ref() {
            return Err(Error::ContextMismatch(
                "crossed elements live in different contexts".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "group": self.context.index_group.to_string(),
            "layer": match self.context.layer {
                LayerKind::Discrete => "G",
                LayerKind::CompactDual => "dual",
            },
            "coeffs": self.coeffs.iter().map(element_to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(context: &Arc<ConvContext>, v: &serde_json::Value) -> Result<Self> {
        let group = v["group"]
            .as_str()
            .ok_or_else(|| Error::Shape("missing group field".into()))?;
        if group != context.index_group.to_string() {
            return Err(Error::ContextMismatch(format!(
                "element group {} does not match context group {}",
                group, context.index_group
            )));
        }
        let layer = v["layer"]
            .as_str()
            .ok_or_else(|| Error::Shape("missing layer field".into()))?;
        let expect = match context.layer {
            LayerKind::Discrete => "G",
            LayerKind::CompactDual => "dual",
        };
        if layer != expect {
            return Err(Error::ContextMismatch(format!(
                "element layer {layer} does not match context layer {expect}"
            )));
        }
        let raw = v["coeffs"]
            .as_array()
            .ok_or_else(|| Error::Shape("missing coeffs array".into()))?;
        if raw.len() != context.index_group.order() {
            return Err(Error::Shape("wrong number of coefficients".into()));
        }
        let coeffs = raw
            .iter()
            .map(|c| element_from_json(&context.coeff, c))
            .collect::<Result<Vec<_>>>()?;
        CrossedElement::new(context.clone(), coeffs)
    }
}

fn element_to_json(a: &AlgebraElement) -> serde_json::Value {
    match a.data() {
        ElementData::Scalar(c) => serde_json::json!([c.re, c.im]),
        ElementData::Function(values) => serde_json::json!({
            "values": values.iter().map(element_to_json).collect::<Vec<_>>(),
        }),
        ElementData::Matrix(m) => m.to_json(),
        ElementData::Crossed(e) => e.to_json(),
    }
}

fn element_from_json(
    algebra: &CoefficientAlgebra,
    v: &serde_json::Value,
) -> Result<AlgebraElement> {
    match algebra {
        CoefficientAlgebra::Scalars => {
            let arr = v
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Shape("scalar coefficient must be a [re, im] pair".into()))?;
            let re = arr[0]
                .as_f64()
                .ok_or_else(|| Error::Shape("bad real part".into()))?;
            let im = arr[1]
                .as_f64()
                .ok_or_else(|| Error::Shape("bad imaginary part".into()))?;
            Ok(AlgebraElement::scalar(Complex64::new(re, im)))
        }
        CoefficientAlgebra::Functions { points, inner } => {
            let raw = v["values"]
                .as_array()
                .ok_or_else(|| Error::Shape("missing values array".into()))?;
            if raw.len() != *points {
                return Err(Error::Shape("wrong number of function values".into()));
            }
            let values = raw
                .iter()
                .map(|x| element_from_json(inner, x))
                .collect::<Result<Vec<_>>>()?;
            AlgebraElement::function(algebra.clone(), values)
        }
        CoefficientAlgebra::FullMatrix { n } => {
            let m = CMatrix::from_json(v)?;
            if m.rows() != *n || m.cols() != *n {
                return Err(Error::Shape("matrix coefficient has the wrong size".into()));
            }
            AlgebraElement::matrix(m)
        }
        CoefficientAlgebra::Conv(ctx) => {
            Ok(AlgebraElement::crossed(CrossedElement::from_json(ctx, v)?))
        }
    }
}

/// Twisted convolution
/// `(f * g)(x) = weight * sum_y f(y) * alpha_y(g(x - y))`,
/// the product taken in the coefficient algebra.
pub fn convolve(f: &CrossedElement, g: &CrossedElement) -> Result<CrossedElement> {
    f.check_same_context(g)?;
    let ctx = f.context.as_ref();
    let group = &ctx.index_group;
    let n = group.order();
    let w = Complex64::new(ctx.weight().value(), 0.0);
    let elements = group.enumerate();
    let mut coeffs = Vec::with_capacity(n);
    for x in &elements {
        let mut acc = ctx.coeff.zero();
        for (yi, y) in elements.iter().enumerate() {
            let shifted = group.sub(x, y);
            let moved = ctx.action.act(y, &g.coeffs[group.index_of(&shifted)])?;
            acc = acc.add(&f.coeffs[yi].mul(&moved)?)?;
        }
        coeffs.push(acc.scale(w));
    }
    CrossedElement::new(f.context.clone(), coeffs)
}

fn integrated_matrix_with(
    f: &CrossedElement,
    rep: &dyn Fn(&AlgebraElement) -> Result<CMatrix>,
) -> Result<CMatrix> {
    let ctx = f.context.as_ref();
    let group = &ctx.index_group;
    let n = group.order();
    let w = Complex64::new(ctx.weight().value(), 0.0);
    let elements = group.enumerate();
    // blocks[(t, t')] = weight * rep(alpha_{-t}(f(t - t')))
    let mut blocks: Vec<CMatrix> = Vec::with_capacity(n * n);
    for t in &elements {
        let minus_t = group.neg(t);
        for t_prime in &elements {
            let s = group.sub(t, t_prime);
            let moved = ctx.action.act(&minus_t, f.coeff(&s))?;
            blocks.push(rep(&moved)?.scale(w));
        }
    }
    Ok(CMatrix::from_blocks(n, n, |i, j| blocks[i * n + j].clone()))
}

/// Block matrix of the integrated regular representation on
/// `index space (x) coefficient representation space`.
pub fn integrated_matrix(f: &CrossedElement) -> Result<CMatrix> {
    integrated_matrix_with(f, &|a| a.represent())
}

/// Integrated representation built over a multiplicity-inflated coefficient
/// representation; used to exercise representation independence.
pub fn integrated_matrix_variant(f: &CrossedElement, multiplicity: usize) -> Result<CMatrix> {
    integrated_matrix_with(f, &|a| a.rep_variant(multiplicity))
}

/// The operational norm of the artifact: the `p -> p` norm of the canonical
/// integrated regular representation.
pub fn crossed_norm(
    f: &CrossedElement,
    p: PExponent,
    budget: &Budget,
    seed: u64,
) -> Result<NormEstimate> {
    opnorm(&integrated_matrix(f)?, p, budget, seed)
}

/// Same with extra start vectors for the underlying estimator.
pub fn crossed_norm_with_starts(
    f: &CrossedElement,
    p: PExponent,
    budget: &Budget,
    seed: u64,
    extra_starts: &[Vec<Complex64>],
) -> Result<NormEstimate> {
    crate::pnorm::opnorm_with_starts(&integrated_matrix(f)?, p, budget, seed, extra_starts)
}

/// Dual action on a discrete layer: the coefficient at `s` is twisted by
/// `conj(gamma(s))`. On the integrated matrix this is conjugation by a
/// diagonal phase (monomial) matrix, hence isometric for every `p`.
pub fn dual_action(gamma: &Character, f: &CrossedElement) -> Result<CrossedElement> {
    let ctx = f.context.as_ref();
    if ctx.layer != LayerKind::Discrete {
        return Err(Error::ContextMismatch(
            "dual action twists elements of a discrete layer".into(),
        ));
    }
    let group = ctx.index_group.clone();
    f.map_coeffs_indexed(|s, coeff| {
        let phase = group.pair(gamma, s)?.conj();
        Ok(coeff.scale(phase))
    })
}

/// Canonical embedding of the coefficient algebra: `a` times the convolution
/// unit, so that left convolution implements `i_A(a) f(s) = a f(s)`.
pub fn embed_algebra(a: &AlgebraElement, context: &Arc<ConvContext>) -> Result<CrossedElement> {
    if a.algebra() != &context.coeff {
        return Err(Error::ContextMismatch(
            "element is not in the coefficient algebra".into(),
        ));
    }
    let inv_w = Complex64::new(1.0 / context.weight().value(), 0.0);
    Ok(CrossedElement::delta(
        context,
        &context.index_group.identity(),
        a.scale(inv_w),
    ))
}

/// Canonical embedding of the index group: the weighted point mass at `s`,
/// so that left convolution implements `i_G(s) f(t) = alpha_s(f(s^{-1} t))`.
pub fn embed_group(s: &GroupElement, context: &Arc<ConvContext>) -> Result<CrossedElement> {
    let inv_w = Complex64::new(1.0 / context.weight().value(), 0.0);
    Ok(CrossedElement::delta(
        context,
        s,
        context.coeff.unit().scale(inv_w),
    ))
}

/// Coefficient expectation `E_s`: reads the coefficient at `s`.
pub fn expectation(f: &CrossedElement, s: &GroupElement) -> AlgebraElement {
    f.coeff(s).clone()
}

/// Inverts the integrated block formula at one group element:
/// `f(s) = alpha_s(represent^{-1}(weight^{-1} * block[s, 0]))`.
pub fn recover_coefficient(
    m: &CMatrix,
    s: &GroupElement,
    context: &Arc<ConvContext>,
) -> Result<AlgebraElement> {
    let k = context.coeff.rep_dim();
    if m.rows() != context.rep_dim() || m.cols() != context.rep_dim() {
        return Err(Error::Shape(
            "matrix does not match the context's representation".into(),
        ));
    }
    let inv_w = Complex64::new(1.0 / context.weight().value(), 0.0);
    let block = m
        .block(context.index_group.index_of(s), 0, k, k)
        .scale(inv_w);
    let inner = crate::algebra::unrepresent(&context.coeff, &block)?;
    context.action.act(s, &inner)
}

/// Recovers the whole coefficient map and verifies that the matrix really is
/// the integrated form of the result.
pub fn recover_all(m: &CMatrix, context: &Arc<ConvContext>) -> Result<CrossedElement> {
    let recovered = CrossedElement::from_fn(context, |s| recover_coefficient(m, s, context))?;
    let rebuilt = integrated_matrix(&recovered)?;
    let tol = 1e-8 * m.max_abs().max(1.0);
    if rebuilt.max_abs_diff(m) > tol {
        return Err(Error::Consistency(
            "matrix is not in the image of the integrated representation".into(),
        ));
    }
    Ok(recovered)
}
