//! The coefficient-algebra universe: finite-dimensional unital algebras with
//! a designated faithful matrix representation, and isometric actions of a
//! finite Abelian group on them.
//!
//! The universe is closed and recursive: scalars, functions on a finite set,
//! full matrix algebras, and convolution algebras over a [`crate::crossed::ConvContext`],
//! which is exactly what iterated crossed products require.
//!
//! Every action here is spatially implemented by a monomial matrix on the
//! designated representation space ([`Action::spatial_implementer`]), so each
//! `alpha_s` is isometric for every exponent `p` simultaneously.

use crate::crossed::{self, ConvContext, CrossedElement, LayerKind};
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupElement};
use crate::mat::CMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const MONOMIAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientAlgebra {
    /// The complex scalars, represented on a one-dimensional space.
    Scalars,
    /// Functions on a finite set of points with values in an inner algebra,
    /// represented block-diagonally as multiplication operators. The point
    /// order is fixed by construction.
    Functions {
        points: usize,
        inner: Box<CoefficientAlgebra>,
    },
    /// The full matrix algebra `M_n`, represented identically.
    FullMatrix { n: usize },
    /// A convolution algebra over a nested context, represented by its
    /// integrated regular form.
    Conv(Arc<ConvContext>),
}

impl CoefficientAlgebra {
    pub fn functions(points: usize, inner: CoefficientAlgebra) -> Self {
        CoefficientAlgebra::Functions {
            points,
            inner: Box::new(inner),
        }
    }

    pub fn functions_over_scalars(points: usize) -> Self {
        Self::functions(points, CoefficientAlgebra::Scalars)
    }

    pub fn full_matrix(n: usize) -> Self {
        CoefficientAlgebra::FullMatrix { n }
    }

    /// Dimension of the designated faithful representation space.
    pub fn rep_dim(&self) -> usize {
        match self {
            CoefficientAlgebra::Scalars => 1,
            CoefficientAlgebra::Functions { points, inner } => points * inner.rep_dim(),
            CoefficientAlgebra::FullMatrix { n } => *n,
            CoefficientAlgebra::Conv(ctx) => ctx.rep_dim(),
        }
    }

    /// Linear dimension of the algebra itself.
    pub fn dim(&self) -> usize {
        match self {
            CoefficientAlgebra::Scalars => 1,
            CoefficientAlgebra::Functions { points, inner } => points * inner.dim(),
            CoefficientAlgebra::FullMatrix { n } => n * n,
            CoefficientAlgebra::Conv(ctx) => ctx.dim(),
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        let data = match self {
            CoefficientAlgebra::Scalars => ElementData::Scalar(Complex64::new(0.0, 0.0)),
            CoefficientAlgebra::Functions { points, inner } => {
                ElementData::Function(vec![inner.zero(); *points])
            }
            CoefficientAlgebra::FullMatrix { n } => ElementData::Matrix(CMatrix::zeros(*n, *n)),
            CoefficientAlgebra::Conv(ctx) => ElementData::Crossed(CrossedElement::zero(ctx)),
        };
        AlgebraElement {
            algebra: self.clone(),
            data,
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        let data = match self {
            CoefficientAlgebra::Scalars => ElementData::Scalar(Complex64::new(1.0, 0.0)),
            CoefficientAlgebra::Functions { points, inner } => {
                ElementData::Function(vec![inner.unit(); *points])
            }
            CoefficientAlgebra::FullMatrix { n } => ElementData::Matrix(CMatrix::identity(*n)),
            CoefficientAlgebra::Conv(ctx) => ElementData::Crossed(CrossedElement::unit(ctx)),
        };
        AlgebraElement {
            algebra: self.clone(),
            data,
        }
    }

    /// A linear basis in a fixed deterministic order.
    pub fn basis(&self) -> Vec<AlgebraElement> {
        match self {
            CoefficientAlgebra::Scalars => vec![self.unit()],
            CoefficientAlgebra::Functions { points, inner } => {
                let mut out = Vec::with_capacity(self.dim());
                for x in 0..*points {
                    for b in inner.basis() {
                        let mut values = vec![inner.zero(); *points];
                        values[x] = b;
                        out.push(AlgebraElement {
                            algebra: self.clone(),
                            data: ElementData::Function(values),
                        });
                    }
                }
                out
            }
            CoefficientAlgebra::FullMatrix { n } => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..*n {
                    for j in 0..*n {
                        let mut m = CMatrix::zeros(*n, *n);
                        m.set(i, j, Complex64::new(1.0, 0.0));
                        out.push(AlgebraElement {
                            algebra: self.clone(),
                            data: ElementData::Matrix(m),
                        });
                    }
                }
                out
            }
            CoefficientAlgebra::Conv(ctx) => {
                let mut out = Vec::with_capacity(self.dim());
                for h in ctx.index_group().enumerate() {
                    for b in ctx.coeff().basis() {
                        out.push(AlgebraElement {
                            algebra: self.clone(),
                            data: ElementData::Crossed(CrossedElement::delta(ctx, &h, b)),
                        });
                    }
                }
                out
            }
        }
    }

    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> AlgebraElement {
        let data = match self {
            CoefficientAlgebra::Scalars => {
                ElementData::Scalar(crate::sample::complex_gaussian(rng))
            }
            CoefficientAlgebra::Functions { points, inner } => {
                ElementData::Function((0..*points).map(|_| inner.random_element(rng)).collect())
            }
            CoefficientAlgebra::FullMatrix { n } => {
                ElementData::Matrix(crate::sample::random_matrix(rng, *n, *n))
            }
            CoefficientAlgebra::Conv(ctx) => ElementData::Crossed(CrossedElement::random(ctx, rng)),
        };
        AlgebraElement {
            algebra: self.clone(),
            data,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementData {
    Scalar(Complex64),
    Function(Vec<AlgebraElement>),
    Matrix(CMatrix),
    Crossed(CrossedElement),
}

/// An element of a [`CoefficientAlgebra`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    algebra: CoefficientAlgebra,
    data: ElementData,
}

impl AlgebraElement {
    pub fn new(algebra: CoefficientAlgebra, data: ElementData) -> Result<Self> {
        let elem = AlgebraElement { algebra, data };
        elem.validate()?;
        Ok(elem)
    }

    pub fn scalar(value: Complex64) -> Self {
        AlgebraElement {
            algebra: CoefficientAlgebra::Scalars,
            data: ElementData::Scalar(value),
        }
    }

    pub fn matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("matrix algebra element must be square".into()));
        }
        let n = m.rows();
        Ok(AlgebraElement {
            algebra: CoefficientAlgebra::full_matrix(n),
            data: ElementData::Matrix(m),
        })
    }

    pub fn function(algebra: CoefficientAlgebra, values: Vec<AlgebraElement>) -> Result<Self> {
        AlgebraElement::new(algebra, ElementData::Function(values))
    }

    pub fn crossed(e: CrossedElement) -> Self {
        AlgebraElement {
            algebra: CoefficientAlgebra::Conv(e.context().clone()),
            data: ElementData::Crossed(e),
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.algebra, &self.data) {
            (CoefficientAlgebra::Scalars, ElementData::Scalar(_)) => Ok(()),
            (CoefficientAlgebra::Functions { points, inner }, ElementData::Function(values)) => {
                if values.len() != *points {
                    return Err(Error::Shape(format!(
                        "function element has {} values, expected {}",
                        values.len(),
                        points
                    )));
                }
                for v in values {
                    if v.algebra != **inner {
                        return Err(Error::Shape("function value in wrong inner algebra".into()));
                    }
                    v.validate()?;
                }
                Ok(())
            }
            (CoefficientAlgebra::FullMatrix { n }, ElementData::Matrix(m)) => {
                if m.rows() != *n || m.cols() != *n {
                    return Err(Error::Shape(format!(
                        "matrix element is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        n,
                        n
                    )));
                }
                Ok(())
            }
            (CoefficientAlgebra::Conv(ctx), ElementData::Crossed(e)) => {
                if e.context().as_ref() != ctx.as_ref() {
                    return Err(Error::ContextMismatch(
                        "crossed element lives in a different context".into(),
                    ));
                }
                Ok(())
            }
            _ => Err(Error::Shape(
                "element data does not match algebra kind".into(),
            )),
        }
    }

    pub fn algebra(&self) -> &CoefficientAlgebra {
        &self.algebra
    }

    pub fn data(&self) -> &ElementData {
        &self.data
    }

    pub fn as_scalar(&self) -> Option<Complex64> {
        match &self.data {
            ElementData::Scalar(c) => Some(*c),
            _ => None,
        }
    }

    pub fn as_function(&self) -> Option<&[AlgebraElement]> {
        match &self.data {
            ElementData::Function(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&CMatrix> {
        match &self.data {
            ElementData::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_crossed(&self) -> Option<&CrossedElement> {
        match &self.data {
            ElementData::Crossed(e) => Some(e),
            _ => None,
        }
    }

    fn check_same_algebra(&self, other: &AlgebraElement) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::ContextMismatch(
                "elements live in different algebras".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_same_algebra(other)?;
        let data = match (&self.data, &other.data) {
            (ElementData::Scalar(a), ElementData::Scalar(b)) => ElementData::Scalar(a + b),
            (ElementData::Function(a), ElementData::Function(b)) => ElementData::Function(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.add(y))
                    .collect::<Result<_>>()?,
            ),
            (ElementData::Matrix(a), ElementData::Matrix(b)) => ElementData::Matrix(a.add(b)),
            (ElementData::Crossed(a), ElementData::Crossed(b)) => ElementData::Crossed(a.add(b)?),
            _ => unreachable!("same algebra implies same data shape"),
        };
        Ok(AlgebraElement {
            algebra: self.algebra.clone(),
            data,
        })
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> AlgebraElement {
        let data = match &self.data {
            ElementData::Scalar(a) => ElementData::Scalar(a * c),
            ElementData::Function(a) => {
                ElementData::Function(a.iter().map(|x| x.scale(c)).collect())
            }
            ElementData::Matrix(a) => ElementData::Matrix(a.scale(c)),
            ElementData::Crossed(a) => ElementData::Crossed(a.scale(c)),
        };
        AlgebraElement {
            algebra: self.algebra.clone(),
            data,
        }
    }

    /// Product in the algebra: pointwise for functions, matrix product for
    /// full matrix algebras, twisted convolution for nested contexts.
    pub fn mul(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_same_algebra(other)?;
        let data = match (&self.data, &other.data) {
            (ElementData::Scalar(a), ElementData::Scalar(b)) => ElementData::Scalar(a * b),
            (ElementData::Function(a), ElementData::Function(b)) => ElementData::Function(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.mul(y))
                    .collect::<Result<_>>()?,
            ),
            (ElementData::Matrix(a), ElementData::Matrix(b)) => ElementData::Matrix(a.mul(b)),
            (ElementData::Crossed(a), ElementData::Crossed(b)) => {
                ElementData::Crossed(crossed::convolve(a, b)?)
            }
            _ => unreachable!("same algebra implies same data shape"),
        };
        Ok(AlgebraElement {
            algebra: self.algebra.clone(),
            data,
        })
    }

    /// Largest coefficient magnitude, recursing through nested structure.
    pub fn max_abs(&self) -> f64 {
        match &self.data {
            ElementData::Scalar(a) => a.norm(),
            ElementData::Function(a) => a.iter().map(|x| x.max_abs()).fold(0.0, f64::max),
            ElementData::Matrix(a) => a.max_abs(),
            ElementData::Crossed(a) => a.max_abs(),
        }
    }

    pub fn max_abs_diff(&self, other: &AlgebraElement) -> f64 {
        self.sub(other)
            .map(|d| d.max_abs())
            .unwrap_or(f64::INFINITY)
    }

    /// The designated faithful unital representation as a concrete matrix.
    pub fn represent(&self) -> Result<CMatrix> {
        match &self.data {
            ElementData::Scalar(a) => Ok(CMatrix::from_fn(1, 1, |_, _| *a)),
            ElementData::Function(values) => {
                let k = match &self.algebra {
                    CoefficientAlgebra::Functions { inner, .. } => inner.rep_dim(),
                    _ => unreachable!(),
                };
                let reps: Vec<CMatrix> = values
                    .iter()
                    .map(|v| v.represent())
                    .collect::<Result<_>>()?;
                let zero = CMatrix::zeros(k, k);
                Ok(CMatrix::from_blocks(values.len(), values.len(), |i, j| {
                    if i == j {
                        reps[i].clone()
                    } else {
                        zero.clone()
                    }
                }))
            }
            ElementData::Matrix(m) => Ok(m.clone()),
            ElementData::Crossed(e) => crossed::integrated_matrix(e),
        }
    }

    /// Block-diagonal multiplicity-inflated representation: every irreducible
    /// slot repeated `multiplicity` times. Still faithful and unital, and
    /// isometric for every `p` because the multiplicity is uniform.
    pub fn rep_variant(&self, multiplicity: usize) -> Result<CMatrix> {
        if multiplicity == 0 {
            return Err(Error::Domain("multiplicity must be at least 1".into()));
        }
        match &self.data {
            ElementData::Scalar(a) => {
                let mut m = CMatrix::zeros(multiplicity, multiplicity);
                for i in 0..multiplicity {
                    m.set(i, i, *a);
                }
                Ok(m)
            }
            ElementData::Function(values) => {
                let blocks: Vec<CMatrix> = values
                    .iter()
                    .map(|v| v.rep_variant(multiplicity))
                    .collect::<Result<_>>()?;
                let k = blocks.first().map_or(0, |b| b.rows());
                let zero = CMatrix::zeros(k, k);
                Ok(CMatrix::from_blocks(values.len(), values.len(), |i, j| {
                    if i == j {
                        blocks[i].clone()
                    } else {
                        zero.clone()
                    }
                }))
            }
            ElementData::Matrix(m) => Ok(m.block_diag_copies(multiplicity)),
            ElementData::Crossed(_) => Err(Error::Domain(
                "rep_variant does not apply to convolution algebras".into(),
            )),
        }
    }
}

/// Inverts [`AlgebraElement::represent`], verifying that the matrix lies in
/// the representation's image.
pub fn unrepresent(algebra: &CoefficientAlgebra, m: &CMatrix) -> Result<AlgebraElement> {
    let k = algebra.rep_dim();
    if m.rows() != k || m.cols() != k {
        return Err(Error::Shape(format!(
            "matrix is {}x{}, representation space has dimension {}",
            m.rows(),
            m.cols(),
            k
        )));
    }
    let tol = 1e-8 * m.max_abs().max(1.0);
    match algebra {
        CoefficientAlgebra::Scalars => Ok(AlgebraElement::scalar(m.get(0, 0))),
        CoefficientAlgebra::FullMatrix { .. } => Ok(AlgebraElement {
            algebra: algebra.clone(),
            data: ElementData::Matrix(m.clone()),
        }),
        CoefficientAlgebra::Functions { points, inner } => {
            let ik = inner.rep_dim();
            let mut values = Vec::with_capacity(*points);
            for x in 0..*points {
                for y in 0..*points {
                    if x != y && m.block(x, y, ik, ik).max_abs() > tol {
                        return Err(Error::Consistency(
                            "matrix is not block diagonal over the point set".into(),
                        ));
                    }
                }
                values.push(unrepresent(inner, &m.block(x, x, ik, ik))?);
            }
            Ok(AlgebraElement {
                algebra: algebra.clone(),
                data: ElementData::Function(values),
            })
        }
        CoefficientAlgebra::Conv(ctx) => {
            let e = crossed::recover_all(m, ctx)?;
            Ok(AlgebraElement::crossed(e))
        }
    }
}

/// An isometric action of a finite Abelian group on a coefficient algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    group: FiniteAbelianGroup,
    kind: ActionKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ActionKind {
    Trivial,
    /// Translation on `Functions(G, A)` combined with an inner action on the
    /// values: left is `f(x) -> inner_s(f(x - s))`, right is
    /// `f(x) -> inner_s(f(x + s))`.
    Translation {
        right: bool,
        inner: Box<Action>,
    },
    /// Conjugation of `FullMatrix(n)` by monomial matrices, one generator per
    /// cyclic factor.
    Monomial {
        generators: Vec<CMatrix>,
    },
    /// Dual action of the character group on a convolution algebra over a
    /// discrete layer: the coefficient at `s` is twisted by `conj(gamma(s))`.
    Dual,
    /// Scaling action of the primal group on a convolution algebra over the
    /// compact dual with trivial inner structure:
    /// `phi(gamma) -> gamma(s) * inner_s(phi(gamma))`.
    DualScale {
        inner: Box<Action>,
    },
}

impl Action {
    pub fn trivial(group: FiniteAbelianGroup) -> Self {
        Action {
            group,
            kind: ActionKind::Trivial,
        }
    }

    pub fn left_translation(group: FiniteAbelianGroup, inner: Action) -> Result<Self> {
        if inner.group.factors() != group.factors() {
            return Err(Error::ContextMismatch(
                "translation inner action must be by the same group".into(),
            ));
        }
        Ok(Action {
            group,
            kind: ActionKind::Translation {
                right: false,
                inner: Box::new(inner),
            },
        })
    }

    pub fn right_translation(group: FiniteAbelianGroup, inner: Action) -> Result<Self> {
        if inner.group.factors() != group.factors() {
            return Err(Error::ContextMismatch(
                "translation inner action must be by the same group".into(),
            ));
        }
        Ok(Action {
            group,
            kind: ActionKind::Translation {
                right: true,
                inner: Box::new(inner),
            },
        })
    }

    /// Conjugation action on `M_n` from one monomial generator per cyclic
    /// factor. Generators must be monomial, have the right conjugation order,
    /// and commute up to scalars so the assignment is a genuine action.
    pub fn monomial(group: FiniteAbelianGroup, generators: Vec<CMatrix>) -> Result<Self> {
        if generators.len() != group.factors().len() {
            return Err(Error::Shape(
                "one monomial generator per cyclic factor".into(),
            ));
        }
        let n = generators.first().map_or(0, |g| g.rows());
        for (g, &order) in generators.iter().zip(group.factors()) {
            if g.rows() != n || g.cols() != n {
                return Err(Error::Shape(
                    "monomial generators must share dimensions".into(),
                ));
            }
            if !g.is_monomial(MONOMIAL_TOL) {
                return Err(Error::Domain("generator is not a monomial matrix".into()));
            }
            let mut power = CMatrix::identity(n);
            for _ in 0..order {
                power = power.mul(g);
            }
            if power.as_scalar_multiple_of_identity(MONOMIAL_TOL).is_none() {
                return Err(Error::Domain(
                    "generator order does not divide its cyclic factor".into(),
                ));
            }
        }
        for i in 0..generators.len() {
            for j in (i + 1)..generators.len() {
                let ab = generators[i].mul(&generators[j]);
                let ba = generators[j].mul(&generators[i]);
                let quot = ab.mul(&ba.adjoint());
                if quot.as_scalar_multiple_of_identity(MONOMIAL_TOL).is_none() {
                    return Err(Error::Domain(
                        "generators must commute up to a scalar".into(),
                    ));
                }
            }
        }
        Ok(Action {
            group,
            kind: ActionKind::Monomial { generators },
        })
    }

    /// Shift-monomial action on `M_n`: every factor whose order is a multiple
    /// of `n` acts by conjugation with the cyclic shift, the rest act
    /// trivially.
    pub fn monomial_shift(group: FiniteAbelianGroup, n: usize) -> Result<Self> {
        let shift = CMatrix::from_fn(n, n, |i, j| {
            if i == (j + 1) % n {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let generators = group
            .factors()
            .iter()
            .map(|&order| {
                if n > 0 && (order as usize).is_multiple_of(n) {
                    shift.clone()
                } else {
                    CMatrix::identity(n)
                }
            })
            .collect();
        Action::monomial(group, generators)
    }

    /// True when [`monomial_shift`](Self::monomial_shift) has at least one
    /// nontrivial generator for this group and matrix size.
    pub fn shift_applicable(group: &FiniteAbelianGroup, n: usize) -> bool {
        n >= 2
            && group
                .factors()
                .iter()
                .any(|&order| (order as usize).is_multiple_of(n))
    }

    /// Conjugation action on `M_n` by an explicit permutation of basis
    /// indices: factors whose order is a multiple of the permutation's order
    /// act by the permutation matrix, the rest act trivially.
    pub fn monomial_permutation(group: FiniteAbelianGroup, perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &image in perm {
            if image >= n || seen[image] {
                return Err(Error::Domain("not a permutation of 0..n".into()));
            }
            seen[image] = true;
        }
        let mut order = 1usize;
        let mut current: Vec<usize> = perm.to_vec();
        while current.iter().enumerate().any(|(i, &v)| i != v) {
            current = current.iter().map(|&v| perm[v]).collect();
            order += 1;
            if order > 10_000 {
                return Err(Error::Domain("permutation order overflow".into()));
            }
        }
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            if perm[j] == i {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let generators = group
            .factors()
            .iter()
            .map(|&factor| {
                if (factor as usize).is_multiple_of(order) {
                    matrix.clone()
                } else {
                    CMatrix::identity(n)
                }
            })
            .collect();
        Action::monomial(group, generators)
    }

    /// True when [`monomial_permutation`](Self::monomial_permutation) yields
    /// at least one nontrivial generator.
    pub fn permutation_applicable(group: &FiniteAbelianGroup, perm: &[usize]) -> bool {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &image in perm {
            if image >= n || seen[image] {
                return false;
            }
            seen[image] = true;
        }
        if perm.iter().enumerate().all(|(i, &v)| i == v) {
            return false;
        }
        let mut order = 1usize;
        let mut current: Vec<usize> = perm.to_vec();
        while current.iter().enumerate().any(|(i, &v)| i != v) {
            current = current.iter().map(|&v| perm[v]).collect();
            order += 1;
        }
        group
            .factors()
            .iter()
            .any(|&factor| (factor as usize).is_multiple_of(order))
    }

    pub fn dual(dual_group: FiniteAbelianGroup) -> Self {
        Action {
            group: dual_group,
            kind: ActionKind::Dual,
        }
    }

    pub fn dual_scale(group: FiniteAbelianGroup, inner: Action) -> Result<Self> {
        if inner.group.factors() != group.factors() {
            return Err(Error::ContextMismatch(
                "dual-scale inner action must be by the same group".into(),
            ));
        }
        Ok(Action {
            group,
            kind: ActionKind::DualScale {
                inner: Box::new(inner),
            },
        })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    /// Checks that the action can act on elements of `algebra`.
    pub fn validate_for(&self, algebra: &CoefficientAlgebra) -> Result<()> {
        match (&self.kind, algebra) {
            (ActionKind::Trivial, _) => Ok(()),
            (
                ActionKind::Translation { inner, .. },
                CoefficientAlgebra::Functions { points, inner: ia },
            ) => {
                if *points != self.group.order() {
                    return Err(Error::ContextMismatch(
                        "translation acts on functions over the group itself".into(),
                    ));
                }
                inner.validate_for(ia)
            }
            (ActionKind::Monomial { generators }, CoefficientAlgebra::FullMatrix { n }) => {
                if generators.first().map_or(0, |g| g.rows()) != *n {
                    return Err(Error::ContextMismatch(
                        "monomial generators have the wrong dimension".into(),
                    ));
                }
                Ok(())
            }
            (ActionKind::Dual, CoefficientAlgebra::Conv(ctx)) => {
                if ctx.layer() != LayerKind::Discrete {
                    return Err(Error::ContextMismatch(
                        "dual action twists a discrete-layer convolution algebra".into(),
                    ));
                }
                if ctx.index_group().factors() != self.group.factors() {
                    return Err(Error::ContextMismatch(
                        "dual action group must be the dual of the context group".into(),
                    ));
                }
                Ok(())
            }
            (ActionKind::DualScale { inner }, CoefficientAlgebra::Conv(ctx)) => {
                if ctx.layer() != LayerKind::CompactDual {
                    return Err(Error::ContextMismatch(
                        "dual-scale action needs a compact-dual layer".into(),
                    ));
                }
                if ctx.index_group().factors() != self.group.factors() {
                    return Err(Error::ContextMismatch(
                        "dual-scale action group must match the context group".into(),
                    ));
                }
                if !matches!(ctx.action().kind(), ActionKind::Trivial) {
                    return Err(Error::ContextMismatch(
                        "dual-scale action needs a trivial inner context action".into(),
                    ));
                }
                inner.validate_for(ctx.coeff())
            }
            _ => Err(Error::ContextMismatch(
                "action kind does not fit the algebra".into(),
            )),
        }
    }

    fn monomial_word(&self, generators: &[CMatrix], s: &GroupElement) -> CMatrix {
        let n = generators.first().map_or(0, |g| g.rows());
        let mut w = CMatrix::identity(n);
        for (g, &power) in generators.iter().zip(s.residues()) {
            for _ in 0..power {
                w = w.mul(g);
            }
        }
        w
    }

    /// Applies `alpha_s` to an element.
    pub fn act(&self, s: &GroupElement, a: &AlgebraElement) -> Result<AlgebraElement> {
        match &self.kind {
            ActionKind::Trivial => Ok(a.clone()),
            ActionKind::Translation { right, inner } => {
                let values = a.as_function().ok_or_else(|| {
                    Error::ContextMismatch("translation acts on function elements".into())
                })?;
                let g = &self.group;
                if values.len() != g.order() {
                    return Err(Error::ContextMismatch(
                        "function element is not indexed by the group".into(),
                    ));
                }
                let mut out = Vec::with_capacity(values.len());
                for xi in 0..values.len() {
                    let x = g.element(xi);
                    let src = if *right { g.add(&x, s) } else { g.sub(&x, s) };
                    out.push(inner.act(s, &values[g.index_of(&src)])?);
                }
                AlgebraElement::new(a.algebra().clone(), ElementData::Function(out))
            }
            ActionKind::Monomial { generators } => {
                let m = a.as_matrix().ok_or_else(|| {
                    Error::ContextMismatch("monomial conjugation acts on matrix elements".into())
                })?;
                let w = self.monomial_word(generators, s);
                Ok(AlgebraElement {
                    algebra: a.algebra().clone(),
                    data: ElementData::Matrix(w.mul(m).mul(&w.adjoint())),
                })
            }
            ActionKind::Dual => {
                let e = a.as_crossed().ok_or_else(|| {
                    Error::ContextMismatch("dual action acts on crossed elements".into())
                })?;
                let gamma = Character::new(s.clone());
                let inner_group = e.context().index_group().clone();
                let twisted = e.map_coeffs_indexed(|t, coeff| {
                    let phase = inner_group.pair(&gamma, t)?.conj();
                    Ok(coeff.scale(phase))
                })?;
                Ok(AlgebraElement::crossed(twisted))
            }
            ActionKind::DualScale { inner } => {
                let e = a.as_crossed().ok_or_else(|| {
                    Error::ContextMismatch("dual-scale action acts on crossed elements".into())
                })?;
                let dual_group = e.context().index_group().clone();
                let twisted = e.map_coeffs_indexed(|gamma_elem, coeff| {
                    let phase = dual_group.pair(&Character::new(gamma_elem.clone()), s)?;
                    Ok(inner.act(s, coeff)?.scale(phase))
                })?;
                Ok(AlgebraElement::crossed(twisted))
            }
        }
    }

    /// The monomial matrix `U_s` on the designated representation space with
    /// `represent(alpha_s(a)) = U_s represent(a) U_s^*`.
    pub fn spatial_implementer(
        &self,
        s: &GroupElement,
        algebra: &CoefficientAlgebra,
    ) -> Result<CMatrix> {
        self.validate_for(algebra)?;
        match &self.kind {
            ActionKind::Trivial => Ok(CMatrix::identity(algebra.rep_dim())),
            ActionKind::Translation { right, inner } => {
                let (points, inner_alg) = match algebra {
                    CoefficientAlgebra::Functions { points, inner } => (*points, inner.as_ref()),
                    _ => unreachable!("validated above"),
                };
                let g = &self.group;
                let u_inner = inner.spatial_implementer(s, inner_alg)?;
                let k = inner_alg.rep_dim();
                let zero = CMatrix::zeros(k, k);
                Ok(CMatrix::from_blocks(points, points, |x, y| {
                    let xe = g.element(x);
                    let ye = g.element(y);
                    let target = if *right { g.sub(&ye, s) } else { g.add(&ye, s) };
                    if xe == target {
                        u_inner.clone()
                    } else {
                        zero.clone()
                    }
                }))
            }
            ActionKind::Monomial { generators } => Ok(self.monomial_word(generators, s)),
            ActionKind::Dual => {
                let ctx = match algebra {
                    CoefficientAlgebra::Conv(ctx) => ctx,
                    _ => unreachable!("validated above"),
                };
                let gamma = Character::new(s.clone());
                let inner_group = ctx.index_group();
                let k = ctx.coeff().rep_dim();
                let n = inner_group.order();
                let mut u = CMatrix::zeros(n * k, n * k);
                for (ti, t) in inner_group.enumerate().iter().enumerate() {
                    let phase = inner_group.pair(&gamma, t)?.conj();
                    for e in 0..k {
                        u.set(ti * k + e, ti * k + e, phase);
                    }
                }
                Ok(u)
            }
            ActionKind::DualScale { inner } => {
                let ctx = match algebra {
                    CoefficientAlgebra::Conv(ctx) => ctx,
                    _ => unreachable!("validated above"),
                };
                let dual_group = ctx.index_group();
                let u_inner = inner.spatial_implementer(s, ctx.coeff())?;
                let k = ctx.coeff().rep_dim();
                let n = dual_group.order();
                let mut u = CMatrix::zeros(n * k, n * k);
                for (gi, gamma_elem) in dual_group.enumerate().iter().enumerate() {
                    let phase = dual_group.pair(&Character::new(gamma_elem.clone()), s)?;
                    for a in 0..k {
                        for b in 0..k {
                            u.set(gi * k + a, gi * k + b, u_inner.get(a, b) * phase);
                        }
                    }
                }
                Ok(u)
            }
        }
    }
}
