//! The duality chain for a system `(G, A, alpha)` at exponent `p`:
//!
//! ```text
//! Layer0  dual group over (G over A, alpha), with the dual action
//! Layer1  G over (dual group over A, trivial), with the scaled dual action
//! Layer2  G over Functions(G, A), with translation tensor alpha
//! Layer3  G over Functions(G, A), with plain translation
//! Block   |G| x |G| block matrices over the represented algebra
//! ```
//!
//! together with the maps `phi1..phi4` between consecutive layers, their
//! composite and its inverse, the double dual action upstairs, the
//! conjugation-plus-shift action downstairs, and the Gelfand transform with
//! its distortion diagnostics.

use crate::algebra::{unrepresent, Action, AlgebraElement, CoefficientAlgebra};
use crate::crossed::{
    self, crossed_norm, crossed_norm_with_starts, integrated_matrix, ConvContext, CrossedElement,
    LayerKind,
};
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupElement};
use crate::mat::CMatrix;
use crate::pnorm::{opnorm, vec_p_norm, Budget, PExponent};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// A concrete element of `M_G (x) A`: a `|G| x |G|` grid of blocks of the
/// algebra's representation size. Target of `phi4`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    group: FiniteAbelianGroup,
    block_dim: usize,
    matrix: CMatrix,
}

impl BlockOperator {
    pub fn new(group: FiniteAbelianGroup, block_dim: usize, matrix: CMatrix) -> Result<Self> {
        let dim = group.order() * block_dim;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Shape(format!(
                "block operator needs a {dim}x{dim} matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(BlockOperator {
            group,
            block_dim,
            matrix,
        })
    }

    pub fn identity(group: FiniteAbelianGroup, block_dim: usize) -> Self {
        let dim = group.order() * block_dim;
        BlockOperator {
            group,
            block_dim,
            matrix: CMatrix::identity(dim),
        }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn block(&self, t: usize, t_prime: usize) -> CMatrix {
        self.matrix
            .block(t, t_prime, self.block_dim, self.block_dim)
    }

    pub fn mul(&self, other: &BlockOperator) -> Result<BlockOperator> {
        if self.group != other.group || self.block_dim != other.block_dim {
            return Err(Error::ContextMismatch(
                "block operators have different shapes".into(),
            ));
        }
        Ok(BlockOperator {
            group: self.group.clone(),
            block_dim: self.block_dim,
            matrix: self.matrix.mul(&other.matrix),
        })
    }

    pub fn max_abs_diff(&self, other: &BlockOperator) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

/// Result of a matched two-sided norm comparison.
#[derive(Clone, Copy, Debug)]
pub struct NormPair {
    pub left: f64,
    pub right: f64,
    pub converged: bool,
}

impl NormPair {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.left.max(self.right).max(1e-300);
        (self.left - self.right).abs() / scale
    }
}

/// One instantiation of the duality chain.
#[derive(Clone, Debug)]
pub struct ChainInstance {
    group: FiniteAbelianGroup,
    algebra: CoefficientAlgebra,
    action: Action,
    p: PExponent,
    inner0: Arc<ConvContext>,
    inner1: Arc<ConvContext>,
    layer0: Arc<ConvContext>,
    layer1: Arc<ConvContext>,
    layer2: Arc<ConvContext>,
    layer3: Arc<ConvContext>,
    /// `pair_table[gi][si] = gamma_gi(s_si)`
    pair_table: Vec<Vec<Complex64>>,
}

impl ChainInstance {
    pub fn new(
        group: FiniteAbelianGroup,
        algebra: CoefficientAlgebra,
        action: Action,
        p: PExponent,
    ) -> Result<Self> {
        if action.group().factors() != group.factors() {
            return Err(Error::ContextMismatch(
                "action must be by the chain's group".into(),
            ));
        }
        action.validate_for(&algebra)?;

        let inner0 = ConvContext::new(
            group.clone(),
            LayerKind::Discrete,
            algebra.clone(),
            action.clone(),
        )?;
        let layer0 = ConvContext::new(
            group.dual(),
            LayerKind::CompactDual,
            CoefficientAlgebra::Conv(inner0.clone()),
            Action::dual(group.dual()),
        )?;
        let inner1 = ConvContext::new(
            group.dual(),
            LayerKind::CompactDual,
            algebra.clone(),
            Action::trivial(group.dual()),
        )?;
        let layer1 = ConvContext::new(
            group.clone(),
            LayerKind::Discrete,
            CoefficientAlgebra::Conv(inner1.clone()),
            Action::dual_scale(group.clone(), action.clone())?,
        )?;
        let functions = CoefficientAlgebra::functions(group.order(), algebra.clone());
        let layer2 = ConvContext::new(
            group.clone(),
            LayerKind::Discrete,
            functions.clone(),
            Action::left_translation(group.clone(), action.clone())?,
        )?;
        let layer3 = ConvContext::new(
            group.clone(),
            LayerKind::Discrete,
            functions,
            Action::left_translation(group.clone(), Action::trivial(group.clone()))?,
        )?;

        let characters = group.characters();
        let elements = group.enumerate();
        let pair_table = characters
            .iter()
            .map(|gamma| {
                elements
                    .iter()
                    .map(|s| group.pair(gamma, s).expect("same shape"))
                    .collect()
            })
            .collect();

        Ok(ChainInstance {
            group,
            algebra,
            action,
            p,
            inner0,
            inner1,
            layer0,
            layer1,
            layer2,
            layer3,
            pair_table,
        })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn algebra(&self) -> &CoefficientAlgebra {
        &self.algebra
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn exponent(&self) -> PExponent {
        self.p
    }

    pub fn layer0(&self) -> &Arc<ConvContext> {
        &self.layer0
    }

    pub fn layer1(&self) -> &Arc<ConvContext> {
        &self.layer1
    }

    pub fn layer2(&self) -> &Arc<ConvContext> {
        &self.layer2
    }

    pub fn layer3(&self) -> &Arc<ConvContext> {
        &self.layer3
    }

    pub fn inner0(&self) -> &Arc<ConvContext> {
        &self.inner0
    }

    fn n(&self) -> usize {
        self.group.order()
    }

    fn k(&self) -> usize {
        self.algebra.rep_dim()
    }

    fn pair(&self, gi: usize, si: usize) -> Complex64 {
        self.pair_table[gi][si]
    }

    /// Builds a Layer0 element from coefficients `F(gamma_gi, s_si)`.
    pub fn layer0_from_fn(
        &self,
        mut f: impl FnMut(usize, usize) -> Result<AlgebraElement>,
    ) -> Result<CrossedElement> {
        CrossedElement::from_fn(&self.layer0, |gamma| {
            let gi = self.group.index_of(gamma);
            let inner = CrossedElement::from_fn(&self.inner0, |s| f(gi, self.group.index_of(s)))?;
            Ok(AlgebraElement::crossed(inner))
        })
    }

    /// Builds a Layer1 element from coefficients `H(s_si, gamma_gi)`.
    pub fn layer1_from_fn(
        &self,
        mut f: impl FnMut(usize, usize) -> Result<AlgebraElement>,
    ) -> Result<CrossedElement> {
        CrossedElement::from_fn(&self.layer1, |s| {
            let si = self.group.index_of(s);
            let inner =
                CrossedElement::from_fn(&self.inner1, |gamma| f(si, self.group.index_of(gamma)))?;
            Ok(AlgebraElement::crossed(inner))
        })
    }

    /// Builds a Layer2/Layer3 style element from coefficients `F(s_si, t_ti)`.
    fn function_layer_from_fn(
        &self,
        ctx: &Arc<ConvContext>,
        mut f: impl FnMut(usize, usize) -> Result<AlgebraElement>,
    ) -> Result<CrossedElement> {
        let n = self.n();
        CrossedElement::from_fn(ctx, |s| {
            let si = self.group.index_of(s);
            let values = (0..n).map(|ti| f(si, ti)).collect::<Result<Vec<_>>>()?;
            AlgebraElement::function(ctx.coeff().clone(), values)
        })
    }

    pub fn layer2_from_fn(
        &self,
        f: impl FnMut(usize, usize) -> Result<AlgebraElement>,
    ) -> Result<CrossedElement> {
        let ctx = self.layer2.clone();
        self.function_layer_from_fn(&ctx, f)
    }

    pub fn layer3_from_fn(
        &self,
        f: impl FnMut(usize, usize) -> Result<AlgebraElement>,
    ) -> Result<CrossedElement> {
        let ctx = self.layer3.clone();
        self.function_layer_from_fn(&ctx, f)
    }

    /// Coefficient `F(gamma_gi, s_si)` of a Layer0 element.
    pub fn layer0_coeff<'a>(
        &self,
        f: &'a CrossedElement,
        gi: usize,
        si: usize,
    ) -> &'a AlgebraElement {
        f.coeff_at(gi)
            .as_crossed()
            .expect("layer0 coefficient")
            .coeff_at(si)
    }

    /// Coefficient `H(s_si, gamma_gi)` of a Layer1 element.
    pub fn layer1_coeff<'a>(
        &self,
        h: &'a CrossedElement,
        si: usize,
        gi: usize,
    ) -> &'a AlgebraElement {
        h.coeff_at(si)
            .as_crossed()
            .expect("layer1 coefficient")
            .coeff_at(gi)
    }

    /// Coefficient `F(s_si, t_ti)` of a Layer2/Layer3 element.
    pub fn function_layer_coeff<'a>(
        &self,
        f: &'a CrossedElement,
        si: usize,
        ti: usize,
    ) -> &'a AlgebraElement {
        &f.coeff_at(si)
            .as_function()
            .expect("function-layer coefficient")[ti]
    }

    pub fn random_layer0(&self, rng: &mut ChaCha8Rng) -> CrossedElement {
        CrossedElement::random(&self.layer0, rng)
    }

    /// `phi1(F)(s, gamma) = gamma(s) F(gamma, s)`.
    pub fn phi1(&self, f: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(f, &self.layer0)?;
        self.layer1_from_fn(|si, gi| Ok(self.layer0_coeff(f, gi, si).scale(self.pair(gi, si))))
    }

    /// Inverse of `phi1`: `F(gamma, s) = conj(gamma(s)) H(s, gamma)`.
    pub fn phi1_inverse(&self, h: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(h, &self.layer1)?;
        self.layer0_from_fn(|gi, si| {
            Ok(self.layer1_coeff(h, si, gi).scale(self.pair(gi, si).conj()))
        })
    }

    /// `phi2(H)(s, t) = (1/|G|) sum_gamma H(s, gamma) conj(gamma(t))`,
    /// the Gelfand/Fourier transform in the second variable.
    pub fn phi2(&self, h: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(h, &self.layer1)?;
        let n = self.n();
        let scale = Complex64::new(1.0 / n as f64, 0.0);
        self.layer2_from_fn(|si, ti| {
            let mut acc = self.algebra.zero();
            for gi in 0..n {
                let phase = self.pair(gi, ti).conj();
                acc = acc.add(&self.layer1_coeff(h, si, gi).scale(phase))?;
            }
            Ok(acc.scale(scale))
        })
    }

    /// Inverse of `phi2` by Fourier inversion:
    /// `H(s, gamma) = sum_t G(s, t) gamma(t)`.
    pub fn phi2_inverse(&self, g: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(g, &self.layer2)?;
        let n = self.n();
        self.layer1_from_fn(|si, gi| {
            let mut acc = self.algebra.zero();
            for ti in 0..n {
                acc = acc.add(
                    &self
                        .function_layer_coeff(g, si, ti)
                        .scale(self.pair(gi, ti)),
                )?;
            }
            Ok(acc)
        })
    }

    /// `phi3(F)(s, t) = alpha_t^{-1}(F(s, t))`: un-twists the fiber at `t`.
    pub fn phi3(&self, f: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(f, &self.layer2)?;
        let elements = self.group.enumerate();
        self.layer3_from_fn(|si, ti| {
            let minus_t = self.group.neg(&elements[ti]);
            self.action
                .act(&minus_t, self.function_layer_coeff(f, si, ti))
        })
    }

    pub fn phi3_inverse(&self, f: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(f, &self.layer3)?;
        let elements = self.group.enumerate();
        self.layer2_from_fn(|si, ti| {
            self.action
                .act(&elements[ti], self.function_layer_coeff(f, si, ti))
        })
    }

    /// `phi4(F)` acts on `l^p(G, E)` by `h(t) -> sum_s F(s, t) h(s^{-1} t)`;
    /// as a block matrix, `block[t, t'] = represent(F(t - t', t))`.
    pub fn phi4(&self, f: &CrossedElement) -> Result<BlockOperator> {
        self.expect_context(f, &self.layer3)?;
        let n = self.n();
        let k = self.k();
        let elements = self.group.enumerate();
        let mut blocks: Vec<CMatrix> = Vec::with_capacity(n * n);
        for t in &elements {
            let ti = self.group.index_of(t);
            for t_prime in &elements {
                let s = self.group.sub(t, t_prime);
                let si = self.group.index_of(&s);
                blocks.push(self.function_layer_coeff(f, si, ti).represent()?);
            }
        }
        let matrix = CMatrix::from_blocks(n, n, |i, j| blocks[i * n + j].clone());
        BlockOperator::new(self.group.clone(), k, matrix)
    }

    /// Inverse of `phi4`: `F(s, t) = represent^{-1}(block[t, t - s])`.
    pub fn phi4_inverse(&self, b: &BlockOperator) -> Result<CrossedElement> {
        if b.group != self.group || b.block_dim != self.k() {
            return Err(Error::ContextMismatch(
                "block operator has the wrong shape".into(),
            ));
        }
        let elements = self.group.enumerate();
        self.layer3_from_fn(|si, ti| {
            let t = &elements[ti];
            let t_prime = self.group.sub(t, &elements[si]);
            let block = b.block(ti, self.group.index_of(&t_prime));
            unrepresent(&self.algebra, &block)
        })
    }

    /// The composite `phi4 . phi3 . phi2 . phi1`.
    pub fn phi_total(&self, f: &CrossedElement) -> Result<BlockOperator> {
        self.phi4(&self.phi3(&self.phi2(&self.phi1(f)?)?)?)
    }

    /// The composite of the four explicit inverses.
    pub fn phi_total_inverse(&self, b: &BlockOperator) -> Result<CrossedElement> {
        self.phi1_inverse(&self.phi2_inverse(&self.phi3_inverse(&self.phi4_inverse(b)?)?)?)
    }

    /// Double dual action upstairs: `F(gamma, s) -> conj(gamma(t)) F(gamma, s)`.
    pub fn double_dual_act(&self, t: &GroupElement, f: &CrossedElement) -> Result<CrossedElement> {
        self.expect_context(f, &self.layer0)?;
        let ti = self.group.index_of(t);
        self.layer0_from_fn(|gi, si| {
            Ok(self.layer0_coeff(f, gi, si).scale(self.pair(gi, ti).conj()))
        })
    }

    /// Downstairs action `Ad rho (x) alpha`:
    /// `result[t, t'] = represent(alpha_r(represent^{-1}(B[t + r, t' + r])))`.
    pub fn ad_rho_tensor_alpha(
        &self,
        r: &GroupElement,
        b: &BlockOperator,
    ) -> Result<BlockOperator> {
        if b.group != self.group || b.block_dim != self.k() {
            return Err(Error::ContextMismatch(
                "block operator has the wrong shape".into(),
            ));
        }
        let n = self.n();
        let elements = self.group.enumerate();
        let mut blocks: Vec<CMatrix> = Vec::with_capacity(n * n);
        for t in &elements {
            let shifted_t = self.group.index_of(&self.group.add(t, r));
            for t_prime in &elements {
                let shifted_tp = self.group.index_of(&self.group.add(t_prime, r));
                let moved = unrepresent(&self.algebra, &b.block(shifted_t, shifted_tp))?;
                blocks.push(self.action.act(r, &moved)?.represent()?);
            }
        }
        let matrix = CMatrix::from_blocks(n, n, |i, j| blocks[i * n + j].clone());
        BlockOperator::new(self.group.clone(), self.k(), matrix)
    }

    /// Entrywise residual of the equivariance identity
    /// `phi(dd_t(F)) = (Ad rho (x) alpha)_t(phi(F))`.
    pub fn equivariance_residual(&self, t: &GroupElement, f: &CrossedElement) -> Result<f64> {
        let lhs = self.phi_total(&self.double_dual_act(t, f)?)?;
        let rhs = self.ad_rho_tensor_alpha(t, &self.phi_total(f)?)?;
        Ok(lhs.max_abs_diff(&rhs))
    }

    /// Exchange relation between the inner and outer canonical unitaries of
    /// the iterated product: `U_s V_gamma = gamma(s) V_gamma U_s`, checked
    /// entrywise over all pairs.
    pub fn exchange_relation_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for s in self.group.enumerate() {
            let inner_unitary = AlgebraElement::crossed(crossed::embed_group(&s, &self.inner0)?);
            let u = crossed::embed_algebra(&inner_unitary, &self.layer0)?;
            for (gi, gamma) in self.group.enumerate().iter().enumerate() {
                let v = crossed::embed_group(gamma, &self.layer0)?;
                let lhs = crossed::convolve(&u, &v)?;
                let phase = self.pair(gi, self.group.index_of(&s));
                let rhs = crossed::convolve(&v, &u)?.scale(phase);
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
        }
        Ok(worst)
    }

    fn expect_context(&self, f: &CrossedElement, ctx: &Arc<ConvContext>) -> Result<()> {
        if f.context().as_ref() != ctx.as_ref() {
            return Err(Error::ContextMismatch(
                "element is not on the expected layer".into(),
            ));
        }
        Ok(())
    }

    // --- matched-witness norm comparisons -------------------------------

    fn matched_pair(
        &self,
        m_left: &CMatrix,
        m_right: &CMatrix,
        budget: &Budget,
        seed: u64,
        to_right: impl Fn(&[Complex64]) -> Vec<Complex64>,
        to_left: impl Fn(&[Complex64]) -> Vec<Complex64>,
    ) -> Result<NormPair> {
        let p = self.p;
        if p.is_exact() {
            let l = opnorm(m_left, p, budget, seed)?;
            let r = opnorm(m_right, p, budget, seed)?;
            return Ok(NormPair {
                left: l.value,
                right: r.value,
                converged: true,
            });
        }
        let l = opnorm(m_left, p, budget, seed)?;
        let r = opnorm(m_right, p, budget, seed)?;
        let mut left = l.value;
        let mut right = r.value;
        if let Some(w) = &l.witness {
            let cand = to_right(w);
            let n = vec_p_norm(&cand, p.value());
            if n > 0.0 {
                right = right.max(vec_p_norm(&m_right.matvec(&cand), p.value()) / n);
            }
        }
        if let Some(w) = &r.witness {
            let cand = to_left(w);
            let n = vec_p_norm(&cand, p.value());
            if n > 0.0 {
                left = left.max(vec_p_norm(&m_left.matvec(&cand), p.value()) / n);
            }
        }
        Ok(NormPair {
            left,
            right,
            converged: l.converged && r.converged,
        })
    }

    /// Operational norms of `F` and `phi1(F)` under the matched-witness
    /// protocol. The two representation spaces differ by the monomial map
    /// `(gamma, t) -> (t, gamma)` with phase `conj(gamma(t))`, which is
    /// applied to transfer witnesses between the sides.
    pub fn phi1_norms(&self, f: &CrossedElement, budget: &Budget, seed: u64) -> Result<NormPair> {
        let m_left = integrated_matrix(f)?;
        let m_right = integrated_matrix(&self.phi1(f)?)?;
        let (n, k) = (self.n(), self.k());
        let nk = n * k;
        let to_right = |x: &[Complex64]| {
            let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
            for gi in 0..n {
                for ti in 0..n {
                    let phase = self.pair(gi, ti).conj();
                    for e in 0..k {
                        y[ti * nk + gi * k + e] = phase * x[gi * nk + ti * k + e];
                    }
                }
            }
            y
        };
        let to_left = |y: &[Complex64]| {
            let mut x = vec![Complex64::new(0.0, 0.0); y.len()];
            for gi in 0..n {
                for ti in 0..n {
                    let phase = self.pair(gi, ti);
                    for e in 0..k {
                        x[gi * nk + ti * k + e] = phase * y[ti * nk + gi * k + e];
                    }
                }
            }
            x
        };
        self.matched_pair(&m_left, &m_right, budget, seed, to_right, to_left)
    }

    /// Operational norms of `F` on Layer2 and `phi3(F)` on Layer3. Witnesses
    /// transfer through the blockwise spatial implementer of `alpha_{-x}`.
    pub fn phi3_norms(&self, f: &CrossedElement, budget: &Budget, seed: u64) -> Result<NormPair> {
        let m_left = integrated_matrix(f)?;
        let m_right = integrated_matrix(&self.phi3(f)?)?;
        let (n, k) = (self.n(), self.k());
        let nk = n * k;
        let mut implementers = Vec::with_capacity(n);
        for x in self.group.enumerate() {
            let minus_x = self.group.neg(&x);
            implementers.push(self.action.spatial_implementer(&minus_x, &self.algebra)?);
        }
        let apply = |x: &[Complex64], adjoint: bool| {
            let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
            for ti in 0..n {
                for xi in 0..n {
                    let u = &implementers[xi];
                    let chunk: Vec<Complex64> = (0..k).map(|e| x[ti * nk + xi * k + e]).collect();
                    let moved = if adjoint {
                        u.adjoint().matvec(&chunk)
                    } else {
                        u.matvec(&chunk)
                    };
                    for e in 0..k {
                        y[ti * nk + xi * k + e] = moved[e];
                    }
                }
            }
            y
        };
        self.matched_pair(
            &m_left,
            &m_right,
            budget,
            seed,
            |x| apply(x, false),
            |y| apply(y, true),
        )
    }

    /// Operational norm of `F` on Layer3 against the plain operator norm of
    /// `phi4(F)`. The integrated Layer3 representation is a permuted direct
    /// sum of `|G|` copies of `phi4(F)`, so witnesses transfer by slicing the
    /// big space into chunks (and back by placing a block witness on the
    /// fiber at the identity).
    pub fn phi4_norms(&self, f: &CrossedElement, budget: &Budget, seed: u64) -> Result<NormPair> {
        let m_left = integrated_matrix(f)?;
        let b = self.phi4(f)?;
        let m_right = b.matrix().clone();
        let p = self.p;
        if p.is_exact() {
            let l = opnorm(&m_left, p, budget, seed)?;
            let r = opnorm(&m_right, p, budget, seed)?;
            return Ok(NormPair {
                left: l.value,
                right: r.value,
                converged: true,
            });
        }
        let (n, k) = (self.n(), self.k());
        let nk = n * k;
        let l = opnorm(&m_left, p, budget, seed)?;
        let r = opnorm(&m_right, p, budget, seed)?;
        let mut left = l.value;
        let mut right = r.value;
        if let Some(w) = &l.witness {
            // slice the Layer3 witness into the |G| block-space chunks
            let elements = self.group.enumerate();
            for m_idx in 0..n {
                let m_el = &elements[m_idx];
                let mut chunk = vec![Complex64::new(0.0, 0.0); nk];
                for ui in 0..n {
                    let t = self.group.sub(&elements[ui], m_el);
                    let ti = self.group.index_of(&t);
                    for e in 0..k {
                        chunk[ui * k + e] = w[ti * nk + m_idx * k + e];
                    }
                }
                let norm = vec_p_norm(&chunk, p.value());
                if norm > 0.0 {
                    right = right.max(vec_p_norm(&m_right.matvec(&chunk), p.value()) / norm);
                }
            }
        }
        if let Some(w) = &r.witness {
            // place the block witness on the fiber over the identity point
            let mut lifted = vec![Complex64::new(0.0, 0.0); n * nk];
            for ti in 0..n {
                for e in 0..k {
                    lifted[ti * nk + e] = w[ti * k + e];
                }
            }
            let norm = vec_p_norm(&lifted, p.value());
            if norm > 0.0 {
                left = left.max(vec_p_norm(&m_left.matvec(&lifted), p.value()) / norm);
            }
        }
        Ok(NormPair {
            left,
            right,
            converged: l.converged && r.converged,
        })
    }

    /// Full-chain norm pair: the Layer0 operational norm of `F` against the
    /// operator norm of `phi(F)`.
    pub fn chain_norms(&self, f: &CrossedElement, budget: &Budget, seed: u64) -> Result<NormPair> {
        let l = crossed_norm(f, self.p, budget, seed)?;
        let b = self.phi_total(f)?;
        let r = opnorm(b.matrix(), self.p, budget, seed)?;
        Ok(NormPair {
            left: l.value,
            right: r.value,
            converged: l.converged && r.converged,
        })
    }

    /// Exact rank of the realified coefficient map of `phi`; equals
    /// `2 |G|^2 dim(A)` exactly when the composite is a linear bijection onto
    /// the block algebra.
    pub fn phi_total_rank(&self) -> Result<usize> {
        let n = self.n();
        let k = self.k();
        let dim_a = self.algebra.dim();
        let rows = 2 * (n * k) * (n * k);
        let cols = 2 * n * n * dim_a;
        let basis = self.algebra.basis();
        let mut real = DMatrix::<f64>::zeros(rows, cols);
        let mut col = 0usize;
        for gi in 0..n {
            for si in 0..n {
                for b in &basis {
                    let elem = self.layer0_from_fn(|g, s| {
                        if (g, s) == (gi, si) {
                            Ok(b.clone())
                        } else {
                            Ok(self.algebra.zero())
                        }
                    })?;
                    let image = self.phi_total(&elem)?;
                    let m = image.matrix();
                    for (idx, z) in m.entries().iter().enumerate() {
                        // columns for the basis element and for i times it
                        real[(2 * idx, col)] = z.re;
                        real[(2 * idx + 1, col)] = z.im;
                        real[(2 * idx, col + 1)] = -z.im;
                        real[(2 * idx + 1, col + 1)] = z.re;
                    }
                    col += 2;
                }
            }
        }
        debug_assert_eq!(col, cols);
        // rank through the Gram spectrum; the map is well conditioned, so the
        // threshold separates genuine kernel directions by many orders
        let gram = real.transpose() * real;
        let eigs = gram.symmetric_eigen().eigenvalues;
        let emax = eigs.iter().cloned().fold(0.0f64, f64::max);
        if emax == 0.0 {
            return Ok(0);
        }
        let tol = 1e-10 * emax;
        Ok(eigs.iter().filter(|&&e| e > tol).count())
    }

    /// Expected realified rank when `phi` is bijective.
    pub fn expected_rank(&self) -> usize {
        2 * self.n() * self.n() * self.algebra.dim()
    }
}

/// Gelfand/Fourier transform of a compact-dual-layer element:
/// `Gamma(phi)(t) = (1/|G|) sum_gamma phi(gamma) conj(gamma(t))`,
/// returned as a function element on the primal group.
pub fn gelfand(phi: &CrossedElement) -> Result<AlgebraElement> {
    let ctx = phi.context();
    if ctx.layer() != LayerKind::CompactDual {
        return Err(Error::ContextMismatch(
            "gelfand transform needs a compact-dual layer".into(),
        ));
    }
    let group = ctx.index_group();
    let n = group.order();
    let scale = Complex64::new(1.0 / n as f64, 0.0);
    let coeff_alg = ctx.coeff().clone();
    let characters = group.characters();
    let mut values = Vec::with_capacity(n);
    for t in group.enumerate() {
        let mut acc = coeff_alg.zero();
        for (gi, gamma) in characters.iter().enumerate() {
            let phase = group.pair(gamma, &t)?.conj();
            acc = acc.add(&phi.coeff_at(gi).scale(phase))?;
        }
        values.push(acc.scale(scale));
    }
    AlgebraElement::function(CoefficientAlgebra::functions(n, coeff_alg), values)
}

/// Fourier inversion: `phi(gamma) = sum_t Gamma(phi)(t) gamma(t)`.
pub fn gelfand_inverse(values: &AlgebraElement, ctx: &Arc<ConvContext>) -> Result<CrossedElement> {
    if ctx.layer() != LayerKind::CompactDual {
        return Err(Error::ContextMismatch(
            "gelfand inverse targets a compact-dual layer".into(),
        ));
    }
    let group = ctx.index_group();
    let vals = values
        .as_function()
        .ok_or_else(|| Error::Shape("gelfand inverse needs a function element".into()))?;
    if vals.len() != group.order() {
        return Err(Error::Shape(
            "function element is not indexed by the group".into(),
        ));
    }
    CrossedElement::from_fn(ctx, |gamma_elem| {
        let gamma = Character::new(gamma_elem.clone());
        let mut acc = ctx.coeff().zero();
        for (ti, t) in group.enumerate().iter().enumerate() {
            acc = acc.add(&vals[ti].scale(group.pair(&gamma, t)?))?;
        }
        Ok(acc)
    })
}

/// The two sides of the Gelfand contraction at exponent `p`: the operational
/// norm of `phi` (with character-lifted starts, so the estimate dominates the
/// right-hand side by construction) and `sup_t ||represent(Gamma(phi)(t))||`.
pub fn gelfand_contraction_pair(
    phi: &CrossedElement,
    p: PExponent,
    budget: &Budget,
    seed: u64,
) -> Result<(f64, f64)> {
    let ctx = phi.context();
    let group = ctx.index_group();
    let n = group.order();
    let k = ctx.coeff().rep_dim();
    let transformed = gelfand(phi)?;
    let values = transformed
        .as_function()
        .expect("gelfand returns a function element");

    let mut sup = 0.0f64;
    let mut lifts: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let characters = group.characters();
    for (ti, t) in group.enumerate().iter().enumerate() {
        let rep = values[ti].represent()?;
        let est = opnorm(
            &rep,
            p,
            budget,
            crate::sample::derive_seed(seed, &ti.to_string()),
        )?;
        sup = sup.max(est.value);
        let xi = match est.witness {
            Some(w) => w,
            None => {
                let mut e = vec![Complex64::new(0.0, 0.0); k];
                if k > 0 {
                    e[0] = Complex64::new(1.0, 0.0);
                }
                e
            }
        };
        let mut lift = vec![Complex64::new(0.0, 0.0); n * k];
        for (gi, gamma) in characters.iter().enumerate() {
            let phase = group.pair(gamma, t)?;
            for e in 0..k {
                lift[gi * k + e] = phase * xi[e];
            }
        }
        lifts.push(lift);
    }
    let crossed = crossed_norm_with_starts(phi, p, budget, seed, &lifts)?;
    Ok((crossed.value, sup))
}

fn chirp_candidate(group: &FiniteAbelianGroup, c: i64) -> Vec<Complex64> {
    group
        .enumerate()
        .iter()
        .map(|m| {
            let mut frac = 0.0f64;
            for (&r, &nj) in m.residues().iter().zip(group.factors()) {
                frac += c as f64 * (r as f64) * (r as f64) / (2.0 * nj as f64);
            }
            let angle = std::f64::consts::TAU * frac.fract();
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect()
}

/// Worst observed ratio `crossed_norm(phi, p) / sup_t |Gamma(phi)(t)|` over
/// random, structured and ascent-refined samples on the scalar dual layer.
/// Always at least `1 - 1e-9`; equal to one at `p = 2` by Plancherel.
pub fn gelfand_distortion(
    group: &FiniteAbelianGroup,
    p: PExponent,
    samples: usize,
    seed: u64,
    budget: &Budget,
) -> Result<f64> {
    let ctx = ConvContext::new(
        group.dual(),
        LayerKind::CompactDual,
        CoefficientAlgebra::Scalars,
        Action::trivial(group.dual()),
    )?;
    let n = group.order();
    let ratio_of = |coeffs: &[Complex64], salt: u64| -> Result<f64> {
        let phi = CrossedElement::new(
            ctx.clone(),
            coeffs.iter().map(|&z| AlgebraElement::scalar(z)).collect(),
        )?;
        let (num, den) = gelfand_contraction_pair(&phi, p, budget, salt)?;
        if den == 0.0 {
            return Ok(1.0);
        }
        Ok(num / den)
    };

    let mut candidates: Vec<Vec<Complex64>> = Vec::new();
    for c in 1..=3i64 {
        candidates.push(chirp_candidate(group, c));
        candidates.push(chirp_candidate(group, -c));
    }
    candidates.push(vec![Complex64::new(1.0, 0.0); n]);
    let mut rng = crate::sample::rng(seed);
    for _ in 0..samples {
        candidates.push(crate::sample::complex_gaussian_vec(&mut rng, n));
    }

    let mut best_ratio = 1.0f64;
    let mut best: Vec<Complex64> = candidates[0].clone();
    for (i, cand) in candidates.iter().enumerate() {
        let ratio = ratio_of(cand, i as u64)?;
        if ratio > best_ratio {
            best_ratio = ratio;
            best = cand.clone();
        }
    }

    // local refinement around the best candidate
    let mut step = 0.5f64;
    for round in 0..120 {
        let perturbation = crate::sample::complex_gaussian_vec(&mut rng, n);
        let cand: Vec<Complex64> = best
            .iter()
            .zip(&perturbation)
            .map(|(b, d)| b + d * step)
            .collect();
        let ratio = ratio_of(&cand, 10_000 + round as u64)?;
        if ratio > best_ratio {
            best_ratio = ratio;
            best = cand;
        } else {
            step *= 0.97;
        }
    }
    Ok(best_ratio.max(1.0 - 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_chain(group: FiniteAbelianGroup, p: f64) -> ChainInstance {
        let action = Action::trivial(group.clone());
        ChainInstance::new(
            group,
            CoefficientAlgebra::Scalars,
            action,
            PExponent::new(p).unwrap(),
        )
        .unwrap()
    }

    fn m2_chain(group: FiniteAbelianGroup, p: f64) -> ChainInstance {
        let action = Action::monomial_shift(group.clone(), 2).unwrap();
        ChainInstance::new(
            group,
            CoefficientAlgebra::full_matrix(2),
            action,
            PExponent::new(p).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn layer_weights_follow_the_conventions() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        assert!((inst.layer0().weight().value() - 0.5).abs() < 1e-15);
        assert!((inst.layer1().weight().value() - 1.0).abs() < 1e-15);
        assert!((inst.layer2().weight().value() - 1.0).abs() < 1e-15);
        assert!((inst.layer3().weight().value() - 1.0).abs() < 1e-15);
        assert!((inst.inner0().weight().value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi1_sign_example_on_z2() {
        let inst = scalar_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        // F supported at (gamma_1, s = 1) with coefficient 1
        let f = inst
            .layer0_from_fn(|gi, si| {
                Ok(AlgebraElement::scalar(if (gi, si) == (1, 1) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }))
            })
            .unwrap();
        let h = inst.phi1(&f).unwrap();
        // phi1(F)(s = 1, gamma_1) = gamma_1(1) * 1 = -1
        assert!((inst.layer1_coeff(&h, 1, 1).as_scalar().unwrap() - c(-1.0, 0.0)).norm() < 1e-14);
        // round trip
        let back = inst.phi1_inverse(&h).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn phi1_on_trivial_group_is_an_index_transpose() {
        let inst = scalar_chain(FiniteAbelianGroup::trivial(), 1.5);
        let f = inst
            .layer0_from_fn(|_, _| Ok(AlgebraElement::scalar(c(2.0, -1.0))))
            .unwrap();
        let h = inst.phi1(&f).unwrap();
        assert!((inst.layer1_coeff(&h, 0, 0).as_scalar().unwrap() - c(2.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn phi1_is_a_homomorphism() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(3), 2.0);
        let mut r = sample::rng(0);
        let f1 = inst.random_layer0(&mut r);
        let f2 = inst.random_layer0(&mut r);
        let lhs = inst.phi1(&crossed::convolve(&f1, &f2).unwrap()).unwrap();
        let rhs = crossed::convolve(&inst.phi1(&f1).unwrap(), &inst.phi1(&f2).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    // The nested convolution engine, applied on Layer0, must reproduce the
    // explicit iterated double sum
    // `(F1 * F2)(sigma, t) =
    //    (1/|G|) sum_gamma sum_s F1(gamma, s) conj(gamma(t - s))
    //                              alpha_s(F2(sigma - gamma, t - s))`,
    // computed here directly, without the engine.
    #[test]
    fn layer0_convolution_matches_the_iterated_double_sum() {
        let inst = m2_chain(FiniteAbelianGroup::new(vec![2, 2]).unwrap(), 2.0);
        let g = inst.group().clone();
        let n = g.order();
        let alpha = inst.action().clone();
        let mut r = sample::rng(16);
        let f1 = inst.random_layer0(&mut r);
        let f2 = inst.random_layer0(&mut r);
        let machine = crossed::convolve(&f1, &f2).unwrap();
        let elements = g.enumerate();
        let characters = g.characters();
        for (sigma_i, sigma) in elements.iter().enumerate() {
            for (ti, t) in elements.iter().enumerate() {
                let mut acc = inst.algebra().zero();
                for (gi, gamma_el) in elements.iter().enumerate() {
                    let gamma = &characters[gi];
                    for (si, s) in elements.iter().enumerate() {
                        let diff = g.sub(t, s);
                        let phase = g.pair(gamma, &diff).unwrap().conj();
                        let second = inst.layer0_coeff(
                            &f2,
                            g.index_of(&g.sub(sigma, gamma_el)),
                            g.index_of(&diff),
                        );
                        let term = inst
                            .layer0_coeff(&f1, gi, si)
                            .mul(&alpha.act(s, second).unwrap())
                            .unwrap()
                            .scale(phase);
                        acc = acc.add(&term).unwrap();
                    }
                }
                let acc = acc.scale(Complex64::new(1.0 / n as f64, 0.0));
                let got = inst.layer0_coeff(&machine, sigma_i, ti);
                assert!(got.max_abs_diff(&acc) < 1e-12);
            }
        }
    }

    // The nested integrated representation on Layer0 must have the explicit
    // entrywise block form
    // `M[(sigma, t), (sigma', t')] =
    //    (1/|G|) sigma(t - t') rep(alpha_{-t}(F(sigma - sigma', t - t')))`.
    #[test]
    fn layer0_integrated_matrix_has_the_explicit_block_form() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(3), 2.0);
        let g = inst.group().clone();
        let k = inst.algebra().rep_dim();
        let alpha = inst.action().clone();
        let mut r = sample::rng(17);
        let f = inst.random_layer0(&mut r);
        let machine = integrated_matrix(&f).unwrap();
        let n = g.order();
        let elements = g.enumerate();
        let characters = g.characters();
        let scale = Complex64::new(1.0 / n as f64, 0.0);
        for (sigma_i, _) in elements.iter().enumerate() {
            for (sigma_j, _) in elements.iter().enumerate() {
                for (ti, t) in elements.iter().enumerate() {
                    for (tj, t_prime) in elements.iter().enumerate() {
                        let diff_t = g.sub(t, t_prime);
                        let phase = g.pair(&characters[sigma_i], &diff_t).unwrap() * scale;
                        let coeff = inst.layer0_coeff(
                            &f,
                            g.index_of(&g.sub(&elements[sigma_i], &elements[sigma_j])),
                            g.index_of(&diff_t),
                        );
                        let block = alpha
                            .act(&g.neg(t), coeff)
                            .unwrap()
                            .represent()
                            .unwrap()
                            .scale(phase);
                        for a in 0..k {
                            for b in 0..k {
                                let row = (sigma_i * n + ti) * k + a;
                                let col = (sigma_j * n + tj) * k + b;
                                assert!((machine.get(row, col) - block.get(a, b)).norm() < 1e-13);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn iterated_layers_integrate_multiplicatively() {
        // the nested convolution on Layer0/Layer1 must match the product of
        // the nested integrated representations
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let mut r = sample::rng(21);
        for layer in [inst.layer0(), inst.layer1()] {
            let f = CrossedElement::random(layer, &mut r);
            let g = CrossedElement::random(layer, &mut r);
            let lhs = integrated_matrix(&crossed::convolve(&f, &g).unwrap()).unwrap();
            let rhs = integrated_matrix(&f)
                .unwrap()
                .mul(&integrated_matrix(&g).unwrap());
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn phi2_examples_and_inversion() {
        // constant in gamma concentrates at t = 0
        let inst = scalar_chain(FiniteAbelianGroup::cyclic(4), 2.0);
        let h = inst
            .layer1_from_fn(|si, _| {
                Ok(AlgebraElement::scalar(if si == 2 {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }))
            })
            .unwrap();
        let g = inst.phi2(&h).unwrap();
        for ti in 0..4 {
            let v = inst.function_layer_coeff(&g, 2, ti).as_scalar().unwrap();
            let want = if ti == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
            assert!((v - want).norm() < 1e-14);
        }

        // Fourier inversion round trip on random data
        let mut r = sample::rng(1);
        let h = CrossedElement::random(inst.layer1(), &mut r);
        let back = inst.phi2_inverse(&inst.phi2(&h).unwrap()).unwrap();
        assert!(back.max_abs_diff(&h) < 1e-12);
    }

    #[test]
    fn phi2_is_a_homomorphism() {
        let group = FiniteAbelianGroup::new(vec![2, 2]).unwrap();
        let alg = CoefficientAlgebra::functions_over_scalars(2);
        // no applicable nontrivial action on functions over two points for
        // this group; the trivial action still exercises the Fourier side
        let inst = ChainInstance::new(
            group,
            alg,
            Action::trivial(FiniteAbelianGroup::new(vec![2, 2]).unwrap()),
            PExponent::two(),
        )
        .unwrap();
        let mut r = sample::rng(2);
        let h1 = CrossedElement::random(inst.layer1(), &mut r);
        let h2 = CrossedElement::random(inst.layer1(), &mut r);
        let lhs = inst.phi2(&crossed::convolve(&h1, &h2).unwrap()).unwrap();
        let rhs = crossed::convolve(&inst.phi2(&h1).unwrap(), &inst.phi2(&h2).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn phi3_untwists_the_translation_fiber() {
        // A = Functions(Z2), alpha = lt; phi3 applies alpha_{-t} at fiber t
        let group = FiniteAbelianGroup::cyclic(2);
        let alg = CoefficientAlgebra::functions_over_scalars(2);
        let action =
            Action::left_translation(group.clone(), Action::trivial(group.clone())).unwrap();
        let inst =
            ChainInstance::new(group.clone(), alg.clone(), action, PExponent::two()).unwrap();
        let mut r = sample::rng(3);
        let f = CrossedElement::random(inst.layer2(), &mut r);
        let g = inst.phi3(&f).unwrap();
        for si in 0..2 {
            // at t = 0 nothing moves
            assert!(
                inst.function_layer_coeff(&g, si, 0)
                    .max_abs_diff(inst.function_layer_coeff(&f, si, 0))
                    < 1e-15
            );
            // at t = 1 the two points of the inner function swap
            let orig = inst.function_layer_coeff(&f, si, 1).as_function().unwrap();
            let moved = inst.function_layer_coeff(&g, si, 1).as_function().unwrap();
            assert!(moved[0].max_abs_diff(&orig[1]) < 1e-15);
            assert!(moved[1].max_abs_diff(&orig[0]) < 1e-15);
        }
        // with a trivial action phi3 is the identity
        let trivial_inst = scalar_chain(FiniteAbelianGroup::cyclic(3), 1.0);
        let f = CrossedElement::random(trivial_inst.layer2(), &mut r);
        assert!(trivial_inst.phi3(&f).unwrap().max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn phi3_preserves_exact_norms() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 1.0);
        let mut r = sample::rng(4);
        let f = CrossedElement::random(inst.layer2(), &mut r);
        let pair = inst.phi3_norms(&f, &Budget::default(), 7).unwrap();
        assert!(pair.relative_gap() < 1e-9, "gap {}", pair.relative_gap());
        let inst2 = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let pair = inst2
            .phi3_norms(&f2_reshape(&inst2, &f), &Budget::default(), 7)
            .unwrap();
        assert!(pair.relative_gap() < 1e-9);
    }

    // rebuild an element on another instance's layer2 (same shape)
    fn f2_reshape(inst: &ChainInstance, f: &CrossedElement) -> CrossedElement {
        inst.layer2_from_fn(|si, ti| Ok(inst_coeff(f, si, ti)))
            .unwrap()
    }

    fn inst_coeff(f: &CrossedElement, si: usize, ti: usize) -> AlgebraElement {
        f.coeff_at(si).as_function().unwrap()[ti].clone()
    }

    #[test]
    fn phi4_diagonal_and_shift_examples() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let mut r = sample::rng(5);
        let a = inst.algebra().random_element(&mut r);

        // F(s, t) = a [s = 0] maps to diag(a, a)
        let f = inst
            .layer3_from_fn(|si, _| {
                Ok(if si == 0 {
                    a.clone()
                } else {
                    inst.algebra().zero()
                })
            })
            .unwrap();
        let b = inst.phi4(&f).unwrap();
        let rep = a.represent().unwrap();
        assert!(b.block(0, 0).max_abs_diff(&rep) < 1e-14);
        assert!(b.block(1, 1).max_abs_diff(&rep) < 1e-14);
        assert!(b.block(0, 1).max_abs() < 1e-15);

        // F(s, t) = [s = 1] 1_A maps to the block shift
        let f = inst
            .layer3_from_fn(|si, _| {
                Ok(if si == 1 {
                    inst.algebra().unit()
                } else {
                    inst.algebra().zero()
                })
            })
            .unwrap();
        let b = inst.phi4(&f).unwrap();
        let id = CMatrix::identity(2);
        assert!(b.block(0, 1).max_abs_diff(&id) < 1e-14);
        assert!(b.block(1, 0).max_abs_diff(&id) < 1e-14);
        assert!(b.block(0, 0).max_abs() < 1e-15);
    }

    #[test]
    fn phi4_is_multiplicative() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(3), 2.0);
        let mut r = sample::rng(6);
        let f = CrossedElement::random(inst.layer3(), &mut r);
        let g = CrossedElement::random(inst.layer3(), &mut r);
        let lhs = inst.phi4(&crossed::convolve(&f, &g).unwrap()).unwrap();
        let rhs = inst.phi4(&f).unwrap().mul(&inst.phi4(&g).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn phi_total_maps_unit_to_identity() {
        for inst in [
            scalar_chain(FiniteAbelianGroup::cyclic(3), 2.0),
            m2_chain(FiniteAbelianGroup::new(vec![2, 2]).unwrap(), 1.5),
        ] {
            let unit = CrossedElement::unit(inst.layer0());
            let b = inst.phi_total(&unit).unwrap();
            let id = BlockOperator::identity(inst.group().clone(), inst.algebra().rep_dim());
            assert!(b.max_abs_diff(&id) < 1e-12);
        }
    }

    #[test]
    fn phi_total_roundtrip_on_random_elements() {
        let inst = m2_chain(FiniteAbelianGroup::new(vec![2, 2]).unwrap(), 2.0);
        let mut r = sample::rng(7);
        let f = inst.random_layer0(&mut r);
        let b = inst.phi_total(&f).unwrap();
        let back = inst.phi_total_inverse(&b).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-11);
    }

    #[test]
    fn chain_is_isometric_at_p_two() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(4), 2.0);
        let mut r = sample::rng(8);
        let f = inst.random_layer0(&mut r);
        let pair = inst.chain_norms(&f, &Budget::default(), 9).unwrap();
        assert!(
            (pair.left - pair.right).abs() <= 1e-8 * pair.left.max(1.0),
            "{} vs {}",
            pair.left,
            pair.right
        );
    }

    #[test]
    fn double_dual_action_examples() {
        let inst = scalar_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let mut r = sample::rng(9);
        let f = inst.random_layer0(&mut r);
        // t = 0 acts as the identity
        let same = inst.double_dual_act(&inst.group().identity(), &f).unwrap();
        assert!(same.max_abs_diff(&f) < 1e-15);
        // t = 1 negates the coefficient at the sign character
        let moved = inst.double_dual_act(&inst.group().element(1), &f).unwrap();
        for si in 0..2 {
            let orig = inst.layer0_coeff(&f, 1, si).as_scalar().unwrap();
            let new = inst.layer0_coeff(&moved, 1, si).as_scalar().unwrap();
            assert!((new + orig).norm() < 1e-14);
            let keep = inst.layer0_coeff(&moved, 0, si).as_scalar().unwrap();
            assert!((keep - inst.layer0_coeff(&f, 0, si).as_scalar().unwrap()).norm() < 1e-14);
        }
        // action axiom
        let g = inst.group().clone();
        let a = inst.double_dual_act(&g.element(1), &moved).unwrap();
        assert!(a.max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn double_dual_action_is_isometric_and_composes() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(4), 2.0);
        let mut r = sample::rng(14);
        let f = inst.random_layer0(&mut r);
        let g = inst.group().clone();
        for t in g.enumerate() {
            let moved = inst.double_dual_act(&t, &f).unwrap();
            for p in [PExponent::one(), PExponent::two()] {
                let before = crossed_norm(&f, p, &Budget::default(), 3).unwrap().value;
                let after = crossed_norm(&moved, p, &Budget::default(), 3)
                    .unwrap()
                    .value;
                assert!((before - after).abs() <= 1e-10 * before.max(1.0));
            }
            for s in g.enumerate() {
                let lhs = inst
                    .double_dual_act(&s, &inst.double_dual_act(&t, &f).unwrap())
                    .unwrap();
                let rhs = inst.double_dual_act(&g.add(&s, &t), &f).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-13);
            }
        }
    }

    #[test]
    fn ad_rho_satisfies_the_action_axioms_and_is_isometric() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(4), 2.0);
        let mut r = sample::rng(15);
        let b = inst.phi_total(&inst.random_layer0(&mut r)).unwrap();
        let g = inst.group().clone();
        for s in g.enumerate() {
            for t in g.enumerate() {
                let lhs = inst
                    .ad_rho_tensor_alpha(&s, &inst.ad_rho_tensor_alpha(&t, &b).unwrap())
                    .unwrap();
                let rhs = inst.ad_rho_tensor_alpha(&g.add(&s, &t), &b).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
            let moved = inst.ad_rho_tensor_alpha(&s, &b).unwrap();
            for p in [PExponent::one(), PExponent::two()] {
                let before = opnorm(b.matrix(), p, &Budget::default(), 4).unwrap().value;
                let after = opnorm(moved.matrix(), p, &Budget::default(), 4)
                    .unwrap()
                    .value;
                assert!((before - after).abs() <= 1e-10 * before.max(1.0));
            }
        }
    }

    #[test]
    fn ad_rho_examples() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let mut r = sample::rng(10);
        let f = inst.random_layer0(&mut r);
        let b = inst.phi_total(&f).unwrap();
        // r = 0 is the identity
        let same = inst
            .ad_rho_tensor_alpha(&inst.group().identity(), &b)
            .unwrap();
        assert!(same.max_abs_diff(&b) < 1e-12);

        // with a trivial coefficient action it is a pure block rotation
        let triv = scalar_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let ft = triv.random_layer0(&mut r);
        let bt = triv.phi_total(&ft).unwrap();
        let rot = triv
            .ad_rho_tensor_alpha(&triv.group().element(1), &bt)
            .unwrap();
        for t in 0..2 {
            for tp in 0..2 {
                let expected = bt.block(1 - t, 1 - tp);
                assert!(rot.block(t, tp).max_abs_diff(&expected) < 1e-13);
            }
        }
    }

    #[test]
    fn equivariance_residuals_are_tiny() {
        let inst = scalar_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        let mut r = sample::rng(11);
        let f = inst.random_layer0(&mut r);
        assert_eq!(
            inst.equivariance_residual(&inst.group().identity(), &f)
                .unwrap(),
            0.0
        );
        for t in inst.group().enumerate() {
            assert!(inst.equivariance_residual(&t, &f).unwrap() < 1e-12);
        }

        let inst = m2_chain(FiniteAbelianGroup::cyclic(4), 2.0);
        for seed in 0..10u64 {
            let mut r = sample::rng(seed);
            let f = inst.random_layer0(&mut r);
            for t in inst.group().enumerate() {
                let res = inst.equivariance_residual(&t, &f).unwrap();
                assert!(res < 1e-10, "seed {seed}, residual {res}");
            }
        }
    }

    #[test]
    fn exchange_relation_holds() {
        for factors in [vec![2], vec![3], vec![2, 2], vec![5], vec![6]] {
            let group = FiniteAbelianGroup::new(factors).unwrap();
            let inst = scalar_chain(group, 2.0);
            assert!(inst.exchange_relation_residual().unwrap() < 1e-12);
        }
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        assert!(inst.exchange_relation_residual().unwrap() < 1e-12);
    }

    #[test]
    fn rank_certifies_bijectivity() {
        let inst = m2_chain(FiniteAbelianGroup::cyclic(2), 2.0);
        assert_eq!(inst.phi_total_rank().unwrap(), inst.expected_rank());
        let inst = scalar_chain(FiniteAbelianGroup::new(vec![2, 2]).unwrap(), 1.0);
        assert_eq!(inst.phi_total_rank().unwrap(), inst.expected_rank());
    }

    #[test]
    fn gelfand_examples() {
        let group = FiniteAbelianGroup::cyclic(3);
        let ctx = ConvContext::new(
            group.dual(),
            LayerKind::CompactDual,
            CoefficientAlgebra::Scalars,
            Action::trivial(group.dual()),
        )
        .unwrap();

        // phi == 1_A gives the indicator of the identity
        let ones = CrossedElement::new(
            ctx.clone(),
            (0..3)
                .map(|_| AlgebraElement::scalar(c(1.0, 0.0)))
                .collect(),
        )
        .unwrap();
        let g = gelfand(&ones).unwrap();
        let vals = g.as_function().unwrap();
        assert!((vals[0].as_scalar().unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        assert!(vals[1].as_scalar().unwrap().norm() < 1e-14);
        assert!(vals[2].as_scalar().unwrap().norm() < 1e-14);

        // a mass of |G| at a single character spreads to conj(gamma(t))
        for gamma_elem in group.enumerate() {
            let mass =
                CrossedElement::delta(&ctx, &gamma_elem, AlgebraElement::scalar(c(3.0, 0.0)));
            let g = gelfand(&mass).unwrap();
            let gamma = Character::new(gamma_elem.clone());
            for (ti, t) in group.enumerate().iter().enumerate() {
                let expected = group.pair(&gamma, t).unwrap().conj();
                let got = g.as_function().unwrap()[ti].as_scalar().unwrap();
                assert!((got - expected).norm() < 1e-14);
            }
        }

        // multiplicative: convolution upstairs, pointwise product downstairs
        let mut r = sample::rng(12);
        let a = CrossedElement::random(&ctx, &mut r);
        let b = CrossedElement::random(&ctx, &mut r);
        let lhs = gelfand(&crossed::convolve(&a, &b).unwrap()).unwrap();
        let rhs = gelfand(&a).unwrap().mul(&gelfand(&b).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);

        // inversion
        let back = gelfand_inverse(&gelfand(&a).unwrap(), &ctx).unwrap();
        assert!(back.max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn gelfand_witness_on_z2_at_p_one() {
        // phi = (1, i): crossed norm 1, sup of the transform sqrt(2)/2
        let group = FiniteAbelianGroup::cyclic(2);
        let ctx = ConvContext::new(
            group.dual(),
            LayerKind::CompactDual,
            CoefficientAlgebra::Scalars,
            Action::trivial(group.dual()),
        )
        .unwrap();
        let phi = CrossedElement::new(
            ctx,
            vec![
                AlgebraElement::scalar(c(1.0, 0.0)),
                AlgebraElement::scalar(c(0.0, 1.0)),
            ],
        )
        .unwrap();
        let (num, den) =
            gelfand_contraction_pair(&phi, PExponent::one(), &Budget::default(), 0).unwrap();
        assert!((num - 1.0).abs() < 1e-14);
        assert!((den - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gelfand_distortion_metrics() {
        let b = Budget::default();
        // Plancherel at p = 2
        for group in [FiniteAbelianGroup::cyclic(2), FiniteAbelianGroup::cyclic(4)] {
            let d = gelfand_distortion(&group, PExponent::two(), 10, 3, &b).unwrap();
            assert!((d - 1.0).abs() < 1e-6, "got {d}");
        }
        // the chirp witness reaches sqrt(2) on Z2 at p = 1
        let d = gelfand_distortion(&FiniteAbelianGroup::cyclic(2), PExponent::one(), 10, 3, &b)
            .unwrap();
        assert!(d >= 1.41, "got {d}");
    }
}
