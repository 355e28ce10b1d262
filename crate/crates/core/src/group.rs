//! Finite Abelian groups as products of cyclic groups, together with their
//! dual groups, the evaluation pairing and Haar-measure conventions.
//!
//! A group is written additively as `Z_{n_1} x ... x Z_{n_k}`; elements and
//! characters are both carried by residue tuples, so the dual group is the
//! same object under the pairing
//! `gamma_m(s) = exp(2*pi*i * sum_j m_j s_j / n_j)`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::fmt;

/// A finite Abelian group presented as a product of cyclic factors.
///
/// `Z2xZ3` and `Z6` are distinct presentations with isomorphic behaviour;
/// no invariant-factor canonicalization is performed. The trivial group is
/// the empty factor list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    factors: Vec<u32>,
}

/// An element of a [`FiniteAbelianGroup`]: one residue per cyclic factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    residues: Vec<u32>,
}

/// A character of a [`FiniteAbelianGroup`], indexed by a residue tuple of the
/// same shape as the group's elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Character {
    index: GroupElement,
}

/// Haar-measure weight attached to an index set: `1` for counting measure on
/// a discrete group, `1/|G|` for the normalized measure on a compact dual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HaarWeight(f64);

impl HaarWeight {
    pub fn counting() -> Self {
        HaarWeight(1.0)
    }

    /// Normalized measure with total mass one on a set of `order` points.
    pub fn normalized(order: usize) -> Self {
        HaarWeight(1.0 / order as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Mass of a single point scaled over `order` points.
    pub fn total_mass(self, order: usize) -> f64 {
        self.0 * order as f64
    }
}

impl FiniteAbelianGroup {
    /// Builds a group from cyclic orders. Every factor must be positive.
    pub fn new(factors: Vec<u32>) -> Result<Self> {
        if factors.contains(&0) {
            return Err(Error::Domain(
                "cyclic factor orders must be positive".into(),
            ));
        }
        if factors.iter().map(|&n| n as u64).product::<u64>() > (1u64 << 24) {
            return Err(Error::Size("group order too large".into()));
        }
        Ok(FiniteAbelianGroup { factors })
    }

    pub fn cyclic(n: u32) -> Self {
        FiniteAbelianGroup::new(vec![n]).expect("positive order")
    }

    pub fn trivial() -> Self {
        FiniteAbelianGroup {
            factors: Vec::new(),
        }
    }

    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.iter().map(|&n| n as usize).product()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            residues: vec![0; self.factors.len()],
        }
    }

    /// The dual group, carried by the same residue tuples.
    pub fn dual(&self) -> FiniteAbelianGroup {
        self.clone()
    }

    fn check_member(&self, e: &GroupElement) -> Result<()> {
        if e.residues.len() != self.factors.len()
            || e.residues.iter().zip(&self.factors).any(|(&r, &n)| r >= n)
        {
            return Err(Error::Shape(format!(
                "element {:?} does not belong to {}",
                e.residues, self
            )));
        }
        Ok(())
    }

    /// All elements in lexicographic order on residue tuples, identity first.
    pub fn enumerate(&self) -> Vec<GroupElement> {
        (0..self.order()).map(|i| self.element(i)).collect()
    }

    /// All characters in the same order as [`enumerate`](Self::enumerate).
    pub fn characters(&self) -> Vec<Character> {
        self.enumerate().into_iter().map(Character::new).collect()
    }

    /// Lexicographic rank of an element; the inverse of [`element`](Self::element).
    pub fn index_of(&self, e: &GroupElement) -> usize {
        debug_assert!(self.check_member(e).is_ok());
        let mut idx = 0usize;
        for (&r, &n) in e.residues.iter().zip(&self.factors) {
            idx = idx * n as usize + r as usize;
        }
        idx
    }

    /// Element with the given lexicographic rank.
    pub fn element(&self, mut index: usize) -> GroupElement {
        assert!(index < self.order(), "element index out of range");
        let mut residues = vec![0u32; self.factors.len()];
        for j in (0..self.factors.len()).rev() {
            let n = self.factors[j] as usize;
            residues[j] = (index % n) as u32;
            index /= n;
        }
        GroupElement { residues }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        debug_assert!(self.check_member(a).is_ok() && self.check_member(b).is_ok());
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(&self.factors)
            .map(|((&x, &y), &n)| (x + y) % n)
            .collect();
        GroupElement { residues }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        debug_assert!(self.check_member(a).is_ok());
        let residues = a
            .residues
            .iter()
            .zip(&self.factors)
            .map(|(&x, &n)| (n - x) % n)
            .collect();
        GroupElement { residues }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    /// Evaluation pairing `gamma(s)`, a unit-modulus complex number computed
    /// from the angle so repeated multiplication cannot drift.
    pub fn pair(&self, character: &Character, element: &GroupElement) -> Result<Complex64> {
        self.check_member(&character.index)?;
        self.check_member(element)?;
        let mut frac = 0.0f64;
        for ((&m, &s), &n) in character
            .index
            .residues
            .iter()
            .zip(&element.residues)
            .zip(&self.factors)
        {
            frac += ((m as u64 * s as u64) % n as u64) as f64 / n as f64;
        }
        let angle = TAU * frac.fract();
        Ok(Complex64::new(angle.cos(), angle.sin()))
    }

    /// Worst-case deviation of the character table from the orthogonality
    /// relations: `max_{s,t} | (1/|G|) sum_gamma gamma(s) conj(gamma(t)) - [s=t] |`.
    pub fn character_orthogonality_defect(&self) -> f64 {
        let elements = self.enumerate();
        let characters = self.characters();
        let scale = 1.0 / self.order() as f64;
        let mut worst = 0.0f64;
        for (i, s) in elements.iter().enumerate() {
            for (j, t) in elements.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for gamma in &characters {
                    let a = self.pair(gamma, s).expect("member");
                    let b = self.pair(gamma, t).expect("member");
                    acc += a * b.conj();
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc * scale - expected).norm());
            }
        }
        worst
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "Z1");
        }
        let parts: Vec<String> = self.factors.iter().map(|n| format!("Z{n}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl GroupElement {
    pub fn new(residues: Vec<u32>) -> Self {
        GroupElement { residues }
    }

    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn is_identity(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }
}

impl Character {
    pub fn new(index: GroupElement) -> Self {
        Character { index }
    }

    pub fn index(&self) -> &GroupElement {
        &self.index
    }

    pub fn is_trivial(&self) -> bool {
        self.index.is_identity()
    }
}
