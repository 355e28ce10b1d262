//! Run configuration: spec-string parsing for groups, algebras and actions,
//! suite selection, and the tolerance table every check reads from.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use takai_core::algebra::{Action, CoefficientAlgebra};
use takai_core::group::FiniteAbelianGroup;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid spec: {0}")]
    Spec(String),
}

/// Verification suites, in canonical execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Axioms,
    Norms,
    PhiHomomorphism,
    PhiIsometry,
    Equivariance,
    Gelfand,
    TakaiRoundtrip,
    RepIndependence,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Axioms,
        Suite::Norms,
        Suite::PhiHomomorphism,
        Suite::PhiIsometry,
        Suite::Equivariance,
        Suite::Gelfand,
        Suite::TakaiRoundtrip,
        Suite::RepIndependence,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::Axioms => "axioms",
            Suite::Norms => "norms",
            Suite::PhiHomomorphism => "phi-homomorphism",
            Suite::PhiIsometry => "phi-isometry",
            Suite::Equivariance => "equivariance",
            Suite::Gelfand => "gelfand",
            Suite::TakaiRoundtrip => "takai-roundtrip",
            Suite::RepIndependence => "rep-independence",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Suite {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "axioms" => Ok(Suite::Axioms),
            "norms" => Ok(Suite::Norms),
            "phi-homomorphism" => Ok(Suite::PhiHomomorphism),
            "phi-isometry" => Ok(Suite::PhiIsometry),
            "equivariance" => Ok(Suite::Equivariance),
            "gelfand" => Ok(Suite::Gelfand),
            "takai-roundtrip" => Ok(Suite::TakaiRoundtrip),
            "rep-independence" => Ok(Suite::RepIndependence),
            other => Err(ConfigError::Spec(format!("unknown suite name: {other}"))),
        }
    }
}

/// Tolerance table with the defaults every check is pinned to.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    t.insert("orthogonality".into(), 1e-12);
    t.insert("algebraic".into(), 1e-11);
    t.insert("exchange".into(), 1e-12);
    t.insert("norm-exact".into(), 1e-9);
    t.insert("norm-estimated".into(), 1e-2);
    t.insert("chain-p2".into(), 1e-8);
    t.insert("equivariance".into(), 1e-10);
    t.insert("recovery".into(), 1e-12);
    t.insert("gelfand-contraction".into(), 1e-9);
    t.insert("gelfand-plancherel".into(), 1e-6);
    t.insert("gelfand-z2-p1".into(), 1.41);
    t.insert("rep-exact".into(), 1e-9);
    t.insert("rep-estimated".into(), 1e-3);
    t.insert("oracle-exact".into(), 1e-6);
    t.insert("oracle-estimated".into(), 1e-3);
    t.insert("monomial-unit".into(), 1e-10);
    t
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub groups: Vec<String>,
    pub algebras: Vec<String>,
    pub actions: Vec<String>,
    pub exponents: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub suites: Vec<Suite>,
    /// Worker-thread cap; an execution detail, so it is not part of the
    /// report's config echo.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            groups: vec!["Z2".into(), "Z3".into(), "Z4".into(), "Z2xZ2".into()],
            algebras: vec!["scalar".into(), "cx:2".into(), "mn:2".into()],
            actions: vec!["trivial".into(), "monomial:shift".into()],
            exponents: vec![1.0, 1.5, 2.0, 2.5],
            trials: 20,
            seed: 0,
            tolerances: BTreeMap::new(),
            suites: Suite::ALL.to_vec(),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn tolerance(&self, key: &str) -> f64 {
        if let Some(v) = self.tolerances.get(key) {
            return *v;
        }
        *default_tolerances()
            .get(key)
            .unwrap_or_else(|| panic!("unknown tolerance key {key}"))
    }

    /// Merged tolerance table (defaults overlaid with overrides), recorded in
    /// the report meta.
    pub fn resolved_tolerances(&self) -> BTreeMap<String, f64> {
        let mut t = default_tolerances();
        for (k, v) in &self.tolerances {
            t.insert(k.clone(), *v);
        }
        t
    }

    pub fn validate(&self) -> Result<ResolvedGrid, ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::Spec("trials must be at least 1".into()));
        }
        for p in &self.exponents {
            if !p.is_finite() || *p < 1.0 {
                return Err(ConfigError::Spec(format!("exponent must be >= 1, got {p}")));
            }
        }
        for key in self.tolerances.keys() {
            if !default_tolerances().contains_key(key) {
                return Err(ConfigError::Spec(format!("unknown tolerance key: {key}")));
            }
        }
        let groups = self
            .groups
            .iter()
            .map(|s| parse_group(s))
            .collect::<Result<Vec<_>, _>>()?;
        let algebras = self
            .algebras
            .iter()
            .map(|s| parse_algebra(s).map(|a| (s.clone(), a)))
            .collect::<Result<Vec<_>, _>>()?;
        let actions = self
            .actions
            .iter()
            .map(|s| parse_action(s).map(|a| (s.clone(), a)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ResolvedGrid {
            groups,
            algebras,
            actions,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ResolvedGrid {
    pub groups: Vec<FiniteAbelianGroup>,
    pub algebras: Vec<(String, AlgebraSpec)>,
    pub actions: Vec<(String, ActionSpec)>,
}

/// `scalar`, `cx:<N>` (functions on N points over scalars) or `mn:<N>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlgebraSpec {
    Scalar,
    Functions(usize),
    FullMatrix(usize),
}

impl AlgebraSpec {
    pub fn build(&self) -> CoefficientAlgebra {
        match self {
            AlgebraSpec::Scalar => CoefficientAlgebra::Scalars,
            AlgebraSpec::Functions(n) => CoefficientAlgebra::functions_over_scalars(*n),
            AlgebraSpec::FullMatrix(n) => CoefficientAlgebra::full_matrix(*n),
        }
    }
}

/// `trivial`, `lt`, `rt`, `monomial:shift`, or `monomial:<perm>` with a
/// dash-separated image list such as `monomial:1-0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionSpec {
    Trivial,
    LeftTranslation,
    RightTranslation,
    MonomialShift,
    MonomialPermutation(Vec<usize>),
}

/// Group spec grammar: `Z<n>` factors joined by `x`, case-insensitive.
pub fn parse_group(spec: &str) -> Result<FiniteAbelianGroup, ConfigError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(ConfigError::Spec("empty group spec".into()));
    }
    let mut factors = Vec::new();
    for part in spec.split(['x', 'X']) {
        let part = part.trim();
        let digits = part
            .strip_prefix('Z')
            .or_else(|| part.strip_prefix('z'))
            .ok_or_else(|| ConfigError::Spec(format!("bad group factor: {part:?}")))?;
        let n: u32 = digits
            .parse()
            .map_err(|_| ConfigError::Spec(format!("bad cyclic order: {part:?}")))?;
        if n == 0 {
            return Err(ConfigError::Spec("cyclic order must be positive".into()));
        }
        factors.push(n);
    }
    FiniteAbelianGroup::new(factors).map_err(|e| ConfigError::Spec(e.to_string()))
}

pub fn parse_algebra(spec: &str) -> Result<AlgebraSpec, ConfigError> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("scalar") {
        return Ok(AlgebraSpec::Scalar);
    }
    if let Some(rest) = spec.strip_prefix("cx:") {
        let n: usize = rest
            .parse()
            .map_err(|_| ConfigError::Spec(format!("bad point count in {spec:?}")))?;
        if n == 0 {
            return Err(ConfigError::Spec("cx point count must be positive".into()));
        }
        return Ok(AlgebraSpec::Functions(n));
    }
    if let Some(rest) = spec.strip_prefix("mn:") {
        let n: usize = rest
            .parse()
            .map_err(|_| ConfigError::Spec(format!("bad matrix size in {spec:?}")))?;
        if n == 0 {
            return Err(ConfigError::Spec("matrix size must be positive".into()));
        }
        return Ok(AlgebraSpec::FullMatrix(n));
    }
    Err(ConfigError::Spec(format!("unknown algebra spec: {spec:?}")))
}

pub fn parse_action(spec: &str) -> Result<ActionSpec, ConfigError> {
    match spec.trim() {
        "trivial" => Ok(ActionSpec::Trivial),
        "lt" => Ok(ActionSpec::LeftTranslation),
        "rt" => Ok(ActionSpec::RightTranslation),
        "monomial:shift" => Ok(ActionSpec::MonomialShift),
        other => {
            if let Some(rest) = other.strip_prefix("monomial:") {
                let perm = rest
                    .split('-')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| ConfigError::Spec(format!("bad permutation in {other:?}")))?;
                let n = perm.len();
                let mut seen = vec![false; n];
                for &image in &perm {
                    if image >= n || seen[image] {
                        return Err(ConfigError::Spec(format!(
                            "{other:?} is not a permutation of 0..{n}"
                        )));
                    }
                    seen[image] = true;
                }
                return Ok(ActionSpec::MonomialPermutation(perm));
            }
            Err(ConfigError::Spec(format!("unknown action spec: {other:?}")))
        }
    }
}

/// Resolves an action spec against a `(group, algebra)` pair. `None` means
/// the combination is not applicable and the grid skips it.
pub fn resolve_action(
    spec: &ActionSpec,
    group: &FiniteAbelianGroup,
    algebra: &CoefficientAlgebra,
) -> Option<Action> {
    match (spec, algebra) {
        (ActionSpec::Trivial, _) => Some(Action::trivial(group.clone())),
        (ActionSpec::LeftTranslation, CoefficientAlgebra::Functions { points, .. })
            if *points == group.order() =>
        {
            Action::left_translation(group.clone(), Action::trivial(group.clone())).ok()
        }
        (ActionSpec::RightTranslation, CoefficientAlgebra::Functions { points, .. })
            if *points == group.order() =>
        {
            Action::right_translation(group.clone(), Action::trivial(group.clone())).ok()
        }
        (ActionSpec::MonomialShift, CoefficientAlgebra::FullMatrix { n })
            if Action::shift_applicable(group, *n) =>
        {
            Action::monomial_shift(group.clone(), *n).ok()
        }
        (ActionSpec::MonomialPermutation(perm), CoefficientAlgebra::FullMatrix { n })
            if perm.len() == *n && Action::permutation_applicable(group, perm) =>
        {
            Action::monomial_permutation(group.clone(), perm).ok()
        }
        _ => None,
    }
}
