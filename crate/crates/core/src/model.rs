//! Shared data types: the data matrix, the five optimization variables,
//! regularization weights, class labels, and problem validation.

use std::fmt;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NmfError, Result};

/// Dense non-negative `n x m` observation matrix. Rows are spatial
/// positions, columns are channels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(Array2<f64>);

impl DataMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(NmfError::Invalid("data matrix must be at least 1x1".into()));
        }
        if let Some(((i, j), v)) = entries.indexed_iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(NmfError::Invalid(format!("negative entry at ({i}, {j}): {v}")));
        }
        Ok(Self(entries))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// The optimization variables: factors `K` (n x p) and `X` (p x m), the
/// orthogonality auxiliaries `V` (n x p) and `W` (p x m), and the
/// regression weights `beta` (length p).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub k: Array2<f64>,
    pub x: Array2<f64>,
    pub v: Array2<f64>,
    pub w: Array2<f64>,
    pub beta: Array1<f64>,
}

impl FactorState {
    pub fn rank(&self) -> usize {
        self.k.ncols()
    }

    /// Smallest entry over all five factors.
    pub fn min_entry(&self) -> f64 {
        [&self.k, &self.x, &self.v, &self.w]
            .iter()
            .flat_map(|m| m.iter())
            .chain(self.beta.iter())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        [&self.k, &self.x, &self.v, &self.w]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
            && self.beta.iter().all(|v| v.is_finite())
    }
}

/// Draws every factor uniformly from `(1e-3 * scale, scale]`, deterministic in
/// `seed`. Factors are drawn in the order K, X, V, W, beta.
pub fn init_factors(n: usize, m: usize, p: usize, seed: u64, scale: f64) -> Result<FactorState> {
    if n == 0 || m == 0 || p == 0 {
        return Err(NmfError::Invalid(format!(
            "dimensions must be positive, got n={n}, m={m}, p={p}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(NmfError::Invalid(format!("init scale must be positive, got {scale}")));
    }
    let lo = 1e-3 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(lo..=scale));
    let k = draw(n, p);
    let x = draw(p, m);
    let v = draw(n, p);
    let w = draw(p, m);
    let beta = draw(p, 1).into_shape_with_order(p).expect("p x 1 reshapes to p");
    Ok(FactorState { k, x, v, w, beta })
}

/// Regularization weights and numerical constants.
///
/// Weight-to-term mapping: `lambda` l1 on X, `mu` l2 on K, `nu` l2 on X,
/// `omega` l1 on K, `tau` TV on K, `sigma_k1`/`sigma_k2` the split K
/// orthogonality pair, `sigma_x1`/`sigma_x2` the X pair, `rho` the
/// label regression.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub omega: f64,
    pub tau: f64,
    pub sigma_k1: f64,
    pub sigma_k2: f64,
    pub sigma_x1: f64,
    pub sigma_x2: f64,
    pub rho: f64,
    pub eps_tv: f64,
    /// Floor applied to every denominator of the update rules.
    pub eps_div: f64,
    /// Per factor-channel TV weights; `None` means all ones.
    pub psi: Option<Array1<f64>>,
    /// Selects the discrepancy: 1 for Kullback-Leibler, 2 for Frobenius.
    pub beta_divergence_index: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            mu: 0.0,
            nu: 0.0,
            omega: 0.0,
            tau: 0.0,
            sigma_k1: 0.0,
            sigma_k2: 0.0,
            sigma_x1: 0.0,
            sigma_x2: 0.0,
            rho: 0.0,
            eps_tv: 1e-7,
            eps_div: 1e-12,
            psi: None,
            beta_divergence_index: 1.0,
        }
    }
}

impl HyperParams {
    /// TV channel weights expanded to length `p`.
    pub fn psi_for(&self, p: usize) -> Array1<f64> {
        match &self.psi {
            Some(psi) => psi.clone(),
            None => Array1::ones(p),
        }
    }

    pub(crate) fn named_weights(&self) -> [(&'static str, f64); 10] {
        [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("nu", self.nu),
            ("omega", self.omega),
            ("tau", self.tau),
            ("sigma_k1", self.sigma_k1),
            ("sigma_k2", self.sigma_k2),
            ("sigma_x1", self.sigma_x1),
            ("sigma_x2", self.sigma_x2),
            ("rho", self.rho),
        ]
    }
}

/// Binary class annotation, one entry per row of the data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels(Array1<f64>);

impl Labels {
    pub fn new(u: Array1<f64>) -> Result<Self> {
        if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| **v != 0.0 && **v != 1.0) {
            return Err(NmfError::Invalid(format!("label {i} is {v}, expected 0 or 1")));
        }
        Ok(Self(u))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    NonFinite {
        matrix: &'static str,
    },
    ShapeMismatch(String),
    NegativeWeight(&'static str),
    NonPositiveEpsTv(f64),
    NonPositiveEpsDiv(f64),
    PsiLength {
        expected: usize,
        got: usize,
    },
    LabelLength {
        expected: usize,
        got: usize,
    },
    LabelsRequired,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeEntry {
                matrix,
                row,
                col,
                value,
            } => {
                write!(f, "negative entry at ({row},{col}) in {matrix}: {value}")
            }
            Violation::NonFinite { matrix } => write!(f, "non-finite entry in {matrix}"),
            Violation::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Violation::NegativeWeight(name) => write!(f, "weight {name} is negative"),
            Violation::NonPositiveEpsTv(v) => write!(f, "eps_tv must be positive, got {v}"),
            Violation::NonPositiveEpsDiv(v) => write!(f, "eps_div must be positive, got {v}"),
            Violation::PsiLength { expected, got } => {
                write!(f, "psi has length {got}, expected {expected}")
            }
            Violation::LabelLength { expected, got } => {
                write!(f, "labels have length {got}, expected {expected}")
            }
            Violation::LabelsRequired => write!(f, "labels required when rho > 0"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            return Ok(());
        }
        if self.violations.iter().all(|v| *v == Violation::LabelsRequired) {
            return Err(NmfError::LabelsRequired);
        }
        let msg: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        Err(NmfError::Invalid(msg.join("; ")))
    }
}

fn check_entries(name: &'static str, values: &Array2<f64>, out: &mut Vec<Violation>) {
    if values.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite { matrix: name });
    }
    if let Some(((row, col), value)) = values.indexed_iter().find(|(_, v)| **v < 0.0) {
        out.push(Violation::NegativeEntry {
            matrix: name,
            row,
            col,
            value: *value,
        });
    }
}

/// Checks every invariant of a problem instance and reports all violations
/// at once instead of failing on the first.
pub fn validate_problem(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    labels: Option<&Labels>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;
    let (n, m) = y.dim();
    let p = state.k.ncols();

    if n == 0 || m == 0 {
        v.push(Violation::ShapeMismatch(format!("data matrix is {n}x{m}")));
    }
    check_entries("Y", y, v);

    let shapes = [
        ("K", state.k.dim(), (n, p)),
        ("X", state.x.dim(), (p, m)),
        ("V", state.v.dim(), (n, p)),
        ("W", state.w.dim(), (p, m)),
    ];
    for (name, got, want) in shapes {
        if got != want {
            v.push(Violation::ShapeMismatch(format!(
                "{name} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            )));
        }
    }
    if state.beta.len() != p {
        v.push(Violation::ShapeMismatch(format!(
            "beta has length {}, expected {p}",
            state.beta.len()
        )));
    }
    if p == 0 {
        v.push(Violation::ShapeMismatch("rank must be at least 1".into()));
    }
    check_entries("K", &state.k, v);
    check_entries("X", &state.x, v);
    check_entries("V", &state.v, v);
    check_entries("W", &state.w, v);
    if let Some((i, b)) = state.beta.iter().enumerate().find(|(_, b)| !(**b >= 0.0)) {
        v.push(Violation::NegativeEntry {
            matrix: "beta",
            row: i,
            col: 0,
            value: *b,
        });
    }

    for (name, w) in params.named_weights() {
        if !(w >= 0.0) {
            v.push(Violation::NegativeWeight(name));
        }
    }
    if !(params.eps_tv > 0.0) {
        v.push(Violation::NonPositiveEpsTv(params.eps_tv));
    }
    if !(params.eps_div > 0.0) {
        v.push(Violation::NonPositiveEpsDiv(params.eps_div));
    }
    if let Some(psi) = &params.psi {
        if psi.len() != p {
            v.push(Violation::PsiLength {
                expected: p,
                got: psi.len(),
            });
        }
        if psi.iter().any(|w| !(*w >= 0.0)) {
            v.push(Violation::NegativeWeight("psi"));
        }
    }

    match labels {
        Some(u) if u.len() != n => v.push(Violation::LabelLength {
            expected: n,
            got: u.len(),
        }),
        None if params.rho > 0.0 => v.push(Violation::LabelsRequired),
        _ => {}
    }

    if p > n.min(m) {
        report
            .warnings
            .push(format!("rank {p} exceeds min(n, m) = {}", n.min(m)));
    }
    report
}
