//! The full cost functional: a discrepancy between `Y` and `KX` plus the
//! weighted elastic-net, total-variation, orthogonality and regression
//! penalties.

use ndarray::{Array1, Array2};

use crate::divergence::kl_unchecked;
use crate::error::{check_shape, NmfError, Result};
use crate::model::{FactorState, HyperParams, Labels};
use crate::tv::{tv_penalty, PixelGrid};

/// Data-fit term of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discrepancy {
    /// Generalized Kullback-Leibler divergence `KL(Y, KX)`.
    Kl,
    /// `½‖Y − KX‖²_F`.
    Frobenius,
}

impl Discrepancy {
    /// Maps a β-divergence index to a supported discrepancy.
    pub fn from_beta_index(beta: f64) -> Result<Self> {
        if beta == 1.0 {
            Ok(Discrepancy::Kl)
        } else if beta == 2.0 {
            Ok(Discrepancy::Frobenius)
        } else {
            Err(NmfError::Unsupported(format!(
                "beta divergence index {beta}; only 1 (KL) and 2 (Frobenius) are supported"
            )))
        }
    }

    pub fn beta_index(self) -> f64 {
        match self {
            Discrepancy::Kl => 1.0,
            Discrepancy::Frobenius => 2.0,
        }
    }
}

/// Unweighted values of every term of the objective, plus the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub total: f64,
    pub discrepancy: f64,
    /// `Σ X`
    pub l1_x: f64,
    /// `‖K‖²_F`
    pub l2_k: f64,
    /// `‖X‖²_F`
    pub l2_x: f64,
    /// `Σ K`
    pub l1_k: f64,
    /// `TV(K)`
    pub tv_k: f64,
    /// `‖I − VᵀK‖²_F`
    pub orth_k1: f64,
    /// `‖V − K‖²_F`
    pub orth_k2: f64,
    /// `‖I − XWᵀ‖²_F`
    pub orth_x1: f64,
    /// `‖W − X‖²_F`
    pub orth_x2: f64,
    /// `‖u − YXᵀβ‖²`
    pub regression: f64,
}

impl CostBreakdown {
    /// Column names in serialization order, excluding the iteration index.
    pub const FIELDS: [&'static str; 12] = [
        "total",
        "discrepancy",
        "l1_x",
        "l2_k",
        "l2_x",
        "l1_k",
        "tv_k",
        "orth_k1",
        "orth_k2",
        "orth_x1",
        "orth_x2",
        "regression",
    ];

    /// Values in the order of [`CostBreakdown::FIELDS`].
    pub fn values(&self) -> [f64; 12] {
        [
            self.total,
            self.discrepancy,
            self.l1_x,
            self.l2_k,
            self.l2_x,
            self.l1_k,
            self.tv_k,
            self.orth_k1,
            self.orth_k2,
            self.orth_x1,
            self.orth_x2,
            self.regression,
        ]
    }

    pub fn from_values(v: [f64; 12]) -> Self {
        CostBreakdown {
            total: v[0],
            discrepancy: v[1],
            l1_x: v[2],
            l2_k: v[3],
            l2_x: v[4],
            l1_k: v[5],
            tv_k: v[6],
            orth_k1: v[7],
            orth_k2: v[8],
            orth_x1: v[9],
            orth_x2: v[10],
            regression: v[11],
        }
    }

    /// Combines the raw terms with the weights of `params`.
    pub fn weighted_total(&self, params: &HyperParams) -> f64 {
        self.discrepancy
            + params.lambda * self.l1_x
            + 0.5 * params.mu * self.l2_k
            + 0.5 * params.nu * self.l2_x
            + params.omega * self.l1_k
            + 0.5 * params.tau * self.tv_k
            + 0.5 * params.sigma_k1 * self.orth_k1
            + 0.5 * params.sigma_k2 * self.orth_k2
            + 0.5 * params.sigma_x1 * self.orth_x1
            + 0.5 * params.sigma_x2 * self.orth_x2
            + 0.5 * params.rho * self.regression
    }
}

pub(crate) fn sq_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

pub(crate) fn sq_dist(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `‖I − A‖²_F` for a square `A`.
pub(crate) fn identity_gap(a: &Array2<f64>) -> f64 {
    a.indexed_iter()
        .map(|((i, j), v)| {
            let d = if i == j { 1.0 - v } else { -v };
            d * d
        })
        .sum()
}

/// `‖u − Y Xᵀ β‖²`.
pub(crate) fn regression_residual(y: &Array2<f64>, x: &Array2<f64>, beta: &Array1<f64>, u: &Array1<f64>) -> f64 {
    let pred = y.dot(&x.t().dot(beta));
    pred.iter().zip(u).map(|(p, t)| (t - p).powi(2)).sum()
}

/// Discrepancy between `Y` and `KX`.
pub fn discrepancy_value(y: &Array2<f64>, kx: &Array2<f64>, which: Discrepancy) -> f64 {
    match which {
        Discrepancy::Kl => kl_unchecked(y, kx),
        Discrepancy::Frobenius => 0.5 * sq_dist(y, kx),
    }
}

fn check_state(y: &Array2<f64>, state: &FactorState) -> Result<()> {
    let (n, m) = y.dim();
    let p = state.k.ncols();
    check_shape("K", state.k.dim(), (n, p))?;
    check_shape("X", state.x.dim(), (p, m))?;
    check_shape("V", state.v.dim(), (n, p))?;
    check_shape("W", state.w.dim(), (p, m))?;
    if state.beta.len() != p {
        return Err(NmfError::Shape(format!(
            "beta has length {}, expected {p}",
            state.beta.len()
        )));
    }
    Ok(())
}

/// Evaluates every term of the objective. The discrepancy is selected by
/// `params.beta_divergence_index`.
pub fn penalty_values(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    grid: &PixelGrid,
    labels: Option<&Labels>,
) -> Result<CostBreakdown> {
    check_state(y, state)?;
    let which = Discrepancy::from_beta_index(params.beta_divergence_index)?;
    let p = state.rank();
    let regression = match labels {
        Some(u) => {
            if u.len() != y.nrows() {
                return Err(NmfError::Shape(format!(
                    "labels have length {}, expected {}",
                    u.len(),
                    y.nrows()
                )));
            }
            regression_residual(y, &state.x, &state.beta, u.as_array())
        }
        None if params.rho > 0.0 => return Err(NmfError::LabelsRequired),
        None => 0.0,
    };
    let kx = state.k.dot(&state.x);
    let mut c = CostBreakdown {
        total: 0.0,
        discrepancy: discrepancy_value(y, &kx, which),
        l1_x: state.x.sum(),
        l2_k: sq_norm(&state.k),
        l2_x: sq_norm(&state.x),
        l1_k: state.k.sum(),
        tv_k: tv_penalty(&state.k, grid, &params.psi_for(p), params.eps_tv)?,
        orth_k1: identity_gap(&state.v.t().dot(&state.k)),
        orth_k2: sq_dist(&state.v, &state.k),
        orth_x1: identity_gap(&state.x.dot(&state.w.t())),
        orth_x2: sq_dist(&state.w, &state.x),
        regression,
    };
    c.total = c.weighted_total(params);
    Ok(c)
}

/// The weighted objective value.
pub fn total_cost(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    grid: &PixelGrid,
    labels: Option<&Labels>,
) -> Result<f64> {
    Ok(penalty_values(y, state, params, grid, labels)?.total)
}
