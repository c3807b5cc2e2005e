//! Multiplicative update rules and the alternating fit loop.
//!
//! Every rule minimizes a surrogate of the objective in one block of
//! variables, so a sweep `V → K → W → X → β` never increases the total cost.
//! All rules map non-negative iterates to non-negative iterates; there is no
//! projection step.

use ndarray::{Array1, Array2, Axis, Zip};

use crate::error::{NmfError, Result};
use crate::model::{validate_problem, FactorState, HyperParams, Labels};
use crate::objective::{penalty_values, CostBreakdown, Discrepancy};
use crate::tv::{compute_tv_workspace, PixelGrid};

/// Below this quadratic coefficient the per-entry equation is solved as a
/// linear one.
pub const DEGENERATE_C2: f64 = 1e-14;

/// How the X-block is updated under the KL discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlXRule {
    /// Jensen surrogate, supports every penalty.
    Jensen,
    /// Quadratic-bound surrogate, plain KL only in the X-block.
    Lqbp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub discrepancy: Discrepancy,
    pub kl_x_rule: KlXRule,
    pub max_iter: usize,
    /// Stop once `|F_prev − F| / |F_prev|` falls below this.
    pub rel_tol: f64,
    /// Seed for [`crate::model::init_factors`] when the caller initializes
    /// from the config.
    pub seed: u64,
    /// Record the cost every this many sweeps (the first and last are always
    /// recorded).
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            discrepancy: Discrepancy::Kl,
            kl_x_rule: KlXRule::Jensen,
            max_iter: 500,
            rel_tol: 1e-8,
            seed: 0,
            trace_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    ToleranceReached,
}

impl Termination {
    pub fn tag(self) -> &'static str {
        match self {
            Termination::MaxIterations => "max-iterations",
            Termination::ToleranceReached => "tolerance-reached",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub cost: CostBreakdown,
}

/// Cost history of a fit. Record 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl FitTrace {
    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost.total).collect()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Per-entry quadratic `c2·z² + c1·z = rhs` whose positive root is the
/// minimizer of a separable surrogate anchored at `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryQuadratic {
    pub c2: Array2<f64>,
    pub c1: Array2<f64>,
    pub rhs: Array2<f64>,
    pub anchor: Array2<f64>,
}

impl EntryQuadratic {
    /// Positive root of every entry; entries with `c2 < 1e-14` are solved as
    /// `rhs / c1`. `eps_div` floors every denominator. Entries whose anchor
    /// is exactly zero stay zero, as in every multiplicative rule.
    pub fn solve(&self, eps_div: f64) -> Result<Array2<f64>> {
        if let Some(v) = self.rhs.iter().find(|v| **v < 0.0) {
            return Err(NmfError::Domain(format!("negative right-hand side {v} in update")));
        }
        let mut out = Array2::zeros(self.rhs.dim());
        Zip::from(&mut out)
            .and(&self.c2)
            .and(&self.c1)
            .and(&self.rhs)
            .and(&self.anchor)
            .for_each(|o, &c2, &c1, &r, &a| {
                *o = if a == 0.0 {
                    0.0
                } else {
                    positive_root(c2, c1, r, eps_div)
                }
            });
        Ok(out)
    }

    /// `Θ = rhs / c2` and `Φ = c1 / c2`, so that the root reads
    /// `sqrt(Θ + Φ²/4) − Φ/2`. Infinite where `c2 = 0`.
    pub fn theta_phi(&self) -> (Array2<f64>, Array2<f64>) {
        (&self.rhs / &self.c2, &self.c1 / &self.c2)
    }
}

fn positive_root(c2: f64, c1: f64, rhs: f64, eps_div: f64) -> f64 {
    if c2 < DEGENERATE_C2 {
        return rhs / c1.max(eps_div);
    }
    let disc = (c1 * c1 + 4.0 * c2 * rhs).sqrt();
    if c1 > 0.0 {
        2.0 * rhs / (c1 + disc).max(eps_div)
    } else {
        (disc - c1) / (2.0 * c2)
    }
}

fn floor(den: Array2<f64>, eps_div: f64) -> Array2<f64> {
    den.mapv_into(|d| d.max(eps_div))
}

fn ones_col_sums(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(0)).insert_axis(Axis(1))
}

fn row_sums_as_row(m: &Array2<f64>) -> Array2<f64> {
    m.sum_axis(Axis(1)).insert_axis(Axis(0))
}

/// `V ← (σ1 + σ2) K / (σ1 K KᵀV / V + σ2)`, evaluated as
/// `(σ1 + σ2) K ∘ V / (σ1 K KᵀV + σ2 V)` so that zero entries stay zero.
/// Returns `V` unchanged when both weights are zero and `K` when `σ1 = 0`.
pub fn update_v(state: &FactorState, params: &HyperParams) -> Array2<f64> {
    let (s1, s2) = (params.sigma_k1, params.sigma_k2);
    if s1 + s2 == 0.0 {
        return state.v.clone();
    }
    if s1 == 0.0 {
        return state.k.clone();
    }
    let kktv = state.k.dot(&state.k.t().dot(&state.v));
    let den = floor(kktv * s1 + &(&state.v * s2), params.eps_div);
    &state.k * &state.v * (s1 + s2) / den
}

/// `W ← (σ1 + σ2) X / (σ1 W XᵀX / W + σ2)`, evaluated like [`update_v`].
pub fn update_w(state: &FactorState, params: &HyperParams) -> Array2<f64> {
    let (s1, s2) = (params.sigma_x1, params.sigma_x2);
    if s1 + s2 == 0.0 {
        return state.w.clone();
    }
    if s1 == 0.0 {
        return state.x.clone();
    }
    let wxtx = state.w.dot(&state.x.t()).dot(&state.x);
    let den = floor(wxtx * s1 + &(&state.w * s2), params.eps_div);
    &state.x * &state.w * (s1 + s2) / den
}

/// TV weight `τ ψ_k P_ik` and the matching `τ ψ_k P_ik Z_ik`, or `None` when
/// `τ = 0`.
fn tv_terms(a: &Array2<f64>, params: &HyperParams, grid: &PixelGrid) -> Result<Option<(Array2<f64>, Array2<f64>)>> {
    if params.tau == 0.0 {
        return Ok(None);
    }
    let ws = compute_tv_workspace(a, grid, params.eps_tv)?;
    let psi = params.psi_for(a.ncols());
    let weight = Array2::from_shape_fn(a.dim(), |(i, c)| params.tau * psi[c] * ws.p[[i, c]]);
    let pull = &weight * &ws.z;
    Ok(Some((weight, pull)))
}

/// Coefficients of the KL K-update at anchor `A = K`:
/// `c2 = μ + τψP + σ1 VVᵀA / A + σ2`,
/// `c1 = 1Xᵀ + ω − τψP∘Z − (σ1 + σ2) V`,
/// `rhs = A ∘ (Y / AX) Xᵀ`.
pub fn kl_k_quadratic(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    grid: &PixelGrid,
) -> Result<EntryQuadratic> {
    let a = &state.k;
    let x = &state.x;
    let (s1, s2) = (params.sigma_k1, params.sigma_k2);
    let ratio = y / &a.dot(x);
    let rhs = a * &ratio.dot(&x.t());
    let mut c2 = Array2::from_elem(a.dim(), params.mu + s2);
    let mut c1 = row_sums_as_row(x) + params.omega - &(&state.v * (s1 + s2));
    if s1 != 0.0 {
        let vvta = state.v.dot(&state.v.t().dot(a));
        c2 += &(vvta / a * s1);
    }
    if let Some((weight, pull)) = tv_terms(a, params, grid)? {
        c2 += &weight;
        c1 -= &pull;
    }
    Ok(EntryQuadratic {
        c2,
        c1,
        rhs,
        anchor: a.clone(),
    })
}

/// Coefficients of the KL X-update at anchor `A = X`:
/// `c2 = ν + σ1 AWᵀW / A + σ2 + ρ β_k (YᵀYAᵀβ)_j / A`,
/// `c1 = Kᵀ1 + λ − (σ1 + σ2) W − ρ β_k (Yᵀu)_j`,
/// `rhs = A ∘ Kᵀ(Y / KA)`.
pub fn kl_x_quadratic(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    labels: Option<&Labels>,
) -> Result<EntryQuadratic> {
    let a = &state.x;
    let k = &state.k;
    let (s1, s2) = (params.sigma_x1, params.sigma_x2);
    let ratio = y / &k.dot(a);
    let rhs = a * &k.t().dot(&ratio);
    let mut c2 = Array2::from_elem(a.dim(), params.nu + s2);
    let mut c1 = ones_col_sums(k) + params.lambda - &(&state.w * (s1 + s2));
    if s1 != 0.0 {
        let awtw = a.dot(&state.w.t()).dot(&state.w);
        c2 += &(awtw / a * s1);
    }
    if params.rho != 0.0 {
        let u = labels.ok_or(NmfError::LabelsRequired)?.as_array();
        let (curv, lin) = regression_terms(y, a, &state.beta, u);
        c2 += &(curv / a * params.rho);
        c1 -= &(lin * params.rho);
    }
    Ok(EntryQuadratic {
        c2,
        c1,
        rhs,
        anchor: a.clone(),
    })
}

/// `β_k (YᵀY Aᵀβ)_j` and `β_k (Yᵀu)_j` as `p x m` matrices.
fn regression_terms(
    y: &Array2<f64>,
    a: &Array2<f64>,
    beta: &Array1<f64>,
    u: &Array1<f64>,
) -> (Array2<f64>, Array2<f64>) {
    let yty_ab = y.t().dot(&y.dot(&a.t().dot(beta)));
    let ytu = y.t().dot(u);
    let b = beta.view().insert_axis(Axis(1));
    let curv = &b * &yty_ab.view().insert_axis(Axis(0));
    let lin = &b * &ytu.view().insert_axis(Axis(0));
    (curv, lin)
}

/// KL K-update: per-entry positive root of [`kl_k_quadratic`].
pub fn update_k_kl(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    grid: &PixelGrid,
) -> Result<Array2<f64>> {
    kl_k_quadratic(y, state, params, grid)?.solve(params.eps_div)
}

/// KL X-update from the Jensen surrogate: per-entry positive root of
/// [`kl_x_quadratic`].
pub fn update_x_kl(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    labels: Option<&Labels>,
) -> Result<Array2<f64>> {
    kl_x_quadratic(y, state, params, labels)?.solve(params.eps_div)
}

fn x_penalties_active(params: &HyperParams) -> bool {
    [params.lambda, params.nu, params.sigma_x1, params.sigma_x2, params.rho]
        .iter()
        .any(|w| *w != 0.0)
}

/// KL X-update from the quadratic-bound surrogate:
/// `X ← 2X ∘ Kᵀ(Y/KX) / (Kᵀ(Y/KX) + Kᵀ1)`.
///
/// Only defined for an X-block without penalties.
pub fn update_x_kl_lqbp(y: &Array2<f64>, state: &FactorState, params: &HyperParams) -> Result<Array2<f64>> {
    if x_penalties_active(params) {
        return Err(NmfError::Unsupported(
            "the lqbp X-rule supports no penalty on X (lambda, nu, sigma_x1, sigma_x2, rho must be 0)".into(),
        ));
    }
    let k = &state.k;
    let x = &state.x;
    let g = k.t().dot(&(y / &k.dot(x)));
    let den = floor(&g + &ones_col_sums(k), params.eps_div);
    Ok(x * &g * 2.0 / den)
}

/// `β ← β ∘ X Yᵀu / (X YᵀY Xᵀβ)`.
pub fn update_beta(y: &Array2<f64>, state: &FactorState, params: &HyperParams, labels: &Labels) -> Array1<f64> {
    let u = labels.as_array();
    let yxt = y.dot(&state.x.t());
    let num = yxt.t().dot(u);
    let den = yxt.t().dot(&yxt.dot(&state.beta));
    Zip::from(&state.beta)
        .and(&num)
        .and(&den)
        .map_collect(|&b, &n, &d| b * n / d.max(params.eps_div))
}

/// Frobenius K-update:
/// `K ← A ∘ (YXᵀ + τψP∘Z + (σ1+σ2)V) / (AXXᵀ + μA + ω + σ1 VVᵀA + (τψP + σ2)A)`.
pub fn update_k_fro(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    grid: &PixelGrid,
) -> Result<Array2<f64>> {
    let a = &state.k;
    let x = &state.x;
    let (s1, s2) = (params.sigma_k1, params.sigma_k2);
    let mut num = y.dot(&x.t());
    let mut den = a.dot(&x.dot(&x.t())) + &(a * (params.mu + s2)) + params.omega;
    if s1 + s2 != 0.0 {
        num += &(&state.v * (s1 + s2));
    }
    if s1 != 0.0 {
        den += &(state.v.dot(&state.v.t().dot(a)) * s1);
    }
    if let Some((weight, pull)) = tv_terms(a, params, grid)? {
        num += &pull;
        den += &(weight * a);
    }
    Ok(a * &num / floor(den, params.eps_div))
}

/// Frobenius X-update:
/// `X ← A ∘ (KᵀY + (σ1+σ2)W + ρβuᵀY) / (KᵀKA + (σ2+ν)A + λ + ρββᵀAYᵀY + σ1 AWᵀW)`.
pub fn update_x_fro(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    labels: Option<&Labels>,
) -> Result<Array2<f64>> {
    let a = &state.x;
    let k = &state.k;
    let (s1, s2) = (params.sigma_x1, params.sigma_x2);
    let mut num = k.t().dot(y);
    let mut den = k.t().dot(&k.dot(a)) + &(a * (s2 + params.nu)) + params.lambda;
    if s1 + s2 != 0.0 {
        num += &(&state.w * (s1 + s2));
    }
    if s1 != 0.0 {
        den += &(a.dot(&state.w.t()).dot(&state.w) * s1);
    }
    if params.rho != 0.0 {
        let u = labels.ok_or(NmfError::LabelsRequired)?.as_array();
        let (curv, lin) = regression_terms(y, a, &state.beta, u);
        num += &(lin * params.rho);
        den += &(curv * params.rho);
    }
    Ok(a * &num / floor(den, params.eps_div))
}

/// Named quantities of the KL updates at the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateIntermediates {
    /// `rhs / c2` of the K-update.
    pub theta: Array2<f64>,
    /// `c1 / c2` of the K-update.
    pub phi: Array2<f64>,
    /// `rhs / c2` of the X-update.
    pub lambda_upd: Array2<f64>,
    /// `c1 / c2` of the X-update.
    pub gamma: Array2<f64>,
    /// `X ∘ Kᵀ(Y / KX)`.
    pub lambda_tilde: Array2<f64>,
    /// `Kᵀ1 + λ`.
    pub gamma_tilde: Array2<f64>,
}

pub fn kl_update_intermediates(
    y: &Array2<f64>,
    state: &FactorState,
    params: &HyperParams,
    grid: &PixelGrid,
    labels: Option<&Labels>,
) -> Result<UpdateIntermediates> {
    let kq = kl_k_quadratic(y, state, params, grid)?;
    let xq = kl_x_quadratic(y, state, params, labels)?;
    let (theta, phi) = kq.theta_phi();
    let (lambda_upd, gamma) = xq.theta_phi();
    let lambda_tilde = &state.x * &state.k.t().dot(&(y / &state.k.dot(&state.x)));
    let gamma_tilde = ones_col_sums(&state.k) + params.lambda;
    let gamma_tilde = gamma_tilde
        .broadcast(state.x.dim())
        .expect("column of row sums broadcasts over X")
        .to_owned();
    Ok(UpdateIntermediates {
        theta,
        phi,
        lambda_upd,
        gamma,
        lambda_tilde,
        gamma_tilde,
    })
}

/// Elastic-net KL X-update in closed form: `2Λ̃ / (Γ̃ + sqrt(4νΛ̃ + Γ̃²))`.
pub fn elastic_net_x_kl(y: &Array2<f64>, state: &FactorState, params: &HyperParams) -> Array2<f64> {
    let lam = &state.x * &state.k.t().dot(&(y / &state.k.dot(&state.x)));
    let gam = ones_col_sums(&state.k) + params.lambda;
    let nu = params.nu;
    Zip::from(&lam)
        .and_broadcast(&gam)
        .map_collect(|&l, &g| 2.0 * l / (g + (4.0 * nu * l + g * g).sqrt()))
}

fn check_finite(m: &Array2<f64>, update: &'static str, iteration: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NmfError::NonFinite { update, iteration })
    }
}

fn check_config(config: &SolverConfig, params: &HyperParams) -> Result<()> {
    if config.max_iter == 0 {
        return Err(NmfError::Invalid("max_iter must be at least 1".into()));
    }
    if !(config.rel_tol >= 0.0) {
        return Err(NmfError::Invalid(format!(
            "rel_tol must be non-negative, got {}",
            config.rel_tol
        )));
    }
    if config.trace_every == 0 {
        return Err(NmfError::Invalid("trace_every must be at least 1".into()));
    }
    if params.beta_divergence_index != config.discrepancy.beta_index() {
        return Err(NmfError::Invalid(format!(
            "beta divergence index {} does not match the {:?} discrepancy",
            params.beta_divergence_index, config.discrepancy
        )));
    }
    if config.kl_x_rule == KlXRule::Lqbp {
        if config.discrepancy != Discrepancy::Kl {
            return Err(NmfError::Unsupported("the lqbp X-rule is only defined for KL".into()));
        }
        if x_penalties_active(params) {
            return Err(NmfError::Unsupported(
                "the lqbp X-rule supports no penalty on X (lambda, nu, sigma_x1, sigma_x2, rho must be 0)".into(),
            ));
        }
    }
    Ok(())
}

/// Runs alternating sweeps from `init` until the relative cost change drops
/// below `config.rel_tol` or `config.max_iter` sweeps have run.
pub fn fit(
    y: &Array2<f64>,
    config: &SolverConfig,
    params: &HyperParams,
    grid: &PixelGrid,
    labels: Option<&Labels>,
    init: FactorState,
) -> Result<(FactorState, FitTrace)> {
    fit_with_observer(y, config, params, grid, labels, init, |_, _, _| {})
}

/// [`fit`], calling `observer(update, iteration, state)` after every block
/// update. `update` is one of `"V"`, `"K"`, `"W"`, `"X"`, `"beta"`.
pub fn fit_with_observer<F>(
    y: &Array2<f64>,
    config: &SolverConfig,
    params: &HyperParams,
    grid: &PixelGrid,
    labels: Option<&Labels>,
    init: FactorState,
    mut observer: F,
) -> Result<(FactorState, FitTrace)>
where
    F: FnMut(&'static str, usize, &FactorState),
{
    check_config(config, params)?;
    validate_problem(y, &init, params, labels).into_result()?;
    if grid.len() != y.nrows() {
        return Err(NmfError::Shape(format!(
            "grid has {} pixels but the data has {} rows",
            grid.len(),
            y.nrows()
        )));
    }

    let mut state = init;
    let mut cost = penalty_values(y, &state, params, grid, labels)?;
    let mut records = vec![TraceRecord { iter: 0, cost }];
    let mut termination = Termination::MaxIterations;
    let orth_k = params.sigma_k1 + params.sigma_k2 != 0.0;
    let orth_x = params.sigma_x1 + params.sigma_x2 != 0.0;

    for iter in 1..=config.max_iter {
        if orth_k {
            state.v = update_v(&state, params);
            check_finite(&state.v, "V", iter)?;
            observer("V", iter, &state);
        }
        state.k = match config.discrepancy {
            Discrepancy::Kl => update_k_kl(y, &state, params, grid)?,
            Discrepancy::Frobenius => update_k_fro(y, &state, params, grid)?,
        };
        check_finite(&state.k, "K", iter)?;
        observer("K", iter, &state);
        if orth_x {
            state.w = update_w(&state, params);
            check_finite(&state.w, "W", iter)?;
            observer("W", iter, &state);
        }
        state.x = match (config.discrepancy, config.kl_x_rule) {
            (Discrepancy::Kl, KlXRule::Jensen) => update_x_kl(y, &state, params, labels)?,
            (Discrepancy::Kl, KlXRule::Lqbp) => update_x_kl_lqbp(y, &state, params)?,
            (Discrepancy::Frobenius, _) => update_x_fro(y, &state, params, labels)?,
        };
        check_finite(&state.x, "X", iter)?;
        observer("X", iter, &state);
        if params.rho != 0.0 {
            let u = labels.ok_or(NmfError::LabelsRequired)?;
            state.beta = update_beta(y, &state, params, u);
            if !state.beta.iter().all(|v| v.is_finite()) {
                return Err(NmfError::NonFinite {
                    update: "beta",
                    iteration: iter,
                });
            }
            observer("beta", iter, &state);
        }

        let prev = cost.total;
        cost = penalty_values(y, &state, params, grid, labels)?;
        if !cost.total.is_finite() {
            return Err(NmfError::NonFinite {
                update: "cost",
                iteration: iter,
            });
        }
        let change = (prev - cost.total).abs();
        let rel = if change == 0.0 { 0.0 } else { change / prev.abs() };
        let converged = rel < config.rel_tol;
        if converged {
            termination = Termination::ToleranceReached;
        }
        if iter % config.trace_every == 0 || converged || iter == config.max_iter {
            records.push(TraceRecord { iter, cost });
        }
        if converged {
            break;
        }
    }
    Ok((state, FitTrace { records, termination }))
}
