//! Direct evaluators for the surrogate functionals behind every update rule.
//!
//! Each [`SurrogateKind`] names a function `Q(x, a)` of a primal variable `x`
//! at an anchor `a` that lies above a target `F(x)` and touches it at
//! `x = a`. The solver never evaluates these; it only uses their closed-form
//! minimizers. They are exposed so that majorization, tangency and
//! stationarity can be checked numerically.
//!
//! Primal variables are passed as matrices in their natural shape: `K` and
//! `V` are `n x p`, `X` and `W` are `p x m`, and `β` is a `p x 1` column.
//! Variables that are not the primal one are read from
//! [`SurrogateContext::state`].

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};

use crate::divergence::kl_unchecked;
use crate::error::{check_shape, NmfError, Result};
use crate::model::{FactorState, HyperParams, Labels};
use crate::objective::{identity_gap, regression_residual, sq_dist, sq_norm};
use crate::tv::{tv_penalty, tv_surrogate_gradient, tv_surrogate_value, PixelGrid};

/// Which of the three algebraic forms of the KL Jensen surrogate in `X` to
/// evaluate. With `t_kj = X_kj / A_kj · (KA)_ij` and Jensen weights
/// `w_ijk = K_ik A_kj / (KA)_ij`:
///
/// 1. `Σ Y ln Y − Y + (KX) − Y Σ_k w ln t`
/// 2. `Σ_ij Σ_k w (Y ln(Y/t) − Y + t)`
/// 3. `Σ_ij [Y ln Y − Y + Σ_k w (t − Y ln t)]`
///
/// Because the weights sum to one and `Σ_k w t = (KX)_ij`, the three forms
/// agree exactly and so do their gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KlVariant {
    One,
    Two,
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurrogateKind {
    /// Quadratic bound of `½‖Y − KX‖² + λΣX + ν/2‖X‖²` in `X`.
    FroLqbpX,
    /// Quadratic bound of `½‖Y − KX‖² + ωΣK + μ/2‖K‖²` in `K`.
    FroLqbpK,
    /// Jensen bound of `½‖Y − KX‖²` in `X`.
    FroJensenX,
    /// Jensen bound of `½‖Y − KX‖²` in `K`.
    FroJensenK,
    /// Jensen bound of `KL(Y, KX)` in `X`.
    KlJensenX(KlVariant),
    /// Jensen bound of `KL(Y, KX)` in `K`.
    KlJensenK,
    /// Quadratic bound of `KL(Y, KX)` in `X` with `κ = Kᵀ1`.
    KlLqbpX,
    /// Separable bound of `TV(K)`.
    TvK,
    /// Bound of `σ_X1/2 ‖I − XWᵀ‖² + σ_X2/2 ‖W − X‖²` in `X`.
    OrthX,
    /// The same function as [`SurrogateKind::OrthX`], bounded in `W`.
    OrthW,
    /// Bound of `σ_K1/2 ‖I − VᵀK‖² + σ_K2/2 ‖V − K‖²` in `K`.
    OrthK,
    /// The same function as [`SurrogateKind::OrthK`], bounded in `V`.
    OrthV,
    /// Jensen bound of `½‖u − YXᵀβ‖²` in `X`.
    RegressionX,
    /// Jensen bound of `½‖u − YXᵀβ‖²` in `β`.
    RegressionBeta,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 16] = [
        SurrogateKind::FroLqbpX,
        SurrogateKind::FroLqbpK,
        SurrogateKind::FroJensenX,
        SurrogateKind::FroJensenK,
        SurrogateKind::KlJensenX(KlVariant::One),
        SurrogateKind::KlJensenX(KlVariant::Two),
        SurrogateKind::KlJensenX(KlVariant::Three),
        SurrogateKind::KlJensenK,
        SurrogateKind::KlLqbpX,
        SurrogateKind::TvK,
        SurrogateKind::OrthX,
        SurrogateKind::OrthW,
        SurrogateKind::OrthK,
        SurrogateKind::OrthV,
        SurrogateKind::RegressionX,
        SurrogateKind::RegressionBeta,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SurrogateKind::FroLqbpX => "fro-lqbp-X",
            SurrogateKind::FroLqbpK => "fro-lqbp-K",
            SurrogateKind::FroJensenX => "fro-jensen-X",
            SurrogateKind::FroJensenK => "fro-jensen-K",
            SurrogateKind::KlJensenX(KlVariant::One) => "kl-jensen-X-1",
            SurrogateKind::KlJensenX(KlVariant::Two) => "kl-jensen-X-2",
            SurrogateKind::KlJensenX(KlVariant::Three) => "kl-jensen-X-3",
            SurrogateKind::KlJensenK => "kl-jensen-K",
            SurrogateKind::KlLqbpX => "kl-lqbp-X",
            SurrogateKind::TvK => "tv-K",
            SurrogateKind::OrthX => "orth-X",
            SurrogateKind::OrthW => "orth-W",
            SurrogateKind::OrthK => "orth-K",
            SurrogateKind::OrthV => "orth-V",
            SurrogateKind::RegressionX => "regression-X",
            SurrogateKind::RegressionBeta => "regression-beta",
        }
    }

    /// The variable this surrogate is a function of.
    pub fn primal(self) -> Primal {
        match self {
            SurrogateKind::FroLqbpX
            | SurrogateKind::FroJensenX
            | SurrogateKind::KlJensenX(_)
            | SurrogateKind::KlLqbpX
            | SurrogateKind::OrthX
            | SurrogateKind::RegressionX => Primal::X,
            SurrogateKind::FroLqbpK
            | SurrogateKind::FroJensenK
            | SurrogateKind::KlJensenK
            | SurrogateKind::TvK
            | SurrogateKind::OrthK => Primal::K,
            SurrogateKind::OrthW => Primal::W,
            SurrogateKind::OrthV => Primal::V,
            SurrogateKind::RegressionBeta => Primal::Beta,
        }
    }
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SurrogateKind {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        SurrogateKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| NmfError::Parse(format!("unknown surrogate kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primal {
    K,
    X,
    V,
    W,
    Beta,
}

impl Primal {
    /// The current value of this variable in `state`, `β` as a column.
    pub fn get(self, state: &FactorState) -> Array2<f64> {
        match self {
            Primal::K => state.k.clone(),
            Primal::X => state.x.clone(),
            Primal::V => state.v.clone(),
            Primal::W => state.w.clone(),
            Primal::Beta => state.beta.clone().insert_axis(Axis(1)),
        }
    }

    fn shape(self, n: usize, m: usize, p: usize) -> (usize, usize) {
        match self {
            Primal::K | Primal::V => (n, p),
            Primal::X | Primal::W => (p, m),
            Primal::Beta => (p, 1),
        }
    }
}

/// Everything besides the primal variable and the anchor that a surrogate
/// may depend on.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateContext<'a> {
    pub y: &'a Array2<f64>,
    pub state: &'a FactorState,
    pub params: &'a HyperParams,
    pub grid: Option<&'a PixelGrid>,
    pub labels: Option<&'a Labels>,
}

impl<'a> SurrogateContext<'a> {
    fn grid(&self) -> Result<&'a PixelGrid> {
        self.grid
            .ok_or_else(|| NmfError::Invalid("the TV surrogate needs a pixel grid".into()))
    }

    fn labels(&self) -> Result<&'a Array1<f64>> {
        self.labels.map(Labels::as_array).ok_or(NmfError::LabelsRequired)
    }

    fn check(&self, kind: SurrogateKind, primal: &Array2<f64>) -> Result<()> {
        let (n, m) = self.y.dim();
        let p = self.state.rank();
        let want = kind.primal().shape(n, m, p);
        check_shape(kind.tag(), primal.dim(), want)
    }
}

/// `Λ_ii = ((M a)_i + κ_i) / a_i` as a dense diagonal matrix. For symmetric
/// non-negative `M` the difference `Λ − M` is positive semidefinite.
pub fn lqbp_lambda_matrix(m: &Array2<f64>, a: &Array1<f64>, kappa: &Array1<f64>) -> Result<Array2<f64>> {
    let d = a.len();
    check_shape("hessian action", m.dim(), (d, d))?;
    if kappa.len() != d {
        return Err(NmfError::Shape(format!(
            "kappa has length {}, expected {d}",
            kappa.len()
        )));
    }
    if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(NmfError::Domain(format!("anchor entry {i} is {v}, must be positive")));
    }
    let ma = m.dot(a);
    let mut out = Array2::zeros((d, d));
    for i in 0..d {
        out[[i, i]] = (ma[i] + kappa[i]) / a[i];
    }
    Ok(out)
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `½ Σ_ij 1/(BA)_ij Σ_k B_ik A_kj (T_ij − Z_kj/A_kj (BA)_ij)²`, the Jensen
/// majorizer of `½‖T − BZ‖²` in `Z` at anchor `A`.
fn jensen_ls_value(b: &Array2<f64>, t: &Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) -> f64 {
    let ba = b.dot(a);
    let mut total = 0.0;
    for ((i, j), &s) in ba.indexed_iter() {
        let tij = t[[i, j]];
        if s == 0.0 {
            total += 0.5 * tij * tij;
            continue;
        }
        let mut acc = 0.0;
        for k in 0..a.nrows() {
            let w = b[[i, k]] * a[[k, j]];
            if w != 0.0 {
                acc += w * (tij - z[[k, j]] / a[[k, j]] * s).powi(2);
            }
        }
        total += 0.5 * acc / s;
    }
    total
}

/// Gradient of [`jensen_ls_value`] in `Z`: `Z/A ∘ Bᵀ(BA) − BᵀT`.
fn jensen_ls_gradient(b: &Array2<f64>, t: &Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
    let curv = b.t().dot(&b.dot(a));
    z / a * &curv - b.t().dot(t)
}

/// `F(A) + ⟨G, Z − A⟩ + ½ Σ Λ (Z − A)²`.
fn lqbp_value(f_a: f64, g: &Array2<f64>, lambda: &Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) -> f64 {
    let mut total = f_a;
    for ((idx, &zi), &ai) in z.indexed_iter().zip(a.iter()) {
        let d = zi - ai;
        total += g[idx] * d + 0.5 * lambda[idx] * d * d;
    }
    total
}

fn transpose(a: &Array2<f64>) -> Array2<f64> {
    a.t().to_owned()
}

fn check_anchor(kind: SurrogateKind, primal: &Array2<f64>, anchor: &Array2<f64>) -> Result<()> {
    check_shape("anchor", anchor.dim(), primal.dim())?;
    if let Some(((i, j), v)) = anchor.indexed_iter().find(|(_, v)| !(**v > 0.0)) {
        return Err(NmfError::Domain(format!(
            "{} anchor entry ({i},{j}) is {v}, must be positive",
            kind.tag()
        )));
    }
    Ok(())
}

/// Pieces of the Frobenius quadratic bound in `X`: gradient and curvature at
/// anchor `A`.
fn fro_lqbp_x_parts(
    y: &Array2<f64>,
    k: &Array2<f64>,
    a: &Array2<f64>,
    params: &HyperParams,
) -> (Array2<f64>, Array2<f64>) {
    let ktka = k.t().dot(&k.dot(a));
    let g = &ktka - &k.t().dot(y) + params.lambda + &(a * params.nu);
    let lam = (&ktka + &(a * params.nu) + params.lambda) / a;
    (g, lam)
}

fn fro_lqbp_k_parts(
    y: &Array2<f64>,
    x: &Array2<f64>,
    a: &Array2<f64>,
    params: &HyperParams,
) -> (Array2<f64>, Array2<f64>) {
    let axxt = a.dot(&x.dot(&x.t()));
    let g = &axxt - &y.dot(&x.t()) + params.omega + &(a * params.mu);
    let lam = (&axxt + &(a * params.mu) + params.omega) / a;
    (g, lam)
}

fn kl_lqbp_x_parts(y: &Array2<f64>, k: &Array2<f64>, a: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let ka = k.dot(a);
    let g_ratio = k.t().dot(&(y / &ka));
    let col = k.sum_axis(Axis(0)).insert_axis(Axis(1));
    let grad = &col - &g_ratio;
    let lam = (&g_ratio + &col) / a;
    (grad, lam)
}

/// The function a surrogate of `kind` majorizes, evaluated at `primal`.
pub fn surrogate_target(kind: SurrogateKind, primal: &Array2<f64>, ctx: &SurrogateContext) -> Result<f64> {
    ctx.check(kind, primal)?;
    let s = ctx.state;
    let y = ctx.y;
    let prm = ctx.params;
    Ok(match kind {
        SurrogateKind::FroLqbpX => {
            0.5 * sq_dist(y, &s.k.dot(primal)) + prm.lambda * primal.sum() + 0.5 * prm.nu * sq_norm(primal)
        }
        SurrogateKind::FroLqbpK => {
            0.5 * sq_dist(y, &primal.dot(&s.x)) + prm.omega * primal.sum() + 0.5 * prm.mu * sq_norm(primal)
        }
        SurrogateKind::FroJensenX => 0.5 * sq_dist(y, &s.k.dot(primal)),
        SurrogateKind::FroJensenK => 0.5 * sq_dist(y, &primal.dot(&s.x)),
        SurrogateKind::KlJensenX(_) | SurrogateKind::KlLqbpX => kl_unchecked(y, &s.k.dot(primal)),
        SurrogateKind::KlJensenK => kl_unchecked(y, &primal.dot(&s.x)),
        SurrogateKind::TvK => tv_penalty(primal, ctx.grid()?, &prm.psi_for(s.rank()), prm.eps_tv)?,
        SurrogateKind::OrthX => orth_x_target(prm, primal, &s.w),
        SurrogateKind::OrthW => orth_x_target(prm, &s.x, primal),
        SurrogateKind::OrthK => orth_k_target(prm, primal, &s.v),
        SurrogateKind::OrthV => orth_k_target(prm, &s.k, primal),
        SurrogateKind::RegressionX => 0.5 * regression_residual(y, primal, &s.beta, ctx.labels()?),
        SurrogateKind::RegressionBeta => {
            0.5 * regression_residual(y, &s.x, &primal.column(0).to_owned(), ctx.labels()?)
        }
    })
}

fn orth_x_target(prm: &HyperParams, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
    0.5 * prm.sigma_x1 * identity_gap(&x.dot(&w.t())) + 0.5 * prm.sigma_x2 * sq_dist(w, x)
}

fn orth_k_target(prm: &HyperParams, k: &Array2<f64>, v: &Array2<f64>) -> f64 {
    0.5 * prm.sigma_k1 * identity_gap(&v.t().dot(k)) + 0.5 * prm.sigma_k2 * sq_dist(v, k)
}

/// KL Jensen bound of `KL(Y, BZ)` in `Z` at anchor `A`, in the requested
/// algebraic form.
fn kl_jensen_value(y: &Array2<f64>, b: &Array2<f64>, z: &Array2<f64>, a: &Array2<f64>, variant: KlVariant) -> f64 {
    let ba = b.dot(a);
    let bz = b.dot(z);
    let p = a.nrows();
    let mut total = 0.0;
    for ((i, j), &s) in ba.indexed_iter() {
        let yij = y[[i, j]];
        let weighted = |f: &dyn Fn(f64) -> f64| -> f64 {
            let mut acc = 0.0;
            for k in 0..p {
                let w = b[[i, k]] * a[[k, j]];
                if w != 0.0 {
                    acc += w * f(z[[k, j]] / a[[k, j]] * s);
                }
            }
            acc / s
        };
        total += match variant {
            KlVariant::One => {
                let log_term = if yij == 0.0 { 0.0 } else { yij * weighted(&|t| t.ln()) };
                xlogx(yij) - yij + bz[[i, j]] - log_term
            }
            KlVariant::Two => weighted(&|t| {
                let ylog = if yij == 0.0 { 0.0 } else { yij * (yij / t).ln() };
                ylog - yij + t
            }),
            KlVariant::Three => xlogx(yij) - yij + weighted(&|t| if yij == 0.0 { t } else { t - yij * t.ln() }),
        };
    }
    total
}

/// Gradient of the KL Jensen bound in `Z`: `Bᵀ1 − A/Z ∘ Bᵀ(Y / BA)`.
fn kl_jensen_gradient(y: &Array2<f64>, b: &Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
    let ratio = b.t().dot(&(y / &b.dot(a)));
    let col = b.sum_axis(Axis(0)).insert_axis(Axis(1));
    &col - &(a / z * &ratio)
}

fn regression_x_value(y: &Array2<f64>, u: &Array1<f64>, beta: &Array1<f64>, z: &Array2<f64>, a: &Array2<f64>) -> f64 {
    let s = y.dot(&a.t().dot(beta));
    let (p, m) = a.dim();
    let mut total = 0.0;
    for (i, &si) in s.iter().enumerate() {
        if si == 0.0 {
            total += 0.5 * u[i] * u[i];
            continue;
        }
        let mut acc = 0.0;
        for j in 0..m {
            for k in 0..p {
                let w = y[[i, j]] * a[[k, j]] * beta[k];
                if w != 0.0 {
                    acc += w * (u[i] - z[[k, j]] / a[[k, j]] * si).powi(2);
                }
            }
        }
        total += 0.5 * acc / si;
    }
    total
}

fn regression_x_gradient(
    y: &Array2<f64>,
    u: &Array1<f64>,
    beta: &Array1<f64>,
    z: &Array2<f64>,
    a: &Array2<f64>,
) -> Array2<f64> {
    let yty_ab = y.t().dot(&y.dot(&a.t().dot(beta)));
    let ytu = y.t().dot(u);
    Array2::from_shape_fn(z.dim(), |(k, j)| beta[k] * (z[[k, j]] / a[[k, j]] * yty_ab[j] - ytu[j]))
}

fn identity(p: usize) -> Array2<f64> {
    Array2::eye(p)
}

/// `Q(primal, anchor)` for the surrogate named by `kind`.
pub fn eval_surrogate(
    kind: SurrogateKind,
    primal: &Array2<f64>,
    anchor: &Array2<f64>,
    ctx: &SurrogateContext,
) -> Result<f64> {
    ctx.check(kind, primal)?;
    check_anchor(kind, primal, anchor)?;
    let s = ctx.state;
    let y = ctx.y;
    let prm = ctx.params;
    let p = s.rank();
    Ok(match kind {
        SurrogateKind::FroLqbpX => {
            let (g, lam) = fro_lqbp_x_parts(y, &s.k, anchor, prm);
            lqbp_value(surrogate_target(kind, anchor, ctx)?, &g, &lam, primal, anchor)
        }
        SurrogateKind::FroLqbpK => {
            let (g, lam) = fro_lqbp_k_parts(y, &s.x, anchor, prm);
            lqbp_value(surrogate_target(kind, anchor, ctx)?, &g, &lam, primal, anchor)
        }
        SurrogateKind::KlLqbpX => {
            let (g, lam) = kl_lqbp_x_parts(y, &s.k, anchor);
            lqbp_value(surrogate_target(kind, anchor, ctx)?, &g, &lam, primal, anchor)
        }
        SurrogateKind::FroJensenX => jensen_ls_value(&s.k, y, primal, anchor),
        SurrogateKind::FroJensenK => {
            jensen_ls_value(&transpose(&s.x), &transpose(y), &transpose(primal), &transpose(anchor))
        }
        SurrogateKind::KlJensenX(variant) => kl_jensen_value(y, &s.k, primal, anchor, variant),
        SurrogateKind::KlJensenK => kl_jensen_value(
            &transpose(y),
            &transpose(&s.x),
            &transpose(primal),
            &transpose(anchor),
            KlVariant::One,
        ),
        SurrogateKind::TvK => tv_surrogate_value(primal, anchor, ctx.grid()?, &prm.psi_for(p), prm.eps_tv)?,
        SurrogateKind::OrthX => {
            prm.sigma_x1 * jensen_ls_value(&s.w, &identity(p), &transpose(primal), &transpose(anchor))
                + 0.5 * prm.sigma_x2 * sq_dist(&s.w, primal)
        }
        SurrogateKind::OrthW => {
            prm.sigma_x1 * jensen_ls_value(&s.x, &identity(p), &transpose(primal), &transpose(anchor))
                + 0.5 * prm.sigma_x2 * sq_dist(&s.x, primal)
        }
        SurrogateKind::OrthK => {
            prm.sigma_k1 * jensen_ls_value(&transpose(&s.v), &identity(p), primal, anchor)
                + 0.5 * prm.sigma_k2 * sq_dist(&s.v, primal)
        }
        SurrogateKind::OrthV => {
            prm.sigma_k1 * jensen_ls_value(&transpose(&s.k), &identity(p), primal, anchor)
                + 0.5 * prm.sigma_k2 * sq_dist(&s.k, primal)
        }
        SurrogateKind::RegressionX => regression_x_value(y, ctx.labels()?, &s.beta, primal, anchor),
        SurrogateKind::RegressionBeta => {
            let u = ctx.labels()?.clone().insert_axis(Axis(1));
            jensen_ls_value(&y.dot(&s.x.t()), &u, primal, anchor)
        }
    })
}

/// `∂Q/∂primal` at `(primal, anchor)`.
pub fn surrogate_gradient(
    kind: SurrogateKind,
    primal: &Array2<f64>,
    anchor: &Array2<f64>,
    ctx: &SurrogateContext,
) -> Result<Array2<f64>> {
    ctx.check(kind, primal)?;
    check_anchor(kind, primal, anchor)?;
    let s = ctx.state;
    let y = ctx.y;
    let prm = ctx.params;
    let p = s.rank();
    let lqbp_grad = |g: Array2<f64>, lam: Array2<f64>| g + &(lam * &(primal - anchor));
    Ok(match kind {
        SurrogateKind::FroLqbpX => {
            let (g, lam) = fro_lqbp_x_parts(y, &s.k, anchor, prm);
            lqbp_grad(g, lam)
        }
        SurrogateKind::FroLqbpK => {
            let (g, lam) = fro_lqbp_k_parts(y, &s.x, anchor, prm);
            lqbp_grad(g, lam)
        }
        SurrogateKind::KlLqbpX => {
            let (g, lam) = kl_lqbp_x_parts(y, &s.k, anchor);
            lqbp_grad(g, lam)
        }
        SurrogateKind::FroJensenX => jensen_ls_gradient(&s.k, y, primal, anchor),
        SurrogateKind::FroJensenK => transpose(&jensen_ls_gradient(
            &transpose(&s.x),
            &transpose(y),
            &transpose(primal),
            &transpose(anchor),
        )),
        SurrogateKind::KlJensenX(_) => kl_jensen_gradient(y, &s.k, primal, anchor),
        SurrogateKind::KlJensenK => transpose(&kl_jensen_gradient(
            &transpose(y),
            &transpose(&s.x),
            &transpose(primal),
            &transpose(anchor),
        )),
        SurrogateKind::TvK => tv_surrogate_gradient(primal, anchor, ctx.grid()?, &prm.psi_for(p), prm.eps_tv)?,
        SurrogateKind::OrthX => {
            let g = transpose(&jensen_ls_gradient(
                &s.w,
                &identity(p),
                &transpose(primal),
                &transpose(anchor),
            ));
            g * prm.sigma_x1 + &((primal - &s.w) * prm.sigma_x2)
        }
        SurrogateKind::OrthW => {
            let g = transpose(&jensen_ls_gradient(
                &s.x,
                &identity(p),
                &transpose(primal),
                &transpose(anchor),
            ));
            g * prm.sigma_x1 + &((primal - &s.x) * prm.sigma_x2)
        }
        SurrogateKind::OrthK => {
            let g = jensen_ls_gradient(&transpose(&s.v), &identity(p), primal, anchor);
            g * prm.sigma_k1 + &((primal - &s.v) * prm.sigma_k2)
        }
        SurrogateKind::OrthV => {
            let g = jensen_ls_gradient(&transpose(&s.k), &identity(p), primal, anchor);
            g * prm.sigma_k1 + &((primal - &s.k) * prm.sigma_k2)
        }
        SurrogateKind::RegressionX => regression_x_gradient(y, ctx.labels()?, &s.beta, primal, anchor),
        SurrogateKind::RegressionBeta => {
            let u = ctx.labels()?.clone().insert_axis(Axis(1));
            jensen_ls_gradient(&y.dot(&s.x.t()), &u, primal, anchor)
        }
    })
}
