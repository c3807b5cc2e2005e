//! The β-divergence family for scalars and matrices.
//!
//! `d_β(x, y)` measures the discrepancy between a data value `x` and a model
//! value `y`. β = 2 is half the squared Euclidean distance, β = 1 is the
//! generalized Kullback-Leibler divergence and β = 0 is Itakura-Saito.

use ndarray::{Array2, Zip};

use crate::error::{check_shape, NmfError, Result};

/// Index of the β-divergence. Any real is accepted for evaluation; the
/// solver only understands 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaIndex(pub f64);

impl BetaIndex {
    pub const ITAKURA_SAITO: BetaIndex = BetaIndex(0.0);
    pub const KULLBACK_LEIBLER: BetaIndex = BetaIndex(1.0);
    pub const FROBENIUS: BetaIndex = BetaIndex(2.0);
}

impl From<f64> for BetaIndex {
    fn from(beta: f64) -> Self {
        BetaIndex(beta)
    }
}

/// `x ln(x/y) − x + y` for data `x` and model `y`, evaluated through
/// `ln_1p` when the ratio is near 1 so that nearly equal arguments keep
/// full relative precision.
fn kl_entry(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        return y;
    }
    let r = x / y;
    if (r - 1.0).abs() < 0.5 {
        let t = r - 1.0;
        // x ln r − x + y = y (r ln r − r + 1) = y ((1+t) ln(1+t) − t)
        y * ((1.0 + t) * t.ln_1p() - t)
    } else {
        x * r.ln() - x + y
    }
}

fn is_entry(x: f64, y: f64) -> f64 {
    let r = x / y;
    let t = r - 1.0;
    // r − ln r − 1 = t − ln(1+t)
    t - t.ln_1p()
}

fn generic_entry(x: f64, y: f64, beta: f64) -> f64 {
    x.powf(beta) / (beta * (beta - 1.0)) + y.powf(beta) / beta - x * y.powf(beta - 1.0) / (beta - 1.0)
}

/// Entry-level divergence without argument checks. Zero data entries are
/// allowed for β = 1 (`0·ln 0 = 0`) and β = 2.
fn entry(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 2.0 {
        let d = x - y;
        0.5 * d * d
    } else if beta == 1.0 {
        kl_entry(x, y)
    } else if beta == 0.0 {
        is_entry(x, y)
    } else {
        generic_entry(x, y, beta)
    }
}

/// `d_β(x, y)` for strictly positive `x`, `y`. Exactly 0 when `x == y`.
pub fn beta_divergence_scalar(x: f64, y: f64, beta: impl Into<BetaIndex>) -> Result<f64> {
    let beta = beta.into().0;
    if !(x > 0.0 && y > 0.0) {
        return Err(NmfError::Domain(format!(
            "beta divergence needs positive arguments, got x={x}, y={y}"
        )));
    }
    if x == y {
        return Ok(0.0);
    }
    Ok(entry(x, y, beta))
}

/// `D_β(M, N) = Σ_ij d_β(M_ij, N_ij)`.
///
/// `N` must be strictly positive. Entries of `M` must be positive as well,
/// except that zeros are accepted for β = 1 (contributing `N_ij`) and for
/// β = 2.
pub fn beta_divergence_matrix(m: &Array2<f64>, n: &Array2<f64>, beta: impl Into<BetaIndex>) -> Result<f64> {
    let beta = beta.into().0;
    check_shape("divergence arguments", n.dim(), m.dim())?;
    let zero_ok = beta == 1.0 || beta == 2.0;
    let mut total = 0.0;
    let mut bad = None;
    Zip::indexed(m).and(n).for_each(|idx, &x, &y| {
        if bad.is_some() {
            return;
        }
        let x_ok = x > 0.0 || (zero_ok && x == 0.0);
        let y_ok = y > 0.0 || (beta == 2.0 && y == 0.0);
        if !(x_ok && y_ok) {
            bad = Some((idx, x, y));
            return;
        }
        if x != y {
            total += entry(x, y, beta);
        }
    });
    if let Some(((i, j), x, y)) = bad {
        return Err(NmfError::Domain(format!(
            "beta divergence undefined at ({i},{j}): data {x}, model {y}"
        )));
    }
    Ok(total)
}

/// Generalized Kullback-Leibler divergence `Σ M ln(M/N) − M + N`.
pub fn kl_divergence(m: &Array2<f64>, n: &Array2<f64>) -> Result<f64> {
    beta_divergence_matrix(m, n, BetaIndex::KULLBACK_LEIBLER)
}

/// `½‖M − N‖²_F`, the β = 2 member of the family.
pub fn frobenius_half_sq(m: &Array2<f64>, n: &Array2<f64>) -> Result<f64> {
    check_shape("divergence arguments", n.dim(), m.dim())?;
    Ok(0.5 * Zip::from(m).and(n).fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y)))
}

/// KL divergence that skips argument checks; `n` is assumed positive.
pub(crate) fn kl_unchecked(m: &Array2<f64>, n: &Array2<f64>) -> f64 {
    Zip::from(m)
        .and(n)
        .fold(0.0, |acc, &x, &y| if x == y { acc } else { acc + kl_entry(x, y) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn scalar_reference_values() {
        assert!(close(beta_divergence_scalar(3.0, 1.0, 2.0).unwrap(), 2.0, 1e-15));
        let ln2 = std::f64::consts::LN_2;
        assert!(close(
            beta_divergence_scalar(2.0, 1.0, 1.0).unwrap(),
            2.0 * ln2 - 1.0,
            1e-15
        ));
        assert!(close(beta_divergence_scalar(2.0, 1.0, 0.0).unwrap(), 1.0 - ln2, 1e-15));
        // β = 3: 8/6 + 1/3 − 2/2
        assert!(close(
            beta_divergence_scalar(2.0, 1.0, 3.0).unwrap(),
            8.0 / 6.0 + 1.0 / 3.0 - 1.0,
            1e-15
        ));
    }

    #[test]
    fn scalar_is_zero_on_diagonal() {
        for beta in [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            for x in [1e-3, 0.7, 1.0, 42.0] {
                assert_eq!(beta_divergence_scalar(x, x, beta).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn scalar_rejects_non_positive() {
        assert!(beta_divergence_scalar(0.0, 1.0, 1.0).is_err());
        assert!(beta_divergence_scalar(1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn matrix_reference_values() {
        let ln2 = std::f64::consts::LN_2;
        let d = beta_divergence_matrix(&array![[2.0]], &array![[1.0]], 1.0).unwrap();
        assert!(close(d, 2.0 * ln2 - 1.0, 1e-15));
        let d = kl_divergence(&array![[2.0, 1.0]], &array![[1.0, 1.0]]).unwrap();
        assert!(close(d, 2.0 * ln2 - 1.0, 1e-15));
        let m = array![[0.3, 1.2], [4.0, 0.01]];
        for beta in [0.0, 1.0, 2.0, 2.5] {
            assert_eq!(beta_divergence_matrix(&m, &m, beta).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_data_entries_under_kl_contribute_model_value() {
        let d = kl_divergence(&array![[0.0, 1.0]], &array![[0.25, 1.0]]).unwrap();
        assert_eq!(d, 0.25);
        assert!(beta_divergence_matrix(&array![[0.0]], &array![[1.0]], 0.0).is_err());
        assert!(kl_divergence(&array![[1.0]], &array![[0.0]]).is_err());
    }

    #[test]
    fn matrix_shape_mismatch_is_error() {
        assert!(kl_divergence(&Array2::ones((2, 2)), &Array2::ones((2, 3))).is_err());
    }

    #[test]
    fn kl_stays_accurate_near_the_diagonal() {
        // x ln(x/y) − x + y ≈ (x−y)²/(2y) for x ≈ y
        let y = 3.0;
        let x = y * (1.0 + 1e-7);
        let d = beta_divergence_scalar(x, y, 1.0).unwrap();
        let approx = (x - y) * (x - y) / (2.0 * y);
        assert!((d - approx).abs() <= 1e-6 * approx, "{d} vs {approx}");
    }

    proptest! {
        #[test]
        fn non_negative(x in 1e-3f64..1e3, y in 1e-3f64..1e3,
                        beta in prop::sample::select(vec![-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0])) {
            let scale = x.powf(beta) + y.powf(beta) + 1.0;
            prop_assert!(beta_divergence_scalar(x, y, beta).unwrap() >= -1e-12 * scale);
        }

        #[test]
        fn zero_only_on_diagonal(a in 1u32..40, b in 1u32..40, beta in prop::sample::select(vec![0.0, 1.0, 2.0, 0.5])) {
            let (x, y) = (a as f64 * 0.25, b as f64 * 0.25);
            let d = beta_divergence_scalar(x, y, beta).unwrap();
            prop_assert_eq!(d < 1e-14, (x - y).abs() < 1e-9);
        }

        #[test]
        fn continuous_at_kl(x in 0.1f64..10.0, y in 0.1f64..10.0) {
            let d1 = beta_divergence_scalar(x, y, 1.0).unwrap();
            for beta in [1.0 - 1e-6, 1.0 + 1e-6] {
                let d = beta_divergence_scalar(x, y, beta).unwrap();
                prop_assert!((d - d1).abs() < 1e-4, "beta={} d={} d1={}", beta, d, d1);
            }
        }

        #[test]
        fn frobenius_member_is_half_squared_norm(v in prop::collection::vec(0.01f64..5.0, 18)) {
            let m = Array2::from_shape_vec((3, 3), v[..9].to_vec()).unwrap();
            let n = Array2::from_shape_vec((3, 3), v[9..].to_vec()).unwrap();
            let d2 = beta_divergence_matrix(&m, &n, 2.0).unwrap();
            let oracle = 0.5 * (&m - &n).mapv(|d| d * d).sum();
            prop_assert!((d2 - oracle).abs() <= 1e-12 * oracle.max(1e-300));
            prop_assert_eq!(frobenius_half_sq(&m, &n).unwrap(), d2);
        }

        #[test]
        fn kl_matches_textbook_formula(v in prop::collection::vec(0.01f64..5.0, 8)) {
            let m = Array2::from_shape_vec((2, 2), v[..4].to_vec()).unwrap();
            let n = Array2::from_shape_vec((2, 2), v[4..].to_vec()).unwrap();
            let oracle: f64 = m.iter().zip(n.iter()).map(|(&x, &y)| x * (x / y).ln() - x + y).sum();
            let d = kl_divergence(&m, &n).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!((d - oracle).abs() <= 1e-12 * (1.0 + oracle));
        }
    }
}
