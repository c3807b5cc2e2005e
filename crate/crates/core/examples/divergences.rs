//! The beta-divergence family on a few scalar and matrix pairs.

use ndarray::array;
use nmf_mm::divergence::frobenius_half_sq;
use nmf_mm::prelude::*;

fn main() -> Result<()> {
    println!(
        "{:>6} {:>6} {:>12} {:>12} {:>12}",
        "x", "y", "IS (0)", "KL (1)", "Fro (2)"
    );
    for (x, y) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (0.5, 4.0), (3.0, 0.5)] {
        println!(
            "{x:6.2} {y:6.2} {:12.6} {:12.6} {:12.6}",
            beta_divergence_scalar(x, y, BetaIndex::ITAKURA_SAITO)?,
            beta_divergence_scalar(x, y, BetaIndex::KULLBACK_LEIBLER)?,
            beta_divergence_scalar(x, y, BetaIndex::FROBENIUS)?,
        );
    }

    // The family is continuous in beta.
    for beta in [0.9, 0.99, 0.999, 1.0] {
        println!(
            "d_beta(2, 1) at beta = {beta}: {:.6}",
            beta_divergence_scalar(2.0, 1.0, beta)?
        );
    }

    // Zero data entries are allowed for KL and contribute the model value.
    let m = array![[1.0, 0.0], [2.0, 3.0]];
    let n = array![[1.5, 0.5], [2.0, 1.0]];
    println!("KL(M | N)       = {:.6}", kl_divergence(&m, &n)?);
    println!("0.5 |M - N|^2   = {:.6}", frobenius_half_sq(&m, &n)?);
    println!("D_1.5(N | M+1)  = {:.6}", beta_divergence_matrix(&n, &(&m + 1.0), 1.5)?);
    Ok(())
}
