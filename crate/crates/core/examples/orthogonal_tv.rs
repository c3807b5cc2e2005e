//! Orthogonality and total-variation penalties on K: how the spatial
//! channels change as the weights grow.

use ndarray::{Array2, Axis};
use nmf_mm::prelude::*;
use nmf_mm::tv::tv_penalty;

fn off_diagonal_mass(k: &Array2<f64>) -> f64 {
    let norms = k.map_axis(Axis(0), |c| c.dot(&c).sqrt());
    let kn = k / &norms;
    let g = kn.t().dot(&kn);
    g.sum() - g.diag().sum()
}

fn main() -> Result<()> {
    let spec = PhantomSpec {
        noise_level: 0.05,
        overlap: true,
        seed: 2,
        ..Default::default()
    };
    let phantom = make_phantom(&spec)?;
    let y = phantom.y.as_array();
    let grid = build_grid(spec.width, spec.height)?;
    let config = SolverConfig {
        max_iter: 300,
        ..Default::default()
    };

    println!(
        "{:>8} {:>8} {:>12} {:>12} {:>12}",
        "sigma", "tau", "KL", "offdiag", "TV(K)"
    );
    for (sigma, tau) in [(0.0, 0.0), (1.0, 0.0), (200.0, 0.0), (0.0, 0.5), (1.0, 0.5)] {
        let params = HyperParams {
            sigma_k1: sigma,
            sigma_k2: sigma,
            tau,
            eps_tv: 1e-3,
            ..Default::default()
        };
        let init = init_factors(y.nrows(), y.ncols(), spec.rank, 0, 1.0)?;
        let (state, trace) = fit(y, &config, &params, &grid, None, init)?;
        let last = trace.last().expect("trace is never empty");
        let tv = tv_penalty(&state.k, &grid, &params.psi_for(spec.rank), params.eps_tv)?;
        println!(
            "{sigma:8.1} {tau:8.2} {:12.5e} {:12.5} {:12.5}",
            last.cost.discrepancy,
            off_diagonal_mass(&state.k),
            tv
        );
    }
    Ok(())
}
