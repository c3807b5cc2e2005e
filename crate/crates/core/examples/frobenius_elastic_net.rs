//! Frobenius factorization with elastic-net penalties: the l1 weights drive
//! factor entries toward zero.

use nmf_mm::prelude::*;

fn main() -> Result<()> {
    let spec = PhantomSpec {
        noise_level: 0.02,
        seed: 9,
        ..Default::default()
    };
    let phantom = make_phantom(&spec)?;
    let y = phantom.y.as_array();
    let grid = build_grid(spec.width, spec.height)?;
    let config = SolverConfig {
        discrepancy: Discrepancy::Frobenius,
        max_iter: 400,
        ..Default::default()
    };

    println!(
        "{:>8} {:>8} {:>14} {:>10} {:>10}",
        "lambda", "omega", "0.5|Y-KX|^2", "small X", "small K"
    );
    for l1 in [0.0, 0.5, 2.0, 8.0] {
        let params = HyperParams {
            lambda: l1,
            omega: l1,
            nu: 0.01,
            mu: 0.01,
            beta_divergence_index: 2.0,
            ..Default::default()
        };
        let init = init_factors(y.nrows(), y.ncols(), spec.rank, 0, 1.0)?;
        let (state, trace) = fit(y, &config, &params, &grid, None, init)?;
        let last = trace.last().expect("trace is never empty");
        let frac = |m: &ndarray::Array2<f64>| m.iter().filter(|v| **v < 1e-3).count() as f64 / m.len() as f64;
        println!(
            "{l1:8.2} {l1:8.2} {:14.6e} {:10.3} {:10.3}",
            last.cost.discrepancy,
            frac(&state.x),
            frac(&state.k)
        );
    }
    Ok(())
}
