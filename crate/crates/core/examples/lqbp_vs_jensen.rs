//! The two KL X-updates side by side: Jensen (the classical multiplicative
//! rule) and the quadratic-bound rule.

use nmf_mm::prelude::*;

fn main() -> Result<()> {
    let spec = PhantomSpec {
        noise_level: 0.02,
        seed: 6,
        ..Default::default()
    };
    let phantom = make_phantom(&spec)?;
    let y = phantom.y.as_array();
    let grid = build_grid(spec.width, spec.height)?;
    let params = HyperParams::default();

    let mut curves = Vec::new();
    for rule in [KlXRule::Jensen, KlXRule::Lqbp] {
        let config = SolverConfig {
            kl_x_rule: rule,
            max_iter: 200,
            rel_tol: 0.0,
            ..Default::default()
        };
        let init = init_factors(y.nrows(), y.ncols(), spec.rank, 0, 1.0)?;
        let (_, trace) = fit(y, &config, &params, &grid, None, init)?;
        curves.push(trace.totals());
    }
    println!("{:>6} {:>14} {:>14}", "iter", "jensen", "lqbp");
    for it in [0, 1, 2, 5, 10, 20, 50, 100, 200] {
        println!("{it:6} {:14.6e} {:14.6e}", curves[0][it], curves[1][it]);
    }
    Ok(())
}
