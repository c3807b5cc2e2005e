//! Evaluates every surrogate kind at a random (primal, anchor) pair and
//! prints the gap to its target and the tangency error.

use ndarray::Array2;
use nmf_mm::prelude::*;
use nmf_mm::surrogate::{eval_surrogate, surrogate_target, SurrogateContext, SurrogateKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = init_factors(12, 10, 3, 1, 1.0)?;
    let y = truth.k.dot(&truth.x);
    let state = init_factors(12, 10, 3, 2, 1.0)?;
    let params = HyperParams {
        lambda: 0.2,
        mu: 0.3,
        nu: 0.1,
        omega: 0.2,
        sigma_k1: 0.5,
        sigma_k2: 0.5,
        sigma_x1: 0.5,
        sigma_x2: 0.5,
        eps_tv: 1e-2,
        ..Default::default()
    };
    let grid = build_grid(4, 3)?;
    let labels = Labels::new((0..12).map(|i| f64::from(i < 6)).collect())?;
    let ctx = SurrogateContext {
        y: &y,
        state: &state,
        params: &params,
        grid: Some(&grid),
        labels: Some(&labels),
    };

    println!(
        "{:<16} {:>14} {:>14} {:>12}",
        "kind", "target", "Q - target", "tangency"
    );
    for kind in SurrogateKind::ALL {
        let shape = kind.primal().get(&state).dim();
        let x: Array2<f64> = Array2::from_shape_fn(shape, |_| rng.gen_range(0.1..2.0));
        let a: Array2<f64> = Array2::from_shape_fn(shape, |_| rng.gen_range(0.1..2.0));
        let f = surrogate_target(kind, &x, &ctx)?;
        let q = eval_surrogate(kind, &x, &a, &ctx)?;
        let touch = eval_surrogate(kind, &x, &x, &ctx)? - f;
        println!("{:<16} {f:14.6e} {:14.6e} {touch:12.2e}", kind.tag(), q - f);
    }
    Ok(())
}
