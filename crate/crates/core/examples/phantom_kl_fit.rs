//! Plain KL factorization of a noisy phantom, compared with the ground truth.

use nmf_mm::objective::discrepancy_value;
use nmf_mm::prelude::*;

fn main() -> Result<()> {
    let spec = PhantomSpec {
        noise_level: 0.01,
        seed: 4,
        ..Default::default()
    };
    let phantom = make_phantom(&spec)?;
    let y = phantom.y.as_array();
    let grid = build_grid(spec.width, spec.height)?;
    let init = init_factors(y.nrows(), y.ncols(), spec.rank, 0, 1.0)?;
    let config = SolverConfig {
        max_iter: 300,
        ..Default::default()
    };

    let (state, trace) = fit(y, &config, &HyperParams::default(), &grid, None, init)?;
    for rec in trace.records.iter().filter(|r| r.iter % 50 == 0) {
        println!("iteration {:4}: KL {:.6e}", rec.iter, rec.cost.discrepancy);
    }
    println!(
        "{:?} after {} sweeps",
        trace.termination,
        trace.last().map_or(0, |r| r.iter)
    );

    let truth = discrepancy_value(y, &phantom.k_true.dot(&phantom.x_true), Discrepancy::Kl);
    println!("KL of the generating factors: {truth:.6e}");

    // Each recovered channel should line up with one true spatial block.
    for c in 0..spec.rank {
        let col = state.k.column(c);
        let best = (0..spec.rank)
            .map(|t| {
                let tc = phantom.k_true.column(t);
                (t, col.dot(&tc) / (col.dot(&col).sqrt() * tc.dot(&tc).sqrt()))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("rank is positive");
        println!("channel {c} matches block {} with cosine {:.4}", best.0, best.1);
    }
    Ok(())
}
