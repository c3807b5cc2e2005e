//! Supervised factorization on part of a phantom, then a threshold
//! classifier scored on the remaining pixels.

use ndarray::Axis;
use nmf_mm::prelude::*;

fn main() -> Result<()> {
    let spec = PhantomSpec {
        noise_level: 0.02,
        seed: 1,
        ..Default::default()
    };
    let phantom = make_phantom(&spec)?;
    let y = phantom.y.as_array();
    let u = phantom.labels.as_array();

    let train: Vec<usize> = (0..y.nrows()).filter(|i| i % 4 != 0).collect();
    let held: Vec<usize> = (0..y.nrows()).filter(|i| i % 4 == 0).collect();
    let y_train = y.select(Axis(0), &train);
    let labels = Labels::new(u.select(Axis(0), &train))?;

    let params = HyperParams {
        rho: 0.5,
        ..Default::default()
    };
    let grid = PixelGrid::chain(train.len())?;
    let init = init_factors(train.len(), y.ncols(), spec.rank, 0, 1.0)?;
    let (state, trace) = fit(&y_train, &SolverConfig::default(), &params, &grid, Some(&labels), init)?;
    let last = trace.last().expect("trace is never empty");
    println!(
        "fit: {} sweeps, regression term {:.4e}",
        last.iter, last.cost.regression
    );
    println!("beta = {:.4}", state.beta);

    let (clf, train_acc) = build_classifier(&state.x, &state.beta, &y_train, &labels)?;
    println!("threshold {:.5}, training accuracy {train_acc:.3}", clf.threshold);

    let y_held = y.select(Axis(0), &held);
    let hits = clf
        .predict_all(&y_held)?
        .iter()
        .zip(&held)
        .filter(|((_, label), i)| f64::from(*label) == u[**i])
        .count();
    println!(
        "held-out accuracy {:.3} on {} pixels",
        hits as f64 / held.len() as f64,
        held.len()
    );
    Ok(())
}
