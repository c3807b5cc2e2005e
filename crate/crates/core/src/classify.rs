//! Linear threshold classifier on top of a supervised factorization.
//!
//! The characteristic spectrum `x* = Xᵀβ` scores a data row `y` as
//! `w = x*ᵀy`; the row is assigned class 1 iff `w > s`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{NmfError, Result};
use crate::model::Labels;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub x_star: Array1<f64>,
    pub threshold: f64,
}

impl LinearClassifier {
    /// Score and label of one data row.
    pub fn predict(&self, y: ArrayView1<f64>) -> Result<(f64, u8)> {
        if y.len() != self.x_star.len() {
            return Err(NmfError::Shape(format!(
                "row has {} channels, classifier expects {}",
                y.len(),
                self.x_star.len()
            )));
        }
        let score = self.x_star.dot(&y);
        Ok((score, u8::from(score > self.threshold)))
    }

    /// Scores of every row of `y`.
    pub fn scores(&self, y: &Array2<f64>) -> Result<Array1<f64>> {
        if y.ncols() != self.x_star.len() {
            return Err(NmfError::Shape(format!(
                "data has {} channels, classifier expects {}",
                y.ncols(),
                self.x_star.len()
            )));
        }
        Ok(y.dot(&self.x_star))
    }

    /// `(score, label)` for every row of `y`.
    pub fn predict_all(&self, y: &Array2<f64>) -> Result<Vec<(f64, u8)>> {
        Ok(self
            .scores(y)?
            .iter()
            .map(|&w| (w, u8::from(w > self.threshold)))
            .collect())
    }
}

/// Fraction of `scores` whose thresholded label matches `labels`.
pub fn accuracy(scores: &Array1<f64>, labels: &Array1<f64>, threshold: f64) -> f64 {
    if scores.is_empty() {
        return 1.0;
    }
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(w, u)| (**w > threshold) == (**u == 1.0))
        .count();
    hits as f64 / scores.len() as f64
}

/// A threshold strictly below every score, proportional to the scores so
/// that rescaling them rescales it.
fn below(min: f64, max: f64) -> f64 {
    if max > min {
        min - 0.5 * (max - min)
    } else if min != 0.0 {
        min - 0.5 * min.abs()
    } else {
        -1.0
    }
}

/// Threshold with the highest training accuracy, and that accuracy.
///
/// Candidates are a value below every score, the midpoints between adjacent
/// distinct sorted scores, and the largest score. Ties go to the smaller
/// threshold.
pub fn best_threshold(scores: &Array1<f64>, labels: &Array1<f64>) -> Result<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(NmfError::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(NmfError::Invalid(
            "cannot choose a threshold without training rows".into(),
        ));
    }
    if let Some(w) = scores.iter().find(|w| !w.is_finite()) {
        return Err(NmfError::Invalid(format!("non-finite training score {w}")));
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let ones = labels.iter().filter(|u| **u == 1.0).count();

    // With the lowest `t` sorted rows predicted 0, the hits are the zeros
    // among them plus the ones among the rest.
    let mut best_hits = ones;
    let mut best_s = below(scores[order[0]], scores[order[n - 1]]);
    let mut zeros_below = 0usize;
    let mut ones_below = 0usize;
    let mut t = 0;
    while t < n {
        let value = scores[order[t]];
        while t < n && scores[order[t]] == value {
            if labels[order[t]] == 1.0 {
                ones_below += 1;
            } else {
                zeros_below += 1;
            }
            t += 1;
        }
        let s = if t < n { 0.5 * (value + scores[order[t]]) } else { value };
        let hits = zeros_below + (ones - ones_below);
        if hits > best_hits {
            best_hits = hits;
            best_s = s;
        }
    }
    Ok((best_s, best_hits as f64 / n as f64))
}

/// Builds `x* = Xᵀβ` and picks the threshold maximizing training accuracy
/// on the rows of `y`. Returns the classifier and its training accuracy.
pub fn build_classifier(
    x: &Array2<f64>,
    beta: &Array1<f64>,
    y: &Array2<f64>,
    labels: &Labels,
) -> Result<(LinearClassifier, f64)> {
    if beta.len() != x.nrows() {
        return Err(NmfError::Shape(format!(
            "beta has length {}, X has {} rows",
            beta.len(),
            x.nrows()
        )));
    }
    if y.ncols() != x.ncols() {
        return Err(NmfError::Shape(format!(
            "data has {} channels, X has {}",
            y.ncols(),
            x.ncols()
        )));
    }
    let x_star = x.t().dot(beta);
    let scores = y.dot(&x_star);
    let (threshold, acc) = best_threshold(&scores, labels.as_array())?;
    Ok((LinearClassifier { x_star, threshold }, acc))
}
