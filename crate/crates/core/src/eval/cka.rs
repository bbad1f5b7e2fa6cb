//! Linear centered kernel alignment.
//!
//! Scores how similarly two feature matrices (rows = samples) arrange their
//! samples, invariant to orthogonal transforms and isotropic scaling of
//! either side. Used here on adversarial-minus-clean feature deviations to
//! ask whether two models shift their representations the same way under
//! the same attack.

use crate::classifier::Model;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fog::Image;

const DEGENERATE_FLOOR: f64 = 1e-12;

/// Subtracts each column's mean; rows are samples.
fn center_columns(m: &ScalarField) -> Vec<f64> {
    let (n, d) = (m.height(), m.width());
    let mut centered = m.values().to_vec();
    for col in 0..d {
        let mean = (0..n).map(|r| m.get(r, col)).sum::<f64>() / n as f64;
        for row in 0..n {
            centered[row * d + col] -= mean;
        }
    }
    centered
}

/// Frobenius norm squared of A^T B where A is n x da and B is n x db.
fn cross_gram_norm_sq(a: &[f64], da: usize, b: &[f64], db: usize, n: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..da {
        for j in 0..db {
            let mut dot = 0.0;
            for r in 0..n {
                dot += a[r * da + i] * b[r * db + j];
            }
            total += dot * dot;
        }
    }
    total
}

/// Linear CKA between two feature matrices with matching row counts.
/// Returns 0 when either side is degenerate (all-zero after centering).
pub fn linear_cka(x: &ScalarField, y: &ScalarField) -> Result<f64> {
    if x.height() != y.height() {
        return Err(Error::shape(
            format!("{} rows", x.height()),
            format!("{} rows", y.height()),
        ));
    }
    if x.height() < 2 {
        return Err(Error::invalid("CKA needs at least two samples"));
    }
    let (n, dx, dy) = (x.height(), x.width(), y.width());
    let xc = center_columns(x);
    let yc = center_columns(y);

    let cross = cross_gram_norm_sq(&yc, dy, &xc, dx, n);
    let self_x = cross_gram_norm_sq(&xc, dx, &xc, dx, n).sqrt();
    let self_y = cross_gram_norm_sq(&yc, dy, &yc, dy, n).sqrt();
    if self_x < DEGENERATE_FLOOR || self_y < DEGENERATE_FLOOR {
        return Ok(0.0);
    }
    Ok(cross / (self_x * self_y))
}

/// Builds per-model deviation matrices `features(adv) - features(clean)`
/// over an aligned batch and scores them with [`linear_cka`].
pub fn feature_deviation_cka(
    surrogate: &Model,
    target: &Model,
    clean: &[Image],
    adversarial: &[Image],
) -> Result<f64> {
    if clean.len() != adversarial.len() {
        return Err(Error::shape(
            format!("{} clean images", clean.len()),
            format!("{} adversarial images", adversarial.len()),
        ));
    }
    if clean.len() < 2 {
        return Err(Error::invalid(
            "feature-deviation CKA needs at least two aligned samples",
        ));
    }
    let deviations = |model: &Model| -> Result<ScalarField> {
        let dim = model.feature_dim();
        let mut rows = Vec::with_capacity(clean.len() * dim);
        for (c, a) in clean.iter().zip(adversarial) {
            let fc = model.features(c)?;
            let fa = model.features(a)?;
            rows.extend(fa.iter().zip(&fc).map(|(x, y)| x - y));
        }
        ScalarField::new(clean.len(), dim, rows)
    };
    linear_cka(&deviations(surrogate)?, &deviations(target)?)
}
