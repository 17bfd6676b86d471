//! Kullback-Leibler divergence between a table and a model, in nats.
//!
//! Terms with `F = 0` contribute nothing (`0 ln 0 = 0`). A model that vanishes
//! where the table does not is reported as an error instead of `+inf`.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};

fn check_shape(f: &ArrayView2<f64>, p: &ArrayView2<f64>) -> Result<()> {
    if f.dim() != p.dim() {
        return Err(Error::ShapeMismatch {
            expected: f.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

fn first_support_violation(f: &ArrayView2<f64>, p: &ArrayView2<f64>) -> Option<(usize, usize)> {
    f.indexed_iter()
        .find(|&((i, k), &fv)| fv > 0.0 && !(p[[i, k]] > 0.0))
        .map(|(idx, _)| idx)
}

/// `K(F||P) = sum F ln(F/P)`.
pub fn kl_divergence(f: ArrayView2<f64>, p: ArrayView2<f64>) -> Result<f64> {
    check_shape(&f, &p)?;
    if let Some((row, col)) = first_support_violation(&f, &p) {
        return Err(Error::SupportMismatch { row, col });
    }
    let mut k = 0.0;
    Zip::from(&f).and(&p).for_each(|&fv, &pv| {
        if fv > 0.0 {
            k += fv * (fv / pv).ln();
        }
    });
    Ok(k)
}

/// Ratio matrix `R = F/P` (zero off the support of `F`) together with `K(F||P)`.
///
/// Every EM step in this crate starts from this pair.
pub(crate) fn ratio_and_kl(f: ArrayView2<f64>, p: ArrayView2<f64>) -> Result<(Array2<f64>, f64)> {
    check_shape(&f, &p)?;
    if let Some((row, col)) = first_support_violation(&f, &p) {
        return Err(Error::SupportMismatch { row, col });
    }
    let mut k = 0.0;
    let r = Zip::from(&f).and(&p).map_collect(|&fv, &pv| {
        if fv > 0.0 {
            let q = fv / pv;
            k += fv * q.ln();
            q
        } else {
            0.0
        }
    });
    Ok((r, k))
}
