//! Normalized contingency tables and the primitives every fitter relies on.

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis as NdAxis};

use crate::divergence;
use crate::error::{Axis, Error, Result};
use crate::linalg;

/// Absolute tolerance on the smallest eigenvalue for positive semi-definiteness.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Absolute tolerance on `|F_ij - F_ji|` for a table to count as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Grand totals within this distance of one are left untouched by
/// [`ContingencyTable::normalize`], which makes normalization idempotent.
const UNIT_TOTAL_SLACK: f64 = 1e-13;

/// A non-negative `n x p` table of relative frequencies summing to one, with
/// cached margins. Square tables double as weighted (directed) networks.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    values: Array2<f64>,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
    row_margins: Array1<f64>,
    col_margins: Array1<f64>,
}

/// Largest diagonal inflation factors keeping the inflated table non-negative
/// and positive semi-definite, respectively. Either may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaBounds {
    pub nonneg: f64,
    pub psd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    /// Smallest eigenvalue of the table, or of its symmetrized version when
    /// the table is not symmetric.
    pub min_eigenvalue: f64,
    /// Symmetric with `min_eigenvalue >= -PSD_TOLERANCE`. Always false for
    /// asymmetric input.
    pub is_diffusive: bool,
    pub is_symmetric: bool,
    /// `max_i |F(i,.) - F(.,i)|`
    pub mh_deviation: f64,
}

pub(crate) fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, k)| a[i] * b[k])
}

impl ContingencyTable {
    /// Builds a table from raw non-negative counts by dividing by their total.
    pub fn normalize(raw: ArrayView2<f64>) -> Result<Self> {
        let (n, p) = raw.dim();
        if n == 0 || p == 0 {
            return Err(Error::EmptyTable);
        }
        for ((row, col), &v) in raw.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row, col });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry { row, col, value: v });
            }
        }
        let total: f64 = raw.sum();
        if !(total > 0.0) {
            return Err(Error::ZeroTable);
        }
        for (index, line) in raw.axis_iter(NdAxis(0)).enumerate() {
            if line.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroLine {
                    axis: Axis::Row,
                    index,
                });
            }
        }
        for (index, line) in raw.axis_iter(NdAxis(1)).enumerate() {
            if line.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroLine {
                    axis: Axis::Column,
                    index,
                });
            }
        }
        let values = if (total - 1.0).abs() <= UNIT_TOTAL_SLACK {
            raw.to_owned()
        } else {
            raw.mapv(|v| v / total)
        };
        Ok(Self::from_normalized(values))
    }

    /// Wraps values already known to be a valid normalized table.
    pub(crate) fn from_normalized(values: Array2<f64>) -> Self {
        let row_margins = values.sum_axis(NdAxis(1));
        let col_margins = values.sum_axis(NdAxis(0));
        Self {
            values,
            row_labels: None,
            col_labels: None,
            row_margins,
            col_margins,
        }
    }

    pub fn with_labels(
        mut self,
        row_labels: Option<Vec<String>>,
        col_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(labels) = &row_labels {
            if labels.len() != self.nrows() {
                return Err(Error::LabelCount {
                    axis: Axis::Row,
                    expected: self.nrows(),
                    found: labels.len(),
                });
            }
        }
        if let Some(labels) = &col_labels {
            if labels.len() != self.ncols() {
                return Err(Error::LabelCount {
                    axis: Axis::Column,
                    expected: self.ncols(),
                    found: labels.len(),
                });
            }
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    /// `f_row(i) = F(i, .)`
    pub fn row_margins(&self) -> ArrayView1<'_, f64> {
        self.row_margins.view()
    }

    /// `f_col(k) = F(., k)`
    pub fn col_margins(&self) -> ArrayView1<'_, f64> {
        self.col_margins.view()
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    /// Row label, falling back to the zero-based index.
    pub fn row_label(&self, i: usize) -> String {
        self.row_labels
            .as_ref()
            .map_or_else(|| i.to_string(), |l| l[i].clone())
    }

    pub fn col_label(&self, k: usize) -> String {
        self.col_labels
            .as_ref()
            .map_or_else(|| k.to_string(), |l| l[k].clone())
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.t().to_owned(),
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            row_margins: self.col_margins.clone(),
            col_margins: self.row_margins.clone(),
        }
    }

    /// Independence model `f_row f_col'`.
    pub fn independence(&self) -> Array2<f64> {
        outer(self.row_margins.view(), self.col_margins.view())
    }

    pub fn kl_divergence(&self, model: ArrayView2<f64>) -> Result<f64> {
        divergence::kl_divergence(self.values.view(), model)
    }

    /// `I(X:Y) = K(F || f_row f_col')`, in nats.
    pub fn mutual_information(&self) -> f64 {
        self.kl_divergence(self.independence().view())
            .expect("independence model covers the support of a valid table")
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            })
        }
    }

    /// `max |F_ij - F_ji|`; errors on non-square tables.
    pub fn max_asymmetry(&self) -> Result<f64> {
        self.require_square()?;
        let n = self.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.values[[i, j]] - self.values[[j, i]]).abs());
            }
        }
        Ok(worst)
    }

    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry()
            .is_ok_and(|a| a <= SYMMETRY_TOLERANCE)
    }

    fn require_symmetric(&self) -> Result<()> {
        let max_asymmetry = self.max_asymmetry()?;
        if max_asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric { max_asymmetry });
        }
        Ok(())
    }

    /// Marginal homogeneity deviation `max_i |F(i,.) - F(.,i)|`.
    pub fn mh_deviation(&self) -> Result<f64> {
        self.require_square()?;
        Ok(self
            .row_margins
            .iter()
            .zip(self.col_margins.iter())
            .fold(0.0f64, |acc, (r, c)| acc.max((r - c).abs())))
    }

    /// `(F + F') / 2`
    pub fn symmetrize(&self) -> Result<Self> {
        self.require_square()?;
        let values = (&self.values + &self.values.t()) * 0.5;
        let mut table = Self::from_normalized(values);
        table.row_labels = self.row_labels.clone();
        table.col_labels = self.row_labels.clone();
        Ok(table)
    }

    /// Vertex weights of a symmetric table.
    pub fn vertex_weights(&self) -> ArrayView1<'_, f64> {
        self.row_margins.view()
    }

    /// Values of `lambda F + (1 - lambda) diag(f)`.
    fn inflated_values(&self, lambda: f64) -> Array2<f64> {
        let mut out = self.values.mapv(|v| lambda * v);
        for (i, &f) in self.row_margins.iter().enumerate() {
            out[[i, i]] = lambda * self.values[[i, i]] + (1.0 - lambda) * f;
        }
        out
    }

    /// Diagonal inflation `F~ = lambda F + (1 - lambda) diag(f)` of a symmetric
    /// table. Vertex weights are unchanged and off-diagonal flow is multiplied
    /// by `lambda`. Going past the positive semi-definite bound only warns.
    pub fn diagonal_inflation(&self, lambda: f64) -> Result<Self> {
        self.require_symmetric()?;
        let bounds = self.lambda_bounds()?;
        if !(lambda >= 1.0) || lambda > bounds.nonneg * (1.0 + 1e-12) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                max: bounds.nonneg,
            });
        }
        if lambda > bounds.psd {
            warn!(
                "lambda {lambda} exceeds the positive semi-definite bound {}",
                bounds.psd
            );
        }
        let mut values = self.inflated_values(lambda);
        for i in 0..values.nrows() {
            // rounding at lambda == nonneg bound
            if values[[i, i]] < 0.0 {
                values[[i, i]] = 0.0;
            }
        }
        let mut table = Self::from_normalized(values);
        table.row_labels = self.row_labels.clone();
        table.col_labels = self.col_labels.clone();
        Ok(table)
    }

    /// Non-negativity and positive semi-definiteness bounds on the diagonal
    /// inflation factor. The second is found by bisection on the smallest
    /// eigenvalue, which is concave in `lambda`.
    pub fn lambda_bounds(&self) -> Result<LambdaBounds> {
        self.require_symmetric()?;
        let n = self.nrows();
        let mut nonneg = f64::INFINITY;
        for i in 0..n {
            let off: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| self.values[[i, j]])
                .sum();
            if off > 0.0 {
                nonneg = nonneg.min(self.row_margins[i] / off);
            }
        }
        // f_i >= off-diagonal mass, so the bound is at least one up to rounding
        let nonneg = nonneg.max(1.0);
        Ok(LambdaBounds {
            nonneg,
            psd: self.psd_bound(),
        })
    }

    fn psd_bound(&self) -> f64 {
        let n = self.nrows();
        // Laplacian of the off-diagonal flow: F~(lambda) = diag(f) - lambda L.
        let mut laplacian = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    laplacian[[i, j]] = -self.values[[i, j]];
                    laplacian[[i, i]] += self.values[[i, j]];
                }
            }
        }
        let mu = linalg::max_symmetric_eigenvalue(laplacian.view());
        if !(mu > 0.0) {
            return f64::INFINITY;
        }
        let feasible =
            |lambda: f64| linalg::min_symmetric_eigenvalue(self.inflated_values(lambda).view()) >= -PSD_TOLERANCE;
        let fmax = self.row_margins.iter().copied().fold(0.0, f64::max);
        let mut lo = 0.0;
        let mut hi = 2.0 * (fmax + PSD_TOLERANCE) / mu;
        while feasible(hi) {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Eigenvalue and marginal homogeneity diagnostics of a square table.
    pub fn spectral_report(&self) -> Result<SpectralReport> {
        let max_asymmetry = self.max_asymmetry()?;
        let is_symmetric = max_asymmetry <= SYMMETRY_TOLERANCE;
        let min_eigenvalue = if is_symmetric {
            linalg::min_symmetric_eigenvalue(self.values.view())
        } else {
            let sym = (&self.values + &self.values.t()) * 0.5;
            linalg::min_symmetric_eigenvalue(sym.view())
        };
        Ok(SpectralReport {
            min_eigenvalue,
            is_diffusive: is_symmetric && min_eigenvalue >= -PSD_TOLERANCE,
            is_symmetric,
            mh_deviation: self.mh_deviation()?,
        })
    }

    /// Number of singular values above `1e-10` times the largest.
    pub fn rank_estimate(&self) -> usize {
        let sv = linalg::singular_values(self.values.view());
        let cutoff = sv[0] * 1e-10;
        sv.iter().filter(|&&s| s > cutoff).count()
    }
}
