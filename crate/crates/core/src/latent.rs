//! Latent class model `P_ik = sum_g rho_g a_i^g b_k^g` fitted by the
//! multiplicative EM iteration.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::divergence::ratio_and_kl;
use crate::em::{self, FitOptions, FitTrace, DEGENERATE_WEIGHT, INIT_SMOOTHING};
use crate::error::{Error, Result};
use crate::table::ContingencyTable;

const NORMALIZATION_SLACK: f64 = 1e-9;

/// Group weights `rho` (m), row emissions `A` (n x m) and column emissions
/// `B` (p x m). Columns of `A` and `B` are conditional distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    rho: Array1<f64>,
    a: Array2<f64>,
    b: Array2<f64>,
}

/// What a single EM cycle did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Correction factors `kappa_g = sum_jl a_j^g b_l^g F_jl / P_jl`.
    pub kappa: Array1<f64>,
    pub kl_before: f64,
    pub kl_after: f64,
    /// Groups whose weight fell below the degeneracy threshold; their
    /// emissions were kept as they were.
    pub frozen_groups: Vec<usize>,
}

fn check_distribution(v: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut total = 0.0;
    for x in v {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
        }
        total += x;
    }
    if (total - 1.0).abs() > NORMALIZATION_SLACK {
        return Err(Error::InvalidModel(format!("{what} sums to {total}, expected 1")));
    }
    Ok(())
}

pub(crate) fn check_emissions(e: &Array2<f64>, what: &str) -> Result<()> {
    for (g, col) in e.axis_iter(Axis(1)).enumerate() {
        check_distribution(col.iter().copied(), &format!("{what} column {g}"))?;
    }
    Ok(())
}

impl LatentModel {
    pub fn new(rho: Array1<f64>, a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        let m = rho.len();
        if m == 0 || a.ncols() != m || b.ncols() != m {
            return Err(Error::InvalidModel(format!(
                "group counts disagree: rho {m}, A {}, B {}",
                a.ncols(),
                b.ncols()
            )));
        }
        check_distribution(rho.iter().copied(), "rho")?;
        check_emissions(&a, "A")?;
        check_emissions(&b, "B")?;
        Ok(Self { rho, a, b })
    }

    pub fn groups(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &Array1<f64> {
        &self.rho
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    /// Independence model `a = f_row`, `b = f_col`.
    pub fn independence(f: &ContingencyTable) -> Self {
        Self {
            rho: Array1::ones(1),
            a: f.row_margins().to_owned().insert_axis(Axis(1)),
            b: f.col_margins().to_owned().insert_axis(Axis(1)),
        }
    }

    /// Model exactly reproducing `F`: `a_i^g = F_ig / F_.g`, `b_k^g = delta_kg`,
    /// `rho_g = F_.g`, with one group per column. When `F` has more columns
    /// than rows the construction runs on the transpose, so `m = min(n, p)`.
    pub fn saturated(f: &ContingencyTable) -> Self {
        let (n, p) = f.dim();
        if p > n {
            let t = Self::saturated(&f.transpose());
            return Self {
                rho: t.rho,
                a: t.b,
                b: t.a,
            };
        }
        let rho = f.col_margins().to_owned();
        let a = Array2::from_shape_fn((n, p), |(i, g)| f.values()[[i, g]] / rho[g]);
        let b = Array2::eye(p);
        Self { rho, a, b }
    }

    /// Random hard assignment of rows and columns to `m` groups, emissions
    /// from the group-conditional margins, weights from the average of the
    /// row and column group masses, then smoothing.
    pub fn random_init<R: Rng + ?Sized>(f: &ContingencyTable, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidModel("at least one group is required".into()));
        }
        let rows = em::random_partition(f.nrows(), m, rng);
        let cols = em::random_partition(f.ncols(), m, rng);
        let (a, row_mass) = em::hard_emissions(f.row_margins(), &rows, m);
        let (b, col_mass) = em::hard_emissions(f.col_margins(), &cols, m);
        let mut rho = (&row_mass + &col_mass) * 0.5;
        rho.mapv_inplace(|r| r + INIT_SMOOTHING);
        let total = rho.sum();
        rho.mapv_inplace(|r| r / total);
        Ok(Self {
            rho,
            a: em::smooth_columns(a, INIT_SMOOTHING),
            b: em::smooth_columns(b, INIT_SMOOTHING),
        })
    }

    /// `P = A diag(rho) B'`
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.a * &self.rho.view().insert_axis(Axis(0));
        scaled.dot(&self.b.t())
    }

    fn check_shape(&self, f: &ContingencyTable) -> Result<()> {
        let dim = (self.a.nrows(), self.b.nrows());
        if dim != f.dim() {
            return Err(Error::ShapeMismatch {
                expected: f.dim(),
                found: dim,
            });
        }
        Ok(())
    }

    pub fn kl_divergence(&self, f: &ContingencyTable) -> Result<f64> {
        self.check_shape(f)?;
        f.kl_divergence(self.reconstruct().view())
    }

    /// One EM cycle. All three factors are updated from the same pre-step `P`.
    pub fn em_step(&self, f: &ContingencyTable) -> Result<(Self, StepDiagnostics)> {
        self.check_shape(f)?;
        let p = self.reconstruct();
        let (r, kl_before) = ratio_and_kl(f.values(), p.view())?;
        let row_sums = r.dot(&self.b); // sum_l R_il b_l^g
        let col_sums = r.t().dot(&self.a); // sum_j R_jk a_j^g
        let m = self.groups();
        let kappa = Array1::from_shape_fn(m, |g| {
            self.a
                .column(g)
                .iter()
                .zip(row_sums.column(g))
                .map(|(x, y)| x * y)
                .sum::<f64>()
        });

        let mut rho = &self.rho * &kappa;
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        let mut frozen_groups = Vec::new();
        for g in 0..m {
            if !(rho[g] >= DEGENERATE_WEIGHT) {
                rho[g] = rho[g].max(0.0);
                frozen_groups.push(g);
                continue;
            }
            let k = kappa[g];
            a.column_mut(g)
                .zip_mut_with(&row_sums.column(g), |x, &s| *x *= s / k);
            b.column_mut(g)
                .zip_mut_with(&col_sums.column(g), |x, &s| *x *= s / k);
        }
        let total = rho.sum();
        rho.mapv_inplace(|x| x / total);
        em::normalize_columns(&mut a);
        em::normalize_columns(&mut b);

        let next = Self { rho, a, b };
        let kl_after = f.kl_divergence(next.reconstruct().view())?;
        Ok((
            next,
            StepDiagnostics {
                kappa,
                kl_before,
                kl_after,
                frozen_groups,
            },
        ))
    }

    /// Iterates [`em_step`](Self::em_step) from `self` to convergence.
    pub fn fit(&self, f: &ContingencyTable, opts: &FitOptions) -> Result<(Self, FitTrace)> {
        let initial = self.kl_divergence(f)?;
        em::iterate(self.clone(), initial, opts, |model| {
            let (next, diag) = model.em_step(f)?;
            Ok((next, diag.kl_after))
        })
    }

    /// Row memberships `p(g|i) = rho_g a_i^g / sum_h rho_h a_i^h`.
    pub fn row_memberships(&self) -> Array2<f64> {
        posterior(&self.a, &self.rho)
    }

    /// Column memberships `p(g|k)`.
    pub fn col_memberships(&self) -> Array2<f64> {
        posterior(&self.b, &self.rho)
    }
}

/// Rows of `e diag(w)`, normalized. A row with no mass gets uniform weights.
pub(crate) fn posterior(e: &Array2<f64>, w: &Array1<f64>) -> Array2<f64> {
    let mut z = e * &w.view().insert_axis(Axis(0));
    let m = z.ncols() as f64;
    for mut row in z.axis_iter_mut(Axis(0)) {
        let s = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|v| v / s);
        } else {
            row.fill(1.0 / m);
        }
    }
    z
}
