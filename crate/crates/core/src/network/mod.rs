//! Soft clustering of weighted networks given as square tables.
//!
//! [`NetworkLatentModel`] fits `P_ij = f_i f_j sum_g z_ig z_jg / rho_g` by
//! updating memberships directly; [`NetworkCoModel`] fits shared-emission
//! co-clustering models `P_ij = sum_uv c_uv a_i^u a_j^v`.

mod co;
mod recovery;

pub use co::{fit_network_co, project_marginal_homogeneity, NetworkCoFit, NetworkCoModel, NetworkCoOptions, Variant};
pub use recovery::{mh_membership_recovery, MhRecovery};

use log::warn;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::divergence::ratio_and_kl;
use crate::em::{self, FitOptions, FitTrace, DEGENERATE_WEIGHT, INIT_SMOOTHING};
use crate::error::{Error, Result};
use crate::table::{ContingencyTable, SYMMETRY_TOLERANCE};

const MARGIN_TOLERANCE: f64 = 1e-12;

/// Memberships `Z` (n x m, rows sum to one), group weights
/// `rho_g = sum_i f_i z_ig` and vertex weights `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLatentModel {
    z: Array2<f64>,
    rho: Array1<f64>,
    f: Array1<f64>,
}

impl NetworkLatentModel {
    /// Builds a model from memberships and vertex weights; `rho` is derived.
    pub fn new(z: Array2<f64>, f: Array1<f64>) -> Result<Self> {
        if z.nrows() != f.len() || z.ncols() == 0 {
            return Err(Error::InvalidModel(format!(
                "memberships are {:?} for {} vertices",
                z.dim(),
                f.len()
            )));
        }
        if z.iter().chain(f.iter()).any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidModel("negative or non-finite entry".into()));
        }
        for (i, row) in z.axis_iter(Axis(0)).enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidModel(format!("membership row {i} sums to {s}")));
            }
        }
        if (f.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel("vertex weights do not sum to 1".into()));
        }
        let rho = z.t().dot(&f);
        Ok(Self { z, rho, f })
    }

    /// Random hard assignment of vertices to `m` groups, smoothed.
    pub fn random_init<R: Rng + ?Sized>(f: &ContingencyTable, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidModel("at least one group is required".into()));
        }
        let n = f.nrows();
        let partition = em::random_partition(n, m, rng);
        let mut z = Array2::<f64>::from_elem((n, m), INIT_SMOOTHING);
        for (i, &g) in partition.iter().enumerate() {
            z[[i, g]] += 1.0;
        }
        em::normalize_rows(&mut z);
        let weights = f.row_margins().to_owned();
        Ok(Self {
            rho: z.t().dot(&weights),
            z,
            f: weights,
        })
    }

    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn rho(&self) -> &Array1<f64> {
        &self.rho
    }

    pub fn f(&self) -> &Array1<f64> {
        &self.f
    }

    pub fn groups(&self) -> usize {
        self.z.ncols()
    }

    /// `P_ij = f_i f_j sum_g z_ig z_jg / rho_g`; symmetric and positive
    /// semi-definite by construction.
    pub fn reconstruct(&self) -> Array2<f64> {
        // Y_ig = f_i z_ig / sqrt(rho_g), P = Y Y'
        let mut y = &self.z * &self.f.view().insert_axis(Axis(1));
        for (g, mut col) in y.axis_iter_mut(Axis(1)).enumerate() {
            let r = self.rho[g];
            if r > 0.0 {
                let s = r.sqrt();
                col.mapv_inplace(|v| v / s);
            } else {
                col.fill(0.0);
            }
        }
        y.dot(&y.t())
    }

    /// Final hard assignment `argmax_g z_ig`, ties to the lowest group.
    pub fn hard_assignment(&self) -> Vec<usize> {
        em::argmax_rows(self.z.view())
    }

    fn check_table(&self, f: &ContingencyTable) -> Result<()> {
        let max_asymmetry = f.max_asymmetry()?;
        if max_asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric { max_asymmetry });
        }
        if f.nrows() != self.f.len() {
            return Err(Error::ShapeMismatch {
                expected: f.dim(),
                found: (self.f.len(), self.f.len()),
            });
        }
        let deviation = em::max_abs_diff(f.row_margins().iter(), self.f.iter());
        if deviation > MARGIN_TOLERANCE {
            return Err(Error::MarginMismatch { deviation });
        }
        Ok(())
    }

    pub fn kl_divergence(&self, f: &ContingencyTable) -> Result<f64> {
        self.check_table(f)?;
        f.kl_divergence(self.reconstruct().view())
    }

    /// One membership update
    /// `z_ig <- z_ig sum_j (F_ij / P_ij) f_j z_jg / rho_g`, then
    /// `rho_g = sum_i f_i z_ig`. Rows of `Z` stay stochastic because the
    /// vertex weights are the table margins.
    pub fn em_step(&self, f: &ContingencyTable) -> Result<(Self, f64, f64)> {
        self.check_table(f)?;
        let p = self.reconstruct();
        let (r, kl_before) = ratio_and_kl(f.values(), p.view())?;
        let fz = &self.z * &self.f.view().insert_axis(Axis(1));
        let s = r.dot(&fz); // sum_j R_ij f_j z_jg
        let mut z = self.z.clone();
        for g in 0..self.groups() {
            let rho = self.rho[g];
            if rho < DEGENERATE_WEIGHT {
                continue;
            }
            z.column_mut(g)
                .zip_mut_with(&s.column(g), |x, &v| *x *= v / rho);
        }
        let rho = z.t().dot(&self.f);
        let next = Self {
            z,
            rho,
            f: self.f.clone(),
        };
        let kl_after = f.kl_divergence(next.reconstruct().view())?;
        Ok((next, kl_before, kl_after))
    }

    pub fn fit(&self, f: &ContingencyTable, opts: &FitOptions) -> Result<(Self, FitTrace)> {
        let initial = self.kl_divergence(f)?;
        em::iterate(self.clone(), initial, opts, |model| {
            let (next, _, after) = model.em_step(f)?;
            Ok((next, after))
        })
    }
}

/// Table actually fitted by [`fit_network`]: symmetrized when needed, then
/// diagonally inflated when `lambda` is given and differs from one.
pub fn prepare_network_table(f: &ContingencyTable, lambda: Option<f64>) -> Result<ContingencyTable> {
    let mut table = if f.is_symmetric() {
        f.clone()
    } else {
        warn!("network table is not symmetric; fitting (F + F')/2");
        f.symmetrize()?
    };
    if let Some(lambda) = lambda {
        if lambda != 1.0 {
            table = table.diagonal_inflation(lambda)?;
        }
    }
    Ok(table)
}

/// Prepares the table (see [`prepare_network_table`]) and fits the membership
/// model from `init`.
pub fn fit_network(
    f: &ContingencyTable,
    lambda: Option<f64>,
    init: &NetworkLatentModel,
    opts: &FitOptions,
) -> Result<(NetworkLatentModel, FitTrace)> {
    let table = prepare_network_table(f, lambda)?;
    init.fit(&table, opts)
}
