//! Co-clustering model `P_ik = sum_uv c_uv a_i^u b_k^v` with its EM iteration,
//! hard block models, and the Markov chain read off a square latent table.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::divergence::ratio_and_kl;
use crate::em::{self, FitOptions, FitTrace, DEGENERATE_WEIGHT, INIT_SMOOTHING};
use crate::error::{Axis as TableAxis, Error, Result};
use crate::latent::{check_emissions, posterior, LatentModel};
use crate::linalg;
use crate::table::ContingencyTable;

/// Joint latent distribution `C` (m1 x m2) and emissions `A` (n x m1),
/// `B` (p x m2).
#[derive(Debug, Clone, PartialEq)]
pub struct CoLatentModel {
    c: Array2<f64>,
    a: Array2<f64>,
    b: Array2<f64>,
}

fn check_joint(c: &Array2<f64>) -> Result<()> {
    if c.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidModel("C has a negative or non-finite entry".into()));
    }
    let total = c.sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidModel(format!("C sums to {total}, expected 1")));
    }
    Ok(())
}

fn normalize_total(c: &mut Array2<f64>) {
    let total = c.sum();
    c.mapv_inplace(|v| v / total);
}

impl CoLatentModel {
    pub fn new(c: Array2<f64>, a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        if c.is_empty() || a.ncols() != c.nrows() || b.ncols() != c.ncols() {
            return Err(Error::InvalidModel(format!(
                "C is {:?} but A has {} groups and B {}",
                c.dim(),
                a.ncols(),
                b.ncols()
            )));
        }
        check_joint(&c)?;
        check_emissions(&a, "A")?;
        check_emissions(&b, "B")?;
        Ok(Self { c, a, b })
    }

    /// Embeds a latent model as a co-latent one with diagonal `C`.
    pub fn from_latent(model: &LatentModel) -> Self {
        Self {
            c: Array2::from_diag(model.rho()),
            a: model.a().clone(),
            b: model.b().clone(),
        }
    }

    /// Random hard assignment of rows to `m1` and columns to `m2` groups; `C`
    /// is the induced block aggregation of `F`. Everything is smoothed.
    pub fn random_init<R: Rng + ?Sized>(
        f: &ContingencyTable,
        m1: usize,
        m2: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidModel("at least one group is required".into()));
        }
        let rows = em::random_partition(f.nrows(), m1, rng);
        let cols = em::random_partition(f.ncols(), m2, rng);
        let (a, _) = em::hard_emissions(f.row_margins(), &rows, m1);
        let (b, _) = em::hard_emissions(f.col_margins(), &cols, m2);
        let mut c = block_aggregate(f, &rows, &cols, m1, m2);
        c.mapv_inplace(|v| v + INIT_SMOOTHING);
        normalize_total(&mut c);
        Ok(Self {
            c,
            a: em::smooth_columns(a, INIT_SMOOTHING),
            b: em::smooth_columns(b, INIT_SMOOTHING),
        })
    }

    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn groups(&self) -> (usize, usize) {
        self.c.dim()
    }

    /// `P = A C B'`
    pub fn reconstruct(&self) -> Array2<f64> {
        self.a.dot(&self.c).dot(&self.b.t())
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

    /// One EM cycle; returns the new model with the divergences before and
    /// after.
    pub fn em_step(&self, f: &ContingencyTable) -> Result<(Self, f64, f64)> {
        self.check_shape(f)?;
        let p = self.reconstruct();
        let (r, kl_before) = ratio_and_kl(f.values(), p.view())?;
        let rb = r.dot(&self.b); // n x m2: sum_l R_il b_l^v
        let ra = r.t().dot(&self.a); // p x m1: sum_j R_jk a_j^u
        let t = self.a.t().dot(&rb); // m1 x m2: sum_jl a_j^u R_jl b_l^v
        let mut c = &self.c * &t;

        let row_mass = c.sum_axis(Axis(1));
        let col_mass = c.sum_axis(Axis(0));
        // sum_v c_uv (RB)_iv and sum_u c_uv (R'A)_ku
        let a_num = rb.dot(&self.c.t());
        let b_num = ra.dot(&self.c);
        let mut a = self.a.clone();
        for (u, &mass) in row_mass.iter().enumerate() {
            if mass >= DEGENERATE_WEIGHT {
                a.column_mut(u)
                    .zip_mut_with(&a_num.column(u), |x, &s| *x *= s / mass);
            }
        }
        let mut b = self.b.clone();
        for (v, &mass) in col_mass.iter().enumerate() {
            if mass >= DEGENERATE_WEIGHT {
                b.column_mut(v)
                    .zip_mut_with(&b_num.column(v), |x, &s| *x *= s / mass);
            }
        }
        normalize_total(&mut c);
        em::normalize_columns(&mut a);
        em::normalize_columns(&mut b);
        let next = Self { c, a, b };
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

    /// Row memberships `p(u|i)`, proportional to `a_i^u c_u.`.
    pub fn row_memberships(&self) -> Array2<f64> {
        posterior(&self.a, &self.c.sum_axis(Axis(1)))
    }

    /// Column memberships `p(v|k)`, proportional to `b_k^v c_.v`.
    pub fn col_memberships(&self) -> Array2<f64> {
        posterior(&self.b, &self.c.sum_axis(Axis(0)))
    }

    pub fn markov_summary(&self) -> Result<LatentMarkovSummary> {
        latent_markov_summary(&self.c)
    }
}

fn block_aggregate(
    f: &ContingencyTable,
    rows: &[usize],
    cols: &[usize],
    m1: usize,
    m2: usize,
) -> Array2<f64> {
    let mut c = Array2::<f64>::zeros((m1, m2));
    for ((i, k), &v) in f.values().indexed_iter() {
        c[[rows[i], cols[k]]] += v;
    }
    c
}

fn group_count(partition: &[usize], expected_len: usize, axis: TableAxis) -> Result<usize> {
    if partition.len() != expected_len {
        return Err(Error::PartitionLength {
            expected: expected_len,
            found: partition.len(),
        });
    }
    let m = partition.iter().max().map_or(0, |&g| g + 1);
    let mut seen = vec![false; m];
    for &g in partition {
        seen[g] = true;
    }
    if let Some(group) = seen.iter().position(|&s| !s) {
        return Err(Error::EmptyGroup { axis, group });
    }
    Ok(m)
}

/// Best hard co-clustering model for given zero-based row and column
/// partitions, with its divergence `K(F||P) = I(X:Y) - I(U:V)`.
pub fn hard_block_model(
    f: &ContingencyTable,
    row_partition: &[usize],
    col_partition: &[usize],
) -> Result<(CoLatentModel, f64)> {
    let m1 = group_count(row_partition, f.nrows(), TableAxis::Row)?;
    let m2 = group_count(col_partition, f.ncols(), TableAxis::Column)?;
    let c = block_aggregate(f, row_partition, col_partition, m1, m2);
    let (a, _) = em::hard_emissions(f.row_margins(), row_partition, m1);
    let (b, _) = em::hard_emissions(f.col_margins(), col_partition, m2);
    let model = CoLatentModel { c, a, b };
    let k = model.kl_divergence(f)?;
    Ok((model, k))
}

/// Hidden-state chain `W = p(v|u) = c_uv / c_u.` with its stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMarkovSummary {
    pub w: Array2<f64>,
    pub pi: Array1<f64>,
    /// `max_u |c_u. - c_.u|`
    pub mh_deviation: f64,
    /// The chain has several closed classes; `pi` then falls back to the row
    /// margins of `C`, which is one stationary law among many only when `C`
    /// is marginally homogeneous.
    pub multiple_stationary: bool,
}

/// Number of closed communicating classes of the transition graph `w > 0`.
fn closed_classes(w: &Array2<f64>) -> usize {
    let m = w.nrows();
    let mut reach = w.mapv(|v| v > 0.0);
    for u in 0..m {
        reach[[u, u]] = true;
    }
    for k in 0..m {
        for i in 0..m {
            if reach[[i, k]] {
                for j in 0..m {
                    if reach[[k, j]] {
                        reach[[i, j]] = true;
                    }
                }
            }
        }
    }
    // a state is in a closed class iff everything it reaches reaches it back;
    // count such classes by their lowest member
    (0..m)
        .filter(|&u| {
            let closed = (0..m).all(|v| !reach[[u, v]] || reach[[v, u]]);
            let lowest = (0..u).all(|v| !(reach[[u, v]] && reach[[v, u]]));
            closed && lowest
        })
        .count()
}

pub fn latent_markov_summary(c: &Array2<f64>) -> Result<LatentMarkovSummary> {
    let (rows, cols) = c.dim();
    if rows != cols {
        return Err(Error::SquareOnly { rows, cols });
    }
    let m = rows;
    let row_mass = c.sum_axis(Axis(1));
    let col_mass = c.sum_axis(Axis(0));
    if let Some(group) = row_mass.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::ZeroRowGroup { group });
    }
    let w = c / &row_mass.view().insert_axis(Axis(1));
    let mh_deviation = em::max_abs_diff(row_mass.iter(), col_mass.iter());

    let multiple_stationary = closed_classes(&w) > 1;
    let pi = if multiple_stationary {
        &row_mass / row_mass.sum()
    } else {
        // (W' - I) pi = 0 with its last equation replaced by sum(pi) = 1
        let mut system = w.t().to_owned() - Array2::<f64>::eye(m);
        system.row_mut(m - 1).fill(1.0);
        let mut rhs = Array1::<f64>::zeros(m);
        rhs[m - 1] = 1.0;
        let (mut pi, _) = linalg::lstsq(&system, &rhs);
        pi.mapv_inplace(|v| v.max(0.0));
        let total = pi.sum();
        pi / total
    };
    Ok(LatentMarkovSummary {
        w,
        pi,
        mh_deviation,
        multiple_stationary,
    })
}
