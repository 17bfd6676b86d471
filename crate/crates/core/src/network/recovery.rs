use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::linalg;

/// Residuals above this mean the emissions cannot explain the frequencies.
pub const MAX_RECOVERY_RESIDUAL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct MhRecovery {
    pub rho: Array1<f64>,
    /// `z_ig = rho_g a_i^g / f_i`
    pub z: Array2<f64>,
    /// `max_i |(A rho)_i - f_i|`
    pub residual: f64,
    /// The weights are not identified by `A` and `f`; `rho` is the
    /// minimum-norm choice (uniform for identical columns).
    pub non_unique: bool,
}

/// Solves `min |A x - f|^2` subject to `sum x = 1` on the free coordinates
/// `free`. Returns the solution and whether it is unique.
fn solve_on_support(a: &Array2<f64>, f: &Array1<f64>, free: &[usize]) -> (Array1<f64>, bool) {
    let k = free.len();
    // KKT system [A_S'A_S 1; 1' 0] [x; mu] = [A_S'f; 1]
    let sub = Array2::from_shape_fn((a.nrows(), k), |(i, j)| a[[i, free[j]]]);
    let gram = sub.t().dot(&sub);
    let rhs_top = sub.t().dot(f);
    let mut kkt = Array2::<f64>::zeros((k + 1, k + 1));
    let mut rhs = Array1::<f64>::zeros(k + 1);
    for i in 0..k {
        for j in 0..k {
            kkt[[i, j]] = gram[[i, j]];
        }
        kkt[[i, k]] = 1.0;
        kkt[[k, i]] = 1.0;
        rhs[i] = rhs_top[i];
    }
    rhs[k] = 1.0;
    let (sol, rank) = linalg::lstsq(&kkt, &rhs);
    (sol.slice(ndarray::s![..k]).to_owned(), rank == k + 1)
}

/// Group weights solving `sum_g rho_g a_i^g = f_i` in the least-squares sense
/// over the probability simplex (active-set method), and the memberships they
/// induce.
pub fn mh_membership_recovery(a: &Array2<f64>, f: &Array1<f64>) -> Result<MhRecovery> {
    let (n, m) = a.dim();
    if f.len() != n || m == 0 {
        return Err(Error::ShapeMismatch {
            expected: (f.len(), m),
            found: (n, m),
        });
    }
    if let Some(i) = f.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidModel(format!("frequency {i} is not positive")));
    }

    let mut rho = Array1::from_elem(m, 1.0 / m as f64);
    let mut free: Vec<usize> = (0..m).collect();
    let mut non_unique = false;
    for _ in 0..(10 * m + 10) {
        let (x, unique) = solve_on_support(a, f, &free);
        non_unique = !unique;
        if x.iter().all(|&v| v >= -1e-15) {
            rho.fill(0.0);
            for (j, &g) in free.iter().enumerate() {
                rho[g] = x[j].max(0.0);
            }
            // release the bound coordinate with the most negative reduced gradient
            let grad = a.t().dot(&(a.dot(&rho) - f));
            let mu = free.iter().map(|&g| grad[g]).sum::<f64>() / free.len() as f64;
            let entering = (0..m)
                .filter(|g| !free.contains(g))
                .map(|g| (g, grad[g] - mu))
                .filter(|&(_, d)| d < -1e-14)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            match entering {
                Some((g, _)) => {
                    free.push(g);
                    free.sort_unstable();
                }
                None => break,
            }
        } else {
            // move from rho toward x until a coordinate hits zero, then bind it
            let mut step = 1.0f64;
            let mut blocking = free[0];
            for (j, &g) in free.iter().enumerate() {
                if x[j] < 0.0 {
                    let t = rho[g] / (rho[g] - x[j]);
                    if t < step {
                        step = t;
                        blocking = g;
                    }
                }
            }
            for (j, &g) in free.iter().enumerate() {
                rho[g] += step * (x[j] - rho[g]);
            }
            rho[blocking] = 0.0;
            free.retain(|&g| g != blocking);
        }
    }
    let total = rho.sum();
    rho.mapv_inplace(|v| v / total);

    let fitted = a.dot(&rho);
    let residual = fitted
        .iter()
        .zip(f.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    if residual > MAX_RECOVERY_RESIDUAL {
        return Err(Error::InfeasibleWeights { residual });
    }
    let mut z = a * &rho.view().insert_axis(Axis(0));
    for (mut row, &fi) in z.axis_iter_mut(Axis(0)).zip(f.iter()) {
        row.mapv_inplace(|v| v / fi);
    }
    Ok(MhRecovery {
        rho,
        z,
        residual,
        non_unique,
    })
}
