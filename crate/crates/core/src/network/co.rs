use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::colatent::{latent_markov_summary, LatentMarkovSummary};
use crate::divergence::ratio_and_kl;
use crate::em::{self, FitOptions, FitTrace, DEGENERATE_WEIGHT, INIT_SMOOTHING};
use crate::error::{Error, Result};
use crate::latent::{check_emissions, posterior};
use crate::table::{ContingencyTable, SYMMETRY_TOLERANCE};

/// Shared-emission model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Unrestricted `C`, for oriented networks.
    General,
    /// `c_uv = c_vu`, for unoriented networks.
    Symmetric,
    /// `c_u. = c_.u`, the hidden Markov setting.
    MarginallyHomogeneous,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::General => "general",
            Variant::Symmetric => "symmetric",
            Variant::MarginallyHomogeneous => "mh",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "general" => Ok(Variant::General),
            "symmetric" => Ok(Variant::Symmetric),
            "mh" | "marginally_homogeneous" => Ok(Variant::MarginallyHomogeneous),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

/// Joint latent distribution `C` (m x m) and emissions `A` (n x m) shared by
/// both ends of every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCoModel {
    c: Array2<f64>,
    a: Array2<f64>,
    variant: Variant,
}

fn max_asymmetry(c: &Array2<f64>) -> f64 {
    em::max_abs_diff(c.iter(), c.t().iter())
}

fn mh_deviation(c: &Array2<f64>) -> f64 {
    em::max_abs_diff(c.sum_axis(Axis(1)).iter(), c.sum_axis(Axis(0)).iter())
}

impl NetworkCoModel {
    /// The marginal homogeneity of `C` is not checked here: the fitter
    /// monitors it instead.
    pub fn new(c: Array2<f64>, a: Array2<f64>, variant: Variant) -> Result<Self> {
        let (rows, cols) = c.dim();
        if rows != cols {
            return Err(Error::SquareOnly { rows, cols });
        }
        if rows == 0 || a.ncols() != rows {
            return Err(Error::InvalidModel(format!(
                "C is {rows}x{cols} but A has {} groups",
                a.ncols()
            )));
        }
        if c.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (c.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel("C must be a probability table".into()));
        }
        check_emissions(&a, "A")?;
        if variant == Variant::Symmetric {
            let asym = max_asymmetry(&c);
            if asym > SYMMETRY_TOLERANCE {
                return Err(Error::SymmetryViolation {
                    what: "latent table C",
                    max_asymmetry: asym,
                });
            }
        }
        Ok(Self { c, a, variant })
    }

    /// Random hard assignment of vertices to `m` groups; emissions from the
    /// averaged in/out weights, `C` from the block aggregation. Smoothed.
    pub fn random_init<R: Rng + ?Sized>(
        f: &ContingencyTable,
        m: usize,
        variant: Variant,
        rng: &mut R,
    ) -> Result<Self> {
        if !f.is_square() {
            return Err(Error::NotSquare {
                rows: f.nrows(),
                cols: f.ncols(),
            });
        }
        if m == 0 {
            return Err(Error::InvalidModel("at least one group is required".into()));
        }
        let partition = em::random_partition(f.nrows(), m, rng);
        let weights = (&f.row_margins() + &f.col_margins()) * 0.5;
        let (a, _) = em::hard_emissions(weights.view(), &partition, m);
        let mut c = Array2::<f64>::zeros((m, m));
        for ((i, j), &v) in f.values().indexed_iter() {
            c[[partition[i], partition[j]]] += v;
        }
        if variant == Variant::Symmetric {
            c = (&c + &c.t()) * 0.5;
        }
        c.mapv_inplace(|v| v + INIT_SMOOTHING);
        let total = c.sum();
        c.mapv_inplace(|v| v / total);
        Ok(Self {
            c,
            a: em::smooth_columns(a, INIT_SMOOTHING),
            variant,
        })
    }

    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn groups(&self) -> usize {
        self.c.nrows()
    }

    /// `max_u |c_u. - c_.u|`
    pub fn mh_deviation(&self) -> f64 {
        mh_deviation(&self.c)
    }

    /// `P = A C A'`
    pub fn reconstruct(&self) -> Array2<f64> {
        self.a.dot(&self.c).dot(&self.a.t())
    }

    fn check_table(&self, f: &ContingencyTable) -> Result<()> {
        let n = self.a.nrows();
        if f.dim() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: f.dim(),
                found: (n, n),
            });
        }
        if self.variant == Variant::Symmetric {
            let asym = f.max_asymmetry()?;
            if asym > SYMMETRY_TOLERANCE {
                return Err(Error::SymmetryViolation {
                    what: "table",
                    max_asymmetry: asym,
                });
            }
            let asym = max_asymmetry(&self.c);
            if asym > SYMMETRY_TOLERANCE {
                return Err(Error::SymmetryViolation {
                    what: "latent table C",
                    max_asymmetry: asym,
                });
            }
        }
        Ok(())
    }

    pub fn kl_divergence(&self, f: &ContingencyTable) -> Result<f64> {
        self.check_table(f)?;
        f.kl_divergence(self.reconstruct().view())
    }

    /// One EM cycle under the shared-emission constraint. The general and
    /// marginally homogeneous variants use the two-sided emission update; the
    /// symmetric variant uses the one-sided one, which coincides with it when
    /// both `F` and `C` are symmetric.
    pub fn em_step(&self, f: &ContingencyTable) -> Result<(Self, f64, f64)> {
        self.check_table(f)?;
        let p = self.reconstruct();
        let (r, kl_before) = ratio_and_kl(f.values(), p.view())?;
        let ra = r.dot(&self.a); // sum_j R_ij a_j^v
        let c = &self.c * &self.a.t().dot(&ra);

        let (num, denom) = match self.variant {
            Variant::Symmetric => (ra.dot(&self.c.t()), c.sum_axis(Axis(1))),
            Variant::General | Variant::MarginallyHomogeneous => {
                let rta = r.t().dot(&self.a); // sum_j R_ji a_j^v
                let num = ra.dot(&self.c.t()) + rta.dot(&self.c);
                (num, c.sum_axis(Axis(1)) + c.sum_axis(Axis(0)))
            }
        };
        let mut a = self.a.clone();
        for (u, &d) in denom.iter().enumerate() {
            if d >= DEGENERATE_WEIGHT {
                a.column_mut(u)
                    .zip_mut_with(&num.column(u), |x, &s| *x *= s / d);
            }
        }
        em::normalize_columns(&mut a);
        let mut c = c;
        let total = c.sum();
        c.mapv_inplace(|v| v / total);
        let next = Self {
            c,
            a,
            variant: self.variant,
        };
        let kl_after = f.kl_divergence(next.reconstruct().view())?;
        Ok((next, kl_before, kl_after))
    }

    /// Vertex memberships `p(u|i)`, proportional to `a_i^u (c_u. + c_.u) / 2`.
    pub fn memberships(&self) -> Array2<f64> {
        let weight: Array1<f64> = (self.c.sum_axis(Axis(1)) + self.c.sum_axis(Axis(0))) * 0.5;
        posterior(&self.a, &weight)
    }

    pub fn hard_assignment(&self) -> Vec<usize> {
        em::argmax_rows(self.memberships().view())
    }

    pub fn markov_summary(&self) -> Result<LatentMarkovSummary> {
        latent_markov_summary(&self.c)
    }
}

/// I-projection of a positive square table onto marginally homogeneous
/// tables: `c_uv d_u / d_v`, renormalized, with `d` found by alternately
/// balancing each group's in- and out-mass.
pub fn project_marginal_homogeneity(c: &Array2<f64>) -> Array2<f64> {
    let m = c.nrows();
    let mut out = c.clone();
    for _ in 0..10_000 {
        if mh_deviation(&out) <= 1e-15 {
            break;
        }
        for u in 0..m {
            let row: f64 = (0..m).filter(|&v| v != u).map(|v| out[[u, v]]).sum();
            let col: f64 = (0..m).filter(|&v| v != u).map(|v| out[[v, u]]).sum();
            if row > 0.0 && col > 0.0 {
                let d = (col / row).sqrt();
                for v in 0..m {
                    if v != u {
                        out[[u, v]] *= d;
                        out[[v, u]] /= d;
                    }
                }
            }
        }
    }
    let total = out.sum();
    out / total
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetworkCoOptions {
    pub fit: FitOptions,
    /// Project `C` onto the marginally homogeneous set every `k` cycles
    /// (marginally homogeneous variant only). Projection can raise the
    /// divergence, so it is off by default.
    pub mh_projection_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCoFit {
    pub model: NetworkCoModel,
    pub trace: FitTrace,
    pub summary: LatentMarkovSummary,
    /// `max_u |c_u. - c_.u|` of the initial model and after every cycle.
    pub mh_deviation_per_iteration: Vec<f64>,
}

/// Iterates [`NetworkCoModel::em_step`] from `init` to convergence and
/// summarizes the latent chain.
pub fn fit_network_co(
    f: &ContingencyTable,
    init: &NetworkCoModel,
    opts: &NetworkCoOptions,
) -> Result<NetworkCoFit> {
    if !f.is_square() {
        return Err(Error::NotSquare {
            rows: f.nrows(),
            cols: f.ncols(),
        });
    }
    let initial = init.kl_divergence(f)?;
    let mut mh_devs = vec![init.mh_deviation()];
    let project_every = match init.variant {
        Variant::MarginallyHomogeneous => opts.mh_projection_every.filter(|&k| k > 0),
        _ => None,
    };
    let mut cycle = 0usize;
    let (model, trace) = em::iterate(init.clone(), initial, &opts.fit, |model| {
        let (mut next, _, mut after) = model.em_step(f)?;
        cycle += 1;
        if let Some(k) = project_every {
            if cycle.is_multiple_of(k) {
                next.c = project_marginal_homogeneity(&next.c);
                after = f.kl_divergence(next.reconstruct().view())?;
            }
        }
        mh_devs.push(next.mh_deviation());
        Ok((next, after))
    })?;
    let summary = model.markov_summary()?;
    Ok(NetworkCoFit {
        model,
        trace,
        summary,
        mh_deviation_per_iteration: mh_devs,
    })
}
