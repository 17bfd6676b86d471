//! Shared EM driver: iteration loop, stopping rule and convergence trace.

use log::debug;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::Result;

/// Additive smoothing applied to hard initial assignments. Multiplicative
/// updates never leave an exact zero, so initial models keep full support.
pub const INIT_SMOOTHING: f64 = 1e-8;

/// Groups whose weight falls below this are frozen rather than updated.
pub const DEGENERATE_WEIGHT: f64 = 1e-12;

/// Below this divergence the fit is considered exact and stops.
const EXACT_FIT: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative change `|K_t - K_{t+1}| / max(K_t, 1e-30)` below which the fit stops.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIter,
}

/// Divergence after every EM cycle. Entry 0 is the initial model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub kl_per_iteration: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl FitTrace {
    pub fn final_kl(&self) -> f64 {
        *self.kl_per_iteration.last().expect("trace holds the initial divergence")
    }

    /// Largest per-cycle increase of the divergence (zero for a monotone trace).
    pub fn max_increase(&self) -> f64 {
        self.kl_per_iteration
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Iterates `step` from `init` until the relative divergence change drops
/// below `opts.tol` or `opts.max_iter` cycles have run. `step` returns the new
/// model and its divergence.
pub(crate) fn iterate<M>(
    init: M,
    initial_kl: f64,
    opts: &FitOptions,
    mut step: impl FnMut(&M) -> Result<(M, f64)>,
) -> Result<(M, FitTrace)> {
    let mut model = init;
    let mut trace = vec![initial_kl];
    let mut stop_reason = StopReason::MaxIter;
    if initial_kl <= EXACT_FIT {
        stop_reason = StopReason::Tolerance;
    }
    while stop_reason == StopReason::MaxIter && trace.len() <= opts.max_iter {
        let before = trace[trace.len() - 1];
        let (next, after) = step(&model)?;
        model = next;
        trace.push(after);
        if after > before + 1e-10 {
            debug!("divergence increased from {before} to {after}");
        }
        if (before - after).abs() / before.max(1e-30) < opts.tol || after <= EXACT_FIT {
            stop_reason = StopReason::Tolerance;
        }
    }
    let iterations_run = trace.len() - 1;
    Ok((
        model,
        FitTrace {
            kl_per_iteration: trace,
            iterations_run,
            converged: stop_reason == StopReason::Tolerance,
            stop_reason,
        },
    ))
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(m: ArrayView2<f64>) -> Vec<usize> {
    m.axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (g, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

/// Uniform random assignment of `n` items to `m` groups.
pub fn random_partition<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..m)).collect()
}

/// Hard emissions from a partition: column `g` holds the weights of the items
/// in group `g`, normalized within the group. Empty groups get a zero column.
/// Also returns the group masses.
pub(crate) fn hard_emissions(
    weights: ndarray::ArrayView1<f64>,
    partition: &[usize],
    m: usize,
) -> (Array2<f64>, Array1<f64>) {
    let mut mass = Array1::<f64>::zeros(m);
    for (i, &g) in partition.iter().enumerate() {
        mass[g] += weights[i];
    }
    let mut a = Array2::<f64>::zeros((partition.len(), m));
    for (i, &g) in partition.iter().enumerate() {
        if mass[g] > 0.0 {
            a[[i, g]] = weights[i] / mass[g];
        }
    }
    (a, mass)
}

/// Adds `eps` to every entry and rescales each column to sum to one.
pub(crate) fn smooth_columns(mut a: Array2<f64>, eps: f64) -> Array2<f64> {
    a.mapv_inplace(|v| v + eps);
    normalize_columns(&mut a);
    a
}

pub(crate) fn normalize_columns(a: &mut Array2<f64>) {
    for mut col in a.axis_iter_mut(Axis(1)) {
        let s = col.sum();
        if s > 0.0 {
            col.mapv_inplace(|v| v / s);
        }
    }
}

pub(crate) fn normalize_rows(a: &mut Array2<f64>) {
    for mut row in a.axis_iter_mut(Axis(0)) {
        let s = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|v| v / s);
        }
    }
}

pub(crate) fn max_abs_diff<'a>(
    a: impl IntoIterator<Item = &'a f64>,
    b: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}
