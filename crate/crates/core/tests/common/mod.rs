//! Random instance generators and brute-force oracles shared by the
//! integration tests. The oracles use plain index loops so that they stay
//! independent of the matrix-product formulations in the library.
#![allow(dead_code)]

use latentem::ContingencyTable;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random counts with about 20% structural zeros and no empty line.
pub fn random_counts<R: Rng>(n: usize, p: usize, rng: &mut R) -> Array2<f64> {
    let mut raw = Array2::from_shape_fn((n, p), |_| {
        if rng.random_bool(0.2) {
            0.0
        } else {
            rng.random_range(0.01..1.0)
        }
    });
    for i in 0..n {
        if raw.row(i).iter().all(|&v| v == 0.0) {
            raw[[i, rng.random_range(0..p)]] = 1.0;
        }
    }
    for k in 0..p {
        if raw.column(k).iter().all(|&v| v == 0.0) {
            raw[[rng.random_range(0..n), k]] = 1.0;
        }
    }
    raw
}

pub fn random_table<R: Rng>(n: usize, p: usize, rng: &mut R) -> ContingencyTable {
    ContingencyTable::normalize(random_counts(n, p, rng).view()).unwrap()
}

pub fn random_symmetric_table<R: Rng>(n: usize, rng: &mut R) -> ContingencyTable {
    let raw = random_counts(n, n, rng);
    let sym = &raw + &raw.t();
    ContingencyTable::normalize(sym.view()).unwrap()
}

/// Partition of `n` items into exactly `m` non-empty groups.
pub fn random_partition<R: Rng>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    assert!(m <= n);
    let mut part: Vec<usize> = (0..n).map(|i| if i < m { i } else { rng.random_range(0..m) }).collect();
    part.shuffle(rng);
    part
}

/// Random distribution on `n` points with all entries positive.
pub fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Array1<f64> {
    let v = Array1::from_shape_fn(n, |_| rng.random_range(0.05..1.0));
    let s = v.sum();
    v / s
}

pub fn random_emissions<R: Rng>(n: usize, m: usize, rng: &mut R) -> Array2<f64> {
    let mut a = Array2::zeros((n, m));
    for g in 0..m {
        a.column_mut(g).assign(&random_simplex(n, rng));
    }
    a
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs_diff1(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `sum F ln(F/P)` by direct summation.
pub fn kl_oracle(f: &Array2<f64>, p: &Array2<f64>) -> f64 {
    let mut k = 0.0;
    for i in 0..f.nrows() {
        for j in 0..f.ncols() {
            if f[[i, j]] > 0.0 {
                k += f[[i, j]] * (f[[i, j]] / p[[i, j]]).ln();
            }
        }
    }
    k
}

/// Mutual information of a joint table by direct summation.
pub fn mi_oracle(c: &Array2<f64>) -> f64 {
    let total: f64 = c.iter().sum();
    let (n, p) = c.dim();
    let mut mi = 0.0;
    for i in 0..n {
        let ri: f64 = (0..p).map(|k| c[[i, k]]).sum::<f64>() / total;
        for k in 0..p {
            let ck: f64 = (0..n).map(|j| c[[j, k]]).sum::<f64>() / total;
            let v = c[[i, k]] / total;
            if v > 0.0 {
                mi += v * (v / (ri * ck)).ln();
            }
        }
    }
    mi
}

/// Latent EM cycle written out index by index.
pub fn latent_step_oracle(
    f: &Array2<f64>,
    rho: &Array1<f64>,
    a: &Array2<f64>,
    b: &Array2<f64>,
) -> (Array1<f64>, Array2<f64>, Array2<f64>, Array1<f64>) {
    let (n, p) = f.dim();
    let m = rho.len();
    let mut pm = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        for k in 0..p {
            for g in 0..m {
                pm[[i, k]] += rho[g] * a[[i, g]] * b[[k, g]];
            }
        }
    }
    let ratio = |i: usize, k: usize| if f[[i, k]] > 0.0 { f[[i, k]] / pm[[i, k]] } else { 0.0 };
    let mut kappa = Array1::<f64>::zeros(m);
    for g in 0..m {
        for j in 0..n {
            for l in 0..p {
                kappa[g] += a[[j, g]] * b[[l, g]] * ratio(j, l);
            }
        }
    }
    let mut rho2 = Array1::<f64>::zeros(m);
    let mut a2 = Array2::<f64>::zeros((n, m));
    let mut b2 = Array2::<f64>::zeros((p, m));
    for g in 0..m {
        rho2[g] = rho[g] * kappa[g];
        for i in 0..n {
            let s: f64 = (0..p).map(|l| b[[l, g]] * ratio(i, l)).sum();
            a2[[i, g]] = a[[i, g]] * s / kappa[g];
        }
        for k in 0..p {
            let s: f64 = (0..n).map(|j| a[[j, g]] * ratio(j, k)).sum();
            b2[[k, g]] = b[[k, g]] * s / kappa[g];
        }
    }
    (rho2, a2, b2, kappa)
}

/// Co-clustering EM cycle written out index by index.
pub fn colatent_step_oracle(
    f: &Array2<f64>,
    c: &Array2<f64>,
    a: &Array2<f64>,
    b: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (n, p) = f.dim();
    let (m1, m2) = c.dim();
    let mut pm = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        for k in 0..p {
            for u in 0..m1 {
                for v in 0..m2 {
                    pm[[i, k]] += c[[u, v]] * a[[i, u]] * b[[k, v]];
                }
            }
        }
    }
    let ratio = |i: usize, k: usize| if f[[i, k]] > 0.0 { f[[i, k]] / pm[[i, k]] } else { 0.0 };
    let mut c2 = Array2::<f64>::zeros((m1, m2));
    for u in 0..m1 {
        for v in 0..m2 {
            let mut s = 0.0;
            for j in 0..n {
                for l in 0..p {
                    s += ratio(j, l) * a[[j, u]] * b[[l, v]];
                }
            }
            c2[[u, v]] = c[[u, v]] * s;
        }
    }
    let mut a2 = Array2::<f64>::zeros((n, m1));
    for u in 0..m1 {
        let mut denom = 0.0;
        for j in 0..n {
            for l in 0..p {
                for v in 0..m2 {
                    denom += c[[u, v]] * ratio(j, l) * a[[j, u]] * b[[l, v]];
                }
            }
        }
        for i in 0..n {
            let mut num = 0.0;
            for l in 0..p {
                for v in 0..m2 {
                    num += c[[u, v]] * ratio(i, l) * b[[l, v]];
                }
            }
            a2[[i, u]] = a[[i, u]] * num / denom;
        }
    }
    let mut b2 = Array2::<f64>::zeros((p, m2));
    for v in 0..m2 {
        let mut denom = 0.0;
        for j in 0..n {
            for l in 0..p {
                for u in 0..m1 {
                    denom += c[[u, v]] * ratio(j, l) * a[[j, u]] * b[[l, v]];
                }
            }
        }
        for k in 0..p {
            let mut num = 0.0;
            for j in 0..n {
                for u in 0..m1 {
                    num += c[[u, v]] * ratio(j, k) * a[[j, u]];
                }
            }
            b2[[k, v]] = b[[k, v]] * num / denom;
        }
    }
    (c2, a2, b2)
}

/// Network membership update written out index by index.
pub fn network_step_oracle(f: &Array2<f64>, z: &Array2<f64>, w: &Array1<f64>) -> (Array2<f64>, Array1<f64>) {
    let n = f.nrows();
    let m = z.ncols();
    let rho: Vec<f64> = (0..m).map(|g| (0..n).map(|i| w[i] * z[[i, g]]).sum()).collect();
    let mut pm = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            for g in 0..m {
                pm[[i, j]] += w[i] * w[j] * z[[i, g]] * z[[j, g]] / rho[g];
            }
        }
    }
    let mut z2 = Array2::<f64>::zeros((n, m));
    for i in 0..n {
        for g in 0..m {
            let mut s = 0.0;
            for j in 0..n {
                if f[[i, j]] > 0.0 {
                    s += f[[i, j]] / pm[[i, j]] * w[j] * z[[j, g]] / rho[g];
                }
            }
            z2[[i, g]] = z[[i, g]] * s;
        }
    }
    let rho2 = Array1::from_shape_fn(m, |g| (0..n).map(|i| w[i] * z2[[i, g]]).sum());
    (z2, rho2)
}

/// Simulates a hidden chain with transition matrix `w` and emissions
/// `emit[state][symbol]`; returns the symbol sequence and hidden states.
pub fn simulate_chain<R: Rng>(
    w: &[Vec<f64>],
    emit: &[Vec<f64>],
    len: usize,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    let draw = |probs: &[f64], rng: &mut R| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        probs.len() - 1
    };
    let mut state = 0;
    let mut states = Vec::with_capacity(len);
    let mut symbols = Vec::with_capacity(len);
    for _ in 0..len {
        states.push(state);
        symbols.push(draw(&emit[state], rng));
        state = draw(&w[state], rng);
    }
    (symbols, states)
}

pub fn bigram_counts(symbols: &[usize], n: usize) -> Array2<f64> {
    let mut counts = Array2::<f64>::zeros((n, n));
    for pair in symbols.windows(2) {
        counts[[pair[0], pair[1]]] += 1.0;
    }
    counts
}
