//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::time::Instant;

use common::*;
use latentem::colatent::hard_block_model;
use latentem::linalg::min_symmetric_eigenvalue;
use latentem::network::{fit_network_co, NetworkCoOptions};
use latentem::{
    mh_membership_recovery, CoLatentModel, ContingencyTable, FitOptions, LatentModel,
    NetworkCoModel, NetworkLatentModel, Variant,
};
use ndarray::{array, Array1, Array2, Axis};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_monotone(trace: &[f64], what: &str) -> Result<(), String> {
    for (t, w) in trace.windows(2).enumerate() {
        ensure(w[1] <= w[0] + 1e-12, || {
            format!("{what}: K rose from {} to {} at cycle {}", w[0], w[1], t + 1)
        })?;
    }
    Ok(())
}

/// 1. Monotone descent for all four fitters on 100 random tables.
fn monotone_descent() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let opts = FitOptions { max_iter: 100, tol: 0.0 };
    for case in 0..100 {
        let n = 2 + case % 11;
        let p = 2 + (case * 7) % 11;
        let m = 1 + case % 4;
        let f = random_table(n, p, &mut rng);
        let latent = LatentModel::random_init(&f, m, &mut rng).unwrap();
        let (_, t) = latent.fit(&f, &opts).map_err(|e| e.to_string())?;
        check_monotone(&t.kl_per_iteration, "latent")?;

        let m2 = 1 + (case / 4) % 4;
        let co = CoLatentModel::random_init(&f, m, m2, &mut rng).unwrap();
        let (_, t) = co.fit(&f, &opts).map_err(|e| e.to_string())?;
        check_monotone(&t.kl_per_iteration, "co-latent")?;

        let sq = random_table(n, n, &mut rng);
        let sym = sq.symmetrize().unwrap();
        let net = NetworkLatentModel::random_init(&sym, m, &mut rng).unwrap();
        let (_, t) = net.fit(&sym, &opts).map_err(|e| e.to_string())?;
        check_monotone(&t.kl_per_iteration, "network latent")?;

        let variant = [Variant::General, Variant::MarginallyHomogeneous][case % 2];
        let netco = NetworkCoModel::random_init(&sq, m, variant, &mut rng).unwrap();
        let fit = fit_network_co(&sq, &netco, &NetworkCoOptions { fit: opts, mh_projection_every: None })
            .map_err(|e| e.to_string())?;
        check_monotone(&fit.trace.kl_per_iteration, "network co")?;
        let symco = NetworkCoModel::random_init(&sym, m, Variant::Symmetric, &mut rng).unwrap();
        let fit = fit_network_co(&sym, &symco, &NetworkCoOptions { fit: opts, mh_projection_every: None })
            .map_err(|e| e.to_string())?;
        check_monotone(&fit.trace.kl_per_iteration, "network co symmetric")?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("500 fits x 100 cycles in {secs:.2} s"))
}

/// 2. Margins match after one cycle of the latent and co-latent updates.
fn margin_preservation() -> Outcome {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (n, p) = (2 + case % 9, 2 + (case * 5) % 9);
        let f = random_table(n, p, &mut rng);
        let rows = f.row_margins().to_owned();
        let cols = f.col_margins().to_owned();
        let latent = LatentModel::random_init(&f, 1 + case % 4, &mut rng).unwrap();
        let (next, _) = latent.em_step(&f).unwrap();
        let pm = next.reconstruct();
        worst = worst
            .max(max_abs_diff1(&pm.sum_axis(Axis(1)), &rows))
            .max(max_abs_diff1(&pm.sum_axis(Axis(0)), &cols));
        let co = CoLatentModel::random_init(&f, 1 + case % 3, 1 + case % 4, &mut rng).unwrap();
        let (next, _, _) = co.em_step(&f).unwrap();
        let pm = next.reconstruct();
        worst = worst
            .max(max_abs_diff1(&pm.sum_axis(Axis(1)), &rows))
            .max(max_abs_diff1(&pm.sum_axis(Axis(0)), &cols));
    }
    ensure(worst <= 1e-10, || format!("margin error {worst:e}"))?;
    Ok(format!("max margin error {worst:.1e}"))
}

/// 3. One group: independence after one step, K = I(X:Y).
fn independence_fixed_point() -> Outcome {
    let mut rng = rng(3);
    let mut worst_margin: f64 = 0.0;
    let mut worst_k: f64 = 0.0;
    for case in 0..30 {
        let f = random_table(2 + case % 7, 2 + (case * 3) % 8, &mut rng);
        let init = LatentModel::new(
            array![1.0],
            random_emissions(f.nrows(), 1, &mut rng),
            random_emissions(f.ncols(), 1, &mut rng),
        )
        .unwrap();
        let (one, _) = init.em_step(&f).unwrap();
        worst_margin = worst_margin
            .max(max_abs_diff1(&one.a().column(0).to_owned(), &f.row_margins().to_owned()))
            .max(max_abs_diff1(&one.b().column(0).to_owned(), &f.col_margins().to_owned()));
        let (_, trace) = init.fit(&f, &FitOptions::default()).unwrap();
        worst_k = worst_k.max((trace.final_kl() - f.mutual_information()).abs());
    }
    ensure(worst_margin <= 1e-12 && worst_k <= 1e-12, || {
        format!("margin error {worst_margin:e}, K error {worst_k:e}")
    })?;
    Ok(format!("emission error {worst_margin:.1e}, |K - I| {worst_k:.1e}"))
}

/// 4. Saturated model reproduces F and is a fixed point.
fn saturated_model() -> Outcome {
    let mut rng = rng(4);
    let mut worst_rec: f64 = 0.0;
    let mut worst_fix: f64 = 0.0;
    for case in 0..30 {
        let f = random_table(2 + case % 8, 2 + (case * 3) % 8, &mut rng);
        let s = LatentModel::saturated(&f);
        worst_rec = worst_rec.max(max_abs_diff(&s.reconstruct(), &f.values().to_owned()));
        let (next, _) = s.em_step(&f).unwrap();
        worst_fix = worst_fix
            .max(max_abs_diff1(next.rho(), s.rho()))
            .max(max_abs_diff(next.a(), s.a()))
            .max(max_abs_diff(next.b(), s.b()));
    }
    ensure(worst_rec <= 1e-14 && worst_fix <= 1e-14, || {
        format!("reconstruction {worst_rec:e}, step change {worst_fix:e}")
    })?;
    Ok(format!("reconstruction {worst_rec:.1e}, step change {worst_fix:.1e}"))
}

/// 5. Hard block clustering: K = I(X:Y) - I(U:V).
fn block_identity() -> Outcome {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (n, p) = (2 + case % 10, 2 + (case * 7) % 10);
        let f = random_table(n, p, &mut rng);
        let rows = random_partition(n, 1 + case % n, &mut rng);
        let cols = random_partition(p, 1 + (case / 2) % p, &mut rng);
        let (model, k) = hard_block_model(&f, &rows, &cols).map_err(|e| e.to_string())?;
        let identity = mi_oracle(&f.values().to_owned()) - mi_oracle(model.c());
        worst = worst.max((k - identity).abs());
    }
    ensure(worst <= 1e-12, || format!("identity error {worst:e}"))?;
    Ok(format!("max |K - (I(X:Y) - I(U:V))| = {worst:.1e}"))
}

/// 6. Single steps against hand values and brute-force evaluation.
fn hand_oracle_steps() -> Outcome {
    let f = ContingencyTable::normalize(array![[0.4, 0.1], [0.1, 0.4]].view()).unwrap();
    let fv = f.values().to_owned();

    let rho = array![0.5, 0.5];
    let a = Array2::eye(2);
    let b = Array2::from_elem((2, 2), 0.5);
    let (next, diag) = LatentModel::new(rho.clone(), a.clone(), b.clone()).unwrap().em_step(&f).unwrap();
    let (orho, oa, ob, okappa) = latent_step_oracle(&fv, &rho, &a, &b);
    let latent_err = max_abs_diff1(next.rho(), &orho)
        .max(max_abs_diff(next.a(), &oa))
        .max(max_abs_diff(next.b(), &ob))
        .max(max_abs_diff1(&diag.kappa, &okappa))
        .max(max_abs_diff(next.b(), &array![[0.8, 0.2], [0.2, 0.8]]))
        .max(max_abs_diff1(&diag.kappa, &array![1.0, 1.0]));

    let c = Array2::from_elem((2, 2), 0.25);
    let co = CoLatentModel::new(c.clone(), a.clone(), a.clone()).unwrap();
    let (next, _, k) = co.em_step(&f).unwrap();
    let (oc, oa, ob) = colatent_step_oracle(&fv, &c, &a, &a);
    let co_err = max_abs_diff(next.c(), &oc)
        .max(max_abs_diff(next.a(), &oa))
        .max(max_abs_diff(next.b(), &ob))
        .max(max_abs_diff(next.c(), &fv))
        .max(k.abs());

    let g = ContingencyTable::normalize(array![[0.3, 0.2], [0.2, 0.3]].view()).unwrap();
    let z = array![[0.8, 0.2], [0.2, 0.8]];
    let w = array![0.5, 0.5];
    let (next, _, _) = NetworkLatentModel::new(z.clone(), w.clone()).unwrap().em_step(&g).unwrap();
    let (oz, orho) = network_step_oracle(&g.values().to_owned(), &z, &w);
    let hand = 0.8 * (0.3 / 0.34 * 0.5 * 0.8 + 0.2 / 0.16 * 0.5 * 0.2) / 0.5;
    let net_err = max_abs_diff(next.z(), &oz)
        .max(max_abs_diff1(next.rho(), &orho))
        .max((next.z()[[0, 0]] - hand).abs());
    ensure((next.z()[[0, 0]] - 0.76471).abs() < 5e-6, || format!("z11 = {}", next.z()[[0, 0]]))?;

    let worst = latent_err.max(co_err).max(net_err);
    ensure(worst <= 1e-12, || {
        format!("latent {latent_err:e}, co-latent {co_err:e}, network {net_err:e}")
    })?;
    Ok(format!("z11 = {:.5}, max deviation {worst:.1e}", next.z()[[0, 0]]))
}

/// 7. Membership rows stay stochastic and P stays PSD.
fn network_closure() -> Outcome {
    let mut rng = rng(7);
    let mut worst_row: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    for case in 0..50 {
        let f = random_symmetric_table(2 + case % 11, &mut rng);
        let mut model = NetworkLatentModel::random_init(&f, 1 + case % 4, &mut rng).unwrap();
        for _ in 0..20 {
            let (next, _, _) = model.em_step(&f).map_err(|e| e.to_string())?;
            model = next;
            for row in model.z().axis_iter(Axis(0)) {
                worst_row = worst_row.max((row.sum() - 1.0).abs());
            }
            worst_eig = worst_eig.min(min_symmetric_eigenvalue(model.reconstruct().view()));
        }
    }
    ensure(worst_row <= 1e-12 && worst_eig >= -1e-10, || {
        format!("row sum error {worst_row:e}, min eigenvalue {worst_eig:e}")
    })?;
    Ok(format!("row sum error {worst_row:.1e}, min eigenvalue {worst_eig:.1e}"))
}

/// 8. Diagonal inflation keeps margins, scales off-diagonal flow by lambda.
fn diagonal_inflation() -> Outcome {
    let mut rng = rng(8);
    let mut worst_margin: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for case in 0..50 {
        let f = random_symmetric_table(2 + case % 10, &mut rng);
        let bounds = f.lambda_bounds().unwrap();
        let lambda = 1.0 + (bounds.nonneg.min(20.0) - 1.0) * rng.random_range(0.0..1.0);
        let g = f.diagonal_inflation(lambda).map_err(|e| e.to_string())?;
        let n = f.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    ensure(g.values()[[i, j]] == lambda * f.values()[[i, j]], || {
                        format!("off-diagonal ({i},{j}) not scaled exactly")
                    })?;
                }
            }
        }
        worst_margin = worst_margin.max(max_abs_diff1(&g.row_margins().to_owned(), &f.row_margins().to_owned()));
        let trace = |t: &ContingencyTable| (0..n).map(|i| t.values()[[i, i]]).sum::<f64>();
        worst_trace = worst_trace.max(((1.0 - trace(&g)) - lambda * (1.0 - trace(&f))).abs());
    }
    let f = ContingencyTable::normalize(array![[0.45, 0.05], [0.05, 0.45]].view()).unwrap();
    let b = f.lambda_bounds().unwrap();
    // the PSD tolerance of 1e-10 moves the root 0.5 - 0.1 lambda = 0 by 1e-9
    ensure((b.nonneg - 10.0).abs() <= 1e-12 && (b.psd - 5.0).abs() <= 1e-8, || {
        format!("bounds ({}, {})", b.nonneg, b.psd)
    })?;
    ensure(worst_margin <= 1e-14 && worst_trace <= 1e-12, || {
        format!("margin error {worst_margin:e}, off-diagonal mass error {worst_trace:e}")
    })?;
    Ok(format!(
        "bounds ({:.9}, {:.9}), margin error {worst_margin:.1e}",
        b.nonneg, b.psd
    ))
}

/// 9. Synthetic recovery of a two-block network and an alternating chain.
fn synthetic_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(9);

    // two blocks of 10 vertices, each block an exact rank-one interaction
    let n = 20;
    let truth: Vec<usize> = (0..n).map(|i| usize::from(i >= 10)).collect();
    let w = random_simplex(n, &mut rng);
    let z = Array2::from_shape_fn((n, 2), |(i, g)| if truth[i] == g { 1.0 } else { 0.0 });
    let f = ContingencyTable::normalize(NetworkLatentModel::new(z, w).unwrap().reconstruct().view()).unwrap();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..10 {
        let init = NetworkLatentModel::random_init(&f, 2, &mut rng).unwrap();
        let (model, trace) = init.fit(&f, &FitOptions::default()).map_err(|e| e.to_string())?;
        if best.as_ref().is_none_or(|(k, _)| trace.final_kl() < *k) {
            best = Some((trace.final_kl(), model.hard_assignment()));
        }
    }
    let (block_k, assignment) = best.unwrap();
    let same = assignment.iter().zip(&truth).all(|(a, t)| a == t);
    let flipped = assignment.iter().zip(&truth).all(|(a, t)| *a != *t);
    ensure(same || flipped, || format!("partition not recovered: {assignment:?}"))?;
    ensure(block_k < 1e-8, || format!("two-block K = {block_k:e}"))?;

    // alternating hidden chain over 4 symbols
    let chain = vec![vec![0.02, 0.98], vec![0.97, 0.03]];
    let emit = vec![vec![0.6, 0.4, 0.0, 0.0], vec![0.0, 0.0, 0.3, 0.7]];
    let (symbols, states) = simulate_chain(&chain, &emit, 50_000, &mut rng);
    let empirical = states.iter().filter(|&&s| s == 0).count() as f64 / states.len() as f64;
    let f = ContingencyTable::normalize(bigram_counts(&symbols, 4).view()).unwrap();
    let opts = NetworkCoOptions::default();
    let mut best: Option<latentem::NetworkCoFit> = None;
    for _ in 0..10 {
        let init = NetworkCoModel::random_init(&f, 2, Variant::General, &mut rng).unwrap();
        let fit = fit_network_co(&f, &init, &opts).map_err(|e| e.to_string())?;
        if best.as_ref().is_none_or(|b| fit.trace.final_kl() < b.trace.final_kl()) {
            best = Some(fit);
        }
    }
    let fit = best.unwrap();
    // the group emitting symbol 0 plays hidden state 0
    let g0 = if fit.model.a()[[0, 0]] > fit.model.a()[[0, 1]] { 0 } else { 1 };
    let diag = fit.summary.w[[0, 0]].max(fit.summary.w[[1, 1]]);
    let pi_err = (fit.summary.pi[g0] - empirical).abs();
    ensure(diag < 0.05, || format!("W diagonal {diag}"))?;
    ensure(pi_err <= 0.02, || format!("pi error {pi_err}"))?;

    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "two-block K {block_k:.1e}; chain max diag(W) {diag:.4}, pi error {pi_err:.4}; {secs:.2} s"
    ))
}

/// 10. Symmetric variant keeps C symmetric.
fn symmetry_preservation() -> Outcome {
    let mut rng = rng(10);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let f = random_symmetric_table(3 + case % 8, &mut rng);
        let mut model = NetworkCoModel::random_init(&f, 1 + case % 4, Variant::Symmetric, &mut rng).unwrap();
        for _ in 0..50 {
            let (next, _, _) = model.em_step(&f).map_err(|e| e.to_string())?;
            model = next;
            worst = worst.max(max_abs_diff(model.c(), &model.c().t().to_owned()));
        }
    }
    ensure(worst <= 1e-12, || format!("asymmetry {worst:e}"))?;
    Ok(format!("max |C - C'| = {worst:.1e}"))
}

/// 11. Membership recovery from consistent emissions and frequencies.
fn mh_recovery() -> Outcome {
    let mut rng = rng(11);
    let mut worst_rows: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for case in 0..50 {
        let m = 1 + case % 4;
        let n = m + 1 + case % 6;
        let a = random_emissions(n, m, &mut rng);
        let rho = random_simplex(m, &mut rng);
        let f: Array1<f64> = a.dot(&rho);
        let r = mh_membership_recovery(&a, &f).map_err(|e| e.to_string())?;
        for row in r.z.axis_iter(Axis(0)) {
            worst_rows = worst_rows.max((row.sum() - 1.0).abs());
        }
        worst_res = worst_res.max(r.residual);
    }
    ensure(worst_rows <= 1e-12 && worst_res <= 1e-12, || {
        format!("row sum error {worst_rows:e}, residual {worst_res:e}")
    })?;
    Ok(format!("row sum error {worst_rows:.1e}, residual {worst_res:.1e}"))
}

/// 12. Nested families: best K with m + 1 groups never exceeds best with m.
fn nesting() -> Outcome {
    let mut rng = rng(12);
    let opts = FitOptions::default();
    let mut worst = f64::NEG_INFINITY;
    for case in 0..10 {
        let f = random_table(6 + case % 4, 5 + case % 5, &mut rng);
        let m = 1 + case % 3;
        let best = |groups: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Result<f64, String> {
            let mut best = f64::INFINITY;
            for _ in 0..20 {
                let init = LatentModel::random_init(&f, groups, rng).unwrap();
                let (_, trace) = init.fit(&f, &opts).map_err(|e| e.to_string())?;
                best = best.min(trace.final_kl());
            }
            Ok(best)
        };
        let k_m = best(m, &mut rng)?;
        let k_next = best(m + 1, &mut rng)?;
        worst = worst.max(k_next - k_m);
        ensure(k_next <= k_m + 1e-6, || {
            format!("table {case}: K_{} = {k_next} > K_{m} = {k_m}", m + 1)
        })?;
    }
    Ok(format!("max K(m+1) - K(m) = {worst:.2e}"))
}

use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("monotone descent", monotone_descent),
        ("margin preservation", margin_preservation),
        ("independence fixed point", independence_fixed_point),
        ("saturated model", saturated_model),
        ("block identity", block_identity),
        ("hand-oracle steps", hand_oracle_steps),
        ("network closure", network_closure),
        ("diagonal inflation", diagonal_inflation),
        ("synthetic recovery", synthetic_recovery),
        ("symmetry preservation", symmetry_preservation),
        ("MH recovery", mh_recovery),
        ("nesting", nesting),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
