//! Acceptance gate: ten end-to-end checks covering the golden values,
//! metric and explainer oracles, the benchmark and stability protocols,
//! determinism, and the rank-test pipeline. Each check prints one
//! `acceptance NN PASS/FAIL` line (run with `--nocapture` to see them).
//!
//! Check 01 contains one knowingly red sub-check: the published rank
//! agreement table truncates 7/9 = 0.778 to .77, which no correct
//! implementation can match within the 0.005 tolerance. The exact value is
//! asserted instead and the summary line reports the discrepancy.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use idcs::costs::CostSet;
use idcs::explain::{shap_permutation, ShapConfig};
use idcs::harness::{
    run_performance_bench, run_stability_experiment, write_bench_csv, write_rank_csv,
    write_stability_csv, BoostGrid, ExperimentConfig, ForestGrid, GridSpec, LogitGrid, NetGrid,
    NULL_MODEL,
};
use idcs::losses::{aec_grad_hess, aec_instance};
use idcs::metrics::{
    auc, average_precision, baseline_cost, friedman_from_ranks, incurred_cost, savings,
};
use idcs::models::{best_cost_split, Penalty};
use idcs::stability::{ks_two_sample, median_of, rank_agreement, sra, KsAlternative};
use idcs::synth::{generate, SynthConfig};

fn report(n: u32, ok: bool, msg: &str) {
    use std::io::Write;
    let line = format!("acceptance {n:02} {}: {msg}\n", if ok { "PASS" } else { "FAIL" });
    // The test harness captures the test thread's stdout/stderr; write to
    // the process stderr directly so the gate lines always reach the
    // console, not only under --nocapture.
    match std::fs::OpenOptions::new().write(true).open("/dev/stderr") {
        Ok(mut f) => {
            let _ = f.write_all(line.as_bytes());
        }
        Err(_) => print!("{line}"),
    }
}

// ---------------------------------------------------------------------------
// 01: rank agreement golden table
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_sra_golden_table() {
    // Three importance rankings of five features; each list maps feature ->
    // rank, 1 = most important.
    let lists = vec![vec![4, 2, 3, 1, 5], vec![4, 3, 2, 1, 5], vec![3, 4, 1, 2, 5]];

    // Per-feature rank variances (published as .33, 1, 1, .33, 0).
    let exact_var = [1.0 / 3.0, 1.0, 1.0, 1.0 / 3.0, 0.0];
    let golden_var = [0.33, 1.0, 1.0, 0.33, 0.0];
    for (feat, (&ev, &gv)) in exact_var.iter().zip(&golden_var).enumerate() {
        let ranks: Vec<f64> = lists.iter().map(|l| l[feat] as f64).collect();
        let v = rank_agreement(&ranks);
        assert!((v - ev).abs() < 1e-12, "feature {feat}: variance {v} != exact {ev}");
        assert!((v - gv).abs() <= 0.005, "feature {feat}: variance {v} vs golden {gv}");
    }

    // Depth-wise rank agreement (published as .67, .77, .67, .67, .53).
    let exact_sra = [2.0 / 3.0, 7.0 / 9.0, 2.0 / 3.0, 2.0 / 3.0, 8.0 / 15.0];
    let golden_sra = [0.67, 0.77, 0.67, 0.67, 0.53];
    let mut depth2_off = 0.0;
    let mut golden_ok = true;
    for d in 1..=5 {
        let v = sra(&lists, d).unwrap();
        assert!(
            (v - exact_sra[d - 1]).abs() < 1e-12,
            "depth {d}: sra {v} != exact {}",
            exact_sra[d - 1]
        );
        let off = (v - golden_sra[d - 1]).abs();
        if d == 2 {
            depth2_off = off;
        } else if off > 0.005 {
            golden_ok = false;
        }
    }
    assert!(golden_ok, "a depth other than 2 missed its golden value");

    // Depth 2: exact value is 7/9 = 0.7778 but the golden table prints .77,
    // a truncation (its other entries are rounded). 0.0078 > 0.005 can
    // never pass; the exact value is asserted above instead.
    let ok = depth2_off <= 0.005;
    report(
        1,
        ok,
        &format!(
            "depth-2 golden value .77 is unattainable: the exact estimator gives 7/9 = 0.7778 \
             (off by {depth2_off:.4} > 0.005; the table truncates where its other entries \
             round); all other golden values match within 0.005 and every exact value is \
             verified at 1e-12"
        ),
    );
}

// ---------------------------------------------------------------------------
// 02: savings golden scenario
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_savings_golden() {
    // One defaulter with c_fn = 10, two non-defaulters with c_fp = 1 and 5.
    let y = [1u8, 0, 0];
    let costs = CostSet { c_fn: vec![10.0, 0.0, 0.0], c_fp: vec![0.0, 1.0, 5.0], floored: 0 };

    let base = baseline_cost(&y, &costs);
    assert_eq!(base, 6.0, "baseline min(10, 1+5) must be exactly 6");

    // A classifier incurring C_f = 3 saves half of the baseline.
    let s = 1.0 - 3.0 / base;
    assert_eq!(s, 0.5);

    // End-to-end consistency of the savings function on realizable policies.
    for y_hat in [[0u8, 0, 0], [1, 1, 1], [1, 0, 0], [0, 1, 1]] {
        let direct = 1.0 - incurred_cost(&y, &y_hat, &costs) / base;
        assert_eq!(savings(&y, &y_hat, &costs).unwrap(), direct);
    }
    assert_eq!(savings(&y, &[1, 0, 0], &costs).unwrap(), 1.0);

    report(2, true, "baseline cost 6 exact; savings at incurred cost 3 is 0.5 exact");
}

// ---------------------------------------------------------------------------
// 03: metric oracles
// ---------------------------------------------------------------------------

fn auc_pair_count(y: &[u8], s: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

#[test]
fn criterion_03_metric_oracles() {
    let mut r = idcs::rng::rng(1003);

    // AUC: rank-sum implementation vs quadratic pair counting, with ties.
    for trial in 0..200 {
        let n = r.gen_range(5..60);
        let mut y: Vec<u8> = (0..n).map(|_| r.gen_range(0..2) as u8).collect();
        // force both classes
        y[0] = 1;
        y[n - 1] = 0;
        // coarse score grid so ties occur often
        let s: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0..8)) / 7.0).collect();
        let fast = auc(&y, &s).unwrap();
        let slow = auc_pair_count(&y, &s);
        assert!((fast - slow).abs() < 1e-12, "trial {trial}: auc {fast} vs oracle {slow}");
    }

    // Average precision of a random ranker converges to the positive rate.
    let n = 500;
    let n_pos = 92; // 92/500 = 0.184
    let y: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    let mut total = 0.0;
    for _ in 0..1000 {
        let s: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        total += average_precision(&y, &s).unwrap();
    }
    let mean_ap = total / 1000.0;
    assert!(
        (mean_ap - 0.184).abs() <= 0.01,
        "random-ranker AP {mean_ap} outside 0.184 +/- 0.01"
    );

    // Null-model row of the benchmark: constant prior-rate scores.
    let ds = generate(&SynthConfig::tiny(5)).unwrap();
    let cfg = ExperimentConfig {
        outer_folds: 5,
        inner_folds: 2,
        models: vec!["logit".into()],
        grids: GridSpec {
            logit: LogitGrid { penalty: vec![Penalty::L2], c: vec![1e-2] },
            ..GridSpec::default()
        },
        ..ExperimentConfig::default()
    };
    let bench = run_performance_bench("tiny", &ds, &cfg).unwrap();
    let null = bench.result(NULL_MODEL).unwrap();
    // 200 rows at 30% positives split into 5 stratified folds: every train
    // and test rate is exactly 0.3, so the constant-score Brier is exactly
    // p(1-p) = 0.21 up to summation roundoff.
    for f in &null.folds {
        assert_eq!(f.auc, 0.5, "null AUC must be exactly 1/2");
        assert_eq!(f.rel_aec, 0.0, "null relAEC must be exactly 0");
        assert_eq!(f.savings, 0.0, "null savings must be exactly 0");
        assert!((f.brier - 0.21).abs() < 1e-12, "null Brier {} != 0.3*0.7", f.brier);
    }

    report(
        3,
        true,
        "AUC matches pair counting on 200 tied instances; random-ranker AP within \
         0.184 +/- 0.01; null row AUC 0.5, relAEC 0, savings 0 exact, Brier p(1-p)",
    );
}

// ---------------------------------------------------------------------------
// 04: exhaustive permutation attributions equal Shapley values
// ---------------------------------------------------------------------------

fn brute_force_shapley(
    f: &dyn Fn(ArrayView1<'_, f64>) -> f64,
    background: &Array2<f64>,
    x: &Array1<f64>,
) -> Vec<f64> {
    let d = x.len();
    let v = |mask: u32| -> f64 {
        let mut total = 0.0;
        for b in background.outer_iter() {
            let mut z = b.to_owned();
            for k in 0..d {
                if mask & (1 << k) != 0 {
                    z[k] = x[k];
                }
            }
            total += f(z.view());
        }
        total / background.nrows() as f64
    };
    let fact = |n: usize| -> f64 { (1..=n).product::<usize>() as f64 };
    let mut phi = vec![0.0; d];
    for k in 0..d {
        for mask in 0u32..(1 << d) {
            if mask & (1 << k) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            phi[k] += fact(s) * fact(d - s - 1) / fact(d) * (v(mask | (1 << k)) - v(mask));
        }
    }
    phi
}

#[test]
fn criterion_04_shap_exactness() {
    let cfg = ShapConfig::default(); // exact mode at d = 4 <= threshold 6
    let mut r = idcs::rng::rng(1004);

    let models: Vec<Box<dyn Fn(ArrayView1<'_, f64>) -> f64 + Sync>> = vec![
        Box::new(|x: ArrayView1<'_, f64>| (x[0] * x[1]).tanh() + x[2].powi(2) - 0.5 * x[3]),
        Box::new(|x: ArrayView1<'_, f64>| (x[0] + 2.0 * x[1] - x[2] * x[3]).sin()),
        Box::new(|x: ArrayView1<'_, f64>| x[0].exp() / (1.0 + x[1].abs()) + x[2] * x[3]),
    ];
    for (mi, f) in models.iter().enumerate() {
        let background = Array2::from_shape_fn((8, 4), |_| r.gen_range(-1.0f64..1.0));
        let x = Array1::from_shape_fn(4, |_| r.gen_range(-1.0f64..1.0));
        let e = shap_permutation(f, background.view(), x.view(), 0, &cfg).unwrap();
        let exact = brute_force_shapley(f, &background, &x);
        for (k, (a, b)) in e.values.iter().zip(&exact).enumerate() {
            assert!((a - b).abs() < 1e-9, "model {mi} feature {k}: {a} vs Shapley {b}");
        }
        // efficiency: attributions + base value reproduce the prediction
        let total: f64 = e.values.iter().sum::<f64>() + e.base_value.unwrap();
        assert!((total - f(x.view())).abs() < 1e-9, "model {mi}: efficiency violated");
    }

    // symmetry and dummy: features 0 and 1 interchangeable, feature 3 unused
    let f = |x: ArrayView1<'_, f64>| (x[0] + x[1]).powi(2) + x[2];
    let mut background = Array2::zeros((6, 4));
    for mut row in background.outer_iter_mut() {
        let v = r.gen_range(-1.0f64..1.0);
        row[0] = v;
        row[1] = v;
        row[2] = r.gen_range(-1.0f64..1.0);
        row[3] = r.gen_range(-1.0f64..1.0);
    }
    let x = ndarray::array![0.8, 0.8, -0.3, 0.9];
    let e = shap_permutation(&f, background.view(), x.view(), 0, &cfg).unwrap();
    assert!((e.values[0] - e.values[1]).abs() < 1e-9, "symmetry violated");
    assert!(e.values[3].abs() < 1e-9, "dummy feature got attribution");

    report(
        4,
        true,
        "exhaustive permutation attributions equal 16-coalition Shapley values to 1e-9; \
         efficiency, symmetry, and dummy properties hold",
    );
}

// ---------------------------------------------------------------------------
// 05: expected-cost loss calculus vs finite differences
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_aec_calculus() {
    let mut r = idcs::rng::rng(1005);
    let eps = 1e-4;
    for trial in 0..1000 {
        let y = r.gen_range(0..2) as u8;
        let z: f64 = r.gen_range(-4.0..4.0);
        let c_fn: f64 = r.gen_range(0.1..100.0);
        let c_fp: f64 = r.gen_range(0.1..100.0);
        let f = |z: f64| aec_instance(y, idcs::losses::logistic(z), c_fn, c_fp);

        let (g, h) = aec_grad_hess(y, z, c_fn, c_fp);
        let g_num = (f(z + eps) - f(z - eps)) / (2.0 * eps);
        let h_num = (f(z + eps) - 2.0 * f(z) + f(z - eps)) / (eps * eps);

        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
        assert!(rel(g, g_num) < 1e-4, "trial {trial}: grad {g} vs numeric {g_num}");
        assert!(rel(h, h_num) < 1e-4, "trial {trial}: hess {h} vs numeric {h_num}");
    }
    report(5, true, "gradient and hessian match central differences to 1e-4 on 1000 tuples");
}

// ---------------------------------------------------------------------------
// 06: cost-based split selection vs exhaustive enumeration
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_cost_split_oracle() {
    let mut r = idcs::rng::rng(1006);
    let mut checked = 0usize;
    for trial in 0..300 {
        let n = r.gen_range(2..=12);
        let d = r.gen_range(1..=4);
        let x = Array2::from_shape_fn((n, d), |_| f64::from(r.gen_range(0..5)));
        let y: Vec<u8> = (0..n).map(|_| r.gen_range(0..2) as u8).collect();
        let c_fn: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..50.0)).collect();
        let c_fp: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..10.0)).collect();
        let rows: Vec<usize> = (0..n).collect();
        let features: Vec<usize> = (0..d).collect();

        let node_cost = |rows: &[usize]| -> f64 {
            let (mut p0, mut p1) = (0.0, 0.0);
            for &i in rows {
                if y[i] == 1 {
                    p0 += c_fn[i];
                } else {
                    p1 += c_fp[i];
                }
            }
            p0.min(p1)
        };

        // exhaustive enumeration over every (feature, midpoint) partition
        let parent = node_cost(&rows);
        let mut best_gain = 0.0;
        for f in 0..d {
            let mut vals: Vec<f64> = rows.iter().map(|&i| x[[i, f]]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let left: Vec<usize> = rows.iter().copied().filter(|&i| x[[i, f]] <= t).collect();
                let right: Vec<usize> = rows.iter().copied().filter(|&i| x[[i, f]] > t).collect();
                let gain = parent - node_cost(&left) - node_cost(&right);
                if gain > best_gain {
                    best_gain = gain;
                }
            }
        }

        match best_cost_split(x.view(), &rows, &features, &y, &c_fn, &c_fp) {
            Some((f, t, gain)) => {
                assert!(
                    (gain - best_gain).abs() < 1e-9,
                    "trial {trial}: gain {gain} vs exhaustive {best_gain}"
                );
                // the reported split must itself realize the reported gain
                let left: Vec<usize> = rows.iter().copied().filter(|&i| x[[i, f]] <= t).collect();
                let right: Vec<usize> = rows.iter().copied().filter(|&i| x[[i, f]] > t).collect();
                let realized = parent - node_cost(&left) - node_cost(&right);
                assert!(
                    (realized - best_gain).abs() < 1e-9,
                    "trial {trial}: split ({f}, {t}) realizes {realized}, not {best_gain}"
                );
            }
            None => assert!(
                best_gain <= 1e-12,
                "trial {trial}: no split returned but exhaustive gain {best_gain}"
            ),
        }
        checked += 1;
    }
    report(
        6,
        true,
        &format!("cost split equals the exhaustive-enumeration optimum on {checked} random nodes"),
    );
}

// ---------------------------------------------------------------------------
// 07: benchmark directionality at desk scale
// ---------------------------------------------------------------------------

fn desk_grids() -> GridSpec {
    GridSpec {
        logit: LogitGrid { penalty: vec![Penalty::L1, Penalty::L2], c: vec![0.0, 1e-3, 1e-2, 1e-1] },
        boost: BoostGrid {
            learning_rate: vec![0.3],
            min_child_weight: vec![0.0, 50.0],
            max_depth: vec![1, 3],
            colsample_bytree: vec![1.0],
            gamma: vec![0.0],
            n_rounds: 100,
        },
        forest: ForestGrid { max_depth: vec![0, 10], n_estimators: vec![50] },
        net: NetGrid { learning_rate: vec![0.005], hidden: vec![32] },
    }
}

#[test]
fn criterion_07_benchmark_directionality() {
    let datasets =
        [("consumer", generate(&SynthConfig::small(7)).unwrap()),
         ("homeq", generate(&SynthConfig::home_equity(11)).unwrap())];
    let cfg = ExperimentConfig { grids: desk_grids(), ..ExperimentConfig::default() };

    let mut notes = Vec::new();
    for (name, ds) in &datasets {
        let t0 = std::time::Instant::now();
        let bench = run_performance_bench(name, ds, &cfg).unwrap();
        let mins = t0.elapsed().as_secs_f64() / 60.0;
        assert!(mins <= 30.0, "{name}: benchmark took {mins:.1} min, budget is 30");

        // (a) every trained model separates the classes
        for res in &bench.results {
            if res.model == NULL_MODEL {
                continue;
            }
            assert!(
                res.summary.auc.mean >= 0.65,
                "{name}/{}: mean AUC {:.3} below 0.65",
                res.model,
                res.summary.auc.mean
            );
        }

        // (b) cost-sensitive training does not hurt cost performance
        let rel = |m: &str| bench.result(m).unwrap().summary.rel_aec.mean;
        assert!(
            rel("csboost") >= rel("boost"),
            "{name}: relAEC csboost {:.3} < boost {:.3}",
            rel("csboost"),
            rel("boost")
        );
        assert!(
            rel("cslogit") >= rel("logit"),
            "{name}: relAEC cslogit {:.3} < logit {:.3}",
            rel("cslogit"),
            rel("logit")
        );

        // (c) the cost-sensitive logit trades calibration away
        let brier = |m: &str| bench.result(m).unwrap().summary.brier.mean;
        assert!(
            brier("cslogit") > brier("logit"),
            "{name}: Brier cslogit {:.4} <= logit {:.4}",
            brier("cslogit"),
            brier("logit")
        );

        notes.push(format!(
            "{name}: {mins:.1} min, relAEC cs/ce boost {:.3}/{:.3} logit {:.3}/{:.3}",
            rel("csboost"),
            rel("boost"),
            rel("cslogit"),
            rel("logit")
        ));
    }
    report(
        7,
        true,
        &format!(
            "all models AUC >= 0.65, cost-sensitive relAEC >= plain, cslogit Brier > logit \
             on both datasets ({})",
            notes.join("; ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 08: stability directionality
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_stability_directionality() {
    // The fixed-size resampling rule (floor(#positives / 0.3) rows, negatives
    // drawn without replacement) is infeasible below the original rate on a
    // 30%-positive dataset, so this runs on the ~20%-positive home-equity
    // shape, where every target rate in {0.05, 0.3} is feasible.
    let ds = generate(&SynthConfig::home_equity(17)).unwrap();
    let mut cfg = ExperimentConfig {
        grids: GridSpec {
            logit: LogitGrid { penalty: vec![Penalty::L2], c: vec![0.0, 1e-2, 1e-1] },
            ..GridSpec::default()
        },
        inner_folds: 5,
        ..ExperimentConfig::default()
    };
    cfg.stability.rates = vec![0.05, 0.3];
    cfg.stability.iterations = 10;
    cfg.stability.n_test = 300;

    let t0 = std::time::Instant::now();
    let ce = run_stability_experiment("homeq", &ds, "logit", &cfg, None).unwrap();
    let cs = run_stability_experiment("homeq", &ds, "cslogit", &cfg, None).unwrap();
    let mins = t0.elapsed().as_secs_f64() / 60.0;
    assert!(mins <= 60.0, "stability experiment took {mins:.1} min, budget is 60");

    // (a) cost-sensitive attributions are less stable at every rate
    let mut ps = Vec::new();
    for &rate in &[0.05, 0.3] {
        let a = cs.cov_values_at(rate);
        let b = ce.cov_values_at(rate);
        let (_, p) = ks_two_sample(&a, &b, KsAlternative::Greater).unwrap();
        assert!(
            p < 0.05,
            "rate {rate}: cslogit CoV not stochastically larger (p = {p:.4})"
        );
        ps.push(format!("pi={rate}: p={p:.2e}"));
    }

    // (b) stronger imbalance worsens stability for both models
    for (name, rep) in [("logit", &ce), ("cslogit", &cs)] {
        let low = median_of(&rep.cov_values_at(0.05));
        let high = median_of(&rep.cov_values_at(0.3));
        assert!(
            low > high,
            "{name}: median CoV at 0.05 ({low:.4}) not above 0.3 ({high:.4})"
        );
    }

    report(
        8,
        true,
        &format!(
            "cslogit attribution CoV stochastically larger than logit ({}); median CoV \
             higher at pi=0.05 than 0.3 for both models; {mins:.1} min",
            ps.join(", ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 09: determinism of experiment outputs
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(&SynthConfig { pos_rate: 0.15, ..SynthConfig::tiny(21) }).unwrap();
    let mut cfg = ExperimentConfig {
        outer_folds: 3,
        inner_folds: 2,
        models: vec!["logit".into(), "cslogit".into()],
        grids: GridSpec {
            logit: LogitGrid { penalty: vec![Penalty::L2], c: vec![1e-2, 1e-1] },
            ..GridSpec::default()
        },
        ..ExperimentConfig::default()
    };
    cfg.stability.rates = vec![0.1, 0.3];
    cfg.stability.iterations = 3;
    cfg.stability.n_test = 20;
    cfg.stability.shap.n_permutations = 2;

    let read = |p: &std::path::Path| std::fs::read(p).unwrap();

    // benchmark CSVs, twice from scratch
    let ds2 = generate(&SynthConfig { pos_rate: 0.15, ..SynthConfig::tiny(22) }).unwrap();
    let b1 = run_performance_bench("tiny", &ds, &cfg).unwrap();
    let b2 = run_performance_bench("tiny", &ds, &cfg).unwrap();
    let c1 = run_performance_bench("tiny2", &ds2, &cfg).unwrap();
    let c2 = run_performance_bench("tiny2", &ds2, &cfg).unwrap();
    let (p1, p2) = (dir.path().join("bench1.csv"), dir.path().join("bench2.csv"));
    write_bench_csv(&b1, &p1).unwrap();
    write_bench_csv(&b2, &p2).unwrap();
    assert_eq!(read(&p1), read(&p2), "benchmark CSVs differ between reruns");

    // cross-dataset rank CSV derived from the benchmark outputs
    let (r1, r2) = (dir.path().join("ranks1.csv"), dir.path().join("ranks2.csv"));
    write_rank_csv(&[b1, c1], &r1).unwrap();
    write_rank_csv(&[b2, c2], &r2).unwrap();
    assert_eq!(read(&r1), read(&r2), "rank CSVs differ between reruns");

    // stability CSV: fresh run vs run resumed from checkpoints
    let ckpt = dir.path().join("ckpt");
    let s1 = run_stability_experiment("tiny", &ds, "logit", &cfg, Some(&ckpt)).unwrap();
    let s2 = run_stability_experiment("tiny", &ds, "logit", &cfg, Some(&ckpt)).unwrap();
    let s3 = run_stability_experiment("tiny", &ds, "logit", &cfg, None).unwrap();
    let (q1, q2, q3) = (
        dir.path().join("stab1.csv"),
        dir.path().join("stab2.csv"),
        dir.path().join("stab3.csv"),
    );
    write_stability_csv(&s1, &q1).unwrap();
    write_stability_csv(&s2, &q2).unwrap();
    write_stability_csv(&s3, &q3).unwrap();
    assert_eq!(read(&q1), read(&q2), "stability CSVs differ after checkpoint resume");
    assert_eq!(read(&q1), read(&q3), "stability CSVs differ between fresh runs");

    report(
        9,
        true,
        "benchmark, rank, and stability CSVs byte-identical across reruns and \
         checkpoint resume",
    );
}

// ---------------------------------------------------------------------------
// 10: rank-test pipeline
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_friedman_pipeline() {
    // Hand-computed case: 4 datasets ranking 8 models identically 1..8.
    // chi2 = 12N/(k(k+1)) * sum_j (rbar_j - (k+1)/2)^2 = (48/72) * 42 = 28.
    // The rank table is models x datasets.
    let fixed: Vec<Vec<f64>> = (1..=8).map(|j| vec![f64::from(j); 4]).collect();
    let res = friedman_from_ranks(&fixed).unwrap();
    assert!((res.chi2 - 28.0).abs() < 1e-9, "chi2 {} != 28", res.chi2);
    assert!(res.p_value < 0.001);

    // No separation: every model mid-ranked, chi2 exactly 0.
    let flat: Vec<Vec<f64>> = (0..8).map(|_| vec![4.5; 4]).collect();
    let res = friedman_from_ranks(&flat).unwrap();
    assert!(res.chi2.abs() < 1e-9);

    // Published average AUC ranks of the 8 models over 4 datasets; the
    // statistic depends only on rank sums, so replicating the averages per
    // dataset reproduces the published chi2 of 17.33.
    let avg = [2.25, 5.5, 6.0, 7.5, 3.25, 3.25, 2.5, 5.75];
    let golden: Vec<Vec<f64>> = avg.iter().map(|&a| vec![a; 4]).collect();
    let res = friedman_from_ranks(&golden).unwrap();
    assert!((res.chi2 - 17.33).abs() <= 0.05, "chi2 {} vs golden 17.33", res.chi2);

    // Structural check: the rank report derived from our own benchmark
    // outputs has the expected shape.
    let cfg = ExperimentConfig {
        outer_folds: 3,
        inner_folds: 2,
        models: vec!["logit".into(), "cslogit".into()],
        grids: GridSpec {
            logit: LogitGrid { penalty: vec![Penalty::L2], c: vec![1e-2] },
            ..GridSpec::default()
        },
        ..ExperimentConfig::default()
    };
    let reports: Vec<_> = [31u64, 32]
        .iter()
        .map(|&s| {
            let ds = generate(&SynthConfig::tiny(s)).unwrap();
            run_performance_bench(&format!("d{s}"), &ds, &cfg).unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ranks.csv");
    write_rank_csv(&reports, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "metric,model,avg_rank,chi2,p_value,p_vs_best");
    let rows: Vec<&str> = lines.collect();
    // 5 metrics x 2 models (the null row is excluded from ranking)
    assert_eq!(rows.len(), 10, "expected 10 rank rows, got {}", rows.len());
    for row in rows {
        assert_eq!(row.split(',').count(), 6, "malformed row: {row}");
        assert!(!row.contains(NULL_MODEL));
    }

    report(
        10,
        true,
        &format!(
            "identical-rank chi2 = 28 exact, flat ranks 0; golden average ranks give \
             chi2 = {:.3} (target 17.33 +/- 0.05); rank report shape verified",
            res.chi2
        ),
    );
}
