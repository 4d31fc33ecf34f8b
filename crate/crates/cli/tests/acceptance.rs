//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `FVC2000_ROOT` to a directory holding one subdirectory of PGM/PNG
//! fingerprints per sensor database to enable the real-data check.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use benford_sep::benford::BUILTIN_PARAMS;
use benford_sep::learn::{evaluate_predictions, CnnModel, LrModel, Standardizer};
use benford_sep::{
    chi_square_divergence, fit_gbl_params, forward_dct_block, generalized_benford, read_csv,
    standard_benford, write_csv, ClusterSpec, DigitHistogram, FitConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const STANDARD_TABLE: [f64; 9] = [
    0.301, 0.176, 0.125, 0.097, 0.079, 0.067, 0.058, 0.051, 0.046,
];
const STANDARD_TOL: f64 = 5e-4;
const GBL_SUM_BAND: (f64, f64) = (0.99, 1.01);
const GBL_QF100_P1_BAND: (f64, f64) = (0.42, 0.43);
const DCT_ABS_TOL: f64 = 1e-9;
const PARSEVAL_REL_TOL: f64 = 1e-6;
const DCT_BLOCKS: usize = 1000;
const FIT_SSE_MAX: f64 = 1e-10;
const FIT_PARAM_TOL: f64 = 1e-3;
const SAMPLE_DRAWS: usize = 1_000_000;
const SAMPLE_CHI_MAX: f64 = 1e-3;
const GRAD_POINTS: usize = 5;
const GRAD_STEP: f64 = 1e-5;
const LR_GRAD_TOL: f64 = 1e-4;
const CNN_GRAD_TOL: f64 = 1e-3;
const METRIC_TOL: f64 = 5e-4;
const EXPECTED_HEADER: &str = "QF-50,QF-60,QF-70,QF-80,QF-90,QF-100,Class Label";
const FVC_ENV: &str = "FVC2000_ROOT";

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_benford-sep"))
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`{}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn c1_standard_table() -> Outcome {
    let p = standard_benford();
    let worst = (0..9)
        .map(|i| (p.0[i] - STANDARD_TABLE[i]).abs())
        .fold(0.0, f64::max);
    check(
        worst <= STANDARD_TOL,
        format!("max |p - table| = {worst:.2e} (tol {STANDARD_TOL:.0e})"),
    )
}

fn c2_generalized_sanity() -> Outcome {
    let mut sums = Vec::new();
    let mut ok = true;
    for row in BUILTIN_PARAMS {
        let s = match generalized_benford(&row) {
            Ok(d) => d.sum(),
            Err(e) => return Fail(format!("QF {:?}: {e}", row.qf)),
        };
        ok &= (GBL_SUM_BAND.0..=GBL_SUM_BAND.1).contains(&s);
        sums.push(format!("{}:{s:.5}", row.qf.unwrap_or(0)));
    }
    let qf100 = BUILTIN_PARAMS
        .iter()
        .find(|r| r.qf == Some(100))
        .expect("QF 100 row");
    let direct = qf100.n_factor * (1.0 + 1.0 / (qf100.s_shift + 1.0)).log10();
    let p1 = generalized_benford(qf100)
        .map(|d| d.0[0])
        .unwrap_or(f64::NAN);
    ok &= (GBL_QF100_P1_BAND.0..=GBL_QF100_P1_BAND.1).contains(&p1) && (p1 - direct).abs() < 1e-12;
    check(
        ok,
        format!("sums [{}]; QF100 p(1) = {p1:.6}", sums.join(" ")),
    )
}

fn dct_direct(f: &[f64; 64]) -> [f64; 64] {
    let c = |k: usize| if k == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                for y in 0..8 {
                    acc += f[x * 8 + y]
                        * (((2 * x + 1) * u) as f64 * PI / 16.0).cos()
                        * (((2 * y + 1) * v) as f64 * PI / 16.0).cos();
                }
            }
            out[u * 8 + v] = 0.25 * c(u) * c(v) * acc;
        }
    }
    out
}

fn c3_dct_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_abs: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for _ in 0..DCT_BLOCKS {
        let mut block = [0.0; 64];
        block
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-128.0..128.0));
        let fast = forward_dct_block(&block).0;
        let slow = dct_direct(&block);
        for (a, b) in fast.iter().zip(&slow) {
            worst_abs = worst_abs.max((a - b).abs());
        }
        let e_in: f64 = block.iter().map(|v| v * v).sum();
        let e_out: f64 = fast.iter().map(|v| v * v).sum();
        worst_rel = worst_rel.max((e_in - e_out).abs() / e_in);
    }
    check(
        worst_abs <= DCT_ABS_TOL && worst_rel <= PARSEVAL_REL_TOL,
        format!("{DCT_BLOCKS} blocks: max abs err {worst_abs:.1e}, max Parseval rel err {worst_rel:.1e}"),
    )
}

fn c4_fit_recovery() -> Outcome {
    let mut ok = true;
    let mut worst_sse: f64 = 0.0;
    let mut worst_param: f64 = 0.0;
    for row in BUILTIN_PARAMS {
        let dist = match generalized_benford(&row) {
            Ok(d) => d,
            Err(e) => return Fail(e.to_string()),
        };
        let fit = match fit_gbl_params(&dist, &FitConfig::default()) {
            Ok(f) => f,
            Err(e) => return Fail(format!("QF {:?}: {e}", row.qf)),
        };
        let dp = [
            (fit.params.n_factor - row.n_factor).abs(),
            (fit.params.q_exp - row.q_exp).abs(),
            (fit.params.s_shift - row.s_shift).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        worst_sse = worst_sse.max(fit.sse);
        worst_param = worst_param.max(dp);
        ok &= fit.sse <= FIT_SSE_MAX && dp <= FIT_PARAM_TOL;
    }
    check(
        ok,
        format!("6 rows: max SSE {worst_sse:.1e} (≤ {FIT_SSE_MAX:.0e}), max param err {worst_param:.1e} (≤ {FIT_PARAM_TOL:.0e})"),
    )
}

fn c5_sampling() -> Outcome {
    let row = BUILTIN_PARAMS
        .iter()
        .find(|r| r.qf == Some(50))
        .expect("QF 50 row");
    let model = match generalized_benford(row) {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let sampling = model.normalized();
    let mut cdf = [0.0; 9];
    let mut acc = 0.0;
    for (c, p) in cdf.iter_mut().zip(&sampling.0) {
        acc += p;
        *c = acc;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut hist = DigitHistogram::default();
    for _ in 0..SAMPLE_DRAWS {
        let u: f64 = rng.random();
        let digit = cdf.iter().position(|&c| u < c).unwrap_or(8) + 1;
        hist.add_digit(digit as u8);
    }
    let chi = hist
        .distribution()
        .and_then(|emp| chi_square_divergence(&emp, &model));
    match chi {
        Ok(chi) => check(
            chi < SAMPLE_CHI_MAX,
            format!("{SAMPLE_DRAWS} draws: chi2 = {chi:.2e} (< {SAMPLE_CHI_MAX:.0e})"),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

fn max_rel_error(p0: &[f64], analytic: &[f64], mut loss_at: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut p = p0.to_vec();
    for k in 0..p0.len() {
        p[k] = p0[k] + GRAD_STEP;
        let lp = loss_at(&p);
        p[k] = p0[k] - GRAD_STEP;
        let lm = loss_at(&p);
        p[k] = p0[k];
        let numeric = (lp - lm) / (2.0 * GRAD_STEP);
        let denom = numeric.abs().max(analytic[k].abs()).max(1e-7);
        worst = worst.max((numeric - analytic[k]).abs() / denom);
    }
    worst
}

fn c6_gradients() -> Outcome {
    let data = ClusterSpec {
        class_sizes: vec![4, 4, 4, 4, 3],
        ..ClusterSpec::default()
    }
    .generate();
    let raw: Vec<Vec<f64>> = data.rows.iter().map(|r| r.d.clone()).collect();
    let y = data.labels();
    let st = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| st.transform(r)).collect();
    let (f_n, c_n) = (data.num_features(), data.num_classes());
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let mut lr_worst: f64 = 0.0;
    let mut cnn_worst: f64 = 0.0;
    for _ in 0..GRAD_POINTS {
        let mut lr = LrModel::zeros(c_n, f_n, st.clone());
        let p0: Vec<f64> = lr
            .params()
            .iter()
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        lr.set_params(&p0);
        let (_, g) = lr.loss_and_gradient(&x, &y, 0.0);
        lr_worst = lr_worst.max(max_rel_error(&p0, &g, |p| {
            lr.set_params(p);
            lr.loss_and_gradient(&x, &y, 0.0).0
        }));

        let mut cnn = CnnModel::init(f_n, c_n, &mut rng, st.clone());
        let p0: Vec<f64> = cnn
            .params()
            .iter()
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        cnn.set_params(&p0);
        let (_, g) = cnn.loss_and_gradient(&x, &y);
        cnn_worst = cnn_worst.max(max_rel_error(&p0, &g, |p| {
            cnn.set_params(p);
            cnn.loss_and_gradient(&x, &y).0
        }));
    }
    check(
        lr_worst < LR_GRAD_TOL && cnn_worst < CNN_GRAD_TOL,
        format!(
            "{GRAD_POINTS} points: LR max rel err {lr_worst:.1e} (< {LR_GRAD_TOL:.0e}), CNN {cnn_worst:.1e} (< {CNN_GRAD_TOL:.0e})"
        ),
    )
}

/// 74 test items over five classes with `errors` misclassifications.
fn constructed_accuracy(errors: usize) -> f64 {
    let truth: Vec<usize> = (0..74).map(|i| i % 5).collect();
    let mut pred = truth.clone();
    for p in pred.iter_mut().take(errors) {
        *p = (*p + 1) % 5;
    }
    evaluate_predictions(&truth, &pred, 5).accuracy
}

fn c7_metrics() -> Outcome {
    let a3 = constructed_accuracy(3);
    let a7 = constructed_accuracy(7);
    let a0 = constructed_accuracy(0);
    check(
        (a3 - 0.9595).abs() <= METRIC_TOL && (a7 - 0.9054).abs() <= METRIC_TOL && a0 == 1.0,
        format!("3 errors -> {a3:.4}, 7 errors -> {a7:.4}, none -> {a0:.4}"),
    )
}

const TRAIN_EVAL: [&str; 11] = [
    "train-eval",
    "--csv",
    "synth.csv",
    "--model",
    "all",
    "--seed",
    "42",
    "--train-frac",
    "0.7",
    "--report",
    "report.json",
];

fn synthetic_run(dir: &Path) -> Result<Value, String> {
    run_cli(&["synth", "--out", "synth.csv", "--seed", "42"], dir)?;
    let mut args = TRAIN_EVAL.to_vec();
    args.extend(["--curves-dir", "curves"]);
    run_cli(&args, dir)?;
    let text = fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn accuracy_of(report: &Value, model: &str) -> Option<f64> {
    report["models"]
        .as_array()?
        .iter()
        .find(|m| m["model"] == model)?["evaluation"]["accuracy"]
        .as_f64()
}

fn c8_synthetic_benchmark() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let report = match synthetic_run(dir.path()) {
        Ok(r) => r,
        Err(e) => return Fail(e),
    };
    let get = |m| accuracy_of(&report, m).unwrap_or(f64::NAN);
    let (nb, tree, lr, cnn) = (
        get("naive_bayes"),
        get("decision_tree"),
        get("logistic_regression"),
        get("cnn"),
    );
    let counts = &report["dataset"]["class_counts"];
    let shape_ok = *counts == serde_json::json!([80, 80, 80, 80, 48]);
    let sep = ClusterSpec::default().min_separation();
    check(
        shape_ok && sep >= 4.0 && tree == 1.0 && cnn == 1.0 && nb >= 0.95 && lr >= 0.90,
        format!(
            "368 rows, min separation {sep:.1} sigma; test accuracy tree {tree:.4}, cnn {cnn:.4}, nb {nb:.4} (≥ 0.95), logreg {lr:.4} (≥ 0.90)"
        ),
    )
}

fn c9_real_data() -> Outcome {
    let Some(root) = std::env::var_os(FVC_ENV) else {
        return Skip(format!("no data ({FVC_ENV} not set)"));
    };
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let p = dir.path();
    let root = root.to_string_lossy().into_owned();
    if let Err(e) = run_cli(&["extract", "--data", &root, "--out", "fvc.csv"], p) {
        return Fail(e);
    }
    let text = match fs::read_to_string(p.join("fvc.csv")) {
        Ok(t) => t,
        Err(e) => return Fail(e.to_string()),
    };
    let ds = match read_csv(text.as_bytes()) {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let finite = ds.rows.iter().all(|r| r.d.iter().all(|v| v.is_finite()));
    if let Err(e) = run_cli(
        &[
            "train-eval",
            "--csv",
            "fvc.csv",
            "--model",
            "tree",
            "--report",
            "fvc.json",
        ],
        p,
    ) {
        return Fail(e);
    }
    let report: Value = match fs::read_to_string(p.join("fvc.json"))
        .map_err(|e| e.to_string())
        .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
    {
        Ok(r) => r,
        Err(e) => return Fail(e),
    };
    let tree = accuracy_of(&report, "decision_tree").unwrap_or(f64::NAN);
    check(
        ds.len() == 320 && ds.num_classes() == 4 && finite && tree >= 0.90,
        format!(
            "{} rows, {} classes, all finite: {finite}; tree test accuracy {tree:.4} (≥ 0.90)",
            ds.len(),
            ds.num_classes()
        ),
    )
}

fn strip_timings(text: &str) -> Result<Value, String> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    v.as_object_mut()
        .ok_or("report is not an object")?
        .remove("timings")
        .ok_or("report has no timings")?;
    Ok(v)
}

fn c10_determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let p = dir.path();
    let mut reports = Vec::new();
    for _ in 0..2 {
        if let Err(e) = run_cli(&["synth", "--out", "synth.csv", "--seed", "42"], p)
            .and_then(|()| run_cli(&TRAIN_EVAL, p))
        {
            return Fail(e);
        }
        match fs::read_to_string(p.join("report.json")) {
            Ok(t) => reports.push(t),
            Err(e) => return Fail(e.to_string()),
        }
    }
    match (strip_timings(&reports[0]), strip_timings(&reports[1])) {
        (Ok(a), Ok(b)) => {
            let bytes_a = serde_json::to_string(&a).unwrap_or_default();
            let bytes_b = serde_json::to_string(&b).unwrap_or_default();
            check(
                bytes_a == bytes_b,
                format!("two runs, {} bytes each without timings", bytes_a.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => Fail(e),
    }
}

fn c11_csv_contract() -> Outcome {
    let ds = ClusterSpec::default().generate();
    let mut first = Vec::new();
    if let Err(e) = write_csv(&ds, &mut first) {
        return Fail(e.to_string());
    }
    let back = match read_csv(first.as_slice()) {
        Ok(d) => d,
        Err(e) => return Fail(e.to_string()),
    };
    let mut second = Vec::new();
    if let Err(e) = write_csv(&back, &mut second) {
        return Fail(e.to_string());
    }
    let header = first.split(|&b| b == b'\n').next().unwrap_or_default();
    check(
        first == second && header == EXPECTED_HEADER.as_bytes() && back.len() == ds.len(),
        format!(
            "{} bytes stable across write-read-write; header {:?}",
            first.len(),
            String::from_utf8_lossy(header)
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            1,
            "standard Benford table",
            Duration::from_secs(1),
            c1_standard_table,
        ),
        (
            2,
            "generalized Benford sanity",
            Duration::from_secs(1),
            c2_generalized_sanity,
        ),
        (3, "DCT oracle", Duration::from_secs(2), c3_dct_oracle),
        (4, "fit recovery", Duration::from_secs(30), c4_fit_recovery),
        (
            5,
            "sampling consistency",
            Duration::from_secs(5),
            c5_sampling,
        ),
        (6, "gradient checks", Duration::from_secs(10), c6_gradients),
        (7, "metrics from counts", Duration::from_secs(1), c7_metrics),
        (
            8,
            "synthetic end-to-end",
            Duration::from_secs(60),
            c8_synthetic_benchmark,
        ),
        (
            9,
            "real-data pipeline",
            Duration::from_secs(600),
            c9_real_data,
        ),
        (10, "determinism", Duration::from_secs(120), c10_determinism),
        (11, "CSV contract", Duration::from_secs(1), c11_csv_contract),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = elapsed > budget;
        let (tag, detail) = match outcome {
            Pass(d) if over => ("FAIL", format!("{d}; over time budget")),
            Pass(d) => ("PASS", d),
            Fail(d) => ("FAIL", d),
            Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "[{tag}] {id:>2}. {name}: {detail} [{:.2}s / {}s]",
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria met");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
