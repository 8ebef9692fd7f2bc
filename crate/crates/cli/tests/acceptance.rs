//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Run with `--nocapture` to see the lines on success.

use std::process::Command;
use std::time::{Duration, Instant};

use rstar_cli::{Document, LimitsTable};
use rstar_core::models::{expected_i, leukemia21, LinearExponential, Model, NormalModel, ParameterPoint};
use rstar_core::numerics::{default_step, fd_gradient, fd_jacobian, QuadratureSpec, RngStream};
use rstar_core::simulate::{
    coverage_study, normality_diagnostic, rate_probe, CoverageReport, CoverageSpec, DEFAULT_LEVELS,
};
use rstar_core::statistics::{Analysis, StatisticKind, SINGULAR_BAND};

const PSI_HAT: f64 = 0.0872657631331114;
const LAMBDA_HAT: f64 = 0.00227329193625164;
const SEED: u64 = 7;

// Published limits and coverages, columns R, R̄*, R̂*, rows DEFAULT_LEVELS.
const TABLE_LIMITS: [[f64; 3]; 8] = [
    [0.0206, 0.0260, 0.0263],
    [0.0293, 0.0353, 0.0356],
    [0.0373, 0.0439, 0.0443],
    [0.0472, 0.0545, 0.0550],
    [0.1327, 0.1372, 0.1375],
    [0.1441, 0.1469, 0.1472],
    [0.1540, 0.1557, 0.1559],
    [0.1657, 0.1664, 0.1667],
];
const TABLE_COVERAGE: [[f64; 3]; 8] = [
    [0.0032, 0.0125, 0.0126],
    [0.0150, 0.0261, 0.0264],
    [0.0397, 0.0526, 0.0526],
    [0.0745, 0.1100, 0.1102],
    [0.8840, 0.8990, 0.8991],
    [0.9366, 0.9467, 0.9469],
    [0.9661, 0.9742, 0.9748],
    [0.9808, 0.9900, 0.9902],
];

const LIMIT_TOL: f64 = 5e-4;
const LIMIT_TIME: Duration = Duration::from_secs(30);
const FULL_REPS: usize = 100_000;
const COVERAGE_SE_MULTIPLE: f64 = 3.0;
const COVERAGE_TIME: Duration = Duration::from_secs(600);
const DESK_REPS: usize = 20_000;
const DESK_TOL: f64 = 0.01;
const RATE_N: [usize; 2] = [50, 200];
const RATE_REPS: usize = 200;
const RATE_RANGE: (f64, f64) = (2.5, 6.5);
const RATE_TIME: Duration = Duration::from_secs(120);
const KS_N: usize = 50;
const KS_REPS: usize = 10_000;
const KS_MAX: f64 = 0.05;
const DERIVATIVE_TOL: f64 = 1e-6;
const BAND_JUMP: f64 = 1e-3;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn rstar(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_rstar")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn kind_index(kind: StatisticKind) -> usize {
    StatisticKind::ALL.iter().position(|k| *k == kind).unwrap()
}

fn criterion_limits() -> Outcome {
    let start = Instant::now();
    let (code, out) = rstar(&["limits", "--model", "linexp", "--data", "leukemia21", "--format", "json"]);
    let elapsed = start.elapsed();
    if code != 0 {
        return Outcome {
            id: "1",
            pass: false,
            detail: format!("limits command exited with {code}"),
        };
    }
    let doc: Document<LimitsTable> = serde_json::from_slice(&out).unwrap();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for l in &doc.result.limits {
        let row = DEFAULT_LEVELS.iter().position(|p| *p == l.probability).unwrap();
        worst = worst.max((l.psi_limit - TABLE_LIMITS[row][kind_index(l.kind)]).abs());
        count += 1;
    }
    Outcome {
        id: "1",
        pass: count == 24 && worst <= LIMIT_TOL && elapsed < LIMIT_TIME,
        detail: format!(
            "Table 2 limits: {count}/24 computed, max |dev| = {worst:.2e} (tol {LIMIT_TOL:.0e}), {:.1} s (limit {} s)",
            elapsed.as_secs_f64(),
            LIMIT_TIME.as_secs()
        ),
    }
}

fn coverage_args(workers: &str) -> Vec<String> {
    let theta = format!("{PSI_HAT},{LAMBDA_HAT}");
    let reps = FULL_REPS.to_string();
    let seed = SEED.to_string();
    [
        "coverage", "--model", "linexp", "--theta", &theta, "--n", "21", "--reps", &reps, "--seed", &seed,
        "--workers", workers, "--format", "json",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn compare_coverage(report: &CoverageReport, tolerance: impl Fn(f64) -> f64) -> (usize, Vec<String>) {
    let mut within = 0;
    let mut misses = Vec::new();
    for (row, &p) in DEFAULT_LEVELS.iter().enumerate() {
        for kind in StatisticKind::ALL {
            let target = TABLE_COVERAGE[row][kind_index(kind)];
            let got = report.entry(kind, p).unwrap().coverage;
            if (got - target).abs() <= tolerance(target) {
                within += 1;
            } else {
                misses.push(format!("{kind}@{p}: {got:.4} vs {target:.4}"));
            }
        }
    }
    (within, misses)
}

fn criterion_coverage(report: &CoverageReport, elapsed: Duration) -> Outcome {
    let n = report.used as f64;
    let (within, misses) = compare_coverage(report, |p| COVERAGE_SE_MULTIPLE * (p * (1.0 - p) / n).sqrt());
    let shown: Vec<&str> = misses.iter().take(6).map(String::as_str).collect();
    Outcome {
        id: "2",
        pass: within == 24 && report.valid && elapsed < COVERAGE_TIME,
        detail: format!(
            "coverage N={FULL_REPS}: {within}/24 within {COVERAGE_SE_MULTIPLE} MC SE; report valid = {} ({} of {} replicates failed: {} without interior MLE); {:.1} s; misses: {}",
            report.valid,
            report.failures,
            report.spec.replicates,
            report.failures_by_stage.no_interior_maximum,
            elapsed.as_secs_f64(),
            shown.join(", ")
        ),
    }
}

fn criterion_desk_coverage() -> Outcome {
    let spec = CoverageSpec {
        model: "linexp".into(),
        theta: ParameterPoint::new(vec![PSI_HAT, LAMBDA_HAT]).unwrap(),
        n: 21,
        replicates: DESK_REPS,
        levels: DEFAULT_LEVELS.to_vec(),
        kinds: StatisticKind::ALL.to_vec(),
        seed: SEED,
        workers: None,
    };
    let report = coverage_study(&spec).unwrap();
    let (within, misses) = compare_coverage(&report, |_| DESK_TOL);
    let shown: Vec<&str> = misses.iter().take(6).map(String::as_str).collect();
    Outcome {
        id: "2b",
        pass: within == 24 && report.valid,
        detail: format!(
            "desk preset N={DESK_REPS}: {within}/24 within ±{DESK_TOL}; report valid = {}; misses: {}",
            report.valid,
            shown.join(", ")
        ),
    }
}

fn criterion_ordering(report: &CoverageReport) -> Outcome {
    let mut ok = 0;
    let mut lines = Vec::new();
    for p in [0.01, 0.025, 0.05, 0.1] {
        let err = |k| (report.entry(k, p).unwrap().coverage - p).abs();
        let (r, bar, hat) = (err(StatisticKind::R), err(StatisticKind::RBar), err(StatisticKind::RHat));
        if bar < r && hat < r {
            ok += 1;
        }
        lines.push(format!("{p}: R {r:.4}, Rbar {bar:.4}, Rhat {hat:.4}"));
    }
    Outcome {
        id: "3",
        pass: ok == 4,
        detail: format!("ordering of |coverage - nominal| holds at {ok}/4 levels ({})", lines.join("; ")),
    }
}

fn criterion_rate() -> Outcome {
    let start = Instant::now();
    let theta = ParameterPoint::new(vec![0.1, 0.01]).unwrap();
    let record = rate_probe(&LinearExponential, &theta, &RATE_N, RATE_REPS, SEED, None).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        id: "4",
        pass: record.ratio >= RATE_RANGE.0 && record.ratio <= RATE_RANGE.1 && elapsed < RATE_TIME,
        detail: format!(
            "median |Rhat*-Rbar*| ratio n={}/n={} = {:.3} (range [{}, {}]), slope {:.3}, {:.1} s",
            RATE_N[0],
            RATE_N[1],
            record.ratio,
            RATE_RANGE.0,
            RATE_RANGE.1,
            record.slope,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_normality() -> Outcome {
    let theta = ParameterPoint::new(vec![PSI_HAT, LAMBDA_HAT]).unwrap();
    let d = normality_diagnostic(&LinearExponential, &theta, KS_N, KS_REPS, SEED, None).unwrap();
    let ks = |k| d.get(k).unwrap().ks_distance;
    let (r, bar, hat) = (ks(StatisticKind::R), ks(StatisticKind::RBar), ks(StatisticKind::RHat));
    Outcome {
        id: "5",
        pass: hat < r && hat < KS_MAX,
        detail: format!("KS at n={KS_N}, {KS_REPS} reps: R {r:.4}, Rbar {bar:.4}, Rhat {hat:.4} (need Rhat < R and < {KS_MAX})"),
    }
}

fn derivative_failures(model: &dyn Model, draw: &mut dyn FnMut() -> (Vec<f64>, f64)) -> usize {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
    let mut bad = 0;
    for _ in 0..50 {
        let (theta, y) = draw();
        let s = model.analytic_score(&theta, y).unwrap();
        let s_fd = fd_gradient(|t| model.log_density(t, y), &theta, default_step()).unwrap();
        let h = model.analytic_hessian(&theta, y).unwrap();
        let h_fd = fd_jacobian(|t| model.analytic_score(t, y).unwrap(), &theta, default_step()).unwrap();
        let score_ok = s.iter().zip(&s_fd).all(|(a, b)| rel(*a, *b) < DERIVATIVE_TOL);
        let hess_ok = h.entries().iter().zip(h_fd.entries()).all(|(a, b)| rel(*a, *b) < DERIVATIVE_TOL);
        if !(score_ok && hess_ok) {
            bad += 1;
        }
    }
    bad
}

fn criterion_kernels() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut rng = RngStream::new(SEED, 1);
    let mut linexp = || {
        let theta = vec![0.02 + 0.5 * rng.next_uniform(), 0.001 + 0.05 * rng.next_uniform()];
        (theta, 0.1 + 30.0 * rng.next_uniform())
    };
    let bad_l = derivative_failures(&LinearExponential, &mut linexp);
    let mut rng = RngStream::new(SEED, 2);
    let mut normal = || {
        let (mu, sigma) = (-5.0 + 10.0 * rng.next_uniform(), 0.2 + 3.0 * rng.next_uniform());
        (vec![mu, sigma], mu + sigma * (-3.0 + 6.0 * rng.next_uniform()))
    };
    let bad_n = derivative_failures(&NormalModel, &mut normal);
    pass &= bad_l == 0 && bad_n == 0;
    notes.push(format!("derivatives {}/50 linexp, {}/50 normal", 50 - bad_l, 50 - bad_n));

    let spec = QuadratureSpec::default();
    let mut bartlett_worst: f64 = 0.0;
    let mut bartlett_ok = true;
    for psi in [0.05, 0.1, 0.2] {
        for lambda in [0.005, 0.01, 0.02] {
            let theta = ParameterPoint::new(vec![psi, lambda]).unwrap();
            let i = expected_i(&LinearExponential, &theta, &theta, 1, &spec).unwrap();
            let neg_h = LinearExponential
                .expectation(
                    &theta,
                    4,
                    &|y, out: &mut [f64]| {
                        let h = LinearExponential.obs_hessian(theta.values(), y).unwrap();
                        out.copy_from_slice(h.scaled(-1.0).entries());
                    },
                    &spec,
                )
                .unwrap();
            for (a, b) in i.entries().iter().zip(&neg_h) {
                let tol = 10.0 * spec.abs_tol.max(spec.rel_tol * b.abs());
                bartlett_worst = bartlett_worst.max((a - b).abs() / tol);
                bartlett_ok &= (a - b).abs() <= tol;
            }
        }
    }
    pass &= bartlett_ok;
    notes.push(format!("information identity worst {bartlett_worst:.2} x tolerance"));

    let theta = ParameterPoint::new(vec![PSI_HAT, LAMBDA_HAT]).unwrap();
    let n = 100_000;
    let data = LinearExponential.sample(&theta, n, &mut RngStream::new(SEED, 3)).unwrap();
    let expected = expected_i(&LinearExponential, &theta, &theta, 1, &spec).unwrap();
    let mut worst_z: f64 = 0.0;
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let products: Vec<f64> = data
            .observations()
            .iter()
            .map(|&y| {
                let s = LinearExponential.obs_score(theta.values(), y).unwrap();
                s[a] * s[b]
            })
            .collect();
        let mean = products.iter().sum::<f64>() / n as f64;
        let var = products.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        worst_z = worst_z.max((mean - expected[(a, b)]).abs() / (var / n as f64).sqrt());
    }
    pass &= worst_z < 3.0;
    notes.push(format!("empirical vs expected information worst {worst_z:.2} SE"));

    let data = leukemia21();
    let mut analysis = Analysis::new(&LinearExponential, &data).unwrap();
    let mut jump: f64 = 0.0;
    for side in [1.0, -1.0] {
        let edge = analysis.psi_for_r(side * SINGULAR_BAND * (1.0 + 1e-9), 1e-14).unwrap();
        let inside = analysis.psi_for_r(side * SINGULAR_BAND * 0.999, 1e-14).unwrap();
        let (o, i) = (analysis.statistic_set(edge).unwrap(), analysis.statistic_set(inside).unwrap());
        jump = jump.max((o.r_bar_star - i.r_bar_star).abs()).max((o.r_hat_star - i.r_hat_star).abs());
    }
    pass &= jump < BAND_JUMP;
    notes.push(format!("band-edge jump {jump:.1e} (tol {BAND_JUMP:.0e})"));

    Outcome {
        id: "6",
        pass,
        detail: format!("numerical kernels: {}", notes.join("; ")),
    }
}

#[test]
fn acceptance() {
    let mut outcomes = vec![criterion_limits()];

    let start = Instant::now();
    let first_args = coverage_args("1");
    let (code_a, json_a) = rstar(&first_args.iter().map(String::as_str).collect::<Vec<_>>());
    let elapsed = start.elapsed();
    assert_eq!(code_a, 0, "coverage command failed");
    let doc: Document<CoverageReport> = serde_json::from_slice(&json_a).unwrap();
    outcomes.push(criterion_coverage(&doc.result, elapsed));
    outcomes.push(criterion_desk_coverage());
    outcomes.push(criterion_ordering(&doc.result));
    outcomes.push(criterion_rate());
    outcomes.push(criterion_normality());
    outcomes.push(criterion_kernels());

    let second_args = coverage_args("2");
    let (code_b, json_b) = rstar(&second_args.iter().map(String::as_str).collect::<Vec<_>>());
    outcomes.push(Outcome {
        id: "7",
        pass: code_b == 0 && json_a == json_b,
        detail: format!(
            "coverage N={FULL_REPS} with --workers 1 and --workers 2: {} ({} bytes)",
            if json_a == json_b { "byte-identical" } else { "DIFFERENT" },
            json_a.len()
        ),
    });

    for o in &outcomes {
        println!("[{}] criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
