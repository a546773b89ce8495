//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::TAU;
use std::process::{Command as Process, ExitCode};

use logkirch::asymptotics::{
    compare, predict_critical_both, predict_subcritical_pair, predict_supercritical_large,
    predict_supercritical_small, AsymptoticPrediction, Comparison,
};
use logkirch::cli::{Cell, Report};
use logkirch::emden_fowler::EmdenFowlerProfile;
use logkirch::oracle_bvp::{
    default_starts, solve_multistart, solve_nonlocal, FixedPointConfig, NonlocalParams, OracleSolution,
};
use logkirch::quadrature::integrate;
use logkirch::reduction::{gradient_ratio, reduced_coefficient, FullProblemParams};
use logkirch::scalar_map::KirchhoffScalarProblem;
use logkirch::special_integrals::{eval_l, eval_m, IntegralRequest};
use logkirch::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Special integrals against the Beta-function identities.
fn criterion_1() -> Result<Outcome> {
    let mut worst_beta: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for p in [1.5, 2.0, 2.5, 3.0, 4.0, 5.0] {
        let mut requests: Vec<IntegralRequest> =
            [0.0, 1.0, 2.0, p].iter().map(|&q| IntegralRequest::L { p, q }).collect();
        requests.extend([1.0, 2.0, 3.0].iter().map(|&m| IntegralRequest::M { p, m }));
        for r in requests {
            let v = r.evaluate(logkirch::special_integrals::DEFAULT_TOL)?.value;
            worst_beta = worst_beta.max((v - r.beta_value()?).abs());
        }
        worst_closed = worst_closed.max((eval_l(p, p)?.value - 2.0 / (p + 1.0)).abs());
        worst_closed = worst_closed.max((eval_m(p, 1.0)?.value - 1.0).abs());
    }
    Ok(check(
        worst_beta <= 1e-10 && worst_closed <= 1e-12,
        format!("max |quad - beta| = {worst_beta:.2e} (tol 1e-10), closed forms {worst_closed:.2e} (tol 1e-12)"),
    ))
}

/// Pointwise profile: symmetry, second-difference residual order, L² norm.
fn criterion_2() -> Result<Outcome> {
    let mut pass = true;
    let mut notes = Vec::new();
    for p in [2.0, 3.0, 5.0] {
        let w = EmdenFowlerProfile::build(p)?;
        let mut sym: f64 = 0.0;
        for i in 0..=200 {
            let x = i as f64 / 400.0;
            sym = sym.max((w.evaluate(x)? - w.evaluate(1.0 - x)?).abs());
        }
        let residual = |h: f64| -> Result<f64> {
            let mut r: f64 = 0.0;
            for x in [0.1, 0.25, 0.4] {
                let (wm, w0, wp) = (w.evaluate(x - h)?, w.evaluate(x)?, w.evaluate(x + h)?);
                r = r.max(((wp - 2.0 * w0 + wm) / (h * h) + w0.powf(p)).abs());
            }
            Ok(r)
        };
        let hs = [0.02, 0.01, 0.005];
        let rs: Vec<f64> = hs.iter().map(|&h| residual(h)).collect::<Result<_>>()?;
        let min_gain = rs.windows(2).map(|r| r[0] / r[1]).fold(f64::INFINITY, f64::min);
        let quad = integrate(|x| w.evaluate(x).map_or(f64::NAN, |v| v * v), 0.0, 1.0, 1e-11)?.value;
        let norm_err = (quad - w.l2_norm_sq()).abs();
        let ok = sym <= 1e-10 && min_gain >= 3.8 && norm_err <= 1e-8;
        pass &= ok;
        notes.push(format!("p={p}: sym {sym:.1e}, gain {min_gain:.2}, ‖W‖² err {norm_err:.1e}"));
    }
    Ok(check(pass, notes.join("; ")))
}

fn geometric(min: f64, max: f64, count: usize) -> Vec<f64> {
    logkirch::cli::LambdaSpec::Sweep { min, max, count }.values()
}

/// Root counts across each regime.
fn criterion_3() -> Result<Outcome> {
    let mut notes = Vec::new();
    let sup = KirchhoffScalarProblem::new(5.0, 1.0)?;
    let sup_ok = geometric(1e-6, 1e6, 50)
        .into_iter()
        .map(|l| sup.solve_branch(l).map(|b| b.roots.len() == 1))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|x| x);
    notes.push(format!("p=5 always one root: {sup_ok}"));

    let crit = KirchhoffScalarProblem::new(3.0, 1.0)?;
    let threshold = crit.lambda_threshold()?.expect("critical threshold");
    let mut crit_ok = (threshold - TAU).abs() < 1e-9;
    for l in geometric(1e-6, 20.0, 50) {
        let n = crit.solve_branch(l)?.roots.len();
        crit_ok &= n == usize::from(l < threshold);
    }
    crit_ok &= crit.solve_branch(threshold)?.roots.is_empty();
    notes.push(format!("p=3 threshold {threshold:.6}, counts 1 then 0: {crit_ok}"));

    let sub = KirchhoffScalarProblem::new(2.0, 1.0)?;
    let nu = sub.fold()?.nu;
    let mut sub_ok = (nu - 6.545_896_048_449_187).abs() < 1e-6;
    for l in geometric(1e-6, 20.0, 50) {
        let b = sub.solve_branch(l)?;
        let expected = if (l - nu).abs() <= 1e-8 * nu { 1 } else if l < nu { 2 } else { 0 };
        sub_ok &= b.roots.len() == expected;
    }
    for l in [nu * (1.0 - 5e-9), nu, nu * (1.0 + 5e-9)] {
        let b = sub.solve_branch(l)?;
        sub_ok &= b.fold_degenerate && b.roots.len() == 1;
    }
    let outside = sub.solve_branch(nu * (1.0 - 2e-8))?;
    sub_ok &= !outside.fold_degenerate && outside.roots.len() == 2;
    notes.push(format!("p=2 ν {nu:.6}, counts 2/0 and fold band: {sub_ok}"));
    Ok(check(sup_ok && crit_ok && sub_ok, notes.join("; ")))
}

/// Solves every triple with the shooting oracle; returns the solutions and
/// the worst sup-norm mismatch against the closed-form branch.
fn oracle_triples() -> Result<(Vec<OracleSolution>, f64, Vec<String>)> {
    let triples = [
        (5.0, 1.0, 1.0),
        (5.0, 1.0, 100.0),
        (4.0, 2.0, 0.01),
        (6.5, 1.0, 10.0),
        (3.0, 1.0, 1.0),
        (3.0, 2.0, 10.0),
        (3.0, 1.0, 6.0),
        (2.0, 1.0, 3.27),
        (1.5, 1.0, 0.5),
        (2.5, 0.5, 1.0),
        (2.0, 3.0, 0.1),
    ];
    let config = FixedPointConfig::default();
    let mut all = Vec::new();
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    for (p, d, lambda) in triples {
        let problem = KirchhoffScalarProblem::new(p, d)?;
        let profile = EmdenFowlerProfile::build(p)?;
        let roots = problem.solve_branch(lambda)?.roots;
        let found = solve_multistart(&NonlocalParams::Reduced { d, p }, lambda, &default_starts(d, p)?, &config)?;
        if found.len() != roots.len() {
            problems.push(format!("(p={p}, d={d}, λ={lambda}) found {} of {}", found.len(), roots.len()));
            worst = f64::INFINITY;
            continue;
        }
        for (sol, &t) in found.iter().zip(&roots) {
            let expected = t.sqrt() / profile.l2_norm * profile.sup_norm;
            worst = worst.max((sol.sup_norm / expected - 1.0).abs());
        }
        all.extend(found);
    }
    Ok((all, worst, problems))
}

fn criterion_4(worst: f64, count: usize, problems: &[String]) -> Outcome {
    let mut detail = format!("11 triples, {count} solutions, max sup-norm rel err {worst:.2e} (tol 1e-6)");
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join("; ")));
    }
    check(problems.is_empty() && worst <= 1e-6, detail)
}

/// Norm-ratio identity on every oracle solution, and the (a, b) reduction.
fn criterion_5(solutions: &[OracleSolution]) -> Result<Outcome> {
    let mut worst_ratio: f64 = 0.0;
    for sol in solutions {
        let ratio = gradient_ratio(sol.p)?;
        worst_ratio = worst_ratio.max((sol.grad_l2_sq / sol.l2_sq / ratio - 1.0).abs());
    }
    let mut worst_equiv: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    let config = FixedPointConfig::default();
    for (a, b, p, lambda) in [(1.0, 1.0, 5.0, 2.0), (0.5, 2.0, 4.0, 3.0), (2.0, 0.5, 3.0, 10.0), (1.0, 1.0, 2.0, 5.0)] {
        let full = FullProblemParams::new(a, b, p)?;
        let d0 = reduced_coefficient(&full)?;
        let reduced = KirchhoffScalarProblem::new(p, d0)?;
        let sol = solve_nonlocal(&NonlocalParams::Full(full), lambda, 1.0, &config)?;
        let ratio = sol.grad_l2_sq / sol.l2_sq / gradient_ratio(p)? - 1.0;
        worst_ratio = worst_ratio.max(ratio.abs());
        let lhs = a * sol.grad_l2_sq + b * sol.l2_sq;
        worst_equiv = worst_equiv.max((lhs / (d0 * sol.l2_sq) - 1.0).abs());
        let roots = reduced.solve_branch(lambda)?.roots;
        let nearest = roots
            .iter()
            .map(|t| (sol.l2_sq / t - 1.0).abs())
            .fold(f64::INFINITY, f64::min);
        worst_t = worst_t.max(nearest);
    }
    Ok(check(
        worst_ratio <= 1e-6 && worst_equiv <= 1e-8 && worst_t <= 1e-6,
        format!(
            "norm ratio max rel err {worst_ratio:.2e} (tol 1e-6), a‖u'‖²+b‖u‖² vs d0‖u‖² {worst_equiv:.2e} (tol 1e-8), t vs reduced root {worst_t:.2e}"
        ),
    ))
}

struct Sequence {
    name: &'static str,
    rows: Vec<Comparison>,
}

impl Sequence {
    fn monotone(&self) -> bool {
        let n = self.rows.len();
        self.rows[n - 3..].windows(2).all(|w| w[1].deviation <= w[0].deviation)
    }

    fn final_ratio(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.error_ratio)
    }
}

fn sequence(
    name: &'static str,
    problem: &KirchhoffScalarProblem,
    lambdas: &[f64],
    predict: impl Fn(f64) -> Result<AsymptoticPrediction>,
) -> Result<Sequence> {
    let rows = lambdas
        .iter()
        .map(|&l| compare(problem, &predict(l)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sequence { name, rows })
}

/// Asymptotic expansions along sequences into each limit.
fn criterion_6() -> Result<Outcome> {
    let large: Vec<f64> = (3..=8).map(|k| 10f64.powi(k)).collect();
    let small: Vec<f64> = (3..=8).map(|k| 10f64.powi(-k)).collect();
    let p5 = KirchhoffScalarProblem::new(5.0, 1.0)?;
    let p3 = KirchhoffScalarProblem::new(3.0, 1.0)?;
    let p2 = KirchhoffScalarProblem::new(2.0, 1.0)?;
    let p15 = KirchhoffScalarProblem::new(1.5, 1.0)?;
    let w3 = p3.wp_l2 * p3.wp_l2;
    let near_fold: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|eps| (p3.d - eps) * w3).collect();

    let sequences = [
        sequence("p=5 large λ", &p5, &large, |l| predict_supercritical_large(&p5, l))?,
        sequence("p=5 small λ", &p5, &small, |l| predict_supercritical_small(&p5, l))?,
        sequence("p=1.5 lower", &p15, &small, |l| Ok(predict_subcritical_pair(&p15, l)?.0))?,
        sequence("p=2 upper", &p2, &small, |l| Ok(predict_subcritical_pair(&p2, l)?.1))?,
        sequence("p=3 near fold", &p3, &near_fold, |l| Ok(predict_critical_both(&p3, l)?.0))?,
        sequence("p=3 small λ", &p3, &small, |l| {
            predict_critical_both(&p3, l)?
                .1
                .ok_or_else(|| logkirch::Error::Regime("small-λ guard".into()))
        })?,
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for s in &sequences {
        let monotone = s.monotone();
        let ratio = s.final_ratio();
        let ratio_ok = ratio.is_some_and(|r| (r - 1.0).abs() <= 0.25);
        pass &= monotone && ratio_ok;
        let ratio = ratio.map_or("n/a".to_string(), |r| format!("{r:.4}"));
        notes.push(format!(
            "{}: monotone {}, error_ratio {} [{}]",
            s.name,
            monotone,
            ratio,
            if monotone && ratio_ok { "ok" } else { "FAIL" }
        ));
    }
    Ok(check(pass, notes.join("; ")))
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Process::new(env!("CARGO_BIN_EXE_logkirch"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

/// Byte-identical repeated CLI runs and lossless JSON.
fn criterion_7() -> Result<Outcome> {
    let runs: [&[&str]; 4] = [
        &["--format", "json", "branch", "--p", "2", "--d", "1", "--lambda-sweep", "1e-4", "20", "25"],
        &["--format", "csv", "branch", "--p", "3", "--a", "1", "--b", "2", "--lambda-sweep", "1e-6", "20", "50"],
        &["--format", "json", "asymptotics", "--p", "5", "--d", "1", "--lambda-sweep", "1e-8", "1e8", "9"],
        &["--format", "json", "integrals", "--p", "2.5"],
    ];
    let mut identical = true;
    let mut lossless = true;
    for args in runs {
        let (c1, first) = cli(args);
        let (c2, second) = cli(args);
        identical &= c1 == 0 && c2 == 0 && first == second;
        if args[1] == "json" {
            let text = String::from_utf8(first).expect("utf-8");
            let report: Report = serde_json::from_str(&text).expect("parses");
            let again = serde_json::to_string_pretty(&report).expect("serializes") + "\n";
            lossless &= again == text;
            let reparsed: Report = serde_json::from_str(&again).expect("parses");
            lossless &= reparsed == report && report.records.iter().flatten().all(|c| !matches!(c, Cell::Text(s) if s.is_empty()));
        }
    }
    Ok(check(identical && lossless, format!("byte-identical reruns {identical}, JSON round trip lossless {lossless}")))
}

fn report(n: usize, outcome: Result<Outcome>) -> bool {
    match outcome {
        Ok(o) => {
            println!("criterion {n}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("criterion {n}: FAIL | error: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut all = true;
    all &= report(1, criterion_1());
    all &= report(2, criterion_2());
    all &= report(3, criterion_3());
    match oracle_triples() {
        Ok((solutions, worst, problems)) => {
            all &= report(4, Ok(criterion_4(worst, solutions.len(), &problems)));
            all &= report(5, criterion_5(&solutions));
        }
        Err(e) => {
            all &= report(4, Err(e.clone()));
            all &= report(5, Err(e));
        }
    }
    all &= report(6, criterion_6());
    all &= report(7, criterion_7());
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
