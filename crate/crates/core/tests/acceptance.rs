//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use chemosim::diagnostics::{auxiliary_fields, key_identity_residual, Monitor};
use chemosim::elliptic::{helmholtz_solve, weighted_helmholtz_solve, EllipticSolveOptions};
use chemosim::experiments::{analyze, preset, run_experiment, sweep, AnalysisReport, ExperimentConfig, Verdict};
use chemosim::grid::{integrate, Field, Grid};
use chemosim::kinetics::{
    check_assumptions, AssumptionQuery, ConsumptionFamily, ConsumptionSpec, ModelParams, MotilitySpec,
    Verdict as Holds,
};
use chemosim::solver::{init_state, run, step, InitialSpec, Profile, StepControls};
use common::{hill2, integral_from_one, lyapunov_oracle, monod, ode_oracle, sup_dist, Kinetics};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, title: &str, started: Instant, limit_s: Option<f64>, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let in_time = limit_s.is_none_or(|l| secs < l);
    let pass = outcome.pass && in_time;
    let budget = limit_s.map(|l| format!(" (budget {l} s)")).unwrap_or_default();
    println!(
        "criterion {n} {title}: {} | {} | {secs:.1} s{budget}",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
    pass
}

fn elliptic_accuracy() -> Outcome {
    let tight = EllipticSolveOptions::with_tolerance(1e-12);
    let cosine_error = |grid: Grid| {
        let two_d = grid.dim() == 2;
        let rhs = Field::from_fn(&grid, |x, y| (PI * x).cos() * if two_d { (PI * y).cos() } else { 1.0 });
        let lambda = if two_d { 2.0 * PI * PI } else { PI * PI };
        let z = helmholtz_solve(&rhs, 1.0, &tight).unwrap();
        z.values().iter().zip(rhs.values()).fold(0.0f64, |m, (a, r)| m.max((a - r / (1.0 + lambda)).abs()))
    };
    let r1 = cosine_error(Grid::line(64, 1.0).unwrap()) / cosine_error(Grid::line(128, 1.0).unwrap());
    let r2 = cosine_error(Grid::rect(32, 32, 1.0, 1.0).unwrap()) / cosine_error(Grid::rect(64, 64, 1.0, 1.0).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut lu_err: f64 = 0.0;
    for grid in [Grid::rect(32, 32, 1.0, 1.0).unwrap(), Grid::rect(16, 24, 1.0, 2.0).unwrap(), Grid::line(32, 1.0).unwrap()] {
        let (nx, ny) = (grid.nx(), grid.ny());
        let hx = grid.spacing()[0];
        let hy = if grid.dim() == 2 { grid.spacing()[1] } else { 1.0 };
        let sigma: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.1..5.0)).collect();
        let rhs: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a = DMatrix::from_diagonal(&DVector::from_vec(sigma.clone()));
        for j in 0..ny {
            for i in 0..nx {
                let k = i + nx * j;
                for (ok, other, h) in [(i + 1 < nx, k + 1, hx), (j + 1 < ny, k + nx, hy)] {
                    if ok {
                        let c = 1.0 / (h * h);
                        a[(k, k)] += c;
                        a[(other, other)] += c;
                        a[(k, other)] -= c;
                        a[(other, k)] -= c;
                    }
                }
            }
        }
        let exact = a.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let got = weighted_helmholtz_solve(
            &Field::from_values(&grid, sigma).unwrap(),
            &Field::from_values(&grid, rhs).unwrap(),
            &tight,
        )
        .unwrap();
        let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        lu_err = lu_err.max(got.values().iter().zip(exact.iter()).fold(0.0f64, |m, (g, e)| m.max((g - e).abs())) / scale);
    }
    let in_band = |r: f64| (r - 4.0).abs() <= 0.8;
    Outcome {
        pass: in_band(r1) && in_band(r2) && lu_err <= 1e-8,
        detail: format!("ratio 1D {r1:.3}, ratio 2D {r2:.3}, dense LU rel err {lu_err:.2e}"),
    }
}

fn conservation() -> Outcome {
    let grid = Grid::rect(64, 64, 1.0, 1.0).unwrap();
    let p = ModelParams::new(1.0, 1.0, MotilitySpec::power(1.0), ConsumptionSpec::new(ConsumptionFamily::Monod { k: 1.0 }))
        .unwrap();
    let spec = InitialSpec {
        u: Profile::Noise { base: 1.0, amplitude: 0.5 },
        v: Profile::Noise { base: 1.0, amplitude: 0.5 },
        n: Profile::Noise { base: 1.0, amplitude: 0.9 },
        seed: 2,
    };
    let state = init_state(&grid, &spec).unwrap();
    let m0 = state.total_mass();
    let (mut l1, mut sup) = (integrate(&state.n), state.n.max());
    let (mut drift, mut min_v, mut n_violations) = (0.0f64, f64::INFINITY, 0usize);
    let out = run(state, &p, &StepControls::fixed(1e-3), 10.0, None, |ev| {
        drift = drift.max((ev.next.total_mass() - m0).abs() / m0);
        min_v = min_v.min(ev.next.v.min());
        let (a, b) = (integrate(&ev.next.n), ev.next.n.max());
        if a > l1 + 1e-12 || b > sup + 1e-12 {
            n_violations += 1;
        }
        (l1, sup) = (a, b);
        Ok(())
    });
    let steps = out.as_ref().map(|s| s.steps).unwrap_or(0);
    Outcome {
        pass: out.is_ok() && steps >= 10_000 && drift <= 1e-9 && n_violations == 0 && min_v > 0.0,
        detail: format!("{steps} steps, mass drift {drift:.2e}, nutrient increases {n_violations}, min v {min_v:.4}"),
    }
}

// The splitting error is first order, with constant ≈ 0.35 for Monod uptake
// and ≈ 0.12 for Hill uptake on these data.
const DT_MONOD: f64 = 2.5e-6;
const DT_HILL: f64 = 5e-6;

fn ode_equivalence() -> Outcome {
    let grid = Grid::line(4, 1.0).unwrap();
    let y0 = [0.5, 1.0, 1.0];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (tau, beta) in [(1.0, 1.0), (2.0, 0.5)] {
        for (family, f, dt) in [
            (ConsumptionFamily::Monod { k: 1.0 }, monod as fn(f64) -> f64, DT_MONOD),
            (ConsumptionFamily::Hill2 { k_n: 1.0 }, hill2, DT_HILL),
        ] {
            let p = ModelParams::new(tau, beta, MotilitySpec::power(1.0), ConsumptionSpec::new(family)).unwrap();
            let state = init_state(&grid, &InitialSpec::constant(y0[0], y0[1], y0[2])).unwrap();
            let mut samples = Vec::new();
            let out = run(state, &p, &StepControls::fixed(dt), 10.0, Some(0.05), |ev| {
                if ev.at_output {
                    samples.push(ev.next.clone());
                }
                Ok(())
            });
            pass &= out.is_ok() && samples.len() == 200;
            let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
            let exact = ode_oracle(&Kinetics { tau, beta, f }, y0, 0.0, &times);
            for (s, y) in samples.iter().zip(&exact) {
                let e = sup_dist(s.u.values(), y[0]).max(sup_dist(s.v.values(), y[1])).max(sup_dist(s.n.values(), y[2]));
                worst = worst.max(e);
            }
        }
    }
    Outcome { pass: pass && worst <= 1e-6, detail: format!("4 cases, dt {DT_MONOD:e} (monod) and {DT_HILL:e} (hill2), max L∞ error {worst:.2e} over t in [0, 10]") }
}

fn config_in(text: &str, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg
}

struct Stabilization {
    monod: AnalysisReport,
    hill: AnalysisReport,
    t_end: f64,
}

fn stabilization_runs(root: &Path) -> Stabilization {
    let text = preset("stabilization-k-half").unwrap();
    let monod_cfg = config_in(text, &root.join("monod"));
    let hill_text = text.replace("family = monod\nk = 1", "family = hill2\nk_n = 1");
    assert_ne!(hill_text, text);
    let hill_cfg = config_in(&hill_text, &root.join("hill2"));
    run_experiment(&monod_cfg).unwrap();
    run_experiment(&hill_cfg).unwrap();
    Stabilization { monod: analyze(&root.join("monod")).unwrap(), hill: analyze(&root.join("hill2")).unwrap(), t_end: monod_cfg.t_end }
}

/// Module L against the quadrature oracle on 8×8 snapshots of the same setup.
fn lyapunov_oracle_error() -> f64 {
    let mut cfg = ExperimentConfig::parse(preset("stabilization-k-half").unwrap()).unwrap();
    cfg.grid.cells = [8, 8];
    let grid = cfg.grid.build().unwrap();
    let p = cfg.params();
    let state = init_state(&grid, &cfg.initial).unwrap();
    let mut monitor = Monitor::new(&state, &p).unwrap();
    let gamma = p.motility.clone();
    let big = |s: f64| integral_from_one(&|x| gamma.gamma(x), s);
    let big1 = |s: f64| integral_from_one(&|x| x * gamma.gamma(x), s);
    let g1 = |s: f64| s * gamma.gamma(s);
    let mut worst: f64 = 0.0;
    let mut check = |s: &chemosim::solver::State, l: f64, kstar: f64| {
        let want = lyapunov_oracle(s, kstar, &big, &big1, &g1);
        worst = worst.max((l - want).abs() / want.abs().max(1.0));
    };
    let r0 = monitor.records()[0];
    check(&state, r0.lyapunov, r0.kstar);
    let mut snaps = Vec::new();
    run(state, &p, &cfg.controls, 20.0, Some(2.0), |ev| {
        if let Some(r) = monitor.observe(ev, ev.at_output).unwrap() {
            snaps.push((ev.next.clone(), r.lyapunov, r.kstar));
        }
        Ok(())
    })
    .unwrap();
    for (s, l, k) in &snaps {
        check(s, *l, *k);
    }
    worst
}

fn lyapunov_suite(st: &Stabilization) -> Outcome {
    let r = &st.monod;
    let l0 = r.lyapunov_initial;
    let floor = -1e-12 * (1.0 + l0.abs());
    let oracle = lyapunov_oracle_error();
    let pass = r.lyapunov_min >= floor
        && r.lyapunov_violations == 0
        && r.dissipation_integral <= 1.1 * l0
        && oracle <= 1e-10
        && r.failure.is_none();
    Outcome {
        pass,
        detail: format!(
            "L(0) {l0:.4}, min L {:.2e}, violations {}, dissipation integral {:.4} (<= {:.4}), 8x8 oracle rel err {oracle:.2e}",
            r.lyapunov_min,
            r.lyapunov_violations,
            r.dissipation_integral,
            1.1 * l0
        ),
    }
}

fn stabilization(st: &Stabilization) -> Outcome {
    let (m, h) = (&st.monod, &st.hill);
    let last = m.records.last().unwrap();
    let metric = last.linf_u_minus_m + last.linf_v_minus_m + last.linf_n;
    let fit = m.verdict.fit;
    let hill_fit = h.verdict.fit;
    let rate_ok = fit.is_some_and(|f| f.delta > 0.0 && f.r_squared >= 0.9);
    let directional = match (fit, hill_fit) {
        (Some(a), Some(b)) => b.delta < a.delta,
        _ => false,
    };
    let h_first = h.records[0].linf_u_minus_m + h.records[0].linf_v_minus_m + h.records[0].linf_n;
    let h_last = h.records.last().map(|r| r.linf_u_minus_m + r.linf_v_minus_m + r.linf_n).unwrap();
    Outcome {
        pass: last.t == st.t_end && metric < 1e-3 && rate_ok && directional && h_last < h_first,
        detail: format!(
            "monod metric {metric:.2e} at t = {}, delta {:.4} (r2 {:.4}); hill2 delta {:.4}, metric {h_first:.3} -> {h_last:.3e}",
            last.t,
            fit.map_or(f64::NAN, |f| f.delta),
            fit.map_or(f64::NAN, |f| f.r_squared),
            hill_fit.map_or(f64::NAN, |f| f.delta),
        ),
    }
}

fn severity(v: Verdict) -> u8 {
    match v {
        Verdict::Converged | Verdict::Bounded => 0,
        Verdict::Inconclusive => 1,
        Verdict::Aggregating | Verdict::DtCollapse => 2,
    }
}

struct MassSweep {
    rows: Vec<(f64, Option<Verdict>, Option<AnalysisReport>)>,
}

fn mass_sweep(root: &Path) -> MassSweep {
    let cfg = config_in(preset("subcritical-2d").unwrap(), root);
    let factors = [0.25, 0.5, 0.75, 1.5, 3.0];
    let values: Vec<String> = factors.iter().map(|f| (f * 4.0 * PI).to_string()).collect();
    let summary = sweep(&cfg, "initial.u_mass", &values, None, root).unwrap();
    let rows = factors
        .iter()
        .zip(&summary.rows)
        .map(|(&f, row)| (f, row.verdict, analyze(&row.dir).ok()))
        .collect();
    MassSweep { rows }
}

fn critical_mass(ms: &MassSweep) -> Outcome {
    let find = |f: f64| ms.rows.iter().find(|r| r.0 == f).unwrap();
    let sub = find(0.5);
    let sub_ok = sub.1 == Some(Verdict::Bounded)
        && sub.2.as_ref().is_some_and(|r| r.failure.is_none() && r.verdict.trailing_variation < 0.1);
    let sup = find(3.0);
    let sup_ok = matches!(sup.1, Some(Verdict::Aggregating | Verdict::DtCollapse));
    let ranks: Vec<Option<u8>> = ms.rows.iter().map(|r| r.1.map(severity)).collect();
    let monotone = ranks.iter().all(|r| r.is_some())
        && ranks.windows(2).all(|w| w[0] <= w[1])
        && ranks.first() != ranks.last();
    let verdicts: Vec<String> = ms
        .rows
        .iter()
        .map(|r| {
            let growth = r.2.as_ref().map_or(f64::NAN, |a| a.verdict.growth);
            format!("{}x4pi {} (growth {growth:.2})", r.0, r.1.map_or("error".into(), |v| v.to_string()))
        })
        .collect();
    Outcome {
        pass: sub_ok && sup_ok && monotone,
        detail: format!(
            "subcritical {}, supercritical {}, monotone {}; {}",
            if sub_ok { "ok" } else { "failed" },
            if sup_ok { "ok" } else { "failed" },
            if monotone { "yes" } else { "no" },
            verdicts.join(", ")
        ),
    }
}

fn key_identity() -> Outcome {
    let grid = Grid::rect(32, 32, 1.0, 1.0).unwrap();
    let p = ModelParams::new(1.0, 1.0, MotilitySpec::power(0.5), ConsumptionSpec::new(ConsumptionFamily::Monod { k: 1.0 }))
        .unwrap();
    let rest = init_state(&grid, &InitialSpec::constant(1.2, 1.2, 0.0)).unwrap();
    let aux_rest = auxiliary_fields(&rest, &p).unwrap();
    let next = step(&rest, &p, &StepControls::fixed(0.1)).unwrap();
    let at_rest = key_identity_residual(&next, &aux_rest, &auxiliary_fields(&next, &p).unwrap(), &p, 0.1);

    let smooth = InitialSpec {
        u: Profile::Bump { background: 0.5, total_mass: 1.5, width: 0.2, center: [0.4, 0.55] },
        v: Profile::Constant(1.0),
        n: Profile::Bump { background: 0.2, total_mass: 0.5, width: 0.3, center: [0.6, 0.5] },
        seed: 0,
    };
    let start = init_state(&grid, &smooth).unwrap();
    let start = run(start, &p, &StepControls::default(), 0.5, None, |_| Ok(())).unwrap().state;
    let aux0 = auxiliary_fields(&start, &p).unwrap();
    let residual = |dt: f64| {
        let next = step(&start, &p, &StepControls::fixed(dt)).unwrap();
        key_identity_residual(&next, &aux0, &auxiliary_fields(&next, &p).unwrap(), &p, dt)
    };
    let rs = [residual(4e-3), residual(2e-3), residual(1e-3)];
    let ratios = [rs[0] / rs[1], rs[1] / rs[2]];
    let first_order = ratios.iter().all(|r| (r - 2.0).abs() <= 0.6);
    Outcome {
        pass: first_order && at_rest <= 1e-12,
        detail: format!(
            "residuals {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}; at rest {at_rest:.2e}",
            rs[0], rs[1], rs[2], ratios[0], ratios[1]
        ),
    }
}

fn comparison(reports: &[(&str, &AnalysisReport)]) -> Outcome {
    let mut pass = !reports.is_empty();
    let mut parts = Vec::new();
    for (name, r) in reports {
        let upper = r.ratio_upper_max.unwrap_or(f64::NAN);
        let lower = r.ratio_lower_min.unwrap_or(f64::NAN);
        let ok = upper.is_finite() && lower > 0.0 && r.sandwich_defect_max <= 1e-10;
        pass &= ok;
        parts.push(format!("{name}: max v/w {upper:.4}, min v/S {lower:.4}, sandwich {:.1e}", r.sandwich_defect_max));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn truth_table() -> Outcome {
    let (mut agree, mut total) = (0, 0);
    let mut misses = Vec::new();
    let mut tally = |label: String, got: Holds, want: bool| {
        total += 1;
        if got == if want { Holds::Holds } else { Holds::Fails } {
            agree += 1;
        } else {
            misses.push(label);
        }
    };
    let q = AssumptionQuery::default();
    for k in [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0] {
        let first = check_assumptions(&MotilitySpec::power(k), &AssumptionQuery { k, l: k, ..q }).unwrap();
        let Some(b0) = first.family_b0 else {
            tally(format!("b0 power {k}"), Holds::Fails, true);
            continue;
        };
        let r = check_assumptions(&MotilitySpec::power(k), &AssumptionQuery { k, l: k, b0, ..q }).unwrap();
        tally(format!("g1' power {k}"), r.gamma1_monotone.verdict(), k <= 1.0);
        tally(format!("g1' power {k} sampled"), r.gamma1_monotone.sampled, k <= 1.0);
        tally(format!("A2 power {k}"), r.algebraic_decay.verdict(), true);
        tally(format!("A2 power {k} sampled"), r.algebraic_decay.sampled, true);
        tally(format!("A3 power {k}"), r.growth_control.verdict(), true);
        tally(format!("A3 power {k} sampled"), r.growth_control.sampled, true);
    }
    for chi in [0.5, 1.0, 2.0] {
        for chi_q in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let r = check_assumptions(&MotilitySpec::exponential(chi), &AssumptionQuery { chi: chi_q, ..q }).unwrap();
            tally(format!("exp {chi} at {chi_q}"), r.exponential_decay.verdict(), chi_q >= chi);
            tally(format!("exp {chi} at {chi_q} sampled"), r.exponential_decay.sampled, chi_q >= chi);
        }
    }
    Outcome {
        pass: agree == total,
        detail: format!("{agree}/{total} agree{}", if misses.is_empty() { String::new() } else { format!("; misses: {}", misses.join(", ")) }),
    }
}

/// Runs every criterion, or only those listed on the command line
/// (`cargo test --test acceptance -- 3 7`).
fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let root = tempfile::tempdir().unwrap();
    let mut all = true;

    if wanted(1) {
        let t = Instant::now();
        all &= report(1, "elliptic accuracy", t, Some(10.0), elliptic_accuracy());
    }
    if wanted(2) {
        let t = Instant::now();
        all &= report(2, "conservation and monotonicity", t, Some(300.0), conservation());
    }
    if wanted(3) {
        let t = Instant::now();
        all &= report(3, "ODE oracle equivalence", t, Some(30.0), ode_equivalence());
    }

    let t = Instant::now();
    let st = [4, 5, 8].into_iter().any(wanted).then(|| stabilization_runs(&root.path().join("stabilization")));
    if let Some(st) = st.as_ref().filter(|_| wanted(4)) {
        all &= report(4, "Lyapunov suite", t, Some(600.0), lyapunov_suite(st));
    }
    if let Some(st) = st.as_ref().filter(|_| wanted(5)) {
        all &= report(5, "stabilization", Instant::now(), None, stabilization(st));
    }

    let t = Instant::now();
    let ms = [6, 8].into_iter().any(wanted).then(|| mass_sweep(&root.path().join("mass")));
    if let Some(ms) = ms.as_ref().filter(|_| wanted(6)) {
        all &= report(6, "critical-mass regime", t, Some(1800.0), critical_mass(ms));
    }

    if wanted(7) {
        let t = Instant::now();
        all &= report(7, "key identity", t, None, key_identity());
    }

    if let (Some(st), Some(ms)) = (&st, &ms) {
        let t = Instant::now();
        let mut bounded: Vec<(String, &AnalysisReport)> =
            vec![("stabilization monod".into(), &st.monod), ("stabilization hill2".into(), &st.hill)];
        for (f, v, r) in &ms.rows {
            if let (Some(Verdict::Bounded | Verdict::Converged), Some(r)) = (v, r) {
                bounded.push((format!("mass {f}x4pi"), r));
            }
        }
        let named: Vec<(&str, &AnalysisReport)> = bounded.iter().map(|(n, r)| (n.as_str(), *r)).collect();
        all &= report(8, "comparison controls", t, None, comparison(&named));
    }

    if wanted(9) {
        let t = Instant::now();
        all &= report(9, "assumption truth table", t, Some(1.0), truth_table());
    }

    if !all {
        std::process::exit(1);
    }
}
