//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Red criteria are reported and the process still exits 0 so that the rest
//! of the workspace suite runs; set `ACCEPTANCE_STRICT=1` to turn any FAIL
//! into a nonzero exit.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use css_cli::config::RunConfig;
use css_cli::profile::Profile;
use css_core::diagnostics::{
    decay_and_charge, energy_positivity, identity_report, refined_grid, resample, IdentityReport,
};
use css_core::functionals::{fiber_sign_changes, FIBER_SCAN_POINTS};
use css_core::gauge::{falloff_report, reconstruct};
use css_core::norms::check_quartic_bound;
use css_core::solver::{
    initial_guess, minimize_on_manifold, minimize_on_manifold_observed, run_continuation,
    ContinuationConfig, ContinuationReport, SolverConfig,
};
use css_core::{breakdown, compute_nonlocal, scale, weak_residual};
use css_core::{GridConfig, ModelParams, RadialField, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(id: usize, name: &str, o: &Outcome, secs: f64) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} [{id}] {name} ({secs:.2}s): {}", o.detail);
}

fn default_grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::build(&GridConfig::default()).unwrap())
}

fn rel(x: f64, exact: f64) -> f64 {
    (x - exact).abs() / exact.abs()
}

/// Smooth random radial field: a sum of three Gaussians, one term allowed
/// to be negative.
fn random_field(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialField {
    let terms: Vec<(f64, f64)> = (0..3)
        .map(|k| {
            let lo = if k == 2 { -0.5 } else { 0.2 };
            (rng.gen_range(lo..2.0), rng.gen_range(0.5..3.0))
        })
        .collect();
    RadialField::from_fn(Arc::clone(grid), |r| {
        terms
            .iter()
            .map(|(c, w)| c * (-(r / w).powi(2)).exp())
            .sum()
    })
    .unwrap()
}

fn indicator_errors(grid: Arc<RadialGrid>) -> [f64; 6] {
    let u = RadialField::from_fn(grid, |r| if r <= 1.0 { 1.0 } else { 0.0 }).unwrap();
    let g = u.grid();
    let cache = compute_nonlocal(&u).unwrap();
    let mass = g.planar_mass();
    let r = g.nodes();
    let h_err = r
        .iter()
        .zip(&cache.h)
        .map(|(r, h)| (h - r.min(1.0).powi(2) / 4.0).abs())
        .fold(0.0, f64::max)
        / 0.25;
    let i1 = g.nearest(1.0);
    let u1 = cache.h[i1].powi(2) / r[i1].powi(2);
    let q: f64 = 0.5
        * mass
            .iter()
            .zip(u.values())
            .map(|(m, v)| m * v * v)
            .sum::<f64>();
    let vu2: f64 = mass
        .iter()
        .zip(&cache.v)
        .zip(u.values())
        .map(|((m, v), u)| m * v * u * u)
        .sum();
    let uu2: f64 = 2.0
        * mass
            .iter()
            .zip(&cache.u_mag)
            .zip(u.values())
            .map(|((m, um), u)| m * um * u * u)
            .sum::<f64>();
    let sup_a = r
        .iter()
        .zip(&cache.h)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, h)| h / r)
        .fold(0.0, f64::max);
    [
        h_err,
        rel(cache.v[0], 0.125),
        rel(u1, 1.0 / 16.0),
        rel(q, PI / 2.0),
        rel(vu2, PI / 16.0).max(rel(uu2, PI / 16.0)),
        rel(sup_a, 0.25),
    ]
}

fn criterion_1() -> Outcome {
    let base = GridConfig::default();
    let e1 = indicator_errors(Arc::new(RadialGrid::build(&base).unwrap()));
    let e2 = indicator_errors(Arc::new(
        RadialGrid::build(&base.with_n(2 * base.n)).unwrap(),
    ));
    let names = ["h", "V(0)", "U(1)", "Q", "Fubini", "sup|A|"];
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 0..6 {
        let ok = e1[k] <= 1e-8 && (e1[k] == 0.0 || e2[k] * 3.0 <= e1[k]);
        pass &= ok;
        parts.push(format!("{} rel {:.2e} -> {:.2e}", names[k], e1[k], e2[k]));
    }
    Outcome {
        pass,
        detail: format!("{} (need <= 1e-8 and >= 3x gain)", parts.join("; ")),
    }
}

fn criterion_2() -> Outcome {
    let grid = default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = ModelParams::new(5.0, 1.0, None).unwrap();
    let n = grid.len();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..10 {
        let u = random_field(&grid, &mut rng);
        let g = weak_residual(&u, &params).unwrap();
        for _ in 0..20 {
            let mut v = random_field(&grid, &mut rng).into_values();
            v[n - 1] = 0.0;
            let h = 1e-4;
            let ip = breakdown(&u.axpy(h, &v).unwrap(), &params).unwrap().i_eps;
            let im = breakdown(&u.axpy(-h, &v).unwrap(), &params).unwrap().i_eps;
            let fd = (ip - im) / (2.0 * h);
            let an: f64 = g.field.values().iter().zip(&v).map(|(a, b)| a * b).sum();
            worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()));
            count += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("{count} directions, worst relative mismatch {worst:.2e} (need <= 1e-6)"),
    }
}

fn criterion_3() -> Outcome {
    let grid = default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..1000 {
        let u = random_field(&grid, &mut rng);
        let q = check_quartic_bound(&u).unwrap();
        violations += usize::from(!q.holds);
        min_slack = min_slack.min(q.rhs / q.lhs);
    }
    let params = ModelParams::new(5.0, 1.0, None).unwrap();
    let u0 = initial_guess(&params, Arc::clone(&grid), 0).unwrap();
    let mut iterates = 0;
    let mut iterate_violations = 0;
    let solved = minimize_on_manifold_observed(&u0, &params, &SolverConfig::default(), &mut |u| {
        iterates += 1;
        let q = check_quartic_bound(u).unwrap();
        iterate_violations += usize::from(!q.holds);
        min_slack = min_slack.min(q.rhs / q.lhs);
    });
    Outcome {
        pass: violations == 0 && iterate_violations == 0 && solved.is_ok() && iterates > 0,
        detail: format!(
            "{violations} violations in 1000 fields, {iterate_violations} in {iterates} solver iterates, min rhs/lhs {min_slack:.4}"
        ),
    }
}

fn criterion_4() -> Outcome {
    let grid = default_grid();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [4.0, 5.0, 7.0, 10.0] {
        let params = ModelParams::new(p, 1.0, None).unwrap();
        let mut ms = Vec::new();
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for seed in [11, 12] {
            let t = Instant::now();
            let u0 = initial_guess(&params, Arc::clone(&grid), seed).unwrap();
            match minimize_on_manifold(&u0, &params, &SolverConfig::default()) {
                Ok(r) => {
                    let ids = identity_report(&r.solution, &params).unwrap();
                    worst = worst
                        .max(ids.nehari_res)
                        .max(ids.pohozaev_res)
                        .max(ids.j_res);
                    ok &= r.converged && r.m_eps > 0.0 && t.elapsed().as_secs_f64() <= 60.0;
                    ms.push(r.m_eps);
                }
                Err(_) => ok = false,
            }
        }
        let spread = if ms.len() == 2 {
            rel(ms[0], ms[1])
        } else {
            f64::INFINITY
        };
        ok &= worst <= 1e-4 && spread <= 1e-4;
        pass &= ok;
        parts.push(format!(
            "p={p}: m={:.8} res {worst:.1e} seeds {spread:.1e}",
            ms.first().copied().unwrap_or(f64::NAN)
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_5() -> Outcome {
    let grid = default_grid();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [5.0, 10.0] {
        let params = ModelParams::new(p, 1.0, None).unwrap();
        let cfg = ContinuationConfig {
            correct_static: false,
            certify_truncation: false,
            ..ContinuationConfig::default()
        };
        let t = Instant::now();
        match run_continuation(&params, Arc::clone(&grid), &cfg) {
            Ok(rep) => {
                let m = rep.m_values();
                let m1 = rep.m_first();
                let floor = 0.5 * m.iter().copied().fold(f64::INFINITY, f64::min);
                let bounded = m.iter().all(|&x| x <= m1 && x >= floor && x > 0.0);
                let drift = rep.drift.last().copied().unwrap_or(f64::INFINITY);
                let ok = bounded && drift < 1e-3 && t.elapsed().as_secs_f64() <= 600.0;
                pass &= ok;
                parts.push(format!(
                    "p={p}: m {:.4} -> {:.4} bounded {bounded}, final drift {drift:.2e} (need < 1e-3)",
                    m1,
                    m.last().unwrap()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("p={p}: {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn far_continuation(p: f64) -> ContinuationReport {
    let grid = Arc::new(RadialGrid::build(&GridConfig::far_field()).unwrap());
    let params = ModelParams::new(p, 1.0, None).unwrap();
    run_continuation(&params, grid, &ContinuationConfig::default()).unwrap()
}

fn criterion_6(reports: &[(f64, ContinuationReport)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, rep) in reports {
        let params = rep.extrapolated_params();
        let u = &rep.extrapolated;
        let fine = Arc::new(refined_grid(u.grid(), 2).unwrap());
        let ids = identity_report(&resample(u, fine).unwrap(), &params).unwrap();
        let pos = energy_positivity(u, &params);
        let ok_ids = params.eps == 0.0 && ids.nehari_res <= 1e-3 && ids.pohozaev_res <= 1e-3;
        let (ok_e, e_detail) = match &pos {
            Ok(e) => (
                e.positive && e.coefficients_positive && e.mismatch <= 1e-6,
                format!(
                    "E={:.6} decomposition mismatch {:.1e}",
                    e.energy, e.mismatch
                ),
            ),
            Err(err) => (false, err.to_string()),
        };
        // p = 5 is the certified case; other exponents are reported alongside.
        if *p == 5.0 {
            pass &= ok_ids && ok_e;
        }
        parts.push(format!(
            "p={p}: refined nehari {:.1e} pohozaev {:.1e}, {e_detail}{}",
            ids.nehari_res,
            ids.pohozaev_res,
            if *p == 5.0 { "" } else { " [informational]" }
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_7(rep: &ContinuationReport) -> Outcome {
    let params = rep.extrapolated_params();
    let u = &rep.extrapolated;
    let decay = decay_and_charge(u, &params, rep.truncation.as_ref());
    let gauge = reconstruct(u, &params).unwrap();
    let fall = falloff_report(&gauge, u);
    let a_slope = fall.a_decay.unwrap_or(f64::NAN);
    let (slope, charge_ok, dq) = match (&decay, &rep.truncation) {
        (Ok(d), Some(t)) => (d.slope, t.charge_converged, t.relative_change),
        (Ok(d), None) => (d.slope, false, f64::NAN),
        _ => (f64::NAN, false, f64::NAN),
    };
    Outcome {
        pass: slope <= -1.05 && charge_ok && (-1.05..=-0.95).contains(&a_slope),
        detail: format!(
            "u tail slope {slope:.3} (<= -1.05), Q change on doubling {:.3}% (< 1%), |A| slope {a_slope:.4}",
            dq * 100.0
        ),
    }
}

fn criterion_8() -> Outcome {
    let grid = default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad_roots = 0;
    let mut worst_law: f64 = 0.0;
    for k in 0..100 {
        let p = [4.0, 5.0, 7.0, 10.0][k % 4];
        let params = ModelParams::new(p, rng.gen_range(0.0..1.0), None).unwrap();
        let u = random_field(&grid, &mut rng);
        let b = breakdown(&u, &params).unwrap();
        assert!(b.d > 0.0);
        bad_roots += usize::from(fiber_sign_changes(&b, &params, FIBER_SCAN_POINTS) != 1);
        if k < 20 {
            let alpha = params.alpha;
            for t in [0.7, 1.3] {
                let bt = breakdown(&scale(&u, t, &params).unwrap(), &params).unwrap();
                let laws = [
                    (bt.a, b.a * t.powf(2.0 * alpha)),
                    (bt.b, b.b * t.powf(2.0 * (alpha - 1.0))),
                    (bt.c, b.c * t.powf(6.0 * alpha - 4.0)),
                    (bt.d, b.d * t.powf((p + 1.0) * alpha - 2.0)),
                ];
                for (got, want) in laws {
                    worst_law = worst_law.max(rel(got, want));
                }
            }
        }
    }
    Outcome {
        pass: bad_roots == 0 && worst_law <= 1e-4,
        detail: format!(
            "{bad_roots}/100 fields without exactly one sign change; worst scaling-law error {worst_law:.2e} (need <= 1e-4)"
        ),
    }
}

fn identity_numbers(ids: &IdentityReport) -> Vec<(&'static str, f64)> {
    let b = &ids.breakdown;
    vec![
        ("nehari", ids.nehari),
        ("pohozaev", ids.pohozaev),
        ("nehari_res", ids.nehari_res),
        ("pohozaev_res", ids.pohozaev_res),
        ("combo_res", ids.combo_res),
        ("j_res", ids.j_res),
        ("energy_decomp_res", ids.energy_decomp_res),
        ("fubini_res", ids.fubini_res),
        ("ineq_lhs", ids.quartic_bound.lhs),
        ("ineq_rhs", ids.quartic_bound.rhs),
        ("a", b.a),
        ("b", b.b),
        ("c", b.c),
        ("d", b.d),
        ("energy", b.energy),
        ("i_eps", b.i_eps),
        ("j_eps", b.j_eps),
    ]
}

fn run_cli(cfg: &RunConfig) -> Value {
    let summary = css_cli::run(cfg).unwrap();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(summary.report).unwrap()).unwrap();
    v["report"].clone()
}

fn criterion_9() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        mode: "continuation".into(),
        seed: 5,
        ..RunConfig::default()
    };
    cfg.output.dir = a.path().to_path_buf();
    let ra = run_cli(&cfg);
    cfg.output.dir = b.path().to_path_buf();
    let mut rb = run_cli(&cfg);
    rb["provenance"]["config"]["output"] = ra["provenance"]["config"]["output"].clone();
    let deterministic = ra == rb
        && std::fs::read(a.path().join("profile.csv")).unwrap()
            == std::fs::read(b.path().join("profile.csv")).unwrap();

    // Audit from the CSV alone against the in-memory report of the same field.
    let profile_path = a.path().join("profile.csv");
    let profile = Profile::read(&profile_path).unwrap();
    let params = profile.params.unwrap();
    let grid = Arc::new(RadialGrid::build(&cfg.grid).unwrap());
    let rep = run_continuation(
        &params.with_eps(1.0),
        Arc::clone(&grid),
        &cfg.continuation(cfg.seed),
    )
    .unwrap();
    let original = identity_report(&rep.extrapolated, &rep.extrapolated_params()).unwrap();
    let audit_dir = tempfile::tempdir().unwrap();
    let mut audit = RunConfig {
        mode: "audit".into(),
        ..RunConfig::default()
    };
    audit.output.dir = audit_dir.path().to_path_buf();
    audit.output.profile = Some(profile_path);
    let audited: IdentityReport =
        serde_json::from_value(run_cli(&audit)["identities"].clone()).unwrap();
    let worst = identity_numbers(&original)
        .into_iter()
        .zip(identity_numbers(&audited))
        .map(|((_, x), (_, y))| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-12
            && deterministic
            && audited.quartic_bound.holds == original.quartic_bound.holds,
        detail: format!(
            "audit deviation {worst:.1e} (need <= 1e-12), deterministic reports {deterministic}"
        ),
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut run = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        line(id, name, &o, t.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    };
    run(1, "closed-form oracles", &mut || {
        let t = Instant::now();
        let mut o = criterion_1();
        let secs = t.elapsed().as_secs_f64();
        o.pass &= secs < 1.0;
        o
    });
    run(2, "gradient check", &mut criterion_2);
    run(
        3,
        "inequality on random fields and solver iterates",
        &mut criterion_3,
    );
    run(4, "eps > 0 solves", &mut criterion_4);
    run(5, "continuation", &mut criterion_5);
    let far: Vec<(f64, ContinuationReport)> = [5.0, 10.0]
        .into_iter()
        .map(|p| (p, far_continuation(p)))
        .collect();
    run(6, "static certification", &mut || criterion_6(&far));
    run(7, "finite charge at p = 10", &mut || criterion_7(&far[1].1));
    run(8, "fibering", &mut criterion_8);
    run(9, "CLI round trip", &mut criterion_9);
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
