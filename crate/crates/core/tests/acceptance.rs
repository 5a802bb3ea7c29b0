//! Acceptance suite. Every test prints one `PASS`/`FAIL` line (bypassing the
//! harness capture) before asserting, so `cargo test --test acceptance` lists
//! the outcome of each criterion.

mod common;

use std::io::Write;

use dispersive_core::model::functional_rate;
use dispersive_core::sbp::{
    build_bounded_central_d1, build_periodic_central_d1, build_periodic_d2, build_periodic_upwind, verify_sbp_identity,
    verify_upwind_pair, D2Flavor, DerivativeOperator,
};
use dispersive_core::scenarios::{self, ModelKind, RunOutput, ScenarioConfig, ScenarioKind, ScenarioReport};
use dispersive_core::time::OdeRhs;
use dispersive_core::{
    bbm_phase_speed, euler_phase_speed, sk_dispersion_omega, sk_parameter_set, BoundaryKind, Grid, MassMatrix, Model,
    SbpOperatorSet, SkVariant, SvaerdKalisch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "{} criterion {criterion:>2} ({title}): {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    // Written to the raw handle so the line survives output capture.
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn run_config(cfg: ScenarioConfig) -> ScenarioReport {
    let spec = cfg.resolve().expect("valid configuration");
    scenarios::run(&spec).expect("scenario runs")
}

fn single_run(cfg: ScenarioConfig) -> RunOutput {
    run_config(cfg).run.expect("a single run")
}

fn random_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn weighted(m: &MassMatrix, a: &[f64], b: &[f64]) -> f64 {
    m.inner(a, b).unwrap()
}

/// `max_j |(1ᵀ M D)_j|`, relative to `‖M‖·‖D‖`.
fn column_sum_residual(op: &DerivativeOperator) -> f64 {
    let a = op.to_csr();
    let w = op.mass().diagonal();
    let mut sums = vec![0.0; a.n_cols()];
    for (i, &wi) in w.iter().enumerate() {
        for (j, v) in a.row(i) {
            sums[j] += wi * v;
        }
    }
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    sums.iter().map(|s| s.abs()).fold(0.0, f64::max) / (wmax * a.max_abs())
}

#[test]
fn criterion_01_sbp_identities() {
    let periodic = Grid::uniform(0.0, 1.0, 50, BoundaryKind::Periodic).unwrap();
    let bounded = Grid::uniform(-1.0, 1.0, 60, BoundaryKind::Bounded).unwrap();
    let vectors = random_vectors(50, 100, 1);
    let mut failures = Vec::new();
    let mut count = 0;
    let mut check = |ok: bool, what: String| {
        count += 1;
        if !ok {
            failures.push(what);
        }
    };
    for p in [2, 4, 6, 8] {
        let d = build_periodic_central_d1(&periodic, p).unwrap();
        check(verify_sbp_identity(&d).pass, format!("central p={p} identity"));
        check(column_sum_residual(&d) <= 1e-13, format!("central p={p} 1ᵀMD"));
        let m = d.mass();
        let skew = vectors
            .iter()
            .all(|u| weighted(m, &d.apply(u).unwrap(), u).abs() <= 1e-12 * weighted(m, u, u));
        check(skew, format!("central p={p} skew-symmetry"));
        for flavor in [D2Flavor::Narrow, D2Flavor::Wide] {
            let d2 = build_periodic_d2(&periodic, p, flavor).unwrap();
            check(verify_sbp_identity(&d2).pass, format!("D2 {flavor:?} p={p} identity"));
            check(column_sum_residual(&d2) <= 1e-13, format!("D2 {flavor:?} p={p} 1ᵀMD"));
        }
    }
    for p in 1..=4 {
        let pair = build_periodic_upwind(&periodic, p).unwrap();
        check(verify_upwind_pair(&pair).pass, format!("upwind p={p} identity"));
        for (name, d) in [("D+", &pair.plus), ("D-", &pair.minus)] {
            check(column_sum_residual(d) <= 1e-13, format!("upwind p={p} {name} 1ᵀMD"));
        }
        let m = pair.mass();
        let signs = vectors.iter().all(|u| {
            let tol = 1e-12 * weighted(m, u, u);
            weighted(m, &pair.minus.apply(u).unwrap(), u) >= -tol && weighted(m, &pair.plus.apply(u).unwrap(), u) <= tol
        });
        check(signs, format!("upwind p={p} dissipation signs"));
    }
    for p in [2, 4, 6] {
        let d = build_bounded_central_d1(&bounded, p).unwrap();
        check(verify_sbp_identity(&d).pass, format!("bounded p={p} identity"));
    }
    let pass = failures.is_empty();
    report(
        1,
        "SBP identity suite",
        pass,
        &format!(
            "{} of {count} checks hold{}",
            count - failures.len(),
            if pass {
                String::new()
            } else {
                format!("; failed: {failures:?}")
            }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_soliton_convergence() {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Soliton, ModelKind::BbmBbm);
    cfg.eoc = true;
    cfg.t_end = Some(1.0);
    cfg.orders = Some(vec![2, 4, 6]);
    cfg.eoc_n = Some(vec![128, 256, 512]);
    let tables = run_config(cfg).eoc;
    let mut pass = true;
    let mut detail = Vec::new();
    for t in &tables {
        let rates = t.all_eoc();
        // Observed order: the finest resolution pair.
        let (e_eta, e_v) = *rates.last().unwrap();
        let p = t.order as f64;
        let ok = (e_eta - p).abs() <= 0.3 && (e_v - p).abs() <= 0.3;
        pass &= ok;
        detail.push(format!(
            "p={} eoc(eta,v) {}",
            t.order,
            rates
                .iter()
                .map(|(a, b)| format!("{a:.2}/{b:.2}"))
                .collect::<Vec<_>>()
                .join(" -> ")
        ));
    }
    report(2, "soliton EOC within ±0.3", pass, &detail.join("; "));
    assert!(pass);
}

fn soliton_run(relaxation: bool) -> RunOutput {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Soliton, ModelKind::BbmBbm);
    cfg.relaxation = relaxation;
    single_run(cfg)
}

/// Energy deviation at the end of each period of a five-period run.
fn period_deviations(run: &RunOutput) -> Vec<f64> {
    let e0 = run.invariants[0].invariants.energy;
    let period = scenarios::soliton_period();
    (1..=5)
        .map(|j| {
            let target = j as f64 * period;
            let rec = run
                .invariants
                .iter()
                .min_by(|a, b| (a.t - target).abs().total_cmp(&(b.t - target).abs()))
                .unwrap();
            (rec.invariants.energy - e0) / e0.abs()
        })
        .collect()
}

#[test]
fn criterion_03_and_04_fully_discrete_energy() {
    let relaxed = soliton_run(true);
    let plain = soliton_run(false);
    let relaxed_drift = relaxed.energy_drift();
    let plain_drift = plain.energy_drift();
    let dev = period_deviations(&plain);
    let monotone = dev
        .windows(2)
        .all(|w| w[1].abs() > w[0].abs() && w[0].signum() == w[1].signum());
    let mass_ok = relaxed.mass_drift() <= 1e-13 && plain.mass_drift() <= 1e-13;
    let pass3 = relaxed_drift <= 1e-12 && plain_drift > relaxed_drift && monotone && mass_ok;
    report(
        3,
        "soliton energy and mass",
        pass3,
        &format!(
            "relaxed |ΔE|/E {relaxed_drift:.2e} (≤ 1e-12); unrelaxed {plain_drift:.2e}, per period {}; mass {:.2e} / {:.2e} (≤ 1e-13)",
            dev.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(" "),
            relaxed.mass_drift(),
            plain.mass_drift()
        ),
    );
    let (lo, hi) = relaxed.gamma_range();
    let pass4 = lo >= 1.0 && hi <= 1.0 + 1e-6;
    report(
        4,
        "relaxation parameter range",
        pass4,
        &format!(
            "gamma in [1 + {:.2e}, 1 + {:.2e}] over {} steps",
            lo - 1.0,
            hi - 1.0,
            relaxed.invariants.len() - 1
        ),
    );
    assert!(pass3 && pass4);
}

#[test]
fn criterion_05_lake_at_rest() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (model, t_end) in [(ModelKind::BbmBbm, 10.0), (ModelKind::SvaerdKalisch, 1.0)] {
        for p in [2, 4, 6] {
            let mut cfg = ScenarioConfig::new(ScenarioKind::LakeAtRest, model);
            cfg.order = Some(p);
            cfg.t_end = Some(t_end);
            let (e_eta, e_v) = single_run(cfg).error.unwrap();
            pass &= e_eta <= 1e-12 && e_v <= 1e-12;
            detail.push(format!("{model:?} p={p} t={t_end}: {e_eta:.1e}/{e_v:.1e}"));
        }
    }
    report(5, "lake at rest L2 errors ≤ 1e-12", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_06_manufactured_convergence() {
    let mut pass = true;
    let mut detail = Vec::new();
    for model in [ModelKind::BbmBbm, ModelKind::SvaerdKalisch] {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Manufactured, model);
        cfg.eoc = true;
        cfg.orders = Some(vec![2, 3, 4]);
        cfg.eoc_n = Some(vec![64, 128, 256]);
        for t in run_config(cfg).eoc {
            let rates = t.all_eoc();
            let (e_eta, e_v) = *rates.last().unwrap();
            let p = t.order as f64;
            pass &= (e_eta - p).abs() <= 0.3 && (e_v - p).abs() <= 0.3;
            detail.push(format!(
                "{model:?} p={} {}",
                t.order,
                rates
                    .iter()
                    .map(|(a, b)| format!("{a:.2}/{b:.2}"))
                    .collect::<Vec<_>>()
                    .join(" -> ")
            ));
        }
    }
    report(6, "manufactured EOC within ±0.3", pass, &detail.join("; "));
    assert!(pass);
}

/// Smooth periodic state on `[0, 1)` built from a few random Fourier modes, with `h > 0`.
fn random_smooth_state(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let modes: Vec<(f64, f64, f64, f64)> = (1..=3)
        .map(|m| {
            (
                m as f64,
                rng.random_range(-0.15..0.15),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.0..6.3),
            )
        })
        .collect();
    let tau = 2.0 * std::f64::consts::PI;
    let mut u: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| modes.iter().map(|(m, a, _, ph)| a * (tau * m * x + ph).cos()).sum())
        .collect();
    let mean_v = rng.random_range(-0.5..0.5);
    u.extend(grid.nodes().iter().map(|&x| {
        mean_v
            + modes
                .iter()
                .map(|(m, _, b, ph)| b * (tau * m * x - ph).sin())
                .sum::<f64>()
    }));
    u
}

/// Sum of the magnitudes of the terms in `⟨∇Ê, u_t⟩`.
fn rate_scale(m: &SvaerdKalisch, u: &[f64]) -> f64 {
    let mut du = vec![0.0; u.len()];
    m.eval(0.0, u, &mut du).unwrap();
    let mut g = vec![0.0; u.len()];
    m.conserved_functional().gradient(u, &mut g);
    g.iter().zip(&du).map(|(a, b)| (a * b).abs()).sum()
}

#[test]
fn criterion_07_semidiscrete_modified_entropy() {
    let grid = Grid::uniform(0.0, 1.0, 64, BoundaryKind::Periodic).unwrap();
    let central = SbpOperatorSet::periodic_central(&grid, 4).unwrap();
    let upwind = SbpOperatorSet::periodic_upwind(&grid, 4).unwrap();
    let bump = |x: f64| -1.0 + 0.2 * (2.0 * std::f64::consts::PI * x).sin();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_central, mut worst_upwind, mut min_ratio) = (0.0f64, f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..50 {
        // Set 2 needs constant depth; the α-free set 3 also runs over a bump.
        let (set, b): (&str, &dyn Fn(f64) -> f64) = if i % 2 == 0 {
            ("set2", &|_| -1.0)
        } else {
            ("set3", &bump)
        };
        let params = sk_parameter_set(set).unwrap();
        let split = SvaerdKalisch::new(&central, b, 9.81, 0.0, params, SkVariant::PeriodicCentralSplit).unwrap();
        let naive = SvaerdKalisch::new(&central, b, 9.81, 0.0, params, SkVariant::PeriodicCentralSplit)
            .unwrap()
            .with_naive_fluxes(true);
        let up = SvaerdKalisch::new(&upwind, b, 9.81, 0.0, params, SkVariant::PeriodicUpwind).unwrap();
        let u = random_smooth_state(&grid, &mut rng);

        let scale = rate_scale(&split, &u);
        let r_split = functional_rate(split.conserved_functional(), &split, 0.0, &u).unwrap();
        worst_central = worst_central.max(r_split.abs() / scale);
        let r_naive = functional_rate(naive.conserved_functional(), &naive, 0.0, &u).unwrap();
        min_ratio = min_ratio.min(r_naive.abs() / r_split.abs().max(1e-16 * scale));
        let r_up = functional_rate(up.conserved_functional(), &up, 0.0, &u).unwrap();
        worst_upwind = worst_upwind.max(r_up / rate_scale(&up, &u));
    }
    let pass = worst_central <= 1e-10 && worst_upwind <= 1e-12 && min_ratio >= 1e3;
    report(
        7,
        "semidiscrete modified entropy",
        pass,
        &format!(
            "central max |dÊ/dt| rel {worst_central:.2e} (≤ 1e-10); upwind max dÊ/dt rel {worst_upwind:.2e} (≤ 1e-12); naive/split min ratio {min_ratio:.2e} (≥ 1e3)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_reflecting_bump() {
    let mut pass = true;
    let mut detail = Vec::new();
    for model in [ModelKind::BbmBbm, ModelKind::SvaerdKalisch] {
        let mut cfg = ScenarioConfig::new(ScenarioKind::ReflectingBump, model);
        cfg.relaxation = true;
        let run = single_run(cfg);
        let (mass, conserved) = (run.mass_drift(), run.conserved_drift());
        pass &= mass <= 1e-13 && conserved <= 1e-12;
        detail.push(format!(
            "{model:?}: mass {mass:.2e}, conserved functional {conserved:.2e}"
        ));
    }
    report(8, "reflecting bump invariants", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_09_dispersion() {
    let (k, h0, g) = (0.8, 0.8, 9.81);
    let euler = euler_phase_speed(k, h0, g);
    let bbm = bbm_phase_speed(k, h0, g);
    let sk = sk_dispersion_omega(k, &sk_parameter_set("set2").unwrap(), h0, g).unwrap() / k;
    let printed = [(euler, 2.6319), (bbm, 2.6224), (sk, 2.6316)];
    let mut pass = printed.iter().all(|(c, r)| (c - r).abs() <= 5e-4);
    let mut worst = 0.0f64;
    for set in ["set2", "set3", "set4", "set5"] {
        let params = sk_parameter_set(set).unwrap();
        for k in [0.8, 5.0, 15.0] {
            let predicted = sk_dispersion_omega(k, &params, h0, g).unwrap() / k;
            let (measured, _) = common::measured_phase_speed(set, k, h0);
            worst = worst.max((measured - predicted).abs() / predicted);
        }
    }
    pass &= worst <= 5e-3;
    report(
        9,
        "dispersion relations",
        pass,
        &format!("Euler {euler:.5}, BBM-BBM {bbm:.5}, SK set2 {sk:.5} at k = 0.8; worst oracle deviation {worst:.2e} (≤ 5e-3)"),
    );
    assert!(pass);
}

fn dingemans(variant: &str, relaxation: bool) -> RunOutput {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Dingemans, ModelKind::SvaerdKalisch);
    cfg.variant = Some(variant.into());
    cfg.relaxation = relaxation;
    cfg.n = Some(512);
    cfg.order = Some(4);
    cfg.t_end = Some(70.0);
    single_run(cfg)
}

#[test]
fn criterion_10_dingemans() {
    let plain = dingemans("periodic_central_split", false);
    let relaxed = dingemans("periodic_central_split", true);
    let upwind = dingemans("periodic_upwind", false);
    let completed = [&plain, &relaxed, &upwind]
        .iter()
        .all(|r| (r.snapshot.t - 70.0).abs() < 1e-9);
    let mass = [&plain, &relaxed, &upwind]
        .iter()
        .map(|r| r.mass_drift())
        .fold(0.0, f64::max);
    let increase = upwind.max_conserved_increase();
    let pass = completed
        && mass <= 1e-13
        && plain.conserved_drift() <= 1e-6
        && relaxed.conserved_drift() <= 1e-12
        && increase <= 0.0;
    report(
        10,
        "Dingemans invariants",
        pass,
        &format!(
            "mass {mass:.2e}; central Ê drift {:.2e} (≤ 1e-6), relaxed {:.2e} (≤ 1e-12); upwind largest step increase {increase:.2e} (≤ 0)",
            plain.conserved_drift(),
            relaxed.conserved_drift()
        ),
    );
    assert!(pass);
}
