//! Acceptance suite: one test per criterion, each printing a PASS line and
//! enforcing its stated tolerance and runtime budget.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use closure_core::bonnet_myers::{ab_constants, cheng_feasibility, diameter_bound};
use closure_core::foliation::{energy_deceleration_check, kinematics, FoliationSnapshot};
use closure_core::grid::{GridChart, ScalarField, SymTensorField};
use closure_core::matter::{flrw_snapshot, recover_stress_energy, FlrwModel};
use closure_core::riemannian::{
    conformal_ricci_check, diameter_oracle, hessian, laplacian, ricci, SliceGeometry,
};
use closure_core::verdicts::{deceleration_pressure_bound, energy_condition_bound, energy_condition_window};
use std::f64::consts::PI;

fn finish(criterion: u32, label: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its runtime budget: {elapsed:?} >= {budget:?}"
    );
    println!("acceptance criterion {criterion} ({label}): PASS in {elapsed:?}");
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn dust_model() -> FlrwModel {
    FlrwModel {
        scale: Box::new(|t| {
            let s = (1.0 + 2.0 * t).sqrt();
            (s, 1.0 / s, -1.0 / (s * s * s))
        }),
        curvature: 1.0,
        lambda: Box::new(|_| 0.0),
        omega: Some(Box::new(|_| 0.0)),
    }
}

fn repo_spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

#[test]
fn acceptance_01_classical_limit() {
    let start = Instant::now();
    // alpha = beta = gamma = k = 0, lambda = 1: bound pi
    let bound = diameter_bound(3, 0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
    assert!((bound - PI).abs() <= 1e-12 * PI);
    // unit round sphere: analytic oracle diameter pi <= pi
    let geom = SliceGeometry::round_sphere_patch(1.0, 0.5, 5).unwrap();
    let oracle = diameter_oracle(&geom, 4).unwrap();
    assert!(oracle.exact);
    assert!(oracle.lower_bound <= bound + 1e-12);
    assert!((oracle.lower_bound - PI).abs() <= 1e-12);
    finish(1, "classical limit", start, Duration::from_secs(1));
}

#[test]
fn acceptance_02_deceleration_closed_form() {
    let start = Instant::now();
    let mut state = 0x5EED_0002u64;
    for _ in 0..10_000 {
        let q = 0.5 + splitmix(&mut state) * 9.5 + 1e-9;
        let hubble = 0.05 + splitmix(&mut state) * 10.0;
        let bound = deceleration_pressure_bound(q, hubble).unwrap();
        let quoted =
            PI / hubble * (8.0 * (10.0 * q + 4.0) / (3.0 * (2.0 * q - 1.0) * (2.0 * q + 1.0))).sqrt();
        assert!((bound - quoted).abs() <= 1e-12 * quoted, "q={q} h={hubble}");
        let a = 8.0 / 3.0;
        let b = (2.0 * q - 1.0) * (2.0 * q + 1.0) / (10.0 * q + 4.0) * hubble * hubble;
        let via_ab = PI * (a / b).sqrt();
        assert!((bound - via_ab).abs() <= 1e-12 * via_ab, "q={q} h={hubble}");
    }
    finish(
        2,
        "deceleration-route closed form, 10^4 random moments",
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn acceptance_03_energy_condition_window() {
    let start = Instant::now();
    // feasibility boundary: positive root of 18k^2 + 18k - 17
    let (lo, hi) = energy_condition_window();
    let expected_root = (43f64.sqrt() - 3.0) / 6.0;
    assert!((lo - expected_root).abs() <= 1e-12);
    assert!((18.0 * lo * lo + 18.0 * lo - 17.0).abs() <= 1e-12);

    // bound at k = 1, hubble = 1
    let bound = energy_condition_bound(1.0, 1.0).unwrap();
    let quoted = 6.0 * PI * (28f64 / 57.0).sqrt();
    assert!((bound - quoted).abs() <= 1e-12 * quoted);

    // A(k) specialization across the window
    let width = hi - lo;
    for i in 0..2000 {
        let k = lo + width * (0.01 + 0.98 * i as f64 / 1999.0);
        let (a, _) = ab_constants(3, 1.0, 0.0, 0.0, k, 1.0).unwrap();
        let want = 2.0 * (3.0 + 2.0 * k - k * k) / (2.0 + 2.0 * k - k * k);
        assert!((a - want).abs() <= 1e-12 * want.abs(), "k = {k}: {a} vs {want}");
    }
    finish(3, "energy-condition window and bounds", start, Duration::from_secs(1));
}

#[test]
fn acceptance_04_first_eigenvalue_region() {
    let start = Instant::now();
    const GRID: usize = 1_000_000;
    for n in 3..=8u32 {
        let nf = n as f64;
        let threshold = (nf - 1.0) * (nf - 1.0) / 4.0;
        for factor in [0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 10.0] {
            let mu = threshold * factor;
            // brute-force scan of the admissible exponent region
            let k_hi = 4.0 / (nf - 1.0);
            let mut reachable = false;
            for i in 1..GRID {
                let k = k_hi * i as f64 / GRID as f64;
                if k * (1.0 - (nf - 1.0) * k / 4.0) > 0.0 && k * mu - (nf - 1.0) > 0.0 {
                    reachable = true;
                    break;
                }
            }
            let closed_form = cheng_feasibility(n, mu);
            assert_eq!(reachable, closed_form.contradiction_reachable, "n={n} mu={mu}");
            assert_eq!(closed_form.contradiction_reachable, mu > threshold, "n={n} mu={mu}");
            if let Some(k) = closed_form.witness_k {
                assert!(k > 0.0 && k < k_hi && k * mu > nf - 1.0);
            }
        }
    }
    finish(
        4,
        "first-eigenvalue feasibility vs 10^6-point scan",
        start,
        Duration::from_secs(10),
    );
}

#[test]
fn acceptance_05_constraint_round_trip_convergence() {
    let start = Instant::now();
    let model = dust_model();
    let extent = 0.8;
    let mut errs = Vec::new();
    let mut spacings = Vec::new();
    for n in [16usize, 32, 64] {
        let chart = GridChart::patch([extent; 3], n).unwrap();
        let snap = flrw_snapshot(&model, &chart, 0.0).unwrap();
        let kin = kinematics(&snap).unwrap();
        let geom = SliceGeometry::new(snap.g.clone()).unwrap();
        let fd_ric = ricci(&geom).unwrap();
        let n_field = ScalarField::constant(&chart, 1.0).unwrap();
        let hess = hessian(&n_field, &geom).unwrap();
        let lap = laplacian(&n_field, &geom).unwrap();
        let decomp = recover_stress_energy(&snap, &kin, &fd_ric, &hess, &lap, 0.0).unwrap();
        // closed dust moment: T_nn = 6 and vanishing principal pressures;
        // measured on a fixed interior subregion of the patch
        let mut worst = 0.0f64;
        for p in chart.indices() {
            let x = chart.point(p);
            if x.iter().any(|&c| c < 0.25 * extent || c > 0.75 * extent) {
                continue;
            }
            worst = worst.max((decomp.t_nn.at(p) - 6.0).abs());
            for i in 0..3 {
                worst = worst.max(decomp.pressures[i].at(p).abs());
            }
        }
        errs.push(worst);
        spacings.push(chart.spacing()[0]);
    }
    let order1 = (errs[0] / errs[1]).ln() / (spacings[0] / spacings[1]).ln();
    let order2 = (errs[1] / errs[2]).ln() / (spacings[1] / spacings[2]).ln();
    assert!(
        (1.8..=2.2).contains(&order1) && (1.8..=2.2).contains(&order2),
        "orders {order1:.3} {order2:.3}, errors {errs:?}"
    );
    finish(
        5,
        "constraint round trip at resolutions 16/32/64",
        start,
        Duration::from_secs(120),
    );
}

#[test]
fn acceptance_06_end_to_end_dust_soundness() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_closure-lab"))
        .args(["verdict", "--theorem", "all", "--spec"])
        .arg(repo_spec("dust_flrw.spec"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let verdicts = doc["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 4);
    let oracle = doc["oracle"]["diameter"].as_f64().unwrap();
    assert!((oracle - PI).abs() <= 1e-12);
    for v in verdicts {
        assert_eq!(v["verdict"], "closed", "pipeline {}", v["theorem"]);
        let bound = v["diameterBoundClosedForm"]
            .as_f64()
            .or_else(|| v["diameterBoundOptimized"].as_f64())
            .unwrap();
        assert!(bound >= oracle - 1e-12, "pipeline {}", v["theorem"]);
    }
    let thm13 = verdicts.iter().find(|v| v["theorem"] == "13").unwrap();
    let bound13 = thm13["diameterBoundClosedForm"].as_f64().unwrap();
    let expected = PI / 3.0 * (112f64 / 9.0).sqrt();
    assert!(
        (bound13 - expected).abs() <= 1e-10,
        "bound {bound13} vs {expected}"
    );
    finish(6, "end-to-end dust moment", start, Duration::from_secs(10));
}

#[test]
fn acceptance_07_energy_deceleration_boundary() {
    let start = Instant::now();
    let chart = GridChart::torus([2.0 * PI; 3], 8).unwrap();
    for (q, expect_holds) in [(0.9, false), (1.0, true), (1.1, true)] {
        // a = 1, a' = 1, a'' = -q gives dtt g = 2(1 - q) delta with N = 1
        let dd = 2.0 * (1.0 - q);
        let snap = FoliationSnapshot::new(
            0.0,
            ScalarField::constant(&chart, 1.0).unwrap(),
            ScalarField::constant(&chart, 0.0).unwrap(),
            SymTensorField::constant(&chart, [1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap(),
            SymTensorField::constant(&chart, [2.0, 0.0, 0.0, 2.0, 0.0, 2.0]).unwrap(),
            SymTensorField::constant(&chart, [dd, 0.0, 0.0, dd, 0.0, dd]).unwrap(),
        )
        .unwrap();
        let kin = kinematics(&snap).unwrap();
        let check = energy_deceleration_check(&snap, &kin, None).unwrap();
        assert_eq!(check.holds, expect_holds, "q = {q}");
        // margin carries the predicted sign 2(1 - q)
        if q < 1.0 {
            assert!(check.worst_eigenvalue > 0.0);
        } else if q > 1.0 {
            assert!(check.worst_eigenvalue < 0.0);
        } else {
            assert!(check.worst_eigenvalue.abs() <= 1e-12);
        }
    }
    finish(
        7,
        "energy-deceleration boundary at q in {0.9, 1.0, 1.1}",
        start,
        Duration::from_secs(5),
    );
}

#[test]
fn acceptance_08_conformal_identity_refinement() {
    let start = Instant::now();
    let seed = [0.7, 1.1, 2.3];
    let dir = [0.8, 0.5, 0.3];

    // trivial factors vanish to rounding
    let geom = SliceGeometry::flat_torus([2.0 * PI; 3], 16).unwrap();
    let u_const = ScalarField::constant(geom.chart(), 2.0).unwrap();
    let r = conformal_ricci_check(&geom, &u_const, 1.0, seed, dir, Some(4.0)).unwrap();
    assert!(r.residual <= 1e-12, "constant factor residual {}", r.residual);
    let u_sin = ScalarField::from_fn(geom.chart(), |x| 2.0 + x[0].sin()).unwrap();
    let r = conformal_ricci_check(&geom, &u_sin, 0.0, seed, dir, Some(4.0)).unwrap();
    assert!(r.residual <= 1e-12, "zero exponent residual {}", r.residual);

    // refinement study at 16/32/64
    let mut residuals = Vec::new();
    for n in [16usize, 32, 64] {
        let geom = SliceGeometry::flat_torus([2.0 * PI; 3], n).unwrap();
        let u = ScalarField::from_fn(geom.chart(), |x| 2.0 + x[0].sin()).unwrap();
        let r = conformal_ricci_check(&geom, &u, 1.0, seed, dir, Some(4.0)).unwrap();
        residuals.push(r.residual);
    }
    let order1 = (residuals[0] / residuals[1]).log2();
    let order2 = (residuals[1] / residuals[2]).log2();
    assert!(
        order1 >= 1.5 && order2 >= 1.5,
        "orders {order1:.3} {order2:.3}, residuals {residuals:?}"
    );
    finish(
        8,
        "conformal curvature identity under refinement",
        start,
        Duration::from_secs(120),
    );
}

#[test]
fn acceptance_09_diameter_oracle_refinement() {
    let start = Instant::now();
    let exact = PI * 3f64.sqrt();
    let mut errors = Vec::new();
    for n in [32usize, 64] {
        let chart = GridChart::torus([2.0 * PI; 3], n).unwrap();
        let g = SymTensorField::constant(&chart, [1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let geom = SliceGeometry::new(g).unwrap();
        let est = diameter_oracle(&geom, 16).unwrap();
        assert!(!est.exact);
        let rel = (est.lower_bound - exact).abs() / exact;
        assert!(rel <= 0.08, "n = {n}: relative error {rel}");
        assert!(est.lower_bound <= exact * 1.08);
        errors.push(rel);
    }
    assert!(
        errors[1] <= errors[0] + 1e-12,
        "error did not improve under refinement: {errors:?}"
    );
    finish(
        9,
        "gridded torus diameter within 8%, improving at 64^3",
        start,
        Duration::from_secs(120),
    );
}

#[test]
fn acceptance_10_byte_identical_reports() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("run{run}"));
        let out = Command::new(env!("CARGO_BIN_EXE_closure-lab"))
            .args(["verdict", "--theorem", "all", "--spec"])
            .arg(repo_spec("dust_flrw.spec"))
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        let report = std::fs::read(out_dir.join("report.json")).unwrap();
        outputs.push((out.stdout, report));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "stdout differs between runs");
    assert_eq!(outputs[0].1, outputs[1].1, "report.json differs between runs");
    finish(10, "byte-identical reports", start, Duration::from_secs(60));
}
