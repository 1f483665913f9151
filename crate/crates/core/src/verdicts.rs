//! Closure pipelines: the two cosmological specializations with closed-form
//! diameter bounds, the perfect-fluid route, and the generic hypothesis
//! assembly feeding the k-optimizer.

use crate::bonnet_myers::{
    check_ric_inequality, check_supersolution, optimize_k,
    BMHypothesis,
};
use crate::error::{CoreError, Result};
use crate::foliation::{energy_deceleration_check, FoliationSnapshot, KinematicBundle};
use crate::grid::{ScalarField, SymTensorField};
use crate::matter::{perfect_fluid_check, StressEnergyDecomposition};
use crate::riemannian::SliceGeometry;
use std::f64::consts::PI;

/// Which closure pipeline produced a report. The numeric ids match the CLI
/// `--theorem` selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// deceleration + pressure conditions ("13")
    DecelerationPressure,
    /// energy-deceleration + tensor condition over a k-window ("14")
    EnergyCondition,
    /// perfect-fluid specialization of the deceleration route ("15")
    PerfectFluid,
    /// raw hypothesis assembly + k-optimization ("generic")
    Generic,
}

impl Pipeline {
    pub fn id(&self) -> &'static str {
        match self {
            Pipeline::DecelerationPressure => "13",
            Pipeline::EnergyCondition => "14",
            Pipeline::PerfectFluid => "15",
            Pipeline::Generic => "generic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Closed,
    Inconclusive,
}

/// One named condition with its margin in natural units (q - 1/2,
/// Lambda - P, H^2, ...), so near-boundary verdicts stay visible.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: String,
    pub holds: bool,
    pub margin: Option<f64>,
    pub note: Option<String>,
}

impl ConditionCheck {
    fn new(name: &str, holds: bool, margin: f64) -> Self {
        Self {
            name: name.to_string(),
            holds,
            margin: Some(margin),
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

/// Outcome of one closure pipeline.
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub pipeline: Pipeline,
    pub conditions: Vec<ConditionCheck>,
    pub verdict: Verdict,
    pub diameter_bound_closed_form: Option<f64>,
    pub diameter_bound_optimized: Option<f64>,
    pub oracle_diameter: Option<f64>,
    pub chosen_k: Option<f64>,
    pub annotations: Vec<String>,
}

impl ClosureReport {
    /// Best available bound, if any.
    pub fn best_bound(&self) -> Option<f64> {
        match (self.diameter_bound_closed_form, self.diameter_bound_optimized) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        }
    }

    /// True when the oracle diameter does not exceed any reported bound.
    pub fn oracle_within_bounds(&self) -> bool {
        match self.oracle_diameter {
            Some(o) => [self.diameter_bound_closed_form, self.diameter_bound_optimized]
                .into_iter()
                .flatten()
                .all(|b| o <= b),
            None => true,
        }
    }

    fn finish(mut self) -> Self {
        self.verdict = if self.conditions.iter().all(|c| c.holds) {
            Verdict::Closed
        } else {
            Verdict::Inconclusive
        };
        if self.verdict == Verdict::Inconclusive {
            self.diameter_bound_closed_form = None;
            self.diameter_bound_optimized = None;
            self.chosen_k = None;
        }
        self
    }
}

const QUOTIENT_NOTE: &str =
    "closed slice is diffeomorphic to a quotient of S^3 (stated implication; not computed)";
const FUNDAMENTAL_GROUP_NOTE: &str =
    "closed slice has finite fundamental group (stated implication; not computed)";

/// Closed-form bound (pi / hubble) sqrt(8(10q+4) / (3(2q-1)(2q+1))),
/// cross-checked against pi sqrt(A/B) with A = 8/3 and
/// B = (2q-1)(2q+1)/(10q+4) hubble^2.
pub fn deceleration_pressure_bound(q: f64, hubble: f64) -> Result<f64> {
    if !(q > 0.5) || !(hubble > 0.0) {
        return Err(CoreError::Invariant(format!(
            "bound requested outside its hypotheses: q = {q}, hubble = {hubble}"
        )));
    }
    let closed =
        PI / hubble * (8.0 * (10.0 * q + 4.0) / (3.0 * (2.0 * q - 1.0) * (2.0 * q + 1.0))).sqrt();
    let b = (2.0 * q - 1.0) * (2.0 * q + 1.0) / (10.0 * q + 4.0) * hubble * hubble;
    let via_ab = PI * (8.0 / 3.0 / b).sqrt();
    if (closed - via_ab).abs() > 1e-12 * closed.abs() {
        return Err(CoreError::Invariant(format!(
            "deceleration bound routes disagree: {closed} vs {via_ab}"
        )));
    }
    Ok(closed)
}

/// Closed-form bound (6 pi / hubble) sqrt((3+2k-k^2)(4+3k) /
/// ((2+2k-k^2)(18k^2+18k-17))), cross-checked against pi sqrt(A/B) with
/// A = 2(3+2k-k^2)/(2+2k-k^2) and B = (18k^2+18k-17)/(18(4+3k)) hubble^2.
pub fn energy_condition_bound(k: f64, hubble: f64) -> Result<f64> {
    let window = energy_condition_window();
    if !(k > window.0 && k < window.1) || !(hubble > 0.0) {
        return Err(CoreError::KOutsideFeasible {
            k,
            reason: "outside the energy-condition k-window",
        });
    }
    let closed = 6.0 * PI / hubble
        * ((3.0 + 2.0 * k - k * k) * (4.0 + 3.0 * k)
            / ((2.0 + 2.0 * k - k * k) * (18.0 * k * k + 18.0 * k - 17.0)))
            .sqrt();
    let a = 2.0 * (3.0 + 2.0 * k - k * k) / (2.0 + 2.0 * k - k * k);
    let b = (18.0 * k * k + 18.0 * k - 17.0) / (18.0 * (4.0 + 3.0 * k)) * hubble * hubble;
    let via_ab = PI * (a / b).sqrt();
    if (closed - via_ab).abs() > 1e-12 * closed.abs() {
        return Err(CoreError::Invariant(format!(
            "energy-condition bound routes disagree: {closed} vs {via_ab}"
        )));
    }
    Ok(closed)
}

/// Admissible k-window of the energy-condition pipeline:
/// ((sqrt 43 - 3)/6, 1 + sqrt 3). The left endpoint is the positive root of
/// 18k^2 + 18k - 17.
pub fn energy_condition_window() -> (f64, f64) {
    ((43f64.sqrt() - 3.0) / 6.0, 1.0 + 3f64.sqrt())
}

/// Deceleration + pressure closure test: a) q > 1/2, b) P <= Lambda,
/// c) hubble^2 > 0. `q` is None when the deceleration scan found the
/// concavity inequality unsatisfiable (the -infinity marker).
///
/// The strict conditions a) and c) are tested as stated; the non-strict
/// pressure condition b) absorbs noise up to `tol` (default 1e-9, scaled).
pub fn deceleration_pressure_verdict(
    q: Option<f64>,
    hubble: f64,
    pressure_param: f64,
    lambda: f64,
    oracle_diameter: Option<f64>,
    tol: Option<f64>,
) -> Result<ClosureReport> {
    let tol = tol.unwrap_or_else(|| 1e-9 * pressure_param.abs().max(lambda.abs()).max(1.0));
    let mut conditions = Vec::new();
    match q {
        Some(qv) => conditions.push(ConditionCheck::new("a: q > 1/2", qv > 0.5, qv - 0.5)),
        None => conditions.push(ConditionCheck {
            name: "a: q > 1/2".to_string(),
            holds: false,
            margin: None,
            note: Some("deceleration parameter unsatisfiable (-infinity)".to_string()),
        }),
    }
    conditions.push(ConditionCheck::new(
        "b: pressure parameter <= Lambda",
        pressure_param <= lambda + tol,
        lambda - pressure_param,
    ));
    conditions.push(ConditionCheck::new(
        "c: hubble^2 > 0",
        hubble * hubble > 0.0,
        hubble * hubble,
    ));
    let mut report = ClosureReport {
        pipeline: Pipeline::DecelerationPressure,
        conditions,
        verdict: Verdict::Inconclusive,
        diameter_bound_closed_form: None,
        diameter_bound_optimized: None,
        oracle_diameter,
        chosen_k: None,
        annotations: Vec::new(),
    };
    if report.conditions.iter().all(|c| c.holds) {
        report.diameter_bound_closed_form = Some(deceleration_pressure_bound(q.unwrap(), hubble)?);
        report.annotations.push(QUOTIENT_NOTE.to_string());
    }
    Ok(report.finish())
}

/// Energy-deceleration closure test: a) the energy form is nonpositive,
/// b) the tensor condition min_eig(T) - k T_nn - (1+k)/2 tr(T) >= 0 holds
/// for some k in the admissible window (scanned on a 1024-point grid, the
/// bound-minimizing admissible k is reported), c) hubble^2 > 0.
pub fn energy_condition_verdict(
    snap: &FoliationSnapshot,
    kin: &KinematicBundle,
    decomp: &StressEnergyDecomposition,
    hubble: f64,
    oracle_diameter: Option<f64>,
    tol: Option<f64>,
) -> Result<ClosureReport> {
    let energy = energy_deceleration_check(snap, kin, tol)?;
    let mut conditions = vec![ConditionCheck::new(
        "a: energy-decelerating leaf",
        energy.holds,
        -energy.worst_eigenvalue,
    )
    .with_note(format!("worst eigenvalue at {:?}", energy.worst_point))];

    // pointwise data of the tensor condition: smallest orthonormal
    // eigenvalue of the spatial block, T_nn, and the total trace
    let chart = snap.chart().clone();
    let samples: Vec<(f64, f64, f64)> = (0..chart.len())
        .map(|n| {
            (
                decomp.pressures[0].values()[n] - decomp.lambda,
                decomp.t_nn.values()[n],
                decomp.tr_total.values()[n],
            )
        })
        .collect();
    let margin_at = |k: f64| -> f64 {
        samples
            .iter()
            .map(|&(tmin, tnn, tr)| tmin - k * tnn - (1.0 + k) / 2.0 * tr)
            .fold(f64::INFINITY, f64::min)
    };
    let cond_tol = tol.unwrap_or_else(|| {
        1e-9 * samples
            .iter()
            .map(|&(a, b, c)| a.abs().max(b.abs()).max(c.abs()))
            .fold(1.0f64, f64::max)
    });
    let (lo, hi) = energy_condition_window();
    let mut best: Option<(f64, f64, f64)> = None; // (bound, k, margin)
    let mut best_margin = f64::NEG_INFINITY;
    if hubble > 0.0 {
        for i in 0..1024 {
            let k = lo + (hi - lo) * (i as f64 + 0.5) / 1024.0;
            let margin = margin_at(k);
            best_margin = best_margin.max(margin);
            if margin >= -cond_tol {
                let bound = energy_condition_bound(k, hubble)?;
                if best.map_or(true, |(b, _, _)| bound < b) {
                    best = Some((bound, k, margin));
                }
            }
        }
    } else {
        for i in 0..1024 {
            let k = lo + (hi - lo) * (i as f64 + 0.5) / 1024.0;
            best_margin = best_margin.max(margin_at(k));
        }
    }
    conditions.push(
        ConditionCheck::new(
            "b: tensor condition for some admissible k",
            best.is_some(),
            best.map_or(best_margin, |(_, _, m)| m),
        )
        .with_note(
            "per-direction condition evaluated through the smallest g-orthonormal eigenvalue \
             of the spatial block (conservative frame)"
                .to_string(),
        ),
    );
    conditions.push(ConditionCheck::new(
        "c: hubble^2 > 0",
        hubble * hubble > 0.0,
        hubble * hubble,
    ));

    let mut report = ClosureReport {
        pipeline: Pipeline::EnergyCondition,
        conditions,
        verdict: Verdict::Inconclusive,
        diameter_bound_closed_form: None,
        diameter_bound_optimized: None,
        oracle_diameter,
        chosen_k: None,
        annotations: Vec::new(),
    };
    if report.conditions.iter().all(|c| c.holds) {
        let (bound, k, _) = best.unwrap();
        report.diameter_bound_closed_form = Some(bound);
        report.chosen_k = Some(k);
        report.annotations.push(QUOTIENT_NOTE.to_string());
    }
    Ok(report.finish())
}

/// Perfect-fluid closure test: requires the decomposition to be a perfect
/// fluid, then delegates to the deceleration + pressure conditions with the
/// fluid pressure as the pressure parameter.
pub fn perfect_fluid_verdict(
    decomp: &StressEnergyDecomposition,
    g: &SymTensorField,
    q: Option<f64>,
    hubble: f64,
    lambda: f64,
    omega: Option<f64>,
    oracle_diameter: Option<f64>,
    tol: Option<f64>,
) -> Result<ClosureReport> {
    let pf = perfect_fluid_check(decomp, g, tol)?;
    if !pf.is_perfect_fluid {
        return Err(CoreError::NotPerfectFluid {
            deviation: pf.deviation,
            tol: pf.tolerance,
        });
    }
    let pressure = pf.pressure.unwrap();
    let base = deceleration_pressure_verdict(q, hubble, pressure, lambda, oracle_diameter, tol)?;
    let mut report = ClosureReport {
        pipeline: Pipeline::PerfectFluid,
        ..base
    };
    report
        .annotations
        .push(format!("perfect-fluid route: pressure p = {pressure:.6e}, deviation {:.3e}", pf.deviation));
    if let Some(w) = omega {
        if w <= 0.0 && lambda >= 0.0 {
            report.annotations.push(format!(
                "equation of state omega = {w} <= 0 with Lambda >= 0 already forces the pressure condition"
            ));
        }
    }
    Ok(report)
}

/// Assembles the raw hypothesis of the generic pipeline from the foliation
/// constraint system: n=3, alpha=1, beta=gamma=0, u = N,
/// Q_ij = dt h_ij/N + 2 h_il h^l_j - H h_ij + T_ij - T/2 g_ij and
/// V = dt H/N - |h|^2 - T_nn - T/2.
pub fn assemble_generic_hypothesis(
    snap: &FoliationSnapshot,
    kin: &KinematicBundle,
    decomp: &StressEnergyDecomposition,
    ric: &SymTensorField,
) -> Result<BMHypothesis> {
    let chart = snap.chart().clone();
    let len = chart.len();
    let mut q_vals = Vec::with_capacity(len);
    let mut v_vals = Vec::with_capacity(len);
    for (n, p) in chart.indices().enumerate() {
        let lapse = snap.lapse.values()[n];
        let ginv = crate::sym3::inverse_spd(&snap.g.values()[n])
            .ok_or(CoreError::DegenerateMetric { point: p })?;
        let hm = crate::sym3::to_matrix(&kin.h.values()[n]);
        let h_sq = crate::sym3::from_matrix(&(hm * crate::sym3::to_matrix(&ginv) * hm));
        let big_h = kin.mean_curvature.values()[n];
        let big_t = decomp.tr_total.values()[n];
        q_vals.push(core::array::from_fn::<f64, 6, _>(|c| {
            kin.dt_h.values()[n][c] / lapse + 2.0 * h_sq[c] - big_h * kin.h.values()[n][c]
                + decomp.t_spatial.values()[n][c]
                - 0.5 * big_t * snap.g.values()[n][c]
        }));
        v_vals.push(
            kin.dt_mean_curvature.values()[n] / lapse
                - kin.norm_sq.values()[n]
                - decomp.t_nn.values()[n]
                - 0.5 * big_t,
        );
    }
    BMHypothesis::new(
        3,
        1.0,
        0.0,
        0.0,
        SliceGeometry::new(snap.g.clone())?,
        snap.lapse.clone(),
        ScalarField::new(chart.clone(), v_vals)?,
        SymTensorField::new(chart, q_vals)?,
        ric.clone(),
    )
}

/// Generic closure pipeline: assembles the hypothesis from the constraint
/// system, verifies the curvature relation as an equality (it is an
/// identity of the assembly), verifies the supersolution relation, and
/// optimizes the diameter bound over the admissible k.
pub fn generic_verdict(
    snap: &FoliationSnapshot,
    kin: &KinematicBundle,
    decomp: &StressEnergyDecomposition,
    ric: &SymTensorField,
    oracle_diameter: Option<f64>,
    tol: Option<f64>,
) -> Result<ClosureReport> {
    let hyp = assemble_generic_hypothesis(snap, kin, decomp, ric)?;
    let ric_check = check_ric_inequality(&hyp, tol)?;
    let sup_check = check_supersolution(&hyp, tol)?;
    // the curvature relation is an identity here: both tails must vanish
    let equality_gap = ric_check.min_residual.abs().max(ric_check.max_residual.abs());
    let mut conditions = vec![
        ConditionCheck::new(
            "curvature relation holds as identity",
            equality_gap <= ric_check.tolerance,
            -equality_gap,
        ),
        ConditionCheck::new(
            "supersolution relation",
            sup_check.holds,
            sup_check.min_residual,
        ),
    ];

    let cert = if ric_check.holds && sup_check.holds {
        optimize_k(&hyp, tol)?
    } else {
        None
    };
    conditions.push(ConditionCheck::new(
        "tensor lower bound feasible for some k",
        cert.is_some(),
        cert.as_ref().map_or(f64::NEG_INFINITY, |c| c.lambda),
    ));

    let mut report = ClosureReport {
        pipeline: Pipeline::Generic,
        conditions,
        verdict: Verdict::Inconclusive,
        diameter_bound_closed_form: None,
        diameter_bound_optimized: None,
        oracle_diameter,
        chosen_k: None,
        annotations: Vec::new(),
    };
    if let Some(cert) = cert {
        if report.conditions.iter().all(|c| c.holds) {
            report.diameter_bound_optimized = Some(cert.diameter_bound);
            report.chosen_k = Some(cert.k);
            report.annotations.push(FUNDAMENTAL_GROUP_NOTE.to_string());
            if cert.at_boundary {
                report
                    .annotations
                    .push("optimum reported at a shifted endpoint of the open k-interval".to_string());
            }
            let v_min = hyp.potential.min();
            if v_min >= -1e-12 * hyp.potential.max_abs().max(1.0) {
                report.annotations.push(
                    "V >= 0 with gamma >= 0: the rigidity case forces V == 0 (reported, not verified)"
                        .to_string(),
                );
            }
        }
    }
    Ok(report.finish())
}
