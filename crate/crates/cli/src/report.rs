//! Report documents: one JSON file per run (schema version 1) plus an
//! optional CSV time series. Serialization is fully deterministic: fixed
//! field order, no maps, no timestamps; identical inputs produce identical
//! bytes.

use serde::Serialize;

use closure_core::riemannian::DiameterEstimate;
use closure_core::verdicts::{ClosureReport, ConditionCheck, Verdict};

use crate::pipeline::{BmCheckOutcome, IdentityResult, LeafData, ParamRow};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportDoc {
    pub schema_version: u32,
    pub command: String,
    pub spec_path: String,
    pub kind: String,
    pub t0: f64,
    pub tolerance_profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameters: Option<ParamBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bm_check: Option<BmCheckJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub identities: Vec<IdentityJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesRowJson>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParamBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub q_status: String,
    pub hubble: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hubble_scale_factor_rate: Option<f64>,
    pub pressure_parameter: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub perfect_fluid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fluid_pressure: Option<f64>,
    pub fluid_deviation: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsBlock {
    pub resolution: usize,
    pub time_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub richardson_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_tolerance: Option<f64>,
    pub oracle_sources: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleBlock {
    /// lower bound on the slice diameter; absent when infinite
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    pub exact: bool,
    pub infinite: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eccentricities: Vec<f64>,
}

impl OracleBlock {
    pub fn from_estimate(est: &DiameterEstimate) -> Self {
        OracleBlock {
            diameter: est.lower_bound.is_finite().then_some(est.lower_bound),
            exact: est.exact,
            infinite: est.lower_bound.is_infinite(),
            eccentricities: est.eccentricities.clone(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictJson {
    pub theorem: String,
    pub verdict: String,
    pub conditions: Vec<ConditionJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_bound_closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_bound_optimized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_diameter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_k: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionJson {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn condition_json(c: &ConditionCheck) -> ConditionJson {
    ConditionJson {
        name: c.name.clone(),
        holds: c.holds,
        margin: c.margin.filter(|m| m.is_finite()),
        note: c.note.clone(),
    }
}

pub fn verdict_json(r: &ClosureReport) -> VerdictJson {
    VerdictJson {
        theorem: r.pipeline.id().to_string(),
        verdict: match r.verdict {
            Verdict::Closed => "closed".to_string(),
            Verdict::Inconclusive => "inconclusive".to_string(),
        },
        conditions: r.conditions.iter().map(condition_json).collect(),
        diameter_bound_closed_form: r.diameter_bound_closed_form,
        diameter_bound_optimized: r.diameter_bound_optimized,
        oracle_diameter: r.oracle_diameter,
        chosen_k: r.chosen_k,
        annotations: r.annotations.clone(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BmCheckJson {
    pub curvature_inequality: InequalityJson,
    pub supersolution_inequality: InequalityJson,
    pub hypothesis_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible_interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InequalityJson {
    pub holds: bool,
    pub min_residual: f64,
    pub worst_point: [usize; 3],
    pub tolerance: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateJson {
    pub k: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub diameter_bound: f64,
    pub at_boundary: bool,
}

pub fn bm_check_json(out: &BmCheckOutcome) -> BmCheckJson {
    let ineq = |c: &closure_core::bonnet_myers::InequalityCheck| InequalityJson {
        holds: c.holds,
        min_residual: c.min_residual,
        worst_point: c.worst_point,
        tolerance: c.tolerance,
    };
    BmCheckJson {
        curvature_inequality: ineq(&out.ric_check),
        supersolution_inequality: ineq(&out.sup_check),
        hypothesis_valid: out.hypothesis_valid,
        feasible_interval: out.feasible_interval.map(|iv| [iv.lo, iv.hi]),
        certificate: out.certificate.as_ref().map(|c| CertificateJson {
            k: c.k,
            lambda: c.lambda,
            a: c.a,
            b: c.b,
            diameter_bound: c.diameter_bound,
            at_boundary: c.at_boundary,
        }),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IdentityJson {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub fn identity_json(r: &IdentityResult) -> IdentityJson {
    IdentityJson {
        name: r.name.to_string(),
        pass: r.pass,
        detail: r.detail.clone(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesRowJson {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub hubble: f64,
    pub pressure_parameter: f64,
    pub lambda: f64,
    pub cond_deceleration: bool,
    pub cond_pressure: bool,
    pub cond_hubble: bool,
}

pub fn series_row_json(r: &ParamRow) -> SeriesRowJson {
    SeriesRowJson {
        t: r.t,
        q: r.q,
        hubble: r.hubble,
        pressure_parameter: r.pressure_param,
        lambda: r.lambda,
        cond_deceleration: r.cond_deceleration,
        cond_pressure: r.cond_pressure,
        cond_hubble: r.cond_hubble,
    }
}

pub fn param_block(leaf: &LeafData, fluid: (bool, Option<f64>, f64)) -> ParamBlock {
    ParamBlock {
        q: leaf.q.value(),
        q_status: leaf.q.label().to_string(),
        hubble: leaf.hubble,
        hubble_scale_factor_rate: leaf.hubble_scale_rate,
        pressure_parameter: leaf.pressure_param,
        lambda: leaf.lambda,
        omega: leaf.omega,
        perfect_fluid: fluid.0,
        fluid_pressure: fluid.1,
        fluid_deviation: fluid.2,
    }
}

pub fn diagnostics_block(leaf: &LeafData) -> DiagnosticsBlock {
    DiagnosticsBlock {
        resolution: leaf.resolution,
        time_step: leaf.time_step,
        richardson_gap: leaf.richardson_gap,
        condition_tolerance: leaf.tol,
        oracle_sources: leaf.oracle_sources,
    }
}

/// CSV form of the parameter series: header plus one row per time.
pub fn series_csv(rows: &[ParamRow]) -> String {
    let mut out = String::from("t,q,hubble,pressureParam,lambda,condDeceleration,condPressure,condHubble\n");
    for r in rows {
        let q = r.q.map_or(String::from("nan"), |v| format!("{v}"));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            q,
            r.hubble,
            r.pressure_param,
            r.lambda,
            u8::from(r.cond_deceleration),
            u8::from(r.cond_pressure),
            u8::from(r.cond_hubble)
        ));
    }
    out
}

/// Serializes the document with a trailing newline.
pub fn to_json_bytes(doc: &ReportDoc) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("report serialization cannot fail");
    bytes.push(b'\n');
    bytes
}
