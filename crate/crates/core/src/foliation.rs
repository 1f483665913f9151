//! Extrinsic kinematics of the t-foliation: second fundamental form, mean
//! curvature, their time derivatives, the deceleration / Hubble parameters,
//! and the energy-deceleration criterion.
//!
//! Conventions: h_ij = -(1/2N) dt g_ij, H = g^{ij} h_ij. The Hubble
//! parameter is sqrt(inf H^2) over the leaf (so on a homogeneous cosmology
//! it equals 3 |a'/a|, three times the scale-factor rate).

use crate::error::{CoreError, Result};
use crate::grid::{metric_trace, GridChart, GridField, ScalarField, SymTensorField, TimeStencil};
use crate::sym3::{self, quad_form, Sym6};

/// One time sample of the foliation: lapse, spatial metric, and the time
/// derivatives entering the kinematic identities.
#[derive(Debug, Clone)]
pub struct FoliationSnapshot {
    pub t0: f64,
    pub lapse: ScalarField,
    pub dt_lapse: ScalarField,
    pub g: SymTensorField,
    pub dt_g: SymTensorField,
    pub dtt_g: SymTensorField,
}

impl FoliationSnapshot {
    pub fn new(
        t0: f64,
        lapse: ScalarField,
        dt_lapse: ScalarField,
        g: SymTensorField,
        dt_g: SymTensorField,
        dtt_g: SymTensorField,
    ) -> Result<Self> {
        let chart = lapse.chart();
        if [dt_lapse.chart(), g.chart(), dt_g.chart(), dtt_g.chart()]
            .iter()
            .any(|c| *c != chart)
        {
            return Err(CoreError::ChartMismatch);
        }
        lapse.require_positive("lapse N")?;
        g.require_positive_definite()?;
        Ok(Self {
            t0,
            lapse,
            dt_lapse,
            g,
            dt_g,
            dtt_g,
        })
    }

    pub fn chart(&self) -> &GridChart {
        self.lapse.chart()
    }

    /// Energy-deceleration quadratic form dtt g + 2 (dt N) h.
    pub fn energy_form(&self, kin: &KinematicBundle) -> Result<SymTensorField> {
        let chart = self.chart().clone();
        let values = (0..chart.len())
            .map(|n| {
                let dn = self.dt_lapse.values()[n];
                core::array::from_fn(|c| {
                    self.dtt_g.values()[n][c] + 2.0 * dn * kin.h.values()[n][c]
                })
            })
            .collect();
        SymTensorField::new(chart, values)
    }
}

/// Second fundamental form and derived kinematic fields of one leaf.
#[derive(Debug, Clone)]
pub struct KinematicBundle {
    /// h_ij = -(1/2N) dt g_ij
    pub h: SymTensorField,
    /// H = g^{ij} h_ij
    pub mean_curvature: ScalarField,
    /// dt h_ij = -(dtt g_ij + 2 dt N h_ij) / (2N)
    pub dt_h: SymTensorField,
    /// |h|^2 = h_ij h^{ij}
    pub norm_sq: ScalarField,
    /// traceless part h - (H/3) g
    pub traceless: SymTensorField,
    /// dt H = N (2|h|^2 - g^{ij} dtt g_ij / (2N^2) - dt N H / N^2)
    pub dt_mean_curvature: ScalarField,
}

/// Computes the kinematic bundle of a snapshot.
pub fn kinematics(snap: &FoliationSnapshot) -> Result<KinematicBundle> {
    let chart = snap.chart().clone();
    let len = chart.len();
    let mut h_vals = Vec::with_capacity(len);
    for n in 0..len {
        let lapse = snap.lapse.values()[n];
        let dtg = &snap.dt_g.values()[n];
        h_vals.push(core::array::from_fn(|c| -dtg[c] / (2.0 * lapse)));
    }
    let h = SymTensorField::new(chart.clone(), h_vals)?;
    let mean_curvature = metric_trace(&h, &snap.g)?;

    let mut dth_vals = Vec::with_capacity(len);
    let mut norm_vals = Vec::with_capacity(len);
    let mut tf_vals = Vec::with_capacity(len);
    let mut dth_big = Vec::with_capacity(len);
    for (n, p) in chart.indices().enumerate() {
        let lapse = snap.lapse.values()[n];
        let dn = snap.dt_lapse.values()[n];
        let hv = &h.values()[n];
        let dttg = &snap.dtt_g.values()[n];
        dth_vals.push(core::array::from_fn::<f64, 6, _>(|c| {
            -(dttg[c] + 2.0 * dn * hv[c]) / (2.0 * lapse)
        }));
        let ginv = sym3::inverse_spd(&snap.g.values()[n])
            .ok_or(CoreError::DegenerateMetric { point: p })?;
        let hsq = sym3::norm_sq_generalized(hv, &ginv);
        norm_vals.push(hsq);
        let big_h = mean_curvature.values()[n];
        tf_vals.push(core::array::from_fn::<f64, 6, _>(|c| {
            hv[c] - big_h / 3.0 * snap.g.values()[n][c]
        }));
        let tr_dttg = sym3::contract(&ginv, dttg);
        dth_big.push(
            lapse
                * (2.0 * hsq
                    - tr_dttg / (2.0 * lapse * lapse)
                    - dn * big_h / (lapse * lapse)),
        );
    }
    Ok(KinematicBundle {
        h,
        mean_curvature,
        dt_h: SymTensorField::new(chart.clone(), dth_vals)?,
        norm_sq: ScalarField::new(chart.clone(), norm_vals)?,
        traceless: SymTensorField::new(chart.clone(), tf_vals)?,
        dt_mean_curvature: ScalarField::new(chart, dth_big)?,
    })
}

/// Hubble parameter sqrt(inf_M H^2).
pub fn hubble_parameter(kin: &KinematicBundle) -> f64 {
    kin.mean_curvature
        .values()
        .iter()
        .map(|h| h * h)
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Outcome of the deceleration-parameter scan.
#[derive(Debug, Clone)]
pub enum Deceleration {
    /// largest constant satisfying the concavity inequality at every sampled
    /// point and direction, with the attaining sample
    Value {
        q: f64,
        point: [usize; 3],
        direction: [f64; 3],
    },
    /// a direction with vanishing h(V,V) but strictly positive left side
    /// exists: no finite constant works (the -infinity marker)
    Unsatisfiable { point: [usize; 3], left_side: f64 },
}

impl Deceleration {
    pub fn value(&self) -> Option<f64> {
        match self {
            Deceleration::Value { q, .. } => Some(*q),
            Deceleration::Unsatisfiable { .. } => None,
        }
    }
}

/// Relative threshold below which h(V,V)^2 is treated as vanishing.
pub const DEFAULT_DIRECTION_EPS: f64 = 1e-10;

fn sphere_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * i as f64 / golden;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Deceleration parameter of the leaf.
///
/// Scans all grid points against a deterministic direction sample: the
/// g-eigendirections of h and of the energy form, plus a 64-direction
/// low-discrepancy sphere set (doubled by `refine`). With
/// W = h(V,V)^2 / g(V,V) and L = (dtt g(V,V) + 2 dt N h(V,V)) / (2N^2) the
/// result is inf over samples of 1 - L/W: the largest constant q for which
/// the length concavity inequality holds at every sample. Samples with W
/// below the relative threshold are skipped unless their left side is
/// positive, which makes the inequality unsatisfiable for every finite
/// constant.
pub fn deceleration_parameter(
    snap: &FoliationSnapshot,
    kin: &KinematicBundle,
    refine: bool,
) -> Result<Deceleration> {
    let chart = snap.chart().clone();
    let energy = snap.energy_form(kin)?;
    let h_norm_max = kin.norm_sq.max();
    if h_norm_max <= 0.0 {
        return Err(CoreError::UndefinedDeceleration);
    }
    let sphere = sphere_directions(if refine { 128 } else { 64 });
    let m_scale = energy.max_abs().max(1e-300);

    let mut best: Option<(f64, [usize; 3], [f64; 3])> = None;
    for p in chart.indices() {
        let n = chart.index(p);
        let g = &snap.g.values()[n];
        let hv = &kin.h.values()[n];
        let m = &energy.values()[n];
        let lapse = snap.lapse.values()[n];

        let mut dirs: Vec<[f64; 3]> = Vec::with_capacity(6 + sphere.len());
        for tensor in [hv, m] {
            if let Some(eig) = sym3::eig_sym3_generalized(tensor, g) {
                for k in 0..3 {
                    let col = eig.vectors.column(k);
                    dirs.push([col[0], col[1], col[2]]);
                }
            }
        }
        dirs.extend_from_slice(&sphere);

        for v in &dirs {
            let gvv = quad_form(g, v);
            if !(gvv > 0.0) {
                continue;
            }
            let hvv = quad_form(hv, v);
            let w = hvv * hvv / gvv;
            let left = quad_form(m, v) / (2.0 * lapse * lapse);
            if w < DEFAULT_DIRECTION_EPS * gvv * h_norm_max {
                if left > 1e-12 * m_scale * gvv {
                    return Ok(Deceleration::Unsatisfiable {
                        point: p,
                        left_side: left,
                    });
                }
                continue;
            }
            let q = 1.0 - left / w;
            if best.map_or(true, |(b, _, _)| q < b) {
                best = Some((q, p, *v));
            }
        }
    }
    match best {
        Some((q, point, direction)) => Ok(Deceleration::Value {
            q,
            point,
            direction,
        }),
        // h vanished in every sampled direction yet not identically: refuse
        // to invent a value
        None => Err(CoreError::UndefinedDeceleration),
    }
}

/// Result of the energy-deceleration test.
#[derive(Debug, Clone)]
pub struct EnergyDeceleration {
    pub holds: bool,
    pub worst_eigenvalue: f64,
    pub worst_point: [usize; 3],
    pub tolerance: f64,
}

/// Checks dtt g + 2 (dt N) h <= 0 in the sense of quadratic forms:
/// the largest eigenvalue over the grid must not exceed the tolerance
/// (default 1e-9 relative to the field scale).
pub fn energy_deceleration_check(
    snap: &FoliationSnapshot,
    kin: &KinematicBundle,
    tol: Option<f64>,
) -> Result<EnergyDeceleration> {
    let energy = snap.energy_form(kin)?;
    let tolerance = tol.unwrap_or_else(|| 1e-9 * energy.max_abs().max(1.0));
    let chart = snap.chart();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_point = [0usize; 3];
    for p in chart.indices() {
        let eig = sym3::eig_sym3(&sym3::to_matrix(energy.at(p)))?;
        if eig.values[2] > worst {
            worst = eig.values[2];
            worst_point = p;
        }
    }
    Ok(EnergyDeceleration {
        holds: worst <= tolerance,
        worst_eigenvalue: worst,
        worst_point,
        tolerance,
    })
}

/// Lapse and metric of one leaf, for time stencils of whole slices.
#[derive(Debug, Clone)]
pub struct LeafSample {
    pub lapse: ScalarField,
    pub metric: SymTensorField,
}

impl GridField for LeafSample {
    fn chart(&self) -> &GridChart {
        self.lapse.chart()
    }

    fn lin3(c: [f64; 3], f: [&Self; 3]) -> Self {
        LeafSample {
            lapse: ScalarField::lin3(c, [&f[0].lapse, &f[1].lapse, &f[2].lapse]),
            metric: SymTensorField::lin3(c, [&f[0].metric, &f[1].metric, &f[2].metric]),
        }
    }
}

/// Length data of a polyline under proper-time differentiation.
#[derive(Debug, Clone)]
pub struct CurveConcavity {
    pub length: f64,
    pub dt_length: f64,
    pub dtt_length: f64,
    /// L * dtt L + q (dt L)^2 : nonpositive (up to tolerance) when q is the
    /// computed deceleration parameter
    pub residual: f64,
}

/// Evaluates the concavity inequality for the length of a space curve.
///
/// Segment lengths use the metric at the segment midpoint; the 1/N
/// conversion to proper time is frozen along the curve at the middle
/// stencil time, with dt N supplied by the stencil itself.
pub fn curve_concavity_check(
    stencil: &TimeStencil<LeafSample>,
    curve: &[[f64; 3]],
    q: f64,
) -> Result<CurveConcavity> {
    if curve.len() < 2 {
        return Err(CoreError::DegenerateCurve);
    }
    let dt = stencil.step();
    let samples = stencil.fields();
    let mut length = [0.0f64; 3];
    let mut dt_total = 0.0;
    let mut dtt_total = 0.0;
    for seg in curve.windows(2) {
        let mid = [
            0.5 * (seg[0][0] + seg[1][0]),
            0.5 * (seg[0][1] + seg[1][1]),
            0.5 * (seg[0][2] + seg[1][2]),
        ];
        let delta = [
            seg[1][0] - seg[0][0],
            seg[1][1] - seg[0][1],
            seg[1][2] - seg[0][2],
        ];
        let mut seg_len = [0.0f64; 3];
        for (i, leaf) in samples.iter().enumerate() {
            let g: Sym6 = leaf
                .metric
                .sample(&mid)
                .ok_or(CoreError::OutsideChart(mid))?;
            seg_len[i] = quad_form(&g, &delta).sqrt();
        }
        let lapse = samples[1]
            .lapse
            .sample(&mid)
            .ok_or(CoreError::OutsideChart(mid))?;
        let dt_lapse = (samples[2].lapse.sample(&mid).unwrap()
            - samples[0].lapse.sample(&mid).unwrap())
            / (2.0 * dt);
        let d1 = (seg_len[2] - seg_len[0]) / (2.0 * dt);
        let d2 = (seg_len[2] - 2.0 * seg_len[1] + seg_len[0]) / (dt * dt);
        for i in 0..3 {
            length[i] += seg_len[i];
        }
        dt_total += d1 / lapse;
        dtt_total += d2 / (lapse * lapse) - dt_lapse * d1 / (lapse * lapse * lapse);
    }
    if !(length[1] > 0.0) {
        return Err(CoreError::DegenerateCurve);
    }
    Ok(CurveConcavity {
        length: length[1],
        dt_length: dt_total,
        dtt_length: dtt_total,
        residual: length[1] * dtt_total + q * dt_total * dt_total,
    })
}
