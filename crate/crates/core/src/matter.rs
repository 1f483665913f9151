//! Total stress-energy recovery from the foliation constraint system, its
//! decomposition into energy density and principal pressures, and the
//! closed-form homogeneous-cosmology layer.
//!
//! Units: the matter coupling is absorbed into the tensor, so the density is
//! rho = T_nn - Lambda and the principal pressures are the g-orthonormal
//! eigenvalues of the spatial block plus Lambda.

use crate::error::{CoreError, Result};
use crate::foliation::{FoliationSnapshot, KinematicBundle};
use crate::grid::{metric_trace, GridChart, ScalarField, SymTensorField};
use crate::riemannian::{AnalyticSlice, SliceGeometry};
use crate::sym3::{self, Sym6};

/// Pointwise decomposition of the total stress-energy tensor on one leaf.
#[derive(Debug, Clone)]
pub struct StressEnergyDecomposition {
    /// normal-normal component T_nn
    pub t_nn: ScalarField,
    /// spatial block T_ij
    pub t_spatial: SymTensorField,
    /// spacetime trace g^{ij} T_ij - T_nn
    pub tr_total: ScalarField,
    /// cosmological constant at the analysis time
    pub lambda: f64,
    /// energy density T_nn - Lambda
    pub rho: ScalarField,
    /// principal pressures: ascending g-orthonormal eigenvalues of T_ij,
    /// each shifted by Lambda
    pub pressures: [ScalarField; 3],
}

impl StressEnergyDecomposition {
    /// Assembles the derived fields from the primary components.
    pub fn from_fields(
        t_nn: ScalarField,
        t_spatial: SymTensorField,
        g: &SymTensorField,
        lambda: f64,
    ) -> Result<Self> {
        if t_nn.chart() != g.chart() || t_spatial.chart() != g.chart() {
            return Err(CoreError::ChartMismatch);
        }
        let tr_total = metric_trace(&t_spatial, g)?.zip_with(&t_nn, |s, tnn| s - tnn)?;
        let rho = t_nn.map(|v| v - lambda)?;
        let chart = g.chart().clone();
        let mut p_vals = [
            Vec::with_capacity(chart.len()),
            Vec::with_capacity(chart.len()),
            Vec::with_capacity(chart.len()),
        ];
        for p in chart.indices() {
            let eig = sym3::eig_sym3_generalized(t_spatial.at(p), g.at(p))
                .ok_or(CoreError::DegenerateMetric { point: p })?;
            for (i, dst) in p_vals.iter_mut().enumerate() {
                dst.push(eig.values[i] + lambda);
            }
        }
        let [p0, p1, p2] = p_vals;
        Ok(Self {
            t_nn,
            t_spatial,
            tr_total,
            lambda,
            rho,
            pressures: [
                ScalarField::new(chart.clone(), p0)?,
                ScalarField::new(chart.clone(), p1)?,
                ScalarField::new(chart, p2)?,
            ],
        })
    }
}

/// Recovers the total stress-energy tensor from the constraint system
///
///   R_ij = hess_ij N / N + dt h_ij / N + 2 h_il h^l_j - H h_ij
///          + T_ij - (1/2) T g_ij
///   -lap N = (dt H / N - |h|^2 - T_nn - (1/2) T) N
///
/// by first solving the 2x2 linear system in (g^{ij} T_ij, T_nn) formed by
/// the metric trace of the first equation together with the second, then
/// extracting T_ij componentwise from the first.
///
/// With S = g^{ij} T_ij and T = S - T_nn the two scalar equations read
///   -S/2 + (3/2) T_nn = c1,   -S/2 - T_nn/2 = c2,
/// a constant-coefficient system with determinant 1.
pub fn recover_stress_energy(
    snap: &FoliationSnapshot,
    kin: &KinematicBundle,
    ric: &SymTensorField,
    hess_n: &SymTensorField,
    lap_n: &ScalarField,
    lambda: f64,
) -> Result<StressEnergyDecomposition> {
    let chart = snap.chart().clone();
    if ric.chart() != &chart || hess_n.chart() != &chart || lap_n.chart() != &chart {
        return Err(CoreError::ChartMismatch);
    }
    let det: f64 = 0.25 + 0.75;
    if det.abs() < 1e-14 {
        return Err(CoreError::DegenerateRecovery(det));
    }
    let scal_r = metric_trace(ric, &snap.g)?;
    let tr_dth = metric_trace(&kin.dt_h, &snap.g)?;

    let len = chart.len();
    let mut tnn_vals = Vec::with_capacity(len);
    let mut tsp_vals = Vec::with_capacity(len);
    for (n, p) in chart.indices().enumerate() {
        let lapse = snap.lapse.values()[n];
        let big_h = kin.mean_curvature.values()[n];
        let hsq = kin.norm_sq.values()[n];
        let dth_big = kin.dt_mean_curvature.values()[n];
        let lap = lap_n.values()[n];

        let c1 = scal_r.values()[n]
            - lap / lapse
            - tr_dth.values()[n] / lapse
            - 2.0 * hsq
            + big_h * big_h;
        let c2 = -lap / lapse - dth_big / lapse + hsq;
        let t_nn = 0.5 * (c1 - c2);
        let s = -2.0 * c2 - t_nn;
        let big_t = s - t_nn;

        // componentwise extraction from the first constraint equation
        let g = &snap.g.values()[n];
        let ginv = sym3::inverse_spd(g).ok_or(CoreError::DegenerateMetric { point: p })?;
        let hm = sym3::to_matrix(&kin.h.values()[n]);
        let h_sq_mixed = hm * sym3::to_matrix(&ginv) * hm; // (h g^-1 h)_ij
        let hsq_packed = sym3::from_matrix(&h_sq_mixed);
        let t_ij: Sym6 = core::array::from_fn(|c| {
            ric.values()[n][c]
                - hess_n.values()[n][c] / lapse
                - kin.dt_h.values()[n][c] / lapse
                - 2.0 * hsq_packed[c]
                + big_h * kin.h.values()[n][c]
                + 0.5 * big_t * g[c]
        });
        tnn_vals.push(t_nn);
        tsp_vals.push(t_ij);
    }
    StressEnergyDecomposition::from_fields(
        ScalarField::new(chart.clone(), tnn_vals)?,
        SymTensorField::new(chart, tsp_vals)?,
        &snap.g,
        lambda,
    )
}

/// Pressure parameter: the largest principal pressure over the leaf.
pub fn pressure_parameter(decomp: &StressEnergyDecomposition) -> f64 {
    decomp.pressures[2].max()
}

/// Outcome of the perfect-fluid test.
#[derive(Debug, Clone)]
pub struct PerfectFluidCheck {
    pub is_perfect_fluid: bool,
    /// the common pressure when the fluid is perfect (spatially constant)
    pub pressure: Option<f64>,
    /// scaled anisotropy plus spatial pressure variation
    pub deviation: f64,
    pub tolerance: f64,
}

/// Tests T_ij = (p - Lambda) g_ij with p constant over the leaf.
///
/// deviation = (max_x |T - m g|_g + spatial variation of p) / scale, where m
/// is the pointwise isotropic mean and scale normalizes against the field
/// magnitudes.
pub fn perfect_fluid_check(
    decomp: &StressEnergyDecomposition,
    g: &SymTensorField,
    tol: Option<f64>,
) -> Result<PerfectFluidCheck> {
    let tolerance = tol.unwrap_or(1e-8);
    let chart = g.chart().clone();
    let s_field = metric_trace(&decomp.t_spatial, g)?;
    let mut aniso = 0.0f64;
    let mut p_min = f64::INFINITY;
    let mut p_max = f64::NEG_INFINITY;
    let mut t_norm_max = 0.0f64;
    for (n, p) in chart.indices().enumerate() {
        let m = s_field.values()[n] / 3.0;
        let gv = &g.values()[n];
        let ginv = sym3::inverse_spd(gv).ok_or(CoreError::DegenerateMetric { point: p })?;
        let diff: Sym6 =
            core::array::from_fn(|c| decomp.t_spatial.values()[n][c] - m * gv[c]);
        aniso = aniso.max(sym3::norm_sq_generalized(&diff, &ginv).max(0.0).sqrt());
        t_norm_max = t_norm_max.max(
            sym3::norm_sq_generalized(&decomp.t_spatial.values()[n], &ginv)
                .max(0.0)
                .sqrt(),
        );
        let pressure = m + decomp.lambda;
        p_min = p_min.min(pressure);
        p_max = p_max.max(pressure);
    }
    let scale = t_norm_max.max(decomp.t_nn.max_abs()).max(1.0);
    let deviation = (aniso + (p_max - p_min)) / scale;
    let is_perfect_fluid = deviation <= tolerance;
    Ok(PerfectFluidCheck {
        is_perfect_fluid,
        pressure: is_perfect_fluid.then_some(0.5 * (p_min + p_max)),
        deviation,
        tolerance,
    })
}

/// Homogeneous cosmology: scale factor with two derivatives, spatial
/// curvature sign, cosmological constant, optional equation of state.
pub struct FlrwModel {
    /// t -> (a, a', a''); a > 0 on the interval of interest
    pub scale: Box<dyn Fn(f64) -> (f64, f64, f64)>,
    /// constant sectional curvature K of the comoving slice (+1, 0, -1)
    pub curvature: f64,
    pub lambda: Box<dyn Fn(f64) -> f64>,
    pub omega: Option<Box<dyn Fn(f64) -> f64>>,
}

/// Comoving slice metric of curvature K, sampled at chart coordinates:
/// identity for K = 0, stereographic sphere for K > 0, ball model for K < 0.
pub fn comoving_slice_metric(k_curv: f64, x: &[f64; 3]) -> Sym6 {
    if k_curv > 0.0 {
        AnalyticSlice::RoundSphere {
            radius: 1.0 / k_curv.sqrt(),
        }
        .metric_at(x)
    } else if k_curv < 0.0 {
        AnalyticSlice::HyperbolicModel { curvature: k_curv }.metric_at(x)
    } else {
        sym3::SYM6_IDENTITY
    }
}

/// Closed-form quantities of a homogeneous moment.
#[derive(Debug, Clone)]
pub struct FlrwMoment {
    pub t0: f64,
    pub a: f64,
    pub da: f64,
    pub dda: f64,
    /// scale-factor rate a'/a (NOT the leaf Hubble parameter, which is 3x)
    pub hubble_rate: f64,
    /// -a'' a / a'^2, None when a' = 0
    pub q: Option<f64>,
    pub t_nn: f64,
    pub t_ii: f64,
    pub pressure: f64,
    pub rho: f64,
    pub lambda: f64,
    pub omega: Option<f64>,
    /// conditions q > 1/2, p <= Lambda, (a'/a)^2 > 0 force positive K
    pub closed_forced: bool,
    pub failed_conditions: Vec<&'static str>,
}

impl FlrwMoment {
    pub fn q_required(&self) -> Result<f64> {
        self.q.ok_or(CoreError::UndefinedQ)
    }
}

/// Evaluates the Friedmann closed forms at t0:
/// (a'/a)^2 = T_nn/3 - K/a^2 and a''/a = -T_ii/2 - T_nn/6, plus the
/// q-formula cross-check q = 1/2 + (a^2 T_ii + K) / (2 a^2 (a'/a)^2).
pub fn flrw_analytics(model: &FlrwModel, t0: f64) -> Result<FlrwMoment> {
    let (a, da, dda) = (model.scale)(t0);
    if !(a > 0.0) {
        return Err(CoreError::NonPositiveField {
            context: "scale factor a",
            value: a,
            point: [0, 0, 0],
        });
    }
    let k = model.curvature;
    let hr = da / a;
    let t_nn = 3.0 * (hr * hr + k / (a * a));
    let t_ii = -2.0 * dda / a - hr * hr - k / (a * a);
    let lambda = (model.lambda)(t0);
    let pressure = t_ii + lambda;
    let rho = t_nn - lambda;
    let q = if hr * hr > 0.0 {
        let direct = -dda * a / (da * da);
        let via_formula = 0.5 + (a * a * t_ii + k) / (2.0 * a * a * hr * hr);
        if (direct - via_formula).abs() > 1e-12 * (1.0 + direct.abs()) {
            return Err(CoreError::Invariant(format!(
                "q-formula mismatch: {direct} vs {via_formula}"
            )));
        }
        Some(direct)
    } else {
        None
    };
    let mut failed = Vec::new();
    match q {
        Some(qv) if qv > 0.5 => {}
        _ => failed.push("q > 1/2"),
    }
    if !(pressure <= lambda) {
        failed.push("p <= Lambda");
    }
    if !(hr * hr > 0.0) {
        failed.push("hubble rate nonzero");
    }
    Ok(FlrwMoment {
        t0,
        a,
        da,
        dda,
        hubble_rate: hr,
        q,
        t_nn,
        t_ii,
        pressure,
        rho,
        lambda,
        omega: model.omega.as_ref().map(|w| w(t0)),
        closed_forced: failed.is_empty(),
        failed_conditions: failed,
    })
}

/// Samples a homogeneous moment as a foliation snapshot with exact
/// analytic time derivatives: g = a^2 g^K, N = 1.
pub fn flrw_snapshot(model: &FlrwModel, chart: &GridChart, t0: f64) -> Result<FoliationSnapshot> {
    let (a, da, dda) = (model.scale)(t0);
    let k = model.curvature;
    let g = SymTensorField::from_fn(chart, |x| {
        let base = comoving_slice_metric(k, x);
        core::array::from_fn(|c| a * a * base[c])
    })?;
    let dt_g = SymTensorField::from_fn(chart, |x| {
        let base = comoving_slice_metric(k, x);
        core::array::from_fn(|c| 2.0 * a * da * base[c])
    })?;
    let dtt_g = SymTensorField::from_fn(chart, |x| {
        let base = comoving_slice_metric(k, x);
        core::array::from_fn(|c| 2.0 * (da * da + a * dda) * base[c])
    })?;
    FoliationSnapshot::new(
        t0,
        ScalarField::constant(chart, 1.0)?,
        ScalarField::constant(chart, 0.0)?,
        g,
        dt_g,
        dtt_g,
    )
}

/// Exact Ricci tensor of the sampled slice: Ric(a^2 g^K) = 2 K g^K.
pub fn flrw_ricci(model: &FlrwModel, chart: &GridChart, t0: f64) -> Result<SymTensorField> {
    let k = model.curvature;
    let _ = (model.scale)(t0);
    SymTensorField::from_fn(chart, |x| {
        let base = comoving_slice_metric(k, x);
        core::array::from_fn(|c| 2.0 * k * base[c])
    })
}

/// Slice geometry of the sampled moment, tagged with the matching
/// constant-curvature model so the diameter oracle is exact.
pub fn flrw_geometry(model: &FlrwModel, chart: &GridChart, t0: f64) -> Result<SliceGeometry> {
    let (a, _, _) = (model.scale)(t0);
    let k = model.curvature;
    let g = SymTensorField::from_fn(chart, |x| {
        let base = comoving_slice_metric(k, x);
        core::array::from_fn(|c| a * a * base[c])
    })?;
    if k > 0.0 {
        SliceGeometry::with_analytic(
            g,
            AnalyticSlice::RoundSphere {
                radius: a / k.sqrt(),
            },
        )
    } else if k < 0.0 {
        SliceGeometry::with_analytic(
            g,
            AnalyticSlice::HyperbolicModel {
                curvature: k / (a * a),
            },
        )
    } else if chart.is_fully_periodic() {
        let periods: [f64; 3] =
            core::array::from_fn(|ax| a * chart.dims()[ax] as f64 * chart.spacing()[ax]);
        // coordinates scale by a under the flat tag, so rescale the chart
        let rescaled = GridChart::new(
            chart.dims(),
            core::array::from_fn(|ax| a * chart.spacing()[ax]),
            [true, true, true],
        )?;
        let flat = SymTensorField::constant(&rescaled, sym3::SYM6_IDENTITY)?;
        SliceGeometry::with_analytic(flat, AnalyticSlice::FlatTorus { periods })
    } else {
        SliceGeometry::new(g)
    }
}
