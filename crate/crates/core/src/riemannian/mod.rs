//! Intrinsic Riemannian computations on a slice: connection, curvature,
//! Hessian/Laplacian, the conformal Ricci identity check, and a numerical
//! geodesic-distance diameter oracle.

mod conformal;
mod diameter;

pub use conformal::{conformal_ricci_check, ConformalCheckResult};
pub use diameter::{diameter_oracle, DiameterEstimate};

use crate::error::{CoreError, Result};
use crate::grid::{metric_trace, GridChart, ScalarField, SymTensorField};
use crate::sym3::{self, sidx, Sym6};

/// Constant-curvature models with closed-form distances.
///
/// `FlatTorus` matches an identity metric on a fully periodic chart;
/// `RoundSphere` matches the stereographic form r^2 * 4 delta / (1+|x|^2)^2
/// on a chart patch; `HyperbolicModel` matches the ball model
/// (1/|K|) * 4 delta / (1-|x|^2)^2 and has infinite diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticSlice {
    FlatTorus { periods: [f64; 3] },
    RoundSphere { radius: f64 },
    HyperbolicModel { curvature: f64 },
}

impl AnalyticSlice {
    /// Exact diameter of the model.
    pub fn diameter(&self) -> f64 {
        match *self {
            AnalyticSlice::FlatTorus { periods } => periods
                .iter()
                .map(|l| (0.5 * l) * (0.5 * l))
                .sum::<f64>()
                .sqrt(),
            AnalyticSlice::RoundSphere { radius } => std::f64::consts::PI * radius,
            AnalyticSlice::HyperbolicModel { .. } => f64::INFINITY,
        }
    }

    /// Model metric components at chart coordinates x.
    pub fn metric_at(&self, x: &[f64; 3]) -> Sym6 {
        match *self {
            AnalyticSlice::FlatTorus { .. } => sym3::SYM6_IDENTITY,
            AnalyticSlice::RoundSphere { radius } => {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                let f = radius * radius * 4.0 / (1.0 + r2).powi(2);
                [f, 0.0, 0.0, f, 0.0, f]
            }
            AnalyticSlice::HyperbolicModel { curvature } => {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                let f = (1.0 / curvature.abs()) * 4.0 / (1.0 - r2).powi(2);
                [f, 0.0, 0.0, f, 0.0, f]
            }
        }
    }
}

/// A slice (M^3, g): chart, positive-definite metric samples, and an
/// optional constant-curvature tag with closed-form distances.
#[derive(Debug, Clone)]
pub struct SliceGeometry {
    chart: GridChart,
    g: SymTensorField,
    analytic: Option<AnalyticSlice>,
}

impl SliceGeometry {
    pub fn new(g: SymTensorField) -> Result<Self> {
        g.require_positive_definite()?;
        Ok(Self {
            chart: g.chart().clone(),
            g,
            analytic: None,
        })
    }

    /// Attach an analytic tag; the tag must agree with the sampled metric to
    /// 1e-8 at every grid point.
    pub fn with_analytic(g: SymTensorField, tag: AnalyticSlice) -> Result<Self> {
        g.require_positive_definite()?;
        let chart = g.chart().clone();
        if let AnalyticSlice::FlatTorus { periods } = tag {
            for a in 0..3 {
                let span = chart.dims()[a] as f64 * chart.spacing()[a];
                if !chart.periodic()[a] || (span - periods[a]).abs() > 1e-8 * periods[a].abs() {
                    return Err(CoreError::AnalyticTagMismatch {
                        point: [0, 0, 0],
                        delta: (span - periods[a]).abs(),
                    });
                }
            }
        }
        for p in chart.indices() {
            let want = tag.metric_at(&chart.point(p));
            let got = g.at(p);
            for c in 0..6 {
                let delta = (want[c] - got[c]).abs();
                if delta > 1e-8 * (1.0 + want[c].abs()) {
                    return Err(CoreError::AnalyticTagMismatch { point: p, delta });
                }
            }
        }
        Ok(Self {
            chart,
            g,
            analytic: Some(tag),
        })
    }

    /// Flat torus with identity metric, n points per axis.
    pub fn flat_torus(periods: [f64; 3], n: usize) -> Result<Self> {
        let chart = GridChart::torus(periods, n)?;
        let g = SymTensorField::constant(&chart, sym3::SYM6_IDENTITY)?;
        Self::with_analytic(g, AnalyticSlice::FlatTorus { periods })
    }

    /// Stereographic chart patch of the round sphere of the given radius,
    /// covering [0, extent]^3, n points per axis.
    pub fn round_sphere_patch(radius: f64, extent: f64, n: usize) -> Result<Self> {
        let chart = GridChart::patch([extent; 3], n)?;
        let tag = AnalyticSlice::RoundSphere { radius };
        let g = SymTensorField::from_fn(&chart, |x| tag.metric_at(x))?;
        Self::with_analytic(g, tag)
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn metric(&self) -> &SymTensorField {
        &self.g
    }

    pub fn analytic(&self) -> Option<&AnalyticSlice> {
        self.analytic.as_ref()
    }

    /// Pointwise inverse metric samples.
    pub fn inverse_metric(&self) -> Result<Vec<Sym6>> {
        let mut out = Vec::with_capacity(self.chart.len());
        for p in self.chart.indices() {
            out.push(
                sym3::inverse_spd(self.g.at(p))
                    .ok_or(CoreError::DegenerateMetric { point: p })?,
            );
        }
        Ok(out)
    }
}

/// Christoffel symbols Gamma^k_{ij}: for each upper index k a packed
/// symmetric (i,j) block per grid point.
#[derive(Debug, Clone)]
pub struct ChristoffelField {
    chart: GridChart,
    values: Vec<[Sym6; 3]>,
}

impl ChristoffelField {
    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    #[inline]
    pub fn at(&self, p: [usize; 3]) -> &[Sym6; 3] {
        &self.values[self.chart.index(p)]
    }

    pub fn values(&self) -> &[[Sym6; 3]] {
        &self.values
    }

    pub fn sample(&self, x: &[f64; 3]) -> Option<[Sym6; 3]> {
        let st = self.chart.interp_stencil(x)?;
        let mut out = [[0.0; 6]; 3];
        for &(i, w) in &st {
            for k in 0..3 {
                for c in 0..6 {
                    out[k][c] += w * self.values[i][k][c];
                }
            }
        }
        Some(out)
    }

    /// Component tensor for a fixed upper index.
    fn upper(&self, k: usize) -> Result<SymTensorField> {
        SymTensorField::new(
            self.chart.clone(),
            self.values.iter().map(|v| v[k]).collect(),
        )
    }
}

/// Gamma^k_{ij} = 1/2 g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij}) by
/// central differences.
pub fn christoffel(geom: &SliceGeometry) -> Result<ChristoffelField> {
    let chart = geom.chart();
    let inv = geom.inverse_metric()?;
    let dg = [
        geom.metric().deriv(0)?,
        geom.metric().deriv(1)?,
        geom.metric().deriv(2)?,
    ];
    let mut values = vec![[[0.0; 6]; 3]; chart.len()];
    for p in chart.indices() {
        let flat = chart.index(p);
        let ginv = &inv[flat];
        // lower-symbol aggregate per (i,j): c_l = d_i g_jl + d_j g_il - d_l g_ij
        for (slot, &(i, j)) in sym3::SYM6_INDEX.iter().enumerate() {
            let mut lower = [0.0; 3];
            for (l, low) in lower.iter_mut().enumerate() {
                *low = dg[i].at(p)[sidx(j, l)] + dg[j].at(p)[sidx(i, l)]
                    - dg[l].at(p)[sidx(i, j)];
            }
            for k in 0..3 {
                let mut acc = 0.0;
                for (l, low) in lower.iter().enumerate() {
                    acc += ginvc(ginv, k, l) * low;
                }
                values[flat][k][slot] = 0.5 * acc;
            }
        }
    }
    Ok(ChristoffelField {
        chart: chart.clone(),
        values,
    })
}

#[inline]
fn ginvc(g: &Sym6, i: usize, j: usize) -> f64 {
    g[sidx(i, j)]
}

/// Ricci tensor of the slice metric via finite differences of the
/// Christoffel symbols:
/// R_ij = d_k Gamma^k_{ij} - d_(i Gamma^k_{k j)} + Gamma^k_{kl} Gamma^l_{ij}
///        - Gamma^k_{il} Gamma^l_{kj}.
pub fn ricci(geom: &SliceGeometry) -> Result<SymTensorField> {
    let chart = geom.chart();
    let min_dim = *chart.dims().iter().min().unwrap();
    if min_dim < 5 {
        return Err(CoreError::TooCoarse {
            op: "ricci",
            need: 5,
            got: min_dim,
        });
    }
    let gamma = christoffel(geom)?;
    // d_k Gamma^k (only the matching axis of each upper block is needed)
    let dgk = [
        gamma.upper(0)?.deriv(0)?,
        gamma.upper(1)?.deriv(1)?,
        gamma.upper(2)?.deriv(2)?,
    ];
    // contracted symbol V_j = Gamma^k_{kj}
    let mut v_fields = Vec::with_capacity(3);
    for j in 0..3 {
        v_fields.push(ScalarField::new(
            chart.clone(),
            gamma
                .values
                .iter()
                .map(|gam| (0..3).map(|k| gam[k][sidx(k, j)]).sum())
                .collect(),
        )?);
    }
    let mut dv = Vec::with_capacity(9); // dv[i*3+j] = d_i V_j
    for i in 0..3 {
        for vf in &v_fields {
            dv.push(vf.deriv(i)?);
        }
    }
    let mut out = vec![[0.0; 6]; chart.len()];
    for p in chart.indices() {
        let flat = chart.index(p);
        let gam = gamma.at(p);
        for (slot, &(i, j)) in sym3::SYM6_INDEX.iter().enumerate() {
            let t1: f64 = (0..3).map(|k| dgk[k].at(p)[slot]).sum();
            let t2 = 0.5 * (dv[i * 3 + j].at(p) + dv[j * 3 + i].at(p));
            let mut t3 = 0.0;
            let mut t4 = 0.0;
            for l in 0..3 {
                t3 += v_fields[l].at(p) * gam[l][slot];
                for k in 0..3 {
                    t4 += gam[k][sidx(i, l)] * gam[l][sidx(k, j)];
                }
            }
            out[flat][slot] = t1 - t2 + t3 - t4;
        }
    }
    SymTensorField::new(chart.clone(), out)
}

/// Plain coordinate second derivatives d_i d_j f (no connection term),
/// symmetrized at non-periodic boundaries.
pub(crate) fn coordinate_hessian(f: &ScalarField) -> Result<SymTensorField> {
    let chart = f.chart().clone();
    let d1 = [f.deriv(0)?, f.deriv(1)?, f.deriv(2)?];
    let mut comps: Vec<ScalarField> = Vec::with_capacity(6);
    for &(i, j) in &sym3::SYM6_INDEX {
        if i == j {
            comps.push(f.deriv2(i)?);
        } else {
            let a = d1[i].deriv(j)?;
            let b = d1[j].deriv(i)?;
            comps.push(a.zip_with(&b, |x, y| 0.5 * (x + y))?);
        }
    }
    let values = (0..chart.len())
        .map(|n| core::array::from_fn(|c| comps[c].values()[n]))
        .collect();
    SymTensorField::new(chart, values)
}

/// Covariant Hessian: nabla^2_{ij} f = d_i d_j f - Gamma^k_{ij} d_k f.
pub fn hessian(f: &ScalarField, geom: &SliceGeometry) -> Result<SymTensorField> {
    if f.chart() != geom.chart() {
        return Err(CoreError::ChartMismatch);
    }
    let coord = coordinate_hessian(f)?;
    let d1 = [f.deriv(0)?, f.deriv(1)?, f.deriv(2)?];
    let gamma = christoffel(geom)?;
    let chart = geom.chart();
    let mut out = vec![[0.0; 6]; chart.len()];
    for p in chart.indices() {
        let flat = chart.index(p);
        let gam = gamma.at(p);
        for c in 0..6 {
            let correction: f64 = (0..3).map(|k| gam[k][c] * d1[k].at(p)).sum();
            out[flat][c] = coord.at(p)[c] - correction;
        }
    }
    SymTensorField::new(chart.clone(), out)
}

/// Laplace-Beltrami operator: g^{ij} nabla^2_{ij} f.
pub fn laplacian(f: &ScalarField, geom: &SliceGeometry) -> Result<ScalarField> {
    metric_trace(&hessian(f, geom)?, geom.metric())
}
