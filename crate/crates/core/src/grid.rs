//! Periodic structured grid charts and the scalar/tensor fields living on
//! them, plus the finite-difference primitives every other module builds on.
//!
//! Charts start at coordinate 0 on each axis. A periodic axis with n points
//! and spacing h covers the period n*h (the point at n*h is the point at 0);
//! a non-periodic axis covers [0, (n-1)*h].

use crate::error::{CoreError, Result};
use crate::sym3::{self, Sym6};

/// Structured grid chart of a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChart {
    dims: [usize; 3],
    spacing: [f64; 3],
    periodic: [bool; 3],
}

impl GridChart {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], periodic: [bool; 3]) -> Result<Self> {
        for &h in &spacing {
            if !(h > 0.0) || !h.is_finite() {
                return Err(CoreError::BadSpacing(h));
            }
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(CoreError::TooCoarse {
                op: "chart",
                need: 1,
                got: 0,
            });
        }
        Ok(Self {
            dims,
            spacing,
            periodic,
        })
    }

    /// Flat 3-torus chart with the given periods, n points per axis.
    pub fn torus(periods: [f64; 3], n: usize) -> Result<Self> {
        Self::new(
            [n, n, n],
            [periods[0] / n as f64, periods[1] / n as f64, periods[2] / n as f64],
            [true, true, true],
        )
    }

    /// Non-periodic chart patch covering [0, extent] per axis, n points per axis.
    pub fn patch(extent: [f64; 3], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CoreError::TooCoarse {
                op: "patch chart",
                need: 2,
                got: n,
            });
        }
        Self::new(
            [n, n, n],
            [
                extent[0] / (n - 1) as f64,
                extent[1] / (n - 1) as f64,
                extent[2] / (n - 1) as f64,
            ],
            [false, false, false],
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn index(&self, p: [usize; 3]) -> usize {
        (p[0] * self.dims[1] + p[1]) * self.dims[2] + p[2]
    }

    pub fn coords_of(&self, flat: usize) -> [usize; 3] {
        let k = flat % self.dims[2];
        let rest = flat / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    #[inline]
    pub fn point(&self, p: [usize; 3]) -> [f64; 3] {
        [
            p[0] as f64 * self.spacing[0],
            p[1] as f64 * self.spacing[1],
            p[2] as f64 * self.spacing[2],
        ]
    }

    /// Iterate over all grid multi-indices in flat order.
    pub fn indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nx).flat_map(move |i| (0..ny).flat_map(move |j| (0..nz).map(move |k| [i, j, k])))
    }

    /// Neighbor along `axis` at signed offset, honoring periodic wrap.
    #[inline]
    pub fn shift(&self, p: [usize; 3], axis: usize, delta: isize) -> Option<[usize; 3]> {
        let n = self.dims[axis] as isize;
        let raw = p[axis] as isize + delta;
        let idx = if self.periodic[axis] {
            raw.rem_euclid(n)
        } else if (0..n).contains(&raw) {
            raw
        } else {
            return None;
        };
        let mut q = p;
        q[axis] = idx as usize;
        Some(q)
    }

    /// Locate a continuous coordinate along one axis: (left index, right
    /// index, fraction in [0,1)). None when outside a non-periodic axis.
    fn locate(&self, x: f64, axis: usize) -> Option<(usize, usize, f64)> {
        let h = self.spacing[axis];
        let n = self.dims[axis];
        if self.periodic[axis] {
            let period = h * n as f64;
            let u = x.rem_euclid(period) / h;
            let base = u.floor();
            let i0 = (base as usize) % n;
            Some((i0, (i0 + 1) % n, u - base))
        } else {
            let max = h * (n - 1) as f64;
            if x < -1e-9 * h || x > max * (1.0 + 1e-12) + 1e-9 * h {
                return None;
            }
            let xc = x.clamp(0.0, max);
            let mut i0 = (xc / h).floor() as usize;
            if i0 >= n - 1 {
                i0 = n - 2;
            }
            Some((i0, i0 + 1, (xc - i0 as f64 * h) / h))
        }
    }

    /// The eight (flat index, weight) pairs of trilinear interpolation at x.
    pub fn interp_stencil(&self, x: &[f64; 3]) -> Option<[(usize, f64); 8]> {
        let (i0, i1, fx) = self.locate(x[0], 0)?;
        let (j0, j1, fy) = self.locate(x[1], 1)?;
        let (k0, k1, fz) = self.locate(x[2], 2)?;
        let mut out = [(0usize, 0.0f64); 8];
        let mut slot = 0;
        for (i, wi) in [(i0, 1.0 - fx), (i1, fx)] {
            for (j, wj) in [(j0, 1.0 - fy), (j1, fy)] {
                for (k, wk) in [(k0, 1.0 - fz), (k1, fz)] {
                    out[slot] = (self.index([i, j, k]), wi * wj * wk);
                    slot += 1;
                }
            }
        }
        Some(out)
    }

    fn require_fd(&self, op: &'static str, need: usize) -> Result<()> {
        let got = *self.dims.iter().min().unwrap();
        if got < need {
            return Err(CoreError::TooCoarse { op, need, got });
        }
        Ok(())
    }
}

/// Sampled real-valued function on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    chart: GridChart,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(chart: GridChart, values: Vec<f64>) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(CoreError::ShapeMismatch {
                got: values.len(),
                want: chart.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "scalar field values",
            });
        }
        Ok(Self { chart, values })
    }

    pub fn from_fn(chart: &GridChart, mut f: impl FnMut(&[f64; 3]) -> f64) -> Result<Self> {
        let values = chart.indices().map(|p| f(&chart.point(p))).collect();
        Self::new(chart.clone(), values)
    }

    pub fn constant(chart: &GridChart, v: f64) -> Result<Self> {
        Self::new(chart.clone(), vec![v; chart.len()])
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, p: [usize; 3]) -> f64 {
        self.values[self.chart.index(p)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.chart.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.chart != other.chart {
            return Err(CoreError::ChartMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.chart.clone(), values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Fails with the offending point when any value is not strictly positive.
    pub fn require_positive(&self, context: &'static str) -> Result<()> {
        for p in self.chart.indices() {
            let v = self.at(p);
            if !(v > 0.0) {
                return Err(CoreError::NonPositiveField {
                    context,
                    value: v,
                    point: p,
                });
            }
        }
        Ok(())
    }

    /// Trilinear interpolation at a continuous coordinate.
    pub fn sample(&self, x: &[f64; 3]) -> Option<f64> {
        let st = self.chart.interp_stencil(x)?;
        Some(st.iter().map(|&(i, w)| w * self.values[i]).sum())
    }

    /// First derivative along `axis`: central in the interior (and across
    /// periodic wraps), one-sided second-order at non-periodic boundaries.
    pub fn deriv(&self, axis: usize) -> Result<Self> {
        self.chart.require_fd("first derivative", 4)?;
        let h = self.chart.spacing[axis];
        let mut out = vec![0.0; self.values.len()];
        for p in self.chart.indices() {
            let v = |q: [usize; 3]| self.values[self.chart.index(q)];
            let d = match (
                self.chart.shift(p, axis, -1),
                self.chart.shift(p, axis, 1),
            ) {
                (Some(m), Some(pl)) => (v(pl) - v(m)) / (2.0 * h),
                (None, Some(_)) => {
                    let p1 = self.chart.shift(p, axis, 1).unwrap();
                    let p2 = self.chart.shift(p, axis, 2).unwrap();
                    (-3.0 * v(p) + 4.0 * v(p1) - v(p2)) / (2.0 * h)
                }
                (Some(_), None) => {
                    let m1 = self.chart.shift(p, axis, -1).unwrap();
                    let m2 = self.chart.shift(p, axis, -2).unwrap();
                    (3.0 * v(p) - 4.0 * v(m1) + v(m2)) / (2.0 * h)
                }
                (None, None) => unreachable!("dims >= 4 checked above"),
            };
            out[self.chart.index(p)] = d;
        }
        Self::new(self.chart.clone(), out)
    }

    /// Second derivative along `axis`, same stencil policy as `deriv`.
    pub fn deriv2(&self, axis: usize) -> Result<Self> {
        self.chart.require_fd("second derivative", 4)?;
        let h2 = self.chart.spacing[axis].powi(2);
        let mut out = vec![0.0; self.values.len()];
        for p in self.chart.indices() {
            let v = |q: [usize; 3]| self.values[self.chart.index(q)];
            let d = match (
                self.chart.shift(p, axis, -1),
                self.chart.shift(p, axis, 1),
            ) {
                (Some(m), Some(pl)) => (v(pl) - 2.0 * v(p) + v(m)) / h2,
                (None, Some(_)) => {
                    let p1 = self.chart.shift(p, axis, 1).unwrap();
                    let p2 = self.chart.shift(p, axis, 2).unwrap();
                    let p3 = self.chart.shift(p, axis, 3).unwrap();
                    (2.0 * v(p) - 5.0 * v(p1) + 4.0 * v(p2) - v(p3)) / h2
                }
                (Some(_), None) => {
                    let m1 = self.chart.shift(p, axis, -1).unwrap();
                    let m2 = self.chart.shift(p, axis, -2).unwrap();
                    let m3 = self.chart.shift(p, axis, -3).unwrap();
                    (2.0 * v(p) - 5.0 * v(m1) + 4.0 * v(m2) - v(m3)) / h2
                }
                (None, None) => unreachable!(),
            };
            out[self.chart.index(p)] = d;
        }
        Self::new(self.chart.clone(), out)
    }
}

/// Sampled symmetric 2-tensor on a chart, packed per point as
/// (11, 12, 13, 22, 23, 33).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    chart: GridChart,
    values: Vec<Sym6>,
}

impl SymTensorField {
    pub fn new(chart: GridChart, values: Vec<Sym6>) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(CoreError::ShapeMismatch {
                got: values.len(),
                want: chart.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "tensor field values",
            });
        }
        Ok(Self { chart, values })
    }

    pub fn from_fn(chart: &GridChart, mut f: impl FnMut(&[f64; 3]) -> Sym6) -> Result<Self> {
        let values = chart.indices().map(|p| f(&chart.point(p))).collect();
        Self::new(chart.clone(), values)
    }

    pub fn constant(chart: &GridChart, v: Sym6) -> Result<Self> {
        Self::new(chart.clone(), vec![v; chart.len()])
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn values(&self) -> &[Sym6] {
        &self.values
    }

    #[inline]
    pub fn at(&self, p: [usize; 3]) -> &Sym6 {
        &self.values[self.chart.index(p)]
    }

    pub fn map(&self, f: impl Fn(&Sym6) -> Sym6) -> Result<Self> {
        Self::new(self.chart.clone(), self.values.iter().map(f).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&Sym6, &Sym6) -> Sym6) -> Result<Self> {
        if self.chart != other.chart {
            return Err(CoreError::ChartMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(a, b))
            .collect();
        Self::new(self.chart.clone(), values)
    }

    /// One packed component as a scalar field (0..6).
    pub fn component(&self, c: usize) -> Result<ScalarField> {
        ScalarField::new(
            self.chart.clone(),
            self.values.iter().map(|v| v[c]).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sample(&self, x: &[f64; 3]) -> Option<Sym6> {
        let st = self.chart.interp_stencil(x)?;
        let mut out = [0.0; 6];
        for &(i, w) in &st {
            for c in 0..6 {
                out[c] += w * self.values[i][c];
            }
        }
        Some(out)
    }

    pub fn deriv(&self, axis: usize) -> Result<Self> {
        let mut comps = Vec::with_capacity(6);
        for c in 0..6 {
            comps.push(self.component(c)?.deriv(axis)?);
        }
        let values = (0..self.chart.len())
            .map(|i| core::array::from_fn(|c| comps[c].values()[i]))
            .collect();
        Self::new(self.chart.clone(), values)
    }

    /// Verifies pointwise positive definiteness, naming the first bad point.
    pub fn require_positive_definite(&self) -> Result<()> {
        for p in self.chart.indices() {
            if sym3::cholesky(self.at(p)).is_none() {
                return Err(CoreError::DegenerateMetric { point: p });
            }
        }
        Ok(())
    }
}

/// Pointwise trace g^{ij} S_ij of a tensor field against a metric field.
pub fn metric_trace(s: &SymTensorField, g: &SymTensorField) -> Result<ScalarField> {
    if s.chart() != g.chart() {
        return Err(CoreError::ChartMismatch);
    }
    let mut out = Vec::with_capacity(g.chart().len());
    for p in g.chart().indices() {
        let inv = sym3::inverse_spd(g.at(p)).ok_or(CoreError::DegenerateMetric { point: p })?;
        out.push(sym3::contract(&inv, s.at(p)));
    }
    ScalarField::new(g.chart().clone(), out)
}

/// Fields that can enter a three-point time stencil.
pub trait GridField: Sized + Clone {
    fn chart(&self) -> &GridChart;
    fn lin3(coeffs: [f64; 3], fields: [&Self; 3]) -> Self;
}

impl GridField for ScalarField {
    fn chart(&self) -> &GridChart {
        &self.chart
    }

    fn lin3(c: [f64; 3], f: [&Self; 3]) -> Self {
        let values = (0..f[0].values.len())
            .map(|i| c[0] * f[0].values[i] + c[1] * f[1].values[i] + c[2] * f[2].values[i])
            .collect();
        Self {
            chart: f[0].chart.clone(),
            values,
        }
    }
}

impl GridField for SymTensorField {
    fn chart(&self) -> &GridChart {
        &self.chart
    }

    fn lin3(c: [f64; 3], f: [&Self; 3]) -> Self {
        let values = (0..f[0].values.len())
            .map(|i| {
                core::array::from_fn(|comp| {
                    c[0] * f[0].values[i][comp]
                        + c[1] * f[1].values[i][comp]
                        + c[2] * f[2].values[i][comp]
                })
            })
            .collect();
        Self {
            chart: f[0].chart.clone(),
            values,
        }
    }
}

/// Three uniformly spaced time samples of one field.
#[derive(Debug, Clone)]
pub struct TimeStencil<F> {
    times: [f64; 3],
    fields: [F; 3],
}

impl<F: GridField> TimeStencil<F> {
    pub fn new(times: [f64; 3], fields: [F; 3]) -> Result<Self> {
        let d1 = times[1] - times[0];
        let d2 = times[2] - times[1];
        if !(d1 > 0.0 && d2 > 0.0) {
            return Err(CoreError::NonIncreasingStencil);
        }
        if (d2 - d1).abs() > 1e-12 * d1.max(d2) {
            return Err(CoreError::NonUniformStencil {
                first: d1,
                second: d2,
            });
        }
        if fields[0].chart() != fields[1].chart() || fields[1].chart() != fields[2].chart() {
            return Err(CoreError::ChartMismatch);
        }
        Ok(Self { times, fields })
    }

    pub fn t0(&self) -> f64 {
        self.times[1]
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn fields(&self) -> &[F; 3] {
        &self.fields
    }

    /// Central first and second time derivatives at the middle sample.
    /// Exact on fields quadratic in t.
    pub fn fd_time(&self) -> (F, F) {
        let dt = self.step();
        let refs = [&self.fields[0], &self.fields[1], &self.fields[2]];
        let first = F::lin3([-0.5 / dt, 0.0, 0.5 / dt], refs);
        let second = F::lin3([1.0 / (dt * dt), -2.0 / (dt * dt), 1.0 / (dt * dt)], refs);
        (first, second)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym3::SYM6_IDENTITY;

    fn tiny_chart() -> GridChart {
        GridChart::new([4, 4, 4], [1.0, 1.0, 1.0], [true, true, true]).unwrap()
    }

    #[test]
    fn field_shape_is_checked() {
        let chart = tiny_chart();
        assert!(matches!(
            ScalarField::new(chart, vec![0.0; 3]),
            Err(CoreError::ShapeMismatch { got: 3, want: 64 })
        ));
    }

    #[test]
    fn fd_time_constant_is_zero() {
        let chart = tiny_chart();
        let f = ScalarField::constant(&chart, 1.0).unwrap();
        let st = TimeStencil::new([0.0, 1.0, 2.0], [f.clone(), f.clone(), f]).unwrap();
        let (d1, d2) = st.fd_time();
        assert_eq!(d1.max_abs(), 0.0);
        assert_eq!(d2.max_abs(), 0.0);
    }

    #[test]
    fn fd_time_exact_on_quadratic() {
        // values t^2 at t = 0, 1, 2 -> derivative 2 at t0 = 1, second 2
        let chart = tiny_chart();
        let fs = [0.0, 1.0, 4.0].map(|v| ScalarField::constant(&chart, v).unwrap());
        let st = TimeStencil::new([0.0, 1.0, 2.0], fs).unwrap();
        let (d1, d2) = st.fd_time();
        assert!((d1.values()[0] - 2.0).abs() < 1e-12);
        assert!((d2.values()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fd_time_quadratic_general_coefficients() {
        // a + b t + c t^2 is reproduced exactly (relative 1e-12)
        let chart = tiny_chart();
        let (a, b, c) = (0.7, -1.3, 2.9);
        let (t0, dt) = (0.4, 0.05);
        let f = |t: f64| a + b * t + c * t * t;
        let fs = [t0 - dt, t0, t0 + dt].map(|t| ScalarField::constant(&chart, f(t)).unwrap());
        let st = TimeStencil::new([t0 - dt, t0, t0 + dt], fs).unwrap();
        let (d1, d2) = st.fd_time();
        let want1 = b + 2.0 * c * t0;
        assert!((d1.values()[0] - want1).abs() <= 1e-12 * want1.abs());
        assert!((d2.values()[0] - 2.0 * c).abs() <= 1e-12 * (2.0 * c).abs());
    }

    #[test]
    fn fd_time_sin_against_analytic() {
        let chart = tiny_chart();
        let mut errs = Vec::new();
        for h in [0.1f64, 0.05] {
            let fs = [-h, 0.0, h].map(|t| ScalarField::constant(&chart, t.sin()).unwrap());
            let st = TimeStencil::new([-h, 0.0, h], fs).unwrap();
            let (d1, d2) = st.fd_time();
            errs.push(((d1.values()[0] - 1.0).abs(), d2.values()[0].abs()));
        }
        // O(h^2): halving h divides the first-derivative error by ~4
        assert!(errs[0].0 > 3.0 * errs[1].0);
        assert!(errs[1].0 < 5e-4);
        assert!(errs[1].1 < 1e-12); // sin is odd: second derivative at 0 cancels exactly
    }

    #[test]
    fn nonuniform_stencil_rejected() {
        let chart = tiny_chart();
        let f = ScalarField::constant(&chart, 1.0).unwrap();
        let bad = TimeStencil::new([0.0, 1.0, 2.5], [f.clone(), f.clone(), f]);
        assert!(matches!(bad, Err(CoreError::NonUniformStencil { .. })));
    }

    #[test]
    fn metric_trace_of_metric_is_three() {
        let chart = tiny_chart();
        let g = SymTensorField::from_fn(&chart, |x| {
            [2.0 + 0.1 * x[0].sin(), 0.05, 0.0, 1.5, -0.02, 1.0 + 0.1 * x[2].cos()]
        })
        .unwrap();
        let tr = metric_trace(&g, &g).unwrap();
        for &v in tr.values() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_trace_conformal_flat() {
        let chart = tiny_chart();
        let a = 1.7;
        let g = SymTensorField::constant(&chart, [a * a, 0.0, 0.0, a * a, 0.0, a * a]).unwrap();
        let s = SymTensorField::constant(&chart, SYM6_IDENTITY).unwrap();
        let tr = metric_trace(&s, &g).unwrap();
        for &v in tr.values() {
            assert!((v - 3.0 / (a * a)).abs() < 1e-14);
        }
    }

    #[test]
    fn metric_trace_zero_tensor() {
        let chart = tiny_chart();
        let g = SymTensorField::constant(&chart, SYM6_IDENTITY).unwrap();
        let s = SymTensorField::constant(&chart, [0.0; 6]).unwrap();
        let tr = metric_trace(&s, &g).unwrap();
        assert_eq!(tr.max_abs(), 0.0);
    }

    #[test]
    fn metric_trace_degenerate_names_point() {
        let chart = tiny_chart();
        let mut values = vec![SYM6_IDENTITY; chart.len()];
        let bad = chart.index([2, 1, 3]);
        values[bad] = [1.0, 0.0, 0.0, -1.0, 0.0, 1.0];
        let g = SymTensorField::new(chart.clone(), values).unwrap();
        let s = SymTensorField::constant(&chart, SYM6_IDENTITY).unwrap();
        match metric_trace(&s, &g) {
            Err(CoreError::DegenerateMetric { point }) => assert_eq!(point, [2, 1, 3]),
            other => panic!("expected degenerate metric, got {other:?}"),
        }
    }

    #[test]
    fn spatial_derivative_periodic_sin() {
        let chart = GridChart::torus([2.0 * std::f64::consts::PI; 3], 32).unwrap();
        let f = ScalarField::from_fn(&chart, |x| x[0].sin()).unwrap();
        let d = f.deriv(0).unwrap();
        let exact = ScalarField::from_fn(&chart, |x| x[0].cos()).unwrap();
        let err = d.zip_with(&exact, |a, b| a - b).unwrap().max_abs();
        assert!(err < 7e-3, "err = {err}");
    }

    #[test]
    fn spatial_derivative_patch_boundary_second_order() {
        // cubic polynomial: one-sided boundary stencils are exact on quadratics,
        // second order on the cubic term
        let mut errs = Vec::new();
        for n in [9, 17] {
            let chart = GridChart::patch([1.0; 3], n).unwrap();
            let f = ScalarField::from_fn(&chart, |x| x[0].powi(3)).unwrap();
            let d = f.deriv(0).unwrap();
            let exact = ScalarField::from_fn(&chart, |x| 3.0 * x[0] * x[0]).unwrap();
            errs.push(d.zip_with(&exact, |a, b| a - b).unwrap().max_abs());
        }
        assert!(errs[0] > 3.0 * errs[1], "errors {errs:?}");
    }

    #[test]
    fn trilinear_sample_periodic_wrap() {
        let chart = GridChart::torus([4.0; 3], 4).unwrap();
        let f = ScalarField::from_fn(&chart, |x| x[0]).unwrap(); // sawtooth on the torus
        // midway between the last point (x=3) and the wrapped first point (x=0)
        let v = f.sample(&[3.5, 0.0, 0.0]).unwrap();
        assert!((v - 1.5).abs() < 1e-14);
        // negative coordinates wrap too
        let v = f.sample(&[-0.5, 0.0, 0.0]).unwrap();
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn sample_outside_patch_is_none() {
        let chart = GridChart::patch([1.0; 3], 5).unwrap();
        let f = ScalarField::constant(&chart, 1.0).unwrap();
        assert!(f.sample(&[1.2, 0.5, 0.5]).is_none());
        assert!(f.sample(&[0.5, 0.5, 0.5]).is_some());
    }
}
