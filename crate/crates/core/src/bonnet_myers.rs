//! Diameter-bound machinery: verification of the curvature and
//! supersolution hypotheses, the admissible interval of the conformal
//! exponent k, the proof constants A and B, the closed-form diameter bound,
//! a golden-section search for the best k, and the first-eigenvalue
//! feasibility region.
//!
//! Hypotheses on a slice (M^3, g), for parameters (n, alpha, beta, gamma):
//!
//!   (curvature)      Ric >= alpha hess(u)/u + beta du x du / u^2 + Q
//!   (supersolution)  -lap u >= V u + gamma |grad u|^2 / u
//!   (tensor bound)   lambda_min(Q) + k V >= (n-1) lambda,  lambda > 0
//!   (sign)           k (gamma + 1 - alpha) >= 0
//!   (quadratic)      alpha + beta + k(gamma+1) - (n-1) k^2/4 > 0
//!
//! yield  diam(M, g) <= pi sqrt(A/B)  with
//!   A = n - 1 + [2 alpha - k(n-3)]^2 / (4 [alpha+beta+k(gamma+1)-(n-1)k^2/4])
//!   B = (n - 1) lambda.
//!
//! The tensor bound is checked through the smallest g-orthonormal eigenvalue
//! of Q, the frame-invariant sufficient reading of the per-direction
//! condition.

use crate::error::{CoreError, Result};
use crate::grid::{ScalarField, SymTensorField};
use crate::riemannian::{hessian, laplacian, SliceGeometry};
use crate::sym3;

/// Full input of the diameter-bound theorem.
pub struct BMHypothesis {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub geom: SliceGeometry,
    pub u: ScalarField,
    pub potential: ScalarField,
    pub q_tensor: SymTensorField,
    pub ric: SymTensorField,
}

impl BMHypothesis {
    pub fn new(
        n: u32,
        alpha: f64,
        beta: f64,
        gamma: f64,
        geom: SliceGeometry,
        u: ScalarField,
        potential: ScalarField,
        q_tensor: SymTensorField,
        ric: SymTensorField,
    ) -> Result<Self> {
        if n < 3 {
            return Err(CoreError::InvalidHypothesis(format!(
                "dimension n = {n} must be at least 3"
            )));
        }
        let chart = geom.chart();
        if [u.chart(), potential.chart(), q_tensor.chart(), ric.chart()]
            .iter()
            .any(|c| *c != chart)
        {
            return Err(CoreError::ChartMismatch);
        }
        u.require_positive("potential function u")?;
        Ok(Self {
            n,
            alpha,
            beta,
            gamma,
            geom,
            u,
            potential,
            q_tensor,
            ric,
        })
    }
}

/// Pointwise-minimum report of one inequality.
#[derive(Debug, Clone)]
pub struct InequalityCheck {
    pub holds: bool,
    /// smallest residual over the grid (eigenvalue for tensor inequalities)
    pub min_residual: f64,
    /// largest residual over the grid, for equality-style checks
    pub max_residual: f64,
    pub worst_point: [usize; 3],
    pub tolerance: f64,
}

/// Residual tensor Ric - alpha hess(u)/u - beta du x du/u^2 - Q; the
/// inequality holds when its smallest g-orthonormal eigenvalue stays above
/// -tolerance everywhere.
pub fn check_ric_inequality(hyp: &BMHypothesis, tol: Option<f64>) -> Result<InequalityCheck> {
    let chart = hyp.geom.chart().clone();
    let hess = hessian(&hyp.u, &hyp.geom)?;
    let du = [hyp.u.deriv(0)?, hyp.u.deriv(1)?, hyp.u.deriv(2)?];
    let tolerance =
        tol.unwrap_or_else(|| 1e-9 * hyp.ric.max_abs().max(hyp.q_tensor.max_abs()).max(1.0));
    let mut min_residual = f64::INFINITY;
    let mut max_residual = f64::NEG_INFINITY;
    let mut worst_point = [0usize; 3];
    for p in chart.indices() {
        let n = chart.index(p);
        let uv = hyp.u.values()[n];
        let grad = [du[0].values()[n], du[1].values()[n], du[2].values()[n]];
        let residual: sym3::Sym6 = core::array::from_fn(|c| {
            let (i, j) = sym3::SYM6_INDEX[c];
            hyp.ric.values()[n][c]
                - hyp.alpha * hess.values()[n][c] / uv
                - hyp.beta * grad[i] * grad[j] / (uv * uv)
                - hyp.q_tensor.values()[n][c]
        });
        let eig = sym3::eig_sym3_generalized(&residual, &hyp.geom.metric().values()[n])
            .ok_or(CoreError::DegenerateMetric { point: p })?;
        if eig.values[0] < min_residual {
            min_residual = eig.values[0];
            worst_point = p;
        }
        max_residual = max_residual.max(eig.values[2]);
    }
    Ok(InequalityCheck {
        holds: min_residual >= -tolerance,
        min_residual,
        max_residual,
        worst_point,
        tolerance,
    })
}

/// Residual -lap u - V u - gamma |grad u|^2 / u; the inequality holds when
/// the residual stays above -tolerance everywhere.
pub fn check_supersolution(hyp: &BMHypothesis, tol: Option<f64>) -> Result<InequalityCheck> {
    let chart = hyp.geom.chart().clone();
    hyp.u.require_positive("supersolution u")?;
    let lap = laplacian(&hyp.u, &hyp.geom)?;
    let du = [hyp.u.deriv(0)?, hyp.u.deriv(1)?, hyp.u.deriv(2)?];
    let inv = hyp.geom.inverse_metric()?;
    let tolerance = tol.unwrap_or_else(|| {
        1e-9 * lap
            .max_abs()
            .max(hyp.potential.max_abs() * hyp.u.max_abs())
            .max(1.0)
    });
    let mut min_residual = f64::INFINITY;
    let mut max_residual = f64::NEG_INFINITY;
    let mut worst_point = [0usize; 3];
    for p in chart.indices() {
        let n = chart.index(p);
        let uv = hyp.u.values()[n];
        let grad = [du[0].values()[n], du[1].values()[n], du[2].values()[n]];
        let gi = &inv[n];
        let mut grad_sq = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                grad_sq += gi[sym3::sidx(i, j)] * grad[i] * grad[j];
            }
        }
        let residual =
            -lap.values()[n] - hyp.potential.values()[n] * uv - hyp.gamma * grad_sq / uv;
        if residual < min_residual {
            min_residual = residual;
            worst_point = p;
        }
        max_residual = max_residual.max(residual);
    }
    Ok(InequalityCheck {
        holds: min_residual >= -tolerance,
        min_residual,
        max_residual,
        worst_point,
        tolerance,
    })
}

/// One admissible interval of the conformal exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl KInterval {
    pub fn contains(&self, k: f64) -> bool {
        (k > self.lo || (self.lo_closed && k == self.lo))
            && (k < self.hi || (self.hi_closed && k == self.hi))
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }
}

/// The quadratic condition alpha + beta + k(gamma+1) - (n-1)k^2/4, positive
/// on the open admissible interval.
pub fn hp2_value(n: u32, alpha: f64, beta: f64, gamma: f64, k: f64) -> f64 {
    alpha + beta + k * (gamma + 1.0) - (n as f64 - 1.0) * k * k / 4.0
}

/// Solves the quadratic condition for k and intersects it with the sign
/// condition k(gamma + 1 - alpha) >= 0. Empty result means no admissible k.
pub fn feasible_k_interval(n: u32, alpha: f64, beta: f64, gamma: f64) -> Vec<KInterval> {
    let a2 = (n as f64 - 1.0) / 4.0;
    let b2 = gamma + 1.0;
    let c2 = alpha + beta;
    // a2 k^2 - b2 k - c2 < 0
    let disc = b2 * b2 + 4.0 * a2 * c2;
    if disc <= 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let lo = (b2 - sq) / (2.0 * a2);
    let hi = (b2 + sq) / (2.0 * a2);
    let mut iv = KInterval {
        lo,
        hi,
        lo_closed: false,
        hi_closed: false,
    };
    let sign_coeff = gamma + 1.0 - alpha;
    if sign_coeff > 0.0 {
        // k >= 0
        if iv.hi <= 0.0 {
            return Vec::new();
        }
        if iv.lo < 0.0 {
            iv.lo = 0.0;
            iv.lo_closed = true;
        }
    } else if sign_coeff < 0.0 {
        // k <= 0
        if iv.lo >= 0.0 {
            return Vec::new();
        }
        if iv.hi > 0.0 {
            iv.hi = 0.0;
            iv.hi_closed = true;
        }
    }
    if iv.width() <= 0.0 && !(iv.lo_closed && iv.hi_closed && iv.lo == iv.hi) {
        return Vec::new();
    }
    vec![iv]
}

/// The positivity constant of the tensor bound:
/// lambda = min over the grid of [lambda_min(Q) + k V] / (n-1), or None when
/// the minimum is not strictly positive (infeasible). Values below the
/// rounding noise floor of the inputs count as not positive.
pub fn lambda_from_f(hyp: &BMHypothesis, k: f64) -> Result<Option<f64>> {
    let samples = tensor_bound_samples(hyp)?;
    let floor = lambda_floor(&samples, None);
    Ok(lambda_from_samples(&samples, hyp.n, k, floor))
}

/// Pointwise pairs (lambda_min of Q, V) feeding the tensor bound.
fn tensor_bound_samples(hyp: &BMHypothesis) -> Result<Vec<(f64, f64)>> {
    let chart = hyp.geom.chart().clone();
    let mut out = Vec::with_capacity(chart.len());
    for p in chart.indices() {
        let n = chart.index(p);
        let qmin = sym3::min_eig_generalized(
            &hyp.q_tensor.values()[n],
            &hyp.geom.metric().values()[n],
        )
        .ok_or(CoreError::DegenerateMetric { point: p })?;
        out.push((qmin, hyp.potential.values()[n]));
    }
    Ok(out)
}

fn lambda_from_samples(samples: &[(f64, f64)], n: u32, k: f64, floor: f64) -> Option<f64> {
    let min = samples
        .iter()
        .map(|&(q, v)| q + k * v)
        .fold(f64::INFINITY, f64::min);
    let lambda = min / (n as f64 - 1.0);
    (lambda > floor).then_some(lambda)
}

/// Noise floor below which a positive lambda is indistinguishable from
/// rounding of a vanishing tensor bound.
fn lambda_floor(samples: &[(f64, f64)], tol: Option<f64>) -> f64 {
    tol.unwrap_or_else(|| {
        1e-9 * samples
            .iter()
            .map(|&(q, v)| q.abs().max(v.abs()))
            .fold(1.0f64, f64::max)
    })
}

/// The proof constants:
/// A = n-1 + [2 alpha - k(n-3)]^2 / (4 [alpha+beta+k(gamma+1)-(n-1)k^2/4]),
/// B = (n-1) lambda.
pub fn ab_constants(
    n: u32,
    alpha: f64,
    beta: f64,
    gamma: f64,
    k: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(CoreError::KOutsideFeasible {
            k,
            reason: "lambda must be strictly positive",
        });
    }
    let nf = n as f64;
    let num = 2.0 * alpha - k * (nf - 3.0);
    let b = (nf - 1.0) * lambda;
    // the correction term vanishes identically with its numerator; this
    // covers the classical limit alpha = beta = gamma = k = 0 where the
    // quadratic condition degenerates to zero as well
    if num == 0.0 {
        return Ok((nf - 1.0, b));
    }
    let denom = hp2_value(n, alpha, beta, gamma, k);
    if !(denom > 0.0) {
        return Err(CoreError::KOutsideFeasible {
            k,
            reason: "the quadratic condition is not strictly positive",
        });
    }
    let a = nf - 1.0 + num * num / (4.0 * denom);
    Ok((a, b))
}

/// Diameter bound pi sqrt(A/B), cross-checked against the one-line closed
/// form to relative 1e-12.
pub fn diameter_bound(
    n: u32,
    alpha: f64,
    beta: f64,
    gamma: f64,
    k: f64,
    lambda: f64,
) -> Result<f64> {
    let (a, b) = ab_constants(n, alpha, beta, gamma, k, lambda)?;
    let via_ab = std::f64::consts::PI * (a / b).sqrt();
    let nf = n as f64;
    let num = 2.0 * alpha - k * (nf - 3.0);
    let correction = if num == 0.0 {
        0.0
    } else {
        let denom = hp2_value(n, alpha, beta, gamma, k);
        num * num / (4.0 * (nf - 1.0) * denom)
    };
    let closed = std::f64::consts::PI * ((1.0 / lambda) * (1.0 + correction)).sqrt();
    if (via_ab - closed).abs() > 1e-12 * via_ab.abs() {
        return Err(CoreError::Invariant(format!(
            "diameter bound routes disagree: {via_ab} vs {closed}"
        )));
    }
    Ok(via_ab)
}

/// Certificate of a verified, k-optimized diameter bound.
#[derive(Debug, Clone)]
pub struct BMCertificate {
    pub k: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub diameter_bound: f64,
    pub feasible_interval: KInterval,
    pub ric_residual_min: f64,
    pub supersolution_residual_min: f64,
    /// the optimum sits against a (shifted) endpoint of the open interval
    pub at_boundary: bool,
}

const COARSE_SAMPLES: usize = 256;
const GOLDEN_TOL: f64 = 1e-10;
const ENDPOINT_SHIFT_REL: f64 = 1e-8;

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INVPHI * (hi - lo);
    let mut d = lo + INVPHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INVPHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INVPHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes the diameter bound over the admissible k.
///
/// Fails when the hypothesis checks fail; returns None when lambda(k) is
/// never positive on the interval (sampled at 256 points, then refined by
/// golden section to |dk| < 1e-10). The strict endpoints are shifted inward
/// by 1e-8 of the interval width; certificates achieving their optimum
/// against a shifted endpoint carry the boundary flag.
pub fn optimize_k(hyp: &BMHypothesis, tol: Option<f64>) -> Result<Option<BMCertificate>> {
    let ric_check = check_ric_inequality(hyp, tol)?;
    let sup_check = check_supersolution(hyp, tol)?;
    let mut failing = Vec::new();
    if !ric_check.holds {
        failing.push(format!(
            "curvature inequality (min eigenvalue {:.6e} at {:?})",
            ric_check.min_residual, ric_check.worst_point
        ));
    }
    if !sup_check.holds {
        failing.push(format!(
            "supersolution inequality (min residual {:.6e} at {:?})",
            sup_check.min_residual, sup_check.worst_point
        ));
    }
    if !failing.is_empty() {
        return Err(CoreError::InvalidHypothesis(failing.join("; ")));
    }

    let intervals = feasible_k_interval(hyp.n, hyp.alpha, hyp.beta, hyp.gamma);
    let Some(interval) = intervals.first().copied() else {
        return Ok(None);
    };
    let samples = tensor_bound_samples(hyp)?;
    let floor = lambda_floor(&samples, tol);
    let objective = |k: f64| -> f64 {
        match lambda_from_samples(&samples, hyp.n, k, floor) {
            Some(lambda) => diameter_bound(hyp.n, hyp.alpha, hyp.beta, hyp.gamma, k, lambda)
                .unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    };

    let shift = ENDPOINT_SHIFT_REL * interval.width();
    let lo = interval.lo + shift;
    let hi = interval.hi - shift;
    if !(hi > lo) {
        return Ok(None);
    }
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    let step = (hi - lo) / (COARSE_SAMPLES as f64 - 1.0);
    for i in 0..COARSE_SAMPLES {
        let k = lo + step * i as f64;
        let v = objective(k);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    if !best_val.is_finite() {
        return Ok(None);
    }
    let bracket_lo = (lo + step * (best_idx.saturating_sub(1)) as f64).max(lo);
    let bracket_hi = (lo + step * (best_idx + 1).min(COARSE_SAMPLES - 1) as f64).min(hi);
    let k_star = golden_min(objective, bracket_lo, bracket_hi, GOLDEN_TOL);
    // on a flat objective prefer the coarse sample (smallest admissible k)
    let (k_star, _) = [(lo + step * best_idx as f64, best_val), (k_star, objective(k_star))]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();

    let Some(lambda) = lambda_from_samples(&samples, hyp.n, k_star, floor) else {
        return Ok(None);
    };
    let (a, b) = ab_constants(hyp.n, hyp.alpha, hyp.beta, hyp.gamma, k_star, lambda)?;
    let bound = diameter_bound(hyp.n, hyp.alpha, hyp.beta, hyp.gamma, k_star, lambda)?;
    Ok(Some(BMCertificate {
        k: k_star,
        lambda,
        a,
        b,
        diameter_bound: bound,
        feasible_interval: interval,
        ric_residual_min: ric_check.min_residual,
        supersolution_residual_min: sup_check.min_residual,
        at_boundary: (k_star - lo).abs() <= 3.0 * shift.max(GOLDEN_TOL)
            || (hi - k_star).abs() <= 3.0 * shift.max(GOLDEN_TOL),
    }))
}

/// First-eigenvalue feasibility: with Ric >= -(n-1) and a positive
/// supersolution of -lap u >= mu u, a contradiction (closure of a
/// noncompact manifold) is reachable iff some k in (0, 4/(n-1)) satisfies
/// k mu > n - 1, i.e. iff mu > (n-1)^2/4.
#[derive(Debug, Clone)]
pub struct ChengFeasibility {
    pub contradiction_reachable: bool,
    /// admissible exponent witnessing the contradiction (midpoint of the
    /// admissible window)
    pub witness_k: Option<f64>,
    /// the closed-form threshold (n-1)^2/4
    pub threshold: f64,
}

pub fn cheng_feasibility(n: u32, mu: f64) -> ChengFeasibility {
    let nf = n as f64;
    let threshold = (nf - 1.0) * (nf - 1.0) / 4.0;
    if mu > threshold {
        let k_hi = 4.0 / (nf - 1.0);
        let k_lo = (nf - 1.0) / mu;
        ChengFeasibility {
            contradiction_reachable: true,
            witness_k: Some(k_hi - 0.5 * (k_hi - k_lo)),
            threshold,
        }
    } else {
        ChengFeasibility {
            contradiction_reachable: false,
            witness_k: None,
            threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::sym3::SYM6_IDENTITY;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn torus_hypothesis(
        alpha: f64,
        beta: f64,
        gamma: f64,
        u: impl FnMut(&[f64; 3]) -> f64,
        v: f64,
        q_scale: f64,
    ) -> BMHypothesis {
        torus_hypothesis_n(8, alpha, beta, gamma, u, v, q_scale)
    }

    fn torus_hypothesis_n(
        n: usize,
        alpha: f64,
        beta: f64,
        gamma: f64,
        u: impl FnMut(&[f64; 3]) -> f64,
        v: f64,
        q_scale: f64,
    ) -> BMHypothesis {
        let geom = SliceGeometry::flat_torus([2.0 * PI; 3], n).unwrap();
        let chart = geom.chart().clone();
        let q = SymTensorField::constant(
            &chart,
            core::array::from_fn(|c| q_scale * SYM6_IDENTITY[c]),
        )
        .unwrap();
        let ric = SymTensorField::constant(&chart, [0.0; 6]).unwrap();
        BMHypothesis::new(
            3,
            alpha,
            beta,
            gamma,
            geom,
            ScalarField::from_fn(&chart, u).unwrap(),
            ScalarField::constant(&chart, v).unwrap(),
            q,
            ric,
        )
        .unwrap()
    }

    /// Unit round sphere patch with exact Ric = 2g, u = 1, Q = q_scale * g.
    fn sphere_hypothesis(alpha: f64, beta: f64, gamma: f64, v: f64, q_scale: f64) -> BMHypothesis {
        let geom = SliceGeometry::round_sphere_patch(1.0, 0.6, 7).unwrap();
        let chart = geom.chart().clone();
        let ric = geom
            .metric()
            .map(|g| core::array::from_fn(|c| 2.0 * g[c]))
            .unwrap();
        let q = geom
            .metric()
            .map(|g| core::array::from_fn(|c| q_scale * g[c]))
            .unwrap();
        BMHypothesis::new(
            3,
            alpha,
            beta,
            gamma,
            geom,
            ScalarField::constant(&chart, 1.0).unwrap(),
            ScalarField::constant(&chart, v).unwrap(),
            q,
            ric,
        )
        .unwrap()
    }

    #[test]
    fn ric_inequality_equality_case() {
        // u = 1, Q = Ric: residual identically zero
        let geom = SliceGeometry::flat_torus([2.0 * PI; 3], 8).unwrap();
        let chart = geom.chart().clone();
        let zero = SymTensorField::constant(&chart, [0.0; 6]).unwrap();
        let hyp = BMHypothesis::new(
            3,
            1.0,
            0.0,
            0.0,
            geom,
            ScalarField::constant(&chart, 1.0).unwrap(),
            ScalarField::constant(&chart, 0.0).unwrap(),
            zero.clone(),
            zero,
        )
        .unwrap();
        let r = check_ric_inequality(&hyp, None).unwrap();
        assert!(r.holds);
        assert!(r.min_residual.abs() <= 1e-12);
    }

    #[test]
    fn ric_inequality_constructed_failure() {
        // flat torus, Q = identity > Ric = 0: fails with min eigenvalue -1
        let hyp = torus_hypothesis(1.0, 0.0, 0.0, |_| 1.0, 0.0, 1.0);
        let r = check_ric_inequality(&hyp, None).unwrap();
        assert!(!r.holds);
        assert!((r.min_residual + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ric_inequality_round_sphere_equality() {
        let geom = SliceGeometry::round_sphere_patch(1.0, 0.6, 7).unwrap();
        let chart = geom.chart().clone();
        let two_g = geom
            .metric()
            .map(|g| core::array::from_fn(|c| 2.0 * g[c]))
            .unwrap();
        let hyp = BMHypothesis::new(
            3,
            1.0,
            0.0,
            0.0,
            geom,
            ScalarField::constant(&chart, 1.0).unwrap(),
            ScalarField::constant(&chart, 0.0).unwrap(),
            two_g.clone(),
            two_g,
        )
        .unwrap();
        let r = check_ric_inequality(&hyp, None).unwrap();
        assert!(r.holds);
        assert!(r.min_residual.abs() <= 1e-10);
    }

    #[test]
    fn supersolution_cases() {
        // u = 1, V = 0: residual 0
        let hyp = torus_hypothesis(0.0, 0.0, 0.0, |_| 1.0, 0.0, 0.0);
        let r = check_supersolution(&hyp, None).unwrap();
        assert!(r.holds);
        assert!(r.min_residual.abs() <= 1e-12);

        // u = 2 + sin x1, V = 0, gamma = 0: residual = sin x1, min -1
        let hyp = torus_hypothesis_n(32, 0.0, 0.0, 0.0, |x| 2.0 + x[0].sin(), 0.0, 0.0);
        let r = check_supersolution(&hyp, None).unwrap();
        assert!(!r.holds);
        assert!((r.min_residual + 1.0).abs() < 2e-2, "{}", r.min_residual);

        // u = 1, V = -1: residual 1
        let hyp = torus_hypothesis(0.0, 0.0, 0.0, |_| 1.0, -1.0, 0.0);
        let r = check_supersolution(&hyp, None).unwrap();
        assert!(r.holds);
        assert!((r.min_residual - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn feasible_interval_foliation_parameters() {
        // n=3, alpha=1, beta=gamma=0: (1 - sqrt 3, 1 + sqrt 3), sign condition void
        let iv = feasible_k_interval(3, 1.0, 0.0, 0.0);
        assert_eq!(iv.len(), 1);
        let iv = iv[0];
        assert!((iv.lo - (1.0 - 3f64.sqrt())).abs() < 1e-14);
        assert!((iv.hi - (1.0 + 3f64.sqrt())).abs() < 1e-14);
        assert!(!iv.lo_closed && !iv.hi_closed);
        // endpoints are roots of the quadratic condition
        assert!(hp2_value(3, 1.0, 0.0, 0.0, iv.lo).abs() < 1e-12);
        assert!(hp2_value(3, 1.0, 0.0, 0.0, iv.hi).abs() < 1e-12);
    }

    #[test]
    fn feasible_interval_zero_parameters() {
        // n=3, alpha=beta=gamma=0: quadratic gives (0, 2), sign gives k >= 0
        let iv = feasible_k_interval(3, 0.0, 0.0, 0.0);
        assert_eq!(iv.len(), 1);
        let iv = iv[0];
        assert_eq!(iv.lo, 0.0);
        assert!((iv.hi - 2.0).abs() < 1e-14);
        // k = 0 makes the quadratic vanish: boundary stays open
        assert!(!iv.lo_closed);
        assert!(!iv.contains(0.0));
        assert!(iv.contains(1.0));
    }

    #[test]
    fn feasible_interval_membership_matches_raw_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..2000 {
            let n = rng.gen_range(3..=8u32);
            let alpha = rng.gen_range(-2.0..2.0);
            let beta = rng.gen_range(-2.0..2.0);
            let gamma = rng.gen_range(-2.0..2.0);
            let intervals = feasible_k_interval(n, alpha, beta, gamma);
            let satisfies = |k: f64| {
                k * (gamma + 1.0 - alpha) >= 0.0 && hp2_value(n, alpha, beta, gamma, k) > 0.0
            };
            for probe in [-3.0, -1.0, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0, 4.0] {
                let inside = intervals.iter().any(|iv| iv.contains(probe));
                assert_eq!(
                    inside,
                    satisfies(probe),
                    "n={n} alpha={alpha} beta={beta} gamma={gamma} k={probe}"
                );
            }
        }
    }

    #[test]
    fn feasible_interval_clamped_closed_at_zero() {
        // alpha + beta > 0 with the sign condition k >= 0: the quadratic
        // interval reaches below zero and gets clamped to a closed endpoint
        let iv = feasible_k_interval(3, 0.5, 0.5, 0.0);
        assert_eq!(iv.len(), 1);
        let iv = iv[0];
        assert_eq!(iv.lo, 0.0);
        assert!(iv.lo_closed);
        assert!(iv.contains(0.0)); // hp2(0) = alpha + beta = 1 > 0
        assert!((iv.hi - (1.0 + 3f64.sqrt())).abs() < 1e-14);

        // mirrored sign condition k <= 0
        let iv = feasible_k_interval(3, 2.0, 0.5, 0.0)[0]; // gamma+1-alpha < 0
        assert_eq!(iv.hi, 0.0);
        assert!(iv.hi_closed);
        assert!(iv.lo < 0.0);
    }

    #[test]
    fn lambda_from_f_cases() {
        // Q = 2g, V = 0: lambda = 1 for any k
        let hyp = torus_hypothesis(0.0, 0.0, 0.0, |_| 1.0, 0.0, 2.0);
        assert!((lambda_from_f(&hyp, 0.7).unwrap().unwrap() - 1.0).abs() < 1e-14);

        // Q = -2g, V = 1, k = 8: lambda = 3
        let hyp = torus_hypothesis(0.0, 0.0, 0.0, |_| 1.0, 1.0, -2.0);
        assert!((lambda_from_f(&hyp, 8.0).unwrap().unwrap() - 3.0).abs() < 1e-14);

        // Q = 0, V = 0: infeasible
        let hyp = torus_hypothesis(0.0, 0.0, 0.0, |_| 1.0, 0.0, 0.0);
        assert!(lambda_from_f(&hyp, 1.0).unwrap().is_none());
    }

    #[test]
    fn ab_constants_match_quoted_forms() {
        // n=3, alpha=1, beta=gamma=0, k=1: A = 8/3
        let (a, _) = ab_constants(3, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!((a - 8.0 / 3.0).abs() < 1e-14);

        // alpha=beta=gamma=k=0 is the classical case A = n-1 exactly
        for n in 3..=8u32 {
            let (a, b) = ab_constants(n, 0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
            assert_eq!(a, n as f64 - 1.0);
            assert_eq!(b, n as f64 - 1.0);
        }

        // general k: A = 2(3 + 2k - k^2) / (2 + 2k - k^2) across the window
        let window = feasible_k_interval(3, 1.0, 0.0, 0.0)[0];
        for i in 0..2000 {
            let k = window.lo + (window.hi - window.lo) * (i as f64 + 0.5) / 2000.0;
            let (a, _) = ab_constants(3, 1.0, 0.0, 0.0, k, 1.0).unwrap();
            let want = 2.0 * (3.0 + 2.0 * k - k * k) / (2.0 + 2.0 * k - k * k);
            assert!((a - want).abs() <= 1e-12 * want.abs(), "k={k}: {a} vs {want}");
        }
    }

    #[test]
    fn ab_constant_lower_bound() {
        // A >= n-1 with equality iff 2 alpha = k (n-3)
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2000 {
            let n = rng.gen_range(3..=8u32);
            let alpha = rng.gen_range(-2.0..2.0);
            let beta = rng.gen_range(-2.0..2.0);
            let gamma = rng.gen_range(-2.0..2.0);
            if let Some(iv) = feasible_k_interval(n, alpha, beta, gamma).first() {
                let k = iv.lo + 0.5 * iv.width();
                if let Ok((a, _)) = ab_constants(n, alpha, beta, gamma, k, 1.0) {
                    assert!(a >= n as f64 - 1.0 - 1e-12);
                    if (2.0 * alpha - k * (n as f64 - 3.0)).abs() < 1e-12 {
                        assert!((a - (n as f64 - 1.0)).abs() < 1e-10);
                    }
                }
            }
        }
        // constructed equality: n = 5, k = alpha
        let (a, _) = ab_constants(5, 1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        assert!((a - 4.0).abs() < 1e-14);
    }

    #[test]
    fn diameter_bound_closed_form_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut tested = 0;
        while tested < 10_000 {
            let n = rng.gen_range(3..=8u32);
            let alpha = rng.gen_range(-2.0..2.0);
            let beta = rng.gen_range(-2.0..2.0);
            let gamma = rng.gen_range(-2.0..2.0);
            let Some(iv) = feasible_k_interval(n, alpha, beta, gamma).first().copied() else {
                continue;
            };
            let k = iv.lo + rng.gen_range(0.01..0.99) * iv.width();
            if hp2_value(n, alpha, beta, gamma, k) <= 0.0 {
                continue;
            }
            let lambda = rng.gen_range(0.01..10.0);
            // diameter_bound internally cross-checks both routes to 1e-12
            let bound = diameter_bound(n, alpha, beta, gamma, k, lambda).unwrap();
            assert!(bound.is_finite() && bound > 0.0);
            tested += 1;
        }
    }

    #[test]
    fn diameter_bound_examples() {
        // classical: pi exactly
        assert_eq!(diameter_bound(3, 0.0, 0.0, 0.0, 0.0, 1.0).unwrap(), PI);
        // n=3, alpha=1, beta=gamma=0, k=1, lambda=1: pi sqrt(4/3)
        let b = diameter_bound(3, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!((b - 2.0 * PI / 3f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn optimize_classical_boundary() {
        // unit sphere, Q = 2g = Ric, V = 0, alpha=beta=gamma=0: lambda is
        // k-independent, the bound is pi for every admissible k, optimum
        // reported at the left boundary with the classical value
        let hyp = sphere_hypothesis(0.0, 0.0, 0.0, 0.0, 2.0);
        let cert = optimize_k(&hyp, None).unwrap().unwrap();
        assert!((cert.diameter_bound - PI).abs() < 1e-9);
        assert!(cert.at_boundary);
        assert!(cert.k < 0.1);
        assert!((cert.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_infeasible_when_needed_k_exceeds_cap() {
        // Q = -2g, V = 1, alpha=beta=gamma=0, n=3: lambda(k) > 0 needs
        // k > 2, but the quadratic condition caps the interval at k < 2, so
        // lambda stays nonpositive on the whole admissible range
        let hyp = torus_hypothesis(0.0, 0.0, 0.0, |_| 1.0, 1.0, -2.0);
        let iv = feasible_k_interval(3, 0.0, 0.0, 0.0)[0];
        assert!((iv.hi - 2.0).abs() < 1e-14);
        for i in 0..512 {
            let k = iv.lo + iv.width() * (i as f64 + 0.5) / 512.0;
            assert!(lambda_from_f(&hyp, k).unwrap().is_none(), "k = {k}");
        }
    }

    #[test]
    fn optimize_infeasible_when_lambda_never_positive() {
        // hypothesis checks pass (Ric = 2g >= Q = -2g) but the tensor bound
        // cannot be met: lambda(k) = -1 for every k
        let hyp = sphere_hypothesis(0.0, 0.0, 0.0, 0.0, -2.0);
        assert!(optimize_k(&hyp, None).unwrap().is_none());
    }

    #[test]
    fn optimize_rejects_failed_hypothesis() {
        let hyp = torus_hypothesis(1.0, 0.0, 0.0, |_| 1.0, 0.0, 1.0); // Q > Ric = 0
        match optimize_k(&hyp, None) {
            Err(CoreError::InvalidHypothesis(msg)) => {
                assert!(msg.contains("curvature inequality"));
            }
            other => panic!("expected invalid hypothesis, got {other:?}"),
        }
    }

    #[test]
    fn optimize_dominates_random_k() {
        // V < 0 makes lambda(k) = (2 - 0.2 k)/2 k-dependent while keeping
        // -lap u >= V u valid for u = 1: nontrivial interior optimum
        let hyp = sphere_hypothesis(1.0, 0.0, 0.0, -0.2, 2.0);
        let cert = optimize_k(&hyp, None).unwrap().unwrap();
        let iv = cert.feasible_interval;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let k = iv.lo + rng.gen_range(1e-6..1.0 - 1e-6) * iv.width();
            if let Some(lambda) = lambda_from_f(&hyp, k).unwrap() {
                let b = diameter_bound(3, 1.0, 0.0, 0.0, k, lambda).unwrap();
                assert!(
                    cert.diameter_bound <= b + 1e-9,
                    "optimized {} beaten at k={k}: {b}",
                    cert.diameter_bound
                );
            }
        }
    }

    #[test]
    fn cheng_feasibility_examples() {
        let r = cheng_feasibility(3, 1.01);
        assert!(r.contradiction_reachable);
        let k = r.witness_k.unwrap();
        assert!(k > 0.0 && k < 2.0 && k * 1.01 > 2.0);

        assert!(!cheng_feasibility(3, 1.0).contradiction_reachable);
        assert!(cheng_feasibility(4, 2.3).contradiction_reachable);
        assert!(!cheng_feasibility(4, 2.2).contradiction_reachable);
    }

    #[test]
    fn cheng_matches_brute_force_scan() {
        // small-scale version of the acceptance scan
        for n in 3..=8u32 {
            let nf = n as f64;
            let threshold = (nf - 1.0) * (nf - 1.0) / 4.0;
            for factor in [0.5, 0.9, 0.999, 1.001, 1.1, 2.0, 10.0] {
                let mu = threshold * factor;
                let grid = 100_000;
                let k_hi = 4.0 / (nf - 1.0);
                let mut found = false;
                for i in 1..grid {
                    let k = k_hi * i as f64 / grid as f64;
                    if k * (1.0 - (nf - 1.0) * k / 4.0) > 0.0 && k * mu - (nf - 1.0) > 0.0 {
                        found = true;
                        break;
                    }
                }
                assert_eq!(
                    found,
                    cheng_feasibility(n, mu).contradiction_reachable,
                    "n={n} mu={mu}"
                );
            }
        }
    }
}
