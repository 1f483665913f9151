//! Symmetric 3x3 algebra: packed storage, Cholesky frames, and a
//! deterministic Jacobi eigensolver.
//!
//! All tensor fields store the six independent components in the order
//! (11, 12, 13, 22, 23, 33).

use nalgebra::{Matrix3, Vector3};

use crate::error::{CoreError, Result};

/// Packed symmetric 3x3 components, ordered (11, 12, 13, 22, 23, 33).
pub type Sym6 = [f64; 6];

pub const SYM6_ZERO: Sym6 = [0.0; 6];
pub const SYM6_IDENTITY: Sym6 = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];

/// Row/column index pairs matching the packed component order.
pub const SYM6_INDEX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Contraction weight per packed component (off-diagonal entries count twice).
pub const SYM6_WEIGHT: [f64; 6] = [1.0, 2.0, 2.0, 1.0, 2.0, 1.0];

/// Packed slot of the (i, j) component.
#[inline]
pub const fn sidx(i: usize, j: usize) -> usize {
    const TABLE: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    TABLE[i][j]
}

pub fn to_matrix(c: &Sym6) -> Matrix3<f64> {
    Matrix3::new(c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5])
}

pub fn from_matrix(m: &Matrix3<f64>) -> Sym6 {
    [
        m[(0, 0)],
        0.5 * (m[(0, 1)] + m[(1, 0)]),
        0.5 * (m[(0, 2)] + m[(2, 0)]),
        m[(1, 1)],
        0.5 * (m[(1, 2)] + m[(2, 1)]),
        m[(2, 2)],
    ]
}

/// Quadratic form c(v, v) of a packed symmetric tensor.
pub fn quad_form(c: &Sym6, v: &[f64; 3]) -> f64 {
    c[0] * v[0] * v[0]
        + c[3] * v[1] * v[1]
        + c[5] * v[2] * v[2]
        + 2.0 * (c[1] * v[0] * v[1] + c[2] * v[0] * v[2] + c[4] * v[1] * v[2])
}

/// Full contraction a^{ij} b_{ij} of two packed symmetric tensors.
pub fn contract(a: &Sym6, b: &Sym6) -> f64 {
    (0..6).map(|c| SYM6_WEIGHT[c] * a[c] * b[c]).sum()
}

/// Lower Cholesky factor of a positive-definite packed tensor.
pub fn cholesky(g: &Sym6) -> Option<Matrix3<f64>> {
    nalgebra::Cholesky::new(to_matrix(g)).map(|c| c.l())
}

/// Inverse of a positive-definite packed tensor, again packed.
pub fn inverse_spd(g: &Sym6) -> Option<Sym6> {
    nalgebra::Cholesky::new(to_matrix(g)).map(|c| from_matrix(&c.inverse()))
}

/// Eigen-decomposition of a symmetric 3x3 matrix.
///
/// Eigenvalues are ascending; `vectors` holds the matching orthonormal
/// eigenvectors as columns, each flipped so that its first component larger
/// than 1e-12 in absolute value is positive.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    pub values: [f64; 3],
    pub vectors: Matrix3<f64>,
}

/// Cyclic Jacobi iteration with off-diagonal tolerance 1e-13 relative to the
/// Frobenius norm. Deterministic: fixed sweep order, ascending sort, sign fix.
pub fn eig_sym3(s: &Matrix3<f64>) -> Result<SymEigen> {
    if s.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite {
            context: "eig_sym3 input",
        });
    }
    let mut a = 0.5 * (s + s.transpose());
    let mut v: Matrix3<f64> = Matrix3::identity();
    let norm = a.norm();
    if norm > 0.0 {
        let tol = 1e-13 * norm;
        for _ in 0..64 {
            let off = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2)).sqrt();
            if off <= tol {
                break;
            }
            for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
                let apq = a[(p, q)];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                let r = 3 - p - q;
                let (arp, arq) = (a[(r, p)], a[(r, q)]);
                a[(r, p)] = c * arp - sn * arq;
                a[(p, r)] = a[(r, p)];
                a[(r, q)] = sn * arp + c * arq;
                a[(q, r)] = a[(r, q)];
                for row in 0..3usize {
                    let (vrp, vrq) = (v[(row, p)], v[(row, q)]);
                    v[(row, p)] = c * vrp - sn * vrq;
                    v[(row, q)] = sn * vrp + c * vrq;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let mut values = [0.0; 3];
    let mut vectors = Matrix3::zeros();
    for (slot, &src) in order.iter().enumerate() {
        values[slot] = a[(src, src)];
        let mut col = Vector3::new(v[(0, src)], v[(1, src)], v[(2, src)]);
        let lead = (0..3usize).find(|&r| col[r].abs() > 1e-12).unwrap_or(0);
        if col[lead] < 0.0 {
            col = -col;
        }
        vectors.set_column(slot, &col);
    }
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues and eigenvectors of `s` relative to a positive-definite
/// metric `g`: solves s v = lambda g v with resulting vectors g-orthonormal.
///
/// These eigenvalues are the components of `s` in any g-orthonormal frame
/// diagonalizing it, which is the frame convention used for principal
/// pressures and for the lower bound of the tensor condition.
pub fn eig_sym3_generalized(s: &Sym6, g: &Sym6) -> Option<SymEigen> {
    let l = cholesky(g)?;
    let sm = to_matrix(s);
    let x = l.solve_lower_triangular(&sm)?;
    let hat = l.solve_lower_triangular(&x.transpose())?;
    let eig = eig_sym3(&(0.5 * (hat + hat.transpose()))).ok()?;
    let lt = l.transpose();
    let vecs = lt.solve_upper_triangular(&eig.vectors)?;
    Some(SymEigen {
        values: eig.values,
        vectors: vecs,
    })
}

/// Smallest eigenvalue of `s` in a g-orthonormal frame.
pub fn min_eig_generalized(s: &Sym6, g: &Sym6) -> Option<f64> {
    eig_sym3_generalized(s, g).map(|e| e.values[0])
}

/// Squared g-norm |s|^2 = s_{ij} s^{ij} of a packed tensor.
pub fn norm_sq_generalized(s: &Sym6, g_inv: &Sym6) -> f64 {
    // s^{ij} = g^{ik} g^{jl} s_{kl}; contract with s_{ij}.
    let gi = to_matrix(g_inv);
    let sm = to_matrix(s);
    let raised = gi * sm * gi;
    contract(&from_matrix(&raised), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Roots of det(S - x I) = 0 by bisection on the characteristic
    /// polynomial, bracketed between the critical points of the cubic.
    /// Independent of the Jacobi path.
    fn charpoly_roots(s: &Matrix3<f64>) -> [f64; 3] {
        let p = |x: f64| (s - Matrix3::identity() * x).determinant();
        // Gershgorin bound.
        let bound = (0..3)
            .map(|i| (0..3).map(|j| s[(i, j)].abs()).sum::<f64>())
            .fold(0.0_f64, f64::max)
            + 1.0;
        // p(x) = -x^3 + c2 x^2 + ...; critical points from p'(x) = 0.
        let tr = s.trace();
        let c1 = 0.5 * (tr * tr - (s * s).trace()); // sum of 2x2 principal minors
        // p'(x) = -3x^2 + 2 tr x - c1
        let disc = tr * tr - 3.0 * c1;
        let mut brackets = vec![-bound];
        if disc > 0.0 {
            let r = disc.sqrt();
            brackets.push((tr - r) / 3.0);
            brackets.push((tr + r) / 3.0);
        }
        brackets.push(bound);
        let mut roots = Vec::new();
        for w in brackets.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (p(lo), p(hi));
            if flo == 0.0 {
                roots.push(lo);
                continue;
            }
            if flo * fhi > 0.0 {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(mid) * p(lo) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        while roots.len() < 3 {
            // repeated root: fall back on trace bookkeeping
            let sum: f64 = roots.iter().sum();
            roots.push((tr - sum) / (3 - roots.len()) as f64);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        [roots[0], roots[1], roots[2]]
    }

    fn random_sym(rng: &mut ChaCha8Rng, scale: f64) -> Matrix3<f64> {
        let mut r = || rng.gen_range(-scale..scale);
        let (a, b, c, d, e, f) = (r(), r(), r(), r(), r(), r());
        Matrix3::new(a, b, c, b, d, e, c, e, f)
    }

    #[test]
    fn identity_matrix() {
        let e = eig_sym3(&Matrix3::identity()).unwrap();
        assert_eq!(e.values, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_matrix_sorted() {
        let e = eig_sym3(&Matrix3::from_diagonal(&Vector3::new(3.0, 1.0, 2.0))).unwrap();
        assert_eq!(e.values, [1.0, 2.0, 3.0]);
        // eigenbasis is a permutation with positive leading entries
        for k in 0..3 {
            let col = e.vectors.column(k);
            assert!((col.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let m = Matrix3::new(f64::NAN, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            eig_sym3(&m),
            Err(CoreError::NonFinite { .. })
        ));
    }

    #[test]
    fn random_matches_charpoly_bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let s = random_sym(&mut rng, 5.0);
            let e = eig_sym3(&s).unwrap();
            let oracle = charpoly_roots(&s);
            for k in 0..3 {
                let scale = 1.0 + oracle[k].abs();
                assert!(
                    (e.values[k] - oracle[k]).abs() < 1e-8 * scale,
                    "eig {} vs oracle {}",
                    e.values[k],
                    oracle[k]
                );
            }
            // residual: S v = lambda v
            for k in 0..3 {
                let v = e.vectors.column(k);
                let r = s * v - e.values[k] * v;
                assert!(r.norm() < 1e-10 * (1.0 + s.norm()));
            }
        }
    }

    #[test]
    fn trace_and_determinant_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let s = random_sym(&mut rng, 3.0);
            let e = eig_sym3(&s).unwrap();
            let sum: f64 = e.values.iter().sum();
            let prod: f64 = e.values.iter().product();
            assert!((sum - s.trace()).abs() <= 1e-10 * (1.0 + s.trace().abs()));
            assert!((prod - s.determinant()).abs() <= 1e-10 * (1.0 + s.determinant().abs()));
        }
    }

    #[test]
    fn tracefree_norm_dominates_eigenvalues() {
        // |M|^2 >= (3/2) mu_i^2 for every eigenvalue of a trace-free M.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2_000 {
            let mut s = random_sym(&mut rng, 2.0);
            let shift = s.trace() / 3.0;
            for i in 0..3 {
                s[(i, i)] -= shift;
            }
            let e = eig_sym3(&s).unwrap();
            let norm_sq: f64 = e.values.iter().map(|l| l * l).sum();
            for mu in e.values {
                assert!(norm_sq >= 1.5 * mu * mu - 1e-12);
            }
        }
    }

    #[test]
    fn generalized_eig_conformal_metric() {
        // s = 2 g has g-orthonormal eigenvalues (2, 2, 2) for any SPD g.
        let g: Sym6 = [4.0, 0.4, -0.2, 3.0, 0.1, 5.0];
        let s: Sym6 = core::array::from_fn(|c| 2.0 * g[c]);
        let e = eig_sym3_generalized(&s, &g).unwrap();
        for v in e.values {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_sq_matches_eigenvalue_sum() {
        let g: Sym6 = [2.0, 0.3, 0.0, 1.5, -0.2, 1.0];
        let s: Sym6 = [0.5, 0.1, 0.7, -0.4, 0.2, 0.9];
        let gi = inverse_spd(&g).unwrap();
        let direct = norm_sq_generalized(&s, &gi);
        let eig = eig_sym3_generalized(&s, &g).unwrap();
        let from_eig: f64 = eig.values.iter().map(|l| l * l).sum();
        assert!((direct - from_eig).abs() < 1e-10 * (1.0 + direct.abs()));
    }
}
