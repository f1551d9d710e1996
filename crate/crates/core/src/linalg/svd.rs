//! One-sided (Hestenes) Jacobi SVD for small dense complex matrices.
//!
//! Only what numerical rank and null-space extraction need: singular values
//! sorted descending and the matching right singular vectors.

use num_complex::Complex64;

use super::matrix::{modulus, Matrix};

#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending singular values, `min(rows, cols)` of them padded with
    /// zeros up to `cols` so that every column of `v` has a value.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, ordered like `singular_values`.
    pub v: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    let mut u = a.clone();
    let mut v = Matrix::identity(n);
    let tol = f64::EPSILON;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                let g = modulus(gamma);
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate in the plane (p, q) so that columns p, q become orthogonal
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for i in 0..mat.rows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)];
                        mat[(i, p)] = xp * c - xq * phase.conj() * s;
                        mat[(i, q)] = xp * phase * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|j| {
            let norm = (0..m).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            (norm, v.column(j))
        })
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut singular_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    // a tall-or-square matrix has n singular values; a wide one only m
    for sv in singular_values.iter_mut().skip(m.min(n)) {
        *sv = 0.0;
    }
    let cols: Vec<Vec<Complex64>> = pairs.into_iter().map(|p| p.1).collect();
    Svd {
        singular_values,
        v: Matrix::from_columns(&cols),
    }
}

pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let mut s = svd(a).singular_values;
    s.truncate(a.rows().min(a.cols()));
    s
}

/// Number of singular values strictly above the absolute threshold `rank_tol`.
pub fn numerical_rank(a: &Matrix, rank_tol: f64) -> usize {
    singular_values(a)
        .into_iter()
        .filter(|&s| s > rank_tol)
        .count()
}

/// Orthonormal basis (columns) of the numerical null space at `rank_tol`.
pub fn null_space(a: &Matrix, rank_tol: f64) -> Vec<Vec<Complex64>> {
    let d = svd(a);
    (0..a.cols())
        .filter(|&j| d.singular_values[j] <= rank_tol)
        .map(|j| d.v.column(j))
        .collect()
}
