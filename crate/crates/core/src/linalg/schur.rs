//! Complex Schur decomposition `A = Q T Q*`.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift
//! QR sweeps (Wilkinson shift, Givens rotations) with deflation on small
//! subdiagonal entries. Exceptional shifts break the rare two-cycles.

use num_complex::Complex64;

use super::matrix::{modulus, Matrix};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct Schur {
    /// Unitary factor.
    pub q: Matrix,
    /// Upper triangular factor; its diagonal holds the eigenvalues.
    pub t: Matrix,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.t.diagonal()
    }

    /// Unit-norm eigenvectors (columns), one per diagonal entry of `T`.
    ///
    /// Solves the upper triangular systems `(T - t_kk) y = 0` by back
    /// substitution and maps back with `Q`. Near-zero denominators are
    /// clamped to `eps * ‖T‖`, so repeated eigenvalues yield (nearly)
    /// parallel vectors rather than a division by zero.
    pub fn eigenvectors(&self) -> Matrix {
        let n = self.t.rows();
        let t = &self.t;
        let smin = (f64::EPSILON * t.norm_max()).max(f64::MIN_POSITIVE);
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let lambda = t[(k, k)];
            let mut y = vec![ZERO; n];
            y[k] = Complex64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = t[(i, k)];
                for j in i + 1..k {
                    s += t[(i, j)] * y[j];
                }
                let mut d = t[(i, i)] - lambda;
                if modulus(d) < smin {
                    d = Complex64::new(smin, 0.0);
                }
                y[i] = -s / d;
                // rescale to avoid overflow in long triangular solves
                let big = y.iter().map(|&z| modulus(z)).fold(0.0, f64::max);
                if big > 1e100 {
                    for z in y.iter_mut() {
                        *z /= big;
                    }
                }
            }
            let mut v = self.q.mat_vec(&y).expect("square factors");
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in v.iter_mut() {
                *z /= norm;
            }
            cols.push(v);
        }
        Matrix::from_columns(&cols)
    }
}

/// Reduces `a` to upper Hessenberg form `H = Q* A Q`, returning `(Q, H)`.
pub fn hessenberg(a: &Matrix) -> Result<(Matrix, Matrix)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Hessenberg reduction of non-square {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = (x0.norm_sqr() + tail).sqrt();
        let phase = if modulus(x0) == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / modulus(x0)
        };
        let beta = -phase * alpha;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= beta;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v*) H
        for j in 0..n {
            let mut s = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + idx, j)];
            }
            s *= 2.0;
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] -= vi * s;
            }
        }
        // H <- H (I - 2 v v*), Q <- Q (I - 2 v v*)
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for (idx, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + idx)] * vi;
                }
                s *= 2.0;
                for (idx, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + idx)] -= s * vi.conj();
                }
            }
        }
        h[(k + 1, k)] = beta;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    Ok((q, h))
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (ma, mb) = (modulus(a), modulus(b));
    if mb == 0.0 {
        (1.0, ZERO)
    } else if ma == 0.0 {
        (0.0, b.conj() / mb)
    } else {
        let norm = ma.hypot(mb);
        let alpha = a / ma;
        (ma / norm, alpha * b.conj() / norm)
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if modulus(l1 - d) <= modulus(l2 - d) {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition with the default sweep budget `100 n`.
pub fn schur(a: &Matrix) -> Result<Schur> {
    schur_with_budget(a, 100 * a.rows().max(1))
}

pub fn schur_with_budget(a: &Matrix, max_sweeps: usize) -> Result<Schur> {
    let n = a.rows();
    let (mut q, mut h) = hessenberg(a)?;
    let anorm = h.norm_max();
    if n <= 1 || anorm == 0.0 {
        return Ok(Schur { q, t: h });
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut stagnant = 0usize;
    while hi > 0 {
        // locate the top of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = modulus(h[(lo, lo - 1)]);
            let mut scale = modulus(h[(lo, lo)]) + modulus(h[(lo - 1, lo - 1)]);
            if scale == 0.0 {
                scale = anorm;
            }
            if sub <= eps * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            stagnant = 0;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        stagnant += 1;

        let shift = if stagnant % 11 == 10 {
            h[(hi, hi)] + Complex64::new(0.75 * modulus(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rotations.push((c, s));
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + idx;
            let last = (k + 2).min(hi);
            for i in 0..=last {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * c + y * s.conj();
                q[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    // clear rounding residue below the diagonal
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { q, t: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_matrix, seeded_rng};

    fn check_decomposition(a: &Matrix, s: &Schur) {
        let n = a.rows();
        let qh = s.q.conj_transpose();
        let unit = qh.mat_mul(&s.q).unwrap().sub(&Matrix::identity(n)).unwrap();
        assert!(
            unit.norm_max() <= 1e-10,
            "Q not unitary: {}",
            unit.norm_max()
        );
        let back = s.q.mat_mul(&s.t).unwrap().mat_mul(&qh).unwrap();
        let rel = back.sub(a).unwrap().norm_l1() / a.norm_l1().max(f64::MIN_POSITIVE);
        assert!(rel <= n as f64 * 1e-9, "round trip {rel}");
        for i in 1..n {
            for j in 0..i {
                assert_eq!(s.t[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn diagonal_matrix_is_its_own_schur_form() {
        let d = Matrix::from_diagonal(&[
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(0.5, 0.0),
        ]);
        let s = schur(&d).unwrap();
        assert_eq!(s.q, Matrix::identity(3));
        assert_eq!(s.t, d);
    }

    #[test]
    fn rotation_generator_has_eigenvalues_plus_minus_i() {
        let a = Matrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let s = schur(&a).unwrap();
        check_decomposition(&a, &s);
        let mut ev = s.eigenvalues();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!(modulus(ev[0] - Complex64::new(0.0, -1.0)) < 1e-12);
        assert!(modulus(ev[1] - Complex64::new(0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn random_round_trip() {
        let mut rng = seeded_rng(3);
        for n in 1..=16 {
            for _ in 0..3 {
                let a = random_matrix(&mut rng, n, n);
                let s = schur(&a).unwrap();
                check_decomposition(&a, &s);
            }
        }
    }

    #[test]
    fn eigenvector_residuals_are_small() {
        let mut rng = seeded_rng(5);
        for n in 2..=16 {
            let a = random_matrix(&mut rng, n, n);
            let s = schur(&a).unwrap();
            let v = s.eigenvectors();
            for (k, lambda) in s.eigenvalues().into_iter().enumerate() {
                let x = v.column(k);
                let ax = a.mat_vec(&x).unwrap();
                let r = ax
                    .iter()
                    .zip(&x)
                    .map(|(p, q)| modulus(p - lambda * q))
                    .fold(0.0, f64::max);
                assert!(r <= 1e-8 * a.norm_l1(), "n={n} residual {r}");
            }
        }
    }

    #[test]
    fn jordan_block_is_left_untouched() {
        let j = Matrix::from_real_rows(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 2.0]]);
        let s = schur(&j).unwrap();
        assert_eq!(s.t, j);
    }

    #[test]
    fn sweep_budget_is_enforced() {
        let mut rng = seeded_rng(9);
        let a = random_matrix(&mut rng, 6, 6);
        assert!(matches!(
            schur_with_budget(&a, 1),
            Err(Error::NoConvergence { .. })
        ));
    }
}
