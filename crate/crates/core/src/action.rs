//! Multilinear matrix multiplication: the action of `GL_l × GL_m × GL_n`
//! on `l × m × n` tensors,
//!
//! ```text
//! ((L, M, N) · A)_{pqr} = Σ_{i,j,k} L_{pi} M_{qj} N_{rk} a_{ijk}
//! ```
//!
//! evaluated as three successive mode products.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::Tensor3;

/// Default relative pivot threshold used to accept a group element.
pub const DEFAULT_SING_TOL: f64 = 1e-10;

/// An element `(L, M, N)` of `GL_l × GL_m × GL_n`.
///
/// Invertibility of each factor is checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GlTriple {
    l: Matrix,
    m: Matrix,
    n: Matrix,
}

impl GlTriple {
    pub fn new(l: Matrix, m: Matrix, n: Matrix) -> Result<Self> {
        Self::with_tolerance(l, m, n, DEFAULT_SING_TOL)
    }

    pub fn with_tolerance(l: Matrix, m: Matrix, n: Matrix, sing_tol: f64) -> Result<Self> {
        for (factor, mat) in [("L", &l), ("M", &m), ("N", &n)] {
            if !mat.is_square() {
                return Err(Error::DimensionMismatch(format!(
                    "factor {factor} is {}x{}, expected square",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if mat.inverse(sing_tol).is_err() {
                return Err(Error::NonInvertibleFactor { factor });
            }
        }
        Ok(Self { l, m, n })
    }

    pub fn identity(l: usize, m: usize, n: usize) -> Self {
        Self {
            l: Matrix::identity(l),
            m: Matrix::identity(m),
            n: Matrix::identity(n),
        }
    }

    /// `(αE_l, βE_m, γE_n)`.
    pub fn scalars(
        dims: (usize, usize, usize),
        alpha: Complex64,
        beta: Complex64,
        gamma: Complex64,
    ) -> Result<Self> {
        Self::new(
            Matrix::scalar(dims.0, alpha),
            Matrix::scalar(dims.1, beta),
            Matrix::scalar(dims.2, gamma),
        )
    }

    pub fn factors(&self) -> (&Matrix, &Matrix, &Matrix) {
        (&self.l, &self.m, &self.n)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.l.rows(), self.m.rows(), self.n.rows())
    }

    /// Factorwise product `(L L', M M', N N')`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "compose {:?} with {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(Self {
            l: self.l.mat_mul(&other.l)?,
            m: self.m.mat_mul(&other.m)?,
            n: self.n.mat_mul(&other.n)?,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            l: self.l.inverse(DEFAULT_SING_TOL)?,
            m: self.m.inverse(DEFAULT_SING_TOL)?,
            n: self.n.inverse(DEFAULT_SING_TOL)?,
        })
    }

    /// Largest factorwise entry deviation from `other`.
    pub fn distance_max(&self, other: &Self) -> Result<f64> {
        Ok(self
            .l
            .sub(&other.l)?
            .norm_max()
            .max(self.m.sub(&other.m)?.norm_max())
            .max(self.n.sub(&other.n)?.norm_max()))
    }
}

/// Mode-1 product: every slice `S_k` becomes `L S_k`.
pub fn mode1(a: &Tensor3, l: &Matrix) -> Result<Tensor3> {
    if l.is_exact_identity() && l.cols() == a.dims().0 {
        return Ok(a.clone());
    }
    Tensor3::from_slices(
        a.slices()
            .iter()
            .map(|s| l.mat_mul(s))
            .collect::<Result<_>>()?,
    )
}

/// Mode-2 product: every slice `S_k` becomes `S_k Mᵀ`.
pub fn mode2(a: &Tensor3, m: &Matrix) -> Result<Tensor3> {
    if m.is_exact_identity() && m.cols() == a.dims().1 {
        return Ok(a.clone());
    }
    let mt = m.transpose();
    Tensor3::from_slices(
        a.slices()
            .iter()
            .map(|s| s.mat_mul(&mt))
            .collect::<Result<_>>()?,
    )
}

/// Mode-3 product: slice `r` becomes `Σ_k N_{rk} S_k`.
pub fn mode3(a: &Tensor3, n: &Matrix) -> Result<Tensor3> {
    let (l, m, depth) = a.dims();
    if n.cols() != depth {
        return Err(Error::DimensionMismatch(format!(
            "mode-3 factor has {} columns, tensor has {depth} slices",
            n.cols()
        )));
    }
    if n.is_exact_identity() {
        return Ok(a.clone());
    }
    let mut out = Vec::with_capacity(n.rows());
    for r in 0..n.rows() {
        let mut s = Matrix::zeros(l, m);
        for k in 0..depth {
            let w = n[(r, k)];
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            s = s.add(&a.slice(k).scale(w))?;
        }
        out.push(s);
    }
    Tensor3::from_slices(out)
}

/// `(L, M, N) · A`.
pub fn act(g: &GlTriple, a: &Tensor3) -> Result<Tensor3> {
    if g.dims() != a.dims() {
        return Err(Error::DimensionMismatch(format!(
            "group element acts on {:?}, tensor is {:?}",
            g.dims(),
            a.dims()
        )));
    }
    mode3(&mode2(&mode1(a, &g.l)?, &g.m)?, &g.n)
}

/// The entrywise estimate from the continuity argument for the action.
///
/// With `M₁..M₄` the largest entry moduli of the `L`, `M`, `N` factors and of
/// the tensor (taken over both arguments) and `δ` the largest entrywise
/// deviation among the four pairs, every entry of
/// `act(g, a) - act(g', a')` is bounded by
/// `l·m·n·δ·(M₂M₃M₄ + M₁M₃M₄ + M₁M₂M₄ + M₁M₂M₃)`.
pub fn continuity_bound(g: &GlTriple, g2: &GlTriple, a: &Tensor3, a2: &Tensor3) -> Result<f64> {
    if g.dims() != g2.dims() || a.dims() != a2.dims() || g.dims() != a.dims() {
        return Err(Error::DimensionMismatch(
            "continuity bound arguments".into(),
        ));
    }
    let (l, m, n) = a.dims();
    let m1 = g.l.norm_max().max(g2.l.norm_max());
    let m2 = g.m.norm_max().max(g2.m.norm_max());
    let m3 = g.n.norm_max().max(g2.n.norm_max());
    let m4 = a.norm_max().max(a2.norm_max());
    let delta = g.distance_max(g2)?.max(a.distance_max(a2)?);
    let terms = m2 * m3 * m4 + m1 * m3 * m4 + m1 * m2 * m4 + m1 * m2 * m3;
    Ok((l * m * n) as f64 * delta * terms)
}

/// Actual sup-norm deviation `max |act(g, a) - act(g', a')|`.
pub fn continuity_deviation(g: &GlTriple, g2: &GlTriple, a: &Tensor3, a2: &Tensor3) -> Result<f64> {
    act(g, a)?.distance_max(&act(g2, a2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_vector, random_matrix, seeded_rng, SeededRng};
    use crate::tensor::outer3;

    fn random_tensor(rng: &mut SeededRng, l: usize, m: usize, n: usize) -> Tensor3 {
        Tensor3::from_slices((0..n).map(|_| random_matrix(rng, l, m)).collect()).unwrap()
    }

    fn random_gl(rng: &mut SeededRng, dims: (usize, usize, usize)) -> GlTriple {
        let mut well = |k: usize| {
            random_matrix(rng, k, k)
                .add(&Matrix::scalar(k, Complex64::new(2.0, 0.0)))
                .unwrap()
        };
        let (l, m, n) = (well(dims.0), well(dims.1), well(dims.2));
        GlTriple::new(l, m, n).unwrap()
    }

    /// Quadruple-loop evaluation of the action rule.
    fn act_naive(g: &GlTriple, a: &Tensor3) -> Tensor3 {
        let (l, m, n) = a.dims();
        let (lf, mf, nf) = g.factors();
        let mut out = Tensor3::zeros(l, m, n);
        for p in 0..l {
            for q in 0..m {
                for r in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for i in 0..l {
                        for j in 0..m {
                            for k in 0..n {
                                s += lf[(p, i)] * mf[(q, j)] * nf[(r, k)] * a.get(i, j, k);
                            }
                        }
                    }
                    out.set(p, q, r, s);
                }
            }
        }
        out
    }

    #[test]
    fn mode_products_match_quadruple_loop() {
        let mut rng = seeded_rng(1);
        for dims in [(2, 2, 2), (3, 2, 4), (1, 3, 2), (4, 4, 3)] {
            let a = random_tensor(&mut rng, dims.0, dims.1, dims.2);
            let g = random_gl(&mut rng, dims);
            let diff = act(&g, &a)
                .unwrap()
                .distance_max(&act_naive(&g, &a))
                .unwrap();
            assert!(diff < 1e-12, "{dims:?}: {diff}");
        }
    }

    #[test]
    fn identity_acts_trivially() {
        let mut rng = seeded_rng(2);
        let a = random_tensor(&mut rng, 3, 2, 4);
        assert_eq!(act(&GlTriple::identity(3, 2, 4), &a).unwrap(), a);
    }

    #[test]
    fn scalar_triple_with_unit_product_is_trivial() {
        let mut rng = seeded_rng(3);
        let a = random_tensor(&mut rng, 2, 3, 2);
        let alpha = Complex64::new(2.0, -1.0);
        let beta = Complex64::new(0.5, 0.25);
        let gamma = (alpha * beta).inv();
        let g = GlTriple::scalars((2, 3, 2), alpha, beta, gamma).unwrap();
        assert!(act(&g, &a).unwrap().distance_max(&a).unwrap() < 1e-12);
    }

    #[test]
    fn elementary_tensors_map_to_elementary_tensors() {
        let mut rng = seeded_rng(4);
        let (x, y, z) = (
            complex_vector(&mut rng, 3),
            complex_vector(&mut rng, 2),
            complex_vector(&mut rng, 3),
        );
        let g = random_gl(&mut rng, (3, 2, 3));
        let (lf, mf, nf) = g.factors();
        let lhs = act(&g, &outer3(&x, &y, &z)).unwrap();
        let rhs = outer3(
            &lf.mat_vec(&x).unwrap(),
            &mf.mat_vec(&y).unwrap(),
            &nf.mat_vec(&z).unwrap(),
        );
        assert!(lhs.distance_max(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn group_axioms() {
        let mut rng = seeded_rng(5);
        let dims = (3, 3, 2);
        let g = random_gl(&mut rng, dims);
        let h = random_gl(&mut rng, dims);
        let a = random_tensor(&mut rng, 3, 3, 2);
        let round = g.compose(&g.inverse().unwrap()).unwrap();
        assert!(round.distance_max(&GlTriple::identity(3, 3, 2)).unwrap() < 1e-8);
        assert_eq!(GlTriple::identity(3, 3, 2).compose(&g).unwrap(), g);
        let lhs = act(&g.compose(&h).unwrap(), &a).unwrap();
        let rhs = act(&g, &act(&h, &a).unwrap()).unwrap();
        assert!(lhs.distance_l1(&rhs).unwrap() <= 1e-8 * rhs.norm_l1());
    }

    #[test]
    fn singular_factor_is_rejected() {
        let sing = Matrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let err = GlTriple::new(Matrix::identity(2), sing, Matrix::identity(2)).unwrap_err();
        assert_eq!(err, Error::NonInvertibleFactor { factor: "M" });
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Tensor3::zeros(2, 2, 3);
        assert!(matches!(
            act(&GlTriple::identity(2, 2, 2), &a),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn continuity_bound_dominates_and_scales_linearly() {
        let mut rng = seeded_rng(6);
        let dims = (2, 2, 2);
        let g = random_gl(&mut rng, dims);
        let a = random_tensor(&mut rng, 2, 2, 2);
        assert_eq!(continuity_deviation(&g, &g, &a, &a).unwrap(), 0.0);
        assert_eq!(continuity_bound(&g, &g, &a, &a).unwrap(), 0.0);

        let dl = random_matrix(&mut rng, 2, 2);
        let da = random_tensor(&mut rng, 2, 2, 2);
        let perturbed = |t: f64| {
            let (lf, mf, nf) = g.factors();
            let g2 = GlTriple::new(
                lf.add(&dl.scale(Complex64::new(t, 0.0))).unwrap(),
                mf.clone(),
                nf.clone(),
            )
            .unwrap();
            let a2 = a.add(&da.scale(Complex64::new(t, 0.0))).unwrap();
            (g2, a2)
        };
        let (g2, a2) = perturbed(1e-3);
        let b1 = continuity_bound(&g, &g2, &a, &a2).unwrap();
        assert!(continuity_deviation(&g, &g2, &a, &a2).unwrap() <= b1);
        // the sup-norm constants barely move at this scale, so the bound is
        // linear in the perturbation size up to that drift
        let (g3, a3) = perturbed(2e-3);
        let b2 = continuity_bound(&g, &g3, &a, &a3).unwrap();
        assert!((b2 / b1 - 2.0).abs() < 2e-2);
    }
}
