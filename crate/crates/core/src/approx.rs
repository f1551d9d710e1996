//! Simple-spectrum perturbation of matrix pairs, rank-n approximation of
//! `n × n × 2` tensors, and the rank-leap family.
//!
//! Perturbing a pair `(A, B)` so that `A`, `B` and `A B⁻¹` all have simple
//! spectra is a generic condition, so a seeded perturb-and-verify loop
//! realizes it. Applied to the two slices of a pencil this gives, for any
//! `ε > 0`, a tensor of rank exactly `n` within l1 distance `ε`.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{spectrum, Matrix, SpectrumReport, Tolerances};
use crate::rank::{bi_rank_check, max_rank_value, RankCertificate};
use crate::rng::seeded_rng;
use crate::tensor::Tensor3;

pub const DEFAULT_MAX_ATTEMPTS: usize = 256;

/// Failures tolerated at one perturbation scale before it is halved.
const FAILURES_PER_SCALE: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationOutcome {
    pub a_eps: Matrix,
    pub b_eps: Matrix,
    /// `(‖A - A_ε‖₁, ‖B - B_ε‖₁)`.
    pub deviations: (f64, f64),
    pub spectrum_a: SpectrumReport,
    pub spectrum_b: SpectrumReport,
    /// Spectrum of `A_ε B_ε⁻¹`.
    pub spectrum_product: SpectrumReport,
    pub attempts: usize,
    pub final_scale: f64,
    pub seed: u64,
}

fn check_pair(a: &Matrix, b: &Matrix) -> Result<usize> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "expected two square matrices of one order, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(a.rows())
}

fn perturb<R: Rng>(rng: &mut R, a: &Matrix, scale: f64) -> Matrix {
    let n = a.rows();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..a.cols() {
            let re = rng.random_range(-scale..=scale);
            let im = rng.random_range(-scale..=scale);
            out[(i, j)] += Complex64::new(re, im);
        }
    }
    out
}

/// Finds invertible `A_ε`, `B_ε` with simple spectra, `A_ε B_ε⁻¹` simple
/// and both l1 deviations below `eps`.
///
/// Entrywise perturbations are uniform in `[-s, s]` for real and imaginary
/// parts, starting from `s = ε / (4 n²)` (which keeps every l1 deviation
/// under `ε / 2^{1/2}`); `s` halves after every eight failed draws.
pub fn perturb_simple_pair(
    a: &Matrix,
    b: &Matrix,
    eps: f64,
    seed: u64,
    max_attempts: usize,
    tol: &Tolerances,
) -> Result<PerturbationOutcome> {
    let n = check_pair(a, b)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut scale = eps / (4.0 * (n * n) as f64);
    for attempt in 1..=max_attempts {
        if attempt > 1 && (attempt - 1) % FAILURES_PER_SCALE == 0 {
            scale *= 0.5;
        }
        let a_eps = perturb(&mut rng, a, scale);
        let b_eps = perturb(&mut rng, b, scale);
        let deviations = (a.sub(&a_eps)?.norm_l1(), b.sub(&b_eps)?.norm_l1());
        if !(deviations.0 < eps && deviations.1 < eps) {
            continue;
        }
        if a_eps.inverse(tol.sing_rel).is_err() {
            continue;
        }
        let Ok(b_inv) = b_eps.inverse(tol.sing_rel) else {
            continue;
        };
        let product = a_eps.mat_mul(&b_inv)?;
        let spectrum_a = spectrum(&a_eps, tol.gap_for(&a_eps))?;
        if !spectrum_a.simple {
            continue;
        }
        let spectrum_b = spectrum(&b_eps, tol.gap_for(&b_eps))?;
        if !spectrum_b.simple {
            continue;
        }
        let spectrum_product = spectrum(&product, tol.gap_for(&product))?;
        if !spectrum_product.simple {
            continue;
        }
        return Ok(PerturbationOutcome {
            a_eps,
            b_eps,
            deviations,
            spectrum_a,
            spectrum_b,
            spectrum_product,
            attempts: attempt,
            final_scale: scale,
            seed,
        });
    }
    Err(Error::PerturbationFailed {
        attempts: max_attempts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Approximation {
    pub tensor: Tensor3,
    pub certificate: RankCertificate,
    /// `‖A - B‖₁`.
    pub deviation: f64,
    pub epsilon: f64,
    pub attempts: usize,
    pub seed: u64,
}

/// Returns `B` with certified rank `n` and `‖A - B‖₁ < eps`.
///
/// The second slice is perturbed as `A_ε` and the first as `B_ε`, each
/// with budget `eps / 2`, so the ratio `B₂ B₁⁻¹` has a simple spectrum.
pub fn rank_n_approximate(
    a: &Tensor3,
    eps: f64,
    seed: u64,
    max_attempts: usize,
    tol: &Tolerances,
) -> Result<Approximation> {
    let (l, m, depth) = a.dims();
    if l != m || depth != 2 {
        return Err(Error::InvalidShape(format!(
            "rank-n approximation needs an n x n x 2 tensor, got {l}x{m}x{depth}"
        )));
    }
    let outcome = perturb_simple_pair(a.slice(1), a.slice(0), eps / 2.0, seed, max_attempts, tol)?;
    let b = Tensor3::from_slices(vec![outcome.b_eps, outcome.a_eps])?;
    let certificate = bi_rank_check(&b, tol, seed)?;
    if !certificate.certifies_rank_m() {
        return Err(Error::CertificationFailed(format!(
            "approximant verdict {:?} instead of rank {l}",
            certificate.verdict
        )));
    }
    let deviation = a.distance_l1(&b)?;
    if deviation.is_nan() || deviation >= eps {
        return Err(Error::CertificationFailed(format!(
            "deviation {deviation:.3e} is not below {eps:.3e}"
        )));
    }
    Ok(Approximation {
        tensor: b,
        certificate,
        deviation,
        epsilon: eps,
        attempts: outcome.attempts,
        seed,
    })
}

/// Rank-leap family in `ℂ^{2n×2n×2}`.
///
/// The limit is `[E | J]` with `J` the direct sum of `n` Jordan blocks
/// `[[μ_i, 1], [0, μ_i]]`; member `k` replaces each block's lower-right
/// entry by `μ_i + 1/k`. The `μ_i` are purely imaginary, so each changed
/// entry differs from the limit by exactly the float `1/k`.
#[derive(Debug, Clone, Serialize)]
pub struct LeapFamily {
    pub n: usize,
    pub eigenvalues: Vec<Complex64>,
    pub limit: Tensor3,
    pub seed: u64,
}

/// Smallest allowed distance between two block eigenvalues.
pub const LEAP_MIN_GAP: f64 = 0.1;

impl LeapFamily {
    fn block_matrix(&self, k: Option<u64>) -> Matrix {
        let size = 2 * self.n;
        let mut j = Matrix::zeros(size, size);
        for (b, &mu) in self.eigenvalues.iter().enumerate() {
            let p = 2 * b;
            j[(p, p)] = mu;
            j[(p, p + 1)] = Complex64::new(1.0, 0.0);
            j[(p + 1, p + 1)] = match k {
                Some(k) => mu + Complex64::new(1.0 / k as f64, 0.0),
                None => mu,
            };
        }
        j
    }

    /// Member `A_k`; `k ≥ 1`.
    pub fn member(&self, k: u64) -> Tensor3 {
        assert!(k >= 1, "leap family index starts at 1");
        Tensor3::from_slices(vec![
            Matrix::identity(2 * self.n),
            self.block_matrix(Some(k)),
        ])
        .expect("well-formed slices")
    }

    /// The rank claimed for the limit: `max_rank_value(2n) = 3n`.
    pub fn claimed_rank_limit(&self) -> usize {
        max_rank_value(2 * self.n)
    }

    /// The rank certified for every member.
    pub fn certified_rank_members(&self) -> usize {
        2 * self.n
    }
}

pub fn build_leap_family(n: usize, eigenvalue_seed: u64) -> Result<LeapFamily> {
    if n == 0 {
        return Err(Error::InvalidArgument("leap family needs n >= 1".into()));
    }
    let mut rng = seeded_rng(eigenvalue_seed);
    // one eigenvalue per slot of width 2 * LEAP_MIN_GAP, jittered inside the
    // first half of its slot, then centred on the origin
    let centre = LEAP_MIN_GAP * (n as f64 - 0.5);
    let eigenvalues: Vec<Complex64> = (0..n)
        .map(|i| {
            let jitter: f64 = rng.random_range(0.0..LEAP_MIN_GAP);
            Complex64::new(0.0, 2.0 * LEAP_MIN_GAP * i as f64 + jitter - centre)
        })
        .collect();
    let mut family = LeapFamily {
        n,
        eigenvalues,
        limit: Tensor3::zeros(2 * n, 2 * n, 2),
        seed: eigenvalue_seed,
    };
    family.limit = Tensor3::from_slices(vec![Matrix::identity(2 * n), family.block_matrix(None)])?;
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::modulus;
    use crate::rank::Verdict;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn assert_outcome_invariants(o: &PerturbationOutcome, eps: f64, t: &Tolerances) {
        assert!(o.deviations.0 < eps && o.deviations.1 < eps);
        // re-verify independently of the loop
        for m in [&o.a_eps, &o.b_eps] {
            assert!(m.inverse(t.sing_rel).is_ok());
            assert!(spectrum(m, t.gap_for(m)).unwrap().simple);
        }
        let p = o
            .a_eps
            .mat_mul(&o.b_eps.inverse(t.sing_rel).unwrap())
            .unwrap();
        assert!(spectrum(&p, t.gap_for(&p)).unwrap().simple);
    }

    #[test]
    fn identity_pair_is_separated() {
        let e = Matrix::identity(2);
        let o = perturb_simple_pair(&e, &e, 0.1, 1, DEFAULT_MAX_ATTEMPTS, &tol()).unwrap();
        assert_outcome_invariants(&o, 0.1, &tol());
    }

    #[test]
    fn generic_pair_with_large_budget() {
        let a = Matrix::from_diagonal(&[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]);
        let b = Matrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 3.0]]);
        let o = perturb_simple_pair(&a, &b, 10.0, 2, DEFAULT_MAX_ATTEMPTS, &tol()).unwrap();
        assert_outcome_invariants(&o, 10.0, &tol());
    }

    #[test]
    fn defective_singular_matrix_is_repaired() {
        let a = Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let o = perturb_simple_pair(
            &a,
            &Matrix::identity(2),
            1e-3,
            3,
            DEFAULT_MAX_ATTEMPTS,
            &tol(),
        )
        .unwrap();
        assert_outcome_invariants(&o, 1e-3, &tol());
    }

    #[test]
    fn bad_arguments() {
        let e = Matrix::identity(2);
        assert!(matches!(
            perturb_simple_pair(&e, &e, 0.0, 0, 8, &tol()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            perturb_simple_pair(&e, &Matrix::identity(3), 0.1, 0, 8, &tol()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn impossible_tolerance_fails_cleanly() {
        let strict = Tolerances {
            gap_rel: 10.0,
            ..tol()
        };
        let e = Matrix::identity(3);
        assert_eq!(
            perturb_simple_pair(&e, &e, 0.1, 0, 20, &strict).unwrap_err(),
            Error::PerturbationFailed { attempts: 20 }
        );
    }

    fn example() -> Tensor3 {
        Tensor3::from_slices(vec![
            Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
            Matrix::from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]]),
        ])
        .unwrap()
    }

    #[test]
    fn example_stays_rank_two() {
        let r = rank_n_approximate(&example(), 1e-4, 5, DEFAULT_MAX_ATTEMPTS, &tol()).unwrap();
        assert_eq!(r.certificate.verdict, Verdict::RankEqualsM);
        assert!(r.deviation < 1e-4);
    }

    #[test]
    fn rank_three_tensor_is_approximated_by_rank_two() {
        let w = Tensor3::from_slices(vec![
            Matrix::identity(2),
            Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
        ])
        .unwrap();
        for eps in [1e-2, 1e-4, 1e-6] {
            let r = rank_n_approximate(&w, eps, 7, DEFAULT_MAX_ATTEMPTS, &tol()).unwrap();
            assert_eq!(r.certificate.verdict, Verdict::RankEqualsM);
            assert!(r.deviation < eps, "{eps}: {}", r.deviation);
        }
    }

    #[test]
    fn wrong_shape_is_rejected() {
        assert!(matches!(
            rank_n_approximate(&Tensor3::zeros(2, 2, 3), 0.1, 0, 8, &tol()),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn leap_family_structure() {
        for n in 1..=4 {
            let fam = build_leap_family(n, 11).unwrap();
            assert_eq!(fam.claimed_rank_limit(), 3 * n);
            let mu = &fam.eigenvalues;
            for i in 0..n {
                assert_eq!(mu[i].re, 0.0);
                for j in i + 1..n {
                    assert!(modulus(mu[i] - mu[j]) >= LEAP_MIN_GAP);
                }
            }
            for k in [1u64, 10, 1000, 100_000] {
                let h = 1.0 / k as f64;
                let member = fam.member(k);
                let d = member.distance_l1(&fam.limit).unwrap();
                let expected: f64 = (0..n).map(|_| h).sum();
                assert_eq!(d, expected);
                assert!((d - n as f64 / k as f64).abs() <= n as f64 * f64::EPSILON * d);
            }
        }
    }

    #[test]
    fn leap_family_smallest_case() {
        let fam = build_leap_family(1, 3).unwrap();
        let ten = fam.member(10);
        assert_eq!(
            ten.slice(1)[(1, 1)] - ten.slice(1)[(0, 0)],
            Complex64::new(0.1, 0.0)
        );
        assert_eq!(
            bi_rank_check(&ten, &tol(), 0).unwrap().verdict,
            Verdict::RankEqualsM
        );
        assert_eq!(
            bi_rank_check(&fam.limit, &tol(), 0).unwrap().verdict,
            Verdict::RankNotEqualMExceeds
        );
        assert!(build_leap_family(0, 0).is_err());
    }
}
