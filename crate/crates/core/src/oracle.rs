//! Brute-force rank evidence for tiny tensors by alternating least squares.
//!
//! `als_fit` asks whether some `r`-term CP decomposition reproduces the
//! tensor. A fit below `oracle_tol` is evidence for `rank ≤ r`; the absence
//! of a fit is only evidence, never proof. Near the border of the rank-`r`
//! set the residual can shrink while the factors blow up; restarts whose
//! largest term norm exceeds `border_norm · ‖A‖_F` are flagged as diverging
//! and do not count towards a fit.
//!
//! Each sweep is followed by an extrapolation step `F_old + s·(F_new - F_old)`
//! with `s = iteration^{1/3}`, accepted only when it lowers the residual, and
//! each restart ends with a short Levenberg-Marquardt polish.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::Matrix;
use crate::rng::{complex_vector, seeded_rng};
use crate::tensor::{cp_to_tensor, CpDecomposition, CpTerm, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlsParams {
    pub restarts: usize,
    pub max_iters: usize,
    pub oracle_tol: f64,
    /// Stop a restart once one sweep lowers the residual by less than this
    /// fraction of its previous value.
    pub min_improvement: f64,
    pub border_norm: f64,
    /// Damped Gauss-Newton steps run after the sweeps of each restart.
    pub polish_iters: usize,
    pub seed: u64,
}

impl Default for AlsParams {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 2000,
            oracle_tol: 1e-7,
            min_improvement: 1e-10,
            border_norm: 1e6,
            polish_iters: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlsReport {
    pub target_rank: usize,
    /// Smallest relative Frobenius residual among non-diverging restarts
    /// (`None` when every restart diverged).
    pub best_residual: Option<f64>,
    pub restarts: usize,
    /// Iterations run by the restart that produced `best_residual`.
    pub iterations_used: usize,
    pub diverging_restarts: usize,
    /// Smallest residual among diverging restarts, reported for context.
    pub best_diverging_residual: Option<f64>,
    pub decomposition: Option<CpDecomposition>,
    pub params: AlsParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleDecision {
    AtMostR,
    NoFitFound,
}

#[derive(Clone)]
struct Factors {
    a: Vec<Vec<Complex64>>, // l x r
    b: Vec<Vec<Complex64>>, // m x r
    c: Vec<Vec<Complex64>>, // n x r
}

fn gram(f: &[Vec<Complex64>], r: usize) -> Vec<Vec<Complex64>> {
    let mut g = vec![vec![Complex64::new(0.0, 0.0); r]; r];
    for row in f {
        for p in 0..r {
            for q in 0..r {
                g[p][q] += row[p].conj() * row[q];
            }
        }
    }
    g
}

/// Solves the Hermitian system `G X = R` for the `r × cols` right-hand side,
/// with a tiny diagonal shift when `G` is numerically singular.
fn solve_gram(g: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let r = g.len();
    let trace: f64 = (0..r)
        .map(|i| g[i][i].re)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    loop {
        let mut mat = Matrix::zeros(r, r);
        for p in 0..r {
            for q in 0..r {
                mat[(p, q)] = g[p][q];
            }
            mat[(p, p)] += Complex64::new(shift, 0.0);
        }
        if let Ok(inv) = mat.inverse(1e-15) {
            return rhs
                .iter()
                .map(|col| inv.mat_vec(col).expect("square"))
                .collect();
        }
        shift = if shift == 0.0 {
            1e-14 * trace
        } else {
            shift * 100.0
        };
    }
}

impl Factors {
    fn random(seed: u64, dims: (usize, usize, usize), r: usize) -> Self {
        let mut rng = seeded_rng(seed);
        let mut mk = |rows: usize| (0..rows).map(|_| complex_vector(&mut rng, r)).collect();
        Self {
            a: mk(dims.0),
            b: mk(dims.1),
            c: mk(dims.2),
        }
    }

    fn terms(&self, r: usize) -> Vec<CpTerm> {
        (0..r)
            .map(|t| CpTerm {
                x: self.a.iter().map(|row| row[t]).collect(),
                y: self.b.iter().map(|row| row[t]).collect(),
                z: self.c.iter().map(|row| row[t]).collect(),
            })
            .collect()
    }

    /// `prev + step · (self - prev)`, factor by factor.
    fn extrapolate(&self, prev: &Self, step: f64) -> Self {
        let mix = |new: &[Vec<Complex64>], old: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
            new.iter()
                .zip(old)
                .map(|(n, o)| n.iter().zip(o).map(|(&a, &b)| b + (a - b) * step).collect())
                .collect()
        };
        Self {
            a: mix(&self.a, &prev.a),
            b: mix(&self.b, &prev.b),
            c: mix(&self.c, &prev.c),
        }
    }

    /// Largest term magnitude after balancing.
    fn max_term_norm(&self, r: usize) -> f64 {
        self.terms(r)
            .iter()
            .map(CpTerm::magnitude)
            .fold(0.0, f64::max)
    }

    fn residual(&self, x: &Tensor3, r: usize) -> f64 {
        let approx = match CpDecomposition::new(self.terms(r)) {
            Ok(d) => cp_to_tensor(&d, x.dims()).expect("dims match"),
            Err(_) => Tensor3::zeros(x.dims().0, x.dims().1, x.dims().2),
        };
        let diff = x.sub(&approx).expect("dims match").norm_fro();
        diff / x.norm_fro().max(f64::MIN_POSITIVE)
    }
}

/// One least-squares sweep over the three modes.
fn sweep(x: &Tensor3, f: &mut Factors, r: usize) {
    let (l, m, n) = x.dims();
    // mode 1: rows of A solve (BᴴB ∘ CᴴC) a_i = Σ_jk conj(b_j ∘ c_k) x_ijk
    let g = hadamard(&gram(&f.b, r), &gram(&f.c, r));
    let rhs: Vec<Vec<Complex64>> = (0..l)
        .map(|i| {
            (0..r)
                .map(|t| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..m {
                        for k in 0..n {
                            s += (f.b[j][t] * f.c[k][t]).conj() * x.get(i, j, k);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    f.a = solve_gram(&g, &rhs);

    let g = hadamard(&gram(&f.a, r), &gram(&f.c, r));
    let rhs: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            (0..r)
                .map(|t| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for i in 0..l {
                        for k in 0..n {
                            s += (f.a[i][t] * f.c[k][t]).conj() * x.get(i, j, k);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    f.b = solve_gram(&g, &rhs);

    let g = hadamard(&gram(&f.a, r), &gram(&f.b, r));
    let rhs: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            (0..r)
                .map(|t| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for i in 0..l {
                        for j in 0..m {
                            s += (f.a[i][t] * f.b[j][t]).conj() * x.get(i, j, k);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    f.c = solve_gram(&g, &rhs);
    balance(f, r);
}

fn hadamard(p: &[Vec<Complex64>], q: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    p.iter()
        .zip(q)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect())
        .collect()
}

/// Rescales each term so its three factor columns share one norm.
fn balance(f: &mut Factors, r: usize) {
    for t in 0..r {
        let norm =
            |rows: &[Vec<Complex64>]| rows.iter().map(|row| row[t].norm_sqr()).sum::<f64>().sqrt();
        let (na, nb, nc) = (norm(&f.a), norm(&f.b), norm(&f.c));
        if na == 0.0 || nb == 0.0 || nc == 0.0 {
            continue;
        }
        let target = (na * nb * nc).cbrt();
        for (rows, nv) in [(&mut f.a, na), (&mut f.b, nb), (&mut f.c, nc)] {
            let s = target / nv;
            for row in rows.iter_mut() {
                row[t] *= s;
            }
        }
    }
}

/// Levenberg-Marquardt refinement of the factors.
///
/// The model is holomorphic in the factor entries, so the complex Jacobian
/// `J` gives the step `(JᴴJ + λ·E) δ = -Jᴴ e`. Sweeps alone crawl through
/// long plateaus on ill-conditioned fits; a few of these steps finish them.
/// Returns the final relative residual and the number of steps taken.
fn polish(
    x: &Tensor3,
    f: &mut Factors,
    r: usize,
    max_steps: usize,
    min_improvement: f64,
) -> (f64, usize) {
    let (l, m, n) = x.dims();
    let p = r * (l + m + n);
    let mut res = f.residual(x, r);
    let mut lambda = 1e-3;
    let mut steps = 0;
    while steps < max_steps && res > 1e-14 {
        steps += 1;
        let mut jac = Matrix::zeros(l * m * n, p);
        let mut err = vec![Complex64::new(0.0, 0.0); l * m * n];
        for i in 0..l {
            for j in 0..m {
                for k in 0..n {
                    let row = (k * l + i) * m + j;
                    let mut model = Complex64::new(0.0, 0.0);
                    for t in 0..r {
                        model += f.a[i][t] * f.b[j][t] * f.c[k][t];
                        jac[(row, i * r + t)] = f.b[j][t] * f.c[k][t];
                        jac[(row, (l + j) * r + t)] = f.a[i][t] * f.c[k][t];
                        jac[(row, (l + m + k) * r + t)] = f.a[i][t] * f.b[j][t];
                    }
                    err[row] = model - x.get(i, j, k);
                }
            }
        }
        let jh = jac.conj_transpose();
        let normal = jh.mat_mul(&jac).expect("shapes agree");
        let grad = jh.mat_vec(&err).expect("shapes agree");
        let peak = (0..p)
            .map(|q| normal[(q, q)].re)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut accepted = false;
        while lambda < 1e12 {
            let step = normal
                .shift_diagonal(Complex64::new(-lambda * peak, 0.0))
                .inverse(1e-15)
                .ok()
                .map(|inv| inv.mat_vec(&grad).expect("square"));
            if let Some(delta) = step {
                let mut trial = f.clone();
                for t in 0..r {
                    for i in 0..l {
                        trial.a[i][t] -= delta[i * r + t];
                    }
                    for j in 0..m {
                        trial.b[j][t] -= delta[(l + j) * r + t];
                    }
                    for k in 0..n {
                        trial.c[k][t] -= delta[(l + m + k) * r + t];
                    }
                }
                balance(&mut trial, r);
                let next = trial.residual(x, r);
                if next < res {
                    let improvement = (res - next) / res;
                    *f = trial;
                    res = next;
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = improvement >= min_improvement;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (res, steps)
}

/// Fits `r` elementary terms to `x` from `params.restarts` seeded starts.
pub fn als_fit(x: &Tensor3, r: usize, params: &AlsParams) -> AlsReport {
    assert!(r >= 1, "target rank must be positive");
    let dims = x.dims();
    let scale = x.norm_fro();
    let mut best: Option<(f64, usize, Vec<CpTerm>)> = None;
    let mut best_diverging: Option<f64> = None;
    let mut diverging = 0usize;

    if scale == 0.0 {
        return AlsReport {
            target_rank: r,
            best_residual: Some(0.0),
            restarts: 0,
            iterations_used: 0,
            diverging_restarts: 0,
            best_diverging_residual: None,
            decomposition: None,
            params: *params,
        };
    }

    for restart in 0..params.restarts {
        let seed = params
            .seed
            .wrapping_add((restart as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
        let mut f = Factors::random(seed, dims, r);
        let mut res = f.residual(x, r);
        let mut iters = 0;
        while iters < params.max_iters {
            let prev = f.clone();
            sweep(x, &mut f, r);
            iters += 1;
            let mut next = f.residual(x, r);
            // extrapolated line search along the sweep direction, kept only
            // when it helps; it shortens the long plateaus plain sweeps show
            if iters > 2 {
                let mut jump = f.extrapolate(&prev, (iters as f64).cbrt());
                balance(&mut jump, r);
                let tried = jump.residual(x, r);
                if tried < next {
                    f = jump;
                    next = tried;
                }
            }
            let improvement = (res - next) / res;
            res = next;
            if res <= 1e-14 || improvement.abs() < params.min_improvement {
                break;
            }
        }
        if res > 1e-14 {
            let (polished, steps) =
                polish(x, &mut f, r, params.polish_iters, params.min_improvement);
            res = polished;
            iters += steps;
        }
        if f.max_term_norm(r) > params.border_norm * scale {
            diverging += 1;
            best_diverging = Some(best_diverging.map_or(res, |b: f64| b.min(res)));
            continue;
        }
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, iters, f.terms(r)));
        }
    }

    let (best_residual, iterations_used, decomposition) = match best {
        Some((res, iters, terms)) => {
            let d = (res <= params.oracle_tol)
                .then(|| CpDecomposition::new(terms).ok())
                .flatten();
            (Some(res), iters, d)
        }
        None => (None, 0, None),
    };
    AlsReport {
        target_rank: r,
        best_residual,
        restarts: params.restarts,
        iterations_used,
        diverging_restarts: diverging,
        best_diverging_residual: best_diverging,
        decomposition,
        params: *params,
    }
}

pub fn oracle_rank_decision(x: &Tensor3, r: usize, params: &AlsParams) -> OracleDecision {
    decision_of(&als_fit(x, r, params))
}

pub fn decision_of(report: &AlsReport) -> OracleDecision {
    match report.best_residual {
        Some(res) if res <= report.params.oracle_tol => OracleDecision::AtMostR,
        _ => OracleDecision::NoFitFound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::outer3;

    fn example() -> Tensor3 {
        Tensor3::from_slices(vec![
            Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
            Matrix::from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]]),
        ])
        .unwrap()
    }

    fn w_tensor() -> Tensor3 {
        Tensor3::from_slices(vec![
            Matrix::identity(2),
            Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
        ])
        .unwrap()
    }

    #[test]
    fn rank_one_is_fitted() {
        let mut rng = seeded_rng(1);
        let t = outer3(
            &complex_vector(&mut rng, 3),
            &complex_vector(&mut rng, 2),
            &complex_vector(&mut rng, 2),
        );
        let rep = als_fit(&t, 1, &AlsParams::default());
        assert!(rep.best_residual.unwrap() < 1e-10);
        assert!(rep.decomposition.is_some());
        assert_eq!(
            oracle_rank_decision(&t, 1, &AlsParams::default()),
            OracleDecision::AtMostR
        );
    }

    #[test]
    fn example_fits_at_rank_two() {
        let rep = als_fit(&example(), 2, &AlsParams::default());
        assert!(rep.best_residual.unwrap() < 1e-8, "{:?}", rep.best_residual);
    }

    #[test]
    fn w_tensor_needs_three_terms() {
        let params = AlsParams {
            restarts: 50,
            ..AlsParams::default()
        };
        let two = als_fit(&w_tensor(), 2, &params);
        assert_eq!(decision_of(&two), OracleDecision::NoFitFound);
        let three = als_fit(&w_tensor(), 3, &params);
        assert!(three.best_residual.unwrap() < 1e-8);
    }

    #[test]
    fn w_tensor_two_term_residual_creeps_towards_border() {
        // W lies in the closure of the rank-2 set: more sweeps buy a smaller
        // residual with larger terms, but never a fit.
        let res = |iters| {
            let p = AlsParams {
                restarts: 3,
                max_iters: iters,
                ..AlsParams::default()
            };
            als_fit(&w_tensor(), 2, &p).best_residual.unwrap()
        };
        let (short, long) = (res(100), res(1000));
        assert!(long < short, "{short} -> {long}");
        assert!(long > AlsParams::default().oracle_tol);
    }

    #[test]
    fn constructed_rank_two_is_fitted() {
        let mut rng = seeded_rng(5);
        let terms: Vec<CpTerm> = (0..2)
            .map(|_| CpTerm {
                x: complex_vector(&mut rng, 2),
                y: complex_vector(&mut rng, 3),
                z: complex_vector(&mut rng, 2),
            })
            .collect();
        let t = cp_to_tensor(&CpDecomposition::new(terms).unwrap(), (2, 3, 2)).unwrap();
        assert_eq!(
            oracle_rank_decision(&t, 2, &AlsParams::default()),
            OracleDecision::AtMostR
        );
    }

    #[test]
    fn fit_at_r_implies_fit_at_r_plus_one() {
        for seed in 0..10u64 {
            let mut rng = seeded_rng(100 + seed);
            let terms: Vec<CpTerm> = (0..2)
                .map(|_| CpTerm {
                    x: complex_vector(&mut rng, 2),
                    y: complex_vector(&mut rng, 2),
                    z: complex_vector(&mut rng, 3),
                })
                .collect();
            let t = cp_to_tensor(&CpDecomposition::new(terms).unwrap(), (2, 2, 3)).unwrap();
            let p = AlsParams {
                seed,
                ..AlsParams::default()
            };
            if oracle_rank_decision(&t, 2, &p) == OracleDecision::AtMostR {
                assert_eq!(
                    oracle_rank_decision(&t, 3, &p),
                    OracleDecision::AtMostR,
                    "seed {seed}"
                );
            }
        }
    }

    #[test]
    fn zero_tensor_is_trivially_fitted() {
        let rep = als_fit(&Tensor3::zeros(2, 2, 2), 1, &AlsParams::default());
        assert_eq!(rep.best_residual, Some(0.0));
    }
}
