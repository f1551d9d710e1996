//! Spectra, single-matrix diagonalization and simultaneous diagonalization.
//!
//! Exact statements ("simple spectrum", "diagonalizable") are decided with
//! the explicit thresholds of [`Tolerances`]; every report carries the
//! values it was decided with.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::matrix::{modulus, Matrix};
use super::schur::schur;
use super::svd::{null_space, numerical_rank};
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// Numerical thresholds for spectral decisions.
///
/// `gap_rel`, `rank_rel` and `sing_rel` are relative to the entrywise l1
/// norm of the matrix under test; the others are dimensionless ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub gap_rel: f64,
    pub rank_rel: f64,
    pub sim_tol: f64,
    pub comm_tol: f64,
    pub diag_tol: f64,
    pub sing_rel: f64,
    pub cert_tol: f64,
    /// Upper limit on the induced 1-norm condition number of an accepted
    /// common eigenbasis.
    pub max_basis_cond: f64,
    pub max_tries: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap_rel: 1e-8,
            rank_rel: 1e-8,
            sim_tol: 1e-6,
            comm_tol: 1e-10,
            diag_tol: 1e-6,
            sing_rel: 1e-10,
            cert_tol: 1e-8,
            max_basis_cond: 1e8,
            max_tries: 16,
        }
    }
}

impl Tolerances {
    pub fn gap_for(&self, a: &Matrix) -> f64 {
        self.gap_rel * a.norm_l1()
    }

    pub fn rank_for(&self, a: &Matrix) -> f64 {
        self.rank_rel * a.norm_l1()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub min_gap: f64,
    pub simple: bool,
    pub residual: f64,
    pub gap_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectWitness {
    pub eigenvalue: Complex64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone)]
pub struct DiagReport {
    pub diagonalizable: bool,
    pub basis: Option<Matrix>,
    pub diag: Option<Matrix>,
    pub defect_witness: Option<DefectWitness>,
}

fn min_pairwise_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min(modulus(values[i] - values[j]));
        }
    }
    if values.len() < 2 {
        // a 1x1 spectrum has no pair to collide
        f64::INFINITY
    } else {
        gap
    }
}

/// Eigenvalues and simplicity verdict at the absolute threshold `gap_tol`.
pub fn spectrum(a: &Matrix, gap_tol: f64) -> Result<SpectrumReport> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "spectrum of a non-square matrix".into(),
        ));
    }
    let s = schur(a)?;
    let eigenvalues = s.eigenvalues();
    let vectors = s.eigenvectors();
    let mut residual: f64 = 0.0;
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let v = vectors.column(k);
        let av = a.mat_vec(&v)?;
        for (p, q) in av.iter().zip(&v) {
            residual = residual.max(modulus(p - lambda * q));
        }
    }
    let min_gap = min_pairwise_gap(&eigenvalues);
    Ok(SpectrumReport {
        simple: min_gap > gap_tol,
        min_gap,
        eigenvalues,
        residual,
        gap_tol,
    })
}

/// Groups eigenvalues whose distance chains stay within `gap_tol`.
fn clusters(values: &[Complex64], gap_tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if modulus(values[i] - values[j]) <= gap_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Decides diagonalizability of `a`.
///
/// Simple spectrum: the eigenvector basis is returned directly. Otherwise
/// eigenvalues are clustered at `gap_tol` and each cluster's geometric
/// multiplicity is `order - rank(A - λE)` at `rank_tol`; the basis is then
/// assembled from numerical null spaces.
pub fn diagonalize(a: &Matrix, gap_tol: f64, rank_tol: f64) -> Result<DiagReport> {
    let sp = spectrum(a, gap_tol)?;
    let n = a.rows();
    if sp.simple {
        let basis = schur(a)?.eigenvectors();
        let diag = Matrix::from_diagonal(&sp.eigenvalues);
        return Ok(DiagReport {
            diagonalizable: true,
            basis: Some(basis),
            diag: Some(diag),
            defect_witness: None,
        });
    }
    let mut cols = Vec::with_capacity(n);
    let mut diag_entries = Vec::with_capacity(n);
    for group in clusters(&sp.eigenvalues, gap_tol) {
        let algebraic = group.len();
        let rep = group
            .iter()
            .map(|&i| sp.eigenvalues[i])
            .sum::<Complex64>()
            / algebraic as f64;
        let shifted = a.shift_diagonal(rep);
        let geometric = n - numerical_rank(&shifted, rank_tol);
        if geometric < algebraic {
            return Ok(DiagReport {
                diagonalizable: false,
                basis: None,
                diag: None,
                defect_witness: Some(DefectWitness {
                    eigenvalue: rep,
                    algebraic,
                    geometric,
                }),
            });
        }
        // geometric > algebraic only when rank_tol swallows neighbouring
        // clusters; keep the leading `algebraic` null vectors
        let ns = null_space(&shifted, rank_tol);
        for v in ns.into_iter().take(algebraic) {
            cols.push(v);
            diag_entries.push(rep);
        }
    }
    Ok(DiagReport {
        diagonalizable: true,
        basis: Some(Matrix::from_columns(&cols)),
        diag: Some(Matrix::from_diagonal(&diag_entries)),
        defect_witness: None,
    })
}

/// Why a family of matrices admits no common eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstruction {
    /// Member `index` of the family is not diagonalizable.
    NotDiagonalizable {
        index: usize,
        witness: DefectWitness,
    },
    /// Members `i` and `j` do not commute: `‖C_i C_j - C_j C_i‖₁` relative to `‖C_i‖₁‖C_j‖₁`.
    NonCommuting { i: usize, j: usize, relative: f64 },
}

#[derive(Debug, Clone)]
pub enum SimDiagOutcome {
    Diagonalizable {
        basis: Matrix,
        /// `diagonals[i][k]` is the k-th diagonal entry of `P⁻¹ C_i P`.
        diagonals: Vec<Vec<Complex64>>,
        coefficients: Vec<f64>,
        tries: usize,
        max_offdiag: f64,
        basis_cond: f64,
    },
    NotDiagonalizable(Obstruction),
}

impl SimDiagOutcome {
    pub fn is_diagonalizable(&self) -> bool {
        matches!(self, SimDiagOutcome::Diagonalizable { .. })
    }
}

fn find_obstruction(family: &[Matrix], tol: &Tolerances) -> Result<Option<Obstruction>> {
    for (index, c) in family.iter().enumerate() {
        let d = diagonalize(c, tol.gap_for(c), tol.rank_for(c))?;
        if let Some(witness) = d.defect_witness {
            return Ok(Some(Obstruction::NotDiagonalizable { index, witness }));
        }
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let scale = family[i].norm_l1() * family[j].norm_l1();
            if scale == 0.0 {
                continue;
            }
            let relative = family[i].commutator(&family[j])?.norm_l1() / scale;
            if relative > tol.comm_tol {
                return Ok(Some(Obstruction::NonCommuting { i, j, relative }));
            }
        }
    }
    Ok(None)
}

/// Decides whether one invertible `P` makes every `P⁻¹ C_i P` diagonal.
///
/// Each try draws real coefficients in `[-1, 1]`, diagonalizes the generic
/// combination `Σ c_i C_i` and accepts its eigenbasis when it is
/// well-conditioned and every conjugated member is diagonal up to
/// `sim_tol`. A defective member or a non-commuting pair decides the
/// negative case. Neither within `max_tries` yields [`Error::Inconclusive`].
pub fn simultaneously_diagonalizable(
    family: &[Matrix],
    tol: &Tolerances,
    seed: u64,
) -> Result<SimDiagOutcome> {
    let Some(first) = family.first() else {
        return Err(Error::InvalidArgument("empty matrix family".into()));
    };
    let n = first.rows();
    if family.iter().any(|c| !c.is_square() || c.rows() != n) {
        return Err(Error::DimensionMismatch(
            "simultaneous diagonalization needs square matrices of one order".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut obstruction_checked = false;
    for attempt in 1..=tol.max_tries {
        let coefficients: Vec<f64> = family
            .iter()
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let mut combo = Matrix::zeros(n, n);
        for (c, m) in coefficients.iter().zip(family) {
            combo = combo.add(&m.scale(Complex64::new(*c, 0.0)))?;
        }
        if let Some(accepted) = try_basis(&combo, family, tol)? {
            let (basis, diagonals, max_offdiag, basis_cond) = accepted;
            return Ok(SimDiagOutcome::Diagonalizable {
                basis,
                diagonals,
                coefficients,
                tries: attempt,
                max_offdiag,
                basis_cond,
            });
        }
        if !obstruction_checked {
            if let Some(o) = find_obstruction(family, tol)? {
                return Ok(SimDiagOutcome::NotDiagonalizable(o));
            }
            obstruction_checked = true;
        }
    }
    Err(Error::Inconclusive {
        tries: tol.max_tries,
    })
}

type Accepted = (Matrix, Vec<Vec<Complex64>>, f64, f64);

fn try_basis(combo: &Matrix, family: &[Matrix], tol: &Tolerances) -> Result<Option<Accepted>> {
    let report = diagonalize(combo, tol.gap_for(combo), tol.rank_for(combo))?;
    let Some(basis) = report.basis else {
        return Ok(None);
    };
    if basis.cols() != basis.rows() {
        return Ok(None);
    }
    let basis_cond = basis.condition_op1(tol.sing_rel);
    if basis_cond.is_nan() || basis_cond > tol.max_basis_cond {
        return Ok(None);
    }
    let inv = basis.inverse(tol.sing_rel)?;
    let mut diagonals = Vec::with_capacity(family.len());
    let mut max_offdiag: f64 = 0.0;
    for c in family {
        let conj = inv.mat_mul(c)?.mat_mul(&basis)?;
        let scale = c.norm_l1();
        let off = conj.offdiag_l1();
        let rel = if scale == 0.0 { off } else { off / scale };
        if rel > tol.sim_tol {
            return Ok(None);
        }
        max_offdiag = max_offdiag.max(rel);
        diagonals.push(conj.diagonal());
    }
    Ok(Some((basis, diagonals, max_offdiag, basis_cond)))
}
