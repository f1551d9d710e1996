//! Third-order complex tensors stored as frontal slices, elementary tensors
//! and CP (sum of elementary terms) representations.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{modulus, Matrix};

/// An `l × m × n` tensor held as `n` frontal slices of size `l × m`;
/// slice `k` contains the entries `a[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    l: usize,
    m: usize,
    slices: Vec<Matrix>,
}

impl Tensor3 {
    pub fn zeros(l: usize, m: usize, n: usize) -> Self {
        Self {
            l,
            m,
            slices: vec![Matrix::zeros(l, m); n],
        }
    }

    pub fn from_slices(slices: Vec<Matrix>) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::InvalidShape(
                "a tensor needs at least one slice".into(),
            ));
        };
        let (l, m) = (first.rows(), first.cols());
        if l == 0 || m == 0 {
            return Err(Error::InvalidShape(
                "tensor dimensions must be positive".into(),
            ));
        }
        for (k, s) in slices.iter().enumerate() {
            if s.rows() != l || s.cols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "slice {k} is {}x{}, expected {l}x{m}",
                    s.rows(),
                    s.cols()
                )));
            }
            if !s.is_all_finite() {
                return Err(Error::NonFinite(format!("slice {k}")));
            }
        }
        Ok(Self { l, m, slices })
    }

    /// `(l, m, n)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.l, self.m, self.slices.len())
    }

    pub fn slices(&self) -> &[Matrix] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &Matrix {
        &self.slices[k]
    }

    pub fn into_slices(self) -> Vec<Matrix> {
        self.slices
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.slices[k][(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Complex64) {
        self.slices[k][(i, j)] = v;
    }

    pub fn is_square_type(&self) -> bool {
        self.l == self.m
    }

    /// Sum of the moduli of all entries.
    pub fn norm_l1(&self) -> f64 {
        self.slices.iter().map(Matrix::norm_l1).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.data().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.slices.iter().map(Matrix::norm_max).fold(0.0, f64::max)
    }

    fn check_dims(&self, other: &Self, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other, "tensor add")?;
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            l: self.l,
            m: self.m,
            slices,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dims(other, "tensor sub")?;
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            l: self.l,
            m: self.m,
            slices,
        })
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            l: self.l,
            m: self.m,
            slices: self.slices.iter().map(|s| s.scale(alpha)).collect(),
        }
    }

    /// `‖self - other‖₁`.
    pub fn distance_l1(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm_l1())
    }

    /// Largest entrywise deviation `max |a_ijk - b_ijk|`.
    pub fn distance_max(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm_max())
    }
}

/// Elementary tensor `x ⊗ y ⊗ z` with entries `x_i y_j z_k`.
pub fn outer3(x: &[Complex64], y: &[Complex64], z: &[Complex64]) -> Tensor3 {
    let slices = z
        .iter()
        .map(|&zk| {
            let mut s = Matrix::zeros(x.len(), y.len());
            for (i, &xi) in x.iter().enumerate() {
                for (j, &yj) in y.iter().enumerate() {
                    s[(i, j)] = xi * yj * zk;
                }
            }
            s
        })
        .collect();
    Tensor3 {
        l: x.len(),
        m: y.len(),
        slices,
    }
}

/// One elementary term `x ⊗ y ⊗ z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpTerm {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub z: Vec<Complex64>,
}

impl CpTerm {
    fn is_zero(&self) -> bool {
        [&self.x, &self.y, &self.z]
            .iter()
            .any(|v| v.iter().all(|c| c.re == 0.0 && c.im == 0.0))
    }

    /// Product of the Euclidean norms of the three factors.
    pub fn magnitude(&self) -> f64 {
        let n2 = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        n2(&self.x) * n2(&self.y) * n2(&self.z)
    }
}

/// A list of elementary terms; its length is a witness for `rank ≤ len`.
///
/// Terms with an identically zero factor are dropped on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpDecomposition {
    terms: Vec<CpTerm>,
}

impl CpDecomposition {
    pub fn new(terms: Vec<CpTerm>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidArgument(
                "CP decomposition needs at least one term".into(),
            ));
        };
        let dims = (first.x.len(), first.y.len(), first.z.len());
        if let Some(bad) = terms
            .iter()
            .position(|t| (t.x.len(), t.y.len(), t.z.len()) != dims)
        {
            return Err(Error::DimensionMismatch(format!(
                "term {bad} does not match dims {dims:?}"
            )));
        }
        let kept: Vec<CpTerm> = terms.into_iter().filter(|t| !t.is_zero()).collect();
        if kept.is_empty() {
            return Err(Error::InvalidArgument(
                "every CP term has a zero factor".into(),
            ));
        }
        Ok(Self { terms: kept })
    }

    pub fn terms(&self) -> &[CpTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let t = &self.terms[0];
        (t.x.len(), t.y.len(), t.z.len())
    }
}

/// Evaluates `Σ x_i ⊗ y_i ⊗ z_i` at the requested dimensions.
pub fn cp_to_tensor(d: &CpDecomposition, dims: (usize, usize, usize)) -> Result<Tensor3> {
    if d.dims() != dims {
        return Err(Error::DimensionMismatch(format!(
            "decomposition dims {:?} vs requested {dims:?}",
            d.dims()
        )));
    }
    let (l, m, n) = dims;
    let mut out = Tensor3::zeros(l, m, n);
    for t in d.terms() {
        for (k, &zk) in t.z.iter().enumerate() {
            let s = &mut out.slices[k];
            for (i, &xi) in t.x.iter().enumerate() {
                for (j, &yj) in t.y.iter().enumerate() {
                    s[(i, j)] += xi * yj * zk;
                }
            }
        }
    }
    Ok(out)
}

/// Modulus-based l1 norm of a vector.
pub fn vec_norm_l1(v: &[Complex64]) -> f64 {
    v.iter().map(|&z| modulus(z)).sum()
}
