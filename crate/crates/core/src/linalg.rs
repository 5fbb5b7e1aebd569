//! Thin helpers over `sprs` for the symmetric systems the steppers solve.

use sprs::{CsMat, SymmetryCheck, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::SolverError;

/// Triplet accumulator for a square sparse matrix.
#[derive(Debug)]
pub struct Assembler {
    tri: TriMat<f64>,
}

impl Assembler {
    pub fn new(n: usize) -> Self {
        Self {
            tri: TriMat::new((n, n)),
        }
    }

    pub fn with_shape(rows: usize, cols: usize) -> Self {
        Self {
            tri: TriMat::new((rows, cols)),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.tri.add_triplet(i, j, v);
        }
    }

    /// Duplicate entries are summed.
    pub fn finish(self) -> CsMat<f64> {
        self.tri.to_csr()
    }
}

/// `y = A x`.
pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    matvec_acc(a, x, &mut y);
    y
}

/// `y += A x`.
pub fn matvec_acc(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.cols(), x.len());
    debug_assert_eq!(a.rows(), y.len());
    for (i, row) in a.outer_iterator().enumerate() {
        let mut acc = 0.0;
        for (j, &v) in row.iter() {
            acc += v * x[j];
        }
        y[i] += acc;
    }
}

/// `xᵀ A y`.
pub fn bilinear(a: &CsMat<f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, row) in a.outer_iterator().enumerate() {
        let mut acc = 0.0;
        for (j, &v) in row.iter() {
            acc += v * y[j];
        }
        total += x[i] * acc;
    }
    total
}

pub fn quad_form(a: &CsMat<f64>, x: &[f64]) -> f64 {
    bilinear(a, x, x)
}

/// `Σ_k w_k A_k` for matrices with identical shape.
pub fn linear_combination(terms: &[(f64, &CsMat<f64>)]) -> CsMat<f64> {
    let (rows, cols) = terms[0].1.shape();
    let mut asm = Assembler::with_shape(rows, cols);
    for &(w, m) in terms {
        for (v, (i, j)) in m.iter() {
            asm.add(i, j, w * v);
        }
    }
    asm.finish()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(A + Aᵀ)/2`, bitwise symmetric.
pub fn symmetric_part(a: &CsMat<f64>) -> CsMat<f64> {
    let mut asm = Assembler::new(a.rows());
    for (v, (i, j)) in a.iter() {
        asm.add(i, j, 0.5 * v);
        asm.add(j, i, 0.5 * v);
    }
    asm.finish()
}

/// Reusable LDLᵀ factorization of a symmetric matrix.
pub struct Factorization {
    ldl: LdlNumeric<f64, usize>,
    n: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

impl Factorization {
    pub fn new(a: &CsMat<f64>) -> Result<Self, SolverError> {
        let csc = symmetric_part(a).to_csc();
        let ldl = Ldl::new()
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .numeric(csc.view())
            .map_err(|e| SolverError::LinearSolveFailure(format!("{e:?}")))?;
        if ldl.d().iter().any(|d| !d.is_finite() || *d == 0.0) {
            return Err(SolverError::LinearSolveFailure(
                "zero or non-finite pivot".into(),
            ));
        }
        Ok(Self { ldl, n: a.rows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        debug_assert_eq!(rhs.len(), self.n);
        let x: Vec<f64> = self.ldl.solve(rhs.to_vec());
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(SolverError::NonFinite("linear solve"))
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}
