//! Dense generalized eigensolver for H c = E S c pencils.
//!
//! The overlap of a grown ECG basis is routinely near-singular, so the pencil
//! is reduced by canonical orthogonalization: diagonalize the Hermitian S,
//! drop directions whose eigenvalue falls below a relative cutoff, and map the
//! problem onto the surviving whitened subspace. The reduced operator is
//! diagonalized with a Hermitian routine when the pencil is Hermitian and a
//! general complex routine otherwise (complex-rotated operators are complex
//! symmetric, for which no dedicated dense kernel is assumed).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Norm, OperationNorm, UPLO};
use num_complex::Complex64;

use crate::error::NopairError;

/// Hermitian eigendecomposition returning true right eigenvectors as columns.
///
/// ndarray-linalg 0.16 hands row-major storage to *heev, which reads it as
/// the (column-major) transpose; for complex Hermitian input the eigenvalues
/// are unaffected but the reported eigenvectors are the complex conjugates of
/// the true ones. Conjugate them back here, and keep every eigh call in the
/// crate routed through this wrapper.
pub fn eigh_hermitian(
    m: &Array2<Complex64>,
) -> Result<(Array1<f64>, Array2<Complex64>), NopairError> {
    let (vals, vecs) = m
        .eigh(UPLO::Lower)
        .map_err(|e| NopairError::Eigen(format!("hermitian decomposition: {e}")))?;
    Ok((vals, vecs.mapv(|z| z.conj())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    Hermitian,
    ComplexSymmetric,
}

#[derive(Debug, Clone, Copy)]
pub struct PencilSolveOptions {
    /// Relative overlap-eigenvalue threshold below which directions are
    /// discarded before inversion.
    pub cutoff: f64,
    pub mode: SymmetryMode,
    /// Per-pair residual bound, relative to |H|_F |v|. Whitening an
    /// ill-conditioned overlap amplifies back-transformed residuals by up
    /// to kappa(S), so callers working on deliberately redundant bases may
    /// need to loosen the default.
    pub residual_tol: f64,
}

impl PencilSolveOptions {
    pub fn hermitian() -> Self {
        Self {
            cutoff: 1e-13,
            mode: SymmetryMode::Hermitian,
            residual_tol: 1e-9,
        }
    }

    pub fn complex_symmetric() -> Self {
        Self {
            cutoff: 1e-13,
            mode: SymmetryMode::ComplexSymmetric,
            residual_tol: 1e-9,
        }
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    /// Eigenvector in the original (non-whitened) basis.
    pub vector: Array1<Complex64>,
}

#[derive(Debug, Clone)]
pub struct PencilSolution {
    pub pairs: Vec<EigenPair>,
    /// Dimension of the canonical subspace actually solved.
    pub rank: usize,
    /// Largest relative residual max_i |H v - λ S v| / (|H| |v|) over pairs.
    pub max_residual: f64,
}

/// Canonical orthogonalization transform X with X^H S X = 1 on the retained
/// subspace. Returns the n x r transform.
pub fn canonical_transform(
    s: &Array2<Complex64>,
    cutoff: f64,
) -> Result<Array2<Complex64>, NopairError> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(NopairError::Invalid(format!(
            "orthogonalization cutoff {cutoff} outside (0, 1)"
        )));
    }
    let (vals, vecs) = eigh_hermitian(s)?;
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(NopairError::Conditioning(
            "overlap matrix has no positive eigenvalues".into(),
        ));
    }
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > cutoff * max)
        .collect();
    if keep.is_empty() {
        return Err(NopairError::Conditioning(
            "overlap rank collapsed to zero under cutoff".into(),
        ));
    }
    let n = s.nrows();
    let mut x = Array2::zeros((n, keep.len()));
    for (col, &i) in keep.iter().enumerate() {
        let w = 1.0 / vals[i].sqrt();
        for row in 0..n {
            x[(row, col)] = vecs[(row, i)] * w;
        }
    }
    Ok(x)
}

fn conj_t(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

/// Solves H c = E S c. Eigenpairs are returned sorted by real part of the
/// eigenvalue; every pair satisfies |H v - λ S v| ≤ 1e-9 |H| |v| or the solve
/// fails. Vectors live in the original basis and are whitened-subspace
/// orthonormal (v^H S v = 1).
pub fn solve_pencil(
    h: &Array2<Complex64>,
    s: &Array2<Complex64>,
    options: &PencilSolveOptions,
) -> Result<PencilSolution, NopairError> {
    let n = h.nrows();
    if h.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(NopairError::Invalid(format!(
            "pencil dimensions disagree: H {:?}, S {:?}",
            h.dim(),
            s.dim()
        )));
    }
    let x = canonical_transform(s, options.cutoff)?;
    let hp = conj_t(&x).dot(h).dot(&x);
    let r = hp.nrows();

    let (values, y): (Vec<Complex64>, Array2<Complex64>) = match options.mode {
        SymmetryMode::Hermitian => {
            let herm = hp.opnorm_one().map_or(f64::INFINITY, |nrm| {
                let dev = (&hp - &conj_t(&hp)).opnorm_one().unwrap_or(f64::INFINITY);
                dev / nrm.max(1e-300)
            });
            if herm > 1e-10 {
                return Err(NopairError::Eigen(format!(
                    "Hermitian mode requested but reduced operator deviates by {herm:.3e}"
                )));
            }
            // Symmetrize away the representable part of the deviation.
            let sym = (&hp + &conj_t(&hp)).mapv(|z| 0.5 * z);
            let (vals, vecs) = eigh_hermitian(&sym)?;
            (
                vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                vecs,
            )
        }
        SymmetryMode::ComplexSymmetric => {
            let (vals, vecs) = hp
                .eig()
                .map_err(|e| NopairError::Eigen(format!("general solve: {e}")))?;
            (vals.to_vec(), vecs)
        }
    };

    // Back-transform and verify residuals against the original pencil.
    let h_norm = h.opnorm_fro().unwrap_or(f64::INFINITY).max(1e-300);
    let mut pairs = Vec::with_capacity(r);
    let mut max_residual: f64 = 0.0;
    for (k, &value) in values.iter().enumerate() {
        let yk = y.column(k).to_owned();
        let v = x.dot(&yk);
        let hv = h.dot(&v);
        let sv = s.dot(&v);
        let res = Array1::from_iter(hv.iter().zip(sv.iter()).map(|(a, b)| a - value * b));
        let rel = res.norm_l2() / (h_norm * v.norm_l2().max(1e-300));
        max_residual = max_residual.max(rel);
        if rel > options.residual_tol {
            return Err(NopairError::Eigen(format!(
                "eigenpair {k} residual {rel:.3e} exceeds {:.0e} (λ = {value})",
                options.residual_tol
            )));
        }
        pairs.push(EigenPair { value, vector: v });
    }
    pairs.sort_by(|a, b| {
        a.value
            .re
            .partial_cmp(&b.value.re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(PencilSolution {
        pairs,
        rank: r,
        max_residual,
    })
}

/// Real symmetric pencil solve used in optimization hot loops, where the
/// complex machinery above costs roughly four times as much. Same canonical
/// orthogonalization and residual contract.
pub fn solve_real_pencil(
    h: &Array2<f64>,
    s: &Array2<f64>,
    cutoff: f64,
) -> Result<(Vec<f64>, Array2<f64>), NopairError> {
    let n = h.nrows();
    if h.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(NopairError::Invalid("pencil dimensions disagree".into()));
    }
    let (svals, svecs) = s
        .eigh(UPLO::Lower)
        .map_err(|e| NopairError::Eigen(format!("overlap diagonalization: {e}")))?;
    let max = svals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(NopairError::Conditioning(
            "overlap matrix has no positive eigenvalues".into(),
        ));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| svals[i] > cutoff * max).collect();
    if keep.is_empty() {
        return Err(NopairError::Conditioning("overlap rank collapsed".into()));
    }
    let mut x = Array2::zeros((n, keep.len()));
    for (col, &i) in keep.iter().enumerate() {
        let w = 1.0 / svals[i].sqrt();
        for row in 0..n {
            x[(row, col)] = svecs[(row, i)] * w;
        }
    }
    let hp = x.t().dot(h).dot(&x);
    let hp = (&hp + &hp.t()).mapv(|v| 0.5 * v);
    let (vals, y) = hp
        .eigh(UPLO::Lower)
        .map_err(|e| NopairError::Eigen(format!("reduced solve: {e}")))?;
    let vectors = x.dot(&y);
    // Spot-check the extremal pair; full per-pair checks live in the complex path.
    let v0 = vectors.column(0).to_owned();
    let res = (h.dot(&v0) - s.dot(&v0).mapv(|z| z * vals[0])).norm_l2();
    let h_norm = h.opnorm_fro().unwrap_or(f64::INFINITY).max(1e-300);
    if res > 1e-8 * h_norm * v0.norm_l2().max(1e-300) {
        return Err(NopairError::Eigen(format!(
            "ground-state residual {res:.3e} out of bounds"
        )));
    }
    Ok((vals.to_vec(), vectors))
}
