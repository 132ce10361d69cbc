use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{kernels, DensityMatrix, StateVector};
use crate::error::{invalid, Result};

/// Purity above which a state takes the `Tr(a b)` path.
const PURE_TOL: f64 = 1e-12;
/// Eigenvalues below this are treated as exact zeros of the spectrum.
const RANK_TOL: f64 = 1e-13;

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(invalid(format!("fidelity between {a}- and {b}-qubit states")));
    }
    Ok(())
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`.
///
/// When either argument is pure the result is `Tr(a b)`, which equals
/// `<psi|b|psi>` for `a = |psi><psi|`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims(a.num_qubits(), b.num_qubits())?;
    if a.purity() > 1.0 - PURE_TOL || b.purity() > 1.0 - PURE_TOL {
        let f = kernels::trace_product(a.elements(), b.elements(), a.dim()).re;
        return Ok(f.clamp(0.0, 1.0));
    }
    fidelity_general(a, b)
}

/// `<psi| b |psi>`
pub fn fidelity_pure(psi: &StateVector, b: &DensityMatrix) -> Result<f64> {
    check_dims(psi.num_qubits(), b.num_qubits())?;
    Ok(expectation(psi.amplitudes(), b.elements(), b.dim()).re.clamp(0.0, 1.0))
}

fn expectation(psi: &[C64], m: &[C64], dim: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        let row = &m[i * dim..(i + 1) * dim];
        let mut inner = C64::new(0.0, 0.0);
        for (mij, pj) in row.iter().zip(psi) {
            inner += mij * pj;
        }
        acc += psi[i].conj() * inner;
    }
    acc
}

/// Eigenvalue route that never takes the pure-state shortcut.
///
/// Each argument is factored as `V V^dagger` from its eigendecomposition
/// (dropping numerically zero eigenvalues); the nonzero spectrum of
/// `sqrt(a) b sqrt(a)` equals that of `V^dagger b V` for the lower-rank side.
pub fn fidelity_general(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims(a.num_qubits(), b.num_qubits())?;
    let fa = factor(a);
    let fb = factor(b);
    let (v, other) = if fa.ncols() <= fb.ncols() { (fa, b) } else { (fb, a) };
    Ok(spectral_fidelity(&v, &other.to_matrix()))
}

/// Fidelity of `a = sum_i w_i |psi_i><psi_i|` (weights need not come from an
/// orthogonal decomposition) against `b`.
pub fn fidelity_ensemble(components: &[(f64, &StateVector)], b: &DensityMatrix) -> Result<f64> {
    let dim = b.dim();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(components.len());
    for (w, psi) in components {
        check_dims(psi.num_qubits(), b.num_qubits())?;
        if *w < 0.0 || !w.is_finite() {
            return Err(invalid(format!("ensemble weight {w} is negative")));
        }
        if *w > 0.0 {
            let s = w.sqrt();
            cols.push(psi.amplitudes().iter().map(|x| x * s).collect());
        }
    }
    match cols.len() {
        0 => Err(invalid("empty ensemble")),
        1 => Ok(expectation(&cols[0], b.elements(), dim).re.clamp(0.0, 1.0)),
        2 => {
            let m = b.elements();
            let k00 = expectation(&cols[0], m, dim).re;
            let k11 = expectation(&cols[1], m, dim).re;
            let k01 = bilinear(&cols[0], m, &cols[1], dim);
            let mean = 0.5 * (k00 + k11);
            let radius = (0.25 * (k00 - k11).powi(2) + k01.norm_sqr()).sqrt();
            let f = clamp_root(mean + radius) + clamp_root(mean - radius);
            Ok((f * f).clamp(0.0, 1.0))
        }
        r => {
            let v = DMatrix::from_fn(dim, r, |i, j| cols[j][i]);
            Ok(spectral_fidelity(&v, &b.to_matrix()))
        }
    }
}

/// `<x| m |y>`
fn bilinear(x: &[C64], m: &[C64], y: &[C64], dim: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        let row = &m[i * dim..(i + 1) * dim];
        let mut inner = C64::new(0.0, 0.0);
        for (mij, yj) in row.iter().zip(y) {
            inner += mij * yj;
        }
        acc += x[i].conj() * inner;
    }
    acc
}

fn clamp_root(x: f64) -> f64 {
    if x > RANK_TOL {
        x.sqrt()
    } else {
        0.0
    }
}

/// Columns `sqrt(lambda_i) u_i` for the numerically nonzero spectrum.
fn factor(rho: &DensityMatrix) -> DMatrix<C64> {
    let m = rho.to_matrix();
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > RANK_TOL)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| {
        eig.eigenvectors[(i, keep[j])] * eig.eigenvalues[keep[j]].sqrt()
    })
}

fn spectral_fidelity(v: &DMatrix<C64>, other: &DMatrix<C64>) -> f64 {
    if v.ncols() == 0 {
        return 0.0;
    }
    let k = v.adjoint() * other * v;
    let herm = (&k + k.adjoint()) * C64::new(0.5, 0.0);
    let root: f64 = herm.symmetric_eigenvalues().iter().map(|&mu| clamp_root(mu)).sum();
    (root * root).clamp(0.0, 1.0)
}
