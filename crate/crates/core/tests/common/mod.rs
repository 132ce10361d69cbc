#![allow(dead_code)]

use qris_core::quantum::{DensityMatrix, StateVector, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random pure state.
pub fn random_state<R: Rng>(rng: &mut R, num_qubits: usize) -> StateVector {
    let v: Vec<C64> = (0..1usize << num_qubits).map(|_| gaussian_c64(rng)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    StateVector::new(v.into_iter().map(|x| x / norm).collect()).unwrap()
}

/// `A A^dagger / Tr` for a complex Gaussian `A` of the given column rank.
pub fn random_density<R: Rng>(rng: &mut R, num_qubits: usize, rank: usize) -> DensityMatrix {
    let dim = 1usize << num_qubits;
    let a: Vec<C64> = (0..dim * rank).map(|_| gaussian_c64(rng)).collect();
    let mut m = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..rank {
                acc += a[i * rank + k] * a[j * rank + k].conj();
            }
            m[i * dim + j] = acc;
        }
    }
    let tr: f64 = (0..dim).map(|i| m[i * dim + i].re).sum();
    for x in m.iter_mut() {
        *x /= tr;
    }
    for i in 0..dim {
        for j in 0..i {
            let avg = (m[i * dim + j] + m[j * dim + i].conj()) * 0.5;
            m[i * dim + j] = avg;
            m[j * dim + i] = avg.conj();
        }
        m[i * dim + i] = C64::new(m[i * dim + i].re, 0.0);
    }
    DensityMatrix::new(num_qubits, m).unwrap()
}

/// Row-major dense product.
pub fn matmul(a: &[C64], b: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

pub fn adjoint(a: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = a[i * dim + j].conj();
        }
    }
    out
}

/// `U rho U^dagger` by dense products.
pub fn conjugate(u: &[C64], rho: &[C64], dim: usize) -> Vec<C64> {
    matmul(&matmul(u, rho, dim), &adjoint(u, dim), dim)
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
