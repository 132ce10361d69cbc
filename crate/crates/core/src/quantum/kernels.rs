//! In-place gate and channel kernels over flat row-major buffers.
//!
//! Qubit 0 is the most significant bit of a basis index, so qubit `t` of an
//! `n`-qubit register owns the bit mask `1 << (n - 1 - t)`.

use num_complex::Complex64 as C64;

#[inline]
pub(crate) fn qubit_mask(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

/// Offsets of every sub-basis element of a `k`-qubit gate, with the first
/// target as the most significant bit of the gate's local index.
pub(crate) fn local_offsets(num_qubits: usize, targets: &[usize]) -> (Vec<usize>, usize) {
    let k = targets.len();
    let masks: Vec<usize> = targets.iter().map(|&t| qubit_mask(num_qubits, t)).collect();
    let all = masks.iter().fold(0, |acc, m| acc | m);
    let offsets = (0..1usize << k)
        .map(|s| {
            masks
                .iter()
                .enumerate()
                .filter(|(r, _)| s & (1 << (k - 1 - r)) != 0)
                .fold(0, |acc, (_, m)| acc | m)
        })
        .collect();
    (offsets, all)
}

/// Applies a `2^k x 2^k` row-major operator to the vector living at
/// `data[start + idx * stride]`. With `conjugate` set the operator's entries
/// are conjugated first, which turns a row pass into right multiplication by
/// the adjoint.
pub(crate) fn apply_strided(
    data: &mut [C64],
    num_qubits: usize,
    targets: &[usize],
    op: &[C64],
    start: usize,
    stride: usize,
    conjugate: bool,
) {
    let dim = 1usize << num_qubits;
    let (offsets, all) = local_offsets(num_qubits, targets);
    let local = offsets.len();
    let mut gathered = vec![C64::new(0.0, 0.0); local];
    for base in (0..dim).filter(|i| i & all == 0) {
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = data[start + (base | off) * stride];
        }
        for (a, off) in offsets.iter().enumerate() {
            let row = &op[a * local..(a + 1) * local];
            let mut acc = C64::new(0.0, 0.0);
            for (u, g) in row.iter().zip(&gathered) {
                acc += if conjugate { u.conj() * g } else { u * g };
            }
            data[start + (base | off) * stride] = acc;
        }
    }
}

/// `psi <- U psi` for a single-qubit `U`.
pub(crate) fn vec_apply_1q(psi: &mut [C64], num_qubits: usize, qubit: usize, u: &[C64; 4]) {
    let m = qubit_mask(num_qubits, qubit);
    for i in (0..psi.len()).filter(|i| i & m == 0) {
        let a = psi[i];
        let b = psi[i | m];
        psi[i] = u[0] * a + u[1] * b;
        psi[i | m] = u[2] * a + u[3] * b;
    }
}

/// `rho <- U rho U^dagger` for a single-qubit `U`.
pub(crate) fn dm_apply_1q(rho: &mut [C64], num_qubits: usize, qubit: usize, u: &[C64; 4]) {
    let dim = 1usize << num_qubits;
    let m = qubit_mask(num_qubits, qubit);
    // left: rows i and i|m mix
    for i in (0..dim).filter(|i| i & m == 0) {
        let (lo, hi) = rho.split_at_mut((i | m) * dim);
        let r0 = &mut lo[i * dim..(i + 1) * dim];
        let r1 = &mut hi[..dim];
        for (a, b) in r0.iter_mut().zip(r1.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = u[0] * x + u[1] * y;
            *b = u[2] * x + u[3] * y;
        }
    }
    // right: columns j and j|m mix with conj(U)
    let cu = [u[0].conj(), u[1].conj(), u[2].conj(), u[3].conj()];
    for row in rho.chunks_exact_mut(dim) {
        for j in (0..dim).filter(|j| j & m == 0) {
            let x = row[j];
            let y = row[j | m];
            row[j] = x * cu[0] + y * cu[1];
            row[j | m] = x * cu[2] + y * cu[3];
        }
    }
}

/// `D rho D^dagger` for `D = diag(d0, d1)` on one qubit.
pub(crate) fn dm_apply_diag_1q(rho: &mut [C64], num_qubits: usize, qubit: usize, d0: C64, d1: C64) {
    let dim = 1usize << num_qubits;
    let m = qubit_mask(num_qubits, qubit);
    let phase = |i: usize| if i & m == 0 { d0 } else { d1 };
    let cols: Vec<C64> = (0..dim).map(|j| phase(j).conj()).collect();
    for (i, row) in rho.chunks_exact_mut(dim).enumerate() {
        let di = phase(i);
        for (x, cj) in row.iter_mut().zip(&cols) {
            *x *= di * cj;
        }
    }
}

/// `Re Tr(a b)` for Hermitian `a` and `b`, which equals `sum a_ij conj(b_ij)`.
pub(crate) fn hermitian_trace_product(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

#[inline]
fn cnot_perm(i: usize, control_mask: usize, target_mask: usize) -> usize {
    if i & control_mask != 0 {
        i ^ target_mask
    } else {
        i
    }
}

pub(crate) fn vec_apply_cnot(psi: &mut [C64], num_qubits: usize, control: usize, target: usize) {
    let c = qubit_mask(num_qubits, control);
    let t = qubit_mask(num_qubits, target);
    for i in 0..psi.len() {
        if i & c != 0 && i & t == 0 {
            psi.swap(i, i | t);
        }
    }
}

/// CNOT conjugation is a simultaneous row and column permutation.
pub(crate) fn dm_apply_cnot(rho: &mut [C64], num_qubits: usize, control: usize, target: usize) {
    let dim = 1usize << num_qubits;
    let c = qubit_mask(num_qubits, control);
    let t = qubit_mask(num_qubits, target);
    for i in 0..dim {
        let pi = cnot_perm(i, c, t);
        if pi > i {
            let (lo, hi) = rho.split_at_mut(pi * dim);
            lo[i * dim..(i + 1) * dim].swap_with_slice(&mut hi[..dim]);
        }
    }
    for row in rho.chunks_exact_mut(dim) {
        for j in 0..dim {
            if j & c != 0 && j & t == 0 {
                row.swap(j, j | t);
            }
        }
    }
}

/// Liouville form of a single-qubit Kraus set acting on the block
/// `[B00, B01, B10, B11]`: `S[(a,b),(c,d)] = sum_K K[a][c] * conj(K[b][d])`.
pub(crate) fn superoperator_1q(kraus: &[Vec<C64>]) -> [C64; 16] {
    let mut s = [C64::new(0.0, 0.0); 16];
    for k in kraus {
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        s[(a * 2 + b) * 4 + c * 2 + d] += k[a * 2 + c] * k[b * 2 + d].conj();
                    }
                }
            }
        }
    }
    s
}

/// Applies a single-qubit channel in Liouville form to qubit `qubit` of `rho`.
pub(crate) fn dm_apply_superop_1q(rho: &mut [C64], num_qubits: usize, qubit: usize, s: &[C64; 16]) {
    let dim = 1usize << num_qubits;
    let m = qubit_mask(num_qubits, qubit);
    for i in (0..dim).filter(|i| i & m == 0) {
        let i1 = i | m;
        for j in (0..dim).filter(|j| j & m == 0) {
            let j1 = j | m;
            let v = [
                rho[i * dim + j],
                rho[i * dim + j1],
                rho[i1 * dim + j],
                rho[i1 * dim + j1],
            ];
            let mut out = [C64::new(0.0, 0.0); 4];
            for (r, o) in out.iter_mut().enumerate() {
                let row = &s[r * 4..r * 4 + 4];
                *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
            rho[i * dim + j] = out[0];
            rho[i * dim + j1] = out[1];
            rho[i1 * dim + j] = out[2];
            rho[i1 * dim + j1] = out[3];
        }
    }
}

/// `Tr(a b)` for square row-major matrices of equal size.
pub(crate) fn trace_product(a: &[C64], b: &[C64], dim: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            acc += a[i * dim + j] * b[j * dim + i];
        }
    }
    acc
}

/// Dense `a * b` for square row-major matrices.
pub(crate) fn matmul(a: &[C64], b: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

pub(crate) fn adjoint(a: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = a[i * dim + j].conj();
        }
    }
    out
}
