//! Simplicial LDLᵀ factorization of symmetric sparse matrices.
//!
//! Up-looking algorithm over the elimination tree: symbolic pass counts the
//! exact fill per column, the numeric pass computes one row of L at a time
//! with a sparse triangular solve. No pivoting: the Hamiltonians factored
//! here are positive definite at shift 0, and shifted factorizations are
//! used only for inertia counts where a clean pivot sequence is generic.
//!
//! Solves run on blocks of right-hand sides in node-major lanes so one
//! traversal of L serves the whole block.

use crate::error::{Error, Result};
use crate::order::invert;
use crate::sparse::SparseHamiltonian;

const NONE: u32 = u32::MAX;

pub struct LdlFactor {
    pub n: usize,
    /// perm[new] = old index; the factorization is of P(A − shift)Pᵀ.
    pub perm: Vec<u32>,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<u32>,
    pub values: Vec<f64>,
    /// Pivots of the diagonal matrix D.
    pub d: Vec<f64>,
    pub shift: f64,
}

/// Factor P(H − shift·I)Pᵀ = LDLᵀ.
pub fn factor(h: &SparseHamiltonian, shift: f64, perm: Vec<u32>) -> Result<LdlFactor> {
    let n = h.dim;
    if perm.len() != n {
        return Err(Error::Config(format!(
            "permutation length {} for a dimension-{n} matrix",
            perm.len()
        )));
    }
    let inv = invert(&perm);

    // Permuted upper-triangular pattern, CSC: column k holds entries (j, k)
    // with j <= k. Built from the full CSR by keeping neighbors that come
    // earlier in the elimination order.
    let mut up_count = vec![0usize; n];
    for k in 0..n {
        let o = perm[k] as usize;
        for p in h.row_ptr[o]..h.row_ptr[o + 1] {
            if (inv[h.col_idx[p] as usize] as usize) <= k {
                up_count[k] += 1;
            }
        }
    }
    let mut up_ptr = vec![0usize; n + 1];
    for k in 0..n {
        up_ptr[k + 1] = up_ptr[k] + up_count[k];
    }
    let mut up_row = vec![0u32; up_ptr[n]];
    let mut up_val = vec![0.0f64; up_ptr[n]];
    {
        let mut cursor = up_ptr.clone();
        for k in 0..n {
            let o = perm[k] as usize;
            for p in h.row_ptr[o]..h.row_ptr[o + 1] {
                let j = inv[h.col_idx[p] as usize] as usize;
                if j <= k {
                    let slot = cursor[k];
                    up_row[slot] = j as u32;
                    up_val[slot] = if j == k { h.values[p] - shift } else { h.values[p] };
                    cursor[k] += 1;
                }
            }
        }
    }

    // Symbolic: elimination tree and per-column fill counts.
    let mut parent = vec![NONE; n];
    let mut flag = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        flag[k] = k as u32;
        for p in up_ptr[k]..up_ptr[k + 1] {
            let mut i = up_row[p] as usize;
            if i >= k {
                continue;
            }
            while flag[i] != k as u32 {
                if parent[i] == NONE {
                    parent[i] = k as u32;
                }
                lnz[i] += 1;
                flag[i] = k as u32;
                i = parent[i] as usize;
            }
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    for k in 0..n {
        col_ptr[k + 1] = col_ptr[k] + lnz[k];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0u32; nnz];
    let mut values = vec![0.0f64; nnz];
    let mut d = vec![0.0f64; n];

    // Numeric: for each row k solve L(0..k, 0..k) against the scattered
    // upper column, walking the pattern in elimination-tree order.
    let mut y = vec![0.0f64; n];
    let mut pattern = vec![0u32; n];
    let mut stack = vec![0u32; n];
    let mut next = col_ptr.clone();
    flag.fill(NONE);
    for k in 0..n {
        let mut top = n;
        flag[k] = k as u32;
        for p in up_ptr[k]..up_ptr[k + 1] {
            let entry = up_row[p] as usize;
            y[entry] += up_val[p];
            let mut i = entry;
            let mut len = 0usize;
            while flag[i] != k as u32 {
                stack[len] = i as u32;
                len += 1;
                flag[i] = k as u32;
                i = parent[i] as usize;
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = stack[len];
            }
        }
        d[k] = y[k];
        y[k] = 0.0;
        for t in top..n {
            let i = pattern[t] as usize;
            let yi = y[i];
            y[i] = 0.0;
            for p in col_ptr[i]..next[i] {
                y[row_idx[p] as usize] -= values[p] * yi;
            }
            let lki = yi / d[i];
            d[k] -= lki * yi;
            row_idx[next[i]] = k as u32;
            values[next[i]] = lki;
            next[i] += 1;
        }
        if d[k] == 0.0 {
            return Err(Error::Solver(format!(
                "zero pivot at elimination step {k} (shift {shift})"
            )));
        }
    }
    Ok(LdlFactor { n, perm, col_ptr, row_idx, values, d, shift })
}

impl LdlFactor {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Signs of the pivots: (negative, zero, positive). By Sylvester's law
    /// the negative count equals the number of eigenvalues below the shift.
    pub fn inertia(&self) -> (usize, usize, usize) {
        let neg = self.d.iter().filter(|&&v| v < 0.0).count();
        let zero = self.d.iter().filter(|&&v| v == 0.0).count();
        (neg, zero, self.n - neg - zero)
    }

    /// Solve (H − shift)X = B for a block of vectors stored back to back
    /// (vector l occupies `vecs[l*n .. (l+1)*n]`), in place. `scratch` is
    /// resized as needed and may be reused across calls.
    pub fn solve_block(&self, vecs: &mut [f64], r: usize, scratch: &mut Vec<f64>) {
        let n = self.n;
        assert_eq!(vecs.len(), r * n);
        scratch.clear();
        scratch.resize(n * r, 0.0);
        let work = scratch.as_mut_slice();
        for k in 0..n {
            let o = self.perm[k] as usize;
            for l in 0..r {
                work[k * r + l] = vecs[l * n + o];
            }
        }
        // Forward: L z = Pb. Row targets always lie past the current lane.
        for k in 0..n {
            let (head, tail) = work.split_at_mut((k + 1) * r);
            let lane = &head[k * r..];
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let i = self.row_idx[p] as usize;
                let v = self.values[p];
                let dst = &mut tail[(i - k - 1) * r..(i - k) * r];
                for l in 0..r {
                    dst[l] -= v * lane[l];
                }
            }
        }
        for k in 0..n {
            let dk = self.d[k];
            for l in 0..r {
                work[k * r + l] /= dk;
            }
        }
        // Backward: Lᵀ x = w, reading lanes below the current one.
        for k in (0..n).rev() {
            let (head, tail) = work.split_at_mut((k + 1) * r);
            let lane = &mut head[k * r..];
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let i = self.row_idx[p] as usize;
                let v = self.values[p];
                let src = &tail[(i - k - 1) * r..(i - k) * r];
                for l in 0..r {
                    lane[l] -= v * src[l];
                }
            }
        }
        for k in 0..n {
            let o = self.perm[k] as usize;
            for l in 0..r {
                vecs[l * n + o] = work[k * r + l];
            }
        }
    }

    /// Single right-hand-side convenience wrapper.
    pub fn solve(&self, vec: &mut [f64], scratch: &mut Vec<f64>) {
        self.solve_block(vec, 1, scratch);
    }
}
