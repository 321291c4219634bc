//! Shift-invert block Lanczos for the lowest eigenpairs of a sparse
//! symmetric operator.
//!
//! The matrix is factored once with [`crate::ldl`] and the Krylov recurrence
//! runs on the inverse, so the lowest part of the spectrum converges first
//! and fastest. The basis is kept fully orthonormal (two-pass block
//! Gram-Schmidt every step), the projected matrix is accumulated from the
//! computed coefficients, and converged Ritz vectors are locked at restarts
//! after an explicit residual check against the original matrix. Locked
//! vectors can spill to a scratch file so the active memory stays bounded
//! on large meshes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::PathBuf;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::ldl;
use crate::sparse::SparseHamiltonian;
use crate::tridiag::fix_sign;

const CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Vectors advanced per block step.
    pub block_size: usize,
    /// Cap on the active orthonormal basis, in vectors.
    pub max_basis: usize,
    /// Hard cap on block steps before giving up.
    pub max_block_steps: usize,
    /// Relative residual `|Hz - Ez| / |E|` required of every returned pair.
    pub residual_rtol: f64,
    /// Cheap projected-residual gate that triggers the real check.
    pub prescreen_rtol: f64,
    pub seed: u64,
    /// Directory for the locked-vector scratch file; `None` keeps locked
    /// vectors in memory.
    pub spill_dir: Option<PathBuf>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            block_size: 8,
            max_basis: 360,
            max_block_steps: 1000,
            residual_rtol: 1e-8,
            prescreen_rtol: 1e-9,
            seed: 0x5eed_0101,
            spill_dir: None,
        }
    }
}

pub struct EigenPair {
    pub value: f64,
    /// Verified relative residual of this pair.
    pub residual: f64,
    pub vector: Vec<f64>,
}

/// Dense orthonormal basis stored one vector after another.
struct Basis {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl Basis {
    fn with_capacity(n: usize, cap: usize) -> Self {
        Basis { n, m: 0, data: vec![0.0; n * cap] }
    }

    fn slot(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn append(&mut self, block: &[f64], b: usize) {
        let at = self.m * self.n;
        self.data[at..at + b * self.n].copy_from_slice(&block[..b * self.n]);
        self.m += b;
    }

    /// coef[u*b + l] = <basis_u, block_l>.
    fn dots_into(&self, block: &[f64], b: usize, coef: &mut [f64]) {
        coef[..self.m * b].fill(0.0);
        dots_flat(&self.data[..self.m * self.n], self.n, self.m, block, b, coef);
    }

    /// block_l -= sum_u coef[u*b + l] * basis_u
    fn subtract_into(&self, coef: &[f64], block: &mut [f64], b: usize) {
        subtract_flat(&self.data[..self.m * self.n], self.n, self.m, block, b, coef);
    }

    /// Replace the leading columns with `self * y` where y is m-by-k,
    /// column-major, without a second full-size buffer: gather a node
    /// window across all vectors, multiply, scatter back into the first
    /// k slots of the same window.
    fn compress_in_place(&mut self, y: &DMatrix<f64>, k: usize) {
        let (n, m) = (self.n, self.m);
        assert_eq!(y.nrows(), m);
        assert!(k <= m && y.ncols() >= k);
        let mut gathered = vec![0.0; m * CHUNK];
        let mut mixed = vec![0.0; k * CHUNK];
        let mut c0 = 0;
        while c0 < n {
            let c = (n - c0).min(CHUNK);
            for u in 0..m {
                gathered[u * c..(u + 1) * c].copy_from_slice(&self.data[u * n + c0..u * n + c0 + c]);
            }
            if k >= GEMM_MIN_DIM && m >= GEMM_MIN_DIM && c >= GEMM_MIN_DIM {
                // mixed (k x c) = y^T (k x m) * gathered (m x c)
                let yt = DMatrixView::from_slice_with_strides_generic(
                    y.as_slice(),
                    Dyn(k),
                    Dyn(m),
                    Dyn(m),
                    Dyn(1),
                );
                let g = DMatrixView::from_slice_with_strides_generic(
                    &gathered[..m * c],
                    Dyn(m),
                    Dyn(c),
                    Dyn(c),
                    Dyn(1),
                );
                let mut mx = DMatrixViewMut::from_slice_with_strides_generic(
                    &mut mixed[..k * c],
                    Dyn(k),
                    Dyn(c),
                    Dyn(c),
                    Dyn(1),
                );
                mx.gemm(1.0, &yt, &g, 0.0);
            } else {
                mixed[..k * c].fill(0.0);
                for u in 0..m {
                    let src = &gathered[u * c..(u + 1) * c];
                    for j in 0..k {
                        let w = y[(u, j)];
                        let dst = &mut mixed[j * c..(j + 1) * c];
                        for i in 0..c {
                            dst[i] += w * src[i];
                        }
                    }
                }
            }
            for j in 0..k {
                self.data[j * n + c0..j * n + c0 + c].copy_from_slice(&mixed[j * c..(j + 1) * c]);
            }
            c0 += c;
        }
        self.m = k;
    }

    /// Drop the leading `count` slots, sliding the rest down.
    fn drop_front(&mut self, count: usize) {
        let n = self.n;
        self.data.copy_within(count * n..self.m * n, 0);
        self.m -= count;
    }
}

/// Dimensions below which `nalgebra` would bypass its `matrixmultiply`
/// backend; the chunked scalar path covers those instead.
const GEMM_MIN_DIM: usize = 6;

/// coef[u*b + l] += <basis_u, block_l>. Row-major flat storage on both
/// sides maps onto strided matrix views, so the wide case is a single
/// `coef += basis * block^T` product.
fn dots_flat(basis: &[f64], n: usize, m: usize, block: &[f64], b: usize, coef: &mut [f64]) {
    if m >= GEMM_MIN_DIM && b >= GEMM_MIN_DIM && n >= GEMM_MIN_DIM {
        let a = DMatrixView::from_slice_with_strides_generic(
            &basis[..m * n],
            Dyn(m),
            Dyn(n),
            Dyn(n),
            Dyn(1),
        );
        let kt = DMatrixView::from_slice_with_strides_generic(
            &block[..b * n],
            Dyn(n),
            Dyn(b),
            Dyn(1),
            Dyn(n),
        );
        let mut c = DMatrixViewMut::from_slice_with_strides_generic(
            &mut coef[..m * b],
            Dyn(m),
            Dyn(b),
            Dyn(b),
            Dyn(1),
        );
        c.gemm(1.0, &a, &kt, 1.0);
        return;
    }
    let mut c0 = 0;
    while c0 < n {
        let c1 = (c0 + CHUNK).min(n);
        for u in 0..m {
            let us = &basis[u * n + c0..u * n + c1];
            for l in 0..b {
                let vs = &block[l * n + c0..l * n + c1];
                coef[u * b + l] += dot_lanes(us, vs);
            }
        }
        c0 = c1;
    }
}

/// Dot product over eight independent accumulators. The fixed lane layout
/// breaks the serial-add latency chain while keeping the summation order
/// identical from run to run.
fn dot_lanes(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let mut acc = [0.0f64; 8];
    let mut i = 0;
    while i + 8 <= len {
        for k in 0..8 {
            acc[k] += a[i + k] * b[i + k];
        }
        i += 8;
    }
    let mut tail = 0.0;
    while i < len {
        tail += a[i] * b[i];
        i += 1;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// block_l -= sum_u coef[u*b + l] * basis_u, the rank-m downdate paired
/// with [`dots_flat`]: `block -= coef^T * basis` in the wide case.
fn subtract_flat(basis: &[f64], n: usize, m: usize, block: &mut [f64], b: usize, coef: &[f64]) {
    if m >= GEMM_MIN_DIM && b >= GEMM_MIN_DIM && n >= GEMM_MIN_DIM {
        let a = DMatrixView::from_slice_with_strides_generic(
            &basis[..m * n],
            Dyn(m),
            Dyn(n),
            Dyn(n),
            Dyn(1),
        );
        let ct = DMatrixView::from_slice_with_strides_generic(
            &coef[..m * b],
            Dyn(b),
            Dyn(m),
            Dyn(1),
            Dyn(b),
        );
        let mut k = DMatrixViewMut::from_slice_with_strides_generic(
            &mut block[..b * n],
            Dyn(b),
            Dyn(n),
            Dyn(n),
            Dyn(1),
        );
        k.gemm(-1.0, &ct, &a, 1.0);
        return;
    }
    let mut c0 = 0;
    while c0 < n {
        let c1 = (c0 + CHUNK).min(n);
        for u in 0..m {
            let base = u * n;
            for l in 0..b {
                let w = coef[u * b + l];
                if w == 0.0 {
                    continue;
                }
                let (dst0, dst1) = (l * n + c0, l * n + c1);
                let src = &basis[base + c0..base + c1];
                let dst = &mut block[dst0..dst1];
                for i in 0..src.len() {
                    dst[i] -= w * src[i];
                }
            }
        }
        c0 = c1;
    }
}

/// Converged eigenvectors, either resident or appended to a scratch file.
enum LockedPool {
    Ram(Basis),
    Disk { n: usize, m: usize, file: File, path: PathBuf, buf: Vec<f64> },
}

/// How many locked vectors stream through memory at once in disk mode.
const POOL_STRIDE: usize = 8;

impl LockedPool {
    fn new(n: usize, capacity: usize, spill_dir: Option<&PathBuf>) -> Result<Self> {
        match spill_dir {
            None => Ok(LockedPool::Ram(Basis::with_capacity(n, capacity))),
            Some(dir) => {
                let path = dir.join(format!(
                    "locked-{}-{:x}.bin",
                    std::process::id(),
                    std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_nanos())
                        .unwrap_or(0)
                ));
                let file = File::options()
                    .read(true)
                    .write(true)
                    .create_new(true)
                    .open(&path)?;
                Ok(LockedPool::Disk { n, m: 0, file, path, buf: vec![0.0; n * POOL_STRIDE] })
            }
        }
    }

    fn push(&mut self, vector: &[f64]) -> Result<()> {
        match self {
            LockedPool::Ram(b) => {
                b.append(vector, 1);
                Ok(())
            }
            LockedPool::Disk { file, m, .. } => {
                file.seek(SeekFrom::End(0))?;
                let mut w = BufWriter::new(&mut *file);
                for v in vector {
                    w.write_all(&v.to_le_bytes())?;
                }
                w.flush()?;
                drop(w);
                *m += 1;
                Ok(())
            }
        }
    }

    /// One Gram-Schmidt pass of the block against every locked vector.
    fn project_out(&mut self, block: &mut [f64], b: usize) -> Result<()> {
        match self {
            LockedPool::Ram(basis) => {
                if basis.m == 0 {
                    return Ok(());
                }
                let mut coef = vec![0.0; basis.m * b];
                basis.dots_into(block, b, &mut coef);
                basis.subtract_into(&coef, block, b);
                Ok(())
            }
            LockedPool::Disk { n, m, file, buf, .. } => {
                if *m == 0 {
                    return Ok(());
                }
                file.seek(SeekFrom::Start(0))?;
                let mut r = BufReader::new(&mut *file);
                let mut coef = vec![0.0; POOL_STRIDE * b];
                let mut done = 0;
                while done < *m {
                    let take = (*m - done).min(POOL_STRIDE);
                    read_f64s(&mut r, &mut buf[..take * *n])?;
                    coef[..take * b].fill(0.0);
                    dots_flat(&buf[..take * *n], *n, take, block, b, &mut coef);
                    subtract_flat(&buf[..take * *n], *n, take, block, b, &coef);
                    done += take;
                }
                Ok(())
            }
        }
    }

    fn load_all(&mut self) -> Result<Vec<Vec<f64>>> {
        match self {
            LockedPool::Ram(basis) => {
                let data = std::mem::take(&mut basis.data);
                let out = data[..basis.m * basis.n]
                    .chunks_exact(basis.n)
                    .map(|c| c.to_vec())
                    .collect();
                basis.m = 0;
                Ok(out)
            }
            LockedPool::Disk { n, m, file, path, .. } => {
                file.seek(SeekFrom::Start(0))?;
                let mut r = BufReader::new(&mut *file);
                let mut out = Vec::with_capacity(*m);
                for _ in 0..*m {
                    let mut v = vec![0.0; *n];
                    read_f64s(&mut r, &mut v)?;
                    out.push(v);
                }
                drop(r);
                let _ = std::fs::remove_file(&*path);
                Ok(out)
            }
        }
    }
}

impl Drop for LockedPool {
    fn drop(&mut self) {
        if let LockedPool::Disk { path, .. } = self {
            let _ = std::fs::remove_file(&path);
        }
    }
}

fn read_f64s(r: &mut impl Read, dst: &mut [f64]) -> Result<()> {
    let mut bytes = vec![0u8; dst.len() * 8];
    r.read_exact(&mut bytes)?;
    for (v, c) in dst.iter_mut().zip(bytes.chunks_exact(8)) {
        *v = f64::from_le_bytes(c.try_into().unwrap());
    }
    Ok(())
}

/// Two-pass Gram-Schmidt of `block` against basis and locked set, then
/// within-block orthonormalization. Columns that collapse are replaced by
/// fresh random directions. Returns the upper-triangular factor accumulated
/// over both passes, which bounds the Lanczos residual coupling.
///
/// `presubtracted` skips the initial projection when the caller has already
/// run its own passes against both sets, leaving only the in-block work.
#[allow(clippy::too_many_arguments)]
fn orthonormalize_block(
    block: &mut [f64],
    b: usize,
    n: usize,
    basis: &Basis,
    locked: &mut LockedPool,
    rng: &mut ChaCha12Rng,
    coef_scratch: &mut Vec<f64>,
    r_out: &mut [f64],
    presubtracted: bool,
) -> Result<()> {
    if !presubtracted {
        locked.project_out(block, b)?;
        for _ in 0..2 {
            if basis.m > 0 {
                coef_scratch.clear();
                coef_scratch.resize(basis.m * b, 0.0);
                basis.dots_into(block, b, coef_scratch);
                basis.subtract_into(coef_scratch, block, b);
            }
        }
        locked.project_out(block, b)?;
    }
    r_out.fill(0.0);
    for j in 0..b {
        let mut replacements = 0;
        loop {
            let before: f64 = norm(&block[j * n..(j + 1) * n]);
            for pass in 0..2 {
                for i in 0..j {
                    let (lo, hi) = block.split_at_mut(j * n);
                    let qi = &lo[i * n..(i + 1) * n];
                    let cj = &mut hi[..n];
                    let d = dot_lanes(qi, cj);
                    for t in 0..n {
                        cj[t] -= d * qi[t];
                    }
                    if pass == 0 || replacements == 0 {
                        r_out[i * b + j] += d;
                    }
                }
            }
            let nj = norm(&block[j * n..(j + 1) * n]);
            if nj > 1e-13 * before.max(1.0) && nj.is_finite() {
                let inv = 1.0 / nj;
                for t in &mut block[j * n..(j + 1) * n] {
                    *t *= inv;
                }
                r_out[j * b + j] = nj;
                break;
            }
            if replacements >= 3 {
                // Exhausted space: leave the column zero with a zero
                // diagonal so it contributes nothing to the projection.
                block[j * n..(j + 1) * n].fill(0.0);
                r_out[j * b + j] = 0.0;
                break;
            }
            for t in &mut block[j * n..(j + 1) * n] {
                *t = rng.gen_range(-0.5..0.5);
            }
            let col = &mut block[j * n..(j + 1) * n];
            locked.project_out(col, 1)?;
            if basis.m > 0 {
                coef_scratch.clear();
                coef_scratch.resize(basis.m, 0.0);
                basis.dots_into(col, 1, coef_scratch);
                basis.subtract_into(coef_scratch, col, 1);
            }
            replacements += 1;
        }
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    dot_lanes(v, v).sqrt()
}

fn gershgorin_lower_bound(h: &SparseHamiltonian) -> f64 {
    let mut lo = f64::INFINITY;
    for i in 0..h.dim {
        let mut diag = 0.0;
        let mut off = 0.0;
        for p in h.row_ptr[i]..h.row_ptr[i + 1] {
            if h.col_idx[p] as usize == i {
                diag = h.values[p];
            } else {
                off += h.values[p].abs();
            }
        }
        lo = lo.min(diag - off);
    }
    lo
}

struct RitzState {
    /// Eigenvalues of the projected inverse, largest first (lowest energy
    /// first after mapping back).
    theta: Vec<f64>,
    y: DMatrix<f64>,
    order: Vec<usize>,
    /// Projected residual estimate per ordered pair.
    estimate: Vec<f64>,
}

fn ritz_pairs(t: &[f64], cap: usize, m: usize, b: usize, r_last: &[f64]) -> RitzState {
    let mut tm = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            tm[(i, j)] = t[i * cap + j];
        }
    }
    let eig = tm.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b2| eig.eigenvalues[b2].total_cmp(&eig.eigenvalues[a]));
    let mut theta = Vec::with_capacity(m);
    let mut estimate = Vec::with_capacity(m);
    for &oi in &order {
        theta.push(eig.eigenvalues[oi]);
        let mut s2 = 0.0;
        for row in 0..b {
            let mut acc = 0.0;
            for jcol in row..b {
                if m >= b {
                    acc += r_last[row * b + jcol] * eig.eigenvectors[(m - b + jcol, oi)];
                }
            }
            s2 += acc * acc;
        }
        estimate.push(s2.sqrt());
    }
    RitzState { theta, y: eig.eigenvectors, order, estimate }
}

/// Compute the `count` lowest eigenpairs of `h`, values ascending, vectors
/// unit length with their largest-magnitude entry positive. Every returned
/// pair carries a residual verified against `h` itself.
pub fn lowest_k(h: &SparseHamiltonian, count: usize, opts: &LanczosOptions) -> Result<Vec<EigenPair>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let n = h.dim;
    if count > n {
        return Err(Error::Config(format!(
            "requested {count} eigenpairs of a dimension-{n} operator"
        )));
    }
    let lower = gershgorin_lower_bound(h);
    let sigma = if lower > 0.0 { 0.0 } else { lower - 0.01 * lower.abs() - 1e-9 };
    let factor = ldl::factor(h, sigma, h.solver_permutation())?;

    let b = opts.block_size.min(n).max(1);
    let cap = opts.max_basis.min(n).max(3 * b).min(n);
    let mut basis = Basis::with_capacity(n, cap + b);
    let mut locked = LockedPool::new(n, count + b, opts.spill_dir.as_ref())?;
    let mut locked_values: Vec<f64> = Vec::new();
    let mut locked_residuals: Vec<f64> = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut t = vec![0.0; (cap + b) * (cap + b)];
    let tcap = cap + b;

    let mut block = vec![0.0; b * n];
    let mut applied = vec![0.0; b * n];
    let mut solve_scratch: Vec<f64> = Vec::new();
    let mut coef = vec![0.0; (cap + b) * b];
    let mut r_last = vec![0.0; b * b];
    let mut hz = vec![0.0; n];

    for v in block.iter_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    orthonormalize_block(&mut block, b, n, &basis, &mut locked, &mut rng, &mut coef, &mut r_last, false)?;
    basis.append(&block, b);

    let mut steps_since_restart = 0usize;
    for _step in 0..opts.max_block_steps {
        let m = basis.m;
        // Apply the inverse to the newest block.
        applied[..b * n].copy_from_slice(&basis.data[(m - b) * n..m * n]);
        factor.solve_block(&mut applied[..b * n], b, &mut solve_scratch);
        // Two-pass orthogonalization against the locked set and the active
        // basis; the summed basis coefficients are the new columns of the
        // projected operator.
        let mut tcol = vec![0.0; m * b];
        coef.clear();
        coef.resize(m * b, 0.0);
        for _ in 0..2 {
            locked.project_out(&mut applied[..b * n], b)?;
            basis.dots_into(&applied[..b * n], b, &mut coef);
            basis.subtract_into(&coef[..m * b], &mut applied[..b * n], b);
            for i in 0..m * b {
                tcol[i] += coef[i];
            }
        }
        for u in 0..m {
            for l in 0..b {
                let w = m - b + l;
                t[u * tcap + w] = tcol[u * b + l];
                t[w * tcap + u] = tcol[u * b + l];
            }
        }
        orthonormalize_block(&mut applied[..b * n], b, n, &basis, &mut locked, &mut rng, &mut coef, &mut r_last, true)?;
        steps_since_restart += 1;

        let remaining = count - locked_values.len();
        let ritz = ritz_pairs(&t, tcap, m, b, &r_last);
        let mut prefix = 0;
        for i in 0..m.min(remaining) {
            let scale = ritz.theta[i].abs().max(f64::MIN_POSITIVE);
            if ritz.estimate[i] <= opts.prescreen_rtol * scale {
                prefix += 1;
            } else {
                break;
            }
        }
        let full = m + b > cap;
        let want_harvest = prefix >= remaining && steps_since_restart >= 2;
        if full || want_harvest || m >= n {
            // Harvest: lock verified pairs from the bottom of the window,
            // keep a compressed window of the rest, and continue from the
            // current residual block.
            let lock_gate = 0.3 * opts.residual_rtol;
            let keep = (remaining.saturating_sub(prefix) + b)
                .max(b)
                .max(cap / 2)
                .min(cap.saturating_sub(2 * b))
                .min(m - prefix.min(m));
            let selected = (prefix + keep).min(m);
            let mut ysel = DMatrix::zeros(m, selected);
            for (jout, &oi) in ritz.order.iter().take(selected).enumerate() {
                for u in 0..m {
                    ysel[(u, jout)] = ritz.y[(u, oi)];
                }
            }
            basis.compress_in_place(&ysel, selected);
            let mut locked_now = 0;
            for i in 0..prefix {
                let lambda = sigma + 1.0 / ritz.theta[i];
                let z = basis.slot(i);
                h.matvec(z, &mut hz);
                let mut r2 = 0.0;
                for idx in 0..n {
                    let d = hz[idx] - lambda * z[idx];
                    r2 += d * d;
                }
                let rel = r2.sqrt() / lambda.abs().max(f64::MIN_POSITIVE);
                if rel <= lock_gate {
                    locked.push(z)?;
                    locked_values.push(lambda);
                    locked_residuals.push(rel);
                    locked_now += 1;
                } else {
                    break;
                }
            }
            basis.drop_front(locked_now);
            t.fill(0.0);
            for i in 0..basis.m {
                t[i * tcap + i] = ritz.theta[locked_now + i];
            }
            if locked_values.len() >= count {
                break;
            }
            orthonormalize_block(&mut applied[..b * n], b, n, &basis, &mut locked, &mut rng, &mut coef, &mut r_last, false)?;
            basis.append(&applied[..b * n], b);
            steps_since_restart = 0;
        } else {
            basis.append(&applied[..b * n], b);
        }
    }

    if locked_values.len() < count {
        let best = locked_values.len();
        return Err(Error::Solver(format!(
            "eigensolver converged {best} of {count} requested pairs within {} block steps",
            opts.max_block_steps
        )));
    }

    drop(factor);
    drop(basis);
    let vectors = locked.load_all()?;
    let mut pairs: Vec<EigenPair> = vectors
        .into_iter()
        .zip(locked_values)
        .zip(locked_residuals)
        .map(|((mut vector, value), residual)| {
            fix_sign(&mut vector);
            EigenPair { value, residual, vector }
        })
        .collect();
    pairs.sort_by(|a, b2| a.value.total_cmp(&b2.value));
    pairs.truncate(count);

    // The joint set must be orthonormal; pairwise drift would silently
    // corrupt every downstream projection.
    let k = pairs.len();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in i..k {
            let g = dot_lanes(&pairs[i].vector, &pairs[j].vector);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    if worst > 1e-10 / 3.0 {
        return Err(Error::Solver(format!(
            "converged basis lost orthonormality: max Gram deviation {worst:.3e}"
        )));
    }
    Ok(pairs)
}
