//! Compressed-row matrices and the symmetric positive definite solvers used
//! for mass, implicit-system and eigenvalue computations.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};

/// Coordinate-format accumulator. Duplicates are summed on conversion.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    /// Scatter a dense row-major local matrix; `None` entries are eliminated dofs.
    pub fn add_local(&mut self, dofs: &[Option<usize>], local: &[f64]) {
        let n = dofs.len();
        debug_assert_eq!(local.len(), n * n);
        for (a, ga) in dofs.iter().enumerate() {
            let Some(ga) = *ga else { continue };
            for (b, gb) in dofs.iter().enumerate() {
                let Some(gb) = *gb else { continue };
                let v = local[a * n + b];
                if v != 0.0 {
                    self.push(ga, gb, v);
                }
            }
        }
    }

    pub fn build(self) -> SparseMatrix {
        let TripletBuilder { nrows, ncols, rows, cols, vals } = self;
        let mut counts = vec![0usize; nrows + 1];
        for &r in &rows {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); rows.len()];
        for ((&r, &c), &v) in rows.iter().zip(&cols).zip(&vals) {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len());
        indptr.push(0);
        for i in 0..nrows {
            let row = &mut bucket[counts[i]..counts[i + 1]];
            // Stable sort keeps the summation order of duplicates deterministic.
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(c);
                data.push(s);
            }
            indptr.push(indices.len());
        }
        SparseMatrix { nrows, ncols, indptr, indices, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SparseMatrix {
            nrows: d.len(),
            ncols: d.len(),
            indptr: (0..=d.len()).collect(),
            indices: (0..d.len()).collect(),
            data: d.to_vec(),
        }
    }

    /// Keeps exact zeros out of the pattern.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut b = TripletBuilder::new(rows.len(), ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        let mut y = vec![0.0; self.nrows];
        self.mul_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.indptr[i]..self.indptr[i + 1];
            let mut s = 0.0;
            for (&j, &v) in self.indices[r.clone()].iter().zip(&self.data[r]) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_into(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            let mut r = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                r += v * y[j];
            }
            s += xi * r;
        }
        s
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(j, i, v);
            }
        }
        b.build()
    }

    /// `max |A - A^T|`.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        self.lin_comb(1.0, &t, -1.0).max_abs()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.nrows == self.ncols && self.symmetry_defect() <= rel_tol * self.max_abs()
    }

    /// `alpha * self + beta * other`; patterns are merged.
    pub fn lin_comb(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "lin_comb shape mismatch");
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut data = Vec::with_capacity(indices.capacity());
        indptr.push(0);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                let mut v = 0.0;
                let col;
                if take_a && take_b {
                    col = ca[p];
                    v += alpha * va[p] + beta * vb[q];
                    p += 1;
                    q += 1;
                } else if take_a {
                    col = ca[p];
                    v += alpha * va[p];
                    p += 1;
                } else {
                    col = cb[q];
                    v += beta * vb[q];
                    q += 1;
                }
                indices.push(col);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, data }
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// `D A D` for a diagonal `D`.
    pub fn diag_scaled(&self, d: &[f64]) -> SparseMatrix {
        let mut m = self.clone();
        for i in 0..m.nrows {
            for k in m.indptr[i]..m.indptr[i + 1] {
                m.data[k] *= d[i] * d[m.indices[k]];
            }
        }
        m
    }

    /// Coordinate text dump: one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    ConjugateGradient,
    SparseCholesky,
}

impl SolverMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverMethod::ConjugateGradient => "cg",
            SolverMethod::SparseCholesky => "cholesky",
        }
    }
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" | "conjugate-gradient" => Ok(SolverMethod::ConjugateGradient),
            "cholesky" | "sparse-cholesky" => Ok(SolverMethod::SparseCholesky),
            _ => Err(Error::Config(format!("unknown solver `{s}` (expected cg or cholesky)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: SolverMethod::ConjugateGradient, tol: 1e-12, max_iter: 20_000 }
    }
}

impl SolverConfig {
    pub fn cholesky() -> Self {
        SolverConfig { method: SolverMethod::SparseCholesky, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// A solver bound to one SPD matrix. Cholesky factors are computed once.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    label: String,
    cfg: SolverConfig,
    matrix: SparseMatrix,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Cg { inv_diag: Vec<f64> },
    Cholesky(EnvelopeCholesky),
}

impl SpdSolver {
    pub fn new(matrix: SparseMatrix, cfg: SolverConfig, label: &str) -> Result<Self> {
        cfg.validate()?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let inner = match cfg.method {
            SolverMethod::ConjugateGradient => {
                let d = matrix.diagonal();
                if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
                    return Err(Error::NotPositiveDefinite {
                        matrix: label.to_string(),
                        detail: format!("diagonal entry {i} is {}", d[i]),
                    });
                }
                Inner::Cg { inv_diag: d.iter().map(|v| 1.0 / v).collect() }
            }
            SolverMethod::SparseCholesky => Inner::Cholesky(EnvelopeCholesky::factor(&matrix, label)?),
        };
        Ok(SpdSolver { label: label.to_string(), cfg, matrix, inner })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_guess(b, None)
    }

    pub fn solve_with_guess(&self, b: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        match &self.inner {
            Inner::Cg { inv_diag } => {
                pcg(&self.matrix, inv_diag, b, guess, self.cfg.tol, self.cfg.max_iter, &self.label).map(|(x, _)| x)
            }
            Inner::Cholesky(f) => Ok(f.solve(b)),
        }
    }
}

/// Solve `A x = b` for SPD `A` to `||Ax - b|| <= tol ||b||`.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    SpdSolver::new(a.clone(), *cfg, "system")?.solve(b)
}

/// Jacobi-preconditioned conjugate gradients. Returns the solution and the
/// iteration count.
pub fn pcg(
    a: &SparseMatrix,
    inv_diag: &[f64],
    b: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    label: &str,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = guess.map_or_else(|| vec![0.0; n], |g| g.to_vec());
    let mut r = b.to_vec();
    if guess.is_some() {
        let ax = a.mul(&x);
        r.iter_mut().zip(&ax).for_each(|(ri, axi)| *ri -= axi);
    }
    let target = tol * bnorm;
    let mut rnorm = norm(&r);
    if rnorm <= target {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite {
                matrix: label.to_string(),
                detail: format!("CG breakdown p^T A p = {pap:e} at iteration {it}"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm(&r);
        if rnorm <= target {
            // Guard against drift of the recursive residual.
            let ax = a.mul(&x);
            let true_r: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
            if true_r <= target {
                return Ok((x, it));
            }
            r.iter_mut().zip(b.iter().zip(&ax)).for_each(|(ri, (bi, ai))| *ri = bi - ai);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        method: "conjugate gradient",
        matrix: label.to_string(),
        iterations: max_iter,
        residual: rnorm / bnorm,
    })
}

/// Envelope (profile) Cholesky factorization under a reverse Cuthill-McKee
/// ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseMatrix, label: &str) -> Result<Self> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, &i) in inv.iter().enumerate() {
            for &c in a.row(old).0 {
                let j = inv[c];
                if j < i {
                    first[i] = first[i].min(j);
                } else if i < j {
                    first[j] = first[j].min(i);
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + i - first[i] + 1);
        }
        let mut values = vec![0.0; offsets[n]];
        for (old, &i) in inv.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    values[offsets[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(offsets[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = &done[offsets[j]..offsets[j + 1]];
                let s = dot(&row_i[start - fi..j - fi], &row_j[start - fj..j - fj]);
                let ljj = row_j[j - fj];
                row_i[j - fi] = (row_i[j - fi] - s) / ljj;
            }
            let off = &row_i[..i - fi];
            let d = row_i[i - fi] - dot(off, off);
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    matrix: label.to_string(),
                    detail: format!("non-positive pivot {d:e} at row {}", perm[i]),
                });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky { perm, first, offsets, values })
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let s = dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, lik) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= lik * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering of the (assumed symmetric) pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &SparseMatrix, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.nrows()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].unwrap();
        for &w in a.row(v).0 {
            if level[w].is_none() {
                level[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(a: &SparseMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(a, start);
        let max_l = levels.iter().flatten().copied().max().unwrap_or(0);
        if max_l <= ecc && ecc > 0 {
            break;
        }
        ecc = max_l;
        let candidate =
            (0..a.nrows()).filter(|&v| levels[v] == Some(max_l)).min_by_key(|&v| (degree[v], v)).unwrap_or(start);
        if candidate == start {
            break;
        }
        start = candidate;
    }
    start
}

/// Largest eigenvalue of `M^{-1} A` by power iteration, `A` symmetric
/// positive semidefinite and `M` SPD. Each iteration performs one solve with `M`.
pub fn lambda_max_generalized(a: &SparseMatrix, m: &SparseMatrix, tol: f64, cfg: &SolverConfig) -> Result<f64> {
    let n = a.nrows();
    if m.nrows() != n || a.ncols() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let solver = SpdSolver::new(m.clone(), SolverConfig { tol: cfg.tol.min(1e-13), ..*cfg }, "mass")?;
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut x: Vec<f64> = (0..n).map(|_| splitmix(&mut state) - 0.5).collect();
    let mnorm = m.bilinear(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= mnorm);

    const MAX_ITER: usize = 200_000;
    let mut lambda = 0.0;
    let mut prev_delta = f64::NAN;
    for it in 0..MAX_ITER {
        let ax = a.mul(&x);
        let next = a_rayleigh(&x, &ax, m);
        if next == 0.0 && it > 0 {
            return Ok(0.0);
        }
        let delta = (next - lambda).abs();
        // Geometric extrapolation of the remaining error when the increments contract.
        let q = delta / prev_delta;
        let est = if q.is_finite() && q > 0.0 && q < 1.0 { delta * q / (1.0 - q) } else { delta };
        lambda = next;
        if it >= 3 && est.max(delta) <= tol * lambda.abs() {
            return Ok(lambda);
        }
        prev_delta = delta;
        let mut y = solver.solve(&ax)?;
        let ny = m.bilinear(&y, &y).sqrt();
        if ny == 0.0 {
            return Ok(0.0);
        }
        y.iter_mut().for_each(|v| *v /= ny);
        x = y;
    }
    Err(Error::NotConverged {
        method: "power iteration",
        matrix: "generalized eigenproblem".into(),
        iterations: MAX_ITER,
        residual: f64::NAN,
    })
}

fn a_rayleigh(x: &[f64], ax: &[f64], m: &SparseMatrix) -> f64 {
    dot(x, ax) / m.bilinear(x, x)
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
        // Sparse B^T B + shift with a banded random pattern.
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 1.0 + rng.gen::<f64>());
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                let v = rng.gen::<f64>() - 0.5;
                b.push(i, j, v);
            }
        }
        let bm = b.build();
        let bt = bm.transpose();
        let dense_b = bm.to_dense();
        let dense_bt = bt.to_dense();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| dense_bt[i][k] * dense_b[k][j]).sum::<f64>();
            }
            a[i][i] += 0.1;
        }
        SparseMatrix::from_dense(&a)
    }

    #[test]
    fn builder_sums_duplicates_and_sorts() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 3.0);
        b.push(1, 2, 4.0);
        let m = b.build();
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn spmv_small_cases() {
        let x = [1.5, -2.0, 3.0];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert!(matches!(a.spmv(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn solve_small_cases() {
        for cfg in [SolverConfig::default(), SolverConfig::cholesky()] {
            let b = [1.0, -2.0, 0.5];
            let x = solve_spd(&SparseMatrix::identity(3), &b, &cfg).unwrap();
            assert!(x.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-14));
            let d = SparseMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
            let x = solve_spd(&d, &[1.0, 2.0, 4.0], &cfg).unwrap();
            assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn random_spd_systems_solve_to_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let n = 5 + trial % 30;
            let a = random_spd(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            for cfg in [SolverConfig::default(), SolverConfig::cholesky()] {
                let x = solve_spd(&a, &b, &cfg).unwrap();
                let r: Vec<f64> = a.mul(&x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
                assert!(norm(&r) <= 1e-11 * norm(&b), "trial {trial} {:?}", cfg.method);
            }
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let err = solve_spd(&a, &[1.0, 0.0], &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }), "{err}");
        let err = solve_spd(&a, &[1.0, 0.0], &SolverConfig::cholesky()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }), "{err}");
    }

    #[test]
    fn cg_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(40, &mut rng);
        let b = vec![1.0; 40];
        let cfg = SolverConfig { max_iter: 2, ..Default::default() };
        assert!(matches!(solve_spd(&a, &b, &cfg), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let cfg = SolverConfig { tol: 0.0, ..Default::default() };
        assert!(solve_spd(&SparseMatrix::identity(2), &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn lin_comb_merges_patterns() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = SparseMatrix::from_dense(&[vec![0.0, 3.0], vec![3.0, 1.0]]);
        let c = a.lin_comb(2.0, &b, -1.0);
        assert_eq!(c.to_dense(), vec![vec![2.0, -3.0], vec![-3.0, 3.0]]);
        assert_eq!(c.symmetry_defect(), 0.0);
    }

    #[test]
    fn lambda_max_simple() {
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_spd(12, &mut rng);
        let l = lambda_max_generalized(&m.scaled(2.0), &m, 1e-10, &cfg).unwrap();
        assert!((l - 2.0).abs() < 1e-9);
        let a = SparseMatrix::from_diagonal(&[1.0, 5.0]);
        let l = lambda_max_generalized(&a, &SparseMatrix::identity(2), 1e-10, &cfg).unwrap();
        assert!((l - 5.0).abs() < 1e-8);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_spd(25, &mut rng);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn coo_dump() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 0.0]]);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("0 0 2.00000000000000000e0"));
    }
}
