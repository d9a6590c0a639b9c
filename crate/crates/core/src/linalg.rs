//! Banded storage, pivoted banded LU and the small dense helpers the
//! physics modules need.
//!
//! The chain Hamiltonian couples cell `i` only to cell `i+1`, so in the
//! `(A_1, B_1, A_2, ...)` basis every matrix here has bandwidth 3. Solving
//! in band form keeps a 10 000-site response solve at O(N).

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Element type of the band solver: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Entry `(i, j)` is stored iff `-ku <= i - j <= kl`. Storage is row-major
/// with a fixed window of `kl + ku + 1` entries per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![T::zero(); n * (kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }
    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            T::zero()
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add_to_diagonal(&mut self, shift: T) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += shift;
        }
    }

    /// Columns touched by row `i`.
    #[inline]
    fn row_cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = T::zero();
                for j in self.row_cols(i) {
                    acc += self.data[self.slot(i, j)] * x[j];
                }
                acc
            })
            .collect()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row_cols(i).map(|j| self.get(i, j).modulus()).sum())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Pivoted LU factorization. Fails with [`Error::SingularSystem`] on an
    /// exactly zero pivot.
    pub fn lu(&self) -> Result<BandLu<T>> {
        BandLu::factor(self)
    }
}

impl BandMatrix<f64> {
    pub fn to_complex(&self) -> BandMatrix<Complex64> {
        BandMatrix {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row_cols(i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// LU factors of a band matrix, `P A = L U` with row interchanges applied
/// column by column (the `gbtrf` scheme). `U` carries `kl + ku` super-
/// diagonals to absorb pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    /// Upper bandwidth of `U`.
    kuu: usize,
    /// Row `i` stores columns `i - kl ..= i + kuu`.
    data: Vec<T>,
    piv: Vec<usize>,
    original: BandMatrix<T>,
}

impl<T: Scalar> BandLu<T> {
    #[inline]
    fn width(&self) -> usize {
        self.kl + self.kuu + 1
    }
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.width() + (j + self.kl - i)]
    }
    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let w = self.width();
        &mut self.data[i * w + (j + self.kl - i)]
    }

    fn factor(a: &BandMatrix<T>) -> Result<Self> {
        let (n, kl) = (a.n, a.kl);
        let kuu = a.kl + a.ku;
        let mut lu = BandLu {
            n,
            kl,
            kuu,
            data: vec![T::zero(); n * (kl + kuu + 1)],
            piv: vec![0; n],
            original: a.clone(),
        };
        for i in 0..n {
            for j in a.row_cols(i) {
                *lu.at_mut(i, j) = a.get(i, j);
            }
        }
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = lu.at(j, j).modulus();
            for i in j + 1..=last {
                let m = lu.at(i, j).modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            lu.piv[j] = p;
            if best == 0.0 {
                return Err(Error::SingularSystem { residual: f64::INFINITY });
            }
            let cend = (j + kuu).min(n - 1);
            if p != j {
                for c in j..=cend {
                    let tmp = lu.at(j, c);
                    *lu.at_mut(j, c) = lu.at(p, c);
                    *lu.at_mut(p, c) = tmp;
                }
            }
            let pivot = lu.at(j, j);
            for i in j + 1..=last {
                let l = lu.at(i, j) / pivot;
                *lu.at_mut(i, j) = l;
                if l != T::zero() {
                    for c in j + 1..=cend {
                        let u = lu.at(j, c);
                        *lu.at_mut(i, c) -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_raw(&self, b: &mut [T]) {
        let n = self.n;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            for i in j + 1..=(j + self.kl).min(n - 1) {
                b[i] -= self.at(i, j) * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            for i in j.saturating_sub(self.kuu)..j {
                b[i] -= self.at(i, j) * bj;
            }
        }
    }

    /// Plain (unconjugated) transpose solve `A^T x = b`.
    #[allow(clippy::needless_range_loop)]
    fn solve_transpose_raw(&self, b: &mut [T]) {
        let n = self.n;
        // U^T y = b
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(self.kuu)..j {
                acc -= self.at(i, j) * b[i];
            }
            b[j] = acc / self.at(j, j);
        }
        // L^T and the interchanges, in reverse
        for j in (0..n).rev() {
            let mut acc = b[j];
            for i in j + 1..=(j + self.kl).min(n - 1) {
                acc -= self.at(i, j) * b[i];
            }
            b[j] = acc;
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }

    /// Solve `A x = b` with up to three steps of iterative refinement.
    /// Returns the solution and its relative residual `|b - A x| / |b|`.
    pub fn solve(&self, b: &[T]) -> (Vec<T>, f64) {
        self.refine(b, false)
    }

    /// Solve `A^T x = b` (no conjugation), refined as in [`BandLu::solve`].
    pub fn solve_transpose(&self, b: &[T]) -> (Vec<T>, f64) {
        self.refine(b, true)
    }

    fn refine(&self, b: &[T], transpose: bool) -> (Vec<T>, f64) {
        assert_eq!(b.len(), self.n);
        let apply = |x: &[T]| -> Vec<T> {
            if transpose {
                let mut y = vec![T::zero(); self.n];
                for (i, &xi) in x.iter().enumerate() {
                    for j in self.original.row_cols(i) {
                        y[j] += self.original.get(i, j) * xi;
                    }
                }
                y
            } else {
                self.original.mul_vec(x)
            }
        };
        let step = |v: &mut [T]| {
            if transpose {
                self.solve_transpose_raw(v)
            } else {
                self.solve_raw(v)
            }
        };
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return (vec![T::zero(); self.n], 0.0);
        }
        let mut x = b.to_vec();
        step(&mut x);
        let mut best = (x.clone(), f64::INFINITY);
        for _ in 0..4 {
            let ax = apply(&x);
            let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
            let rel = norm2(&r) / bnorm;
            if !rel.is_finite() || rel >= best.1 {
                break;
            }
            best = (x.clone(), rel);
            if rel <= 1e-15 {
                break;
            }
            step(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += *di;
            }
        }
        best
    }
}

pub fn norm2<T: Scalar>(v: &[T]) -> f64 {
    v.iter()
        .map(|x| {
            let m = x.modulus();
            m * m
        })
        .sum::<f64>()
        .sqrt()
}

/// Plain bilinear product `sum_i a_i b_i` (no conjugation).
pub fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Full eigendecomposition of a dense real symmetric matrix, eigenvalues
/// ascending and eigenvectors as the matching columns.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, 1e-15, 10_000 * n.max(1))
        .ok_or_else(|| Error::EigensolverFailure(format!("dense symmetric eigensolve, n = {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    Ok((values, vectors))
}

/// The `count` eigenpairs of a real symmetric band matrix closest to
/// `shift`, by shift-invert block subspace iteration with Rayleigh-Ritz.
/// Returned in ascending energy order.
pub fn nearest_eigenpairs(
    h: &BandMatrix<f64>,
    shift: f64,
    count: usize,
) -> Result<EigenPairs> {
    Ok(nearest_eigenpairs_guarded(h, shift, count, 2, false)?.0)
}

/// `(eigenvalue, unit eigenvector)` pairs.
pub type EigenPairs = Vec<(f64, Vec<f64>)>;

/// As [`nearest_eigenpairs`], iterating `guard` extra vectors. The first
/// `count` pairs must converge. With `want_next`, iteration continues
/// until the next level (by distance to `shift`) reaches a residual of
/// `1e-6 ||H||` and the second value holds it; it is empty when that
/// level does not settle or was not requested. Fails with
/// `EigensolverFailure` when the wanted levels are clustered against the
/// rest of the spectrum.
pub fn nearest_eigenpairs_guarded(
    h: &BandMatrix<f64>,
    shift: f64,
    count: usize,
    guard: usize,
    want_next: bool,
) -> Result<(EigenPairs, Vec<f64>)> {
    let n = h.dim();
    let block = (count + guard).min(n);
    if count == 0 || count > n {
        return Err(Error::EigensolverFailure(format!("cannot extract {count} pairs from n = {n}")));
    }
    let scale = h.norm_inf().max(f64::MIN_POSITIVE);
    // Offset keeps the factorization regular when the target sits on an
    // exponentially degenerate pair; it stays far below any bulk gap.
    let mut sigma = shift + 1e-7 * scale;
    let lu = loop {
        let mut shifted = h.clone();
        shifted.add_to_diagonal(-sigma);
        match shifted.lu() {
            Ok(lu) => break lu,
            Err(_) => sigma += 1e-9 * scale,
        }
    };

    // Deterministic start block with weight on both chain ends.
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|c| {
            (0..n)
                .map(|i| {
                    let x = (i as f64 + 1.0) * (0.618_033_988_75 + 0.137 * c as f64);
                    (x * 12.9898).sin() + 0.5 * (-(i as f64) / 8.0).exp() * (c as f64 + 1.0)
                        - 0.5 * (-((n - 1 - i) as f64) / 8.0).exp()
                })
                .collect()
        })
        .collect();
    orthonormalize(&mut basis);

    let tol = 1e-13 * scale;
    let guard_tol = 1e-6 * scale;
    let mut wanted_done = None;
    for iter in 0..300 {
        let mut next: Vec<Vec<f64>> = basis.iter().map(|v| lu.solve(v).0).collect();
        orthonormalize(&mut next);
        let hv: Vec<Vec<f64>> = next.iter().map(|v| h.mul_vec(v)).collect();
        let t = DMatrix::from_fn(block, block, |a, b| {
            0.5 * (dot(&next[a], &hv[b]) + dot(&next[b], &hv[a]))
        });
        let (vals, vecs) = symmetric_eigen(t)?;
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| (vals[a] - sigma).abs().total_cmp(&(vals[b] - sigma).abs()));
        let ritz: Vec<(f64, Vec<f64>, Vec<f64>)> = order
            .iter()
            .map(|&k| {
                let mut x = vec![0.0; n];
                let mut hx = vec![0.0; n];
                for (c, (v, hvc)) in next.iter().zip(&hv).enumerate() {
                    let w = vecs[(c, k)];
                    for i in 0..n {
                        x[i] += w * v[i];
                        hx[i] += w * hvc[i];
                    }
                }
                (vals[k], x, hx)
            })
            .collect();
        let residual = |(e, x, hx): &(f64, Vec<f64>, Vec<f64>)| {
            x.iter().zip(hx).map(|(xi, hxi)| (hxi - e * xi).powi(2)).sum::<f64>().sqrt()
        };
        let converged = ritz.iter().take(count).all(|r| residual(r) <= tol);
        let next_level = ritz.get(count).filter(|r| residual(r) <= guard_tol).map(|r| r.0);
        basis = ritz.iter().map(|(_, x, _)| x.clone()).collect();
        if converged {
            let mut out: Vec<(f64, Vec<f64>)> =
                ritz.into_iter().take(count).map(|(e, x, _)| (e, x)).collect();
            out.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Past 100 extra sweeps the next level is given up on.
            let done_at = *wanted_done.get_or_insert(iter);
            if !want_next || next_level.is_some() || block == count || iter >= done_at + 100 {
                return Ok((out, next_level.into_iter().collect()));
            }
        }
    }
    Err(Error::EigensolverFailure(format!(
        "shift-invert subspace iteration did not converge (n = {n}, shift = {shift})"
    )))
}

/// Number of eigenvalues of the symmetric band matrix `h` below `sigma`:
/// negative pivots of the unpivoted `LDL^T` of `h - sigma` (Sylvester
/// inertia). Pivots below `eps ||H||` in magnitude are set to `-eps ||H||`.
pub fn count_below(h: &BandMatrix<f64>, sigma: f64) -> usize {
    let n = h.dim();
    let b = h.lower_bandwidth();
    let width = b + 1;
    let tiny = f64::EPSILON * h.norm_inf().max(f64::MIN_POSITIVE);
    // Row i keeps columns i-b..=i at offsets 0..=b.
    let at = |i: usize, j: usize| i * width + (j + b - i);
    let mut w = vec![0.0; n * width];
    for i in 0..n {
        for j in i.saturating_sub(b)..=i {
            w[at(i, j)] = h.get(i, j) - if i == j { sigma } else { 0.0 };
        }
    }
    let mut negative = 0;
    for k in 0..n {
        let mut d = w[at(k, k)];
        if d.abs() < tiny {
            d = -tiny;
        }
        if d < 0.0 {
            negative += 1;
        }
        for i in k + 1..=(k + b).min(n - 1) {
            let l = w[at(i, k)] / d;
            if l == 0.0 {
                continue;
            }
            for j in k + 1..=i {
                w[at(i, j)] -= l * w[at(j, k)];
            }
        }
    }
    negative
}

/// Eigenvalue number `k` (ascending, 0-based) of the symmetric band matrix
/// `h`, by bisection on [`count_below`] down to `eps ||H||`.
pub fn kth_eigenvalue(h: &BandMatrix<f64>, k: usize) -> f64 {
    let r = h.norm_inf().max(f64::MIN_POSITIVE);
    let tol = 2.0 * f64::EPSILON * r;
    let (mut lo, mut hi) = (-r * (1.0 + 1e-12) - tol, r * (1.0 + 1e-12) + tol);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(h, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenpairs `first..first + count` (ascending order) of the symmetric
/// band matrix `h`. Eigenvalues come from inertia bisection; each cluster
/// of them (gaps below `1e-8 ||H||`) gets block inverse iteration at a shift
/// just beside it, then Rayleigh-Ritz. Insensitive to how clustered the
/// rest of the spectrum is.
pub fn eigenpairs_by_index(h: &BandMatrix<f64>, first: usize, count: usize) -> Result<EigenPairs> {
    let n = h.dim();
    if count == 0 || first + count > n {
        return Err(Error::EigensolverFailure(format!("indices {first}..{} out of range for n = {n}", first + count)));
    }
    let scale = h.norm_inf().max(f64::MIN_POSITIVE);
    let lo = first.saturating_sub(1);
    let hi = (first + count + 1).min(n);
    let vals: Vec<f64> = (lo..hi).map(|k| kth_eigenvalue(h, k)).collect();
    let val = |k: usize| vals[k - lo];

    let mut out = Vec::with_capacity(count);
    let mut start = first;
    while start < first + count {
        let mut end = start + 1;
        while end < first + count && val(end) - val(end - 1) < 1e-8 * scale {
            end += 1;
        }
        // Distance from the cluster to the rest of the spectrum.
        let below = (start > lo).then(|| val(start) - val(start - 1));
        let above = (end < hi).then(|| val(end) - val(end - 1));
        let sep = below.into_iter().chain(above).fold(scale, f64::min);
        let offset = (1e-3 * sep).max(1e3 * f64::EPSILON * scale);
        let center = 0.5 * (val(start) + val(end - 1));
        out.extend(cluster_pairs(h, center + offset, end - start)?);
        start = end;
    }
    Ok(out)
}

fn cluster_pairs(h: &BandMatrix<f64>, sigma: f64, size: usize) -> Result<EigenPairs> {
    let n = h.dim();
    let mut shifted = h.clone();
    shifted.add_to_diagonal(-sigma);
    let lu = shifted.lu()?;
    let mut basis: Vec<Vec<f64>> = (0..size)
        .map(|c| (0..n).map(|i| ((i as f64 + 1.0) * (0.618_033_988_75 + 0.137 * c as f64) * 12.9898).sin()).collect())
        .collect();
    orthonormalize(&mut basis);
    for _ in 0..8 {
        basis = basis.iter().map(|v| lu.solve(v).0).collect();
        orthonormalize(&mut basis);
    }
    let hv: Vec<Vec<f64>> = basis.iter().map(|v| h.mul_vec(v)).collect();
    let t = DMatrix::from_fn(size, size, |a, b| 0.5 * (dot(&basis[a], &hv[b]) + dot(&basis[b], &hv[a])));
    let (vals, vecs) = symmetric_eigen(t)?;
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..size)
        .map(|k| {
            let mut x = vec![0.0; n];
            for (c, v) in basis.iter().enumerate() {
                let w = vecs[(c, k)];
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += w * vi);
            }
            (vals[k], x)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

fn orthonormalize(vs: &mut [Vec<f64>]) {
    for k in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..k {
                let (head, tail) = vs.split_at_mut(k);
                let p = dot(&head[j], &tail[0]);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= p * y;
                }
            }
        }
        normalize(&mut vs[k]);
    }
}

/// Dense complex LU solve used by the time-integration oracle.
pub fn dense_complex_solve(m: DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    m.lu().solve(b).ok_or(Error::SingularSystem { residual: f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_symmetric_band(n: usize, b: usize, seed: u64) -> BandMatrix<f64> {
        let c = random_band(n, b, b, seed);
        let mut m = BandMatrix::zeros(n, b, b);
        for i in 0..n {
            for j in i..(i + b + 1).min(n) {
                m.set(i, j, c.get(i, j).re);
                m.set(j, i, c.get(i, j).re);
            }
        }
        m
    }

    #[test]
    fn inertia_matches_dense_spectrum() {
        let m = random_symmetric_band(60, 3, 5);
        let (vals, _) = symmetric_eigen(m.to_dense()).unwrap();
        for sigma in [-1.0, -0.3, 0.0, 0.11, 0.7] {
            assert_eq!(count_below(&m, sigma), vals.iter().filter(|&&v| v < sigma).count());
        }
        for k in [0, 17, 30, 59] {
            assert!((kth_eigenvalue(&m, k) - vals[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn pairs_by_index_resolve_a_cluster() {
        // Two decoupled identical blocks: every level is exactly doubled.
        let half = random_symmetric_band(20, 3, 9);
        let mut m = BandMatrix::zeros(40, 3, 3);
        for i in 0..20usize {
            for j in i.saturating_sub(3)..(i + 4).min(20) {
                m.set(i, j, half.get(i, j));
                m.set(i + 20, j + 20, half.get(i, j));
            }
        }
        let (vals, _) = symmetric_eigen(m.to_dense()).unwrap();
        let pairs = eigenpairs_by_index(&m, 10, 4).unwrap();
        for (k, (e, v)) in pairs.iter().enumerate() {
            assert!((e - vals[10 + k]).abs() < 1e-13);
            let mv = m.mul_vec(v);
            let r: f64 = mv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-12, "residual {r}");
        }
        assert!(dot(&pairs[0].1, &pairs[1].1).abs() < 1e-12);
    }

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix<Complex64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                m.set(i, j, Complex64::new(next(), next()));
            }
        }
        m
    }

    #[test]
    fn band_solve_matches_dense() {
        let m = random_band(40, 3, 3, 11);
        let b: Vec<Complex64> = (0..40).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let lu = m.lu().unwrap();
        let (x, res) = lu.solve(&b);
        assert!(res < 1e-13, "residual {res}");
        let dense = dense_complex_solve(m.to_dense(), &DVector::from_vec(b.clone())).unwrap();
        for (a, d) in x.iter().zip(dense.iter()) {
            assert!((a - d).norm() < 1e-10 * (1.0 + d.norm()));
        }
        let (xt, rt) = lu.solve_transpose(&b);
        assert!(rt < 1e-13);
        let dense_t =
            dense_complex_solve(m.to_dense().transpose(), &DVector::from_vec(b)).unwrap();
        for (a, d) in xt.iter().zip(dense_t.iter()) {
            assert!((a - d).norm() < 1e-10 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0,1],[1,0]] needs a row swap.
        let mut m = BandMatrix::<f64>::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let (x, res) = m.lu().unwrap().solve(&[2.0, 3.0]);
        assert_eq!(x, vec![3.0, 2.0]);
        assert!(res == 0.0);
    }

    #[test]
    fn exactly_singular_is_reported() {
        let m = BandMatrix::<f64>::zeros(3, 1, 1);
        assert!(matches!(m.lu(), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn out_of_band_reads_zero() {
        let m = BandMatrix::<f64>::zeros(5, 1, 2);
        assert_eq!(m.get(4, 0), 0.0);
        assert_eq!(m.get(0, 4), 0.0);
    }

    #[test]
    fn nearest_pairs_agree_with_dense() {
        // symmetric tridiagonal with a known spectrum 2 - 2 cos(k pi/(n+1))
        let n = 60;
        let mut m = BandMatrix::<f64>::zeros(n, 1, 1);
        for i in 0..n {
            m.set(i, i, 2.0);
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
                m.set(i + 1, i, -1.0);
            }
        }
        let pairs = nearest_eigenpairs(&m, 1.0, 2).unwrap();
        let (all, _) = symmetric_eigen(m.to_dense()).unwrap();
        let mut near: Vec<f64> = all.clone();
        near.sort_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()));
        let mut want = near[..2].to_vec();
        want.sort_by(f64::total_cmp);
        for ((e, v), w) in pairs.iter().zip(&want) {
            assert!((e - w).abs() < 1e-12);
            let hv = m.mul_vec(v);
            let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-11);
        }
    }

    proptest! {
        #[test]
        fn refined_solve_has_small_residual(n in 2usize..30, kl in 0usize..4, ku in 0usize..4, seed in 0u64..1000) {
            let mut m = random_band(n, kl, ku, seed);
            // diagonal dominance keeps the draw well conditioned
            m.add_to_diagonal(Complex64::new(3.0 * (kl + ku + 1) as f64, 0.0));
            let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, i as f64 * 0.1)).collect();
            let lu = m.lu().unwrap();
            let (_, r1) = lu.solve(&b);
            let (_, r2) = lu.solve_transpose(&b);
            prop_assert!(r1 < 1e-13 && r2 < 1e-13);
        }
    }
}
