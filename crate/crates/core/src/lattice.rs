//! Bloch and real-space single-excitation Hamiltonians of the chain.
//!
//! Basis ordering is `(A_1, B_1, A_2, B_2, ...)`. Each cell carries
//! `diag(delta, -delta)`; neighbouring cells are joined by
//! `R = [[t_p, -t_c], [t_c, -t_p]]` above the diagonal and `R^T` below.
//! Open boundaries throughout: the edge Lamb-shift compensation is assumed
//! done, so every cell has the same on-site splitting.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigen, BandMatrix};
use crate::model::LatticeParams;

/// Gap below which the Bloch vector is treated as passing through the origin.
pub const GAP_CLOSED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochPoint {
    pub k: f64,
    pub d_y: f64,
    pub d_z: f64,
}

impl BlochPoint {
    /// Band half-gap `|d(k)|`.
    pub fn gap(&self) -> f64 {
        self.d_y.hypot(self.d_z)
    }
}

/// `h(k) = d_y sigma_y + d_z sigma_z` with `d_y = 2 t_c sin k`,
/// `d_z = delta + 2 t_p cos k`. `k` is expected in `[-pi, pi)`.
pub fn bloch_hamiltonian(params: &LatticeParams, k: f64) -> BlochPoint {
    BlochPoint {
        k,
        d_y: 2.0 * params.t_c() * k.sin(),
        d_z: params.delta() + 2.0 * params.t_p() * k.cos(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    /// Magnitude of the winding, 0 (trivial) or 1 (topological).
    pub winding: i32,
    /// Minimum of `|d(k)|` over the momentum grid.
    pub gap_at_k0: f64,
}

/// Winding of `(d_y, d_z)` around the origin over one Brillouin zone, by
/// accumulating wrapped angle increments on an `n_k`-point grid.
///
/// The sign of the raw winding follows `sign(t_c * t_p)`; only its
/// magnitude is reported.
pub fn winding_number(params: &LatticeParams, n_k: usize) -> Result<PhasePoint> {
    if n_k < 64 {
        return Err(invalid("n_k", format!("need at least 64 momentum points, got {n_k}")));
    }
    let points: Vec<BlochPoint> = (0..n_k)
        .map(|j| bloch_hamiltonian(params, -PI + 2.0 * PI * j as f64 / n_k as f64))
        .collect();
    let min_gap = points.iter().map(BlochPoint::gap).fold(f64::INFINITY, f64::min);
    if min_gap < GAP_CLOSED_TOL {
        return Err(Error::GapClosed { min_gap });
    }
    let angle = |p: &BlochPoint| p.d_y.atan2(p.d_z);
    let mut total = 0.0;
    for j in 0..n_k {
        let a0 = angle(&points[j]);
        let a1 = angle(&points[(j + 1) % n_k]);
        let mut step = a1 - a0;
        if step > PI {
            step -= 2.0 * PI;
        } else if step < -PI {
            step += 2.0 * PI;
        }
        total += step;
    }
    let winding = (total / (2.0 * PI)).round() as i32;
    Ok(PhasePoint { winding: winding.abs(), gap_at_k0: min_gap })
}

/// Real symmetric `2N x 2N` chain Hamiltonian in band storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpaceHamiltonian {
    matrix: BandMatrix<f64>,
    n_cells: usize,
}

/// Inter-cell block `R`; `R[a][b]` couples species `a` of cell `i` to
/// species `b` of cell `i+1`.
fn hopping_block(params: &LatticeParams) -> [[f64; 2]; 2] {
    let (tp, tc) = (params.t_p(), params.t_c());
    [[tp, -tc], [tc, -tp]]
}

pub fn real_space_hamiltonian(params: &LatticeParams) -> RealSpaceHamiltonian {
    let n = params.n_cells();
    let mut m = BandMatrix::zeros(2 * n, 3, 3);
    let r = hopping_block(params);
    for i in 0..n {
        m.set(2 * i, 2 * i, params.delta());
        m.set(2 * i + 1, 2 * i + 1, -params.delta());
        if i + 1 < n {
            for (a, row) in r.iter().enumerate() {
                for (b, &v) in row.iter().enumerate() {
                    m.set(2 * i + a, 2 * (i + 1) + b, v);
                    m.set(2 * (i + 1) + b, 2 * i + a, v);
                }
            }
        }
    }
    RealSpaceHamiltonian { matrix: m, n_cells: n }
}

impl RealSpaceHamiltonian {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }
    pub fn band(&self) -> &BandMatrix<f64> {
        &self.matrix
    }
    pub fn dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v)
    }
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix.get(i, i)).sum()
    }
    /// Spectral-norm bound (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        self.matrix.norm_inf()
    }

    /// Copy with `shifts[i]` added to diagonal entry `i` (site disorder).
    pub fn with_onsite_shifts(&self, shifts: &[f64]) -> Result<Self> {
        if shifts.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: shifts.len() });
        }
        let mut m = self.matrix.clone();
        for (i, &s) in shifts.iter().enumerate() {
            m.set(i, i, m.get(i, i) + s);
        }
        Ok(Self { matrix: m, n_cells: self.n_cells })
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix.is_symmetric()
    }

    /// `max |(S M S + M)_ij|` with `S` the per-cell `sigma_x`.
    pub fn chiral_residual(&self) -> f64 {
        let n = self.dim();
        let partner = |i: usize| i ^ 1;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 4).min(n) {
                let smss = self.matrix.get(partner(i), partner(j));
                worst = worst.max((smss + self.matrix.get(i, j)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors, column `c` belongs to `energies[c]`.
    pub states: DMatrix<f64>,
    /// Indices of the two states with smallest `|E|`, ascending in energy.
    pub zero_mode_indices: [usize; 2],
    /// Distance from the two mid-gap energies to the nearest other level.
    pub edge_bulk_gap: f64,
}

impl SpectrumResult {
    pub fn state(&self, c: usize) -> Vec<f64> {
        self.states.column(c).iter().copied().collect()
    }
    pub fn n_cells(&self) -> usize {
        self.energies.len() / 2
    }
}

/// Weight of `v` on the first and last cell.
pub(crate) fn end_cell_weight(v: &[f64]) -> f64 {
    let n = v.len();
    v[..2].iter().chain(&v[n - 2..]).map(|x| x * x).sum()
}

pub fn spectrum(h: &RealSpaceHamiltonian) -> Result<SpectrumResult> {
    let (energies, states) = symmetric_eigen(h.dense())?;
    let dim = energies.len();
    let weight = |c: usize| {
        let col: Vec<f64> = states.column(c).iter().copied().collect();
        end_cell_weight(&col)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (energies[a].abs(), energies[b].abs());
        // |E| ties (to 1e-14) go to the state with more weight on the end cells
        if (ea - eb).abs() <= 1e-14 {
            weight(b).total_cmp(&weight(a))
        } else {
            ea.total_cmp(&eb)
        }
    });
    let mut zero = [order[0], order[1]];
    zero.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let edge_bulk_gap = (0..dim)
        .filter(|c| !zero.contains(c))
        .flat_map(|c| zero.iter().map(move |&z| (c, z)))
        .map(|(c, z)| (energies[c] - energies[z]).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(SpectrumResult { energies, states, zero_mode_indices: zero, edge_bulk_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(delta: f64, tp: f64, tc: f64, n: usize) -> LatticeParams {
        LatticeParams::new(delta, tp, tc, n).unwrap()
    }

    /// Periodic chain: open chain plus the wraparound block between cell N and 1.
    fn periodic_dense(p: &LatticeParams) -> DMatrix<f64> {
        let mut m = real_space_hamiltonian(p).dense();
        let n = p.n_cells();
        let r = hopping_block(p);
        for a in 0..2 {
            for b in 0..2 {
                m[(2 * (n - 1) + a, b)] += r[a][b];
                m[(b, 2 * (n - 1) + a)] += r[a][b];
            }
        }
        m
    }

    #[test]
    fn bloch_examples() {
        let p = lp(0.0, -0.1, -0.1, 10);
        let b = bloch_hamiltonian(&p, 0.0);
        assert_eq!((b.d_y, b.d_z), (0.0, -0.2));

        let p = lp(0.2, -0.1, -0.1, 10);
        assert!(bloch_hamiltonian(&p, 0.0).d_z.abs() < 1e-16);

        let p = lp(0.1, -0.1, -0.1, 10);
        let b = bloch_hamiltonian(&p, PI / 2.0);
        assert!((b.d_y + 0.2).abs() < 1e-15);
        assert!((b.d_z - 0.1).abs() < 1e-15);
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&lp(0.12, -0.1, -0.1, 10), 256).unwrap().winding, 1);
        assert_eq!(winding_number(&lp(0.3, -0.1, -0.1, 10), 256).unwrap().winding, 0);
        assert!(matches!(
            winding_number(&lp(0.2, -0.1, -0.1, 10), 256),
            Err(Error::GapClosed { .. })
        ));
        assert!(winding_number(&lp(0.1, -0.1, -0.1, 10), 32).is_err());
    }

    #[test]
    fn winding_gap_is_band_minimum() {
        // t_c = t_p: |d(k)|^2 = 0.04 sin^2 k + (delta - 0.2 cos k)^2, minimum at k = 0.
        let pp = winding_number(&lp(0.05, -0.1, -0.1, 10), 256).unwrap();
        assert!((pp.gap_at_k0 - 0.15).abs() < 1e-12);
    }

    #[test]
    fn two_cell_matrix_by_hand() {
        let h = real_space_hamiltonian(&lp(0.1, -0.1, -0.1, 2)).dense();
        let want = [
            [0.1, 0.0, -0.1, 0.1],
            [0.0, -0.1, -0.1, 0.1],
            [-0.1, -0.1, 0.1, 0.0],
            [0.1, 0.1, 0.0, -0.1],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)], want[i][j], "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn chiral_pairs_at_zero_delta() {
        let h = real_space_hamiltonian(&lp(0.0, -0.1, -0.13, 15));
        let s = spectrum(&h).unwrap();
        let e = &s.energies;
        for i in 0..e.len() {
            assert!((e[i] + e[e.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_topological_example() {
        let h = real_space_hamiltonian(&lp(0.02, -0.1, -0.1, 20));
        let s = spectrum(&h).unwrap();
        for &z in &s.zero_mode_indices {
            assert!(s.energies[z].abs() < 1e-10);
        }
        assert!((s.edge_bulk_gap - 0.2).abs() < 0.15 * 0.2, "gap {}", s.edge_bulk_gap);
        let trace: f64 = s.energies.iter().sum();
        assert!(trace.abs() < 1e-10);
        assert!(h.trace().abs() < 1e-15);
    }

    #[test]
    fn spectrum_trivial_has_no_midgap_states() {
        let s = spectrum(&real_space_hamiltonian(&lp(0.3, -0.1, -0.1, 20))).unwrap();
        assert!(s.energies.iter().all(|e| e.abs() >= 0.05));
    }

    #[test]
    fn states_orthonormal() {
        let s = spectrum(&real_space_hamiltonian(&lp(0.07, -0.1, -0.12, 12))).unwrap();
        let g = s.states.transpose() * &s.states;
        let dev = (g - DMatrix::identity(24, 24)).abs().max();
        assert!(dev < 1e-10);
        assert!(s.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn periodic_chain_matches_bloch_bands() {
        let p = lp(0.07, -0.1, -0.13, 16);
        let (ev, _) = symmetric_eigen(periodic_dense(&p)).unwrap();
        let mut bloch: Vec<f64> = (0..16)
            .flat_map(|m| {
                let k = 2.0 * PI * m as f64 / 16.0;
                let g = bloch_hamiltonian(&p, k).gap();
                [g, -g]
            })
            .collect();
        bloch.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&bloch) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_mode_count_tracks_phase() {
        let n = 60;
        let margin = 5.0 / n as f64;
        for j in 0..=40 {
            let delta = -0.4 + 0.02 * j as f64;
            let p = lp(delta, -0.1, -0.1, n);
            let s = spectrum(&real_space_hamiltonian(&p)).unwrap();
            let count =
                s.energies.iter().filter(|e| e.abs() < s.edge_bulk_gap / 10.0).count();
            if delta.abs() < 0.2 - margin {
                assert_eq!(count, 2, "delta = {delta}");
            } else if delta.abs() > 0.2 + margin {
                assert_eq!(count, 0, "delta = {delta}");
            }
        }
    }

    #[test]
    fn winding_stable_under_refinement() {
        for &delta in &[-0.25, -0.15, 0.0, 0.19, 0.21, 0.3] {
            let p = lp(delta, -0.1, -0.07, 10);
            let a = winding_number(&p, 256).unwrap().winding;
            let b = winding_number(&p, 512).unwrap().winding;
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn hamiltonian_structure(delta in -0.5f64..0.5, tp in 0.01f64..0.3, tc in -0.3f64..0.3, n in 2usize..30) {
            let h = real_space_hamiltonian(&lp(delta, -tp, tc, n));
            prop_assert!(h.is_symmetric());
            prop_assert!(h.chiral_residual() == 0.0);
        }

        #[test]
        fn winding_is_zero_or_one(delta in -0.5f64..0.5, tp in 0.01f64..0.3, tc in 0.01f64..0.3, sign in proptest::bool::ANY) {
            let tc = if sign { tc } else { -tc };
            if let Ok(pp) = winding_number(&lp(delta, -tp, tc, 4), 256) {
                prop_assert!(pp.winding == 0 || pp.winding == 1);
                prop_assert_eq!(pp.winding == 1, delta.abs() < 2.0 * tp);
            }
        }
    }
}
