//! Closed-form edge states from the transfer-matrix ansatz and their
//! numerical counterparts from the chain spectrum.
//!
//! A state of the form `psi(n) = a_n phi` with `phi` a fixed polarization
//! solves the bulk equations when `a_n` is built from powers of the roots
//! of a quadratic. The minus pair solves
//! `delta + lambda (t_p + t_c) + (t_p - t_c) / lambda = 0` and goes with
//! `phi_- = (1, -1)/sqrt 2` on the left edge; the plus pair solves
//! `delta + lambda (t_p - t_c) + (t_p + t_c) / lambda = 0` and goes with
//! `phi_+` on the left edge. Roots of opposite pairs are reciprocal.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{RealSpaceHamiltonian, SpectrumResult};
use crate::linalg::{count_below, dot, eigenpairs_by_index, kth_eigenvalue, nearest_eigenpairs_guarded, normalize};
use crate::model::LatticeParams;

/// Relative size below which a quadratic's leading coefficient is zero.
const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Minus,
    Plus,
}

/// The four roots. A root of a degenerate (linear) quadratic that runs
/// off to infinity is stored as `+inf + 0i`; see [`LambdaRoots::is_infinite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRoots {
    pub lam_minus_1: Complex64,
    pub lam_minus_2: Complex64,
    pub lam_plus_1: Complex64,
    pub lam_plus_2: Complex64,
    /// Branch whose quadratic lost its leading term (`t_c = -t_p` for
    /// minus, `t_c = t_p` for plus).
    pub degenerate: Option<Branch>,
}

impl LambdaRoots {
    pub fn is_infinite(z: Complex64) -> bool {
        z.re.is_infinite()
    }
    pub fn pair(&self, b: Branch) -> (Complex64, Complex64) {
        match b {
            Branch::Minus => (self.lam_minus_1, self.lam_minus_2),
            Branch::Plus => (self.lam_plus_1, self.lam_plus_2),
        }
    }
}

/// `(lambda_1 + lambda_2, lambda_1 lambda_2)` of a branch; both are real.
fn sum_product(p: &LatticeParams, b: Branch) -> (f64, f64) {
    let (tp, tc, d) = (p.t_p(), p.t_c(), p.delta());
    match b {
        Branch::Minus => (-d / (tp + tc), (tp - tc) / (tp + tc)),
        Branch::Plus => (-d / (tp - tc), (tp + tc) / (tp - tc)),
    }
}

fn reciprocal(z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        Complex64::new(f64::INFINITY, 0.0)
    } else if LambdaRoots::is_infinite(z) {
        Complex64::new(0.0, 0.0)
    } else {
        z.inv()
    }
}

pub fn lambda_roots(params: &LatticeParams) -> Result<LambdaRoots> {
    let (tp, tc, d) = (params.t_p(), params.t_c(), params.delta());
    let scale = tp.abs().max(tc.abs());
    let den_minus = -tc - tp;
    let den_plus = tc - tp;
    let minus_dead = den_minus.abs() <= DEGENERATE_TOL * scale;
    let plus_dead = den_plus.abs() <= DEGENERATE_TOL * scale;
    if minus_dead && plus_dead {
        return Err(Error::DegenerateCoupling(format!("t_p = {tp}, t_c = {tc}")));
    }
    let s = Complex64::new(d * d + 4.0 * (tc * tc - tp * tp), 0.0).sqrt();
    let pair = |den: f64| ((d + s) / (2.0 * den), (d - s) / (2.0 * den));
    // Exact zeros when the numerator cancels (|t_c| = |t_p|).
    let clean = |z: Complex64| if z.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { z };
    let (m1, m2, p1, p2, degenerate) = if minus_dead {
        let (p1, p2) = pair(den_plus);
        let (p1, p2) = (clean(p1), clean(p2));
        (reciprocal(p2), reciprocal(p1), p1, p2, Some(Branch::Minus))
    } else if plus_dead {
        let (m1, m2) = pair(den_minus);
        let (m1, m2) = (clean(m1), clean(m2));
        (m1, m2, reciprocal(m2), reciprocal(m1), Some(Branch::Plus))
    } else {
        let (m1, m2) = pair(den_minus);
        let (p1, p2) = pair(den_plus);
        (m1, m2, p1, p2, None)
    };
    Ok(LambdaRoots { lam_minus_1: m1, lam_minus_2: m2, lam_plus_1: p1, lam_plus_2: p2, degenerate })
}

/// Residual of `root` in its branch's defining equation, multiplied
/// through by `lambda` so that zero roots are admissible.
pub fn quadratic_residual(params: &LatticeParams, branch: Branch, root: Complex64) -> f64 {
    let (tp, tc, d) = (params.t_p(), params.t_c(), params.delta());
    let (a, c) = match branch {
        Branch::Minus => (tp + tc, tp - tc),
        Branch::Plus => (tp - tc, tp + tc),
    };
    (root * root * a + root * d + c).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarization {
    /// `(1, -1)/sqrt 2`
    Minus,
    /// `(1, 1)/sqrt 2`
    Plus,
}

impl Polarization {
    pub fn spinor(self) -> [f64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Polarization::Minus => [h, -h],
            Polarization::Plus => [h, h],
        }
    }
    pub fn flipped(self) -> Self {
        match self {
            Polarization::Minus => Polarization::Plus,
            Polarization::Plus => Polarization::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStateSolution {
    pub psi_left: Vec<f64>,
    pub psi_right: Vec<f64>,
    pub polarization_left: Polarization,
    pub polarization_right: Polarization,
    /// `sum_n |lambda_1^n - lambda_2^n|^2` of the raw ansatz.
    pub norm_left: f64,
    pub norm_right: f64,
    /// 1 for the plus branch, 2 for the minus branch.
    pub case: u8,
    /// In cells, from the slower-decaying root.
    pub localization_length: f64,
    pub roots: LambdaRoots,
}

/// Cell amplitudes `a_n = (l1^n - l2^n) / (l1 - l2)` for `n = 1..=count`,
/// from the real recurrence `a_{n+1} = s a_n - p a_{n-1}`, `a_0 = 0`,
/// `a_1 = 1`. Conjugate-pair and coincident roots need no special casing.
fn envelope(sum: f64, prod: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..count {
        out.push(cur);
        let next = sum * cur - prod * prev;
        prev = cur;
        cur = next;
    }
    out
}

fn spinor_expand(amps: impl Iterator<Item = f64>, pol: Polarization, dim: usize) -> Vec<f64> {
    let [sa, sb] = pol.spinor();
    let mut v = Vec::with_capacity(dim);
    for a in amps {
        v.push(a * sa);
        v.push(a * sb);
    }
    v
}

pub fn analytic_edge_states(params: &LatticeParams) -> Result<EdgeStateSolution> {
    if !params.is_topological() {
        return Err(Error::NotTopological { delta_abs: params.delta().abs(), delta_c: params.delta_c() });
    }
    let roots = lambda_roots(params)?;
    let inside = |b: Branch| {
        let (a, c) = roots.pair(b);
        a.norm() < 1.0 && c.norm() < 1.0
    };
    let (branch, case, pol_left) = if inside(Branch::Minus) {
        (Branch::Minus, 2, Polarization::Minus)
    } else if inside(Branch::Plus) {
        (Branch::Plus, 1, Polarization::Plus)
    } else {
        return Err(Error::NoDecayingBranch);
    };
    let n = params.n_cells();
    let (l1, l2) = roots.pair(branch);
    let (sum, prod) = sum_product(params, branch);
    let amps = envelope(sum, prod, n);

    let raw_norm: f64 = (1..=n as i32).map(|k| (l1.powi(k) - l2.powi(k)).norm_sqr()).sum();
    let mut psi_left = spinor_expand(amps.iter().copied(), pol_left, 2 * n);
    let mut psi_right = spinor_expand(amps.iter().rev().copied(), pol_left.flipped(), 2 * n);
    normalize(&mut psi_left);
    normalize(&mut psi_right);

    let slow = l1.norm().max(l2.norm());
    let localization_length = if slow == 0.0 { 0.0 } else { -1.0 / slow.ln() };
    Ok(EdgeStateSolution {
        psi_left,
        psi_right,
        polarization_left: pol_left,
        polarization_right: pol_left.flipped(),
        norm_left: raw_norm,
        norm_right: raw_norm,
        case,
        localization_length,
        roots,
    })
}

impl EdgeStateSolution {
    /// `(site, psi_left, psi_right)` with 1-based sites; odd sites are A,
    /// even sites are B.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.psi_left.iter().zip(&self.psi_right).enumerate().map(|(i, (&l, &r))| (i + 1, l, r))
    }
}

/// Mid-gap doublet of a finite chain, recombined into edge-localized states.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericZeroModes {
    pub psi_left: Vec<f64>,
    pub psi_right: Vec<f64>,
    /// `|E_+ - E_-|`.
    pub splitting: f64,
    /// Doublet energies, ascending.
    pub energies: [f64; 2],
    /// Raw doublet eigenvectors matching `energies`.
    pub eigenvectors: [Vec<f64>; 2],
    /// Distance from the doublet to the nearest other level.
    pub edge_bulk_gap: f64,
}

/// Weight of `v` on cells `1..=N/2`.
pub fn left_half_weight(v: &[f64]) -> f64 {
    let half = 2 * (v.len() / 4);
    v[..half].iter().map(|x| x * x).sum()
}

/// Rotation of the doublet that extremizes left-half weight: eigenvectors
/// of the 2x2 matrix `W_ij = <v_i|P_L|v_j>`. For a symmetric tunneling
/// doublet this reduces to the sum and difference combinations.
pub(crate) fn edge_rotation(v0: &[f64], v1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = 2 * (v0.len() / 4);
    let w00 = dot(&v0[..half], &v0[..half]);
    let w11 = dot(&v1[..half], &v1[..half]);
    let w01 = dot(&v0[..half], &v1[..half]);
    // Angle maximizing cos^2 w00 + 2 sin cos w01 + sin^2 w11.
    let theta = 0.5 * (2.0 * w01).atan2(w00 - w11);
    let (s, c) = theta.sin_cos();
    let mut left: Vec<f64> = v0.iter().zip(v1).map(|(a, b)| c * a + s * b).collect();
    let mut right: Vec<f64> = v0.iter().zip(v1).map(|(a, b)| -s * a + c * b).collect();
    normalize(&mut left);
    normalize(&mut right);
    fix_sign(&mut left);
    fix_sign(&mut right);
    (left, right)
}

/// Make the largest-magnitude A-site amplitude positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let pivot = v.iter().step_by(2).copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn assemble(energies: [f64; 2], vecs: [Vec<f64>; 2], edge_bulk_gap: f64) -> NumericZeroModes {
    let (psi_left, psi_right) = edge_rotation(&vecs[0], &vecs[1]);
    NumericZeroModes {
        psi_left,
        psi_right,
        splitting: (energies[1] - energies[0]).abs(),
        energies,
        eigenvectors: vecs,
        edge_bulk_gap,
    }
}

fn separated(m: NumericZeroModes) -> Result<NumericZeroModes> {
    let own = m.energies[0].abs().max(m.energies[1].abs());
    if m.edge_bulk_gap < 3.0 * own {
        return Err(Error::NoZeroModes(format!(
            "doublet |E| = {own:e} vs distance to bulk {:e}",
            m.edge_bulk_gap
        )));
    }
    Ok(m)
}

pub fn numeric_zero_modes(spec: &SpectrumResult) -> Result<NumericZeroModes> {
    let [a, b] = spec.zero_mode_indices;
    separated(assemble(
        [spec.energies[a], spec.energies[b]],
        [spec.state(a), spec.state(b)],
        spec.edge_bulk_gap,
    ))
}

/// The two levels nearest zero, without checking that they are separated
/// from the bulk. Outside the topological phase this is the band-edge pair
/// that continues the edge doublet.
///
/// Uses shift-invert iteration on the band matrix and falls back to
/// inertia bisection when the levels near zero are too clustered for it.
pub fn nearest_doublet(h: &RealSpaceHamiltonian) -> Result<NumericZeroModes> {
    doublet(h, true)
}

/// As [`nearest_doublet`] but `edge_bulk_gap` is NaN unless it came for free.
pub(crate) fn nearest_pair(h: &RealSpaceHamiltonian) -> Result<NumericZeroModes> {
    doublet(h, false)
}

fn doublet(h: &RealSpaceHamiltonian, need_gap: bool) -> Result<NumericZeroModes> {
    match nearest_eigenpairs_guarded(h.band(), 0.0, 2, 4, need_gap) {
        Ok((pairs, next)) if !need_gap || !next.is_empty() => {
            let energies = [pairs[0].0, pairs[1].0];
            let gap = next
                .iter()
                .flat_map(|g| energies.iter().map(move |z| (g - z).abs()))
                .fold(f64::NAN, f64::min);
            let [(_, v0), (_, v1)]: [(f64, Vec<f64>); 2] = pairs.try_into().expect("two states");
            Ok(assemble(energies, [v0, v1], gap))
        }
        Ok(_) | Err(Error::EigensolverFailure(_)) => doublet_by_inertia(h),
        Err(e) => Err(e),
    }
}

/// The two levels nearest zero are adjacent in ascending order, so they
/// sit within two places of the inertia count at zero.
fn doublet_by_inertia(h: &RealSpaceHamiltonian) -> Result<NumericZeroModes> {
    let band = h.band();
    let n = band.dim();
    let below = count_below(band, 0.0);
    let lo = below.saturating_sub(2);
    let hi = (below + 2).min(n);
    let vals: Vec<f64> = (lo..hi).map(|k| kth_eigenvalue(band, k)).collect();
    let first = (lo..hi - 1)
        .min_by(|&a, &b| {
            let reach = |k: usize| vals[k - lo].abs().max(vals[k + 1 - lo].abs());
            reach(a).total_cmp(&reach(b))
        })
        .expect("at least two levels");
    let pairs = eigenpairs_by_index(band, first, 2)?;
    let energies = [pairs[0].0, pairs[1].0];
    let below_gap = (first > 0).then(|| energies[0] - kth_eigenvalue(band, first - 1));
    let above_gap = (first + 2 < n).then(|| kth_eigenvalue(band, first + 2) - energies[1]);
    let gap = below_gap.into_iter().chain(above_gap).fold(f64::INFINITY, f64::min);
    let [(_, v0), (_, v1)]: [(f64, Vec<f64>); 2] = pairs.try_into().expect("two states");
    Ok(assemble(energies, [v0, v1], gap))
}

/// Same as [`numeric_zero_modes`] but extracts only the few levels nearest
/// zero from the band matrix, for long chains.
pub fn numeric_zero_modes_banded(h: &RealSpaceHamiltonian) -> Result<NumericZeroModes> {
    separated(nearest_doublet(h)?)
}

/// `(|<L_a|L_n>|^2, |<R_a|R_n>|^2)`.
pub fn fidelity(analytic: &EdgeStateSolution, numeric: &NumericZeroModes) -> (f64, f64) {
    let f = |a: &[f64], b: &[f64]| {
        let o = dot(a, b);
        (o * o / (dot(a, a) * dot(b, b))).clamp(0.0, 1.0)
    };
    (f(&analytic.psi_left, &numeric.psi_left), f(&analytic.psi_right, &numeric.psi_right))
}
