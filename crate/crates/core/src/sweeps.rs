//! Parameter scans: coherence curves and their transition point, finite-size
//! scaling, disorder ensembles, bulk decay tables, phase diagrams and
//! resonant susceptibility scans.
//!
//! Every point is an independent pure computation. Points run on the
//! current rayon pool and are gathered in input order, so outputs do not
//! depend on the thread count.
//!
//! Edge targets are resolved from the mid-gap doublet of the finite chain.
//! When its splitting is below [`SweepOptions::tunneling_resolution`] the
//! doublet is treated as degenerate and rotated into the requested edge
//! (or replaced by the analytic state when `|delta| <= analytic_fraction *
//! delta_c`). A resolved splitting means tunneling has hybridized the two
//! edges and the actual eigenvector is used.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edgestates::{analytic_edge_states, left_half_weight, nearest_pair, numeric_zero_modes_banded, NumericZeroModes};
use crate::error::{invalid, Error, Result};
use crate::lattice::{real_space_hamiltonian, spectrum, winding_number, RealSpaceHamiltonian};
use crate::linalg::dot;
use crate::model::{DisorderSpec, DissipationParams, LatticeParams};
use crate::response::{effective_decay, transmission, LinearResponseSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Doublet splittings below this (energy units) count as degenerate.
    pub tunneling_resolution: f64,
    /// Analytic edge states are used for degenerate doublets with
    /// `|delta| <= analytic_fraction * delta_c`.
    pub analytic_fraction: f64,
    pub xi_scale: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { tunneling_resolution: 1e-12, analytic_fraction: 0.8, xi_scale: 0.01 }
    }
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tunneling_resolution.is_finite() && self.tunneling_resolution >= 0.0) {
            return Err(invalid("tunneling_resolution", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.analytic_fraction) {
            return Err(invalid("analytic_fraction", "must lie in [0, 1]"));
        }
        if !(self.xi_scale.is_finite() && self.xi_scale > 0.0) {
            return Err(invalid("xi_scale", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSource {
    Analytic,
    /// Degenerate doublet rotated into one edge.
    Rotated,
    /// Resolved doublet; the eigenvector itself.
    Hybridized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMode {
    /// Unit-norm profile.
    pub profile: Vec<f64>,
    pub energy: f64,
    pub source: ModeSource,
    pub splitting: f64,
}

fn rayleigh(h: &RealSpaceHamiltonian, v: &[f64]) -> f64 {
    dot(v, &h.apply(v)) / dot(v, v)
}

fn side_weight(v: &[f64], side: EdgeSide) -> f64 {
    let left = left_half_weight(v);
    match side {
        EdgeSide::Left => left,
        EdgeSide::Right => dot(v, v) - left,
    }
}

/// Edge mode of `h` from an already extracted doublet.
fn resolve_from_doublet(
    h: &RealSpaceHamiltonian,
    doublet: NumericZeroModes,
    side: EdgeSide,
    analytic: Option<&LatticeParams>,
    opts: &SweepOptions,
) -> Result<ResolvedMode> {
    let splitting = doublet.splitting;
    if splitting < opts.tunneling_resolution {
        if let Some(p) = analytic {
            if p.is_topological() && p.delta().abs() <= opts.analytic_fraction * p.delta_c() {
                let e = analytic_edge_states(p)?;
                let profile = if side == EdgeSide::Left { e.psi_left } else { e.psi_right };
                return Ok(ResolvedMode { profile, energy: 0.0, source: ModeSource::Analytic, splitting });
            }
        }
        let profile = if side == EdgeSide::Left { doublet.psi_left } else { doublet.psi_right };
        let energy = rayleigh(h, &profile);
        return Ok(ResolvedMode { profile, energy, source: ModeSource::Rotated, splitting });
    }
    let [v0, v1] = doublet.eigenvectors;
    let pick_first = side_weight(&v0, side) > side_weight(&v1, side);
    let (profile, energy) = if pick_first { (v0, doublet.energies[0]) } else { (v1, doublet.energies[1]) };
    Ok(ResolvedMode { profile, energy, source: ModeSource::Hybridized, splitting })
}

/// Edge mode of a clean chain.
pub fn resolve_edge_mode(lattice: &LatticeParams, side: EdgeSide, opts: &SweepOptions) -> Result<(RealSpaceHamiltonian, ResolvedMode)> {
    let h = real_space_hamiltonian(lattice);
    let doublet = nearest_pair(&h)?;
    let mode = resolve_from_doublet(&h, doublet, side, Some(lattice), opts)?;
    Ok((h, mode))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherencePoint {
    pub delta: f64,
    pub gamma_eff: f64,
    pub target_energy: f64,
    pub dark: bool,
    pub hybridized: bool,
    /// `Im chi` at the mode resonance (0 when dark).
    pub im_chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointError {
    pub parameter: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceCurve {
    pub points: Vec<CoherencePoint>,
    pub errors: Vec<PointError>,
    pub gamma_ab: f64,
    pub target: EdgeSide,
    pub n_cells: usize,
    /// Set by [`crossover_curve`]: no crossing of `gamma` but an inflection.
    pub crossover: Option<bool>,
}

impl CoherenceCurve {
    pub fn delta_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }
    pub fn gamma_eff(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gamma_eff).collect()
    }
}

/// `gamma_eff` of the `side` edge mode at one value of `delta`.
pub fn coherence_point(
    lattice: &LatticeParams,
    diss: &DissipationParams,
    side: EdgeSide,
    opts: &SweepOptions,
) -> Result<CoherencePoint> {
    let (h, mode) = resolve_edge_mode(lattice, side, opts)?;
    let xi: Vec<f64> = mode.profile.iter().map(|x| opts.xi_scale * x).collect();
    let sys = LinearResponseSystem::new(&h, diss, &xi, mode.energy)?;
    let d = effective_decay(&sys)?;
    Ok(CoherencePoint {
        delta: lattice.delta(),
        gamma_eff: d.gamma_eff,
        target_energy: mode.energy,
        dark: d.dark,
        hybridized: mode.source == ModeSource::Hybridized,
        im_chi: d.chi.map_or(0.0, |c| c.im),
    })
}

// Negated comparisons also reject NaN.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_grid(grid: &[f64], delta_c: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("delta_grid", "empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("delta_grid", "must be strictly increasing"));
    }
    let lim = 1.5 * delta_c;
    if grid.iter().any(|d| !(d.abs() < lim)) {
        return Err(invalid("delta_grid", format!("entries must lie in (-{lim}, {lim})")));
    }
    Ok(())
}

pub fn coherence_curve(
    base: &LatticeParams,
    diss: &DissipationParams,
    side: EdgeSide,
    gamma_ab: f64,
    delta_grid: &[f64],
    opts: &SweepOptions,
) -> Result<CoherenceCurve> {
    opts.validate()?;
    check_grid(delta_grid, base.delta_c())?;
    let diss = diss.with_gamma_ab(gamma_ab)?;
    let results: Vec<Result<CoherencePoint>> = delta_grid
        .par_iter()
        .map(|&d| coherence_point(&base.with_delta(d)?, &diss, side, opts))
        .collect();
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for (r, &d) in results.into_iter().zip(delta_grid) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => errors.push(PointError { parameter: d, message: e.to_string() }),
        }
    }
    Ok(CoherenceCurve { points, errors, gamma_ab, target: side, n_cells: base.n_cells(), crossover: None })
}

/// Same pipeline as [`coherence_curve`] for `|t_c| != |t_p|`, tagged with
/// whether `gamma_eff - gamma` stays one-signed yet bends.
pub fn crossover_curve(
    base: &LatticeParams,
    diss: &DissipationParams,
    gamma_ab: f64,
    delta_grid: &[f64],
    opts: &SweepOptions,
) -> Result<CoherenceCurve> {
    let mut c = coherence_curve(base, diss, EdgeSide::Right, gamma_ab, delta_grid, opts)?;
    c.crossover = Some(is_crossover(&c.gamma_eff(), diss.gamma_ref()));
    Ok(c)
}

/// `gamma_eff - gamma` keeps one sign along the samples but its discrete
/// curvature changes sign.
pub fn is_crossover(gamma_eff: &[f64], gamma: f64) -> bool {
    let f: Vec<f64> = gamma_eff.iter().map(|g| g - gamma).collect();
    let crosses = f.windows(2).any(|w| w[0] * w[1] < 0.0);
    let curv: Vec<f64> = f.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let inflects = curv.windows(2).any(|w| w[0] * w[1] < 0.0);
    !crosses && inflects
}

/// Number of interior coarse-scan points in `(0, delta_c)`.
pub const TRANSITION_SCAN_POINTS: usize = 200;
/// Bisection stops once the bracket is narrower than this.
pub const TRANSITION_TOL: f64 = 1e-6;

/// First downward crossing of `gamma_eff = gamma` for the right edge as
/// `delta` runs over `(0, delta_c)`.
pub fn find_coherence_transition(
    base: &LatticeParams,
    diss: &DissipationParams,
    gamma_ab: f64,
    opts: &SweepOptions,
) -> Result<f64> {
    opts.validate()?;
    if gamma_ab <= 0.0 {
        return Err(Error::NoTransition(format!("gamma_ab = {gamma_ab}: curve is flat")));
    }
    let diss = diss.with_gamma_ab(gamma_ab)?;
    let g = diss.gamma_ref();
    let dc = base.delta_c();
    let excess = |d: f64| -> Result<f64> {
        Ok(coherence_point(&base.with_delta(d)?, &diss, EdgeSide::Right, opts)?.gamma_eff - g)
    };
    let grid: Vec<f64> =
        (1..=TRANSITION_SCAN_POINTS).map(|i| dc * i as f64 / (TRANSITION_SCAN_POINTS + 1) as f64).collect();
    let f: Vec<Result<f64>> = grid.par_iter().map(|&d| excess(d)).collect();
    let f: Vec<f64> = f.into_iter().collect::<Result<_>>()?;
    let i = (0..grid.len() - 1)
        .find(|&i| f[i] > 0.0 && f[i + 1] < 0.0)
        .ok_or_else(|| Error::NoTransition(format!("no sign change of gamma_eff - gamma on {} points", grid.len())))?;
    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    while hi - lo > TRANSITION_TOL {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

/// Ordinary least squares `y = intercept + slope x`; `None` below two points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit { intercept: my - slope * mx, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub n_list: Vec<usize>,
    pub delta_m: Vec<f64>,
    pub delta_c: f64,
    /// `delta_m` against `1/N`.
    pub fit_inverse_n: Option<LinearFit>,
    /// `ln delta_m` against `1/N`; its intercept is `ln delta_m(inf)`.
    pub fit_log: Option<LinearFit>,
}

impl ScalingResult {
    pub fn gap_to_critical(&self) -> Vec<f64> {
        self.delta_m.iter().map(|d| self.delta_c - d).collect()
    }
    pub fn extrapolated_inverse_n(&self) -> Option<f64> {
        self.fit_inverse_n.map(|f| f.intercept)
    }
    pub fn extrapolated_log(&self) -> Option<f64> {
        self.fit_log.map(|f| f.intercept.exp())
    }
}

pub fn finite_size_scaling(
    base: &LatticeParams,
    diss: &DissipationParams,
    gamma_ab: f64,
    n_list: &[usize],
    opts: &SweepOptions,
) -> Result<ScalingResult> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_list", "must be non-empty and strictly ascending"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < 20) {
        return Err(invalid("n_list", format!("lattice sizes must be >= 20, got {n}")));
    }
    let mut delta_m = Vec::with_capacity(n_list.len());
    for &n in n_list {
        delta_m.push(find_coherence_transition(&base.with_n_cells(n)?, diss, gamma_ab, opts)?);
    }
    let inv: Vec<f64> = n_list.iter().map(|&n| 1.0 / n as f64).collect();
    let logs: Vec<f64> = delta_m.iter().map(|d| d.ln()).collect();
    Ok(ScalingResult {
        n_list: n_list.to_vec(),
        fit_inverse_n: linear_fit(&inv, &delta_m),
        fit_log: linear_fit(&inv, &logs),
        delta_m,
        delta_c: base.delta_c(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisorderSummary {
    pub epsilon: f64,
    pub mean_gamma_eff: f64,
    pub std_gamma_eff: f64,
    /// Samples that entered the statistics.
    pub n_samples: usize,
    pub seed: u64,
    /// Samples dropped because no mid-gap doublet separated from the bulk.
    pub failures: Vec<PointError>,
    pub clean_gamma_eff: f64,
    /// Per-sample values in sample order (`NaN` for failed samples).
    pub samples: Vec<f64>,
}

/// On-site shifts of sample `index`: stream `index` of a ChaCha8 generator
/// keyed by `seed`, `2N` draws from `U[-epsilon, epsilon]`.
pub fn disorder_shifts(seed: u64, index: u64, epsilon: f64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..dim).map(|_| rng.random_range(-epsilon..=epsilon)).collect()
}

fn disordered_decay(
    h: &RealSpaceHamiltonian,
    diss: &DissipationParams,
    side: EdgeSide,
    opts: &SweepOptions,
) -> Result<f64> {
    let doublet = numeric_zero_modes_banded(h)?;
    let mode = resolve_from_doublet(h, doublet, side, None, opts)?;
    let xi: Vec<f64> = mode.profile.iter().map(|x| opts.xi_scale * x).collect();
    Ok(effective_decay(&LinearResponseSystem::new(h, diss, &xi, mode.energy)?)?.gamma_eff)
}

pub fn disorder_ensemble(
    base: &LatticeParams,
    diss: &DissipationParams,
    side: EdgeSide,
    gamma_ab: f64,
    spec: &DisorderSpec,
    opts: &SweepOptions,
) -> Result<DisorderSummary> {
    opts.validate()?;
    let diss = diss.with_gamma_ab(gamma_ab)?;
    let clean = real_space_hamiltonian(base);
    let clean_gamma_eff = disordered_decay(&clean, &diss, side, opts)?;
    let per_sample: Vec<Result<f64>> = (0..spec.n_samples() as u64)
        .into_par_iter()
        .map(|i| {
            let shifts = disorder_shifts(spec.seed(), i, spec.epsilon(), clean.dim());
            disordered_decay(&clean.with_onsite_shifts(&shifts)?, &diss, side, opts)
        })
        .collect();
    let mut samples = Vec::with_capacity(per_sample.len());
    let mut failures = Vec::new();
    for (i, r) in per_sample.into_iter().enumerate() {
        match r {
            Ok(g) => samples.push(g),
            Err(e @ Error::NoZeroModes(_)) => {
                samples.push(f64::NAN);
                failures.push(PointError { parameter: i as f64, message: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    let good: Vec<f64> = samples.iter().copied().filter(|g| !g.is_nan()).collect();
    let n = good.len();
    let mean = if n > 0 { good.iter().sum::<f64>() / n as f64 } else { f64::NAN };
    let var = if n > 0 { good.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n as f64 } else { f64::NAN };
    Ok(DisorderSummary {
        epsilon: spec.epsilon(),
        mean_gamma_eff: mean,
        std_gamma_eff: var.sqrt(),
        n_samples: n,
        seed: spec.seed(),
        failures,
        clean_gamma_eff,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BulkDecay {
    pub index: usize,
    pub energy: f64,
    pub gamma_eff: f64,
}

/// `gamma_eff` of every eigenstate except the two mid-gap ones, each at
/// its own resonance.
pub fn bulk_decay_scan(
    lattice: &LatticeParams,
    diss: &DissipationParams,
    gamma_ab: f64,
    xi_scale: f64,
) -> Result<Vec<BulkDecay>> {
    let diss = diss.with_gamma_ab(gamma_ab)?;
    let h = real_space_hamiltonian(lattice);
    let s = spectrum(&h)?;
    let indices: Vec<usize> = (0..s.energies.len()).filter(|i| !s.zero_mode_indices.contains(i)).collect();
    indices
        .par_iter()
        .map(|&i| {
            let xi: Vec<f64> = s.states.column(i).iter().map(|x| xi_scale * x).collect();
            let sys = LinearResponseSystem::new(&h, &diss, &xi, s.energies[i])?;
            Ok(BulkDecay { index: i, energy: s.energies[i], gamma_eff: effective_decay(&sys)?.gamma_eff })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub delta: f64,
    pub t_c: f64,
    /// `None` where the Bloch gap closes.
    pub winding: Option<i32>,
    pub min_gap: f64,
}

/// Winding on the `delta x t_c` grid, row-major in `delta`.
pub fn phase_diagram(
    t_p: f64,
    deltas: &[f64],
    t_cs: &[f64],
    n_k: usize,
) -> Result<Vec<PhaseCell>> {
    let pairs: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| t_cs.iter().map(move |&t| (d, t))).collect();
    pairs
        .par_iter()
        .map(|&(d, t)| {
            let p = LatticeParams::new(d, t_p, t, 2)?;
            match winding_number(&p, n_k) {
                Ok(pp) => Ok(PhaseCell { delta: d, t_c: t, winding: Some(pp.winding), min_gap: pp.gap_at_k0 }),
                Err(Error::GapClosed { min_gap }) => Ok(PhaseCell { delta: d, t_c: t, winding: None, min_gap }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiScanPoint {
    pub delta: f64,
    pub re_chi: f64,
    pub im_chi: f64,
    /// Transmission on the mode resonance (`0` when dark).
    pub transmission: f64,
    pub gamma_eff: f64,
}

/// Susceptibility on the edge-mode resonance as `delta` varies.
pub fn chi_scan(
    base: &LatticeParams,
    diss: &DissipationParams,
    side: EdgeSide,
    delta_grid: &[f64],
    opts: &SweepOptions,
) -> Vec<Result<ChiScanPoint>> {
    delta_grid
        .par_iter()
        .map(|&d| {
            let p = base.with_delta(d)?;
            let (h, mode) = resolve_edge_mode(&p, side, opts)?;
            let xi: Vec<f64> = mode.profile.iter().map(|x| opts.xi_scale * x).collect();
            let sys = LinearResponseSystem::new(&h, diss, &xi, mode.energy)?;
            let dec = effective_decay(&sys)?;
            let chi = dec.chi.unwrap_or_default();
            let t = match dec.chi {
                Some(c) => transmission(diss.kappa(), -mode.energy, c),
                None => 0.0,
            };
            Ok(ChiScanPoint { delta: d, re_chi: chi.re, im_chi: chi.im, transmission: t, gamma_eff: dec.gamma_eff })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize) -> LatticeParams {
        LatticeParams::new(0.12, -0.1, -0.1, n).unwrap()
    }
    fn diss() -> DissipationParams {
        DissipationParams::symmetric(0.1, 0.09, 1.0).unwrap()
    }

    #[test]
    fn flat_without_correlated_decay() {
        let grid: Vec<f64> = (0..12).map(|i| -0.28 + 0.05 * i as f64).collect();
        for side in [EdgeSide::Left, EdgeSide::Right] {
            let c = coherence_curve(&base(60), &diss(), side, 0.0, &grid, &SweepOptions::default()).unwrap();
            assert!(c.errors.is_empty(), "{:?}", c.errors);
            for p in &c.points {
                assert!((p.gamma_eff - 0.1).abs() < 1e-6, "{p:?}");
            }
        }
    }

    #[test]
    fn deep_phase_edges_split_by_polarization() {
        let opts = SweepOptions::default();
        let l = coherence_point(&base(100), &diss(), EdgeSide::Left, &opts).unwrap();
        let r = coherence_point(&base(100), &diss(), EdgeSide::Right, &opts).unwrap();
        assert!((l.gamma_eff - 0.01).abs() < 1e-8 && (r.gamma_eff - 0.19).abs() < 1e-8);
        assert!(!l.hybridized && !r.hybridized);
    }

    #[test]
    fn rotated_doublet_agrees_with_analytic() {
        let opts = SweepOptions { analytic_fraction: 0.0, ..SweepOptions::default() };
        let p = base(100);
        let (_, m) = resolve_edge_mode(&p, EdgeSide::Right, &opts).unwrap();
        assert_eq!(m.source, ModeSource::Rotated);
        let a = analytic_edge_states(&p).unwrap();
        assert!((dot(&m.profile, &a.psi_right).abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn transition_moves_toward_critical_point() {
        let opts = SweepOptions::default();
        let a = find_coherence_transition(&base(50), &diss(), 0.09, &opts).unwrap();
        let b = find_coherence_transition(&base(100), &diss(), 0.09, &opts).unwrap();
        assert!(0.0 < a && a < b && b < 0.2, "{a} {b}");
    }

    #[test]
    fn no_transition_without_correlation() {
        assert!(matches!(
            find_coherence_transition(&base(50), &diss(), 0.0, &SweepOptions::default()),
            Err(Error::NoTransition(_))
        ));
    }

    #[test]
    fn single_size_has_no_fit() {
        let s = finite_size_scaling(&base(50), &diss(), 0.09, &[50], &SweepOptions::default()).unwrap();
        assert_eq!(s.delta_m.len(), 1);
        assert!(s.fit_inverse_n.is_none() && s.fit_log.is_none());
    }

    #[test]
    fn fit_recovers_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.intercept - 1.0).abs() < 1e-14 && (f.slope - 2.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn zero_disorder_reproduces_clean_value() {
        let spec = DisorderSpec::new(0.0, 8, 7).unwrap();
        let s = disorder_ensemble(&base(40), &diss(), EdgeSide::Right, 0.09, &spec, &SweepOptions::default()).unwrap();
        assert!(s.std_gamma_eff < 1e-15);
        assert!((s.mean_gamma_eff - s.clean_gamma_eff).abs() < 1e-12);
    }

    #[test]
    fn disorder_streams_are_independent_of_order() {
        let a = disorder_shifts(11, 5, 0.1, 16);
        let b = disorder_shifts(11, 5, 0.1, 16);
        let c = disorder_shifts(11, 6, 0.1, 16);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|x| x.abs() <= 0.1));
    }

    #[test]
    fn disorder_deviation_shrinks_with_strength() {
        let opts = SweepOptions::default();
        let dev = |eps: f64| {
            let spec = DisorderSpec::new(eps, 40, 3).unwrap();
            let s = disorder_ensemble(&base(60), &diss(), EdgeSide::Right, 0.09, &spec, &opts).unwrap();
            (s.mean_gamma_eff - s.clean_gamma_eff).abs()
        };
        let r = dev(0.01) / dev(0.005);
        assert!(r >= 1.8, "ratio {r}");
    }

    #[test]
    fn bulk_scan_properties() {
        let rows = bulk_decay_scan(&base(40), &diss(), 0.09, 0.01).unwrap();
        assert_eq!(rows.len(), 78);
        let by_index = |i: usize| rows.iter().find(|r| r.index == i).unwrap().gamma_eff;
        for r in &rows {
            assert!(r.gamma_eff < 0.1);
            assert!((r.gamma_eff - by_index(79 - r.index)).abs() < 1e-6);
        }
        let flat = bulk_decay_scan(&base(40), &diss(), 0.0, 0.01).unwrap();
        assert!(flat.iter().all(|r| (r.gamma_eff - 0.1).abs() < 1e-6));
    }

    #[test]
    fn phase_diagram_marks_closed_gap() {
        let cells = phase_diagram(-0.1, &[-0.2, 0.0, 0.3], &[-0.1], 256).unwrap();
        assert_eq!(cells[0].winding, None);
        assert_eq!(cells[1].winding, Some(1));
        assert_eq!(cells[2].winding, Some(0));
    }

    #[test]
    fn crossover_tag_and_complex_branch() {
        let p = LatticeParams::new(0.0, -0.1, -0.05, 40).unwrap();
        let grid = [-0.1, -0.05, 0.0, 0.05, 0.1];
        let c = crossover_curve(&p, &diss(), 0.09, &grid, &SweepOptions::default()).unwrap();
        assert!(c.errors.is_empty());
        assert!(c.points.iter().all(|p| p.gamma_eff.is_finite()));
        assert!(c.crossover.is_some());
    }

    #[test]
    fn equal_couplings_crossover_matches_coherence() {
        let grid = [0.05, 0.1, 0.15];
        let opts = SweepOptions::default();
        let a = coherence_curve(&base(40), &diss(), EdgeSide::Right, 0.09, &grid, &opts).unwrap();
        let b = crossover_curve(&base(40), &diss(), 0.09, &grid, &opts).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn rejects_bad_grids() {
        let opts = SweepOptions::default();
        assert!(coherence_curve(&base(20), &diss(), EdgeSide::Left, 0.09, &[0.1, 0.05], &opts).is_err());
        assert!(coherence_curve(&base(20), &diss(), EdgeSide::Left, 0.09, &[0.35], &opts).is_err());
    }
}
