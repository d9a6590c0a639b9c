//! Steady-state linear response of the driven cavity-plus-chain system.
//!
//! `M = H - i Gamma` with `Gamma` block diagonal per cell,
//! `[[gamma_A, gamma_AB], [gamma_AB, gamma_B]]`. The susceptibility is
//! `chi(delta_a) = Xi^T (M + delta_a I)^-1 Xi` with a plain transpose, and
//! the transmission `T = |kappa / (kappa + i Delta_c - i chi)|^2`.
//!
//! In the default [`DetuningConvention::Shifted`] convention the atomic
//! block follows the probe, `delta_a = Delta_c`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edgestates::analytic_edge_states;
use crate::error::{invalid, Error, Result};
use crate::lattice::{real_space_hamiltonian, spectrum, RealSpaceHamiltonian};
use crate::linalg::{bilinear, dense_complex_solve, norm2, BandLu, BandMatrix};
use crate::model::{DissipationParams, DriveSpec, DriveTarget, LatticeParams};

/// Relative solve residual above which a system is reported singular.
pub const SINGULAR_RESIDUAL: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningConvention {
    /// Atomic detuning equals the probe detuning.
    #[default]
    Shifted,
    /// Atomic block fixed at `delta_a = 0` for every probe detuning.
    Unshifted,
}

impl DetuningConvention {
    fn atomic_detuning(self, delta_c: f64) -> f64 {
        match self {
            DetuningConvention::Shifted => delta_c,
            DetuningConvention::Unshifted => 0.0,
        }
    }
}

/// Coupling vector and the energy of the mode it addresses.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub xi: Vec<f64>,
    pub target_energy: f64,
}

/// `Xi = xi_scale * (unit target profile)`. Edge targets use the analytic
/// edge states at zero energy; bulk targets use the dense spectrum; a
/// custom vector gets its Rayleigh quotient as target energy.
pub fn coupling_vector(target: &DriveTarget, lattice: &LatticeParams, xi_scale: f64) -> Result<Coupling> {
    if !(xi_scale.is_finite() && xi_scale > 0.0) {
        return Err(invalid("xi_scale", format!("must be finite and > 0, got {xi_scale}")));
    }
    let scaled = |v: &[f64]| {
        let n = norm2(v);
        v.iter().map(|x| xi_scale * x / n).collect::<Vec<f64>>()
    };
    match target {
        DriveTarget::LeftEdge | DriveTarget::RightEdge => {
            let e = analytic_edge_states(lattice)?;
            let v = if *target == DriveTarget::LeftEdge { &e.psi_left } else { &e.psi_right };
            Ok(Coupling { xi: scaled(v), target_energy: 0.0 })
        }
        DriveTarget::BulkIndex(n) => {
            let len = lattice.dim();
            if *n >= len {
                return Err(Error::BadIndex { index: *n, len });
            }
            let s = spectrum(&real_space_hamiltonian(lattice))?;
            Ok(Coupling { xi: scaled(&s.state(*n)), target_energy: s.energies[*n] })
        }
        DriveTarget::CustomVector(v) => {
            if v.len() != lattice.dim() {
                return Err(Error::DimensionMismatch { expected: lattice.dim(), got: v.len() });
            }
            let n = norm2(v);
            if !(n.is_finite() && n > 0.0) {
                return Err(invalid("target", "custom vector must be finite and nonzero"));
            }
            let h = real_space_hamiltonian(lattice);
            let hv = h.apply(v);
            let e = v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>() / (n * n);
            Ok(Coupling { xi: scaled(v), target_energy: e })
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearResponseSystem {
    m: BandMatrix<Complex64>,
    xi: Vec<Complex64>,
    target_energy: f64,
    dissipation: DissipationParams,
}

impl LinearResponseSystem {
    pub fn new(
        h: &RealSpaceHamiltonian,
        dissipation: &DissipationParams,
        xi: &[f64],
        target_energy: f64,
    ) -> Result<Self> {
        let dim = h.dim();
        if xi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: xi.len() });
        }
        let mut m = h.band().to_complex();
        let (ga, gb, gab) = (dissipation.gamma_a(), dissipation.gamma_b(), dissipation.gamma_ab());
        for c in 0..dim / 2 {
            let (a, b) = (2 * c, 2 * c + 1);
            m.set(a, a, m.get(a, a) - I * ga);
            m.set(b, b, m.get(b, b) - I * gb);
            m.set(a, b, m.get(a, b) - I * gab);
            m.set(b, a, m.get(b, a) - I * gab);
        }
        Ok(Self {
            m,
            xi: xi.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            target_energy,
            dissipation: *dissipation,
        })
    }

    /// Builds the chain from `lattice` and the coupling from `target`.
    pub fn assemble(
        lattice: &LatticeParams,
        dissipation: &DissipationParams,
        target: &DriveTarget,
        xi_scale: f64,
    ) -> Result<Self> {
        let c = coupling_vector(target, lattice, xi_scale)?;
        Self::new(&real_space_hamiltonian(lattice), dissipation, &c.xi, c.target_energy)
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }
    pub fn m_matrix(&self) -> &BandMatrix<Complex64> {
        &self.m
    }
    pub fn xi(&self) -> &[Complex64] {
        &self.xi
    }
    pub fn target_energy(&self) -> f64 {
        self.target_energy
    }
    pub fn dissipation(&self) -> &DissipationParams {
        &self.dissipation
    }
    /// `Xi^T Xi`.
    pub fn xi_square(&self) -> Complex64 {
        bilinear(&self.xi, &self.xi)
    }

    fn shifted(&self, delta_a: f64) -> BandMatrix<Complex64> {
        let mut m = self.m.clone();
        m.add_to_diagonal(Complex64::new(delta_a, 0.0));
        m
    }

    /// `(M + delta_a I)^-1 Xi`.
    pub fn polarization(&self, delta_a: f64) -> Result<Vec<Complex64>> {
        let lu = self.shifted(delta_a).lu()?;
        let (x, residual) = lu.solve(&self.xi);
        if residual > SINGULAR_RESIDUAL {
            return Err(Error::SingularSystem { residual });
        }
        Ok(x)
    }

    /// Copy with `Xi` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.xi.iter_mut().for_each(|x| *x *= c);
        s
    }
}

pub fn susceptibility(sys: &LinearResponseSystem, delta_a: f64) -> Result<Complex64> {
    Ok(bilinear(&sys.xi, &sys.polarization(delta_a)?))
}

/// Same as [`susceptibility`] but solving `(M + delta_a I)^T y = Xi`.
pub fn susceptibility_transposed(sys: &LinearResponseSystem, delta_a: f64) -> Result<Complex64> {
    let lu: BandLu<Complex64> = sys.shifted(delta_a).lu()?;
    let (y, residual) = lu.solve_transpose(&sys.xi);
    if residual > SINGULAR_RESIDUAL {
        return Err(Error::SingularSystem { residual });
    }
    Ok(bilinear(&sys.xi, &y))
}

pub fn transmission(kappa: f64, delta_c: f64, chi: Complex64) -> f64 {
    let denom = Complex64::new(kappa, delta_c) - I * chi;
    (kappa / denom.norm()).powi(2)
}

/// `-Im(Xi^T Xi / chi)`; `None` when `chi = 0`.
pub fn decay_from_chi(xi_square: Complex64, chi: Complex64) -> Option<f64> {
    (chi != Complex64::new(0.0, 0.0)).then(|| -(xi_square / chi).im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseResult {
    pub detuning: f64,
    pub chi: Complex64,
    pub transmission: f64,
    /// `-Im(Xi^T Xi / chi)` at this detuning.
    pub gamma_eff: Option<f64>,
}

pub fn response_at(
    sys: &LinearResponseSystem,
    delta_c: f64,
    convention: DetuningConvention,
) -> Result<ResponseResult> {
    let chi = susceptibility(sys, convention.atomic_detuning(delta_c))?;
    Ok(ResponseResult {
        detuning: delta_c,
        chi,
        transmission: transmission(sys.dissipation.kappa(), delta_c, chi),
        gamma_eff: decay_from_chi(sys.xi_square(), chi),
    })
}

/// One entry per grid point, in grid order; failed points keep their error.
pub fn transmission_spectrum(
    sys: &LinearResponseSystem,
    grid: &[f64],
    convention: DetuningConvention,
) -> Vec<Result<ResponseResult>> {
    grid.par_iter().map(|&d| response_at(sys, d, convention)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveDecay {
    pub gamma_eff: f64,
    /// Set when the resonant solve is singular (a decoupled dark mode).
    pub dark: bool,
    pub chi: Option<Complex64>,
}

/// `gamma_eff` at mode resonance `delta_a = -E_target`.
pub fn effective_decay(sys: &LinearResponseSystem) -> Result<EffectiveDecay> {
    match susceptibility(sys, -sys.target_energy) {
        Ok(chi) => {
            let g = decay_from_chi(sys.xi_square(), chi)
                .ok_or_else(|| invalid("xi", "coupling vector is zero; effective decay undefined"))?;
            Ok(EffectiveDecay { gamma_eff: g, dark: false, chi: Some(chi) })
        }
        Err(Error::SingularSystem { .. }) => Ok(EffectiveDecay { gamma_eff: 0.0, dark: true, chi: None }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonantTransmission {
    /// `T` at `Delta_c = -E_target`.
    pub transmission: f64,
    pub chi: Option<Complex64>,
    /// Set when the resonant solve is singular; `T` is then its limit 0.
    pub dark: bool,
}

/// Transmission on the addressed mode's resonance. A lossless mode with
/// nonzero coupling sends `Im chi` to infinity, so the dark case reports
/// `T = 0` with a flag instead of an error.
pub fn resonant_transmission(sys: &LinearResponseSystem) -> Result<ResonantTransmission> {
    let delta_c = -sys.target_energy;
    match susceptibility(sys, delta_c) {
        Ok(chi) => Ok(ResonantTransmission {
            transmission: transmission(sys.dissipation.kappa(), delta_c, chi),
            chi: Some(chi),
            dark: false,
        }),
        Err(Error::SingularSystem { .. }) => {
            Ok(ResonantTransmission { transmission: 0.0, chi: None, dark: true })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateCheck {
    /// `|x_ode - x_alg| / |x_alg|` over `(f, sigma)`.
    pub residual: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Largest real part of the drift spectrum.
    pub max_re: f64,
    pub cavity_field: Complex64,
}

/// Drift matrix of `d/dt (f, sigma) = A (f, sigma) + (eta, 0)`.
fn drift_matrix(sys: &LinearResponseSystem, delta_c: f64, convention: DetuningConvention) -> DMatrix<Complex64> {
    let n = sys.dim();
    let kappa = sys.dissipation.kappa();
    let da = convention.atomic_detuning(delta_c);
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a[(0, 0)] = -Complex64::new(kappa, delta_c);
    for j in 0..n {
        a[(0, j + 1)] = -I * sys.xi[j];
        a[(j + 1, 0)] = -I * sys.xi[j];
        for k in j.saturating_sub(3)..(j + 4).min(n) {
            let mut v = sys.m.get(j, k);
            if j == k {
                v += da;
            }
            a[(j + 1, k + 1)] = -I * v;
        }
    }
    a
}

/// Algebraic steady state `(f, sigma)` from the band solve.
pub fn algebraic_steady_state(
    sys: &LinearResponseSystem,
    delta_c: f64,
    eta: f64,
    convention: DetuningConvention,
) -> Result<Vec<Complex64>> {
    let p = sys.polarization(convention.atomic_detuning(delta_c))?;
    let chi = bilinear(&sys.xi, &p);
    let f = eta / (Complex64::new(sys.dissipation.kappa(), delta_c) - I * chi);
    let mut x = Vec::with_capacity(sys.dim() + 1);
    x.push(f);
    x.extend(p.iter().map(|pj| -pj * f));
    Ok(x)
}

/// Integrates the cavity and polarization equations from rest with
/// adaptive backward Euler (step doubling for error control) and compares
/// the late-time state with [`algebraic_steady_state`].
pub fn steady_state_check(
    sys: &LinearResponseSystem,
    drive: &DriveSpec,
    delta_c: f64,
    convention: DetuningConvention,
) -> Result<SteadyStateCheck> {
    let a = drift_matrix(sys, delta_c, convention);
    let dim = a.nrows();
    let eig = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 100_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::EigensolverFailure("complex Schur of drift matrix".into()))?;
    let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > -1e-12 {
        return Err(Error::Unstable { max_re });
    }
    let d = &sys.dissipation;
    let slowest = [d.kappa(), d.gamma_a(), d.gamma_b(), -max_re]
        .into_iter()
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t_end = 50.0 / slowest;
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut b = DVector::zeros(dim);
    b[0] = Complex64::new(drive.eta(), 0.0);
    let h0 = 1e-3 / radius;
    let mut cache: HashMap<i32, nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>> = HashMap::new();
    let mut be_step = |x: &DVector<Complex64>, k: i32| -> Result<DVector<Complex64>> {
        let h = h0 * 2f64.powi(k);
        let lu = cache.entry(k).or_insert_with(|| {
            (DMatrix::identity(dim, dim) - a.map(|z| z * h)).lu()
        });
        lu.solve(&(x + b.map(|z| z * h)))
            .ok_or(Error::SingularSystem { residual: f64::INFINITY })
    };

    let tol = 1e-6;
    let k_max = ((t_end / 10.0 / h0).log2().floor() as i32).max(1);
    let mut x = DVector::zeros(dim);
    let (mut t, mut k, mut steps) = (0.0, 1, 0usize);
    while t < t_end {
        if steps > 200_000 {
            return Err(Error::EigensolverFailure("steady-state integration exceeded step budget".into()));
        }
        let full = be_step(&x, k)?;
        let mid = be_step(&x, k - 1)?;
        let half = be_step(&mid, k - 1)?;
        let err = (&full - &half).norm() / (half.norm() + 1e-300);
        steps += 1;
        if err <= tol || k <= -40 {
            t += h0 * 2f64.powi(k);
            x = half;
            if err < tol / 4.0 && k < k_max {
                k += 1;
            }
        } else {
            k -= 1;
        }
    }

    let alg = algebraic_steady_state(sys, delta_c, drive.eta(), convention)?;
    let num: Vec<Complex64> = x.iter().copied().collect();
    let diff: Vec<Complex64> = num.iter().zip(&alg).map(|(p, q)| p - q).collect();
    Ok(SteadyStateCheck {
        residual: norm2(&diff) / norm2(&alg),
        t_end,
        steps,
        max_re,
        cavity_field: num[0],
    })
}

/// Dense-matrix steady state, `x = -A^-1 b`; a check on the band path.
pub fn dense_steady_state(
    sys: &LinearResponseSystem,
    delta_c: f64,
    eta: f64,
    convention: DetuningConvention,
) -> Result<Vec<Complex64>> {
    let a = drift_matrix(sys, delta_c, convention);
    let mut b = DVector::zeros(a.nrows());
    b[0] = Complex64::new(-eta, 0.0);
    Ok(dense_complex_solve(a, &b)?.iter().copied().collect())
}
