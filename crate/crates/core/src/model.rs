//! Validated parameter records shared by every other module.
//!
//! All energies and rates live in one implicit unit (the usual choice is
//! `kappa = 1`). Constructors reject non-finite input and any violated
//! invariant, so a value of one of these types is always usable as-is.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

fn finite(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

/// Tight-binding parameters of the array: on-site splitting `±delta`,
/// parallel coupling `t_p`, cross coupling `t_c` and the number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeParamsRaw")]
pub struct LatticeParams {
    delta: f64,
    t_p: f64,
    t_c: f64,
    n_cells: usize,
}

#[derive(Deserialize)]
struct LatticeParamsRaw {
    delta: f64,
    t_p: f64,
    t_c: f64,
    n_cells: usize,
}

impl TryFrom<LatticeParamsRaw> for LatticeParams {
    type Error = crate::Error;
    fn try_from(r: LatticeParamsRaw) -> Result<Self> {
        LatticeParams::new(r.delta, r.t_p, r.t_c, r.n_cells)
    }
}

impl LatticeParams {
    pub fn new(delta: f64, t_p: f64, t_c: f64, n_cells: usize) -> Result<Self> {
        let delta = finite("delta", delta)?;
        let t_p = finite("t_p", t_p)?;
        let t_c = finite("t_c", t_c)?;
        if n_cells < 2 {
            return Err(invalid("n_cells", format!("need n_cells >= 2, got {n_cells}")));
        }
        if t_p == 0.0 {
            return Err(invalid("t_p", "must be nonzero (delta_c = 2|t_p| must be positive)"));
        }
        Ok(Self { delta, t_p, t_c, n_cells })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn t_p(&self) -> f64 {
        self.t_p
    }
    pub fn t_c(&self) -> f64 {
        self.t_c
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    /// Dimension of the single-excitation space, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }
    /// Critical splitting `2|t_p|` of the bulk phase transition.
    pub fn delta_c(&self) -> f64 {
        2.0 * self.t_p.abs()
    }
    pub fn is_topological(&self) -> bool {
        self.delta.abs() < self.delta_c()
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(delta, self.t_p, self.t_c, self.n_cells)
    }
    pub fn with_t_c(&self, t_c: f64) -> Result<Self> {
        Self::new(self.delta, self.t_p, t_c, self.n_cells)
    }
    pub fn with_n_cells(&self, n_cells: usize) -> Result<Self> {
        Self::new(self.delta, self.t_p, self.t_c, n_cells)
    }
}

/// Local decay rates, intra-cell correlated decay and cavity linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DissipationParamsRaw")]
pub struct DissipationParams {
    gamma_a: f64,
    gamma_b: f64,
    gamma_ab: f64,
    kappa: f64,
}

#[derive(Deserialize)]
struct DissipationParamsRaw {
    gamma_a: f64,
    gamma_b: f64,
    gamma_ab: f64,
    kappa: f64,
}

impl TryFrom<DissipationParamsRaw> for DissipationParams {
    type Error = crate::Error;
    fn try_from(r: DissipationParamsRaw) -> Result<Self> {
        DissipationParams::new(r.gamma_a, r.gamma_b, r.gamma_ab, r.kappa)
    }
}

impl DissipationParams {
    pub fn new(gamma_a: f64, gamma_b: f64, gamma_ab: f64, kappa: f64) -> Result<Self> {
        let gamma_a = finite("gamma_a", gamma_a)?;
        let gamma_b = finite("gamma_b", gamma_b)?;
        let gamma_ab = finite("gamma_ab", gamma_ab)?;
        let kappa = finite("kappa", kappa)?;
        if gamma_a < 0.0 {
            return Err(invalid("gamma_a", format!("must be >= 0, got {gamma_a}")));
        }
        if gamma_b < 0.0 {
            return Err(invalid("gamma_b", format!("must be >= 0, got {gamma_b}")));
        }
        if kappa <= 0.0 {
            return Err(invalid("kappa", format!("must be > 0, got {kappa}")));
        }
        // 2x2 decay block [[ga, gab], [gab, gb]] must be positive semidefinite.
        // The relative slack admits gamma_ab = gamma exactly after rounding.
        let bound = gamma_a * gamma_b;
        if gamma_ab * gamma_ab > bound * (1.0 + 4.0 * f64::EPSILON) {
            return Err(invalid(
                "gamma_ab",
                format!(
                    "gamma_ab^2 = {} exceeds gamma_a*gamma_b = {} (decay block not positive semidefinite)",
                    gamma_ab * gamma_ab,
                    bound
                ),
            ));
        }
        Ok(Self { gamma_a, gamma_b, gamma_ab, kappa })
    }

    /// Equal local rates `gamma` on both species.
    pub fn symmetric(gamma: f64, gamma_ab: f64, kappa: f64) -> Result<Self> {
        Self::new(gamma, gamma, gamma_ab, kappa)
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }
    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }
    pub fn gamma_ab(&self) -> f64 {
        self.gamma_ab
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// Reference single-atom rate used to classify super/subradiance.
    pub fn gamma_ref(&self) -> f64 {
        0.5 * (self.gamma_a + self.gamma_b)
    }

    pub fn with_gamma_ab(&self, gamma_ab: f64) -> Result<Self> {
        Self::new(self.gamma_a, self.gamma_b, gamma_ab, self.kappa)
    }
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.gamma_a, self.gamma_b, self.gamma_ab, kappa)
    }
}

/// Which state the cavity couples to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveTarget {
    LeftEdge,
    RightEdge,
    /// Index into the ascending single-excitation spectrum (0-based).
    BulkIndex(usize),
    /// Explicit coupling profile over the basis `(A_1, B_1, A_2, B_2, ...)`.
    CustomVector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    target: DriveTarget,
    xi_scale: f64,
    eta: f64,
    detuning_grid: Vec<f64>,
}

impl DriveSpec {
    pub const DEFAULT_XI_SCALE: f64 = 0.01;

    pub fn new(
        target: DriveTarget,
        xi_scale: f64,
        eta: f64,
        detuning_grid: Vec<f64>,
        n_cells: usize,
    ) -> Result<Self> {
        let xi_scale = finite("xi_scale", xi_scale)?;
        let eta = finite("eta", eta)?;
        if xi_scale <= 0.0 {
            return Err(invalid("xi_scale", format!("must be > 0, got {xi_scale}")));
        }
        if eta <= 0.0 {
            return Err(invalid("eta", format!("must be > 0, got {eta}")));
        }
        if let Some(bad) = detuning_grid.iter().find(|v| !v.is_finite()) {
            return Err(invalid("detuning_grid", format!("non-finite entry {bad}")));
        }
        if let DriveTarget::CustomVector(v) = &target {
            if v.len() != 2 * n_cells {
                return Err(invalid(
                    "target",
                    format!("custom vector has length {}, expected {}", v.len(), 2 * n_cells),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("target", "custom vector has non-finite entries"));
            }
            if v.iter().all(|&x| x == 0.0) {
                return Err(invalid("target", "custom vector is identically zero"));
            }
        }
        Ok(Self { target, xi_scale, eta, detuning_grid })
    }

    pub fn target(&self) -> &DriveTarget {
        &self.target
    }
    pub fn xi_scale(&self) -> f64 {
        self.xi_scale
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn detuning_grid(&self) -> &[f64] {
        &self.detuning_grid
    }
}

/// Microscopic circuit parameters feeding the effective-coupling map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroscopicParams {
    pub omega0: f64,
    pub gamma0: f64,
    pub d_ab: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub g_bar_a: f64,
    pub detuning_a: f64,
    pub detuning_b: f64,
}

impl MicroscopicParams {
    /// Ratio `g / min|Delta|` above which the dispersive expansion is rejected.
    pub const DISPERSIVE_LIMIT: f64 = 0.2;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega0: f64,
        gamma0: f64,
        d_ab: f64,
        g_a: f64,
        g_b: f64,
        g_bar_a: f64,
        detuning_a: f64,
        detuning_b: f64,
    ) -> Result<Self> {
        let p = Self { omega0, gamma0, d_ab, g_a, g_b, g_bar_a, detuning_a, detuning_b };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric coupler setup: all couplings `g`, both detunings `detuning`.
    pub fn symmetric(g: f64, detuning: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, g, g, g, detuning, detuning)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega0", self.omega0),
            ("gamma0", self.gamma0),
            ("d_ab", self.d_ab),
            ("g_a", self.g_a),
            ("g_b", self.g_b),
            ("g_bar_a", self.g_bar_a),
            ("detuning_a", self.detuning_a),
            ("detuning_b", self.detuning_b),
        ] {
            finite(name, v)?;
        }
        if self.omega0 <= 0.0 {
            return Err(invalid("omega0", "must be > 0"));
        }
        if self.gamma0 < 0.0 {
            return Err(invalid("gamma0", "must be >= 0"));
        }
        let dmin = self.detuning_a.abs().min(self.detuning_b.abs());
        if dmin == 0.0 {
            return Err(invalid("detuning_a", "coupler detunings must be nonzero"));
        }
        let limit = Self::DISPERSIVE_LIMIT * dmin;
        for (name, g) in [("g_a", self.g_a), ("g_b", self.g_b), ("g_bar_a", self.g_bar_a)] {
            if g.abs() >= limit {
                return Err(invalid(
                    name,
                    format!("|{g}| violates the dispersive guard |g| < {limit}"),
                ));
            }
        }
        Ok(())
    }

    /// Resonant wavelength `2*pi/omega0` (unit phase velocity).
    pub fn lambda0(&self) -> f64 {
        2.0 * PI / self.omega0
    }
}

/// Uniform on-site disorder `eps_i ~ U[-epsilon, epsilon]` and its ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    epsilon: f64,
    n_samples: usize,
    seed: u64,
}

impl DisorderSpec {
    pub fn new(epsilon: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let epsilon = finite("epsilon", epsilon)?;
        if epsilon < 0.0 {
            return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        if n_samples == 0 {
            return Err(invalid("n_samples", "need at least one sample"));
        }
        Ok(Self { epsilon, n_samples, seed })
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Lattice and dissipation parameters that passed validation, with the
/// derived critical point and phase flag attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatedConfig {
    pub lattice: LatticeParams,
    pub dissipation: DissipationParams,
    pub delta_c: f64,
    pub topological: bool,
}

impl ValidatedConfig {
    pub fn revalidate(&self) -> Result<ValidatedConfig> {
        validate(&self.lattice, &self.dissipation)
    }
}

pub fn validate(lattice: &LatticeParams, diss: &DissipationParams) -> Result<ValidatedConfig> {
    let lattice = LatticeParams::new(lattice.delta, lattice.t_p, lattice.t_c, lattice.n_cells)?;
    let dissipation =
        DissipationParams::new(diss.gamma_a, diss.gamma_b, diss.gamma_ab, diss.kappa)?;
    Ok(ValidatedConfig {
        lattice,
        dissipation,
        delta_c: lattice.delta_c(),
        topological: lattice.is_topological(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn reference_parameters_are_topological() {
        let l = LatticeParams::new(0.12, -0.1, -0.1, 100).unwrap();
        let d = DissipationParams::new(0.1, 0.1, 0.09, 1.0).unwrap();
        let cfg = validate(&l, &d).unwrap();
        assert!((cfg.delta_c - 0.2).abs() < 1e-15);
        assert!(cfg.topological);
    }

    #[test]
    fn trivial_phase_flagged() {
        let l = LatticeParams::new(0.3, -0.1, -0.1, 100).unwrap();
        let d = DissipationParams::new(0.1, 0.1, 0.0, 1.0).unwrap();
        assert!(!validate(&l, &d).unwrap().topological);
    }

    #[test]
    fn correlated_decay_above_bound_rejected() {
        let err = DissipationParams::new(0.1, 0.1, 0.2, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { field: "gamma_ab", .. }));
        // Saturated bound is allowed.
        assert!(DissipationParams::new(0.1, 0.1, 0.1, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_lattice() {
        assert!(matches!(
            LatticeParams::new(0.1, -0.1, -0.1, 1),
            Err(Error::InvalidParam { field: "n_cells", .. })
        ));
        assert!(matches!(
            LatticeParams::new(0.1, 0.0, -0.1, 10),
            Err(Error::InvalidParam { field: "t_p", .. })
        ));
        assert!(matches!(
            LatticeParams::new(f64::NAN, -0.1, -0.1, 10),
            Err(Error::InvalidParam { field: "delta", .. })
        ));
        assert!(LatticeParams::new(0.1, -0.1, f64::INFINITY, 10).is_err());
    }

    #[test]
    fn rejects_bad_dissipation() {
        assert!(DissipationParams::new(-0.1, 0.1, 0.0, 1.0).is_err());
        assert!(DissipationParams::new(0.1, 0.1, 0.0, 0.0).is_err());
        assert!(DissipationParams::new(0.1, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn drive_spec_checks() {
        assert!(DriveSpec::new(DriveTarget::LeftEdge, 0.0, 0.01, vec![], 4).is_err());
        assert!(DriveSpec::new(DriveTarget::LeftEdge, 0.01, -1.0, vec![], 4).is_err());
        assert!(DriveSpec::new(DriveTarget::CustomVector(vec![1.0; 7]), 0.01, 0.01, vec![], 4)
            .is_err());
        assert!(DriveSpec::new(DriveTarget::CustomVector(vec![1.0; 8]), 0.01, 0.01, vec![0.0], 4)
            .is_ok());
        assert!(DriveSpec::new(DriveTarget::RightEdge, 0.01, 0.01, vec![f64::NAN], 4).is_err());
    }

    #[test]
    fn dispersive_guard() {
        assert!(MicroscopicParams::symmetric(0.05, 0.5).is_ok());
        assert!(MicroscopicParams::symmetric(0.1, 0.5).is_err());
        assert!(MicroscopicParams::symmetric(0.05, 0.0).is_err());
    }

    #[test]
    fn disorder_spec_checks() {
        assert!(DisorderSpec::new(-0.1, 10, 1).is_err());
        assert!(DisorderSpec::new(0.1, 0, 1).is_err());
        assert!(DisorderSpec::new(0.0, 1, 1).is_ok());
    }

    #[test]
    fn deserialization_validates() {
        let ok: LatticeParams =
            serde_json::from_str(r#"{"delta":0.1,"t_p":-0.1,"t_c":-0.1,"n_cells":4}"#).unwrap();
        assert_eq!(ok.n_cells(), 4);
        let bad = serde_json::from_str::<LatticeParams>(
            r#"{"delta":0.1,"t_p":0.0,"t_c":-0.1,"n_cells":4}"#,
        );
        assert!(bad.is_err());
    }

    proptest::proptest! {
        #[test]
        fn validate_is_idempotent(
            delta in -0.5f64..0.5, t_p in 0.01f64..0.3, t_c in -0.3f64..0.3, n in 2usize..50,
            g in 0.0f64..0.2, frac in -1.0f64..1.0, kappa in 0.01f64..5.0,
        ) {
            let l = LatticeParams::new(delta, -t_p, t_c, n).unwrap();
            let d = DissipationParams::new(g, g, frac * g, kappa).unwrap();
            let cfg = validate(&l, &d).unwrap();
            proptest::prop_assert_eq!(cfg.revalidate().unwrap(), cfg);
        }
    }
}
