//! Flat key-value run configuration.
//!
//! A config file is TOML with top-level keys only. Every key has a default,
//! so an empty file (or no file) is a valid config. Overrides are merged as
//! TOML values before typed parsing; the merged config is what runs and
//! what the manifest records.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::model::{DisorderSpec, DissipationParams, DriveSpec, DriveTarget, LatticeParams};
use crate::response::DetuningConvention;
use crate::sweeps::{EdgeSide, SweepOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub delta: f64,
    pub t_p: f64,
    pub t_c: f64,
    pub n_cells: usize,

    pub gamma_a: f64,
    pub gamma_b: f64,
    /// One curve per entry where a command sweeps correlated decay.
    pub gamma_ab: Vec<f64>,
    pub kappa: f64,

    /// `left`, `right`, or `bulk:<index>` (0-based eigenstate index).
    pub target: String,
    pub xi_scale: f64,
    pub eta: f64,
    pub convention: DetuningConvention,
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub detuning_points: usize,

    /// `delta` grid for spectrum, coherence and chi-scan.
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,

    pub phase_delta_min: f64,
    pub phase_delta_max: f64,
    pub phase_delta_points: usize,
    pub phase_t_c_min: f64,
    pub phase_t_c_max: f64,
    pub phase_t_c_points: usize,
    pub n_k: usize,

    pub n_list: Vec<usize>,

    pub epsilon: f64,
    pub n_samples: usize,
    pub seed: u64,

    pub tunneling_resolution: f64,
    pub analytic_fraction: f64,

    pub sw_g_over_delta: Vec<f64>,
    pub sw_detuning: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta: 0.12,
            t_p: -0.1,
            t_c: -0.1,
            n_cells: 100,
            gamma_a: 0.1,
            gamma_b: 0.1,
            gamma_ab: vec![0.09],
            kappa: 1.0,
            target: "left".into(),
            xi_scale: 0.01,
            eta: 1e-3,
            convention: DetuningConvention::Shifted,
            detuning_min: -1.0,
            detuning_max: 1.0,
            detuning_points: 401,
            delta_min: 0.0,
            delta_max: 0.29,
            delta_points: 59,
            phase_delta_min: -0.3,
            phase_delta_max: 0.3,
            phase_delta_points: 41,
            phase_t_c_min: -0.2,
            phase_t_c_max: -0.02,
            phase_t_c_points: 41,
            n_k: 256,
            n_list: vec![50, 100, 200, 400],
            epsilon: 0.01,
            n_samples: 200,
            seed: 42,
            tunneling_resolution: 1e-12,
            analytic_fraction: 0.8,
            sw_g_over_delta: vec![0.1, 0.02],
            sw_detuning: 1.0,
        }
    }
}

/// Parsed drive target before it is bound to a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Edge(EdgeSide),
    Bulk(usize),
}

impl TargetKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "left" => Ok(TargetKind::Edge(EdgeSide::Left)),
            "right" => Ok(TargetKind::Edge(EdgeSide::Right)),
            other => other
                .strip_prefix("bulk:")
                .and_then(|n| n.parse().ok())
                .map(TargetKind::Bulk)
                .ok_or_else(|| invalid("target", format!("expected left, right or bulk:<index>, got {other:?}"))),
        }
    }

    pub fn drive_target(self) -> DriveTarget {
        match self {
            TargetKind::Edge(EdgeSide::Left) => DriveTarget::LeftEdge,
            TargetKind::Edge(EdgeSide::Right) => DriveTarget::RightEdge,
            TargetKind::Bulk(n) => DriveTarget::BulkIndex(n),
        }
    }
}

/// Inclusive uniform grid; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

// Negated comparisons also reject NaN.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_range(name: &'static str, lo: f64, hi: f64, points: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid(name, "bounds must be finite"));
    }
    if points == 0 {
        return Err(invalid(name, "needs at least one point"));
    }
    if points > 1 && !(hi > lo) {
        return Err(invalid(name, format!("max {hi} must exceed min {lo}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn lattice(&self) -> Result<LatticeParams> {
        LatticeParams::new(self.delta, self.t_p, self.t_c, self.n_cells)
    }

    /// Dissipation with the first `gamma_ab` entry.
    pub fn dissipation(&self) -> Result<DissipationParams> {
        let g = *self.gamma_ab.first().ok_or_else(|| invalid("gamma_ab", "list is empty"))?;
        DissipationParams::new(self.gamma_a, self.gamma_b, g, self.kappa)
    }

    pub fn target_kind(&self) -> Result<TargetKind> {
        TargetKind::parse(&self.target)
    }

    pub fn edge_side(&self) -> Result<EdgeSide> {
        match self.target_kind()? {
            TargetKind::Edge(s) => Ok(s),
            TargetKind::Bulk(_) => Err(invalid("target", "this command needs an edge target (left or right)")),
        }
    }

    pub fn drive(&self) -> Result<DriveSpec> {
        DriveSpec::new(
            self.target_kind()?.drive_target(),
            self.xi_scale,
            self.eta,
            self.detuning_grid(),
            self.n_cells,
        )
    }

    pub fn detuning_grid(&self) -> Vec<f64> {
        linspace(self.detuning_min, self.detuning_max, self.detuning_points)
    }

    pub fn delta_grid(&self) -> Vec<f64> {
        linspace(self.delta_min, self.delta_max, self.delta_points)
    }

    pub fn phase_grid(&self) -> (Vec<f64>, Vec<f64>) {
        (
            linspace(self.phase_delta_min, self.phase_delta_max, self.phase_delta_points),
            linspace(self.phase_t_c_min, self.phase_t_c_max, self.phase_t_c_points),
        )
    }

    pub fn disorder(&self) -> Result<DisorderSpec> {
        DisorderSpec::new(self.epsilon, self.n_samples, self.seed)
    }

    pub fn sweep_options(&self) -> Result<SweepOptions> {
        let o = SweepOptions {
            tunneling_resolution: self.tunneling_resolution,
            analytic_fraction: self.analytic_fraction,
            xi_scale: self.xi_scale,
        };
        o.validate()?;
        Ok(o)
    }

    /// Checks every record the commands build from this config.
    pub fn validate(&self) -> Result<()> {
        self.lattice()?;
        if self.gamma_ab.is_empty() {
            return Err(invalid("gamma_ab", "list is empty"));
        }
        for &g in &self.gamma_ab {
            DissipationParams::new(self.gamma_a, self.gamma_b, g, self.kappa)?;
        }
        self.target_kind()?;
        check_range("detuning", self.detuning_min, self.detuning_max, self.detuning_points)?;
        self.drive()?;
        check_range("delta", self.delta_min, self.delta_max, self.delta_points)?;
        check_range("phase_delta", self.phase_delta_min, self.phase_delta_max, self.phase_delta_points)?;
        check_range("phase_t_c", self.phase_t_c_min, self.phase_t_c_max, self.phase_t_c_points)?;
        if self.n_k < 64 {
            return Err(invalid("n_k", format!("must be >= 64, got {}", self.n_k)));
        }
        if self.n_list.is_empty() {
            return Err(invalid("n_list", "list is empty"));
        }
        self.disorder()?;
        self.sweep_options()?;
        if self.sw_g_over_delta.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("sw_g_over_delta", "entries must be finite and > 0"));
        }
        if !(self.sw_detuning.is_finite() && self.sw_detuning != 0.0) {
            return Err(invalid("sw_detuning", "must be finite and nonzero"));
        }
        Ok(())
    }

    /// Canonical TOML of the effective config.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Parses `text`, applies `overrides` key by key, and validates.
pub fn parse_config(text: &str, overrides: &toml::Table) -> Result<RunConfig> {
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    let cfg: RunConfig =
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the file at `path` (defaults when `None`) and merges `overrides`.
pub fn load_config(path: Option<&Path>, overrides: &toml::Table) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}

/// `key=value` with `value` read as a TOML value, or as a bare string when
/// it is not one (so `target=right` works unquoted).
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("override {s:?} has an empty key")));
    }
    let v = v.trim();
    let value = format!("v = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((k.to_string(), value))
}
