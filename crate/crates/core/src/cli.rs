//! The `topo-superatom` command-line driver.
//!
//! Each subcommand loads the config, applies flag overrides, computes one
//! data set and writes CSVs plus `manifest.json` into the output directory.
//! Exit codes: 0 success, 2 config error, 3 numerical failure (per-point
//! log in `errors.csv`), 4 I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{load_config, parse_override, RunConfig};
use crate::edgestates::{analytic_edge_states, fidelity, numeric_zero_modes};
use crate::error::{Error, Result};
use crate::lattice::{real_space_hamiltonian, spectrum};
use crate::linalg::norm2;
use crate::model::MicroscopicParams;
use crate::output::{Field, RunManifest, RunOutput, Table};
use crate::response::{coupling_vector, response_at, LinearResponseSystem};
use crate::sw::{sw_validate_three_qubit, sw_validate_two_qubit, ErrorKind, ValidationReport};
use crate::sweeps::{
    bulk_decay_scan, chi_scan, coherence_curve, disorder_ensemble, finite_size_scaling, is_crossover,
    phase_diagram, EdgeSide, LinearFit,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "topo-superatom", version, about = "Topological superatom simulations", allow_negative_numbers = true)]
pub struct Cli {
    /// Flat TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "TOPO_SUPERATOM_THREADS")]
    pub threads: Option<usize>,
    /// Any config key, as KEY=VALUE (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Unit cells (n_cells)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// On-site splitting delta
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Parallel (A-A, B-B) coupling t_p
    #[arg(long = "t-p", global = true, allow_negative_numbers = true)]
    pub t_p: Option<f64>,
    /// Cross (A-B) coupling t_c
    #[arg(long = "t-c", global = true, allow_negative_numbers = true)]
    pub t_c: Option<f64>,
    /// Comma-separated list.
    #[arg(long = "gamma-ab", global = true, value_delimiter = ',')]
    pub gamma_ab: Option<Vec<f64>>,
    /// left, right or bulk:<index>.
    #[arg(long, global = true)]
    pub target: Option<String>,
    /// Disorder RNG seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Disorder strength
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Disorder sample count
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Comma-separated lattice sizes.
    #[arg(long = "n-list", global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Winding number on a (delta, t_c) grid.
    PhaseDiagram,
    /// Open-chain eigenvalues along the delta grid.
    Spectrum,
    /// Analytic and numerical edge states.
    EdgeStates,
    /// Transmission spectra, one curve per gamma_ab.
    Transmit,
    /// Susceptibility on the edge resonance along the delta grid.
    ChiScan,
    /// Effective decay of an edge mode along the delta grid.
    Coherence,
    /// Coherence-transition point against lattice size.
    Scaling,
    /// Effective decay under random on-site disorder.
    Disorder,
    /// Effective decay of every bulk state.
    BulkScan,
    /// Exact-diagonalization check of the dispersive couplings.
    SwValidate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PhaseDiagram => "phase-diagram",
            Command::Spectrum => "spectrum",
            Command::EdgeStates => "edge-states",
            Command::Transmit => "transmit",
            Command::ChiScan => "chi-scan",
            Command::Coherence => "coherence",
            Command::Scaling => "scaling",
            Command::Disorder => "disorder",
            Command::BulkScan => "bulk-scan",
            Command::SwValidate => "sw-validate",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParam { .. } | Error::BadIndex { .. } | Error::NotTopological { .. } => {
            EXIT_CONFIG
        }
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

impl Cli {
    fn overrides(&self) -> Result<toml::Table> {
        let mut t = toml::Table::new();
        for s in &self.set {
            let (k, v) = parse_override(s)?;
            t.insert(k, v);
        }
        let floats = |v: &[f64]| toml::Value::Array(v.iter().map(|&x| toml::Value::Float(x)).collect());
        let mut put = |k: &str, v: toml::Value| {
            t.insert(k.to_string(), v);
        };
        if let Some(n) = self.n {
            put("n_cells", toml::Value::Integer(n as i64));
        }
        for (k, v) in [("delta", self.delta), ("t_p", self.t_p), ("t_c", self.t_c), ("epsilon", self.epsilon)] {
            if let Some(x) = v {
                put(k, toml::Value::Float(x));
            }
        }
        if let Some(g) = &self.gamma_ab {
            put("gamma_ab", floats(g));
        }
        if let Some(s) = &self.target {
            put("target", toml::Value::String(s.clone()));
        }
        if let Some(s) = self.seed {
            let s = i64::try_from(s).map_err(|_| Error::Config(format!("seed {s} exceeds i64 range")))?;
            put("seed", toml::Value::Integer(s));
        }
        if let Some(s) = self.samples {
            put("n_samples", toml::Value::Integer(s as i64));
        }
        if let Some(l) = &self.n_list {
            put("n_list", toml::Value::Array(l.iter().map(|&n| toml::Value::Integer(n as i64)).collect()));
        }
        Ok(t)
    }

    pub fn effective_config(&self) -> Result<RunConfig> {
        load_config(self.config.as_deref(), &self.overrides()?)
    }
}

/// Per-point failures collected across a command.
struct Failures(Table);

impl Failures {
    fn new() -> Self {
        Failures(Table::new(&["scope", "parameter", "message"]))
    }
    fn push(&mut self, scope: impl Into<String>, parameter: f64, message: impl Into<String>) {
        self.0.push(vec![scope.into().into(), parameter.into(), message.into().into()]);
    }
}

fn progress(cmd: Command, msg: impl std::fmt::Display) {
    eprintln!("[{}] {msg}", cmd.name());
}

/// Runs one parsed invocation. `Ok` carries the manifest and whether any
/// point failed.
pub fn run(cli: &Cli) -> Result<(RunManifest, bool)> {
    let cfg = cli.effective_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(cli.command, &cfg, &cli.out))
}

fn execute(cmd: Command, cfg: &RunConfig, out_dir: &std::path::Path) -> Result<(RunManifest, bool)> {
    let mut out = RunOutput::create(out_dir, cmd.name(), cfg)?;
    let mut fails = Failures::new();
    match cmd {
        Command::PhaseDiagram => cmd_phase_diagram(cfg, &mut out)?,
        Command::Spectrum => cmd_spectrum(cfg, &mut out)?,
        Command::EdgeStates => cmd_edge_states(cfg, &mut out)?,
        Command::Transmit => cmd_transmit(cfg, &mut out, &mut fails)?,
        Command::ChiScan => cmd_chi_scan(cfg, &mut out, &mut fails)?,
        Command::Coherence => cmd_coherence(cfg, &mut out, &mut fails)?,
        Command::Scaling => cmd_scaling(cfg, &mut out)?,
        Command::Disorder => cmd_disorder(cfg, &mut out, &mut fails)?,
        Command::BulkScan => cmd_bulk_scan(cfg, &mut out)?,
        Command::SwValidate => cmd_sw_validate(cfg, &mut out)?,
    }
    let failed = !fails.0.is_empty();
    if failed {
        out.warn(format!("{} point(s) failed; see errors.csv", fails.0.len()));
        out.table("errors.csv", &fails.0)?;
    }
    Ok((out.finish()?, failed))
}

fn cmd_phase_diagram(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let (deltas, t_cs) = cfg.phase_grid();
    progress(Command::PhaseDiagram, format!("{} x {} grid", deltas.len(), t_cs.len()));
    let cells = phase_diagram(cfg.t_p, &deltas, &t_cs, cfg.n_k)?;
    let mut t = Table::new(&["delta", "t_c", "winding", "min_gap"]);
    for c in cells {
        t.push(vec![c.delta.into(), c.t_c.into(), c.winding.into(), c.min_gap.into()]);
    }
    out.table("phase_diagram.csv", &t)
}

fn cmd_spectrum(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let base = cfg.lattice()?;
    let grid = cfg.delta_grid();
    let mut t = Table::new(&["delta", "index", "energy", "nearest_zero"]);
    for (i, &d) in grid.iter().enumerate() {
        progress(Command::Spectrum, format!("delta {d} ({}/{})", i + 1, grid.len()));
        let s = spectrum(&real_space_hamiltonian(&base.with_delta(d)?))?;
        for (k, &e) in s.energies.iter().enumerate() {
            t.push(vec![d.into(), k.into(), e.into(), s.zero_mode_indices.contains(&k).into()]);
        }
    }
    out.table("spectrum.csv", &t)
}

fn cmd_edge_states(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let p = cfg.lattice()?;
    progress(Command::EdgeStates, format!("N = {}", p.n_cells()));
    let a = analytic_edge_states(&p)?;
    let h = real_space_hamiltonian(&p);
    let num = numeric_zero_modes(&spectrum(&h)?)?;
    let mut t = Table::new(&[
        "site",
        "cell",
        "sublattice",
        "psi_left",
        "psi_right",
        "numeric_left",
        "numeric_right",
    ]);
    for (i, (site, l, r)) in a.rows().enumerate() {
        t.push(vec![
            site.into(),
            (i / 2 + 1).into(),
            (if i % 2 == 0 { "A" } else { "B" }).into(),
            l.into(),
            r.into(),
            num.psi_left[i].into(),
            num.psi_right[i].into(),
        ]);
    }
    out.table("edge_states.csv", &t)?;
    let (fl, fr) = fidelity(&a, &num);
    let mut s = Table::new(&[
        "case",
        "polarization_left",
        "polarization_right",
        "localization_length",
        "fidelity_left",
        "fidelity_right",
        "residual_left",
        "residual_right",
        "splitting",
    ]);
    let pol = |x| format!("{x:?}").to_lowercase();
    s.push(vec![
        (a.case as usize).into(),
        pol(a.polarization_left).into(),
        pol(a.polarization_right).into(),
        a.localization_length.into(),
        fl.into(),
        fr.into(),
        norm2(&h.apply(&a.psi_left)).into(),
        norm2(&h.apply(&a.psi_right)).into(),
        num.splitting.into(),
    ]);
    out.table("edge_summary.csv", &s)
}

fn cmd_transmit(cfg: &RunConfig, out: &mut RunOutput, fails: &mut Failures) -> Result<()> {
    let lattice = cfg.lattice()?;
    let drive = cfg.drive()?;
    let coupling = coupling_vector(drive.target(), &lattice, drive.xi_scale())?;
    let h = real_space_hamiltonian(&lattice);
    let mut t = Table::new(&["gamma_ab", "detuning", "transmission", "re_chi", "im_chi", "dark"]);
    for (i, &g) in cfg.gamma_ab.iter().enumerate() {
        progress(Command::Transmit, format!("gamma_ab {g} ({}/{})", i + 1, cfg.gamma_ab.len()));
        let diss = cfg.dissipation()?.with_gamma_ab(g)?;
        let sys = LinearResponseSystem::new(&h, &diss, &coupling.xi, coupling.target_energy)?;
        let rows: Vec<(f64, Result<_>)> = {
            use rayon::prelude::*;
            drive
                .detuning_grid()
                .par_iter()
                .map(|&d| (d, response_at(&sys, d, cfg.convention)))
                .collect()
        };
        for (d, r) in rows {
            match r {
                Ok(p) => t.push(vec![
                    g.into(),
                    d.into(),
                    p.transmission.into(),
                    p.chi.re.into(),
                    p.chi.im.into(),
                    false.into(),
                ]),
                // A lossless mode at this detuning: chi diverges and T -> 0.
                Err(Error::SingularSystem { .. }) => {
                    t.push(vec![g.into(), d.into(), 0.0.into(), Field::Empty, Field::Empty, true.into()])
                }
                Err(e) => fails.push(format!("gamma_ab={g}"), d, e.to_string()),
            }
        }
    }
    out.table("transmission.csv", &t)
}

fn cmd_chi_scan(cfg: &RunConfig, out: &mut RunOutput, fails: &mut Failures) -> Result<()> {
    let base = cfg.lattice()?;
    let side = cfg.edge_side()?;
    let opts = cfg.sweep_options()?;
    let grid = cfg.delta_grid();
    let mut t = Table::new(&["gamma_ab", "delta", "re_chi", "im_chi", "transmission", "gamma_eff"]);
    for &g in &cfg.gamma_ab {
        progress(Command::ChiScan, format!("gamma_ab {g}, {} points", grid.len()));
        let diss = cfg.dissipation()?.with_gamma_ab(g)?;
        for (r, &d) in chi_scan(&base, &diss, side, &grid, &opts).into_iter().zip(&grid) {
            match r {
                Ok(p) => t.push(vec![
                    g.into(),
                    p.delta.into(),
                    p.re_chi.into(),
                    p.im_chi.into(),
                    p.transmission.into(),
                    p.gamma_eff.into(),
                ]),
                Err(e) => fails.push(format!("gamma_ab={g}"), d, e.to_string()),
            }
        }
    }
    out.table("chi_scan.csv", &t)
}

/// First `+ -> -` sign change of `f` on `x`, linearly interpolated.
fn first_downward_crossing(x: &[f64], f: &[f64]) -> Option<f64> {
    (1..f.len()).find(|&i| f[i - 1] > 0.0 && f[i] <= 0.0).map(|i| {
        let (x0, x1, f0, f1) = (x[i - 1], x[i], f[i - 1], f[i]);
        x0 + (x1 - x0) * f0 / (f0 - f1)
    })
}

fn cmd_coherence(cfg: &RunConfig, out: &mut RunOutput, fails: &mut Failures) -> Result<()> {
    let base = cfg.lattice()?;
    let side = cfg.edge_side()?;
    let opts = cfg.sweep_options()?;
    let grid = cfg.delta_grid();
    let mut t = Table::new(&["gamma_ab", "delta", "gamma_eff", "target_energy", "im_chi", "dark", "hybridized"]);
    let mut s = Table::new(&["gamma_ab", "first_crossing", "crossover"]);
    for &g in &cfg.gamma_ab {
        progress(Command::Coherence, format!("gamma_ab {g}, N = {}, {} points", base.n_cells(), grid.len()));
        let diss = cfg.dissipation()?.with_gamma_ab(g)?;
        let c = coherence_curve(&base, &diss, side, g, &grid, &opts)?;
        for p in &c.points {
            t.push(vec![
                g.into(),
                p.delta.into(),
                p.gamma_eff.into(),
                p.target_energy.into(),
                p.im_chi.into(),
                p.dark.into(),
                p.hybridized.into(),
            ]);
        }
        for e in &c.errors {
            fails.push(format!("gamma_ab={g}"), e.parameter, e.message.clone());
        }
        let gamma = diss.gamma_ref();
        let f: Vec<f64> = c.points.iter().map(|p| p.gamma_eff - gamma).collect();
        s.push(vec![
            g.into(),
            first_downward_crossing(&c.delta_grid(), &f).into(),
            (side == EdgeSide::Right).then(|| is_crossover(&c.gamma_eff(), gamma)).into(),
        ]);
    }
    out.table("coherence.csv", &t)?;
    out.table("coherence_summary.csv", &s)
}

fn cmd_scaling(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let base = cfg.lattice()?;
    let opts = cfg.sweep_options()?;
    let mut t = Table::new(&["gamma_ab", "n_cells", "delta_m", "gap_to_critical"]);
    let mut f = Table::new(&["gamma_ab", "fit", "slope", "intercept", "extrapolated_delta_m"]);
    for &g in &cfg.gamma_ab {
        progress(Command::Scaling, format!("gamma_ab {g}, N in {:?}", cfg.n_list));
        let r = finite_size_scaling(&base, &cfg.dissipation()?, g, &cfg.n_list, &opts)?;
        for ((&n, &d), gap) in r.n_list.iter().zip(&r.delta_m).zip(r.gap_to_critical()) {
            t.push(vec![g.into(), n.into(), d.into(), gap.into()]);
        }
        let fit_row = |name: &str, fit: Option<LinearFit>, extrap: Option<f64>| {
            vec![
                g.into(),
                name.into(),
                fit.map(|x| x.slope).into(),
                fit.map(|x| x.intercept).into(),
                extrap.into(),
            ]
        };
        f.push(fit_row("inverse_n", r.fit_inverse_n, r.extrapolated_inverse_n()));
        f.push(fit_row("log_inverse_n", r.fit_log, r.extrapolated_log()));
    }
    out.table("scaling.csv", &t)?;
    out.table("scaling_fit.csv", &f)
}

fn cmd_disorder(cfg: &RunConfig, out: &mut RunOutput, fails: &mut Failures) -> Result<()> {
    let base = cfg.lattice()?;
    let opts = cfg.sweep_options()?;
    let spec = cfg.disorder()?;
    let mut samples = Table::new(&["gamma_ab", "side", "sample", "gamma_eff"]);
    let mut summary = Table::new(&[
        "gamma_ab",
        "side",
        "epsilon",
        "n_samples",
        "n_excluded",
        "mean_gamma_eff",
        "std_gamma_eff",
        "clean_gamma_eff",
        "seed",
    ]);
    for &g in &cfg.gamma_ab {
        for side in [EdgeSide::Left, EdgeSide::Right] {
            let name = if side == EdgeSide::Left { "left" } else { "right" };
            progress(Command::Disorder, format!("gamma_ab {g}, {name} edge, {} samples", spec.n_samples()));
            let s = disorder_ensemble(&base, &cfg.dissipation()?, side, g, &spec, &opts)?;
            for (i, &x) in s.samples.iter().enumerate() {
                samples.push(vec![g.into(), name.into(), i.into(), (!x.is_nan()).then_some(x).into()]);
            }
            for e in &s.failures {
                fails.push(format!("gamma_ab={g} side={name}"), e.parameter, e.message.clone());
            }
            summary.push(vec![
                g.into(),
                name.into(),
                s.epsilon.into(),
                s.n_samples.into(),
                s.failures.len().into(),
                s.mean_gamma_eff.into(),
                s.std_gamma_eff.into(),
                s.clean_gamma_eff.into(),
                s.seed.into(),
            ]);
        }
    }
    out.table("disorder_samples.csv", &samples)?;
    out.table("disorder_summary.csv", &summary)
}

fn cmd_bulk_scan(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let lattice = cfg.lattice()?;
    let mut t = Table::new(&["gamma_ab", "index", "energy", "gamma_eff"]);
    for &g in &cfg.gamma_ab {
        progress(Command::BulkScan, format!("gamma_ab {g}, {} states", lattice.dim() - 2));
        for b in bulk_decay_scan(&lattice, &cfg.dissipation()?, g, cfg.xi_scale)? {
            t.push(vec![g.into(), b.index.into(), b.energy.into(), b.gamma_eff.into()]);
        }
    }
    out.table("bulk_scan.csv", &t)
}

fn cmd_sw_validate(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let mut t = Table::new(&[
        "check",
        "g_over_delta",
        "effective",
        "exact",
        "error",
        "error_kind",
        "bound",
        "within_bound",
        "trace_residual",
        "j12",
        "j23",
    ]);
    let mut push = |r: ValidationReport| {
        let kind = match r.error_kind {
            ErrorKind::Relative => "relative",
            ErrorKind::Absolute => "absolute",
        };
        t.push(vec![
            r.check.into(),
            r.g_over_delta.into(),
            r.effective.into(),
            r.exact.into(),
            r.error.into(),
            kind.into(),
            r.bound.into(),
            r.within_bound.into(),
            r.trace_residual.into(),
            r.nearest_neighbour.map(|x| x.0).into(),
            r.nearest_neighbour.map(|x| x.1).into(),
        ]);
    };
    for &ratio in &cfg.sw_g_over_delta {
        progress(Command::SwValidate, format!("g/Delta = {ratio}"));
        let micro = MicroscopicParams::symmetric(ratio * cfg.sw_detuning.abs(), cfg.sw_detuning)?;
        push(sw_validate_two_qubit(&micro)?);
        push(sw_validate_three_qubit(&micro)?);
    }
    out.table("sw_validation.csv", &t)
}

/// Parses `args`, runs, reports on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    // Config problems must surface before anything touches the output dir.
    if let Err(e) = cli.effective_config() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match run(&cli) {
        Ok((m, failed)) => {
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("[{}] wrote {} file(s) to {}", m.command, m.outputs.len() + 1, cli.out.display());
            if failed {
                EXIT_NUMERIC
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
