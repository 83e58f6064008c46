//! Scenario files and the runs the command-line tool drives.
//!
//! A scenario is a TOML document. Top-level keys describe the chain,
//! optional sections add turbulence, setup errors, a parameter sweep and
//! numerics. Unknown keys are rejected so typos surface as errors.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::beams::{gaussian_field, top_hat_field};
use crate::chain::{
    add_ground_links, build_entanglement_chain, build_onaxis_chain, build_qubit_chain, optimize_ground_focals_with,
    ChainSpec, ChainTrace, GroundLinkSide, Role, RunOptions,
};
use crate::beams::{vortex_field, VortexSpec};
use crate::error::{Result, SimError};
use crate::field::ScalarField;
use crate::loss::{to_db, total_budget, LossBudget, Overheads, Protocol};
use crate::perturb::{monte_carlo_with, ErrorSpec, FocalReference, SweepStats, DEFAULT_REPS};
use crate::turbulence::{default_altitudes, run_uplink_chain, uplink_grid, TurbulenceProfile, DEFAULT_A, DEFAULT_WIND};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioProtocol {
    Entanglement,
    Qubit,
    Vortex,
}

impl ScenarioProtocol {
    fn loss_protocol(self) -> Protocol {
        match self {
            ScenarioProtocol::Qubit => Protocol::QubitTransmission,
            _ => Protocol::EntanglementPair,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbulenceConfig {
    #[serde(rename = "A", default = "default_a")]
    pub a: f64,
    #[serde(default = "default_wind")]
    pub wind: f64,
    #[serde(default = "default_screens")]
    pub screens: usize,
    #[serde(default)]
    pub seed: u64,
    /// Monte Carlo draws for the `uplink` command.
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_a() -> f64 {
    DEFAULT_A
}
fn default_wind() -> f64 {
    DEFAULT_WIND
}
fn default_screens() -> usize {
    crate::turbulence::DEFAULT_SCREENS
}
fn default_draws() -> usize {
    30
}

impl Default for TurbulenceConfig {
    fn default() -> Self {
        Self { a: DEFAULT_A, wind: DEFAULT_WIND, screens: default_screens(), seed: 0, draws: default_draws() }
    }
}

impl TurbulenceConfig {
    pub fn profile(&self) -> Result<TurbulenceProfile> {
        TurbulenceProfile::new(self.a, self.wind, default_altitudes(self.screens), self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorConfig {
    #[serde(default)]
    pub f_frac: f64,
    #[serde(default)]
    pub z_frac: f64,
    #[serde(default)]
    pub xy_frac: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub focal_reference: FocalReference,
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

impl Default for ErrorConfig {
    fn default() -> Self {
        Self { f_frac: 0.0, z_frac: 0.0, xy_frac: 0.0, reps: DEFAULT_REPS, seed: 0, focal_reference: FocalReference::default() }
    }
}

impl ErrorConfig {
    pub fn spec(&self) -> Result<ErrorSpec> {
        Ok(ErrorSpec::new(self.f_frac, self.z_frac, self.xy_frac, self.reps, self.seed)?
            .with_focal_reference(self.focal_reference))
    }
}

/// Grid of relay diameters and separations.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d: Vec<f64>,
    #[serde(rename = "L0")]
    pub l0: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_oversize")]
    pub oversize: f64,
    #[serde(default = "default_uplink_grid_n")]
    pub uplink_grid_n: usize,
}

fn default_grid_n() -> usize {
    1024
}
fn default_oversize() -> f64 {
    crate::chain::DEFAULT_OVERSIZE
}
fn default_uplink_grid_n() -> usize {
    512
}

impl Default for Numerics {
    fn default() -> Self {
        Self { grid_n: default_grid_n(), oversize: default_oversize(), uplink_grid_n: default_uplink_grid_n() }
    }
}

fn default_margin() -> f64 {
    1.0
}
fn default_charge() -> u32 {
    2
}
fn default_front_fraction() -> f64 {
    0.1
}
fn default_uplink_w0() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub protocol: ScenarioProtocol,
    pub lambda: f64,
    pub d: f64,
    #[serde(rename = "L0")]
    pub l0: f64,
    pub total_distance: f64,
    #[serde(rename = "L_sg", default)]
    pub l_sg: Option<f64>,
    #[serde(default)]
    pub d_ground: Option<f64>,
    #[serde(default)]
    pub per_sat_loss: f64,
    #[serde(default)]
    pub optimize_ground: bool,
    /// Qubit chains: focus lobe must reach `margin` times the matched waist.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Vortex chains: topological charge.
    #[serde(default = "default_charge")]
    pub charge: u32,
    /// Vortex chains: obstruction diameter over `d`.
    #[serde(default = "default_front_fraction")]
    pub front_fraction: f64,
    /// Qubit uplink: ground transmitter waist.
    #[serde(default = "default_uplink_w0")]
    pub uplink_w0: f64,
    #[serde(default)]
    pub overheads: Overheads,
    #[serde(default)]
    pub turbulence: Option<TurbulenceConfig>,
    #[serde(default)]
    pub errors: Option<ErrorConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub numerics: Numerics,
}

fn positive(key: &str, v: f64) -> std::result::Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn fraction(key: &str, v: f64) -> std::result::Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(key, format!("must lie in [0, 1], got {v}")))
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> std::result::Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        positive("lambda", self.lambda)?;
        positive("d", self.d)?;
        positive("L0", self.l0)?;
        positive("total_distance", self.total_distance)?;
        if let Some(v) = self.l_sg {
            positive("L_sg", v)?;
        }
        if let Some(v) = self.d_ground {
            positive("d_ground", v)?;
        }
        if !(0.0..1.0).contains(&self.per_sat_loss) {
            return Err(invalid("per_sat_loss", format!("must lie in [0, 1), got {}", self.per_sat_loss)));
        }
        if !(self.margin.is_finite() && self.margin >= 1.0) {
            return Err(invalid("margin", format!("must be >= 1, got {}", self.margin)));
        }
        if !(self.front_fraction > 0.0 && self.front_fraction < 0.5) {
            return Err(invalid("front_fraction", format!("must lie in (0, 0.5), got {}", self.front_fraction)));
        }
        positive("uplink_w0", self.uplink_w0)?;
        fraction("overheads.eta_e", self.overheads.eta_e)?;
        fraction("overheads.eta_a", self.overheads.eta_a)?;
        fraction("overheads.eta_d", self.overheads.eta_d)?;
        if let Some(t) = &self.turbulence {
            if !(t.a.is_finite() && t.a >= 0.0) {
                return Err(invalid("turbulence.A", format!("must be >= 0, got {}", t.a)));
            }
            if !(t.wind.is_finite() && t.wind >= 0.0) {
                return Err(invalid("turbulence.wind", format!("must be >= 0, got {}", t.wind)));
            }
            if t.screens == 0 || t.screens > 256 {
                return Err(invalid("turbulence.screens", format!("must lie in 1..=256, got {}", t.screens)));
            }
            if t.draws == 0 {
                return Err(invalid("turbulence.draws", "must be at least 1"));
            }
        }
        if let Some(e) = &self.errors {
            for (key, v) in [("errors.f_frac", e.f_frac), ("errors.z_frac", e.z_frac), ("errors.xy_frac", e.xy_frac)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid(key, format!("must be >= 0, got {v}")));
                }
            }
            if e.reps == 0 {
                return Err(invalid("errors.reps", "must be at least 1"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.d.is_empty() {
                return Err(invalid("sweep.d", "must list at least one diameter"));
            }
            if s.l0.is_empty() {
                return Err(invalid("sweep.L0", "must list at least one separation"));
            }
            for &v in &s.d {
                positive("sweep.d", v)?;
            }
            for &v in &s.l0 {
                positive("sweep.L0", v)?;
            }
        }
        let n = self.numerics.grid_n;
        if n < crate::field::MIN_GRID_N || !n.is_power_of_two() {
            return Err(invalid("numerics.grid_n", format!("must be a power of two >= 64, got {n}")));
        }
        let n = self.numerics.uplink_grid_n;
        if n < crate::field::MIN_GRID_N || !n.is_power_of_two() {
            return Err(invalid("numerics.uplink_grid_n", format!("must be a power of two >= 64, got {n}")));
        }
        if !(self.numerics.oversize.is_finite() && self.numerics.oversize >= 2.0) {
            return Err(invalid("numerics.oversize", format!("must be >= 2, got {}", self.numerics.oversize)));
        }
        Ok(())
    }

    fn run_options(&self) -> RunOptions {
        RunOptions { oversize: self.numerics.oversize, ..RunOptions::default() }
    }

    /// Distance one photon travels through the relay chain.
    fn arm_distance(&self) -> f64 {
        match self.protocol {
            ScenarioProtocol::Qubit => self.total_distance,
            _ => self.total_distance / 2.0,
        }
    }

    /// The chain one photon traverses, with its downlink when `L_sg` is set.
    pub fn arm_chain(&self, d: f64, l0: f64) -> Result<ChainSpec> {
        let arm = self.arm_distance();
        let chain = match self.protocol {
            ScenarioProtocol::Entanglement => build_entanglement_chain(d, l0, arm, self.lambda)?,
            ScenarioProtocol::Qubit => build_qubit_chain(d, l0, arm, self.margin, self.lambda)?,
            ScenarioProtocol::Vortex => build_onaxis_chain(d, l0, self.front_fraction, arm, self.lambda)?,
        };
        match self.l_sg {
            Some(l_sg) => add_ground_links(&chain, l_sg, self.d_ground.unwrap_or(d), GroundLinkSide::DownlinkOnly),
            None => Ok(chain),
        }
    }

    /// Source field at the first relay for a chain of this scenario.
    fn source(&self, chain: &ChainSpec) -> Result<ScalarField> {
        let grid = chain.grid(self.numerics.grid_n, self.numerics.oversize)?;
        match self.protocol {
            ScenarioProtocol::Entanglement => chain.gaussian_source(grid),
            ScenarioProtocol::Qubit => top_hat_field(chain.meta.d, grid, self.lambda),
            ScenarioProtocol::Vortex => vortex_field(VortexSpec::new(chain.meta.w0, self.charge, self.lambda)?, 0.0, grid),
        }
    }

    fn run_arm(&self, chain: &ChainSpec) -> Result<(ChainSpec, ChainTrace)> {
        let source = self.source(chain)?;
        let opts = self.run_options();
        let chain = if self.optimize_ground && chain.optimizable.is_some() {
            optimize_ground_focals_with(&source, chain, &opts)?.chain
        } else {
            chain.clone()
        };
        let trace = crate::chain::run_chain_with(&source, &chain, &opts)?;
        Ok((chain, trace))
    }

    /// Single nominal run with its loss budget.
    pub fn run(&self) -> Result<RunReport> {
        let chain = self.arm_chain(self.d, self.l0)?;
        let satellites = chain.relay_count();
        let mut notes = Vec::new();
        let (chain, trace, uplink) = match (self.protocol, self.l_sg) {
            (ScenarioProtocol::Qubit, Some(l_sg)) => {
                let profile = match &self.turbulence {
                    Some(t) => t.profile()?,
                    None => TurbulenceProfile::vacuum(),
                };
                let grid = uplink_grid(self.uplink_w0, l_sg, self.lambda, &profile, self.numerics.uplink_grid_n)?;
                let source = gaussian_field(self.uplink_w0, f64::INFINITY, grid, self.lambda)?;
                let chain_grid = chain.grid(self.numerics.grid_n, self.numerics.oversize)?;
                let r = run_uplink_chain(&source, &profile, l_sg, &chain, chain_grid, &self.run_options(), 0)?;
                notes.push(format!("uplink W_LT {:.4} m, r0 {:.5} m", r.uplink.w_lt, r.uplink.r0));
                let capture = r.uplink_transmission;
                let mut trace = r.trace;
                // Report the chain relative to the power the first telescope accepted.
                let first = trace.points.first().map_or(1.0, |p| p.transmission);
                if first > 0.0 {
                    for p in &mut trace.points {
                        p.transmission /= first;
                        p.log_transmission -= first.ln();
                    }
                }
                (chain, trace, Some(capture))
            }
            _ => {
                let (chain, trace) = self.run_arm(&chain)?;
                (chain, trace, None)
            }
        };
        if let (true, Some(stages)) = (self.optimize_ground, chain.optimizable) {
            let f: Vec<String> = stages
                .iter()
                .filter_map(|&i| chain.stages[i].relay_optic().and_then(|o| o.focal_length()))
                .map(|f| format!("{f:.6e} m"))
                .collect();
            notes.push(format!("ground focals {}", f.join(", ")));
        }
        let mut overheads = self.overheads;
        let mut errors = None;
        if let Some(cfg) = &self.errors {
            let spec = cfg.spec()?;
            if !spec.is_zero() {
                let source = self.source(&chain)?;
                let stats = monte_carlo_with(&source, &chain, &spec, &self.run_options())?;
                let nominal = trace.final_transmission();
                if nominal > 0.0 {
                    overheads.eta_e = (stats.final_mean() / nominal).clamp(0.0, 1.0);
                    notes.push(format!("eta_e from {} Monte Carlo draws: {:.4}", spec.reps, overheads.eta_e));
                }
                errors = Some(stats);
            }
        }
        let budget = LossBudget {
            diffraction: trace.final_transmission().clamp(0.0, 1.0),
            satellites,
            per_satellite_loss: self.per_sat_loss,
            overheads,
            protocol: self.protocol.loss_protocol(),
            uplink_capture: uplink,
        };
        Ok(RunReport { trace, budget, errors, notes })
    }

    /// Protocol-level diffraction transmission over the sweep grid.
    pub fn sweep(&self) -> Result<Vec<SweepRow>> {
        let cfg = self
            .sweep
            .as_ref()
            .ok_or_else(|| SimError::InvalidArgument("scenario has no [sweep] section".into()))?;
        let cells: Vec<(f64, f64)> = cfg.d.iter().flat_map(|&d| cfg.l0.iter().map(move |&l0| (d, l0))).collect();
        let arms = self.protocol.loss_protocol().arms();
        cells
            .par_iter()
            .map(|&(d, l0)| {
                let chain = self.arm_chain(d, l0)?;
                let (_, trace) = self.run_arm(&chain)?;
                let log_t = trace.final_point().log_transmission * arms as f64;
                Ok(SweepRow { d, l0, transmission: log_t.exp(), loss_db: -10.0 * log_t / std::f64::consts::LN_10 })
            })
            .collect()
    }

    /// Setup-error Monte Carlo on the nominal arm chain.
    pub fn errors(&self) -> Result<SweepStats> {
        let cfg = self.errors.clone().unwrap_or_default();
        let chain = self.arm_chain(self.d, self.l0)?;
        let source = self.source(&chain)?;
        monte_carlo_with(&source, &chain, &cfg.spec()?, &self.run_options())
    }

    /// Turbulent uplink Monte Carlo feeding the qubit chain.
    pub fn uplink(&self) -> Result<Vec<UplinkRow>> {
        let l_sg = self
            .l_sg
            .ok_or_else(|| SimError::InvalidArgument("uplink runs need `L_sg`".into()))?;
        let turb = self.turbulence.clone().unwrap_or_default();
        let profile = turb.profile()?;
        let arm = self.arm_distance();
        let chain = build_qubit_chain(self.d, self.l0, arm, self.margin, self.lambda)?;
        let grid = uplink_grid(self.uplink_w0, l_sg, self.lambda, &profile, self.numerics.uplink_grid_n)?;
        let source = gaussian_field(self.uplink_w0, f64::INFINITY, grid, self.lambda)?;
        let chain_grid = chain.grid(self.numerics.grid_n, self.numerics.oversize)?;
        let opts = self.run_options();
        (0..turb.draws as u64)
            .into_par_iter()
            .map(|draw| {
                let r = run_uplink_chain(&source, &profile, l_sg, &chain, chain_grid, &opts, draw)?;
                Ok(UplinkRow {
                    draw,
                    w_lt: r.uplink.w_lt,
                    width: r.uplink.field_at_satellite.beam_width()?,
                    capture_fraction: r.uplink.capture_fraction,
                    uplink_loss_db: r.uplink_loss_db(),
                    chain_loss_db: to_db(r.chain_transmission),
                    total_loss_db: r.total_loss_db(),
                })
            })
            .collect()
    }
}

pub struct RunReport {
    /// Single-arm trace; qubit runs are relative to the captured power.
    pub trace: ChainTrace,
    pub budget: LossBudget,
    pub errors: Option<SweepStats>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn summary(&self) -> Result<String> {
        let mut s = String::new();
        let last = self.trace.final_point();
        let _ = writeln!(s, "elements              {}", self.trace.points.len());
        let _ = writeln!(s, "arm distance          {:.1} km", last.distance / 1e3);
        let _ = writeln!(s, "arm transmission      {:.6}", last.transmission);
        let _ = writeln!(s, "arm loss              {:.4} dB", last.loss_db());
        for c in self.budget.components()? {
            let _ = writeln!(s, "{:<21} {:.4} dB", c.name, c.loss_db());
        }
        let _ = writeln!(s, "total                 {:.4} dB", total_budget(&self.budget)?);
        for n in &self.notes {
            let _ = writeln!(s, "{n}");
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d: f64,
    pub l0: f64,
    pub transmission: f64,
    pub loss_db: f64,
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d_m", "L0_m", "transmission", "loss_db"])?;
    for r in rows {
        w.write_record(&[r.d.to_string(), r.l0.to_string(), format!("{:e}", r.transmission), format!("{:.6}", r.loss_db)])?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkRow {
    pub draw: u64,
    pub w_lt: f64,
    /// Second-moment width of the field reaching the satellite.
    pub width: f64,
    pub capture_fraction: f64,
    pub uplink_loss_db: f64,
    pub chain_loss_db: f64,
    pub total_loss_db: f64,
}

/// Share of the mean end-to-end loss (dB) taken by the uplink step.
pub fn uplink_loss_share(rows: &[UplinkRow]) -> f64 {
    let up: f64 = rows.iter().map(|r| r.uplink_loss_db).sum();
    let total: f64 = rows.iter().map(|r| r.total_loss_db).sum();
    if total > 0.0 { up / total } else { 0.0 }
}

pub fn write_uplink_csv<W: std::io::Write>(rows: &[UplinkRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["draw", "w_lt_m", "width_m", "capture_fraction", "uplink_loss_db", "chain_loss_db", "total_loss_db"])?;
    for r in rows {
        w.write_record(&[
            r.draw.to_string(),
            format!("{:.6}", r.w_lt),
            format!("{:.6}", r.width),
            format!("{:e}", r.capture_fraction),
            format!("{:.6}", r.uplink_loss_db),
            format!("{:.6}", r.chain_loss_db),
            format!("{:.6}", r.total_loss_db),
        ])?;
    }
    w.flush()
}

/// Relay lenses a chain contains, ignoring ground optics.
pub fn relay_lenses(chain: &ChainSpec) -> usize {
    chain.stages.iter().filter(|s| s.role() == Role::Relay).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
protocol = "entanglement"
lambda = 800e-9
d = 0.6
L0 = 120e3
total_distance = 2400e3
"#;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = Scenario::from_toml(BASE).unwrap();
        assert_eq!(s.numerics.grid_n, 1024);
        assert_eq!(s.numerics.oversize, 8.0);
        assert_eq!(s.per_sat_loss, 0.0);
        assert!(s.turbulence.is_none());
    }

    #[test]
    fn missing_lambda_names_the_key() {
        let text = BASE.replace("lambda = 800e-9\n", "");
        let err = Scenario::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("lambda"), "{err}");
    }

    #[test]
    fn unknown_and_bad_keys_are_rejected() {
        let err = Scenario::from_toml(&format!("{BASE}wavelength = 1.0\n")).unwrap_err().to_string();
        assert!(err.contains("wavelength"), "{err}");
        let err = Scenario::from_toml(&BASE.replace("d = 0.6", "d = -0.6")).unwrap_err().to_string();
        assert!(err.contains("`d`"), "{err}");
        let err = Scenario::from_toml(&format!("{BASE}[numerics]\ngrid_n = 1000\n")).unwrap_err().to_string();
        assert!(err.contains("numerics.grid_n"), "{err}");
        let err = Scenario::from_toml(&format!("{BASE}[sweep]\nd = []\nL0 = [1.0]\n")).unwrap_err().to_string();
        assert!(err.contains("sweep.d"), "{err}");
    }

    #[test]
    fn sections_parse() {
        let text = format!(
            "{BASE}L_sg = 200e3\n[turbulence]\nA = 1e-14\nseed = 3\n[errors]\nf_frac = 0.05\nfocal_reference = \"per-lens\"\n[overheads]\neta_d = 0.5\n"
        );
        let s = Scenario::from_toml(&text).unwrap();
        assert_eq!(s.turbulence.as_ref().unwrap().a, 1e-14);
        assert_eq!(s.turbulence.as_ref().unwrap().screens, 17);
        assert_eq!(s.errors.as_ref().unwrap().focal_reference, FocalReference::PerLens);
        assert_eq!(s.overheads.eta_d, 0.5);
        assert_eq!(s.overheads.eta_a, 0.8);
    }

    #[test]
    fn entanglement_arm_is_half_the_distance() {
        let s = Scenario::from_toml(BASE).unwrap();
        let chain = s.arm_chain(0.6, 120e3).unwrap();
        assert_eq!(relay_lenses(&chain), 10);
        let with_ground = Scenario { l_sg: Some(200e3), ..s };
        let chain = with_ground.arm_chain(0.6, 120e3).unwrap();
        assert_eq!(chain.ground_link_count(), 1);
    }

    #[test]
    fn small_run_and_sweep() {
        let text = format!("{BASE}per_sat_loss = 0.02\n[numerics]\ngrid_n = 256\noversize = 4\n[sweep]\nd = [0.6]\nL0 = [120e3, 240e3]\n");
        let s = Scenario::from_toml(&text).unwrap();
        let report = s.run().unwrap();
        let t = report.budget.diffraction;
        assert!(t > 0.95 && t <= 1.0, "{t}");
        let total = total_budget(&report.budget).unwrap();
        let sum: f64 = report.budget.components().unwrap().iter().map(|c| c.loss_db()).sum();
        assert!((total - sum).abs() < 1e-9);
        assert!(report.summary().unwrap().contains("total"));
        let rows = s.sweep().unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].transmission - t * t).abs() < 1e-9);
        assert!(rows[1].transmission < rows[0].transmission);
    }
}
