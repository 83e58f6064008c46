//! Monte Carlo setup errors: focal-length (f), longitudinal (z) and
//! transverse (xy) perturbation of relay lenses.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{run_chain_with, ChainSpec, Role, RunOptions};
use crate::error::{Result, SimError};
use crate::field::{OpticalElement, Offset, ScalarField};

/// Words reserved per element in a draw's random stream.
const WORDS_PER_ELEMENT: u128 = 16;

/// Scale of the focal-length error interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FocalReference {
    /// `Δf` spans `±f_frac·L0`, the focal length of the chain's end lenses.
    #[default]
    ChainFocal,
    /// `Δf` spans `±f_frac·f` of each lens's own focal length.
    PerLens,
}

/// Half-widths of the uniform error intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSpec {
    /// Fraction of the reference focal length (see [`FocalReference`]).
    pub f_frac: f64,
    /// Fraction of the satellite separation `L0`.
    pub z_frac: f64,
    /// Fraction of the telescope radius `d/2`.
    pub xy_frac: f64,
    pub reps: usize,
    pub seed: u64,
    pub focal_reference: FocalReference,
}

pub const DEFAULT_REPS: usize = 100;

impl ErrorSpec {
    pub fn new(f_frac: f64, z_frac: f64, xy_frac: f64, reps: usize, seed: u64) -> Result<Self> {
        for (name, v) in [("f_frac", f_frac), ("z_frac", z_frac), ("xy_frac", xy_frac)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        if reps == 0 {
            return Err(SimError::InvalidArgument("reps must be >= 1".into()));
        }
        Ok(Self { f_frac, z_frac, xy_frac, reps, seed, focal_reference: FocalReference::default() })
    }

    pub fn with_focal_reference(mut self, reference: FocalReference) -> Self {
        self.focal_reference = reference;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.f_frac == 0.0 && self.z_frac == 0.0 && self.xy_frac == 0.0
    }
}

/// Per-element uniform draws. The stream is keyed by `(seed, draw)` and
/// positioned by element index, so results do not depend on evaluation order.
fn element_draws(seed: u64, draw: u64, element: usize) -> [f64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng.set_word_pos(element as u128 * WORDS_PER_ELEMENT);
    [
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(0.0..=1.0),
        rng.gen_range(0.0..2.0 * PI),
    ]
}

/// Applies one random realization of the errors to every relay stage:
/// `f' = f + u₁·f_frac·f_ref`, `gap' = gap + L0·u₂·z_frac` and a centre offset
/// of radius `(d/2)·u₃·xy_frac` at a uniform angle. The source-attached
/// first gap (zero length) is left alone.
pub fn perturb_chain(chain: &ChainSpec, spec: &ErrorSpec, draw: u64) -> Result<ChainSpec> {
    let mut out = chain.clone();
    let l0 = chain.meta.l0;
    for (index, stage) in out.stages.iter_mut().enumerate() {
        if !stage.elements.iter().any(|e| e.role == Role::Relay) {
            continue;
        }
        let [u1, u2, u3, theta] = element_draws(spec.seed, draw, index);
        if stage.gap > 0.0 && spec.z_frac > 0.0 {
            let gap = stage.gap + l0 * u2 * spec.z_frac;
            if !(gap > 0.0) {
                return Err(SimError::InvalidArgument(format!(
                    "perturbed gap at stage {index} is {gap} m"
                )));
            }
            stage.gap = gap;
        }
        let Some(optic) = stage.relay_optic_mut() else { continue };
        let radius = optic.diameter().unwrap_or(0.0) / 2.0 * u3 * spec.xy_frac;
        let shift = Offset::new(radius * theta.cos(), radius * theta.sin());
        match optic {
            OpticalElement::ThinLens { focal_length, center, .. } => {
                if focal_length.is_finite() {
                    let reference = match spec.focal_reference {
                        FocalReference::ChainFocal => l0,
                        FocalReference::PerLens => *focal_length,
                    };
                    *focal_length += u1 * spec.f_frac * reference;
                }
                *center = Offset::new(center.x + shift.x, center.y + shift.y);
            }
            OpticalElement::Aperture { center, .. } => {
                *center = Offset::new(center.x + shift.x, center.y + shift.y);
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Mean and spread of cumulative transmission over Monte Carlo draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    /// Nominal distance of each stage.
    pub distance: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub reps: usize,
    /// Draws that failed (beam left the grid) and were counted as zero.
    pub failed: usize,
}

impl SweepStats {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&0.0)
    }

    pub fn final_std(&self) -> f64 {
        *self.std.last().unwrap_or(&0.0)
    }

    /// Writes `distance_m,mean,std,reps`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["distance_m", "mean", "std", "reps"])?;
        for i in 0..self.mean.len() {
            w.write_record(&[
                format!("{}", self.distance[i]),
                format!("{:e}", self.mean[i]),
                format!("{:e}", self.std[i]),
                self.reps.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Runs `spec.reps` perturbed copies of `chain` and summarizes the
/// cumulative transmission at every stage.
pub fn monte_carlo(source: &ScalarField, chain: &ChainSpec, spec: &ErrorSpec) -> Result<SweepStats> {
    monte_carlo_with(source, chain, spec, &RunOptions::default())
}

pub fn monte_carlo_with(
    source: &ScalarField,
    chain: &ChainSpec,
    spec: &ErrorSpec,
    opts: &RunOptions,
) -> Result<SweepStats> {
    let stages = chain.stages.len();
    let mut distance = Vec::with_capacity(stages);
    let mut acc = 0.0;
    for s in &chain.stages {
        acc += s.gap;
        distance.push(acc);
    }
    // Draws are independent; each returns its own trace or `None` on failure.
    let runs: Vec<Option<Vec<f64>>> = (0..spec.reps as u64)
        .into_par_iter()
        .map(|draw| {
            let perturbed = perturb_chain(chain, spec, draw).ok()?;
            let trace = run_chain_with(source, &perturbed, opts).ok()?;
            Some(trace.points.iter().map(|p| p.transmission).collect())
        })
        .collect();
    let failed = runs.iter().filter(|r| r.is_none()).count();
    let n = spec.reps as f64;
    let mut mean = vec![0.0; stages];
    for r in runs.iter().flatten() {
        for (m, t) in mean.iter_mut().zip(r) {
            *m += t / n;
        }
    }
    let mut var = vec![0.0; stages];
    for r in &runs {
        for i in 0..stages {
            let t = r.as_ref().map_or(0.0, |v| v[i]);
            var[i] += (t - mean[i]).powi(2) / n;
        }
    }
    Ok(SweepStats { distance, mean, std: var.into_iter().map(f64::sqrt).collect(), reps: spec.reps, failed })
}

/// All three error channels at once.
pub fn combined_sweep(
    source: &ScalarField,
    chain: &ChainSpec,
    f_frac: f64,
    z_frac: f64,
    xy_frac: f64,
    reps: usize,
    seed: u64,
) -> Result<SweepStats> {
    monte_carlo(source, chain, &ErrorSpec::new(f_frac, z_frac, xy_frac, reps, seed)?)
}
