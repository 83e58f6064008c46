//! Relay-lens chains: builders for the entanglement, qubit and on-axis
//! vortex layouts, the chain runner, and ground-link focal optimization.

use std::io::Write;

use crate::beams::{gaussian_field, vortex_field, waist_for_rayleigh_range, VortexSpec};
use crate::error::{Result, SimError};
use crate::field::{Grid, OpticalElement, ScalarField};

/// Default grid oversize: side length over the largest element diameter.
pub const DEFAULT_OVERSIZE: f64 = 8.0;

/// Regrid when the grid side and its target differ by more than this factor.
const REGRID_RATIO: f64 = 4.0;

/// Role an element plays in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Relay,
    GroundTx,
    GroundRx,
    ObstructingFront,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub role: Role,
    pub optic: OpticalElement,
}

impl Element {
    pub fn new(role: Role, optic: OpticalElement) -> Self {
        Self { role, optic }
    }
}

/// One plane of the chain, reached after a free-space `gap` from the
/// previous plane (or from the source for the first stage).
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub gap: f64,
    pub elements: Vec<Element>,
}

impl Stage {
    pub fn new(gap: f64, elements: Vec<Element>) -> Self {
        Self { gap, elements }
    }

    pub fn relay(gap: f64, optic: OpticalElement) -> Self {
        Self::new(gap, vec![Element::new(Role::Relay, optic)])
    }

    /// Role of the stage's main (non-obstructing) element.
    pub fn role(&self) -> Role {
        self.elements
            .iter()
            .map(|e| e.role)
            .find(|r| *r != Role::ObstructingFront)
            .unwrap_or(Role::ObstructingFront)
    }

    /// The relay optic of this stage, if any.
    pub fn relay_optic(&self) -> Option<&OpticalElement> {
        self.elements.iter().find(|e| e.role == Role::Relay).map(|e| &e.optic)
    }

    pub fn relay_optic_mut(&mut self) -> Option<&mut OpticalElement> {
        self.elements.iter_mut().find(|e| e.role == Role::Relay).map(|e| &mut e.optic)
    }

    fn max_diameter(&self) -> f64 {
        self.elements
            .iter()
            .filter_map(|e| e.optic.diameter())
            .fold(0.0, f64::max)
    }
}

/// Which ends of the chain get a ground link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundLinkSide {
    Both,
    DownlinkOnly,
}

/// Geometry the chain was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMeta {
    /// Relay telescope diameter.
    pub d: f64,
    /// Satellite separation.
    pub l0: f64,
    pub wavelength: f64,
    /// Source waist matched to the separation, `sqrt(L0 λ / π)`.
    pub w0: f64,
    pub total_distance: f64,
    /// Satellite–ground distance, once ground links are attached.
    pub l_sg: Option<f64>,
    pub d_ground: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub stages: Vec<Stage>,
    pub meta: ChainMeta,
    /// Stage indices of the two relay lenses tuned for the ground link.
    pub optimizable: Option<[usize; 2]>,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(SimError::InvalidArgument(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

/// Number of relay satellites spanning `total` at spacing `l0`.
pub fn satellite_count(total: f64, l0: f64) -> usize {
    ((total / l0) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn lens_focals(count: usize, l0: f64) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| if i == 0 { l0 } else { l0 / 2.0 })
}

/// Lenses of diameter `d` every `l0`, focal lengths `[L0, L0/2, L0/2, …]`,
/// the first one sitting at the source waist.
pub fn build_entanglement_chain(d: f64, l0: f64, total_distance: f64, wavelength: f64) -> Result<ChainSpec> {
    check_positive("d", d)?;
    check_positive("L0", l0)?;
    check_positive("total distance", total_distance)?;
    check_positive("wavelength", wavelength)?;
    let count = satellite_count(total_distance, l0);
    let stages = lens_focals(count, l0)
        .enumerate()
        .map(|(i, f)| Stage::relay(if i == 0 { 0.0 } else { l0 }, OpticalElement::lens(f, d)))
        .collect();
    Ok(ChainSpec {
        stages,
        meta: ChainMeta {
            d,
            l0,
            wavelength,
            w0: waist_for_rayleigh_range(l0, wavelength),
            total_distance,
            l_sg: None,
            d_ground: None,
        },
        optimizable: None,
    })
}

/// Central Airy-lobe radius after focusing a flat disk of diameter `d`
/// over `n` spans of `l0`.
pub fn airy_radius(n: usize, l0: f64, wavelength: f64, d: f64) -> f64 {
    n as f64 * l0 * 1.22 * wavelength / d
}

/// Smallest number of spans `n` whose Airy lobe reaches `margin·w0`.
pub fn qubit_focus_spans(d: f64, l0: f64, wavelength: f64, margin: f64) -> usize {
    let w0 = waist_for_rayleigh_range(l0, wavelength);
    let one = airy_radius(1, l0, wavelength, d);
    ((margin * w0 / one) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Qubit-transmission layout: a lens of focal `n·L0` focusing the captured
/// flat wavefront onto the `n`-th satellite, `n−1` bare apertures, then the
/// entanglement recipe from the focus onward.
pub fn build_qubit_chain(d: f64, l0: f64, total_distance: f64, margin: f64, wavelength: f64) -> Result<ChainSpec> {
    check_positive("d", d)?;
    check_positive("L0", l0)?;
    check_positive("total distance", total_distance)?;
    check_positive("wavelength", wavelength)?;
    if !(margin >= 1.0) || !margin.is_finite() {
        return Err(SimError::InvalidArgument(format!("margin must be finite and >= 1, got {margin}")));
    }
    let n = qubit_focus_spans(d, l0, wavelength, margin);
    if n as f64 * l0 >= total_distance {
        return Err(SimError::InvalidArgument(format!(
            "focus after {n} spans ({} m) does not fit in {total_distance} m",
            n as f64 * l0
        )));
    }
    let count = satellite_count(total_distance, l0);
    let mut stages = vec![Stage::relay(0.0, OpticalElement::lens(n as f64 * l0, d))];
    stages.extend((1..n).map(|_| Stage::relay(l0, OpticalElement::aperture(d))));
    stages.extend(lens_focals(count - n, l0).map(|f| Stage::relay(l0, OpticalElement::lens(f, d))));
    Ok(ChainSpec {
        stages,
        meta: ChainMeta {
            d,
            l0,
            wavelength,
            w0: waist_for_rayleigh_range(l0, wavelength),
            total_distance,
            l_sg: None,
            d_ground: None,
        },
        optimizable: None,
    })
}

/// Wraps every relay lens between two central obstructions of diameter
/// `front_fraction·d`, modelling on-axis telescopes.
pub fn build_onaxis_chain(d: f64, l0: f64, front_fraction: f64, total_distance: f64, wavelength: f64) -> Result<ChainSpec> {
    if !(front_fraction > 0.0 && front_fraction < 0.5) {
        return Err(SimError::InvalidArgument(format!(
            "front fraction must lie in (0, 0.5), got {front_fraction}"
        )));
    }
    let mut chain = build_entanglement_chain(d, l0, total_distance, wavelength)?;
    let front = OpticalElement::obstruction(front_fraction * d);
    for stage in &mut chain.stages {
        let mut els = vec![Element::new(Role::ObstructingFront, front.clone())];
        els.append(&mut stage.elements);
        els.push(Element::new(Role::ObstructingFront, front.clone()));
        stage.elements = els;
    }
    Ok(chain)
}

impl ChainSpec {
    pub fn relay_count(&self) -> usize {
        self.stages.iter().filter(|s| s.role() == Role::Relay).count()
    }

    pub fn ground_link_count(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| matches!(s.role(), Role::GroundTx | Role::GroundRx))
            .count()
    }

    pub fn relay_focals(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter_map(|s| s.relay_optic())
            .map(|o| o.focal_length().unwrap_or(f64::INFINITY))
            .collect()
    }

    pub fn max_diameter(&self) -> f64 {
        self.stages.iter().map(Stage::max_diameter).fold(0.0, f64::max)
    }

    /// Grid of `n` samples sized `oversize` times the largest element.
    pub fn grid(&self, n: usize, oversize: f64) -> Result<Grid> {
        Grid::new(n, oversize * self.max_diameter())
    }

    /// Total path length from the source to the last plane.
    pub fn length(&self) -> f64 {
        self.stages.iter().map(|s| s.gap).sum()
    }

    /// Unit-power Gaussian at the source waist `w0`, on this chain's grid.
    pub fn gaussian_source(&self, grid: Grid) -> Result<ScalarField> {
        gaussian_field(self.meta.w0, f64::INFINITY, grid, self.meta.wavelength)
    }

    /// Sets the focal length of the relay lens at `stage` (infinite turns
    /// it into a bare aperture).
    pub fn set_focal(&mut self, stage: usize, focal: f64) -> Result<()> {
        let optic = self.stages[stage].relay_optic_mut().ok_or_else(|| {
            SimError::InvalidArgument(format!("stage {stage} has no relay optic"))
        })?;
        let (diameter, center) = match optic {
            OpticalElement::ThinLens { diameter, center, .. }
            | OpticalElement::Aperture { diameter, center } => (*diameter, *center),
            _ => return Err(SimError::InvalidArgument(format!("stage {stage} is not a lens"))),
        };
        *optic = OpticalElement::ThinLens { focal_length: focal, diameter, center };
        Ok(())
    }
}

/// Attaches ground links of length `l_sg` and receiver diameter `d_ground`.
/// The downlink ends in a capture disk; `Both` also puts a ground
/// transmitter aperture at the source plane and moves the first relay
/// `l_sg` away. The last two relay lenses are marked optimizable.
pub fn add_ground_links(chain: &ChainSpec, l_sg: f64, d_ground: f64, side: GroundLinkSide) -> Result<ChainSpec> {
    check_positive("L_sg", l_sg)?;
    check_positive("d_ground", d_ground)?;
    let mut out = chain.clone();
    let relays: Vec<usize> = out
        .stages
        .iter()
        .enumerate()
        .filter(|(_, s)| s.role() == Role::Relay)
        .map(|(i, _)| i)
        .collect();
    if relays.len() < 2 {
        return Err(SimError::InvalidArgument("a ground link needs at least two relay lenses".into()));
    }
    let mut last_two = [relays[relays.len() - 2], relays[relays.len() - 1]];
    out.stages.push(Stage::new(
        l_sg,
        vec![Element::new(Role::GroundRx, OpticalElement::aperture(d_ground))],
    ));
    if side == GroundLinkSide::Both {
        out.stages[0].gap = l_sg;
        out.stages.insert(
            0,
            Stage::new(0.0, vec![Element::new(Role::GroundTx, OpticalElement::aperture(d_ground))]),
        );
        last_two = [last_two[0] + 1, last_two[1] + 1];
    }
    out.meta.l_sg = Some(l_sg);
    out.meta.d_ground = Some(d_ground);
    out.optimizable = Some(last_two);
    Ok(out)
}

/// Cumulative transmission after one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub element_index: usize,
    pub distance: f64,
    pub transmission: f64,
    /// Natural log of `transmission`, kept separately so deep losses do
    /// not underflow.
    pub log_transmission: f64,
}

impl TracePoint {
    pub fn loss_db(&self) -> f64 {
        -10.0 * self.log_transmission / std::f64::consts::LN_10
    }
}

#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub points: Vec<TracePoint>,
    /// Field after the last stage, rescaled to unit power.
    pub final_field: ScalarField,
}

impl ChainTrace {
    pub fn final_point(&self) -> TracePoint {
        *self.points.last().expect("trace has at least one stage")
    }

    pub fn final_transmission(&self) -> f64 {
        self.final_point().transmission
    }

    pub fn final_loss_db(&self) -> f64 {
        self.final_point().loss_db()
    }

    /// Writes `element_index,distance_m,cumulative_transmission,cumulative_loss_db`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["element_index", "distance_m", "cumulative_transmission", "cumulative_loss_db"])?;
        for p in &self.points {
            w.write_record(&[
                p.element_index.to_string(),
                format!("{}", p.distance),
                format!("{:e}", p.transmission),
                format!("{}", p.loss_db()),
            ])?;
        }
        w.flush()
    }
}

/// Runner settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub oversize: f64,
    pub regrid: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { oversize: DEFAULT_OVERSIZE, regrid: true }
    }
}

struct RunState {
    field: ScalarField,
    log_t: f64,
    distance: f64,
}

fn regrid_if_needed(field: ScalarField, stage: &Stage, opts: &RunOptions) -> Result<ScalarField> {
    if !opts.regrid {
        return Ok(field);
    }
    let scale = stage.max_diameter().max(field.beam_width()?);
    let target = opts.oversize * scale;
    let ratio = field.side_length() / target;
    if !(1.0 / REGRID_RATIO..=REGRID_RATIO).contains(&ratio) {
        field.resample(Grid::new(field.n(), target)?)
    } else {
        Ok(field)
    }
}

fn run_stages(
    mut state: RunState,
    stages: &[Stage],
    first_index: usize,
    opts: &RunOptions,
    points: &mut Vec<TracePoint>,
) -> Result<RunState> {
    for (offset, stage) in stages.iter().enumerate() {
        let index = first_index + offset;
        if state.log_t == f64::NEG_INFINITY {
            state.distance += stage.gap;
            points.push(TracePoint {
                element_index: index,
                distance: state.distance,
                transmission: 0.0,
                log_transmission: f64::NEG_INFINITY,
            });
            continue;
        }
        let mut field = state.field;
        if stage.gap > 0.0 {
            field = regrid_if_needed(field, stage, opts)?;
            field = field.propagate(stage.gap)?;
            state.distance += stage.gap;
        }
        for el in &stage.elements {
            field = field.apply(&el.optic)?;
        }
        // Input is unit power; anything above one is FFT round-off.
        let p = field.total_power().min(1.0);
        if p > 0.0 {
            state.log_t += p.ln();
            field = field.scaled(1.0 / p.sqrt());
        } else {
            state.log_t = f64::NEG_INFINITY;
        }
        state.field = field;
        points.push(TracePoint {
            element_index: index,
            distance: state.distance,
            transmission: state.log_t.exp(),
            log_transmission: state.log_t,
        });
    }
    Ok(state)
}

/// Runs `source` through every stage, recording the cumulative transmitted
/// power fraction after each one.
pub fn run_chain(source: &ScalarField, chain: &ChainSpec) -> Result<ChainTrace> {
    run_chain_with(source, chain, &RunOptions::default())
}

pub fn run_chain_with(source: &ScalarField, chain: &ChainSpec, opts: &RunOptions) -> Result<ChainTrace> {
    if chain.stages.is_empty() {
        return Err(SimError::InvalidArgument("chain has no stages".into()));
    }
    let state = RunState { field: source.normalized()?, log_t: 0.0, distance: 0.0 };
    let mut points = Vec::with_capacity(chain.stages.len());
    let state = run_stages(state, &chain.stages, 0, opts, &mut points)?;
    Ok(ChainTrace { points, final_field: state.field })
}

/// `single²`: both photons of a symmetric pair must survive.
pub fn pair_probability(single: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&single));
    single * single
}

/// Outcome of a ground-focal search.
#[derive(Debug, Clone)]
pub struct FocalOptimization {
    pub chain: ChainSpec,
    pub focals: [f64; 2],
    /// Captured fraction at the ground disk before and after.
    pub initial_objective: f64,
    pub objective: f64,
}

const COARSE_POINTS: usize = 16;
const GOLDEN_ITERS: usize = 16;
const SEARCH_ROUNDS: usize = 2;

/// Tunes the two optimizable relay focals to maximize the power captured
/// at the ground receiver: log-spaced coarse grid over `[L0/10, 100·L0]`
/// plus infinity, then golden-section refinement, one coordinate at a
/// time for two rounds. Only improvements are accepted.
pub fn optimize_ground_focals(source: &ScalarField, chain: &ChainSpec) -> Result<FocalOptimization> {
    optimize_ground_focals_with(source, chain, &RunOptions::default())
}

pub fn optimize_ground_focals_with(
    source: &ScalarField,
    chain: &ChainSpec,
    opts: &RunOptions,
) -> Result<FocalOptimization> {
    let [a, b] = chain
        .optimizable
        .ok_or_else(|| SimError::InvalidArgument("chain has no optimizable ground focals".into()))?;
    let mut points = Vec::new();
    let prefix = run_stages(
        RunState { field: source.normalized()?, log_t: 0.0, distance: 0.0 },
        &chain.stages[..a],
        0,
        opts,
        &mut points,
    )?;

    let tail_objective = |fa: f64, fb: f64| -> f64 {
        let mut tail: Vec<Stage> = chain.stages[a..].to_vec();
        let mut trial = ChainSpec { stages: Vec::new(), meta: chain.meta, optimizable: None };
        std::mem::swap(&mut trial.stages, &mut tail);
        if trial.set_focal(0, fa).is_err() || trial.set_focal(b - a, fb).is_err() {
            return f64::NEG_INFINITY;
        }
        let start = RunState { field: prefix.field.clone(), log_t: prefix.log_t, distance: prefix.distance };
        let mut scratch = Vec::new();
        match run_stages(start, &trial.stages, a, opts, &mut scratch) {
            Ok(s) => s.log_t,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let focals0 = chain.relay_focal_at(a)?;
    let focals1 = chain.relay_focal_at(b)?;
    let mut best = [focals0, focals1];
    let initial = tail_objective(best[0], best[1]);
    let mut best_val = initial;

    let l0 = chain.meta.l0;
    let (lo, hi) = ((l0 / 10.0).ln(), (100.0 * l0).ln());
    let coarse: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / (COARSE_POINTS - 1) as f64).exp())
        .collect();
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;

    for _ in 0..SEARCH_ROUNDS {
        for coord in 0..2 {
            let eval = |f: f64, cur: [f64; 2]| {
                let mut t = cur;
                t[coord] = f;
                tail_objective(t[0], t[1])
            };
            let mut cand = best;
            let mut cand_val = best_val;
            for &f in coarse.iter().chain(std::iter::once(&f64::INFINITY)) {
                let v = eval(f, best);
                if v > cand_val {
                    cand_val = v;
                    cand[coord] = f;
                }
            }
            // Golden-section in log focal length around the incumbent.
            if cand[coord].is_finite() && cand[coord] > 0.0 {
                let centre = cand[coord].ln();
                let (mut x0, mut x3) = (centre - step, centre + step);
                let g = (5f64.sqrt() - 1.0) / 2.0;
                let mut x1 = x3 - g * (x3 - x0);
                let mut x2 = x0 + g * (x3 - x0);
                let mut v1 = eval(x1.exp(), cand);
                let mut v2 = eval(x2.exp(), cand);
                for _ in 0..GOLDEN_ITERS {
                    if v1 > v2 {
                        x3 = x2;
                        x2 = x1;
                        v2 = v1;
                        x1 = x3 - g * (x3 - x0);
                        v1 = eval(x1.exp(), cand);
                    } else {
                        x0 = x1;
                        x1 = x2;
                        v1 = v2;
                        x2 = x0 + g * (x3 - x0);
                        v2 = eval(x2.exp(), cand);
                    }
                }
                let (x, v) = if v1 > v2 { (x1, v1) } else { (x2, v2) };
                if v > cand_val {
                    cand_val = v;
                    cand[coord] = x.exp();
                }
            }
            if cand_val > best_val {
                best = cand;
                best_val = cand_val;
            }
        }
    }

    let mut out = chain.clone();
    out.set_focal(a, best[0])?;
    out.set_focal(b, best[1])?;
    Ok(FocalOptimization {
        chain: out,
        focals: best,
        initial_objective: initial.exp(),
        objective: best_val.exp(),
    })
}

impl ChainSpec {
    fn relay_focal_at(&self, stage: usize) -> Result<f64> {
        self.stages
            .get(stage)
            .and_then(Stage::relay_optic)
            .map(|o| o.focal_length().unwrap_or(f64::INFINITY))
            .ok_or_else(|| SimError::InvalidArgument(format!("stage {stage} has no relay optic")))
    }
}

/// Runs an `LG₀^m` beam through a chain of on-axis telescopes, each an
/// obstruction–lens–obstruction sandwich.
pub fn run_onaxis_vortex(
    d: f64,
    l0: f64,
    front_fraction: f64,
    charge: u32,
    total_distance: f64,
    wavelength: f64,
    n: usize,
) -> Result<ChainTrace> {
    let chain = build_onaxis_chain(d, l0, front_fraction, total_distance, wavelength)?;
    let grid = chain.grid(n, DEFAULT_OVERSIZE)?;
    let source = vortex_field(VortexSpec::new(chain.meta.w0, charge, wavelength)?, 0.0, grid)?;
    run_chain(&source, &chain)
}

/// Ratio of on-axis intensity to the ring peak of the azimuthal profile;
/// small for doughnut beams.
pub fn central_to_ring_ratio(field: &ScalarField) -> f64 {
    let profile = field.radial_profile(field.spacing() * 1.5);
    let peak = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    if peak <= 0.0 {
        return 0.0;
    }
    profile.first().map(|p| p.1 / peak).unwrap_or(0.0)
}
