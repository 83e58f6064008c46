//! Atmospheric turbulence on the ground-to-satellite uplink.
//!
//! The refractive-index structure constant follows the Hufnagel-Valley
//! profile. Phase screens are FFT-synthesized with subharmonic
//! low-frequency repair and stacked split-step style up to the top altitude.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beams::rayleigh_range;
use crate::chain::{run_chain_with, ChainSpec, ChainTrace, RunOptions};
use crate::error::{Result, SimError};
use crate::field::{Grid, Offset, OpticalElement, PhaseMap, ScalarField};
use crate::fft;

/// Coefficient of the Fried-parameter integral.
pub const FRIED_COEFFICIENT: f64 = 0.42;
pub const DEFAULT_A: f64 = 1.7e-14;
pub const DEFAULT_WIND: f64 = 21.0;
pub const DEFAULT_SCREENS: usize = 17;
/// Highest screen altitude; turbulence above it is negligible.
pub const TOP_ALTITUDE: f64 = 20e3;
const LOWEST_NONZERO_ALTITUDE: f64 = 20.0;
const SUBHARMONIC_LEVELS: u32 = 3;
/// Uplink grid side as a multiple of the long-term beam waist.
pub const UPLINK_OVERSIZE: f64 = 8.0;

/// `count` altitudes: ground plus `count−1` log-spaced levels up to 20 km.
pub fn default_altitudes(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let steps = (count - 2).max(1) as f64;
            let ratio = (TOP_ALTITUDE / LOWEST_NONZERO_ALTITUDE).ln();
            std::iter::once(0.0)
                .chain((0..count - 1).map(|i| {
                    if count == 2 {
                        TOP_ALTITUDE
                    } else {
                        LOWEST_NONZERO_ALTITUDE * (ratio * i as f64 / steps).exp()
                    }
                }))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurbulenceProfile {
    /// Ground-level structure constant, m^(-2/3).
    pub a: f64,
    /// High-altitude wind speed, m/s.
    pub wind: f64,
    pub altitudes: Vec<f64>,
    pub seed: u64,
    /// Multiplies the whole profile; zero gives vacuum.
    pub scale: f64,
}

impl Default for TurbulenceProfile {
    fn default() -> Self {
        Self { a: DEFAULT_A, wind: DEFAULT_WIND, altitudes: default_altitudes(DEFAULT_SCREENS), seed: 0, scale: 1.0 }
    }
}

impl TurbulenceProfile {
    pub fn new(a: f64, wind: f64, altitudes: Vec<f64>, seed: u64) -> Result<Self> {
        let p = Self { a, wind, altitudes, seed, scale: 1.0 };
        p.validate()?;
        Ok(p)
    }

    /// A profile with no turbulence at all.
    pub fn vacuum() -> Self {
        Self { scale: 0.0, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(SimError::InvalidArgument(format!("A must be >= 0, got {}", self.a)));
        }
        if !(self.wind >= 0.0) || !self.wind.is_finite() {
            return Err(SimError::InvalidArgument(format!("wind must be >= 0, got {}", self.wind)));
        }
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(SimError::InvalidArgument(format!("scale must be >= 0, got {}", self.scale)));
        }
        if self.altitudes.is_empty() || self.altitudes.len() > 256 {
            return Err(SimError::InvalidArgument("need between 1 and 256 screen altitudes".into()));
        }
        let ordered = self.altitudes.windows(2).all(|w| w[0] < w[1]);
        let first = self.altitudes[0];
        let last = *self.altitudes.last().unwrap();
        if !ordered || first < 0.0 || last > TOP_ALTITUDE {
            return Err(SimError::InvalidArgument(
                "screen altitudes must increase strictly within [0, 20 km]".into(),
            ));
        }
        Ok(())
    }

    /// Structure constant Cₙ² at altitude `z`.
    pub fn cn2(&self, z: f64) -> f64 {
        let wind = 0.00594 * (self.wind / 27.0).powi(2) * (1e-5 * z).powi(10) * (-z / 1000.0).exp();
        self.scale * (wind + 2.7e-16 * (-z / 1500.0).exp() + self.a * (-z / 100.0).exp())
    }

    /// `∫ Cₙ²(z)·weight(z) dz` over `[lo, hi]`.
    fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, weight: F) -> f64 {
        if hi <= lo || self.scale == 0.0 {
            return 0.0;
        }
        // Break where the profile terms change character so each panel is smooth.
        let mut cuts = vec![lo];
        for b in [300.0, 1_000.0, 3_000.0, 10_000.0, 30_000.0, 100_000.0] {
            if b > lo && b < hi {
                cuts.push(b);
            }
        }
        cuts.push(hi);
        let f = |z: f64| self.cn2(z) * weight(z);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let rough = quadrature::integrate(f, w[0], w[1], 1e-30).integral.abs();
            total += quadrature::integrate(f, w[0], w[1], (rough * 1e-10).max(1e-40)).integral;
        }
        total
    }

    /// Altitude range `[lo, hi)` each screen stands for: midpoints between
    /// neighbouring screens, with the last slab running up to `top`.
    pub fn slab_bounds(&self, top: f64) -> Vec<(f64, f64)> {
        let alt = &self.altitudes;
        (0..alt.len())
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { 0.5 * (alt[i - 1] + alt[i]) };
                let hi = if i + 1 == alt.len() { top.max(alt[i]) } else { 0.5 * (alt[i] + alt[i + 1]) };
                (lo, hi)
            })
            .collect()
    }
}

/// Cₙ² at altitude `z` (free-function form).
pub fn cn2(z: f64, profile: &TurbulenceProfile) -> f64 {
    profile.cn2(z)
}

/// Fried parameter for an uplink of length `l` with path weighting
/// `((L−z)/L)^(5/3)`. Infinite when the profile is empty.
pub fn fried_parameter(l: f64, wavelength: f64, profile: &TurbulenceProfile) -> f64 {
    let k = 2.0 * PI / wavelength;
    let integral = profile.integrate(0.0, l, |z| ((l - z) / l).powf(5.0 / 3.0));
    if integral <= 0.0 {
        f64::INFINITY
    } else {
        (FRIED_COEFFICIENT * k * k * integral).powf(-0.6)
    }
}

/// Long-term beam waist after `l` metres of turbulent uplink.
pub fn long_term_waist(w0: f64, l: f64, wavelength: f64, r0: f64) -> f64 {
    let z0 = rayleigh_range(w0, wavelength);
    let k = 2.0 * PI / wavelength;
    let turb = if r0.is_finite() { 4.0 * l / (k * r0) } else { 0.0 };
    (w0 * w0 * (1.0 + (l / z0).powi(2)) + 2.0 * turb * turb).sqrt()
}

/// Fraction of a Gaussian of waist `w_lt` landing on a telescope of
/// diameter `d`, times the extra efficiency `eta0`.
pub fn uplink_capture(d: f64, w_lt: f64, eta0: f64) -> f64 {
    eta0 * -(-(d * d) / (2.0 * w_lt * w_lt)).exp_m1()
}

/// One screen with the altitude it sits at and its slab's Fried parameter.
#[derive(Debug, Clone)]
pub struct ScreenLayer {
    pub altitude: f64,
    pub r0: f64,
    pub screen: PhaseMap,
}

/// Kolmogorov phase power spectral density, rad²·m².
fn phase_psd(f: f64, r0: f64) -> f64 {
    0.023 * r0.powf(-5.0 / 3.0) * f.powf(-11.0 / 3.0)
}

/// `∫ |u|^(-11/3) d²u` over the unit cell centred on `(ix, iy)`. The
/// spectrum is homogeneous, so a cell of width `h` holds `h^(-5/3)` times
/// this much of the unit-strength PSD.
fn unit_cell_weight(ix: i32, iy: i32) -> f64 {
    static EDGE: OnceLock<f64> = OnceLock::new();
    static CORNER: OnceLock<f64> = OnceLock::new();
    let integrate = |cx: f64, cy: f64| {
        let inner = |x: f64| {
            quadrature::integrate(|y: f64| x.hypot(y).powf(-11.0 / 3.0), cy - 0.5, cy + 0.5, 1e-12).integral
        };
        quadrature::integrate(inner, cx - 0.5, cx + 0.5, 1e-11).integral
    };
    match (ix.abs(), iy.abs()) {
        (1, 1) => *CORNER.get_or_init(|| integrate(1.0, 1.0)),
        _ => *EDGE.get_or_init(|| integrate(1.0, 0.0)),
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Single Kolmogorov screen for Fried parameter `r0`.
pub fn kolmogorov_screen(grid: Grid, r0: f64, rng: &mut ChaCha8Rng) -> Result<PhaseMap> {
    let n = grid.n;
    if !r0.is_finite() {
        return PhaseMap::new(n, vec![0.0; n * n]);
    }
    if !(r0 > 0.0) {
        return Err(SimError::InvalidArgument(format!("r0 must be positive, got {r0}")));
    }
    let side = grid.side;
    let df = 1.0 / side;
    let mut spec = vec![Complex64::default(); n * n];
    for (row, line) in spec.chunks_mut(n).enumerate() {
        let fy = fft::freq_index(row, n) * df;
        for (col, v) in line.iter_mut().enumerate() {
            let fx = fft::freq_index(col, n) * df;
            let f = fx.hypot(fy);
            if f > 0.0 {
                *v = complex_normal(rng) * (phase_psd(f, r0).sqrt() * df);
            }
        }
    }
    fft::inverse(&mut spec, n);
    let mut phase: Vec<f64> = spec.iter().map(|c| c.re).collect();

    // Subharmonics: 3×3 frequency patches below the grid's lowest bin. Each
    // patch cell carries its integrated PSD rather than a centre sample,
    // since the spectrum varies by orders of magnitude across these cells.
    let coords = grid.coords();
    let mut low = vec![0.0; n * n];
    for p in 1..=SUBHARMONIC_LEVELS {
        let dfp = df / 3f64.powi(p as i32);
        for iy in -1i32..=1 {
            for ix in -1i32..=1 {
                if ix == 0 && iy == 0 {
                    continue;
                }
                let (fx, fy) = (ix as f64 * dfp, iy as f64 * dfp);
                let variance = 0.023 * r0.powf(-5.0 / 3.0) * dfp.powf(-5.0 / 3.0) * unit_cell_weight(ix, iy);
                let c = complex_normal(rng) * variance.sqrt();
                let ex: Vec<Complex64> = coords.iter().map(|&x| Complex64::from_polar(1.0, 2.0 * PI * fx * x)).collect();
                let ey: Vec<Complex64> = coords.iter().map(|&y| Complex64::from_polar(1.0, 2.0 * PI * fy * y)).collect();
                for (row, cy) in ey.iter().enumerate() {
                    let base = c * cy;
                    for (col, cx) in ex.iter().enumerate() {
                        low[row * n + col] += (base * cx).re;
                    }
                }
            }
        }
    }
    let mean = low.iter().sum::<f64>() / low.len() as f64;
    for (v, l) in phase.iter_mut().zip(&low) {
        *v += l - mean;
    }
    PhaseMap::new(n, phase)
}

fn screen_rng(seed: u64, draw: u64, layer: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((draw << 8) | layer as u64);
    rng
}

/// One screen per profile altitude for Monte Carlo draw `draw`. Each
/// screen carries its slab's integrated Cₙ² as a plane-wave Fried
/// parameter; the uplink path weighting is left to the loss evaluation.
pub fn make_phase_screens(
    profile: &TurbulenceProfile,
    wavelength: f64,
    grid: Grid,
    top: f64,
    draw: u64,
) -> Result<Vec<ScreenLayer>> {
    profile.validate()?;
    let k = 2.0 * PI / wavelength;
    profile
        .slab_bounds(top)
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi))| {
            let integral = profile.integrate(lo, hi, |_| 1.0);
            let r0 = if integral > 0.0 { (FRIED_COEFFICIENT * k * k * integral).powf(-0.6) } else { f64::INFINITY };
            let screen = kolmogorov_screen(grid, r0, &mut screen_rng(profile.seed, draw, i))?;
            Ok(ScreenLayer { altitude: profile.altitudes[i], r0, screen })
        })
        .collect()
}

/// Phase structure function `⟨(φ(x+r)−φ(x))²⟩` averaged over the `x` and
/// `y` directions and all screens, for integer pixel lags.
pub fn phase_structure_function(screens: &[PhaseMap], lags: &[usize]) -> Vec<f64> {
    lags.iter()
        .map(|&m| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for s in screens {
                let n = s.n();
                let v = s.values();
                if m >= n {
                    continue;
                }
                for a in 0..n {
                    for b in 0..n - m {
                        sum += (v[a * n + b + m] - v[a * n + b]).powi(2);
                        sum += (v[(b + m) * n + a] - v[b * n + a]).powi(2);
                        count += 2;
                    }
                }
            }
            if count == 0 { f64::NAN } else { sum / count as f64 }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct UplinkResult {
    pub w_lt: f64,
    pub r0: f64,
    /// Power on the satellite telescope over emitted power.
    pub capture_fraction: f64,
    pub field_at_satellite: ScalarField,
}

/// Grid wide enough for the long-term uplink spot at the satellite.
pub fn uplink_grid(w0: f64, l_sg: f64, wavelength: f64, profile: &TurbulenceProfile, n: usize) -> Result<Grid> {
    let r0 = fried_parameter(l_sg, wavelength, profile);
    Grid::new(n, UPLINK_OVERSIZE * long_term_waist(w0, l_sg, wavelength, r0))
}

/// Propagates `source` (at ground level) through the screens of draw
/// `draw` and then through vacuum to the satellite at `l_sg`.
pub fn simulate_uplink(
    source: &ScalarField,
    profile: &TurbulenceProfile,
    l_sg: f64,
    d: f64,
    draw: u64,
) -> Result<UplinkResult> {
    if !(l_sg > *profile.altitudes.last().unwrap_or(&0.0)) {
        return Err(SimError::InvalidArgument(format!(
            "satellite distance {l_sg} m must lie above the top screen"
        )));
    }
    let lambda = source.wavelength();
    let emitted = source.total_power();
    if !(emitted > 0.0) {
        return Err(SimError::ZeroPower);
    }
    let w0 = source.beam_width()?;
    let r0 = fried_parameter(l_sg, lambda, profile);
    let w_lt = long_term_waist(w0, l_sg, lambda, r0);
    let layers = make_phase_screens(profile, lambda, source.grid(), l_sg, draw)?;
    let mut field = source.clone();
    let mut height = 0.0;
    for layer in layers {
        field = field.propagate(layer.altitude - height)?;
        field = field.apply(&OpticalElement::PhaseScreen(layer.screen))?;
        height = layer.altitude;
    }
    field = field.propagate(l_sg - height)?;
    let capture_fraction = (field.captured_power(d, Offset::ZERO) / emitted).clamp(0.0, 1.0);
    Ok(UplinkResult { w_lt, r0, capture_fraction, field_at_satellite: field })
}

/// Uplink followed by a relay chain whose first element is the receiving
/// telescope.
#[derive(Debug, Clone)]
pub struct UplinkChainResult {
    pub uplink: UplinkResult,
    /// Power after the receiving telescope over emitted power.
    pub uplink_transmission: f64,
    /// Output over power after the receiving telescope.
    pub chain_transmission: f64,
    pub trace: ChainTrace,
}

impl UplinkChainResult {
    pub fn total_transmission(&self) -> f64 {
        self.uplink_transmission * self.chain_transmission
    }

    pub fn uplink_loss_db(&self) -> f64 {
        -10.0 * self.uplink_transmission.log10()
    }

    pub fn total_loss_db(&self) -> f64 {
        -10.0 * self.total_transmission().log10()
    }
}

/// Runs the uplink for draw `draw`, moves the field onto the chain grid
/// and runs `chain` from the first satellite onward.
pub fn run_uplink_chain(
    source: &ScalarField,
    profile: &TurbulenceProfile,
    l_sg: f64,
    chain: &ChainSpec,
    chain_grid: Grid,
    opts: &RunOptions,
    draw: u64,
) -> Result<UplinkChainResult> {
    let d = chain.meta.d;
    let uplink = simulate_uplink(source, profile, l_sg, d, draw)?;
    let emitted = source.total_power();
    let at_sat = uplink.field_at_satellite.resample(chain_grid)?;
    let incoming = at_sat.total_power();
    let trace = run_chain_with(&at_sat, chain, opts)?;
    let first = trace.points.first().map_or(0.0, |p| p.transmission);
    let uplink_transmission = (incoming / emitted * first).clamp(0.0, 1.0);
    let chain_transmission = if first > 0.0 { trace.final_transmission() / first } else { 0.0 };
    Ok(UplinkChainResult { uplink, uplink_transmission, chain_transmission, trace })
}
