//! Complex scalar fields on square grids, angular-spectrum propagation and
//! thin optical elements.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::fft;

/// Smallest grid edge accepted for a field.
pub const MIN_GRID_N: usize = 64;

/// Fraction of the grid side that a beam width may reach before
/// propagation refuses to run.
pub const GUARD_FRACTION: f64 = 1.0 / 3.0;

/// Square sampling grid: `n` samples across a physical `side` (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub side: f64,
}

impl Grid {
    pub fn new(n: usize, side: f64) -> Result<Self> {
        if n < MIN_GRID_N || !n.is_power_of_two() {
            return Err(SimError::InvalidGrid(format!(
                "N must be a power of two >= {MIN_GRID_N}, got {n}"
            )));
        }
        if !side.is_finite() || side <= 0.0 {
            return Err(SimError::InvalidGrid(format!("side length must be > 0, got {side}")));
        }
        Ok(Self { n, side })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    /// Physical coordinate of sample index `i`; the optical axis sits at `n/2`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }
}

/// Transverse displacement of an element from the optical axis, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Offset {
    pub x: f64,
    pub y: f64,
}

impl Offset {
    pub const ZERO: Offset = Offset { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// A real phase map in radians, sampled on the same grid as the field it
/// is applied to.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    n: usize,
    phase: Arc<Vec<f64>>,
}

impl PhaseMap {
    pub fn new(n: usize, phase: Vec<f64>) -> Result<Self> {
        if phase.len() != n * n {
            return Err(SimError::InvalidArgument(format!(
                "phase map holds {} samples, expected {}",
                phase.len(),
                n * n
            )));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(SimError::NonFinite("phase map"));
        }
        Ok(Self { n, phase: Arc::new(phase) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.phase
    }
}

/// One relay surface.
#[derive(Debug, Clone, PartialEq)]
pub enum OpticalElement {
    /// Thin lens clipped to its clear aperture. An infinite focal length
    /// leaves only the aperture.
    ThinLens { focal_length: f64, diameter: f64, center: Offset },
    /// Passes light inside the disk.
    Aperture { diameter: f64, center: Offset },
    /// Blocks light inside the disk.
    Obstruction { diameter: f64, center: Offset },
    /// Multiplies the field by `exp(i·phase)`.
    PhaseScreen(PhaseMap),
}

impl OpticalElement {
    pub fn lens(focal_length: f64, diameter: f64) -> Self {
        OpticalElement::ThinLens { focal_length, diameter, center: Offset::ZERO }
    }

    pub fn aperture(diameter: f64) -> Self {
        OpticalElement::Aperture { diameter, center: Offset::ZERO }
    }

    pub fn obstruction(diameter: f64) -> Self {
        OpticalElement::Obstruction { diameter, center: Offset::ZERO }
    }

    /// Clear (or blocking) diameter, if the element has one.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            OpticalElement::ThinLens { diameter, .. }
            | OpticalElement::Aperture { diameter, .. }
            | OpticalElement::Obstruction { diameter, .. } => Some(*diameter),
            OpticalElement::PhaseScreen(_) => None,
        }
    }

    pub fn center(&self) -> Offset {
        match self {
            OpticalElement::ThinLens { center, .. }
            | OpticalElement::Aperture { center, .. }
            | OpticalElement::Obstruction { center, .. } => *center,
            OpticalElement::PhaseScreen(_) => Offset::ZERO,
        }
    }

    pub fn focal_length(&self) -> Option<f64> {
        match self {
            OpticalElement::ThinLens { focal_length, .. } => Some(*focal_length),
            _ => None,
        }
    }

    /// Checks the element against a grid of the given side length.
    pub fn check_fits(&self, grid: &Grid) -> Result<()> {
        let Some(diameter) = self.diameter() else {
            return match self {
                OpticalElement::PhaseScreen(map) if map.n != grid.n => {
                    Err(SimError::GridMismatch { expected: grid.n, got: map.n })
                }
                _ => Ok(()),
            };
        };
        let center = self.center();
        if !diameter.is_finite() || !center.x.is_finite() || !center.y.is_finite() {
            return Err(SimError::NonFinite("element geometry"));
        }
        if diameter <= 0.0 || diameter >= grid.side {
            return Err(SimError::ElementOffGrid(format!(
                "diameter {diameter} m must lie in (0, {})",
                grid.side
            )));
        }
        if center.radius() + diameter / 2.0 >= grid.side / 2.0 {
            return Err(SimError::ElementOffGrid(format!(
                "element of diameter {diameter} m at offset ({}, {}) m leaves the {} m grid",
                center.x, center.y, grid.side
            )));
        }
        if let OpticalElement::ThinLens { focal_length, .. } = self {
            if focal_length.is_nan() || *focal_length == 0.0 {
                return Err(SimError::InvalidArgument(format!(
                    "focal length must be nonzero, got {focal_length}"
                )));
            }
        }
        Ok(())
    }
}

/// Complex amplitude on an N×N grid, stored row-major (row = y, column = x).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    wavelength: f64,
    samples: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Grid, wavelength: f64, samples: Vec<Complex64>) -> Result<Self> {
        let grid = Grid::new(grid.n, grid.side)?;
        if !wavelength.is_finite() || wavelength <= 0.0 {
            return Err(SimError::InvalidArgument(format!(
                "wavelength must be > 0, got {wavelength}"
            )));
        }
        if samples.len() != grid.n * grid.n {
            return Err(SimError::InvalidGrid(format!(
                "{} samples supplied for a {}x{} grid",
                samples.len(),
                grid.n,
                grid.n
            )));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(SimError::NonFinite("field samples"));
        }
        Ok(Self { grid, wavelength, samples })
    }

    /// Samples `amplitude(x, y)` at every grid point.
    pub fn from_fn<F>(grid: Grid, wavelength: f64, mut amplitude: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let coords = grid.coords();
        let mut samples = Vec::with_capacity(grid.n * grid.n);
        for &y in &coords {
            for &x in &coords {
                samples.push(amplitude(x, y));
            }
        }
        Self::new(grid, wavelength, samples)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn side_length(&self) -> f64 {
        self.grid.side
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.samples[row * self.grid.n + col]
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Σ|u|²·dx².
    pub fn total_power(&self) -> f64 {
        let dx = self.spacing();
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * dx * dx
    }

    /// Power inside the disk of `diameter` centred at `center`
    /// (pixel centres on the rim count as inside).
    pub fn captured_power(&self, diameter: f64, center: Offset) -> f64 {
        let r2 = (diameter / 2.0).powi(2);
        let coords = self.grid.coords();
        let n = self.grid.n;
        let dx = self.spacing();
        let mut acc = 0.0;
        for (row, &y) in coords.iter().enumerate() {
            let dy2 = (y - center.y).powi(2);
            if dy2 > r2 {
                continue;
            }
            let line = &self.samples[row * n..(row + 1) * n];
            for (s, &x) in line.iter().zip(&coords) {
                if (x - center.x).powi(2) + dy2 <= r2 {
                    acc += s.norm_sqr();
                }
            }
        }
        acc * dx * dx
    }

    /// Power-weighted centroid `(x̄, ȳ)`.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        let coords = self.grid.coords();
        let n = self.grid.n;
        let (mut p, mut mx, mut my) = (0.0, 0.0, 0.0);
        for (row, &y) in coords.iter().enumerate() {
            for (col, &x) in coords.iter().enumerate() {
                let i = self.samples[row * n + col].norm_sqr();
                p += i;
                mx += i * x;
                my += i * y;
            }
        }
        if !(p > 0.0) {
            return Err(SimError::ZeroPower);
        }
        Ok((mx / p, my / p))
    }

    /// Second-moment beam width `2σ`, with σ² the power-weighted central
    /// second moment averaged over x and y. Equals `w0` for a Gaussian
    /// `exp(-r²/w0²)` amplitude.
    pub fn beam_width(&self) -> Result<f64> {
        let (cx, cy) = self.centroid()?;
        let coords = self.grid.coords();
        let n = self.grid.n;
        let (mut p, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (row, &y) in coords.iter().enumerate() {
            let dy2 = (y - cy).powi(2);
            for (col, &x) in coords.iter().enumerate() {
                let i = self.samples[row * n + col].norm_sqr();
                p += i;
                sxx += i * (x - cx).powi(2);
                syy += i * dy2;
            }
        }
        let var = 0.5 * (sxx + syy) / p;
        Ok(2.0 * var.sqrt())
    }

    /// Returns a copy scaled so that the total power is one.
    pub fn normalized(&self) -> Result<Self> {
        let p = self.total_power();
        if !(p > 0.0) || !p.is_finite() {
            return Err(SimError::ZeroPower);
        }
        Ok(self.scaled(1.0 / p.sqrt()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            wavelength: self.wavelength,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }

    /// Relative L2 distance `‖a − b‖ / ‖b‖` to another field on the same grid.
    pub fn relative_l2_distance(&self, reference: &ScalarField) -> f64 {
        assert_eq!(self.grid.n, reference.grid.n, "grid mismatch");
        let num: f64 = self
            .samples
            .iter()
            .zip(&reference.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = reference.samples.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }

    /// Width a Gaussian of this field's second-moment width would reach
    /// after `distance`, treating the current plane as its waist.
    pub fn predicted_width(&self, distance: f64) -> Result<f64> {
        let w = self.beam_width()?;
        let z_r = PI * w * w / self.wavelength;
        Ok(w * (1.0 + (distance / z_r).powi(2)).sqrt())
    }

    /// Advances the field by `distance` with the angular-spectrum transfer
    /// function. Evanescent components are dropped and the constant
    /// `exp(ikz)` carrier phase is omitted.
    pub fn propagate(&self, distance: f64) -> Result<Self> {
        if !distance.is_finite() {
            return Err(SimError::NonFinite("propagation distance"));
        }
        if distance < 0.0 {
            return Err(SimError::InvalidArgument(format!(
                "propagation distance must be >= 0, got {distance}"
            )));
        }
        let power = self.total_power();
        if !power.is_finite() {
            return Err(SimError::NonFinite("field samples"));
        }
        if distance == 0.0 {
            return Ok(self.clone());
        }
        if power > 0.0 {
            let predicted = self.predicted_width(distance)?;
            let limit = self.grid.side * GUARD_FRACTION;
            if predicted > limit {
                return Err(SimError::GuardBand { predicted, limit });
            }
        }

        let n = self.grid.n;
        let mut data = self.samples.clone();
        fft::forward(&mut data, n);
        let k = self.wavenumber();
        let df = 1.0 / self.grid.side;
        let lam2 = self.wavelength * self.wavelength;
        let norm = 1.0 / (n * n) as f64;
        let fy2: Vec<f64> = (0..n).map(|i| (fft::freq_index(i, n) * df).powi(2)).collect();
        for (row, line) in data.chunks_exact_mut(n).enumerate() {
            for (col, v) in line.iter_mut().enumerate() {
                let s = lam2 * (fy2[row] + fy2[col]);
                if s >= 1.0 {
                    *v = Complex64::default();
                } else {
                    // k z (sqrt(1-s) - 1), written to avoid cancellation.
                    let phase = -k * distance * s / (1.0 + (1.0 - s).sqrt());
                    *v *= Complex64::from_polar(norm, phase);
                }
            }
        }
        fft::inverse(&mut data, n);
        Ok(Self { grid: self.grid, wavelength: self.wavelength, samples: data })
    }

    /// Applies a thin element at the current plane.
    pub fn apply(&self, element: &OpticalElement) -> Result<Self> {
        element.check_fits(&self.grid)?;
        let n = self.grid.n;
        let coords = self.grid.coords();
        let mut out = self.samples.clone();
        match element {
            OpticalElement::PhaseScreen(map) => {
                for (v, &ph) in out.iter_mut().zip(map.values()) {
                    *v *= Complex64::from_polar(1.0, ph);
                }
            }
            OpticalElement::Obstruction { diameter, center } => {
                let r2 = (diameter / 2.0).powi(2);
                for (row, &y) in coords.iter().enumerate() {
                    let dy2 = (y - center.y).powi(2);
                    if dy2 > r2 {
                        continue;
                    }
                    for (col, &x) in coords.iter().enumerate() {
                        if (x - center.x).powi(2) + dy2 < r2 {
                            out[row * n + col] = Complex64::default();
                        }
                    }
                }
            }
            OpticalElement::Aperture { diameter, center } => {
                clip_outside(&mut out, &coords, *diameter, *center, None, self.wavenumber());
            }
            OpticalElement::ThinLens { focal_length, diameter, center } => {
                let focal = if focal_length.is_finite() { Some(*focal_length) } else { None };
                clip_outside(&mut out, &coords, *diameter, *center, focal, self.wavenumber());
            }
        }
        Ok(Self { grid: self.grid, wavelength: self.wavelength, samples: out })
    }

    /// Bilinear resampling onto a new grid. The result carries the power
    /// this field holds inside the new grid's extent.
    pub fn resample(&self, grid: Grid) -> Result<Self> {
        let grid = Grid::new(grid.n, grid.side)?;
        let old = self.grid;
        let odx = old.spacing();
        let half = (old.n / 2) as f64;
        let on = old.n;
        let sample = |x: f64, y: f64| -> Complex64 {
            let fx = x / odx + half;
            let fy = y / odx + half;
            if fx < 0.0 || fy < 0.0 {
                return Complex64::default();
            }
            let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
            if c0 + 1 >= on || r0 + 1 >= on {
                return Complex64::default();
            }
            let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
            let s = &self.samples;
            s[r0 * on + c0] * ((1.0 - tx) * (1.0 - ty))
                + s[r0 * on + c0 + 1] * (tx * (1.0 - ty))
                + s[(r0 + 1) * on + c0] * ((1.0 - tx) * ty)
                + s[(r0 + 1) * on + c0 + 1] * (tx * ty)
        };
        let out = Self::from_fn(grid, self.wavelength, sample)?;

        let half_side = grid.side / 2.0;
        let coords = old.coords();
        let mut target = 0.0;
        for (row, &y) in coords.iter().enumerate() {
            if y.abs() > half_side {
                continue;
            }
            for (col, &x) in coords.iter().enumerate() {
                if x.abs() <= half_side {
                    target += self.samples[row * on + col].norm_sqr();
                }
            }
        }
        target *= odx * odx;
        let got = out.total_power();
        if got > 0.0 && target > 0.0 {
            Ok(out.scaled((target / got).sqrt()))
        } else {
            Ok(out)
        }
    }

    /// Azimuthally averaged intensity about the grid centre, in rings of
    /// width `bin`. Returns `(ring centre radius, mean intensity)`.
    pub fn radial_profile(&self, bin: f64) -> Vec<(f64, f64)> {
        let coords = self.grid.coords();
        let n = self.grid.n;
        let bins = ((self.grid.side / 2.0) / bin).floor() as usize;
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for (row, &y) in coords.iter().enumerate() {
            for (col, &x) in coords.iter().enumerate() {
                let b = (x.hypot(y) / bin) as usize;
                if b < bins {
                    sum[b] += self.samples[row * n + col].norm_sqr();
                    count[b] += 1;
                }
            }
        }
        sum.iter()
            .zip(&count)
            .enumerate()
            .filter(|(_, (_, &c))| c > 0)
            .map(|(b, (s, &c))| ((b as f64 + 0.5) * bin, s / c as f64))
            .collect()
    }
}

/// Zeroes samples outside the disk; inside it optionally applies the
/// thin-lens phase `exp(-ik((x-x0)²+(y-y0)²)/2f)`, which separates in x and y.
fn clip_outside(
    data: &mut [Complex64],
    coords: &[f64],
    diameter: f64,
    center: Offset,
    focal: Option<f64>,
    k: f64,
) {
    let n = coords.len();
    let r2 = (diameter / 2.0).powi(2);
    let (px, py): (Vec<Complex64>, Vec<Complex64>) = match focal {
        Some(f) => (
            coords.iter().map(|x| Complex64::from_polar(1.0, -k * (x - center.x).powi(2) / (2.0 * f))).collect(),
            coords.iter().map(|y| Complex64::from_polar(1.0, -k * (y - center.y).powi(2) / (2.0 * f))).collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    for (row, &y) in coords.iter().enumerate() {
        let dy2 = (y - center.y).powi(2);
        let line = &mut data[row * n..(row + 1) * n];
        if dy2 > r2 {
            line.iter_mut().for_each(|v| *v = Complex64::default());
            continue;
        }
        for (col, (v, &x)) in line.iter_mut().zip(coords).enumerate() {
            if (x - center.x).powi(2) + dy2 > r2 {
                *v = Complex64::default();
            } else if focal.is_some() {
                *v *= px[col] * py[row];
            }
        }
    }
}
