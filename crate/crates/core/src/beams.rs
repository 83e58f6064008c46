//! Beam sources and the analytic Gaussian-beam (ABCD) model.
//!
//! Fields use the `exp(+ikz)` carrier convention: a diverging wavefront of
//! radius `R > 0` carries the phase `exp(+ik r²/2R)`, and a thin lens of
//! positive focal length multiplies by `exp(-ik r²/2f)`. The complex beam
//! parameter below follows the usual textbook form `q = z + i·z_R`; the
//! ABCD algebra is identical in either sign convention.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::field::{Grid, ScalarField};

/// Rayleigh range `π w0² / λ`.
pub fn rayleigh_range(w0: f64, wavelength: f64) -> f64 {
    PI * w0 * w0 / wavelength
}

/// Waist whose Rayleigh range equals `z_r`: `sqrt(z_r λ / π)`.
pub fn waist_for_rayleigh_range(z_r: f64, wavelength: f64) -> f64 {
    (z_r * wavelength / PI).sqrt()
}

/// Distance behind a lens of focal length `f`, placed at a Gaussian waist
/// with Rayleigh range `z_r`, at which the new waist forms.
pub fn focusing_distance(f: f64, z_r: f64) -> f64 {
    f / (1.0 + (f / z_r).powi(2))
}

/// Effective focal length of two thin lenses `f1`, `f2` a distance
/// `separation` apart, measured from the second lens. Returns
/// `f64::INFINITY` for an afocal pair (`separation == f1 + f2`).
pub fn effective_focal_length(f1: f64, f2: f64, separation: f64) -> f64 {
    let den = separation - (f1 + f2);
    let scale = f1.abs() + f2.abs() + separation.abs();
    if den.abs() <= 1e-12 * scale {
        return f64::INFINITY;
    }
    f2 * (separation - f1) / den
}

/// Extra spacing `Δ` of an afocal pair of focal length `f` that yields the
/// effective focal length `target` (small-shift form `f²/Δ`).
pub fn mirror_shift_for(f: f64, target: f64) -> f64 {
    f * f / target
}

/// Gaussian beam described by its complex beam parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    q: Complex64,
    wavelength: f64,
}

impl GaussianState {
    pub fn new(q: Complex64, wavelength: f64) -> Result<Self> {
        if !(q.im > 0.0) || !q.re.is_finite() || !q.im.is_finite() {
            return Err(SimError::InvalidArgument(format!(
                "beam parameter needs Im(q) > 0, got {q}"
            )));
        }
        if !(wavelength > 0.0) {
            return Err(SimError::InvalidArgument("wavelength must be > 0".into()));
        }
        Ok(Self { q, wavelength })
    }

    /// Beam at its waist `w0`.
    pub fn at_waist(w0: f64, wavelength: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, rayleigh_range(w0, wavelength)), wavelength)
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        self.q.im
    }

    /// Signed distance from the waist (positive past the waist).
    pub fn distance_from_waist(&self) -> f64 {
        self.q.re
    }

    pub fn waist(&self) -> f64 {
        waist_for_rayleigh_range(self.q.im, self.wavelength)
    }

    /// 1/e² intensity radius at the current plane.
    pub fn width(&self) -> f64 {
        let inv = self.q.inv();
        (-self.wavelength / (PI * inv.im)).sqrt()
    }

    /// Wavefront radius of curvature; infinite at the waist.
    pub fn curvature_radius(&self) -> f64 {
        let inv = self.q.inv();
        if inv.re == 0.0 {
            f64::INFINITY
        } else {
            1.0 / inv.re
        }
    }

    /// Free-space step: `q' = q + z`.
    pub fn propagate(&self, distance: f64) -> Self {
        Self { q: self.q + distance, wavelength: self.wavelength }
    }

    /// Thin lens: `1/q' = 1/q − 1/f`. An infinite focal length is the identity.
    pub fn lens(&self, focal_length: f64) -> Result<Self> {
        if focal_length == 0.0 || focal_length.is_nan() {
            return Err(SimError::InvalidArgument("focal length must be nonzero".into()));
        }
        if focal_length.is_infinite() {
            return Ok(*self);
        }
        let inv = self.q.inv() - 1.0 / focal_length;
        Self::new(inv.inv(), self.wavelength)
    }
}

/// `q' = q + z`.
pub fn abcd_propagate(state: GaussianState, distance: f64) -> GaussianState {
    state.propagate(distance)
}

/// `1/q' = 1/q − 1/f`.
pub fn abcd_lens(state: GaussianState, focal_length: f64) -> Result<GaussianState> {
    state.lens(focal_length)
}

/// Laguerre–Gauss `LG₀^m` source description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexSpec {
    pub w0: f64,
    pub charge: u32,
    pub wavelength: f64,
}

impl VortexSpec {
    pub fn new(w0: f64, charge: u32, wavelength: f64) -> Result<Self> {
        if !(w0 > 0.0) || !w0.is_finite() {
            return Err(SimError::InvalidArgument(format!("w0 must be > 0, got {w0}")));
        }
        if !(wavelength > 0.0) {
            return Err(SimError::InvalidArgument("wavelength must be > 0".into()));
        }
        Ok(Self { w0, charge, wavelength })
    }
}

fn check_source_fits(w: f64, grid: &Grid) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(SimError::InvalidArgument(format!("beam width must be > 0, got {w}")));
    }
    if 4.0 * w >= grid.side {
        return Err(SimError::GuardBand { predicted: 4.0 * w, limit: grid.side });
    }
    if w < 2.0 * grid.spacing() {
        return Err(SimError::InvalidGrid(format!(
            "beam width {w} m is under-resolved by spacing {} m",
            grid.spacing()
        )));
    }
    Ok(())
}

/// Unit-power Gaussian of 1/e² radius `w0` with optional spherical phase.
/// A positive `curvature_radius` diverges; `f64::INFINITY` is a flat waist.
pub fn gaussian_field(w0: f64, curvature_radius: f64, grid: Grid, wavelength: f64) -> Result<ScalarField> {
    check_source_fits(w0, &grid)?;
    if curvature_radius == 0.0 || curvature_radius.is_nan() {
        return Err(SimError::InvalidArgument("curvature radius must be nonzero".into()));
    }
    let k = 2.0 * PI / wavelength;
    let curv = if curvature_radius.is_finite() { k / (2.0 * curvature_radius) } else { 0.0 };
    ScalarField::from_fn(grid, wavelength, |x, y| {
        let r2 = x * x + y * y;
        Complex64::from_polar((-r2 / (w0 * w0)).exp(), curv * r2)
    })?
    .normalized()
}

/// Unit-power flat wavefront filling a disk of diameter `diameter`.
pub fn top_hat_field(diameter: f64, grid: Grid, wavelength: f64) -> Result<ScalarField> {
    if !(diameter > 4.0 * grid.spacing()) || diameter >= grid.side {
        return Err(SimError::InvalidGrid(format!(
            "disk of {diameter} m does not fit a grid of side {} m and spacing {} m",
            grid.side,
            grid.spacing()
        )));
    }
    let r2max = diameter * diameter / 4.0;
    ScalarField::from_fn(grid, wavelength, |x, y| {
        if x * x + y * y <= r2max { Complex64::new(1.0, 0.0) } else { Complex64::default() }
    })?
    .normalized()
}

/// Unit-power `LG₀^m` field a distance `z` past its waist.
pub fn vortex_field(spec: VortexSpec, z: f64, grid: Grid) -> Result<ScalarField> {
    let z_r = rayleigh_range(spec.w0, spec.wavelength);
    let w = spec.w0 * (1.0 + (z / z_r).powi(2)).sqrt();
    check_source_fits(w, &grid)?;
    let k = 2.0 * PI / spec.wavelength;
    let m = spec.charge as i32;
    let curv = if z == 0.0 { 0.0 } else { k / (2.0 * (z + z_r * z_r / z)) };
    let gouy = (m.abs() + 1) as f64 * (z / z_r).atan();
    ScalarField::from_fn(grid, spec.wavelength, |x, y| {
        let r2 = x * x + y * y;
        let radial = (2.0f64.sqrt() * r2.sqrt() / w).powi(m.abs());
        let phase = m as f64 * y.atan2(x) + curv * r2 - gouy;
        Complex64::from_polar(radial * (-r2 / (w * w)).exp(), phase)
    })?
    .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 800e-9;

    #[test]
    fn rayleigh_range_of_reference_waist_is_120_km() {
        let w0 = waist_for_rayleigh_range(120e3, LAMBDA);
        assert!((w0 - 0.1748).abs() < 5e-4, "{w0}");
        assert!((rayleigh_range(w0, LAMBDA) - 120e3).abs() < 1e-6);
    }

    #[test]
    fn focusing_distance_peaks_at_rayleigh_range() {
        let z_r = 120e3;
        assert!((focusing_distance(z_r, z_r) - z_r / 2.0).abs() < 1e-9);
        assert!((focusing_distance(1e-3, z_r) - 1e-3).abs() < 1e-12);
        for i in 1..200 {
            let f = z_r * (i as f64) * 0.05;
            assert!(focusing_distance(f, z_r) <= z_r / 2.0 + 1e-9);
        }
    }

    #[test]
    fn abcd_free_space_adds_distance() {
        let s = GaussianState::at_waist(0.1, LAMBDA).unwrap();
        let z_r = s.rayleigh_range();
        let t = abcd_propagate(s, 5e3);
        assert_eq!(t.q(), Complex64::new(5e3, z_r));
        let w = t.width();
        assert!((w - 0.1 * (1.0 + (5e3 / z_r).powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lens_at_waist_with_f_equal_z_r_halves_rayleigh_range() {
        // 1/q' = 1/(i z_R) − 1/z_R = −(1 + i)/z_R  ⇒  q' = −z_R/2 + i z_R/2.
        let s = GaussianState::at_waist(0.1748, LAMBDA).unwrap();
        let z_r = s.rayleigh_range();
        let t = abcd_lens(s, z_r).unwrap();
        assert!((t.q().re + z_r / 2.0).abs() < 1e-6);
        assert!((t.rayleigh_range() - z_r / 2.0).abs() < 1e-6);
        assert!((t.waist() - 0.1748 / 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn infinite_lens_is_identity_and_zero_lens_errors() {
        let s = GaussianState::at_waist(0.1, LAMBDA).unwrap();
        assert_eq!(abcd_lens(s, f64::INFINITY).unwrap(), s);
        assert!(abcd_lens(s, 0.0).is_err());
    }

    #[test]
    fn effective_focal_length_cases() {
        assert!(effective_focal_length(1.0, 1.0, 2.0).is_infinite());
        // Afocal pair spread by Δ: f(f+Δ)/Δ.
        let fe = effective_focal_length(70.0, 70.0, 140.01);
        assert!((fe - 70.0 * 70.01 / 0.01).abs() / fe < 1e-6);
        assert!((mirror_shift_for(1.0, 50e3) - 20e-6).abs() < 1e-15);
        assert!((mirror_shift_for(70.0, 50e3) - 0.098).abs() < 1e-12);
        assert!((mirror_shift_for(70.0, 490e3) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn vortex_has_null_on_axis() {
        let spec = VortexSpec::new(0.1427, 2, LAMBDA).unwrap();
        let grid = Grid::new(256, 1.2).unwrap();
        let f = vortex_field(spec, 0.0, grid).unwrap();
        let peak = f.samples().iter().map(|s| s.norm()).fold(0.0, f64::max);
        assert!(f.at(128, 128).norm() < 1e-12 * peak);
        assert!((f.total_power() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_charge_vortex_equals_gaussian() {
        let grid = Grid::new(128, 1.0).unwrap();
        let v = vortex_field(VortexSpec::new(0.12, 0, LAMBDA).unwrap(), 0.0, grid).unwrap();
        let g = gaussian_field(0.12, f64::INFINITY, grid, LAMBDA).unwrap();
        assert!(v.relative_l2_distance(&g) < 1e-10);
    }

    #[test]
    fn sources_reject_oversized_beams() {
        let grid = Grid::new(128, 1.0).unwrap();
        assert!(gaussian_field(0.3, f64::INFINITY, grid, LAMBDA).is_err());
        assert!(gaussian_field(0.001, f64::INFINITY, grid, LAMBDA).is_err());
        assert!(VortexSpec::new(0.0, 1, LAMBDA).is_err());
    }
}
