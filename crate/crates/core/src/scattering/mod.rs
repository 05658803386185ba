//! Scattering of a monochromatic wave on the junction.
//!
//! A wave `e^{-ikΔn}` comes in on one ray; it leaves as `R e^{ikΔn}` on the
//! same ray and as `(R + 1) e^{ikΔn}` on each of the other `N - 1` rays.
//! The junction equation of motion fixes `R`, which always has the form
//!
//! ```text
//! R = e^{iθ} / N - (N - 1) / N,    |e^{iθ}| = 1,
//! ```
//!
//! so that `|R|² + (N - 1)|R + 1|² = 1` for every real `k`, `M` and `m`.

mod measure;

pub use measure::{measure_reflection, measure_reflection_traced, Measurement, TracePoint};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{dispersion, LatticeParams};

/// Reflection amplitude at one wave number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub k: f64,
    pub r: Complex64,
    /// `e^{iθ(k)}`
    pub phase: Complex64,
}

impl Reflection {
    /// Assembles `R = phase / N - (N - 1) / N`.
    pub fn from_phase(k: f64, phase: Complex64, n_rays: usize) -> Self {
        let n = n_rays as f64;
        Self {
            k,
            r: phase / n - (n - 1.0) / n,
            phase,
        }
    }

    /// Amplitude on each of the other rays, `R + 1`.
    pub fn transmission(&self) -> Complex64 {
        self.r + 1.0
    }

    pub fn theta(&self) -> f64 {
        self.phase.arg()
    }

    /// `|R|² + (N - 1)|R + 1|² - 1`
    pub fn unitarity_residual(&self, n_rays: usize) -> f64 {
        self.r.norm_sqr() + (n_rays as f64 - 1.0) * self.transmission().norm_sqr() - 1.0
    }
}

fn check_band(k: f64, delta: f64) -> Result<()> {
    let kd = k * delta;
    if kd > 0.0 && kd < std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::BandEdge { kd })
    }
}

/// Exact reflection for arbitrary `N`, `M`, `m` and `Δ`.
///
/// With `s = sin(kΔ/2)`, `c = cos(kΔ/2)`:
///
/// ```text
/// a = (2N - 4M) s² + (1 - M) m² Δ²,   b = 2N s c,
/// e^{iθ} = -(a + i b) / (a - i b).
/// ```
pub fn reflection_exact(k: f64, params: &LatticeParams) -> Result<Reflection> {
    let delta = params.delta();
    check_band(k, delta)?;
    let (s, c) = (0.5 * k * delta).sin_cos();
    let n = params.n_rays() as f64;
    let big_m = params.center_mass();
    let md = params.mass() * delta;
    let a = (2.0 * n - 4.0 * big_m) * s * s + (1.0 - big_m) * md * md;
    let b = 2.0 * n * s * c;
    let phase = -Complex64::new(a, b) / Complex64::new(a, -b);
    Ok(Reflection::from_phase(k, phase, params.n_rays()))
}

/// Three-ray closed form that ignores the field mass:
///
/// ```text
/// e^{iθ} = -((2M - 3) s - 3i c) / ((2M - 3) s + 3i c).
/// ```
///
/// Coincides with [`reflection_exact`] when `m = 0` or `M = 1`.
pub fn reflection_closed_n3(k: f64, center_mass: f64, delta: f64) -> Result<Reflection> {
    check_band(k, delta)?;
    let phase = phase_n3(k, Complex64::new(center_mass, 0.0), delta);
    Ok(Reflection::from_phase(k, phase, 3))
}

/// The three-ray phase evaluated for a complex center mass.
pub fn phase_n3(k: f64, center_mass: Complex64, delta: f64) -> Complex64 {
    let (s, c) = (0.5 * k * delta).sin_cos();
    let a = (2.0 * center_mass - 3.0) * s;
    let b = Complex64::new(0.0, 3.0 * c);
    -(a - b) / (a + b)
}

/// Maximum modulus of the residuals left when the scattering ansatz with the
/// given `R` is substituted into the junction and first-site equations of
/// motion, in units of `1/Δ²`.
pub fn junction_residual(refl: &Reflection, params: &LatticeParams) -> f64 {
    let delta = params.delta();
    let inv = 1.0 / (delta * delta);
    let omega2 = dispersion(refl.k, params).powi(2);
    let m2 = params.mass().powi(2);
    let q = refl.k * delta;
    let e = Complex64::from_polar(1.0, q);
    let t = refl.transmission();
    let u = t;
    // incident ray: e^{-iqn} + R e^{iqn}, others: T e^{iqn}
    let site = |n: i32, incident: bool| -> Complex64 {
        let out = e.powi(n);
        if incident {
            out.inv() + refl.r * out
        } else {
            t * out
        }
    };
    let n_rays = params.n_rays() as f64;
    let pull = (site(1, true) - u) + (n_rays - 1.0) * (site(1, false) - u);
    let center = -params.center_mass() * omega2 * u - (inv * pull - m2 * u);
    let mut worst = center.norm();
    for incident in [true, false] {
        let (x1, x2) = (site(1, incident), site(2, incident));
        let res = -omega2 * x1 - (inv * (x2 + u - 2.0 * x1) - m2 * x1);
        worst = worst.max(res.norm());
    }
    worst / inv
}

/// Parameter `k1` of the point-scatterer limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumParams {
    k1: Complex64,
}

impl ContinuumParams {
    pub fn new(k1: Complex64) -> Result<Self> {
        if k1 == Complex64::new(0.0, 0.0) || !k1.is_finite() {
            return Err(Error::invalid("k1", "must be finite and nonzero"));
        }
        Ok(Self { k1 })
    }

    pub fn k1(&self) -> Complex64 {
        self.k1
    }

    /// Center mass `3i / (k1 Δ)` that realises this limit at spacing `Δ`.
    pub fn center_mass_at(&self, delta: f64) -> Complex64 {
        Complex64::new(0.0, 3.0) / (self.k1 * delta)
    }
}

/// Continuum phase `e^{iθ} = -(k - k1) / (k + k1)`.
pub fn theta_continuum(k: f64, c: &ContinuumParams) -> Result<Complex64> {
    let den = k + c.k1;
    if den.norm() == 0.0 {
        return Err(Error::Pole);
    }
    Ok(-(k - c.k1) / den)
}

/// Three-ray reflection assembled from the continuum phase.
pub fn reflection_continuum(k: f64, c: &ContinuumParams) -> Result<Reflection> {
    Ok(Reflection::from_phase(k, theta_continuum(k, c)?, 3))
}

/// `|e^{iθ}_lattice - e^{iθ}_continuum|` for each spacing, with the center
/// mass scaled as `M(Δ) = 3i / (k1 Δ)`.
pub fn continuum_limit_check(k: f64, c: &ContinuumParams, deltas: &[f64]) -> Vec<f64> {
    let target = theta_continuum(k, c).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    deltas
        .iter()
        .map(|&d| (phase_n3(k, c.center_mass_at(d), d) - target).norm())
        .collect()
}

/// Least-squares slope of `ln(error)` against `ln(Δ)`.
pub fn convergence_order(deltas: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = deltas.iter().zip(errors).map(|(d, e)| (d.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
