//! Normal-mode coordinates of the star.
//!
//! Wave numbers here are dimensionless, `k = (physical k)·Δ ∈ (0, π)`, and
//! the field mass enters through `mΔ`; with `Δ = 1` both reduce to the
//! plain lattice quantities. For every ray `j`
//!
//! ```text
//! φ_c(k) = Σ_n φ_n cos kn,   φ_s(k) = Σ_n φ_n sin kn,
//! ξ_0(k) = Σ_j φ_c^{(j)}(k) + M u,
//! ξ_j(k) = sin k · ξ_0(k) + C(k) φ_s^{(j)}(k),
//! C(k)   = (N - 2M)(1 - cos k) + (1 - M)(mΔ)²,
//! ```
//!
//! and each `ξ_j` oscillates freely at `ω_k`, while `ξ_0` is driven by the
//! center: `ξ̈_0 = -ω² ξ_0 - C(k) u / Δ²`. When `M = 1` the common factor
//! `2 sin(k/2)` is divided out of `ξ_j`.

use num_complex::Complex64;

use crate::dynamics::{boundary_horizon, ExactPropagator};
use crate::error::{Error, Result};
use crate::lattice::{acceleration, LatticeParams, StarState};

/// Cosine and sine sums of each ray at one wave number.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySpectra {
    pub k: f64,
    pub phi_c: Vec<f64>,
    pub phi_s: Vec<f64>,
}

impl RaySpectra {
    /// `φ^{(j)}(k) = Σ_n e^{ikn} φ_n^{(j)}`
    pub fn complex(&self, ray: usize) -> Complex64 {
        Complex64::new(self.phi_c[ray], self.phi_s[ray])
    }
}

/// Mode amplitudes at one wave number, from displacements and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub k: f64,
    pub xi0: f64,
    pub xi: Vec<f64>,
    pub coeff_c: f64,
    pub xi0_dot: f64,
    pub xi_dot: Vec<f64>,
    /// True when `ξ_j` is the `M = 1` form with `2 sin(k/2)` divided out.
    pub reduced: bool,
}

fn sums(rays: impl Iterator<Item = impl AsRef<[f64]>>, k: f64) -> RaySpectra {
    let (mut phi_c, mut phi_s) = (Vec::new(), Vec::new());
    for ray in rays {
        let (mut c, mut s) = (0.0, 0.0);
        for (i, &x) in ray.as_ref().iter().enumerate() {
            let (sn, cn) = (k * (i + 1) as f64).sin_cos();
            c += x * cn;
            s += x * sn;
        }
        phi_c.push(c);
        phi_s.push(s);
    }
    RaySpectra { k, phi_c, phi_s }
}

/// Finite cosine and sine sums of the ray displacements.
pub fn ray_spectra(state: &StarState, k: f64) -> RaySpectra {
    sums((0..state.n_rays()).map(|j| state.ray(j)), k)
}

/// `C(k) = (N - 2M)(1 - cos k) + (1 - M)(mΔ)²`
pub fn coupling_coefficient(k: f64, params: &LatticeParams) -> f64 {
    let n = params.n_rays() as f64;
    let big_m = params.center_mass();
    let md = params.mass() * params.delta();
    (n - 2.0 * big_m) * (1.0 - k.cos()) + (1.0 - big_m) * md * md
}

/// `(ξ_0, ξ_j)` of a configuration given by its center value and ray
/// sums. `reduced` selects the `M = 1` normalisation.
fn mode_map(center: f64, spec: &RaySpectra, params: &LatticeParams, reduced: bool) -> (f64, Vec<f64>) {
    let k = spec.k;
    let xi0 = spec.phi_c.iter().sum::<f64>() + params.center_mass() * center;
    let xi = if reduced {
        let (s, c) = (0.5 * k).sin_cos();
        let n2 = params.n_rays() as f64 - 2.0;
        spec.phi_s.iter().map(|ps| c * xi0 + n2 * s * ps).collect()
    } else {
        let cc = coupling_coefficient(k, params);
        let sk = k.sin();
        spec.phi_s.iter().map(|ps| sk * xi0 + cc * ps).collect()
    };
    (xi0, xi)
}

fn transform(state: &StarState, k: f64, params: &LatticeParams, reduced: bool) -> ModeSpectrum {
    let disp = ray_spectra(state, k);
    let vel = sums((0..state.n_rays()).map(|j| state.ray_dot(j)), k);
    let (xi0, xi) = mode_map(state.u, &disp, params, reduced);
    let (xi0_dot, xi_dot) = mode_map(state.u_dot, &vel, params, reduced);
    ModeSpectrum {
        k,
        xi0,
        xi,
        coeff_c: coupling_coefficient(k, params),
        xi0_dot,
        xi_dot,
        reduced,
    }
}

/// Normal-mode amplitudes of `state` at wave number `k`. Uses the reduced
/// form exactly when `M = 1`.
pub fn xi_transform(state: &StarState, k: f64, params: &LatticeParams) -> Result<ModeSpectrum> {
    state.check_shape(params)?;
    Ok(transform(state, k, params, params.center_mass() == 1.0))
}

/// Mode amplitudes in the unreduced form for any `M`.
pub fn xi_transform_general(state: &StarState, k: f64, params: &LatticeParams) -> Result<ModeSpectrum> {
    state.check_shape(params)?;
    Ok(transform(state, k, params, false))
}

/// Largest deviations found by [`verify_decoupling`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DecouplingReport {
    /// `ξ_j(t)` against `ξ_j(0) cos ωt + ξ̇_j(0) sin(ωt)/ω`.
    pub xi: f64,
    /// `ξ̈_0 + ω² ξ_0 + C u / Δ²`.
    pub xi0_driven: f64,
    /// `φ̈(k) + ω² φ(k) - (u e^{ik} - φ_1) / Δ²` per ray.
    pub complex_ray: f64,
}

impl DecouplingReport {
    pub fn max(&self) -> f64 {
        self.xi.max(self.xi0_driven).max(self.complex_ray)
    }
}

/// Evolves `state` exactly and checks, at each requested time and wave
/// number, that the `ξ_j` oscillate harmonically and that `ξ_0` and the
/// complex ray sums obey their driven equations.
pub fn verify_decoupling(
    state: &StarState,
    params: &LatticeParams,
    ks: &[f64],
    times: &[f64],
) -> Result<DecouplingReport> {
    let prop = ExactPropagator::new(params)?;
    verify_decoupling_with(&prop, state, params, ks, times)
}

/// [`verify_decoupling`] with a prebuilt propagator for `params`.
pub fn verify_decoupling_with(
    prop: &ExactPropagator,
    state: &StarState,
    params: &LatticeParams,
    ks: &[f64],
    times: &[f64],
) -> Result<DecouplingReport> {
    state.check_shape(params)?;
    let horizon = boundary_horizon(params, state.support_end());
    if let Some(&t) = times.iter().find(|t| t.abs() > horizon) {
        return Err(Error::HorizonViolated { t, horizon });
    }
    let inv = 1.0 / params.delta().powi(2);
    let initial: Vec<ModeSpectrum> = ks
        .iter()
        .map(|&k| xi_transform(state, k, params))
        .collect::<Result<_>>()?;
    let mut report = DecouplingReport::default();
    for &t in times {
        let s = prop.evolve(state, t)?;
        let acc = acceleration(&s, params)?;
        for (k_idx, &k) in ks.iter().enumerate() {
            // dimensionless k → physical frequency
            let omega = crate::lattice::dispersion(k / params.delta(), params);
            let now = xi_transform(&s, k, params)?;
            let start = &initial[k_idx];
            let (sn, cs) = (omega * t).sin_cos();
            for j in 0..now.xi.len() {
                let predicted = start.xi[j] * cs + start.xi_dot[j] * sn / omega;
                report.xi = report.xi.max((now.xi[j] - predicted).abs());
            }

            let acc_spec = sums((0..params.n_rays()).map(|j| acc.ray(j)), k);
            let (xi0_ddot, _) = mode_map(acc.a_u, &acc_spec, params, now.reduced);
            let driven = xi0_ddot + omega * omega * now.xi0 + now.coeff_c * inv * s.u;
            report.xi0_driven = report.xi0_driven.max(driven.abs());

            let disp = ray_spectra(&s, k);
            let e = Complex64::from_polar(1.0, k);
            for j in 0..params.n_rays() {
                let lhs = acc_spec.complex(j);
                let rhs = -omega * omega * disp.complex(j) + inv * (s.u * e - s.phi(j, 0));
                report.complex_ray = report.complex_ray.max((lhs - rhs).norm());
            }
        }
    }
    Ok(report)
}
