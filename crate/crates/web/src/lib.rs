//! Browser bindings for the star-lattice demo page.
//!
//! Every export has a plain Rust counterpart returning `Result<_, String>`
//! so the logic can be tested off the browser.

use std::f64::consts::PI;

use starwave::dynamics::{init_packet_for_step, Direction, PacketSpec, Verlet};
use starwave::lattice::{dispersion, energy, LatticeParams, StarState};
use starwave::scattering::reflection_exact;
use wasm_bindgen::prelude::*;

fn params(n_rays: usize, ray_len: usize, mass: f64, center_mass: f64) -> Result<LatticeParams, String> {
    LatticeParams::new(n_rays, ray_len, 1.0, mass, center_mass).map_err(|e| e.to_string())
}

/// `points` interior wave numbers in `(0, π)`.
fn k_points(points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| (i as f64 + 0.5) * PI / points as f64)
}

/// Interleaved `[k, |R|², |T|²]` triples for a unit-spacing star.
pub fn reflection_curve(n_rays: usize, center_mass: f64, mass: f64, points: usize) -> Result<Vec<f64>, String> {
    let p = params(n_rays, 2, mass, center_mass)?;
    let mut out = Vec::with_capacity(3 * points);
    for k in k_points(points) {
        let r = reflection_exact(k, &p).map_err(|e| e.to_string())?;
        out.extend([k, r.r.norm_sqr(), r.transmission().norm_sqr()]);
    }
    Ok(out)
}

/// Interleaved `[k, ω]` pairs.
pub fn dispersion_curve(mass: f64, points: usize) -> Result<Vec<f64>, String> {
    let p = params(2, 2, mass, 1.0)?;
    Ok(k_points(points).flat_map(|k| [k, dispersion(k, &p)]).collect())
}

#[wasm_bindgen(js_name = reflectionCurve)]
pub fn reflection_curve_js(n_rays: usize, center_mass: f64, mass: f64, points: usize) -> Result<Vec<f64>, JsError> {
    reflection_curve(n_rays, center_mass, mass, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dispersionCurve)]
pub fn dispersion_curve_js(mass: f64, points: usize) -> Result<Vec<f64>, JsError> {
    dispersion_curve(mass, points).map_err(|e| JsError::new(&e))
}

/// Gaussian packet sent down ray 0 toward the junction and advanced with
/// velocity Verlet.
#[wasm_bindgen]
pub struct PacketSim {
    params: LatticeParams,
    state: StarState,
    verlet: Verlet,
    time: f64,
    initial_energy: f64,
}

impl PacketSim {
    pub fn try_new(n_rays: usize, ray_len: usize, center_mass: f64, k0: f64, width: f64) -> Result<Self, String> {
        let params = params(n_rays, ray_len, 0.0, center_mass)?;
        let spec = PacketSpec {
            ray: 0,
            k0,
            center: ray_len as f64 / 2.0,
            width,
            direction: Direction::TowardJunction,
        };
        let dt = params.default_dt();
        let fail = |e: starwave::Error| e.to_string();
        let state = init_packet_for_step(&spec, &params, dt).map_err(fail)?;
        let verlet = Verlet::new(&params, dt).map_err(fail)?;
        let initial_energy = energy(&state, &params).map_err(fail)?;
        Ok(Self {
            params,
            state,
            verlet,
            time: 0.0,
            initial_energy,
        })
    }
}

#[wasm_bindgen]
impl PacketSim {
    #[wasm_bindgen(constructor)]
    pub fn new(n_rays: usize, ray_len: usize, center_mass: f64, k0: f64, width: f64) -> Result<PacketSim, JsError> {
        Self::try_new(n_rays, ray_len, center_mass, k0, width).map_err(|e| JsError::new(&e))
    }

    /// Advances `steps` time steps.
    pub fn advance(&mut self, steps: usize) {
        // the step was validated at construction
        self.verlet.run(&mut self.state, steps).expect("stable step");
        self.time += steps as f64 * self.verlet.dt();
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    #[wasm_bindgen(js_name = nRays)]
    pub fn n_rays(&self) -> usize {
        self.params.n_rays()
    }

    /// Displacements along ray `j`, junction first.
    pub fn ray(&self, j: usize) -> Vec<f64> {
        self.state.ray(j).to_vec()
    }

    pub fn center(&self) -> f64 {
        self.state.u
    }

    /// Fraction of the initial energy found on ray `j`, center excluded.
    #[wasm_bindgen(js_name = rayEnergy)]
    pub fn ray_energy(&self, j: usize) -> f64 {
        let x = self.state.ray(j);
        let v = self.state.ray_dot(j);
        let kinetic: f64 = v.iter().map(|v| v * v).sum();
        let strain: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        0.5 * (kinetic + strain) / self.initial_energy
    }

    /// Relative change of the total energy since construction.
    #[wasm_bindgen(js_name = energyDrift)]
    pub fn energy_drift(&self) -> f64 {
        let e = energy(&self.state, &self.params).unwrap_or(f64::NAN);
        (e - self.initial_energy) / self.initial_energy
    }
}
