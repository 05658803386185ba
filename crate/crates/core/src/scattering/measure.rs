//! Time-domain measurement of the junction reflection.
//!
//! A Gaussian packet on one ray is run into the junction with the Verlet
//! integrator. Before and after the collision the positive-frequency part of
//! each ray, `ψ_n = φ_n + i φ̇_n / ω_v`, is Fourier analysed at the carrier:
//! the incoming amplitude is the `e^{-ik0Δn}` component at `t = 0`, the
//! outgoing ones are the `e^{+ik0Δn}` components at the final time. Here
//! `ω_v = ω sqrt(1 - (ω dt)²/4)` is the velocity scale of a Verlet
//! trajectory at frequency `ω`, and the outgoing amplitudes are referred back
//! to `t = 0` with the Verlet phase advance `cos(ω̃ dt) = 1 - (ω dt)²/2`.
//! The packet itself is launched with the same velocity scale so that it
//! carries no counter-propagating remnant.

use num_complex::Complex64;

use super::{reflection_exact, Reflection};
use crate::dynamics::{init_packet_for_step, Direction, PacketSpec, Verlet};
use crate::error::{Error, Result};
use crate::lattice::{energy, group_velocity, LatticeParams, StarState};

/// Incoming carrier amplitudes below this are treated as no signal.
const NOISE_FLOOR: f64 = 1e-8;

/// Outcome of one scattering run.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub k0: f64,
    /// Measured reflection amplitude.
    pub r: Complex64,
    /// Measured amplitude on each non-incident ray, in ray order.
    pub transmitted: Vec<Complex64>,
    pub analytic: Reflection,
    /// Largest site-wise difference between non-incident rays at the end.
    pub ray_asymmetry: f64,
    /// `|E(T) - E(0)| / E(0)` between the launched and the scattered state.
    pub energy_drift: f64,
    /// Largest `|E(t) - E(0)| / E(0)` over the sampled times, including the
    /// collision, where the Verlet energy oscillates at order `(ω dt)²`.
    pub energy_excursion: f64,
    pub final_time: f64,
    pub steps: usize,
}

impl Measurement {
    pub fn r_abs(&self) -> f64 {
        self.r.norm()
    }

    pub fn r_arg(&self) -> f64 {
        self.r.arg()
    }

    /// Mean modulus of the transmitted amplitudes.
    pub fn t_abs(&self) -> f64 {
        let n = self.transmitted.len() as f64;
        self.transmitted.iter().map(|t| t.norm()).sum::<f64>() / n
    }

    /// Relative error of `|R|` against the exact analytic value. Falls back
    /// to the absolute error when the analytic reflection vanishes.
    pub fn r_rel_err(&self) -> f64 {
        let exact = self.analytic.r.norm();
        let diff = (self.r_abs() - exact).abs();
        if exact > 1e-12 {
            diff / exact
        } else {
            diff
        }
    }
}

/// Sample of a traced run.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub energy: f64,
    /// Energy-weighted centroid of every ray, in site units (NaN on a ray at
    /// rest).
    pub centroids: Vec<f64>,
}

/// Runs a packet into the junction and measures `(R, T)` at its carrier.
pub fn measure_reflection(spec: &PacketSpec, params: &LatticeParams) -> Result<Measurement> {
    measure_reflection_traced(spec, params, 0).map(|(m, _)| m)
}

/// As [`measure_reflection`], additionally recording energy and ray
/// centroids every `trace_every` steps (never when 0).
pub fn measure_reflection_traced(
    spec: &PacketSpec,
    params: &LatticeParams,
    trace_every: usize,
) -> Result<(Measurement, Vec<TracePoint>)> {
    if spec.direction != Direction::TowardJunction {
        return Err(Error::PacketPlacement(
            "measurement needs a packet moving toward the junction".into(),
        ));
    }
    spec.validate(params)?;
    let analytic = reflection_exact(spec.k0, params)?;
    let omega = spec.omega(params);
    let vg = group_velocity(spec.k0, params);
    let delta = params.delta();

    // The packet has fully left the junction once its trailing edge has
    // passed it by a wide margin.
    let final_time = (spec.center + 10.0 * spec.width) * delta / vg;
    let horizon = spec.horizon(params);
    if final_time > horizon {
        return Err(Error::HorizonViolated { t: final_time, horizon });
    }
    let outgoing_front = 14.0 * spec.width;
    if outgoing_front > params.ray_len() as f64 {
        return Err(Error::HorizonViolated {
            t: final_time,
            horizon: params.ray_len() as f64 * delta / vg,
        });
    }

    let dt0 = params.default_dt();
    let steps = (final_time / dt0).ceil() as usize;
    let dt = final_time / steps as f64;
    let mut verlet = Verlet::new(params, dt)?;
    let mut state = init_packet_for_step(spec, params, dt)?;

    let wdt = omega * dt;
    let omega_v = omega * (1.0 - 0.25 * wdt * wdt).sqrt();
    let omega_tilde = (1.0 - 0.5 * wdt * wdt).acos() / dt;
    let kd = spec.k0 * delta;

    let incoming = carrier_amplitude(&state, spec.ray, -kd, omega_v);
    if incoming.norm() < NOISE_FLOOR {
        return Err(Error::NoiseFloor {
            amplitude: incoming.norm(),
            floor: NOISE_FLOOR,
        });
    }

    let e0 = energy(&state, params)?;
    let mut excursion: f64 = 0.0;
    let mut trace = Vec::new();
    let chunk = if trace_every > 0 { trace_every } else { 1000 };
    let mut done = 0;
    if trace_every > 0 {
        trace.push(trace_point(&state, params, 0.0, omega)?);
    }
    while done < steps {
        let n = chunk.min(steps - done);
        verlet.run(&mut state, n)?;
        done += n;
        let e = energy(&state, params)?;
        excursion = excursion.max((e - e0).abs() / e0);
        if trace_every > 0 {
            trace.push(trace_point(&state, params, done as f64 * dt, omega)?);
        }
    }
    if !state.is_finite() {
        return Err(Error::HorizonViolated { t: final_time, horizon });
    }

    let drift = (energy(&state, params)? - e0).abs() / e0;
    let back = Complex64::from_polar(1.0, omega_tilde * final_time);
    let r = carrier_amplitude(&state, spec.ray, kd, omega_v) * back / incoming;
    let others: Vec<usize> = (0..params.n_rays()).filter(|&j| j != spec.ray).collect();
    let transmitted = others
        .iter()
        .map(|&j| carrier_amplitude(&state, j, kd, omega_v) * back / incoming)
        .collect();
    let mut asym: f64 = 0.0;
    for w in others.windows(2) {
        for i in 0..params.ray_len() {
            asym = asym
                .max((state.phi(w[0], i) - state.phi(w[1], i)).abs())
                .max((state.phi_dot(w[0], i) - state.phi_dot(w[1], i)).abs());
        }
    }

    Ok((
        Measurement {
            k0: spec.k0,
            r,
            transmitted,
            analytic,
            ray_asymmetry: asym,
            energy_drift: drift,
            energy_excursion: excursion,
            final_time,
            steps,
        },
        trace,
    ))
}

/// `Σ_n (φ_n + i φ̇_n / ω_v) e^{-i q n}` over one ray, `n = 1..L`.
fn carrier_amplitude(state: &StarState, ray: usize, q: f64, omega_v: f64) -> Complex64 {
    let (x, v) = (state.ray(ray), state.ray_dot(ray));
    x.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (&x, &v))| {
            let psi = Complex64::new(x, v / omega_v);
            psi * Complex64::from_polar(1.0, -q * (i + 1) as f64)
        })
        .sum()
}

fn trace_point(state: &StarState, params: &LatticeParams, t: f64, omega: f64) -> Result<TracePoint> {
    let centroids = (0..params.n_rays())
        .map(|j| {
            let (x, v) = (state.ray(j), state.ray_dot(j));
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..x.len() {
                let w = x[i] * x[i] + (v[i] / omega).powi(2);
                num += w * (i + 1) as f64;
                den += w;
            }
            if den > 0.0 {
                num / den
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(TracePoint {
        t,
        energy: energy(state, params)?,
        centroids,
    })
}
