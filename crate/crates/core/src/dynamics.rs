//! Time evolution of a [`StarState`].
//!
//! Two routes are provided: velocity Verlet for long runs on large lattices,
//! and an exact propagator built from the eigendecomposition of the
//! mass-weighted stiffness matrix, used as the reference on small systems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{accelerate_into, build_quadratic_form, dispersion, group_velocity, LatticeParams, StarState};

/// Largest system handed to the dense eigensolver.
pub const MAX_EXACT_DIM: usize = 5000;

/// Velocity Verlet for the star equations of motion. Keeps the acceleration
/// of the current state between steps, so a run of `n` steps costs `n + 1`
/// force evaluations.
#[derive(Debug, Clone)]
pub struct Verlet {
    params: LatticeParams,
    dt: f64,
    a_u: f64,
    a_phi: Vec<f64>,
}

impl Verlet {
    pub fn new(params: &LatticeParams, dt: f64) -> Result<Self> {
        let limit = 2.0 / params.omega_max();
        if !(dt.is_finite() && dt > 0.0 && dt < limit) {
            return Err(Error::UnstableStep { dt, limit });
        }
        Ok(Self {
            params: *params,
            dt,
            a_u: 0.0,
            a_phi: vec![0.0; params.n_rays() * params.ray_len()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` by `steps` steps in place.
    pub fn run(&mut self, state: &mut StarState, steps: usize) -> Result<()> {
        state.check_shape(&self.params)?;
        if steps == 0 {
            return Ok(());
        }
        let p = &self.params;
        let (dt, half) = (self.dt, 0.5 * self.dt);
        self.a_u = accelerate_into(p, state.u, state.phi_all(), &mut self.a_phi);
        for _ in 0..steps {
            state.u_dot += half * self.a_u;
            state.u += dt * state.u_dot;
            let (phi, phi_dot) = state.phi_and_dot_mut();
            for ((x, v), a) in phi.iter_mut().zip(phi_dot.iter_mut()).zip(&self.a_phi) {
                *v += half * a;
                *x += dt * *v;
            }
            self.a_u = accelerate_into(p, state.u, state.phi_all(), &mut self.a_phi);
            state.u_dot += half * self.a_u;
            let (_, phi_dot) = state.phi_and_dot_mut();
            for (v, a) in phi_dot.iter_mut().zip(&self.a_phi) {
                *v += half * a;
            }
        }
        Ok(())
    }
}

/// One velocity-Verlet step (half kick, drift, half kick).
pub fn step_verlet(state: &StarState, params: &LatticeParams, dt: f64) -> Result<StarState> {
    let mut next = state.clone();
    Verlet::new(params, dt)?.run(&mut next, 1)?;
    Ok(next)
}

/// Exact evolution of the linear system by normal-mode decomposition.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    params: LatticeParams,
    modes: DMatrix<f64>,
    omega: DVector<f64>,
}

impl ExactPropagator {
    pub fn new(params: &LatticeParams) -> Result<Self> {
        let dim = params.dim();
        if dim > MAX_EXACT_DIM {
            return Err(Error::TooLarge {
                dim,
                limit: MAX_EXACT_DIM,
            });
        }
        let eig = SymmetricEigen::new(build_quadratic_form(params));
        let omega = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        Ok(Self {
            params: *params,
            modes: eig.eigenvectors,
            omega,
        })
    }

    /// Normal frequencies, in the eigensolver's order.
    pub fn frequencies(&self) -> &DVector<f64> {
        &self.omega
    }

    /// Mode shapes as columns, in mass-weighted coordinates.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn evolve(&self, state: &StarState, t: f64) -> Result<StarState> {
        state.check_shape(&self.params)?;
        let sqrt_m = self.params.center_mass().sqrt();
        let mut y = DVector::from_vec(state.displacement_vector());
        let mut w = DVector::from_vec(state.velocity_vector());
        y[0] *= sqrt_m;
        w[0] *= sqrt_m;
        let c = self.modes.tr_mul(&y);
        let d = self.modes.tr_mul(&w);
        let mut ct = DVector::zeros(c.len());
        let mut dt = DVector::zeros(c.len());
        for i in 0..c.len() {
            let om = self.omega[i];
            let (s, co) = (om * t).sin_cos();
            // sin(ωt)/ω → t as ω → 0
            let sinc = if om * t.abs() < 1e-8 { t } else { s / om };
            ct[i] = co * c[i] + sinc * d[i];
            dt[i] = -om * s * c[i] + co * d[i];
        }
        let mut x = &self.modes * ct;
        let mut v = &self.modes * dt;
        x[0] /= sqrt_m;
        v[0] /= sqrt_m;
        StarState::from_vectors(&self.params, x.as_slice(), v.as_slice())
    }
}

/// Exact state at time `t`. Builds a fresh [`ExactPropagator`]; reuse one
/// when evolving the same model repeatedly.
pub fn evolve_exact(state: &StarState, params: &LatticeParams, t: f64) -> Result<StarState> {
    ExactPropagator::new(params)?.evolve(state, t)
}

/// Latest time at which a disturbance confined to the first `support_end`
/// sites of each ray has no visible effect at the outer boundary.
///
/// Lattice signals travel at most one lattice length per unit time; the
/// factor one half keeps the super-exponentially decaying precursor ahead of
/// the light cone below double-precision roundoff.
pub fn boundary_horizon(params: &LatticeParams, support_end: usize) -> f64 {
    0.5 * params.ray_len().saturating_sub(support_end) as f64 * params.delta()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    TowardJunction,
    AwayFromJunction,
}

/// Gaussian wave packet launched on one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    /// Ray index, `0..N`.
    pub ray: usize,
    /// Carrier wave number, `0 < k0 Δ < π`.
    pub k0: f64,
    /// Envelope center in site units (lattice site `n`, 1-based).
    pub center: f64,
    /// Envelope width in site units.
    pub width: f64,
    pub direction: Direction,
}

impl PacketSpec {
    pub fn validate(&self, params: &LatticeParams) -> Result<()> {
        if self.ray >= params.n_rays() {
            return Err(Error::PacketPlacement(format!(
                "ray {} does not exist ({} rays)",
                self.ray,
                params.n_rays()
            )));
        }
        let kd = self.k0 * params.delta();
        if !(kd > 0.0 && kd < std::f64::consts::PI) {
            return Err(Error::BandEdge { kd });
        }
        if self.width.is_nan() || self.width < 5.0 {
            return Err(Error::PacketPlacement(format!("width {} below 5 sites", self.width)));
        }
        let lo = self.center - 4.0 * self.width;
        let hi = self.center + 4.0 * self.width;
        if lo < 1.0 {
            return Err(Error::PacketPlacement(format!(
                "packet reaches the junction (center - 4 width = {lo})"
            )));
        }
        if hi > params.ray_len() as f64 {
            return Err(Error::PacketPlacement(format!(
                "packet reaches the outer boundary (center + 4 width = {hi} > {})",
                params.ray_len()
            )));
        }
        Ok(())
    }

    /// Frequency of the carrier.
    pub fn omega(&self, params: &LatticeParams) -> f64 {
        dispersion(self.k0, params)
    }

    /// Time for the packet front (`center + 4 width`) to travel to the
    /// outer boundary at the carrier group velocity.
    pub fn horizon(&self, params: &LatticeParams) -> f64 {
        let room = params.ray_len() as f64 - self.center - 4.0 * self.width;
        room.max(0.0) * params.delta() / group_velocity(self.k0, params)
    }
}

/// Gaussian-enveloped cosine on `spec.ray`, with site velocities taken from
/// the monochromatic wave at the carrier frequency. Everything else at rest.
pub fn init_packet(spec: &PacketSpec, params: &LatticeParams) -> Result<StarState> {
    build_packet(spec, params, spec.omega(params))
}

/// Packet matched to a Verlet run with step `dt`: site velocities use
/// `ω sqrt(1 - (ω dt)²/4)`, the velocity scale of a discrete-time Verlet
/// wave at the carrier, so the packet travels in one direction only.
pub fn init_packet_for_step(spec: &PacketSpec, params: &LatticeParams, dt: f64) -> Result<StarState> {
    let omega = spec.omega(params);
    let wdt = omega * dt;
    if !(wdt > 0.0 && wdt < 2.0) {
        return Err(Error::UnstableStep { dt, limit: 2.0 / omega });
    }
    build_packet(spec, params, omega * (1.0 - 0.25 * wdt * wdt).sqrt())
}

fn build_packet(spec: &PacketSpec, params: &LatticeParams, omega: f64) -> Result<StarState> {
    spec.validate(params)?;
    let sign = match spec.direction {
        Direction::TowardJunction => -1.0,
        Direction::AwayFromJunction => 1.0,
    };
    let kd = spec.k0 * params.delta();
    let mut state = StarState::zeros(params);
    let two_var = 2.0 * spec.width * spec.width;
    for i in 0..params.ray_len() {
        let x = (i + 1) as f64 - spec.center;
        let env = (-x * x / two_var).exp();
        let (s, c) = (kd * x).sin_cos();
        *state.phi_mut(spec.ray, i) = env * c;
        *state.phi_dot_mut(spec.ray, i) = sign * omega * env * s;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::energy;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(n: usize, l: usize, delta: f64, m: f64, big_m: f64) -> LatticeParams {
        LatticeParams::new(n, l, delta, m, big_m).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let p = params(3, 20, 1.0, 0.5, 1.3);
        let z = StarState::zeros(&p);
        assert_eq!(step_verlet(&z, &p, p.default_dt()).unwrap(), z);
        assert_eq!(evolve_exact(&z, &p, 3.7).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn unstable_step_rejected() {
        let p = params(3, 20, 1.0, 0.0, 1.0);
        let limit = 2.0 / p.omega_max();
        assert!(matches!(Verlet::new(&p, limit), Err(Error::UnstableStep { .. })));
        assert!(matches!(Verlet::new(&p, -0.1), Err(Error::UnstableStep { .. })));
        assert!(matches!(Verlet::new(&p, 0.0), Err(Error::UnstableStep { .. })));
        assert!(Verlet::new(&p, 0.99 * limit).is_ok());
    }

    #[test]
    fn exact_evolution_at_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = params(3, 15, 1.0, 0.4, 0.8);
        let s = StarState::random_compact(&p, 15, &mut rng);
        let e = evolve_exact(&s, &p, 0.0).unwrap();
        assert!(e.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn exact_evolution_of_an_eigenvector() {
        let p = params(3, 10, 1.0, 0.5, 1.7);
        let prop = ExactPropagator::new(&p).unwrap();
        let idx = 7;
        let omega = prop.frequencies()[idx];
        let mut x = prop.modes().column(idx).clone_owned();
        x[0] /= p.center_mass().sqrt();
        let v = vec![0.0; p.dim()];
        let s = StarState::from_vectors(&p, x.as_slice(), &v).unwrap();
        for &t in &[0.3, 2.0, 17.5] {
            let e = prop.evolve(&s, t).unwrap();
            let expected = s.scaled((omega * t).cos());
            let dx: f64 = e
                .displacement_vector()
                .iter()
                .zip(expected.displacement_vector())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dx < 1e-10, "t={t}: {dx}");
        }
    }

    #[test]
    fn verlet_frequency_error_is_second_order() {
        // Verlet rotates a mode with frequency ω̃, cos(ω̃ dt) = 1 - (ω dt)²/2.
        let p = params(2, 12, 1.0, 0.3, 1.0);
        let prop = ExactPropagator::new(&p).unwrap();
        let idx = p.dim() - 1;
        let omega = prop.frequencies()[idx];
        let mut x = prop.modes().column(idx).clone_owned();
        x[0] /= p.center_mass().sqrt();
        let s0 = StarState::from_vectors(&p, x.as_slice(), &vec![0.0; p.dim()]).unwrap();
        let mut errs = Vec::new();
        for &dt in &[0.1, 0.05] {
            let steps = (20.0 / dt) as usize;
            let mut s = s0.clone();
            Verlet::new(&p, dt).unwrap().run(&mut s, steps).unwrap();
            let t = steps as f64 * dt;
            let omega_tilde = (1.0 - 0.5 * (omega * dt).powi(2)).acos() / dt;
            assert!((omega_tilde - omega).abs() < 0.05 * omega.powi(3) * dt * dt);
            let predicted = s0.displacement_vector()[1] * (omega_tilde * t).cos();
            assert_relative_eq!(s.displacement_vector()[1], predicted, epsilon = 1e-9);
            let exact = prop.evolve(&s0, t).unwrap();
            errs.push(s.max_abs_diff(&exact));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.3, "observed order {order}");
    }

    #[test]
    fn verlet_agrees_with_exact_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = params(4, 40, 1.0, 0.8, 0.7);
        let s0 = StarState::random_compact(&p, 6, &mut rng);
        let prop = ExactPropagator::new(&p).unwrap();
        let t = 5.0;
        let mut errs = Vec::new();
        for &steps in &[500usize, 1000] {
            let mut s = s0.clone();
            Verlet::new(&p, t / steps as f64).unwrap().run(&mut s, steps).unwrap();
            errs.push(s.max_abs_diff(&prop.evolve(&s0, t).unwrap()));
        }
        assert!(errs[1] < 1e-3);
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.5, "{errs:?}");
    }

    #[test]
    fn verlet_is_time_reversible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = params(3, 50, 1.0, 1.0, 2.0);
        let s0 = StarState::random_compact(&p, 10, &mut rng);
        let mut s = s0.clone();
        let mut v = Verlet::new(&p, p.default_dt()).unwrap();
        v.run(&mut s, 2000).unwrap();
        s.reverse_velocities();
        v.run(&mut s, 2000).unwrap();
        s.reverse_velocities();
        assert!(s.max_abs_diff(&s0) < 1e-9);
    }

    #[test]
    fn exact_evolution_is_linear_and_conserves_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = params(3, 30, 1.0, 0.6, 1.4);
        let prop = ExactPropagator::new(&p).unwrap();
        let a = StarState::random_compact(&p, 8, &mut rng);
        let b = StarState::random_compact(&p, 8, &mut rng);
        let mut comb = a.scaled(0.7);
        comb.axpy(-1.9, &b);
        let t = 123.4;
        let mut expected = prop.evolve(&a, t).unwrap().scaled(0.7);
        expected.axpy(-1.9, &prop.evolve(&b, t).unwrap());
        assert!(prop.evolve(&comb, t).unwrap().max_abs_diff(&expected) < 1e-10);

        let e0 = energy(&a, &p).unwrap();
        for &t in &[1.0, 50.0, 1e4] {
            let e = energy(&prop.evolve(&a, t).unwrap(), &p).unwrap();
            assert!((e - e0).abs() < 1e-10 * e0);
        }
    }

    #[test]
    fn too_large_for_exact_path() {
        let p = params(3, 2000, 1.0, 0.0, 1.0);
        assert!(matches!(ExactPropagator::new(&p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn packet_validation() {
        let p = params(3, 400, 1.0, 0.0, 1.0);
        let good = PacketSpec {
            ray: 0,
            k0: PI / 2.0,
            center: 200.0,
            width: 20.0,
            direction: Direction::TowardJunction,
        };
        assert!(init_packet(&good, &p).is_ok());
        let cases = [
            PacketSpec { center: 60.0, ..good },
            PacketSpec { center: 350.0, ..good },
            PacketSpec { width: 4.0, ..good },
            PacketSpec { ray: 3, ..good },
        ];
        for c in cases {
            assert!(matches!(init_packet(&c, &p), Err(Error::PacketPlacement(_))));
        }
        assert!(matches!(
            init_packet(&PacketSpec { k0: PI, ..good }, &p),
            Err(Error::BandEdge { .. })
        ));
    }

    #[test]
    fn wide_packet_is_a_plane_wave() {
        let p = params(2, 4000, 1.0, 0.5, 1.0);
        let spec = PacketSpec {
            ray: 1,
            k0: 0.9,
            center: 2000.0,
            width: 490.0,
            direction: Direction::AwayFromJunction,
        };
        let s = init_packet(&spec, &p).unwrap();
        let omega = dispersion(0.9, &p);
        for i in 1990..2010 {
            let x = (i + 1) as f64 - 2000.0;
            assert!((s.phi(1, i) - (0.9 * x).cos()).abs() < 1e-3);
            assert!((s.phi_dot(1, i) - omega * (0.9 * x).sin()).abs() < 1e-3);
        }
        assert_eq!(s.ray(0).iter().map(|x| x.abs()).sum::<f64>(), 0.0);
        assert_eq!(s.u, 0.0);
    }

    #[test]
    fn packet_energy_independent_of_direction() {
        let p = params(3, 600, 1.0, 0.3, 1.0);
        let toward = PacketSpec {
            ray: 2,
            k0: 1.2,
            center: 300.0,
            width: 40.0,
            direction: Direction::TowardJunction,
        };
        let away = PacketSpec {
            direction: Direction::AwayFromJunction,
            ..toward
        };
        let e1 = energy(&init_packet(&toward, &p).unwrap(), &p).unwrap();
        let e2 = energy(&init_packet(&away, &p).unwrap(), &p).unwrap();
        assert!(e1 > 0.0);
        assert!((e1 - e2).abs() < 1e-12 * e1);
    }

    fn centroid(state: &StarState, ray: usize, omega: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..state.ray_len() {
            let w = state.phi(ray, i).powi(2) + (state.phi_dot(ray, i) / omega).powi(2);
            num += w * (i + 1) as f64;
            den += w;
        }
        num / den
    }

    #[test]
    fn packet_moves_at_group_velocity() {
        for &(k0, m, delta) in &[(PI / 2.0, 0.0, 1.0), (0.8, 0.5, 1.0), (1.0, 0.2, 0.5)] {
            let p = params(3, 1500, delta, m, 1.0);
            let spec = PacketSpec {
                ray: 0,
                k0: k0 / delta,
                center: 300.0,
                width: 40.0,
                direction: Direction::AwayFromJunction,
            };
            let mut s = init_packet(&spec, &p).unwrap();
            let omega = spec.omega(&p);
            let c0 = centroid(&s, 0, omega);
            let mut v = Verlet::new(&p, p.default_dt()).unwrap();
            let steps = 4000;
            v.run(&mut s, steps).unwrap();
            let t = steps as f64 * v.dt();
            let measured = (centroid(&s, 0, omega) - c0) * delta / t;
            let vg = group_velocity(spec.k0, &p);
            assert!((measured - vg).abs() < 0.01 * vg, "{measured} vs {vg}");
        }
    }

    #[test]
    fn verlet_energy_of_a_matched_packet() {
        let p = params(3, 1600, 1.0, 0.0, 1.0);
        let spec = PacketSpec {
            ray: 0,
            k0: PI / 2.0,
            center: 400.0,
            width: 40.0,
            direction: Direction::AwayFromJunction,
        };
        let dt = p.default_dt();
        let mut s = init_packet_for_step(&spec, &p, dt).unwrap();
        let e0 = energy(&s, &p).unwrap();
        let mut v = Verlet::new(&p, dt).unwrap();
        let mut excursion: f64 = 0.0;
        for _ in 0..100 {
            v.run(&mut s, 100).unwrap();
            excursion = excursion.max((energy(&s, &p).unwrap() - e0).abs() / e0);
        }
        let drift = (energy(&s, &p).unwrap() - e0).abs() / e0;
        assert!(drift < 1e-6, "{drift}");
        assert!(excursion < 1e-5, "{excursion}");
    }
}
