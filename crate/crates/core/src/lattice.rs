//! The star lattice: N harmonic chains ("rays") of L sites each, whose first
//! sites are all coupled to one central oscillator `u` of mass `M`.
//!
//! Rays are indexed `0..N` and sites `0..L` in code; site index `i`
//! corresponds to lattice site `n = i + 1`, and the center plays the role of
//! site `n = 0` of every ray. Each ray is closed at its far end by a fixed
//! ghost site `n = L + 1` with zero displacement.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Static model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    n_rays: usize,
    ray_len: usize,
    delta: f64,
    mass: f64,
    center_mass: f64,
}

impl LatticeParams {
    /// Validates and builds the model. `delta` is the lattice constant,
    /// `mass` the field mass (inverse length) and `center_mass` the
    /// dimensionless mass of the central oscillator.
    pub fn new(n_rays: usize, ray_len: usize, delta: f64, mass: f64, center_mass: f64) -> Result<Self> {
        if n_rays < 2 {
            return Err(Error::invalid("n_rays", format!("{n_rays} < 2")));
        }
        if ray_len < 2 {
            return Err(Error::invalid("ray_len", format!("{ray_len} < 2")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta", format!("{delta} is not > 0")));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::invalid("mass", format!("{mass} is not >= 0")));
        }
        if !(center_mass.is_finite() && center_mass > 0.0) {
            return Err(Error::invalid("center_mass", format!("{center_mass} is not > 0")));
        }
        Ok(Self {
            n_rays,
            ray_len,
            delta,
            mass,
            center_mass,
        })
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn ray_len(&self) -> usize {
        self.ray_len
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn center_mass(&self) -> f64 {
        self.center_mass
    }

    /// Number of degrees of freedom, `N * L + 1`.
    pub fn dim(&self) -> usize {
        self.n_rays * self.ray_len + 1
    }

    /// Same model with a different ray length.
    pub fn with_ray_len(&self, ray_len: usize) -> Result<Self> {
        Self::new(self.n_rays, ray_len, self.delta, self.mass, self.center_mass)
    }

    /// Upper bound on the largest normal frequency of the finite system.
    ///
    /// Gershgorin bound on the mass-weighted stiffness matrix. Chain rows
    /// give the band edge `4/Δ² + m²`; the junction rows only raise the
    /// bound when the center is light or strongly coupled.
    pub fn omega_max(&self) -> f64 {
        let inv = 1.0 / (self.delta * self.delta);
        let m2 = self.mass * self.mass;
        let n = self.n_rays as f64;
        let sqrt_m = self.center_mass.sqrt();
        let band = 4.0 * inv + m2;
        let center_row = (n * inv + m2) / self.center_mass + n * inv / sqrt_m;
        let first_site_row = 3.0 * inv + m2 + inv / sqrt_m;
        band.max(center_row).max(first_site_row).sqrt()
    }

    /// Default Verlet step, one tenth of the stability limit `2/ω_max`.
    pub fn default_dt(&self) -> f64 {
        0.1 * 2.0 / self.omega_max()
    }
}

/// Lattice dispersion: positive root of `ω² = (4/Δ²) sin²(kΔ/2) + m²`.
pub fn dispersion(k: f64, params: &LatticeParams) -> f64 {
    let s = (0.5 * k * params.delta).sin();
    let d = params.delta;
    (4.0 * s * s / (d * d) + params.mass * params.mass).sqrt()
}

/// Group velocity `dω/dk = sin(kΔ) / (Δ ω)` in length per unit time.
pub fn group_velocity(k: f64, params: &LatticeParams) -> f64 {
    let omega = dispersion(k, params);
    if omega == 0.0 {
        // m = 0 and k on the lattice of band minima
        return (0.5 * k * params.delta).cos().signum();
    }
    (k * params.delta).sin() / (params.delta * omega)
}

/// Dynamical configuration: displacements and velocities of the center and
/// of every ray site.
#[derive(Debug, Clone, PartialEq)]
pub struct StarState {
    pub u: f64,
    pub u_dot: f64,
    n_rays: usize,
    ray_len: usize,
    phi: Vec<f64>,
    phi_dot: Vec<f64>,
}

impl StarState {
    pub fn zeros(params: &LatticeParams) -> Self {
        let len = params.n_rays * params.ray_len;
        Self {
            u: 0.0,
            u_dot: 0.0,
            n_rays: params.n_rays,
            ray_len: params.ray_len,
            phi: vec![0.0; len],
            phi_dot: vec![0.0; len],
        }
    }

    /// Builds a state from the center and ray-major site arrays
    /// (`phi[j * L + i]`).
    pub fn from_parts(params: &LatticeParams, u: f64, u_dot: f64, phi: Vec<f64>, phi_dot: Vec<f64>) -> Result<Self> {
        let len = params.n_rays * params.ray_len;
        for (name, v) in [("phi", &phi), ("phi_dot", &phi_dot)] {
            if v.len() != len {
                return Err(Error::ShapeMismatch {
                    expected: format!("{name} of length {len}"),
                    actual: v.len().to_string(),
                });
            }
        }
        let state = Self {
            u,
            u_dot,
            n_rays: params.n_rays,
            ray_len: params.ray_len,
            phi,
            phi_dot,
        };
        if !state.is_finite() {
            return Err(Error::invalid("state", "non-finite entry"));
        }
        Ok(state)
    }

    /// Random state supported on the first `support` sites of every ray
    /// (and the center), entries uniform in `[-1, 1]`.
    pub fn random_compact<R: Rng + ?Sized>(params: &LatticeParams, support: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(params);
        let support = support.min(params.ray_len);
        s.u = rng.random_range(-1.0..=1.0);
        s.u_dot = rng.random_range(-1.0..=1.0);
        for j in 0..s.n_rays {
            for i in 0..support {
                *s.phi_mut(j, i) = rng.random_range(-1.0..=1.0);
                *s.phi_dot_mut(j, i) = rng.random_range(-1.0..=1.0);
            }
        }
        s
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn ray_len(&self) -> usize {
        self.ray_len
    }

    pub fn phi(&self, ray: usize, site: usize) -> f64 {
        self.phi[ray * self.ray_len + site]
    }

    pub fn phi_dot(&self, ray: usize, site: usize) -> f64 {
        self.phi_dot[ray * self.ray_len + site]
    }

    pub fn phi_mut(&mut self, ray: usize, site: usize) -> &mut f64 {
        &mut self.phi[ray * self.ray_len + site]
    }

    pub fn phi_dot_mut(&mut self, ray: usize, site: usize) -> &mut f64 {
        &mut self.phi_dot[ray * self.ray_len + site]
    }

    pub fn ray(&self, ray: usize) -> &[f64] {
        &self.phi[ray * self.ray_len..(ray + 1) * self.ray_len]
    }

    pub fn ray_dot(&self, ray: usize) -> &[f64] {
        &self.phi_dot[ray * self.ray_len..(ray + 1) * self.ray_len]
    }

    pub fn ray_mut(&mut self, ray: usize) -> &mut [f64] {
        &mut self.phi[ray * self.ray_len..(ray + 1) * self.ray_len]
    }

    pub fn ray_dot_mut(&mut self, ray: usize) -> &mut [f64] {
        &mut self.phi_dot[ray * self.ray_len..(ray + 1) * self.ray_len]
    }

    /// All site displacements, ray-major.
    pub fn phi_all(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_dot_all(&self) -> &[f64] {
        &self.phi_dot
    }

    pub(crate) fn phi_and_dot_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.phi, &mut self.phi_dot)
    }

    /// Flips the sign of every velocity.
    pub fn reverse_velocities(&mut self) {
        self.u_dot = -self.u_dot;
        self.phi_dot.iter_mut().for_each(|v| *v = -*v);
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.u_dot.is_finite() && self.phi.iter().chain(&self.phi_dot).all(|x| x.is_finite())
    }

    pub fn check_shape(&self, params: &LatticeParams) -> Result<()> {
        if self.n_rays != params.n_rays || self.ray_len != params.ray_len {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rays x {} sites", params.n_rays, params.ray_len),
                actual: format!("{} rays x {} sites", self.n_rays, self.ray_len),
            });
        }
        Ok(())
    }

    /// Displacement vector `(u, φ_0.., φ_1.., ...)` of length `N L + 1`.
    pub fn displacement_vector(&self) -> Vec<f64> {
        std::iter::once(self.u).chain(self.phi.iter().copied()).collect()
    }

    pub fn velocity_vector(&self) -> Vec<f64> {
        std::iter::once(self.u_dot)
            .chain(self.phi_dot.iter().copied())
            .collect()
    }

    /// Inverse of [`displacement_vector`](Self::displacement_vector) /
    /// [`velocity_vector`](Self::velocity_vector).
    pub fn from_vectors(params: &LatticeParams, x: &[f64], v: &[f64]) -> Result<Self> {
        let dim = params.dim();
        if x.len() != dim || v.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: format!("vectors of length {dim}"),
                actual: format!("{} and {}", x.len(), v.len()),
            });
        }
        Self::from_parts(params, x[0], v[0], x[1..].to_vec(), v[1..].to_vec())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &StarState) {
        self.u += alpha * other.u;
        self.u_dot += alpha * other.u_dot;
        for (a, b) in self.phi.iter_mut().zip(&other.phi) {
            *a += alpha * b;
        }
        for (a, b) in self.phi_dot.iter_mut().zip(&other.phi_dot) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> StarState {
        let mut s = self.clone();
        s.u *= alpha;
        s.u_dot *= alpha;
        s.phi.iter_mut().chain(s.phi_dot.iter_mut()).for_each(|x| *x *= alpha);
        s
    }

    /// Largest absolute entry over displacements and velocities.
    pub fn max_abs(&self) -> f64 {
        self.phi
            .iter()
            .chain(&self.phi_dot)
            .chain([&self.u, &self.u_dot])
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &StarState) -> f64 {
        let mut d = (self.u - other.u).abs().max((self.u_dot - other.u_dot).abs());
        for (a, b) in self.phi.iter().zip(&other.phi) {
            d = d.max((a - b).abs());
        }
        for (a, b) in self.phi_dot.iter().zip(&other.phi_dot) {
            d = d.max((a - b).abs());
        }
        d
    }

    /// One past the outermost site index with a nonzero displacement or
    /// velocity on any ray (0 if every ray is at rest).
    pub fn support_end(&self) -> usize {
        (0..self.n_rays)
            .filter_map(|j| {
                let (x, v) = (self.ray(j), self.ray_dot(j));
                (0..self.ray_len).rev().find(|&i| x[i] != 0.0 || v[i] != 0.0)
            })
            .map(|i| i + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Accelerations of every degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct Accel {
    pub a_u: f64,
    n_rays: usize,
    ray_len: usize,
    a_phi: Vec<f64>,
}

impl Accel {
    pub fn a_phi(&self, ray: usize, site: usize) -> f64 {
        self.a_phi[ray * self.ray_len + site]
    }

    pub fn ray(&self, ray: usize) -> &[f64] {
        &self.a_phi[ray * self.ray_len..(ray + 1) * self.ray_len]
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn as_vector(&self) -> Vec<f64> {
        std::iter::once(self.a_u).chain(self.a_phi.iter().copied()).collect()
    }
}

/// Equations of motion of the star: the chain Laplacian on every ray, the
/// first site of each ray coupled to `u`, and the center pulled by all rays.
pub fn acceleration(state: &StarState, params: &LatticeParams) -> Result<Accel> {
    state.check_shape(params)?;
    let mut a_phi = vec![0.0; state.phi.len()];
    let a_u = accelerate_into(params, state.u, &state.phi, &mut a_phi);
    Ok(Accel {
        a_u,
        n_rays: params.n_rays,
        ray_len: params.ray_len,
        a_phi,
    })
}

/// Writes site accelerations into `out` and returns the center acceleration.
/// Shapes are the caller's responsibility.
pub(crate) fn accelerate_into(params: &LatticeParams, u: f64, phi: &[f64], out: &mut [f64]) -> f64 {
    let inv = 1.0 / (params.delta * params.delta);
    let m2 = params.mass * params.mass;
    let len = params.ray_len;
    let mut pull = 0.0;
    for (x, a) in phi.chunks_exact(len).zip(out.chunks_exact_mut(len)) {
        pull += x[0] - u;
        a[0] = inv * (x[1] + u - 2.0 * x[0]) - m2 * x[0];
        for i in 1..len - 1 {
            a[i] = inv * (x[i + 1] + x[i - 1] - 2.0 * x[i]) - m2 * x[i];
        }
        let last = len - 1;
        a[last] = inv * (x[last - 1] - 2.0 * x[last]) - m2 * x[last];
    }
    (inv * pull - m2 * u) / params.center_mass
}

/// Total energy of the configuration (kinetic plus potential), conserved by
/// the exact dynamics.
pub fn energy(state: &StarState, params: &LatticeParams) -> Result<f64> {
    state.check_shape(params)?;
    let inv = 1.0 / (params.delta * params.delta);
    let m2 = params.mass * params.mass;
    let len = params.ray_len;
    let mut e = 0.5 * (params.center_mass * state.u_dot * state.u_dot + m2 * state.u * state.u);
    for j in 0..state.n_rays {
        let (x, v) = (state.ray(j), state.ray_dot(j));
        let d0 = state.u - x[0];
        e += 0.5 * inv * d0 * d0;
        for i in 0..len {
            let next = if i + 1 < len { x[i + 1] } else { 0.0 };
            let d = next - x[i];
            e += 0.5 * (v[i] * v[i] + inv * d * d + m2 * x[i] * x[i]);
        }
    }
    Ok(e)
}

/// Dense mass-weighted stiffness matrix `H = D^{-1/2} K D^{-1/2}` with
/// `D = diag(M, 1, ..., 1)`, in the ordering of
/// [`StarState::displacement_vector`]. Its eigenvalues are the squared
/// normal frequencies of the truncated star.
pub fn build_quadratic_form(params: &LatticeParams) -> DMatrix<f64> {
    let dim = params.dim();
    let inv = 1.0 / (params.delta * params.delta);
    let m2 = params.mass * params.mass;
    let len = params.ray_len;
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    k[(0, 0)] = params.n_rays as f64 * inv + m2;
    for j in 0..params.n_rays {
        let base = 1 + j * len;
        k[(0, base)] = -inv;
        k[(base, 0)] = -inv;
        for i in 0..len {
            k[(base + i, base + i)] = 2.0 * inv + m2;
            if i + 1 < len {
                k[(base + i, base + i + 1)] = -inv;
                k[(base + i + 1, base + i)] = -inv;
            }
        }
    }
    let s = 1.0 / params.center_mass.sqrt();
    for i in 0..dim {
        k[(0, i)] *= s;
        k[(i, 0)] *= s;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(n: usize, l: usize, delta: f64, m: f64, big_m: f64) -> LatticeParams {
        LatticeParams::new(n, l, delta, m, big_m).unwrap()
    }

    #[test]
    fn construction_rejects_out_of_range() {
        assert!(LatticeParams::new(3, 100, 1.0, 0.0, 1.0).is_ok());
        let bad = [
            (LatticeParams::new(1, 100, 1.0, 0.0, 1.0), "n_rays"),
            (LatticeParams::new(3, 1, 1.0, 0.0, 1.0), "ray_len"),
            (LatticeParams::new(3, 100, 0.0, 0.0, 1.0), "delta"),
            (LatticeParams::new(3, 100, 1.0, -0.1, 1.0), "mass"),
            (LatticeParams::new(3, 100, 1.0, 0.0, 0.0), "center_mass"),
            (LatticeParams::new(3, 100, f64::NAN, 0.0, 1.0), "delta"),
        ];
        for (res, field) in bad {
            match res {
                Err(Error::InvalidParameter { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(0.0, &params(3, 10, 2.5, 1.0, 1.0)), 1.0);
        assert_relative_eq!(dispersion(PI, &params(3, 10, 1.0, 0.0, 1.0)), 2.0, epsilon = 1e-15);
        let p = params(3, 10, 0.001, 0.5, 1.0);
        let w = dispersion(0.01, &p);
        let rel = (w * w - (0.01f64.powi(2) + 0.25)).abs() / (w * w);
        assert!(rel < 1e-4, "{rel}");
        // periodicity
        let p = params(3, 10, 0.7, 0.3, 1.0);
        assert_relative_eq!(
            dispersion(0.4, &p),
            dispersion(0.4 + 2.0 * PI / 0.7, &p),
            epsilon = 1e-12
        );
    }

    #[test]
    fn group_velocity_matches_finite_difference() {
        let p = params(3, 10, 0.5, 0.8, 1.0);
        for &k in &[0.3, 1.1, 2.0, 5.0] {
            let h = 1e-6;
            let fd = (dispersion(k + h, &p) - dispersion(k - h, &p)) / (2.0 * h);
            assert_relative_eq!(group_velocity(k, &p), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn acceleration_hand_values() {
        let p = params(3, 5, 1.0, 0.7, 2.0);
        let zero = StarState::zeros(&p);
        let a = acceleration(&zero, &p).unwrap();
        assert_eq!(a.a_u, 0.0);
        assert!(a.as_vector().iter().all(|&x| x == 0.0));

        let mut s = StarState::zeros(&p);
        s.u = 1.0;
        let a = acceleration(&s, &p).unwrap();
        assert_relative_eq!(a.a_u, -(3.0 + 0.49) / 2.0, epsilon = 1e-15);
        for j in 0..3 {
            assert_eq!(a.a_phi(j, 0), 1.0);
            assert_eq!(a.a_phi(j, 1), 0.0);
        }

        let p = params(3, 5, 1.0, 0.0, 2.0);
        let mut s = StarState::zeros(&p);
        *s.phi_mut(0, 0) = 1.0;
        let a = acceleration(&s, &p).unwrap();
        assert_eq!(a.a_u, 0.5);
        assert_eq!(a.a_phi(0, 0), -2.0);
        assert_eq!(a.a_phi(0, 1), 1.0);
        let nonzero = a.as_vector().iter().filter(|x| **x != 0.0).count();
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn outer_boundary_is_dirichlet() {
        let p = params(2, 4, 1.0, 0.0, 1.0);
        let mut s = StarState::zeros(&p);
        *s.phi_mut(1, 3) = 1.0;
        let a = acceleration(&s, &p).unwrap();
        assert_eq!(a.a_phi(1, 3), -2.0);
        assert_eq!(a.a_phi(1, 2), 1.0);
    }

    #[test]
    fn energy_hand_values() {
        let p = params(3, 6, 1.0, 0.9, 1.3);
        assert_eq!(energy(&StarState::zeros(&p), &p).unwrap(), 0.0);
        let mut s = StarState::zeros(&p);
        s.u = 1.0;
        assert_relative_eq!(energy(&s, &p).unwrap(), 0.81 / 2.0 + 1.5, epsilon = 1e-15);

        let p = params(3, 6, 1.0, 1.0, 1.0);
        let mut s = StarState::zeros(&p);
        *s.phi_mut(0, 0) = 1.0;
        assert_relative_eq!(energy(&s, &p).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = params(3, 6, 1.0, 1.0, 1.0);
        let q = params(3, 7, 1.0, 1.0, 1.0);
        let s = StarState::zeros(&q);
        assert!(matches!(acceleration(&s, &p), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(energy(&s, &p), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn two_unit_rays_form_a_uniform_chain() {
        let (delta, m) = (0.5, 0.3);
        let p = params(2, 4, delta, m, 1.0);
        let h = build_quadratic_form(&p);
        // reorder: ray 0 reversed, center, ray 1
        let l = 4;
        let order: Vec<usize> = (0..l)
            .rev()
            .map(|i| 1 + i)
            .chain([0])
            .chain((0..l).map(|i| 1 + l + i))
            .collect();
        for (a, &ia) in order.iter().enumerate() {
            for (b, &ib) in order.iter().enumerate() {
                let expected = if a == b {
                    2.0 / (delta * delta) + m * m
                } else if a.abs_diff(b) == 1 {
                    -1.0 / (delta * delta)
                } else {
                    0.0
                };
                assert_relative_eq!(h[(ia, ib)], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn quadratic_form_is_symmetric_and_bounded_below() {
        for &(n, big_m, m) in &[(3, 1.0, 1.0), (4, 0.5, 0.7), (5, 3.0, 0.0), (2, 2.0, 1.0)] {
            let p = params(n, 12, 1.0, m, big_m);
            let h = build_quadratic_form(&p);
            assert_eq!((&h - h.transpose()).norm(), 0.0);
            let eig = h.clone().symmetric_eigenvalues();
            let min = eig.min();
            // m^2 D^{-1} bounds H from below
            assert!(min >= m * m * (1.0f64).min(1.0 / big_m) - 1e-12, "{min}");
            if big_m <= 1.0 {
                assert!(min >= m * m - 1e-12);
            }
            assert!(eig.max() <= p.omega_max().powi(2) + 1e-12);
        }
    }

    #[test]
    fn acceleration_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, big_m, m, delta) in &[(3, 1.0, 0.0, 1.0), (4, 0.6, 1.2, 0.5), (2, 2.5, 0.3, 2.0)] {
            let p = params(n, 9, delta, m, big_m);
            let s = StarState::random_compact(&p, 9, &mut rng);
            let h = build_quadratic_form(&p);
            let x = nalgebra::DVector::from_vec(s.displacement_vector());
            let sq = big_m.sqrt();
            let mut y = x.clone();
            y[0] *= sq;
            let mut acc = -(&h * y);
            acc[0] /= sq;
            let a = acceleration(&s, &p).unwrap().as_vector();
            let scale = acc.amax();
            for (i, v) in a.iter().enumerate() {
                assert!((v - acc[i]).abs() <= 1e-12 * scale, "dof {i}");
            }
        }
    }

    #[test]
    fn energy_is_the_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(4, 7, 0.8, 0.6, 1.7);
        let s = StarState::random_compact(&p, 7, &mut rng);
        let h = build_quadratic_form(&p);
        let mut y = nalgebra::DVector::from_vec(s.displacement_vector());
        let mut w = nalgebra::DVector::from_vec(s.velocity_vector());
        y[0] *= p.center_mass().sqrt();
        w[0] *= p.center_mass().sqrt();
        let e = 0.5 * w.dot(&w) + 0.5 * y.dot(&(&h * &y));
        assert_relative_eq!(energy(&s, &p).unwrap(), e, max_relative = 1e-13);
    }

    #[test]
    fn support_end_tracks_outermost_site() {
        let p = params(3, 10, 1.0, 0.0, 1.0);
        let mut s = StarState::zeros(&p);
        assert_eq!(s.support_end(), 0);
        *s.phi_dot_mut(2, 6) = 0.1;
        *s.phi_mut(0, 3) = 1.0;
        assert_eq!(s.support_end(), 7);
    }
}
