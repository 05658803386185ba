//! Invariant suite behind the `verify` command.
//!
//! Each check reduces to one number compared against a bound. The sizes
//! are chosen so the whole suite runs in a few seconds.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{init_packet_for_step, Direction, ExactPropagator, PacketSpec, Verlet};
use crate::error::Result;
use crate::inversion::roundtrip;
use crate::lattice::{energy, LatticeParams, StarState};
use crate::modes::verify_decoupling_with;
use crate::scattering::{
    continuum_limit_check, convergence_order, junction_residual, measure_reflection, reflection_closed_n3,
    reflection_exact, ContinuumParams,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// Passes when the value is strictly below.
    Below(f64),
    /// Passes when the value is at least this.
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Measured value, NaN when the computation failed.
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
    /// Error text when the computation failed.
    pub error: Option<String>,
}

impl Check {
    fn from_result(name: &'static str, bound: Bound, value: Result<f64>) -> Self {
        match value {
            Ok(value) => {
                let passed = match bound {
                    Bound::Below(b) => value < b,
                    Bound::AtLeast(b) => value >= b,
                };
                Check {
                    name,
                    value,
                    bound,
                    passed,
                    error: None,
                }
            }
            Err(e) => Check {
                name,
                value: f64::NAN,
                bound,
                passed: false,
                error: Some(e.to_string()),
            },
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let bound = match self.bound {
            Bound::Below(b) => format!("< {b:e}"),
            Bound::AtLeast(b) => format!(">= {b}"),
        };
        match &self.error {
            Some(e) => write!(f, "{status} {}: error: {e}", self.name),
            None => write!(f, "{status} {}: {:e} (want {bound})", self.name, self.value),
        }
    }
}

/// Runs every check. Random states are drawn from `seed`.
pub fn run_suite(seed: u64) -> Vec<Check> {
    vec![
        Check::from_result("unitarity", Bound::Below(1e-12), unitarity()),
        Check::from_result("junction equations", Bound::Below(1e-10), junction()),
        Check::from_result("three-ray closed form", Bound::Below(1e-12), closed_form()),
        Check::from_result("constant reflection", Bound::Below(1e-12), constant_cases()),
        Check::from_result("continuum order", Bound::AtLeast(0.9), continuum_order()),
        Check::from_result("mode decoupling", Bound::Below(1e-8), decoupling(seed)),
        Check::from_result("mode round trip", Bound::Below(1e-10), mode_roundtrip(seed)),
        Check::from_result("verlet energy drift", Bound::Below(1e-6), verlet_drift()),
        Check::from_result("verlet reversibility", Bound::Below(1e-9), reversibility(seed)),
        Check::from_result("packet reflection error", Bound::Below(0.02), packet_reflection()),
    ]
}

fn k_points(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| (i as f64 + 0.5) * PI / count as f64)
}

fn sweep(mut f: impl FnMut(&LatticeParams, f64) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for &cm in &[0.5, 1.0, 1.5, 3.0] {
            for &m in &[0.0, 1.0] {
                let p = LatticeParams::new(n, 10, 1.0, m, cm)?;
                for k in k_points(64) {
                    worst = worst.max(f(&p, k)?);
                }
            }
        }
    }
    Ok(worst)
}

fn unitarity() -> Result<f64> {
    sweep(|p, k| Ok(reflection_exact(k, p)?.unitarity_residual(p.n_rays())))
}

fn junction() -> Result<f64> {
    sweep(|p, k| Ok(junction_residual(&reflection_exact(k, p)?, p)))
}

fn closed_form() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &cm in &[0.5, 1.0, 1.5, 3.0] {
        let p = LatticeParams::new(3, 10, 1.0, 0.0, cm)?;
        for k in k_points(64) {
            let exact = reflection_exact(k, &p)?.r;
            worst = worst.max((exact - reflection_closed_n3(k, cm, 1.0)?.r).norm());
        }
    }
    let spot = reflection_exact(PI / 2.0, &LatticeParams::new(3, 10, 1.0, 0.0, 1.0)?)?.r;
    Ok(worst.max((spot - Complex64::new(-0.4, -0.2)).norm()))
}

fn constant_cases() -> Result<f64> {
    let third = LatticeParams::new(3, 10, 1.0, 0.0, 1.5)?;
    let chain = LatticeParams::new(2, 10, 1.0, 0.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for k in k_points(64) {
        worst = worst.max((reflection_exact(k, &third)?.r + 1.0 / 3.0).norm());
        worst = worst.max(reflection_exact(k, &chain)?.r.norm());
    }
    Ok(worst)
}

fn continuum_order() -> Result<f64> {
    let c = ContinuumParams::new(Complex64::new(0.0, 1.0))?;
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    Ok(convergence_order(&deltas, &continuum_limit_check(1.0, &c, &deltas)))
}

fn decoupling(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ks = [0.3, 1.1, 2.0, 2.9];
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        for &cm in &[0.7, 1.0, 2.0] {
            for &m in &[0.0, 1.0] {
                let p = LatticeParams::new(n, 40, 1.0, m, cm)?;
                let prop = ExactPropagator::new(&p)?;
                let s = StarState::random_compact(&p, 4, &mut rng);
                let horizon = crate::dynamics::boundary_horizon(&p, s.support_end());
                let times: Vec<f64> = (1..=4).map(|i| horizon * i as f64 / 4.0).collect();
                worst = worst.max(verify_decoupling_with(&prop, &s, &p, &ks, &times)?.max());
            }
        }
    }
    Ok(worst)
}

fn mode_roundtrip(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1);
    let mut worst: f64 = 0.0;
    for n in 3..=6 {
        for &l in &[16, 32] {
            let p = LatticeParams::new(n, l, 1.0, 0.0, 1.0)?;
            for nodes in [l + 2, 4 * l] {
                for _ in 0..3 {
                    let s = StarState::random_compact(&p, l, &mut rng);
                    worst = worst.max(roundtrip(&s, &p, nodes)?);
                }
            }
        }
    }
    Ok(worst)
}

fn verlet_drift() -> Result<f64> {
    let p = LatticeParams::new(3, 1600, 1.0, 0.0, 1.0)?;
    let spec = PacketSpec {
        ray: 0,
        k0: PI / 2.0,
        center: 400.0,
        width: 40.0,
        direction: Direction::AwayFromJunction,
    };
    let dt = p.default_dt();
    let mut s = init_packet_for_step(&spec, &p, dt)?;
    let e0 = energy(&s, &p)?;
    Verlet::new(&p, dt)?.run(&mut s, 10_000)?;
    Ok((energy(&s, &p)? - e0).abs() / e0)
}

fn reversibility(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    let p = LatticeParams::new(3, 200, 1.0, 1.0, 2.0)?;
    let s0 = StarState::random_compact(&p, 20, &mut rng);
    let mut s = s0.clone();
    let mut v = Verlet::new(&p, p.default_dt())?;
    v.run(&mut s, 2000)?;
    s.reverse_velocities();
    v.run(&mut s, 2000)?;
    s.reverse_velocities();
    Ok(s.max_abs_diff(&s0))
}

fn packet_reflection() -> Result<f64> {
    let p = LatticeParams::new(3, 1600, 1.0, 0.0, 1.5)?;
    let spec = PacketSpec {
        ray: 0,
        k0: PI / 2.0,
        center: 320.0,
        width: 40.0,
        direction: Direction::TowardJunction,
    };
    let m = measure_reflection(&spec, &p)?;
    Ok(m.r_rel_err())
}
