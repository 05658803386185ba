//! Reconstruction of the lattice configuration from sampled normal modes,
//! for a unit center mass.
//!
//! With `M = 1` the ray sums `Q_0 = N u`, `Q_n = Σ_j φ_n^{(j)}` and the
//! cyclic ray differences `ΔQ_{j,n} = φ_n^{(j+1)} - φ_n^{(j)}` are read off
//! the mode amplitudes by quadrature:
//!
//! ```text
//! Σ_j ξ_j(k)         = Σ_{n≥0} η_n cos k(n + ½),   η_n = Q_n + (N - 1) Q_{n+1},
//! ξ_{j+1} - ξ_j      = (N - 2) sin(k/2) Σ_n ΔQ_{j,n} sin kn.
//! ```
//!
//! `η` is inverted by back substitution, and the rays follow from the sums
//! and differences by a telescoping identity.
//!
//! For a state supported on `L` sites every integrand is a trigonometric
//! polynomial of degree at most `2L + 1`, so the midpoint rule with
//! `P ≥ L + 2` nodes on `(0, π)` integrates it exactly.
//!
//! The back substitution multiplies an error in `η_n` by `(N - 1)^n`, so in
//! double precision the recovered `Q_0` loses about `L log10(N - 1)` digits.
//! [`roundtrip`] therefore carries the ray sums through `η` in a
//! multiprecision float sized to `L` and `N`; [`roundtrip_f64`] is the same
//! pipeline in `f64`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, StarState};
use crate::modes::{xi_transform, ModeSpectrum};
use crate::xfloat::{with_precision, Real, XFloat};

/// Which half of the phase-space data to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Displacement,
    Velocity,
}

/// Mode spectra sampled on the midpoint grid `k_p = (p + ½) π / P`.
#[derive(Debug, Clone)]
pub struct ModeGrid {
    n_rays: usize,
    ray_len: usize,
    nodes: Vec<f64>,
    samples: Vec<ModeSpectrum>,
}

/// Midpoint nodes on `(0, π)`.
pub fn midpoint_nodes(count: usize) -> Vec<f64> {
    let h = std::f64::consts::PI / count as f64;
    (0..count).map(|p| (p as f64 + 0.5) * h).collect()
}

fn check_unit_mass(params: &LatticeParams) -> Result<()> {
    if params.center_mass() != 1.0 {
        return Err(Error::Unsupported(format!(
            "mode inversion needs center_mass = 1, got {}",
            params.center_mass()
        )));
    }
    Ok(())
}

fn check_nodes(nodes: usize, ray_len: usize) -> Result<()> {
    let required = ModeGrid::min_nodes(ray_len);
    if nodes < required {
        return Err(Error::GridTooCoarse { nodes, required });
    }
    Ok(())
}

fn check_rays(n_rays: usize) -> Result<()> {
    if n_rays < 3 {
        return Err(Error::Unsupported(
            "ray differences vanish from the modes when N = 2".into(),
        ));
    }
    Ok(())
}

impl ModeGrid {
    /// Smallest node count that integrates the mode integrands exactly.
    pub fn min_nodes(ray_len: usize) -> usize {
        ray_len + 2
    }

    /// Samples the reduced mode amplitudes of `state` on `nodes` points.
    pub fn sample(state: &StarState, params: &LatticeParams, nodes: usize) -> Result<Self> {
        check_unit_mass(params)?;
        check_nodes(nodes, params.ray_len())?;
        let ks = midpoint_nodes(nodes);
        let samples = ks
            .iter()
            .map(|&k| xi_transform(state, k, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_rays: params.n_rays(),
            ray_len: params.ray_len(),
            nodes: ks,
            samples,
        })
    }

    /// Wraps externally produced reduced spectra. They must sit on the
    /// midpoint nodes, in order.
    pub fn from_samples(n_rays: usize, ray_len: usize, samples: Vec<ModeSpectrum>) -> Result<Self> {
        check_nodes(samples.len(), ray_len)?;
        let nodes = midpoint_nodes(samples.len());
        for (s, &k) in samples.iter().zip(&nodes) {
            if (s.k - k).abs() > 1e-12 || s.xi.len() != n_rays || !s.reduced {
                return Err(Error::invalid(
                    "samples",
                    "expected reduced spectra on the midpoint nodes",
                ));
            }
        }
        Ok(Self {
            n_rays,
            ray_len,
            nodes,
            samples,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn samples(&self) -> &[ModeSpectrum] {
        &self.samples
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn ray_len(&self) -> usize {
        self.ray_len
    }

    fn xi(&self, component: Component) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| match component {
                Component::Displacement => s.xi.clone(),
                Component::Velocity => s.xi_dot.clone(),
            })
            .collect()
    }

    fn tables(&self) -> Tables<f64> {
        Tables::new(self.nodes.len(), self.ray_len)
    }
}

/// Trigonometric values at every midpoint node, `n = 0..=L + 1`.
struct Tables<T> {
    half_sin: Vec<T>,
    half_cos: Vec<T>,
    sin: Vec<Vec<T>>,
    cos: Vec<Vec<T>>,
}

impl<T: Real> Tables<T> {
    fn new(nodes: usize, ray_len: usize) -> Self {
        let mut t = Tables {
            half_sin: Vec::with_capacity(nodes),
            half_cos: Vec::with_capacity(nodes),
            sin: Vec::with_capacity(nodes),
            cos: Vec::with_capacity(nodes),
        };
        let (one, two) = (T::from_f64(1.0), T::from_f64(2.0));
        for p in 0..nodes {
            let (sh, ch) = T::sin_cos_pi(2 * p + 1, 4 * nodes);
            let s1 = two.clone() * sh.clone() * ch.clone();
            let c1 = one.clone() - two.clone() * sh.clone() * sh.clone();
            let (mut sin, mut cos) = (vec![T::zero(), s1.clone()], vec![one.clone(), c1.clone()]);
            for n in 2..=ray_len + 1 {
                let (s, c) = (sin[n - 1].clone(), cos[n - 1].clone());
                sin.push(s.clone() * c1.clone() + c.clone() * s1.clone());
                cos.push(c * c1.clone() - s * s1.clone());
            }
            t.half_sin.push(sh);
            t.half_cos.push(ch);
            t.sin.push(sin);
            t.cos.push(cos);
        }
        t
    }

    fn nodes(&self) -> usize {
        self.sin.len()
    }

    /// `cos k(n + ½)`.
    fn cos_half_up(&self, p: usize, n: usize) -> T {
        self.cos[p][n].clone() * self.half_cos[p].clone() - self.sin[p][n].clone() * self.half_sin[p].clone()
    }

    /// `cos k(n - ½)`.
    fn cos_half_down(&self, p: usize, n: usize) -> T {
        self.cos[p][n].clone() * self.half_cos[p].clone() + self.sin[p][n].clone() * self.half_sin[p].clone()
    }

    /// `(1/π) ∫_{-π}^{π} f dk` for an even integrand sampled at the nodes.
    fn integrate(&self, f: impl Fn(usize) -> T) -> T {
        let mut sum = T::zero();
        for p in 0..self.nodes() {
            sum = sum + f(p);
        }
        sum * T::from_f64(2.0) / T::from_f64(self.nodes() as f64)
    }
}

/// `Σ_j ξ_j(k_p)` of one component at unit center mass from its ray sums
/// `Q_n`, `n = 0..=L`:
/// `N cos(k/2) (Q_0/N + Σ_n Q_n cos kn) + (N - 2) sin(k/2) Σ_n Q_n sin kn`.
fn forward_total<T: Real>(q: &[T], n_rays: usize, tables: &Tables<T>) -> Vec<T> {
    let nf = T::from_f64(n_rays as f64);
    let n2 = T::from_f64(n_rays as f64 - 2.0);
    (0..tables.nodes())
        .map(|p| {
            let mut xi0 = q[0].clone() / nf.clone();
            let mut s = T::zero();
            for (n, qn) in q.iter().enumerate().skip(1) {
                xi0 = xi0 + qn.clone() * tables.cos[p][n].clone();
                s = s + qn.clone() * tables.sin[p][n].clone();
            }
            nf.clone() * tables.half_cos[p].clone() * xi0 + n2.clone() * tables.half_sin[p].clone() * s
        })
        .collect()
}

fn quad_delta_q<T: Real>(xi: &[Vec<T>], tables: &Tables<T>, n_rays: usize, ray_len: usize) -> Vec<Vec<T>> {
    let scale = T::from_f64(1.0) / T::from_f64(n_rays as f64 - 2.0);
    (0..n_rays)
        .map(|j| {
            let next = (j + 1) % n_rays;
            // ratio at each node, shared by all sites
            let ratio: Vec<T> = (0..tables.nodes())
                .map(|p| (xi[p][next].clone() - xi[p][j].clone()) / tables.half_sin[p].clone())
                .collect();
            (1..=ray_len)
                .map(|n| scale.clone() * tables.integrate(|p| ratio[p].clone() * tables.sin[p][n].clone()))
                .collect()
        })
        .collect()
}

fn node_totals<T: Real>(xi: &[Vec<T>]) -> Vec<T> {
    xi.iter()
        .map(|row| row.iter().cloned().fold(T::zero(), |a, b| a + b))
        .collect()
}

fn quad_eta<T: Real>(totals: &[T], tables: &Tables<T>, ray_len: usize) -> Vec<T> {
    (0..=ray_len)
        .map(|n| tables.integrate(|p| totals[p].clone() * tables.cos_half_up(p, n)))
        .collect()
}

fn back_substitute<T: Real>(eta: &[T], n_rays: usize) -> Vec<T> {
    let c = T::from_f64(n_rays as f64 - 1.0);
    let mut q: Vec<T> = vec![T::zero(); eta.len()];
    let mut above = T::zero();
    for n in (0..eta.len()).rev() {
        q[n] = eta[n].clone() - c.clone() * above;
        above = q[n].clone();
    }
    q
}

fn rebuild<T: Real>(q: &[T], dq: &[Vec<T>], n_rays: usize, ray_len: usize) -> (T, Vec<T>) {
    let nf = T::from_f64(n_rays as f64);
    let mut phi = Vec::with_capacity(n_rays * ray_len);
    for j in 0..n_rays {
        for i in 0..ray_len {
            let mut weighted = T::zero();
            for m in 0..n_rays {
                let w = T::from_f64((n_rays - 1 - m) as f64);
                weighted = weighted + w * dq[(j + m) % n_rays][i].clone();
            }
            phi.push((q[i + 1].clone() - weighted) / nf.clone());
        }
    }
    (q[0].clone() / nf, phi)
}

fn to_f64_vec<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(Real::to_f64).collect()
}

/// Cyclic ray differences `dq[j][i] = φ_{i+1}^{(j+1 mod N)} - φ_{i+1}^{(j)}`.
pub fn delta_q(grid: &ModeGrid, component: Component) -> Result<Vec<Vec<f64>>> {
    check_rays(grid.n_rays)?;
    Ok(quad_delta_q(
        &grid.xi(component),
        &grid.tables(),
        grid.n_rays,
        grid.ray_len,
    ))
}

/// `η_n` for `n = 0..=L` from the sum of all mode amplitudes.
pub fn eta_coeffs(grid: &ModeGrid, component: Component) -> Vec<f64> {
    quad_eta(&node_totals(&grid.xi(component)), &grid.tables(), grid.ray_len)
}

/// Solves `η_n = Q_n + (N - 1) Q_{n+1}` with `Q_{L+1} = 0` from the top down.
/// The center displacement is `Q_0 / N`.
pub fn q_from_eta_triangular(eta: &[f64], n_rays: usize) -> Vec<f64> {
    back_substitute(eta, n_rays)
}

/// Ray sums from the closed-form integral kernel
///
/// ```text
/// Q_n = (1/π) ∫ Σ_j ξ_j(k) [cos k(n + ½) + (N - 1) cos k(n - ½)]
///                             / [N² - 4(N - 1) sin²(k/2)] dk,
/// ```
///
/// which comes from summing a geometric series in `(1 - N)` outside its
/// radius of convergence. Kept as an experiment next to the triangular
/// solve.
pub fn q_from_eta_kernel(grid: &ModeGrid, component: Component) -> Result<Vec<f64>> {
    if grid.n_rays < 3 {
        return Err(Error::Unsupported(
            "kernel denominator vanishes at k = π when N = 2".into(),
        ));
    }
    let tables = grid.tables();
    let totals = node_totals(&grid.xi(component));
    let nf = grid.n_rays as f64;
    Ok((0..=grid.ray_len)
        .map(|n| {
            tables.integrate(|p| {
                let num = tables.cos_half_up(p, n) + (nf - 1.0) * tables.cos_half_down(p, n);
                let den = nf * nf - 4.0 * (nf - 1.0) * tables.half_sin[p].powi(2);
                totals[p] * num / den
            })
        })
        .collect())
}

/// Kernel-versus-triangular comparison for one grid.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub n_rays: usize,
    pub ray_len: usize,
    pub nodes: usize,
    pub q_kernel: Vec<f64>,
    pub q_triangular: Vec<f64>,
    pub max_abs_diff: f64,
}

/// Compares the kernel against the double-precision triangular solve on
/// the same grid.
pub fn kernel_report(grid: &ModeGrid, component: Component) -> Result<KernelReport> {
    let q_kernel = q_from_eta_kernel(grid, component)?;
    let q_triangular = q_from_eta_triangular(&eta_coeffs(grid, component), grid.n_rays);
    Ok(compare(grid, q_kernel, q_triangular))
}

/// As [`kernel_report`], with the triangular side replaced by the ray sums
/// of `state` itself, free of back-substitution rounding.
pub fn kernel_report_for_state(
    state: &StarState,
    params: &LatticeParams,
    nodes: usize,
    component: Component,
) -> Result<KernelReport> {
    let grid = ModeGrid::sample(state, params, nodes)?;
    let q_kernel = q_from_eta_kernel(&grid, component)?;
    let q_triangular = ChainSums::from_state(state, component).q;
    Ok(compare(&grid, q_kernel, q_triangular))
}

fn compare(grid: &ModeGrid, q_kernel: Vec<f64>, q_triangular: Vec<f64>) -> KernelReport {
    let max_abs_diff = q_kernel
        .iter()
        .zip(&q_triangular)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    KernelReport {
        n_rays: grid.n_rays,
        ray_len: grid.ray_len,
        nodes: grid.nodes.len(),
        q_kernel,
        q_triangular,
        max_abs_diff,
    }
}

/// Ray sums, `η` and cyclic differences computed directly from a state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSums {
    /// `Q_n`, `n = 0..=L`, with `Q_0 = N u`.
    pub q: Vec<f64>,
    /// `η_n = Q_n + (N - 1) Q_{n+1}`, `n = 0..=L`.
    pub eta: Vec<f64>,
    /// `ΔQ_{j,n}`, ray-major, sites `n = 1..=L`.
    pub dq: Vec<Vec<f64>>,
}

impl ChainSums {
    pub fn from_state(state: &StarState, component: Component) -> Self {
        let (n, len) = (state.n_rays(), state.ray_len());
        let center = match component {
            Component::Displacement => state.u,
            Component::Velocity => state.u_dot,
        };
        let ray = |j: usize| match component {
            Component::Displacement => state.ray(j),
            Component::Velocity => state.ray_dot(j),
        };
        let mut q = vec![0.0; len + 1];
        q[0] = n as f64 * center;
        for j in 0..n {
            for (i, x) in ray(j).iter().enumerate() {
                q[i + 1] += x;
            }
        }
        let c = n as f64 - 1.0;
        let eta = (0..=len)
            .map(|i| q[i] + c * q.get(i + 1).copied().unwrap_or(0.0))
            .collect();
        let dq = (0..n)
            .map(|j| {
                let (a, b) = (ray(j), ray((j + 1) % n));
                b.iter().zip(a).map(|(b, a)| b - a).collect()
            })
            .collect();
        Self { q, eta, dq }
    }
}

/// Center value and ray-major site values of one phase-space component.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub center: f64,
    pub phi: Vec<f64>,
}

/// Rebuilds the rays from their sums and cyclic differences:
///
/// ```text
/// φ_n^{(j)} = (1/N) (Q_n - Σ_{m=0}^{N-1} (N - 1 - m) ΔQ_{j+m, n}),   u = Q_0 / N.
/// ```
pub fn reconstruct_state(q: &[f64], dq: &[Vec<f64>], n_rays: usize, ray_len: usize) -> Result<Reconstruction> {
    if q.len() != ray_len + 1 || dq.len() != n_rays || dq.iter().any(|d| d.len() != ray_len) {
        return Err(Error::ShapeMismatch {
            expected: format!("{} sums and {n_rays} x {ray_len} differences", ray_len + 1),
            actual: format!("{} sums and {} difference rows", q.len(), dq.len()),
        });
    }
    let scale = dq.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..ray_len {
        let residual: f64 = dq.iter().map(|d| d[i]).sum();
        if residual.abs() > 1e-10 * scale {
            return Err(Error::InconsistentDifferences { residual });
        }
    }
    let (center, phi) = rebuild(q, dq, n_rays, ray_len);
    Ok(Reconstruction { center, phi })
}

/// Full inversion of both phase-space components from a mode grid, in
/// double precision.
pub fn invert_grid(grid: &ModeGrid, params: &LatticeParams) -> Result<StarState> {
    let mut parts = Vec::with_capacity(2);
    for component in [Component::Displacement, Component::Velocity] {
        let dq = delta_q(grid, component)?;
        let q = q_from_eta_triangular(&eta_coeffs(grid, component), grid.n_rays);
        parts.push(reconstruct_state(&q, &dq, grid.n_rays, grid.ray_len)?);
    }
    let vel = parts.pop().unwrap();
    let disp = parts.pop().unwrap();
    StarState::from_parts(params, disp.center, vel.center, disp.phi, vel.phi)
}

fn check_roundtrip(state: &StarState, params: &LatticeParams, nodes: usize) -> Result<()> {
    state.check_shape(params)?;
    check_unit_mass(params)?;
    check_rays(params.n_rays())?;
    check_nodes(nodes, params.ray_len())
}

/// Working precision for a round trip: double precision plus the digits
/// the back substitution amplifies away, plus guard bits.
pub fn roundtrip_precision_bits(n_rays: usize, ray_len: usize) -> usize {
    let growth = ray_len as f64 * (n_rays as f64 - 1.0).max(1.0).log2();
    53 + growth.ceil() as usize + 64
}

/// Keyed by `(nodes, L, bits)`.
type TableCache = HashMap<(usize, usize, usize), Rc<Tables<XFloat>>>;

thread_local! {
    static TABLES: RefCell<TableCache> = RefCell::new(HashMap::new());
}

fn xtables(nodes: usize, ray_len: usize, bits: usize) -> Rc<Tables<XFloat>> {
    TABLES.with(|cache| {
        cache
            .borrow_mut()
            .entry((nodes, ray_len, bits))
            .or_insert_with(|| Rc::new(Tables::new(nodes, ray_len)))
            .clone()
    })
}

/// Ray sums of one component recovered from its modes in multiprecision.
/// Rounding in the input sums is reproduced, not amplified: only errors
/// introduced between `Σ_j ξ_j` and `Q` grow.
fn ray_sums_precise(state: &StarState, component: Component, tables: &Tables<XFloat>) -> Vec<f64> {
    let q: Vec<XFloat> = ChainSums::from_state(state, component)
        .q
        .into_iter()
        .map(XFloat::from_f64)
        .collect();
    let totals = forward_total(&q, state.n_rays(), tables);
    to_f64_vec(&back_substitute(
        &quad_eta(&totals, tables, state.ray_len()),
        state.n_rays(),
    ))
}

/// Forward transform onto `nodes` midpoints followed by the inversion.
/// Returns the largest absolute error over `u`, `φ`, `u̇` and `φ̇`.
///
/// The cyclic differences are well conditioned and come from the double
/// precision grid. The ray sums go through `Σ_j ξ_j`, `η` and the back
/// substitution in a precision sized by [`roundtrip_precision_bits`].
pub fn roundtrip(state: &StarState, params: &LatticeParams, nodes: usize) -> Result<f64> {
    check_roundtrip(state, params, nodes)?;
    let (n, len) = (params.n_rays(), params.ray_len());
    let grid = ModeGrid::sample(state, params, nodes)?;
    let bits = roundtrip_precision_bits(n, len);
    let mut parts = Vec::with_capacity(2);
    for component in [Component::Displacement, Component::Velocity] {
        let dq = delta_q(&grid, component)?;
        let q = with_precision(bits, || {
            let tables = xtables(nodes, len, bits);
            ray_sums_precise(state, component, &tables)
        });
        parts.push(reconstruct_state(&q, &dq, n, len)?);
    }
    let vel = parts.pop().unwrap();
    let disp = parts.pop().unwrap();
    let rebuilt = StarState::from_parts(params, disp.center, vel.center, disp.phi, vel.phi)?;
    Ok(rebuilt.max_abs_diff(state))
}

/// [`roundtrip`] carried out entirely in double precision.
pub fn roundtrip_f64(state: &StarState, params: &LatticeParams, nodes: usize) -> Result<f64> {
    check_roundtrip(state, params, nodes)?;
    let grid = ModeGrid::sample(state, params, nodes)?;
    Ok(invert_grid(&grid, params)?.max_abs_diff(state))
}
