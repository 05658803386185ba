//! Run configuration for the command-line harness.
//!
//! The document is strict JSON: unknown keys anywhere are rejected, and
//! every error names the offending field as a dotted path.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Deserialize;

use crate::dynamics::{Direction, PacketSpec};
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::scattering::ContinuumParams;

/// Seed used when neither the config nor the command line gives one.
pub const DEFAULT_SEED: u64 = 0x5eed_2a7e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dispersion,
    Reflection,
    Scatter,
    ModesRoundtrip,
    Continuum,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Reflection => "reflection",
            Command::Scatter => "scatter",
            Command::ModesRoundtrip => "modes-roundtrip",
            Command::Continuum => "continuum",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelBlock {
    n_rays: usize,
    ray_len: usize,
    delta: f64,
    mass: f64,
    center_mass: f64,
}

/// Uniform grid of wave numbers, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl KGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DirectionName {
    TowardJunction,
    AwayFromJunction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketBlock {
    #[serde(default)]
    ray: usize,
    k0: f64,
    center: f64,
    width: f64,
    #[serde(default = "toward")]
    direction: DirectionName,
    /// Steps between time-series samples.
    #[serde(default = "default_trace_every")]
    trace_every: usize,
}

fn toward() -> DirectionName {
    DirectionName::TowardJunction
}

fn default_trace_every() -> usize {
    200
}

/// Sweep of the mode round trip.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripConfig {
    /// Ray counts; defaults to the model's.
    #[serde(default)]
    pub n_rays: Vec<usize>,
    /// Ray lengths; defaults to the model's.
    #[serde(default)]
    pub ray_lens: Vec<usize>,
    /// Quadrature node counts; defaults to `L + 2` and `4L` for each `L`.
    #[serde(default)]
    pub nodes: Vec<usize>,
    /// Random states per `(N, L, P)`.
    #[serde(default = "default_states")]
    pub states: usize,
}

fn default_states() -> usize {
    20
}

impl RoundtripConfig {
    /// Node counts used for ray length `ray_len`.
    pub fn nodes_for(&self, ray_len: usize) -> Vec<usize> {
        if self.nodes.is_empty() {
            vec![ray_len + 2, 4 * ray_len]
        } else {
            self.nodes.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexBlock {
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContinuumBlock {
    #[serde(default = "default_continuum_ks")]
    k: Vec<f64>,
    #[serde(default = "default_k1")]
    k1: ComplexBlock,
    #[serde(default = "default_deltas")]
    deltas: Vec<f64>,
}

fn default_continuum_ks() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_k1() -> ComplexBlock {
    ComplexBlock { re: 0.0, im: 1.0 }
}

fn default_deltas() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

impl Default for ContinuumBlock {
    fn default() -> Self {
        Self {
            k: default_continuum_ks(),
            k1: default_k1(),
            deltas: default_deltas(),
        }
    }
}

/// Validated continuum-limit sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumConfig {
    pub ks: Vec<f64>,
    pub params: ContinuumParams,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputBlock {
    dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelBlock,
    command: Command,
    k_grid: Option<KGrid>,
    packet: Option<PacketBlock>,
    roundtrip: Option<RoundtripConfig>,
    continuum: Option<ContinuumBlock>,
    seed: Option<u64>,
    output: Option<OutputBlock>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: LatticeParams,
    pub command: Command,
    pub k_grid: Option<KGrid>,
    pub packet: Option<PacketSpec>,
    pub trace_every: usize,
    pub roundtrip: RoundtripConfig,
    pub continuum: ContinuumConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let message = e.inner().to_string();
        let mut path = e.path().to_string();
        // name the missing key itself rather than its parent
        if let Some(key) = backticked(&message, "missing field `") {
            path = if path == "." { key } else { format!("{path}.{key}") };
        }
        config_err(path, message)
    })?;
    validate(raw)
}

fn backticked(message: &str, prefix: &str) -> Option<String> {
    let rest = message.strip_prefix(prefix)?;
    Some(rest[..rest.find('`')?].to_string())
}

fn validate(raw: RawConfig) -> Result<RunConfig> {
    let m = &raw.model;
    let model = LatticeParams::new(m.n_rays, m.ray_len, m.delta, m.mass, m.center_mass).map_err(|e| match e {
        Error::InvalidParameter { field, reason } => config_err(format!("model.{field}"), reason),
        other => other,
    })?;
    let delta = model.delta();

    if let Some(grid) = &raw.k_grid {
        let top = PI / delta;
        for (name, k) in [("min", grid.min), ("max", grid.max)] {
            if !(k > 0.0 && k < top) {
                return Err(config_err(
                    format!("k_grid.{name}"),
                    format!("{k} outside (0, pi/delta = {top})"),
                ));
            }
        }
        if grid.min > grid.max {
            return Err(config_err("k_grid.max", "below k_grid.min"));
        }
        if grid.count == 0 {
            return Err(config_err("k_grid.count", "must be at least 1"));
        }
    }
    if matches!(raw.command, Command::Dispersion | Command::Reflection) && raw.k_grid.is_none() {
        return Err(config_err("k_grid", format!("required by `{}`", raw.command.name())));
    }

    let (packet, trace_every) = match &raw.packet {
        Some(p) => {
            let spec = PacketSpec {
                ray: p.ray,
                k0: p.k0,
                center: p.center,
                width: p.width,
                direction: match p.direction {
                    DirectionName::TowardJunction => Direction::TowardJunction,
                    DirectionName::AwayFromJunction => Direction::AwayFromJunction,
                },
            };
            spec.validate(&model).map_err(|e| match e {
                Error::BandEdge { .. } => config_err("packet.k0", e.to_string()),
                Error::PacketPlacement(msg) if msg.starts_with("ray") => config_err("packet.ray", msg),
                Error::PacketPlacement(msg) if msg.starts_with("width") => config_err("packet.width", msg),
                Error::PacketPlacement(msg) => config_err("packet.center", msg),
                other => other,
            })?;
            if raw.command == Command::Scatter && spec.direction != Direction::TowardJunction {
                return Err(config_err("packet.direction", "scatter needs toward_junction"));
            }
            if p.trace_every == 0 {
                return Err(config_err("packet.trace_every", "must be at least 1"));
            }
            (Some(spec), p.trace_every)
        }
        None => (None, default_trace_every()),
    };
    if raw.command == Command::Scatter && packet.is_none() {
        return Err(config_err("packet", "required by `scatter`"));
    }

    let mut roundtrip = raw.roundtrip.unwrap_or(RoundtripConfig {
        n_rays: Vec::new(),
        ray_lens: Vec::new(),
        nodes: Vec::new(),
        states: default_states(),
    });
    if raw.command == Command::ModesRoundtrip {
        if model.center_mass() != 1.0 {
            return Err(config_err("model.center_mass", "modes-roundtrip needs center_mass = 1"));
        }
        if roundtrip.n_rays.is_empty() {
            roundtrip.n_rays.push(model.n_rays());
        }
        if roundtrip.ray_lens.is_empty() {
            roundtrip.ray_lens.push(model.ray_len());
        }
        for (i, &n) in roundtrip.n_rays.iter().enumerate() {
            if n < 3 {
                return Err(config_err(format!("roundtrip.n_rays[{i}]"), format!("{n} < 3")));
            }
        }
        for (i, &l) in roundtrip.ray_lens.iter().enumerate() {
            if l < 2 {
                return Err(config_err(format!("roundtrip.ray_lens[{i}]"), format!("{l} < 2")));
            }
        }
        let longest = roundtrip.ray_lens.iter().copied().max().unwrap_or(0);
        for (i, &p) in roundtrip.nodes.iter().enumerate() {
            if p < longest + 2 {
                return Err(config_err(
                    format!("roundtrip.nodes[{i}]"),
                    format!("{p} nodes, at least {} required", longest + 2),
                ));
            }
        }
        if roundtrip.states == 0 {
            return Err(config_err("roundtrip.states", "must be at least 1"));
        }
    }

    let block = raw.continuum.unwrap_or_default();
    let k1 = Complex64::new(block.k1.re, block.k1.im);
    let params = ContinuumParams::new(k1).map_err(|e| config_err("continuum.k1", e.to_string()))?;
    for (i, &k) in block.k.iter().enumerate() {
        if !(k.is_finite() && k > 0.0) || (Complex64::new(k, 0.0) + k1).norm() == 0.0 {
            return Err(config_err(
                format!("continuum.k[{i}]"),
                format!("{k} is not a positive wave number off the pole"),
            ));
        }
    }
    if block.k.is_empty() {
        return Err(config_err("continuum.k", "empty"));
    }
    if block.deltas.len() < 2 {
        return Err(config_err(
            "continuum.deltas",
            "at least two spacings needed for an order fit",
        ));
    }
    for (i, &d) in block.deltas.iter().enumerate() {
        if !(d.is_finite() && d > 0.0) {
            return Err(config_err(format!("continuum.deltas[{i}]"), format!("{d} is not > 0")));
        }
    }
    let continuum = ContinuumConfig {
        ks: block.k,
        params,
        deltas: block.deltas,
    };

    Ok(RunConfig {
        model,
        command: raw.command,
        k_grid: raw.k_grid,
        packet,
        trace_every,
        roundtrip,
        continuum,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        output_dir: raw.output.map_or_else(|| PathBuf::from("."), |o| o.dir),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#""model":{"n_rays":3,"ray_len":100,"delta":1.0,"mass":0.0,"center_mass":1.0}"#;

    fn path_of(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_dispersion_config() {
        let c = parse_config(&format!(
            r#"{{{MODEL},"command":"dispersion","k_grid":{{"min":0.1,"max":3.0,"count":64}}}}"#
        ))
        .unwrap();
        assert_eq!(c.command, Command::Dispersion);
        assert_eq!(c.model.n_rays(), 3);
        let ks = c.k_grid.unwrap().points();
        assert_eq!(ks.len(), 64);
        assert_eq!(ks[0], 0.1);
        assert!((ks[63] - 3.0).abs() < 1e-15);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.output_dir, PathBuf::from("."));
    }

    #[test]
    fn field_paths() {
        assert_eq!(path_of(r#"{"command":"verify"}"#), "model");
        assert_eq!(
            path_of(
                r#"{"model":{"n_rays":1,"ray_len":100,"delta":1.0,"mass":0.0,"center_mass":1.0},"command":"verify"}"#
            ),
            "model.n_rays"
        );
        assert_eq!(
            path_of(
                r#"{"model":{"n_rays":3,"ray_len":100,"delta":-1.0,"mass":0.0,"center_mass":1.0},"command":"verify"}"#
            ),
            "model.delta"
        );
        assert_eq!(
            path_of(
                r#"{"model":{"n_rays":"3","ray_len":100,"delta":1.0,"mass":0.0,"center_mass":1.0},"command":"verify"}"#
            ),
            "model.n_rays"
        );
        assert_eq!(
            path_of(r#"{"model":{"n_rays":3,"ray_len":100,"delta":1.0,"mass":0.0},"command":"verify"}"#),
            "model.center_mass"
        );
        assert_eq!(
            path_of(&format!(r#"{{{MODEL},"command":"verify","colour":1}}"#)),
            "colour"
        );
        assert_eq!(
            path_of(&format!(
                r#"{{{MODEL},"command":"dispersion","k_grid":{{"min":0.1,"max":3.0,"count":4,"step":1}}}}"#
            )),
            "k_grid.step"
        );
        assert_eq!(path_of(&format!(r#"{{{MODEL},"command":"plot"}}"#)), "command");
        assert_eq!(path_of(&format!(r#"{{{MODEL},"command":"dispersion"}}"#)), "k_grid");
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_config("{\"model\": "), Err(Error::Config { .. })));
        assert!(matches!(parse_config("[1, 2]"), Err(Error::Config { .. })));
    }

    #[test]
    fn k_grid_must_stay_inside_the_band() {
        let grid = |min: f64, max: f64| {
            format!(r#"{{{MODEL},"command":"reflection","k_grid":{{"min":{min},"max":{max},"count":8}}}}"#)
        };
        assert_eq!(path_of(&grid(0.0, 1.0)), "k_grid.min");
        assert_eq!(path_of(&grid(0.1, 3.2)), "k_grid.max");
        assert_eq!(path_of(&grid(2.0, 1.0)), "k_grid.max");
        assert!(parse_config(&grid(0.1, 3.1)).is_ok());
        let half = r#"{"model":{"n_rays":3,"ray_len":100,"delta":0.5,"mass":0.0,"center_mass":1.0},"command":"reflection","k_grid":{"min":0.1,"max":6.0,"count":8}}"#;
        assert!(parse_config(half).is_ok());
    }

    #[test]
    fn packet_block() {
        let cfg = |body: &str| format!(r#"{{{MODEL},"command":"scatter","packet":{{{body}}}}}"#);
        let c = parse_config(&cfg(r#""k0":1.5,"center":40,"width":6"#)).unwrap();
        let p = c.packet.unwrap();
        assert_eq!((p.ray, p.direction), (0, Direction::TowardJunction));
        assert_eq!(c.trace_every, 200);
        assert_eq!(path_of(&cfg(r#""k0":3.5,"center":40,"width":6"#)), "packet.k0");
        assert_eq!(path_of(&cfg(r#""k0":1.5,"center":10,"width":6"#)), "packet.center");
        assert_eq!(path_of(&cfg(r#""k0":1.5,"center":40,"width":2"#)), "packet.width");
        assert_eq!(path_of(&cfg(r#""ray":3,"k0":1.5,"center":40,"width":6"#)), "packet.ray");
        assert_eq!(
            path_of(&cfg(
                r#""k0":1.5,"center":40,"width":6,"direction":"away_from_junction"#
            )),
            "packet.direction"
        );
        assert_eq!(path_of(&format!(r#"{{{MODEL},"command":"scatter"}}"#)), "packet");
    }

    #[test]
    fn roundtrip_block() {
        let c = parse_config(&format!(r#"{{{MODEL},"command":"modes-roundtrip"}}"#)).unwrap();
        assert_eq!(c.roundtrip.n_rays, vec![3]);
        assert_eq!(c.roundtrip.ray_lens, vec![100]);
        assert_eq!(c.roundtrip.nodes_for(16), vec![18, 64]);
        let heavy = r#"{"model":{"n_rays":3,"ray_len":10,"delta":1.0,"mass":0.0,"center_mass":2.0},"command":"modes-roundtrip"}"#;
        assert_eq!(path_of(heavy), "model.center_mass");
        assert_eq!(
            path_of(&format!(
                r#"{{{MODEL},"command":"modes-roundtrip","roundtrip":{{"ray_lens":[16],"nodes":[10]}}}}"#
            )),
            "roundtrip.nodes[0]"
        );
        assert_eq!(
            path_of(&format!(
                r#"{{{MODEL},"command":"modes-roundtrip","roundtrip":{{"n_rays":[3,2]}}}}"#
            )),
            "roundtrip.n_rays[1]"
        );
    }

    #[test]
    fn continuum_block() {
        let c = parse_config(&format!(r#"{{{MODEL},"command":"continuum"}}"#)).unwrap();
        assert_eq!(c.continuum.deltas, vec![1e-1, 1e-2, 1e-3, 1e-4]);
        assert_eq!(c.continuum.params.k1(), Complex64::new(0.0, 1.0));
        let bad = |body: &str| path_of(&format!(r#"{{{MODEL},"command":"continuum","continuum":{{{body}}}}}"#));
        assert_eq!(bad(r#""k1":{"re":0,"im":0}"#), "continuum.k1");
        assert_eq!(bad(r#""deltas":[0.1]"#), "continuum.deltas");
        assert_eq!(bad(r#""deltas":[0.1,-1]"#), "continuum.deltas[1]");
        assert_eq!(bad(r#""k":[1.0,-2]"#), "continuum.k[1]");
        assert_eq!(bad(r#""k":[1.0],"k1":{"re":-1,"im":0}"#), "continuum.k[0]");
    }

    #[test]
    fn seed_and_output() {
        let c = parse_config(&format!(
            r#"{{{MODEL},"command":"verify","seed":7,"output":{{"dir":"out"}}}}"#
        ))
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }
}
