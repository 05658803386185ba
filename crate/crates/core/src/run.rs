//! Command dispatch for the harness: every command writes CSV tables into
//! the output directory and returns a short text report.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, RunConfig};
use crate::error::Result;
use crate::inversion::{kernel_report_for_state, roundtrip, roundtrip_f64, Component};
use crate::lattice::{dispersion, LatticeParams, StarState};
use crate::scattering::{
    continuum_limit_check, convergence_order, measure_reflection_traced, reflection_closed_n3, reflection_exact,
    Reflection,
};
use crate::verify::run_suite;

/// Result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: String,
    /// False only when `verify` found a failing invariant.
    pub verified: bool,
}

/// Fixed 17-significant-digit rendering used in every table.
pub fn fmt_float(x: f64) -> String {
    // adding zero folds -0.0 into 0.0
    format!("{:.16e}", x + 0.0)
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Executes `config`, writing into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    fs::create_dir_all(out_dir)?;
    match config.command {
        Command::Dispersion => run_dispersion(config, out_dir),
        Command::Reflection => run_reflection(config, out_dir),
        Command::Scatter => run_scatter(config, out_dir),
        Command::ModesRoundtrip => run_modes(config, out_dir),
        Command::Continuum => run_continuum(config, out_dir),
        Command::Verify => run_verify(config, out_dir),
    }
}

fn done(files: Vec<PathBuf>, report: String) -> Result<Outcome> {
    Ok(Outcome {
        files,
        report,
        verified: true,
    })
}

fn k_grid(config: &RunConfig) -> Vec<f64> {
    config.k_grid.map(|g| g.points()).unwrap_or_default()
}

fn run_dispersion(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let mut t = Table::create(dir, "dispersion.csv", &header(&["k", "omega"]))?;
    let ks = k_grid(config);
    for &k in &ks {
        t.row(&[fmt_float(k), fmt_float(dispersion(k, &config.model))])?;
    }
    let path = t.finish()?;
    done(vec![path], format!("dispersion: {} rows\n", ks.len()))
}

fn reflection_fields(r: &Reflection, n_rays: usize) -> [String; 5] {
    [
        fmt_float(r.r.re),
        fmt_float(r.r.im),
        fmt_float(r.r.norm_sqr()),
        fmt_float(r.theta()),
        fmt_float(r.unitarity_residual(n_rays)),
    ]
}

fn run_reflection(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let p = &config.model;
    let names = [
        "k",
        "re_r",
        "im_r",
        "abs_r2",
        "theta",
        "unitarity_residual",
        "closed_re_r",
        "closed_im_r",
        "closed_abs_r2",
        "closed_theta",
        "closed_unitarity_residual",
    ];
    let mut t = Table::create(dir, "reflection.csv", &header(&names))?;
    let mut worst: f64 = 0.0;
    let ks = k_grid(config);
    for &k in &ks {
        let exact = reflection_exact(k, p)?;
        worst = worst.max(exact.unitarity_residual(p.n_rays()));
        let mut row = vec![fmt_float(k)];
        row.extend(reflection_fields(&exact, p.n_rays()));
        // the closed form exists for three rays only
        if p.n_rays() == 3 {
            row.extend(reflection_fields(
                &reflection_closed_n3(k, p.center_mass(), p.delta())?,
                3,
            ));
        } else {
            row.extend(std::iter::repeat_n(String::new(), 5));
        }
        t.row(&row)?;
    }
    let path = t.finish()?;
    done(
        vec![path],
        format!("reflection: {} rows, max unitarity residual {worst:e}\n", ks.len()),
    )
}

fn run_scatter(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let p = &config.model;
    let spec = config.packet.expect("validated config carries a packet");
    let (m, trace) = measure_reflection_traced(&spec, p, config.trace_every)?;

    let mut t = Table::create(
        dir,
        "scatter.csv",
        &header(&["k0", "r_analytic_abs", "r_measured_abs", "t_measured_abs", "rel_err"]),
    )?;
    t.row(&[
        fmt_float(m.k0),
        fmt_float(m.analytic.r.norm()),
        fmt_float(m.r_abs()),
        fmt_float(m.t_abs()),
        fmt_float(m.r_rel_err()),
    ])?;
    let summary = t.finish()?;

    let mut names = vec!["t".to_string(), "energy".to_string()];
    names.extend((0..p.n_rays()).map(|j| format!("centroid_{j}")));
    let mut ts = Table::create(dir, "scatter_timeseries.csv", &names)?;
    for point in &trace {
        let mut row = vec![fmt_float(point.t), fmt_float(point.energy)];
        row.extend(point.centroids.iter().map(|&c| fmt_float(c)));
        ts.row(&row)?;
    }
    let series = ts.finish()?;

    let report = format!(
        "scatter: |R| measured {:.6} analytic {:.6} (rel err {:.3e}), |T| {:.6}, \
         ray asymmetry {:.3e}, energy drift {:.3e}, steps {}\n",
        m.r_abs(),
        m.analytic.r.norm(),
        m.r_rel_err(),
        m.t_abs(),
        m.ray_asymmetry,
        m.energy_drift,
        m.steps
    );
    done(vec![summary, series], report)
}

fn run_modes(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let rt = &config.roundtrip;
    let mut errors = Table::create(
        dir,
        "modes_roundtrip.csv",
        &header(&["n_rays", "ray_len", "nodes", "states", "max_error", "max_error_f64"]),
    )?;
    let mut kernel = Table::create(
        dir,
        "modes_kernel.csv",
        &header(&[
            "n_rays",
            "ray_len",
            "nodes",
            "max_q",
            "max_abs_diff_kernel_vs_triangular",
        ]),
    )?;
    let mut report = String::from("n_rays ray_len nodes max_error max_error_f64 kernel_diff\n");
    let mut stream = 0u64;
    for &n in &rt.n_rays {
        for &l in &rt.ray_lens {
            let p = LatticeParams::new(n, l, config.model.delta(), config.model.mass(), 1.0)?;
            for nodes in rt.nodes_for(l) {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(stream));
                stream += 1;
                let (mut err, mut err64, mut diff, mut qmax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
                for _ in 0..rt.states {
                    let s = StarState::random_compact(&p, l, &mut rng);
                    err = err.max(roundtrip(&s, &p, nodes)?);
                    err64 = err64.max(roundtrip_f64(&s, &p, nodes)?);
                    let k = kernel_report_for_state(&s, &p, nodes, Component::Displacement)?;
                    diff = diff.max(k.max_abs_diff);
                    qmax = k.q_triangular.iter().fold(qmax, |a, q| a.max(q.abs()));
                }
                errors.row(&[
                    n.to_string(),
                    l.to_string(),
                    nodes.to_string(),
                    rt.states.to_string(),
                    fmt_float(err),
                    fmt_float(err64),
                ])?;
                kernel.row(&[
                    n.to_string(),
                    l.to_string(),
                    nodes.to_string(),
                    fmt_float(qmax),
                    fmt_float(diff),
                ])?;
                report.push_str(&format!("{n} {l} {nodes} {err:.3e} {err64:.3e} {diff:.3e}\n"));
            }
        }
    }
    done(vec![errors.finish()?, kernel.finish()?], report)
}

fn run_continuum(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let c = &config.continuum;
    let mut t = Table::create(
        dir,
        "continuum.csv",
        &header(&["k", "delta", "abs_phase_diff", "fitted_order"]),
    )?;
    let mut report = String::new();
    for &k in &c.ks {
        let errs = continuum_limit_check(k, &c.params, &c.deltas);
        let order = convergence_order(&c.deltas, &errs);
        for (d, e) in c.deltas.iter().zip(&errs) {
            t.row(&[fmt_float(k), fmt_float(*d), fmt_float(*e), fmt_float(order)])?;
        }
        report.push_str(&format!("continuum: k = {k}, fitted order {order:.4}\n"));
    }
    done(vec![t.finish()?], report)
}

fn run_verify(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let checks = run_suite(config.seed);
    let mut report = String::new();
    for c in &checks {
        report.push_str(&c.to_string());
        report.push('\n');
    }
    let verified = checks.iter().all(|c| c.passed);
    let path = dir.join("verify.txt");
    fs::write(&path, &report)?;
    Ok(Outcome {
        files: vec![path],
        report,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-1.0 / 3.0), "-3.3333333333333331e-1");
        assert_eq!(fmt_float(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
