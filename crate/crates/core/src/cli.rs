//! Command line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};

use crate::config::{Command, RunConfig};
use crate::convergence::{
    fit_loglog, fit_rate, least_squares_slope, monte_carlo_strong_error_with, noise_error_study,
    write_convergence_csv, write_noise_csv, StudyOptions,
};
use crate::error::{Error, Result};
use crate::fractional::sample_field;
use crate::harmonics::HarmonicCoeffs;
use crate::mesh::icosphere;
use crate::sfem::FemSpace;
use crate::spectral::{quadrature_error_curve, write_quadrature_csv};
use crate::vtk::{write_field_csv_file, write_vtk_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandArg {
    Sample,
    Convergence,
    QuadratureStudy,
    NoiseStudy,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Sample => Command::Sample,
            CommandArg::Convergence => Command::Convergence,
            CommandArg::QuadratureStudy => Command::QuadratureStudy,
            CommandArg::NoiseStudy => Command::NoiseStudy,
        }
    }
}

/// Sample Whittle-Matern random fields on the unit sphere and run
/// convergence studies of the finite element sampler.
#[derive(Debug, Parser)]
#[command(name = "sphere-grf", version)]
pub struct Cli {
    pub command: CommandArg,
    /// Path to a `key = value` run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Number of worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory, overriding `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write mass and stiffness matrices in Matrix Market format.
    #[arg(long)]
    pub export_matrices: bool,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = RunConfig::from_file(&cli.config)?;
    let requested = Command::from(cli.command);
    if cfg.command != requested {
        return Err(Error::Config(format!(
            "config is for `{}` but `{}` was requested",
            cfg.command, requested
        )));
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if cli.workers == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    pool.install(|| execute(&cfg, cli.export_matrices, &mut std::io::stdout()))
}

/// Runs the configured command, writing files under `cfg.output` and
/// summary lines to `log`.
pub fn execute(cfg: &RunConfig, export_matrices: bool, log: &mut dyn Write) -> Result<()> {
    match cfg.command {
        Command::Sample => cmd_sample(cfg, export_matrices, log),
        Command::Convergence => cmd_convergence(cfg, log),
        Command::QuadratureStudy => cmd_quadrature_study(cfg, log),
        Command::NoiseStudy => cmd_noise_study(cfg, log),
    }
}

fn say(log: &mut dyn Write, line: String) -> Result<()> {
    writeln!(log, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_noise_coeffs(path: &Path, c: &HarmonicCoeffs) -> Result<()> {
    let mut w = create(path)?;
    let body = (|| -> std::io::Result<()> {
        writeln!(w, "l,m,value")?;
        for l in 0..=c.degree() {
            for m in -(l as i64)..=(l as i64) {
                writeln!(w, "{l},{m},{:e}", c.get(l, m))?;
            }
        }
        w.flush()
    })();
    body.map_err(|e| Error::io(path, e))
}

/// One VTK and CSV file per `(beta, k, seed, level)`. Sample 0 of each seed
/// is used, so all `beta` values share the same noise draw.
pub fn cmd_sample(cfg: &RunConfig, export_matrices: bool, log: &mut dyn Write) -> Result<()> {
    for &level in &cfg.levels {
        let space = FemSpace::new(Arc::new(icosphere(level)?));
        if export_matrices {
            for (name, m) in [("mass", space.mass()), ("stiffness", space.stiffness())] {
                let path = cfg.output.join(format!("{name}_l{level}.mtx"));
                m.write_matrix_market(create(&path)?)
                    .map_err(|e| Error::io(&path, e))?;
            }
        }
        for &seed in &cfg.seed {
            let mut noise_written = false;
            for &beta in &cfg.beta {
                for &k in &cfg.k {
                    let params = cfg.params(beta, k)?;
                    let s = sample_field(&space, &params, 0, seed)?;
                    if !noise_written {
                        let path = cfg
                            .output
                            .join(format!("noise_s{seed}_L{}.csv", cfg.degree));
                        write_noise_coeffs(&path, &s.noise)?;
                        noise_written = true;
                    }
                    let stem = format!("sample_b{beta}_k{k}_s{seed}_l{level}");
                    let vtk = cfg.output.join(format!("{stem}.vtk"));
                    let title = format!(
                        "beta={beta} kappa={} k={k} L={} seed={seed} level={level}",
                        cfg.kappa, cfg.degree
                    );
                    write_vtk_file(
                        &vtk,
                        space.mesh(),
                        &title,
                        &[("field", s.fem.values()), ("noise", s.noise_field.values())],
                    )?;
                    write_field_csv_file(
                        &cfg.output.join(format!("{stem}.csv")),
                        space.mesh(),
                        s.fem.values(),
                    )?;
                    say(
                        log,
                        format!("{} -> {}", space.mesh().summary(), vtk.display()),
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// One strong error table per `(beta, k, seed)`.
pub fn cmd_convergence(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let options = StudyOptions {
        error_order: cfg.quad_order,
        ..StudyOptions::default()
    };
    for &seed in &cfg.seed {
        for &beta in &cfg.beta {
            for &k in &cfg.k {
                let params = cfg.params(beta, k)?;
                let rows = monte_carlo_strong_error_with(
                    &params,
                    &cfg.levels,
                    cfg.samples,
                    seed,
                    &options,
                )?;
                let path = cfg
                    .output
                    .join(format!("convergence_b{beta}_k{k}_s{seed}.csv"));
                let mut w = create(&path)?;
                write_convergence_csv(&mut w, &params, cfg.samples, &rows)
                    .and_then(|_| w.flush())
                    .map_err(|e| Error::io(&path, e))?;
                let rate = if rows.len() >= 2 {
                    format!("{:.4}", fit_rate(&rows)?)
                } else {
                    "n/a".into()
                };
                let last = rows.last().expect("levels are nonempty");
                say(
                    log,
                    format!(
                        "beta={beta} kappa={} k={k} L={} N={} seed={seed}: fitted rate {rate}, finest error {:.4e} ± {:.1e} -> {}",
                        cfg.kappa,
                        cfg.degree,
                        cfg.samples,
                        last.strong_error,
                        last.standard_error,
                        path.display()
                    ),
                )?;
            }
        }
    }
    Ok(())
}

/// Slope of `ln(error)` against `1/k`.
pub fn exponential_slope(ks: &[f64], errors: &[f64]) -> Result<f64> {
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter(
            "errors must be positive for a log fit".into(),
        ));
    }
    let x: Vec<f64> = ks.iter().map(|k| 1.0 / k).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    least_squares_slope(&x, &y)
}

/// Sinc factor error curve over the `k` list, one file per `beta`.
pub fn cmd_quadrature_study(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    for &beta in &cfg.beta {
        let errors = quadrature_error_curve(beta, cfg.kappa, cfg.degree, &cfg.k)
            .map_err(|e| Error::Config(e.to_string()))?;
        let path = cfg.output.join(format!("quadrature_b{beta}.csv"));
        let mut w = create(&path)?;
        write_quadrature_csv(&mut w, &cfg.k, &errors)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        let slope = match exponential_slope(&cfg.k, &errors) {
            Ok(s) => format!("{s:.4}"),
            Err(_) => "n/a".into(),
        };
        say(
            log,
            format!(
                "beta={beta} kappa={} L={}: slope of log error vs 1/k {slope} -> {}",
                cfg.kappa,
                cfg.degree,
                path.display()
            ),
        )?;
    }
    Ok(())
}

/// Interpolated vs projected noise error per level, one file per seed.
pub fn cmd_noise_study(cfg: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let order = if cfg.quad_order == 1 {
        2
    } else {
        cfg.quad_order
    };
    for &seed in &cfg.seed {
        let rows = noise_error_study(
            cfg.degree,
            &cfg.levels,
            cfg.samples,
            seed,
            order,
            cfg.quad_order,
            &cfg.solver(),
        )?;
        let path = cfg
            .output
            .join(format!("noise_study_L{}_s{seed}.csv", cfg.degree));
        let mut w = create(&path)?;
        write_noise_csv(&mut w, cfg.degree, cfg.samples, &rows)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        let fit = |f: fn(&crate::convergence::NoiseStudyRow) -> f64| -> String {
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h_inball, f(r))).collect();
            fit_loglog(&pairs).map_or("n/a".into(), |s| format!("{s:.4}"))
        };
        say(
            log,
            format!(
                "L={} N={} seed={seed}: interpolation rate {}, projection rate {} -> {}",
                cfg.degree,
                cfg.samples,
                fit(|r| r.interpolation_error),
                fit(|r| r.projection_error),
                path.display()
            ),
        )?;
    }
    Ok(())
}
