use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use crhmc::bench::{run_bench, Family};
use crhmc::chains::run_chains;
use crhmc::diagnostics::{empirical_cdf, ess, ks_statistic, radial_statistic, uniformity_radii, MixingRow};
use crhmc::io::{self, IoError};
use crhmc_core::preprocess::simplify;
use crhmc_core::{PolytopeModel, SamplerConfig};

#[derive(Parser)]
#[command(name = "crhmc", version, about = "Constrained Riemannian HMC sampling on polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Hypercube,
    Simplex,
    Birkhoff,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Char,
}

#[derive(Subcommand)]
enum Command {
    /// Simplify a model and write it with its transform record.
    Preprocess {
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Print sizes before and after.
        #[arg(long)]
        report: bool,
    },
    /// Draw samples and write them in the original coordinates.
    Sample {
        model: PathBuf,
        /// Number of recorded samples over all chains.
        #[arg(short = 'n', long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial step size.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[arg(long)]
        record_every: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// ESS and optional uniformity test for a sample file.
    Diagnose {
        samples: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        uniformity: bool,
        /// Write empirical CDF points of the radial statistic here.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Steps per effective sample across a family of polytopes.
    Bench {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Comma-separated dimensions (matrix side for birkhoff).
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the table as CSV here.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let core = cause
            .downcast_ref::<crhmc_core::Error>()
            .or_else(|| match cause.downcast_ref::<IoError>() {
                Some(IoError::Model(e)) => Some(e),
                _ => None,
            });
        match core {
            Some(crhmc_core::Error::ModelInfeasible(_)) => return 2,
            Some(crhmc_core::Error::NumericalFailure(_) | crhmc_core::Error::NotPositiveDefinite { .. }) => {
                return 3
            }
            Some(_) => return 1,
            None => {}
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Preprocess { model, output, report } => preprocess(&model, &output, report),
        Command::Sample {
            model,
            count,
            seed,
            h,
            chains,
            record_every,
            output,
        } => {
            let mut config = SamplerConfig {
                seed,
                ..SamplerConfig::default()
            };
            if let Some(h) = h {
                config.h_init = h;
                config.h_floor = config.h_floor.min(h);
            }
            if let Some(r) = record_every {
                config.record_every = r;
            }
            sample(&model, count, chains, &config, &output)
        }
        Command::Diagnose {
            samples,
            model,
            uniformity,
            plot_data,
        } => diagnose(&samples, &model, uniformity, plot_data.as_deref()),
        Command::Bench {
            family,
            dims,
            baseline,
            samples,
            seed,
            plot_data,
        } => {
            let family = match family {
                FamilyArg::Hypercube => Family::Hypercube,
                FamilyArg::Simplex => Family::Simplex,
                FamilyArg::Birkhoff => Family::Birkhoff,
            };
            let config = SamplerConfig {
                seed,
                ..SamplerConfig::default()
            };
            let report = run_bench(family, &dims, &config, samples, baseline.is_some())?;
            println!("crhmc");
            print!("{}", report.crhmc.to_table());
            let mut rows = report.crhmc.rows.clone();
            if let Some(char_report) = &report.char_baseline {
                println!("coordinate hit-and-run");
                print!("{}", char_report.to_table());
                rows.extend(char_report.rows.iter().cloned());
            }
            if let Some(path) = plot_data {
                write_rows(&rows, &path)?;
            }
            Ok(())
        }
    }
}

fn sizes(model: &PolytopeModel) -> String {
    format!(
        "n = {}, m = {}, nnz = {}, full dimension = {}",
        model.n(),
        model.m(),
        model.nnz(),
        model.full_dimension()
    )
}

fn preprocess(input: &Path, output: &Path, report: bool) -> anyhow::Result<()> {
    let model = io::load_model(input)?;
    let simplified = simplify(&model).context("simplifying model")?;
    io::save_simplified(&simplified, output)?;
    if report {
        println!("before: {}", sizes(&model));
        println!("after:  {}", sizes(&simplified.model));
        println!("transform steps: {}", simplified.record.steps.len());
    }
    Ok(())
}

fn sample(input: &Path, count: usize, chains: usize, config: &SamplerConfig, output: &Path) -> anyhow::Result<()> {
    if chains == 0 {
        bail!("--chains must be positive");
    }
    let model = io::load_model(input)?;
    let prepared = simplify(&model).context("simplifying model")?;
    let batches = run_chains(&prepared, config, count, chains).context("sampling")?;
    io::save_batches(&batches, model.n(), output)?;
    for b in &batches {
        let s = &b.stats;
        println!(
            "chain {}: samples {}, steps {}, accepted {}, rejected {}, nonconverged {}, post-warm-up acceptance {:.3}, step size {:.4}, mean fixed-point iterations {:.2}, seconds/step {:.3e}",
            b.chain_index,
            b.samples.len(),
            s.steps_total,
            s.accepts,
            s.rejects,
            s.nonconverged_imm,
            s.post_warmup_acceptance(),
            s.step_size,
            s.mean_fixed_point_iters,
            s.wall_time_per_step
        );
    }
    Ok(())
}

fn diagnose(samples_path: &Path, model_path: &Path, uniformity: bool, plot: Option<&Path>) -> anyhow::Result<()> {
    let model = io::load_model(model_path)?;
    let (samples, n) = io::load_samples(samples_path)?;
    if n != model.n() {
        bail!("sample file has {n} columns but the model has {} variables", model.n());
    }
    let report = ess(&samples).context("computing ESS")?;
    println!("samples: {}", samples.len());
    println!("min ESS: {:.1}", report.min_ess);
    for (j, (e, c)) in report.ess.iter().zip(&report.constant).enumerate() {
        println!("  x{j}: ESS {e:.1}{}", if *c { " (constant)" } else { "" });
    }
    let sidecar = io::sidecar_path(samples_path);
    if sidecar.exists() {
        let stats = io::load_sidecar(&sidecar)?;
        let row = MixingRow::new(
            "samples",
            model.n(),
            model.nnz(),
            stats.sampling_steps(),
            stats.sampling_seconds(),
            report.min_ess,
        );
        println!("steps per ESS: {:.3}", row.steps_per_ess);
        println!("seconds per ESS: {:.3e}", row.seconds_per_ess);
    }
    if report.min_ess < 10.0 {
        eprintln!("warning: ESS below 10, estimates are unreliable");
    }
    if uniformity {
        let simplified = simplify(&model).context("simplifying model")?;
        let center = simplified.record.lift(&simplified.center)?;
        let dim = simplified.model.full_dimension();
        let radii = uniformity_radii(&samples, &model, &center)?;
        let u = radial_statistic(&radii, dim);
        println!("uniformity KS statistic (r^{dim}): {:.4}", ks_statistic(&u));
        if let Some(path) = plot {
            let mut w = csv::Writer::from_path(path).with_context(|| format!("{}", path.display()))?;
            w.write_record(["value", "cdf"])?;
            for (x, p) in empirical_cdf(&u) {
                w.write_record([x.to_string(), p.to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn write_rows(rows: &[MixingRow], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("{}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
