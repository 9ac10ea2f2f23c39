use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use isoperm::harness::{monte_carlo_risk, run_method, ExperimentConfig, Method};
use isoperm::iso::BoxBound;
use isoperm::reduction::{clique_block_oracle, da_test, sample_null, sample_planted, Hypergraph};
use isoperm::rng::{derive_seed, stream};
use isoperm::synth::Instance;
use isoperm::tensor::{format_value, PermutationTuple, Tensor};
use isoperm::Error;

#[derive(Parser)]
#[command(name = "isoperm", version, about = "Permuted isotonic tensor estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hypothesis {
    Null,
    Planted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceMethod {
    Mp,
    Bc,
    Crl,
    /// Average over the planted clique's blocks (planted runs only).
    Oracle,
    Zero,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a tensor file with one estimator and write the estimate.
    Estimate {
        /// Tensor file, or an instance file (needed for lse-oracle).
        #[arg(long)]
        input: PathBuf,
        /// mp | bc | crl | lse-oracle | lse-brute | passthrough
        #[arg(long, default_value = "mp")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict the fit to [-r, r]; r defaults to max |Y|.
        #[arg(long)]
        bounded: bool,
        #[arg(long)]
        box_radius: Option<f64>,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment described by a config file; writes CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output key; standard output if neither is set.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the detection test on sampled hypergraphs; writes one CSV row per trial.
    Reduce {
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "D")]
        d: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "mp")]
        method: ReduceMethod,
        #[arg(long, value_enum, default_value = "null")]
        hypothesis: Hypothesis,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Use the bounded estimator variant with this radius.
        #[arg(long)]
        box_radius: Option<f64>,
        /// Also write the first sampled hypergraph here.
        #[arg(long)]
        graph_output: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the solvers with exhaustive references on random small inputs.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_in(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

fn estimate(
    input: &Path,
    method: &str,
    seed: u64,
    bounded: bool,
    box_radius: Option<f64>,
    output: Option<&Path>,
) -> Result<(), Error> {
    let method: Method = method.parse()?;
    let text = read_in(input)?;
    let (y, perms): (Tensor, Option<PermutationTuple>) = if text.trim_start().starts_with('{') {
        let inst = Instance::from_text(&text)?;
        (inst.y, Some(inst.true_perms))
    } else {
        (Tensor::from_text(&text)?, None)
    };
    let bound = match (bounded, box_radius) {
        (false, None) => BoxBound::NONE,
        (_, Some(r)) => BoxBound::radius(r)?,
        (true, None) => {
            let r = y.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            BoxBound::radius(r.max(f64::MIN_POSITIVE))?
        }
    };
    let theta = run_method(method, &y, bound, perms.as_ref(), &mut stream(seed, 0))?;
    write_out(output, &theta.to_text())
}

fn simulate(config: &Path, output: Option<&Path>) -> Result<(), Error> {
    let cfg = ExperimentConfig::parse(&read_in(config)?)?;
    let report = monte_carlo_risk(&cfg)?;
    write_out(output.or(cfg.output.as_deref()), &report.to_csv())
}

#[allow(clippy::too_many_arguments)]
fn reduce(
    n: usize,
    d: usize,
    k: usize,
    p: f64,
    seed: u64,
    method: ReduceMethod,
    hypothesis: Hypothesis,
    trials: usize,
    box_radius: Option<f64>,
    graph_output: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), Error> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if matches!((method, hypothesis), (ReduceMethod::Oracle, Hypothesis::Null)) {
        return Err(Error::InvalidParameter("the oracle estimator needs a planted clique".into()));
    }
    let bound = box_radius.map(BoxBound::radius).transpose()?.unwrap_or(BoxBound::NONE);
    let mut out = String::from("trial,hypothesis,statistic,threshold,reject\n");
    let mut rejections = 0;
    for t in 0..trials {
        let s = derive_seed(seed, t as u64);
        let mut graph_rng = stream(s, 0);
        let (g, clique): (Hypergraph, Option<Vec<usize>>) = match hypothesis {
            Hypothesis::Null => (sample_null(n, d, p, &mut graph_rng)?, None),
            Hypothesis::Planted => {
                let pl = sample_planted(n, d, p, k, &mut graph_rng)?;
                (pl.graph, Some(pl.clique))
            }
        };
        if t == 0 {
            if let Some(path) = graph_output {
                write_out(Some(path), &g.to_text())?;
            }
        }
        let mut est_rng = stream(s, 2);
        let estimator = |y: &Tensor| -> isoperm::Result<Tensor> {
            match method {
                ReduceMethod::Mp => run_method(Method::Mp, y, bound, None, &mut est_rng),
                ReduceMethod::Bc => run_method(Method::Bc, y, bound, None, &mut est_rng),
                ReduceMethod::Crl => run_method(Method::Crl, y, bound, None, &mut est_rng),
                ReduceMethod::Oracle => clique_block_oracle(y, clique.as_deref().unwrap_or(&[])),
                ReduceMethod::Zero => Ok(Tensor::zeros(y.shape())),
            }
        };
        let outcome = da_test(&g, k, estimator, &mut stream(s, 1))?;
        rejections += usize::from(outcome.reject);
        out.push_str(&format!(
            "{t},{},{},{},{}\n",
            match hypothesis {
                Hypothesis::Null => "null",
                Hypothesis::Planted => "planted",
            },
            format_value(outcome.statistic),
            format_value(outcome.threshold),
            u8::from(outcome.reject)
        ));
    }
    write_out(output, &out)?;
    if output.is_some() {
        println!("rejection rate {rejections}/{trials}");
    }
    Ok(())
}

fn oracle_check(seed: u64, trials: usize, output: Option<&Path>) -> Result<bool, Error> {
    let results = isoperm::oracle::run_all(seed, trials)?;
    let mut out = String::from("suite,trials,failures,max_error\n");
    for r in &results {
        out.push_str(&format!("{},{},{},{}\n", r.suite, r.trials, r.failures, format_value(r.max_error)));
    }
    write_out(output, &out)?;
    Ok(results.iter().all(|r| r.failures == 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate { input, method, seed, bounded, box_radius, output } => {
            estimate(input, method, *seed, *bounded, *box_radius, output.as_deref()).map(|_| true)
        }
        Command::Simulate { config, output } => simulate(config, output.as_deref()).map(|_| true),
        Command::Reduce { n, d, k, p, seed, method, hypothesis, trials, box_radius, graph_output, output } => reduce(
            *n,
            *d,
            *k,
            *p,
            *seed,
            *method,
            *hypothesis,
            *trials,
            *box_radius,
            graph_output.as_deref(),
            output.as_deref(),
        )
        .map(|_| true),
        Command::OracleCheck { seed, trials, output } => oracle_check(*seed, *trials, output.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: oracle check found mismatches");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SizeCap(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
