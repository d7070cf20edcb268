use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cycle_census::ensembles::{
    self, clt_csv, moments_csv, plot_script, records_jsonl, run_clt, run_slln, run_theorem_a, run_theorem_b_tail,
    running_means_csv, tail_csv, write_atomic, CltOptions, ExperimentConfig, ExperimentKind,
};
use cycle_census::family::{FamilySpec, SequenceSpec};
use cycle_census::field::Ellipsoid;
use cycle_census::io::{parse_experiment_config, parse_family_spec, parse_field_json, parse_thresholds};
use cycle_census::poincare::count_limit_cycles;
use cycle_census::random_poly::{angles_csv, counts_csv, kac_experiment, uniformity_test};
use cycle_census::sampling::sample_rng;
use cycle_census::verify::{run_criterion, VerifyOptions, ALL_CRITERIA};

const DEFAULT_OUT: &str = "cycle-census-out";

#[derive(Parser, Debug)]
#[command(name = "cycle-census", version, about = "Limit cycle and zero-count experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed; every sample derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "CYCLE_CENSUS_THREADS")]
    threads: Option<usize>,
    /// JSON experiment config; inline flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw fields uniformly from E(1, N) and write them as JSONL.
    SampleFields(ExpArgs),
    /// Count limit cycles of one field and print the result as JSON.
    CountCycles(CountArgs),
    /// Cycle counts of random fields: tails, moments and decay fit.
    TheoremA(ExpArgs),
    /// Zero-count tail of one parametric family.
    Tail(ExpArgs),
    /// Running means of zero counts along a family sequence.
    Slln(ExpArgs),
    /// Normalized sums of zero counts against the normal law.
    Clt(ExpArgs),
    /// Annulus concentration of Kac polynomial roots.
    Kac(ExpArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default, Clone)]
struct ExpArgs {
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long = "budget-N")]
    budget_n: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Tail thresholds, e.g. `0-10` or `1,2,4,8`.
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Cycles are counted on (0, K].
    #[arg(long = "K")]
    cycle_radius: Option<f64>,
    /// Sequence length for slln and clt.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// JSON file with a family spec.
    #[arg(long)]
    family: Option<PathBuf>,
    /// JSON file with a sequence spec.
    #[arg(long)]
    sequence: Option<PathBuf>,
    /// Record per-sample wall time (output then varies between runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct CountArgs {
    /// JSON file with one field `{degree, a, b}`.
    #[arg(long)]
    field: PathBuf,
    #[arg(long = "K", default_value_t = 0.5)]
    cycle_radius: f64,
    #[arg(long = "budget-N")]
    budget_n: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Criteria to run, e.g. `1,3-5`; default all.
    #[arg(long)]
    criteria: Option<String>,
    /// Sample count of criterion 6.
    #[arg(long)]
    theorem_a_samples: Option<usize>,
}

enum Failure {
    Usage(String),
    Experiment(anyhow::Error),
    Verification(usize),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Experiment(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Experiment(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(n)) => {
            eprintln!("{n} criteria failed");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Experiment(e.into()))?;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match &cli.command {
        Command::CountCycles(args) => count_cycles(&cli, args),
        Command::Verify(args) => verify(&cli, &out, args),
        Command::SampleFields(args) => {
            let cfg = effective_config(&cli, args, ExperimentKind::TheoremA)?;
            sample_fields(&cfg, &out)
        }
        Command::TheoremA(args) => {
            let cfg = effective_config(&cli, args, ExperimentKind::TheoremA)?;
            theorem_a(&cfg, &out)
        }
        Command::Tail(args) => {
            let cfg = effective_config(&cli, args, ExperimentKind::TheoremBTail)?;
            tail(&cfg, &out)
        }
        Command::Slln(args) => {
            let cfg = effective_config(&cli, args, ExperimentKind::Slln)?;
            slln(&cfg, &out)
        }
        Command::Clt(args) => {
            let cfg = effective_config(&cli, args, ExperimentKind::Clt)?;
            clt(&cfg, &out)
        }
        Command::Kac(args) => {
            let cfg = effective_config(&cli, args, ExperimentKind::Kac)?;
            kac(&cfg, &out)
        }
    }
}

/// Prints a line, ignoring a closed stdout.
fn emit(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// Config file values overridden by inline flags, then validated.
fn effective_config(cli: &Cli, args: &ExpArgs, kind: ExperimentKind) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => parse_experiment_config(&read(path)?)
            .map_err(|e| usage(format!("--config {}: {e}; expected an ExperimentConfig object", path.display())))?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = args.degree {
        cfg.degree = d;
    }
    if args.budget_n.is_some() {
        cfg.budget = args.budget_n;
    }
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    if let Some(t) = &args.thresholds {
        cfg.thresholds = parse_thresholds(t).map_err(|e| usage(format!("--thresholds: {e}; expected e.g. 0-10 or 1,2,4")))?;
    }
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(k) = args.cycle_radius {
        cfg.cycle_radius = k;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    if let Some(path) = &args.family {
        cfg.family = Some(
            parse_family_spec(&read(path)?)
                .map_err(|e| usage(format!("--family {}: {e}; expected a family spec object", path.display())))?,
        );
    }
    if let Some(path) = &args.sequence {
        let text = read(path)?;
        cfg.sequence = Some(
            serde_json::from_str::<SequenceSpec>(&text)
                .map_err(|e| usage(format!("--sequence {}: {e}; expected a sequence spec object", path.display())))?,
        );
    }
    cfg.record_timing |= args.timing;
    match kind {
        ExperimentKind::TheoremBTail if cfg.family.is_none() => {
            cfg.family = Some(FamilySpec::Bernoulli { s: 0.5, p: 0.5 });
        }
        ExperimentKind::Slln | ExperimentKind::Clt if cfg.sequence.is_none() => {
            cfg.sequence = Some(SequenceSpec::Hyperplane { c: 0.5, period: 4, s: 0.5 });
        }
        _ => {}
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn write(out: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    write_atomic(&out.join(name), contents.as_bytes()).map_err(|e| Failure::Experiment(e.into()))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).context("serializing output")?;
    text.push('\n');
    write(out, name, &text)
}

fn sample_fields(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let ell = Ellipsoid::new(1.0, cfg.budget(), cfg.degree).context("building the ellipsoid")?;
    let mut text = String::new();
    for i in 0..cfg.samples {
        let field = ell.sample(&mut sample_rng(cfg.seed, i as u64));
        text.push_str(&serde_json::to_string(&field).context("serializing a field")?);
        text.push('\n');
    }
    write_json(out, "effective-config.json", cfg)?;
    write(out, "fields.jsonl", &text)
}

fn count_cycles(cli: &Cli, args: &CountArgs) -> Result<(), Failure> {
    let text = read(&args.field)?;
    let field = parse_field_json(&text)
        .map_err(|e| usage(format!("--field {}: {e}; expected {{\"degree\", \"a\", \"b\"}}", args.field.display())))?;
    let budget = args.budget_n.unwrap_or_else(|| cycle_census::default_budget(field.degree()));
    let cfg = match &cli.config {
        Some(path) => {
            parse_experiment_config(&read(path)?)
                .map_err(|e| usage(format!("--config {}: {e}; expected an ExperimentConfig object", path.display())))?
                .solver
        }
        None => ExperimentConfig::default().solver,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let count = count_limit_cycles(&field, args.cycle_radius, budget, &cfg).context("counting cycles")?;
    let json = serde_json::to_string_pretty(&count).context("serializing the count")?;
    emit(&json);
    if let Some(out) = &cli.out {
        write(out, "count.json", &(json + "\n"))?;
    }
    Ok(())
}

fn theorem_a(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let report = run_theorem_a(cfg).context("theorem-a run")?;
    write_json(out, "effective-config.json", cfg)?;
    write(out, "samples.jsonl", &records_jsonl(&report.records))?;
    write(out, "tail-complex.csv", &tail_csv(&report.complex_tail))?;
    write(out, "tail-real.csv", &tail_csv(&report.real_tail))?;
    let moments: Vec<(usize, f64, f64)> = report
        .complex_stats
        .iter()
        .map(|s| (cfg.degree, s.expectation, s.variance))
        .collect();
    write(out, "moments.csv", &moments_csv(&moments))?;
    write(
        out,
        "plot.gp",
        &plot_script(&[("tail-complex.csv", "P(count >= T)"), ("tail-real.csv", "P(cycles >= T)")]),
    )?;
    write_json(
        out,
        "summary.json",
        &serde_json::json!({
            "complex_tail": report.complex_tail,
            "real_tail": report.real_tail,
            "complex_stats": report.complex_stats,
            "real_stats": report.real_stats,
            "zero_cycle_fraction": report.zero_cycle_fraction,
            "failures": report.failures,
        }),
    )
}

fn tail(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let (records, table, stats) = run_theorem_b_tail(cfg).context("tail run")?;
    write_json(out, "effective-config.json", cfg)?;
    write(out, "samples.jsonl", &records_jsonl(&records))?;
    write(out, "tail.csv", &tail_csv(&table))?;
    write(out, "plot.gp", &plot_script(&[("tail.csv", "P(count >= T)")]))?;
    write_json(out, "summary.json", &serde_json::json!({ "tail": table, "stats": stats }))
}

fn slln(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let spec = cfg.sequence.as_ref().expect("validated");
    let report = run_slln(spec, cfg.n, cfg.seed).context("slln run")?;
    write_json(out, "effective-config.json", cfg)?;
    write(out, "running-means.csv", &running_means_csv(&report))?;
    write(out, "plot.gp", &plot_script(&[("running-means.csv", "running mean")]))?;
    write_json(
        out,
        "summary.json",
        &serde_json::json!({
            "limit": report.running_means.last(),
            "standard_error": report.standard_error,
            "last_quarter_range": report.last_quarter_range,
            "stabilized": report.stabilized,
            "envelope_constant": report.envelope_constant,
            "excluded": report.excluded,
        }),
    )
}

fn clt(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let spec = cfg.sequence.as_ref().expect("validated");
    let opts = CltOptions {
        n: cfg.n,
        repetitions: cfg.repetitions,
        seed: cfg.seed,
        calibration_draws: ensembles::CLT_CALIBRATION_DRAWS,
        delta: cfg.delta,
        s_prime: cfg.s_prime,
    };
    let report = run_clt(spec, &opts).context("clt run")?;
    write_json(out, "effective-config.json", cfg)?;
    write(out, "clt.csv", &clt_csv(&report))?;
    let moments: Vec<(usize, f64, f64)> = report.moments.iter().enumerate().map(|(j, m)| (j + 1, m.0, m.1)).collect();
    write(out, "moments.csv", &moments_csv(&moments))?;
    write(out, "plot.gp", &plot_script(&[("clt.csv", "normalized sum")]))?;
    write_json(
        out,
        "summary.json",
        &serde_json::json!({
            "n": report.n,
            "b_n": report.b_n,
            "ks_vs_normal": report.ks_vs_normal,
            "ks_p_value": report.ks_p_value,
            "separation": report.separation,
            "excluded_draws": report.excluded_draws,
        }),
    )
}

fn kac(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let report = kac_experiment(cfg.k, cfg.samples, cfg.epsilon, cfg.seed).context("kac run")?;
    let (d, p) = uniformity_test(&report.pooled_arguments());
    write_json(out, "effective-config.json", cfg)?;
    write(out, "counts.csv", &counts_csv(&report))?;
    write(out, "angles.csv", &angles_csv(&report))?;
    write_json(
        out,
        "summary.json",
        &serde_json::json!({
            "k": report.k,
            "epsilon": report.epsilon,
            "mean_fraction": report.mean_fraction,
            "fraction_standard_error": report.fraction_standard_error,
            "ks_uniform": d,
            "ks_p_value": p,
        }),
    )
}

fn verify(cli: &Cli, out: &Path, args: &VerifyArgs) -> Result<(), Failure> {
    let ids: Vec<u8> = match &args.criteria {
        Some(text) => {
            let parsed = parse_thresholds(text).map_err(|e| usage(format!("--criteria: {e}; expected e.g. 1,3-5")))?;
            let mut ids = Vec::with_capacity(parsed.len());
            for id in parsed {
                match u8::try_from(id) {
                    Ok(id) if ALL_CRITERIA.contains(&id) => ids.push(id),
                    _ => return Err(usage(format!("--criteria: no criterion {id}; expected 1-11"))),
                }
            }
            ids
        }
        None => ALL_CRITERIA.to_vec(),
    };
    let mut opts = VerifyOptions::default();
    if let Some(seed) = cli.seed {
        opts.seed = seed;
    }
    if let Some(n) = args.theorem_a_samples {
        if n == 0 {
            return Err(usage("--theorem-a-samples must be at least 1"));
        }
        opts.theorem_a_samples = n;
    }
    let mut failed = 0;
    let mut results = Vec::new();
    for id in ids {
        let result = run_criterion(id, &opts);
        emit(&result.line());
        if !result.passed {
            failed += 1;
        }
        if cli.out.is_some() {
            for (name, contents) in &result.artifacts {
                write(&out.join(format!("criterion-{id}")), name, contents)?;
            }
        }
        results.push(result);
    }
    if cli.out.is_some() {
        write_json(out, "verify.json", &results)?;
    }
    if failed > 0 {
        Err(Failure::Verification(failed))
    } else {
        Ok(())
    }
}
