use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use neighsel::experiments::{self, ExperimentConfig, ExperimentKind, GridSpec, RuleChoice};
use neighsel::graph::{aggregate_and, aggregate_or, compare_edge_sets};
use neighsel::io::{self, ModelFile};
use neighsel::neighborhood::{estimate_all_neighborhoods, CvConfig};
use neighsel::synth::sample_gaussian;
use neighsel::{Design, EdgeRule, Error, GgmModel, Kernel, PenaltyRule, Pruning, Result, SeedStream};

/// Sparse graph estimation by per-node Lasso regression.
#[derive(Parser)]
#[command(name = "neighsel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random geometric graph model, and optionally a sample from it.
    Gen(GenArgs),
    /// Estimate an edge set from a CSV data file.
    Estimate(EstimateArgs),
    /// Compare an estimated edge list with the true one.
    Eval(EvalArgs),
    /// Correct edges at k false inclusions for FS, OR, AND and random guessing.
    Table1(ExperimentArgs),
    /// Large-graph run with matched AND and OR edge counts.
    Fig1(ExperimentArgs),
    /// Cross-validated versus level-based penalty on a single strong pair.
    Prop1(ExperimentArgs),
    /// Rate of falsely joined components under independence.
    Level(ExperimentArgs),
    /// Paired clean and t2-contaminated runs.
    Robust(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    And,
    Or,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum PruningArg {
    Uniform,
    MaxDegree,
}

impl From<PruningArg> for Pruning {
    fn from(p: PruningArg) -> Self {
        match p {
            PruningArg::Uniform => Pruning::Uniform,
            PruningArg::MaxDegree => Pruning::MaxDegree,
        }
    }
}

/// `text`, `local`, or `local:<scale>`.
fn parse_kernel(s: &str) -> std::result::Result<Kernel, String> {
    match s.split_once(':') {
        None if s == "text" => Ok(Kernel::Text),
        None if s == "local" => Ok(Kernel::local()),
        Some(("local", scale)) => match scale.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Kernel::Local { scale: v }),
            _ => Err(format!("invalid kernel scale {scale:?}")),
        },
        _ => Err(format!("unknown kernel {s:?}; expected text, local or local:<scale>")),
    }
}

/// `<points>:<ratio>`.
fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let (points, ratio) = s.split_once(':').ok_or("expected <points>:<ratio>")?;
    Ok(GridSpec {
        points: points.parse().map_err(|_| format!("invalid point count {points:?}"))?,
        ratio: ratio.parse().map_err(|_| format!("invalid ratio {ratio:?}"))?,
    })
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    seed: u64,
    /// Also draw this many observations into data.csv.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_kernel, default_value = "text")]
    kernel: Kernel,
    #[arg(long, value_enum, default_value = "uniform")]
    pruning: PruningArg,
    /// Output directory for model.json, truth.tsv and data.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV file with header x1,...,xp.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "and")]
    rule: Rule,
    /// Level of the penalty rule (default 0.05 when no other rule is given).
    #[arg(long, conflicts_with_all = ["lambda", "cv"])]
    alpha: Option<f64>,
    /// Fixed penalty for every node.
    #[arg(long, conflicts_with = "cv")]
    lambda: Option<f64>,
    /// Cross-validate the penalty with this many folds.
    #[arg(long, num_args = 0..=1, default_missing_value = "10")]
    cv: Option<usize>,
    /// Seed for the cross-validation fold assignment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Edge list output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimated edges (TSV, 1-based).
    #[arg(long)]
    estimate: PathBuf,
    /// True edges (TSV); requires --p.
    #[arg(long, conflicts_with = "model", requires = "p")]
    truth: Option<PathBuf>,
    /// Model file written by `gen`.
    #[arg(long, required_unless_present = "truth")]
    model: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    seed: u64,
    /// Node counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<Kernel>,
    #[arg(long, value_enum)]
    pruning: Option<PruningArg>,
    /// Penalty path for `table1` as <points>:<ratio>.
    #[arg(long, value_parser = parse_grid)]
    lambda: Option<GridSpec>,
    /// Cross-validation folds.
    #[arg(long)]
    cv: Option<usize>,
    /// Pair covariance for `prop1`.
    #[arg(long)]
    signal: Option<f64>,
    /// Scale of the t2 contamination.
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Skip forward selection in `table1`.
    #[arg(long)]
    no_fs: bool,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self, kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(kind, self.seed);
        if let Some(p) = &self.p {
            c.p = p.clone();
        }
        c.n = self.n.unwrap_or(c.n);
        c.replicates = self.replicates.unwrap_or(c.replicates);
        c.alpha = self.alpha.unwrap_or(c.alpha);
        if let Some(rule) = self.rule {
            c.rule = match rule {
                Rule::And => RuleChoice::And,
                Rule::Or => RuleChoice::Or,
                Rule::Both => RuleChoice::Both,
            };
        }
        c.kernel = self.kernel.unwrap_or(c.kernel);
        c.pruning = self.pruning.map_or(c.pruning, Pruning::from);
        c.grid = self.lambda.unwrap_or(c.grid);
        c.folds = self.cv.unwrap_or(c.folds);
        c.signal = self.signal.unwrap_or(c.signal);
        c.noise_scale = self.noise_scale.unwrap_or(c.noise_scale);
        c.forward_selection &= !self.no_fs;
        c.workers = self.workers;
        c
    }
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(args: &GenArgs) -> Result<()> {
    let seed = SeedStream::new(args.seed);
    let model = GgmModel::generate(args.p, seed.derive("model", 0), args.kernel, args.pruning.into())?;
    fs::create_dir_all(&args.out)?;
    let file = ModelFile::from_model(&model, Some(args.seed), Some(args.kernel), Some(args.pruning.into()));
    io::write_json(&file, args.out.join("model.json"))?;
    io::write_edges(model.truth(), args.out.join("truth.tsv"))?;
    if let Some(n) = args.n {
        let data = sample_gaussian(&model.covariance, n, seed.derive("data", 0))?;
        io::write_csv(&data, args.out.join("data.csv"))?;
    }
    eprintln!("p = {}, edges = {}", args.p, model.truth().len());
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let data = io::load_csv(&args.data)?.standardize()?;
    let design = Design::new(data)?;
    let rule = if let Some(lambda) = args.lambda {
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
        }
        PenaltyRule::Fixed { lambda }
    } else if let Some(folds) = args.cv {
        let seed = args
            .seed
            .ok_or_else(|| Error::Config("--cv needs --seed for the fold assignment".into()))?;
        PenaltyRule::Cv(CvConfig {
            folds,
            ..CvConfig::with_seed(seed)
        })
    } else {
        let alpha = args.alpha.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        PenaltyRule::Alpha { alpha }
    };
    let hoods = estimate_all_neighborhoods(&design, &rule, args.workers)?;
    let edges = match args.rule {
        Rule::And => aggregate_and(&hoods)?,
        Rule::Or => aggregate_or(&hoods)?,
        Rule::Both => return Err(Error::Config("estimate needs --rule and or --rule or".into())),
    };
    eprintln!("p = {}, n = {}, edges = {}", design.p(), design.n(), edges.len());
    write_or_print(&io::format_edges(&edges), args.out.as_deref())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let truth = match (&args.model, &args.truth, args.p) {
        (Some(model), _, _) => io::read_json::<ModelFile>(model)?.into_model()?.truth().clone(),
        (None, Some(truth), Some(p)) => io::read_edges(truth, p, EdgeRule::Truth)?,
        _ => return Err(Error::Config("eval needs --model, or --truth with --p".into())),
    };
    let estimate = io::read_edges(&args.estimate, truth.p(), EdgeRule::Other)?;
    let metrics = compare_edge_sets(&estimate, &truth)?;
    let mut text = serde_json::to_string_pretty(&metrics)?;
    text.push('\n');
    write_or_print(&text, args.out.as_deref())
}

fn experiment(kind: ExperimentKind, args: &ExperimentArgs) -> Result<()> {
    let config = args.config(kind);
    config.validate()?;
    let report = if kind == ExperimentKind::Fig1 {
        let output = experiments::run_figure1(&config)?;
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir)?;
            let model = ModelFile::from_model(&output.model, None, Some(config.kernel), Some(config.pruning));
            io::write_json(&model, dir.join("model.json"))?;
            io::write_edges(output.model.truth(), dir.join("truth.tsv"))?;
            io::write_edges(&output.and, dir.join("and.tsv"))?;
            io::write_edges(&output.or, dir.join("or.tsv"))?;
        }
        output.report
    } else {
        experiments::run(&config)?
    };
    let text = report.to_json()?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), text)?;
        }
        None => print!("{text}"),
    }
    eprintln!("wall time: {:.3} s", report.wall_time.as_secs_f64());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Estimate(a) => estimate(a),
        Command::Eval(a) => eval(a),
        Command::Table1(a) => experiment(ExperimentKind::Table1, a),
        Command::Fig1(a) => experiment(ExperimentKind::Fig1, a),
        Command::Prop1(a) => experiment(ExperimentKind::Prop1, a),
        Command::Level(a) => experiment(ExperimentKind::Level, a),
        Command::Robust(a) => experiment(ExperimentKind::Robust, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
