//! Command-line front end: data generation, PC, DEP discovery, the PC-LiNGAM
//! baseline, benchmarking, consistency checks and repair.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use causal_dep::depfind::{check_consistency, find_dep, repair_exceptions, Dep, Violation};
use causal_dep::experiment::{run_bench, BenchConfig, Method, BENCH_HEADER};
use causal_dep::io::{
    dep_from_json, dep_to_json, dsep_from_json, dsep_to_json, graph_to_dot, model_from_json, model_to_json,
    require_names,
};
use causal_dep::pc::{run_pc, Dsep};
use causal_dep::pclingam::{oracle_dep, run_pc_lingam, run_pc_lingam_oracle, PcLingamConfig, DEFAULT_MAX_ENUM};
use causal_dep::stats::{CiProvider, Dataset, Providers, TestConfig};
use causal_dep::synth::{random_complete_ngdag, random_ngdag, sample, substream, NgDag, Stream};
use causal_dep::{Error, MixedGraph, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

/// Exit status when `check` finds violations.
pub const EXIT_INCONSISTENT: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "causal-dep", version, about = "Learn distribution-equivalence patterns of linear causal models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a ground-truth model and data set.
    Gen(GenArgs),
    /// Estimate a DSEP with the PC algorithm.
    Pc(PcArgs),
    /// Orient a DSEP into a DEP with the polynomial-time search.
    Discover(DiscoverArgs),
    /// Orient a DSEP into a DEP by scoring every consistent DAG.
    Baseline(BaselineArgs),
    /// Time both methods on complete random models.
    Bench(BenchArgs),
    /// Compare a DEP against a DSEP; exits 1 if they are inconsistent.
    Check(CheckArgs),
    /// Reorient a DEP until it is consistent with a DSEP.
    Repair(RepairArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    /// Significance level of the Shapiro-Wilk Gaussianity tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha_gauss: f64,
    /// Significance level of the HSIC independence tests.
    #[arg(long, default_value_t = 0.001)]
    pub alpha_indep: f64,
    /// Significance level of the Fisher-z tests used by PC.
    #[arg(long, default_value_t = 0.01)]
    pub alpha_ci: f64,
    /// HSIC runs on a random subsample of at most this many rows.
    #[arg(long, default_value_t = 1500)]
    pub hsic_subsample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TestArgs {
    fn config(&self) -> Result<TestConfig> {
        let cfg = TestConfig {
            alpha_gauss: self.alpha_gauss,
            alpha_indep: self.alpha_indep,
            alpha_ci: self.alpha_ci,
            hsic_subsample: self.hsic_subsample,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Data set CSV with a header row of variable names.
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    pub data: Option<PathBuf>,
    /// Answer every test exactly from the model given by --model.
    #[arg(long, requires = "model")]
    pub oracle: bool,
    /// Ground-truth model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Start from this DSEP instead of running PC.
    #[arg(long)]
    pub dsep: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the JSON result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a Graphviz rendering of the result.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenMode {
    /// All forward edges of a random order.
    Complete,
    /// Each forward edge present with probability --density.
    Random,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of variables.
    #[arg(long)]
    pub p: usize,
    /// Number of observations.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = GenMode::Complete)]
    pub mode: GenMode,
    /// Edge probability in random mode.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Number of non-Gaussian disturbances in random mode; drawn when omitted.
    #[arg(long)]
    pub ng: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for data.csv, model.json and oracle_dep.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the true DAG as Graphviz.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PcArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Repair the result if it is inconsistent with the DSEP.
    #[arg(long)]
    pub repair: bool,
    /// Write the run log JSON here instead of standard error.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Refuse DSEPs with more consistent DAGs than this.
    #[arg(long, default_value_t = DEFAULT_MAX_ENUM)]
    pub max_enum: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Numbers of variables.
    #[arg(long, value_delimiter = ',', default_value = "5,6,7")]
    pub p: Vec<usize>,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "1500,3000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long, value_delimiter = ',', default_value = "proposed,pclingam")]
    pub methods: Vec<String>,
    /// Worker threads.
    #[arg(long, env = "CAUSAL_DEP_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ENUM)]
    pub max_enum: u64,
    #[command(flatten)]
    pub test: TestArgs,
    /// Append rows to this CSV, writing the header if it is new or empty.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// DEP (or plain graph) JSON to check.
    #[arg(long)]
    pub dep: PathBuf,
    #[arg(long)]
    pub dsep: PathBuf,
    /// Write the violation list here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[arg(long)]
    pub dep: PathBuf,
    #[arg(long)]
    pub dsep: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_at(path, e))
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| io_at(path, e))
}

fn emit(path: Option<&Path>, content: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write(p, content),
        None => Ok(stdout.write_all(content.as_bytes())?),
    }
}

fn emit_graph(output: &OutputArgs, json: &str, graph: &MixedGraph, stdout: &mut dyn Write) -> Result<()> {
    emit(output.out.as_deref(), json, stdout)?;
    if let Some(dot) = &output.dot {
        write(dot, &graph_to_dot(graph))?;
    }
    Ok(())
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// What the tests are answered from.
enum Source {
    Data(Dataset),
    Oracle(NgDag),
}

impl Source {
    fn load(input: &InputArgs) -> Result<Self> {
        if input.oracle {
            let path = input.model.as_deref().ok_or_else(|| Error::Input("--oracle needs --model".into()))?;
            Ok(Source::Oracle(model_from_json(&read(path)?)?))
        } else {
            let path = input.data.as_deref().ok_or_else(|| Error::Input("--data is required without --oracle".into()))?;
            Ok(Source::Data(Dataset::from_csv_path(path).map_err(|e| match e {
                Error::Io(e) => io_at(path, e),
                other => other,
            })?))
        }
    }

    fn names(&self) -> &[String] {
        match self {
            Source::Data(d) => d.names(),
            Source::Oracle(m) => m.dag().names(),
        }
    }

    fn pc(&self, test: &TestConfig) -> Result<Dsep> {
        let mut dsep = match self {
            Source::Data(d) => run_pc(&CiProvider::data(d, test.alpha_ci), d.p())?,
            Source::Oracle(m) => run_pc(&CiProvider::oracle(m.dag()), m.p())?,
        };
        dsep.graph.set_names(self.names().to_vec())?;
        Ok(dsep)
    }

    /// The given DSEP file, or PC's estimate when there is none.
    fn dsep(&self, input: &InputArgs, test: &TestConfig) -> Result<Dsep> {
        match &input.dsep {
            Some(path) => {
                let dsep = dsep_from_json(&read(path)?)?;
                require_names(&dsep.graph, self.names(), "DSEP")?;
                Ok(dsep)
            }
            None => self.pc(test),
        }
    }
}

#[derive(Serialize)]
struct DiscoverLog<'a> {
    #[serde(flatten)]
    counts: &'a causal_dep::depfind::RunLog,
    repaired: bool,
    seconds: f64,
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let mut rng = substream(a.seed, Stream::Model, 0);
    let model = match a.mode {
        GenMode::Complete => random_complete_ngdag(a.p, &mut rng)?,
        GenMode::Random => {
            let ng = match a.ng {
                Some(k) => k,
                None if a.p >= 2 => rng.random_range(a.p / 3 + 1..=a.p - 1),
                None => 1,
            };
            random_ngdag(a.p, a.density, ng, &mut rng)?
        }
    };
    if a.n < 2 {
        return Err(Error::Input("need at least two observations".into()));
    }
    let data = sample(&model, a.n, &mut substream(a.seed, Stream::Noise, 0));
    let truth = oracle_dep(&model);
    fs::create_dir_all(&a.out).map_err(|e| io_at(&a.out, e))?;
    let csv_path = a.out.join("data.csv");
    let file = fs::File::create(&csv_path).map_err(|e| io_at(&csv_path, e))?;
    data.write_csv(std::io::BufWriter::new(file))?;
    write(&a.out.join("model.json"), &model_to_json(&model, Some(&truth)))?;
    write(&a.out.join("oracle_dep.json"), &dep_to_json(&truth))?;
    if let Some(dot) = &a.dot {
        write(dot, &graph_to_dot(model.dag()))?;
    }
    Ok(())
}

fn cmd_pc(a: &PcArgs, stdout: &mut dyn Write) -> Result<()> {
    let test = a.test.config()?;
    let dsep = Source::load(&a.input)?.pc(&test)?;
    emit_graph(&a.output, &dsep_to_json(&dsep), &dsep.graph, stdout)
}

fn cmd_discover(a: &DiscoverArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let test = a.test.config()?;
    let source = Source::load(&a.input)?;
    let dsep = source.dsep(&a.input, &test)?;
    let start = Instant::now();
    let (mut dep, log) = match &source {
        Source::Data(d) => find_dep(&dsep, &Providers::data(d, &test))?,
        Source::Oracle(m) => find_dep(&dsep, &Providers::oracle(m))?,
    };
    let mut repaired = false;
    if a.repair && !check_consistency(&dep.graph, &dsep.graph)?.is_empty() {
        dep = repair_exceptions(&dep, &dsep, test.seed)?;
        repaired = true;
    }
    let record = DiscoverLog { counts: &log, repaired, seconds: start.elapsed().as_secs_f64() };
    emit_graph(&a.output, &dep_to_json(&dep), &dep.graph, stdout)?;
    match &a.log {
        Some(path) => write(path, &to_json(&record)),
        None => Ok(stderr.write_all(to_json(&record).as_bytes())?),
    }
}

fn cmd_baseline(a: &BaselineArgs, stdout: &mut dyn Write) -> Result<()> {
    let test = a.test.config()?;
    let source = Source::load(&a.input)?;
    let dsep = source.dsep(&a.input, &test)?;
    let dep = match &source {
        Source::Data(d) => run_pc_lingam(d, &dsep, &PcLingamConfig { test, max_enum: a.max_enum })?,
        Source::Oracle(m) => run_pc_lingam_oracle(m, &dsep, a.max_enum)?,
    };
    emit_graph(&a.output, &dep_to_json(&dep), &dep.graph, stdout)
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let methods = a.methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
    if a.threads == 0 {
        return Err(Error::Input("--threads must be at least 1".into()));
    }
    let cfg = BenchConfig {
        ps: a.p.clone(),
        ns: a.n.clone(),
        iters: a.iters,
        methods,
        seed: a.test.seed,
        test: a.test.config()?,
        max_enum: a.max_enum,
        threads: a.threads,
    };
    let report = run_bench(&cfg)?;
    for f in &report.failures {
        writeln!(stderr, "p={} n={} method={} iter={}: {}", f.p, f.n, f.method, f.iter, f.message)?;
    }
    match &a.out {
        Some(path) => {
            let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
            let mut file = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_at(path, e))?;
            let mut text = String::new();
            if fresh {
                text.push_str(BENCH_HEADER);
                text.push('\n');
            }
            for r in &report.records {
                text.push_str(&r.csv_row());
                text.push('\n');
            }
            file.write_all(text.as_bytes()).map_err(|e| io_at(path, e))
        }
        None => Ok(stdout.write_all(report.to_csv().as_bytes())?),
    }
}

fn load_pair(dep: &Path, dsep: &Path) -> Result<(Dep, Dsep)> {
    let dep = dep_from_json(&read(dep)?)?;
    let dsep = dsep_from_json(&read(dsep)?)?;
    require_names(&dep.graph, dsep.graph.names(), "DEP")?;
    Ok((dep, dsep))
}

/// A violation with vertex names in place of ids.
fn named(v: &Violation, g: &MixedGraph) -> serde_json::Value {
    let n = |i: usize| g.name(i).to_owned();
    let ns = |vs: &[usize]| vs.iter().map(|&i| n(i)).collect::<Vec<_>>();
    match v {
        Violation::SkeletonMismatch { a, b } => json!({"kind": "skeleton-mismatch", "a": n(*a), "b": n(*b)}),
        Violation::ReversedEdge { from, to } => json!({"kind": "reversed-edge", "from": n(*from), "to": n(*to)}),
        Violation::DirectedCycle { vertices } => json!({"kind": "directed-cycle", "vertices": ns(vertices)}),
        Violation::NewVStructure { collider, parents } => {
            json!({"kind": "new-v-structure", "collider": n(*collider), "parents": ns(parents)})
        }
    }
}

fn cmd_check(a: &CheckArgs, stdout: &mut dyn Write) -> Result<u8> {
    let (dep, dsep) = load_pair(&a.dep, &a.dsep)?;
    let violations = check_consistency(&dep.graph, &dsep.graph)?;
    let report: Vec<_> = violations.iter().map(|v| named(v, &dep.graph)).collect();
    emit(a.out.as_deref(), &to_json(&report), stdout)?;
    Ok(if violations.is_empty() { 0 } else { EXIT_INCONSISTENT })
}

fn cmd_repair(a: &RepairArgs, stdout: &mut dyn Write) -> Result<()> {
    let (dep, dsep) = load_pair(&a.dep, &a.dsep)?;
    let fixed = repair_exceptions(&dep, &dsep, a.seed)?;
    emit_graph(&a.output, &dep_to_json(&fixed), &fixed.graph, stdout)
}

/// Runs one command and returns the process exit status.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a)?,
        Command::Pc(a) => cmd_pc(a, stdout)?,
        Command::Discover(a) => cmd_discover(a, stdout, stderr)?,
        Command::Baseline(a) => cmd_baseline(a, stdout)?,
        Command::Bench(a) => cmd_bench(a, stdout, stderr)?,
        Command::Check(a) => return cmd_check(a, stdout),
        Command::Repair(a) => cmd_repair(a, stdout)?,
    }
    Ok(0)
}
