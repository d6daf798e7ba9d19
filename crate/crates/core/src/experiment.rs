//! Benchmark harness comparing the two DSEP-to-DEP methods, and the
//! corruption generator used to exercise repair.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::depfind::{find_dep, Dep, Provenance};
use crate::error::{Error, Result};
use crate::pc::{run_pc, Dsep};
use crate::pclingam::{oracle_dep, run_pc_lingam, PcLingamConfig, DEFAULT_MAX_ENUM};
use crate::stats::{CiProvider, Providers, TestConfig};
use crate::synth::{random_complete_ngdag, sample, substream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Pclingam,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Proposed, Method::Pclingam];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::Pclingam => "pclingam",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "pclingam" => Ok(Method::Pclingam),
            _ => Err(Error::input(format!("unknown method {s:?}"))),
        }
    }
}

/// One timed DSEP-to-DEP run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub p: usize,
    pub n: usize,
    pub method: Method,
    pub iter: usize,
    /// Wall-clock seconds spent turning the DSEP into a DEP.
    pub seconds: f64,
    /// Whether the estimate equals the oracle DEP.
    pub correct: bool,
}

pub const BENCH_HEADER: &str = "p,n,method,iter,seconds,correct";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{:.6},{}", self.p, self.n, self.method, self.iter, self.seconds, self.correct)
    }
}

/// A run that failed, typically because the baseline hit its enumeration cap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchFailure {
    pub p: usize,
    pub n: usize,
    pub method: Method,
    pub iter: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ps: Vec<usize>,
    pub ns: Vec<usize>,
    pub iters: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub test: TestConfig,
    pub max_enum: u64,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ps: vec![5, 6, 7],
            ns: vec![1500, 3000],
            iters: 10,
            methods: Method::ALL.to_vec(),
            seed: 0,
            test: TestConfig::default(),
            max_enum: DEFAULT_MAX_ENUM,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    /// Sorted by `(p, n, method, iter)`.
    pub records: Vec<BenchRecord>,
    pub failures: Vec<BenchFailure>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(BENCH_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Total seconds and number of incorrect DEPs over matching records.
    pub fn cell(&self, p: usize, n: Option<usize>, method: Method) -> (f64, usize) {
        self.records
            .iter()
            .filter(|r| r.p == p && n.is_none_or(|n| r.n == n) && r.method == method)
            .fold((0.0, 0), |(t, bad), r| (t + r.seconds, bad + usize::from(!r.correct)))
    }
}

/// Stream index for one `(p, n, iter)` cell; both methods share it.
fn cell_index(p: usize, n: usize, iter: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in [p as u64, n as u64, iter as u64] {
        h = (h ^ v).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h & 0x0000_ffff_ffff_ffff
}

struct Job {
    p: usize,
    n: usize,
    iter: usize,
}

fn run_job(cfg: &BenchConfig, job: &Job) -> Result<Vec<std::result::Result<BenchRecord, BenchFailure>>> {
    let idx = cell_index(job.p, job.n, job.iter);
    let model = random_complete_ngdag(job.p, &mut substream(cfg.seed, Stream::Model, idx))?;
    let data = sample(&model, job.n, &mut substream(cfg.seed, Stream::Noise, idx));
    let dsep = run_pc(&CiProvider::oracle(model.dag()), job.p)?;
    let truth = oracle_dep(&model);
    let test = TestConfig { seed: cfg.seed ^ idx, ..cfg.test.clone() };
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let start = Instant::now();
        let est = match method {
            Method::Proposed => find_dep(&dsep, &Providers::data(&data, &test)).map(|(d, _)| d),
            Method::Pclingam => {
                run_pc_lingam(&data, &dsep, &PcLingamConfig { test: test.clone(), max_enum: cfg.max_enum })
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        out.push(match est {
            Ok(dep) => Ok(BenchRecord {
                p: job.p,
                n: job.n,
                method,
                iter: job.iter,
                seconds,
                correct: dep.graph == truth.graph,
            }),
            Err(e) => Err(BenchFailure { p: job.p, n: job.n, method, iter: job.iter, message: e.to_string() }),
        });
    }
    Ok(out)
}

/// Runs every `(p, n, iter)` cell on a pool of `threads` workers. Each cell
/// draws a complete model and data from its own substreams, learns the DSEP
/// with oracle CI, then times each method from that DSEP.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.test.validate()?;
    if cfg.ps.iter().any(|&p| p < 2) {
        return Err(Error::input("benchmark needs p >= 2"));
    }
    let jobs: Vec<Job> = cfg
        .ps
        .iter()
        .flat_map(|&p| cfg.ns.iter().flat_map(move |&n| (0..cfg.iters).map(move |iter| Job { p, n, iter })))
        .collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    let threads = cfg.threads.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(k) else { break };
                let r = run_job(cfg, job);
                results.lock().expect("no worker panics while holding the lock").push(r);
            });
        }
    });
    let mut report = BenchReport::default();
    for r in results.into_inner().expect("workers finished") {
        for rec in r? {
            match rec {
                Ok(rec) => report.records.push(rec),
                Err(f) => report.failures.push(f),
            }
        }
    }
    report.records.sort_by_key(|r| (r.p, r.n, r.method, r.iter));
    report.failures.sort_by_key(|f| (f.p, f.n, f.method, f.iter));
    Ok(report)
}

/// A DEP-shaped graph on the DSEP's skeleton with random orientations:
/// undirected edges are oriented either way or left alone, and DSEP directed
/// edges are reversed with probability `flip`.
pub fn corrupt_dep<R: Rng + ?Sized>(dsep: &Dsep, flip: f64, rng: &mut R) -> Result<Dep> {
    if !(0.0..=1.0).contains(&flip) {
        return Err(Error::input(format!("flip probability {flip} outside [0, 1]")));
    }
    let mut g = dsep.graph.clone();
    for (a, b) in dsep.graph.undirected_edges() {
        match rng.random_range(0..3) {
            0 => g.orient(a, b)?,
            1 => g.orient(b, a)?,
            _ => {}
        }
    }
    for (a, b) in dsep.graph.directed_edges() {
        if rng.random_bool(flip) {
            g.reverse(a, b)?;
        }
    }
    Ok(Dep::uniform(g, Provenance::FromPc))
}
