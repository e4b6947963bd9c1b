//! Command-line front end: argument parsing, file formats and the on-disk cache.
//!
//! Structured results go to `--out` (or stdout); progress and summary tables go
//! to stderr. Every JSON output carries the run configuration, the crate
//! version and SHA-256 hashes of its inputs, and contains nothing that varies
//! between identical runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bellmap::{build_system, solve_alpha, MeasurementAngles, Terms};
use crate::critical::{critical_batch, sweep, BoundCache, CriticalConfig, SolverConfig, SweepPoint, ViolationResult};
use crate::dimers::{class_statistics, classify, enumerate_maximal, ClassStatistics, CoveringClass, DimerCovering};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, BoundaryCondition, Lattice};
use crate::quantum::{quantum_value, LanczosConfig, SolverMethod, DENSE_MAX_SITES};
use crate::tropical::{classical_bound_transfer_with, TransferOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "dimerbell", version, about = "Dimer-weighted CHSH inequalities on square lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Lattice side length.
    #[arg(long, global = true, default_value_t = 3)]
    pub n: usize,
    #[arg(long, global = true, default_value = "torus")]
    pub boundary: BoundaryArg,
    #[arg(long, global = true, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    /// Residual tolerance for the Lanczos solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for the Lanczos start vector.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Directory for cached coverings and classes.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Torus,
    Klein,
}

impl From<BoundaryArg> for BoundaryCondition {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Torus => BoundaryCondition::Torus,
            BoundaryArg::Klein => BoundaryCondition::KleinBottle,
        }
    }
}

impl std::str::FromStr for BoundaryArg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<BoundaryCondition>()? {
            BoundaryCondition::Torus => BoundaryArg::Torus,
            BoundaryCondition::KleinBottle => BoundaryArg::Klein,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Dense,
    Lanczos,
    Auto,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetArgs {
    /// Index into the enumerated covering list.
    #[arg(long, conflicts_with = "class")]
    pub covering: Option<usize>,
    /// Class id; its representative is used. Default: every class.
    #[arg(long)]
    pub class: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EpsilonArgs {
    /// Coupling values (repeat or comma-separate).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub epsilon: Vec<f64>,
    /// Grid `start:stop:step`, both ends included.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Enumerate all maximum dimer coverings.
    Enumerate,
    /// Group coverings into symmetry classes.
    Classify,
    /// Classical bound via the tropical transfer matrix.
    ClassicalBound {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        eps: EpsilonArgs,
    },
    /// Ground energy of the Bell operator.
    QuantumValue {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        eps: EpsilonArgs,
    },
    /// Violation-interval endpoints per class.
    Critical {
        /// Restrict to one class.
        #[arg(long)]
        class: Option<usize>,
        /// Also search past the default domain (0, 2).
        #[arg(long)]
        wide: bool,
    },
    /// Both bounds on an epsilon grid, written as CSV.
    Sweep {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        eps: EpsilonArgs,
    },
    /// Bell-expression coefficients for the m-input chained Hamiltonian.
    Bellmap {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_enum, default_value_t = TermsArg::Correlators)]
        terms: TermsArg,
        /// Explicit angles in radians (m for correlators, 2m for full).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        angles: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TermsArg {
    Correlators,
    Full,
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub n: usize,
    pub boundary: BoundaryArg,
    pub solver: SolverArg,
    pub tol: f64,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Self {
        let c = &cli.common;
        RunConfig {
            command: cli.command.clone(),
            n: c.n,
            boundary: c.boundary,
            solver: c.solver,
            tol: c.tol,
            seed: c.seed,
            jobs: c.jobs,
            cache_dir: c.cache_dir.clone(),
            out: c.out.clone(),
        }
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary.into()
    }

    /// `None` means dense up to the dense site cap and Lanczos above.
    pub fn solver_method(&self) -> Option<SolverMethod> {
        match self.solver {
            SolverArg::Dense => Some(SolverMethod::Dense),
            SolverArg::Lanczos => Some(SolverMethod::Lanczos),
            SolverArg::Auto => None,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            method: self.solver_method(),
            lanczos: LanczosConfig {
                tol: self.tol,
                seed: self.seed,
                ..Default::default()
            },
        }
    }
}

/// Common wrapper for every JSON output.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    /// SHA-256 of each input, hex encoded.
    pub inputs: BTreeMap<String, String>,
    #[serde(flatten)]
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringFile {
    pub n: usize,
    pub boundary: BoundaryCondition,
    pub coverings: Vec<Vec<usize>>,
}

impl CoveringFile {
    pub fn new(lattice: &Lattice, coverings: &[DimerCovering]) -> Self {
        CoveringFile {
            n: lattice.n(),
            boundary: lattice.boundary(),
            coverings: coverings.iter().map(|c| c.edges().to_vec()).collect(),
        }
    }

    pub fn to_coverings(&self, lattice: &Lattice) -> Result<Vec<DimerCovering>> {
        if self.n != lattice.n() || self.boundary != lattice.boundary() {
            return Err(Error::LatticeMismatch {
                expected: lattice.boundary(),
                expected_n: lattice.n(),
                found: self.boundary,
                found_n: self.n,
            });
        }
        self.coverings
            .iter()
            .map(|e| DimerCovering::new(lattice, e.clone()))
            .collect()
    }

    pub fn sha256(&self) -> String {
        sha256_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFile {
    pub n: usize,
    pub boundary: BoundaryCondition,
    pub statistics: ClassStatistics,
    pub classes: Vec<CoveringClass>,
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("in-memory serialisation");
    hex::encode(Sha256::digest(&bytes))
}

/// Parses `start:stop:step`; both ends included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("grid {spec:?} is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn epsilons(eps: &EpsilonArgs) -> Result<Vec<f64>> {
    let mut out = eps.epsilon.clone();
    if let Some(g) = &eps.grid {
        out.extend(parse_grid(g)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("give --epsilon or --grid".into()));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Writes CSV with header `epsilon,beta_c,beta_q`.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(p)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: io::Read>(r: R) -> Result<Vec<SweepPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Coverings and classes for one lattice, loaded from the cache directory when present.
pub struct Workspace {
    pub lattice: Lattice,
    pub coverings: Vec<DimerCovering>,
    pub covering_file: CoveringFile,
    classes: Option<Vec<CoveringClass>>,
    cache_dir: Option<PathBuf>,
}

impl Workspace {
    pub fn open(config: &RunConfig) -> Result<Self> {
        let lattice = build_lattice(config.n, config.boundary())?;
        let cache_dir = config.cache_dir.clone();
        let path = cache_dir
            .as_ref()
            .map(|d| d.join(format!("coverings-{}-{}.json", config.n, lattice.boundary())));
        let covering_file = match path.as_deref().filter(|p| p.exists()) {
            Some(p) => serde_json::from_slice::<CoveringFile>(&fs::read(p)?)?,
            None => {
                let file = CoveringFile::new(&lattice, &enumerate_maximal(&lattice)?);
                if let Some(p) = &path {
                    write_atomic(p, &serde_json::to_vec(&file)?)?;
                }
                file
            }
        };
        let coverings = covering_file.to_coverings(&lattice)?;
        Ok(Workspace {
            lattice,
            coverings,
            covering_file,
            classes: None,
            cache_dir,
        })
    }

    pub fn classes(&mut self) -> Result<&[CoveringClass]> {
        if self.classes.is_none() {
            let path = self.cache_dir.as_ref().map(|d| {
                d.join(format!(
                    "classes-{}-{}-{}.json",
                    self.lattice.n(),
                    self.lattice.boundary(),
                    &self.covering_file.sha256()[..16]
                ))
            });
            let classes = match path.as_deref().filter(|p| p.exists()) {
                Some(p) => serde_json::from_slice::<Vec<CoveringClass>>(&fs::read(p)?)?,
                None => {
                    let c = classify(&self.lattice, &self.coverings)?;
                    if let Some(p) = &path {
                        write_atomic(p, &serde_json::to_vec(&c)?)?;
                    }
                    c
                }
            };
            self.classes = Some(classes);
        }
        Ok(self.classes.as_deref().expect("just set"))
    }

    fn inputs(&self) -> BTreeMap<String, String> {
        BTreeMap::from([("coverings".to_string(), self.covering_file.sha256())])
    }

    /// `(class id, covering index)` pairs selected by the target flags.
    fn targets(&mut self, target: &TargetArgs) -> Result<Vec<(Option<usize>, usize)>> {
        if let Some(i) = target.covering {
            if i >= self.coverings.len() {
                return Err(Error::InvalidInput(format!(
                    "covering {i} out of range ({} coverings)",
                    self.coverings.len()
                )));
            }
            return Ok(vec![(None, i)]);
        }
        let classes = self.classes()?;
        match target.class {
            Some(c) => {
                let cls = classes
                    .get(c)
                    .ok_or_else(|| Error::InvalidInput(format!("class {c} out of range ({} classes)", classes.len())))?;
                Ok(vec![(Some(c), cls.representative)])
            }
            None => Ok(classes.iter().map(|c| (Some(c.class_id), c.representative)).collect()),
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Where structured output goes.
pub enum Sink<'a> {
    Stdout(&'a mut (dyn Write + Send)),
    File(PathBuf),
}

impl Sink<'_> {
    fn write(&mut self, bytes: &[u8]) -> Result<()> {
        match self {
            Sink::Stdout(w) => {
                w.write_all(bytes)?;
                w.flush()?;
            }
            Sink::File(p) => write_atomic(p, bytes)?,
        }
        Ok(())
    }
}

fn emit_json<T: Serialize>(sink: &mut Sink<'_>, config: &RunConfig, inputs: BTreeMap<String, String>, result: T) -> Result<()> {
    let env = Envelope {
        version: VERSION,
        config,
        inputs,
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    sink.write(&bytes)
}

/// Outcome of a run; `failures` counts per-item numerical failures that were
/// reported in the output rather than aborting the run.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub failures: usize,
}

#[derive(Debug, Serialize)]
struct BoundRow {
    class_id: Option<usize>,
    covering: usize,
    covering_id: String,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<SolverMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum CriticalRow {
    Ok(ViolationResult),
    Failed { class_id: usize, error: String },
}

#[derive(Debug, Serialize)]
struct CriticalSummary {
    min_eps_low: Option<f64>,
    min_eps_low_classes: Vec<usize>,
    max_eps_high: Option<f64>,
    max_eps_high_classes: Vec<usize>,
}

fn summarize(rows: &[ViolationResult]) -> CriticalSummary {
    let extreme = |get: fn(&ViolationResult) -> Option<f64>, low: bool| {
        let best = rows.iter().filter_map(get).reduce(|a, b| if (b < a) == low { b } else { a });
        let classes = best
            .map(|v| rows.iter().filter(|r| get(r) == Some(v)).map(|r| r.class_id).collect())
            .unwrap_or_default();
        (best, classes)
    };
    let (min_eps_low, min_eps_low_classes) = extreme(|r| r.eps_low, true);
    let (max_eps_high, max_eps_high_classes) = extreme(|r| r.eps_high, false);
    CriticalSummary {
        min_eps_low,
        min_eps_low_classes,
        max_eps_high,
        max_eps_high_classes,
    }
}

/// Runs one parsed command. Summaries go to `log`.
pub fn run(cli: &Cli, stdout: &mut (dyn Write + Send), log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let config = RunConfig::from_cli(cli);
    if let Some(0) = config.jobs {
        return Err(Error::InvalidInput("--jobs must be at least 1".into()));
    }
    let mut sink = match &config.out {
        Some(p) => Sink::File(p.clone()),
        None => Sink::Stdout(stdout),
    };
    match config.jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            pool.install(|| dispatch(&config, &mut sink, log))
        }
        None => dispatch(&config, &mut sink, log),
    }
}

fn dispatch(config: &RunConfig, sink: &mut Sink<'_>, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    match &config.command {
        Command::Enumerate => cmd_enumerate(config, sink, log),
        Command::Classify => cmd_classify(config, sink, log),
        Command::ClassicalBound { target, eps } => cmd_classical_bound(config, target, eps, sink, log),
        Command::QuantumValue { target, eps } => cmd_quantum_value(config, target, eps, sink, log),
        Command::Critical { class, wide } => cmd_critical(config, *class, *wide, sink, log),
        Command::Sweep { target, eps } => cmd_sweep(config, target, eps, sink, log),
        Command::Bellmap { m, terms, angles } => cmd_bellmap(config, *m, *terms, angles, sink, log),
    }
}

pub fn cmd_enumerate(config: &RunConfig, sink: &mut Sink<'_>, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let ws = Workspace::open(config)?;
    writeln!(log, "{} maximum coverings on {}x{} {}", ws.coverings.len(), config.n, config.n, ws.lattice.boundary())?;
    emit_json(sink, config, BTreeMap::new(), &ws.covering_file)?;
    Ok(Outcome::default())
}

pub fn cmd_classify(config: &RunConfig, sink: &mut Sink<'_>, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let mut ws = Workspace::open(config)?;
    let classes = ws.classes()?.to_vec();
    let statistics = class_statistics(&classes);
    writeln!(log, "{:>8} {:>8} {:>8} {:>8}", "lattice", "classes", "min", "max")?;
    writeln!(
        log,
        "{:>8} {:>8} {:>8} {:>8}",
        format!("{}x{}{}", config.n, config.n, if config.boundary == BoundaryArg::Klein { "K" } else { "T" }),
        statistics.classes,
        statistics.min_size,
        statistics.max_size
    )?;
    let file = ClassFile {
        n: config.n,
        boundary: ws.lattice.boundary(),
        statistics,
        classes,
    };
    emit_json(sink, config, ws.inputs(), file)?;
    Ok(Outcome::default())
}

pub fn cmd_classical_bound(
    config: &RunConfig,
    target: &TargetArgs,
    eps: &EpsilonArgs,
    sink: &mut Sink<'_>,
    log: &mut (dyn Write + Send),
) -> Result<Outcome> {
    let mut ws = Workspace::open(config)?;
    let targets = ws.targets(target)?;
    let grid = epsilons(eps)?;
    let opts = TransferOptions {
        recover_assignment: true,
        ..Default::default()
    };
    let jobs: Vec<_> = targets.iter().flat_map(|&t| grid.iter().map(move |&e| (t, e))).collect();
    let rows: Vec<BoundRow> = jobs
        .par_iter()
        .map(|&((class_id, idx), e)| {
            let cov = &ws.coverings[idx];
            let r = classical_bound_transfer_with(&ws.lattice, cov, e, &opts)?;
            Ok(BoundRow {
                class_id,
                covering: idx,
                covering_id: cov.id(),
                epsilon: e,
                beta_c: Some(r.beta_c),
                assignment: r.optimal_assignment.map(|a| a.0.into_iter().map(u8::from).collect()),
                beta_q: None,
                method: None,
                residual: None,
            })
        })
        .collect::<Result<_>>()?;
    writeln!(log, "{} classical bounds", rows.len())?;
    emit_json(sink, config, ws.inputs(), BTreeMap::from([("bounds", rows)]))?;
    Ok(Outcome::default())
}

pub fn cmd_quantum_value(
    config: &RunConfig,
    target: &TargetArgs,
    eps: &EpsilonArgs,
    sink: &mut Sink<'_>,
    log: &mut (dyn Write + Send),
) -> Result<Outcome> {
    let mut ws = Workspace::open(config)?;
    let targets = ws.targets(target)?;
    let grid = epsilons(eps)?;
    let solver = config.solver_config();
    let jobs: Vec<_> = targets.iter().flat_map(|&t| grid.iter().map(move |&e| (t, e))).collect();
    let rows: Vec<BoundRow> = jobs
        .par_iter()
        .map(|&((class_id, idx), e)| {
            let cov = &ws.coverings[idx];
            let r = quantum_value(&ws.lattice, cov, e, solver.method, &solver.lanczos)?;
            Ok(BoundRow {
                class_id,
                covering: idx,
                covering_id: cov.id(),
                epsilon: e,
                beta_c: None,
                assignment: None,
                beta_q: Some(r.beta_q),
                method: Some(r.method),
                residual: Some(r.residual),
            })
        })
        .collect::<Result<_>>()?;
    writeln!(
        log,
        "{} quantum values ({} sites, auto solver would use {})",
        rows.len(),
        ws.lattice.num_sites(),
        if ws.lattice.num_sites() <= DENSE_MAX_SITES { "dense" } else { "lanczos" }
    )?;
    emit_json(sink, config, ws.inputs(), BTreeMap::from([("values", rows)]))?;
    Ok(Outcome::default())
}

pub fn cmd_critical(
    config: &RunConfig,
    class: Option<usize>,
    wide: bool,
    sink: &mut Sink<'_>,
    log: &mut (dyn Write + Send),
) -> Result<Outcome> {
    let mut ws = Workspace::open(config)?;
    let classes = ws.classes()?.to_vec();
    let selected: Vec<CoveringClass> = match class {
        Some(c) => vec![classes
            .get(c)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("class {c} out of range ({} classes)", classes.len())))?],
        None => classes,
    };
    let mut crit = CriticalConfig {
        solver: config.solver_config(),
        ..Default::default()
    };
    if wide {
        crit.domain = (-1.0, 3.0);
    }
    let cache = BoundCache::new();
    let results = critical_batch(&ws.lattice, &ws.coverings, &selected, &crit, Some(&cache));

    let mut rows = Vec::with_capacity(results.len());
    let mut ok = Vec::new();
    let mut failures = 0;
    for (cls, r) in selected.iter().zip(results) {
        match r {
            Ok(v) => {
                ok.push(v.clone());
                rows.push(CriticalRow::Ok(v));
            }
            Err(e) if e.is_numerical() => {
                failures += 1;
                rows.push(CriticalRow::Failed {
                    class_id: cls.class_id,
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let summary = summarize(&ok);
    writeln!(log, "{:>5} {:>5} {:>10} {:>10}", "class", "size", "eps_low", "eps_high")?;
    let fmt = |e: Option<f64>| e.map_or("none".to_string(), |v| format!("{v:.5}"));
    for (cls, row) in selected.iter().zip(&rows) {
        match row {
            CriticalRow::Ok(v) => writeln!(log, "{:>5} {:>5} {:>10} {:>10}", cls.class_id, cls.size(), fmt(v.eps_low), fmt(v.eps_high))?,
            CriticalRow::Failed { error, .. } => writeln!(log, "{:>5} {:>5} failed: {error}", cls.class_id, cls.size())?,
        }
    }
    writeln!(
        log,
        "min eps_low {} (classes {:?}), max eps_high {} (classes {:?})",
        fmt(summary.min_eps_low),
        summary.min_eps_low_classes,
        fmt(summary.max_eps_high),
        summary.max_eps_high_classes
    )?;

    #[derive(Serialize)]
    struct Payload {
        summary: CriticalSummary,
        results: Vec<CriticalRow>,
    }
    emit_json(sink, config, ws.inputs(), Payload { summary, results: rows })?;
    Ok(Outcome { failures })
}

/// Writes the CSV to the sink and, when writing to a file, the run metadata
/// next to it as `<out>.meta.json`.
pub fn cmd_sweep(
    config: &RunConfig,
    target: &TargetArgs,
    eps: &EpsilonArgs,
    sink: &mut Sink<'_>,
    log: &mut (dyn Write + Send),
) -> Result<Outcome> {
    let mut ws = Workspace::open(config)?;
    let targets = ws.targets(target)?;
    // without a target flag, the first class
    let (class_id, idx) = targets[0];
    let grid = epsilons(eps)?;
    let cov = &ws.coverings[idx];
    let points = sweep(&ws.lattice, cov, &grid, &config.solver_config(), None)?;
    let mut csv_bytes = Vec::new();
    write_sweep_csv(&points, &mut csv_bytes)?;
    writeln!(
        log,
        "swept {} points for covering {idx} ({}){}",
        points.len(),
        cov.id(),
        class_id.map(|c| format!(", class {c}")).unwrap_or_default()
    )?;
    if let Sink::File(p) = sink {
        let mut inputs = ws.inputs();
        inputs.insert("covering".into(), sha256_json(&cov.edges()));
        let mut meta = p.clone().into_os_string();
        meta.push(".meta.json");
        let meta = PathBuf::from(meta);
        let env = Envelope {
            version: VERSION,
            config,
            inputs,
            result: BTreeMap::from([("covering", idx)]),
        };
        write_atomic(&meta, &serde_json::to_vec_pretty(&env)?)?;
    }
    sink.write(&csv_bytes)?;
    Ok(Outcome::default())
}

pub fn cmd_bellmap(
    config: &RunConfig,
    m: usize,
    terms: TermsArg,
    angles: &[f64],
    sink: &mut Sink<'_>,
    log: &mut (dyn Write + Send),
) -> Result<Outcome> {
    let terms = match terms {
        TermsArg::Correlators => Terms::Correlators,
        TermsArg::Full => Terms::Full,
    };
    let angles = if angles.is_empty() {
        MeasurementAngles::equally_spaced(m, terms)
    } else {
        MeasurementAngles {
            m,
            terms,
            theta: angles.to_vec(),
        }
    };
    let sys = build_system(m, &angles)?;
    let sol = solve_alpha(&sys)?;
    writeln!(
        log,
        "m = {m}: rank {} of {} columns, {}",
        sol.rank,
        sys.columns.len(),
        if sol.unique { "unique solution" } else { "minimum-norm member of a family" }
    )?;
    emit_json(sink, config, BTreeMap::new(), sol)?;
    Ok(Outcome::default())
}
