//! Command-line front end.
//!
//! Every run writes one document (JSON by default) holding an echo of the
//! effective configuration, the results and solver diagnostics. Failures are
//! reported on stderr and classified by exit code only:
//!
//! | code | meaning                                             |
//! |------|-----------------------------------------------------|
//! | 0    | success                                             |
//! | 2    | input error (I/O, CSV parse, invalid matrix, usage) |
//! | 3    | spectrum error (too few positive eigenvalues, rank) |
//! | 4    | solver failure                                      |

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::project::project_all;
use crate::proximity::{dissim_to_centered_sim, tau_w, DissimilarityMatrix, OosRawBlock};
use crate::restrict::{
    arc, solve_batch, solve_single, stress_oos, BatchOptions, BatchProblem, Diagnostics, OosProblem, SolveOptions,
    StressOptions,
};
use crate::spectral::{cmds_embed, Configuration, TruncatedGram};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SPECTRUM: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "oosembed",
    version,
    about = "Classical MDS embedding with out-of-sample extension"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed an in-sample dissimilarity matrix by classical MDS.
    Embed(CommonArgs),
    /// Place new objects into the embedding.
    Oos(OosArgs),
    /// Trace the ridge arc from the projection to the restricted solution.
    Arc(OosArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Project,
    Restrict,
    Stress,
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// In-sample dissimilarity matrix (CSV, optional header line).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Entries are squared dissimilarities rather than plain ones.
    #[arg(long)]
    pub squared: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct OosArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dissimilarities of the new objects to the in-sample objects, one row
    /// per new object.
    #[arg(long)]
    pub new: PathBuf,
    /// Dissimilarities among the new objects (k×k), for `--method batch`.
    #[arg(long)]
    pub new_pairs: Option<PathBuf>,
    /// Reuse the configuration from an `embed` output instead of
    /// re-embedding.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "restrict")]
    pub method: MethodArg,
    /// Solver tolerance; the method's default when absent.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap; the method's default when absent.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Number of λ steps along the arc.
    #[arg(long, default_value_t = 32)]
    pub arc_steps: usize,
    /// Seed for multi-start solvers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => EXIT_INPUT,
            CliError::Lib(e) => match e {
                Error::InsufficientPositiveSpectrum { .. }
                | Error::ConvergenceFailure { .. }
                | Error::ZeroSingularValue { .. }
                | Error::RankDeficientConfiguration { .. } => EXIT_SPECTRUM,
                Error::NearSingular { .. }
                | Error::BracketingFailure { .. }
                | Error::NonFiniteObjective
                | Error::CoincidentPoint { .. } => EXIT_SOLVER,
                _ => EXIT_INPUT,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Echo of the effective run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input: String,
    pub new: Option<String>,
    pub new_pairs: Option<String>,
    pub embedding: Option<String>,
    pub dim: usize,
    pub method: Option<MethodArg>,
    pub squared: bool,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub arc_steps: Option<usize>,
    pub seed: Option<u64>,
    pub format: Format,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResult {
    pub n: usize,
    pub dim: usize,
    /// n×d, row per object.
    pub configuration: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// n×d, columns are the retained eigenvectors.
    pub eigenvectors: Vec<Vec<f64>>,
    pub dropped_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedDiagnostics {
    pub dropped_mass: f64,
    pub degenerate_spectrum: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedOutput {
    pub config: RunConfig,
    pub result: EmbedResult,
    pub diagnostics: EmbedDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionOutput {
    pub index: usize,
    pub spectral: Vec<f64>,
    pub ols: Vec<f64>,
    pub landmark: Vec<f64>,
    pub residual_norm: f64,
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionOutput {
    pub index: usize,
    pub y_star: Vec<f64>,
    pub lambda_star: Option<f64>,
    pub objective: f64,
    pub hard_case: bool,
    pub beta: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchOutput {
    /// k×d, row per new object.
    pub y_star: Vec<Vec<f64>>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchDiagnostics {
    pub gradient_norm: f64,
    pub converged: bool,
    pub starts: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum OosResult {
    Project(Vec<ProjectionOutput>),
    Solutions(Vec<SolutionOutput>),
    Batch(BatchOutput),
}

#[derive(Debug, Clone, Serialize)]
pub struct OosOutput {
    pub config: RunConfig,
    pub result: OosResult,
    pub diagnostics: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcRow {
    pub lambda: f64,
    pub y: Vec<f64>,
    pub phi: f64,
    pub interpolated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcObject {
    pub index: usize,
    pub lambda_star: f64,
    pub y_star: Vec<f64>,
    pub points: Vec<ArcRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcOutput {
    pub config: RunConfig,
    pub result: Vec<ArcObject>,
    pub diagnostics: Vec<Diagnostics>,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Reads a numeric CSV. A first line that does not parse as numbers is
/// taken as a header; any later unparsable field is an error carrying its
/// line number.
pub fn read_csv_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: display(path),
        source,
    })?;
    parse_csv_matrix(file, &display(path))
}

pub fn parse_csv_matrix<R: io::Read>(reader: R, name: &str) -> CliResult<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Parse {
            path: name.into(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(width) = rows.first().map(Vec::len) {
                    if row.len() != width {
                        return Err(CliError::Parse {
                            path: name.into(),
                            line,
                            msg: format!("expected {width} fields, found {}", row.len()),
                        });
                    }
                }
                rows.push(row);
            }
            Err(_) if first => {}
            Err(e) => {
                let field = record.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                return Err(CliError::Parse {
                    path: name.into(),
                    line,
                    msg: format!("invalid number {field:?}: {e}"),
                });
            }
        }
        first = false;
    }
    if rows.is_empty() {
        return Err(CliError::Parse {
            path: name.into(),
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let (n, m) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Squared dissimilarities from raw input entries.
fn to_squared(raw: DMatrix<f64>, squared: bool) -> CliResult<DissimilarityMatrix> {
    let d = DissimilarityMatrix::new(raw)?;
    Ok(if squared { d } else { d.squared() })
}

/// New-object rows as squared dissimilarities, one column per object.
fn new_block(raw: &DMatrix<f64>, squared: bool, n: usize) -> CliResult<DMatrix<f64>> {
    if raw.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "new objects have {} dissimilarities, in-sample matrix has {n} objects",
            raw.ncols()
        ))
        .into());
    }
    let a = raw.transpose();
    Ok(if squared { a } else { a.map(|v| v * v) })
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_of(rows: &[Vec<f64>], what: &str) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Usage(format!("ragged {what} in embedding file")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn embed_result(x: &Configuration, tg: &TruncatedGram) -> (EmbedResult, EmbedDiagnostics) {
    (
        EmbedResult {
            n: x.n(),
            dim: x.dim(),
            configuration: rows_of(x.coords()),
            eigenvalues: tg.eigenvalues.iter().copied().collect(),
            eigenvectors: rows_of(&tg.vectors),
            dropped_eigenvalues: tg.dropped.iter().copied().collect(),
        },
        EmbedDiagnostics {
            dropped_mass: tg.dropped_mass(),
            degenerate_spectrum: tg.degenerate_spectrum,
        },
    )
}

/// Reads an `embed` output back into the library types.
pub fn load_embedding(path: &Path) -> CliResult<(Configuration, TruncatedGram, EmbedOutput)> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: display(path),
        source,
    })?;
    let out: EmbedOutput = serde_json::from_reader(io::BufReader::new(file)).map_err(|e| CliError::Parse {
        path: display(path),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let r = &out.result;
    let x = Configuration::new(matrix_of(&r.configuration, "configuration")?);
    let tg = TruncatedGram {
        eigenvalues: DVector::from_vec(r.eigenvalues.clone()),
        vectors: matrix_of(&r.eigenvectors, "eigenvectors")?,
        dropped: DVector::from_vec(r.dropped_eigenvalues.clone()),
        degenerate_spectrum: out.diagnostics.degenerate_spectrum,
    };
    if x.n() != r.n || x.dim() != r.dim || tg.vectors.shape() != (r.n, r.dim) || tg.dim() != r.dim {
        return Err(CliError::Usage(format!(
            "{}: inconsistent embedding shapes",
            display(path)
        )));
    }
    Ok((x, tg, out))
}

/// Writes `bytes` to `out` atomically, or to stdout.
fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let Some(path) = out else {
        let mut stdout = io::stdout().lock();
        return stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            });
    };
    let io_err = |source| CliError::Io {
        path: display(path),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output types serialize");
    bytes.push(b'\n');
    bytes
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv output: {e}")))
}

fn y_header(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("{prefix}_{j}")).collect()
}

fn fmt_row(v: &[f64]) -> Vec<String> {
    v.iter().map(f64::to_string).collect()
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Embed(args) => cmd_embed(args),
        Command::Oos(args) => cmd_oos(args),
        Command::Arc(args) => cmd_arc(args),
    }
}

fn base_config(command: &str, c: &CommonArgs, dim: usize) -> RunConfig {
    RunConfig {
        command: command.into(),
        input: display(&c.input),
        new: None,
        new_pairs: None,
        embedding: None,
        dim,
        method: None,
        squared: c.squared,
        tol: None,
        max_iter: None,
        arc_steps: None,
        seed: None,
        format: c.format,
    }
}

pub fn cmd_embed(args: &CommonArgs) -> CliResult<()> {
    let dim = args.dim.ok_or_else(|| CliError::Usage("embed requires --dim".into()))?;
    let delta2 = to_squared(read_csv_matrix(&args.input)?, args.squared)?;
    let (x, tg) = cmds_embed(&delta2, dim)?;
    let (result, diagnostics) = embed_result(&x, &tg);
    let bytes = match args.format {
        Format::Json => to_json(&EmbedOutput {
            config: base_config("embed", args, dim),
            result,
            diagnostics,
        }),
        Format::Csv => csv_bytes(&y_header("x", dim), result.configuration.iter().map(|r| fmt_row(r)))?,
    };
    emit(args.out.as_deref(), &bytes)
}

/// Everything the out-of-sample commands share once inputs are read.
struct OosSetup {
    config: RunConfig,
    delta2: DissimilarityMatrix,
    x: Configuration,
    tg: TruncatedGram,
    /// n×k squared dissimilarities to the new objects.
    a2: DMatrix<f64>,
}

fn oos_setup(command: &str, args: &OosArgs) -> CliResult<OosSetup> {
    let c = &args.common;
    if let Some(tol) = args.tol {
        if !(tol > 0.0) {
            return Err(CliError::Usage("--tol must be positive".into()));
        }
    }
    if args.max_iter == Some(0) {
        return Err(CliError::Usage("--max-iter must be at least 1".into()));
    }
    let delta2 = to_squared(read_csv_matrix(&c.input)?, c.squared)?;
    let (x, tg) = match &args.embedding {
        Some(path) => {
            let (x, tg, _) = load_embedding(path)?;
            if x.n() != delta2.n() {
                return Err(Error::DimensionMismatch(format!(
                    "embedding has {} objects, input has {}",
                    x.n(),
                    delta2.n()
                ))
                .into());
            }
            if c.dim.is_some_and(|d| d != x.dim()) {
                return Err(CliError::Usage(format!(
                    "--dim disagrees with embedding dimension {}",
                    x.dim()
                )));
            }
            (x, tg)
        }
        None => {
            let dim = c
                .dim
                .ok_or_else(|| CliError::Usage(format!("{command} requires --dim or --embedding")))?;
            cmds_embed(&delta2, dim)?
        }
    };
    let a2 = new_block(&read_csv_matrix(&args.new)?, c.squared, delta2.n())?;
    let mut config = base_config(command, c, x.dim());
    config.new = Some(display(&args.new));
    config.new_pairs = args.new_pairs.as_deref().map(display);
    config.embedding = args.embedding.as_deref().map(display);
    config.method = Some(args.method);
    config.seed = Some(args.seed);
    Ok(OosSetup {
        config,
        delta2,
        x,
        tg,
        a2,
    })
}

fn solve_options(args: &OosArgs) -> SolveOptions {
    let d = SolveOptions::default();
    SolveOptions {
        tol: args.tol.unwrap_or(d.tol),
        max_iter: args.max_iter.unwrap_or(d.max_iter),
    }
}

fn restrict_problem(s: &OosSetup, j: usize) -> CliResult<OosProblem> {
    let a2_col = s.a2.column(j).into_owned();
    let (b, beta) = dissim_to_centered_sim(&s.delta2, &a2_col, 0.0)?;
    Ok(OosProblem::new(s.x.clone(), b, beta)?)
}

pub fn cmd_oos(args: &OosArgs) -> CliResult<()> {
    let mut s = oos_setup("oos", args)?;
    let k = s.a2.ncols();
    let d = s.x.dim();
    let (result, diagnostics) = match args.method {
        MethodArg::Project => {
            let mut out = Vec::with_capacity(k);
            for j in 0..k {
                let cmp = project_all(&s.x, &s.tg, &s.delta2, &s.a2.column(j).into_owned())?;
                out.push(ProjectionOutput {
                    index: j,
                    spectral: cmp.spectral.y_hat.iter().copied().collect(),
                    ols: cmp.ols.y_hat.iter().copied().collect(),
                    landmark: cmp.landmark.y_hat.iter().copied().collect(),
                    residual_norm: cmp.ols.residual_norm,
                    max_discrepancy: cmp.max_discrepancy,
                });
            }
            let worst = out.iter().map(|o| o.max_discrepancy).fold(0.0, f64::max);
            (OosResult::Project(out), serde_json::json!({ "max_discrepancy": worst }))
        }
        MethodArg::Restrict => {
            let opts = solve_options(args);
            s.config.tol = Some(opts.tol);
            s.config.max_iter = Some(opts.max_iter);
            let mut out = Vec::with_capacity(k);
            for j in 0..k {
                let p = restrict_problem(&s, j)?;
                let r = solve_single(&p, &opts)?;
                out.push(SolutionOutput {
                    index: j,
                    y_star: r.y_star.iter().copied().collect(),
                    lambda_star: r.lambda_star,
                    objective: r.objective,
                    hard_case: r.hard_case,
                    beta: p.beta(),
                    diagnostics: r.diagnostics,
                });
            }
            let hard = out.iter().filter(|o| o.hard_case).count();
            (OosResult::Solutions(out), serde_json::json!({ "hard_cases": hard }))
        }
        MethodArg::Stress => {
            let def = StressOptions::default();
            let opts = StressOptions {
                tol: args.tol.unwrap_or(def.tol),
                max_iter: args.max_iter.unwrap_or(def.max_iter),
                seed: args.seed,
                ..def
            };
            s.config.tol = Some(opts.tol);
            s.config.max_iter = Some(opts.max_iter);
            let mut out = Vec::with_capacity(k);
            let mut monotone = true;
            for j in 0..k {
                let deltas = s.a2.column(j).map(f64::sqrt);
                let r = stress_oos(&s.x, &deltas, &opts)?;
                monotone &= r.diagnostics.monotone;
                let (_, beta) = dissim_to_centered_sim(&s.delta2, &s.a2.column(j).into_owned(), 0.0)?;
                out.push(SolutionOutput {
                    index: j,
                    y_star: r.y_star.iter().copied().collect(),
                    lambda_star: None,
                    objective: r.objective,
                    hard_case: false,
                    beta,
                    diagnostics: r.diagnostics,
                });
            }
            (OosResult::Solutions(out), serde_json::json!({ "monotone": monotone }))
        }
        MethodArg::Batch => {
            let def = BatchOptions::default();
            let opts = BatchOptions {
                tol: args.tol.unwrap_or(def.tol),
                max_iter: args.max_iter.unwrap_or(def.max_iter),
                seed: args.seed,
                ..def
            };
            s.config.tol = Some(opts.tol);
            s.config.max_iter = Some(opts.max_iter);
            let alpha2 = match &args.new_pairs {
                Some(path) => {
                    let raw = read_csv_matrix(path)?;
                    if args.common.squared {
                        raw
                    } else {
                        raw.map(|v| v * v)
                    }
                }
                None if k == 1 => DMatrix::zeros(1, 1),
                None => {
                    return Err(CliError::Usage(
                        "batch with several new objects requires --new-pairs".into(),
                    ))
                }
            };
            let block = OosRawBlock::new(s.a2.clone(), alpha2)?;
            let centered = tau_w(&block.augmented(&s.delta2)?, s.delta2.n())?;
            let bp = BatchProblem::from_centered(s.x.clone(), &centered)?;
            let r = solve_batch(&bp, &opts)?;
            (
                OosResult::Batch(BatchOutput {
                    y_star: rows_of(&r.y),
                    objective: r.objective,
                }),
                serde_json::to_value(BatchDiagnostics {
                    gradient_norm: r.gradient_norm,
                    converged: r.converged,
                    starts: r.starts,
                })
                .expect("diagnostics serialize"),
            )
        }
    };
    let bytes = match args.common.format {
        Format::Json => to_json(&OosOutput {
            config: s.config,
            result,
            diagnostics,
        }),
        Format::Csv => {
            let rows: Vec<Vec<f64>> = match &result {
                OosResult::Project(v) => v.iter().map(|o| o.ols.clone()).collect(),
                OosResult::Solutions(v) => v.iter().map(|o| o.y_star.clone()).collect(),
                OosResult::Batch(b) => b.y_star.clone(),
            };
            csv_bytes(&y_header("y", d), rows.iter().map(|r| fmt_row(r)))?
        }
    };
    emit(args.common.out.as_deref(), &bytes)
}

pub fn cmd_arc(args: &OosArgs) -> CliResult<()> {
    if args.method != MethodArg::Restrict {
        return Err(CliError::Usage("arc requires --method restrict".into()));
    }
    let mut s = oos_setup("arc", args)?;
    let opts = solve_options(args);
    s.config.tol = Some(opts.tol);
    s.config.max_iter = Some(opts.max_iter);
    s.config.arc_steps = Some(args.arc_steps);
    let k = s.a2.ncols();
    if args.common.format == Format::Csv && k != 1 {
        return Err(CliError::Usage(format!("arc CSV output takes one new object, got {k}")));
    }
    let mut objects = Vec::with_capacity(k);
    let mut diagnostics = Vec::with_capacity(k);
    for j in 0..k {
        let p = restrict_problem(&s, j)?;
        let r = solve_single(&p, &opts)?;
        let trace = arc(&p, &r, args.arc_steps)?;
        let points = trace
            .points
            .iter()
            .enumerate()
            .map(|(i, pt)| ArcRow {
                lambda: pt.lambda,
                y: pt.y.iter().copied().collect(),
                phi: pt.phi,
                interpolated: trace.interpolated_indices.contains(&i),
            })
            .collect();
        objects.push(ArcObject {
            index: j,
            lambda_star: r.lambda_star.expect("restricted solutions carry lambda"),
            y_star: r.y_star.iter().copied().collect(),
            points,
        });
        diagnostics.push(r.diagnostics);
    }
    let bytes = match args.common.format {
        Format::Json => to_json(&ArcOutput {
            config: s.config,
            result: objects,
            diagnostics,
        }),
        Format::Csv => {
            let d = s.x.dim();
            let mut header = vec!["lambda".to_string()];
            header.extend(y_header("y", d));
            header.extend(["phi".to_string(), "interpolated".to_string()]);
            let rows = objects[0].points.iter().map(|pt| {
                let mut row = vec![pt.lambda.to_string()];
                row.extend(fmt_row(&pt.y));
                row.push(pt.phi.to_string());
                row.push(pt.interpolated.to_string());
                row
            });
            csv_bytes(&header, rows)?
        }
    };
    emit(args.common.out.as_deref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let with = parse_csv_matrix("a,b\n0,1\n1,0\n".as_bytes(), "t").unwrap();
        let without = parse_csv_matrix("0,1\n1,0\n".as_bytes(), "t").unwrap();
        assert_eq!(with, without);
        assert_eq!(with, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn bad_field_reports_line() {
        let err = parse_csv_matrix("0,1\n1,x\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
        assert_eq!(err.exit_code(), EXIT_INPUT);
        let err = parse_csv_matrix("0,1\n1\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn exit_code_classes() {
        let spectrum = CliError::Lib(Error::InsufficientPositiveSpectrum {
            requested: 1,
            available: 0,
        });
        assert_eq!(spectrum.exit_code(), EXIT_SPECTRUM);
        assert_eq!(
            CliError::Lib(Error::BracketingFailure { scanned_to: 1.0 }).exit_code(),
            EXIT_SOLVER
        );
        assert_eq!(
            CliError::Lib(Error::NonSquare { rows: 1, cols: 2 }).exit_code(),
            EXIT_INPUT
        );
    }
}
