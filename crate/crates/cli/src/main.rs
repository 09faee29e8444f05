use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use tdbht::fmt::sig;
use tdbht::matrix::{self, DisMatrix, SimMatrix, TableFormat};
use tdbht::metrics::{ari, load_labels, write_labels};
use tdbht::pipeline::{self, DbhtOutput, PhaseTimings, PipelineConfig};
use tdbht::synth::{gen_synthetic, write_series, SyntheticConfig};
use tdbht::Error;

#[derive(Parser)]
#[command(name = "tdbht", version, about = "TMFG + DBHT hierarchical clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a data set and write the requested artifacts.
    Run(RunArgs),
    /// Generate Gaussian-cluster time series.
    Gen(GenArgs),
    /// Time the four pipeline phases over a grid of prefixes and thread counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// One series per row; similarity is the Pearson correlation.
    Timeseries,
    /// Square similarity matrix with entries in [-1, 1].
    Similarity,
    /// Similarity matrix in --input plus dissimilarity matrix in --dis-input.
    DissimilarityPair,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Auto,
    Csv,
    Whitespace,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Auto => TableFormat::Auto,
            Format::Csv => TableFormat::Csv,
            Format::Whitespace => TableFormat::Whitespace,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "timeseries")]
    kind: Kind,
    /// Dissimilarity matrix for `--kind dissimilarity-pair`.
    #[arg(long, required_if_eq("kind", "dissimilarity-pair"))]
    dis_input: Option<PathBuf>,
    /// Skip the first line of every input table.
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value = "auto")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Maximum insertions per TMFG round.
    #[arg(long, default_value_t = 1)]
    prefix: usize,
    /// Worker threads (default: all available).
    #[arg(long)]
    threads: Option<usize>,
    /// Cut the dendrogram into this many clusters.
    #[arg(long)]
    cut: Option<usize>,
    /// Ground-truth labels, one integer per line; prints the ARI of the cut.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out_linkage: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_newick: Option<PathBuf>,
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// TMFG edge list, "i j w" per line.
    #[arg(long)]
    out_edges: Option<PathBuf>,
    /// Print per-phase timings as CSV.
    #[arg(long)]
    bench: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observations per series.
    #[arg(long, default_value_t = 100)]
    len: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Series file (CSV).
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth cluster of each series.
    #[arg(long)]
    out_labels: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Data set; without it a synthetic set of --n series is generated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "timeseries")]
    kind: Kind,
    #[arg(long)]
    dis_input: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value = "auto")]
    format: Format,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,10,50")]
    prefix: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    threads: Vec<usize>,
    /// Runs per configuration; the fastest is reported.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Parse { .. } => 4,
        Error::NotSquare { .. } => 5,
        Error::RaggedRows { .. } => 6,
        Error::TooSmall { .. } => 7,
        Error::NonFinite { .. } => 8,
        Error::Asymmetric { .. } => 9,
        Error::OutOfRange { .. } => 10,
        Error::ZeroVariance { .. } => 11,
        Error::NegativeWeight { .. } => 12,
        Error::DimensionMismatch { .. } => 13,
        Error::InvalidPrefix => 14,
        Error::InvalidCut { .. } => 15,
        Error::LengthMismatch { .. } => 16,
        Error::Unassignable { .. } => 17,
        Error::StaleFace(_) => 18,
        Error::UnknownFace(_) => 19,
        Error::MonotonicityViolation { .. } => 20,
        Error::ThreadPool(_) => 21,
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> tdbht::Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn load_input(
    path: &Path,
    kind: Kind,
    dis_input: Option<&Path>,
    format: TableFormat,
    header: bool,
) -> tdbht::Result<(SimMatrix, DisMatrix)> {
    let s = match kind {
        Kind::Timeseries => matrix::pearson_similarity(&matrix::load_time_series(path, format, header)?)?,
        Kind::Similarity | Kind::DissimilarityPair => matrix::load_matrix(path, format, header)?,
    };
    let d = match (kind, dis_input) {
        (Kind::DissimilarityPair, Some(p)) => matrix::load_dissimilarity(p, format, header)?,
        _ => matrix::to_dissimilarity(&s)?,
    };
    if s.n() != d.n() {
        return Err(Error::DimensionMismatch { left: s.n(), right: d.n() });
    }
    Ok((s, d))
}

fn timing_header() -> String {
    let phases: Vec<&str> = PhaseTimings::default().phases().iter().map(|p| p.0).collect();
    format!("n,prefix,threads,{},total", phases.join(","))
}

fn timing_row(n: usize, prefix: usize, threads: usize, t: &PhaseTimings) -> String {
    let cells: Vec<String> = t.phases().iter().map(|p| sig(p.1.as_secs_f64())).collect();
    format!("{n},{prefix},{threads},{},{}", cells.join(","), sig(t.total().as_secs_f64()))
}

fn run(args: RunArgs) -> tdbht::Result<()> {
    let cfg = PipelineConfig::new(args.prefix)?;
    let cfg = match args.threads {
        Some(t) => cfg.with_threads(t),
        None => cfg,
    };
    let inp = &args.input;
    let (s, d) = load_input(&inp.input, inp.kind, inp.dis_input.as_deref(), inp.format.into(), inp.header)?;
    let n = s.n();

    // Everything that can fail on user input is checked before the pipeline runs.
    let truth = args.labels.as_deref().map(load_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != n {
            return Err(Error::LengthMismatch { truth: t.len(), pred: n });
        }
    }
    let k = match (args.cut, &truth) {
        (Some(k), _) => Some(k),
        (None, Some(t)) => {
            let mut distinct = t.clone();
            distinct.sort_unstable();
            distinct.dedup();
            Some(distinct.len())
        }
        (None, None) => None,
    };
    if let Some(k) = k {
        if k == 0 || k > n {
            return Err(Error::InvalidCut { k, n });
        }
    }

    let out: DbhtOutput = pipeline::run(&s, &d, &cfg)?;
    info!(
        "n={n} rounds={} bubbles={} groups={}",
        out.graph.rounds(),
        out.tree.len(),
        out.dendrogram.group_sizes().len()
    );

    if let Some(p) = &args.out_edges {
        write_file(p, |w| out.graph.write_edge_list(w))?;
    }
    if let Some(p) = &args.out_linkage {
        write_file(p, |w| out.dendrogram.write_linkage(w))?;
    }
    if let Some(p) = &args.out_json {
        write_file(p, |w| out.dendrogram.write_json(w))?;
    }
    if let Some(p) = &args.out_newick {
        write_file(p, |w| out.dendrogram.write_newick(w))?;
    }
    let labels = k.map(|k| out.dendrogram.cut(k)).transpose()?;
    if let (Some(p), Some(l)) = (&args.out_labels, &labels) {
        write_file(p, |w| write_labels(l, w))?;
    }

    let stdout = io::stdout();
    let mut so = stdout.lock();
    let report = |so: &mut io::StdoutLock| -> io::Result<()> {
        if let (Some(t), Some(l)) = (&truth, &labels) {
            let pred: Vec<i64> = l.iter().map(|&x| x as i64).collect();
            let score = ari(t, &pred).expect("lengths checked");
            writeln!(so, "ari {}", sig(score))?;
        }
        if args.bench {
            let threads = args.threads.unwrap_or_else(rayon_threads);
            writeln!(so, "{}", timing_header())?;
            writeln!(so, "{}", timing_row(n, args.prefix, threads, &out.timings))?;
        }
        Ok(())
    };
    report(&mut so).map_err(io_err(Path::new("<stdout>")))
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn gen(args: GenArgs) -> tdbht::Result<()> {
    let cfg = SyntheticConfig { n: args.n, clusters: args.clusters, len: args.len, noise: args.noise, seed: args.seed };
    let (ts, labels) = gen_synthetic(&cfg)?;
    write_file(&args.output, |w| write_series(&ts, w))?;
    if let Some(p) = &args.out_labels {
        write_file(p, |w| write_labels(&labels, w))?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> tdbht::Result<()> {
    let (s, d) = match &args.input {
        Some(path) => load_input(path, args.kind, args.dis_input.as_deref(), args.format.into(), args.header)?,
        None => {
            let (ts, _) = gen_synthetic(&SyntheticConfig::new(args.n, args.clusters, args.seed))?;
            let s = matrix::pearson_similarity(&ts)?;
            let d = matrix::to_dissimilarity(&s)?;
            (s, d)
        }
    };
    let threads = if args.threads.is_empty() { vec![rayon_threads()] } else { args.threads.clone() };
    let mut so = io::stdout().lock();
    let print = |so: &mut io::StdoutLock, line: String| writeln!(so, "{line}").map_err(io_err(Path::new("<stdout>")));
    print(&mut so, timing_header())?;
    for &t in &threads {
        for &p in &args.prefix {
            let cfg = PipelineConfig::new(p)?.with_threads(t);
            let mut best: Option<PhaseTimings> = None;
            for _ in 0..args.repeat.max(1) {
                let out = pipeline::run(&s, &d, &cfg)?;
                if best.is_none_or(|b| out.timings.total() < b.total()) {
                    best = Some(out.timings);
                }
            }
            print(&mut so, timing_row(s.n(), p, t, &best.expect("at least one run")))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
