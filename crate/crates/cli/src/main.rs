//! `hyparr`: train, evaluate, and benchmark hyperplane-arrangement
//! classifiers from the command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::error::Error;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hyparr::bench::{
    aggregate_table, performance_profile, read_rows_csv, run_benchmark, write_aggregate_csv,
    write_profile_csv, write_rows_csv, ExperimentGrid, Method,
};
use hyparr::classifier::{fit, FitConfig};
use hyparr::dataset::{generate_blobs, BlobSpec, Dataset, LabelColumn};
use hyparr::heuristic::{dynamic_fit, write_trace_csv, DynamicConfig};
use hyparr::kernel::KernelFn;
use hyparr::milp::{AKind, PNorm, SymmetryStrategy};
use hyparr::solver::SolveOptions;
use hyparr::Classifier;

#[derive(Parser, Debug)]
#[command(name = "hyparr", version, about = "Hyperplane-arrangement classifier toolkit")]
struct Cli {
    /// Default directory for output files with relative paths.
    #[arg(long, global = true, env = "HYPARR_OUTDIR", default_value = ".")]
    outdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Gaussian-blob instance and write it as CSV.
    Generate(GenerateArgs),
    /// Train a classifier on a labeled CSV file.
    Fit(FitArgs),
    /// Predict classes for a CSV of feature rows; appends a class column.
    Predict(PredictArgs),
    /// Report accuracy and hinge error of a saved model on labeled data.
    Evaluate(EvaluateArgs),
    /// Train with the dynamic-clustering heuristic.
    HeuristicFit(HeuristicArgs),
    /// Run an instance grid and persist per-run result rows plus aggregates.
    Benchmark(BenchmarkArgs),
    /// Build a performance-profile table from persisted result rows.
    Profile(ProfileArgs),
    /// Head-to-head micro-benchmark against the prior point-assignment model.
    CompareBjp20(CompareArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NormArg {
    L1,
    L2,
    Linf,
}

impl NormArg {
    fn to_pnorm(self) -> PNorm {
        match self {
            NormArg::L1 => PNorm::L1,
            NormArg::L2 => PNorm::L2,
            NormArg::Linf => PNorm::LInf,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SymmetryArg {
    /// No symmetry handling.
    None,
    /// Ordered nonnegative bias terms.
    Sym2,
    /// Fix the first cell's class and pin one point.
    Sym3,
    /// Both strategies combined.
    Both,
}

impl SymmetryArg {
    fn to_strategy(self) -> SymmetryStrategy {
        match self {
            SymmetryArg::None => SymmetryStrategy::None,
            SymmetryArg::Sym2 => SymmetryStrategy::OrderedBias,
            SymmetryArg::Sym3 => SymmetryStrategy::CellFix,
            SymmetryArg::Both => SymmetryStrategy::Both,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KernelArg {
    Linear,
    Rbf,
    Poly,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Gaussian clusters per class.
    #[arg(long, default_value_t = 2)]
    clusters_per_class: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Labeled CSV (label column named "label", or use --label-column).
    #[arg(long)]
    data: PathBuf,
    /// Header name or zero-based index of the label column.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Number of hyperplanes (arrangement/kernel mode) or tree depth.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Fit a decision tree of depth `m` instead of a full arrangement.
    #[arg(long, default_value_t = false)]
    tree: bool,
    /// Coefficient-norm family for linear/tree mode.
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    norm: NormArg,
    /// Coefficient norm bound.
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Sym3)]
    symmetry: SymmetryArg,
    /// Kernelize the model (conflicts with --tree).
    #[arg(long, value_enum, conflicts_with = "tree")]
    kernel: Option<KernelArg>,
    /// RBF width parameter.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Polynomial kernel degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Polynomial kernel offset.
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Wall-clock solve limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    /// Output model path (JSON).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV; a column named "label" is ignored if present.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV; the input columns plus a trailing "class" column.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
}

#[derive(Args, Debug)]
struct HeuristicArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    norm: NormArg,
    #[arg(long, default_value_t = 6.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Sym3)]
    symmetry: SymmetryArg,
    /// Initial clusters per class.
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Wall-clock limit in seconds over the whole loop.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 3)]
    min_cluster_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 20, 30, 40, 50, 100])]
    n: Vec<usize>,
    /// Generator clusters per class.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
    b: Vec<usize>,
    /// Class counts.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
    k: Vec<usize>,
    /// Feature dimensions.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 5, 10])]
    d: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    /// Gaussian spread of the generated clusters (larger = more class overlap).
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3])]
    m: Vec<usize>,
    /// Margin rule: kappa = this factor times m.
    #[arg(long, default_value_t = 2.0)]
    kappa_per_m: f64,
    /// Methods: any of exact-none, exact-sym2, exact-sym3, exact-both, bjp20.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["exact-sym3".to_string()])]
    methods: Vec<String>,
    /// Per-solve wall-clock limit in seconds (desk-scale default 60; the full
    /// study used 3600).
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-run result rows CSV.
    #[arg(long, default_value = "benchmark_rows.csv")]
    rows_out: PathBuf,
    /// Per-(n,m) aggregate CSV.
    #[arg(long, default_value = "benchmark_aggregate.csv")]
    aggregate_out: PathBuf,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Result rows CSV produced by `benchmark`.
    #[arg(long)]
    rows: PathBuf,
    /// Methods to include (default: every method present in the rows).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, default_value = "profile.csv")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 20])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    /// Gaussian spread of the generated clusters (larger = more class overlap).
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "compare_rows.csv")]
    rows_out: PathBuf,
    #[arg(long, default_value = "compare_profile.csv")]
    profile_out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn resolve(outdir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        outdir.join(path)
    }
}

fn label_column(spec: &str) -> LabelColumn {
    match spec.parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(spec.to_string()),
    }
}

fn parse_method(name: &str) -> Result<Method, String> {
    match name {
        "exact-none" => Ok(Method::Exact { symmetry: SymmetryStrategy::None }),
        "exact-sym2" => Ok(Method::Exact { symmetry: SymmetryStrategy::OrderedBias }),
        "exact-sym3" => Ok(Method::Exact { symmetry: SymmetryStrategy::CellFix }),
        "exact-both" => Ok(Method::Exact { symmetry: SymmetryStrategy::Both }),
        "bjp20" => Ok(Method::Bjp20),
        other => Err(format!("unknown method '{other}'")),
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    // every run echoes its full configuration for reproducibility
    println!("config: outdir={:?} {:?}", cli.outdir, cli.command);
    let outdir = cli.outdir;
    std::fs::create_dir_all(&outdir)?;
    match cli.command {
        Command::Generate(a) => {
            let data = generate_blobs(&BlobSpec {
                n: a.n,
                clusters_per_class: a.clusters_per_class,
                class_count: a.classes,
                dimension: a.dim,
                spread: a.spread,
                seed: a.seed,
            })?;
            let path = resolve(&outdir, &a.output);
            data.write_csv(BufWriter::new(File::create(&path)?))?;
            println!(
                "wrote {} rows, {} classes, {} features -> {}",
                data.len(),
                data.class_count(),
                data.feature_count(),
                path.display()
            );
        }
        Command::Fit(a) => {
            let (data, names) = Dataset::load_csv_named(&a.data, &label_column(&a.label_column))?;
            let a_kind = AKind::NormBall { p: a.norm.to_pnorm(), kappa: a.kappa };
            let mut config = match a.kernel {
                Some(k) => {
                    let kfn = match k {
                        KernelArg::Linear => KernelFn::Linear,
                        KernelArg::Rbf => KernelFn::Rbf { sigma: a.sigma },
                        KernelArg::Poly => {
                            KernelFn::Polynomial { degree: a.degree, offset: a.offset }
                        }
                    };
                    FitConfig::kernel(a.m, a.kappa, kfn)
                }
                None if a.tree => FitConfig::tree(a.m, a_kind),
                None => FitConfig::arrangement(a.m, a_kind),
            };
            config.symmetry = a.symmetry.to_strategy();
            config.solve = SolveOptions {
                time_limit: a.time_limit,
                rel_gap_target: a.gap,
                ..Default::default()
            };
            let mut clf = fit(&data, &config)?;
            clf.class_names = Some(names);
            let path = resolve(&outdir, &a.output);
            clf.save(&path)?;
            println!(
                "fit: objective {:.6}, gap {:.2e}, train accuracy {:.4}, {} -> {}",
                clf.objective,
                clf.rel_gap,
                clf.accuracy(&data)?,
                if clf.optimal { "optimal" } else { "time limit" },
                path.display()
            );
            for w in &clf.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Predict(a) => {
            let clf = Classifier::load(&a.model)?;
            let path = resolve(&outdir, &a.output);
            let n = predict_csv(&clf, &a.input, &path)?;
            println!("predicted {} rows -> {}", n, path.display());
        }
        Command::Evaluate(a) => {
            let clf = Classifier::load(&a.model)?;
            let (data, names) = Dataset::load_csv_named(&a.data, &label_column(&a.label_column))?;
            // compare by original label name so the eval file's own encoding
            // order does not matter
            let display = |class: usize| -> String {
                match &clf.class_names {
                    Some(ns) if class <= ns.len() => ns[class - 1].clone(),
                    _ => class.to_string(),
                }
            };
            let mut hits = 0usize;
            for i in 0..data.len() {
                let predicted = display(clf.predict(data.point(i))?);
                if predicted == names[data.label(i) - 1] {
                    hits += 1;
                }
            }
            let hinge = match remap_to_model(&clf, data.clone(), &names) {
                Ok(mapped) => format!("{:.6}", clf.training_error(&mapped)?),
                Err(_) => "n/a (class set differs from training)".into(),
            };
            println!(
                "accuracy {:.4}, hinge error {} on {} rows",
                hits as f64 / data.len() as f64,
                hinge,
                data.len()
            );
        }
        Command::HeuristicFit(a) => {
            let (data, names) =
                Dataset::load_csv_named(&a.data, &label_column(&a.label_column))?;
            let a_kind = AKind::NormBall { p: a.norm.to_pnorm(), kappa: a.kappa };
            let mut fit_config = FitConfig::arrangement(a.m, a_kind);
            fit_config.symmetry = a.symmetry.to_strategy();
            let config = DynamicConfig {
                n_clusters_per_class: a.clusters,
                max_iterations: a.max_iterations,
                time_limit: a.time_limit,
                min_cluster_size: a.min_cluster_size,
                seed: a.seed,
                ..Default::default()
            };
            let (mut clf, trace) = dynamic_fit(&data, &fit_config, &config)?;
            clf.class_names = Some(names);
            if let Some(trace_path) = &a.trace {
                let path = resolve(&outdir, trace_path);
                write_trace_csv(&trace, BufWriter::new(File::create(&path)?))?;
                println!("trace ({} iterations) -> {}", trace.len(), path.display());
            }
            let path = resolve(&outdir, &a.output);
            clf.save(&path)?;
            let last = trace.last().map(|t| t.stop_reason.clone()).unwrap_or_default();
            println!(
                "heuristic fit: full-data error {:.6}, accuracy {:.4}, stop {last} -> {}",
                clf.training_error(&data)?,
                clf.accuracy(&data)?,
                path.display()
            );
        }
        Command::Benchmark(a) => {
            let methods = a
                .methods
                .iter()
                .map(|m| parse_method(m))
                .collect::<Result<Vec<_>, _>>()?;
            let grid = ExperimentGrid {
                n_values: a.n,
                b_values: a.b,
                k_values: a.k,
                d_values: a.d,
                replicates: a.replicates,
                spread: a.spread,
                m_values: a.m,
                kappa_per_m: a.kappa_per_m,
                methods,
                solve: SolveOptions { time_limit: a.time_limit, ..Default::default() },
                master_seed: a.seed,
            };
            let mut out = std::io::stdout();
            let rows = run_benchmark(&grid, Some(&mut out))?;
            let rows_path = resolve(&outdir, &a.rows_out);
            write_rows_csv(&rows, BufWriter::new(File::create(&rows_path)?))?;
            let agg = aggregate_table(&rows);
            let agg_path = resolve(&outdir, &a.aggregate_out);
            write_aggregate_csv(&agg, BufWriter::new(File::create(&agg_path)?))?;
            println!("rows -> {}", rows_path.display());
            println!("aggregates -> {}", agg_path.display());
            println!("n,m,method,cpu_seconds,gap_percent,percent_unsolved");
            for r in &agg {
                println!(
                    "{},{},{},{},{},{:.1}",
                    r.n, r.m, r.method, r.cpu, r.gap, r.percent_unsolved
                );
            }
        }
        Command::Profile(a) => {
            let text = std::fs::read_to_string(&a.rows)?;
            let rows = read_rows_csv(&text)?;
            let methods = a.methods.unwrap_or_else(|| {
                let mut ms: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
                ms.sort();
                ms.dedup();
                ms
            });
            let profile = performance_profile(&rows, &methods)?;
            let path = resolve(&outdir, &a.output);
            write_profile_csv(&profile, BufWriter::new(File::create(&path)?))?;
            println!("profile over {} thresholds -> {}", profile.thresholds.len(), path.display());
        }
        Command::CompareBjp20(a) => {
            let methods = vec![
                Method::Exact { symmetry: SymmetryStrategy::CellFix },
                Method::Bjp20,
            ];
            let grid = ExperimentGrid {
                n_values: a.n,
                b_values: vec![2],
                k_values: vec![2],
                d_values: vec![2],
                replicates: a.replicates,
                spread: a.spread,
                m_values: a.m,
                kappa_per_m: 2.0,
                methods,
                solve: SolveOptions { time_limit: a.time_limit, ..Default::default() },
                master_seed: a.seed,
            };
            let mut out = std::io::stdout();
            let rows = run_benchmark(&grid, Some(&mut out))?;
            let rows_path = resolve(&outdir, &a.rows_out);
            write_rows_csv(&rows, BufWriter::new(File::create(&rows_path)?))?;
            let names: Vec<String> = grid.methods.iter().map(|m| m.name()).collect();
            let profile = performance_profile(&rows, &names)?;
            let profile_path = resolve(&outdir, &a.profile_out);
            write_profile_csv(&profile, BufWriter::new(File::create(&profile_path)?))?;
            for (name, counts) in names.iter().zip(&profile.counts) {
                println!("{name}: {} optimal within final threshold", counts.last().unwrap());
            }
            println!("rows -> {}", rows_path.display());
            println!("profile -> {}", profile_path.display());
        }
    }
    Ok(())
}

/// Re-encodes a freshly loaded dataset so its class ids line up with the ids
/// the model was trained with, matching on the original label names.
fn remap_to_model(
    clf: &Classifier,
    data: Dataset,
    names: &[String],
) -> Result<Dataset, Box<dyn Error>> {
    let Some(model_names) = &clf.class_names else {
        return Ok(data);
    };
    let to_model = |name: &String| -> Result<usize, Box<dyn Error>> {
        model_names
            .iter()
            .position(|n| n == name)
            .map(|i| i + 1)
            .ok_or_else(|| format!("label '{name}' was not present at training time").into())
    };
    let labels = data
        .labels()
        .iter()
        .map(|&l| to_model(&names[l - 1]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(data.points().to_vec(), labels)?)
}

/// Reads a feature CSV (ignoring any column named "label"), appends a "class"
/// column with the model's prediction, and writes the result.
fn predict_csv(clf: &Classifier, input: &Path, output: &Path) -> Result<usize, Box<dyn Error>> {
    let mut reader = csv::Reader::from_path(input)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers.iter().position(|h| h == "label");
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(output)?));
    let mut out_header: Vec<&str> = headers.iter().collect();
    out_header.push("class");
    writer.write_record(&out_header)?;
    let mut count = 0;
    for record in reader.records() {
        let record = record?;
        let features: Vec<f64> = record
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, v)| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()?;
        let class = clf.predict(&features)?;
        let name = match &clf.class_names {
            Some(ns) if class <= ns.len() => ns[class - 1].clone(),
            _ => class.to_string(),
        };
        let mut out: Vec<String> = record.iter().map(str::to_string).collect();
        out.push(name);
        writer.write_record(&out)?;
        count += 1;
    }
    writer.flush()?;
    Ok(count)
}
