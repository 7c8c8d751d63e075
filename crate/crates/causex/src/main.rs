use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use causex::config::{ConfigFile, ModelSelection, RunConfig};
use causex::{imageio, imagenet, instances, run_batch, run_single, Status};
use causex_core::classifier::protocol;
use causex_core::oracle::compare_greedy;
use causex_core::taxonomy::{load_taxonomy, TaxonomyTree};
use causex_core::{BuiltinModel, Classifier, Shape};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "causex", version, about = "Causal explanations for black-box image classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one image.
    Explain {
        image: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Explain every image in a directory and aggregate statistics.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        taxonomy_edges: Option<PathBuf>,
        #[arg(long)]
        class_map: Option<PathBuf>,
        /// Use the bundled ImageNet-1K hierarchy for distances.
        #[arg(long, conflicts_with_all = ["taxonomy_edges", "class_map"])]
        imagenet_taxonomy: bool,
    },
    /// Compare the greedy pipeline with exhaustive ground truth on a tiny grid.
    OracleCheck {
        /// Builtin name (optionally `name@HxW`) or instance JSON file.
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tree distance between two classes (index or node name).
    TaxonomyDist {
        /// Defaults to the bundled ImageNet-1K hierarchy.
        #[arg(long, requires = "map")]
        edges: Option<PathBuf>,
        #[arg(long, requires = "edges")]
        map: Option<PathBuf>,
        /// Print the largest class-to-class distance instead.
        #[arg(long, conflicts_with_all = ["class_a", "class_b"])]
        diameter: bool,
        #[arg(required_unless_present = "diameter")]
        class_a: Option<String>,
        #[arg(required_unless_present = "diameter")]
        class_b: Option<String>,
    },
    /// Serve a builtin classifier over the subprocess protocol on stdin/stdout.
    #[command(hide = true)]
    ServeBuiltin { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Model manifest / `.onnx` path, or the subprocess command line.
    #[arg(long)]
    model: Option<String>,
    /// `onnx`, `subprocess` or `builtin:<name>`.
    #[arg(long)]
    backend: Option<String>,
    /// `HxWxC`.
    #[arg(long)]
    input_shape: Option<String>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    baseline: Option<f32>,
    #[arg(long)]
    precision_dp: Option<u32>,
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long)]
    min_area: Option<usize>,
    /// Disable multi-threaded evaluation.
    #[arg(long)]
    sequential: bool,
    #[arg(long, default_value = "causex-out")]
    out: PathBuf,
    /// TOML file with `[run]` and `[model]` tables; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<(RunConfig, ModelSelection, ConfigFile)> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mut run = file.run.clone();
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { run.$f = v; } )* };
        }
        over!(delta, seed, iterations, baseline, precision_dp, branching, min_area);
        run.sequential |= self.sequential;
        let mut model = file.model.clone();
        if self.model.is_some() {
            model.model = self.model.clone();
        }
        if self.backend.is_some() {
            model.backend = self.backend.clone();
        }
        if self.input_shape.is_some() {
            model.input_shape = self.input_shape.clone();
        }
        if self.classes.is_some() {
            model.classes = self.classes;
        }
        Ok((run, model, file))
    }
}

fn load_classifier(model: &ModelSelection, native: Option<Shape>, run: &RunConfig) -> anyhow::Result<Classifier> {
    let spec = model.spec(native)?;
    Ok(Classifier::load_with(spec, run.execution())?)
}

fn explain(image: &Path, args: &RunArgs) -> anyhow::Result<ExitCode> {
    let (run, model, _) = args.resolve()?;
    let native = imageio::native_shape(image).ok();
    let classifier = load_classifier(&model, native, &run)?;
    let outcome = run_single(image, &classifier, &run, &args.out)?;
    match (&outcome.status, &outcome.record) {
        (Status::Ok, Some(r)) => {
            println!("{}", serde_json::to_string_pretty(r)?);
            eprintln!("wrote {} ({} ms)", args.out.display(), outcome.wallclock_ms);
            Ok(ExitCode::SUCCESS)
        }
        (status, _) => {
            println!("{}", serde_json::to_string_pretty(status)?);
            Ok(ExitCode::from(if matches!(status, Status::NotFound { .. }) { 3 } else { 2 }))
        }
    }
}

fn batch(
    dir: &Path,
    args: &RunArgs,
    edges: Option<&Path>,
    map: Option<&Path>,
    bundled: bool,
) -> anyhow::Result<ExitCode> {
    let (run, model, file) = args.resolve()?;
    let edges = edges.map(Path::to_path_buf).or(file.taxonomy_edges);
    let map = map.map(Path::to_path_buf).or(file.class_map);
    let taxonomy: Option<TaxonomyTree> = match (edges, map, bundled) {
        (_, _, true) => Some(imagenet::taxonomy()?),
        (Some(e), Some(m), _) => Some(load_taxonomy(&e, &m)?),
        (None, None, _) => None,
        _ => bail!("--taxonomy-edges and --class-map go together"),
    };
    // builtins without a shape take it from the first image
    let native = causex::batch::require_images(dir)?
        .first()
        .and_then(|(_, p)| imageio::native_shape(p).ok());
    let classifier = load_classifier(&model, native, &run)?;
    let summary = run_batch(dir, &classifier, &run, taxonomy.as_ref(), &args.out)?;
    eprintln!(
        "{} images: {} ok, {} not_found, {} error; wrote {}",
        summary.manifest.images.len(),
        summary.count("ok"),
        summary.count("not_found"),
        summary.count("error"),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn oracle_check(instance: &str, delta: f64, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let inst = instances::resolve(instance)?;
    let report = compare_greedy(&inst, delta)?;
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(p) = out {
        std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{text}");
    let agrees = report.max_responsibility_diff <= 1e-12
        && report.greedy.as_ref().is_none_or(|g| g.contains_oracle_minimal && g.shrunk_at_least_min);
    Ok(if agrees { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn taxonomy_dist(
    edges: Option<&Path>,
    map: Option<&Path>,
    diameter: bool,
    a: Option<&str>,
    b: Option<&str>,
) -> anyhow::Result<ExitCode> {
    let tree = match (edges, map) {
        (Some(e), Some(m)) => load_taxonomy(e, m)?,
        _ => imagenet::taxonomy()?,
    };
    if diameter {
        let (d, x, y) = tree.diameter(causex_core::Execution::default());
        println!("{d}\t{x}\t{y}");
    } else {
        let x = tree.resolve_class(a.expect("required by clap"))?;
        let y = tree.resolve_class(b.expect("required by clap"))?;
        println!("{}", tree.shortest_path(x, y)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn serve_builtin(name: &str) -> anyhow::Result<ExitCode> {
    let model: BuiltinModel = name.parse().map_err(anyhow::Error::msg)?;
    let stdin = std::io::stdin().lock();
    let stdout = BufWriter::new(std::io::stdout().lock());
    protocol::serve(BufReader::new(stdin), stdout, |shape, pixels| {
        model.check_fits(shape.pixels())?;
        let probs = model.evaluate(&BuiltinModel::on_pattern(shape, pixels));
        let label = causex_core::ClassifierOutput::from_probs(probs.clone()).label as u32;
        Ok((label, probs.into_iter().map(|p| p as f32).collect()))
    })?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Explain { image, run } => explain(image, run),
        Command::Batch { dir, run, taxonomy_edges, class_map, imagenet_taxonomy } => {
            batch(dir, run, taxonomy_edges.as_deref(), class_map.as_deref(), *imagenet_taxonomy)
        }
        Command::OracleCheck { instance, delta, out } => oracle_check(instance, *delta, out.as_deref()),
        Command::TaxonomyDist { edges, map, diameter, class_a, class_b } => {
            taxonomy_dist(edges.as_deref(), map.as_deref(), *diameter, class_a.as_deref(), class_b.as_deref())
        }
        Command::ServeBuiltin { name } => serve_builtin(name),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
