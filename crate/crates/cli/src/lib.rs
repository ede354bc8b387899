//! Command-line front end: one subcommand per pipeline stage.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or numerical
//! errors. Data goes to the output stream (or `--out`), diagnostics to the
//! error stream.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sentic_core::graph::{load_assertions, load_emotion_labels, normalize_concept};
use sentic_core::hourglass::{
    polarity, quantize, AffectiveDimension, GaussParams, SenticVector, DEFAULT_NEUTRAL_DELTA,
};
use sentic_core::lexicon::{
    affect_matrix, blend_sources, build_entries, embed, manual_categories, predict_concepts,
    render_lexicon,
};
use sentic_core::matrix::{
    blend, graph_to_matrix, load_triplets, BlendSpec, BlendWeight, ConceptFeatureMatrix,
};
use sentic_core::predictor::{
    load_benchmark, load_predictions, load_predictor, render_predictions, train_sentic, ElmParams,
    DEFAULT_HIDDEN, DEFAULT_LAMBDA, DEFAULT_SEED,
};
use sentic_core::spectral::{infer_assertions, load_space, AffectiveSpace, DEFAULT_K, DEFAULT_TAU};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "sentic",
    version,
    about = "Build a concept-level sentiment lexicon from blended knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert an assertion file or an emotion label file to a matrix.
    Ingest(IngestArgs),
    /// Blend matrices over the union of their rows and features.
    Blend(BlendArgs),
    /// Embed concepts by truncated SVD.
    Embed(EmbedArgs),
    /// Train the four dimension regressors on a benchmark.
    Train(TrainArgs),
    /// Predict sentic vectors for every labeled concept.
    Predict(PredictArgs),
    /// List the concepts closest in angle to a concept.
    Neighbors(NeighborsArgs),
    /// Propose missing forward assertions from the low-rank reconstruction.
    Infer(InferArgs),
    /// Polarity of one or more sentic vectors.
    Polarity(PolarityArgs),
    /// Write the lexicon from predictions and labels.
    Export(ExportArgs),
    /// Print two coordinates of every concept.
    Project(ProjectArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "input")]
struct IngestInput {
    /// Assertion file (`subject<TAB>relation<TAB>object<TAB>confidence`).
    #[arg(long)]
    assertions: Option<PathBuf>,
    /// Emotion label file (`concept<TAB>Emotion`), turned into HasProperty edges.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    input: IngestInput,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BlendArgs {
    /// Matrix triplet file; repeat for each source.
    #[arg(long = "matrix", required = true)]
    matrices: Vec<PathBuf>,
    /// `auto` or a positive number, one per matrix, in order. Defaults to auto.
    #[arg(long = "weight", value_parser = parse_weight)]
    weights: Vec<BlendWeight>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Where a matrix comes from: a triplet file or the three raw inputs.
#[derive(Args, Debug, Default)]
struct MatrixSource {
    /// Blended matrix triplet file.
    #[arg(long, conflicts_with_all = ["conceptnet", "affectnet", "singlish"])]
    matrix: Option<PathBuf>,
    /// ConceptNet-style assertion file.
    #[arg(long, requires_all = ["affectnet", "singlish"])]
    conceptnet: Option<PathBuf>,
    /// AffectNet emotion label file.
    #[arg(long, requires_all = ["conceptnet", "singlish"])]
    affectnet: Option<PathBuf>,
    /// Singlish emotion label file.
    #[arg(long, requires_all = ["conceptnet", "affectnet"])]
    singlish: Option<PathBuf>,
    /// Blend weight for ConceptNet, AffectNet and Singlish, in that order.
    #[arg(long = "weight", value_parser = parse_weight)]
    weights: Vec<BlendWeight>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// Number of components; lowered to the smaller matrix dimension.
    #[arg(long, default_value_t = DEFAULT_K, value_parser = parse_rank)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An embedding: a saved space, or a matrix to embed on the fly.
#[derive(Args, Debug)]
struct SpaceSource {
    /// Space file written by `embed`.
    #[arg(long, conflicts_with_all = ["matrix", "conceptnet", "affectnet", "singlish"])]
    space: Option<PathBuf>,
    #[command(flatten)]
    matrix: MatrixSource,
    /// Components when embedding on the fly.
    #[arg(long, default_value_t = DEFAULT_K, value_parser = parse_rank)]
    k: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    space: SpaceSource,
    /// Benchmark file (`concept<TAB>P<TAB>A<TAB>S<TAB>Ap`).
    #[arg(long)]
    benchmark: PathBuf,
    /// Hidden units per model.
    #[arg(long, default_value_t = DEFAULT_HIDDEN, value_parser = parse_rank)]
    hidden: usize,
    /// Ridge parameter.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    space: SpaceSource,
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Emotion label file naming the concepts to predict.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NeighborsArgs {
    #[command(flatten)]
    space: SpaceSource,
    #[arg(long)]
    concept: String,
    #[arg(long, default_value_t = 10)]
    n: usize,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[command(flatten)]
    source: MatrixSource,
    #[arg(long, default_value_t = DEFAULT_K, value_parser = parse_rank)]
    k: usize,
    /// Minimum reconstructed value.
    #[arg(long, default_value_t = DEFAULT_TAU, allow_negative_numbers = true)]
    tau: f64,
}

#[derive(Args, Debug)]
struct PolarityArgs {
    /// `P,A,S,Ap` with components in [-1, 1]; repeatable.
    #[arg(long = "vector", value_parser = parse_vector, allow_negative_numbers = true)]
    vectors: Vec<SenticVector>,
    /// Predictions file to look concepts up in.
    #[arg(long, requires = "concepts")]
    predictions: Option<PathBuf>,
    /// Concept from `--predictions`; repeatable.
    #[arg(long = "concept", requires = "predictions")]
    concepts: Vec<String>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Predictions file written by `predict`.
    #[arg(long)]
    predictions: PathBuf,
    /// Emotion label file; single labels override the dominant-dimension rule.
    #[arg(long)]
    labels: PathBuf,
    /// Half-width of the neutral band.
    #[arg(long, default_value_t = DEFAULT_NEUTRAL_DELTA)]
    delta: f64,
    /// Width of the activation curve; validated only.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[command(flatten)]
    space: SpaceSource,
    #[arg(long, default_value_t = 0)]
    x: usize,
    #[arg(long, default_value_t = 1)]
    y: usize,
}

fn parse_weight(s: &str) -> Result<BlendWeight, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(BlendWeight::Auto);
    }
    match s.parse::<f64>() {
        Ok(w) if w.is_finite() && w > 0.0 => Ok(BlendWeight::Explicit(w)),
        _ => Err(format!("expected `auto` or a positive number, got {s:?}")),
    }
}

fn parse_rank(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn parse_vector(s: &str) -> Result<SenticVector, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{p:?} is not a number"))
        })
        .collect::<Result<_, _>>()?;
    let values: [f64; 4] = parts
        .try_into()
        .map_err(|_| format!("expected four comma-separated components, got {s:?}"))?;
    if values.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(format!("components must lie in [-1, 1], got {s:?}"));
    }
    SenticVector::from_array(values).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Data(String),
}

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (program name first) and runs one subcommand.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = out.write_all(rendered.as_bytes());
                return EXIT_OK;
            }
            let _ = err.write_all(rendered.as_bytes());
            return EXIT_USAGE;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Ingest(a) => ingest(a, out),
        Command::Blend(a) => blend_cmd(a, out),
        Command::Embed(a) => {
            let matrix = a.source.load()?;
            let space = embed_matrix(&matrix, a.k, err)?;
            emit(a.out.as_deref(), &space.to_tsv_string(), out)
        }
        Command::Train(a) => train(a, out, err),
        Command::Predict(a) => predict(a, out, err),
        Command::Neighbors(a) => neighbors(a, out, err),
        Command::Infer(a) => infer(a, out, err),
        Command::Polarity(a) => polarity_cmd(a, out),
        Command::Export(a) => export(a, out),
        Command::Project(a) => {
            let space = a.space.load(err)?;
            let mut text = String::new();
            for (c, x, y) in space.project(a.x, a.y).map_err(data_err)? {
                writeln!(text, "{c}\t{x}\t{y}").unwrap();
            }
            emit(None, &text, out)
        }
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Data(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("cannot write output: {e}"))),
    }
}

impl MatrixSource {
    fn load(&self) -> Result<ConceptFeatureMatrix, Failure> {
        if let Some(path) = &self.matrix {
            if !self.weights.is_empty() {
                return Err(Failure::Usage(
                    "--weight applies only to --conceptnet/--affectnet/--singlish".into(),
                ));
            }
            return load_triplets(path).map_err(data_err);
        }
        let (Some(cn), Some(an), Some(sg)) = (&self.conceptnet, &self.affectnet, &self.singlish)
        else {
            return Err(Failure::Usage(
                "give --matrix, or all of --conceptnet, --affectnet and --singlish".into(),
            ));
        };
        let weights = match self.weights.as_slice() {
            [] => [BlendWeight::Auto; 3],
            [a, b, c] => [*a, *b, *c],
            other => {
                return Err(Failure::Usage(format!(
                    "expected 3 --weight values, got {}",
                    other.len()
                )));
            }
        };
        let conceptnet = graph_to_matrix(&load_assertions(cn).map_err(data_err)?);
        let affectnet =
            affect_matrix(&load_emotion_labels(an).map_err(data_err)?).map_err(data_err)?;
        let singlish =
            affect_matrix(&load_emotion_labels(sg).map_err(data_err)?).map_err(data_err)?;
        blend_sources([&conceptnet, &affectnet, &singlish], weights).map_err(data_err)
    }
}

impl SpaceSource {
    fn load(&self, err: &mut dyn Write) -> Result<AffectiveSpace, Failure> {
        match &self.space {
            Some(path) => load_space(path).map_err(data_err),
            None => embed_matrix(&self.matrix.load()?, self.k, err),
        }
    }
}

fn embed_matrix(
    matrix: &ConceptFeatureMatrix,
    k: usize,
    err: &mut dyn Write,
) -> Result<AffectiveSpace, Failure> {
    let max = matrix.nrows().min(matrix.ncols());
    if k > max && max > 0 {
        let _ = writeln!(
            err,
            "warning: k={k} exceeds the matrix rank bound; using {max}"
        );
    }
    Ok(embed(matrix, k).map_err(data_err)?.0)
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Outcome {
    let matrix = match (&a.input.assertions, &a.input.labels) {
        (Some(path), _) => graph_to_matrix(&load_assertions(path).map_err(data_err)?),
        (_, Some(path)) => {
            affect_matrix(&load_emotion_labels(path).map_err(data_err)?).map_err(data_err)?
        }
        _ => unreachable!("clap requires one input"),
    };
    emit(a.out.as_deref(), &matrix.to_triplet_string(), out)
}

fn blend_cmd(a: BlendArgs, out: &mut dyn Write) -> Outcome {
    let weights = if a.weights.is_empty() {
        vec![BlendWeight::Auto; a.matrices.len()]
    } else if a.weights.len() == a.matrices.len() {
        a.weights
    } else {
        return Err(Failure::Usage(format!(
            "{} --weight values for {} --matrix inputs",
            a.weights.len(),
            a.matrices.len()
        )));
    };
    let matrices = a
        .matrices
        .iter()
        .map(|p| load_triplets(p).map_err(data_err))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = matrices
        .iter()
        .zip(weights)
        .fold(BlendSpec::new(), |spec, (m, w)| spec.with(m, w));
    let blended = blend(&spec).map_err(data_err)?;
    emit(a.out.as_deref(), &blended.to_triplet_string(), out)
}

fn train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let space = a.space.load(err)?;
    let benchmark = load_benchmark(&a.benchmark).map_err(data_err)?;
    let params = ElmParams {
        hidden: a.hidden,
        lambda: a.lambda,
        seed: a.seed,
        ..ElmParams::default()
    };
    let (predictor, report) = train_sentic(&space, &benchmark, &params).map_err(data_err)?;
    if !report.skipped.is_empty() {
        let names: Vec<&str> = report.skipped.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(
            err,
            "warning: skipped {} benchmark concepts not in the space: {}",
            names.len(),
            names.join(", ")
        );
    }
    emit(a.out.as_deref(), &predictor.to_text(), out)
}

fn predict(a: PredictArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let space = a.space.load(err)?;
    let predictor = load_predictor(&a.model).map_err(data_err)?;
    let labels = load_emotion_labels(&a.labels).map_err(data_err)?;
    let labeled = manual_categories(&labels);
    let (predictions, skipped) =
        predict_concepts(&space, &predictor, labeled.keys()).map_err(data_err)?;
    if !skipped.is_empty() {
        let names: Vec<&str> = skipped.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(
            err,
            "warning: skipped {} labeled concepts not in the space: {}",
            names.len(),
            names.join(", ")
        );
    }
    emit(a.out.as_deref(), &render_predictions(&predictions), out)
}

fn neighbors(a: NeighborsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let space = a.space.load(err)?;
    let concept = normalize_concept(&a.concept).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut text = String::new();
    for (c, sim) in space.nearest_neighbors(&concept, a.n).map_err(data_err)? {
        writeln!(text, "{c}\t{sim:.6}").unwrap();
    }
    emit(None, &text, out)
}

fn infer(a: InferArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    if !a.tau.is_finite() {
        return Err(Failure::Usage(format!(
            "--tau must be finite, got {}",
            a.tau
        )));
    }
    let matrix = a.source.load()?;
    let max = matrix.nrows().min(matrix.ncols());
    if a.k > max && max > 0 {
        let _ = writeln!(
            err,
            "warning: k={} exceeds the matrix rank bound; using {max}",
            a.k
        );
    }
    let (_, tsvd) = embed(&matrix, a.k).map_err(data_err)?;
    let mut text = String::new();
    for inf in infer_assertions(&tsvd, &matrix, a.tau) {
        writeln!(
            text,
            "{}\t{}\t{:.6}",
            inf.concept,
            inf.feature.key(),
            inf.score
        )
        .unwrap();
    }
    emit(None, &text, out)
}

fn polarity_cmd(a: PolarityArgs, out: &mut dyn Write) -> Outcome {
    let mut vectors = a.vectors;
    if let Some(path) = &a.predictions {
        let predictions = load_predictions(path).map_err(data_err)?;
        for raw in &a.concepts {
            let c = normalize_concept(raw).map_err(|e| Failure::Usage(e.to_string()))?;
            let (_, v) = predictions.iter().find(|(p, _)| *p == c).ok_or_else(|| {
                Failure::Data(format!("concept {c:?} is not in {}", path.display()))
            })?;
            vectors.push(*v);
        }
    }
    if vectors.is_empty() {
        return Err(Failure::Usage(
            "give at least one --vector or --predictions with --concept".into(),
        ));
    }
    let p = polarity(&vectors).map_err(data_err)?;
    emit(None, &format!("{p:.6}\n"), out)
}

fn export(a: ExportArgs, out: &mut dyn Write) -> Outcome {
    if let Some(sigma) = a.sigma {
        GaussParams::new(sigma).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    quantize(AffectiveDimension::Pleasantness, 0.0, a.delta)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let predictions = load_predictions(&a.predictions).map_err(data_err)?;
    let labels = load_emotion_labels(&a.labels).map_err(data_err)?;
    let entries = build_entries(&predictions, &labels, a.delta).map_err(data_err)?;
    emit(a.out.as_deref(), &render_lexicon(&entries), out)
}
