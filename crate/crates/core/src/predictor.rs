//! Extreme learning machines regressing one affective dimension each.
//!
//! Hidden weights and biases are drawn uniformly from `[-1, 1]` by a seeded
//! ChaCha stream and never trained. Output weights solve the ridge system
//! `(HᵀH + λI) β = Hᵀy` by Cholesky factorization.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{normalize_concept, Concept};
use crate::hourglass::{AffectiveDimension, SenticVector};
use crate::spectral::AffectiveSpace;
use crate::text;

pub const DEFAULT_HIDDEN: usize = 50;
pub const DEFAULT_LAMBDA: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 42;

const PREDICTOR_HEADER: &str = "#sentic-predictor v1";

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("ridge system is singular; use a positive lambda")]
    SingularSystem,
    #[error("no benchmark concept is present in the space")]
    NoOverlap,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

impl FromStr for Activation {
    type Err = PredictorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(PredictorError::InvalidParams(format!(
                "unknown activation {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElmParams {
    pub hidden: usize,
    pub lambda: f64,
    pub seed: u64,
    pub activation: Activation,
}

impl Default for ElmParams {
    fn default() -> Self {
        ElmParams {
            hidden: DEFAULT_HIDDEN,
            lambda: DEFAULT_LAMBDA,
            seed: DEFAULT_SEED,
            activation: Activation::Sigmoid,
        }
    }
}

impl ElmParams {
    fn validate(&self) -> Result<(), PredictorError> {
        if self.hidden == 0 {
            return Err(PredictorError::InvalidParams(
                "hidden layer size must be positive".into(),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(PredictorError::InvalidParams(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// A trained single-hidden-layer network.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    input_dim: usize,
    /// `hidden × input_dim`
    input_weights: DMatrix<f64>,
    biases: DVector<f64>,
    output_weights: DVector<f64>,
    activation: Activation,
    lambda: f64,
    seed: u64,
}

impl ElmModel {
    fn random_layer(input_dim: usize, params: &ElmParams) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let weights = DMatrix::from_fn(params.hidden, input_dim, |_, _| 0.0);
        let mut weights = weights;
        for j in 0..params.hidden {
            for m in 0..input_dim {
                weights[(j, m)] = rng.random_range(-1.0..=1.0);
            }
        }
        let biases = DVector::from_fn(params.hidden, |_, _| rng.random_range(-1.0..=1.0));
        (weights, biases)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.biases.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn output_weights(&self) -> &DVector<f64> {
        &self.output_weights
    }

    /// Hidden-layer activations for one input.
    pub fn hidden_features(&self, x: &[f64]) -> Result<DVector<f64>, PredictorError> {
        if x.len() != self.input_dim {
            return Err(PredictorError::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let x = DVector::from_column_slice(x);
        let mut h = &self.input_weights * x + &self.biases;
        h.apply(|z| *z = self.activation.apply(*z));
        Ok(h)
    }

    /// `βᵀ act(Wx + b)` without clamping.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, PredictorError> {
        Ok(self.output_weights.dot(&self.hidden_features(x)?))
    }

    /// The raw output clamped to `[-1, 1]`.
    pub fn predict(&self, x: &[f64]) -> Result<f64, PredictorError> {
        Ok(self.predict_raw(x)?.clamp(-1.0, 1.0))
    }

    /// Replaces the output weights; used to build fixed models in tests and
    /// tooling.
    pub fn with_output_weights(mut self, beta: DVector<f64>) -> Result<Self, PredictorError> {
        if beta.len() != self.hidden_dim() {
            return Err(PredictorError::DimensionMismatch {
                expected: self.hidden_dim(),
                found: beta.len(),
            });
        }
        self.output_weights = beta;
        Ok(self)
    }

    /// An untrained model (`β = 0`) with the random layer for `params`.
    pub fn untrained(input_dim: usize, params: &ElmParams) -> Result<Self, PredictorError> {
        params.validate()?;
        if input_dim == 0 {
            return Err(PredictorError::InvalidParams(
                "input dimension must be positive".into(),
            ));
        }
        let (input_weights, biases) = Self::random_layer(input_dim, params);
        Ok(ElmModel {
            input_dim,
            input_weights,
            biases,
            output_weights: DVector::zeros(params.hidden),
            activation: params.activation,
            lambda: params.lambda,
            seed: params.seed,
        })
    }

    fn write_body(&self, out: &mut String) {
        let join = |v: &mut dyn Iterator<Item = f64>| {
            v.map(|x| x.to_string()).collect::<Vec<_>>().join("\t")
        };
        writeln!(out, "input_dim\t{}", self.input_dim).unwrap();
        writeln!(out, "hidden_dim\t{}", self.hidden_dim()).unwrap();
        writeln!(out, "activation\t{}", self.activation.name()).unwrap();
        writeln!(out, "lambda\t{}", self.lambda).unwrap();
        writeln!(out, "seed\t{}", self.seed).unwrap();
        for j in 0..self.hidden_dim() {
            writeln!(
                out,
                "w\t{}",
                join(&mut self.input_weights.row(j).iter().copied())
            )
            .unwrap();
        }
        writeln!(out, "bias\t{}", join(&mut self.biases.iter().copied())).unwrap();
        writeln!(
            out,
            "beta\t{}",
            join(&mut self.output_weights.iter().copied())
        )
        .unwrap();
    }
}

fn hidden_matrix(model: &ElmModel, inputs: &[&[f64]]) -> Result<DMatrix<f64>, PredictorError> {
    let mut h = DMatrix::zeros(inputs.len(), model.hidden_dim());
    for (i, x) in inputs.iter().enumerate() {
        h.set_row(i, &model.hidden_features(x)?.transpose());
    }
    Ok(h)
}

/// Fits an ELM to `(inputs, targets)`.
pub fn train_elm<X: AsRef<[f64]>>(
    inputs: &[X],
    targets: &[f64],
    params: &ElmParams,
) -> Result<ElmModel, PredictorError> {
    if inputs.is_empty() {
        return Err(PredictorError::EmptyTrainingSet);
    }
    if inputs.len() != targets.len() {
        return Err(PredictorError::DimensionMismatch {
            expected: inputs.len(),
            found: targets.len(),
        });
    }
    let rows: Vec<&[f64]> = inputs.iter().map(AsRef::as_ref).collect();
    let input_dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != input_dim) {
        return Err(PredictorError::DimensionMismatch {
            expected: input_dim,
            found: bad.len(),
        });
    }
    if rows
        .iter()
        .flat_map(|r| r.iter())
        .chain(targets)
        .any(|v| !v.is_finite())
    {
        return Err(PredictorError::NonFinite);
    }

    let model = ElmModel::untrained(input_dim, params)?;
    let h = hidden_matrix(&model, &rows)?;
    let y = DVector::from_column_slice(targets);
    let mut gram = h.transpose() * &h;
    for d in 0..gram.nrows() {
        gram[(d, d)] += params.lambda;
    }
    let rhs = h.transpose() * y;
    let beta = solve_spd(gram, &rhs)?;
    model.with_output_weights(beta)
}

fn solve_spd(gram: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, PredictorError> {
    let n = gram.nrows();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(PredictorError::SingularSystem)?;
    let l = chol.l();
    let diag: Vec<f64> = (0..n).map(|i| l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    // Pivots below sqrt(n·ε) relative to the largest mean a numerically
    // rank-deficient system.
    if min.is_nan() || min <= 0.0 || (min / max).powi(2) < n as f64 * f64::EPSILON {
        return Err(PredictorError::SingularSystem);
    }
    let mut beta = chol.solve(rhs);
    // One step of iterative refinement tightens the normal-equation residual.
    let residual = rhs - &gram * &beta;
    beta += chol.solve(&residual);
    Ok(beta)
}

/// One benchmark row: a concept and its four target activations.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkEntry {
    pub concept: Concept,
    pub targets: [f64; 4],
}

/// Parses `concept<TAB>P<TAB>A<TAB>S<TAB>Ap` lines with targets in `[-1, 1]`.
pub fn parse_benchmark(content: &str) -> Result<Vec<BenchmarkEntry>, PredictorError> {
    text::records(content)
        .map(|record| {
            let err = |message: String| PredictorError::Parse {
                line: record.line,
                message,
            };
            if record.fields.len() != 5 {
                return Err(err(format!(
                    "expected 5 TAB-separated fields, found {}",
                    record.fields.len()
                )));
            }
            let concept = normalize_concept(record.fields[0]).map_err(|e| err(e.to_string()))?;
            let mut targets = [0.0; 4];
            for (slot, field) in targets.iter_mut().zip(&record.fields[1..]) {
                *slot = text::parse_finite(field)
                    .filter(|v| (-1.0..=1.0).contains(v))
                    .ok_or_else(|| err(format!("target {field:?} is not a number in [-1, 1]")))?;
            }
            Ok(BenchmarkEntry { concept, targets })
        })
        .collect()
}

pub fn load_benchmark(path: &Path) -> Result<Vec<BenchmarkEntry>, PredictorError> {
    let content = text::read_to_string(path).map_err(|source| PredictorError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_benchmark(&content)
}

/// Four independent regressors, one per affective dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SenticPredictor {
    models: [ElmModel; 4],
}

/// What [`train_sentic`] used and skipped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingReport {
    pub used: usize,
    pub skipped: Vec<Concept>,
}

impl SenticPredictor {
    pub fn from_models(models: [ElmModel; 4]) -> Result<Self, PredictorError> {
        let dim = models[0].input_dim();
        if let Some(m) = models.iter().find(|m| m.input_dim() != dim) {
            return Err(PredictorError::DimensionMismatch {
                expected: dim,
                found: m.input_dim(),
            });
        }
        Ok(SenticPredictor { models })
    }

    pub fn input_dim(&self) -> usize {
        self.models[0].input_dim()
    }

    pub fn model(&self, dimension: AffectiveDimension) -> &ElmModel {
        &self.models[dimension.index()]
    }

    /// Serializes every model field; [`parse_predictor`] reloads it exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{PREDICTOR_HEADER}").unwrap();
        for dim in AffectiveDimension::ALL {
            writeln!(out, "[{dim}]").unwrap();
            self.model(dim).write_body(&mut out);
        }
        out
    }
}

/// Trains the four dimension models on benchmark concepts present in `space`.
pub fn train_sentic(
    space: &AffectiveSpace,
    benchmark: &[BenchmarkEntry],
    params: &ElmParams,
) -> Result<(SenticPredictor, TrainingReport), PredictorError> {
    let mut report = TrainingReport::default();
    let mut inputs: Vec<&[f64]> = Vec::new();
    let mut targets: [Vec<f64>; 4] = Default::default();
    for entry in benchmark {
        match space.vector(&entry.concept) {
            Some(v) => {
                inputs.push(v);
                for (column, &t) in targets.iter_mut().zip(&entry.targets) {
                    column.push(t);
                }
            }
            None => report.skipped.push(entry.concept.clone()),
        }
    }
    if inputs.is_empty() {
        return Err(PredictorError::NoOverlap);
    }
    report.used = inputs.len();
    if !report.skipped.is_empty() {
        log::warn!(
            "{} benchmark concepts are not in the space and were skipped",
            report.skipped.len()
        );
    }
    let [p, a, s, ap] = &targets;
    let models = [
        train_elm(&inputs, p, params)?,
        train_elm(&inputs, a, params)?,
        train_elm(&inputs, s, params)?,
        train_elm(&inputs, ap, params)?,
    ];
    Ok((SenticPredictor::from_models(models)?, report))
}

/// Predicts all four activations for one space vector.
pub fn predict_sentic(
    predictor: &SenticPredictor,
    v: &[f64],
) -> Result<SenticVector, PredictorError> {
    let mut out = [0.0; 4];
    for (slot, model) in out.iter_mut().zip(&predictor.models) {
        *slot = model.predict(v)?;
    }
    SenticVector::from_array(out).map_err(|_| PredictorError::NonFinite)
}

/// Concepts paired with their predicted sentic vectors.
pub type Predictions = Vec<(Concept, SenticVector)>;

/// One `concept<TAB>P<TAB>A<TAB>S<TAB>Ap` line per prediction, floats in
/// their shortest exact form so that reloading is lossless.
pub fn render_predictions(predictions: &[(Concept, SenticVector)]) -> String {
    let mut out = String::new();
    for (c, v) in predictions {
        let [p, a, s, ap] = v.to_array();
        writeln!(out, "{c}\t{p}\t{a}\t{s}\t{ap}").unwrap();
    }
    out
}

pub fn parse_predictions(content: &str) -> Result<Predictions, PredictorError> {
    parse_benchmark(content)?
        .into_iter()
        .map(|e| {
            Ok((
                e.concept,
                SenticVector::from_array(e.targets).map_err(|_| PredictorError::NonFinite)?,
            ))
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Predictions, PredictorError> {
    let content = text::read_to_string(path).map_err(|source| PredictorError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_predictions(&content)
}

pub fn load_predictor(path: &Path) -> Result<SenticPredictor, PredictorError> {
    let content = text::read_to_string(path).map_err(|source| PredictorError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_predictor(&content)
}

/// Parses the text written by [`SenticPredictor::to_text`].
pub fn parse_predictor(content: &str) -> Result<SenticPredictor, PredictorError> {
    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .peekable();
    match lines.next() {
        Some((_, h)) if h.trim() == PREDICTOR_HEADER => {}
        _ => {
            return Err(PredictorError::Parse {
                line: 1,
                message: format!("missing {PREDICTOR_HEADER:?} header"),
            })
        }
    }
    let mut models = Vec::with_capacity(4);
    for dim in AffectiveDimension::ALL {
        let (line, section) = lines.next().ok_or_else(|| PredictorError::Parse {
            line: 0,
            message: format!("missing [{dim}] section"),
        })?;
        if section.trim() != format!("[{dim}]") {
            return Err(PredictorError::Parse {
                line,
                message: format!("expected [{dim}], found {section:?}"),
            });
        }
        models.push(parse_model_body(&mut lines)?);
    }
    let models: [ElmModel; 4] = models.try_into().expect("four sections parsed");
    SenticPredictor::from_models(models)
}

fn parse_model_body<'a, I>(lines: &mut I) -> Result<ElmModel, PredictorError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let mut field = |key: &str| -> Result<(usize, Vec<&'a str>), PredictorError> {
        let (line, raw) = lines.next().ok_or_else(|| PredictorError::Parse {
            line: 0,
            message: format!("unexpected end of model, expected {key}"),
        })?;
        let mut parts = raw.split('\t');
        if parts.next() != Some(key) {
            return Err(PredictorError::Parse {
                line,
                message: format!("expected {key:?} line"),
            });
        }
        Ok((line, parts.collect()))
    };
    let scalar = |(line, v): (usize, Vec<&str>)| -> Result<(usize, String), PredictorError> {
        match v.as_slice() {
            [one] => Ok((line, one.to_string())),
            _ => Err(PredictorError::Parse {
                line,
                message: "expected a single value".into(),
            }),
        }
    };
    let bad = |line: usize, what: &str| PredictorError::Parse {
        line,
        message: format!("invalid {what}"),
    };
    let floats =
        |(line, v): (usize, Vec<&str>), n: usize, what: &str| -> Result<Vec<f64>, PredictorError> {
            if v.len() != n {
                return Err(PredictorError::Parse {
                    line,
                    message: format!("{what}: expected {n} values, found {}", v.len()),
                });
            }
            v.iter()
                .map(|s| text::parse_finite(s).ok_or_else(|| bad(line, what)))
                .collect()
        };

    let (l, v) = scalar(field("input_dim")?)?;
    let input_dim: usize = v.parse().map_err(|_| bad(l, "input_dim"))?;
    let (l, v) = scalar(field("hidden_dim")?)?;
    let hidden: usize = v.parse().map_err(|_| bad(l, "hidden_dim"))?;
    let (l, v) = scalar(field("activation")?)?;
    let activation: Activation = v.parse().map_err(|_| bad(l, "activation"))?;
    let (l, v) = scalar(field("lambda")?)?;
    let lambda = text::parse_finite(&v).ok_or_else(|| bad(l, "lambda"))?;
    let (l, v) = scalar(field("seed")?)?;
    let seed: u64 = v.parse().map_err(|_| bad(l, "seed"))?;
    if input_dim == 0 || hidden == 0 {
        return Err(bad(l, "model dimensions"));
    }
    let mut weights = DMatrix::zeros(hidden, input_dim);
    for j in 0..hidden {
        let row = floats(field("w")?, input_dim, "w")?;
        for (m, x) in row.into_iter().enumerate() {
            weights[(j, m)] = x;
        }
    }
    let biases = floats(field("bias")?, hidden, "bias")?;
    let beta = floats(field("beta")?, hidden, "beta")?;
    Ok(ElmModel {
        input_dim,
        input_weights: weights,
        biases: DVector::from_vec(biases),
        output_weights: DVector::from_vec(beta),
        activation,
        lambda,
        seed,
    })
}
