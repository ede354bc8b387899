//! The end-to-end pipeline and the exported lexicon.
//!
//! Stages run in a fixed order: ingest the three graphs, blend their
//! matrices, embed, train the dimension regressors on the benchmark, predict
//! every Singlish-labeled concept, then quantize, categorize and score each
//! prediction. Every stage is a public function so that the command-line
//! front end can run them one at a time with identical results.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{
    build_affect_graph, load_assertions, load_emotion_labels, Concept, EmotionCategory, GraphError,
};
use crate::hourglass::{
    self, quantize_vector, AffectiveDimension, GaussParams, HourglassError, SenticLevel,
    SenticVector, DEFAULT_NEUTRAL_DELTA,
};
use crate::matrix::{
    blend, graph_to_matrix, BlendSpec, BlendWeight, ConceptFeatureMatrix, MatrixError,
};
use crate::predictor::{
    load_benchmark, predict_sentic, train_sentic, ElmParams, Predictions, PredictorError,
    SenticPredictor, TrainingReport,
};
use crate::spectral::{
    clamp_rank, default_max_iter, infer_assertions, truncated_svd, AffectiveSpace, Inference,
    SpectralError, TsvdResult, DEFAULT_K, DEFAULT_TAU, DEFAULT_TOL,
};

pub const LEXICON_HEADER: &str = "#singlish-lexicon v1";

/// Label written for concepts without an emotion category.
pub const NO_EMOTION: &str = "none";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ingest stage: {0}")]
    Ingest(#[from] GraphError),
    #[error("blend stage: {0}")]
    Blend(#[from] MatrixError),
    #[error("embed stage: {0}")]
    Embed(#[from] SpectralError),
    #[error("training stage: {0}")]
    Train(#[source] PredictorError),
    #[error("prediction stage: {0}")]
    Predict(#[source] PredictorError),
    #[error("labeling stage: {0}")]
    Label(#[from] HourglassError),
    #[error("export stage: cannot write {}: {source}", path.display())]
    Export {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Inputs and parameters of [`run_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub conceptnet_assertions: PathBuf,
    pub affectnet_labels: PathBuf,
    pub singlish_labels: PathBuf,
    pub benchmark: PathBuf,
    pub k: usize,
    /// ConceptNet, AffectNet and Singlish AffectNet, in that order.
    pub weights: [BlendWeight; 3],
    pub neutral_delta: f64,
    pub sigma: f64,
    pub elm: ElmParams,
    pub tau: f64,
}

impl PipelineConfig {
    pub fn new(
        conceptnet_assertions: impl Into<PathBuf>,
        affectnet_labels: impl Into<PathBuf>,
        singlish_labels: impl Into<PathBuf>,
        benchmark: impl Into<PathBuf>,
    ) -> Self {
        PipelineConfig {
            conceptnet_assertions: conceptnet_assertions.into(),
            affectnet_labels: affectnet_labels.into(),
            singlish_labels: singlish_labels.into(),
            benchmark: benchmark.into(),
            k: DEFAULT_K,
            weights: [BlendWeight::Auto; 3],
            neutral_delta: DEFAULT_NEUTRAL_DELTA,
            sigma: GaussParams::default().sigma(),
            elm: ElmParams::default(),
            tau: DEFAULT_TAU,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k == 0 {
            return Err(PipelineError::Config("k must be at least 1".into()));
        }
        if !self.tau.is_finite() {
            return Err(PipelineError::Config(format!(
                "tau must be finite, got {}",
                self.tau
            )));
        }
        GaussParams::new(self.sigma)?;
        hourglass::quantize(AffectiveDimension::Pleasantness, 0.0, self.neutral_delta)?;
        Ok(())
    }
}

/// Where an entry's emotion category came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmotionSource {
    /// The Singlish label file assigns exactly one category.
    Manual,
    /// Derived by [`categorize_emotion`].
    Rule,
}

/// One row of the exported lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub concept: Concept,
    pub sentic: SenticVector,
    pub levels: [SenticLevel; 4],
    pub emotion: Option<EmotionCategory>,
    pub emotion_source: EmotionSource,
    pub polarity: f64,
}

impl LexiconEntry {
    /// Quantizes, categorizes and scores `sentic`. A `manual` category takes
    /// precedence over the rule.
    pub fn new(
        concept: Concept,
        sentic: SenticVector,
        manual: Option<EmotionCategory>,
        neutral_delta: f64,
    ) -> Result<Self, HourglassError> {
        let levels = quantize_vector(sentic, neutral_delta)?;
        let polarity = hourglass::polarity(&[sentic])?;
        let (emotion, emotion_source) = match manual {
            Some(e) => (Some(e), EmotionSource::Manual),
            None => (
                categorize_emotion(sentic, neutral_delta),
                EmotionSource::Rule,
            ),
        };
        Ok(LexiconEntry {
            concept,
            sentic,
            levels,
            emotion,
            emotion_source,
            polarity,
        })
    }
}

/// Maps the dominant dimension and its sign to one of the six categories.
///
/// The dominant dimension has the largest `|component|` above `delta`; ties
/// go to the earlier dimension. Positive attention and positive aptitude have
/// no category.
pub fn categorize_emotion(v: SenticVector, delta: f64) -> Option<EmotionCategory> {
    use AffectiveDimension::*;
    let mut dominant: Option<(AffectiveDimension, f64)> = None;
    for dim in AffectiveDimension::ALL {
        let x = v.get(dim);
        if x.abs() > delta && dominant.is_none_or(|(_, best)| x.abs() > best.abs()) {
            dominant = Some((dim, x));
        }
    }
    let (dim, x) = dominant?;
    match (dim, x > 0.0) {
        (Pleasantness, true) => Some(EmotionCategory::Joy),
        (Pleasantness, false) => Some(EmotionCategory::Sadness),
        (Sensitivity, true) => Some(EmotionCategory::Anger),
        (Sensitivity, false) => Some(EmotionCategory::Fear),
        (Aptitude, false) => Some(EmotionCategory::Disgust),
        (Attention, false) => Some(EmotionCategory::Surprise),
        (Attention, true) | (Aptitude, true) => None,
    }
}

/// The manual category of each labeled concept; `None` when the file gives
/// a concept more than one category, in which case the rule decides.
pub fn manual_categories(
    labels: &[(Concept, EmotionCategory)],
) -> BTreeMap<Concept, Option<EmotionCategory>> {
    let mut seen: BTreeMap<Concept, BTreeSet<EmotionCategory>> = BTreeMap::new();
    for (c, e) in labels {
        seen.entry(c.clone()).or_default().insert(*e);
    }
    seen.into_iter()
        .map(|(c, set)| {
            let only = if set.len() == 1 {
                set.first().copied()
            } else {
                None
            };
            (c, only)
        })
        .collect()
}

/// Matrix of an affect label file: `concept --HasProperty--> emotion`.
pub fn affect_matrix(
    labels: &[(Concept, EmotionCategory)],
) -> Result<ConceptFeatureMatrix, GraphError> {
    Ok(graph_to_matrix(&build_affect_graph(labels)?))
}

/// Blends the ConceptNet, AffectNet and Singlish AffectNet matrices.
pub fn blend_sources(
    sources: [&ConceptFeatureMatrix; 3],
    weights: [BlendWeight; 3],
) -> Result<ConceptFeatureMatrix, MatrixError> {
    let spec = sources
        .into_iter()
        .zip(weights)
        .fold(BlendSpec::new(), |spec, (m, w)| spec.with(m, w));
    blend(&spec)
}

/// Embeds `a` with `k` components (clamped), keeping the factors.
pub fn embed(
    a: &ConceptFeatureMatrix,
    k: usize,
) -> Result<(AffectiveSpace, TsvdResult), SpectralError> {
    let k = clamp_rank(a, k);
    let tsvd = truncated_svd(a, k, DEFAULT_TOL, default_max_iter(k))?;
    Ok((AffectiveSpace::from_tsvd(a.rows(), &tsvd), tsvd))
}

/// Predicts every concept in `concepts` found in the space; the rest are
/// returned as skipped. Output follows the input order.
pub fn predict_concepts<'a>(
    space: &AffectiveSpace,
    predictor: &SenticPredictor,
    concepts: impl IntoIterator<Item = &'a Concept>,
) -> Result<(Predictions, Vec<Concept>), PredictorError> {
    let mut predicted = Vec::new();
    let mut skipped = Vec::new();
    for c in concepts {
        match space.vector(c) {
            Some(v) => predicted.push((c.clone(), predict_sentic(predictor, v)?)),
            None => skipped.push(c.clone()),
        }
    }
    if !skipped.is_empty() {
        log::warn!(
            "{} labeled concepts are not in the space and were skipped",
            skipped.len()
        );
    }
    Ok((predicted, skipped))
}

/// Lexicon entries for `predictions`, sorted by concept.
pub fn build_entries(
    predictions: &[(Concept, SenticVector)],
    labels: &[(Concept, EmotionCategory)],
    neutral_delta: f64,
) -> Result<Vec<LexiconEntry>, HourglassError> {
    let manual = manual_categories(labels);
    let mut entries = predictions
        .iter()
        .map(|(c, v)| {
            LexiconEntry::new(
                c.clone(),
                *v,
                manual.get(c).copied().flatten(),
                neutral_delta,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort_by(|a, b| a.concept.cmp(&b.concept));
    Ok(entries)
}

/// Everything [`run_pipeline`] produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub space: AffectiveSpace,
    pub predictor: SenticPredictor,
    pub entries: Vec<LexiconEntry>,
    pub training: TrainingReport,
    /// Labeled concepts absent from the space.
    pub skipped: Vec<Concept>,
    /// Candidate assertions at the configured `tau`.
    pub inferences: Vec<Inference>,
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;

    let conceptnet = graph_to_matrix(&load_assertions(&cfg.conceptnet_assertions)?);
    let affectnet = affect_matrix(&load_emotion_labels(&cfg.affectnet_labels)?)?;
    let singlish_labels = load_emotion_labels(&cfg.singlish_labels)?;
    let singlish = affect_matrix(&singlish_labels)?;

    let blended = blend_sources([&conceptnet, &affectnet, &singlish], cfg.weights)?;

    let (space, tsvd) = embed(&blended, cfg.k)?;
    let inferences = infer_assertions(&tsvd, &blended, cfg.tau);

    let benchmark = load_benchmark(&cfg.benchmark).map_err(PipelineError::Train)?;
    let (predictor, training) =
        train_sentic(&space, &benchmark, &cfg.elm).map_err(PipelineError::Train)?;

    let labeled = manual_categories(&singlish_labels);
    let (predictions, skipped) =
        predict_concepts(&space, &predictor, labeled.keys()).map_err(PipelineError::Predict)?;
    let entries = build_entries(&predictions, &singlish_labels, cfg.neutral_delta)?;

    Ok(PipelineOutput {
        space,
        predictor,
        entries,
        training,
        skipped,
        inferences,
    })
}

/// Six decimals, with negative zero written as zero.
fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

struct EmotionName(Option<EmotionCategory>);

impl fmt::Display for EmotionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(e) => f.write_str(e.name()),
            None => f.write_str(NO_EMOTION),
        }
    }
}

/// The lexicon file contents, entries sorted by concept.
pub fn render_lexicon(entries: &[LexiconEntry]) -> String {
    let mut sorted: Vec<&LexiconEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.concept.cmp(&b.concept));
    let mut out = String::new();
    writeln!(out, "{LEXICON_HEADER}").unwrap();
    for e in sorted {
        write!(out, "{}", e.concept).unwrap();
        for x in e.sentic.to_array() {
            write!(out, "\t{}", fixed6(x)).unwrap();
        }
        for level in &e.levels {
            write!(out, "\t{}", level.label).unwrap();
        }
        writeln!(out, "\t{}\t{}", EmotionName(e.emotion), fixed6(e.polarity)).unwrap();
    }
    out
}

pub fn export_lexicon(entries: &[LexiconEntry], path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, render_lexicon(entries)).map_err(|source| PipelineError::Export {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::normalize_concept;

    fn c(s: &str) -> Concept {
        normalize_concept(s).unwrap()
    }

    fn sv(p: f64, a: f64, s: f64, ap: f64) -> SenticVector {
        SenticVector::new(p, a, s, ap).unwrap()
    }

    #[test]
    fn categorize_examples() {
        assert_eq!(
            categorize_emotion(sv(0.8, 0.1, 0.0, 0.1), 0.05),
            Some(EmotionCategory::Joy)
        );
        assert_eq!(
            categorize_emotion(sv(0.0, 0.0, -0.7, 0.0), 0.05),
            Some(EmotionCategory::Fear)
        );
        assert_eq!(categorize_emotion(SenticVector::ZERO, 0.05), None);
        assert_eq!(categorize_emotion(sv(0.04, 0.0, -0.03, 0.0), 0.05), None);
        assert_eq!(
            categorize_emotion(sv(0.0, -0.5, 0.0, 0.0), 0.05),
            Some(EmotionCategory::Surprise)
        );
        assert_eq!(categorize_emotion(sv(0.0, 0.5, 0.0, 0.0), 0.05), None);
        assert_eq!(
            categorize_emotion(sv(0.0, 0.0, 0.3, -0.6), 0.05),
            Some(EmotionCategory::Disgust)
        );
        // ties go to the earlier dimension
        assert_eq!(
            categorize_emotion(sv(-0.5, 0.0, 0.5, 0.0), 0.05),
            Some(EmotionCategory::Sadness)
        );
        assert_eq!(
            categorize_emotion(sv(0.0, 0.0, 0.5, -0.5), 0.05),
            Some(EmotionCategory::Anger)
        );
    }

    #[test]
    fn shiok_row() {
        let e = LexiconEntry::new(c("shiok"), sv(0.9, 0.0, 0.0, 0.2), None, 0.05).unwrap();
        assert_eq!(e.levels[0].label, "ecstasy");
        assert_eq!(e.emotion, Some(EmotionCategory::Joy));
        assert_eq!(e.emotion_source, EmotionSource::Rule);
        let text = render_lexicon(&[e]);
        assert_eq!(
            text,
            "#singlish-lexicon v1\nshiok\t0.900000\t0.000000\t0.000000\t0.200000\tecstasy\tneutral\tneutral\tacceptance\tJoy\t0.366667\n"
        );
    }

    #[test]
    fn manual_labels_override_unless_conflicting() {
        let labels = vec![
            (c("a"), EmotionCategory::Fear),
            (c("a"), EmotionCategory::Fear),
            (c("b"), EmotionCategory::Fear),
            (c("b"), EmotionCategory::Joy),
        ];
        let preds = vec![
            (c("b"), sv(0.9, 0.0, 0.0, 0.0)),
            (c("a"), sv(0.9, 0.0, 0.0, 0.0)),
        ];
        let entries = build_entries(&preds, &labels, 0.05).unwrap();
        assert_eq!(entries[0].concept, c("a"));
        assert_eq!(
            (entries[0].emotion, entries[0].emotion_source),
            (Some(EmotionCategory::Fear), EmotionSource::Manual)
        );
        assert_eq!(
            (entries[1].emotion, entries[1].emotion_source),
            (Some(EmotionCategory::Joy), EmotionSource::Rule)
        );
    }

    #[test]
    fn empty_lexicon_is_header_only() {
        assert_eq!(render_lexicon(&[]), "#singlish-lexicon v1\n");
    }

    #[test]
    fn negative_zero_is_not_printed() {
        assert_eq!(fixed6(-1e-9), "0.000000");
        assert_eq!(fixed6(-0.25), "-0.250000");
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::new("a", "b", "c", "d");
        assert!(cfg.validate().is_ok());
        cfg.k = 0;
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        cfg.k = 5;
        cfg.sigma = -1.0;
        assert!(matches!(cfg.validate(), Err(PipelineError::Label(_))));
    }

    #[test]
    fn missing_input_is_an_ingest_error() {
        let cfg = PipelineConfig::new(
            "/nonexistent/a",
            "/nonexistent/b",
            "/nonexistent/c",
            "/nonexistent/d",
        );
        assert!(matches!(
            run_pipeline(&cfg),
            Err(PipelineError::Ingest(GraphError::Io { .. }))
        ));
    }
}
