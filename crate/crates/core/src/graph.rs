//! Directed, labeled knowledge graphs over normalized concepts.
//!
//! A [`KnowledgeGraph`] is a set of confidence-weighted [`Assertion`]s. The
//! same structure holds a ConceptNet-style commonsense graph, an affect graph
//! linking concepts to emotion nodes through `HasProperty`, and the Singlish
//! affect graph built the same way from manual emotion labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::text;

/// Relation used for concept → emotion edges in affect graphs.
pub const HAS_PROPERTY: &str = "HasProperty";

/// Relations registered by default, following the ConceptNet inventory plus
/// the `MotivatedBy` spelling used in analogy tables.
pub const DEFAULT_RELATIONS: &[&str] = &[
    "RelatedTo",
    "IsA",
    "PartOf",
    "HasA",
    "UsedFor",
    "CapableOf",
    "AtLocation",
    "Causes",
    "CausesDesire",
    "HasSubevent",
    "HasFirstSubevent",
    "HasLastSubevent",
    "HasPrerequisite",
    "HasProperty",
    "MotivatedBy",
    "MotivatedByGoal",
    "ObstructedBy",
    "Desires",
    "NotDesires",
    "CreatedBy",
    "MadeOf",
    "ReceivesAction",
    "Synonym",
    "Antonym",
    "DistinctFrom",
    "DerivedFrom",
    "SimilarTo",
    "SymbolOf",
    "DefinedAs",
    "MannerOf",
    "LocatedNear",
    "HasContext",
    "InstanceOf",
    "EtymologicallyRelatedTo",
];

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("concept is empty or whitespace-only")]
    EmptyConcept,
    #[error("invalid relation name {0:?}: must start with an ASCII capital and contain only ASCII letters, digits or '_'")]
    InvalidRelation(String),
    #[error("relation {0:?} is not registered")]
    UnknownRelation(String),
    #[error("confidence must be finite and strictly positive, got {0}")]
    InvalidConfidence(f64),
    #[error("self-loop on {concept} through {relation} is not permitted")]
    SelfLoop { concept: String, relation: String },
    #[error(
        "unknown emotion category {0:?} (expected Anger, Disgust, Surprise, Joy, Sadness or Fear)"
    )]
    UnknownEmotion(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A normalized concept token: lowercase, trimmed, inner whitespace runs
/// replaced by a single underscore.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Concept(String);

impl Concept {
    pub fn new(raw: &str) -> Result<Self, GraphError> {
        normalize_concept(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Concept {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_concept(s)
    }
}

/// Normalizes surface text into a [`Concept`] key.
pub fn normalize_concept(raw: &str) -> Result<Concept, GraphError> {
    let joined = raw
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_");
    if joined.is_empty() {
        return Err(GraphError::EmptyConcept);
    }
    Ok(Concept(joined))
}

/// A relation name such as `IsA` or `UsedFor`.
///
/// Names start with an ASCII capital, which keeps them disjoint from
/// (lowercase) concepts in serialized feature keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation(String);

impl Relation {
    pub fn new(name: &str) -> Result<Self, GraphError> {
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if valid {
            Ok(Relation(name.to_owned()))
        } else {
            Err(GraphError::InvalidRelation(name.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The open set of relations a graph accepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRegistry {
    // relation -> whether subject == object is allowed
    relations: BTreeMap<Relation, bool>,
}

impl RelationRegistry {
    pub fn empty() -> Self {
        RelationRegistry {
            relations: BTreeMap::new(),
        }
    }

    /// Registers `name`. Re-registering updates the self-loop permission.
    pub fn register(&mut self, name: &str, allow_self_loops: bool) -> Result<Relation, GraphError> {
        let relation = Relation::new(name)?;
        self.relations.insert(relation.clone(), allow_self_loops);
        Ok(relation)
    }

    pub fn contains(&self, relation: &Relation) -> bool {
        self.relations.contains_key(relation)
    }

    /// Looks up a registered relation by exact, case-sensitive name.
    pub fn get(&self, name: &str) -> Result<Relation, GraphError> {
        let relation = Relation::new(name)?;
        if self.contains(&relation) {
            Ok(relation)
        } else {
            Err(GraphError::UnknownRelation(name.to_owned()))
        }
    }

    pub fn allows_self_loops(&self, relation: &Relation) -> bool {
        self.relations.get(relation).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relation> {
        self.relations.keys()
    }
}

impl Default for RelationRegistry {
    fn default() -> Self {
        let mut registry = RelationRegistry::empty();
        for name in DEFAULT_RELATIONS {
            registry
                .register(name, false)
                .expect("default relation names are valid");
        }
        registry
    }
}

/// The six basic emotion categories used for manual concept labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionCategory {
    Anger,
    Disgust,
    Surprise,
    Joy,
    Sadness,
    Fear,
}

impl EmotionCategory {
    pub const ALL: [EmotionCategory; 6] = [
        EmotionCategory::Anger,
        EmotionCategory::Disgust,
        EmotionCategory::Surprise,
        EmotionCategory::Joy,
        EmotionCategory::Sadness,
        EmotionCategory::Fear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionCategory::Anger => "Anger",
            EmotionCategory::Disgust => "Disgust",
            EmotionCategory::Surprise => "Surprise",
            EmotionCategory::Joy => "Joy",
            EmotionCategory::Sadness => "Sadness",
            EmotionCategory::Fear => "Fear",
        }
    }

    /// The graph node standing for this emotion (the lowercased name).
    pub fn node(self) -> Concept {
        Concept(self.name().to_lowercase())
    }
}

impl fmt::Display for EmotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionCategory {
    type Err = GraphError;

    /// Case-insensitive match against the six category names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        EmotionCategory::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| GraphError::UnknownEmotion(s.to_owned()))
    }
}

/// A directed, typed, confidence-weighted edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub subject: Concept,
    pub relation: Relation,
    pub object: Concept,
    pub confidence: f64,
}

impl Assertion {
    pub fn new(
        subject: Concept,
        relation: Relation,
        object: Concept,
        confidence: f64,
    ) -> Result<Self, GraphError> {
        if !(confidence.is_finite() && confidence > 0.0) {
            return Err(GraphError::InvalidConfidence(confidence));
        }
        Ok(Assertion {
            subject,
            relation,
            object,
            confidence,
        })
    }
}

type AssertionKey = (Concept, Relation, Concept);

/// A set of assertions keyed by `(subject, relation, object)`.
///
/// Nodes are exactly the concepts appearing in some assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    registry: RelationRegistry,
    assertions: BTreeMap<AssertionKey, f64>,
    nodes: BTreeSet<Concept>,
}

impl Default for KnowledgeGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::with_registry(RelationRegistry::default())
    }

    pub fn with_registry(registry: RelationRegistry) -> Self {
        KnowledgeGraph {
            registry,
            assertions: BTreeMap::new(),
            nodes: BTreeSet::new(),
        }
    }

    pub fn registry(&self) -> &RelationRegistry {
        &self.registry
    }

    /// Inserts `a`. An existing `(subject, relation, object)` key keeps the
    /// larger of the two confidences.
    pub fn add_assertion(&mut self, a: Assertion) -> Result<(), GraphError> {
        if !self.registry.contains(&a.relation) {
            return Err(GraphError::UnknownRelation(a.relation.0));
        }
        if a.subject == a.object && !self.registry.allows_self_loops(&a.relation) {
            return Err(GraphError::SelfLoop {
                concept: a.subject.0,
                relation: a.relation.0,
            });
        }
        self.nodes.insert(a.subject.clone());
        self.nodes.insert(a.object.clone());
        let slot = self
            .assertions
            .entry((a.subject, a.relation, a.object))
            .or_insert(a.confidence);
        *slot = slot.max(a.confidence);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Concept> {
        self.nodes.iter()
    }

    pub fn contains_node(&self, concept: &Concept) -> bool {
        self.nodes.contains(concept)
    }

    pub fn confidence(
        &self,
        subject: &Concept,
        relation: &Relation,
        object: &Concept,
    ) -> Option<f64> {
        self.assertions
            .get(&(subject.clone(), relation.clone(), object.clone()))
            .copied()
    }

    /// Assertions in `(subject, relation, object)` order.
    pub fn assertions(&self) -> impl Iterator<Item = Assertion> + '_ {
        self.assertions.iter().map(|((s, r, o), &c)| Assertion {
            subject: s.clone(),
            relation: r.clone(),
            object: o.clone(),
            confidence: c,
        })
    }
}

/// Reads an assertion file using the default relation registry.
pub fn load_assertions(path: &Path) -> Result<KnowledgeGraph, GraphError> {
    load_assertions_with(path, RelationRegistry::default())
}

pub fn load_assertions_with(
    path: &Path,
    registry: RelationRegistry,
) -> Result<KnowledgeGraph, GraphError> {
    let content = text::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_assertions(&content, registry)
}

/// Parses `subject<TAB>relation<TAB>object<TAB>confidence` lines.
pub fn parse_assertions(
    content: &str,
    registry: RelationRegistry,
) -> Result<KnowledgeGraph, GraphError> {
    let mut graph = KnowledgeGraph::with_registry(registry);
    for record in text::records(content) {
        let at_line = |e: GraphError| GraphError::Parse {
            line: record.line,
            message: e.to_string(),
        };
        let [subject, relation, object, confidence] = record.fields[..] else {
            return Err(GraphError::Parse {
                line: record.line,
                message: format!(
                    "expected 4 TAB-separated fields, found {}",
                    record.fields.len()
                ),
            });
        };
        let confidence = text::parse_finite(confidence).ok_or_else(|| GraphError::Parse {
            line: record.line,
            message: format!("invalid confidence {confidence:?}"),
        })?;
        let relation = graph.registry.get(relation.trim()).map_err(at_line)?;
        let assertion = Assertion::new(
            normalize_concept(subject).map_err(at_line)?,
            relation,
            normalize_concept(object).map_err(at_line)?,
            confidence,
        )
        .map_err(at_line)?;
        graph.add_assertion(assertion).map_err(at_line)?;
    }
    Ok(graph)
}

/// Reads a `concept<TAB>EmotionCategory` label file.
pub fn load_emotion_labels(path: &Path) -> Result<Vec<(Concept, EmotionCategory)>, GraphError> {
    let content = text::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_emotion_labels(&content)
}

pub fn parse_emotion_labels(content: &str) -> Result<Vec<(Concept, EmotionCategory)>, GraphError> {
    text::records(content)
        .map(|record| {
            let at_line = |e: GraphError| GraphError::Parse {
                line: record.line,
                message: e.to_string(),
            };
            let [concept, label] = record.fields[..] else {
                return Err(GraphError::Parse {
                    line: record.line,
                    message: format!(
                        "expected 2 TAB-separated fields, found {}",
                        record.fields.len()
                    ),
                });
            };
            Ok((
                normalize_concept(concept).map_err(at_line)?,
                label.parse().map_err(at_line)?,
            ))
        })
        .collect()
}

/// Builds an affect graph: one `concept --HasProperty--> emotion` edge with
/// confidence 1.0 per distinct label pair. Emotion nodes are the lowercased
/// category names.
pub fn build_affect_graph(
    labels: &[(Concept, EmotionCategory)],
) -> Result<KnowledgeGraph, GraphError> {
    let mut graph = KnowledgeGraph::new();
    let has_property = graph.registry.get(HAS_PROPERTY)?;
    for (concept, emotion) in labels {
        graph.add_assertion(Assertion::new(
            concept.clone(),
            has_property.clone(),
            emotion.node(),
            1.0,
        )?)?;
    }
    Ok(graph)
}
