//! Sparse concept-feature matrices and blending.
//!
//! Each assertion `(s, r, o, c)` contributes two entries: the forward feature
//! `r>o` on row `s` and the inverse feature `s>r` on row `o`, both with value
//! `c`. Rows and columns are kept in lexicographic order so that every
//! derived artifact is reproducible byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{normalize_concept, Concept, KnowledgeGraph, Relation};
use crate::linalg;
use crate::sparse::CsrMatrix;
use crate::text;

/// Relative change below which power iteration stops.
pub const POWER_TOL: f64 = 1e-6;
pub const POWER_MAX_ITER: usize = 1000;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("blend needs at least one source")]
    EmptyBlend,
    #[error("blend weight for source {index} must be finite and positive, got {weight}")]
    InvalidWeight { index: usize, weight: f64 },
    #[error(
        "source {index} is an all-zero matrix; automatic weighting needs a non-zero spectral norm"
    )]
    SingularSource { index: usize },
    #[error("entry ({row}, {feature}) must be finite and non-zero, got {value}")]
    InvalidEntry {
        row: String,
        feature: String,
        value: f64,
    },
    #[error("duplicate entry ({row}, {feature})")]
    DuplicateEntry { row: String, feature: String },
    #[error("invalid feature key {0:?}")]
    InvalidFeatureKey(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    /// `relation → other`, attached to the subject row.
    Forward,
    /// `other → relation`, attached to the object row.
    Inverse,
}

/// A matrix column: a relation paired with the concept at the other end.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Feature {
    pub kind: FeatureKind,
    pub relation: Relation,
    pub other: Concept,
}

impl Feature {
    pub fn forward(relation: Relation, other: Concept) -> Self {
        Feature {
            kind: FeatureKind::Forward,
            relation,
            other,
        }
    }

    pub fn inverse(relation: Relation, other: Concept) -> Self {
        Feature {
            kind: FeatureKind::Inverse,
            relation,
            other,
        }
    }

    pub fn is_forward(&self) -> bool {
        self.kind == FeatureKind::Forward
    }

    /// `rel>other` for forward features, `other>rel` for inverse ones.
    pub fn key(&self) -> String {
        self.to_string()
    }

    /// Parses a key produced by [`Feature::key`]. Relations start with an
    /// ASCII capital and concepts never do, so the split is unambiguous.
    pub fn parse_key(key: &str) -> Result<Feature, MatrixError> {
        let bad = || MatrixError::InvalidFeatureKey(key.to_owned());
        if key.starts_with(|c: char| c.is_ascii_uppercase()) {
            let (rel, other) = key.split_once('>').ok_or_else(bad)?;
            let relation = Relation::new(rel).map_err(|_| bad())?;
            let concept = normalize_concept(other).map_err(|_| bad())?;
            if concept.as_str() != other {
                return Err(bad());
            }
            Ok(Feature::forward(relation, concept))
        } else {
            let (other, rel) = key.rsplit_once('>').ok_or_else(bad)?;
            let relation = Relation::new(rel).map_err(|_| bad())?;
            let concept = normalize_concept(other).map_err(|_| bad())?;
            if concept.as_str() != other {
                return Err(bad());
            }
            Ok(Feature::inverse(relation, concept))
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FeatureKind::Forward => write!(f, "{}>{}", self.relation, self.other),
            FeatureKind::Inverse => write!(f, "{}>{}", self.other, self.relation),
        }
    }
}

/// Sparse matrix with concept rows and feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptFeatureMatrix {
    rows: Vec<Concept>,
    cols: Vec<Feature>,
    row_index: BTreeMap<Concept, usize>,
    col_index: BTreeMap<Feature, usize>,
    entries: BTreeMap<(usize, usize), f64>,
}

impl ConceptFeatureMatrix {
    pub fn empty() -> Self {
        ConceptFeatureMatrix {
            rows: Vec::new(),
            cols: Vec::new(),
            row_index: BTreeMap::new(),
            col_index: BTreeMap::new(),
            entries: BTreeMap::new(),
        }
    }

    /// Builds a matrix whose rows and columns are exactly the concepts and
    /// features that carry an entry, each in sorted order.
    pub fn from_entries<I>(entries: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = (Concept, Feature, f64)>,
    {
        let mut keyed: BTreeMap<(Concept, Feature), f64> = BTreeMap::new();
        for (row, feature, value) in entries {
            if !value.is_finite() || value == 0.0 {
                return Err(MatrixError::InvalidEntry {
                    row: row.to_string(),
                    feature: feature.key(),
                    value,
                });
            }
            if keyed.contains_key(&(row.clone(), feature.clone())) {
                return Err(MatrixError::DuplicateEntry {
                    row: row.to_string(),
                    feature: feature.key(),
                });
            }
            keyed.insert((row, feature), value);
        }
        Ok(Self::from_keyed(keyed))
    }

    fn from_keyed(keyed: BTreeMap<(Concept, Feature), f64>) -> Self {
        let mut row_index: BTreeMap<Concept, usize> = BTreeMap::new();
        let mut col_index: BTreeMap<Feature, usize> = BTreeMap::new();
        for (row, feature) in keyed.keys() {
            row_index.entry(row.clone()).or_insert(0);
            col_index.entry(feature.clone()).or_insert(0);
        }
        let rows: Vec<Concept> = row_index.keys().cloned().collect();
        let cols: Vec<Feature> = col_index.keys().cloned().collect();
        for (i, slot) in row_index.values_mut().enumerate() {
            *slot = i;
        }
        for (j, slot) in col_index.values_mut().enumerate() {
            *slot = j;
        }
        let entries = keyed
            .into_iter()
            .map(|((row, feature), v)| ((row_index[&row], col_index[&feature]), v))
            .collect();
        ConceptFeatureMatrix {
            rows,
            cols,
            row_index,
            col_index,
            entries,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rows(&self) -> &[Concept] {
        &self.rows
    }

    pub fn cols(&self) -> &[Feature] {
        &self.cols
    }

    pub fn row_of(&self, concept: &Concept) -> Option<usize> {
        self.row_index.get(concept).copied()
    }

    pub fn col_of(&self, feature: &Feature) -> Option<usize> {
        self.col_index.get(feature).copied()
    }

    pub fn get(&self, concept: &Concept, feature: &Feature) -> Option<f64> {
        let key = (self.row_of(concept)?, self.col_of(feature)?);
        self.entries.get(&key).copied()
    }

    pub fn get_ij(&self, row: usize, col: usize) -> Option<f64> {
        self.entries.get(&(row, col)).copied()
    }

    /// Stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    /// Stored entries keyed by concept and feature.
    pub fn entries(&self) -> impl Iterator<Item = (&Concept, &Feature, f64)> + '_ {
        self.triplets()
            .map(|(r, c, v)| (&self.rows[r], &self.cols[c], v))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.triplets().collect();
        CsrMatrix::from_triplets(self.nrows(), self.ncols(), &triplets)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Writes `row<TAB>feature_key<TAB>value` lines in row-major order.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (row, feature, value) in self.entries() {
            writeln!(out, "{row}\t{feature}\t{value}")?;
        }
        Ok(())
    }

    pub fn to_triplet_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_triplets(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("triplet dump is UTF-8")
    }
}

/// Converts a graph into its concept-feature matrix.
pub fn graph_to_matrix(graph: &KnowledgeGraph) -> ConceptFeatureMatrix {
    let mut keyed = BTreeMap::new();
    for a in graph.assertions() {
        keyed.insert(
            (
                a.subject.clone(),
                Feature::forward(a.relation.clone(), a.object.clone()),
            ),
            a.confidence,
        );
        keyed.insert(
            (a.object, Feature::inverse(a.relation, a.subject)),
            a.confidence,
        );
    }
    ConceptFeatureMatrix::from_keyed(keyed)
}

/// Parses a triplet dump produced by [`ConceptFeatureMatrix::write_triplets`].
pub fn parse_triplets(content: &str) -> Result<ConceptFeatureMatrix, MatrixError> {
    let mut entries = Vec::new();
    for record in text::records(content) {
        let parse_err = |message: String| MatrixError::Parse {
            line: record.line,
            message,
        };
        let [row, key, value] = record.fields[..] else {
            return Err(parse_err(format!(
                "expected 3 TAB-separated fields, found {}",
                record.fields.len()
            )));
        };
        let row = normalize_concept(row).map_err(|e| parse_err(e.to_string()))?;
        let feature = Feature::parse_key(key).map_err(|e| parse_err(e.to_string()))?;
        let value = text::parse_finite(value)
            .ok_or_else(|| parse_err(format!("invalid value {value:?}")))?;
        entries.push((row, feature, value));
    }
    ConceptFeatureMatrix::from_entries(entries)
}

pub fn load_triplets(path: &Path) -> Result<ConceptFeatureMatrix, MatrixError> {
    let content = text::read_to_string(path).map_err(|source| MatrixError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_triplets(&content)
}

/// Weight applied to one blend source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlendWeight {
    Explicit(f64),
    /// `1 / σ₁(source)`, with σ₁ estimated by power iteration.
    Auto,
}

#[derive(Debug, Clone)]
pub struct BlendSource<'a> {
    pub matrix: &'a ConceptFeatureMatrix,
    pub weight: BlendWeight,
}

#[derive(Debug, Clone, Default)]
pub struct BlendSpec<'a> {
    pub sources: Vec<BlendSource<'a>>,
}

impl<'a> BlendSpec<'a> {
    pub fn new() -> Self {
        BlendSpec {
            sources: Vec::new(),
        }
    }

    pub fn with(mut self, matrix: &'a ConceptFeatureMatrix, weight: BlendWeight) -> Self {
        self.sources.push(BlendSource { matrix, weight });
        self
    }
}

/// Estimates the largest singular value by power iteration on `AᵀA`.
pub fn estimate_top_singular_value(a: &CsrMatrix) -> f64 {
    let (m, n) = (a.nrows(), a.ncols());
    if a.nnz() == 0 {
        return 0.0;
    }
    let mut x = linalg::fixed_vector(n, 0);
    let nx = linalg::norm(&x);
    linalg::scale(&mut x, 1.0 / nx);
    let mut ax = vec![0.0; m];
    let mut atax = vec![0.0; n];
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITER {
        a.mul_vec(&x, &mut ax);
        a.tr_mul_vec(&ax, &mut atax);
        let next = linalg::norm(&atax).sqrt();
        if next == 0.0 {
            // x lies in the null space of A
            return 0.0;
        }
        let converged = (next - sigma).abs() <= POWER_TOL * next;
        sigma = next;
        x.copy_from_slice(&atax);
        linalg::scale(&mut x, 1.0 / (sigma * sigma));
        if converged {
            break;
        }
    }
    sigma
}

/// Resolves every source weight to a number.
pub fn resolve_weights(spec: &BlendSpec<'_>) -> Result<Vec<f64>, MatrixError> {
    if spec.sources.is_empty() {
        return Err(MatrixError::EmptyBlend);
    }
    spec.sources
        .iter()
        .enumerate()
        .map(|(index, source)| match source.weight {
            BlendWeight::Explicit(w) if w.is_finite() && w > 0.0 => Ok(w),
            BlendWeight::Explicit(weight) => Err(MatrixError::InvalidWeight { index, weight }),
            BlendWeight::Auto => {
                let sigma = estimate_top_singular_value(&source.matrix.to_csr());
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(1.0 / sigma)
                } else {
                    Err(MatrixError::SingularSource { index })
                }
            }
        })
        .collect()
}

/// Sums weighted sources over the union of their row and column keys.
pub fn blend(spec: &BlendSpec<'_>) -> Result<ConceptFeatureMatrix, MatrixError> {
    let weights = resolve_weights(spec)?;
    let mut keyed: BTreeMap<(Concept, Feature), f64> = BTreeMap::new();
    for (source, w) in spec.sources.iter().zip(weights) {
        for (row, feature, value) in source.matrix.entries() {
            *keyed.entry((row.clone(), feature.clone())).or_insert(0.0) += w * value;
        }
    }
    keyed.retain(|_, v| *v != 0.0);
    Ok(ConceptFeatureMatrix::from_keyed(keyed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Assertion, KnowledgeGraph};

    fn c(s: &str) -> Concept {
        normalize_concept(s).unwrap()
    }

    fn rel(s: &str) -> Relation {
        Relation::new(s).unwrap()
    }

    fn graph(triples: &[(&str, &str, &str, f64)]) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        for &(s, r, o, w) in triples {
            g.add_assertion(Assertion::new(c(s), rel(r), c(o), w).unwrap())
                .unwrap();
        }
        g
    }

    #[test]
    fn single_assertion_gives_two_by_two() {
        let m = graph_to_matrix(&graph(&[("spoon", "UsedFor", "eating", 1.0)]));
        assert_eq!((m.nrows(), m.ncols(), m.nnz()), (2, 2, 2));
        assert_eq!(m.rows(), &[c("eating"), c("spoon")]);
        assert_eq!(
            m.get(&c("spoon"), &Feature::forward(rel("UsedFor"), c("eating"))),
            Some(1.0)
        );
        assert_eq!(
            m.get(&c("eating"), &Feature::inverse(rel("UsedFor"), c("spoon"))),
            Some(1.0)
        );
        assert_eq!(
            m.get(&c("spoon"), &Feature::inverse(rel("UsedFor"), c("spoon"))),
            None
        );
    }

    #[test]
    fn empty_graph_gives_empty_matrix() {
        let m = graph_to_matrix(&KnowledgeGraph::new());
        assert_eq!((m.nrows(), m.ncols(), m.nnz()), (0, 0, 0));
    }

    #[test]
    fn analogy_table_row_has_forward_features() {
        let m = graph_to_matrix(&graph(&[
            ("hari_raya", "Causes", "shiok", 1.0),
            ("hari_raya", "IsA", "event", 1.0),
            ("hari_raya", "MotivatedBy", "celebration", 0.8),
            ("makan", "Causes", "shiok", 0.5),
        ]));
        for (r, o) in [
            ("Causes", "shiok"),
            ("IsA", "event"),
            ("MotivatedBy", "celebration"),
        ] {
            assert!(m
                .get(&c("hari_raya"), &Feature::forward(rel(r), c(o)))
                .is_some());
        }
        assert!(m
            .get(&c("makan"), &Feature::forward(rel("IsA"), c("event")))
            .is_none());
    }

    #[test]
    fn feature_keys_round_trip() {
        let f = Feature::forward(rel("UsedFor"), c("eating"));
        assert_eq!(f.key(), "UsedFor>eating");
        assert_eq!(Feature::parse_key("UsedFor>eating").unwrap(), f);
        let g = Feature::inverse(rel("UsedFor"), c("spoon"));
        assert_eq!(g.key(), "spoon>UsedFor");
        assert_eq!(Feature::parse_key("spoon>UsedFor").unwrap(), g);
        let odd = Feature::inverse(rel("IsA"), c("a>b"));
        assert_eq!(Feature::parse_key(&odd.key()).unwrap(), odd);
        for bad in [
            "",
            "spoon",
            "spoon>usedfor",
            "UsedFor>",
            ">UsedFor",
            "UsedFor>Eating",
        ] {
            assert!(Feature::parse_key(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn triplet_dump_round_trips_exactly() {
        let m = graph_to_matrix(&graph(&[
            ("spoon", "UsedFor", "eating", 0.1 + 0.2),
            ("book", "MadeOf", "paper", 1.0 / 3.0),
        ]));
        let text = m.to_triplet_string();
        assert_eq!(parse_triplets(&text).unwrap(), m);
    }

    #[test]
    fn triplet_parser_rejects_duplicates_and_zeros() {
        assert!(matches!(
            parse_triplets("a\tIsA>b\t1\na\tIsA>b\t2\n"),
            Err(MatrixError::DuplicateEntry { .. })
        ));
        assert!(matches!(
            parse_triplets("a\tIsA>b\t0\n"),
            Err(MatrixError::InvalidEntry { .. })
        ));
        assert!(matches!(
            parse_triplets("a\tIsA>b\n"),
            Err(MatrixError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn blending_identical_sources_doubles_entries() {
        let m = graph_to_matrix(&graph(&[("spoon", "UsedFor", "eating", 1.0)]));
        let b = blend(
            &BlendSpec::new()
                .with(&m, BlendWeight::Explicit(1.0))
                .with(&m, BlendWeight::Explicit(1.0)),
        )
        .unwrap();
        assert_eq!((b.nrows(), b.ncols()), (m.nrows(), m.ncols()));
        assert!(b.triplets().all(|(_, _, v)| v == 2.0));
    }

    #[test]
    fn disjoint_sources_give_block_union() {
        let a = graph_to_matrix(&graph(&[("spoon", "UsedFor", "eating", 1.0)]));
        let b = graph_to_matrix(&graph(&[("book", "MadeOf", "paper", 0.5)]));
        let u = blend(
            &BlendSpec::new()
                .with(&a, BlendWeight::Explicit(1.0))
                .with(&b, BlendWeight::Explicit(1.0)),
        )
        .unwrap();
        assert_eq!(u.nnz(), a.nnz() + b.nnz());
        assert_eq!((u.nrows(), u.ncols()), (4, 4));
    }

    #[test]
    fn auto_weight_normalizes_spectral_norm() {
        let f1 = Feature::forward(rel("IsA"), c("f"));
        let f2 = Feature::forward(rel("IsA"), c("g"));
        let diag2 = ConceptFeatureMatrix::from_entries([
            (c("a"), f1.clone(), 2.0),
            (c("b"), f2.clone(), 2.0),
        ])
        .unwrap();
        let w = resolve_weights(&BlendSpec::new().with(&diag2, BlendWeight::Auto)).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
        let b = blend(&BlendSpec::new().with(&diag2, BlendWeight::Auto)).unwrap();
        assert!(b.triplets().all(|(_, _, v)| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn blend_validates_spec() {
        let empty = ConceptFeatureMatrix::empty();
        assert!(matches!(
            blend(&BlendSpec::new()),
            Err(MatrixError::EmptyBlend)
        ));
        assert!(matches!(
            blend(&BlendSpec::new().with(&empty, BlendWeight::Auto)),
            Err(MatrixError::SingularSource { index: 0 })
        ));
        let m = graph_to_matrix(&graph(&[("spoon", "UsedFor", "eating", 1.0)]));
        for w in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                blend(&BlendSpec::new().with(&m, BlendWeight::Explicit(w))),
                Err(MatrixError::InvalidWeight { .. })
            ));
        }
    }
}
