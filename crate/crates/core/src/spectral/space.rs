//! Concept embeddings: rows of `U_k Σ_k`, compared by angle.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use super::{default_max_iter, truncated_svd, SpectralError, TsvdResult, DEFAULT_TOL};
use crate::graph::{normalize_concept, Concept};
use crate::linalg::{dot, norm};
use crate::matrix::ConceptFeatureMatrix;
use crate::text;

/// Number of retained components when the caller does not choose one.
pub const DEFAULT_K: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct AffectiveSpace {
    concepts: Vec<Concept>,
    index: BTreeMap<Concept, usize>,
    vectors: Vec<Vec<f64>>,
    sigma: Vec<f64>,
}

/// Embeds the rows of `a` with `k` components, clamping `k` to the smaller
/// matrix dimension.
pub fn build_space(a: &ConceptFeatureMatrix, k: usize) -> Result<AffectiveSpace, SpectralError> {
    let k_used = clamp_rank(a, k);
    build_space_with(a, k_used, DEFAULT_TOL, default_max_iter(k_used))
}

/// `k` limited to the smaller dimension of `a`, with a warning when lowered.
pub fn clamp_rank(a: &ConceptFeatureMatrix, k: usize) -> usize {
    let max = a.nrows().min(a.ncols());
    if k > max && max > 0 {
        log::warn!(
            "requested {k} components but the matrix is {}x{}; using {max}",
            a.nrows(),
            a.ncols()
        );
        max
    } else {
        k
    }
}

/// Embeds without clamping.
pub fn build_space_with(
    a: &ConceptFeatureMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<AffectiveSpace, SpectralError> {
    let tsvd = truncated_svd(a, k, tol, max_iter)?;
    Ok(AffectiveSpace::from_tsvd(a.rows(), &tsvd))
}

impl AffectiveSpace {
    /// Coordinates are `U_k Σ_k`, one row per concept.
    pub fn from_tsvd(concepts: &[Concept], tsvd: &TsvdResult) -> Self {
        let vectors = (0..concepts.len())
            .map(|i| {
                (0..tsvd.rank())
                    .map(|l| tsvd.u[(i, l)] * tsvd.sigma[l])
                    .collect()
            })
            .collect();
        Self::from_parts(concepts.to_vec(), vectors, tsvd.sigma.clone())
    }

    fn from_parts(concepts: Vec<Concept>, vectors: Vec<Vec<f64>>, sigma: Vec<f64>) -> Self {
        let index = concepts
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        AffectiveSpace {
            concepts,
            index,
            vectors,
            sigma,
        }
    }

    /// Number of coordinates per concept.
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn contains(&self, concept: &Concept) -> bool {
        self.index.contains_key(concept)
    }

    pub fn vector(&self, concept: &Concept) -> Option<&[f64]> {
        self.index.get(concept).map(|&i| self.vectors[i].as_slice())
    }

    fn require(&self, concept: &Concept) -> Result<&[f64], SpectralError> {
        self.vector(concept)
            .ok_or_else(|| SpectralError::UnknownConcept(concept.to_string()))
    }

    /// Cosine of the angle between two concept vectors.
    pub fn cosine_similarity(&self, a: &Concept, b: &Concept) -> Result<f64, SpectralError> {
        let va = self.require(a)?;
        let vb = self.require(b)?;
        let (na, nb) = (norm(va), norm(vb));
        if na == 0.0 {
            return Err(SpectralError::ZeroVector(a.to_string()));
        }
        if nb == 0.0 {
            return Err(SpectralError::ZeroVector(b.to_string()));
        }
        Ok((dot(va, vb) / (na * nb)).clamp(-1.0, 1.0))
    }

    /// The `n` other concepts closest in angle to `concept`. Concepts with a
    /// zero vector are never returned; ties are broken lexicographically.
    pub fn nearest_neighbors(
        &self,
        concept: &Concept,
        n: usize,
    ) -> Result<Vec<(Concept, f64)>, SpectralError> {
        let query = self.require(concept)?;
        let qn = norm(query);
        if qn == 0.0 {
            return Err(SpectralError::ZeroVector(concept.to_string()));
        }
        let mut scored: Vec<(Concept, f64)> = self
            .concepts
            .iter()
            .zip(&self.vectors)
            .filter(|(c, _)| *c != concept)
            .filter_map(|(c, v)| {
                let nv = norm(v);
                (nv > 0.0).then(|| (c.clone(), (dot(query, v) / (qn * nv)).clamp(-1.0, 1.0)))
            })
            .collect();
        scored.sort_by(|x, y| match y.1.total_cmp(&x.1) {
            Ordering::Equal => x.0.cmp(&y.0),
            other => other,
        });
        scored.truncate(n);
        Ok(scored)
    }

    /// `(concept, v[x], v[y])` for every concept.
    pub fn project(&self, x: usize, y: usize) -> Result<Vec<(Concept, f64, f64)>, SpectralError> {
        for axis in [x, y] {
            if axis >= self.dim() {
                return Err(SpectralError::AxisOutOfRange {
                    axis,
                    k: self.dim(),
                });
            }
        }
        Ok(self
            .concepts
            .iter()
            .zip(&self.vectors)
            .map(|(c, v)| (c.clone(), v[x], v[y]))
            .collect())
    }

    /// Writes the `#k=`/`#sigma=` header and one TAB-separated row per
    /// concept. Floats use their shortest exact representation.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#k={}", self.dim())?;
        let sigma: Vec<String> = self.sigma.iter().map(f64::to_string).collect();
        writeln!(out, "#sigma={}", sigma.join(","))?;
        for (c, v) in self.concepts.iter().zip(&self.vectors) {
            write!(out, "{c}")?;
            for x in v {
                write!(out, "\t{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("space export is UTF-8")
    }
}

/// Parses the format written by [`AffectiveSpace::write_tsv`].
pub fn parse_space(content: &str) -> Result<AffectiveSpace, SpectralError> {
    let parse_err = |line: usize, message: String| SpectralError::Parse { line, message };
    let mut k: Option<usize> = None;
    let mut sigma: Option<Vec<f64>> = None;
    for (i, line) in content.lines().enumerate().take(2) {
        if let Some(v) = line.strip_prefix("#k=") {
            k = Some(
                v.trim()
                    .parse()
                    .map_err(|_| parse_err(i + 1, format!("invalid k {v:?}")))?,
            );
        } else if let Some(v) = line.strip_prefix("#sigma=") {
            let values = if v.trim().is_empty() {
                Vec::new()
            } else {
                v.split(',')
                    .map(|s| {
                        text::parse_finite(s).ok_or_else(|| {
                            parse_err(i + 1, format!("invalid singular value {s:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            sigma = Some(values);
        }
    }
    let k = k.ok_or_else(|| parse_err(1, "missing #k= header".into()))?;
    let sigma = sigma.ok_or_else(|| parse_err(2, "missing #sigma= header".into()))?;
    if sigma.len() != k {
        return Err(parse_err(
            2,
            format!("expected {k} singular values, found {}", sigma.len()),
        ));
    }

    let mut concepts = Vec::new();
    let mut vectors = Vec::new();
    let mut seen = BTreeMap::new();
    for record in text::records(content) {
        if record.fields.len() != k + 1 {
            return Err(parse_err(
                record.line,
                format!("expected {} fields, found {}", k + 1, record.fields.len()),
            ));
        }
        let concept = normalize_concept(record.fields[0])
            .map_err(|e| parse_err(record.line, e.to_string()))?;
        if seen.insert(concept.clone(), ()).is_some() {
            return Err(parse_err(
                record.line,
                format!("duplicate concept {concept}"),
            ));
        }
        let v = record.fields[1..]
            .iter()
            .map(|s| {
                text::parse_finite(s)
                    .ok_or_else(|| parse_err(record.line, format!("invalid coordinate {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        concepts.push(concept);
        vectors.push(v);
    }
    Ok(AffectiveSpace::from_parts(concepts, vectors, sigma))
}

pub fn load_space(path: &Path) -> Result<AffectiveSpace, SpectralError> {
    let content = text::read_to_string(path).map_err(|source| SpectralError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_space(&content)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Relation;
    use crate::matrix::Feature;

    fn c(s: &str) -> Concept {
        normalize_concept(s).unwrap()
    }

    fn diag(values: &[f64]) -> ConceptFeatureMatrix {
        ConceptFeatureMatrix::from_entries(values.iter().enumerate().map(|(i, &v)| {
            (
                c(&format!("c{i}")),
                Feature::forward(Relation::new("IsA").unwrap(), c(&format!("f{i}"))),
                v,
            )
        }))
        .unwrap()
    }

    fn manual(vectors: &[(&str, Vec<f64>)]) -> AffectiveSpace {
        let k = vectors[0].1.len();
        AffectiveSpace::from_parts(
            vectors.iter().map(|(n, _)| c(n)).collect(),
            vectors.iter().map(|(_, v)| v.clone()).collect(),
            vec![1.0; k],
        )
    }

    #[test]
    fn diagonal_coordinates_follow_sign_convention() {
        let s = build_space(&diag(&[3.0, 2.0]), 2).unwrap();
        assert_eq!(s.dim(), 2);
        let v0 = s.vector(&c("c0")).unwrap();
        let v1 = s.vector(&c("c1")).unwrap();
        assert!((v0[0] - 3.0).abs() < 1e-12 && v0[1].abs() < 1e-12);
        assert!(v1[0].abs() < 1e-12 && (v1[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_component_spaces() {
        let s = build_space(&diag(&[3.0, 2.0, 1.0]), 1).unwrap();
        assert!(s
            .concepts()
            .iter()
            .all(|con| s.vector(con).unwrap().len() == 1));
    }

    #[test]
    fn rank_is_clamped_but_empty_matrix_fails() {
        assert_eq!(build_space(&diag(&[3.0, 2.0]), 100).unwrap().dim(), 2);
        assert!(matches!(
            build_space(&ConceptFeatureMatrix::empty(), 100),
            Err(SpectralError::RankTooLarge { .. })
        ));
    }

    #[test]
    fn cosine_cases() {
        let s = manual(&[
            ("a", vec![1.0, 2.0]),
            ("b", vec![-1.0, -2.0]),
            ("o", vec![2.0, -1.0]),
            ("z", vec![0.0, 0.0]),
        ]);
        assert!((s.cosine_similarity(&c("a"), &c("a")).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.cosine_similarity(&c("a"), &c("b")).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(s.cosine_similarity(&c("a"), &c("o")).unwrap(), 0.0);
        assert!(matches!(
            s.cosine_similarity(&c("a"), &c("z")),
            Err(SpectralError::ZeroVector(_))
        ));
        assert!(matches!(
            s.cosine_similarity(&c("a"), &c("q")),
            Err(SpectralError::UnknownConcept(_))
        ));
    }

    #[test]
    fn neighbors_sorted_with_lexicographic_ties() {
        let s = manual(&[
            ("q", vec![1.0, 0.0]),
            ("b", vec![2.0, 0.0]),
            ("a", vec![3.0, 0.0]),
            ("c", vec![0.0, 1.0]),
            ("z", vec![0.0, 0.0]),
        ]);
        let n = s.nearest_neighbors(&c("q"), 3).unwrap();
        let names: Vec<&str> = n.iter().map(|(x, _)| x.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert!(s.nearest_neighbors(&c("q"), 0).unwrap().is_empty());
        assert!(matches!(
            s.nearest_neighbors(&c("nope"), 2),
            Err(SpectralError::UnknownConcept(_))
        ));
    }

    #[test]
    fn projection_axes_checked() {
        let s = manual(&[("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])]);
        assert_eq!(s.project(0, 1).unwrap()[1], (c("b"), 3.0, 4.0));
        assert!(s.project(1, 1).unwrap().iter().all(|(_, x, y)| x == y));
        assert!(matches!(
            s.project(0, 500),
            Err(SpectralError::AxisOutOfRange { axis: 500, k: 2 })
        ));
    }

    #[test]
    fn export_round_trips() {
        let s = build_space(&diag(&[3.0, 2.0, 0.1 + 0.2]), 2).unwrap();
        let text = s.to_tsv_string();
        assert!(text.starts_with("#k=2\n#sigma="));
        assert!((s.sigma()[0] - 3.0).abs() < 1e-12);
        assert_eq!(parse_space(&text).unwrap(), s);
        assert!(parse_space("#k=2\n#sigma=1\n").is_err());
        assert!(parse_space("#k=1\n#sigma=1\na\t1\t2\n").is_err());
    }
}
