//! Affective commonsense reasoning over concept graphs: graph ingestion,
//! concept-feature matrices and blending, truncated SVD embeddings, the
//! Hourglass emotion model, ELM-based sentic prediction and lexicon export.

mod linalg;
mod text;

pub mod graph;
pub mod hourglass;
pub mod lexicon;
pub mod matrix;
pub mod predictor;
pub mod sparse;
pub mod spectral;
