use std::collections::HashMap;
use std::path::Path;

use crate::corpus::{joined_name, EntityCatalog, EntityId};
use crate::error::{Error, Result};

use super::{read_vector_file, EmbeddingTable};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CentroidMode {
    /// The entity's trained static input vector.
    TrainedStatic,
    /// Precomputed per-entity vectors (e.g. contextual embeddings averaged
    /// over all mentions) read from a file.
    ExternalFile,
}

/// Per-entity vectors used for clustering distances and the embedding
/// scoring channel.
#[derive(Clone, Debug)]
pub struct CentroidProvider {
    mode: CentroidMode,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl CentroidProvider {
    pub fn from_table(table: &EmbeddingTable) -> Self {
        let vectors = (0..table.n_entities())
            .map(|e| table.input(e).to_vec())
            .collect();
        CentroidProvider {
            mode: CentroidMode::TrainedStatic,
            dim: table.dim(),
            vectors,
        }
    }

    /// Vectors indexed by entity id.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        Ok(CentroidProvider {
            mode: CentroidMode::ExternalFile,
            dim,
            vectors,
        })
    }

    /// Load an external vector file (same text layout as the embedding
    /// file). Fails listing every catalog entity without a vector; rows for
    /// unknown names are ignored.
    pub fn load(path: impl AsRef<Path>, catalog: &EntityCatalog) -> Result<Self> {
        let path = path.as_ref();
        let file = read_vector_file(path)?;
        let mut by_name: HashMap<String, Vec<f64>> = HashMap::new();
        for (name, v) in file.rows {
            by_name.entry(name).or_insert(v);
        }
        let mut missing = Vec::new();
        let mut vectors = Vec::with_capacity(catalog.len());
        for e in catalog.ids() {
            match by_name.remove(&joined_name(catalog.name(e))) {
                Some(v) => vectors.push(v),
                None => {
                    missing.push(catalog.name(e).to_owned());
                    vectors.push(Vec::new());
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::NotFound(format!(
                "{}: no centroid for entities: {}",
                path.display(),
                missing.join(", ")
            )));
        }
        Ok(CentroidProvider {
            mode: CentroidMode::ExternalFile,
            dim: file.dim,
            vectors,
        })
    }

    pub fn mode(&self) -> CentroidMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn centroid(&self, entity: EntityId) -> Result<&[f64]> {
        self.vectors
            .get(entity.index())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NotFound(format!("no centroid for entity {entity}")))
    }
}
