//! Recursive agglomerative clustering of categorical records with weighted
//! Hamming distances, landmark sampling for large inputs, attribute
//! weighting, evaluation metrics and label-propagation fraud screening.

pub mod agglo;
pub mod clustering;
pub mod detect;
pub mod distance;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod recagglo;
pub mod sample;
pub mod schema;
pub mod synthgen;
pub mod weights;

pub use clustering::{Cluster, Clustering, Provenance};
pub use distance::{HammingMetric, Normalization, NullPolicy, WeightVector};
pub use error::{Error, Result};
pub use recagglo::{rec_agglo, rec_agglo_all, RecAggloParams};
pub use schema::{AttributeCategory, AttributeSchema, Dataset, Label, Record};
