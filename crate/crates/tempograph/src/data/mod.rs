//! Dataset schema, loaders, HTTP fetcher with cache and synthetic dataset
//! generators. The on-disk format is a single versioned JSON document per
//! dataset (see [`DatasetDocument`] for the field-by-field schema).

mod fetch;
mod schema;
mod synthetic;

pub use fetch::{default_cache_dir, fetch_dataset, CACHE_DIR_ENV};
pub use schema::{
    load_dataset, load_dataset_str, save_dataset, serialize_dataset, to_document,
    DatasetDocument, EdgeBlock, Edges, Features, Metadata, DATASET_SCHEMA_VERSION,
};
pub use synthetic::{constant_mean_mse, synthetic_benchmark_sequence, synthetic_diffusion_dataset};
