//! Dataset ingestion, run configuration, seeded randomness, synthetic data
//! and report serialization.

pub mod config;
pub mod dataset;
pub mod generate;
pub mod report;
pub mod rng;

pub use config::{PredicateSpec, RunConfig, TransformerSpec, X0Spec};
pub use dataset::{load_dataset, write_sample_csv, Dataset, DatasetFile, LabelColumn};
pub use generate::{generate_class_blobs, generate_gaussian, BlobSpec, Spread};
pub use report::{write_plot_data, write_report, Report};
pub use rng::SeededStream;
