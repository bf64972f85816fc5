//! Experiment pipeline: configuration, window selection, clustering runs,
//! grid search and the scaling benchmark.

pub mod config;
pub mod run;
pub mod window;

pub use config::{PipelineConfig, WeightStrategy, WindowSpec};
pub use run::{
    cluster_dataset, run_cluster, run_gen, run_grid_search, run_scaling_bench, run_weights_train,
    BenchRow, ClusterOutcome,
};
pub use window::{select_windows, WindowedData};
