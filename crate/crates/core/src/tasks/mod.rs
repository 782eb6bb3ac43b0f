//! Graph tasks built on the solvers: partitioning, clustering and completion.

pub mod cluster;
pub mod completion;
pub mod metrics;
pub mod partition;

pub use cluster::{cluster_graphs, ClusterResult};
pub use completion::{complete_graph, CompletionConfig, CompletionProblem, CompletionResult};
pub use metrics::{adjusted_rand, ami, completion_metrics, modularity, rand_index, CompletionMetrics};
pub use partition::{
    partition, partition_adjacency, partition_solver_config, tune_partition, PartitionResult, PartitionSetting,
    RepresentationSearch,
};
