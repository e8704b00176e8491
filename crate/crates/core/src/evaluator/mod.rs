//! The evaluation protocol: k-fold prediction-averaging ensembles, the
//! dataset × learner × target × split grid with repetitions, cross-dataset
//! models, and the random-versus-time comparison report.

mod ensemble;
mod grid;
mod report;

pub use ensemble::{
    concatenate_datasets, ensemble_across_datasets, mean_of_vectors, train_fold_ensemble,
    FittedMember, FoldEnsemble,
};
pub use grid::{run_grid, GridDataset, GridSpec, RunRecord, SplitDescriptor, SplitSchedule, ENSEMBLE_DATASET};
pub use report::{
    build_comparison_report, CellComparison, CombinedTest, ComparisonReport, MethodSummary,
    Partition, TargetTest,
};
