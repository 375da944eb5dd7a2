//! Dataset construction from baseline runs, losses, Adam and deterministic
//! data-parallel full-batch training.

pub mod adam;
pub mod dataset;
pub mod loss;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use dataset::{
    baseline_frames, dataset_from_frames, generate_dataset, normalize, stride_indices, Dataset, DatasetProvenance,
    SampleSource, TrainSample,
};
pub use loss::{
    data_loss, fd_second_derivative, pinn_loss, pinn_loss_grad, sparse_data_loss_grad, sparse_select, sparse_select_on,
    PinnTerms, ResidualConvention, SampleScales,
};
pub use train::{shard_ranges, train, train_from, train_parallel, EpochRecord, LossKind, TrainConfig, TrainOutcome};
