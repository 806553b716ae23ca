//! Learning bi-capacities from bag-labeled multi-source data and fusing with
//! the bipolar Choquet integral.
//!
//! * [`lattice`]: subset pairs, bi-capacity tables, validation, sampling.
//! * [`choquet`]: the bipolar Choquet integral and batch fusion.
//! * [`mil`]: instance tables, bags, and the two bag-level objectives.
//! * [`optimizer`]: the evolutionary trainer.
//! * [`synthgen`]: the synthetic three-source letter scene.
//! * [`metrics`]: ROC AUC, RMSE and simple fusion baselines.
//! * [`grid`], [`io`]: image grids and the CSV/PGM file formats.

pub mod choquet;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod metrics;
pub mod mil;
pub mod optimizer;
pub mod synthgen;

pub use choquet::{choquet, choquet_with, fuse_rows, ChiEvaluation, ChoquetError, InputPolicy};
pub use lattice::{BiCapacity, Mode, SubsetPair, ValidationReport};
pub use mil::{load_bags, objective1, objective2, BagLabel, BagSet, Fitness, InstanceTable};
pub use optimizer::{train, OptimizerConfig, StopReason, TrainRun};
