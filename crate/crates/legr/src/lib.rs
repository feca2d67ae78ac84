//! Learned global filter ranking for structured ConvNet pruning.
//!
//! A single learned ranking of convolutional filters — per-layer affine
//! transforms over squared filter norms — is enough to generate a whole
//! family of pruned architectures at arbitrary FLOP targets. This crate
//! bundles everything needed to do that end to end on one CPU:
//!
//! - [`engine`] — a small trainable network engine (forward, reverse-mode
//!   gradients, SGD with Nesterov momentum) in `f64`,
//! - [`graph`] — architecture graphs with channel-coupling groups and an
//!   analytic multiply-accumulate cost model,
//! - [`ranking`] — affine-transformed filter importance, global sorting and
//!   FLOP-targeted mask generation,
//! - [`search`] — regularized evolutionary search over the affine transforms,
//!   fitness = validation accuracy after a short fine-tune,
//! - [`baselines`] — uniform and global-magnitude reference pruners,
//! - [`data`] — a deterministic synthetic shape-classification generator and
//!   an IDX binary reader,
//! - [`harness`] — manifest-driven experiment commands (pretrain, search,
//!   sweep, baseline, flops, eval) shared by the `legr` binary.
//!
//! The `examples/` directory is the guided tour; each example exercises one
//! capability and runs in seconds:
//!
//! ```bash
//! cargo run --release --example synthetic_data
//! cargo run --release --example train_small_cnn
//! cargo run --release --example flops_model
//! cargo run --release --example global_ranking
//! cargo run --release --example nested_family
//! cargo run --release --example evolutionary_search
//! cargo run --release --example pareto_sweep
//! cargo run --release --example idx_files
//! ```
//!
//! The same flows are scriptable through the thin `legr` binary; see the
//! README for the manifest format.

pub mod baselines;
pub mod data;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ranking;
pub mod rng;
pub mod search;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::{FilterMask, NetworkGraph};
pub use ranking::AffinePair;
pub use tensor::TensorGrid;
