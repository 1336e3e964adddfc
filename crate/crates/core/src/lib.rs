//! Privacy-preserving multi-party epsilon-greedy contextual bandit.
//!
//! Compute parties hold additive shares over `Z/2^64` of every policy
//! parameter. Each step they score all arms, blend in shared exploration
//! noise, select an arm with a secure argmax and reveal it only to the arm
//! puller, then update every arm obliviously with a Sherman-Morrison step.
//!
//! Layers, bottom up:
//! - [`ring`], [`tensor`]: fixed-point encoding and ring tensors
//! - [`sharing`]: arithmetic and XOR sharing, conversions
//! - [`dealer`]: offline correlated randomness
//! - [`transport`]: framed links, rounds and ledgers
//! - [`protocols`]: products, truncation, comparison, argmax, reciprocal
//! - [`bandit`]: the secure learner and its plaintext reference
//! - [`envs`]: MNIST-PCA and K-means environments
//! - [`privacy`]: privacy loss and membership inference
//! - [`experiment`]: configs, runs, sweeps and benchmarks behind the CLI

pub mod bandit;
pub mod dealer;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod privacy;
pub mod protocols;
pub mod ring;
pub mod sharing;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use ring::{decode, encode, FixedPointConfig, RingElement};
