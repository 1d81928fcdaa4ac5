//! Energy-efficient hybrid precoding for multi-user massive MIMO downlinks
//! with partially-connected RF front ends.
//!
//! The crate models the full transmitter power budget (power amplifiers, RF
//! chains, channel estimation, coding, linear processing, phase shifters and
//! the precoding algorithm itself) and optimizes energy efficiency in two
//! stages:
//!
//! 1. [`upper_bound::optimize_digital`] ascends the fully-digital energy
//!    efficiency, giving an upper bound `B_opt`.
//! 2. [`factorization::factorize`] splits `B_opt` into a block-diagonal
//!    unit-modulus RF matrix and a power-feasible baseband matrix by
//!    alternating a semidefinite-relaxation baseband step with a closed-form
//!    phase update.
//!
//! [`factorization::phone`] composes both. [`omp`] provides the orthogonal
//! matching pursuit baselines and [`runner`] drives Monte Carlo sweeps that
//! emit per-trial CSV metrics.

pub mod channel;
pub mod config;
pub mod error;
pub mod factorization;
pub mod linalg;
pub mod omp;
pub mod power;
pub mod precoder;
pub mod rate;
pub mod runner;
pub mod sdp;
pub mod seed;
pub mod upper_bound;

pub use channel::{array_response, sample_channel, ChannelSet, RayAngles};
pub use config::{ComputationPower, GainModel, OmpTarget, Structure, SystemConfig};
pub use error::{ConfigError, Error, Result};
pub use factorization::{factorize, phone, FactorizationOutcome, PhoneOutcome};
pub use linalg::{CMat, CVec};
pub use omp::{omp_hybrid, zf_target};
pub use power::{CostBreakdown, PowerBreakdown, PowerModel};
pub use precoder::{DigitalPrecoder, HybridPrecoder, Precoder, RfPhases};
pub use rate::{sum_rate, user_rate};
pub use runner::{Algorithm, MetricsRecord, SweepParam, SweepSpec};
pub use upper_bound::{optimize_digital, DigitalOutcome, IterationState};
