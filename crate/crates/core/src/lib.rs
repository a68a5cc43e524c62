//! Numerical toolkit for counting lattice points on level sets of the split
//! quadratic form `F0(x, y) = x · y` with the delta-method circle method.
//!
//! The modules follow the pipeline: [`forms`] and [`weights`] describe the
//! counting problem, [`delta_kernel`] implements the smooth delta identity,
//! [`exp_sums`] the complete exponential sums and the singular series,
//! [`sing_integral`] the singular integral, [`counter`] the exact
//! lattice counts and [`harness`] the prediction and verification reports.

pub mod arith;
pub mod counter;
pub mod delta_kernel;
pub mod error;
pub mod exp_sums;
pub mod format;
pub mod forms;
pub mod harness;
pub mod lattice;
pub mod quadrature;
pub mod sing_integral;
pub mod special;
pub mod summation;
pub mod weights;

pub use error::{QcError, Result};
pub use forms::{LatticeSpec, QuadraticFormF0};
pub use summation::NeumaierSum;
pub use weights::{RadialBump, ScaledWeight, Weight, WeightFamily, WeightFunction};
pub use counter::{CountOptions, CountResult};
pub use exp_sums::{ExpSumValue, LocalFactor, SigmaMethod, SigmaReport};
pub use harness::{ConvergenceRow, Cutoffs, PredictionReport, SigmaVariant, VerifyReport, VerifySummary};
pub use lattice::HyperplaneLatticeSolution;
pub use sing_integral::{IFunctionGrid, QuadratureConfig};
