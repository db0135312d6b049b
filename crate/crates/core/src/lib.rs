//! Exact digit-expansion machinery: q-ary and Cantor-series expansions,
//! shift and generalized shift operators, generalized Salem functions defined
//! by systems of functional equations, and Lebesgue measures of sets cut out
//! by shift compositions.

pub mod error;
pub mod expansion;
pub mod experiment;
pub mod interval;
pub mod measure;
pub mod montecarlo;
pub mod plm;
pub mod rational;
pub mod salem;
pub mod shift;
pub mod verify;

pub use error::{Error, Result};
pub use expansion::{cylinder_interval, dual_representation, expansion_of, value_of, BaseSpec, Cylinder, DigitExpansion, Tail};
pub use rational::Rational;
pub use salem::{Continuity, DistributionSpec, Evaluation, IndexSequence, Monotonicity, SalemFunction, WeightSet};
pub use interval::IntervalUnion;
pub use measure::DeletionMap;
pub use montecarlo::McEstimate;
pub use plm::{Branch, PiecewiseLinearMap};
pub use experiment::{gk_scan, ExperimentConfig, Family, Scan};
pub use verify::{run_suite, Check, Suite};
