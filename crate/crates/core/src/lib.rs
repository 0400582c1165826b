//! K-order online coordinate boosting.
//!
//! A fixed pool of weak hypotheses is preselected offline; only their weights
//! adapt online. [`ocb::OcbState`] approximates what batch AdaBoost would do
//! after every new example by carrying pairwise weight sums and a K-term
//! correction per coordinate. [`oza::OzaState`] is the classic online
//! boosting baseline and [`batch`] holds the exact reference.
//!
//! ```
//! use ocboost::{batch::fit_weights, margin::MarginMatrix};
//!
//! let m = MarginMatrix::from_rows(&[[1, 1], [1, -1], [-1, 1]]).unwrap();
//! let fit = fit_weights(&m, 0.0).unwrap();
//! assert!((fit.alphas[0] - 0.5 * 2f64.ln()).abs() < 1e-12);
//! ```

pub mod batch;
pub mod classifier;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod margin;
pub mod mnist;
pub mod ocb;
pub mod oza;
pub mod plot;
pub mod synthetic;
pub mod trajectory;
pub mod weak;

pub use batch::{fit_weights, incremental_oracle, BatchFitResult};
pub use classifier::StrongClassifier;
pub use error::{Error, Result};
pub use margin::{LabeledExample, MarginMatrix, Sign, WeakHypothesis};
pub use ocb::{NegativeSumConvention, OcbConfig, OcbState};
pub use oza::{OzaMode, OzaState};
pub use trajectory::AlphaTrajectory;
