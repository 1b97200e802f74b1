//! Solvers for finite Markov decision processes under the expected total
//! discounted reward criterion.
//!
//! Every algorithm is generic over the [`Scalar`](numerics::Scalar)
//! backend: exact rationals ([`Rational`](numerics::Rational)) or 64-bit
//! floats ([`Float`](numerics::Float)). Fast float solves can be turned into
//! exactly checked ε-optimal answers with [`certify`].
//!
//! ```
//! use mdpkit::prelude::*;
//!
//! let m = mdpkit::fixtures::two_action::<Rational>();
//! let eps = Rational::parse_literal("0.01").unwrap();
//! let report = value_iteration(&m, &SolveParams::new(eps)).unwrap();
//! assert_eq!(report.rule, DecisionRule::new(vec![1]));
//! ```

pub mod bellman;
pub mod certify;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod generate;
pub mod kernel;
pub mod linsolve;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod solvers;

pub use error::{MdpError, Result};

pub mod prelude {
    pub use crate::bellman::{bellman_opt, bellman_rule, gauss_seidel_sweep};
    pub use crate::certify::{certify_values, check_certificate, Certificate};
    pub use crate::error::{MdpError, Result};
    pub use crate::linsolve::policy_value_exact;
    pub use crate::model::{DecisionRule, ExplicitMdp, FinitePolicy, Mode};
    pub use crate::numerics::{sup_dist, Float, Rational, Scalar, ValueFunction};
    pub use crate::solvers::{
        backward_induction, gauss_seidel_iteration, modified_policy_iteration, policy_iteration,
        solve, value_iteration, Algorithm, MpiOrder, SolveParams, SolveReport, StopReason,
    };
}
