//! Stable matchings for student-project allocation where supervisors hold
//! divisible budgets.

pub mod cli;
pub mod egalitarian;
pub mod engine;
pub mod error;
pub mod flow;
pub mod lp;
pub mod matching;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod stability;

pub use error::{Error, Result};
pub use flow::{check_feasibility, BudgetFeasibility, FeasibilityResult, FundingAllocation};
pub use matching::{CutoffVector, Matching};
pub use model::{FeasibilityFunction, Gadget, Instance, RawInstance};
pub use rational::Rational;
pub use stability::{check_stability, Checker, StabilityLevel, StabilityVerdict};
