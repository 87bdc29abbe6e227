//! Moment laws, Laplace-principle estimates and the parameter condition checker.

mod condition;
mod laplace;
mod moments;
mod montecarlo;

pub use condition::{
    check_condition, epsilon_for_delta, gamma_bound, max_spread, ConditionInput, ConditionParams, ConditionReport,
};
pub use laplace::{laplace_estimate, laplace_from_values, sample_values, LaplaceRow};
pub use moments::{
    exact_pairwise_moment, verify_discrete_decay, DecayProbe, DecayReport, DecayRow, MomentRow, MIN_DECAY_SEEDS,
};
pub use montecarlo::{log_mean_exp, Estimate};
