//! Elliptic modular forms as truncated q-expansions.

mod descent;
mod eta;
mod hecke;
mod moments;
mod qexp;
mod sieve;

pub use descent::{
    descend_sequence, eliminate_chain, eliminate_component, eliminate_with_ledger, Branch,
    CoefficientLedger, DescentStep, Elimination,
};
pub use eta::{
    bernoulli_numbers, divisor_power_sums, eisenstein, eta_character, eta_level, eta_quotient,
    eta_weight, parse_eta_spec, small_coeffs, EtaFactor,
};
pub use hecke::{b_op, hecke_t, restrict_character, u_op};
pub use moments::{
    exp_upper, lower_bound_constant, predicted_moment_ratio, second_moment, sieve_tail_sum,
    LocalEigen, LowerBoundReport, MomentReport, NeumaierSum, RatioPrediction,
};
pub use qexp::{QError, QExpansion};
pub use sieve::{coprime_sieve, nonvanish_count, squarefree_indicator, squarefree_select, Constraints};
