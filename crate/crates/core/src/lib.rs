//! Polynomial approximation on `[0, 1]` with integer or one-bit coefficients
//! in the Bernstein basis.
//!
//! The pipeline has two stages. A classical operator (Bernstein sampling,
//! Kantorovich averages, the iterated operator `I - (I - B_n)^r`, or a
//! near-best polynomial proxy) produces real Bernstein coefficients; a
//! noise-shaping quantizer then replaces them by integers or signs while
//! keeping the error small away from the endpoints.
//!
//! ```
//! use onebit_bernstein::prelude::*;
//!
//! let f = FunctionSpec::from_registry("abs", &[0.9, 0.5]).unwrap();
//! let y = sample_grid(&f, 256).unwrap();
//! let res = quantize(&y.values, &QuantizerConfig::greedy(1, Alphabet::PlusMinusOne)).unwrap();
//! assert!(res.q.iter().all(|q| q.abs() == 1.0));
//! let report = pointwise_error(&f, &res.to_poly().unwrap(), 2001).unwrap();
//! assert!(report.sup_on_interval < 0.2);
//! ```

pub mod analysis;
pub mod approx;
pub mod bernstein;
pub mod binomial;
pub mod error;
pub mod experiment;
pub mod functions;
pub mod lattice;
pub mod quadrature;
pub mod sigma_delta;

#[cfg(test)]
mod invariants;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{
        check_variation_bound, envelope, lp_norm, lp_norm_of, pointwise_error, rate_fit, ErrorReport, RateFit, Regime,
    };
    pub use crate::approx::{
        check_onebit_admissible, iterated_u_coeffs, kantorovich_coeffs, near_best_proxy, operator_matrix, pr_coeffs,
        sample_grid, GridFunction, Norm,
    };
    pub use crate::bernstein::{
        abs_moment, basis_diff, basis_value, basis_values, moment, power_to_bernstein, variation, BernsteinPoly,
    };
    pub use crate::error::{Error, Result};
    pub use crate::functions::FunctionSpec;
    pub use crate::lattice::{lattice_stats, round_alpha, round_star};
    pub use crate::sigma_delta::{
        quantize, quantize_with, verify_difference_equation, Alphabet, QuantizationResult, QuantizationRule,
        QuantizerConfig, RuleKind,
    };
}
