//! Dirichlet-series side of a perturbation: the transfer chain, the Diamond
//! integral and regularity diagnostics on the line `Re s = 1`.

mod chain;
mod diamond;
mod line;
mod zeta;

pub use chain::{b_terms, density_c1, z_reference, AValue, A_by_parts, A_of, B_of, C_of, Z_of, EPS_LOC, TOL_B};
pub use diamond::{diamond_integral, diamond_integral_between, DiamondReport, DiamondTrend, BOUNDED_SLOPE, POWER_SLOPE};
pub use line::{
    a_direct, c_modulus_bound_check, geometric_deltas, holder_modulus, random_t_pairs, sample_line,
    CBoundReport, LineSamples, ModulusEstimate, Which,
};
pub use zeta::zeta;
