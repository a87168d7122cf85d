//! Rogers' random-lattice ensemble, Poisson statistics of lattice point
//! counts, and list-size calculators that assume those counts are Poisson.

mod conditional;
mod poisson;
mod rogers;

pub use conditional::{
    conditional_list_dist, conditional_list_mmt, DistTrace, MomentTrace, DEFAULT_MOMENT_MARGIN,
};
pub use poisson::{
    lambert_w_estimate, lambert_w_newton, pois_moment, pois_moment_touchard, pois_pmf,
    pois_tail_bound, pois_tail_exact, LambertEstimate, PoissonParams,
};
pub use rogers::{
    empirical_poissonianity, rogers_sample, siegel_mc, PoissonFit, RogersSample, SiegelEstimate,
    ROGERS_OVERFLOW_GUARD,
};
