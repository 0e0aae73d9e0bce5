//! Analytical performance machinery: noncentral quadratic-form CDFs,
//! pairwise error probabilities, and union bounds on BER.

pub mod imhof;
pub mod pep;

pub use imhof::{erfc, normal_cdf, quadratic_form_cdf, QuadFormSpec, CDF_TOLERANCE};
pub use pep::{
    ber_average, ber_union_bound, ber_union_bound_frame, data_block_indices, pep_average,
    pep_conditional, BerBound, PairEngine, PairwiseCase, PepEstimate,
};
