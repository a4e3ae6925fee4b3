//! Segment correlation, correlated fading, outage and diversity analysis.

pub mod correlation;
pub mod matched_filter;
pub mod matrix;
pub mod outage;

pub use correlation::{correlation_kernel, correlation_matrix, CorrelationMatrix, SegmentFieldOracle};
pub use matched_filter::{simulate_matched_filter, simulate_matched_filter_mc, MatchedFilterEstimate};
pub use matrix::{hermitian_eig, pseudo_rank_det, CMatrix, HermitianEigen, RankDet};
pub use outage::{
    fit_asymptote_order, fit_diversity_order, outage_asymptote, outage_curves, outage_probability_mc, sample_correlated_gains,
    selection_outage_counts, wilson_half_width, OutageCurve, OutageEstimate, OutagePoint,
};
