//! Secret key rates for continuous-variable QKD over 2x2 MIMO channels.
//!
//! Alice sends Gaussian-modulated coherent states from two transmitters, Bob
//! heterodynes at two receivers, and keys are extracted with reverse
//! reconciliation. The crate covers:
//!
//! - [`gaussian`]: covariance matrices, symplectic spectra, entropies and
//!   heterodyne conditioning;
//! - [`channel`]: channel matrices, their unitary dilation and assembly of
//!   the Alice–Bob covariance matrix;
//! - [`key_rate`]: mutual information, Holevo bounds and key rates for
//!   selection diversity, multiplexing and full MIMO processing;
//! - [`optimize`]: power allocation, correlated-noise region scans and loss
//!   sweeps.
//!
//! All quantities are in shot-noise units and bits per channel use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod gaussian;
pub mod key_rate;
pub mod optimize;

/// Mode labels of the 2x2 link.
pub mod mode {
    pub const A1: &str = "a1";
    pub const A2: &str = "a2";
    pub const B1: &str = "b1";
    pub const B2: &str = "b2";
}

pub use channel::{
    assemble_covariance_dilation, assemble_covariance_parametric, check_noise, estimate_channel,
    f_matrix, paper_channel, permissible_region_check, symplectic_embedding, unitary_dilation,
    xi_from_eve, Admissibility, ChannelMatrix, ChannelUnitary, EveModel, NoiseModel,
    ReceiverMoments,
};
pub use error::{Error, Result};
pub use gaussian::{
    condition_on_heterodyne, condition_on_heterodyne_all, direct_sum, entropy,
    heterodyne_outcome_covariance, reduce_to_modes, symplectic_eigenvalues, symplectic_form,
    thermal_entropy, tmsv_covariance, CovarianceMatrix, SymplecticEigenvalues,
};
pub use key_rate::{
    best_selection, holevo_bound, mutual_information, siso_covariance, skr_full_mimo,
    skr_multiplexed, skr_selection, skr_siso, KeyRateBreakdown, MultiplexedRate, ProtocolParams,
};
pub use num_complex::Complex64;
pub use optimize::{
    admissible_radius, boundary_maximizer, db_to_transmissivity, loss_grid, max_admissible_radius,
    optimize_power, optimize_siso, region_half_width, scan_xi_region, scenario_rate, sweep_loss,
    sweep_point, OptimizerSettings, PowerBudget, PowerConvention, PowerOptimum, RegionPoint,
    Scenario, SweepParams, SweepPoint, REFERENCE_COLORED_NOISE, REFERENCE_COLORED_T,
};
