//! Mutual information, Holevo bounds and asymptotic secret key rates under
//! reverse reconciliation with heterodyne detection.
//!
//! Every rate has the form `K = max(0, β·I − χ)`. Eve's entropy is never
//! computed from an explicit Eve covariance: since she purifies the
//! Alice–Bob state, `S(E) = S(AB)` and `S(E|b) = S(AB|b)`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::channel::{f_matrix, PASSIVITY_TOL};
use crate::error::{Error, Result};
use crate::gaussian::{
    condition_on_heterodyne_all, entropy, heterodyne_outcome_covariance, reduce_to_modes,
    CovarianceMatrix,
};
use crate::mode::{A1, A2, B1, B2};

/// Modulation variances and reconciliation efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    v_a1: f64,
    v_a2: f64,
    beta: f64,
}

impl ProtocolParams {
    pub fn new(v_a1: f64, v_a2: f64, beta: f64) -> Result<Self> {
        for v in [v_a1, v_a2] {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::SubShotNoise(v));
            }
        }
        check_beta(beta)?;
        Ok(ProtocolParams { v_a1, v_a2, beta })
    }

    pub fn v_a1(&self) -> f64 {
        self.v_a1
    }

    pub fn v_a2(&self) -> f64 {
        self.v_a2
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "reconciliation efficiency must lie in (0, 1]",
        })
    }
}

/// Mutual information, Holevo bound and the resulting clamped key rate, all
/// in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateBreakdown {
    pub mutual_info: f64,
    pub holevo: f64,
    pub skr: f64,
}

impl KeyRateBreakdown {
    pub fn new(beta: f64, mutual_info: f64, holevo: f64) -> Self {
        KeyRateBreakdown {
            mutual_info,
            holevo,
            skr: (beta * mutual_info - holevo).max(0.0),
        }
    }
}

fn log_det(m: DMatrix<f64>, what: &'static str) -> Result<f64> {
    let d = m.determinant();
    if d > 0.0 && d.is_finite() {
        Ok(d.ln())
    } else {
        Err(Error::NonPositiveDeterminant(what))
    }
}

/// `½ log2(det V_A · det V_B / det V_AB)` on heterodyne outcomes `(γ + I)/2`.
pub fn mutual_information(gamma: &CovarianceMatrix, alice: &[&str], bob: &[&str]) -> Result<f64> {
    if let Some(m) = alice.iter().find(|m| bob.contains(m)) {
        return Err(Error::DuplicateMode(m.to_string()));
    }
    let joint: Vec<&str> = alice.iter().chain(bob).copied().collect();
    let het = heterodyne_outcome_covariance(&reduce_to_modes(gamma, &joint)?);
    let m = het.entries();
    let na = 2 * alice.len();
    let nb = 2 * bob.len();
    let ld_a = log_det(m.view((0, 0), (na, na)).into_owned(), "alice outcomes")?;
    let ld_b = log_det(m.view((na, na), (nb, nb)).into_owned(), "bob outcomes")?;
    let ld_ab = log_det(m.clone(), "joint outcomes")?;
    Ok(0.5 * (ld_a + ld_b - ld_ab) / std::f64::consts::LN_2)
}

/// `χ = S(AB) − S(AB | measured)` with the listed modes heterodyned.
pub fn holevo_bound(gamma: &CovarianceMatrix, measured: &[&str]) -> Result<f64> {
    if measured.is_empty() {
        return Err(Error::InvalidParameter {
            name: "measured",
            value: 0.0,
            reason: "at least one mode must be measured",
        });
    }
    let conditional = condition_on_heterodyne_all(gamma, measured)?;
    Ok(entropy(gamma)? - entropy(&conditional)?)
}

/// Key rate from a single transmitter/receiver pair. Eve's bound conditions
/// only on the announced receiver mode; the other receiver stays quantum.
pub fn skr_selection(
    gamma: &CovarianceMatrix,
    pair: (&str, &str),
    beta: f64,
) -> Result<KeyRateBreakdown> {
    check_beta(beta)?;
    let (alice, bob) = pair;
    let info = mutual_information(gamma, &[alice], &[bob])?;
    let chi = holevo_bound(gamma, &[bob])?;
    Ok(KeyRateBreakdown::new(beta, info, chi))
}

/// The four selection-diversity pairings.
pub const SELECTION_PAIRS: [(&str, &str); 4] = [(A1, B1), (A1, B2), (A2, B1), (A2, B2)];

/// Best of the four pairs; ties go to the earliest in [`SELECTION_PAIRS`].
pub fn best_selection(
    gamma: &CovarianceMatrix,
    beta: f64,
) -> Result<((&'static str, &'static str), KeyRateBreakdown)> {
    let mut best: Option<((&str, &str), KeyRateBreakdown)> = None;
    for pair in SELECTION_PAIRS {
        let rate = skr_selection(gamma, pair, beta)?;
        if best.is_none_or(|(_, b)| rate.skr > b.skr) {
            best = Some((pair, rate));
        }
    }
    Ok(best.expect("four pairs evaluated"))
}

/// Two independent selection links run side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplexedRate {
    /// `K(a1, b1) + K(a2, b2)`.
    pub direct: f64,
    /// `K(a1, b2) + K(a2, b1)`.
    pub cross: f64,
}

impl MultiplexedRate {
    pub fn total(&self) -> f64 {
        self.direct.max(self.cross)
    }
}

/// Each term is a clamped rate in its own right, so a negative link
/// contributes zero rather than cancelling the other.
pub fn skr_multiplexed(gamma: &CovarianceMatrix, beta: f64) -> Result<MultiplexedRate> {
    let k = |a, b| skr_selection(gamma, (a, b), beta).map(|r| r.skr);
    Ok(MultiplexedRate {
        direct: k(A1, B1)? + k(A2, B2)?,
        cross: k(A1, B2)? + k(A2, B1)?,
    })
}

/// Joint processing of both transmitters and both receivers.
pub fn skr_full_mimo(gamma: &CovarianceMatrix, beta: f64) -> Result<KeyRateBreakdown> {
    check_beta(beta)?;
    let info = mutual_information(gamma, &[A1, A2], &[B1, B2])?;
    let chi = holevo_bound(gamma, &[B1, B2])?;
    Ok(KeyRateBreakdown::new(beta, info, chi))
}

/// Two-mode `(a1, b1)` covariance of a single link with complex amplitude
/// gain `gain`, modulation variance `v` and excess noise `xi`.
pub fn siso_covariance(gain: Complex64, v: f64, xi: f64) -> Result<CovarianceMatrix> {
    if !(gain.norm() <= 1.0 + PASSIVITY_TOL) {
        return Err(Error::ActiveChannel(gain.norm()));
    }
    if !(v >= 1.0 && v.is_finite()) {
        return Err(Error::SubShotNoise(v));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "xi",
            value: xi,
            reason: "excess noise must be non-negative",
        });
    }
    let k = (v * v - 1.0).sqrt();
    let bob = gain.norm_sqr() * (v - 1.0) + 1.0 + xi;
    let corr = f_matrix(gain) * k;
    let mut m = DMatrix::zeros(4, 4);
    m.fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&(Matrix2::identity() * v));
    m.fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&(Matrix2::identity() * bob));
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&corr);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&corr.transpose());
    CovarianceMatrix::new([A1, B1], m)
}

/// Single-input single-output rate, evaluated through the same pipeline as
/// the 2x2 case.
pub fn skr_siso(gain: Complex64, v: f64, xi: f64, beta: f64) -> Result<KeyRateBreakdown> {
    let gamma = siso_covariance(gain, v, xi)?;
    skr_selection(&gamma, (A1, B1), beta)
}
