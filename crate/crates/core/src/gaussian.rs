//! Symplectic linear algebra for Gaussian states.
//!
//! Covariance matrices are in shot-noise units (vacuum variance 1) with the
//! per-mode quadrature ordering `(x_1, p_1, ..., x_N, p_N)`. Every mode carries
//! a label, and all reordering goes through labels rather than raw indices.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance on `|γ - γᵀ|` accepted by [`CovarianceMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symplectic eigenvalues in `[1 - PURITY_TOL, 1)` are treated as exactly 1.
pub const PURITY_TOL: f64 = 1e-9;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Real symmetric `2N x 2N` quadrature covariance matrix with mode labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: Vec<String>,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new<S: Into<String>>(
        modes: impl IntoIterator<Item = S>,
        entries: DMatrix<f64>,
    ) -> Result<Self> {
        let modes: Vec<String> = modes.into_iter().map(Into::into).collect();
        if entries.nrows() != 2 * modes.len() || entries.ncols() != 2 * modes.len() {
            return Err(Error::DimensionMismatch {
                rows: entries.nrows(),
                cols: entries.ncols(),
                modes: modes.len(),
            });
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::DuplicateMode(m.clone()));
            }
        }
        let deviation = (&entries - entries.transpose()).amax();
        if !(deviation <= SYMMETRY_TOL) {
            return Err(Error::NotSymmetric(deviation));
        }
        Ok(CovarianceMatrix { modes, entries })
    }

    /// Builds from a matrix known to be symmetric up to rounding, averaging
    /// it with its transpose first.
    pub(crate) fn symmetrized(modes: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        let sym = (&entries + entries.transpose()) * 0.5;
        Self::new(modes, sym)
    }

    /// Vacuum on the given modes.
    pub fn vacuum<S: Into<String>>(modes: impl IntoIterator<Item = S>) -> Result<Self> {
        let modes: Vec<String> = modes.into_iter().map(Into::into).collect();
        let n = 2 * modes.len();
        Self::new(modes, DMatrix::identity(n, n))
    }

    /// Single-mode thermal state `V·I2`.
    pub fn thermal(mode: impl Into<String>, variance: f64) -> Result<Self> {
        if !(variance >= 1.0) {
            return Err(Error::SubShotNoise(variance));
        }
        Self::new([mode], DMatrix::identity(2, 2) * variance)
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// The 2x2 block between two (possibly equal) modes.
    pub fn block(&self, row: &str, col: &str) -> Result<Matrix2<f64>> {
        let r = 2 * self.mode_index(row)?;
        let c = 2 * self.mode_index(col)?;
        Ok(self.entries.fixed_view::<2, 2>(r, c).into_owned())
    }

    /// Renames modes in place of the existing ones, keeping the entries.
    pub fn relabel<S: Into<String>>(self, modes: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(modes, self.entries)
    }

    /// `S γ Sᵀ` for a real `2N x 2N` transformation.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        let n = self.entries.nrows();
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::DimensionMismatch {
                rows: s.nrows(),
                cols: s.ncols(),
                modes: self.num_modes(),
            });
        }
        Self::symmetrized(self.modes.clone(), s * &self.entries * s.transpose())
    }

    /// Largest absolute entry difference against another matrix with the
    /// same mode list.
    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }
}

/// Symplectic form `⊕ [[0, 1], [-1, 0]]` over `num_modes` modes.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Two-mode squeezed vacuum `[[V·I2, k·σz], [k·σz, V·I2]]`, `k = √(V² − 1)`.
pub fn tmsv_covariance(variance: f64, modes: [&str; 2]) -> Result<CovarianceMatrix> {
    if !(variance >= 1.0) {
        return Err(Error::SubShotNoise(variance));
    }
    let k = (variance * variance - 1.0).sqrt();
    let mut m = DMatrix::identity(4, 4) * variance;
    m[(0, 2)] = k;
    m[(2, 0)] = k;
    m[(1, 3)] = -k;
    m[(3, 1)] = -k;
    CovarianceMatrix::new(modes, m)
}

/// Block-diagonal concatenation; mode lists are concatenated in order.
pub fn direct_sum(a: &CovarianceMatrix, b: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if let Some(dup) = b.modes.iter().find(|m| a.modes.contains(m)) {
        return Err(Error::DuplicateMode(dup.clone()));
    }
    let (na, nb) = (a.entries.nrows(), b.entries.nrows());
    let mut m = DMatrix::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(&a.entries);
    m.view_mut((na, na), (nb, nb)).copy_from(&b.entries);
    let modes = a.modes.iter().chain(&b.modes).cloned().collect::<Vec<_>>();
    CovarianceMatrix::new(modes, m)
}

/// Submatrix on `keep`, in the order given. Doubles as partial trace and as a
/// mode permutation.
pub fn reduce_to_modes(gamma: &CovarianceMatrix, keep: &[&str]) -> Result<CovarianceMatrix> {
    let idx = keep
        .iter()
        .map(|m| gamma.mode_index(m))
        .collect::<Result<Vec<_>>>()?;
    let n = 2 * idx.len();
    let m = DMatrix::from_fn(n, n, |r, c| {
        gamma.entries[(2 * idx[r / 2] + r % 2, 2 * idx[c / 2] + c % 2)]
    });
    CovarianceMatrix::new(keep.iter().copied(), m)
}

/// Symplectic spectrum of a covariance matrix, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticEigenvalues(Vec<f64>);

impl SymplecticEigenvalues {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.0.first().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn is_physical(&self) -> bool {
        self.min() >= 1.0 - PURITY_TOL
    }
}

/// Positive eigenvalues of `iΩγ`.
///
/// With `γ = L Lᵀ` (Cholesky), `A = Lᵀ Ω L` is real antisymmetric and similar
/// to `Ωγ`, so `AᵀA` is symmetric with every `λ²` appearing twice. This keeps
/// the computation on a symmetric eigen-solver. Fails with
/// [`Error::NotPositiveDefinite`] when `γ` has no Cholesky factor, which
/// already rules out physicality.
pub fn symplectic_eigenvalues(gamma: &CovarianceMatrix) -> Result<SymplecticEigenvalues> {
    let n = gamma.num_modes();
    let chol = gamma
        .entries
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let a = l.transpose() * symplectic_form(n) * &l;
    let m = a.transpose() * &a;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::NoConvergence)?;
    let mut sq: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sq.sort_by(|x, y| y.total_cmp(x));
    let values = sq
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect();
    Ok(SymplecticEigenvalues(values))
}

/// Entropy in bits of a thermal mode with symplectic eigenvalue `lambda`:
/// `g(λ) = ((λ+1)/2) log2((λ+1)/2) − ((λ−1)/2) log2((λ−1)/2)`, with `g(1) = 0`.
pub fn thermal_entropy(lambda: f64) -> f64 {
    let x = 0.5 * (lambda - 1.0);
    if x <= 0.0 {
        return 0.0;
    }
    ((x + 1.0) * x.ln_1p() - x * x.ln()) / std::f64::consts::LN_2
}

/// Von Neumann entropy in bits, `Σ g(λ_n)`.
pub fn entropy(gamma: &CovarianceMatrix) -> Result<f64> {
    let spectrum = symplectic_eigenvalues(gamma)?;
    spectrum
        .values()
        .iter()
        .map(|&lambda| {
            if lambda < 1.0 - PURITY_TOL {
                Err(Error::Unphysical(lambda))
            } else {
                Ok(thermal_entropy(lambda.max(1.0)))
            }
        })
        .sum()
}

/// Covariance of heterodyne outcomes, `(γ + I)/2`.
pub fn heterodyne_outcome_covariance(gamma: &CovarianceMatrix) -> CovarianceMatrix {
    let n = gamma.entries.nrows();
    CovarianceMatrix {
        modes: gamma.modes.clone(),
        entries: (&gamma.entries + DMatrix::identity(n, n)) * 0.5,
    }
}

/// State of the remaining modes after heterodyning `measured`:
/// `γ_A − γ_AB (γ_B + I2)⁻¹ γ_ABᵀ`.
pub fn condition_on_heterodyne(
    gamma: &CovarianceMatrix,
    measured: &str,
) -> Result<CovarianceMatrix> {
    let j = gamma.mode_index(measured)?;
    let rest: Vec<usize> = (0..gamma.num_modes()).filter(|&i| i != j).collect();
    if rest.is_empty() {
        return Err(Error::InvalidParameter {
            name: "measured",
            value: j as f64,
            reason: "conditioning must leave at least one mode",
        });
    }
    let n = 2 * rest.len();
    let e = &gamma.entries;
    let row = |r: usize| 2 * rest[r / 2] + r % 2;
    let gamma_a = DMatrix::from_fn(n, n, |r, c| e[(row(r), row(c))]);
    let gamma_ab = DMatrix::from_fn(n, 2, |r, c| e[(row(r), 2 * j + c)]);
    let gamma_b = e.fixed_view::<2, 2>(2 * j, 2 * j).into_owned() + Matrix2::identity();
    let inv = gamma_b
        .try_inverse()
        .ok_or(Error::Singular("heterodyne conditioning"))?;
    let inv = DMatrix::from_column_slice(2, 2, inv.as_slice());
    let cond = gamma_a - &gamma_ab * inv * gamma_ab.transpose();
    let modes = rest.iter().map(|&i| gamma.modes[i].clone()).collect();
    CovarianceMatrix::symmetrized(modes, cond)
}

/// Heterodynes each of `measured` in turn.
pub fn condition_on_heterodyne_all(
    gamma: &CovarianceMatrix,
    measured: &[&str],
) -> Result<CovarianceMatrix> {
    measured
        .iter()
        .try_fold(gamma.clone(), |g, m| condition_on_heterodyne(&g, m))
}
