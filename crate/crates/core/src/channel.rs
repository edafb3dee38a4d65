//! Channel matrices, their unitary dilation, and assembly of the Alice–Bob
//! covariance matrix over modes `(a1, b1, a2, b2)`.
//!
//! Two assembly routes exist. The parametric route builds the matrix from the
//! channel gains and the receivers' excess noise, which are the quantities
//! Alice and Bob observe. The dilation route propagates Alice's and Eve's
//! input states through an explicit 4x4 unitary. For noise produced by
//! [`xi_from_eve`] the two agree exactly.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{
    direct_sum, reduce_to_modes, symplectic_eigenvalues, tmsv_covariance, CovarianceMatrix,
    PURITY_TOL,
};
use crate::mode::{A1, A2, B1, B2};

/// Singular values of a passive channel may exceed 1 by at most this much.
pub const PASSIVITY_TOL: f64 = 1e-12;

/// Tolerance on `U†U = I` for [`ChannelUnitary`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// 2x2 complex amplitude-gain matrix `H` (the signal block of the channel
/// unitary). Rows are receivers, columns transmitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMatrix(Matrix2<Complex64>);

impl ChannelMatrix {
    pub fn new(h: Matrix2<Complex64>) -> Result<Self> {
        let s = singular_values(&h);
        if !(s[0] <= 1.0 + PASSIVITY_TOL) {
            return Err(Error::ActiveChannel(s[0]));
        }
        Ok(ChannelMatrix(h))
    }

    pub fn identity() -> Self {
        ChannelMatrix(Matrix2::identity())
    }

    pub fn zero() -> Self {
        ChannelMatrix(Matrix2::zeros())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// Gain from transmitter `tx` to receiver `rx` (both 0-based).
    pub fn gain(&self, rx: usize, tx: usize) -> Complex64 {
        self.0[(rx, tx)]
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> [f64; 2] {
        singular_values(&self.0)
    }
}

fn singular_values(h: &Matrix2<Complex64>) -> [f64; 2] {
    let s = h.svd(false, false).singular_values;
    let (a, b) = (s[0], s[1]);
    if a >= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// `√(T/2)·[[1, i], [i, 1]]`: equal-power line-of-sight and crosstalk links.
pub fn paper_channel(transmissivity: f64) -> Result<ChannelMatrix> {
    if !(transmissivity > 0.0 && transmissivity <= 1.0) {
        return Err(Error::InvalidTransmissivity(transmissivity));
    }
    let a = Complex64::new((transmissivity / 2.0).sqrt(), 0.0);
    let i = Complex64::i() * a.re;
    ChannelMatrix::new(Matrix2::new(a, i, i, a))
}

/// 4x4 unitary mapping `(a1', a2', e1, e2)` to `(b1, b2, e1', e2')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelUnitary(Matrix4<Complex64>);

impl ChannelUnitary {
    pub fn new(u: Matrix4<Complex64>) -> Result<Self> {
        let dev = (u.adjoint() * u - Matrix4::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !(dev <= UNITARITY_TOL) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(ChannelUnitary(u))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    /// The upper-left 2x2 block.
    pub fn channel(&self) -> ChannelMatrix {
        ChannelMatrix(self.0.fixed_view::<2, 2>(0, 0).into_owned())
    }
}

fn hermitian_sqrt(m: Matrix2<Complex64>) -> Matrix2<Complex64> {
    let m = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(m);
    let q = eig.eigenvectors;
    let d = Matrix2::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    q * d * q.adjoint()
}

/// Halmos dilation `[[H, (I−HH†)^½], [(I−H†H)^½, −H†]]`.
pub fn unitary_dilation(h: &ChannelMatrix) -> ChannelUnitary {
    let hm = h.0;
    let id = Matrix2::<Complex64>::identity();
    let top_right = hermitian_sqrt(id - hm * hm.adjoint());
    let bottom_left = hermitian_sqrt(id - hm.adjoint() * hm);
    let mut u = Matrix4::zeros();
    u.fixed_view_mut::<2, 2>(0, 0).copy_from(&hm);
    u.fixed_view_mut::<2, 2>(0, 2).copy_from(&top_right);
    u.fixed_view_mut::<2, 2>(2, 0).copy_from(&bottom_left);
    u.fixed_view_mut::<2, 2>(2, 2).copy_from(&(-hm.adjoint()));
    ChannelUnitary(u)
}

/// Rotation block `[[Re u, −Im u], [Im u, Re u]]` for one gain `u`.
fn rotation_block(u: Complex64) -> Matrix2<f64> {
    Matrix2::new(u.re, -u.im, u.im, u.re)
}

/// Real 8x8 symplectic orthogonal matrix of a 4-mode passive unitary, in
/// per-mode `(x, p)` ordering.
pub fn symplectic_embedding(u: &ChannelUnitary) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(8, 8);
    for m in 0..4 {
        for n in 0..4 {
            s.fixed_view_mut::<2, 2>(2 * m, 2 * n)
                .copy_from(&rotation_block(u.0[(m, n)]));
        }
    }
    s
}

/// Alice–Bob correlation block `F(u) = [[Re u, Im u], [Im u, −Re u]]`.
pub fn f_matrix(u: Complex64) -> Matrix2<f64> {
    Matrix2::new(u.re, u.im, u.im, -u.re)
}

/// Receiver excess noise, in SNU. `xi_b1b2` is the cross-correlation between
/// the two receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub xi_b1: f64,
    pub xi_b2: f64,
    pub xi_b1b2: Complex64,
}

impl NoiseModel {
    pub fn new(xi_b1: f64, xi_b2: f64, xi_b1b2: Complex64) -> Self {
        NoiseModel {
            xi_b1,
            xi_b2,
            xi_b1b2,
        }
    }

    /// Uncorrelated noise of equal strength on both receivers.
    pub fn iid(xi: f64) -> Self {
        Self::new(xi, xi, Complex64::new(0.0, 0.0))
    }

    pub fn noiseless() -> Self {
        Self::iid(0.0)
    }

    pub fn with_correlation(self, xi_b1b2: Complex64) -> Self {
        NoiseModel { xi_b1b2, ..self }
    }

    fn check_finite(&self) -> Result<()> {
        for (name, v) in [
            ("xi_b1", self.xi_b1),
            ("xi_b2", self.xi_b2),
            ("xi_b1b2.re", self.xi_b1b2.re),
            ("xi_b1b2.im", self.xi_b1b2.im),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        Ok(())
    }
}

/// Variances of the thermal states Eve injects into the two environment ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveModel {
    v_e1: f64,
    v_e2: f64,
}

impl EveModel {
    pub fn new(v_e1: f64, v_e2: f64) -> Result<Self> {
        for v in [v_e1, v_e2] {
            if !(v >= 1.0) {
                return Err(Error::SubShotNoise(v));
            }
        }
        Ok(EveModel { v_e1, v_e2 })
    }

    pub fn vacuum() -> Self {
        EveModel {
            v_e1: 1.0,
            v_e2: 1.0,
        }
    }

    pub fn v_e1(&self) -> f64 {
        self.v_e1
    }

    pub fn v_e2(&self) -> f64 {
        self.v_e2
    }
}

fn check_variance(v: f64) -> Result<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::SubShotNoise(v))
    }
}

/// Propagates `tmsv(V_a1) ⊕ tmsv(V_a2) ⊕ V_e1·I2 ⊕ V_e2·I2` through `u` and
/// traces out Eve's output ports.
pub fn assemble_covariance_dilation(
    u: &ChannelUnitary,
    v_a1: f64,
    v_a2: f64,
    eve: &EveModel,
) -> Result<CovarianceMatrix> {
    check_variance(v_a1)?;
    check_variance(v_a2)?;
    let alice = direct_sum(
        &tmsv_covariance(v_a1, [A1, "a1'"])?,
        &tmsv_covariance(v_a2, [A2, "a2'"])?,
    )?;
    let environment = direct_sum(
        &CovarianceMatrix::thermal("e1", eve.v_e1)?,
        &CovarianceMatrix::thermal("e2", eve.v_e2)?,
    )?;
    let input = reduce_to_modes(
        &direct_sum(&alice, &environment)?,
        &[A1, A2, "a1'", "a2'", "e1", "e2"],
    )?;
    let mut s = DMatrix::identity(12, 12);
    s.view_mut((4, 4), (8, 8))
        .copy_from(&symplectic_embedding(u));
    let output = input
        .transform(&s)?
        .relabel([A1, A2, B1, B2, "e1'", "e2'"])?;
    reduce_to_modes(&output, &[A1, B1, A2, B2])
}

/// Bob-side second moments `δ1`, `μ1` and `ν1 + iν3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverMoments {
    pub delta1: f64,
    pub mu1: f64,
    pub nu: Complex64,
}

impl ReceiverMoments {
    pub fn new(h: &ChannelMatrix, v_a1: f64, v_a2: f64, noise: &NoiseModel) -> Self {
        let (f1, f2) = (v_a1 - 1.0, v_a2 - 1.0);
        let (u11, u12, u21, u22) = (h.gain(0, 0), h.gain(0, 1), h.gain(1, 0), h.gain(1, 1));
        ReceiverMoments {
            delta1: u11.norm_sqr() * f1 + u12.norm_sqr() * f2 + 1.0 + noise.xi_b1,
            mu1: u21.norm_sqr() * f1 + u22.norm_sqr() * f2 + 1.0 + noise.xi_b2,
            nu: u11.conj() * u21 * f1 + u12.conj() * u22 * f2 + noise.xi_b1b2,
        }
    }

    /// `ν1² + ν3² ≤ δ1·μ1`.
    pub fn satisfies_cauchy_schwarz(&self) -> bool {
        self.nu.norm_sqr() <= self.delta1 * self.mu1
    }
}

fn set_block(m: &mut DMatrix<f64>, row: usize, col: usize, b: &Matrix2<f64>) {
    m.fixed_view_mut::<2, 2>(2 * row, 2 * col).copy_from(b);
    m.fixed_view_mut::<2, 2>(2 * col, 2 * row)
        .copy_from(&b.transpose());
}

/// Builds the `(a1, b1, a2, b2)` covariance matrix from channel gains and
/// observed excess noise.
pub fn assemble_covariance_parametric(
    h: &ChannelMatrix,
    v_a1: f64,
    v_a2: f64,
    noise: &NoiseModel,
) -> Result<CovarianceMatrix> {
    check_variance(v_a1)?;
    check_variance(v_a2)?;
    noise.check_finite()?;
    let k = (v_a1 * v_a1 - 1.0).sqrt();
    let l = (v_a2 * v_a2 - 1.0).sqrt();
    let moments = ReceiverMoments::new(h, v_a1, v_a2, noise);
    let nu = moments.nu;

    // mode indices: a1 = 0, b1 = 1, a2 = 2, b2 = 3
    let mut m = DMatrix::zeros(8, 8);
    set_block(&mut m, 0, 0, &(Matrix2::identity() * v_a1));
    set_block(&mut m, 2, 2, &(Matrix2::identity() * v_a2));
    set_block(&mut m, 1, 1, &(Matrix2::identity() * moments.delta1));
    set_block(&mut m, 3, 3, &(Matrix2::identity() * moments.mu1));
    set_block(&mut m, 0, 1, &(f_matrix(h.gain(0, 0)) * k));
    set_block(&mut m, 0, 3, &(f_matrix(h.gain(1, 0)) * k));
    set_block(&mut m, 2, 1, &(f_matrix(h.gain(0, 1)) * l));
    set_block(&mut m, 2, 3, &(f_matrix(h.gain(1, 1)) * l));
    set_block(&mut m, 1, 3, &Matrix2::new(nu.re, nu.im, -nu.im, nu.re));
    CovarianceMatrix::new([A1, B1, A2, B2], m)
}

/// Excess noise produced by Eve's thermal inputs through a fixed dilation.
pub fn xi_from_eve(u: &ChannelUnitary, eve: &EveModel) -> NoiseModel {
    let m = &u.0;
    let (w1, w2) = (eve.v_e1 - 1.0, eve.v_e2 - 1.0);
    NoiseModel {
        xi_b1: w1 * m[(0, 2)].norm_sqr() + w2 * m[(0, 3)].norm_sqr(),
        xi_b2: w1 * m[(1, 2)].norm_sqr() + w2 * m[(1, 3)].norm_sqr(),
        xi_b1b2: m[(0, 2)].conj() * m[(1, 2)] * w1 + m[(0, 3)].conj() * m[(1, 3)] * w2,
    }
}

/// Outcome of the two admissibility tests on a noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admissibility {
    /// Every symplectic eigenvalue of `γ_AB` is at least 1.
    pub physical: bool,
    /// `ν1² + ν3² ≤ δ1·μ1`.
    pub cauchy_schwarz: bool,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.physical && self.cauchy_schwarz
    }
}

pub fn permissible_region_check(
    gamma: &CovarianceMatrix,
    noise: &NoiseModel,
    h: &ChannelMatrix,
    v_a1: f64,
    v_a2: f64,
) -> Admissibility {
    let physical = match symplectic_eigenvalues(gamma) {
        Ok(spectrum) => spectrum.min() >= 1.0 - PURITY_TOL,
        Err(_) => false,
    };
    Admissibility {
        physical,
        cauchy_schwarz: ReceiverMoments::new(h, v_a1, v_a2, noise).satisfies_cauchy_schwarz(),
    }
}

/// Assembles the covariance for `noise` and runs [`permissible_region_check`].
pub fn check_noise(
    h: &ChannelMatrix,
    v_a1: f64,
    v_a2: f64,
    noise: &NoiseModel,
) -> Result<Admissibility> {
    let gamma = assemble_covariance_parametric(h, v_a1, v_a2, noise)?;
    Ok(permissible_region_check(&gamma, noise, h, v_a1, v_a2))
}

/// Recovers `H` from the Alice–Bob correlation blocks.
pub fn estimate_channel(gamma: &CovarianceMatrix, v_a1: f64, v_a2: f64) -> Result<ChannelMatrix> {
    if !(v_a1 > 1.0) {
        return Err(Error::UnidentifiableColumn(1));
    }
    if !(v_a2 > 1.0) {
        return Err(Error::UnidentifiableColumn(2));
    }
    let k = (v_a1 * v_a1 - 1.0).sqrt();
    let l = (v_a2 * v_a2 - 1.0).sqrt();
    let gain = |alice: &str, bob: &str, scale: f64| -> Result<Complex64> {
        let b = gamma.block(alice, bob)?;
        Ok(Complex64::new(b[(0, 0)], b[(1, 0)]) / scale)
    };
    let h = Matrix2::new(
        gain(A1, B1, k)?,
        gain(A2, B1, l)?,
        gain(A1, B2, k)?,
        gain(A2, B2, l)?,
    );
    ChannelMatrix::new(h)
}
