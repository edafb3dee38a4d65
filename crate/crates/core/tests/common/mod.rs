#![allow(dead_code)]

//! Random generators and independent oracles shared by the integration tests.

use cvqkd_core::{ChannelMatrix, Complex64, CovarianceMatrix, EveModel};
use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    Complex64::from_polar((-2.0 * u1.ln()).sqrt(), 2.0 * std::f64::consts::PI * u2)
}

/// Haar-ish random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    // fix the phases so the distribution does not depend on QR conventions
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Real symplectic orthogonal matrix of an N-mode passive unitary, per-mode
/// `(x, p)` ordering.
pub fn passive_symplectic(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            s[(2 * i, 2 * j)] = z.re;
            s[(2 * i, 2 * j + 1)] = -z.im;
            s[(2 * i + 1, 2 * j)] = z.im;
            s[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    s
}

/// Random symplectic `O1 · Z · O2` with single-mode squeezing in `[1/2, 2]`.
pub fn random_symplectic(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let o1 = passive_symplectic(&random_unitary(n, rng));
    let o2 = passive_symplectic(&random_unitary(n, rng));
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let r: f64 = rng.gen_range(0.5..2.0);
        z[(2 * k, 2 * k)] = r;
        z[(2 * k + 1, 2 * k + 1)] = 1.0 / r;
    }
    o1 * z * o2
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

/// Random physical covariance `S · diag(λ) · Sᵀ` with prescribed symplectic
/// spectrum drawn from `[1, 5]`. Returns the matrix and its spectrum.
pub fn random_physical(n: usize, rng: &mut impl Rng) -> (CovarianceMatrix, Vec<f64>) {
    let lambdas: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(2 * n, |i, _| lambdas[i / 2]));
    let s = random_symplectic(n, rng);
    let m = &s * d * s.transpose();
    let m = (&m + m.transpose()) * 0.5;
    (CovarianceMatrix::new(labels(n), m).unwrap(), lambdas)
}

/// Random passive 2x2 channel: a random matrix rescaled so its largest
/// singular value lies in `(0, 1]`.
pub fn random_channel(rng: &mut impl Rng) -> ChannelMatrix {
    let m = Matrix2::from_fn(|_, _| gaussian_complex(rng));
    let smax = m.svd(false, false).singular_values.max();
    let target: f64 = rng.gen_range(0.05..1.0);
    ChannelMatrix::new(m * Complex64::new(target / smax, 0.0)).unwrap()
}

pub fn random_unitary_channel(rng: &mut impl Rng) -> ChannelMatrix {
    let u = random_unitary(2, rng);
    ChannelMatrix::new(Matrix2::from_fn(|i, j| u[(i, j)])).unwrap()
}

pub fn random_eve(rng: &mut impl Rng) -> EveModel {
    EveModel::new(rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0)).unwrap()
}

/// Symplectic spectrum from the generic (non-symmetric) eigenvalues of `Ωγ`,
/// which come in `±iλ` pairs. Sorted descending.
pub fn symplectic_spectrum_oracle(gamma: &CovarianceMatrix) -> Vec<f64> {
    let n = gamma.num_modes();
    let omega = cvqkd_core::symplectic_form(n);
    let m = omega * gamma.entries();
    let mut mags: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// `½ log2(det V_B / det(V_B − V_BA V_A⁻¹ V_AB))` on the heterodyne outcome
/// covariance, which equals the determinant-ratio form by the Schur identity.
pub fn mutual_information_schur(gamma: &CovarianceMatrix, alice: &[&str], bob: &[&str]) -> f64 {
    let joint: Vec<&str> = alice.iter().chain(bob).copied().collect();
    let reduced = cvqkd_core::reduce_to_modes(gamma, &joint).unwrap();
    let n = reduced.entries().nrows();
    let het = (reduced.entries() + DMatrix::<f64>::identity(n, n)) * 0.5;
    let na = 2 * alice.len();
    let nb = n - na;
    let va = het.view((0, 0), (na, na)).into_owned();
    let vb = het.view((na, na), (nb, nb)).into_owned();
    let vab = het.view((0, na), (na, nb)).into_owned();
    let schur = &vb - vab.transpose() * va.try_inverse().unwrap() * &vab;
    0.5 * (vb.determinant() / schur.determinant()).log2()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
