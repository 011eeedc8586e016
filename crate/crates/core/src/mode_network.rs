//! The six measurement modes and their quadrature operators.
//!
//! Modes 1 and 2 (a, b) are the physical modes; modes 3..6 (c, d, e, f)
//! are derived by beam-splitter style combinations:
//!
//! ```text
//! X3 = (mu/2)(Q1 + Q2) + (nu/2)(P1 + P2)
//! X4 = (mu/2)(Q1 - Q2) + (nu/2)(P1 - P2)
//! X5 = (mu/2)(Q1 - P2) + (nu/2)(Q2 + P1)
//! X6 = (mu/2)(Q1 + P2) + (nu/2)(P1 - Q2)
//! ```
//!
//! The S matrix stacks the fixed-phase forms of modes 3..6 over the
//! column ordering (P1, P2, Q1, Q2); inverting it recovers mean
//! quadratures from measured mean homodyne signals.

use serde::{Deserialize, Serialize};

use crate::scalar::{LinalgReal, Real};
use crate::{Error, Result};

/// Measurement mode label; `a..f` map to `1..6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    A = 1,
    B = 2,
    C = 3,
    D = 4,
    E = 5,
    F = 6,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::A, Mode::B, Mode::C, Mode::D, Mode::E, Mode::F];

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Mode::A),
            2 => Ok(Mode::B),
            3 => Ok(Mode::C),
            4 => Ok(Mode::D),
            5 => Ok(Mode::E),
            6 => Ok(Mode::F),
            _ => Err(Error::InvalidMode(k)),
        }
    }

    pub fn is_derived(self) -> bool {
        self.label() >= 3
    }
}

impl TryFrom<u8> for Mode {
    type Error = Error;
    fn try_from(k: u8) -> Result<Self> {
        Mode::from_label(k)
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m.label()
    }
}

/// Homodyne quadrature operator as a linear form `X = v . (Q1, P1, Q2, P2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureForm<T> {
    pub coefficients: [T; 4],
    pub mode: Mode,
    pub mu: T,
    pub nu: T,
}

pub type QuadratureForm64 = QuadratureForm<f64>;

impl<T: Real> QuadratureForm<T> {
    /// Commutator `[X_v, X_w] = i c`; returns c.
    pub fn commutator_with(&self, other: &QuadratureForm<T>) -> T {
        let v = &self.coefficients;
        let w = &other.coefficients;
        // [Q_k, P_k] = i per mode
        (v[0] * w[1] - v[1] * w[0]) + (v[2] * w[3] - v[3] * w[2])
    }
}

/// Quadrature form of mode `k` at phase `theta` (mu = cos, nu = sin).
pub fn quadrature_form<T: Real>(mode: Mode, theta: T) -> QuadratureForm<T> {
    let (nu, mu) = theta.sin_cos();
    quadrature_form_mu_nu(mode, mu, nu)
}

pub fn quadrature_form_mu_nu<T: Real>(mode: Mode, mu: T, nu: T) -> QuadratureForm<T> {
    let h = T::half();
    let hm = h * mu;
    let hn = h * nu;
    let z = T::zero();
    let coefficients = match mode {
        Mode::A => [mu, nu, z, z],
        Mode::B => [z, z, mu, nu],
        Mode::C => [hm, hn, hm, hn],
        Mode::D => [hm, hn, -hm, -hn],
        Mode::E => [hm, hn, hn, -hm],
        Mode::F => [hm, hn, -hn, hm],
    };
    QuadratureForm { coefficients, mode, mu, nu }
}

/// Scale factor that makes a mode's (Q, P) pair canonical. The global 1/2
/// in modes 3..6 gives `[X(theta), X(theta + pi/2)] = i/2` there, so their
/// quadratures must be stretched by sqrt(2) to restore `[Q, P] = i`.
pub fn canonical_scale<T: Real>(mode: Mode) -> T {
    if mode.is_derived() {
        T::from_f64(std::f64::consts::SQRT_2)
    } else {
        T::one()
    }
}

/// 4x4 matrix mapping (P1, P2, Q1, Q2) to (X3, X4, X5, X6) at fixed phases.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix<T> {
    pub entries: [[T; 4]; 4],
    pub thetas: [T; 4],
    pub det: T,
}

pub type SMatrix64 = SMatrix<f64>;

/// Build S from the mode 3..6 quadrature forms at phases (theta3..theta6).
pub fn build_s_matrix<T: LinalgReal>(thetas: [T; 4]) -> SMatrix<T> {
    let mut entries = [[T::zero(); 4]; 4];
    for (row, (mode, theta)) in [Mode::C, Mode::D, Mode::E, Mode::F]
        .into_iter()
        .zip(thetas)
        .enumerate()
    {
        let form = quadrature_form(mode, theta);
        // reorder (Q1, P1, Q2, P2) coefficients onto columns (P1, P2, Q1, Q2)
        entries[row] = [
            form.coefficients[1],
            form.coefficients[3],
            form.coefficients[0],
            form.coefficients[2],
        ];
    }
    let det = nalgebra::Matrix4::from_fn(|i, j| entries[i][j]).determinant();
    SMatrix { entries, thetas, det }
}

impl<T: LinalgReal> SMatrix<T> {
    fn frobenius(&self) -> T {
        num_traits::Float::sqrt(
            self.entries
                .iter()
                .flatten()
                .fold(T::zero(), |a, &x| a + x * x),
        )
    }

    /// Inverse; errors on a degenerate phase configuration.
    pub fn invert(&self) -> Result<[[T; 4]; 4]> {
        let scale = self.frobenius();
        let tol = <T as Real>::from_f64(1e-10) * scale * scale * scale * scale;
        if num_traits::Float::abs(self.det) <= tol {
            return Err(Error::Singular(format!(
                "S matrix is singular at phases ({:.6}, {:.6}, {:.6}, {:.6}): det = {:.3e}",
                self.thetas[0].to_f64(),
                self.thetas[1].to_f64(),
                self.thetas[2].to_f64(),
                self.thetas[3].to_f64(),
                self.det.to_f64(),
            )));
        }
        let m = nalgebra::Matrix4::from_fn(|i, j| self.entries[i][j]);
        let inv = m.try_inverse().ok_or_else(|| {
            Error::Singular("S matrix inversion failed despite nonzero determinant".into())
        })?;
        let mut out = [[T::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = inv[(i, j)];
            }
        }
        Ok(out)
    }

    /// Apply S to a (P1, P2, Q1, Q2) vector.
    pub fn apply(&self, v: &[T; 4]) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += self.entries[i][j] * v[j];
            }
        }
        out
    }

    /// Recover mean quadratures (P1, P2, Q1, Q2) from mean signals
    /// (<X3>, <X4>, <X5>, <X6>).
    pub fn recover_means(&self, signals: &[T; 4]) -> Result<[T; 4]> {
        let inv = self.invert()?;
        let mut out = [T::zero(); 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += inv[i][j] * signals[j];
            }
        }
        Ok(out)
    }
}

/// A phase choice that keeps S comfortably invertible (det = -1/4).
/// Note (theta5, theta6) = (pi/4, 3pi/4) looks natural but is singular:
/// the mode 5 form at pi/4 is a combination of the mode 3 and 4 rows.
pub fn default_s_phases<T: Real>() -> [T; 4] {
    let pi = T::from_f64(std::f64::consts::PI);
    let f = T::from_f64;
    [T::zero(), pi * f(0.5), pi * f(0.75), pi * f(0.25)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn mode_one_at_zero_is_q1() {
        let f = quadrature_form::<f64>(Mode::A, 0.0);
        assert_eq!(f.coefficients, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mode_five_at_zero() {
        let f = quadrature_form::<f64>(Mode::E, 0.0);
        assert_eq!(f.coefficients, [0.5, 0.0, 0.0, -0.5]);
    }

    #[test]
    fn mode_three_is_half_sum_of_one_and_two() {
        let theta = 0.7f64;
        let f3 = quadrature_form(Mode::C, theta);
        let f1 = quadrature_form(Mode::A, theta);
        let f2 = quadrature_form(Mode::B, theta);
        for i in 0..4 {
            assert_relative_eq!(
                f3.coefficients[i],
                0.5 * (f1.coefficients[i] + f2.coefficients[i]),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn own_mode_commutators() {
        // [X_k(theta), X_k(theta + pi/2)] = i for k = 1, 2 and i/2 for 3..6
        for mode in Mode::ALL {
            let theta = 0.3f64;
            let a = quadrature_form(mode, theta);
            let b = quadrature_form(mode, theta + FRAC_PI_2);
            let want = if mode.is_derived() { 0.5 } else { 1.0 };
            assert_relative_eq!(a.commutator_with(&b), want, epsilon = 1e-15);
            let s = canonical_scale::<f64>(mode);
            assert_relative_eq!(s * s * a.commutator_with(&b), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn modes_one_two_commute() {
        let a = quadrature_form::<f64>(Mode::A, 0.4);
        let b = quadrature_form::<f64>(Mode::B, 1.1);
        assert_eq!(a.commutator_with(&b), 0.0);
    }

    #[test]
    fn derived_forms_only_touch_expected_pairs() {
        let a = quadrature_form::<f64>(Mode::A, 0.9);
        assert_eq!(a.coefficients[2], 0.0);
        assert_eq!(a.coefficients[3], 0.0);
        let b = quadrature_form::<f64>(Mode::B, 0.9);
        assert_eq!(b.coefficients[0], 0.0);
        assert_eq!(b.coefficients[1], 0.0);
    }

    #[test]
    fn s_matrix_rows_match_forms() {
        // rows 3..5 match the published matrix: 1/2 (nu, nu, mu, mu),
        // 1/2 (nu, -nu, mu, -mu), 1/2 (nu, -mu, mu, nu) on (P1,P2,Q1,Q2)
        let thetas = [0.3f64, 0.8, 1.2, 2.1];
        let s = build_s_matrix(thetas);
        for (row, theta) in thetas.iter().enumerate() {
            let (nu, mu) = theta.sin_cos();
            let want: [f64; 4] = match row {
                0 => [nu, nu, mu, mu],
                1 => [nu, -nu, mu, -mu],
                2 => [nu, -mu, mu, nu],
                _ => [nu, mu, mu, -nu],
            };
            for j in 0..4 {
                assert_relative_eq!(s.entries[row][j], 0.5 * want[j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn all_zero_phases_is_singular() {
        let s = build_s_matrix([0.0f64; 4]);
        // first column (P1 coefficients) vanishes
        for row in 0..4 {
            assert_eq!(s.entries[row][0], 0.0);
        }
        assert_relative_eq!(s.det, 0.0, epsilon = 1e-15);
        assert!(matches!(s.invert(), Err(Error::Singular(_))));
    }

    #[test]
    fn default_phases_invertible() {
        let s = build_s_matrix(default_s_phases::<f64>());
        assert!(s.det.abs() > 0.0);
        let inv = s.invert().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let prod: f64 = (0..4).map(|k| s.entries[i][k] * inv[k][j]).sum();
                assert_relative_eq!(prod, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quarter_phase_choice_is_singular() {
        // r5(pi/4) = sqrt(2)/2 * (r3(0) + r4(pi/2)); the determinant vanishes
        let s = build_s_matrix([0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4]);
        assert!(s.det.abs() < 1e-12, "det {}", s.det);
        let err = s.invert().unwrap_err();
        assert!(err.to_string().contains("0.785398"), "{err}");
    }

    #[test]
    fn default_phase_determinant() {
        let s = build_s_matrix(default_s_phases::<f64>());
        assert_relative_eq!(s.det, -0.25, epsilon = 1e-14);
    }

    #[test]
    fn row_scaling_multiplies_det_by_16() {
        let thetas = [0.3f64, 0.8, 1.2, 2.1];
        let s = build_s_matrix(thetas);
        let scaled = nalgebra::Matrix4::from_fn(|i, j| 2.0 * s.entries[i][j]);
        assert_relative_eq!(scaled.determinant(), 16.0 * s.det, epsilon = 1e-12);
    }

    #[test]
    fn mean_recovery_round_trip() {
        use crate::quantum_state::GaussianState;
        let st = GaussianState::<f64>::coherent((0.7, -0.2), (-0.4, 1.1));
        let thetas = default_s_phases::<f64>();
        let s = build_s_matrix(thetas);
        let modes = [Mode::C, Mode::D, Mode::E, Mode::F];
        let mut signals = [0.0f64; 4];
        for (i, (mode, theta)) in modes.into_iter().zip(thetas).enumerate() {
            signals[i] = st.form_mean(&quadrature_form(mode, theta).coefficients);
        }
        let got = s.recover_means(&signals).unwrap();
        let want = [st.mean[1], st.mean[3], st.mean[0], st.mean[2]];
        for i in 0..4 {
            assert_relative_eq!(got[i], want[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn mode_labels_round_trip() {
        for k in 1..=6u8 {
            assert_eq!(Mode::from_label(k).unwrap().label(), k);
        }
        assert!(Mode::from_label(0).is_err());
        assert!(Mode::from_label(7).is_err());
    }

    #[test]
    fn f32_forms_match_f64() {
        let f64form = quadrature_form::<f64>(Mode::F, 0.6);
        let f32form = quadrature_form::<f32>(Mode::F, 0.6);
        for i in 0..4 {
            assert_relative_eq!(
                f32form.coefficients[i] as f64,
                f64form.coefficients[i],
                epsilon = 1e-6
            );
        }
    }
}
