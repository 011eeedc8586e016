//! Uncertainty-relation checks on the assembled dispersion matrix.
//!
//! The Robertson matrix Sigma = sigma + (i/2) J must be positive
//! semidefinite for a physical state, which is equivalent to all 15 of its
//! principal minors being non-negative. Every check reports a margin
//! (lhs - bound) with a bootstrap error and a three-way verdict: noisy
//! data cannot distinguish a small negative margin from saturation, so
//! margins within the confidence band are inconclusive rather than
//! violations.

use nalgebra::{Complex, DMatrix, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mode_network::{canonical_scale, Mode};
use crate::moment_engine;
use crate::quantum_state::CommutatorMatrix;
use crate::source::{estimate, Measured, MomentSource, MomentView};
use crate::{Error, Result};

pub use crate::quantum_state::QuadOrdering as Ordering;

use std::f64::consts::{FRAC_PI_2, PI};

/// Default confidence multiplier z for verdicts.
pub const CONFIDENCE_Z: f64 = 3.0;
/// Margins this close to zero count as saturation, not violation.
pub const SATURATION_TOL: f64 = 1e-10;
/// Determinants of the Hermitian Sigma must be real to this accuracy.
const IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "violation")]
    Violation,
    #[serde(rename = "inconclusive-within-error")]
    Inconclusive,
}

/// margin >= -tol passes; below that, a margin within z standard errors of
/// zero is inconclusive; anything lower is a violation.
pub fn verdict(margin: f64, stderr: f64, z: f64) -> Verdict {
    if margin >= -SATURATION_TOL {
        Verdict::Pass
    } else if margin >= -(z * stderr + SATURATION_TOL) {
        Verdict::Inconclusive
    } else {
        Verdict::Violation
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub stderr: f64,
    pub verdict: Verdict,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, lhs: Measured, bound: f64, z: f64) -> Self {
        let margin = lhs.value - bound;
        Self {
            name: name.into(),
            lhs: lhs.value,
            bound,
            margin,
            stderr: lhs.stderr,
            verdict: verdict(margin, lhs.stderr, z),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Real symmetric 4x4 of quadrature covariances in a tagged basis order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionMatrix {
    pub ordering: Ordering,
    pub values: [[f64; 4]; 4],
    pub stderr: [[f64; 4]; 4],
}

/// Covariances in the internal (Q1, P1, Q2, P2) order for one view.
fn sigma_internal<S: MomentSource + ?Sized>(v: &MomentView<S>) -> Result<[[f64; 4]; 4]> {
    let mut s = [[0.0f64; 4]; 4];
    for (mode, q, p) in [(Mode::A, 0usize, 1usize), (Mode::B, 2, 3)] {
        let qq = v.variance(mode, 0.0)?;
        let pp = v.variance(mode, FRAC_PI_2)?;
        let qp = v.variance(mode, PI / 4.0)? - 0.5 * (qq + pp);
        s[q][q] = qq;
        s[p][p] = pp;
        s[q][p] = qp;
        s[p][q] = qp;
    }
    // cross block from the primary (mode 3/5) route
    let q1q1 = s[0][0];
    let p1p1 = s[1][1];
    let q2q2 = s[2][2];
    let p2p2 = s[3][3];
    let q1q2 = 2.0 * v.variance(Mode::C, 0.0)? - 0.5 * (q1q1 + q2q2);
    let p1p2 = 2.0 * v.variance(Mode::C, FRAC_PI_2)? - 0.5 * (p1p1 + p2p2);
    let q1p2 = -2.0 * v.variance(Mode::E, 0.0)? + 0.5 * (q1q1 + p2p2);
    let q2p1 = 2.0 * v.variance(Mode::E, FRAC_PI_2)? - 0.5 * (q2q2 + p1p1);
    s[0][2] = q1q2;
    s[2][0] = q1q2;
    s[1][3] = p1p2;
    s[3][1] = p1p2;
    s[0][3] = q1p2;
    s[3][0] = q1p2;
    s[1][2] = q2p1;
    s[2][1] = q2p1;
    Ok(s)
}

fn permute(internal: &[[f64; 4]; 4], ordering: Ordering) -> [[f64; 4]; 4] {
    let slots = ordering.slots();
    let mut out = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[slots[i]][slots[j]] = internal[i][j];
        }
    }
    out
}

/// Assemble the dispersion matrix from tomogram variances, with per-entry
/// bootstrap errors.
pub fn dispersion_matrix<S: MomentSource>(src: &S, ordering: Ordering) -> Result<DispersionMatrix> {
    let point = permute(&sigma_internal(&MomentView { source: src, replica: None })?, ordering);
    let mut stderr = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let m = estimate(src, |v| Ok(permute(&sigma_internal(v)?, ordering)[i][j]))?;
            stderr[i][j] = m.stderr;
            stderr[j][i] = m.stderr;
        }
    }
    Ok(DispersionMatrix { ordering, values: point, stderr })
}

/// Complex Hermitian Sigma = sigma + (i/2) J for the tagged ordering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobertsonMatrix {
    pub ordering: Ordering,
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl RobertsonMatrix {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[i][j], self.im[i][j])
    }

    pub fn matrix(&self) -> Matrix4<Complex<f64>> {
        Matrix4::from_fn(|i, j| Complex::new(self.re[i][j], self.im[i][j]))
    }

    /// Real eigenvalues of the Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = self.matrix().symmetric_eigen();
        let mut ev = [0.0f64; 4];
        for (k, v) in eig.eigenvalues.iter().enumerate() {
            ev[k] = *v;
        }
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

fn robertson_values(values: &[[f64; 4]; 4], ordering: Ordering) -> RobertsonMatrix {
    let j = CommutatorMatrix::for_ordering(ordering);
    let mut im = [[0.0f64; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            im[a][b] = 0.5 * j.entries[a][b] as f64;
        }
    }
    RobertsonMatrix { ordering, re: *values, im }
}

/// Dispersion plus (i/2) J; Hermitian by construction.
pub fn assemble(dispersion: &DispersionMatrix) -> RobertsonMatrix {
    robertson_values(&dispersion.values, dispersion.ordering)
}

/// Index subsets for all 15 principal minors, ordered by size then lexicographically.
pub fn minor_subsets() -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u8..16)
        .map(|mask| (0..4).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by_key(|s| (s.len(), s.clone()));
    subsets
}

fn complex_minor(m: &RobertsonMatrix, subset: &[usize]) -> Result<f64> {
    let k = subset.len();
    let sub = DMatrix::from_fn(k, k, |r, c| {
        Complex::new(m.re[subset[r]][subset[c]], m.im[subset[r]][subset[c]])
    });
    let det = sub.determinant();
    if det.im.abs() > IMAG_TOL {
        return Err(Error::ImaginaryResidue(det.im.abs()));
    }
    Ok(det.re)
}

/// All 15 principal minors of the Robertson matrix, paired with their
/// index subsets.
pub fn principal_minors(m: &RobertsonMatrix) -> Result<Vec<(Vec<usize>, f64)>> {
    minor_subsets()
        .into_iter()
        .map(|s| complex_minor(m, &s).map(|d| (s, d)))
        .collect()
}

fn subset_label(ordering: Ordering, subset: &[usize]) -> String {
    let names = match ordering {
        Ordering::Interleaved => ["Q1", "P1", "Q2", "P2"],
        Ordering::PpQq => ["P1", "P2", "Q1", "Q2"],
        Ordering::QqPp => ["Q1", "Q2", "P1", "P2"],
    };
    subset.iter().map(|&i| names[i]).collect::<Vec<_>>().join(",")
}

/// Minor checks with bootstrap errors: one report per subset.
pub fn principal_minor_reports<S: MomentSource>(
    src: &S,
    ordering: Ordering,
    z: f64,
) -> Result<Vec<InequalityReport>> {
    let tag = match ordering {
        Ordering::PpQq => "Sigma",
        Ordering::QqPp => "Sigma'",
        Ordering::Interleaved => "Sigma-interleaved",
    };
    minor_subsets()
        .into_iter()
        .map(|subset| {
            let m = estimate(src, |v| {
                let rob = robertson_values(&permute(&sigma_internal(v)?, ordering), ordering);
                complex_minor(&rob, &subset)
            })?;
            Ok(InequalityReport::new(
                format!("minor-{tag}-{{{}}}", subset_label(ordering, &subset)),
                m,
                0.0,
                z,
            ))
        })
        .collect()
}

/// Schrödinger-Robertson per mode in canonical variables:
/// sigma_QQ sigma_PP - sigma_QP^2 >= 1/4.
pub fn sr_per_mode<S: MomentSource>(src: &S, mode: Mode, z: f64) -> Result<InequalityReport> {
    let s2 = canonical_scale::<f64>(mode).powi(2);
    let m = estimate(src, |v| {
        let qq = s2 * v.variance(mode, 0.0)?;
        let pp = s2 * v.variance(mode, FRAC_PI_2)?;
        let qp = s2 * v.variance(mode, PI / 4.0)? - 0.5 * (qq + pp);
        Ok(qq * pp - qp * qp)
    })?;
    Ok(InequalityReport::new(format!("SR-mode-{}", mode.label()), m, 0.25, z))
}

/// F(theta) = sigma(theta) sigma(theta + pi/2)
///          - [sigma(theta + pi/4) - (sigma(theta) + sigma(theta + pi/2))/2]^2
///          - 1/4, in canonical units; >= 0 for any state and frame.
pub fn f_theta<S: MomentSource>(src: &S, mode: Mode, theta: f64, z: f64) -> Result<InequalityReport> {
    let s2 = canonical_scale::<f64>(mode).powi(2);
    let m = estimate(src, |v| {
        let a = s2 * v.variance(mode, theta)?;
        let b = s2 * v.variance(mode, theta + FRAC_PI_2)?;
        let c = s2 * v.variance(mode, theta + PI / 4.0)?;
        let cross = c - 0.5 * (a + b);
        Ok(a * b - cross * cross)
    })?;
    Ok(InequalityReport::new(
        format!("F-mode-{}-theta-{:.4}", mode.label(), theta),
        m,
        0.25,
        z,
    ))
}

/// Third-order inequality in the frame rotated by theta:
/// <X^2>(theta) <X^4>(theta + pi/2) >= |<P^2 Q>|^2 with P, Q the frame
/// quadratures; the ordered cubic comes from the moment solver.
pub fn cubic_inequality<S: MomentSource>(
    src: &S,
    mode: Mode,
    theta: f64,
    z: f64,
) -> Result<InequalityReport> {
    let s = canonical_scale::<f64>(mode);
    let m = estimate(src, |v| {
        let table = moment_engine::ordered_values_on_view(v, mode, 3, theta)?;
        let m02 = table[&(0, 2)].re;
        let m40 = s.powi(4) * v.moment(mode, theta + FRAC_PI_2, 4)?;
        let m21 = table[&(2, 1)];
        Ok(m02 * m40 - m21.norm_sqr())
    })?;
    Ok(InequalityReport::new(
        format!("cubic-mode-{}-theta-{:.4}", mode.label(), theta),
        m,
        0.0,
        z,
    ))
}

/// M2 = sigma_Q1Q1 sigma_Q2Q2 - sigma_Q1Q2^2 >= 0: a purely classical
/// minor, free of Planck's constant.
pub fn m2_classical<S: MomentSource>(src: &S, z: f64) -> Result<InequalityReport> {
    let m = estimate(src, |v| {
        let q1q1 = v.variance(Mode::A, 0.0)?;
        let q2q2 = v.variance(Mode::B, 0.0)?;
        let q1q2 = 2.0 * v.variance(Mode::C, 0.0)? - 0.5 * (q1q1 + q2q2);
        Ok(q1q1 * q2q2 - q1q2 * q1q2)
    })?;
    Ok(InequalityReport::new("M2-classical-planck-free", m, 0.0, z))
}

/// det(dispersion) >= 1/16 (the quartic bound; vacuum saturates).
pub fn quartic_bound<S: MomentSource>(src: &S, z: f64) -> Result<InequalityReport> {
    let m = estimate(src, |v| {
        let s = sigma_internal(v)?;
        Ok(Matrix4::from_fn(|i, j| s[i][j]).determinant())
    })?;
    Ok(InequalityReport::new("quartic-det-dispersion", m, 1.0 / 16.0, z))
}

/// Every check: SR per physical mode, all principal minors in both paper
/// bases, the quartic bound, F(theta) on the given grid for the physical
/// modes, the cubic inequality on all six modes, and the classical M2.
pub fn full_report<S: MomentSource>(
    src: &S,
    z: f64,
    f_thetas: &[f64],
    cubic_thetas: &[f64],
) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for mode in [Mode::A, Mode::B] {
        out.push(sr_per_mode(src, mode, z)?);
    }
    for ordering in [Ordering::PpQq, Ordering::QqPp] {
        out.extend(principal_minor_reports(src, ordering, z)?);
    }
    out.push(quartic_bound(src, z)?);
    for mode in [Mode::A, Mode::B] {
        for &theta in f_thetas {
            out.push(f_theta(src, mode, theta, z)?);
        }
    }
    for mode in Mode::ALL {
        for &theta in cubic_thetas {
            out.push(cubic_inequality(src, mode, theta, z)?);
        }
    }
    out.push(m2_classical(src, z)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::{sample_state, NoiseModel, PhaseSchedule};
    use crate::quantum_state::GaussianState;
    use crate::source::AnalyticSource;
    use approx::assert_relative_eq;

    fn analytic(state: GaussianState<f64>) -> AnalyticSource {
        AnalyticSource::new(state)
    }

    #[test]
    fn vacuum_robertson_eigenvalues() {
        let src = analytic(GaussianState::vacuum());
        let d = dispersion_matrix(&src, Ordering::PpQq).unwrap();
        let rob = assemble(&d);
        let ev = rob.eigenvalues();
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-10);
        assert_relative_eq!(ev[1], 0.0, epsilon = 1e-10);
        assert_relative_eq!(ev[2], 1.0, epsilon = 1e-10);
        assert_relative_eq!(ev[3], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn vacuum_dispersion_determinant() {
        let src = analytic(GaussianState::vacuum());
        let r = quartic_bound(&src, CONFIDENCE_Z).unwrap();
        assert_relative_eq!(r.lhs, 1.0 / 16.0, epsilon = 1e-10);
        assert!(r.passed());
        assert!(r.margin.abs() < 1e-10); // saturated
    }

    #[test]
    fn tmsv_is_pure_two_zero_eigenvalues() {
        let src = analytic(GaussianState::two_mode_squeezed(0.5).unwrap());
        let rob = assemble(&dispersion_matrix(&src, Ordering::PpQq).unwrap());
        let ev = rob.eigenvalues();
        assert!(ev[0].abs() < 1e-9 && ev[1].abs() < 1e-9, "{ev:?}");
        assert!(ev[2] > 0.5);
    }

    #[test]
    fn ordering_invariance_of_spectrum() {
        let src = analytic(GaussianState::squeezed(0.4, 0.3, 0.2, 1.0).unwrap());
        let a = assemble(&dispersion_matrix(&src, Ordering::PpQq).unwrap()).eigenvalues();
        let b = assemble(&dispersion_matrix(&src, Ordering::QqPp).unwrap()).eigenvalues();
        for k in 0..4 {
            assert_relative_eq!(a[k], b[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn all_minors_nonnegative_on_fixtures() {
        let fixtures = [
            GaussianState::vacuum(),
            GaussianState::coherent((0.5, -0.2), (0.1, 0.9)),
            GaussianState::thermal(1.0, 2.0).unwrap(),
            GaussianState::squeezed(0.8, 0.6, 0.3, 0.0).unwrap(),
            GaussianState::two_mode_squeezed(0.6).unwrap(),
        ];
        for st in fixtures {
            let src = analytic(st);
            for ordering in [Ordering::PpQq, Ordering::QqPp] {
                let rob = assemble(&dispersion_matrix(&src, ordering).unwrap());
                for (subset, minor) in principal_minors(&rob).unwrap() {
                    assert!(minor >= -1e-10, "{ordering:?} {subset:?}: {minor}");
                }
            }
        }
    }

    #[test]
    fn minor_count_and_sizes() {
        let subsets = minor_subsets();
        assert_eq!(subsets.len(), 15);
        assert_eq!(subsets.iter().filter(|s| s.len() == 3).count(), 4);
        assert_eq!(subsets.last().unwrap().len(), 4);
    }

    #[test]
    fn pure_states_saturate_det() {
        for st in [
            GaussianState::vacuum(),
            GaussianState::squeezed(0.7, 0.2, 0.1, 0.5).unwrap(),
            GaussianState::two_mode_squeezed(0.4).unwrap(),
        ] {
            let src = analytic(st);
            let rob = assemble(&dispersion_matrix(&src, Ordering::PpQq).unwrap());
            let (_, det) = principal_minors(&rob).unwrap().pop().unwrap();
            assert!(det.abs() < 1e-8, "det {det}");
        }
    }

    #[test]
    fn sr_per_mode_values() {
        let vac = analytic(GaussianState::vacuum());
        let r = sr_per_mode(&vac, Mode::A, CONFIDENCE_Z).unwrap();
        assert_relative_eq!(r.margin, 0.0, epsilon = 1e-10);
        assert!(r.passed());

        let th = analytic(GaussianState::thermal(1.0, 0.0).unwrap());
        let r = sr_per_mode(&th, Mode::A, CONFIDENCE_Z).unwrap();
        assert_relative_eq!(r.margin, 2.0, epsilon = 1e-10);

        // reduced TMSV mode is thermal with variance cosh(2r)/2
        let r = sr_per_mode(
            &analytic(GaussianState::two_mode_squeezed(0.5).unwrap()),
            Mode::A,
            CONFIDENCE_Z,
        )
        .unwrap();
        assert_relative_eq!(r.lhs, (1.0f64.cosh() / 2.0).powi(2), epsilon = 1e-10);
    }

    #[test]
    fn f_theta_vacuum_and_thermal() {
        let vac = analytic(GaussianState::vacuum());
        for k in 0..9 {
            let r = f_theta(&vac, Mode::A, k as f64 * PI / 8.0, CONFIDENCE_Z).unwrap();
            assert_relative_eq!(r.margin, 0.0, epsilon = 1e-9);
            assert!(r.passed());
        }
        let th = analytic(GaussianState::thermal(1.0, 0.0).unwrap());
        let r = f_theta(&th, Mode::A, 0.0, CONFIDENCE_Z).unwrap();
        assert_relative_eq!(r.margin, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn f_theta_constant_for_pure_gaussian() {
        let src = analytic(GaussianState::squeezed(0.6, 0.9, 0.0, 0.0).unwrap());
        for k in 0..8 {
            let r = f_theta(&src, Mode::A, k as f64 * PI / 8.0, CONFIDENCE_Z).unwrap();
            assert!(r.margin.abs() < 1e-8, "theta step {k}: {}", r.margin);
        }
    }

    #[test]
    fn cubic_inequality_vacuum() {
        let src = analytic(GaussianState::vacuum());
        let r = cubic_inequality(&src, Mode::A, 0.0, CONFIDENCE_Z).unwrap();
        assert_relative_eq!(r.lhs, 3.0 / 8.0, epsilon = 1e-9);
        // theta sweep constant by rotational symmetry
        for k in 1..8 {
            let r = cubic_inequality(&src, Mode::A, k as f64 * PI / 8.0, CONFIDENCE_Z).unwrap();
            assert_relative_eq!(r.lhs, 3.0 / 8.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cubic_inequality_coherent_matches_oracle() {
        let q0 = 2.0f64.sqrt(); // alpha = (1, 0)
        let st = GaussianState::coherent((1.0, 0.0), (0.0, 0.0));
        let src = analytic(st);
        let r = cubic_inequality(&src, Mode::A, 0.0, CONFIDENCE_Z).unwrap();
        // oracle: Gaussian raw moments around (q0, 0) with variance 1/2,
        // <P^2 Q> = <p^2 q> (symmetric = ordered here since <[..]> terms
        // vanish for real mean in P), |<P^2Q>|^2 = (q0/2)^2 + (im)^2 with
        // im = -<P> = 0, plus the -i<Q>... assemble explicitly:
        // P^2Q symmetric moment = q0 * 1/2; commutator shift adds -i<P> = 0
        let m02 = 0.5 + q0 * q0;
        let m40 = 3.0 * 0.25;
        let p2q = q0 * 0.5; // E[p^2 q] for independent p~N(0,1/2), q~N(q0,1/2)
        let want = m02 * m40 - p2q * p2q;
        assert_relative_eq!(r.lhs, want, epsilon = 1e-8);
        assert!(r.passed());
    }

    #[test]
    fn cubic_all_modes_pass_on_tmsv() {
        let src = analytic(GaussianState::two_mode_squeezed(0.4).unwrap());
        for mode in Mode::ALL {
            let r = cubic_inequality(&src, mode, 0.0, CONFIDENCE_Z).unwrap();
            assert!(r.passed(), "mode {}: margin {}", mode.label(), r.margin);
        }
    }

    #[test]
    fn m2_values() {
        let r = m2_classical(&analytic(GaussianState::vacuum()), CONFIDENCE_Z).unwrap();
        assert_relative_eq!(r.lhs, 0.25, epsilon = 1e-10);
        let r = m2_classical(
            &analytic(GaussianState::two_mode_squeezed(0.7).unwrap()),
            CONFIDENCE_Z,
        )
        .unwrap();
        assert_relative_eq!(r.lhs, 0.25, epsilon = 1e-9);
        let r = m2_classical(
            &analytic(GaussianState::squeezed(0.3, 0.0, 0.5, 0.0).unwrap()),
            CONFIDENCE_Z,
        )
        .unwrap();
        assert_relative_eq!(r.lhs, (-0.6f64).exp() * (-1.0f64).exp() / 4.0, epsilon = 1e-9);
    }

    #[test]
    fn noise_increases_leading_minors() {
        // sigma -> sigma + eps I strictly increases every leading minor margin
        let st = GaussianState::two_mode_squeezed(0.5).unwrap();
        let mut noisy = st.clone();
        for i in 0..4 {
            noisy.cov[i][i] += 0.05;
        }
        let clean = assemble(&dispersion_matrix(&analytic(st), Ordering::PpQq).unwrap());
        let bumped = assemble(&dispersion_matrix(&analytic(noisy), Ordering::PpQq).unwrap());
        for lead in 1..=4usize {
            let subset: Vec<usize> = (0..lead).collect();
            let a = complex_minor(&clean, &subset).unwrap();
            let b = complex_minor(&bumped, &subset).unwrap();
            assert!(b > a + 1e-6, "leading {lead}: {a} vs {b}");
        }
    }

    #[test]
    fn subvacuum_fixture_violates_sr() {
        // unphysical dispersion: sigma_Q1Q1 = 0.1 with vacuum P variance
        let mut cov = [[0.0f64; 4]; 4];
        for i in 0..4 {
            cov[i][i] = 0.5;
        }
        cov[0][0] = 0.1;
        let st = GaussianState::from_parts([0.0; 4], cov).unwrap();
        let src = analytic(st);
        let r = sr_per_mode(&src, Mode::A, CONFIDENCE_Z).unwrap();
        assert_eq!(r.verdict, Verdict::Violation);
        let reports = principal_minor_reports(&src, Ordering::PpQq, CONFIDENCE_Z).unwrap();
        assert!(reports.iter().any(|r| r.verdict == Verdict::Violation));
    }

    #[test]
    fn full_report_analytic_vacuum_all_pass() {
        let src = analytic(GaussianState::vacuum());
        let reports = full_report(&src, CONFIDENCE_Z, &[0.0, PI / 8.0], &[0.0]).unwrap();
        assert!(reports.iter().all(InequalityReport::passed));
        // saturated entries present
        assert!(reports.iter().any(|r| r.margin.abs() < 1e-10));
    }

    #[test]
    fn full_report_sampled_tmsv_consistent() {
        let st = GaussianState::two_mode_squeezed(0.3f64).unwrap();
        let ds = sample_state(&st, None, &PhaseSchedule::cubic(100_000), 77, &NoiseModel::default())
            .unwrap();
        let src = crate::source::EmpiricalSource::new(&ds);
        let reports = full_report(&src, CONFIDENCE_Z, &[0.0], &[0.0]).unwrap();
        for r in &reports {
            assert_ne!(r.verdict, Verdict::Violation, "{}: margin {} pm {}", r.name, r.margin, r.stderr);
        }
    }

    #[test]
    fn report_json_fields() {
        let src = analytic(GaussianState::vacuum());
        let r = sr_per_mode(&src, Mode::A, CONFIDENCE_Z).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["verdict"], "pass");
        assert_eq!(j["bound"], 0.25);
        let v: Verdict = serde_json::from_str("\"inconclusive-within-error\"").unwrap();
        assert_eq!(v, Verdict::Inconclusive);
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(verdict(0.0, 0.0, 3.0), Verdict::Pass);
        assert_eq!(verdict(-1e-12, 0.0, 3.0), Verdict::Pass);
        assert_eq!(verdict(-0.01, 0.01, 3.0), Verdict::Inconclusive);
        assert_eq!(verdict(-0.1, 0.01, 3.0), Verdict::Violation);
    }
}
