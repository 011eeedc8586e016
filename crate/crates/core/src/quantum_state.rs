//! Ground-truth two-mode states.
//!
//! Gaussian states are kept in mean/covariance form over the internal
//! quadrature ordering `(Q1, P1, Q2, P2)` with vacuum variance `1/2`.
//! Non-Gaussian states enter as grid-sampled Wigner functions.
//!
//! Squeezing convention: `squeezed(r, phi = 0)` shrinks `sigma_QQ` by
//! `e^(-2r)`; `phi` rotates the squeezing axis in phase space.

use nalgebra::{Complex, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::scalar::{LinalgReal, Real};
use crate::{Error, Result};

/// Index helpers for the internal ordering (Q1, P1, Q2, P2).
pub const Q1: usize = 0;
pub const P1: usize = 1;
pub const Q2: usize = 2;
pub const P2: usize = 3;

/// Quadrature orderings used across the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadOrdering {
    /// internal ordering (Q1, P1, Q2, P2)
    Interleaved,
    /// paper ordering (P1, P2, Q1, Q2)
    PpQq,
    /// permuted ordering (Q1, Q2, P1, P2)
    QqPp,
}

impl QuadOrdering {
    /// Positions of (Q1, P1, Q2, P2) inside this ordering.
    pub fn slots(self) -> [usize; 4] {
        match self {
            QuadOrdering::Interleaved => [0, 1, 2, 3],
            QuadOrdering::PpQq => [2, 0, 3, 1],
            QuadOrdering::QqPp => [0, 2, 1, 3],
        }
    }
}

/// The antisymmetric commutator matrix J with `[x_a, x_b] = i J_ab`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommutatorMatrix {
    pub ordering: QuadOrdering,
    pub entries: [[i8; 4]; 4],
}

impl CommutatorMatrix {
    pub fn for_ordering(ordering: QuadOrdering) -> Self {
        let slots = ordering.slots();
        let mut entries = [[0i8; 4]; 4];
        // [Q_k, P_k] = i
        for mode in 0..2 {
            let q = slots[2 * mode];
            let p = slots[2 * mode + 1];
            entries[q][p] = 1;
            entries[p][q] = -1;
        }
        Self { ordering, entries }
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| self.entries[i][j] == -self.entries[j][i]))
    }

    pub fn squares_to_minus_identity(&self) -> bool {
        (0..4).all(|i| {
            (0..4).all(|j| {
                let s: i32 = (0..4)
                    .map(|k| self.entries[i][k] as i32 * self.entries[k][j] as i32)
                    .sum();
                s == if i == j { -1 } else { 0 }
            })
        })
    }
}

/// Two-mode Gaussian state: mean 4-vector and symmetric 4x4 covariance of
/// `sigma_AB = <AB + BA>/2 - <A><B>` in the internal ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState<T> {
    pub mean: [T; 4],
    pub cov: [[T; 4]; 4],
}

const SYM_TOL: f64 = 1e-12;

impl<T: Real> GaussianState<T> {
    /// Build from raw parts; rejects non-symmetric covariance but does not
    /// check physicality (unphysical fixtures are legitimate test inputs).
    pub fn from_parts(mean: [T; 4], cov: [[T; 4]; 4]) -> Result<Self> {
        let mut asym = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                asym = asym.max((cov[i][j] - cov[j][i]).abs().to_f64());
            }
        }
        if asym > SYM_TOL {
            return Err(Error::NonSymmetric(asym));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum() -> Self {
        let h = T::half();
        let mut cov = [[T::zero(); 4]; 4];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = h;
        }
        Self { mean: [T::zero(); 4], cov }
    }

    /// Coherent state |alpha1, alpha2> with `a = (Q + iP)/sqrt(2)`.
    pub fn coherent(alpha1: (T, T), alpha2: (T, T)) -> Self {
        let s = T::from_f64(std::f64::consts::SQRT_2);
        let mut st = Self::vacuum();
        st.mean = [s * alpha1.0, s * alpha1.1, s * alpha2.0, s * alpha2.1];
        st
    }

    /// Product of one-mode squeezed vacua; `r > 0` shrinks sigma_QQ at phi = 0.
    pub fn squeezed(r1: T, phi1: T, r2: T, phi2: T) -> Result<Self> {
        if !r1.is_finite() || !r2.is_finite() {
            return Err(Error::UnphysicalState("squeezing parameter must be finite".into()));
        }
        let mut cov = [[T::zero(); 4]; 4];
        for (mode, (r, phi)) in [(r1, phi1), (r2, phi2)].iter().enumerate() {
            let block = one_mode_squeezed_cov(*r, *phi);
            for i in 0..2 {
                for j in 0..2 {
                    cov[2 * mode + i][2 * mode + j] = block[i][j];
                }
            }
        }
        Ok(Self { mean: [T::zero(); 4], cov })
    }

    /// Two-mode squeezed vacuum: diagonals cosh(2r)/2, sigma_Q1Q2 = sinh(2r)/2,
    /// sigma_P1P2 = -sinh(2r)/2.
    pub fn two_mode_squeezed(r: T) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::UnphysicalState("squeezing parameter must be finite".into()));
        }
        let two = T::from_f64(2.0);
        let c = (two * r).cosh() * T::half();
        let s = (two * r).sinh() * T::half();
        let z = T::zero();
        let cov = [[c, z, s, z], [z, c, z, -s], [s, z, c, z], [z, -s, z, c]];
        Ok(Self { mean: [z; 4], cov })
    }

    /// Product of thermal states with mean photon numbers `nbar1`, `nbar2`.
    pub fn thermal(nbar1: T, nbar2: T) -> Result<Self> {
        if nbar1 < T::zero() || nbar2 < T::zero() {
            return Err(Error::UnphysicalState("thermal occupation must be >= 0".into()));
        }
        let mut cov = [[T::zero(); 4]; 4];
        let v1 = nbar1 + T::half();
        let v2 = nbar2 + T::half();
        cov[Q1][Q1] = v1;
        cov[P1][P1] = v1;
        cov[Q2][Q2] = v2;
        cov[P2][P2] = v2;
        Ok(Self { mean: [T::zero(); 4], cov })
    }

    /// Mean of the linear form `v . (Q1, P1, Q2, P2)`.
    pub fn form_mean(&self, v: &[T; 4]) -> T {
        (0..4).map(|i| v[i] * self.mean[i]).fold(T::zero(), |a, b| a + b)
    }

    /// Covariance of two linear forms: `v^T Sigma w`.
    pub fn form_cov(&self, v: &[T; 4], w: &[T; 4]) -> T {
        let mut acc = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                acc += v[i] * self.cov[i][j] * w[j];
            }
        }
        acc
    }

    /// Variance of the linear form `v`.
    pub fn form_var(&self, v: &[T; 4]) -> T {
        self.form_cov(v, v)
    }

    /// Drop the other mode's rows and columns.
    pub fn reduce_to_mode(&self, k: u8) -> Result<OneModeGaussian<T>> {
        let off = match k {
            1 => 0,
            2 => 2,
            _ => return Err(Error::InvalidMode(k)),
        };
        Ok(OneModeGaussian {
            mean: [self.mean[off], self.mean[off + 1]],
            cov: [
                [self.cov[off][off], self.cov[off][off + 1]],
                [self.cov[off + 1][off], self.cov[off + 1][off + 1]],
            ],
        })
    }
}

fn one_mode_squeezed_cov<T: Real>(r: T, phi: T) -> [[T; 2]; 2] {
    let two = T::from_f64(2.0);
    let vq = (-two * r).exp() * T::half();
    let vp = (two * r).exp() * T::half();
    let (sin, cos) = phi.sin_cos();
    // R(phi) diag(vq, vp) R(phi)^T
    [
        [cos * cos * vq + sin * sin * vp, sin * cos * (vq - vp)],
        [sin * cos * (vq - vp), sin * sin * vq + cos * cos * vp],
    ]
}

/// Reduced one-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneModeGaussian<T> {
    pub mean: [T; 2],
    pub cov: [[T; 2]; 2],
}

impl<T: Real> OneModeGaussian<T> {
    pub fn var_q(&self) -> T {
        self.cov[0][0]
    }
    pub fn var_p(&self) -> T {
        self.cov[1][1]
    }
    pub fn cov_qp(&self) -> T {
        self.cov[0][1]
    }
}

impl<T: LinalgReal> GaussianState<T> {
    fn cov_matrix(&self) -> Matrix4<T> {
        Matrix4::from_fn(|i, j| self.cov[i][j])
    }

    /// Minimum eigenvalue of `Sigma + (i/2) J` in the internal ordering.
    /// The state is physical iff it is `>= -tol` (tol = 1e-10).
    pub fn validate_physicality(&self) -> Result<(bool, T)> {
        let j = CommutatorMatrix::for_ordering(QuadOrdering::Interleaved);
        let half = T::half();
        let m = Matrix4::from_fn(|i, j_ix| {
            Complex::new(self.cov[i][j_ix], half * <T as Real>::from_f64(j.entries[i][j_ix] as f64))
        });
        let eig = m.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(T::infinity(), |a, b| if b < a { b } else { a });
        Ok((min >= -<T as Real>::from_f64(1e-10), min))
    }

    /// Gaussian Wigner function value at a phase-space point, normalized so
    /// that the integral against `dq1 dp1 dq2 dp2 / (2 pi)^2` is 1.
    pub fn wigner_eval(&self, q1: T, p1: T, q2: T, p2: T) -> T {
        self.wigner_evaluator().eval(q1, p1, q2, p2)
    }

    /// Precomputed evaluator for repeated Wigner lookups.
    pub fn wigner_evaluator(&self) -> WignerEvaluator<T> {
        let cov = self.cov_matrix();
        let det = cov.determinant();
        let inv = cov.try_inverse().expect("covariance must be invertible");
        let norm = T::one() / num_traits::Float::sqrt(det);
        WignerEvaluator { mean: Vector4::from_column_slice(&self.mean), inv, norm }
    }
}

pub struct WignerEvaluator<T: LinalgReal> {
    mean: Vector4<T>,
    inv: Matrix4<T>,
    norm: T,
}

impl<T: LinalgReal> WignerEvaluator<T> {
    pub fn eval(&self, q1: T, p1: T, q2: T, p2: T) -> T {
        let d = Vector4::new(q1, p1, q2, p2) - self.mean;
        let quad = (self.inv * d).dot(&d);
        self.norm * num_traits::Float::exp(-T::half() * quad)
    }
}

/// Uniform grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis<T> {
    pub min: T,
    pub step: T,
    pub len: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(min: T, max: T, len: usize) -> Self {
        assert!(len >= 2);
        Self { min, step: (max - min) / T::from_f64((len - 1) as f64), len }
    }

    pub fn at(&self, i: usize) -> T {
        self.min + self.step * T::from_f64(i as f64)
    }

    pub fn max(&self) -> T {
        self.at(self.len - 1)
    }

    /// Fractional index of `x`; None when outside the domain.
    pub fn locate(&self, x: T) -> Option<(usize, T)> {
        let t = (x - self.min) / self.step;
        if t < T::zero() || t > T::from_f64((self.len - 1) as f64) {
            return None;
        }
        let i = num_traits::Float::floor(t).to_f64() as usize;
        let i = i.min(self.len - 2);
        Some((i, t - T::from_f64(i as f64)))
    }
}

/// Grid-sampled Wigner function: real 2D (one mode) or 4D (two modes),
/// with the `dq dp / (2 pi)` per-mode measure convention.
#[derive(Debug, Clone, PartialEq)]
pub enum GridWigner<T> {
    TwoD { axes: [Axis<T>; 2], values: Vec<T> },
    FourD { axes: [Axis<T>; 4], values: Vec<T> },
}

const TWO_PI: f64 = std::f64::consts::TAU;

impl<T: Real> GridWigner<T> {
    pub fn two_d(axes: [Axis<T>; 2], values: Vec<T>) -> Result<Self> {
        if values.len() != axes[0].len * axes[1].len {
            return Err(Error::Grid("value count does not match axes".into()));
        }
        Ok(Self::TwoD { axes, values })
    }

    pub fn four_d(axes: [Axis<T>; 4], values: Vec<T>) -> Result<Self> {
        if values.len() != axes.iter().map(|a| a.len).product::<usize>() {
            return Err(Error::Grid("value count does not match axes".into()));
        }
        Ok(Self::FourD { axes, values })
    }

    /// Total integral under the per-mode `dq dp / (2 pi)` measure.
    pub fn total_mass(&self) -> T {
        match self {
            Self::TwoD { axes, values } => {
                let cell = axes[0].step * axes[1].step / T::from_f64(TWO_PI);
                values.iter().fold(T::zero(), |a, &v| a + v) * cell
            }
            Self::FourD { axes, values } => {
                let cell = axes.iter().map(|a| a.step).fold(T::one(), |a, b| a * b)
                    / T::from_f64(TWO_PI * TWO_PI);
                values.iter().fold(T::zero(), |a, &v| a + v) * cell
            }
        }
    }

    /// Bilinear (2D) or quadrilinear (4D) interpolation.
    pub fn eval(&self, point: &[T]) -> Result<T> {
        match self {
            Self::TwoD { axes, values } => {
                let (i, fi) = axes[0]
                    .locate(point[0])
                    .ok_or(Error::OutsideGrid(point[0].to_f64(), point[1].to_f64()))?;
                let (j, fj) = axes[1]
                    .locate(point[1])
                    .ok_or(Error::OutsideGrid(point[0].to_f64(), point[1].to_f64()))?;
                let n1 = axes[1].len;
                let v = |a: usize, b: usize| values[a * n1 + b];
                let one = T::one();
                Ok(v(i, j) * (one - fi) * (one - fj)
                    + v(i + 1, j) * fi * (one - fj)
                    + v(i, j + 1) * (one - fi) * fj
                    + v(i + 1, j + 1) * fi * fj)
            }
            Self::FourD { axes, values } => {
                let mut idx = [0usize; 4];
                let mut frac = [T::zero(); 4];
                for d in 0..4 {
                    let (i, f) = axes[d]
                        .locate(point[d])
                        .ok_or(Error::OutsideGrid(point[0].to_f64(), point[d].to_f64()))?;
                    idx[d] = i;
                    frac[d] = f;
                }
                let strides = Self::strides4(axes);
                let mut acc = T::zero();
                for corner in 0..16usize {
                    let mut w = T::one();
                    let mut off = 0usize;
                    for d in 0..4 {
                        if corner >> d & 1 == 1 {
                            w *= frac[d];
                            off += strides[d] * (idx[d] + 1);
                        } else {
                            w *= T::one() - frac[d];
                            off += strides[d] * idx[d];
                        }
                    }
                    acc += values[off] * w;
                }
                Ok(acc)
            }
        }
    }

    pub fn strides4(axes: &[Axis<T>; 4]) -> [usize; 4] {
        [
            axes[1].len * axes[2].len * axes[3].len,
            axes[2].len * axes[3].len,
            axes[3].len,
            1,
        ]
    }

    /// Integrate out the other mode's (q, p) plane; result renormalized.
    pub fn reduce_to_mode(&self, k: u8) -> Result<GridWigner<T>> {
        let Self::FourD { axes, values } = self else {
            return Err(Error::Grid("reduce_to_mode requires a 4D grid".into()));
        };
        if k != 1 && k != 2 {
            return Err(Error::InvalidMode(k));
        }
        let (keep_q, keep_p, drop_q, drop_p) =
            if k == 1 { (0, 1, 2, 3) } else { (2, 3, 0, 1) };
        let strides = Self::strides4(axes);
        let out_axes = [axes[keep_q], axes[keep_p]];
        let cell = axes[drop_q].step * axes[drop_p].step / T::from_f64(TWO_PI);
        let mut out = vec![T::zero(); out_axes[0].len * out_axes[1].len];
        for iq in 0..out_axes[0].len {
            for ip in 0..out_axes[1].len {
                let mut acc = T::zero();
                for jq in 0..axes[drop_q].len {
                    for jp in 0..axes[drop_p].len {
                        let off = strides[keep_q] * iq
                            + strides[keep_p] * ip
                            + strides[drop_q] * jq
                            + strides[drop_p] * jp;
                        acc += values[off];
                    }
                }
                out[iq * out_axes[1].len + ip] = acc * cell;
            }
        }
        let mut grid = GridWigner::two_d(out_axes, out)?;
        grid.renormalize();
        Ok(grid)
    }

    pub fn renormalize(&mut self) {
        let mass = self.total_mass();
        let values = match self {
            Self::TwoD { values, .. } => values,
            Self::FourD { values, .. } => values,
        };
        for v in values.iter_mut() {
            *v /= mass;
        }
    }
}

impl<T: LinalgReal> GridWigner<T> {
    /// Sample a Gaussian state onto a 4D grid over a mean +/- `span_sigma`
    /// window per axis.
    pub fn from_gaussian(state: &GaussianState<T>, n: usize, span_sigma: T) -> Self {
        let ev = state.wigner_evaluator();
        let axes: Vec<Axis<T>> = (0..4)
            .map(|i| {
                let sd = num_traits::Float::sqrt(state.cov[i][i]);
                Axis::new(
                    state.mean[i] - span_sigma * sd,
                    state.mean[i] + span_sigma * sd,
                    n,
                )
            })
            .collect();
        let axes: [Axis<T>; 4] = [axes[0], axes[1], axes[2], axes[3]];
        let mut values = Vec::with_capacity(n * n * n * n);
        for i0 in 0..n {
            let q1 = axes[0].at(i0);
            for i1 in 0..n {
                let p1 = axes[1].at(i1);
                for i2 in 0..n {
                    let q2 = axes[2].at(i2);
                    for i3 in 0..n {
                        values.push(ev.eval(q1, p1, q2, axes[3].at(i3)));
                    }
                }
            }
        }
        Self::FourD { axes, values }
    }

    /// Sample a reduced one-mode Gaussian onto a 2D grid.
    pub fn from_one_mode(state: &OneModeGaussian<T>, n: usize, span_sigma: T) -> Self {
        let det = state.cov[0][0] * state.cov[1][1] - state.cov[0][1] * state.cov[1][0];
        let norm = T::one() / num_traits::Float::sqrt(det);
        let inv = [
            [state.cov[1][1] / det, -state.cov[0][1] / det],
            [-state.cov[1][0] / det, state.cov[0][0] / det],
        ];
        let axes = [
            Axis::new(
                state.mean[0] - span_sigma * num_traits::Float::sqrt(state.cov[0][0]),
                state.mean[0] + span_sigma * num_traits::Float::sqrt(state.cov[0][0]),
                n,
            ),
            Axis::new(
                state.mean[1] - span_sigma * num_traits::Float::sqrt(state.cov[1][1]),
                state.mean[1] + span_sigma * num_traits::Float::sqrt(state.cov[1][1]),
                n,
            ),
        ];
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let dq = axes[0].at(i) - state.mean[0];
            for j in 0..n {
                let dp = axes[1].at(j) - state.mean[1];
                let quad = inv[0][0] * dq * dq
                    + (inv[0][1] + inv[1][0]) * dq * dp
                    + inv[1][1] * dp * dp;
                values.push(norm * num_traits::Float::exp(-T::half() * quad));
            }
        }
        Self::TwoD { axes, values }
    }
}

/// Serializable state recipe used by the CLI and file formats.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum StateDescriptor {
    Vacuum,
    Coherent { alpha1: (f64, f64), alpha2: (f64, f64) },
    Squeezed { r1: f64, phi1: f64, r2: f64, phi2: f64 },
    TwoModeSqueezed { r: f64 },
    Thermal { nbar1: f64, nbar2: f64 },
    /// Explicit mean/covariance, e.g. for fault-injection fixtures.
    Raw { mean: [f64; 4], cov: [[f64; 4]; 4] },
    /// Reference to a stored grid Wigner file.
    GridFile { path: String },
}

/// Build the ground-truth Gaussian state for a descriptor.
/// `GridFile` descriptors are resolved by the I/O layer, not here.
pub fn make_state<T: Real>(desc: &StateDescriptor) -> Result<GaussianState<T>> {
    let f = T::from_f64;
    match desc {
        StateDescriptor::Vacuum => Ok(GaussianState::vacuum()),
        StateDescriptor::Coherent { alpha1, alpha2 } => Ok(GaussianState::coherent(
            (f(alpha1.0), f(alpha1.1)),
            (f(alpha2.0), f(alpha2.1)),
        )),
        StateDescriptor::Squeezed { r1, phi1, r2, phi2 } => {
            GaussianState::squeezed(f(*r1), f(*phi1), f(*r2), f(*phi2))
        }
        StateDescriptor::TwoModeSqueezed { r } => GaussianState::two_mode_squeezed(f(*r)),
        StateDescriptor::Thermal { nbar1, nbar2 } => GaussianState::thermal(f(*nbar1), f(*nbar2)),
        StateDescriptor::Raw { mean, cov } => {
            let mut m = [T::zero(); 4];
            let mut c = [[T::zero(); 4]; 4];
            for i in 0..4 {
                m[i] = f(mean[i]);
                for j in 0..4 {
                    c[i][j] = f(cov[i][j]);
                }
            }
            GaussianState::from_parts(m, c)
        }
        StateDescriptor::GridFile { path } => {
            Err(Error::Grid(format!("grid state '{path}' must be loaded via the io layer")))
        }
    }
}
