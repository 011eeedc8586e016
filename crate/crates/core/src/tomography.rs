//! Symplectic and optical tomograms.
//!
//! A tomogram slice is the genuine probability density of the homodyne
//! observable `X = mu Q + nu P` (per mode, or for a derived mode's linear
//! form). Gaussian states get exact Gaussian slices; grid Wigner functions
//! go through a numerical Radon transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mode_network::{quadrature_form_mu_nu, Mode};
use crate::quantum_state::{Axis, GaussianState, GridWigner};
use crate::scalar::Real;
use crate::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Quality metrics for numerically produced densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridQuality {
    /// Integral before renormalization; drift from 1 measures Radon error.
    pub raw_mass: f64,
    /// Most negative value before clamping.
    pub min_value: f64,
}

/// Threshold below which negative density values are treated as real
/// negativity rather than interpolation noise.
pub const NEGATIVITY_TOL: f64 = -1e-9;

/// One-dimensional density: exact Gaussian or sampled on a uniform axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Density1D<T> {
    Gaussian { mean: T, var: T },
    Grid { axis: Axis<T>, values: Vec<T>, quality: GridQuality },
}

impl<T: Real> Density1D<T> {
    pub fn mean(&self) -> T {
        match self {
            Self::Gaussian { mean, .. } => *mean,
            Self::Grid { .. } => self.raw_moment(1),
        }
    }

    pub fn variance(&self) -> T {
        match self {
            Self::Gaussian { var, .. } => *var,
            Self::Grid { .. } => {
                let m = self.raw_moment(1);
                self.raw_moment(2) - m * m
            }
        }
    }

    /// Raw moment `<X^n>` of the density.
    pub fn raw_moment(&self, n: u32) -> T {
        match self {
            Self::Gaussian { mean, var } => {
                let m = crate::gauss::raw_moments_1d(Real::to_f64(*mean), Real::to_f64(*var), n);
                T::from_f64(m[n as usize])
            }
            Self::Grid { axis, values, .. } => {
                let mut acc = T::zero();
                for (i, v) in values.iter().enumerate() {
                    acc += num_traits::Float::powi(axis.at(i), n as i32) * *v;
                }
                acc * axis.step
            }
        }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            Self::Gaussian { mean, var } => gaussian_pdf(x, *mean, *var),
            Self::Grid { axis, values, .. } => match axis.locate(x) {
                None => T::zero(),
                Some((i, f)) => values[i] * (T::one() - f) + values[i + 1] * f,
            },
        }
    }

    pub fn integral(&self) -> T {
        match self {
            Self::Gaussian { .. } => T::one(),
            Self::Grid { axis, values, .. } => {
                values.iter().fold(T::zero(), |a, &v| a + v) * axis.step
            }
        }
    }
}

fn gaussian_pdf<T: Real>(x: T, mean: T, var: T) -> T {
    let d = x - mean;
    let norm = T::one() / num_traits::Float::sqrt(T::from_f64(TWO_PI) * var);
    norm * num_traits::Float::exp(-d * d / (T::from_f64(2.0) * var))
}

/// One-mode (or derived-mode) tomogram at fixed phase parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TomogramSlice<T> {
    pub density: Density1D<T>,
    pub mode: Mode,
    pub mu: T,
    pub nu: T,
}

impl<T: Real> TomogramSlice<T> {
    pub fn theta(&self) -> T {
        num_traits::Float::atan2(self.nu, self.mu)
    }

    /// Two-column CSV (x, density). Analytic slices are sampled on a
    /// mean +/- 6 sigma axis with 513 points.
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,density")?;
        match &self.density {
            Density1D::Grid { axis, values, .. } => {
                for (i, v) in values.iter().enumerate() {
                    writeln!(w, "{},{}", axis.at(i).to_f64(), Real::to_f64(*v))?;
                }
            }
            Density1D::Gaussian { mean, var } => {
                let sd = num_traits::Float::sqrt(*var);
                let axis = Axis::new(*mean - T::from_f64(6.0) * sd, *mean + T::from_f64(6.0) * sd, 513);
                for i in 0..axis.len {
                    let x = axis.at(i);
                    writeln!(w, "{},{}", x.to_f64(), self.density.eval(x).to_f64())?;
                }
            }
        }
        Ok(())
    }
}

/// Two-dimensional density in (X1, X2).
#[derive(Debug, Clone, PartialEq)]
pub enum Density2D<T> {
    Gaussian { mean: [T; 2], cov: [[T; 2]; 2] },
    Grid { axes: [Axis<T>; 2], values: Vec<T>, quality: GridQuality },
}

/// Joint tomogram of the two physical modes at phases encoded by
/// (mu1, nu1, mu2, nu2).
#[derive(Debug, Clone, PartialEq)]
pub struct JointTomogram<T> {
    pub density: Density2D<T>,
    pub mu_nu: [T; 4],
}

impl<T: Real> JointTomogram<T> {
    pub fn eval(&self, x1: T, x2: T) -> T {
        match &self.density {
            Density2D::Gaussian { mean, cov } => {
                let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
                let d = [x1 - mean[0], x2 - mean[1]];
                let quad = (cov[1][1] * d[0] * d[0] - (cov[0][1] + cov[1][0]) * d[0] * d[1]
                    + cov[0][0] * d[1] * d[1])
                    / det;
                num_traits::Float::exp(-T::half() * quad)
                    / (T::from_f64(TWO_PI) * num_traits::Float::sqrt(det))
            }
            Density2D::Grid { axes, values, .. } => {
                let Some((i, fi)) = axes[0].locate(x1) else { return T::zero() };
                let Some((j, fj)) = axes[1].locate(x2) else { return T::zero() };
                let n1 = axes[1].len;
                let v = |a: usize, b: usize| values[a * n1 + b];
                let one = T::one();
                v(i, j) * (one - fi) * (one - fj)
                    + v(i + 1, j) * fi * (one - fj)
                    + v(i, j + 1) * (one - fi) * fj
                    + v(i + 1, j + 1) * fi * fj
            }
        }
    }

    /// Joint raw moment `<X1^n X2^m>`.
    pub fn raw_moment(&self, n: u32, m: u32) -> T {
        match &self.density {
            Density2D::Gaussian { mean, cov } => {
                let mut g = crate::gauss::GaussianMoments::new(
                    vec![mean[0].to_f64(), mean[1].to_f64()],
                    vec![
                        vec![cov[0][0].to_f64(), cov[0][1].to_f64()],
                        vec![cov[1][0].to_f64(), cov[1][1].to_f64()],
                    ],
                );
                T::from_f64(g.moment(&[n, m]))
            }
            Density2D::Grid { axes, values, .. } => {
                let n1 = axes[1].len;
                let mut acc = T::zero();
                for i in 0..axes[0].len {
                    let xn = num_traits::Float::powi(axes[0].at(i), n as i32);
                    for j in 0..n1 {
                        let xm = num_traits::Float::powi(axes[1].at(j), m as i32);
                        acc += values[i * n1 + j] * xn * xm;
                    }
                }
                acc * axes[0].step * axes[1].step
            }
        }
    }

    pub fn integral(&self) -> T {
        self.raw_moment(0, 0)
    }

    /// Integrate out the other mode's variable. The result does not depend
    /// on the integrated mode's phase.
    pub fn marginalize(&self, keep: u8) -> Result<TomogramSlice<T>> {
        let (k, other, mode) = match keep {
            1 => (0usize, 1usize, Mode::A),
            2 => (1, 0, Mode::B),
            _ => return Err(Error::InvalidMode(keep)),
        };
        let density = match &self.density {
            Density2D::Gaussian { mean, cov } => {
                Density1D::Gaussian { mean: mean[k], var: cov[k][k] }
            }
            Density2D::Grid { axes, values, quality } => {
                let nk = axes[k].len;
                let nother = axes[other].len;
                let mut out = vec![T::zero(); nk];
                for i in 0..nk {
                    let mut acc = T::zero();
                    for j in 0..nother {
                        let off = if k == 0 { i * nother + j } else { j * nk + i };
                        acc += values[off];
                    }
                    out[i] = acc * axes[other].step;
                }
                normalize_1d(axes[k], out, quality.min_value)?
            }
        };
        Ok(TomogramSlice {
            density,
            mode,
            mu: self.mu_nu[2 * k],
            nu: self.mu_nu[2 * k + 1],
        })
    }
}

fn check_form<T: Real>(mu: T, nu: T) -> Result<T> {
    let s = num_traits::Float::hypot(mu, nu);
    if s.to_f64() < 1e-12 {
        return Err(Error::DegenerateForm);
    }
    Ok(s)
}

/// Analytic symplectic tomogram of a Gaussian state.
pub fn symplectic_tomogram<T: Real>(
    state: &GaussianState<T>,
    mu1: T,
    nu1: T,
    mu2: T,
    nu2: T,
) -> Result<JointTomogram<T>> {
    check_form(mu1, nu1)?;
    check_form(mu2, nu2)?;
    let z = T::zero();
    let v1 = [mu1, nu1, z, z];
    let v2 = [z, z, mu2, nu2];
    let mean = [state.form_mean(&v1), state.form_mean(&v2)];
    let cov = [
        [state.form_cov(&v1, &v1), state.form_cov(&v1, &v2)],
        [state.form_cov(&v2, &v1), state.form_cov(&v2, &v2)],
    ];
    Ok(JointTomogram { density: Density2D::Gaussian { mean, cov }, mu_nu: [mu1, nu1, mu2, nu2] })
}

/// Optical tomogram: unit-circle specialization of the symplectic one.
pub fn optical_tomogram<T: Real>(
    state: &GaussianState<T>,
    theta1: T,
    theta2: T,
) -> Result<JointTomogram<T>> {
    let (n1, m1) = theta1.sin_cos();
    let (n2, m2) = theta2.sin_cos();
    symplectic_tomogram(state, m1, n1, m2, n2)
}

/// Analytic tomogram slice of one of the six measurement modes.
pub fn derived_mode_tomogram<T: Real>(
    state: &GaussianState<T>,
    mode: Mode,
    theta: T,
) -> Result<TomogramSlice<T>> {
    let (nu, mu) = theta.sin_cos();
    check_form(mu, nu)?;
    let form = quadrature_form_mu_nu(mode, mu, nu);
    Ok(TomogramSlice {
        density: Density1D::Gaussian {
            mean: state.form_mean(&form.coefficients),
            var: state.form_var(&form.coefficients),
        },
        mode,
        mu,
        nu,
    })
}

fn normalize_1d<T: Real>(axis: Axis<T>, mut values: Vec<T>, prior_min: f64) -> Result<Density1D<T>> {
    let mut min_value = prior_min;
    for v in values.iter_mut() {
        let f = v.to_f64();
        if f < min_value {
            min_value = f;
        }
        if f < 0.0 {
            *v = T::zero();
        }
    }
    let raw_mass = values.iter().fold(T::zero(), |a, &v| a + v).to_f64() * axis.step.to_f64();
    if raw_mass <= 0.0 {
        return Err(Error::Grid("tomogram has zero mass".into()));
    }
    let scale = T::from_f64(1.0 / raw_mass);
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(Density1D::Grid { axis, values, quality: GridQuality { raw_mass, min_value } })
}

/// Output axis covering the projections of every grid corner onto (mu, nu).
fn radon_axis<T: Real>(axes: &[Axis<T>], dirs: &[(T, T)], bins: usize) -> Axis<T> {
    let mut lo = T::zero();
    let mut hi = T::zero();
    for corner in 0..1usize << axes.len() {
        let mut x = T::zero();
        for (d, axis) in axes.iter().enumerate() {
            let c = if corner >> d & 1 == 1 { axis.max() } else { axis.min };
            let (cq, cp) = dirs[d / 2];
            x += c * if d % 2 == 0 { cq } else { cp };
        }
        if x < lo {
            lo = x;
        }
        if x > hi {
            hi = x;
        }
    }
    Axis::new(lo, hi, bins)
}

/// Catmull-Rom weights for fractional offset `f` over four neighbours.
fn catmull_rom<T: Real>(f: T) -> [T; 4] {
    let h = T::half();
    let c15 = T::from_f64(1.5);
    let c2 = T::from_f64(2.0);
    let c25 = T::from_f64(2.5);
    [
        ((-h * f + T::one()) * f - h) * f,
        (c15 * f - c25) * f * f + T::one(),
        ((-c15 * f + c2) * f + h) * f,
        (h * f - h) * f * f,
    ]
}

/// Bicubic sample of a (q, p) plane; 0 outside, bilinear near edges.
fn sample_plane<T: Real>(axes: &[Axis<T>; 2], values: &[T], q: T, p: T) -> T {
    let Some((iq, fq)) = axes[0].locate(q) else { return T::zero() };
    let Some((ip, fp)) = axes[1].locate(p) else { return T::zero() };
    let n1 = axes[1].len;
    let v = |a: usize, b: usize| values[a * n1 + b];
    if iq == 0 || iq >= axes[0].len - 2 || ip == 0 || ip >= n1 - 2 {
        let one = T::one();
        return v(iq, ip) * (one - fq) * (one - fp)
            + v(iq + 1, ip) * fq * (one - fp)
            + v(iq, ip + 1) * (one - fq) * fp
            + v(iq + 1, ip + 1) * fq * fp;
    }
    let wq = catmull_rom(fq);
    let wp = catmull_rom(fp);
    let mut acc = T::zero();
    for (a, wa) in wq.iter().enumerate() {
        let row = iq + a - 1;
        let mut line = T::zero();
        for (b, wb) in wp.iter().enumerate() {
            line += *wb * v(row, ip + b - 1);
        }
        acc += *wa * line;
    }
    acc
}

/// 2D Radon of a (q, p) grid along `X = mu q + nu p` for unit (mu, nu),
/// under the `dq dp / (2 pi)` measure. Rotate-and-accumulate: for each X
/// bin, integrate the interpolated plane along the perpendicular line.
fn radon_2d_unit<T: Real>(
    axes: &[Axis<T>; 2],
    values: &[T],
    mu: T,
    nu: T,
    out_axis: Axis<T>,
) -> Vec<T> {
    let span_q = axes[0].max() - axes[0].min;
    let span_p = axes[1].max() - axes[1].min;
    let t_half = num_traits::Float::hypot(span_q, span_p) * T::half();
    let n_t = 4 * axes[0].len.max(axes[1].len);
    let dt = t_half * T::from_f64(2.0 / n_t as f64);
    let inv2pi = T::from_f64(1.0 / TWO_PI);
    (0..out_axis.len)
        .map(|i| {
            let x = out_axis.at(i);
            let mut acc = T::zero();
            for j in 0..=n_t {
                let t = -t_half + dt * T::from_f64(j as f64);
                let v = sample_plane(axes, values, x * mu - t * nu, x * nu + t * mu);
                let w = if j == 0 || j == n_t { T::half() } else { T::one() };
                acc += v * w;
            }
            acc * dt * inv2pi
        })
        .collect()
}

/// Tomogram slice of a one-mode 2D Wigner grid at phase `theta`.
pub fn one_mode_tomogram_grid<T: Real>(
    grid: &GridWigner<T>,
    mode: Mode,
    theta: T,
) -> Result<TomogramSlice<T>> {
    let GridWigner::TwoD { axes, values } = grid else {
        return Err(Error::Grid("one-mode tomogram requires a 2D grid".into()));
    };
    if mode.is_derived() {
        return Err(Error::InvalidMode(mode.label()));
    }
    let (nu, mu) = theta.sin_cos();
    check_form(mu, nu)?;
    let bins = default_bins(axes[0].len.max(axes[1].len));
    let out_axis = radon_axis(axes.as_slice(), &[(mu, nu)], bins);
    let raw = radon_2d_unit(axes, values, mu, nu, out_axis);
    let density = normalize_1d(out_axis, raw, 0.0)?;
    Ok(TomogramSlice { density, mode, mu, nu })
}

/// Number of output bins used for grid tomograms.
fn default_bins(n: usize) -> usize {
    (2 * n + 1).clamp(65, 257)
}

/// Numerical symplectic tomogram of a 4D grid Wigner function; the two
/// delta constraints factorize, so this is two sequential 2D Radons.
pub fn symplectic_tomogram_grid<T: Real>(
    grid: &GridWigner<T>,
    mu1: T,
    nu1: T,
    mu2: T,
    nu2: T,
) -> Result<JointTomogram<T>> {
    let GridWigner::FourD { axes, values } = grid else {
        return Err(Error::Grid("joint tomogram requires a 4D grid".into()));
    };
    let s1 = check_form(mu1, nu1)?;
    let s2 = check_form(mu2, nu2)?;
    // homogeneity: w(X; mu, nu) = w(X/s; mu/s, nu/s) / s
    let (u1, w1) = (mu1 / s1, nu1 / s1);
    let (u2, w2) = (mu2 / s2, nu2 / s2);

    let n2 = axes[2].len;
    let n3 = axes[3].len;
    let strides = GridWigner::strides4(axes);
    let mode1_axes = [axes[0], axes[1]];
    let bins1 = default_bins(axes[0].len.max(axes[1].len));
    let out1 = radon_axis(&mode1_axes, &[(u1, w1)], bins1);

    // first Radon: mode 1 plane for each (q2, p2) grid point
    let intermediate: Vec<Vec<T>> = (0..n2 * n3)
        .into_par_iter()
        .map(|flat| {
            let (i2, i3) = (flat / n3, flat % n3);
            let mut plane = vec![T::zero(); axes[0].len * axes[1].len];
            for i0 in 0..axes[0].len {
                for i1 in 0..axes[1].len {
                    plane[i0 * axes[1].len + i1] =
                        values[i0 * strides[0] + i1 * strides[1] + i2 * strides[2] + i3];
                }
            }
            radon_2d_unit(&mode1_axes, &plane, u1, w1, out1)
        })
        .collect();

    // second Radon: mode 2 plane for each X1 bin
    let mode2_axes = [axes[2], axes[3]];
    let bins2 = default_bins(axes[2].len.max(axes[3].len));
    let out2 = radon_axis(&mode2_axes, &[(u2, w2)], bins2);
    let rows: Vec<Vec<T>> = (0..out1.len)
        .into_par_iter()
        .map(|i| {
            let mut plane = vec![T::zero(); n2 * n3];
            for (flat, col) in intermediate.iter().enumerate() {
                plane[flat] = col[i];
            }
            radon_2d_unit(&mode2_axes, &plane, u2, w2, out2)
        })
        .collect();

    let mut out_values = Vec::with_capacity(out1.len * out2.len);
    for row in rows {
        out_values.extend(row);
    }
    // undo the unit-circle rescaling: X axes stretch by s, density by 1/s
    let axes_out = [
        Axis { min: out1.min * s1, step: out1.step * s1, len: out1.len },
        Axis { min: out2.min * s2, step: out2.step * s2, len: out2.len },
    ];
    for v in out_values.iter_mut() {
        *v /= s1 * s2;
    }
    finish_grid_joint(axes_out, out_values, [mu1, nu1, mu2, nu2])
}

pub fn optical_tomogram_grid<T: Real>(
    grid: &GridWigner<T>,
    theta1: T,
    theta2: T,
) -> Result<JointTomogram<T>> {
    let (n1, m1) = theta1.sin_cos();
    let (n2, m2) = theta2.sin_cos();
    symplectic_tomogram_grid(grid, m1, n1, m2, n2)
}

fn finish_grid_joint<T: Real>(
    axes: [Axis<T>; 2],
    mut values: Vec<T>,
    mu_nu: [T; 4],
) -> Result<JointTomogram<T>> {
    let mut min_value = 0.0f64;
    for v in values.iter_mut() {
        let f = v.to_f64();
        if f < min_value {
            min_value = f;
        }
        if f < 0.0 {
            *v = T::zero();
        }
    }
    let raw_mass =
        values.iter().fold(T::zero(), |a, &v| a + v).to_f64() * axes[0].step.to_f64() * axes[1].step.to_f64();
    if raw_mass <= 0.0 {
        return Err(Error::Grid("tomogram has zero mass".into()));
    }
    let scale = T::from_f64(1.0 / raw_mass);
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(JointTomogram {
        density: Density2D::Grid { axes, values, quality: GridQuality { raw_mass, min_value } },
        mu_nu,
    })
}

/// Numerical slice of mode `k` from a 4D grid by linear splatting of
/// `X = v . (q1, p1, q2, p2)` onto the output axis.
pub fn derived_mode_tomogram_grid<T: Real>(
    grid: &GridWigner<T>,
    mode: Mode,
    theta: T,
) -> Result<TomogramSlice<T>> {
    let GridWigner::FourD { axes, values } = grid else {
        return Err(Error::Grid("derived-mode tomogram requires a 4D grid".into()));
    };
    let (nu, mu) = theta.sin_cos();
    check_form(mu, nu)?;
    let v = quadrature_form_mu_nu(mode, mu, nu).coefficients;
    let dirs = [(v[0], v[1]), (v[2], v[3])];
    let bins = default_bins(axes.iter().map(|a| a.len).max().unwrap());
    let out_axis = radon_axis(axes.as_slice(), &dirs, bins);

    let cell = axes.iter().map(|a| a.step).fold(T::one(), |a, b| a * b)
        / T::from_f64(TWO_PI * TWO_PI);
    let strides = GridWigner::strides4(axes);
    let mut out = vec![T::zero(); out_axis.len];
    for i0 in 0..axes[0].len {
        let x0 = axes[0].at(i0) * v[0];
        for i1 in 0..axes[1].len {
            let x1 = x0 + axes[1].at(i1) * v[1];
            for i2 in 0..axes[2].len {
                let x2 = x1 + axes[2].at(i2) * v[2];
                for i3 in 0..axes[3].len {
                    let x = x2 + axes[3].at(i3) * v[3];
                    let w = values[i0 * strides[0] + i1 * strides[1] + i2 * strides[2] + i3];
                    if let Some((i, f)) = out_axis.locate(x) {
                        out[i] += w * (T::one() - f);
                        out[i + 1] += w * f;
                    }
                }
            }
        }
    }
    let inv_step = T::one() / out_axis.step;
    for o in out.iter_mut() {
        *o *= cell * inv_step;
    }
    let density = normalize_1d(out_axis, out, 0.0)?;
    Ok(TomogramSlice { density, mode, mu, nu })
}
