//! From tomogram moments to operator moments.
//!
//! Covariance extraction uses the closed-form relations between slice
//! variances at theta in {0, pi/4, pi/2} and the quadrature dispersion
//! entries. Higher ordered moments `<P^m Q^k>` come from a linear solve:
//! for each degree n, `<X^n>(theta)` expands over the antistandard basis
//! with known coefficients, the `(0,n)` and `(n,0)` entries are pinned at
//! theta = 0 and pi/2, and the remaining n-1 complex unknowns are solved
//! from n-1 additional phases.
//!
//! Derived modes 3..6 carry a global 1/2 in their quadrature forms, so
//! their (Q, P) pair obeys `[Q, P] = i/2`. Ordered-moment tables for those
//! modes are built in the rescaled canonical variables `sqrt(2) X`, which
//! restores `[Q, P] = i` and makes vacuum values mode-independent.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mode_network::{canonical_scale, Mode};
use crate::source::{estimate, Measured, MomentSource, MomentView};
use crate::weyl::expand_quadrature_power;
use crate::{Error, Result, MAX_ORDER, SCHEMA_VERSION};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

/// Variances and covariance of one mode's quadrature pair, in the raw
/// (unscaled) slice units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModeCovariances {
    pub mode: Mode,
    pub sigma_qq: Measured,
    pub sigma_pp: Measured,
    pub sigma_qp: Measured,
}

fn slice_variance<S: MomentSource + ?Sized>(
    v: &MomentView<S>,
    mode: Mode,
    theta: f64,
) -> Result<f64> {
    v.variance(mode, theta)
}

/// sigma_QQ from theta = 0, sigma_PP from pi/2, and
/// sigma_QP = sigma_XX(pi/4) - (sigma_QQ + sigma_PP)/2.
pub fn variances_covariances<S: MomentSource>(src: &S, mode: Mode) -> Result<ModeCovariances> {
    let sigma_qq = estimate(src, |v| slice_variance(v, mode, 0.0))?;
    let sigma_pp = estimate(src, |v| slice_variance(v, mode, FRAC_PI_2))?;
    let sigma_qp = estimate(src, |v| {
        let qq = slice_variance(v, mode, 0.0)?;
        let pp = slice_variance(v, mode, FRAC_PI_2)?;
        Ok(slice_variance(v, mode, PI / 4.0)? - 0.5 * (qq + pp))
    })?;
    Ok(ModeCovariances { mode, sigma_qq, sigma_pp, sigma_qp })
}

/// The four cross-mode covariances.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrossCovariances {
    pub q1q2: Measured,
    pub p1p2: Measured,
    pub q1p2: Measured,
    pub q2p1: Measured,
}

fn cross_from_modes_35<S: MomentSource + ?Sized>(
    v: &MomentView<S>,
) -> Result<[f64; 4]> {
    let q1q1 = slice_variance(v, Mode::A, 0.0)?;
    let p1p1 = slice_variance(v, Mode::A, FRAC_PI_2)?;
    let q2q2 = slice_variance(v, Mode::B, 0.0)?;
    let p2p2 = slice_variance(v, Mode::B, FRAC_PI_2)?;
    let s3_0 = slice_variance(v, Mode::C, 0.0)?;
    let s3_90 = slice_variance(v, Mode::C, FRAC_PI_2)?;
    let s5_0 = slice_variance(v, Mode::E, 0.0)?;
    let s5_90 = slice_variance(v, Mode::E, FRAC_PI_2)?;
    Ok([
        2.0 * s3_0 - 0.5 * (q1q1 + q2q2),
        2.0 * s3_90 - 0.5 * (p1p1 + p2p2),
        -2.0 * s5_0 + 0.5 * (q1q1 + p2p2),
        2.0 * s5_90 - 0.5 * (q2q2 + p1p1),
    ])
}

fn cross_from_modes_46<S: MomentSource + ?Sized>(
    v: &MomentView<S>,
) -> Result<[f64; 4]> {
    let q1q1 = slice_variance(v, Mode::A, 0.0)?;
    let p1p1 = slice_variance(v, Mode::A, FRAC_PI_2)?;
    let q2q2 = slice_variance(v, Mode::B, 0.0)?;
    let p2p2 = slice_variance(v, Mode::B, FRAC_PI_2)?;
    let s4_0 = slice_variance(v, Mode::D, 0.0)?;
    let s4_90 = slice_variance(v, Mode::D, FRAC_PI_2)?;
    let s6_0 = slice_variance(v, Mode::F, 0.0)?;
    let s6_90 = slice_variance(v, Mode::F, FRAC_PI_2)?;
    Ok([
        0.5 * (q1q1 + q2q2) - 2.0 * s4_0,
        0.5 * (p1p1 + p2p2) - 2.0 * s4_90,
        2.0 * s6_0 - 0.5 * (q1q1 + p2p2),
        0.5 * (p1p1 + q2q2) - 2.0 * s6_90,
    ])
}

/// Primary route: modes 3 and 5 at theta in {0, pi/2}.
pub fn cross_covariances<S: MomentSource>(src: &S) -> Result<CrossCovariances> {
    let each = |i: usize| estimate(src, move |v| Ok(cross_from_modes_35(v)?[i]));
    Ok(CrossCovariances { q1q2: each(0)?, p1p2: each(1)?, q1p2: each(2)?, q2p1: each(3)? })
}

/// Redundancy report: the same covariances from modes 4 and 6.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossValidation {
    pub primary: CrossCovariances,
    pub redundant: CrossCovariances,
    /// per-component difference (primary - redundant) with bootstrap error
    pub difference: [Measured; 4],
    /// |difference| in units of its stderr (0 when stderr is 0 and the
    /// difference is below 1e-10)
    pub sigmas: [f64; 4],
    pub consistent: bool,
}

/// Discrepancies above this many combined standard errors are flagged.
pub const CROSS_VALIDATE_SIGMAS: f64 = 5.0;

pub fn cross_validate<S: MomentSource>(src: &S) -> Result<CrossValidation> {
    let primary = cross_covariances(src)?;
    let each = |i: usize| estimate(src, move |v| Ok(cross_from_modes_46(v)?[i]));
    let redundant =
        CrossCovariances { q1q2: each(0)?, p1p2: each(1)?, q1p2: each(2)?, q2p1: each(3)? };
    let mut difference = [Measured::exact(0.0); 4];
    let mut sigmas = [0.0f64; 4];
    for i in 0..4 {
        difference[i] = estimate(src, move |v| {
            Ok(cross_from_modes_35(v)?[i] - cross_from_modes_46(v)?[i])
        })?;
        sigmas[i] = if difference[i].stderr > 0.0 {
            difference[i].value.abs() / difference[i].stderr
        } else if difference[i].value.abs() < 1e-10 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let consistent = sigmas.iter().all(|&s| s <= CROSS_VALIDATE_SIGMAS);
    Ok(CrossValidation { primary, redundant, difference, sigmas, consistent })
}

/// Consistency of the derived-mode first moments with the physical means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanValidation {
    /// one check per (derived mode, theta in {0, pi/2}):
    /// <X_m(theta)> minus the same combination of physical means
    pub checks: Vec<MeanCheck>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanCheck {
    pub mode: Mode,
    pub theta: f64,
    pub difference: Measured,
    pub sigmas: f64,
}

/// Check every derived mode's mean against the linear combination of
/// `<Q1>, <P1>, <Q2>, <P2>` its quadrature form prescribes. A shifted or
/// miscalibrated detector shows up here even when covariances agree.
pub fn mean_validate<S: MomentSource>(src: &S) -> Result<MeanValidation> {
    let mut checks = Vec::new();
    for mode in [Mode::C, Mode::D, Mode::E, Mode::F] {
        for theta in [0.0, FRAC_PI_2] {
            let difference = estimate(src, move |v| {
                let f = crate::mode_network::quadrature_form::<f64>(mode, theta);
                let means = [
                    v.moment(Mode::A, 0.0, 1)?,
                    v.moment(Mode::A, FRAC_PI_2, 1)?,
                    v.moment(Mode::B, 0.0, 1)?,
                    v.moment(Mode::B, FRAC_PI_2, 1)?,
                ];
                let predicted: f64 =
                    f.coefficients.iter().zip(&means).map(|(c, m)| c * m).sum();
                Ok(v.moment(mode, theta, 1)? - predicted)
            })?;
            let sigmas = if difference.stderr > 0.0 {
                difference.value.abs() / difference.stderr
            } else if difference.value.abs() < 1e-10 {
                0.0
            } else {
                f64::INFINITY
            };
            checks.push(MeanCheck { mode, theta, difference, sigmas });
        }
    }
    let consistent = checks.iter().all(|c| c.sigmas <= CROSS_VALIDATE_SIGMAS);
    Ok(MeanValidation { checks, consistent })
}

/// Joint raw moment `<X1^n(theta1) X2^m(theta2)>`.
pub fn joint_moment<S: MomentSource>(
    src: &S,
    theta1: f64,
    theta2: f64,
    n: u32,
    m: u32,
) -> Result<Measured> {
    estimate(src, |v| v.joint_moment(theta1, theta2, n, m))
}

// --- ordered-moment tables ---

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

impl TableEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// One mode's ordered moments `M_{m,k} = <P^m Q^k>` in the mode's
/// canonical variables, in the measurement frame rotated by `frame`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderedMomentTable {
    pub mode: Mode,
    /// canonical rescale applied to raw slice moments (sqrt(2) for 3..6)
    pub scale: f64,
    /// frame offset: Q is X(frame), P is X(frame + pi/2)
    pub frame: f64,
    pub max_degree: u32,
    pub entries: BTreeMap<(u32, u32), TableEntry>,
}

impl OrderedMomentTable {
    pub fn value(&self, m: u32, k: u32) -> Result<Complex64> {
        self.entries
            .get(&(m, k))
            .map(TableEntry::value)
            .ok_or_else(|| Error::MissingData(format!("no table entry <P^{m} Q^{k}>")))
    }

    pub fn stderr(&self, m: u32, k: u32) -> f64 {
        self.entries.get(&(m, k)).map(|e| e.stderr).unwrap_or(0.0)
    }

    /// Recompose `<X^n>(theta)` (canonical units, relative to the frame)
    /// from the table.
    pub fn recompose(&self, theta: f64, n: u32) -> Result<Complex64> {
        let (nu, mu) = theta.sin_cos();
        let poly = expand_quadrature_power(mu, nu, n)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (mono, c) in poly.terms() {
            acc += Complex64::new(c.re, c.im) * self.value(mono.p, mono.q)?;
        }
        Ok(acc)
    }

    /// Flat JSON rows {"mode", "m", "k", "re", "im", "stderr"}.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(&(m, k), e)| {
                serde_json::json!({
                    "mode": self.mode.label(), "m": m, "k": k,
                    "re": e.re, "im": e.im, "stderr": e.stderr,
                })
            })
            .collect();
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode.label(),
            "scale": self.scale,
            "frame": self.frame,
            "max_degree": self.max_degree,
            "entries": rows,
        })
    }
}

/// Default solver phases for degree `n`: j pi / (n+1), j = 1..n-1, nudged
/// off pi/2 where the design row would vanish; degree 3 keeps the
/// classical pair (pi/3, 2pi/3).
pub fn default_phases(n: u32) -> Vec<f64> {
    if n == 3 {
        return vec![FRAC_PI_3, 2.0 * FRAC_PI_3];
    }
    (1..n)
        .map(|j| {
            let mut theta = j as f64 * PI / (n as f64 + 1.0);
            if (theta - FRAC_PI_2).abs() < 1e-9 {
                theta += PI / (4.0 * (n as f64 + 1.0));
            }
            theta
        })
        .collect()
}

/// Relative-determinant singularity threshold for the design matrix.
const SINGULAR_TOL: f64 = 1e-10;

struct DegreeSystem {
    /// LU-solvable design matrix B[j][k-1] = C(n,k) mu_j^k nu_j^(n-k)
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    phases: Vec<f64>,
}

fn degree_system(n: u32, phases: &[f64]) -> Result<DegreeSystem> {
    let rows = (n - 1) as usize;
    if phases.len() != rows {
        return Err(Error::Singular(format!(
            "degree {n} needs {rows} phases, got {}",
            phases.len()
        )));
    }
    let b = DMatrix::from_fn(rows, rows, |j, c| {
        let k = (c + 1) as u32;
        let (nu, mu) = phases[j].sin_cos();
        binom(n, k) * mu.powi(k as i32) * nu.powi((n - k) as i32)
    });
    // Hadamard-scaled determinant test
    let det = b.clone().determinant();
    let scale: f64 = (0..rows).map(|j| b.row(j).norm()).product();
    if scale == 0.0 || det.abs() < SINGULAR_TOL * scale {
        let svd = b.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        return Err(Error::Singular(format!(
            "degenerate phase set {:?} for degree {n}: relative determinant {:.3e}, condition number {:.3e}",
            phases, det.abs() / scale.max(f64::MIN_POSITIVE), cond
        )));
    }
    Ok(DegreeSystem { lu: b.lu(), phases: phases.to_vec() })
}

fn binom(n: u32, k: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Solve all degrees 1..=max_degree of a mode's table for one replica view.
fn solve_table_values<S: MomentSource + ?Sized>(
    view: &MomentView<S>,
    mode: Mode,
    max_degree: u32,
    frame: f64,
    systems: &[DegreeSystem],
) -> Result<BTreeMap<(u32, u32), Complex64>> {
    let s: f64 = canonical_scale::<f64>(mode);
    let mut table: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
    table.insert((0, 0), Complex64::new(1.0, 0.0));
    if max_degree == 0 {
        return Ok(table);
    }
    table.insert((0, 1), (s * view.moment(mode, frame, 1)?).into());
    table.insert((1, 0), (s * view.moment(mode, frame + FRAC_PI_2, 1)?).into());
    for n in 2..=max_degree {
        let sn = s.powi(n as i32);
        // pinned extremes
        table.insert((0, n), (sn * view.moment(mode, frame, n)?).into());
        table.insert((n, 0), (sn * view.moment(mode, frame + FRAC_PI_2, n)?).into());
        let sys = &systems[(n - 2) as usize];
        let rows = (n - 1) as usize;
        let mut rhs_re = DVector::zeros(rows);
        let mut rhs_im = DVector::zeros(rows);
        for (j, &theta) in sys.phases.iter().enumerate() {
            let measured = sn * view.moment(mode, frame + theta, n)?;
            let (nu, mu) = theta.sin_cos();
            let poly = expand_quadrature_power(mu, nu, n)?;
            let mut known = Complex64::new(0.0, 0.0);
            for (mono, c) in poly.terms() {
                let deg = mono.degree();
                if deg < n || mono.p == 0 || mono.q == 0 {
                    known += Complex64::new(c.re, c.im) * table[&(mono.p, mono.q)];
                }
            }
            let a = Complex64::new(measured, 0.0) - known;
            rhs_re[j] = a.re;
            rhs_im[j] = a.im;
        }
        let sol_re = sys
            .lu
            .solve(&rhs_re)
            .ok_or_else(|| Error::Singular("design matrix solve failed".into()))?;
        let sol_im = sys
            .lu
            .solve(&rhs_im)
            .ok_or_else(|| Error::Singular("design matrix solve failed".into()))?;
        for k in 1..n {
            table.insert(
                (n - k, k),
                Complex64::new(sol_re[(k - 1) as usize], sol_im[(k - 1) as usize]),
            );
        }
    }
    Ok(table)
}

/// Table values for a single replica view with default solver phases.
pub(crate) fn ordered_values_on_view<S: MomentSource + ?Sized>(
    view: &MomentView<S>,
    mode: Mode,
    max_degree: u32,
    frame: f64,
) -> Result<BTreeMap<(u32, u32), Complex64>> {
    let mut systems = Vec::new();
    for n in 2..=max_degree {
        systems.push(degree_system(n, &default_phases(n))?);
    }
    solve_table_values(view, mode, max_degree, frame, &systems)
}

/// Build a mode's ordered-moment table up to `max_degree`, with per-entry
/// bootstrap errors when the source carries replicas.
pub fn solve_ordered_moments<S: MomentSource>(
    src: &S,
    mode: Mode,
    max_degree: u32,
    frame: f64,
    phases: Option<&[Vec<f64>]>,
) -> Result<OrderedMomentTable> {
    if max_degree > MAX_ORDER {
        return Err(Error::DegreeOverflow(max_degree, MAX_ORDER));
    }
    let mut systems = Vec::new();
    for n in 2..=max_degree {
        let default;
        let ph: &[f64] = match phases {
            Some(all) => all
                .get((n - 2) as usize)
                .map(|v| v.as_slice())
                .ok_or_else(|| {
                    Error::MissingData(format!("no phase list for degree {n}"))
                })?,
            None => {
                default = default_phases(n);
                &default
            }
        };
        systems.push(degree_system(n, ph)?);
    }

    let point = solve_table_values(
        &MomentView { source: src, replica: None },
        mode,
        max_degree,
        frame,
        &systems,
    )?;
    let b = src.replicas();
    let mut sums: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    if b > 0 {
        let mut replica_tables = Vec::with_capacity(b);
        for r in 0..b {
            replica_tables.push(solve_table_values(
                &MomentView { source: src, replica: Some(r) },
                mode,
                max_degree,
                frame,
                &systems,
            )?);
        }
        for key in point.keys() {
            let vals: Vec<f64> = replica_tables.iter().map(|t| t[key].re).collect();
            let mean = vals.iter().sum::<f64>() / b as f64;
            let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1).max(1) as f64;
            sums.insert(*key, (mean, var.sqrt()));
        }
    }
    let entries = point
        .iter()
        .map(|(&key, v)| {
            let stderr = sums.get(&key).map(|&(_, sd)| sd).unwrap_or(0.0);
            (key, TableEntry { re: v.re, im: v.im, stderr })
        })
        .collect();
    Ok(OrderedMomentTable {
        mode,
        scale: canonical_scale::<f64>(mode),
        frame,
        max_degree,
        entries,
    })
}

// --- cross-mode tables ---

/// Ordered cross moments `<(P^a Q^b)_1 (P^c Q^d)_2>` of the physical modes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossMomentTable {
    pub max_degree1: u32,
    pub max_degree2: u32,
    pub entries: BTreeMap<(u32, u32, u32, u32), TableEntry>,
}

impl CrossMomentTable {
    pub fn value(&self, a: u32, b: u32, c: u32, d: u32) -> Result<Complex64> {
        self.entries
            .get(&(a, b, c, d))
            .map(TableEntry::value)
            .ok_or_else(|| {
                Error::MissingData(format!("no cross entry <P^{a}Q^{b} x P^{c}Q^{d}>"))
            })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(&(a, b, c, d), e)| {
                serde_json::json!({
                    "m1": a, "k1": b, "m2": c, "k2": d,
                    "re": e.re, "im": e.im, "stderr": e.stderr,
                })
            })
            .collect();
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "max_degree1": self.max_degree1,
            "max_degree2": self.max_degree2,
            "entries": rows,
        })
    }
}

/// Phases used by the cross solver for degree `n` in each mode. Degree 2
/// uses pi/4 so the standard paired-acquisition schedule suffices.
pub fn cross_default_phases(n: u32) -> Vec<f64> {
    if n == 2 {
        vec![PI / 4.0]
    } else {
        default_phases(n)
    }
}

/// Solve a complex-RHS degree-n system given measurements at the pins and
/// phases; `measure(theta)` returns the complex "moment" at that phase.
fn solve_degree_complex(
    n: u32,
    sys: &DegreeSystem,
    known: &dyn Fn(u32, u32) -> Complex64,
    measure: &mut dyn FnMut(f64) -> Result<Complex64>,
) -> Result<Vec<Complex64>> {
    let rows = (n - 1) as usize;
    let mut rhs_re = DVector::zeros(rows);
    let mut rhs_im = DVector::zeros(rows);
    for (j, &theta) in sys.phases.iter().enumerate() {
        let measured = measure(theta)?;
        let (nu, mu) = theta.sin_cos();
        let poly = expand_quadrature_power(mu, nu, n)?;
        let mut acc = measured;
        for (mono, c) in poly.terms() {
            if mono.degree() < n || mono.p == 0 || mono.q == 0 {
                acc -= Complex64::new(c.re, c.im) * known(mono.p, mono.q);
            }
        }
        rhs_re[j] = acc.re;
        rhs_im[j] = acc.im;
    }
    let sol_re = sys.lu.solve(&rhs_re).ok_or_else(|| Error::Singular("solve failed".into()))?;
    let sol_im = sys.lu.solve(&rhs_im).ok_or_else(|| Error::Singular("solve failed".into()))?;
    Ok((0..rows)
        .map(|i| Complex64::new(sol_re[i], sol_im[i]))
        .collect())
}

pub(crate) type CrossValues = BTreeMap<(u32, u32, u32, u32), Complex64>;

/// Cross-table values for a single replica view with default phases.
pub(crate) fn cross_values_on_view<S: MomentSource + ?Sized>(
    view: &MomentView<S>,
    deg1: u32,
    deg2: u32,
) -> Result<CrossValues> {
    let mut systems = Vec::new();
    for n in 2..=deg1.max(deg2) {
        systems.push(degree_system(n, &cross_default_phases(n))?);
    }
    solve_cross_values(view, deg1, deg2, &systems)
}

/// One replica of the two-stage cross solve.
fn solve_cross_values<S: MomentSource + ?Sized>(
    view: &MomentView<S>,
    deg1: u32,
    deg2: u32,
    systems: &[DegreeSystem],
) -> Result<CrossValues> {
    // stage 1: for each mode-2 phase/power (theta2, m), solve the mode-1
    // table of T_{a,b}(theta2, m) = <(P^a Q^b)_1 X2^m(theta2)>
    let mut stage2_thetas: Vec<f64> = vec![0.0, FRAC_PI_2];
    for n in 2..=deg2 {
        stage2_thetas.extend(cross_default_phases(n));
    }
    stage2_thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    // intermediate[(theta2 bits, m)] -> mode-1 table
    let mut intermediate: BTreeMap<(u64, u32), BTreeMap<(u32, u32), Complex64>> = BTreeMap::new();
    for &t2 in &stage2_thetas {
        for m in 0..=deg2 {
            let mut t: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
            t.insert((0, 0), view.joint_moment(0.0, t2, 0, m)?.into());
            if deg1 >= 1 {
                t.insert((0, 1), view.joint_moment(0.0, t2, 1, m)?.into());
                t.insert((1, 0), view.joint_moment(FRAC_PI_2, t2, 1, m)?.into());
            }
            for n in 2..=deg1 {
                t.insert((0, n), view.joint_moment(0.0, t2, n, m)?.into());
                t.insert((n, 0), view.joint_moment(FRAC_PI_2, t2, n, m)?.into());
                let sys = &systems[(n - 2) as usize];
                let known = |p: u32, q: u32| t[&(p, q)];
                let mut measure =
                    |theta: f64| Ok(Complex64::from(view.joint_moment(theta, t2, n, m)?));
                let sol = solve_degree_complex(n, sys, &known, &mut measure)?;
                for k in 1..n {
                    t.insert((n - k, k), sol[(k - 1) as usize]);
                }
            }
            intermediate.insert((t2.to_bits(), m), t);
        }
    }

    // stage 2: for each fixed (a, b), the map (theta2, m) -> T is a mode-2
    // moment problem with complex measurements
    let mut out: CrossValues = BTreeMap::new();
    let mode1_keys: Vec<(u32, u32)> = intermediate
        .values()
        .next()
        .map(|t| t.keys().cloned().collect())
        .unwrap_or_default();
    for &(a, b) in &mode1_keys {
        let grab = |theta2: f64, m: u32| intermediate[&(theta2.to_bits(), m)][&(a, b)];
        let mut t: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        t.insert((0, 0), grab(0.0, 0));
        if deg2 >= 1 {
            t.insert((0, 1), grab(0.0, 1));
            t.insert((1, 0), grab(FRAC_PI_2, 1));
        }
        for n in 2..=deg2 {
            t.insert((0, n), grab(0.0, n));
            t.insert((n, 0), grab(FRAC_PI_2, n));
            let sys = &systems[(n - 2) as usize];
            let known = |p: u32, q: u32| t[&(p, q)];
            let mut measure = |theta: f64| Ok(grab(theta, n));
            let sol = solve_degree_complex(n, sys, &known, &mut measure)?;
            for k in 1..n {
                t.insert((n - k, k), sol[(k - 1) as usize]);
            }
        }
        for (&(c, d), &v) in &t {
            out.insert((a, b, c, d), v);
        }
    }
    Ok(out)
}

/// Two-stage iterative solve of the full cross table up to the given
/// degrees per mode.
pub fn solve_cross_moments<S: MomentSource>(
    src: &S,
    deg1: u32,
    deg2: u32,
) -> Result<CrossMomentTable> {
    if deg1 > MAX_ORDER || deg2 > MAX_ORDER {
        return Err(Error::DegreeOverflow(deg1.max(deg2), MAX_ORDER));
    }
    let max_deg = deg1.max(deg2);
    let mut systems = Vec::new();
    for n in 2..=max_deg {
        systems.push(degree_system(n, &cross_default_phases(n))?);
    }
    let point = solve_cross_values(
        &MomentView { source: src, replica: None },
        deg1,
        deg2,
        &systems,
    )?;
    let b = src.replicas();
    let mut stderrs: BTreeMap<(u32, u32, u32, u32), f64> = BTreeMap::new();
    if b > 0 {
        let mut tables = Vec::with_capacity(b);
        for r in 0..b {
            tables.push(solve_cross_values(
                &MomentView { source: src, replica: Some(r) },
                deg1,
                deg2,
                &systems,
            )?);
        }
        for key in point.keys() {
            let vals: Vec<f64> = tables.iter().map(|t| t[key].re).collect();
            let mean = vals.iter().sum::<f64>() / b as f64;
            let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1).max(1) as f64;
            stderrs.insert(*key, var.sqrt());
        }
    }
    let entries = point
        .iter()
        .map(|(&key, v)| {
            (key, TableEntry { re: v.re, im: v.im, stderr: stderrs.get(&key).copied().unwrap_or(0.0) })
        })
        .collect();
    Ok(CrossMomentTable { max_degree1: deg1, max_degree2: deg2, entries })
}
