//! Uniform access to quadrature moments, analytic or measured.
//!
//! Everything downstream (covariance extraction, uncertainty checks,
//! reconstruction) consumes a [`MomentSource`]. The analytic source reads
//! Gaussian moments exactly and reports zero error; the empirical source
//! reads plug-in sample moments and exposes `B` bootstrap replicas sharing
//! resample streams, so the error of any derived quantity is the spread of
//! that quantity across replicas.

use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::homodyne::{HomodyneDataset, BOOTSTRAP_B, MIN_RECORDS};
use crate::mode_network::Mode;
use crate::quantum_state::GaussianState;
use crate::tomography::{derived_mode_tomogram, optical_tomogram};
use crate::{Error, Result, MAX_ORDER};

/// A value with a one-sigma error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
}

impl Measured {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

/// Moment provider with optional bootstrap replicas.
pub trait MomentSource: Sync {
    /// Number of bootstrap replicas (0 for exact sources).
    fn replicas(&self) -> usize;

    /// Raw moment `<X_mode(theta)^order>`; `replica = None` is the point
    /// estimate, `Some(r)` the r-th resample.
    fn moment(&self, replica: Option<usize>, mode: Mode, theta: f64, order: u32) -> Result<f64>;

    /// Joint raw moment `<X1(theta1)^n X2(theta2)^m>` on the physical modes.
    fn joint_moment(
        &self,
        replica: Option<usize>,
        theta1: f64,
        theta2: f64,
        n: u32,
        m: u32,
    ) -> Result<f64>;
}

/// A source pinned to one replica (or to the point estimate).
pub struct MomentView<'a, S: ?Sized> {
    pub source: &'a S,
    pub replica: Option<usize>,
}

impl<S: MomentSource + ?Sized> MomentView<'_, S> {
    pub fn moment(&self, mode: Mode, theta: f64, order: u32) -> Result<f64> {
        self.source.moment(self.replica, mode, theta, order)
    }

    pub fn joint_moment(&self, theta1: f64, theta2: f64, n: u32, m: u32) -> Result<f64> {
        self.source.joint_moment(self.replica, theta1, theta2, n, m)
    }

    /// Central second moment of the tomogram slice.
    pub fn variance(&self, mode: Mode, theta: f64) -> Result<f64> {
        let m1 = self.moment(mode, theta, 1)?;
        Ok(self.moment(mode, theta, 2)? - m1 * m1)
    }
}

/// Evaluate a derived quantity on the point estimate and on every replica;
/// the replica spread is the standard error.
pub fn estimate<S, F>(source: &S, f: F) -> Result<Measured>
where
    S: MomentSource + ?Sized,
    F: Fn(&MomentView<S>) -> Result<f64>,
{
    let value = f(&MomentView { source, replica: None })?;
    let b = source.replicas();
    if b == 0 {
        return Ok(Measured { value, stderr: 0.0 });
    }
    let mut reps = Vec::with_capacity(b);
    for r in 0..b {
        reps.push(f(&MomentView { source, replica: Some(r) })?);
    }
    let mean = reps.iter().sum::<f64>() / b as f64;
    let var = reps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok(Measured { value, stderr: var.sqrt() })
}

/// Exact Gaussian moments straight from a state.
pub struct AnalyticSource {
    pub state: GaussianState<f64>,
}

impl AnalyticSource {
    pub fn new(state: GaussianState<f64>) -> Self {
        Self { state }
    }
}

impl MomentSource for AnalyticSource {
    fn replicas(&self) -> usize {
        0
    }

    fn moment(&self, _replica: Option<usize>, mode: Mode, theta: f64, order: u32) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::DegreeOverflow(order, MAX_ORDER));
        }
        let slice = derived_mode_tomogram(&self.state, mode, theta)?;
        Ok(slice.density.raw_moment(order))
    }

    fn joint_moment(
        &self,
        _replica: Option<usize>,
        theta1: f64,
        theta2: f64,
        n: u32,
        m: u32,
    ) -> Result<f64> {
        if n > MAX_ORDER || m > MAX_ORDER {
            return Err(Error::DegreeOverflow(n.max(m), MAX_ORDER));
        }
        let joint = optical_tomogram(&self.state, theta1, theta2)?;
        Ok(joint.raw_moment(n, m))
    }
}

const JOINT_MAX: usize = MAX_ORDER as usize;

/// Power means of one group: `table[k]` is the resampled mean of `x^(k+1)`.
type PowerTable = Vec<[f64; MAX_ORDER as usize]>;
/// Joint power means: `table[a][b]` is the mean of `x1^a x2^b`.
type JointTable = Vec<[[f64; JOINT_MAX + 1]; JOINT_MAX + 1]>;

/// Bootstrap-replica moments over a homodyne dataset.
pub struct EmpiricalSource<'a> {
    pub dataset: &'a HomodyneDataset,
    pub b: usize,
    group_tables: Vec<OnceLock<PowerTable>>,
    joint_tables: Vec<OnceLock<JointTable>>,
}

impl<'a> EmpiricalSource<'a> {
    pub fn new(dataset: &'a HomodyneDataset) -> Self {
        Self::with_replicas(dataset, BOOTSTRAP_B)
    }

    pub fn with_replicas(dataset: &'a HomodyneDataset, b: usize) -> Self {
        Self {
            dataset,
            b,
            group_tables: (0..dataset.groups.len()).map(|_| OnceLock::new()).collect(),
            joint_tables: (0..dataset.joint_groups.len()).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Fold theta into [0, pi); X(theta + pi) = -X(theta), so the second
    /// return is true when odd-order moments must flip sign.
    fn fold_theta(theta: f64) -> (f64, bool) {
        let mut r = theta.rem_euclid(std::f64::consts::PI);
        let mut k = ((theta - r) / std::f64::consts::PI).round() as i64;
        if std::f64::consts::PI - r <= crate::homodyne::THETA_TOL {
            r -= std::f64::consts::PI;
            k += 1;
        }
        (r, k.rem_euclid(2) == 1)
    }

    fn group_index(&self, mode: Mode, theta: f64) -> Result<usize> {
        self.dataset
            .groups
            .iter()
            .position(|g| g.mode == mode && (g.theta - theta).abs() <= crate::homodyne::THETA_TOL)
            .ok_or_else(|| {
                Error::MissingData(format!("no group for mode {} theta {theta}", mode.label()))
            })
    }

    fn group_table(&self, idx: usize) -> Result<&PowerTable> {
        let g = &self.dataset.groups[idx];
        if g.xs.len() < MIN_RECORDS {
            return Err(Error::TooFewRecords {
                mode: g.mode.label(),
                theta: g.theta,
                got: g.xs.len(),
                need: MIN_RECORDS,
            });
        }
        Ok(self.group_tables[idx].get_or_init(|| {
            let n = g.xs.len();
            let mut table = Vec::with_capacity(self.b);
            let mut rng = ChaCha12Rng::seed_from_u64(self.dataset.metadata.seed);
            rng.set_stream(2_000_000 + idx as u64);
            for _ in 0..self.b {
                let mut sums = [0.0f64; MAX_ORDER as usize];
                for _ in 0..n {
                    let x = g.xs[rng.gen_range(0..n)];
                    let mut p = 1.0;
                    for s in sums.iter_mut() {
                        p *= x;
                        *s += p;
                    }
                }
                for s in sums.iter_mut() {
                    *s /= n as f64;
                }
                table.push(sums);
            }
            table
        }))
    }

    fn joint_index(&self, theta1: f64, theta2: f64) -> Result<usize> {
        self.dataset
            .joint_groups
            .iter()
            .position(|g| {
                (g.theta1 - theta1).abs() <= crate::homodyne::THETA_TOL
                    && (g.theta2 - theta2).abs() <= crate::homodyne::THETA_TOL
            })
            .ok_or_else(|| {
                Error::MissingData(format!("no joint group for thetas ({theta1}, {theta2})"))
            })
    }

    fn joint_table(&self, idx: usize) -> Result<&JointTable> {
        let g = &self.dataset.joint_groups[idx];
        if g.pairs.len() < MIN_RECORDS {
            return Err(Error::TooFewRecords {
                mode: 0,
                theta: g.theta1,
                got: g.pairs.len(),
                need: MIN_RECORDS,
            });
        }
        Ok(self.joint_tables[idx].get_or_init(|| {
            let n = g.pairs.len();
            let mut table = Vec::with_capacity(self.b);
            let mut rng = ChaCha12Rng::seed_from_u64(self.dataset.metadata.seed);
            rng.set_stream(3_000_000 + idx as u64);
            for _ in 0..self.b {
                let mut sums = [[0.0f64; JOINT_MAX + 1]; JOINT_MAX + 1];
                for _ in 0..n {
                    let (x1, x2) = g.pairs[rng.gen_range(0..n)];
                    let mut p1 = 1.0;
                    for row in sums.iter_mut() {
                        let mut p12 = p1;
                        for cell in row.iter_mut() {
                            *cell += p12;
                            p12 *= x2;
                        }
                        p1 *= x1;
                    }
                }
                for row in sums.iter_mut() {
                    for cell in row.iter_mut() {
                        *cell /= n as f64;
                    }
                }
                table.push(sums);
            }
            table
        }))
    }
}

impl MomentSource for EmpiricalSource<'_> {
    fn replicas(&self) -> usize {
        self.b
    }

    fn moment(&self, replica: Option<usize>, mode: Mode, theta: f64, order: u32) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::DegreeOverflow(order, MAX_ORDER));
        }
        if order == 0 {
            return Ok(1.0);
        }
        let (theta, flipped) = Self::fold_theta(theta);
        let sign = if flipped && order % 2 == 1 { -1.0 } else { 1.0 };
        let idx = self.group_index(mode, theta)?;
        let raw = match replica {
            None => {
                let g = &self.dataset.groups[idx];
                if g.xs.len() < MIN_RECORDS {
                    return Err(Error::TooFewRecords {
                        mode: g.mode.label(),
                        theta: g.theta,
                        got: g.xs.len(),
                        need: MIN_RECORDS,
                    });
                }
                Ok(crate::homodyne::sample_power_mean(&g.xs, order))
            }
            Some(r) => {
                let table = self.group_table(idx)?;
                table
                    .get(r)
                    .map(|sums| sums[(order - 1) as usize])
                    .ok_or_else(|| Error::Internal(format!("replica {r} out of range")))
            }
        };
        Ok(sign * raw?)
    }

    fn joint_moment(
        &self,
        replica: Option<usize>,
        theta1: f64,
        theta2: f64,
        n: u32,
        m: u32,
    ) -> Result<f64> {
        if n as usize > JOINT_MAX || m as usize > JOINT_MAX {
            return Err(Error::DegreeOverflow(n.max(m), JOINT_MAX as u32));
        }
        let (theta1, flip1) = Self::fold_theta(theta1);
        let (theta2, flip2) = Self::fold_theta(theta2);
        let mut sign = 1.0;
        if flip1 && n % 2 == 1 {
            sign = -sign;
        }
        if flip2 && m % 2 == 1 {
            sign = -sign;
        }
        let idx = self.joint_index(theta1, theta2)?;
        let raw = match replica {
            None => {
                let g = &self.dataset.joint_groups[idx];
                if g.pairs.len() < MIN_RECORDS {
                    return Err(Error::TooFewRecords {
                        mode: 0,
                        theta: g.theta1,
                        got: g.pairs.len(),
                        need: MIN_RECORDS,
                    });
                }
                Ok(g.pairs
                    .iter()
                    .map(|&(a, b)| a.powi(n as i32) * b.powi(m as i32))
                    .sum::<f64>()
                    / g.pairs.len() as f64)
            }
            Some(r) => {
                let table = self.joint_table(idx)?;
                table
                    .get(r)
                    .map(|sums| sums[n as usize][m as usize])
                    .ok_or_else(|| Error::Internal(format!("replica {r} out of range")))
            }
        };
        Ok(sign * raw?)
    }
}
