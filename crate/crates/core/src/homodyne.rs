//! Synthetic homodyne acquisition and dataset handling.
//!
//! A dataset is a set of outcome groups keyed by (mode, theta), plus
//! optional paired two-channel groups keyed by (theta1, theta2) that feed
//! joint-moment estimation. Records persist as JSONL, one record per line,
//! with a JSON metadata side-file carrying seed and provenance.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::mode_network::Mode;
use crate::quantum_state::{GaussianState, StateDescriptor};
use crate::source::Measured;
use crate::tomography::{
    derived_mode_tomogram, optical_tomogram, Density1D, Density2D, JointTomogram, TomogramSlice,
};
use crate::{Error, Result, SCHEMA_VERSION};

/// Matching tolerance for theta group keys.
pub const THETA_TOL: f64 = 1e-9;

/// Minimum group size for moment estimation.
pub const MIN_RECORDS: usize = 30;

/// Default bootstrap resample count.
pub const BOOTSTRAP_B: usize = 200;

/// Additive Gaussian readout noise on outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma: 0.0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::UnphysicalState(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Single homodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord {
    pub mode: Mode,
    pub theta: f64,
    pub x: f64,
}

/// Simultaneous two-channel outcome on the physical modes 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub theta1: f64,
    pub x1: f64,
    pub theta2: f64,
    pub x2: f64,
}

/// One JSONL line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordLine {
    Single(HomodyneRecord),
    Joint(JointRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub mode: Mode,
    pub theta: f64,
    pub xs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointGroup {
    pub theta1: f64,
    pub theta2: f64,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub seed: u64,
    pub state: Option<StateDescriptor>,
    pub noise: NoiseModel,
    pub schedule: Option<String>,
}

impl Default for DatasetMetadata {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            state: None,
            noise: NoiseModel::default(),
            schedule: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HomodyneDataset {
    pub groups: Vec<Group>,
    pub joint_groups: Vec<JointGroup>,
    pub metadata: DatasetMetadata,
}

fn theta_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= THETA_TOL
}

impl HomodyneDataset {
    pub fn new(metadata: DatasetMetadata) -> Self {
        Self { groups: Vec::new(), joint_groups: Vec::new(), metadata }
    }

    pub fn push(&mut self, rec: HomodyneRecord) {
        if let Some(g) = self
            .groups
            .iter_mut()
            .find(|g| g.mode == rec.mode && theta_eq(g.theta, rec.theta))
        {
            g.xs.push(rec.x);
        } else {
            self.groups.push(Group { mode: rec.mode, theta: rec.theta, xs: vec![rec.x] });
        }
    }

    pub fn push_joint(&mut self, rec: JointRecord) {
        if let Some(g) = self
            .joint_groups
            .iter_mut()
            .find(|g| theta_eq(g.theta1, rec.theta1) && theta_eq(g.theta2, rec.theta2))
        {
            g.pairs.push((rec.x1, rec.x2));
        } else {
            self.joint_groups.push(JointGroup {
                theta1: rec.theta1,
                theta2: rec.theta2,
                pairs: vec![(rec.x1, rec.x2)],
            });
        }
    }

    pub fn group(&self, mode: Mode, theta: f64) -> Result<&Group> {
        self.groups
            .iter()
            .find(|g| g.mode == mode && theta_eq(g.theta, theta))
            .ok_or_else(|| {
                Error::MissingData(format!("no group for mode {} theta {theta}", mode.label()))
            })
    }

    pub fn joint_group(&self, theta1: f64, theta2: f64) -> Result<&JointGroup> {
        self.joint_groups
            .iter()
            .find(|g| theta_eq(g.theta1, theta1) && theta_eq(g.theta2, theta2))
            .ok_or_else(|| {
                Error::MissingData(format!("no joint group for thetas ({theta1}, {theta2})"))
            })
    }

    pub fn record_count(&self) -> usize {
        self.groups.iter().map(|g| g.xs.len()).sum::<usize>()
            + self.joint_groups.iter().map(|g| g.pairs.len()).sum::<usize>()
    }

    /// Plug-in sample moment `<X^n>` with bootstrap standard error.
    pub fn empirical_moment(&self, mode: Mode, theta: f64, order: u32) -> Result<Measured> {
        let g = self.group(mode, theta)?;
        if g.xs.len() < MIN_RECORDS {
            return Err(Error::TooFewRecords {
                mode: mode.label(),
                theta,
                got: g.xs.len(),
                need: MIN_RECORDS,
            });
        }
        let value = sample_power_mean(&g.xs, order);
        let seed = mix_seed(self.metadata.seed, mode.label() as u64, theta, order);
        let stderr = bootstrap_stderr(&g.xs, order, BOOTSTRAP_B, seed);
        Ok(Measured { value, stderr })
    }

    /// Joint sample moment `<X1^n X2^m>` with bootstrap standard error.
    pub fn empirical_joint_moment(
        &self,
        theta1: f64,
        theta2: f64,
        n: u32,
        m: u32,
    ) -> Result<Measured> {
        let g = self.joint_group(theta1, theta2)?;
        if g.pairs.len() < MIN_RECORDS {
            return Err(Error::TooFewRecords {
                mode: 0,
                theta: theta1,
                got: g.pairs.len(),
                need: MIN_RECORDS,
            });
        }
        let f = |pairs: &[(f64, f64)]| {
            pairs
                .iter()
                .map(|&(a, b)| a.powi(n as i32) * b.powi(m as i32))
                .sum::<f64>()
                / pairs.len() as f64
        };
        let value = f(&g.pairs);
        let seed = mix_seed(self.metadata.seed, 100 + n as u64, theta1 + 3.0 * theta2, m);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut replicas = Vec::with_capacity(BOOTSTRAP_B);
        let mut buf = vec![(0.0, 0.0); g.pairs.len()];
        for _ in 0..BOOTSTRAP_B {
            for slot in buf.iter_mut() {
                *slot = g.pairs[rng.gen_range(0..g.pairs.len())];
            }
            replicas.push(f(&buf));
        }
        Ok(Measured { value, stderr: spread(&replicas) })
    }

    // --- persistence ---

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for g in &self.groups {
            for &x in &g.xs {
                let line = RecordLine::Single(HomodyneRecord { mode: g.mode, theta: g.theta, x });
                serde_json::to_writer(&mut w, &line)?;
                writeln!(w)?;
            }
        }
        for g in &self.joint_groups {
            for &(x1, x2) in &g.pairs {
                let line = RecordLine::Joint(JointRecord {
                    theta1: g.theta1,
                    x1,
                    theta2: g.theta2,
                    x2,
                });
                serde_json::to_writer(&mut w, &line)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R, metadata: DatasetMetadata) -> Result<Self> {
        let mut ds = Self::new(metadata);
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RecordLine>(&line)? {
                RecordLine::Single(rec) => ds.push(rec),
                RecordLine::Joint(rec) => ds.push_joint(rec),
            }
        }
        Ok(ds)
    }

    /// Write `<stem>.jsonl` and `<stem>.meta.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let mut data = std::io::BufWriter::new(std::fs::File::create(
            stem.with_extension("jsonl"),
        )?);
        self.write_jsonl(&mut data)?;
        data.flush()?;
        let meta = std::fs::File::create(stem.with_extension("meta.json"))?;
        serde_json::to_writer_pretty(meta, &self.metadata)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let meta_file = std::fs::File::open(stem.with_extension("meta.json"))?;
        let metadata: DatasetMetadata = serde_json::from_reader(meta_file)?;
        if metadata.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: metadata.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let data = std::io::BufReader::new(std::fs::File::open(stem.with_extension("jsonl"))?);
        Self::read_jsonl(data, metadata)
    }
}

pub fn sample_power_mean(xs: &[f64], order: u32) -> f64 {
    xs.iter().map(|x| x.powi(order as i32)).sum::<f64>() / xs.len() as f64
}

fn spread(replicas: &[f64]) -> f64 {
    let mean = replicas.iter().sum::<f64>() / replicas.len() as f64;
    let var = replicas.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
        / (replicas.len() - 1) as f64;
    var.sqrt()
}

fn bootstrap_stderr(xs: &[f64], order: u32, b: usize, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut replicas = Vec::with_capacity(b);
    for _ in 0..b {
        let mut acc = 0.0;
        for _ in 0..xs.len() {
            acc += xs[rng.gen_range(0..xs.len())].powi(order as i32);
        }
        replicas.push(acc / xs.len() as f64);
    }
    spread(&replicas)
}

fn mix_seed(seed: u64, tag: u64, theta: f64, order: u32) -> u64 {
    // splitmix-style mixing of the group key into the dataset seed
    let mut z = seed
        ^ tag.wrapping_mul(0x9e3779b97f4a7c15)
        ^ theta.to_bits().wrapping_mul(0xbf58476d1ce4e5b9)
        ^ (order as u64).wrapping_mul(0x94d049bb133111eb);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

// --- sampling ---

/// Draw `n` i.i.d. outcomes from a tomogram slice.
pub fn sample_slice(
    slice: &TomogramSlice<f64>,
    n: usize,
    rng: &mut impl Rng,
    noise: &NoiseModel,
) -> Result<Vec<f64>> {
    noise.validate()?;
    if n == 0 {
        return Err(Error::MissingData("sample count must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    match &slice.density {
        Density1D::Gaussian { mean, var } => {
            let normal = Normal::new(*mean, var.sqrt())
                .map_err(|e| Error::Internal(format!("normal: {e}")))?;
            for _ in 0..n {
                out.push(normal.sample(rng));
            }
        }
        Density1D::Grid { axis, values, .. } => {
            // inverse CDF over per-bin masses
            let masses: Vec<f64> = values.iter().map(|v| v * axis.step).collect();
            let total: f64 = masses.iter().sum();
            if total <= 0.0 {
                return Err(Error::Grid("cannot sample a zero-mass slice".into()));
            }
            let mut cdf = Vec::with_capacity(masses.len());
            let mut acc = 0.0;
            for m in &masses {
                acc += m / total;
                cdf.push(acc);
            }
            for _ in 0..n {
                let u: f64 = rng.gen();
                let i = cdf.partition_point(|&c| c < u).min(values.len() - 1);
                let lo = if i == 0 { 0.0 } else { cdf[i - 1] };
                let frac = if cdf[i] > lo { (u - lo) / (cdf[i] - lo) } else { 0.5 };
                out.push(axis.at(i) + (frac - 0.5) * axis.step);
            }
        }
    }
    if noise.sigma > 0.0 {
        let nse = Normal::new(0.0, noise.sigma).unwrap();
        for x in out.iter_mut() {
            *x += nse.sample(rng);
        }
    }
    Ok(out)
}

/// Draw `n` paired outcomes from an analytic joint tomogram.
pub fn sample_joint(
    joint: &JointTomogram<f64>,
    n: usize,
    rng: &mut impl Rng,
    noise: &NoiseModel,
) -> Result<Vec<(f64, f64)>> {
    noise.validate()?;
    let Density2D::Gaussian { mean, cov } = &joint.density else {
        return Err(Error::Grid("joint sampling needs an analytic tomogram".into()));
    };
    // Cholesky of the 2x2 covariance
    let l11 = cov[0][0].sqrt();
    let l21 = cov[0][1] / l11;
    let rest = cov[1][1] - l21 * l21;
    if !(l11 > 0.0) || rest <= 0.0 {
        return Err(Error::Singular("joint covariance is not positive definite".into()));
    }
    let l22 = rest.sqrt();
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = std.sample(rng);
        let z2: f64 = std.sample(rng);
        let mut x1 = mean[0] + l11 * z1;
        let mut x2 = mean[1] + l21 * z1 + l22 * z2;
        if noise.sigma > 0.0 {
            let nse = Normal::new(0.0, noise.sigma).unwrap();
            x1 += nse.sample(rng);
            x2 += nse.sample(rng);
        }
        out.push((x1, x2));
    }
    Ok(out)
}

// --- schedules ---

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub mode: Mode,
    pub theta: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointEntry {
    pub theta1: f64,
    pub theta2: f64,
    pub n: usize,
}

/// Deterministic acquisition plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub name: String,
    pub entries: Vec<ScheduleEntry>,
    pub joint_entries: Vec<JointEntry>,
}

const BASE_THETAS: [f64; 3] = [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2];
const CUBIC_THETAS: [f64; 2] = [
    std::f64::consts::FRAC_PI_3,
    2.0 * std::f64::consts::FRAC_PI_3,
];
/// Degree-4 solver phases j pi / 5, j = 1..3.
const QUARTIC_THETAS: [f64; 3] = [
    std::f64::consts::PI / 5.0,
    2.0 * std::f64::consts::PI / 5.0,
    3.0 * std::f64::consts::PI / 5.0,
];

impl PhaseSchedule {
    fn push_unique(entries: &mut Vec<ScheduleEntry>, mode: Mode, theta: f64, n: usize) {
        if !entries
            .iter()
            .any(|e| e.mode == mode && theta_eq(e.theta, theta))
        {
            entries.push(ScheduleEntry { mode, theta, n });
        }
    }

    /// Modes {1,2,3,5} at theta in {0, pi/4, pi/2}: everything the
    /// covariance extraction needs.
    pub fn uncertainty(n: usize) -> Self {
        let mut entries = Vec::new();
        for mode in [Mode::A, Mode::B, Mode::C, Mode::E] {
            for theta in BASE_THETAS {
                Self::push_unique(&mut entries, mode, theta, n);
            }
        }
        Self { name: "uncertainty".into(), entries, joint_entries: Vec::new() }
    }

    /// Base plus third-order solver phases pi/3, 2pi/3 on all six modes.
    pub fn cubic(n: usize) -> Self {
        let mut s = Self::uncertainty(n);
        for mode in Mode::ALL {
            for theta in BASE_THETAS.iter().chain(&CUBIC_THETAS) {
                Self::push_unique(&mut s.entries, mode, *theta, n);
            }
        }
        s.name = "cubic".into();
        s
    }

    /// Physical modes at every multiple of pi/8: enough slices for an
    /// F(theta) sweep over [0, pi).
    pub fn sweep(n: usize) -> Self {
        let mut entries = Vec::new();
        for mode in [Mode::A, Mode::B] {
            for k in 0..8 {
                Self::push_unique(&mut entries, mode, k as f64 * std::f64::consts::PI / 8.0, n);
            }
        }
        Self { name: "sweep".into(), entries, joint_entries: Vec::new() }
    }

    /// Adds modes 4 and 6 for cross-validation of the covariances.
    pub fn redundant(n: usize) -> Self {
        let mut s = Self::uncertainty(n);
        for mode in [Mode::D, Mode::F] {
            for theta in BASE_THETAS {
                Self::push_unique(&mut s.entries, mode, theta, n);
            }
        }
        s.name = "redundant".into();
        s
    }

    /// Fourth-order phases on the physical modes plus paired acquisition
    /// for photon cross-correlations.
    pub fn photon(n: usize) -> Self {
        let mut entries = Vec::new();
        for mode in [Mode::A, Mode::B] {
            // degree-4 tables are solved through degree 3, so the cubic
            // phases ride along
            for theta in BASE_THETAS.iter().chain(&CUBIC_THETAS).chain(&QUARTIC_THETAS) {
                Self::push_unique(&mut entries, mode, *theta, n);
            }
        }
        let mut joint_entries = Vec::new();
        for t1 in BASE_THETAS {
            for t2 in BASE_THETAS {
                joint_entries.push(JointEntry { theta1: t1, theta2: t2, n });
            }
        }
        Self { name: "photon".into(), entries, joint_entries }
    }

    /// Union of every schedule.
    pub fn full(n: usize) -> Self {
        let mut s = Self::cubic(n);
        for other in [Self::redundant(n), Self::photon(n), Self::sweep(n)] {
            for e in other.entries {
                Self::push_unique(&mut s.entries, e.mode, e.theta, e.n);
            }
            for j in other.joint_entries {
                if !s
                    .joint_entries
                    .iter()
                    .any(|e| theta_eq(e.theta1, j.theta1) && theta_eq(e.theta2, j.theta2))
                {
                    s.joint_entries.push(j);
                }
            }
        }
        s.name = "full".into();
        s
    }

    pub fn by_name(name: &str, n: usize) -> Result<Self> {
        match name {
            "uncertainty" => Ok(Self::uncertainty(n)),
            "cubic" => Ok(Self::cubic(n)),
            "redundant" => Ok(Self::redundant(n)),
            "photon" => Ok(Self::photon(n)),
            "sweep" => Ok(Self::sweep(n)),
            "full" => Ok(Self::full(n)),
            _ => Err(Error::MissingData(format!("unknown schedule '{name}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() && self.joint_entries.is_empty() {
            return Err(Error::MissingData("empty phase schedule".into()));
        }
        Ok(())
    }
}

/// Run the synthetic experiment: sample every schedule entry from the
/// state's analytic tomograms. Deterministic per (seed, schedule); each
/// group gets an independent RNG stream.
pub fn sample_state(
    state: &GaussianState<f64>,
    descriptor: Option<StateDescriptor>,
    schedule: &PhaseSchedule,
    seed: u64,
    noise: &NoiseModel,
) -> Result<HomodyneDataset> {
    schedule.validate()?;
    noise.validate()?;
    let mut ds = HomodyneDataset::new(DatasetMetadata {
        schema_version: SCHEMA_VERSION,
        seed,
        state: descriptor,
        noise: *noise,
        schedule: Some(schedule.name.clone()),
    });
    for (stream, e) in schedule.entries.iter().enumerate() {
        let slice = derived_mode_tomogram(state, e.mode, e.theta)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        let xs = sample_slice(&slice, e.n, &mut rng, noise)?;
        ds.groups.push(Group { mode: e.mode, theta: e.theta, xs });
    }
    for (k, e) in schedule.joint_entries.iter().enumerate() {
        let joint = optical_tomogram(state, e.theta1, e.theta2)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(1_000_000 + k as u64);
        let pairs = sample_joint(&joint, e.n, &mut rng, noise)?;
        ds.joint_groups.push(JointGroup { theta1: e.theta1, theta2: e.theta2, pairs });
    }
    Ok(ds)
}
