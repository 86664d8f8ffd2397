//! Personalized-model driver grouping.
//!
//! Drivers are encoded as four-dimensional trait vectors (gender, age,
//! experience, style), divided per dimension by the sample range, and
//! partitioned with Lloyd's k-means under squared Euclidean distance,
//! followed by single-point (Hartigan) moves that escape Lloyd fixed points. The
//! cluster count is chosen by silhouette; SSE and average deviation are
//! reported alongside for elbow inspection. PCA projects the vectors to two
//! dimensions for plotting.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DIMS: usize = 4;

/// Encoded trait vector `(gender, age, experience, style)`.
pub type FeatureVector = [f64; DIMS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingStyle {
    Conservative,
    Moderate,
    Aggressive,
}

impl FromStr for Gender {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            _ => Err(Error::Data(format!("unknown gender {s:?}"))),
        }
    }
}

impl FromStr for DrivingStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aggressive" => Ok(DrivingStyle::Aggressive),
            "moderate" => Ok(DrivingStyle::Moderate),
            "conservative" => Ok(DrivingStyle::Conservative),
            _ => Err(Error::Data(format!("unknown driving style {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub driver_id: String,
    pub gender: Gender,
    /// Years.
    pub age: f64,
    /// Years of driving experience.
    pub experience: f64,
    pub style: DrivingStyle,
}

impl DriverProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.age.is_finite() && self.age >= 16.0) {
            return Err(Error::Data(format!("driver {}: age {} below 16", self.driver_id, self.age)));
        }
        if !(self.experience.is_finite() && self.experience >= 0.0 && self.experience <= self.age - 15.0) {
            return Err(Error::Data(format!(
                "driver {}: experience {} must lie in [0, age - 15]",
                self.driver_id, self.experience
            )));
        }
        Ok(())
    }

    /// Numeric encoding: male = 1, female = 0; aggressive = 2, moderate = 1,
    /// conservative = 0.
    pub fn encode(&self) -> FeatureVector {
        let gender = match self.gender {
            Gender::Male => 1.0,
            Gender::Female => 0.0,
        };
        let style = match self.style {
            DrivingStyle::Aggressive => 2.0,
            DrivingStyle::Moderate => 1.0,
            DrivingStyle::Conservative => 0.0,
        };
        [gender, self.age, self.experience, style]
    }
}

/// Per-dimension range divisors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub divisors: FeatureVector,
}

impl Normalizer {
    pub fn fit(vectors: &[FeatureVector]) -> Self {
        let mut divisors = [1.0; DIMS];
        for (j, d) in divisors.iter_mut().enumerate() {
            let (lo, hi) = vectors
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[j]), hi.max(v[j])));
            let range = hi - lo;
            // a constant dimension keeps its raw values
            *d = if range > 0.0 { range } else { 1.0 };
        }
        Normalizer { divisors }
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        std::array::from_fn(|j| v[j] / self.divisors[j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRoster {
    pub ids: Vec<String>,
    pub vectors: Vec<FeatureVector>,
    pub normalizer: Normalizer,
    /// Drivers dropped as outliers.
    pub removed: Vec<String>,
}

/// Default outlier threshold in sample standard deviations.
pub const DEFAULT_OUTLIER_SIGMA: f64 = 4.0;

/// Encodes profiles, drops per-dimension outliers beyond `outlier_sigma`
/// sample standard deviations, and divides each dimension by its range.
pub fn encode_and_normalize(profiles: &[DriverProfile], outlier_sigma: f64) -> Result<EncodedRoster> {
    if profiles.len() < 2 {
        return Err(Error::Data(format!("need at least 2 drivers, got {}", profiles.len())));
    }
    for p in profiles {
        p.validate()?;
    }
    let raw: Vec<FeatureVector> = profiles.iter().map(DriverProfile::encode).collect();
    let n = raw.len() as f64;
    let mut mean = [0.0; DIMS];
    let mut sd = [0.0; DIMS];
    for j in 0..DIMS {
        mean[j] = raw.iter().map(|v| v[j]).sum::<f64>() / n;
        sd[j] = (raw.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    }
    let mut ids = Vec::new();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (p, v) in profiles.iter().zip(&raw) {
        let outlier = (0..DIMS).any(|j| sd[j] > 0.0 && (v[j] - mean[j]).abs() > outlier_sigma * sd[j]);
        if outlier {
            removed.push(p.driver_id.clone());
        } else {
            ids.push(p.driver_id.clone());
            kept.push(*v);
        }
    }
    if kept.len() < 2 {
        return Err(Error::Data(format!(
            "only {} drivers left after outlier removal",
            kept.len()
        )));
    }
    let normalizer = Normalizer::fit(&kept);
    let vectors = kept.iter().map(|v| normalizer.apply(v)).collect();
    Ok(EncodedRoster {
        ids,
        vectors,
        normalizer,
        removed,
    })
}

pub fn squared_distance(a: &FeatureVector, b: &FeatureVector) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &FeatureVector, b: &FeatureVector) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Index of the nearest center; ties go to the lowest index.
pub fn nearest(centers: &[FeatureVector], v: &FeatureVector) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter().enumerate() {
        let d = squared_distance(v, c);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Sum of squared distances from each point to its assigned center.
pub fn objective(vectors: &[FeatureVector], centers: &[FeatureVector], assignments: &[usize]) -> f64 {
    vectors
        .iter()
        .zip(assignments)
        .map(|(v, &c)| squared_distance(v, &centers[c]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Center-shift threshold: once no center moves further than this, one
    /// final assignment pass ends the run.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Vec<FeatureVector>,
    pub assignments: Vec<usize>,
    /// Final objective J.
    pub objective: f64,
    /// J after every assignment step and every center update, in order.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

fn seed_centers(vectors: &[FeatureVector], p: usize, rng: &mut ChaCha8Rng) -> Vec<FeatureVector> {
    let n = vectors.len();
    let mut centers = vec![vectors[rng.gen_range(0..n)]];
    let mut d2: Vec<f64> = vectors.iter().map(|v| squared_distance(v, &centers[0])).collect();
    while centers.len() < p {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        let c = vectors[pick];
        for (d, v) in d2.iter_mut().zip(vectors) {
            *d = d.min(squared_distance(v, &c));
        }
        centers.push(c);
    }
    centers
}

fn update_centers(vectors: &[FeatureVector], assignments: &[usize], centers: &mut [FeatureVector]) {
    let p = centers.len();
    let mut sums = vec![[0.0; DIMS]; p];
    let mut counts = vec![0usize; p];
    for (v, &c) in vectors.iter().zip(assignments) {
        counts[c] += 1;
        for j in 0..DIMS {
            sums[c][j] += v[j];
        }
    }
    // squared distance of each point to its own (old) center, for re-seeding
    let mut spread: Vec<f64> = vectors
        .iter()
        .zip(assignments)
        .map(|(v, &c)| squared_distance(v, &centers[c]))
        .collect();
    for k in 0..p {
        if counts[k] > 0 {
            centers[k] = std::array::from_fn(|j| sums[k][j] / counts[k] as f64);
        } else {
            let (far, _) = spread
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
            centers[k] = vectors[far];
            spread[far] = f64::NEG_INFINITY;
        }
    }
}

fn centroids(vectors: &[FeatureVector], assignments: &[usize], p: usize) -> (Vec<FeatureVector>, Vec<usize>) {
    let mut sums = vec![[0.0; DIMS]; p];
    let mut counts = vec![0usize; p];
    for (v, &c) in vectors.iter().zip(assignments) {
        counts[c] += 1;
        for j in 0..DIMS {
            sums[c][j] += v[j];
        }
    }
    let centers = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| std::array::from_fn(|j| if n > 0 { s[j] / n as f64 } else { 0.0 }))
        .collect();
    (centers, counts)
}

/// Moves single points to another cluster while that lowers J. Moving `x`
/// from `a` to `b` changes J by `n_b/(n_b+1)·|x−μ_b|² − n_a/(n_a−1)·|x−μ_a|²`.
/// Returns true if any point moved; centers are left at the cluster means.
fn hartigan_sweep(
    vectors: &[FeatureVector],
    centers: &mut Vec<FeatureVector>,
    assignments: &mut [usize],
    history: &mut Vec<f64>,
) -> bool {
    let p = centers.len();
    let (mut means, mut counts) = centroids(vectors, assignments, p);
    // gains below rounding noise of the coordinates are not moves
    let eps = 1e-12 * vectors.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum::<f64>()
        / vectors.len() as f64;
    let mut moved = false;
    for (i, v) in vectors.iter().enumerate() {
        let a = assignments[i];
        if counts[a] < 2 {
            continue;
        }
        let na = counts[a] as f64;
        let removal = na / (na - 1.0) * squared_distance(v, &means[a]);
        let mut best = (0.0, a);
        for b in (0..p).filter(|&b| b != a) {
            let nb = counts[b] as f64;
            let delta = nb / (nb + 1.0) * squared_distance(v, &means[b]) - removal;
            if delta < best.0 {
                best = (delta, b);
            }
        }
        if best.1 != a && best.0 < -eps {
            assignments[i] = best.1;
            (means, counts) = centroids(vectors, assignments, p);
            history.push(objective(vectors, &means, assignments));
            moved = true;
        }
    }
    *centers = means;
    moved
}

/// One seeded run: k-means++ seeding, Lloyd iterations to a fixed point, then
/// Hartigan single-point moves; the two alternate until neither changes the
/// partition or `max_iter` rounds have run.
pub fn kmeans(vectors: &[FeatureVector], p: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeansFit> {
    let n = vectors.len();
    if p < 1 || p > n {
        return Err(Error::Config(format!("cluster count {p} outside [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(vectors, p, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let max_iter = opts.max_iter.max(1);
    'outer: while iterations < max_iter {
        let mut settle = false;
        loop {
            if iterations >= max_iter {
                break 'outer;
            }
            iterations += 1;
            let next: Vec<usize> = vectors.iter().map(|v| nearest(&centers, v)).collect();
            let stable = next == assignments;
            assignments = next;
            history.push(objective(vectors, &centers, &assignments));
            if stable {
                break;
            }
            let before = centers.clone();
            update_centers(vectors, &assignments, &mut centers);
            history.push(objective(vectors, &centers, &assignments));
            if settle {
                break;
            }
            let shift = before
                .iter()
                .zip(&centers)
                .map(|(a, b)| distance(a, b))
                .fold(0.0, f64::max);
            settle = shift <= opts.tol;
        }
        if p == 1 || !hartigan_sweep(vectors, &mut centers, &mut assignments, &mut history) {
            converged = true;
            break;
        }
    }
    let objective = objective(vectors, &centers, &assignments);
    Ok(KMeansFit {
        centers,
        assignments,
        objective,
        history,
        iterations,
        converged,
        seed,
    })
}

/// Best of `restarts` seeded runs by objective; ties go to the earliest run.
pub fn kmeans_restarts(
    vectors: &[FeatureVector],
    p: usize,
    seed: u64,
    restarts: usize,
    opts: &KMeansOptions,
) -> Result<KMeansFit> {
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) as u64 {
        let fit = kmeans(vectors, p, seed.wrapping_add(r), opts)?;
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterQuality {
    pub sse: f64,
    /// `None` when fewer than two clusters are non-empty.
    pub silhouette: Option<f64>,
    pub avg_deviation: f64,
}

pub fn quality(vectors: &[FeatureVector], centers: &[FeatureVector], assignments: &[usize]) -> ClusterQuality {
    let n = vectors.len();
    let sse = objective(vectors, centers, assignments);
    let avg_deviation = vectors
        .iter()
        .zip(assignments)
        .map(|(v, &c)| distance(v, &centers[c]))
        .sum::<f64>()
        / n.max(1) as f64;
    let p = centers.len();
    let mut sizes = vec![0usize; p];
    for &c in assignments {
        sizes[c] += 1;
    }
    let silhouette = (sizes.iter().filter(|&&s| s > 0).count() >= 2).then(|| {
        let mut total = 0.0;
        for i in 0..n {
            let own = assignments[i];
            if sizes[own] == 1 {
                continue;
            }
            let mut sums = vec![0.0; p];
            for j in 0..n {
                if i != j {
                    sums[assignments[j]] += distance(&vectors[i], &vectors[j]);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..p)
                .filter(|&k| k != own && sizes[k] > 0)
                .map(|k| sums[k] / sizes[k] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
        total / n as f64
    });
    ClusterQuality {
        sse,
        silhouette,
        avg_deviation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub p: usize,
    pub objective: f64,
    pub quality: ClusterQuality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best_p: usize,
    pub table: Vec<QualityRow>,
    pub fits: Vec<KMeansFit>,
    /// True when no cluster count yields a defined silhouette.
    pub degenerate: bool,
}

/// Fits p = 1..=min(p_max, n) and picks the count with the highest
/// silhouette (ties: lower SSE, then lower p).
pub fn select_cluster_count(
    vectors: &[FeatureVector],
    p_max: usize,
    seeds_per_p: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<Selection> {
    let p_max = p_max.min(vectors.len()).max(1);
    let mut table = Vec::with_capacity(p_max);
    let mut fits = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let fit = kmeans_restarts(vectors, p, seed.wrapping_add(1000 * p as u64), seeds_per_p, opts)?;
        table.push(QualityRow {
            p,
            objective: fit.objective,
            quality: quality(vectors, &fit.centers, &fit.assignments),
        });
        fits.push(fit);
    }
    let mut best: Option<&QualityRow> = None;
    for row in table.iter().filter(|r| r.p >= 2) {
        let Some(s) = row.quality.silhouette else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let bs = b.quality.silhouette.expect("best has a silhouette");
                s > bs || (s == bs && row.quality.sse < b.quality.sse)
            }
        };
        if better {
            best = Some(row);
        }
    }
    let (best_p, degenerate) = match best {
        Some(r) => (r.p, false),
        None => (1, true),
    };
    Ok(Selection {
        best_p,
        table,
        fits,
        degenerate,
    })
}

/// Fitted partition of a driver roster, reloadable for assigning new drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub p: usize,
    pub normalizer: Normalizer,
    pub centers: Vec<FeatureVector>,
    pub assignments: BTreeMap<String, usize>,
    pub objective: f64,
}

impl ClusterModel {
    pub fn from_fit(roster: &EncodedRoster, fit: &KMeansFit) -> Self {
        ClusterModel {
            p: fit.centers.len(),
            normalizer: roster.normalizer,
            centers: fit.centers.clone(),
            assignments: roster.ids.iter().cloned().zip(fit.assignments.iter().copied()).collect(),
            objective: fit.objective,
        }
    }

    /// Nearest center under the stored normalizer.
    pub fn assign(&self, profile: &DriverProfile) -> usize {
        nearest(&self.centers, &self.normalizer.apply(&profile.encode()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cluster model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ClusterModel =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("cluster model: {e}")))?;
        if m.p == 0 || m.centers.len() != m.p || m.assignments.values().any(|&c| c >= m.p) {
            return Err(Error::Format("cluster model is internally inconsistent".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::scenario::write_file(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl fmt::Display for ClusterModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p = {}  J = {:.6}", self.p, self.objective)?;
        for (k, c) in self.centers.iter().enumerate() {
            let members = self.assignments.values().filter(|&&a| a == k).count();
            writeln!(f, "  center {k}: {c:?} ({members} drivers)")?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RosterRecord {
    driver_id: String,
    gender: String,
    age: f64,
    experience: f64,
    style: String,
}

pub fn parse_roster(text: &str) -> Result<Vec<DriverProfile>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |m: String| Error::Parse {
            line: idx + 1,
            message: m,
        };
        let rec: RosterRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let profile = DriverProfile {
            driver_id: rec.driver_id,
            gender: rec.gender.parse().map_err(|e: Error| parse_err(e.to_string()))?,
            age: rec.age,
            experience: rec.experience,
            style: rec.style.parse().map_err(|e: Error| parse_err(e.to_string()))?,
        };
        out.push(profile);
    }
    Ok(out)
}

pub fn roster_to_string(profiles: &[DriverProfile]) -> String {
    profiles
        .iter()
        .map(|p| serde_json::to_string(p).expect("profile serializes") + "\n")
        .collect()
}

pub fn load_roster(path: impl AsRef<Path>) -> Result<Vec<DriverProfile>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_roster(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub points: Vec<[f64; 2]>,
    /// Fraction of total variance captured by each of the two components.
    pub explained: [f64; 2],
    pub components: [FeatureVector; 2],
    pub mean: FeatureVector,
}

impl PcaProjection {
    /// Maps a 2-d point back into the (normalized) trait space.
    pub fn reconstruct(&self, point: &[f64; 2]) -> FeatureVector {
        std::array::from_fn(|j| {
            self.mean[j] + point[0] * self.components[0][j] + point[1] * self.components[1][j]
        })
    }

    pub fn project(&self, v: &FeatureVector) -> [f64; 2] {
        let c: FeatureVector = std::array::from_fn(|j| v[j] - self.mean[j]);
        [
            c.iter().zip(&self.components[0]).map(|(a, b)| a * b).sum(),
            c.iter().zip(&self.components[1]).map(|(a, b)| a * b).sum(),
        ]
    }
}

/// Projects onto the top two eigenvectors of the sample covariance. Each
/// eigenvector is signed so its first non-negligible component is positive.
pub fn pca_project(vectors: &[FeatureVector]) -> Result<PcaProjection> {
    let n = vectors.len();
    if n < 3 {
        return Err(Error::Data(format!("PCA needs at least 3 points, got {n}")));
    }
    let mean: FeatureVector =
        std::array::from_fn(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64);
    let mut cov = DMatrix::<f64>::zeros(DIMS, DIMS);
    for v in vectors {
        for a in 0..DIMS {
            for b in 0..DIMS {
                cov[(a, b)] += (v[a] - mean[a]) * (v[b] - mean[b]);
            }
        }
    }
    cov /= (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..DIMS).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if !(total > 1e-300) {
        return Err(Error::Data("data has zero variance (rank 0)".into()));
    }
    let component = |k: usize| -> FeatureVector {
        let col = eig.eigenvectors.column(order[k]);
        let mut c: FeatureVector = std::array::from_fn(|j| col[j]);
        if let Some(first) = c.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
            }
        }
        c
    };
    let components = [component(0), component(1)];
    let explained = [
        eig.eigenvalues[order[0]].max(0.0) / total,
        eig.eigenvalues[order[1]].max(0.0) / total,
    ];
    let mut proj = PcaProjection {
        points: Vec::new(),
        explained,
        components,
        mean,
    };
    proj.points = vectors.iter().map(|v| proj.project(v)).collect();
    Ok(proj)
}
