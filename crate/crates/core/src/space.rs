//! Finite metric measure spaces `(Z, d, ν)` and their separated net hierarchies.
//!
//! A space is validated once at construction (symmetry, zero diagonal,
//! triangle inequality to `1e-12`, strictly positive masses) and is immutable
//! afterwards. Balls are open throughout: `B(x, r) = {y : d(x, y) < r}`, so a
//! point at distance exactly `r` is excluded.

use crate::error::{Error, Result};

/// Absolute tolerance for metric validation (symmetry and triangle inequality).
pub const METRIC_TOL: f64 = 1e-12;

/// A finite metric measure space: points with a distance matrix and a
/// strictly positive mass per point.
#[derive(Debug, Clone)]
pub struct FiniteMetricMeasureSpace {
    n: usize,
    dist: Vec<f64>,
    mass: Vec<f64>,
    labels: Option<Vec<String>>,
    diam: f64,
    rescale_factor: f64,
}

/// Empirical doubling diagnostics, computed over realized radii only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingReport {
    /// sup over centers and realized radii of `ν(B(x,2r)) / ν(B(x,r))`.
    pub constant: f64,
    /// Smallest exponent `Q` with `(1/2) (r/R)^Q ≤ ν(B(y,r))/ν(B(x,R))`
    /// over all realized `(x, y, r, R)` with `r < R` and `y ∈ B(x, R)`.
    pub q_lower: f64,
}

impl FiniteMetricMeasureSpace {
    /// Validate a distance matrix and masses without rescaling the metric.
    ///
    /// The caller is responsible for the scale; net construction requires
    /// `diam < 1` and will refuse otherwise. Use [`Self::load_matrix`] for
    /// the loading path that enforces the normalization.
    pub fn from_parts(
        dist_rows: Vec<Vec<f64>>,
        mass: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = dist_rows.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if mass.len() != n {
            return Err(Error::InvalidParam(format!(
                "{} masses for {} points",
                mass.len(),
                n
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != n {
                return Err(Error::InvalidParam(format!(
                    "{} labels for {} points",
                    l.len(),
                    n
                )));
            }
        }
        for (i, &m) in mass.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::NonPositiveMass(i));
            }
        }

        let mut dist = vec![0.0; n * n];
        for (i, row) in dist_rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParam(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidParam(format!(
                        "d({i},{j}) = {d} is not a finite nonnegative real"
                    )));
                }
                dist[i * n + j] = d;
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidParam(format!(
                    "d({i},{i}) = {} is nonzero on the diagonal",
                    dist[i * n + i]
                )));
            }
            for j in (i + 1)..n {
                let fwd = dist[i * n + j];
                let bwd = dist[j * n + i];
                if (fwd - bwd).abs() > METRIC_TOL {
                    return Err(Error::NonSymmetric {
                        i,
                        j,
                        forward: fwd,
                        backward: bwd,
                    });
                }
                // Store the exact symmetrization so later reads agree bitwise.
                let d = 0.5 * (fwd + bwd);
                if d <= 0.0 {
                    return Err(Error::InvalidParam(format!(
                        "distinct points {i} and {j} at zero distance"
                    )));
                }
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let direct = dist[i * n + k];
                    let via = dist[i * n + j] + dist[j * n + k];
                    if direct > via + METRIC_TOL {
                        return Err(Error::TriangleViolation {
                            i,
                            j,
                            k,
                            direct,
                            via,
                        });
                    }
                }
            }
        }

        let diam = dist.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            n,
            dist,
            mass,
            labels,
            diam,
            rescale_factor: 1.0,
        })
    }

    /// Load a space from an explicit distance matrix, rescaling the metric so
    /// that `diam < 1`. The applied factor is recorded (1.0 when no rescale
    /// was needed).
    pub fn load_matrix(
        dist_rows: Vec<Vec<f64>>,
        mass: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let mut space = Self::from_parts(dist_rows, mass, labels)?;
        if space.diam >= 1.0 {
            let factor = 0.5 / space.diam;
            for d in space.dist.iter_mut() {
                *d *= factor;
            }
            space.diam *= factor;
            space.rescale_factor = factor;
        }
        Ok(space)
    }

    /// Load a space from coordinate rows; distances are Euclidean. Rescales
    /// like [`Self::load_matrix`].
    pub fn load_points(
        coords: &[Vec<f64>],
        mass: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        let dim = coords[0].len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            if coords[i].len() != dim {
                return Err(Error::InvalidParam(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    coords[i].len()
                )));
            }
            for j in 0..n {
                let d = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                rows[i][j] = d;
            }
        }
        Self::load_matrix(rows, mass, labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Factor the input metric was multiplied by at load time (1.0 if none).
    pub fn rescale_factor(&self) -> f64 {
        self.rescale_factor
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    /// Mass of the open ball `B(center, r)`. Radius 0 gives the empty ball.
    pub fn ball_mass(&self, center: usize, r: f64) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.n {
            if self.dist(center, j) < r {
                sum += self.mass[j];
            }
        }
        sum
    }

    /// Sorted, deduplicated positive pairwise distances.
    pub fn realized_distances(&self) -> Vec<f64> {
        let mut ds: Vec<f64> = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                ds.push(self.dist(i, j));
            }
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds.dedup();
        ds
    }

    /// Empirical doubling constant and lower-mass-bound exponent, scanned
    /// over the realized radii only.
    pub fn doubling_report(&self) -> DoublingReport {
        let radii = self.realized_distances();
        let mut constant: f64 = 1.0;
        for x in 0..self.n {
            for &r in &radii {
                let small = self.ball_mass(x, r);
                if small > 0.0 {
                    constant = constant.max(self.ball_mass(x, 2.0 * r) / small);
                }
            }
        }

        let mut q_lower: f64 = 0.0;
        for x in 0..self.n {
            for (ri, &r) in radii.iter().enumerate() {
                for &cap_r in &radii[ri + 1..] {
                    let big = self.ball_mass(x, cap_r);
                    if big <= 0.0 {
                        continue;
                    }
                    for y in 0..self.n {
                        if self.dist(x, y) >= cap_r {
                            continue;
                        }
                        let ratio = self.ball_mass(y, r) / big;
                        let scaled = 2.0 * ratio;
                        if scaled < 1.0 {
                            q_lower = q_lower.max(scaled.ln() / (r / cap_r).ln());
                        }
                    }
                }
            }
        }
        DoublingReport { constant, q_lower }
    }

    /// Build the nested maximal `α^{-n}`-separated sets `S_0 ⊆ … ⊆ S_depth`
    /// greedily in ascending point-index order, seeding each level from the
    /// previous one.
    pub fn greedy_net_hierarchy(&self, alpha: f64, depth: usize) -> Result<NetHierarchy> {
        if !(alpha > 1.0) {
            return Err(Error::InvalidParam(format!("alpha = {alpha} must exceed 1")));
        }
        if self.diam >= 1.0 {
            return Err(Error::InvalidParam(format!(
                "net hierarchy requires diam < 1 (got {}); load the space through load_matrix/load_points",
                self.diam
            )));
        }
        let mut levels: Vec<Vec<usize>> = Vec::with_capacity(depth + 1);
        let mut current: Vec<usize> = Vec::new();
        for level in 0..=depth {
            let scale = alpha.powi(-(level as i32));
            let mut members = current.clone();
            let mut in_set = vec![false; self.n];
            for &m in &members {
                in_set[m] = true;
            }
            for z in 0..self.n {
                if in_set[z] {
                    continue;
                }
                let min_d = members
                    .iter()
                    .map(|&m| self.dist(z, m))
                    .fold(f64::INFINITY, f64::min);
                if min_d >= scale {
                    members.push(z);
                    in_set[z] = true;
                }
            }
            members.sort_unstable();
            current = members.clone();
            levels.push(members);
        }
        Ok(NetHierarchy { alpha, levels })
    }
}

/// Nested maximal separated nets `S_0 ⊆ S_1 ⊆ … ⊆ S_N`, level `n` separated
/// at scale `α^{-n}`.
#[derive(Debug, Clone)]
pub struct NetHierarchy {
    alpha: f64,
    levels: Vec<Vec<usize>>,
}

impl NetHierarchy {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Deepest level index `N` (there are `N + 1` levels).
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[usize] {
        &self.levels[n]
    }

    pub fn scale(&self, n: usize) -> f64 {
        self.alpha.powi(-(n as i32))
    }
}
