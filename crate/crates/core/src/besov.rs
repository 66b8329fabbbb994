//! Besov seminorms and the nonlocal form `E_p` on the base space.
//!
//! The jump kernel is `K(x,y) = 1 / (ν(B(x, d(x,y))) d(x,y)^{θp})`. The
//! literature writes the ball at `x` in some places and at `y` in others;
//! the two choices differ pointwise on non-homogeneous spaces while defining
//! comparable energies, so the working kernel here is the arithmetic
//! symmetrization `K̃ = (K(x,y) + K(y,x)) / 2`, which makes `E_2` an exactly
//! symmetric bilinear form. Both one-sided energies stay available for
//! reporting.

use crate::calculus::{self, Network, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;

/// Dense pairwise storage is capped at this many points.
pub const MAX_DENSE_POINTS: usize = 2000;

/// Which endpoint carries the ball in the unsymmetrized kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConvention {
    /// `ν(B(x, d(x,y)))`, the first argument.
    BallAtFirst,
    /// `ν(B(y, d(x,y)))`, the second argument.
    BallAtSecond,
}

/// Pairwise nonlocal kernel weights on `Z × Z`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    theta: f64,
    p: f64,
    /// Symmetrized kernel, row-major, zero on the diagonal.
    sym: Vec<f64>,
    /// One-sided kernel with the ball at the first argument.
    first: Vec<f64>,
    mass: Vec<f64>,
}

fn check_exponents(theta: f64, p: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParam(format!(
            "theta = {theta} must lie in (0,1)"
        )));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParam(format!("p = {p} must exceed 1")));
    }
    Ok(())
}

impl KernelMatrix {
    pub fn assemble(space: &FiniteMetricMeasureSpace, theta: f64, p: f64) -> Result<Self> {
        check_exponents(theta, p)?;
        let n = space.n();
        if n > MAX_DENSE_POINTS {
            return Err(Error::InvalidParam(format!(
                "dense kernel storage is limited to {MAX_DENSE_POINTS} points, got {n}"
            )));
        }
        // per-row sorted distances with mass prefix sums for O(log n) open balls
        let mut sorted: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);
        for x in 0..n {
            let mut pairs: Vec<(f64, f64)> =
                (0..n).map(|j| (space.dist(x, j), space.mass(j))).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let ds: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &(_, m) in &pairs {
                acc += m;
                prefix.push(acc);
            }
            sorted.push((ds, prefix));
        }
        let ball = |x: usize, r: f64| -> f64 {
            let (ds, prefix) = &sorted[x];
            let k = ds.partition_point(|&d| d < r);
            prefix[k]
        };

        let exponent = theta * p;
        let mut first = vec![0.0; n * n];
        let mut sym = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let d = space.dist(x, y);
                first[x * n + y] = 1.0 / (ball(x, d) * d.powf(exponent));
            }
        }
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    sym[x * n + y] = 0.5 * (first[x * n + y] + first[y * n + x]);
                }
            }
        }
        Ok(Self {
            n,
            theta,
            p,
            sym,
            first,
            mass: space.masses().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Symmetrized kernel value `K̃(x, y)`.
    pub fn symmetrized(&self, x: usize, y: usize) -> f64 {
        self.sym[x * self.n + y]
    }

    /// Besov energy `Σ_{x≠y} |u(y)-u(x)|^p K̃(x,y) ν_x ν_y`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for x in 0..self.n {
            for y in (x + 1)..self.n {
                let gap = (u[y] - u[x]).abs();
                total += 2.0 * gap.powf(self.p) * self.sym[x * self.n + y] * self.mass[x] * self.mass[y];
            }
        }
        total
    }

    /// One-sided energy under the requested kernel convention.
    pub fn energy_with_convention(&self, u: &[f64], convention: KernelConvention) -> f64 {
        let mut total = 0.0;
        for x in 0..self.n {
            for y in 0..self.n {
                if x == y {
                    continue;
                }
                let k = match convention {
                    KernelConvention::BallAtFirst => self.first[x * self.n + y],
                    KernelConvention::BallAtSecond => self.first[y * self.n + x],
                };
                total += (u[y] - u[x]).abs().powf(self.p) * k * self.mass[x] * self.mass[y];
            }
        }
        total
    }

    /// The form `E_p(u,v) = Σ_{x≠y} |δu|^{p-2} δu δv K̃ ν_x ν_y`; linear in
    /// `v`, and `E_p(u,u)` equals [`Self::energy`].
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut total = 0.0;
        for x in 0..self.n {
            for y in (x + 1)..self.n {
                let du = u[y] - u[x];
                let dv = v[y] - v[x];
                total += 2.0
                    * calculus::signed_pow(du, self.p - 1.0)
                    * dv
                    * self.sym[x * self.n + y]
                    * self.mass[x]
                    * self.mass[y];
            }
        }
        total
    }

    /// Complete-graph network whose p-energy reproduces `E_p(u,u)`:
    /// unit lengths, edge measure `2 K̃(x,y) ν_x ν_y`, vertex weights `ν`.
    pub fn network(&self) -> Network {
        let mut edges = Vec::new();
        let mut mu = Vec::new();
        for x in 0..self.n {
            for y in (x + 1)..self.n {
                edges.push((x, y));
                mu.push(2.0 * self.sym[x * self.n + y] * self.mass[x] * self.mass[y]);
            }
        }
        let len = vec![1.0; edges.len()];
        Network::new(self.n, edges, mu, len, self.mass.clone())
            .expect("kernel networks are valid")
    }
}

/// Besov energy on a space (assembles the kernel; reuse [`KernelMatrix`]
/// when evaluating many functions).
pub fn besov_energy(
    space: &FiniteMetricMeasureSpace,
    u: &[f64],
    theta: f64,
    p: f64,
) -> Result<f64> {
    Ok(KernelMatrix::assemble(space, theta, p)?.energy(u))
}

/// The nonlocal form `E_p(u, v)` on a space.
pub fn nonlocal_form(
    space: &FiniteMetricMeasureSpace,
    u: &[f64],
    v: &[f64],
    theta: f64,
    p: f64,
) -> Result<f64> {
    Ok(KernelMatrix::assemble(space, theta, p)?.form(u, v))
}

/// ν-mean-zero minimizer of `(1/p) E_p(u,u) - Σ u f ν`; the first-order
/// condition `E_p(u, φ) = Σ φ f ν` holds for every `φ` at the solution.
pub fn solve_nonlocal(
    space: &FiniteMetricMeasureSpace,
    f: &[f64],
    theta: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let kernel = KernelMatrix::assemble(space, theta, p)?;
    let net = kernel.network();
    let rhs: Vec<f64> = f.iter().zip(space.masses()).map(|(v, m)| v * m).collect();
    calculus::solve_neumann(&net, p, &rhs, opts)
}

/// `‖u - u_Z‖_{L^p(ν)} / E_p(u,u)^{1/p}` with `u_Z` the ν-average.
pub fn poincare_ratio(
    space: &FiniteMetricMeasureSpace,
    u: &[f64],
    theta: f64,
    p: f64,
) -> Result<f64> {
    let energy = besov_energy(space, u, theta, p)?;
    if energy <= 0.0 {
        return Err(Error::ConstantInput);
    }
    let total: f64 = space.total_mass();
    let mean: f64 = u
        .iter()
        .zip(space.masses())
        .map(|(v, m)| v * m)
        .sum::<f64>()
        / total;
    let lp: f64 = u
        .iter()
        .zip(space.masses())
        .map(|(v, m)| (v - mean).abs().powf(p) * m)
        .sum::<f64>()
        .powf(1.0 / p);
    Ok(lp / energy.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rng;
    use approx::assert_relative_eq;

    /// The two-point space with the metric left at d = 1 (not rescaled), so
    /// the hand-computed kernel values below apply verbatim.
    fn two_point_raw() -> FiniteMetricMeasureSpace {
        FiniteMetricMeasureSpace::from_parts(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            None,
        )
        .unwrap()
    }

    #[test]
    fn two_point_energy_is_one_for_any_theta() {
        // each open ball B(·,1) has mass 1/2, so the two-term sum gives
        // 2 · |1|^p · (1 / (1/2)) · (1/4) = 1 regardless of theta (d = 1)
        let s = two_point_raw();
        for theta in [0.3, 0.5, 0.9] {
            for p in [1.5, 2.0, 3.0] {
                let e = besov_energy(&s, &[0.0, 1.0], theta, p).unwrap();
                assert_relative_eq!(e, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn constant_energy_zero_and_homogeneity() {
        let s = fixtures::cycle(8).unwrap();
        assert_eq!(besov_energy(&s, &[2.0; 8], 0.5, 2.0).unwrap(), 0.0);
        let u = rng::gaussian_vec(&mut rng::seeded(1), 8);
        let lam = -2.5f64;
        let scaled: Vec<f64> = u.iter().map(|v| lam * v).collect();
        for p in [1.5, 2.0, 3.0] {
            let e1 = besov_energy(&s, &u, 0.5, p).unwrap();
            let e2 = besov_energy(&s, &scaled, 0.5, p).unwrap();
            assert_relative_eq!(e2, lam.abs().powf(p) * e1, max_relative = 1e-12);
        }
    }

    #[test]
    fn form_diagonal_matches_energy() {
        let s = fixtures::cycle(8).unwrap();
        let k = KernelMatrix::assemble(&s, 0.4, 2.7).unwrap();
        let u = rng::gaussian_vec(&mut rng::seeded(2), 8);
        assert_relative_eq!(k.form(&u, &u), k.energy(&u), max_relative = 1e-13);
    }

    #[test]
    fn form_vanishes_against_constants() {
        let s = fixtures::cycle(6).unwrap();
        let k = KernelMatrix::assemble(&s, 0.5, 3.0).unwrap();
        let u = rng::gaussian_vec(&mut rng::seeded(3), 6);
        assert_eq!(k.form(&u, &[7.0; 6]), 0.0);
    }

    #[test]
    fn e2_is_symmetric_and_bilinear() {
        let s = fixtures::cycle(8).unwrap();
        let k = KernelMatrix::assemble(&s, 0.5, 2.0).unwrap();
        let mut r = rng::seeded(4);
        for _ in 0..5 {
            let u = rng::gaussian_vec(&mut r, 8);
            let v = rng::gaussian_vec(&mut r, 8);
            let w = rng::gaussian_vec(&mut r, 8);
            assert_relative_eq!(k.form(&u, &v), k.form(&v, &u), epsilon = 1e-12);
            let a = 1.7;
            let av_w: Vec<f64> = v.iter().zip(&w).map(|(v, w)| a * v + w).collect();
            assert_relative_eq!(
                k.form(&u, &av_w),
                a * k.form(&u, &v) + k.form(&u, &w),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn scaling_law_p3() {
        // E_p(αu, βv) = |α|^{p-2} α β E_p(u, v)
        let s = fixtures::cycle(8).unwrap();
        let k = KernelMatrix::assemble(&s, 0.5, 3.0).unwrap();
        let mut r = rng::seeded(5);
        let u = rng::gaussian_vec(&mut r, 8);
        let v = rng::gaussian_vec(&mut r, 8);
        let (al, be) = (-1.3f64, 2.1f64);
        let au: Vec<f64> = u.iter().map(|x| al * x).collect();
        let bv: Vec<f64> = v.iter().map(|x| be * x).collect();
        assert_relative_eq!(
            k.form(&au, &bv),
            al.abs().powf(1.0) * al * be * k.form(&u, &v),
            max_relative = 1e-10
        );
    }

    #[test]
    fn solve_two_point_oracle() {
        // one-variable linear oracle: E_2(u, φ) = (u1-u0)(φ1-φ0) must equal
        // Σ φ f ν = (φ0-φ1)/2, hence u1-u0 = -1/2 and u = (1/4, -1/4)
        let s = two_point_raw();
        let rep = solve_nonlocal(&s, &[1.0, -1.0], 0.5, 2.0, &SolverOptions::default()).unwrap();
        assert_relative_eq!(rep.solution[0], 0.25, epsilon = 1e-10);
        assert_relative_eq!(rep.solution[1], -0.25, epsilon = 1e-10);
    }

    #[test]
    fn solve_zero_data_gives_zero() {
        let s = fixtures::cycle(6).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let rep = solve_nonlocal(&s, &[0.0; 6], 0.5, p, &SolverOptions::default()).unwrap();
            assert!(rep.solution.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn solve_gauge_independent_up_to_constant() {
        let s = fixtures::cycle(6).unwrap();
        let mut f = rng::gaussian_mean_zero(&mut rng::seeded(6), s.masses());
        rng::project_mean_zero(&mut f, s.masses());
        let mut o1 = SolverOptions::with_tolerance(1e-12);
        o1.gauge_vertex = 0;
        let mut o2 = SolverOptions::with_tolerance(1e-12);
        o2.gauge_vertex = 3;
        let u1 = solve_nonlocal(&s, &f, 0.5, 2.0, &o1).unwrap().solution;
        let u2 = solve_nonlocal(&s, &f, 0.5, 2.0, &o2).unwrap().solution;
        for (a, b) in u1.iter().zip(&u2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn first_order_condition_between_basis_functions() {
        let s = fixtures::cycle(8).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let f = rng::gaussian_mean_zero(&mut rng::seeded(7), s.masses());
            let rep =
                solve_nonlocal(&s, &f, 0.5, p, &SolverOptions::with_tolerance(1e-11)).unwrap();
            let k = KernelMatrix::assemble(&s, 0.5, p).unwrap();
            let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for v in 0..8 {
                let mut phi = vec![0.0; 8];
                phi[v] = 1.0;
                let lhs = k.form(&rep.solution, &phi);
                let rhs = f[v] * s.mass(v);
                assert!(
                    (lhs - rhs).abs() < 1e-8 * (1.0 + fnorm),
                    "p = {p}, basis {v}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn energy_zero_iff_constant_exhaustive_small() {
        let s = fixtures::cycle(4).unwrap();
        let k = KernelMatrix::assemble(&s, 0.5, 2.0).unwrap();
        // basis and sign patterns on 4 points
        for bits in 0..16u32 {
            let u: Vec<f64> = (0..4)
                .map(|i| if bits >> i & 1 == 1 { 1.0 } else { 0.0 })
                .collect();
            let e = k.energy(&u);
            let constant = bits == 0 || bits == 15;
            if constant {
                assert_eq!(e, 0.0);
            } else {
                assert!(e > 0.0);
            }
        }
    }

    #[test]
    fn poincare_two_point_closed_form() {
        // indicator of one point: ‖u - ū‖_p = 1/2, energy = 1, ratio = 1/2
        let s = two_point_raw();
        for p in [1.5, 2.0, 3.0] {
            let ratio = poincare_ratio(&s, &[1.0, 0.0], 0.5, p).unwrap();
            assert_relative_eq!(ratio, 0.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn poincare_invariances_and_constant_error() {
        let s = fixtures::cycle(8).unwrap();
        let u = rng::gaussian_vec(&mut rng::seeded(8), 8);
        let base = poincare_ratio(&s, &u, 0.5, 2.0).unwrap();
        let shifted: Vec<f64> = u.iter().map(|v| v + 3.0).collect();
        let scaled: Vec<f64> = u.iter().map(|v| -4.0 * v).collect();
        assert_relative_eq!(
            poincare_ratio(&s, &shifted, 0.5, 2.0).unwrap(),
            base,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            poincare_ratio(&s, &scaled, 0.5, 2.0).unwrap(),
            base,
            max_relative = 1e-10
        );
        assert!(matches!(
            poincare_ratio(&s, &[5.0; 8], 0.5, 2.0),
            Err(Error::ConstantInput)
        ));
    }

    #[test]
    fn convention_energies_agree_though_kernels_differ() {
        // on a non-homogeneous space the two one-sided kernels differ
        // pointwise, yet the full double sums coincide (swap x and y), and
        // the symmetrized energy equals both
        let s = FiniteMetricMeasureSpace::from_parts(
            vec![
                vec![0.0, 0.3, 0.7],
                vec![0.3, 0.0, 0.5],
                vec![0.7, 0.5, 0.0],
            ],
            vec![0.2, 0.5, 1.3],
            None,
        )
        .unwrap();
        let k = KernelMatrix::assemble(&s, 0.5, 2.0).unwrap();
        // pointwise asymmetry: ν(B(0, d01)) = 0.2 while ν(B(1, d01)) = 0.5
        assert!((k.first[1] - k.first[3]).abs() > 1e-6);
        assert_relative_eq!(
            k.symmetrized(0, 1),
            0.5 * (k.first[1] + k.first[3]),
            max_relative = 1e-14
        );
        let u = [1.0, -0.4, 0.2];
        let ef = k.energy_with_convention(&u, KernelConvention::BallAtFirst);
        let es = k.energy_with_convention(&u, KernelConvention::BallAtSecond);
        assert_relative_eq!(ef, es, max_relative = 1e-12);
        assert_relative_eq!(k.energy(&u), ef, max_relative = 1e-12);
    }
}
