//! The induced fractional p-Laplacian on the base space.
//!
//! A [`FractionalProblem`] bundles a space with its filling. Solving the
//! Neumann problem on the filling with boundary data `f` and pulling the
//! trace back through the anchors yields the solution of the nonlocal
//! equation on `Z`; the trace form `E_T(u, v)` pairs p-harmonic extensions
//! inside the filling and is comparable to the direct Besov form `E_p`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::besov::KernelMatrix;
use crate::calculus::{self, Network, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::filling::{FillingGraph, FillingParams};
use crate::rng;
use crate::space::{FiniteMetricMeasureSpace, NetHierarchy};

/// Stability exponents of the data-to-solution map:
/// `κ = 1/(p(p-1))`, `τ = 1/p` for `p ≥ 2` and
/// `κ = (3-p)/(2(p-1))`, `τ = 1/2` for `1 < p < 2`.
pub fn stability_exponents(p: f64) -> (f64, f64) {
    if p >= 2.0 {
        (1.0 / (p * (p - 1.0)), 1.0 / p)
    } else {
        ((3.0 - p) / (2.0 * (p - 1.0)), 0.5)
    }
}

#[derive(Debug, Clone)]
pub struct ComparabilityReport {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratios: Vec<f64>,
}

impl ComparabilityReport {
    pub fn spread(&self) -> f64 {
        self.ratio_max / self.ratio_min
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Edge-difference norm `‖∇u₁ - ∇u₂‖_{L^p}` on the filling.
    pub grad_distance: f64,
    /// `‖f₁ - f₂‖_{p'}` in the boundary weights.
    pub data_distance: f64,
    pub norm_f1: f64,
    pub norm_f2: f64,
    pub kappa: f64,
    pub tau: f64,
    /// Implied constant `grad_distance / (max(‖f₁‖,‖f₂‖)^κ ‖f₁-f₂‖^τ)`.
    pub constant: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct HolderFit {
    /// Least-squares slope of `log |u(x)-u(y)|` against `log d(x,y)`.
    pub exponent: f64,
    /// `exp` of the fitted intercept.
    pub constant: f64,
}

#[derive(Debug, Clone)]
pub struct HarnackRow {
    pub center: usize,
    pub radius: f64,
    pub sup: f64,
    pub inf: f64,
    /// `sup/inf`; infinite entries are flagged.
    pub ratio: f64,
    pub flagged_infinite: bool,
}

/// A space together with its filling graph and solver network.
#[derive(Debug, Clone)]
pub struct FractionalProblem {
    space: FiniteMetricMeasureSpace,
    params: FillingParams,
    nets: NetHierarchy,
    filling: FillingGraph,
    network: Network,
}

impl FractionalProblem {
    pub fn new(space: FiniteMetricMeasureSpace, params: FillingParams) -> Result<Self> {
        let nets = space.greedy_net_hierarchy(params.alpha(), params.depth())?;
        let filling = FillingGraph::build(&space, &nets, params)?;
        let network = Network::from_filling(&filling);
        Ok(Self {
            space,
            params,
            nets,
            filling,
            network,
        })
    }

    pub fn space(&self) -> &FiniteMetricMeasureSpace {
        &self.space
    }

    pub fn params(&self) -> &FillingParams {
        &self.params
    }

    pub fn nets(&self) -> &NetHierarchy {
        &self.nets
    }

    pub fn filling(&self) -> &FillingGraph {
        &self.filling
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Dirichlet data pinning each deepest-level vertex to the value of its
    /// own base point.
    fn trace_constraints(&self, u_z: &[f64]) -> Vec<(usize, f64)> {
        let depth = self.params.depth();
        self.nets
            .level(depth)
            .iter()
            .map(|&x| (self.filling.vertex_at(x, depth).unwrap(), u_z[x]))
            .collect()
    }

    /// p-harmonic extension of boundary values into the filling.
    pub fn harmonic_extension(&self, u_z: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
        calculus::solve_dirichlet(
            &self.network,
            self.params.p(),
            &self.trace_constraints(u_z),
            opts,
        )
    }

    /// Trace form `E_T(u, v) = Σ_e c_e |δû|^{p-2} δû δv̂` over p-harmonic
    /// extensions `û`, `v̂`.
    pub fn form_et(&self, u_z: &[f64], v_z: &[f64], opts: &SolverOptions) -> Result<f64> {
        let p = self.params.p();
        let ext_u = self.harmonic_extension(u_z, opts)?.solution;
        let ext_v = self.harmonic_extension(v_z, opts)?.solution;
        let mut total = 0.0;
        for (ei, &(a, b)) in self.network.edges().iter().enumerate() {
            let c = self.network.conductance(ei, p);
            total += c * calculus::signed_pow(ext_u[a] - ext_u[b], p - 1.0) * (ext_v[a] - ext_v[b]);
        }
        Ok(total)
    }

    /// `E_T(u, u)`, evaluated as the p-energy of one extension.
    pub fn et_energy(&self, u_z: &[f64], opts: &SolverOptions) -> Result<f64> {
        let ext = self.harmonic_extension(u_z, opts)?.solution;
        Ok(self.network.p_energy(&ext, self.params.p()))
    }

    /// Neumann solve on the filling with data `f` lumped at the boundary
    /// anchors; the full vertex solution is returned (μ_β-mean zero).
    pub fn solve_full(&self, f: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
        if f.len() != self.space.n() {
            return Err(Error::InvalidParam(format!(
                "data has {} entries for {} points",
                f.len(),
                self.space.n()
            )));
        }
        let rhs = self.filling.boundary().lumped(f, self.filling.n_vertices());
        calculus::solve_neumann(&self.network, self.params.p(), &rhs, opts)
    }

    /// Solve `(-Δ_p)^θ u = f` on `Z`: Neumann solve on the filling followed
    /// by the trace through the boundary anchors, normalized to ν-mean zero.
    pub fn solve(&self, f: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
        let full = self.solve_full(f, opts)?;
        let trace = self.trace_of(&full.solution);
        Ok(SolveReport {
            solution: trace,
            ..full
        })
    }

    /// Pull a filling function back to `Z` through the anchors and project
    /// to ν-mean zero.
    pub fn trace_of(&self, u_filling: &[f64]) -> Vec<f64> {
        let boundary = self.filling.boundary();
        let mut trace: Vec<f64> = boundary
            .anchor_of
            .iter()
            .map(|&a| u_filling[a])
            .collect();
        rng::project_mean_zero(&mut trace, self.space.masses());
        trace
    }

    /// Ratios `E_T(u,u) / E_p(u,u)` over seeded random mean-zero functions.
    pub fn comparability_report(
        &self,
        n_samples: usize,
        seed: u64,
        opts: &SolverOptions,
    ) -> Result<ComparabilityReport> {
        if n_samples < 10 {
            return Err(Error::InvalidParam(format!(
                "need at least 10 samples, got {n_samples}"
            )));
        }
        let kernel = KernelMatrix::assemble(&self.space, self.params.theta(), self.params.p())?;
        let mut r = rng::seeded(seed);
        let mut ratios = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let u = rng::gaussian_mean_zero(&mut r, self.space.masses());
            let et = self.et_energy(&u, opts)?;
            let ep = kernel.energy(&u);
            ratios.push(et / ep);
        }
        let ratio_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio_max = ratios.iter().cloned().fold(0.0f64, f64::max);
        Ok(ComparabilityReport {
            ratio_min,
            ratio_max,
            ratios,
        })
    }

    /// Solve both problems and report the stability quantities of the
    /// data-to-gradient map.
    pub fn stability_experiment(
        &self,
        f1: &[f64],
        f2: &[f64],
        opts: &SolverOptions,
    ) -> Result<StabilityReport> {
        let p = self.params.p();
        let pprime = p / (p - 1.0);
        let boundary = self.filling.boundary();
        let u1 = self.solve_full(f1, opts)?.solution;
        let u2 = self.solve_full(f2, opts)?.solution;
        let diff: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        let grad_distance = self.network.gradient_norm(&diff, p);
        let fdiff: Vec<f64> = f1.iter().zip(f2).map(|(a, b)| a - b).collect();
        let data_distance = boundary.weighted_norm(&fdiff, pprime);
        let norm_f1 = boundary.weighted_norm(f1, pprime);
        let norm_f2 = boundary.weighted_norm(f2, pprime);
        let (kappa, tau) = stability_exponents(p);
        let denom = norm_f1.max(norm_f2).powf(kappa) * data_distance.powf(tau);
        let constant = if data_distance == 0.0 || denom == 0.0 {
            0.0
        } else {
            grad_distance / denom
        };
        Ok(StabilityReport {
            grad_distance,
            data_distance,
            norm_f1,
            norm_f2,
            kappa,
            tau,
            constant,
        })
    }
}

/// Least-squares fit of `log |u(x)-u(y)|` against `log d(x,y)` over all
/// pairs with a nonzero value gap.
pub fn holder_fit(space: &FiniteMetricMeasureSpace, u: &[f64]) -> Result<HolderFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..space.n() {
        for j in (i + 1)..space.n() {
            let gap = (u[i] - u[j]).abs();
            if gap > 0.0 {
                xs.push(space.dist(i, j).ln());
                ys.push(gap.ln());
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::ConstantInput);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::ConstantInput);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(HolderFit {
        exponent: slope,
        constant: intercept.exp(),
    })
}

/// Harnack ratio table: for each ball `B(z, R)` with `B(z, 4R) ⊆ W`, the
/// spread `sup_B u / inf_B u`. Diagnostic only; zeros inside `W` produce
/// flagged infinite rows. Requires `u ≥ 0`.
pub fn harnack_report(
    space: &FiniteMetricMeasureSpace,
    u: &[f64],
    region: &[usize],
) -> Result<Vec<HarnackRow>> {
    let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_u < 0.0 {
        return Err(Error::NegativeValues(min_u));
    }
    let in_region = {
        let mut mask = vec![false; space.n()];
        for &z in region {
            mask[z] = true;
        }
        mask
    };
    let mut rows = Vec::new();
    for &z in region {
        for r in space.realized_distances() {
            let radius = r;
            // B(z, 4R) must stay inside W
            let contained =
                (0..space.n()).all(|y| space.dist(z, y) >= 4.0 * radius || in_region[y]);
            if !contained {
                continue;
            }
            let members: Vec<usize> = (0..space.n())
                .filter(|&y| space.dist(z, y) < radius)
                .collect();
            if members.is_empty() {
                continue;
            }
            let sup = members.iter().map(|&y| u[y]).fold(f64::NEG_INFINITY, f64::max);
            let inf = members.iter().map(|&y| u[y]).fold(f64::INFINITY, f64::min);
            let (ratio, flagged) = if inf > 0.0 {
                (sup / inf, false)
            } else if sup == 0.0 {
                (1.0, false)
            } else {
                (f64::INFINITY, true)
            };
            rows.push(HarnackRow {
                center: z,
                radius,
                sup,
                inf,
                ratio,
                flagged_infinite: flagged,
            });
        }
    }
    Ok(rows)
}

/// Spectral reference solution for `p = 2`: eigendecompose the ν-weighted
/// local graph Laplacian on `Z` (edges between points closer than
/// `neighbor_radius`) and return `u = Σ_{λ_k>0} λ_k^{-θ} ⟨f, e_k⟩_ν e_k`.
pub fn spectral_reference_p2(
    space: &FiniteMetricMeasureSpace,
    f: &[f64],
    theta: f64,
    neighbor_radius: f64,
) -> Result<Vec<f64>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "theta = {theta} must lie in (0, 1]"
        )));
    }
    let n = space.n();
    let sum: f64 = f.iter().zip(space.masses()).map(|(v, m)| v * m).sum();
    let tol = 1e-10 * (1.0 + f.iter().map(|v| v.abs()).sum::<f64>());
    if sum.abs() > tol {
        return Err(Error::IncompatibleData { sum, tol });
    }

    // weighted Laplacian L = D - W with W_xy = ν_x ν_y on neighbor pairs,
    // symmetrized against the ν inner product
    let mut w = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            if x != y && space.dist(x, y) < neighbor_radius {
                w[(x, y)] = space.mass(x) * space.mass(y);
            }
        }
    }
    let mut lap = DMatrix::zeros(n, n);
    for x in 0..n {
        let deg: f64 = w.row(x).sum();
        lap[(x, x)] = deg;
        for y in 0..n {
            if x != y {
                lap[(x, y)] = -w[(x, y)];
            }
        }
    }
    let half: Vec<f64> = space.masses().iter().map(|m| m.sqrt()).collect();
    let mut b = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            b[(x, y)] = lap[(x, y)] / (half[x] * half[y]);
        }
    }
    let eig = SymmetricEigen::new(b);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let zero_tol = 1e-12 * lambda_max.max(1.0);
    let n_zero = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l.abs() <= zero_tol)
        .count();
    if n_zero > 1 {
        return Err(Error::DegenerateSpectrum);
    }

    let fv = DVector::from_row_slice(f);
    let mut u = vec![0.0; n];
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        if lambda <= zero_tol {
            continue;
        }
        // e_k = M^{-1/2} φ_k is ν-orthonormal
        let phi = eig.eigenvectors.column(k);
        let e: Vec<f64> = (0..n).map(|x| phi[x] / half[x]).collect();
        let coeff: f64 = (0..n).map(|x| fv[x] * e[x] * space.mass(x)).sum();
        let scale = lambda.powf(-theta) * coeff;
        for x in 0..n {
            u[x] += scale * e[x];
        }
    }
    Ok(u)
}
