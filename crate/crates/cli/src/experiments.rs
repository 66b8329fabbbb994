//! Experiment drivers. Each driver writes `manifest.txt` plus a structured
//! `report.txt` and CSV data into the output directory; failures leave a
//! machine-readable `error.txt` and a nonzero exit.

use std::path::Path;

use fracfill::besov::{self, KernelMatrix};
use fracfill::calculus::{self, Network, SolverOptions};
use fracfill::filling::{FillingGraph, FillingParams};
use fracfill::fractional::{self, FractionalProblem};
use fracfill::rng;
use fracfill::space::FiniteMetricMeasureSpace;
use fracfill::spherical::{self, ProductGrid};

use crate::config::{Config, ExperimentKind};
use crate::report::{write_error_record, write_manifest, CsvReport, TextReport};
use crate::spaceio;

fn solver_options(config: &Config) -> SolverOptions {
    let mut opts = SolverOptions::with_tolerance(config.solver.tolerance);
    opts.max_iterations = config.solver.max_iterations;
    opts
}

fn filling_params(config: &Config) -> Result<FillingParams, String> {
    FillingParams::new(
        config.params.alpha,
        config.params.tau,
        config.params.depth,
        config.params.p,
        config.params.theta,
    )
    .map_err(|e| e.to_string())
}

fn boundary_data(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
    seed: u64,
) -> Result<Vec<f64>, String> {
    match config.data.source.as_str() {
        "random" => Ok(rng::gaussian_mean_zero(&mut rng::seeded(seed), space.masses())),
        "values" => {
            if config.data.values.len() != space.n() {
                return Err(format!(
                    "data.values has {} entries for {} points",
                    config.data.values.len(),
                    space.n()
                ));
            }
            Ok(config.data.values.clone())
        }
        other => Err(format!("unknown data source `{other}`")),
    }
}

/// Run one experiment. On module errors an `error.txt` record is written and
/// the error is returned for the nonzero exit path.
pub fn run(
    kind: ExperimentKind,
    config: &Config,
    config_raw: &str,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<(), String> {
    std::fs::create_dir_all(out_dir).map_err(|e| format!("cannot create output dir: {e}"))?;
    let seed = seed_override.unwrap_or(config.experiment.seed);
    let (space, space_desc) = spaceio::load_space(&config.space)?;
    write_manifest(out_dir, kind.as_str(), config_raw, seed, &space, &space_desc)
        .map_err(|e| e.to_string())?;

    let outcome = match kind {
        ExperimentKind::Build => run_build(config, &space, out_dir),
        ExperimentKind::SolveNeumann => run_solve_neumann(config, &space, seed, out_dir),
        ExperimentKind::SolveFractional => run_solve_fractional(config, &space, seed, out_dir),
        ExperimentKind::Verify => run_verify(config, &space, seed, out_dir),
        ExperimentKind::Stability => run_stability(config, &space, seed, out_dir),
        ExperimentKind::Sphericalize => run_sphericalize(config, &space, out_dir),
    };
    if let Err(msg) = &outcome {
        let _ = write_error_record(out_dir, kind.as_str(), msg);
    }
    outcome
}

fn build_filling(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
) -> Result<(FillingParams, FillingGraph), String> {
    let params = filling_params(config)?;
    let nets = space
        .greedy_net_hierarchy(params.alpha(), params.depth())
        .map_err(|e| e.to_string())?;
    let graph = FillingGraph::build(space, &nets, params).map_err(|e| e.to_string())?;
    Ok((params, graph))
}

fn run_build(config: &Config, space: &FiniteMetricMeasureSpace, out: &Path) -> Result<(), String> {
    let (params, graph) = build_filling(config, space)?;

    let mut file = std::fs::File::create(out.join("graph.txt")).map_err(|e| e.to_string())?;
    graph.export(&mut file).map_err(|e| e.to_string())?;

    let doubling = space.doubling_report();
    let codim = graph.codimension_check(space);
    let mut r = TextReport::new("build");
    r.line("points", space.n());
    r.line("diam", space.diam());
    r.line("rescale_factor", space.rescale_factor());
    r.line("vertices", graph.n_vertices());
    r.line("edges", graph.edges().len());
    r.line("alpha", params.alpha());
    r.line("tau", params.tau());
    r.line("depth", params.depth());
    r.line("p", params.p());
    r.line("theta", params.theta());
    r.line("epsilon", params.epsilon());
    r.line("beta", params.beta());
    r.line("codimension_Theta", params.codimension());
    r.line("total_measure", graph.total_measure());
    r.line("doubling_constant", doubling.constant);
    r.line("q_lower", doubling.q_lower);
    r.line("codim_ratio_min", codim.ratio_min);
    r.line("codim_ratio_max", codim.ratio_max);
    r.line("codim_spread", codim.spread());
    r.line("boundary_anchors", graph.boundary().anchor_vertices().len());
    r.write_to(&out.join("report.txt")).map_err(|e| e.to_string())
}

fn run_solve_neumann(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
    seed: u64,
    out: &Path,
) -> Result<(), String> {
    let (params, graph) = build_filling(config, space)?;
    let f = boundary_data(config, space, seed)?;
    let net = Network::from_filling(&graph);
    let rhs = graph.boundary().lumped(&f, graph.n_vertices());
    let opts = solver_options(config);
    let rep = calculus::solve_neumann(&net, params.p(), &rhs, &opts).map_err(|e| e.to_string())?;

    let mut values = CsvReport::new(&["vertex", "point", "level", "value"]);
    for (v, vert) in graph.vertices().iter().enumerate() {
        values.row_display(&[&v, &vert.point, &vert.level, &rep.solution[v]]);
    }
    values
        .write_to(&out.join("solution.csv"))
        .map_err(|e| e.to_string())?;

    let mut flux_csv = CsvReport::new(&["anchor_vertex", "flux", "minus_data"]);
    let mut flux_err: f64 = 0.0;
    let mut flux_total = 0.0;
    if params.depth() >= 2 {
        let flux = graph
            .flux_pairing(&rep.solution, params.p(), 1)
            .map_err(|e| e.to_string())?;
        for &(anchor, value) in &flux {
            flux_csv.row_display(&[&anchor, &value, &(-rhs[anchor])]);
            flux_err = flux_err.max((value + rhs[anchor]).abs());
            flux_total += value;
        }
    }
    flux_csv
        .write_to(&out.join("flux.csv"))
        .map_err(|e| e.to_string())?;

    let mut r = TextReport::new("solve-neumann");
    r.line("p", params.p());
    r.line("normalization", rep.normalization.as_str());
    r.line("energy", rep.energy);
    r.line("residual_inf", rep.residual_inf);
    r.line("iterations", rep.iterations);
    r.line("regularizer_used", rep.regularizer_used);
    r.line("data_compatibility_sum", graph.boundary().weighted_sum(&f));
    r.line("flux_max_abs_error", flux_err);
    r.line("flux_total", flux_total);
    r.write_to(&out.join("report.txt")).map_err(|e| e.to_string())
}

fn run_solve_fractional(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
    seed: u64,
    out: &Path,
) -> Result<(), String> {
    let params = filling_params(config)?;
    let problem =
        FractionalProblem::new(space.clone(), params).map_err(|e| e.to_string())?;
    let f = boundary_data(config, space, seed)?;
    let opts = solver_options(config);
    let rep = problem.solve(&f, &opts).map_err(|e| e.to_string())?;

    let mut values = CsvReport::new(&["point", "f", "solution"]);
    for z in 0..space.n() {
        values.row_display(&[&z, &f[z], &rep.solution[z]]);
    }
    values
        .write_to(&out.join("solution.csv"))
        .map_err(|e| e.to_string())?;

    // pair gaps for external Hölder plotting
    let mut pairs = CsvReport::new(&["distance", "value_gap"]);
    for i in 0..space.n() {
        for j in (i + 1)..space.n() {
            pairs.row_display(&[&space.dist(i, j), &(rep.solution[i] - rep.solution[j]).abs()]);
        }
    }
    pairs
        .write_to(&out.join("pairs.csv"))
        .map_err(|e| e.to_string())?;

    let mut r = TextReport::new("solve-fractional");
    r.line("p", params.p());
    r.line("theta", params.theta());
    r.line("normalization", rep.normalization.as_str());
    r.line("energy", rep.energy);
    r.line("residual_inf", rep.residual_inf);
    r.line("iterations", rep.iterations);
    match fractional::holder_fit(space, &rep.solution) {
        Ok(fit) => {
            r.line("holder_exponent", fit.exponent);
            r.line("holder_constant", fit.constant);
        }
        Err(_) => r.line("holder_exponent", "constant-input"),
    }
    // trace form versus direct Besov form on the computed solution
    let kernel =
        KernelMatrix::assemble(space, params.theta(), params.p()).map_err(|e| e.to_string())?;
    let ep = kernel.energy(&rep.solution);
    if ep > 0.0 {
        let et = problem
            .et_energy(&rep.solution, &opts)
            .map_err(|e| e.to_string())?;
        r.line("form_ratio_et_over_ep", et / ep);
    }
    if params.p() == 2.0 {
        let radius = 1.0 / params.alpha();
        match fractional::spectral_reference_p2(space, &f, params.theta(), radius) {
            Ok(spectral) => {
                r.line(
                    "spectral_correlation",
                    weighted_correlation(&rep.solution, &spectral, space.masses()),
                );
            }
            Err(e) => r.line("spectral_correlation", format!("unavailable ({e})")),
        }
    }
    r.write_to(&out.join("report.txt")).map_err(|e| e.to_string())
}

/// ν-weighted Pearson correlation of two mean-zero functions.
pub fn weighted_correlation(u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let mu: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let mv: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let mut uu = 0.0;
    let mut vv = 0.0;
    let mut uv = 0.0;
    for i in 0..u.len() {
        let a = u[i] - mu;
        let b = v[i] - mv;
        uu += a * a * w[i];
        vv += b * b * w[i];
        uv += a * b * w[i];
    }
    uv / (uu.sqrt() * vv.sqrt())
}

struct Checks {
    report: TextReport,
    failed: usize,
}

impl Checks {
    fn new() -> Self {
        Self {
            report: TextReport::new("verify"),
            failed: 0,
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl std::fmt::Display) {
        let status = if pass { "pass" } else { "FAIL" };
        self.report.line(name, format!("{status} ({detail})"));
        if !pass {
            self.failed += 1;
        }
    }
}

fn run_verify(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
    seed: u64,
    out: &Path,
) -> Result<(), String> {
    let params = filling_params(config)?;
    let opts = solver_options(config);
    let mut c = Checks::new();

    // nets: separation, maximality, nesting
    let nets = space
        .greedy_net_hierarchy(params.alpha(), params.depth())
        .map_err(|e| e.to_string())?;
    let mut net_ok = nets.level(0).len() == 1;
    for n in 0..=nets.depth() {
        let scale = nets.scale(n);
        let members = nets.level(n);
        for (ai, &a) in members.iter().enumerate() {
            for &b in &members[ai + 1..] {
                net_ok &= space.dist(a, b) >= scale;
            }
        }
        for z in 0..space.n() {
            let min_d = members
                .iter()
                .map(|&m| space.dist(z, m))
                .fold(f64::INFINITY, f64::min);
            net_ok &= min_d < scale;
        }
        if n > 0 {
            for m in nets.level(n - 1) {
                net_ok &= members.contains(m);
            }
        }
    }
    c.check("net_hierarchy", net_ok, format!("depth {}", nets.depth()));

    let graph = FillingGraph::build(space, &nets, params).map_err(|e| e.to_string())?;
    let positive = graph
        .edges()
        .iter()
        .all(|e| e.unif_length > 0.0 && e.measure > 0.0);
    c.check(
        "filling_connected_positive",
        positive,
        format!("{} vertices, {} edges", graph.n_vertices(), graph.edges().len()),
    );

    let wsum: f64 = graph.boundary().weight.iter().sum();
    c.check(
        "boundary_weights_partition",
        (wsum - space.total_mass()).abs() < 1e-12,
        format!("sum {wsum}"),
    );

    let bound = (1.0 + 1.0 / params.alpha()) / (2.0 * (1.0 - 1.0 / params.alpha()));
    let dists = graph.unif_distances_from(graph.root());
    let max_d = dists.iter().cloned().fold(0.0f64, f64::max);
    c.check(
        "uniformized_diameter_bound",
        max_d <= bound + 1e-12,
        format!("max {max_d} vs bound {bound}"),
    );

    let codim = graph.codimension_check(space);
    c.check(
        "codimension_ratios",
        codim.ratio_min > 0.0 && codim.ratio_max.is_finite(),
        format!("spread {}", codim.spread()),
    );

    let theta_identity = (params.theta() - (1.0 - params.codimension() / params.p())).abs();
    c.check("theta_codim_identity", theta_identity == 0.0, theta_identity);

    // Neumann solve + weak residual + flux identity
    let f = rng::gaussian_mean_zero(&mut rng::seeded(seed), space.masses());
    let net = Network::from_filling(&graph);
    let rhs = graph.boundary().lumped(&f, graph.n_vertices());
    let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match calculus::solve_neumann(&net, params.p(), &rhs, &opts) {
        Ok(rep) => {
            let resid = net.weak_residual(&rep.solution, params.p(), &rhs);
            let rmax = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            c.check(
                "weak_residual",
                rmax < 1e-7 * (1.0 + fnorm),
                format!("inf-norm {rmax}"),
            );
            if params.depth() >= 2 {
                let flux = graph
                    .flux_pairing(&rep.solution, params.p(), 1)
                    .map_err(|e| e.to_string())?;
                let data_scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let worst = flux
                    .iter()
                    .map(|&(a, v)| (v + rhs[a]).abs())
                    .fold(0.0f64, f64::max);
                let total: f64 = flux.iter().map(|&(_, v)| v).sum();
                c.check(
                    "flux_matches_data",
                    worst < 1e-6 * data_scale,
                    format!("max error {worst}"),
                );
                c.check("flux_total_zero", total.abs() < 1e-8, format!("total {total}"));
            }
            // homogeneity
            let scaled: Vec<f64> = rhs.iter().map(|v| 2.0 * v).collect();
            let rep2 = calculus::solve_neumann(&net, params.p(), &scaled, &opts)
                .map_err(|e| e.to_string())?;
            let factor = 2.0f64.powf(1.0 / (params.p() - 1.0));
            let sol_norm = rep2
                .solution
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-30);
            let hom = rep
                .solution
                .iter()
                .zip(&rep2.solution)
                .map(|(a, b)| (a * factor - b).abs())
                .fold(0.0f64, f64::max)
                / sol_norm;
            c.check("p_homogeneity", hom < 1e-6, format!("relative {hom}"));
        }
        Err(e) => {
            c.check("weak_residual", false, format!("solver failed: {e}"));
        }
    }

    // Besov side: positivity and first-order condition of the direct solve
    let kernel =
        KernelMatrix::assemble(space, params.theta(), params.p()).map_err(|e| e.to_string())?;
    if space.n() > 1 {
        let u = rng::gaussian_mean_zero(&mut rng::seeded(seed + 1), space.masses());
        c.check("besov_energy_positive", kernel.energy(&u) > 0.0, kernel.energy(&u));
        match besov::solve_nonlocal(space, &f, params.theta(), params.p(), &opts) {
            Ok(rep) => {
                let mut worst: f64 = 0.0;
                for v in 0..space.n() {
                    let mut phi = vec![0.0; space.n()];
                    phi[v] = 1.0;
                    let lhs = kernel.form(&rep.solution, &phi);
                    worst = worst.max((lhs - f[v] * space.mass(v)).abs());
                }
                c.check(
                    "nonlocal_first_order",
                    worst < 1e-8 * (1.0 + fnorm),
                    format!("max defect {worst}"),
                );
            }
            Err(e) => c.check("nonlocal_first_order", false, format!("solver failed: {e}")),
        }
    } else {
        c.check("besov_energy_positive", true, "single point");
    }

    c.report.blank();
    c.report.line("checks_failed", c.failed);
    c.report
        .write_to(&out.join("report.txt"))
        .map_err(|e| e.to_string())?;
    if c.failed > 0 {
        return Err(format!("{} verification checks failed", c.failed));
    }
    Ok(())
}

fn run_stability(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
    seed: u64,
    out: &Path,
) -> Result<(), String> {
    let params = filling_params(config)?;
    let problem =
        FractionalProblem::new(space.clone(), params).map_err(|e| e.to_string())?;
    let opts = solver_options(config);
    let mut r = rng::seeded(seed);
    let direction = rng::gaussian_mean_zero(&mut r, space.masses());
    let base: Vec<f64> = match config.stability.base.as_str() {
        "zero" => vec![0.0; space.n()],
        "random" => rng::gaussian_mean_zero(&mut r, space.masses()),
        other => return Err(format!("unknown stability base `{other}`")),
    };

    let (kappa, tau) = fractional::stability_exponents(params.p());
    let mut csv = CsvReport::new(&[
        "scale",
        "data_distance",
        "grad_distance",
        "constant",
    ]);
    let mut constants = Vec::new();
    let mut scales = config.stability.scales.clone();
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &scale in &scales {
        let perturbed: Vec<f64> = base
            .iter()
            .zip(&direction)
            .map(|(b, d)| b + scale * d)
            .collect();
        let rep = problem
            .stability_experiment(&base, &perturbed, &opts)
            .map_err(|e| e.to_string())?;
        csv.row_display(&[&scale, &rep.data_distance, &rep.grad_distance, &rep.constant]);
        constants.push(rep.constant);
    }
    csv.write_to(&out.join("stability.csv")).map_err(|e| e.to_string())?;

    let mut sorted = constants.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let mut r = TextReport::new("stability");
    r.line("p", params.p());
    r.line("kappa", kappa);
    r.line("tau", tau);
    r.line("base", &config.stability.base);
    r.line("rows", constants.len());
    r.line("constant_median", median);
    r.line(
        "constant_max",
        constants.iter().cloned().fold(0.0f64, f64::max),
    );
    r.line(
        "constant_min",
        constants.iter().cloned().fold(f64::INFINITY, f64::min),
    );
    r.write_to(&out.join("report.txt")).map_err(|e| e.to_string())
}

fn run_sphericalize(
    config: &Config,
    space: &FiniteMetricMeasureSpace,
    out: &Path,
) -> Result<(), String> {
    let s = &config.sphericalize;
    let grid = ProductGrid::geometric(
        space.clone(),
        s.y_min,
        s.y_max,
        s.levels,
        s.a,
        s.beta,
        s.neighbor_radius,
    )
    .map_err(|e| e.to_string())?;
    let graph = spherical::build_sphericalized(&grid);

    let mut file = std::fs::File::create(out.join("graph.txt")).map_err(|e| e.to_string())?;
    graph.export(&mut file).map_err(|e| e.to_string())?;

    let mut csv = CsvReport::new(&["y", "dist_to_infinity_discrete", "dist_to_infinity_exact"]);
    let down = graph.level_distances_to_infinity();
    for (j, &d) in down.iter().enumerate() {
        let y = graph.y_of_level(j);
        csv.row_display(&[&y, &d, &spherical::dist_to_infinity(y, s.beta)]);
    }
    csv.write_to(&out.join("levels.csv")).map_err(|e| e.to_string())?;

    let mut r = TextReport::new("sphericalize");
    r.line("levels", s.levels);
    r.line("a", s.a);
    r.line("beta", s.beta);
    r.line("theta", grid.theta());
    r.line("total_measure", graph.total_measure());
    r.line("john_margin", graph.john_margin());
    // continuity of the closed-form distance at the kink
    let branch_gap = (spherical::dist_to_infinity(1.0, s.beta)
        - (1.0 / (s.beta - 1.0) + (1.0 - 1.0)))
        .abs();
    r.line("dist_branch_gap_at_1", branch_gap);
    for &radius in &s.radii {
        let exact = spherical::ball_at_infinity_measure(radius, s.beta, s.a, space.total_mass())
            .map_err(|e| e.to_string())?;
        let discrete = graph.infinity_ball_mass(radius).map_err(|e| e.to_string())?;
        r.line(
            format!("ball_at_infinity_relerr_R{radius}").as_str(),
            ((discrete - exact) / exact).abs(),
        );
    }
    r.write_to(&out.join("report.txt")).map_err(|e| e.to_string())
}
