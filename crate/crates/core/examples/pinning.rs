//! Pinning run: computes the empirically pinned constants asserted by the
//! acceptance suite. Rerun with
//!
//! ```text
//! cargo run --release -p fracfill --example pinning
//! ```
//!
//! and compare against the committed output under `pinning/`.

use fracfill::calculus::SolverOptions;
use fracfill::filling::FillingParams;
use fracfill::fractional::{self, FractionalProblem};
use fracfill::{fixtures, rng};

fn problem(n: usize, depth: usize, p: f64, theta: f64) -> FractionalProblem {
    let space = fixtures::cycle(n).unwrap();
    let params = FillingParams::new(2.0, 1.5, depth, p, theta).unwrap();
    FractionalProblem::new(space, params).unwrap()
}

fn smooth_mode(n: usize) -> Vec<f64> {
    let mut f: Vec<f64> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let w = vec![1.0 / n as f64; n];
    rng::project_mean_zero(&mut f, &w);
    f
}

fn main() {
    let opts = SolverOptions::with_tolerance(1e-11);

    // comparability spread, cycle(32), p = 2, theta = 1/2, 50 samples, seed 505
    for depth in [6, 7] {
        let prob = problem(32, depth, 2.0, 0.5);
        let rep = prob.comparability_report(50, 505, &opts).unwrap();
        println!(
            "comparability cycle32 depth {depth}: min {:.12e} max {:.12e} spread {:.12e}",
            rep.ratio_min,
            rep.ratio_max,
            rep.spread()
        );
    }

    // codimension spread, cycle(32), p = 2, theta = 1/2
    for depth in [6, 7] {
        let prob = problem(32, depth, 2.0, 0.5);
        let rep = prob.filling().codimension_check(prob.space());
        println!(
            "codimension cycle32 depth {depth}: min {:.12e} max {:.12e} spread {:.12e}",
            rep.ratio_min,
            rep.ratio_max,
            rep.spread()
        );
    }

    // spectral cross-check, cycle(32), theta = 1/2, smooth data
    let f = smooth_mode(32);
    for depth in [6, 7] {
        let prob = problem(32, depth, 2.0, 0.5);
        let u = prob.solve(&f, &opts).unwrap().solution;
        let spectral = fractional::spectral_reference_p2(prob.space(), &f, 0.5, 0.5).unwrap();
        let corr = weighted_correlation(&u, &spectral, prob.space().masses());
        println!("spectral cycle32 depth {depth}: correlation {:.12e}", corr);
    }

    // Hölder fit of the fractional solution for smooth data
    for depth in [6, 7] {
        let prob = problem(32, depth, 2.0, 0.5);
        let u = prob.solve(&f, &opts).unwrap().solution;
        let fit = fractional::holder_fit(prob.space(), &u).unwrap();
        println!(
            "holder cycle32 depth {depth}: exponent {:.12e} constant {:.12e}",
            fit.exponent, fit.constant
        );
    }

    // boundedness ratios sup|u| / ||f||_{p'} across 20 random data, cycle(16)
    for p in [1.5, 2.0, 3.0] {
        for depth in [5, 6] {
            let prob = problem(16, depth, p, 0.5);
            let pprime = p / (p - 1.0);
            let mut r = rng::seeded(808);
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let f = rng::gaussian_mean_zero(&mut r, prob.space().masses());
                let full = prob.solve_full(&f, &opts).unwrap().solution;
                let sup = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let norm = prob.filling().boundary().weighted_norm(&f, pprime);
                worst = worst.max(sup / norm);
            }
            println!("boundedness cycle16 p {p} depth {depth}: max ratio {:.12e}", worst);
        }
    }

    // energy control p_energy(u)^{1/p'} <= C ||f||_{p'}: ratio range
    for p in [1.5, 2.0, 3.0] {
        let prob = problem(16, 5, p, 0.5);
        let pprime = p / (p - 1.0);
        let mut r = rng::seeded(909);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let f = rng::gaussian_mean_zero(&mut r, prob.space().masses());
            let rep = prob.solve_full(&f, &opts).unwrap();
            let norm = prob.filling().boundary().weighted_norm(&f, pprime);
            worst = worst.max(rep.energy.powf(1.0 / pprime) / norm);
        }
        println!("energy_control cycle16 p {p}: max ratio {:.12e}", worst);
    }

    // Poincaré ratio samples on two fixtures
    for (name, space) in [
        ("cycle16", fixtures::cycle(16).unwrap()),
        ("cantor2", fixtures::cantor_like(2).unwrap()),
    ] {
        for p in [1.5, 2.0] {
            let mut r = rng::seeded(707);
            let mut ratios = Vec::new();
            for _ in 0..100 {
                let u = rng::gaussian_vec(&mut r, space.n());
                ratios.push(fracfill::besov::poincare_ratio(&space, &u, 0.5, p).unwrap());
            }
            let max50 = ratios[..50].iter().cloned().fold(0.0f64, f64::max);
            let max100 = ratios.iter().cloned().fold(0.0f64, f64::max);
            println!(
                "poincare {name} p {p}: max50 {:.12e} max100 {:.12e} change {:.4e}",
                max50,
                max100,
                (max100 - max50) / max50
            );
        }
    }
}

fn weighted_correlation(u: &[f64], v: &[f64], w: &[f64]) -> f64 {
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
