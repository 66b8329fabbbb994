//! Built-in desk-scale spaces used by the CLI and the test suite.

use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;

/// `n` equally spaced points on a circle of circumference 1 with the arc
/// metric and uniform mass `1/n`. Diameter is at most `1/2`, so no rescale.
pub fn cycle(n: usize) -> Result<FiniteMetricMeasureSpace> {
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let k = if i > j { i - j } else { j - i };
                    (k.min(n - k) as f64) / (n as f64)
                })
                .collect()
        })
        .collect();
    FiniteMetricMeasureSpace::load_matrix(rows, vec![1.0 / n as f64; n], None)
}

/// Two points at unit distance with masses `(1/2, 1/2)`; the loader rescales
/// the metric to diameter `1/2` and records the factor.
pub fn two_point() -> Result<FiniteMetricMeasureSpace> {
    FiniteMetricMeasureSpace::load_matrix(
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![0.5, 0.5],
        None,
    )
}

/// The distinct interval endpoints of the level-`k` middle-thirds set,
/// embedded in the line, with uniform mass. Level `k` has `2^k` intervals
/// and `2^{k+1}` endpoints.
pub fn cantor_like(k: usize) -> Result<FiniteMetricMeasureSpace> {
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..k {
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for &(a, b) in &intervals {
            let third = (b - a) / 3.0;
            next.push((a, a + third));
            next.push((b - third, b));
        }
        intervals = next;
    }
    let mut points: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let n = points.len();
    let coords: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
    FiniteMetricMeasureSpace::load_points(&coords, vec![1.0 / n as f64; n], None)
}

/// Look up a fixture by name: `cycle(n)`, `two_point`, or `cantor_like(k)`.
pub fn by_name(name: &str) -> Result<FiniteMetricMeasureSpace> {
    let name = name.trim();
    if name == "two_point" {
        return two_point();
    }
    if let Some(arg) = name
        .strip_prefix("cycle(")
        .and_then(|rest| rest.strip_suffix(')'))
    {
        let n: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::UnknownFixture(name.to_string()))?;
        return cycle(n);
    }
    if let Some(arg) = name
        .strip_prefix("cantor_like(")
        .and_then(|rest| rest.strip_suffix(')'))
    {
        let k: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::UnknownFixture(name.to_string()))?;
        return cantor_like(k);
    }
    Err(Error::UnknownFixture(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle4_matches_reference_values() {
        let s = cycle(4).unwrap();
        assert_eq!(s.n(), 4);
        assert_eq!(s.dist(0, 1), 0.25);
        assert_eq!(s.dist(0, 2), 0.5);
        assert_eq!(s.diam(), 0.5);
        assert_eq!(s.rescale_factor(), 1.0);
        assert_eq!(s.total_mass(), 1.0);
    }

    #[test]
    fn two_point_rescaled() {
        let s = two_point().unwrap();
        assert_eq!(s.rescale_factor(), 0.5);
        assert_eq!(s.dist(0, 1), 0.5);
        assert_eq!(s.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn cantor_endpoints_count_and_metric() {
        let s = cantor_like(2).unwrap();
        // level-2 intervals: [0,1/9] [2/9,1/3] [2/3,7/9] [8/9,1] -> 8 endpoints
        assert_eq!(s.n(), 8);
        // raw diam 1, so the loader halves the metric
        assert_eq!(s.rescale_factor(), 0.5);
        assert!((s.dist(0, 1) - 0.5 / 9.0).abs() < 1e-15);
        assert!((s.dist(0, 7) - 0.5).abs() < 1e-15);
        let s0 = cantor_like(0).unwrap();
        assert_eq!(s0.n(), 2);
    }

    #[test]
    fn fixture_lookup() {
        assert_eq!(by_name("cycle(16)").unwrap().n(), 16);
        assert_eq!(by_name("two_point").unwrap().n(), 2);
        assert_eq!(by_name("cantor_like(1)").unwrap().n(), 4);
        assert!(matches!(
            by_name("klein_bottle"),
            Err(Error::UnknownFixture(_))
        ));
    }
}
