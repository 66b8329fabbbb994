//! Space loading: builtin fixtures, coordinate CSV, and matrix + mass files.
//! All reals are parsed as 64-bit floats.

use std::path::Path;

use fracfill::space::FiniteMetricMeasureSpace;
use fracfill::{fixtures, Error};

use crate::config::SpaceSection;

fn parse_row(line: &str) -> Result<Vec<f64>, String> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| format!("cannot parse `{tok}` as a real"))
        })
        .collect()
}

/// Coordinate CSV: columns `x1..xk` plus a final `mass` column; an optional
/// header row is skipped when its first field is not numeric.
pub fn load_points_csv(path: &Path) -> Result<FiniteMetricMeasureSpace, String> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut coords = Vec::new();
    let mut masses = Vec::new();
    for (li, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = line.split(',').next().unwrap_or("").trim();
        if li == 0 && first.parse::<f64>().is_err() {
            continue; // header
        }
        let row = parse_row(line).map_err(|e| format!("{} line {}: {e}", path.display(), li + 1))?;
        if row.len() < 2 {
            return Err(format!(
                "{} line {}: need at least one coordinate and a mass",
                path.display(),
                li + 1
            ));
        }
        let (mass, xs) = row.split_last().unwrap();
        coords.push(xs.to_vec());
        masses.push(*mass);
    }
    FiniteMetricMeasureSpace::load_points(&coords, masses, None).map_err(|e| e.to_string())
}

/// Explicit n×n matrix file plus a one-mass-per-line column file.
pub fn load_matrix_files(
    matrix: &Path,
    mass: &Path,
) -> Result<FiniteMetricMeasureSpace, String> {
    let raw = std::fs::read_to_string(matrix)
        .map_err(|e| format!("cannot read {}: {e}", matrix.display()))?;
    let rows: Vec<Vec<f64>> = raw
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(parse_row)
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{}: {e}", matrix.display()))?;
    let raw_mass = std::fs::read_to_string(mass)
        .map_err(|e| format!("cannot read {}: {e}", mass.display()))?;
    let masses: Vec<f64> = raw_mass
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| format!("{}: bad mass `{}`", mass.display(), l.trim()))
        })
        .collect::<Result<_, _>>()?;
    FiniteMetricMeasureSpace::load_matrix(rows, masses, None).map_err(|e| e.to_string())
}

/// Resolve the `[space]` section to a loaded, validated space plus a short
/// description for the manifest.
pub fn load_space(section: &SpaceSection) -> Result<(FiniteMetricMeasureSpace, String), String> {
    if let Some(name) = &section.fixture {
        let space = fixtures::by_name(name).map_err(|e| match e {
            Error::UnknownFixture(n) => format!("unknown fixture `{n}`"),
            other => other.to_string(),
        })?;
        return Ok((space, format!("fixture {name}")));
    }
    if let Some(points) = &section.points_file {
        let space = load_points_csv(Path::new(points))?;
        return Ok((space, format!("points_file {points}")));
    }
    if let (Some(matrix), Some(mass)) = (&section.matrix_file, &section.mass_file) {
        let space = load_matrix_files(Path::new(matrix), Path::new(mass))?;
        return Ok((space, format!("matrix_file {matrix} + mass_file {mass}")));
    }
    Err("space section needs `fixture`, `points_file`, or `matrix_file` + `mass_file`".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn points_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x1,x2,mass").unwrap();
        writeln!(f, "0.0,0.0,1.0").unwrap();
        writeln!(f, "0.3,0.4,2.0").unwrap();
        drop(f);
        let s = load_points_csv(&path).unwrap();
        assert_eq!(s.n(), 2);
        assert!((s.dist(0, 1) - 0.5).abs() < 1e-12);
        assert_eq!(s.masses(), &[1.0, 2.0]);
    }

    #[test]
    fn matrix_and_mass_files() {
        let dir = tempfile::tempdir().unwrap();
        let mp = dir.path().join("dist.txt");
        let wp = dir.path().join("mass.txt");
        std::fs::write(&mp, "0 0.2\n0.2 0\n").unwrap();
        std::fs::write(&wp, "0.5\n0.5\n").unwrap();
        let s = load_matrix_files(&mp, &wp).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.dist(0, 1), 0.2);
    }
}
