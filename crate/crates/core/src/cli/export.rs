//! Plot-ready CSV tables of the solved value functions and their reload.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hjbsolve::{Region, ValueFunctionLevel, ValueFunctions};

pub const VALUES_HEADER: &str = "j,u,v,dv_left,dv_right,region";
pub const BOUNDARIES_HEADER: &str = "j,b,b_plus_b_prev,gamma,vbar";

pub const VALUES_FILE: &str = "value_functions.csv";
pub const BOUNDARIES_FILE: &str = "boundaries.csv";

fn push_level_rows(out: &mut String, level: &ValueFunctionLevel) {
    for i in 0..level.grid.len() {
        let u = level.grid[i];
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            level.j,
            u,
            level.values[i],
            level.deriv_left[i],
            level.deriv_right[i],
            level.region(u)
        );
    }
}

/// Grid values of one level.
pub fn level_csv(level: &ValueFunctionLevel) -> String {
    let mut out = format!("{VALUES_HEADER}\n");
    push_level_rows(&mut out, level);
    out
}

/// Grid values of every level in one table.
pub fn values_csv(vf: &ValueFunctions) -> String {
    let mut out = format!("{VALUES_HEADER}\n");
    for level in &vf.levels {
        push_level_rows(&mut out, level);
    }
    out
}

pub fn boundaries_csv(vf: &ValueFunctions) -> String {
    let mut out = format!("{BOUNDARIES_HEADER}\n");
    for l in &vf.levels {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            l.j,
            l.b,
            l.b + l.b_prev,
            l.gamma,
            l.vbar
        );
    }
    out
}

pub fn level_file_name(j: usize) -> String {
    format!("level_{j}.csv")
}

/// Writes `value_functions.csv`, `boundaries.csv` and one `level_<j>.csv`
/// per level into `dir`. Returns the paths written.
pub fn export_plotdata(vf: &ValueFunctions, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put(VALUES_FILE.into(), values_csv(vf))?;
    put(BOUNDARIES_FILE.into(), boundaries_csv(vf))?;
    for level in &vf.levels {
        put(level_file_name(level.j), level_csv(level))?;
    }
    Ok(written)
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {header:?}"),
            })
        }
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l.split(',').collect())))
}

fn field<T: std::str::FromStr>(line: usize, cols: &[&str], i: usize) -> Result<T> {
    cols.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad or missing column {}", i + 1),
        })
}

/// Rebuilds the interpolating levels from a values table and a boundaries
/// table written by this module.
pub fn load_levels(values: &str, boundaries: &str) -> Result<Vec<ValueFunctionLevel>> {
    let mut levels: Vec<ValueFunctionLevel> = Vec::new();
    for (line, cols) in rows(boundaries, BOUNDARIES_HEADER)? {
        let j: usize = field(line, &cols, 0)?;
        let b: f64 = field(line, &cols, 1)?;
        let bb: f64 = field(line, &cols, 2)?;
        let gamma: f64 = field(line, &cols, 3)?;
        let vbar: f64 = field(line, &cols, 4)?;
        if j != levels.len() + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("levels out of order at j = {j}"),
            });
        }
        let mut breakpoints = vec![0.0, b];
        for x in [bb, gamma] {
            if x > *breakpoints.last().unwrap() {
                breakpoints.push(x);
            }
        }
        levels.push(ValueFunctionLevel {
            j,
            b,
            b_prev: bb - b,
            gamma,
            breakpoints,
            grid: Vec::new(),
            values: Vec::new(),
            deriv_left: Vec::new(),
            deriv_right: Vec::new(),
            vbar,
        });
    }
    for (line, cols) in rows(values, VALUES_HEADER)? {
        let j: usize = field(line, &cols, 0)?;
        let level = levels
            .get_mut(j.wrapping_sub(1))
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("level {j} missing from the boundaries table"),
            })?;
        if cols.len() != 6 || Region::parse(cols[5]).is_none() {
            return Err(Error::Parse {
                line,
                msg: "expected 6 columns ending with a region name".into(),
            });
        }
        level.grid.push(field(line, &cols, 1)?);
        level.values.push(field(line, &cols, 2)?);
        level.deriv_left.push(field(line, &cols, 3)?);
        level.deriv_right.push(field(line, &cols, 4)?);
    }
    if let Some(l) = levels.iter().find(|l| l.grid.len() < 2) {
        return Err(Error::Config(format!(
            "level {} has fewer than two grid rows",
            l.j
        )));
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjbsolve::{build_all, SolverSettings};
    use crate::params::PoolParams;

    fn reference() -> ValueFunctions {
        build_all(&PoolParams::reference(), &SolverSettings::default()).unwrap()
    }

    #[test]
    fn boundaries_rows() {
        let vf = reference();
        let text = boundaries_csv(&vf);
        let row: Vec<f64> = text
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .skip(1)
            .map(|x| x.parse().unwrap())
            .collect();
        assert!(text.lines().nth(2).unwrap().starts_with("2,"));
        assert!((row[0] - 0.8).abs() < 1e-15);
        assert!((row[1] - 1.6).abs() < 1e-15);
        assert!((row[2] - 1.6).abs() < 1e-15);
        assert!((row[3] - 5.615_450_730_960_796).abs() < 1e-8);
    }

    #[test]
    fn single_loan_regions() {
        let p = PoolParams {
            loans: 1,
            alpha: vec![0.25],
            ..PoolParams::reference()
        };
        let vf = build_all(&p, &SolverSettings::default()).unwrap();
        let text = values_csv(&vf);
        let regions: Vec<(f64, &str)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let c: Vec<&str> = l.split(',').collect();
                (c[1].parse().unwrap(), c[5])
            })
            .collect();
        assert_eq!(regions, vec![(0.0, "linear-low"), (0.8, "linear-high")]);
    }

    #[test]
    fn reload_reproduces_nodes_and_interpolant() {
        let vf = reference();
        let levels = load_levels(&values_csv(&vf), &boundaries_csv(&vf)).unwrap();
        assert_eq!(levels, vf.levels);
        for (a, b) in levels.iter().zip(&vf.levels) {
            for k in 0..=200 {
                let u = 3.0 * k as f64 / 200.0;
                assert_eq!(a.value(u), b.value(u));
            }
        }
    }

    #[test]
    fn reload_rejects_bad_input() {
        let vf = reference();
        let b = boundaries_csv(&vf);
        assert!(load_levels("j,u\n", &b).is_err());
        assert!(load_levels(&format!("{VALUES_HEADER}\n4,0,0,0,0,interior\n"), &b).is_err());
        assert!(load_levels(&format!("{VALUES_HEADER}\n1,0,0,0,0,nowhere\n"), &b).is_err());
    }
}
