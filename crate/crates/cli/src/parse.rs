//! Parsing of weights, flip probabilities and epsilon grids.

use std::fs;
use std::path::Path;

use ltfnoise_core::NoiseParams;

use crate::CliError;

/// Comma- or whitespace-separated numbers, or `@path` / an existing file with
/// one number per line (`#` starts a comment).
pub fn weights(spec: &str) -> Result<Vec<f64>, CliError> {
    let text = if let Some(path) = spec.strip_prefix('@') {
        read(path)?
    } else if looks_inline(spec) {
        spec.to_string()
    } else if Path::new(spec).is_file() {
        read(spec)?
    } else {
        return Err(CliError::usage(format!("cannot read weights from '{spec}'")));
    };
    let values: Vec<f64> = text
        .lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|line| line.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::usage(format!("'{tok}' is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::usage("no weights given"));
    }
    Ok(values)
}

fn looks_inline(spec: &str) -> bool {
    !spec.is_empty()
        && spec
            .chars()
            .all(|c| c.is_ascii_digit() || ",.-+eE ".contains(c))
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read '{path}': {e}")))
}

/// `p/q` is exact; a decimal is a float unless `exact` asks for its exact
/// decimal fraction.
pub fn epsilon(spec: &str, exact: bool) -> Result<NoiseParams, CliError> {
    let spec = spec.trim();
    let noise = if let Some((p, q)) = spec.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| bad_eps(spec))?;
        let q: u64 = q.trim().parse().map_err(|_| bad_eps(spec))?;
        NoiseParams::rational(p, q)
    } else if exact {
        let (p, q) = decimal_fraction(spec).ok_or_else(|| bad_eps(spec))?;
        NoiseParams::rational(p, q)
    } else {
        NoiseParams::new(spec.parse::<f64>().map_err(|_| bad_eps(spec))?)
    };
    noise.map_err(|e| CliError::usage(e.to_string()))
}

fn bad_eps(spec: &str) -> CliError {
    CliError::usage(format!("'{spec}' is not a probability; use a decimal or p/q"))
}

/// `0.125` as `(125, 1000)`; plain decimals only.
fn decimal_fraction(spec: &str) -> Option<(u64, u64)> {
    let (int, frac) = spec.split_once('.').unwrap_or((spec, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
        return None;
    }
    let den = 10u64.checked_pow(frac.len() as u32)?;
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_value: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some((int.checked_mul(den)?.checked_add(frac_value)?, den))
}

/// Grid grammar:
///
/// - `a,b,c`: explicit values (decimals or `p/q`);
/// - `start:stop:log10[:k]`: `k` points per decade (default 5), both ends included;
/// - `start:stop:lin[:k]`: `k` evenly spaced points (default 10).
pub fn grid(spec: &str) -> Result<Vec<NoiseParams>, CliError> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(CliError::usage("epsilon grid is empty"));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 1 {
        return spec
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| epsilon(s, false))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|g| if g.is_empty() { Err(CliError::usage("epsilon grid is empty")) } else { Ok(g) });
    }
    if !(3..=4).contains(&parts.len()) {
        return Err(CliError::usage(format!("bad grid '{spec}'; expected start:stop:log10[:k] or start:stop:lin[:k]")));
    }
    let number = |s: &str| s.parse::<f64>().map_err(|_| CliError::usage(format!("bad grid bound '{s}'")));
    let (start, stop) = (number(parts[0])?, number(parts[1])?);
    let count = |default: usize| -> Result<usize, CliError> {
        match parts.get(3) {
            Some(k) => k
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| CliError::usage(format!("bad grid count '{k}'"))),
            None => Ok(default),
        }
    };
    if !(start > 0.0 && start <= stop) {
        return Err(CliError::usage("grid needs 0 < start <= stop"));
    }
    let values: Vec<f64> = match parts[2] {
        "log10" | "log" => {
            let per_decade = count(5)? as f64;
            let steps = ((stop / start).log10() * per_decade).round() as usize;
            (0..=steps)
                .map(|k| if k == steps { stop } else { start * 10f64.powf(k as f64 / per_decade) })
                .collect()
        }
        "lin" => {
            let k = count(10)?;
            if k == 1 {
                vec![start]
            } else {
                (0..k)
                    .map(|i| if i == k - 1 { stop } else { start + (stop - start) * i as f64 / (k - 1) as f64 })
                    .collect()
            }
        }
        other => return Err(CliError::usage(format!("unknown grid scale '{other}'; use log10 or lin"))),
    };
    values
        .into_iter()
        .map(|v| NoiseParams::new(v).map_err(|e| CliError::usage(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_and_file_weights() {
        assert_eq!(weights("1,1,1").unwrap(), vec![1.0; 3]);
        assert_eq!(weights("1.5, -2 3").unwrap(), vec![1.5, -2.0, 3.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        fs::write(&path, "# weights\n3\n1\n\n2\n").unwrap();
        let p = path.to_str().unwrap();
        assert_eq!(weights(p).unwrap(), vec![3.0, 1.0, 2.0]);
        assert_eq!(weights(&format!("@{p}")).unwrap(), vec![3.0, 1.0, 2.0]);
        assert!(weights("nope.txt").is_err());
        assert!(weights("1,x").is_err());
        assert!(weights(",").is_err());
    }

    #[test]
    fn epsilon_forms() {
        assert_eq!(epsilon("1/4", false).unwrap().exact(), Some((1, 4)));
        assert_eq!(epsilon("2/8", false).unwrap().exact(), Some((1, 4)));
        assert_eq!(epsilon("0.1", false).unwrap().exact(), None);
        assert_eq!(epsilon("0.1", true).unwrap().exact(), Some((1, 10)));
        assert_eq!(epsilon(".25", true).unwrap().exact(), Some((1, 4)));
        assert_eq!(epsilon("1", true).unwrap().exact(), Some((1, 1)));
        assert!(epsilon("1.5", false).is_err());
        assert!(epsilon("3/2", false).is_err());
        assert!(epsilon("1e-3", true).is_err());
        assert!(epsilon("abc", false).is_err());
    }

    #[test]
    fn grids() {
        let g: Vec<f64> = grid("0.001:0.1:log10").unwrap().iter().map(|n| n.epsilon()).collect();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.001);
        assert_eq!(g[10], 0.1);
        assert!((g[5] - 0.01).abs() < 1e-15);
        assert_eq!(grid("0.001:0.1:log10:1").unwrap().len(), 3);
        let g: Vec<f64> = grid("0.1:0.5:lin:5").unwrap().iter().map(|n| n.epsilon()).collect();
        assert_eq!(g, vec![0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        let g = grid("0.01, 1/8").unwrap();
        assert_eq!(g[1].exact(), Some((1, 8)));
        assert!(grid("").is_err());
        assert!(grid(",").is_err());
        assert!(grid("0.1:0.01:log10").is_err());
        assert!(grid("0:0.1:log10").is_err());
        assert!(grid("0.1:0.2:cubic").is_err());
    }
}
