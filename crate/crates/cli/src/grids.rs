//! Parsing of numeric grid arguments.

use anyhow::{bail, Context, Result};

/// Parses `a,b,c`, a single value, `lo:hi:lin:n` or `lo:hi:log[:per_decade]`.
///
/// Logarithmic grids default to 100 points per decade and are rounded to
/// whole photon numbers when `lo >= 1`, with duplicates removed.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("`{s}` is not a number"))
    };
    let grid = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [lo, hi, "lin", n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.parse().context("point count")?;
            if n < 2 {
                bail!("a linear grid needs at least two points");
            }
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        }
        [lo, hi, "log", rest @ ..] if rest.len() <= 1 => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if !(lo > 0.0 && hi >= lo) {
                bail!("a log grid needs 0 < lo <= hi");
            }
            let per_decade = match rest {
                [d] => d.parse::<usize>().context("points per decade")?,
                _ => 100,
            };
            let decades = (hi / lo).log10();
            let steps = ((decades * per_decade as f64).round() as usize).max(1);
            let mut out: Vec<f64> = (0..=steps)
                .map(|i| lo * 10f64.powf(decades * i as f64 / steps as f64))
                .map(|v| if lo >= 1.0 { v.round() } else { v })
                .collect();
            out.dedup();
            out
        }
        _ => bail!("unrecognized grid `{spec}`; use a,b,c or lo:hi:lin:n or lo:hi:log[:per_decade]"),
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        bail!("grid `{spec}` has no finite values");
    }
    Ok(grid)
}
