//! Parameter ranges: `7`, `1,3,8` or `start:end:step` (inclusive).

use anyhow::{bail, ensure, Context, Result};

pub fn parse_f64_range(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        ensure!(parts.len() == 3, "range '{s}' must be start:end:step");
        let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}' in '{s}'"));
        let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        ensure!(step > 0.0 && step.is_finite(), "step must be positive in '{s}'");
        ensure!(start <= end, "empty range '{s}'");
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        ensure!(count <= 10_000, "range '{s}' has too many points");
        // round away accumulated float error
        Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        let v: Result<Vec<f64>> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}'")))
            .collect();
        let v = v?;
        ensure!(!v.is_empty(), "empty list");
        Ok(v)
    }
}

pub fn parse_usize_range(s: &str) -> Result<Vec<usize>> {
    parse_f64_range(s)?
        .into_iter()
        .map(|x| {
            if x < 0.0 || x.fract() != 0.0 {
                bail!("'{s}' must contain non-negative integers");
            }
            Ok(x as usize)
        })
        .collect()
}
