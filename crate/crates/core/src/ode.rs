//! Fixed-step classical Runge-Kutta integration.

use crate::error::{Error, Result};

/// `steps + 1` equally spaced points from `start` to `end`.
pub fn uniform_grid(start: f64, end: f64, steps: usize) -> Vec<f64> {
    let h = (end - start) / steps as f64;
    (0..=steps)
        .map(|i| if i == steps { end } else { start + i as f64 * h })
        .collect()
}

/// Checks that a grid has at least two points and is strictly monotone.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("grid contains non-finite values".into()));
    }
    let up = grid[1] > grid[0];
    let ok = grid
        .windows(2)
        .all(|w| if up { w[1] > w[0] } else { w[1] < w[0] });
    if !ok {
        return Err(Error::InvalidInput("grid must be strictly monotone".into()));
    }
    Ok(())
}

/// One RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let k1 = f(t, y)?;
    let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = f(t + 0.5 * h, &y2)?;
    let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
    let k3 = f(t + 0.5 * h, &y3)?;
    let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
    let k4 = f(t + h, &y4)?;
    Ok((0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates `dy/dt = f(t, y)` over `grid`, returning the state at every
/// grid point. `monitor` sees each accepted sample and may abort the run.
pub fn integrate<F, M>(mut f: F, y0: &[f64], grid: &[f64], mut monitor: M) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    M: FnMut(f64, &[f64]) -> Result<()>,
{
    validate_grid(grid)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0.to_vec();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDiverged { lambda: grid[0] });
    }
    monitor(grid[0], &y)?;
    out.push(y.clone());
    for w in grid.windows(2) {
        y = rk4_step(&mut f, w[0], &y, w[1] - w[0])?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged { lambda: w[1] });
        }
        monitor(w[1], &y)?;
        out.push(y.clone());
    }
    Ok(out)
}
