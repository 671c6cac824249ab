//! One-dimensional wave functions built from a scalar field `phi`.
//!
//! In the coordinate-time gauge `psi(t) = exp(-(i/hbar) int phi dt) / N`
//! solves `i hbar psi' = phi psi`. The proper-time gauge carries an extra
//! `sqrt(phi)` amplitude; spatial gauges use the opposite phase sign.
//! Inner products are time averages over a finite window.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quad;
use crate::rel_particle::BackgroundFields;

/// Which variable a wave function is sampled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Time,
    Space,
}

/// `len` equally spaced points starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// `steps + 1` points covering `[start, end]`.
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps < 2 || !(end > start) {
            return Err(Error::InvalidInput("grid needs end > start and at least 2 steps".into()));
        }
        Ok(Self {
            start,
            step: (end - start) / steps as f64,
            len: steps + 1,
        })
    }

    /// Grid of spacing at most `max_step` covering `[start, end]`.
    pub fn with_max_step(start: f64, end: f64, max_step: f64) -> Result<Self> {
        let steps = ((end - start) / max_step).ceil().max(2.0) as usize;
        Self::new(start, end, steps)
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }
}

/// Sampled complex wave function.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
    pub hbar: f64,
    pub kind: VarKind,
}

/// The scalar field driving a wave function, with the extent `delta` of
/// its fluctuating part and its asymptotic value beyond it.
#[derive(Debug, Clone)]
pub struct PhiField {
    pub field: ScalarField,
    pub delta: f64,
    pub asymptotic: f64,
    /// Optional fluctuation bandwidth (angular frequency), informational.
    pub band: Option<f64>,
}

impl PhiField {
    pub fn new(field: ScalarField, delta: f64, asymptotic: f64) -> Self {
        Self {
            field,
            delta,
            asymptotic,
            band: None,
        }
    }

    /// Constant `phi = p`.
    pub fn constant(p: f64) -> Self {
        Self::new(ScalarField::constant(p), 0.0, p)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.field.value(s)
    }
}

/// Largest grid step that resolves the phase of a field bounded by `max_phi`.
pub fn max_resolved_step(max_phi: f64, hbar: f64) -> f64 {
    hbar / (20.0 * max_phi.abs())
}

fn check_resolution(grid: &UniformGrid, phi: &[f64], rate_scale: f64, hbar: f64) -> Result<()> {
    let max_phi = phi.iter().fold(0.0f64, |m, v| m.max(v.abs())) * rate_scale;
    if max_phi == 0.0 {
        return Ok(());
    }
    let max_step = max_resolved_step(max_phi, hbar);
    if grid.step > max_step {
        return Err(Error::UnderResolved {
            step: grid.step,
            max_step,
        });
    }
    Ok(())
}

fn synthesize(
    phi: &[f64],
    grid: &UniformGrid,
    norm: f64,
    hbar: f64,
    phase_sign: f64,
    phase_scale: f64,
    sqrt_amplitude: bool,
    kind: VarKind,
) -> Result<WaveFunction> {
    if !(norm > 0.0) || !(hbar > 0.0) {
        return Err(Error::InvalidInput("normalization and hbar must be positive".into()));
    }
    check_resolution(grid, phi, phase_scale, hbar)?;
    let t = grid.points();
    let integral = quad::cumulative_trapezoid(&t, phi);
    let values = phi
        .iter()
        .zip(&integral)
        .map(|(f, i)| {
            let amp = if sqrt_amplitude { f.sqrt() } else { 1.0 } / norm;
            Complex64::from_polar(amp, phase_sign * phase_scale * i / hbar)
        })
        .collect();
    Ok(WaveFunction {
        grid: *grid,
        values,
        hbar,
        kind,
    })
}

fn sample(phi: &PhiField, grid: &UniformGrid) -> Vec<f64> {
    grid.points().iter().map(|t| phi.value(*t)).collect()
}

/// `psi(t) = exp(-(i/hbar) int_{t_0}^t phi) / N` on a time grid.
pub fn synth_psi_coordinate(phi: &PhiField, grid: &UniformGrid, hbar: f64, norm: f64) -> Result<WaveFunction> {
    synthesize(&sample(phi, grid), grid, norm, hbar, -1.0, 1.0, false, VarKind::Time)
}

/// `psi(t) = sqrt(phi) exp(-(i/hbar) int_{t_0}^t phi) / N` on a time grid.
pub fn synth_psi_proper(phi: &PhiField, grid: &UniformGrid, hbar: f64, norm: f64) -> Result<WaveFunction> {
    let values = sample(phi, grid);
    if values.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidInput("proper gauge needs phi >= 0".into()));
    }
    synthesize(&values, grid, norm, hbar, -1.0, 1.0, true, VarKind::Time)
}

/// Spatial gauge choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialGauge {
    /// `lambda = q`: `psi = exp(+(i/hbar) int phi dq) / N`.
    Momentum,
    /// `lambda = l`: `psi = sqrt(phi) exp(+(i/hbar) int phi dq) / N`.
    ProperLength,
}

/// Wave function on a spatial grid, positive phase sign.
pub fn synth_psi_spatial(
    phi: &PhiField,
    grid: &UniformGrid,
    hbar: f64,
    norm: f64,
    gauge: SpatialGauge,
) -> Result<WaveFunction> {
    let values = sample(phi, grid);
    let sqrt_amp = gauge == SpatialGauge::ProperLength;
    if sqrt_amp && values.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidInput("proper-length gauge needs phi >= 0".into()));
    }
    synthesize(&values, grid, norm, hbar, 1.0, 1.0, sqrt_amp, VarKind::Space)
}

/// Plane wave `exp(-(i/hbar) p t) / N`, or its conjugate when `conjugate`.
pub fn plane_wave(p: f64, grid: &UniformGrid, hbar: f64, norm: f64, conjugate: bool) -> Result<WaveFunction> {
    let mut psi = synth_psi_coordinate(&PhiField::constant(p), grid, hbar, norm)?;
    if conjugate {
        psi.values.iter_mut().for_each(|v| *v = v.conj());
    }
    Ok(psi)
}

/// Window average `(1/delta) int_{t0}^{t0+delta} conj(a) b` of the
/// piecewise-linear interpolant of `conj(a) b` on the common grid.
pub fn inner_product_windowed(a: &WaveFunction, b: &WaveFunction, t0: f64, delta: f64) -> Result<Complex64> {
    if a.grid != b.grid || a.kind != b.kind {
        return Err(Error::InvalidInput("wave functions live on different grids".into()));
    }
    let g = a.grid;
    let (start, end) = (t0, t0 + delta);
    let slack = 1e-9 * g.step;
    if !(delta > 0.0) || start < g.start - slack || end > g.end() + slack {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            grid_start: g.start,
            grid_end: g.end(),
        });
    }
    let f: Vec<Complex64> = a.values.iter().zip(&b.values).map(|(a, b)| a.conj() * b).collect();
    let interp = |t: f64| -> Complex64 {
        let s = ((t - g.start) / g.step).clamp(0.0, (g.len - 1) as f64);
        let k = (s.floor() as usize).min(g.len - 2);
        let w = s - k as f64;
        f[k] * (1.0 - w) + f[k + 1] * w
    };
    let mut knots = vec![start];
    let first = ((start - g.start) / g.step).floor() as isize + 1;
    let mut k = first.max(0) as usize;
    while k < g.len && g.at(k) < end - slack {
        if g.at(k) > start + slack {
            knots.push(g.at(k));
        }
        k += 1;
    }
    knots.push(end);
    let mut acc = Complex64::new(0.0, 0.0);
    for w in knots.windows(2) {
        acc += (interp(w[0]) + interp(w[1])) * (0.5 * (w[1] - w[0]));
    }
    Ok(acc / delta)
}

fn derivative(psi: &WaveFunction) -> Vec<Complex64> {
    let (v, h, n) = (&psi.values, psi.grid.step, psi.values.len());
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (v[0] * -3.0 + v[1] * 4.0 - v[2]) / (2.0 * h);
    d[n - 1] = (v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) / (2.0 * h);
    d
}

/// `i hbar d/dt psi` (central differences, one-sided at the ends).
pub fn apply_p0(psi: &WaveFunction) -> Result<WaveFunction> {
    if psi.kind != VarKind::Time {
        return Err(Error::KindMismatch { expected: "time" });
    }
    let k = Complex64::new(0.0, psi.hbar);
    Ok(WaveFunction {
        values: derivative(psi).into_iter().map(|d| k * d).collect(),
        ..psi.clone()
    })
}

/// `-i hbar d/dq psi` (central differences, one-sided at the ends).
pub fn apply_p1(psi: &WaveFunction) -> Result<WaveFunction> {
    if psi.kind != VarKind::Space {
        return Err(Error::KindMismatch { expected: "space" });
    }
    let k = Complex64::new(0.0, -psi.hbar);
    Ok(WaveFunction {
        values: derivative(psi).into_iter().map(|d| k * d).collect(),
        ..psi.clone()
    })
}

/// `num_i / den_i`; errors where `den` vanishes.
pub fn pointwise_ratio(num: &WaveFunction, den: &WaveFunction) -> Result<Vec<Complex64>> {
    num.values
        .iter()
        .zip(&den.values)
        .enumerate()
        .map(|(i, (n, d))| {
            if d.norm() <= f64::MIN_POSITIVE {
                Err(Error::DivisionDegenerate { index: i })
            } else {
                Ok(n / d)
            }
        })
        .collect()
}

/// Largest `|i hbar psi' - phi psi|` over interior samples.
pub fn schrodinger_residual(psi: &WaveFunction, phi: &PhiField) -> Result<f64> {
    let p = apply_p0(psi)?;
    let n = psi.values.len();
    Ok((1..n - 1)
        .map(|i| (p.values[i] - psi.values[i] * phi.value(psi.grid.at(i))).norm())
        .fold(0.0, f64::max))
}

/// `(1/delta) int_0^delta phi`, split at the edge of the fluctuating region.
pub fn running_average(phi: &PhiField, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("window must be positive".into()));
    }
    let f = |s: f64| phi.value(s);
    let split = phi.delta.clamp(0.0, delta);
    let inner = if split > 0.0 { quad::integrate(&f, 0.0, split, 1e-14) } else { 0.0 };
    let outer = if delta > split { quad::integrate(&f, split, delta, 1e-14) } else { 0.0 };
    Ok((inner + outer) / delta)
}

/// Rest-frame field `phi(t) = m c sqrt(|g_00(ct, x)|)`.
pub fn rest_frame_phi(fields: &BackgroundFields, x: [f64; 3]) -> ScalarField {
    let f = fields.clone();
    ScalarField::new("m c sqrt|g00|", move |t| {
        f.mass * f.c * f.g00(&[f.c * t, x[0], x[1], x[2]]).sqrt()
    })
}

/// Rest-frame wave function in a gravitational field:
/// `psi(t) = sqrt(phi) exp(-(i c / hbar) int phi dt) / N` with
/// `phi = m c sqrt(|g_00|)`.
pub fn synth_psi_rest(
    fields: &BackgroundFields,
    x: [f64; 3],
    grid: &UniformGrid,
    hbar: f64,
    norm: f64,
) -> Result<WaveFunction> {
    let phi = rest_frame_phi(fields, x);
    let values: Vec<f64> = grid.points().iter().map(|t| phi.value(*t)).collect();
    synthesize(&values, grid, norm, hbar, -1.0, fields.c, true, VarKind::Time)
}

/// `(c P^0 psi) / psi` with `c P^0 = i hbar gamma d/dt` and
/// `gamma = 1/sqrt(|g_00|)` for a particle at rest at `x`.
pub fn energy_shift_weak_gravity(
    fields: &BackgroundFields,
    x: [f64; 3],
    psi: &WaveFunction,
) -> Result<Vec<Complex64>> {
    let p = apply_p0(psi)?;
    let ratio = pointwise_ratio(&p, psi)?;
    Ok(ratio
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let t = psi.grid.at(i);
            let gamma = 1.0 / fields.g00(&[fields.c * t, x[0], x[1], x[2]]).sqrt();
            r * gamma
        })
        .collect())
}

/// Windowed norm measured against elapsed proper time:
/// `(1/Delta tau) int_{t0}^{t0+delta} |psi|^2 dt` with
/// `Delta tau = int phi / (m c) dt` over the same lab window.
pub fn proper_time_norm(
    psi: &WaveFunction,
    fields: &BackgroundFields,
    x: [f64; 3],
    t0: f64,
    delta: f64,
) -> Result<f64> {
    let lab = inner_product_windowed(psi, psi, t0, delta)?.re * delta;
    let phi = rest_frame_phi(fields, x);
    let dtau = quad::integrate(&|t| phi.value(t) / (fields.mass * fields.c), t0, t0 + delta, 1e-13);
    Ok(lab / dtau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_is_p0_eigenstate() {
        let g = UniformGrid::new(0.0, 10.0, 4000).unwrap();
        let psi = plane_wave(2.0, &g, 1.0, 1.0, false).unwrap();
        let r = pointwise_ratio(&apply_p0(&psi).unwrap(), &psi).unwrap();
        for v in &r[1..r.len() - 1] {
            assert!((v.re - 2.0).abs() < 1e-4 && v.im.abs() < 1e-10);
        }
        let conj = plane_wave(2.0, &g, 1.0, 1.0, true).unwrap();
        let r = pointwise_ratio(&apply_p0(&conj).unwrap(), &conj).unwrap();
        assert!((r[100].re + 2.0).abs() < 1e-4);
    }

    #[test]
    fn kind_mismatch() {
        let g = UniformGrid::new(0.0, 1.0, 100).unwrap();
        let psi = plane_wave(1.0, &g, 1.0, 1.0, false).unwrap();
        assert!(matches!(apply_p1(&psi), Err(Error::KindMismatch { .. })));
        let sp = synth_psi_spatial(&PhiField::constant(1.0), &g, 1.0, 1.0, SpatialGauge::Momentum).unwrap();
        assert!(matches!(apply_p0(&sp), Err(Error::KindMismatch { .. })));
        let r = pointwise_ratio(&apply_p1(&sp).unwrap(), &sp).unwrap();
        assert!((r[50].re - 1.0).abs() < 1e-3);
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let g = UniformGrid::new(0.0, 10.0, 100).unwrap();
        assert!(matches!(
            synth_psi_coordinate(&PhiField::constant(5.0), &g, 1.0, 1.0),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn window_checks() {
        let g = UniformGrid::new(0.0, 10.0, 1000).unwrap();
        let psi = plane_wave(1.0, &g, 1.0, 1.0, false).unwrap();
        assert!(matches!(
            inner_product_windowed(&psi, &psi, 5.0, 6.0),
            Err(Error::WindowOutOfRange { .. })
        ));
        // A window not aligned with the grid still integrates a constant exactly.
        let n = inner_product_windowed(&psi, &psi, 0.1234, 7.777).unwrap();
        assert!((n.re - 1.0).abs() < 1e-12 && n.im.abs() < 1e-12);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let g = UniformGrid::new(0.0, 1.0, 100).unwrap();
        let mut psi = plane_wave(1.0, &g, 1.0, 1.0, false).unwrap();
        psi.values[3] = Complex64::new(0.0, 0.0);
        assert!(matches!(
            pointwise_ratio(&psi, &psi),
            Err(Error::DivisionDegenerate { index: 3 })
        ));
    }

    #[test]
    fn running_average_of_bump() {
        let phi = PhiField::new(ScalarField::bump(2.0, 1.0, 1.0), 1.0, 2.0);
        let avg = running_average(&phi, 100.0).unwrap();
        assert!((avg - (2.0 + 0.5 / 100.0)).abs() < 1e-12);
    }

    #[test]
    fn p0_error_is_second_order() {
        let err = |steps: usize| {
            let g = UniformGrid::new(0.0, 4.0, steps).unwrap();
            let psi = plane_wave(3.0, &g, 1.0, 1.0, false).unwrap();
            let r = pointwise_ratio(&apply_p0(&psi).unwrap(), &psi).unwrap();
            r[1..r.len() - 1].iter().map(|v| (v.re - 3.0).abs()).fold(0.0, f64::max)
        };
        // Central difference on exp(-i p t): i (sin(p h) / h) ... relative error p^2 h^2 / 6.
        let ratio = err(1000) / err(2000);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        let h: f64 = 4.0 / 1000.0;
        assert!((err(1000) - 3.0 * (1.0 - (3.0 * h).sin() / (3.0 * h))).abs() < 1e-9);
    }

    #[test]
    fn distinct_plane_waves_are_nearly_orthogonal() {
        let g = UniformGrid::new(0.0, 2000.0, 200_000).unwrap();
        let a = plane_wave(1.0, &g, 1.0, 1.0, false).unwrap();
        let b = plane_wave(1.3, &g, 1.0, 1.0, false).unwrap();
        let delta = 2000.0;
        let v = inner_product_windowed(&a, &b, 0.0, delta).unwrap();
        // Closed form: (exp(-i dp D) - 1) / (-i dp D).
        let dp: f64 = 0.3;
        let exact = (Complex64::new(0.0, -dp * delta).exp() - 1.0) / Complex64::new(0.0, -dp * delta);
        assert!((v - exact).norm() < 1e-6);
        let (tm, tn) = (2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI / 1.3);
        assert!(v.norm() < 10.0 * tm * tn / ((tm - tn).abs() * delta));
    }

    #[test]
    fn proper_gauge_satisfies_symmetrized_equation() {
        let phi = PhiField::new(ScalarField::sinusoid(2.0, 0.3, 1.5, 0.0), 0.0, 2.0);
        let resid = |steps: usize| {
            let g = UniformGrid::new(0.0, 5.0, steps).unwrap();
            let psi = synth_psi_proper(&phi, &g, 1.0, 1.0).unwrap();
            let p = apply_p0(&psi).unwrap();
            (1..g.len - 1)
                .map(|i| {
                    let t = g.at(i);
                    let rhs = Complex64::new(phi.value(t), 0.5 * phi.field.log_derivative(t));
                    (p.values[i] - rhs * psi.values[i]).norm()
                })
                .fold(0.0, f64::max)
        };
        let (a, b) = (resid(2000), resid(4000));
        assert!(a < 1e-4 && (a / b - 4.0).abs() < 0.3, "{a} {b}");
    }

    #[test]
    fn bump_phase_offset_matches_quadrature() {
        let phi = PhiField::new(ScalarField::bump(1.0, 0.8, 2.0), 2.0, 1.0);
        let g = UniformGrid::new(0.0, 10.0, 20_000).unwrap();
        let psi = synth_psi_coordinate(&phi, &g, 1.0, 1.0).unwrap();
        let j = quad::integrate(&|s| phi.value(s) - 1.0, 0.0, 2.0, 1e-14);
        let t = g.end();
        let expect = Complex64::from_polar(1.0, -(t + j));
        assert!((psi.values[g.len - 1] - expect).norm() < 1e-6);
        assert!((j - 0.8).abs() < 1e-12);
    }

    #[test]
    fn weak_gravity_shift_has_half_the_naive_coefficient() {
        let (c, m, u0, w) = (1.0, 1.0, 1e-4, 2.0);
        let fields = BackgroundFields::weak_gravity(move |x: &[f64]| u0 * (w * x[0] / c).sin(), m, c).unwrap();
        let g = UniformGrid::new(0.0, 6.0, 60_000).unwrap();
        let psi = synth_psi_rest(&fields, [0.0; 3], &g, 1.0, 1.0).unwrap();
        let r = energy_shift_weak_gravity(&fields, [0.0; 3], &psi).unwrap();
        for i in (10..g.len - 10).step_by(997) {
            let t = g.at(i);
            let g00 = 1.0 - 2.0 * u0 * (w * t).sin() / (c * c);
            let dg00 = -2.0 * u0 * w * (w * t).cos() / (c * c);
            // i hbar gamma d/dt of sqrt(phi) exp(...) / sqrt(phi) exp(...):
            // m c^2 + (i hbar gamma / 4) d/dt ln g00.
            let exact_im = 0.25 * dg00 / g00 / g00.sqrt();
            assert!((r[i].re - m * c * c).abs() < 1e-7);
            assert!((r[i].im - exact_im).abs() < 1e-7 * u0 * w, "{} vs {}", r[i].im, exact_im);
            let first_order = -0.5 * u0 * w * (w * t).cos() / (c * c);
            assert!((r[i].im - first_order).abs() < 1e-3 * u0 * w);
        }
    }

    #[test]
    fn rest_frame_proper_time_norm_is_one() {
        let (c, m) = (1.0, 2.0);
        let fields = BackgroundFields::weak_gravity(|x: &[f64]| 0.01 * (0.5 * x[0]).sin(), m, c).unwrap();
        let g = UniformGrid::with_max_step(0.0, 40.0, 1.0 / (20.0 * m * c * 1.1)).unwrap();
        let psi = synth_psi_rest(&fields, [0.0; 3], &g, 1.0, (m * c).sqrt()).unwrap();
        let n = proper_time_norm(&psi, &fields, [0.0; 3], 3.0, 30.0).unwrap();
        assert!((n - 1.0).abs() < 1e-6, "{n}");
    }
}
