//! Metrics, extended states and trajectories on phase-space-time.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Physical constants threaded through every routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c: f64,
    pub hbar: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c: 1.0, hbar: 1.0 }
    }
}

/// Sign convention for a Minkowski metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureConvention {
    /// `(+, -, -, -)`
    PlusMinus,
    /// `(-, +, +, +)`
    MinusPlus,
}

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A symmetric bilinear form `g_{mu nu}(x)` with a fixed signature.
#[derive(Clone)]
pub struct Metric {
    dim: usize,
    signature: Vec<i8>,
    eval: MetricFn,
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Metric")
            .field("dim", &self.dim)
            .field("signature", &self.signature)
            .finish()
    }
}

fn check_signature(dim: usize, signature: &[i8]) -> Result<()> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "dimension must be at least 1".into(),
        });
    }
    if signature.len() != dim || signature.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::InvalidInput(format!(
            "signature {signature:?} is not a list of {dim} signs"
        )));
    }
    Ok(())
}

impl Metric {
    /// Position-dependent metric. `eval` must return a `dim x dim` matrix.
    pub fn new(
        dim: usize,
        signature: Vec<i8>,
        eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_signature(dim, &signature)?;
        Ok(Self {
            dim,
            signature,
            eval: Arc::new(eval),
        })
    }

    /// Constant metric; the signature is read off the eigenvalues.
    pub fn constant(g: DMatrix<f64>) -> Result<Self> {
        let dim = g.nrows();
        if dim < 1 || g.ncols() != dim {
            return Err(Error::InvalidDimension {
                dim,
                reason: "metric matrix must be square and non-empty".into(),
            });
        }
        if !is_symmetric(&g) {
            return Err(Error::InvalidMetric { at: vec![] });
        }
        let eig = g.clone().symmetric_eigen().eigenvalues;
        let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if eig.iter().any(|e| e.abs() <= 1e-12 * scale) {
            return Err(Error::InvalidMetric { at: vec![] });
        }
        let plus = eig.iter().filter(|e| **e > 0.0).count();
        // Order the signs along the axes when the diagonal agrees with the
        // spectrum; otherwise list positive entries first.
        let diag: Vec<i8> = (0..dim).map(|i| if g[(i, i)] > 0.0 { 1 } else { -1 }).collect();
        let signature = if diag.iter().filter(|s| **s > 0).count() == plus {
            diag
        } else {
            (0..dim).map(|i| if i < plus { 1 } else { -1 }).collect()
        };
        Ok(Self {
            dim,
            signature,
            eval: Arc::new(move |_| g.clone()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    /// Number of positive entries in the signature.
    pub fn time_axes(&self) -> usize {
        self.signature.iter().filter(|s| **s > 0).count()
    }

    pub fn at(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }

    /// Checks symmetry and the declared signature at `x`.
    pub fn validate_at(&self, x: &[f64]) -> Result<()> {
        let g = self.at(x);
        if g.nrows() != self.dim || g.ncols() != self.dim || !is_symmetric(&g) {
            return Err(Error::InvalidMetric { at: x.to_vec() });
        }
        let eig = g.symmetric_eigen().eigenvalues;
        let plus = eig.iter().filter(|e| **e > 0.0).count();
        let minus = eig.iter().filter(|e| **e < 0.0).count();
        let want_plus = self.time_axes();
        if plus != want_plus || minus != self.dim - want_plus {
            return Err(Error::InvalidMetric { at: x.to_vec() });
        }
        Ok(())
    }

    pub fn inverse_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.at(x)
            .try_inverse()
            .ok_or_else(|| Error::InvalidMetric { at: x.to_vec() })
    }

    /// `g(u, v)`.
    pub fn inner(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let g = self.at(x);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += g[(i, j)] * u[i] * v[j];
            }
        }
        s
    }

    /// `g(v, v)`.
    pub fn norm_squared(&self, x: &[f64], v: &[f64]) -> f64 {
        self.inner(x, v, v)
    }

    /// `v_mu = g_{mu nu} v^nu`.
    pub fn lower(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let g = self.at(x);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| g[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `p^mu = g^{mu nu} p_nu`.
    pub fn raise(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let gi = self.inverse_at(x)?;
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| gi[(i, j)] * p[j]).sum())
            .collect())
    }
}

fn is_symmetric(g: &DMatrix<f64>) -> bool {
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    (0..g.nrows()).all(|i| (0..i).all(|j| (g[(i, j)] - g[(j, i)]).abs() <= 1e-12 * scale))
}

/// Flat metric with one time axis at index 0.
pub fn make_minkowski(dim: usize, convention: SignatureConvention) -> Result<Metric> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "dimension must be at least 1".into(),
        });
    }
    let (t, s) = match convention {
        SignatureConvention::PlusMinus => (1.0, -1.0),
        SignatureConvention::MinusPlus => (-1.0, 1.0),
    };
    let mut g = DMatrix::from_diagonal_element(dim, dim, s);
    g[(0, 0)] = t;
    let mut signature = vec![s as i8; dim];
    signature[0] = t as i8;
    Metric::new(dim, signature, move |_| g.clone())
}

/// Static weak-field metric in four dimensions with
/// `|g_00| = 1 - 2U(x)/c^2` and flat spatial part.
pub fn make_weak_field(
    potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    c: f64,
    convention: SignatureConvention,
) -> Metric {
    let (t, s) = match convention {
        SignatureConvention::PlusMinus => (1.0, -1.0),
        SignatureConvention::MinusPlus => (-1.0, 1.0),
    };
    let mut signature = vec![s as i8; 4];
    signature[0] = t as i8;
    Metric {
        dim: 4,
        signature,
        eval: Arc::new(move |x| {
            let mut g = DMatrix::from_diagonal_element(4, 4, s);
            g[(0, 0)] = t * (1.0 - 2.0 * potential(x) / (c * c));
            g
        }),
    }
}

/// `g(v, v)` at `x`.
pub fn norm_squared(metric: &Metric, x: &[f64], v: &[f64]) -> f64 {
    metric.norm_squared(x, v)
}

/// Point `(x, p)` of the extended phase space at parameter `lambda`.
/// Index 0 is the time slot: `x[0] = c t` and `p[0]` its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: f64,
}

impl ExtendedState {
    pub fn new(x: Vec<f64>, p: Vec<f64>, lambda: f64) -> Result<Self> {
        if x.is_empty() || x.len() != p.len() {
            return Err(Error::InvalidDimension {
                dim: x.len(),
                reason: format!("x has {} entries but p has {}", x.len(), p.len()),
            });
        }
        if x.iter().chain(&p).any(|v| !v.is_finite()) || !lambda.is_finite() {
            return Err(Error::InvalidInput("state has non-finite entries".into()));
        }
        Ok(Self { x, p, lambda })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `[x..., p...]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.p);
        v
    }

    pub fn from_flat(y: &[f64], lambda: f64) -> Self {
        let n = y.len() / 2;
        Self {
            x: y[..n].to_vec(),
            p: y[n..].to_vec(),
            lambda,
        }
    }
}

/// Whether a trajectory carries velocities or momenta in its auxiliary slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// `aux` holds `dx/dlambda`.
    Configuration,
    /// `aux` holds momenta.
    Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub aux: Vec<f64>,
    /// Constraint residual, when the producing flow has one.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lambda).collect()
    }

    /// `x[i]` along the trajectory.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.x[i]).collect()
    }

    /// `aux[i]` along the trajectory.
    pub fn auxiliary(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.aux[i]).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("empty trajectory")
    }

    /// Largest recorded constraint residual.
    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .filter_map(|s| s.residual)
            .fold(0.0, f64::max)
    }
}

/// Result of the maximal-speed search over a signature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedBound {
    Bounded(f64),
    Unbounded,
    /// No direction with `v^0 = 1` is time-like or null.
    Infeasible,
}

const SPEED_SCALE_CAP: f64 = 1e6;

/// Largest `v_space^2` reachable along direction `d` (unit vector over the
/// non-lab axes) while `g(v, v) >= 0` with `v^0 = 1`. `None` if unbounded.
fn directional_speed(signs: &[f64], d: &[f64]) -> Option<f64> {
    let g = |s: f64| 1.0 + s * s * signs.iter().zip(d).map(|(e, di)| e * di * di).sum::<f64>();
    let spatial: f64 = signs
        .iter()
        .zip(d)
        .filter(|(e, _)| **e < 0.0)
        .map(|(_, di)| di * di)
        .sum();
    if g(SPEED_SCALE_CAP) >= 0.0 {
        return if spatial > 0.0 { None } else { Some(0.0) };
    }
    let (mut lo, mut hi) = (0.0, SPEED_SCALE_CAP);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(lo * lo * spatial)
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

/// Searches for the maximal spatial speed `sum_spatial (v^a / v^0)^2` over
/// time-like and null vectors of a constant metric with the given
/// signature. The first positive axis is the lab time.
///
/// A coarse lattice of directions is scanned, then the best directions are
/// refined by a shrinking coordinate search.
pub fn max_spatial_speed(signature: &[i8]) -> Result<SpeedBound> {
    check_signature(signature.len(), signature)?;
    let Some(lab) = signature.iter().position(|s| *s > 0) else {
        return Ok(SpeedBound::Infeasible);
    };
    let signs: Vec<f64> = signature
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != lab)
        .map(|(_, s)| *s as f64)
        .collect();
    let k = signs.len();
    if k == 0 {
        return Ok(SpeedBound::Bounded(0.0));
    }
    let levels: &[f64] = if k <= 6 {
        &[-1.0, -0.5, 0.0, 0.5, 1.0]
    } else {
        &[-1.0, 0.0, 1.0]
    };
    let total = levels.len().pow(k as u32);
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut raw = vec![0.0; k];
    for idx in 0..total {
        let mut r = idx;
        for slot in raw.iter_mut() {
            *slot = levels[r % levels.len()];
            r /= levels.len();
        }
        let Some(d) = normalized(&raw) else { continue };
        match directional_speed(&signs, &d) {
            None => return Ok(SpeedBound::Unbounded),
            Some(s) => scored.push((s, d)),
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored.first().map(|s| s.0).unwrap_or(0.0);
    for (start, dir) in scored.into_iter().take(8) {
        let (mut cur, mut d) = (start, dir);
        let mut step = 0.25;
        while step > 1e-9 {
            let mut improved = false;
            for i in 0..k {
                for sgn in [1.0, -1.0] {
                    let mut trial = d.clone();
                    trial[i] += sgn * step;
                    let Some(t) = normalized(&trial) else { continue };
                    match directional_speed(&signs, &t) {
                        None => return Ok(SpeedBound::Unbounded),
                        Some(s) if s > cur => {
                            cur = s;
                            d = t;
                            improved = true;
                        }
                        _ => {}
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(cur);
    }
    Ok(SpeedBound::Bounded(best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_conventions() {
        let m = make_minkowski(4, SignatureConvention::PlusMinus).unwrap();
        let g = m.at(&[0.0; 4]);
        assert_eq!(g, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0, -1.0])));
        let m = make_minkowski(4, SignatureConvention::MinusPlus).unwrap();
        assert_eq!(m.at(&[0.0; 4])[(0, 0)], -1.0);
        assert_eq!(m.at(&[0.0; 4])[(3, 3)], 1.0);
        assert_eq!(m.signature(), &[-1, 1, 1, 1]);
        assert!(matches!(
            make_minkowski(0, SignatureConvention::PlusMinus),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn norm_squared_examples() {
        let m = make_minkowski(4, SignatureConvention::PlusMinus).unwrap();
        let x = [0.0; 4];
        assert_eq!(norm_squared(&m, &x, &[1.0, 0.0, 0.0, 0.0]), 1.0);
        assert_eq!(norm_squared(&m, &x, &[1.0, 1.0, 0.0, 0.0]), 0.0);
        // 1 - 2U/c^2 = 0.8
        let w = make_weak_field(|_| 0.1, 1.0, SignatureConvention::PlusMinus);
        assert!((norm_squared(&w, &x, &[1.0, 0.0, 0.0, 0.0]) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn constant_metric_reads_signature() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let m = Metric::constant(g).unwrap();
        assert_eq!(m.signature(), &[1, -1]);
        assert!(m.validate_at(&[0.0, 0.0]).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(Metric::constant(bad).is_err());
    }

    #[test]
    fn validate_detects_signature_change() {
        let m = Metric::new(2, vec![1, -1], |x: &[f64]| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![x[1], -1.0]))
        })
        .unwrap();
        assert!(m.validate_at(&[0.0, 1.0]).is_ok());
        assert!(m.validate_at(&[0.0, -1.0]).is_err());
    }

    #[test]
    fn speed_bounds() {
        assert_eq!(
            max_spatial_speed(&[1, -1, -1, -1]).unwrap(),
            SpeedBound::Bounded(1.0)
        );
        assert_eq!(max_spatial_speed(&[1, 1, -1, -1]).unwrap(), SpeedBound::Unbounded);
        assert_eq!(max_spatial_speed(&[-1, -1, -1]).unwrap(), SpeedBound::Infeasible);
        assert_eq!(max_spatial_speed(&[1]).unwrap(), SpeedBound::Bounded(0.0));
        // Lab time need not sit at index 0.
        match max_spatial_speed(&[-1, 1, -1]).unwrap() {
            SpeedBound::Bounded(b) => assert!((b - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extended_state_validates_lengths() {
        assert!(ExtendedState::new(vec![0.0, 1.0], vec![0.0], 0.0).is_err());
        let s = ExtendedState::new(vec![0.0, 1.0], vec![2.0, 3.0], 0.5).unwrap();
        assert_eq!(ExtendedState::from_flat(&s.flat(), 0.5), s);
    }
}
