//! Unstable-root count `NU(tau)` assembled from crossings.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::charfn::CharacteristicFunction;
use super::crossing::{crossing_sweep, default_omega_max, tendency_from_partials, CrossingPoint, Tendency};
use super::roots::rightmost_roots_with;
use super::system::TimeDelaySystem;
use super::wpoly::w_derivative_sign;
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::linalg::eigenvalues;

/// Events closer than this in `tau` are merged.
const REPEAT_DIST: f64 = 1e-4;
const EVENT_MERGE: f64 = 1e-9;
/// Delay step used to classify tangential touches.
const TOUCH_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityEvent {
    pub tau: f64,
    /// Change of the unstable count when `tau` passes this value.
    pub delta: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityInterval {
    pub tau_lo: f64,
    pub tau_hi: f64,
    #[serde(rename = "NU")]
    pub nu: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    #[serde(rename = "NU0")]
    pub nu0: usize,
    pub tau_max: f64,
    pub crossings: Vec<CrossingPoint>,
    pub events: Vec<StabilityEvent>,
    pub intervals: Vec<StabilityInterval>,
}

/// How the crossing direction is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMethod {
    /// Sign of `Re(ds/dtau)`.
    RootTendency,
    /// Sign of `W'` from the magnitude condition `|C_0| = |C_1|`.
    Direct,
}

impl StabilityMap {
    /// `NU` just after `tau`; roots sitting on the axis are not counted.
    pub fn nu_at(&self, tau: f64) -> usize {
        self.intervals
            .iter()
            .find(|iv| tau >= iv.tau_lo && tau < iv.tau_hi)
            .or(self.intervals.last())
            .map(|iv| iv.nu)
            .unwrap_or(self.nu0)
    }

    pub fn stable_intervals(&self) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .filter(|iv| iv.nu == 0)
            .map(|iv| (iv.tau_lo, iv.tau_hi))
            .collect()
    }

    /// Smallest count reached and the intervals attaining it.
    pub fn min_nu_windows(&self) -> (usize, Vec<(f64, f64)>) {
        let min = self.intervals.iter().map(|iv| iv.nu).min().unwrap_or(self.nu0);
        let wins = self
            .intervals
            .iter()
            .filter(|iv| iv.nu == min)
            .map(|iv| (iv.tau_lo, iv.tau_hi))
            .collect();
        (min, wins)
    }

    pub fn is_stable_at(&self, tau: f64) -> bool {
        self.nu_at(tau) == 0
    }
}

/// Number of unstable roots at `tau = 0`.
pub fn unstable_count_at_zero(sys: &TimeDelaySystem, f: &CharacteristicFunction, cfg: &AnalysisConfig) -> Result<usize> {
    let roots = if sys.has_fixed_delays() {
        rightmost_roots_with(sys, f, 0.0, cfg.collocation_nodes)?.roots
    } else {
        eigenvalues(&sys.matrix_sum())?
    };
    Ok(roots.iter().filter(|s| s.re > 1e-9 * s.norm().max(1.0)).count())
}

/// Stability map over `[0, tau_max]` using root tendencies.
pub fn stability_map(
    f: &CharacteristicFunction,
    sys: &TimeDelaySystem,
    tau_max: f64,
    cfg: &AnalysisConfig,
) -> Result<StabilityMap> {
    stability_map_with(f, sys, tau_max, cfg, DirectionMethod::RootTendency)
}

pub fn stability_map_with(
    f: &CharacteristicFunction,
    sys: &TimeDelaySystem,
    tau_max: f64,
    cfg: &AnalysisConfig,
    method: DirectionMethod,
) -> Result<StabilityMap> {
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(Error::InvalidInput(format!("tau_max must be positive, got {tau_max}")));
    }
    cfg.tol.validate()?;
    let omega_max = cfg.omega_max.unwrap_or_else(|| default_omega_max(f));
    let crossings = crossing_sweep(f, omega_max, cfg.grid_points)?;
    let nu0 = unstable_count_at_zero(sys, f, cfg)?;

    let mut raw: Vec<StabilityEvent> = Vec::new();
    let mut degenerate: Vec<f64> = Vec::new();
    for cp in &crossings {
        for tau in cp.delays(tau_max) {
            let delta = match crossing_delta(f, cp, tau, method)? {
                Some(d) => d,
                None => {
                    if !degenerate.iter().any(|w| (w - cp.omega).abs() < 1e-6) {
                        degenerate.push(cp.omega);
                    }
                    continue;
                }
            };
            // roots already on the axis at tau = 0 were not counted as unstable
            let delta = if tau <= EVENT_MERGE { delta.max(0) } else { delta };
            raw.push(StabilityEvent { tau, delta });
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateCrossing { omegas: degenerate });
    }
    raw.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let mut events: Vec<StabilityEvent> = Vec::new();
    for e in raw {
        match events.last_mut() {
            Some(last) if e.tau - last.tau <= EVENT_MERGE * e.tau.max(1.0) => last.delta += e.delta,
            _ => events.push(e),
        }
    }
    events.retain(|e| e.delta != 0);

    let mut intervals = Vec::new();
    let mut nu = nu0 as i64;
    let mut lo = 0.0;
    for e in &events {
        if e.tau > lo {
            intervals.push(StabilityInterval { tau_lo: lo, tau_hi: e.tau, nu: nu as usize });
        }
        nu += e.delta;
        if nu < 0 {
            return Err(Error::NegativeCount { tau: e.tau });
        }
        lo = e.tau;
    }
    if tau_max > lo {
        intervals.push(StabilityInterval { tau_lo: lo, tau_hi: tau_max, nu: nu as usize });
    }
    Ok(StabilityMap { nu0, tau_max, crossings, events, intervals })
}

/// Change of the unstable count at one crossing delay, `None` when it cannot be decided.
fn crossing_delta(
    f: &CharacteristicFunction,
    cp: &CrossingPoint,
    tau: f64,
    method: DirectionMethod,
) -> Result<Option<i64>> {
    let s = Complex64::new(0.0, cp.omega);
    let scale = f.scale(s, tau);
    let (_, fs, ft) = f.eval_partials(s, tau);
    if is_repeated_root(f, s, tau, fs, scale) {
        return Ok(None);
    }
    if cp.tendency != Tendency::Indeterminate {
        let sign = match method {
            DirectionMethod::RootTendency => tendency_from_partials(fs, ft, scale).as_i8() as i64,
            DirectionMethod::Direct => w_derivative_sign(f, cp.omega, 1e-8)?.as_i32() as i64,
        };
        if sign != 0 {
            return Ok(Some(2 * sign));
        }
    }
    Ok(touch_delta(f, s, tau))
}

/// A second root within `REPEAT_DIST` of `s`, judged by the Newton step of `dF/ds`.
///
/// Crossings at repeated roots are located only to about the square root of the residual,
/// so a vanishing derivative shows up as a small step rather than an exact zero.
fn is_repeated_root(f: &CharacteristicFunction, s: Complex64, tau: f64, fs: Complex64, scale: f64) -> bool {
    if fs.norm() <= 1e-6 * scale {
        return true;
    }
    let h = 1e-4 * s.norm().max(1.0);
    let hs = Complex64::new(0.0, h);
    let fss = (f.eval_partials(s + hs, tau).1 - f.eval_partials(s - hs, tau).1) / (2.0 * hs);
    fs.norm() <= REPEAT_DIST * s.norm().max(1.0) * fss.norm()
}

/// Classifies a simple root touching the axis by tracking it to `tau -+ TOUCH_STEP`.
fn touch_delta(f: &CharacteristicFunction, s: Complex64, tau: f64) -> Option<i64> {
    let side = |t: f64| -> Option<bool> {
        let mut z = s;
        // continuation in small steps keeps Newton on the same branch
        for k in 1..=10 {
            let tk = tau + (t - tau) * k as f64 / 10.0;
            for _ in 0..50 {
                let (v, fs, _) = f.eval_partials(z, tk);
                if fs.norm() == 0.0 {
                    return None;
                }
                let dz = v / fs;
                z -= dz;
                if dz.norm() <= 1e-15 * z.norm().max(1.0) {
                    break;
                }
            }
        }
        let rel = f.eval(z, t).norm() / f.scale(z, t);
        (rel <= 1e-10).then_some(z.re > 0.0)
    };
    let before = if tau - TOUCH_STEP > 0.0 { side(tau - TOUCH_STEP)? } else { false };
    let after = side(tau + TOUCH_STEP)?;
    Some(2 * (i64::from(after) - i64::from(before)))
}
