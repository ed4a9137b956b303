//! Fixed-step RK4 integration of retarded systems with cubic Hermite dense output.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasipoly::TimeDelaySystem;

/// Initial function on `[-h_max, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HistoryFunction {
    Constant { value: Vec<f64> },
    /// Piecewise-linear interpolation of samples with increasing times ending at 0;
    /// held constant before the first sample.
    Sampled { times: Vec<f64>, states: Vec<Vec<f64>> },
}

impl HistoryFunction {
    pub fn constant(value: Vec<f64>) -> Self {
        HistoryFunction::Constant { value }
    }

    pub fn dim(&self) -> usize {
        match self {
            HistoryFunction::Constant { value } => value.len(),
            HistoryFunction::Sampled { states, .. } => states.first().map(|s| s.len()).unwrap_or(0),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch(format!("history has dimension {}, expected {n}", self.dim())));
        }
        match self {
            HistoryFunction::Constant { value } => {
                if value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("history must be finite".into()));
                }
            }
            HistoryFunction::Sampled { times, states } => {
                if times.is_empty() || times.len() != states.len() {
                    return Err(Error::InvalidInput("history needs matching, non-empty times and states".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) || *times.last().expect("non-empty") != 0.0 {
                    return Err(Error::InvalidInput("history times must increase strictly and end at 0".into()));
                }
                if states.iter().any(|s| s.len() != n || s.iter().any(|v| !v.is_finite())) {
                    return Err(Error::InvalidInput("history states must be finite n-vectors".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        match self {
            HistoryFunction::Constant { value } => DVector::from_column_slice(value),
            HistoryFunction::Sampled { times, states } => {
                let i = times.partition_point(|x| *x <= t);
                if i == 0 {
                    return DVector::from_column_slice(&states[0]);
                }
                if i == times.len() {
                    return DVector::from_column_slice(&states[i - 1]);
                }
                let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                DVector::from_column_slice(&states[i - 1]) * (1.0 - w) + DVector::from_column_slice(&states[i]) * w
            }
        }
    }
}

/// Samples on the uniform grid `t_i = i dt` with the derivatives used for Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

fn hermite(t0: f64, h: f64, x0: &[f64], f0: &[f64], x1: &[f64], f1: &[f64], t: f64) -> DVector<f64> {
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    DVector::from_fn(x0.len(), |k, _| h00 * x0[k] + h10 * h * f0[k] + h01 * x1[k] + h11 * h * f1[k])
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map(|s| s.len()).unwrap_or(0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(|s| s.as_slice()).unwrap_or(&[])
    }

    /// Dense output at `t` in `[0, t_end]`.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let last = self.times.len() - 1;
        let i = ((t / self.dt).floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return DVector::from_column_slice(&self.states[0]);
        }
        hermite(
            self.times[i],
            self.times[i + 1] - self.times[i],
            &self.states[i],
            &self.derivs[i],
            &self.states[i + 1],
            &self.derivs[i + 1],
            t,
        )
    }

    /// CSV with header `t,x1,...,xn`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for k in 1..=n {
            out.push_str(&format!(",x{k}"));
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for v in x {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Default step: a fiftieth of the smallest positive delay.
pub fn default_step(sys: &TimeDelaySystem, tau: f64) -> f64 {
    min_positive_delay(sys, tau).map_or(0.01, |d| d / 50.0)
}

fn min_positive_delay(sys: &TimeDelaySystem, tau: f64) -> Option<f64> {
    sys.delays_at(tau).iter().map(|(d, _)| *d).filter(|d| *d > 0.0).reduce(f64::min)
}

/// Integrates `x' = sum_k A_k x(t - d_k(tau))` from the given history up to `t_end`.
pub fn integrate(sys: &TimeDelaySystem, tau: f64, history: &HistoryFunction, t_end: f64, dt: Option<f64>) -> Result<Trajectory> {
    let n = sys.dim();
    history.validate(n)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidInput(format!("invalid delay {tau}")));
    }
    let dt = dt.unwrap_or_else(|| default_step(sys, tau));
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if let Some(min_delay) = min_positive_delay(sys, tau) {
        if dt > min_delay / 10.0 * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt, min_delay });
        }
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let terms: Vec<(f64, DMatrix<f64>)> = sys.delays_at(tau);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut derivs: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);

    // state at a past time (strictly before the current step) or from the history
    let past = |t: f64, states: &[Vec<f64>], derivs: &[Vec<f64>]| -> DVector<f64> {
        if t <= 0.0 {
            return history.eval(t);
        }
        let i = ((t / h).floor() as usize).min(states.len() - 2);
        hermite(i as f64 * h, h, &states[i], &derivs[i], &states[i + 1], &derivs[i + 1], t)
    };
    let rhs = |t: f64, x: &DVector<f64>, states: &[Vec<f64>], derivs: &[Vec<f64>]| -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (d, a) in &terms {
            if *d == 0.0 {
                out += a * x;
            } else {
                out += a * past(t - d, states, derivs);
            }
        }
        out
    };

    let x0 = history.eval(0.0);
    times.push(0.0);
    states.push(x0.iter().copied().collect());
    // the derivative at t_i only reads times <= t_i - min_delay, available from earlier steps
    let f0 = rhs(0.0, &x0, &states, &derivs);
    derivs.push(f0.iter().copied().collect());

    let mut x = x0;
    let mut fx = f0;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = fx.clone();
        let x2 = &x + &k1 * (h / 2.0);
        let k2 = rhs(t + h / 2.0, &x2, &states, &derivs);
        let x3 = &x + &k2 * (h / 2.0);
        let k3 = rhs(t + h / 2.0, &x3, &states, &derivs);
        let x4 = &x + &k3 * h;
        let k4 = rhs(t + h, &x4, &states, &derivs);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t_next = (i + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t: t_next });
        }
        times.push(t_next);
        states.push(x.iter().copied().collect());
        fx = rhs(t_next, &x, &states, &derivs);
        derivs.push(fx.iter().copied().collect());
    }
    Ok(Trajectory { dt: h, times, states, derivs })
}

/// First time after which `||x(t) - r||_inf <= band ||x(0) - r||_inf` holds to the horizon.
///
/// Returns `None` when the trajectory is still outside the band at its last sample.
pub fn settling_time(traj: &Trajectory, band: f64, reference: Option<&[f64]>) -> Result<Option<f64>> {
    if !(band > 0.0 && band < 1.0) {
        return Err(Error::InvalidInput(format!("band must lie in (0, 1), got {band}")));
    }
    let n = traj.dim();
    let zero = vec![0.0; n];
    let r = reference.unwrap_or(&zero);
    if r.len() != n {
        return Err(Error::DimensionMismatch(format!("reference has {} entries, expected {n}", r.len())));
    }
    let dev: Vec<f64> = traj
        .states
        .iter()
        .map(|x| x.iter().zip(r).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
        .collect();
    let thr = band * dev[0];
    let Some(last) = dev.iter().rposition(|d| *d > thr) else {
        return Ok(Some(0.0));
    };
    if last + 1 == dev.len() {
        return Ok(None);
    }
    // linear interpolation of the deviation between the last violating sample and the next
    let (t0, t1) = (traj.times[last], traj.times[last + 1]);
    let (d0, d1) = (dev[last], dev[last + 1]);
    let w = if d0 > d1 { (d0 - thr) / (d0 - d1) } else { 1.0 };
    Ok(Some(t0 + w * (t1 - t0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RealMatrix;

    fn scalar(a: f64, b: f64) -> TimeDelaySystem {
        TimeDelaySystem::single_delay(RealMatrix::from_rows(&[vec![a]]).unwrap(), RealMatrix::from_rows(&[vec![b]]).unwrap())
            .unwrap()
    }

    #[test]
    fn constant_solution() {
        let traj = integrate(&scalar(0.0, 0.0), 1.0, &HistoryFunction::constant(vec![1.0]), 5.0, Some(0.05)).unwrap();
        assert!(traj.states.iter().all(|x| x[0] == 1.0));
    }

    #[test]
    fn exponential_settling() {
        let traj = integrate(&scalar(-1.0, 0.0), 1.0, &HistoryFunction::constant(vec![1.0]), 10.0, Some(0.01)).unwrap();
        let ts = settling_time(&traj, 0.02, None).unwrap().unwrap();
        assert!((ts - (-0.02f64.ln())).abs() < 0.02, "{ts}");
    }

    #[test]
    fn step_limit() {
        let err = integrate(&scalar(0.0, -1.0), 1.0, &HistoryFunction::constant(vec![1.0]), 5.0, Some(0.2)).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn zero_trajectory_settles_immediately() {
        let traj = integrate(&scalar(-1.0, 0.5), 1.0, &HistoryFunction::constant(vec![0.0]), 2.0, None).unwrap();
        assert_eq!(settling_time(&traj, 0.02, None).unwrap(), Some(0.0));
    }

    #[test]
    fn csv_header() {
        let traj = integrate(&scalar(-1.0, 0.0), 1.0, &HistoryFunction::constant(vec![1.0]), 0.1, Some(0.05)).unwrap();
        assert!(traj.to_csv().starts_with("t,x1\n0,1\n"));
    }
}
