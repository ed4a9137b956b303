//! Pyragas-type delayed feedback `u = -K (x(t) - x(t - tau))`: closed loops, gain search,
//! pole placement and controllability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, svd, to_complex, CMatrix, RealMatrix};
use crate::quasipoly::crossing::default_omega_max;
use crate::quasipoly::roots::rightmost_roots_with;
use crate::quasipoly::{char_function, crossing_sweep, stability_map_with, CharacteristicFunction, DelayTerm, DirectionMethod, StabilityMap, TimeDelaySystem};

/// `x' = A0 x(t) + A1 x(t - h) + B u(t)` with a fixed plant delay `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    #[serde(rename = "A0")]
    pub a0: RealMatrix,
    #[serde(rename = "A1")]
    pub a1: RealMatrix,
    pub h: f64,
    #[serde(rename = "B")]
    pub b: RealMatrix,
}

impl Plant {
    pub fn new(a0: RealMatrix, a1: RealMatrix, h: f64, b: RealMatrix) -> Result<Self> {
        let n = a0.nrows();
        if !a0.is_square() || a1.nrows() != n || a1.ncols() != n {
            return Err(Error::DimensionMismatch("A0 and A1 must be square of equal size".into()));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!("plant delay must be positive, got {h}")));
        }
        Ok(Self { a0, a1, h, b })
    }

    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    /// The open loop as a time-delay system (no `tau` dependence).
    pub fn open_loop(&self) -> Result<TimeDelaySystem> {
        TimeDelaySystem::new(
            vec![DelayTerm::fixed(0.0, self.a0.clone()), DelayTerm::fixed(self.h, self.a1.clone())],
            Some(self.b.clone()),
        )
    }

    fn check_gain(&self, k: &[f64]) -> Result<DMatrix<f64>> {
        if self.b.ncols() != 1 {
            return Err(Error::DimensionMismatch("delayed feedback needs a single input column".into()));
        }
        if k.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("gain has {} entries, expected {}", k.len(), self.dim())));
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gain entries must be finite".into()));
        }
        Ok(self.b.inner() * DMatrix::from_row_slice(1, k.len(), k))
    }
}

/// A gain row with its feedback delay and certified stable delay intervals or placed poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainDesign {
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    /// Chosen feedback delay: the placement delay, or the midpoint of the widest stable interval.
    pub tau: Option<f64>,
    pub stable_intervals: Vec<(f64, f64)>,
    pub placed_poles: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
}

impl GainDesign {
    pub fn widest_interval(&self) -> f64 {
        self.stable_intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }
}

/// `x' = (A0 - BK) x + A1 x(t - h) + BK x(t - tau)`.
pub fn closed_loop_system(plant: &Plant, k: &[f64]) -> Result<TimeDelaySystem> {
    let bk = plant.check_gain(k)?;
    TimeDelaySystem::new(
        vec![
            DelayTerm::fixed(0.0, RealMatrix::new(plant.a0.inner() - &bk)?),
            DelayTerm::fixed(plant.h, plant.a1.clone()),
            DelayTerm::variable(0.0, RealMatrix::new(bk)?),
        ],
        Some(plant.b.clone()),
    )
}

/// `det(sI - A0 + BK g(s) - A1 exp(-h s))` with `g(s) = 1 - exp(-tau s)`.
pub fn closed_loop_char(plant: &Plant, k: &[f64]) -> Result<CharacteristicFunction> {
    char_function(&closed_loop_system(plant, k)?)
}

/// The printed necessary condition for a crossing with `|omega| <= beta`:
/// `k2 - |k2| - beta (1 - beta) <= 1 - k1 + |k1| (3 + beta)`.
pub fn lemma2_screen(k1: f64, k2: f64, beta: f64) -> Result<bool> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    Ok(k2 - k2.abs() - beta * (1.0 - beta) <= 1.0 - k1 + k1.abs() * (3.0 + beta))
}

/// Whether the screen's structural assumptions hold for this plant.
pub fn lemma2_applies(plant: &Plant) -> bool {
    let close = |m: &RealMatrix, want: &[f64]| m.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12);
    // column-major comparison
    plant.dim() == 2
        && plant.b.ncols() == 1
        && (plant.h - 3.2).abs() < 1e-12
        && close(&plant.a0, &[0.0, -1.0, 1.0, 1.0])
        && close(&plant.a1, &[0.0, 0.0, 0.0, 1.0])
        && close(&plant.b, &[1.0, 0.0])
}

/// Delay intervals in `[0, tau_max]` on which the closed loop with gain `k` is stable.
pub fn stabilizing_intervals(plant: &Plant, k: &[f64], tau_max: f64, cfg: &AnalysisConfig) -> Result<GainDesign> {
    stabilizing_intervals_with(plant, k, tau_max, cfg, DirectionMethod::RootTendency).map(|(d, _)| d)
}

/// As [`stabilizing_intervals`], choosing how crossing directions are decided; also returns the map.
pub fn stabilizing_intervals_with(
    plant: &Plant,
    k: &[f64],
    tau_max: f64,
    cfg: &AnalysisConfig,
    method: DirectionMethod,
) -> Result<(GainDesign, StabilityMap)> {
    let sys = closed_loop_system(plant, k)?;
    let f = char_function(&sys)?;
    let map = stability_map_with(&f, &sys, tau_max, cfg, method)?;
    let mut intervals = Vec::new();
    for (lo, hi) in map.stable_intervals() {
        let mid = 0.5 * (lo + hi);
        let roots = rightmost_roots_with(&sys, &f, mid, cfg.collocation_nodes)?;
        if roots.unstable_count(1e-6) == 0 {
            intervals.push((lo, hi));
        } else {
            log::warn!("interval ({lo}, {hi}) failed spectral verification");
        }
    }
    let tau = intervals
        .iter()
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .map(|(a, b)| 0.5 * (a + b));
    Ok((
        GainDesign { k: k.to_vec(), tau, stable_intervals: intervals, placed_poles: Vec::new(), residual: None },
        map,
    ))
}

/// Grid search over gains; designs with a nonempty stable set, widest interval first.
pub fn gain_search(plant: &Plant, grid: &[Vec<f64>], tau_max: f64, beta: f64, cfg: &AnalysisConfig) -> Result<Vec<GainDesign>> {
    let screened = lemma2_applies(plant);
    let mut out = Vec::new();
    for k in grid {
        if screened && k.len() == 2 && !lemma2_screen(k[0], k[1], beta)? {
            continue;
        }
        let f = closed_loop_char(plant, k)?;
        let omega_max = cfg.omega_max.unwrap_or_else(|| default_omega_max(&f));
        let crossings = crossing_sweep(&f, omega_max, cfg.grid_points)?;
        let mut freqs: Vec<f64> = crossings.iter().map(|c| c.omega).collect();
        freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        if freqs.len() < 2 {
            continue;
        }
        match stabilizing_intervals(plant, k, tau_max, cfg) {
            Ok(d) if !d.stable_intervals.is_empty() => out.push(d),
            Ok(_) => {}
            Err(Error::DegenerateCrossing { .. } | Error::NegativeCount { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    out.sort_by(|a, b| b.widest_interval().total_cmp(&a.widest_interval()));
    Ok(out)
}

/// Gain placing the pair `s*, conj(s*)` for feedback delay `tau` (minimum norm when `n > 2`).
pub fn place_pole_pair(plant: &Plant, tau: f64, s_star: Complex64) -> Result<GainDesign> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    if plant.b.ncols() != 1 {
        return Err(Error::DimensionMismatch("pole placement needs a single input column".into()));
    }
    let n = plant.dim();
    let g = Complex64::new(1.0, 0.0) - (-s_star * tau).exp();
    if g.norm() < 1e-10 {
        return Err(Error::SingularPlacement(format!("1 - exp(-s tau) vanishes at s = {s_star}")));
    }
    let m = CMatrix::from_diagonal_element(n, n, s_star)
        - to_complex(plant.a0.inner())
        - to_complex(plant.a1.inner()) * (-s_star * plant.h).exp();
    let f0 = m.determinant();
    let bc = to_complex(plant.b.inner());
    // F(s*; K) = F0 + sum_i K_i v_i since the feedback is rank one
    let v: Vec<Complex64> = (0..n)
        .map(|i| {
            let mut e = CMatrix::zeros(1, n);
            e[(0, i)] = Complex64::new(1.0, 0.0);
            (&m + &bc * e * g).determinant() - f0
        })
        .collect();
    let sys = DMatrix::from_fn(2, n, |r, c| if r == 0 { v[c].re } else { v[c].im });
    let rhs = DVector::from_vec(vec![-f0.re, -f0.im]);
    let dec = svd(&sys)?;
    let top = dec.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = dec.singular_values.iter().filter(|s| **s > 1e-10 * top.max(f64::MIN_POSITIVE)).count();
    if top == 0.0 || rank < 2 {
        return Err(Error::SingularPlacement(format!("gain equations have rank {rank} < 2")));
    }
    let k = dec
        .solve(&rhs, 1e-10 * top)
        .map_err(|e| Error::SingularPlacement(e.to_string()))?;
    let k: Vec<f64> = k.iter().copied().collect();
    let f = closed_loop_char(plant, &k)?;
    let residual = f.eval(s_star, tau).norm() / f.scale(s_star, tau);
    Ok(GainDesign {
        k,
        tau: Some(tau),
        stable_intervals: Vec::new(),
        placed_poles: vec![s_star, s_star.conj()],
        residual: Some(residual),
    })
}

/// Rank test on `[B, MB, ..., M^(n-1) B]` with `M = A0 + A1`.
pub fn is_controllable(a0: &RealMatrix, a1: &RealMatrix, b: &RealMatrix, cfg: &ToleranceConfig) -> Result<bool> {
    cfg.validate()?;
    let n = a0.nrows();
    if !a0.is_square() || a1.nrows() != n || a1.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch("A0, A1 must be n x n and B must have n rows".into()));
    }
    let mm = a0.inner() + a1.inner();
    let p = b.ncols();
    let mut ctrb = DMatrix::<f64>::zeros(n, n * p);
    let mut blk = b.inner().clone();
    for i in 0..n {
        ctrb.view_mut((0, i * p), (n, p)).copy_from(&blk);
        blk = &mm * blk;
    }
    Ok(numerical_rank(&ctrb, cfg.rank_tol)? == n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> RealMatrix {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn screen_examples() {
        assert!(lemma2_screen(1.0, -5.0, 2.0).unwrap());
        assert!(lemma2_screen(0.0, 0.0, 1.0).unwrap());
        assert!(!lemma2_screen(0.0, 1.0, 2.0).unwrap());
        assert!(lemma2_screen(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn controllability_examples() {
        let cfg = ToleranceConfig::default();
        let b = m(&[&[1.0], &[0.0]]);
        let a0 = m(&[&[0.0, 1.0], &[-1.0, 1.0]]);
        let a1 = m(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert!(is_controllable(&a0, &a1, &b, &cfg).unwrap());
        assert!(!is_controllable(&a0, &a1, &RealMatrix::zeros(2, 1), &cfg).unwrap());
        assert!(!is_controllable(&RealMatrix::identity(2), &RealMatrix::zeros(2, 2), &b, &cfg).unwrap());
    }

    #[test]
    fn zero_pole_is_singular() {
        let p = Plant::new(m(&[&[0.0, 2.0], &[-1.0, 0.0]]), m(&[&[0.0, 1.0], &[0.0, 0.0]]), 3.2, m(&[&[1.0], &[0.0]])).unwrap();
        assert!(matches!(place_pole_pair(&p, 0.1, Complex64::new(0.0, 0.0)), Err(Error::SingularPlacement(_))));
    }
}
