//! Imaginary-axis crossings of `F(j omega, tau)` and their root tendencies.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::charfn::CharacteristicFunction;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_complex, CMatrix};

const TWO_PI: f64 = 2.0 * PI;
/// Crossings closer than this in frequency (and phase) are merged.
const MERGE_TOL: f64 = 1e-6;
/// Acceptance threshold on `| |u| - 1 |` for tangential touches.
const TOUCH_TOL: f64 = 1e-9;
/// Relative residual a crossing must satisfy.
const RESIDUAL_REL: f64 = 1e-8;

/// Direction in which a root pair moves as `tau` grows through a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Tendency {
    /// Into the right half-plane.
    Destabilizing,
    /// Into the left half-plane.
    Stabilizing,
    Indeterminate,
}

impl Tendency {
    pub fn as_i8(self) -> i8 {
        match self {
            Tendency::Destabilizing => 1,
            Tendency::Stabilizing => -1,
            Tendency::Indeterminate => 0,
        }
    }
}

impl From<Tendency> for i8 {
    fn from(t: Tendency) -> i8 {
        t.as_i8()
    }
}

impl TryFrom<i8> for Tendency {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Tendency::Destabilizing),
            -1 => Ok(Tendency::Stabilizing),
            0 => Ok(Tendency::Indeterminate),
            _ => Err(format!("invalid tendency {v}")),
        }
    }
}

/// A root pair `s = +-j omega` on the imaginary axis at `tau_l = (theta + 2 pi l) / omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub omega: f64,
    /// Phase in `[0, 2 pi)`, with `exp(-j theta)` the unit-circle value of `exp(-j omega tau)`.
    pub theta: f64,
    pub tendency: Tendency,
    /// `|F(j omega, tau_0)|` relative to the term scale.
    pub residual: f64,
}

impl CrossingPoint {
    /// `tau_l` for `l = 0, 1, ...` up to `tau_max`.
    pub fn delays(&self, tau_max: f64) -> Vec<f64> {
        (0..)
            .map(|l| (self.theta + TWO_PI * l as f64) / self.omega)
            .take_while(|t| *t <= tau_max)
            .collect()
    }

    pub fn delay(&self, l: usize) -> f64 {
        (self.theta + TWO_PI * l as f64) / self.omega
    }
}

/// Sign of `Re(ds/dtau)` at `s = j omega_c`, `tau = tau_c`.
///
/// Fails with [`Error::NotACrossing`] when `F` does not vanish there.
pub fn root_tendency(f: &CharacteristicFunction, omega_c: f64, tau_c: f64) -> Result<Tendency> {
    let s = Complex64::new(0.0, omega_c);
    let scale = f.scale(s, tau_c);
    let (v, fs, ft) = f.eval_partials(s, tau_c);
    let rel = v.norm() / scale;
    if rel > RESIDUAL_REL {
        return Err(Error::NotACrossing(rel));
    }
    Ok(tendency_from_partials(fs, ft, scale))
}

pub(crate) fn tendency_from_partials(fs: Complex64, ft: Complex64, scale: f64) -> Tendency {
    if fs.norm() <= 1e-8 * scale {
        return Tendency::Indeterminate;
    }
    let ds = -ft / fs;
    if ds.re.abs() <= 1e-8 * ds.norm().max(1.0) {
        Tendency::Indeterminate
    } else if ds.re > 0.0 {
        Tendency::Destabilizing
    } else {
        Tendency::Stabilizing
    }
}

/// Default sweep bound: a coefficient bound on the crossing frequencies plus a margin.
pub fn default_omega_max(f: &CharacteristicFunction) -> f64 {
    match f.frequency_bound() {
        Some(b) => 1.1 * b + 1.0,
        None => {
            let lead = f.terms().iter().map(|t| t.coeffs.max_abs()).fold(0.0, f64::max);
            2.0 * (1.0 + lead)
        }
    }
}

/// Roots of `sum_m c_m u^m`, dropping negligible leading coefficients.
fn unit_roots(c: &[Complex64]) -> Vec<Complex64> {
    let big = c.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let mut m = c.len() - 1;
    while m > 0 && c[m].norm() <= 1e-14 * big {
        m -= 1;
    }
    match m {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - 4.0 * a * cc).sqrt();
            let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
            if q.norm() == 0.0 {
                vec![Complex64::new(0.0, 0.0); 2]
            } else {
                vec![q / a, cc / q]
            }
        }
        _ => {
            let mut comp = CMatrix::zeros(m, m);
            for i in 1..m {
                comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..m {
                comp[(i, m - 1)] = -c[i] / c[m];
            }
            eigenvalues_complex(&comp).unwrap_or_default()
        }
    }
}

struct Sample {
    inside: usize,
    gap: f64,
}

fn sample(f: &CharacteristicFunction, omega: f64) -> Sample {
    let roots = unit_roots(&f.unit_coefficients(omega));
    let inside = roots.iter().filter(|u| u.norm() < 1.0).count();
    let gap = roots.iter().fold(f64::INFINITY, |a, u| a.min((u.norm() - 1.0).abs()));
    Sample { inside, gap }
}

fn gap(f: &CharacteristicFunction, omega: f64) -> f64 {
    sample(f, omega).gap
}

/// Bisects on the inside-count until the bracket is below `tol`.
fn bisect_count(f: &CharacteristicFunction, mut a: f64, mut b: f64, na: usize) -> f64 {
    while b - a > 1e-13 * b.max(1.0) {
        let mid = 0.5 * (a + b);
        if sample(f, mid).inside == na {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: &CharacteristicFunction, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut g1 = gap(f, x1);
    let mut g2 = gap(f, x2);
    for _ in 0..200 {
        if b - a <= 1e-14 * b.max(1.0) {
            break;
        }
        if g1 <= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = gap(f, x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = gap(f, x2);
        }
    }
    if g1 <= g2 {
        x1
    } else {
        x2
    }
}

/// The unit-circle root closest to `|u| = 1` at `omega`, as a phase.
fn phase_at(f: &CharacteristicFunction, omega: f64) -> Option<f64> {
    let roots = unit_roots(&f.unit_coefficients(omega));
    let u = roots
        .iter()
        .min_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs()))?;
    Some(normalize_phase(-u.arg()))
}

fn normalize_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TWO_PI);
    if TWO_PI - t < 1e-9 {
        0.0
    } else {
        t
    }
}

fn g_at(f: &CharacteristicFunction, omega: f64, theta: f64) -> (Complex64, Complex64, Complex64, f64) {
    let c = f.unit_coefficients(omega);
    let dc = f.unit_coefficients_deriv(omega);
    let mut v = Complex64::new(0.0, 0.0);
    let mut dw = Complex64::new(0.0, 0.0);
    let mut dt = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (m, (cm, dcm)) in c.iter().zip(&dc).enumerate() {
        let e = Complex64::from_polar(1.0, -(m as f64) * theta);
        v += cm * e;
        dw += dcm * e;
        dt += Complex64::new(0.0, -(m as f64)) * cm * e;
        scale += cm.norm();
    }
    (v, dw, dt, scale.max(f64::MIN_POSITIVE))
}

/// Gauss-Newton polish of `(omega, theta)` on `F = 0`; keeps the start if it cannot improve.
fn polish(f: &CharacteristicFunction, omega: f64, theta: f64) -> (f64, f64, f64) {
    let (v0, _, _, s0) = g_at(f, omega, theta);
    let mut best = (omega, theta, v0.norm() / s0);
    let (mut w, mut th) = (omega, theta);
    for _ in 0..200 {
        let (v, dw, dt, scale) = g_at(f, w, th);
        let res = v.norm() / scale;
        if res < best.2 {
            best = (w, th, res);
        }
        if res <= 1e-16 {
            break;
        }
        // real 2x2 system [Re; Im] * [dw, dth] = -[Re v; Im v], minimum-norm solution
        let j = nalgebra::Matrix2::new(dw.re, dt.re, dw.im, dt.im);
        let rhs = nalgebra::Vector2::new(-v.re, -v.im);
        let svd = j.svd(true, true);
        let step = match svd.solve(&rhs, 1e-12 * svd.singular_values[0].max(f64::MIN_POSITIVE)) {
            Ok(s) => s,
            Err(_) => break,
        };
        w += step[0];
        th += step[1];
        if !(w.is_finite() && th.is_finite()) || (w - omega).abs() > 1e-4 * omega.max(1.0) {
            break;
        }
    }
    (best.0, normalize_phase(best.1), best.2)
}

/// Finds all crossings with `0 < omega <= omega_max` on a uniform grid of `grid_points` cells.
///
/// For each frequency the roots `u_i` of `sum_m C_m(omega) u^m` are computed; a change in the
/// number of roots inside the unit circle marks a transversal crossing (refined by bisection),
/// and local minima of `min_i | |u_i| - 1 |` catch tangential touches.
pub fn crossing_sweep(f: &CharacteristicFunction, omega_max: f64, grid_points: usize) -> Result<Vec<CrossingPoint>> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::InvalidInput(format!("omega_max must be positive, got {omega_max}")));
    }
    if grid_points < 16 {
        return Err(Error::GridTooCoarse(format!(
            "{grid_points} grid points; use at least 16"
        )));
    }
    if f.max_mult() == 0 {
        return Ok(Vec::new());
    }
    let h = omega_max / grid_points as f64;
    let mut omegas: Vec<f64> = vec![h * 1e-6];
    omegas.extend((1..=grid_points).map(|i| h * i as f64));
    let samples: Vec<Sample> = omegas.iter().map(|w| sample(f, *w)).collect();

    // (omega, transversal)
    let mut candidates: Vec<(f64, bool)> = Vec::new();
    for i in 0..omegas.len() - 1 {
        let (a, b) = (omegas[i], omegas[i + 1]);
        if samples[i].inside != samples[i + 1].inside {
            let mut hits = Vec::new();
            refine_cell(f, a, b, samples[i].inside, samples[i + 1].inside, 0, &mut hits);
            candidates.extend(hits.into_iter().map(|w| (w, true)));
        }
    }
    for i in 1..omegas.len() - 1 {
        if samples[i].gap <= samples[i - 1].gap && samples[i].gap <= samples[i + 1].gap {
            let w = golden_min(f, omegas[i - 1], omegas[i + 1]);
            if gap(f, w) <= TOUCH_TOL {
                let eps = 1e-6 * w.max(1.0);
                let transversal = sample(f, w - eps).inside != sample(f, w + eps).inside;
                candidates.push((w, transversal));
            }
        }
    }
    let last = omegas.len() - 1;
    if samples[last].gap <= TOUCH_TOL {
        candidates.push((omegas[last], false));
    }

    let mut found: Vec<(CrossingPoint, bool)> = Vec::new();
    for (w, transversal) in candidates {
        let Some(theta) = phase_at(f, w) else { continue };
        let (w, theta, residual) = polish(f, w, theta);
        if residual > RESIDUAL_REL || w <= 0.0 || w > omega_max * (1.0 + 1e-12) {
            continue;
        }
        let tendency = if transversal {
            let tau0 = theta / w;
            let s = Complex64::new(0.0, w);
            let (_, fs, ft) = f.eval_partials(s, tau0);
            tendency_from_partials(fs, ft, f.scale(s, tau0))
        } else {
            // the root only touches the axis; Re(ds/dtau) vanishes there
            Tendency::Indeterminate
        };
        let cp = CrossingPoint { omega: w, theta, tendency, residual };
        match found.iter_mut().find(|(p, _)| {
            (p.omega - w).abs() <= MERGE_TOL * w.max(1.0) && phase_distance(p.theta, theta) <= MERGE_TOL
        }) {
            Some((p, t)) => {
                if (transversal && !*t) || (transversal == *t && cp.residual < p.residual) {
                    *p = cp;
                    *t = transversal;
                }
            }
            None => found.push((cp, transversal)),
        }
    }
    let mut found: Vec<CrossingPoint> = found.into_iter().map(|(p, _)| p).collect();
    found.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.theta.total_cmp(&b.theta)));
    Ok(found)
}

fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

/// Splits cells where several roots change side so each crossing is bisected separately.
fn refine_cell(
    f: &CharacteristicFunction,
    a: f64,
    b: f64,
    na: usize,
    nb: usize,
    depth: usize,
    out: &mut Vec<f64>,
) {
    if na.abs_diff(nb) == 1 || depth >= 3 {
        out.push(bisect_count(f, a, b, na));
        return;
    }
    let parts = 16;
    let step = (b - a) / parts as f64;
    let mut prev = (a, na);
    for k in 1..=parts {
        let x = if k == parts { b } else { a + step * k as f64 };
        let n = if k == parts { nb } else { sample(f, x).inside };
        if n != prev.1 {
            refine_cell(f, prev.0, x, prev.1, n, depth + 1, out);
        }
        prev = (x, n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::quasipoly::charfn::CfTerm;

    fn cf(terms: &[(&[f64], f64, u32)]) -> CharacteristicFunction {
        CharacteristicFunction::from_terms(
            terms
                .iter()
                .map(|(c, o, m)| CfTerm { coeffs: Poly::new(c.to_vec()), offset: *o, mult: *m })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn second_block_crossings() {
        let f = cf(&[(&[2.0, 0.0, 1.0], 0.0, 0), (&[1.0], 0.0, 1)]);
        let cps = crossing_sweep(&f, 5.0, 2000).unwrap();
        assert_eq!(cps.len(), 2, "{cps:?}");
        assert!((cps[0].omega - 1.0).abs() < 1e-10);
        assert!((cps[0].theta - PI).abs() < 1e-10);
        assert_eq!(cps[0].tendency, Tendency::Stabilizing);
        assert!((cps[1].omega - 3f64.sqrt()).abs() < 1e-10);
        assert!(cps[1].theta.abs() < 1e-9);
        assert_eq!(cps[1].tendency, Tendency::Destabilizing);
    }

    #[test]
    fn tangent_touch_is_found_and_indeterminate() {
        let f = cf(&[(&[1.0, -1.0, 1.0], 0.0, 0), (&[0.0, -1.0], 0.0, 1)]);
        let cps = crossing_sweep(&f, 5.0, 2000).unwrap();
        assert_eq!(cps.len(), 1, "{cps:?}");
        assert!((cps[0].omega - 1.0).abs() < 1e-6);
        assert!((cps[0].theta - PI).abs() < 1e-6);
        assert_eq!(cps[0].tendency, Tendency::Indeterminate);
    }

    #[test]
    fn no_delay_no_crossings() {
        let f = cf(&[(&[2.0, 3.0, 1.0], 0.0, 0)]);
        assert!(crossing_sweep(&f, 5.0, 100).unwrap().is_empty());
    }

    #[test]
    fn tendency_requires_a_root() {
        let f = cf(&[(&[2.0, 0.0, 1.0], 0.0, 0), (&[1.0], 0.0, 1)]);
        assert!(matches!(root_tendency(&f, 1.3, 0.2), Err(Error::NotACrossing(_))));
        assert_eq!(root_tendency(&f, 1.0, PI).unwrap(), Tendency::Stabilizing);
    }

    #[test]
    fn delays_truncate() {
        let cp = CrossingPoint { omega: 1.0, theta: PI, tendency: Tendency::Stabilizing, residual: 0.0 };
        let d = cp.delays(10.0);
        assert_eq!(d.len(), 2);
        assert!((d[1] - 3.0 * PI).abs() < 1e-12);
    }
}
