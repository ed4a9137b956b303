//! Whole-system stability analysis with automatic decomposition on degenerate crossings.

use serde::Serialize;

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::invariant::{decompose_system, DecompositionResult};
use crate::quasipoly::{char_function, stability_map, CrossingPoint, StabilityInterval, StabilityMap, TimeDelaySystem};

const MAX_DEPTH: usize = 4;

/// Map of one diagonal block, with its position in the block order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub dim: usize,
    pub map: StabilityMap,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub decomposed: bool,
    /// Leaves of the decomposition tree, in order; a single entry when undecomposed.
    pub blocks: Vec<BlockReport>,
    #[serde(rename = "NU0")]
    pub nu0: usize,
    pub tau_max: f64,
    pub crossings: Vec<CrossingPoint>,
    pub intervals: Vec<StabilityInterval>,
    pub warnings: Vec<String>,
}

impl StabilityReport {
    pub fn nu_at(&self, tau: f64) -> usize {
        self.intervals
            .iter()
            .find(|iv| tau >= iv.tau_lo && tau < iv.tau_hi)
            .or(self.intervals.last())
            .map(|iv| iv.nu)
            .unwrap_or(self.nu0)
    }

    pub fn stable_intervals(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().filter(|iv| iv.nu == 0).map(|iv| (iv.tau_lo, iv.tau_hi)).collect()
    }

    pub fn min_nu_windows(&self) -> (usize, Vec<(f64, f64)>) {
        let min = self.intervals.iter().map(|iv| iv.nu).min().unwrap_or(self.nu0);
        (min, self.intervals.iter().filter(|iv| iv.nu == min).map(|iv| (iv.tau_lo, iv.tau_hi)).collect())
    }
}

fn short(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn analyse(
    sys: &TimeDelaySystem,
    tau_max: f64,
    cfg: &AnalysisConfig,
    decompose: bool,
    depth: usize,
    out: &mut Vec<BlockReport>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let f = char_function(sys)?;
    match stability_map(&f, sys, tau_max, cfg) {
        Ok(map) => {
            out.push(BlockReport { dim: sys.dim(), map, decomposition: None });
            Ok(())
        }
        Err(Error::DegenerateCrossing { omegas }) if decompose && depth < MAX_DEPTH => {
            let (d, parts) = decompose_system(sys, &cfg.tol).map_err(|e| match e {
                Error::NoDecomposition => Error::DegenerateCrossing { omegas: omegas.clone() },
                other => other,
            })?;
            let mut shown: Vec<String> = omegas.iter().map(|w| short(*w)).collect();
            shown.dedup();
            let list = shown.join(", ");
            warnings.push(format!("degenerate crossing at ω = {list}; decomposed"));
            let first = out.len();
            for p in &parts {
                analyse(p, tau_max, cfg, decompose, depth + 1, out, warnings)?;
            }
            out[first].decomposition = Some(d);
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// Combines per-block maps: the count is the sum over blocks on the union of breakpoints.
fn combine(maps: &[&StabilityMap], tau_max: f64) -> Vec<StabilityInterval> {
    let mut cuts: Vec<f64> = maps
        .iter()
        .flat_map(|m| m.intervals.iter().flat_map(|iv| [iv.tau_lo, iv.tau_hi]))
        .chain([0.0, tau_max])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let mut out: Vec<StabilityInterval> = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let nu = maps.iter().map(|m| m.nu_at(mid)).sum();
        match out.last_mut() {
            Some(last) if last.nu == nu => last.tau_hi = w[1],
            _ => out.push(StabilityInterval { tau_lo: w[0], tau_hi: w[1], nu }),
        }
    }
    out
}

/// Stability map of a single-delay system; decomposes on degenerate crossings when allowed.
pub fn analyze_stability(sys: &TimeDelaySystem, tau_max: f64, cfg: &AnalysisConfig, decompose: bool) -> Result<StabilityReport> {
    let mut blocks = Vec::new();
    let mut warnings = Vec::new();
    analyse(sys, tau_max, cfg, decompose, 0, &mut blocks, &mut warnings)?;
    let maps: Vec<&StabilityMap> = blocks.iter().map(|b| &b.map).collect();
    let intervals = combine(&maps, tau_max);
    let mut crossings: Vec<CrossingPoint> = Vec::new();
    for cp in maps.iter().flat_map(|m| m.crossings.iter()) {
        if !crossings.iter().any(|c| (c.omega - cp.omega).abs() < 1e-6 && (c.theta - cp.theta).abs() < 1e-6) {
            crossings.push(cp.clone());
        }
    }
    crossings.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.theta.total_cmp(&b.theta)));
    Ok(StabilityReport {
        decomposed: blocks.len() > 1,
        nu0: maps.iter().map(|m| m.nu0).sum(),
        tau_max,
        crossings,
        intervals,
        warnings,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RealMatrix;

    #[test]
    fn undecomposed_system_passes_through() {
        let a = RealMatrix::from_rows(&[vec![-1.0]]).unwrap();
        let b = RealMatrix::from_rows(&[vec![-2.0]]).unwrap();
        let sys = TimeDelaySystem::single_delay(a, b).unwrap();
        let rep = analyze_stability(&sys, 5.0, &AnalysisConfig::default(), true).unwrap();
        assert!(!rep.decomposed && rep.warnings.is_empty());
        assert_eq!(rep.nu0, 0);
        let w = 3f64.sqrt();
        let tau_c = (2.0 * std::f64::consts::PI / 3.0) / w;
        assert_eq!(rep.stable_intervals().len(), 1);
        assert!((rep.stable_intervals()[0].1 - tau_c).abs() < 1e-8);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(short(1.0000000001), "1");
        assert_eq!(short(1.73205), "1.7321");
    }
}
