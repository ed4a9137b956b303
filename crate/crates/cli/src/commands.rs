use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use tdstab::feedback::{closed_loop_system, is_controllable, place_pole_pair, stabilizing_intervals_with, GainDesign, Plant};
use tdstab::invariant::decompose_system;
use tdstab::pipeline::analyze_stability;
use tdstab::quasipoly::{char_function, crossing_sweep, default_omega_max, rightmost_roots, DirectionMethod, Tendency, TimeDelaySystem};
use tdstab::simulate::{integrate, settling_time, HistoryFunction};
use tdstab::{AnalysisConfig, ToleranceConfig};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::system::{load_system, LoadedSystem};

pub const SCHEMA_VERSION: u32 = 1;

/// Versioned JSON report; every run embeds its input and effective configuration.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub input: Value,
    pub config: Value,
    pub result: Value,
    pub warnings: Vec<String>,
}

/// A finished command: the JSON report and, where the command defines one, its CSV table.
pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
}

impl Outcome {
    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.report).map_err(|e| CliError::Numerical(e.to_string()))? + "\n"),
            Format::Csv => self
                .csv
                .clone()
                .ok_or_else(|| CliError::Usage(format!("`{}` has no CSV output; use --format json", self.report.command))),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values always serialize")
}

fn tolerances(tol: &TolArgs) -> CliResult<ToleranceConfig> {
    let mut cfg = ToleranceConfig::default();
    if let Some(t) = tol.tol {
        cfg.rank_tol = t;
        cfg.residual_tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn analysis(sweep: &SweepArgs) -> CliResult<AnalysisConfig> {
    let mut cfg = AnalysisConfig { tol: tolerances(&sweep.tol)?, ..AnalysisConfig::default() };
    if let Some(w) = sweep.omega_max {
        if !(w.is_finite() && w > 0.0) {
            return Err(CliError::Validation(format!("--omega-max must be positive, got {w}")));
        }
        cfg.omega_max = Some(w);
    }
    if let Some(g) = sweep.grid {
        cfg.grid_points = g;
    }
    if let Some(n) = sweep.nodes {
        cfg.collocation_nodes = n;
    }
    Ok(cfg)
}

fn require_plant(loaded: &LoadedSystem) -> CliResult<&Plant> {
    loaded.plant.as_ref().ok_or_else(|| CliError::Validation("this command needs a `plant` block in the system file".into()))
}

/// The open system, or the closed loop when a gain is given.
fn target(loaded: &LoadedSystem, gain: &GainArg) -> CliResult<TimeDelaySystem> {
    match &gain.gain {
        Some(k) => Ok(closed_loop_system(require_plant(loaded)?, &k.0)?),
        None => Ok(loaded.system.clone()),
    }
}

fn resolve_tau(sys: &TimeDelaySystem, tau: Option<f64>) -> CliResult<f64> {
    match tau {
        Some(t) => Ok(t),
        None if sys.has_variable_terms() => Err(CliError::Usage("--tau is required for systems with a variable delay".into())),
        None => Ok(0.0),
    }
}

fn has_csv(cmd: &Command) -> bool {
    !matches!(cmd, Command::Decompose(_) | Command::CheckControllable(_))
}

pub fn io_of(cmd: &Command) -> &IoArgs {
    match cmd {
        Command::Decompose(a) => &a.io,
        Command::Crossings(a) => &a.io,
        Command::Stability(a) => &a.io,
        Command::DesignStabilize(a) => &a.io,
        Command::DesignPlace(a) => &a.io,
        Command::Simulate(a) => &a.io,
        Command::Roots(a) => &a.io,
        Command::CheckControllable(a) => &a.io,
    }
}

fn name_of(cmd: &Command) -> &'static str {
    match cmd {
        Command::Decompose(_) => "decompose",
        Command::Crossings(_) => "crossings",
        Command::Stability(_) => "stability",
        Command::DesignStabilize(_) => "design-stabilize",
        Command::DesignPlace(_) => "design-place",
        Command::Simulate(_) => "simulate",
        Command::Roots(_) => "roots",
        Command::CheckControllable(_) => "check-controllable",
    }
}

fn degenerate_warning(omegas: &[f64]) -> String {
    let list: Vec<String> = omegas.iter().map(|w| format!("{w:.6}")).collect();
    format!("degenerate crossing at ω = {}; root tendency indeterminate, decompose the system first", list.join(", "))
}

fn interval_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("tau_lo,tau_hi\n");
    for (a, b) in rows {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

struct Parts {
    config: Value,
    result: Value,
    warnings: Vec<String>,
    csv: Option<String>,
}

fn decompose(a: &DecomposeArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let tol = tolerances(&a.tol)?;
    let (d, blocks) = decompose_system(&loaded.system, &tol)?;
    Ok(Parts {
        config: json!({ "tol": tol }),
        result: json!({ "decomposition": d, "blocks": blocks }),
        warnings: vec![],
        csv: None,
    })
}

fn crossings(a: &CrossingsArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let cfg = analysis(&a.sweep)?;
    let sys = target(loaded, &a.gain)?;
    let f = char_function(&sys)?;
    let omega_max = cfg.omega_max.unwrap_or_else(|| default_omega_max(&f));
    let cps = crossing_sweep(&f, omega_max, cfg.grid_points)?;
    let degenerate: Vec<f64> = cps.iter().filter(|c| c.tendency == Tendency::Indeterminate).map(|c| c.omega).collect();
    let rows: Vec<Value> = cps
        .iter()
        .map(|c| {
            json!({
                "omega": c.omega,
                "theta": c.theta,
                "tau_0": c.delay(0),
                "tau_1": c.delay(1),
                "tendency": c.tendency,
                "residual": c.residual,
            })
        })
        .collect();
    let mut csv = String::from("omega,theta,tau_0,tau_1,tendency\n");
    for c in &cps {
        let _ = writeln!(csv, "{},{},{},{},{}", c.omega, c.theta, c.delay(0), c.delay(1), c.tendency.as_i8());
    }
    Ok(Parts {
        config: json!({ "analysis": cfg, "omega_max": omega_max, "gain": a.gain.gain.as_ref().map(|k| &k.0) }),
        result: json!({ "crossings": rows }),
        warnings: if degenerate.is_empty() { vec![] } else { vec![degenerate_warning(&degenerate)] },
        csv: Some(csv),
    })
}

fn stability(a: &StabilityArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let cfg = analysis(&a.sweep)?;
    let sys = target(loaded, &a.gain)?;
    let rep = analyze_stability(&sys, a.tau_max, &cfg, !a.no_decompose)?;
    let (min_nu, windows) = rep.min_nu_windows();
    let mut result = to_value(&rep);
    let warnings = match result.as_object_mut().and_then(|m| m.remove("warnings")) {
        Some(Value::Array(w)) => w.into_iter().filter_map(|v| v.as_str().map(String::from)).collect(),
        _ => vec![],
    };
    if let Some(m) = result.as_object_mut() {
        m.insert("stable_intervals".into(), to_value(&rep.stable_intervals()));
        m.insert("min_NU".into(), json!({ "NU": min_nu, "windows": windows }));
    }
    let mut csv = String::from("tau_lo,tau_hi,NU\n");
    for iv in &rep.intervals {
        let _ = writeln!(csv, "{},{},{}", iv.tau_lo, iv.tau_hi, iv.nu);
    }
    Ok(Parts {
        config: json!({
            "analysis": cfg,
            "tau_max": a.tau_max,
            "decompose": !a.no_decompose,
            "gain": a.gain.gain.as_ref().map(|k| &k.0),
        }),
        result,
        warnings,
        csv: Some(csv),
    })
}

fn design_stabilize(a: &DesignStabilizeArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let cfg = analysis(&a.sweep)?;
    let plant = require_plant(loaded)?;
    let (design, map) = stabilizing_intervals_with(plant, &a.gain.0, a.tau_max, &cfg, DirectionMethod::RootTendency)?;
    let mut warnings = vec![];
    let direct = match stabilizing_intervals_with(plant, &a.gain.0, a.tau_max, &cfg, DirectionMethod::Direct) {
        Ok((d, _)) => Some(d.stable_intervals == design.stable_intervals),
        Err(e) => {
            warnings.push(format!("direct method unavailable: {e}"));
            None
        }
    };
    if direct == Some(false) {
        warnings.push("direct method and root tendency disagree on the stable intervals".into());
    }
    let csv = interval_csv(&design.stable_intervals);
    Ok(Parts {
        config: json!({ "analysis": cfg, "tau_max": a.tau_max, "gain": a.gain.0 }),
        result: json!({ "design": design, "map": map, "direct_method_agrees": direct }),
        warnings,
        csv: Some(csv),
    })
}

fn placement_csv(d: &GainDesign) -> String {
    let header: Vec<String> = (1..=d.k.len()).map(|i| format!("k{i}")).chain(["residual".to_string()]).collect();
    let values: Vec<String> = d.k.iter().map(|k| k.to_string()).chain([d.residual.map_or(String::new(), |r| r.to_string())]).collect();
    format!("{}\n{}\n", header.join(","), values.join(","))
}

fn design_place(a: &DesignPlaceArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let plant = require_plant(loaded)?;
    let design = place_pole_pair(plant, a.tau, a.pole)?;
    Ok(Parts {
        config: json!({ "tau": a.tau, "pole": a.pole }),
        csv: Some(placement_csv(&design)),
        result: json!({ "design": design }),
        warnings: vec![],
    })
}

fn simulate(a: &SimulateArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let sys = target(loaded, &a.gain)?;
    let tau = resolve_tau(&sys, a.tau)?;
    let n = sys.dim();
    let value = match a.history.0.as_slice() {
        [v] => vec![*v; n],
        vs if vs.len() == n => vs.to_vec(),
        vs => return Err(CliError::Validation(format!("history has {} values, expected 1 or {n}", vs.len()))),
    };
    let history = HistoryFunction::constant(value);
    let traj = integrate(&sys, tau, &history, a.t_end, a.dt)?;
    let settled = settling_time(&traj, a.band, None)?;
    let mut warnings = vec![];
    if settled.is_none() {
        warnings.push(format!("state has not settled within the {} band by t = {}", a.band, a.t_end));
    }
    Ok(Parts {
        config: json!({
            "tau": tau,
            "t_end": a.t_end,
            "dt": traj.dt,
            "history": history,
            "band": a.band,
            "gain": a.gain.gain.as_ref().map(|k| &k.0),
        }),
        csv: Some(traj.to_csv()),
        result: json!({ "settling_time": settled, "final_state": traj.final_state(), "times": traj.times, "states": traj.states }),
        warnings,
    })
}

fn roots(a: &RootsArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let sys = target(loaded, &a.gain)?;
    let tau = resolve_tau(&sys, a.tau)?;
    let nodes = a.nodes.unwrap_or(AnalysisConfig::default().collocation_nodes);
    let set = rightmost_roots(&sys, tau, nodes)?;
    let mut csv = String::from("re,im\n");
    for s in &set.roots {
        let _ = writeln!(csv, "{},{}", s.re, s.im);
    }
    let mut warnings = vec![];
    if set.dropped > 0 {
        warnings.push(format!("{} collocation eigenvalues did not refine to roots", set.dropped));
    }
    Ok(Parts {
        config: json!({ "tau": tau, "nodes": nodes, "gain": a.gain.gain.as_ref().map(|k| &k.0) }),
        result: json!({ "roots": set.roots, "dropped": set.dropped, "unstable_count": set.unstable_count(1e-8) }),
        warnings,
        csv: Some(csv),
    })
}

fn check_controllable(a: &ControllableArgs, loaded: &LoadedSystem) -> CliResult<Parts> {
    let tol = tolerances(&a.tol)?;
    let controllable = match &loaded.plant {
        Some(p) => is_controllable(&p.a0, &p.a1, &p.b, &tol)?,
        None => {
            let sys = &loaded.system;
            let b = sys.input().ok_or_else(|| CliError::Validation("needs a `plant` block or an `input` block".into()))?;
            let delayed: Vec<_> = sys.terms().iter().filter(|t| !t.is_undelayed()).collect();
            let [a1] = delayed.as_slice() else {
                return Err(CliError::Validation("controllability needs exactly one delayed term".into()));
            };
            is_controllable(sys.undelayed(), &a1.matrix, b, &tol)?
        }
    };
    Ok(Parts { config: json!({ "tol": tol }), result: json!({ "controllable": controllable }), warnings: vec![], csv: None })
}

/// Loads the system file and runs one command.
pub fn run(cmd: &Command) -> CliResult<Outcome> {
    let io = io_of(cmd);
    if io.format == Format::Csv && !has_csv(cmd) {
        return Err(CliError::Usage(format!("`{}` has no CSV output; use --format json", name_of(cmd))));
    }
    let loaded = load_system(&io.system)?;
    let parts = match cmd {
        Command::Decompose(a) => decompose(a, &loaded),
        Command::Crossings(a) => crossings(a, &loaded),
        Command::Stability(a) => stability(a, &loaded),
        Command::DesignStabilize(a) => design_stabilize(a, &loaded),
        Command::DesignPlace(a) => design_place(a, &loaded),
        Command::Simulate(a) => simulate(a, &loaded),
        Command::Roots(a) => roots(a, &loaded),
        Command::CheckControllable(a) => check_controllable(a, &loaded),
    }?;
    let mut config = parts.config;
    if let Some(m) = config.as_object_mut() {
        m.insert("format".into(), to_value(&io.format));
    }
    Ok(Outcome {
        report: Report {
            schema: SCHEMA_VERSION,
            command: name_of(cmd).to_string(),
            input: json!({ "path": io.system.display().to_string(), "system": loaded.file }),
            config,
            result: parts.result,
            warnings: parts.warnings,
        },
        csv: parts.csv,
    })
}
