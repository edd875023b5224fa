//! Parameter sweeps: flat key-value config ingestion, parallel grid
//! evaluation against any of the three engines, and CSV/JSON emission.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::WgmError;
use crate::lindblad::solve_observables;
use crate::meanfield::{nonlinear_steady_state, transmission, MeanFieldState};
use crate::model::{effective_spectrum, LossConvention, ModelParams};
use crate::weakdrive::{g2_weak, solve_amplitudes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Engine {
    MeanField,
    Lindblad,
    WeakDrive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Observable {
    T,
    G2,
    G3,
    NC,
    NA,
    G2Weak,
    Eigenvalues,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::T => "T",
            Observable::G2 => "g2",
            Observable::G3 => "g3",
            Observable::NC => "n_C",
            Observable::NA => "n_A",
            Observable::G2Weak => "g2_weak",
            Observable::Eigenvalues => "eigenvalues",
        }
    }

    pub fn parse(s: &str) -> Result<Self, WgmError> {
        match s {
            "T" => Ok(Observable::T),
            "g2" => Ok(Observable::G2),
            "g3" => Ok(Observable::G3),
            "n_C" => Ok(Observable::NC),
            "n_A" => Ok(Observable::NA),
            "g2_weak" => Ok(Observable::G2Weak),
            "eigenvalues" => Ok(Observable::Eigenvalues),
            other => Err(WgmError::InvalidSweep(format!("unknown observable {other:?}"))),
        }
    }

    /// CSV columns this observable expands to (complex values split).
    pub fn columns(self) -> Vec<String> {
        match self {
            Observable::Eigenvalues => vec![
                "eigenvalues_0_re".into(),
                "eigenvalues_0_im".into(),
                "eigenvalues_1_re".into(),
                "eigenvalues_1_im".into(),
            ],
            other => vec![other.name().to_string()],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            return self.start;
        }
        self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Truncation {
    pub n_start: usize,
    pub n_cap: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { n_start: 4, n_cap: 20 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub base: ModelParams,
    pub axes: Vec<Axis>,
    pub observables: Vec<Observable>,
    pub engine: Engine,
    pub truncation: Truncation,
}

const SWEEPABLE: &[&str] = &["beta", "delta", "kerr", "drive", "gamma_ex", "gamma_in"];

fn set_field(p: &mut ModelParams, name: &str, v: f64) {
    match name {
        "beta" => p.beta = v,
        "delta" => p.delta = v,
        "kerr" => p.kerr = v,
        "drive" => p.drive = v,
        "gamma_ex" => p.gamma_ex = v,
        "gamma_in" => p.gamma_in = v,
        _ => unreachable!("validated axis name"),
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), WgmError> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(WgmError::InvalidSweep(format!(
                "need 1 or 2 axes, got {}",
                self.axes.len()
            )));
        }
        for ax in &self.axes {
            if !SWEEPABLE.contains(&ax.name.as_str()) {
                return Err(WgmError::InvalidSweep(format!(
                    "cannot sweep {:?}; valid axes: {}",
                    ax.name,
                    SWEEPABLE.join(", ")
                )));
            }
            if ax.count < 2 {
                return Err(WgmError::InvalidSweep(format!(
                    "axis {:?} needs count >= 2, got {}",
                    ax.name, ax.count
                )));
            }
            if !ax.start.is_finite() || !ax.stop.is_finite() {
                return Err(WgmError::InvalidSweep(format!("axis {:?} has non-finite bounds", ax.name)));
            }
        }
        let supported: &[Observable] = match self.engine {
            Engine::MeanField => &[
                Observable::T,
                Observable::NC,
                Observable::NA,
                Observable::Eigenvalues,
            ],
            Engine::Lindblad => &[
                Observable::T,
                Observable::G2,
                Observable::G3,
                Observable::NC,
                Observable::NA,
            ],
            Engine::WeakDrive => &[Observable::G2Weak, Observable::Eigenvalues],
        };
        for obs in &self.observables {
            if !supported.contains(obs) {
                return Err(WgmError::InvalidSweep(format!(
                    "engine {:?} cannot compute {:?}",
                    self.engine,
                    obs.name()
                )));
            }
        }
        if self.truncation.n_start < 2 || self.truncation.n_start > self.truncation.n_cap {
            return Err(WgmError::InvalidSweep("bad truncation ladder".into()));
        }
        Ok(())
    }

    /// Observable columns sorted alphabetically (the CSV contract).
    pub fn sorted_observables(&self) -> Vec<Observable> {
        let mut obs = self.observables.clone();
        obs.sort_by_key(|o| o.name());
        obs.dedup();
        obs
    }

    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    fn params_at(&self, idx: &[usize]) -> ModelParams {
        let mut p = self.base;
        for (ax, &i) in self.axes.iter().zip(idx) {
            set_field(&mut p, &ax.name, ax.value(i));
        }
        p
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    /// One entry per sorted observable; complex observables carry
    /// multiple numbers. NaN marks per-point failure.
    pub values: Vec<f64>,
    pub n_levels_used: usize,
    pub converged: bool,
    pub branches: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failed_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.error.is_some()).count() as f64 / self.rows.len() as f64
    }
}

struct PointOutcome {
    values: Vec<f64>,
    n_levels_used: usize,
    converged: bool,
    branches: usize,
}

fn eval_point(
    spec: &SweepSpec,
    p: &ModelParams,
    obs: &[Observable],
    continuation: &[MeanFieldState],
) -> Result<(PointOutcome, Vec<MeanFieldState>), WgmError> {
    match spec.engine {
        Engine::MeanField => {
            let roots = nonlinear_steady_state(p, continuation)?;
            let st = &roots[0];
            let mut values = Vec::new();
            for o in obs {
                match o {
                    Observable::T => values.push(transmission(p, st)?),
                    Observable::NC => values.push(st.alpha_c.norm_sqr()),
                    Observable::NA => values.push(st.alpha_a.norm_sqr()),
                    Observable::Eigenvalues => push_eigenvalues(p, &mut values),
                    _ => unreachable!("validated observables"),
                }
            }
            let branches = roots.len();
            Ok((
                PointOutcome { values, n_levels_used: 0, converged: true, branches },
                roots,
            ))
        }
        Engine::Lindblad => {
            let so = solve_observables(p, spec.truncation.n_start, spec.truncation.n_cap)?;
            let mut values = Vec::new();
            for o in obs {
                match o {
                    Observable::T => values.push(lindblad_transmission(p, spec)?),
                    Observable::G2 => values.push(so.g2_c),
                    Observable::G3 => values.push(so.g3_c),
                    Observable::NC => values.push(so.n_c),
                    Observable::NA => values.push(so.n_a),
                    _ => unreachable!("validated observables"),
                }
            }
            Ok((
                PointOutcome {
                    values,
                    n_levels_used: so.n_levels_used,
                    converged: so.converged,
                    branches: 1,
                },
                Vec::new(),
            ))
        }
        Engine::WeakDrive => {
            let amps = solve_amplitudes(p)?;
            let mut values = Vec::new();
            for o in obs {
                match o {
                    Observable::G2Weak => values.push(g2_weak(&amps)?),
                    Observable::Eigenvalues => push_eigenvalues(p, &mut values),
                    _ => unreachable!("validated observables"),
                }
            }
            Ok((
                PointOutcome { values, n_levels_used: 0, converged: true, branches: 1 },
                Vec::new(),
            ))
        }
    }
}

fn push_eigenvalues(p: &ModelParams, values: &mut Vec<f64>) {
    let spec = effective_spectrum(p);
    for ev in spec.eigenvalues {
        values.push(ev.re);
        values.push(ev.im);
    }
}

/// Transmission from the quantum steady state, T = |1 - (gamma_ex/F)<a_C>|^2,
/// on the same truncation ladder as the other Lindblad observables.
fn lindblad_transmission(p: &ModelParams, spec: &SweepSpec) -> Result<f64, WgmError> {
    if p.drive == 0.0 {
        return Err(WgmError::ZeroDrive);
    }
    let t_at = |n: usize| -> Result<f64, WgmError> {
        let superop = crate::lindblad::build_liouvillian(p, n)?;
        let rho = crate::lindblad::steady_state(&superop)?;
        let (a_c, _) = crate::lindblad::mode_operators(n)?;
        let amp = crate::fock::expect(&rho, &a_c)?;
        Ok((C64::new(1.0, 0.0) - p.gamma_ex / p.drive * amp).norm_sqr())
    };
    let mut prev = t_at(spec.truncation.n_start)?;
    let mut n = spec.truncation.n_start + 4;
    while n <= spec.truncation.n_cap {
        let cur = t_at(n)?;
        if (cur - prev).abs() <= 1e-3 * prev.abs().max(1e-12) {
            return Ok(cur);
        }
        prev = cur;
        n += 4;
    }
    Ok(prev)
}

fn nan_row(spec: &SweepSpec, obs: &[Observable]) -> Vec<f64> {
    let width: usize = obs.iter().map(|o| o.columns().len()).sum();
    let _ = spec;
    vec![f64::NAN; width]
}

/// Evaluate every grid point. Rows come back in grid order (first axis
/// slowest) regardless of scheduling. MeanField sweeps walk the first axis
/// serially with root continuation; everything else is embarrassingly
/// parallel over the flat grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, WgmError> {
    spec.validate()?;
    let obs = spec.sorted_observables();
    let n0 = spec.axes[0].count;
    let n1 = spec.axes.get(1).map_or(1, |a| a.count);

    let make_row = |idx: &[usize], outcome: Result<PointOutcome, WgmError>| -> SweepRow {
        let axis_values = spec
            .axes
            .iter()
            .zip(idx)
            .map(|(ax, &i)| ax.value(i))
            .collect();
        match outcome {
            Ok(o) => SweepRow {
                axis_values,
                values: o.values,
                n_levels_used: o.n_levels_used,
                converged: o.converged,
                branches: o.branches,
                error: None,
            },
            Err(e) => SweepRow {
                axis_values,
                values: nan_row(spec, &obs),
                n_levels_used: 0,
                converged: false,
                branches: 0,
                error: Some(e.to_string()),
            },
        }
    };

    let rows: Vec<SweepRow> = if spec.engine == Engine::MeanField {
        // continuation along axis 0, parallel across axis 1
        let columns: Vec<Vec<SweepRow>> = (0..n1)
            .into_par_iter()
            .map(|i1| {
                let mut carried: Vec<MeanFieldState> = Vec::new();
                let mut col = Vec::with_capacity(n0);
                for i0 in 0..n0 {
                    let idx = [i0, i1];
                    let p = spec.params_at(&idx[..spec.axes.len()]);
                    let outcome = eval_point(spec, &p, &obs, &carried).map(|(o, roots)| {
                        carried = roots;
                        o
                    });
                    col.push(make_row(&idx[..spec.axes.len()], outcome));
                }
                col
            })
            .collect();
        let mut rows = Vec::with_capacity(n0 * n1);
        for i0 in 0..n0 {
            for column in columns.iter().take(n1) {
                rows.push(column[i0].clone());
            }
        }
        rows
    } else {
        (0..n0 * n1)
            .into_par_iter()
            .map(|flat| {
                let idx = [flat / n1, flat % n1];
                let p = spec.params_at(&idx[..spec.axes.len()]);
                let outcome = eval_point(spec, &p, &obs, &[]).map(|(o, _)| o);
                make_row(&idx[..spec.axes.len()], outcome)
            })
            .collect()
    };

    Ok(SweepResult { spec: spec.clone(), rows })
}

pub fn csv_header(spec: &SweepSpec) -> String {
    let mut cols: Vec<String> = spec.axes.iter().map(|a| a.name.clone()).collect();
    for o in spec.sorted_observables() {
        cols.extend(o.columns());
    }
    cols.push("n_levels_used".into());
    cols.push("converged".into());
    cols.join(",")
}

pub fn to_csv(result: &SweepResult) -> String {
    let mut out = csv_header(&result.spec);
    out.push('\n');
    if result.spec.sorted_observables().is_empty() {
        return out;
    }
    for row in &result.rows {
        let mut cells: Vec<String> = row.axis_values.iter().map(|v| format!("{v}")).collect();
        cells.extend(row.values.iter().map(|v| format!("{v}")));
        cells.push(format!("{}", row.n_levels_used));
        cells.push(format!("{}", row.converged));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(result: &SweepResult) -> String {
    serde_json::to_string_pretty(result).expect("sweep result serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<(), WgmError> {
    let text = match format {
        OutputFormat::Csv => to_csv(result),
        OutputFormat::Json => to_json(result),
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Flat dotted-key config: one `key = value` per line, `#` comments.
/// Complex parameters are split into `_re`/`_im` keys
/// (e.g. `base.eps1_re = 1.5`); axes use `axes.0.name = delta` etc.
pub fn parse_config(text: &str) -> Result<SweepSpec, WgmError> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| WgmError::ConfigParse(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().to_string();
        if kv.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(WgmError::ConfigParse(format!("duplicate key {key:?}")));
        }
    }
    spec_from_map(&kv)
}

fn spec_from_map(kv: &BTreeMap<String, String>) -> Result<SweepSpec, WgmError> {
    let parse_f64 = |key: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| WgmError::ConfigParse(format!("{key}: not a number: {v:?}")))
    };
    let parse_usize = |key: &str, v: &str| {
        v.parse::<usize>()
            .map_err(|_| WgmError::ConfigParse(format!("{key}: not an integer: {v:?}")))
    };

    let convention = match kv.get("base.loss_convention").map(String::as_str) {
        None | Some("include_ex") => LossConvention::IncludeExternal,
        Some("paper_literal") => LossConvention::PaperLiteral,
        Some(other) => {
            return Err(WgmError::ConfigParse(format!(
                "base.loss_convention: expected include_ex or paper_literal, got {other:?}"
            )))
        }
    };
    let mut base = ModelParams::figure2(0.0, 0.0, convention);
    let mut axes: Vec<Axis> = Vec::new();
    let mut observables = Vec::new();
    let mut engine = None;
    let mut truncation = Truncation::default();

    for (key, value) in kv {
        match key.as_str() {
            "base.loss_convention" => {}
            "base.eps1_re" => base.eps1.re = parse_f64(key, value)?,
            "base.eps1_im" => base.eps1.im = parse_f64(key, value)?,
            "base.eps2_re" => base.eps2.re = parse_f64(key, value)?,
            "base.eps2_im" => base.eps2.im = parse_f64(key, value)?,
            "base.m" => base.m = parse_usize(key, value)? as u32,
            "base.beta" => base.beta = parse_f64(key, value)?,
            "base.kerr" => base.kerr = parse_f64(key, value)?,
            "base.drive" => base.drive = parse_f64(key, value)?,
            "base.delta" => base.delta = parse_f64(key, value)?,
            "base.gamma_in" => base.gamma_in = parse_f64(key, value)?,
            "base.gamma_ex" => base.gamma_ex = parse_f64(key, value)?,
            "engine" => {
                engine = Some(match value.as_str() {
                    "meanfield" => Engine::MeanField,
                    "lindblad" => Engine::Lindblad,
                    "weakdrive" => Engine::WeakDrive,
                    other => {
                        return Err(WgmError::ConfigParse(format!(
                            "engine: expected meanfield, lindblad or weakdrive, got {other:?}"
                        )))
                    }
                });
            }
            "observables" => {
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    observables.push(Observable::parse(name)?);
                }
            }
            "truncation.n_start" => truncation.n_start = parse_usize(key, value)?,
            "truncation.n_cap" => truncation.n_cap = parse_usize(key, value)?,
            other if other.starts_with("axes.") => {} // handled below
            other => {
                return Err(WgmError::ConfigParse(format!("unknown key {other:?}")));
            }
        }
    }

    for i in 0.. {
        let name_key = format!("axes.{i}.name");
        let Some(name) = kv.get(&name_key) else { break };
        let get = |field: &str| -> Result<f64, WgmError> {
            let key = format!("axes.{i}.{field}");
            let v = kv
                .get(&key)
                .ok_or_else(|| WgmError::ConfigParse(format!("missing {key}")))?;
            parse_f64(&key, v)
        };
        axes.push(Axis {
            name: name.clone(),
            start: get("start")?,
            stop: get("stop")?,
            count: {
                let key = format!("axes.{i}.count");
                let v = kv
                    .get(&key)
                    .ok_or_else(|| WgmError::ConfigParse(format!("missing {key}")))?;
                parse_usize(&key, v)?
            },
        });
    }
    for key in kv.keys() {
        if key.starts_with("axes.") {
            let idx: usize = key
                .split('.')
                .nth(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| WgmError::ConfigParse(format!("bad axis key {key:?}")))?;
            if idx >= axes.len() {
                return Err(WgmError::ConfigParse(format!(
                    "axis key {key:?} without axes.{idx}.name"
                )));
            }
        }
    }

    let engine = engine.ok_or_else(|| WgmError::ConfigParse("missing engine".into()))?;
    let spec = SweepSpec { base, axes, observables, engine, truncation };
    spec.validate()?;
    Ok(spec)
}
