//! Parameter-sweep driver: one engine run per (swept value, serve mode)
//! cell, executed data-parallel when the `parallel` feature is on. Cells
//! share nothing, and output order follows spec order either way.

use crate::accounting::CostReport;
use crate::engine::{run_trace, EngineError, ServeMode};
use crate::model::{CostParams, ModelError, Trace};
use crate::trace::{generate_synthetic, SyntheticConfig, TraceError};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// rho = lambda / mu.
    Rho,
    Gamma,
    Alpha,
    Servers,
    Items,
    Requests,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Rho => "rho",
            SweepParam::Gamma => "gamma",
            SweepParam::Alpha => "alpha",
            SweepParam::Servers => "servers",
            SweepParam::Items => "items",
            SweepParam::Requests => "requests",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rho" => Some(SweepParam::Rho),
            "gamma" => Some(SweepParam::Gamma),
            "alpha" => Some(SweepParam::Alpha),
            "servers" => Some(SweepParam::Servers),
            "items" => Some(SweepParam::Items),
            "requests" => Some(SweepParam::Requests),
            _ => None,
        }
    }
}

/// Constraint hook tying mu and lambda together while rho is swept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// Keep mu fixed, set lambda = rho * mu.
    None,
    /// Enforce lambda + mu = sum (the paper's rho experiment uses sum 6).
    FixedSum(f64),
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub base_params: CostParams,
    pub generator: SyntheticConfig,
    pub coupling: Coupling,
    pub modes: Vec<ServeMode>,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: f64,
    pub mode: ServeMode,
    pub report: CostReport,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn cell_inputs(spec: &SweepSpec, value: f64) -> Result<(CostParams, SyntheticConfig), SweepError> {
    let mut generator = spec.generator.clone();
    let base = spec.base_params;
    let params = match spec.param {
        SweepParam::Rho => {
            if !value.is_finite() || value <= 0.0 {
                return Err(SweepError::InvalidSpec(format!("rho must be > 0, got {value}")));
            }
            match spec.coupling {
                Coupling::FixedSum(sum) => {
                    let mu = sum / (1.0 + value);
                    base.with_costs(mu, sum - mu)?
                }
                Coupling::None => base.with_costs(base.mu(), value * base.mu())?,
            }
        }
        SweepParam::Gamma => base.with_gamma(value)?,
        SweepParam::Alpha => base.with_alpha(value)?,
        SweepParam::Servers => {
            generator.m = integral(value, "servers")?;
            base
        }
        SweepParam::Items => {
            generator.k = integral(value, "items")?;
            base
        }
        SweepParam::Requests => {
            generator.n = integral(value, "requests")?;
            base
        }
    };
    Ok((params, generator))
}

fn integral(value: f64, what: &str) -> Result<usize, SweepError> {
    if value.fract() != 0.0 || value < 1.0 {
        return Err(SweepError::InvalidSpec(format!(
            "{what} must be a positive integer, got {value}"
        )));
    }
    Ok(value as usize)
}

fn run_cells(jobs: Vec<(f64, ServeMode, CostParams, Trace)>) -> Result<Vec<SweepCell>, SweepError> {
    let run = |(value, mode, params, trace): &(f64, ServeMode, CostParams, Trace)| {
        run_trace(trace, *params, *mode).map(|report| SweepCell {
            value: *value,
            mode: *mode,
            report,
        })
    };
    #[cfg(feature = "parallel")]
    let results: Result<Vec<_>, _> = jobs.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<_>, _> = jobs.iter().map(run).collect();
    Ok(results?)
}

fn build_jobs(spec: &SweepSpec) -> Result<Vec<(f64, ServeMode, CostParams, Trace)>, SweepError> {
    if spec.values.is_empty() {
        return Err(SweepError::InvalidSpec("no swept values".into()));
    }
    if spec.modes.is_empty() {
        return Err(SweepError::InvalidSpec("no modes".into()));
    }
    let mut jobs = Vec::new();
    for &value in &spec.values {
        let (params, generator) = cell_inputs(spec, value)?;
        let trace = generate_synthetic(&generator)?;
        for &mode in &spec.modes {
            jobs.push((value, mode, params, trace.clone()));
        }
    }
    Ok(jobs)
}

/// Runs every (value, mode) cell; parallel when the `parallel` feature is on.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>, SweepError> {
    run_cells(build_jobs(spec)?)
}

/// Always-sequential variant, kept for benchmarking the parallel speedup.
pub fn run_sweep_serial(spec: &SweepSpec) -> Result<Vec<SweepCell>, SweepError> {
    let jobs = build_jobs(spec)?;
    let mut cells = Vec::with_capacity(jobs.len());
    for (value, mode, params, trace) in &jobs {
        cells.push(SweepCell {
            value: *value,
            mode: *mode,
            report: run_trace(trace, *params, *mode)?,
        });
    }
    Ok(cells)
}

fn mode_name(mode: ServeMode) -> &'static str {
    match mode {
        ServeMode::Packed => "packed",
        ServeMode::Individual => "individual",
    }
}

/// Schema-stable CSV: fixed header, one row per (swept value, mode).
pub fn sweep_csv(spec: &SweepSpec, cells: &[SweepCell]) -> String {
    let mut out = format!("param,value,mode,seed,{}\n", CostReport::CSV_HEADER);
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            spec.param.name(),
            cell.value,
            mode_name(cell.mode),
            spec.generator.seed,
            cell.report.csv_row()
        ));
    }
    out
}

/// Minimal static line chart of avg transfer cost vs the swept value, one
/// polyline per mode.
pub fn sweep_plot_svg(spec: &SweepSpec, cells: &[SweepCell]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const MARGIN: f64 = 50.0;
    let xs: Vec<f64> = cells.iter().map(|c| c.value).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.report.avg_transfer()).collect();
    let (xmin, xmax) = bounds(&xs);
    let (ymin, ymax) = bounds(&ys);
    let sx = |x: f64| MARGIN + (x - xmin) / (xmax - xmin).max(1e-12) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - ymin) / (ymax - ymin).max(1e-12) * (H - 2.0 * MARGIN);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\">avg transfer cost vs {}</text>\n",
        W / 2.0,
        spec.param.name()
    );
    for (mode, color) in [(ServeMode::Packed, "#1f77b4"), (ServeMode::Individual, "#d62728")] {
        let pts: Vec<String> = cells
            .iter()
            .filter(|c| c.mode == mode)
            .map(|c| format!("{:.2},{:.2}", sx(c.value), sy(c.report.avg_transfer())))
            .collect();
        if !pts.is_empty() {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">packed</text>\n\
         <text x=\"{}\" y=\"{}\" fill=\"#d62728\">individual</text>\n</svg>\n",
        W - 150.0,
        MARGIN,
        W - 150.0,
        MARGIN + 18.0
    ));
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min.is_finite() {
        (min, max)
    } else {
        (0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            param: SweepParam::Alpha,
            values: vec![0.6, 0.8],
            base_params: CostParams::defaults(),
            generator: SyntheticConfig {
                k: 4,
                m: 5,
                n: 120,
                pair_fraction: 0.6,
                hot_pairs: vec![(0, 1, 0.5)],
                mean_gap: 1.0,
                seed: 11,
            },
            coupling: Coupling::None,
            modes: vec![ServeMode::Packed, ServeMode::Individual],
        }
    }

    #[test]
    fn parallel_and_serial_agree() {
        let s = spec();
        let a = run_sweep(&s).unwrap();
        let b = run_sweep_serial(&s).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value, y.value);
            assert_eq!(x.mode, y.mode);
            assert_eq!(x.report, y.report);
        }
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let s = spec();
        let cells = run_sweep(&s).unwrap();
        let csv = sweep_csv(&s, &cells);
        assert_eq!(csv.lines().count(), 1 + cells.len());
        assert!(csv.starts_with("param,value,mode,seed,n_requests,"));
    }

    #[test]
    fn rho_coupling_keeps_fixed_sum() {
        let mut s = spec();
        s.param = SweepParam::Rho;
        s.values = vec![0.5, 2.0];
        s.coupling = Coupling::FixedSum(6.0);
        for &v in &s.values {
            let (p, _) = cell_inputs(&s, v).unwrap();
            assert!((p.lambda() + p.mu() - 6.0).abs() < 1e-12);
            assert!((p.lambda() / p.mu() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_values() {
        let mut s = spec();
        s.values.clear();
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn plot_is_valid_svg_shell() {
        let s = spec();
        let cells = run_sweep(&s).unwrap();
        let svg = sweep_plot_svg(&s, &cells);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
