//! Single-point commands: analysis report, trace and model export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::Zero;

use super::config::{ExperimentConfig, InputSource, WeightSource};
use super::sweep::decimal6;
use crate::dtmc::{analyze, export_model, write_model, AnalysisOptions, AnalysisResult, ClosedFormEngine, InputDistribution, TpuFaAutomaton};
use crate::error::{Error, Result};
use crate::faultmodel::FaultDescriptor;
use crate::network::{ActivationVector, NetworkConfig, WeightMatrix};
use crate::systolic::{render_trace, simulate_layer};

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub network: NetworkConfig,
    pub fault: Option<FaultDescriptor>,
    pub weights: WeightMatrix,
    pub seed: Option<u64>,
    pub result: AnalysisResult,
    /// First input vector, in enumeration order, that ends in the error
    /// state.
    pub diverging_input: Option<Vec<u32>>,
    /// First-layer trace of `diverging_input`, when requested.
    pub trace: Option<String>,
}

struct Point {
    network: NetworkConfig,
    fault: Option<FaultDescriptor>,
    seed: Option<u64>,
    weights: WeightMatrix,
    inputs: InputDistribution,
}

fn single_point(cfg: &ExperimentConfig) -> Result<Point> {
    let seed = cfg.single_seed()?;
    Ok(Point {
        network: cfg.single_network()?,
        fault: cfg.single_fault()?,
        seed,
        weights: cfg.weight_matrix(seed)?,
        inputs: cfg.input_distribution()?,
    })
}

/// First input with non-zero probability whose run ends in the error
/// state.
pub fn first_diverging_input(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, inputs: &InputDistribution) -> Result<Option<Vec<u32>>> {
    let Some(fault) = fault else {
        return Ok(None);
    };
    crate::dtmc::analysis::check_enumeration_guard(cfg)?;
    let mut fa = TpuFaAutomaton::new(cfg, ClosedFormEngine::new(cfg, w, Some(fault))?);
    let levels = cfg.widths.activation_levels();
    for i in 0..levels.pow(cfg.neurons as u32) {
        let x = ActivationVector::from_index(i, cfg.neurons, levels);
        if inputs.probability(&x).is_zero() {
            continue;
        }
        if fa.run(x.as_slice()).error {
            return Ok(Some(x.into_inner()));
        }
    }
    Ok(None)
}

pub fn analyze_single(cfg: &ExperimentConfig, with_trace: bool) -> Result<AnalysisReport> {
    let p = single_point(cfg)?;
    let opts = AnalysisOptions {
        workers: cfg.output.workers,
        ..AnalysisOptions::default()
    };
    let result = analyze(&p.network, &p.weights, p.fault.as_ref(), &p.inputs, opts)?;
    let diverging_input = if result.error_count > 0 {
        first_diverging_input(&p.network, &p.weights, p.fault.as_ref(), &p.inputs)?
    } else {
        None
    };
    let trace = match (&diverging_input, with_trace) {
        (Some(x), true) => Some(trace_text(&p.network, &p.weights, p.fault.as_ref(), x)?),
        _ => None,
    };
    Ok(AnalysisReport {
        network: p.network,
        fault: p.fault,
        weights: p.weights,
        seed: p.seed,
        result,
        diverging_input,
        trace,
    })
}

fn join(values: &[u32]) -> String {
    values.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

impl AnalysisReport {
    /// Plain-text report; wall-clock time only with `runtime`.
    pub fn render(&self, runtime: bool) -> String {
        let net = &self.network;
        let w = net.widths;
        let r = &self.result;
        let mut s = String::new();
        writeln!(s, "network: rows={} cols={} neurons={} layers={}", net.rows, net.cols, net.neurons, net.layers).unwrap();
        writeln!(
            s,
            "widths: weight={} activation={} multiplier={} accumulator={}",
            w.weight, w.activation, w.multiplier, w.accumulator
        )
        .unwrap();
        writeln!(s, "quantization: {} signed={}", net.quantization, net.signed).unwrap();
        match &self.fault {
            Some(f) => writeln!(s, "fault: {f}").unwrap(),
            None => writeln!(s, "fault: none").unwrap(),
        }
        match self.seed {
            Some(seed) => writeln!(s, "weights: seed {seed}: {}", join(self.weights.row_major())).unwrap(),
            None => writeln!(s, "weights: {}", join(self.weights.row_major())).unwrap(),
        }
        writeln!(s, "p_error: {} ({})", r.p_error, decimal6(&r.p_error)).unwrap();
        writeln!(s, "error_inputs: {} of {}", r.error_count, r.total_count).unwrap();
        writeln!(s, "first_divergence:").unwrap();
        if r.first_divergence.is_empty() {
            writeln!(s, "  none").unwrap();
        }
        for (layer, count) in &r.first_divergence {
            writeln!(s, "  layer {layer}: {count}").unwrap();
        }
        writeln!(
            s,
            "model: states={} transitions={} inputs={}",
            r.statistics.states, r.statistics.transitions, r.statistics.inputs
        )
        .unwrap();
        if runtime {
            writeln!(s, "verification_ms: {:.3}", r.elapsed.as_secs_f64() * 1e3).unwrap();
        }
        if let Some(x) = &self.diverging_input {
            writeln!(s, "diverging_input: {}", join(x)).unwrap();
        }
        if let Some(t) = &self.trace {
            s.push('\n');
            s.push_str(t);
        }
        s
    }
}

fn trace_text(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, x: &[u32]) -> Result<String> {
    let x = ActivationVector::new(x.to_vec(), cfg.widths.activation)?;
    let (out, trace) = simulate_layer(&x, w, fault, cfg)?;
    Ok(format!("# input: {}\n# output: {}\n{}", join(x.as_slice()), join(out.as_slice()), render_trace(&trace)))
}

/// First-layer trace of `input`, or of the first diverging input (all
/// zeros when nothing diverges).
pub fn simulate_trace(cfg: &ExperimentConfig, input: Option<&[u32]>) -> Result<String> {
    let p = single_point(cfg)?;
    let x = match input {
        Some(x) => {
            if x.len() != p.network.neurons {
                return Err(Error::Config(format!(
                    "input has {} values but the network has {} neurons",
                    x.len(),
                    p.network.neurons
                )));
            }
            x.to_vec()
        }
        None => first_diverging_input(&p.network, &p.weights, p.fault.as_ref(), &p.inputs)?
            .unwrap_or_else(|| vec![0; p.network.neurons]),
    };
    trace_text(&p.network, &p.weights, p.fault.as_ref(), &x)
}

/// Writes `<stem>.pm` and `<stem>.pctl` for the configured point.
pub fn export(cfg: &ExperimentConfig, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let p = single_point(cfg)?;
    let model = export_model(&p.network, &p.weights, p.fault.as_ref(), &p.inputs)?;
    write_model(&model, dir, stem)
}

/// One-line description of the weight and input sources.
pub fn describe_sources(cfg: &ExperimentConfig) -> String {
    let weights = match &cfg.weights {
        WeightSource::Seeds(s) => format!("seeds {}", s.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        WeightSource::File(p) => format!("file {}", p.display()),
    };
    let inputs = match &cfg.inputs {
        InputSource::Uniform => "uniform".to_string(),
        InputSource::File(p) => format!("file {}", p.display()),
    };
    format!("weights: {weights}; inputs: {inputs}")
}
