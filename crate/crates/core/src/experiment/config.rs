//! Experiment configuration files.
//!
//! ```toml
//! [network]
//! rows = 4
//! cols = 4
//! neurons = 4
//! layers = [1, 2, 3]      # a single value or a list
//! weight_bits = 4
//! activation_bits = 4
//! multiplier_bits = 8
//! accumulator_bits = 10
//! quantization = "keep-high"
//! signed = false
//!
//! [fault]
//! site = "weight"         # weight, multiplier, accumulator or none
//! stuck = 1
//! bit = [0, 1, 2, 3]
//! row = 4
//! col = 1
//!
//! [weights]
//! seed = [0, 1, 2]        # or: file = "weights.txt"
//!
//! [inputs]
//! distribution = "uniform"  # or: file = "inputs.txt"
//!
//! [output]
//! path = "out.csv"
//! workers = 1
//! runtime = false
//! ```
//!
//! Every key is optional. Relative paths are resolved against the
//! directory of the configuration file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dtmc::InputDistribution;
use crate::error::{Error, Result};
use crate::faultmodel::{FaultDescriptor, FaultSite};
use crate::fixedpoint::{BitWidths, QuantizationStrategy, StuckValue};
use crate::network::{NetworkConfig, WeightMatrix};

use super::weights::generate_weights;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum Axis {
    One(i64),
    Many(Vec<i64>),
}

impl Axis {
    fn values(&self) -> Vec<i64> {
        match self {
            Axis::One(v) => vec![*v],
            Axis::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    fault: RawFault,
    #[serde(default)]
    weights: RawWeights,
    #[serde(default)]
    inputs: RawInputs,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    rows: Option<i64>,
    cols: Option<i64>,
    neurons: Option<i64>,
    layers: Option<Axis>,
    weight_bits: Option<i64>,
    activation_bits: Option<i64>,
    multiplier_bits: Option<i64>,
    accumulator_bits: Option<i64>,
    quantization: Option<String>,
    signed: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFault {
    site: Option<String>,
    stuck: Option<Axis>,
    bit: Option<Axis>,
    row: Option<Axis>,
    col: Option<Axis>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    seed: Option<Axis>,
    file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInputs {
    distribution: Option<String>,
    file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    workers: Option<i64>,
    runtime: Option<bool>,
}

/// Command-line values that replace the corresponding configuration keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rows: Option<i64>,
    pub cols: Option<i64>,
    pub neurons: Option<i64>,
    pub layers: Option<Vec<i64>>,
    pub weight_bits: Option<i64>,
    pub activation_bits: Option<i64>,
    pub multiplier_bits: Option<i64>,
    pub accumulator_bits: Option<i64>,
    pub quantization: Option<String>,
    pub signed: Option<bool>,
    pub site: Option<String>,
    pub stuck: Option<Vec<i64>>,
    pub bit: Option<Vec<i64>>,
    pub row: Option<Vec<i64>>,
    pub col: Option<Vec<i64>>,
    pub seed: Option<Vec<i64>>,
    pub weights_file: Option<PathBuf>,
    pub inputs_file: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub workers: Option<i64>,
    pub runtime: Option<bool>,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) {
        fn set<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        fn set_axis(slot: &mut Option<Axis>, value: &Option<Vec<i64>>) {
            if let Some(v) = value {
                *slot = Some(Axis::Many(v.clone()));
            }
        }
        let n = &mut raw.network;
        set(&mut n.rows, &self.rows);
        set(&mut n.cols, &self.cols);
        set(&mut n.neurons, &self.neurons);
        set_axis(&mut n.layers, &self.layers);
        set(&mut n.weight_bits, &self.weight_bits);
        set(&mut n.activation_bits, &self.activation_bits);
        set(&mut n.multiplier_bits, &self.multiplier_bits);
        set(&mut n.accumulator_bits, &self.accumulator_bits);
        set(&mut n.quantization, &self.quantization);
        set(&mut n.signed, &self.signed);
        let f = &mut raw.fault;
        set(&mut f.site, &self.site);
        set_axis(&mut f.stuck, &self.stuck);
        set_axis(&mut f.bit, &self.bit);
        set_axis(&mut f.row, &self.row);
        set_axis(&mut f.col, &self.col);
        if self.seed.is_some() {
            set_axis(&mut raw.weights.seed, &self.seed);
            raw.weights.file = None;
        }
        if self.weights_file.is_some() {
            set(&mut raw.weights.file, &self.weights_file);
            raw.weights.seed = None;
        }
        if self.inputs_file.is_some() {
            set(&mut raw.inputs.file, &self.inputs_file);
            raw.inputs.distribution = None;
        }
        set(&mut raw.output.path, &self.output);
        set(&mut raw.output.workers, &self.workers);
        set(&mut raw.output.runtime, &self.runtime);
    }
}

/// Where weight matrices come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightSource {
    Seeds(Vec<u64>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    Uniform,
    File(PathBuf),
}

/// Fault coordinates; `None` on an axis means "not given", which each
/// command fills with its own default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultAxes {
    /// `None` runs the fault-free control.
    pub site: Option<FaultSite>,
    pub stuck: Option<Vec<StuckValue>>,
    pub bit: Option<Vec<u8>>,
    pub row: Option<Vec<usize>>,
    pub col: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputOptions {
    pub path: Option<PathBuf>,
    pub workers: usize,
    /// Adds wall-clock columns, which makes output non-reproducible.
    pub runtime: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    /// Network with `layers` set to the first entry of [`Self::layers`].
    pub network: NetworkConfig,
    pub layers: Option<Vec<usize>>,
    pub fault: FaultAxes,
    pub weights: WeightSource,
    pub inputs: InputSource,
    pub output: OutputOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

/// Parses configuration text with no overrides.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(text, "<config>", &Overrides::default(), None)
}

impl ExperimentConfig {
    pub fn parse(text: &str, source_name: &str, overrides: &Overrides, base_dir: Option<&Path>) -> Result<Self> {
        let mut raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            Error::Parse {
                source_name: source_name.to_string(),
                line,
                message: e.message().to_string(),
            }
        })?;
        overrides.apply(&mut raw);
        let mut cfg = validate(raw)?;
        if let Some(dir) = base_dir {
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            if let WeightSource::File(p) = &mut cfg.weights {
                resolve(p);
            }
            if let InputSource::File(p) = &mut cfg.inputs {
                resolve(p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), overrides, path.parent())
    }

    /// Layer axis, `[network.layers]` when none was given.
    pub fn layer_axis(&self) -> Vec<usize> {
        self.layers.clone().unwrap_or_else(|| vec![self.network.layers])
    }

    /// The single fault a non-sweeping command analyzes. Unset axes default
    /// to stuck-at-1, bit 0, bottom row, first column.
    pub fn single_fault(&self) -> Result<Option<FaultDescriptor>> {
        let Some(site) = self.fault.site else {
            return Ok(None);
        };
        fn one<T: Copy>(axis: &Option<Vec<T>>, default: T, name: &str) -> Result<T> {
            match axis.as_deref() {
                None => Ok(default),
                Some([v]) => Ok(*v),
                Some(v) => Err(Error::Config(format!(
                    "fault.{name} lists {} values but this command needs exactly one",
                    v.len()
                ))),
            }
        }
        let stuck = one(&self.fault.stuck, StuckValue::One, "stuck")?;
        let bit = one(&self.fault.bit, 0, "bit")?;
        let row = one(&self.fault.row, self.network.rows, "row")?;
        let col = one(&self.fault.col, 1, "col")?;
        Ok(Some(FaultDescriptor::new(site, bit, stuck, row, col)))
    }

    /// Network for a single-point command; rejects layer lists.
    pub fn single_network(&self) -> Result<NetworkConfig> {
        match self.layers.as_deref() {
            None | Some([_]) => Ok(self.network),
            Some(v) => Err(Error::Config(format!(
                "network.layers lists {} values but this command needs exactly one",
                v.len()
            ))),
        }
    }

    /// Seed of a single-point command; `None` for a weight file.
    pub fn single_seed(&self) -> Result<Option<u64>> {
        match &self.weights {
            WeightSource::File(_) => Ok(None),
            WeightSource::Seeds(s) if s.len() == 1 => Ok(Some(s[0])),
            WeightSource::Seeds(s) => Err(Error::Config(format!(
                "weights.seed lists {} values but this command needs exactly one",
                s.len()
            ))),
        }
    }

    /// Weight matrix for one seed (ignored for a weight file).
    pub fn weight_matrix(&self, seed: Option<u64>) -> Result<WeightMatrix> {
        let n = self.network.neurons;
        match (&self.weights, seed) {
            (WeightSource::File(path), _) => {
                let w = WeightMatrix::load(path, self.network.widths.weight)?;
                if w.size() != n {
                    return Err(Error::Config(format!(
                        "{}: weight matrix is {}x{} but the network has {n} neurons",
                        path.display(),
                        w.size(),
                        w.size()
                    )));
                }
                Ok(w)
            }
            (WeightSource::Seeds(_), Some(seed)) => Ok(generate_weights(seed, n, self.network.widths)),
            (WeightSource::Seeds(_), None) => Err(Error::Config("no weight seed given".into())),
        }
    }

    pub fn input_distribution(&self) -> Result<InputDistribution> {
        let n = self.network.neurons;
        let bits = self.network.widths.activation;
        match &self.inputs {
            InputSource::Uniform => Ok(InputDistribution::uniform(n, bits)),
            InputSource::File(path) => InputDistribution::load(path, n, bits),
        }
    }
}

fn field<T: TryFrom<i64>>(name: &str, value: i64, lo: i64, hi: i64) -> Result<T> {
    if value < lo || value > hi {
        return Err(Error::out_of_range(name, value, format!("{lo}..={hi}")));
    }
    T::try_from(value).map_err(|_| Error::out_of_range(name, value, format!("{lo}..={hi}")))
}

fn axis<T: TryFrom<i64>>(name: &str, values: &Option<Axis>, lo: i64, hi: i64) -> Result<Option<Vec<T>>> {
    let Some(values) = values else {
        return Ok(None);
    };
    let values = values.values();
    let mut seen = BTreeSet::new();
    for &v in &values {
        if !seen.insert(v) {
            return Err(Error::Config(format!("{name} lists {v} more than once")));
        }
    }
    values
        .into_iter()
        .map(|v| field(name, v, lo, hi))
        .collect::<Result<Vec<T>>>()
        .map(Some)
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig> {
    let defaults = NetworkConfig::default();
    let dw = defaults.widths;
    let n = &raw.network;
    let width = |name: &str, v: Option<i64>, d: u8| -> Result<u8> {
        v.map_or(Ok(d), |v| field(name, v, 1, crate::fixedpoint::MAX_WIDTH as i64))
    };
    let widths = BitWidths::new(
        width("network.weight_bits", n.weight_bits, dw.weight)?,
        width("network.activation_bits", n.activation_bits, dw.activation)?,
        width("network.multiplier_bits", n.multiplier_bits, dw.multiplier)?,
        width("network.accumulator_bits", n.accumulator_bits, dw.accumulator)?,
    )?;
    let rows: usize = n.rows.map_or(Ok(defaults.rows), |v| field("network.rows", v, 1, 64))?;
    let cols: usize = n.cols.map_or(Ok(defaults.cols), |v| field("network.cols", v, 1, 64))?;
    let neurons: usize = n
        .neurons
        .map_or(Ok(rows.min(cols)), |v| field("network.neurons", v, 1, rows.min(cols) as i64))?;
    let layers: Option<Vec<usize>> = axis("network.layers", &n.layers, 1, 64)?;
    let quantization = match &n.quantization {
        Some(q) => q.parse::<QuantizationStrategy>()?,
        None => QuantizationStrategy::default(),
    };
    let first_layer = layers.as_ref().and_then(|l| l.first().copied()).unwrap_or(1);
    let network = NetworkConfig::new(rows, cols, first_layer, neurons)?
        .with_widths(widths)
        .with_quantization(quantization)
        .with_signed(n.signed.unwrap_or(false));

    let f = &raw.fault;
    let site = match f.site.as_deref() {
        None => Some(FaultSite::WeightRegister),
        Some("none") => None,
        Some(s) => Some(s.parse::<FaultSite>()?),
    };
    let site_width = site.map_or(widths.accumulator.max(widths.multiplier).max(widths.weight), |s| s.width(&network));
    let stuck = axis::<u8>("fault.stuck", &f.stuck, 0, 1)?
        .map(|v| v.into_iter().map(StuckValue::from_bit).collect::<Result<Vec<_>>>())
        .transpose()?;
    let fault = FaultAxes {
        site,
        stuck,
        bit: axis("fault.bit", &f.bit, 0, site_width as i64 - 1)?,
        row: axis("fault.row", &f.row, 1, rows as i64)?,
        col: axis("fault.col", &f.col, 1, cols as i64)?,
    };

    let weights = match (&raw.weights.seed, &raw.weights.file) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("weights.seed and weights.file are mutually exclusive".into()))
        }
        (None, Some(path)) => WeightSource::File(path.clone()),
        (seed, None) => {
            let seeds: Option<Vec<u64>> = axis("weights.seed", seed, 0, i64::MAX)?;
            WeightSource::Seeds(seeds.unwrap_or_else(|| vec![0]))
        }
    };
    let inputs = match (raw.inputs.distribution.as_deref(), &raw.inputs.file) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("inputs.distribution and inputs.file are mutually exclusive".into()))
        }
        (None | Some("uniform"), None) => InputSource::Uniform,
        (Some(other), None) => {
            return Err(Error::Config(format!(
                "inputs.distribution = {other:?} is not supported (expected \"uniform\" or an inputs.file)"
            )))
        }
        (None, Some(path)) => InputSource::File(path.clone()),
    };
    let output = OutputOptions {
        path: raw.output.path.clone(),
        workers: raw.output.workers.map_or(Ok(1), |v| field("output.workers", v, 1, 1024))?,
        runtime: raw.output.runtime.unwrap_or(false),
    };
    Ok(ExperimentConfig {
        network,
        layers,
        fault,
        weights,
        inputs,
        output,
    })
}
