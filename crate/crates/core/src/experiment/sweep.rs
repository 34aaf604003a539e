//! Parameter sweeps and their CSV form.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::Duration;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

use super::config::{ExperimentConfig, InputSource, WeightSource};
use super::parallel_map;
use crate::dtmc::{analyze, AnalysisOptions, Probability};
use crate::error::{Error, Result};
use crate::faultmodel::{FaultDescriptor, FaultSite};
use crate::fixedpoint::StuckValue;
use crate::network::WeightMatrix;

/// Version of the CSV layout written by [`to_csv`].
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    /// Weight-register faults over bit positions; layers and stuck values
    /// default to the configured values and both polarities.
    Bits,
    /// Any site over layer counts, 1 to 5 unless configured.
    Layers,
    /// Stuck-at-1 multiplier or accumulator faults over every row of one
    /// column and every bit of the register.
    Row,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Bits => "sweep-bits",
            SweepKind::Layers => "sweep-layers",
            SweepKind::Row => "sweep-row",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coordinates of one sweep job. Ordering is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SweepPoint {
    pub site: FaultSite,
    pub stuck: StuckValue,
    pub bit: u8,
    pub row: usize,
    pub col: usize,
    pub layers: usize,
    /// `None` when weights come from a file.
    pub seed: Option<u64>,
}

impl SweepPoint {
    pub fn fault(&self) -> FaultDescriptor {
        FaultDescriptor::new(self.site, self.bit, self.stuck, self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub p_error: Probability,
    pub error_count: u128,
    pub total_count: u128,
    pub runtime: Duration,
}

/// All sweep coordinates in sorted order.
pub fn sweep_points(cfg: &ExperimentConfig, kind: SweepKind) -> Result<Vec<SweepPoint>> {
    let net = &cfg.network;
    let site = cfg
        .fault
        .site
        .ok_or_else(|| Error::Config(format!("{kind} needs a fault site")))?;
    match kind {
        SweepKind::Bits if site != FaultSite::WeightRegister => {
            return Err(Error::Config(format!("{kind} sweeps weight-register faults, not {site} faults")))
        }
        SweepKind::Row if site == FaultSite::WeightRegister => {
            return Err(Error::Config(format!("{kind} sweeps multiplier or accumulator faults, not {site} faults")))
        }
        _ => {}
    }
    let width = site.width(net);
    let stuck = cfg.fault.stuck.clone().unwrap_or_else(|| match kind {
        SweepKind::Row => vec![StuckValue::One],
        _ => vec![StuckValue::Zero, StuckValue::One],
    });
    let bits = cfg.fault.bit.clone().unwrap_or_else(|| (0..width).collect());
    let rows = cfg.fault.row.clone().unwrap_or_else(|| match kind {
        SweepKind::Row => (1..=net.rows).collect(),
        _ => vec![net.rows],
    });
    let cols = cfg.fault.col.clone().unwrap_or_else(|| vec![1]);
    let layers = match kind {
        SweepKind::Layers => cfg.layers.clone().unwrap_or_else(|| (1..=5).collect()),
        _ => cfg.layer_axis(),
    };
    let seeds: Vec<Option<u64>> = match &cfg.weights {
        WeightSource::Seeds(s) => s.iter().copied().map(Some).collect(),
        WeightSource::File(_) => vec![None],
    };

    let mut points = Vec::new();
    for &st in &stuck {
        for &bit in &bits {
            for &row in &rows {
                for &col in &cols {
                    for &l in &layers {
                        for &seed in &seeds {
                            let p = SweepPoint {
                                site,
                                stuck: st,
                                bit,
                                row,
                                col,
                                layers: l,
                                seed,
                            };
                            p.fault().validate(net)?;
                            points.push(p);
                        }
                    }
                }
            }
        }
    }
    points.sort();
    Ok(points)
}

/// Runs every sweep point; rows come back in sorted coordinate order
/// whatever the worker count.
pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind) -> Result<Vec<SweepRow>> {
    let points = sweep_points(cfg, kind)?;
    let dist = cfg.input_distribution()?;
    let mut matrices: BTreeMap<Option<u64>, WeightMatrix> = BTreeMap::new();
    for p in &points {
        if !matrices.contains_key(&p.seed) {
            matrices.insert(p.seed, cfg.weight_matrix(p.seed)?);
        }
    }
    let workers = cfg.output.workers;
    // a lone point parallelizes over inputs instead
    let inner = if points.len() == 1 { workers } else { 1 };
    parallel_map(&points, workers, |p| {
        let net = cfg.network.with_layers(p.layers);
        let opts = AnalysisOptions {
            workers: inner,
            ..AnalysisOptions::default()
        };
        let r = analyze(&net, &matrices[&p.seed], Some(&p.fault()), &dist, opts)?;
        Ok(SweepRow {
            point: *p,
            p_error: r.p_error,
            error_count: r.error_count,
            total_count: r.total_count,
            runtime: r.elapsed,
        })
    })
}

pub fn sweep_bit_position(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    run_sweep(cfg, SweepKind::Bits)
}

pub fn sweep_layers(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    run_sweep(cfg, SweepKind::Layers)
}

pub fn sweep_mac_row(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    run_sweep(cfg, SweepKind::Row)
}

/// `p` rounded half-up to six decimals; `p` must be non-negative.
pub fn decimal6(p: &Probability) -> String {
    debug_assert!(!p.is_negative());
    let scaled = p.numer() * BigInt::from(2_000_000) + p.denom();
    let micros = scaled.div_floor(&(p.denom() * BigInt::from(2)));
    let (int, frac) = micros.div_rem(&BigInt::from(1_000_000));
    format!("{int}.{frac:0>6}")
}

/// CSV text: two comment lines, a header and one line per row.
pub fn to_csv(cfg: &ExperimentConfig, kind: SweepKind, rows: &[SweepRow]) -> String {
    let net = &cfg.network;
    let w = net.widths;
    let mut s = String::new();
    writeln!(s, "# tpu-fault {kind} csv v{CSV_VERSION}").unwrap();
    writeln!(
        s,
        "# rows={} cols={} neurons={} widths={}/{}/{}/{} quantization={} signed={} weights={} inputs={}",
        net.rows,
        net.cols,
        net.neurons,
        w.weight,
        w.activation,
        w.multiplier,
        w.accumulator,
        net.quantization,
        net.signed,
        match cfg.weights {
            WeightSource::Seeds(_) => "seeded",
            WeightSource::File(_) => "file",
        },
        match cfg.inputs {
            InputSource::Uniform => "uniform",
            InputSource::File(_) => "file",
        },
    )
    .unwrap();
    s.push_str("site,stuck,bit,row,col,layers,seed,p_error,p_error_exact,error_count,total_count");
    if cfg.output.runtime {
        s.push_str(",runtime_ms");
    }
    s.push('\n');
    for r in rows {
        let p = &r.point;
        let seed = p.seed.map(|v| v.to_string()).unwrap_or_default();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.site,
            p.stuck.as_bit(),
            p.bit,
            p.row,
            p.col,
            p.layers,
            seed,
            decimal6(&r.p_error),
            r.p_error,
            r.error_count,
            r.total_count
        )
        .unwrap();
        if cfg.output.runtime {
            write!(s, ",{:.3}", r.runtime.as_secs_f64() * 1e3).unwrap();
        }
        s.push('\n');
    }
    s
}
