//! Cycle-accurate weight-stationary systolic array with stuck-at fault
//! injection.
//!
//! Schedule for one layer of `N` neurons on an `R x C` array, cycles
//! `t = 1 ..= 2N + 1`:
//!
//! * MAC rows with relative row `rr = r - R + N >= 1` hold weight row
//!   `rr`; every other MAC holds weight 0.
//! * Activation `x_rr` enters column 1 of its row at cycle `rr` and moves
//!   one column to the right per cycle, so it is multiplied by MAC
//!   `(rr, c)` at cycle `rr + c - 1`.
//! * Every MAC computes `acc = above + x * w` on every cycle (all MACs
//!   share the clock) and emits `acc` downwards; the MAC below sees it one
//!   cycle later. Idle MACs therefore emit 0 unless a stuck-at-1 bit in
//!   their multiplier or accumulator forces something else.
//! * The bottom accumulator of each column adds whatever the bottom row
//!   emitted on the previous cycle. An emission made at cycle `t` by a
//!   MAC with inverse row `r_inv` lands at cycle `t + r_inv`; only
//!   landings up to cycle `2N + 1` count.

use std::fmt::Write as _;

use crate::error::Result;
use crate::faultmodel::{FaultDescriptor, FaultSite};
use crate::fixedpoint::mask;
use crate::network::{check_network, ActivationVector, NetworkConfig, WeightMatrix};

/// Registers of one MAC unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MacState {
    pub weight: u32,
    /// Activation register; `None` when no activation is present.
    pub activation: Option<u32>,
    pub product: u32,
    pub acc: u32,
}

/// Why a MAC emitted what it did on a given cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmitTag {
    /// Emitted 0 without processing an activation.
    Idle,
    /// Processed its activation this cycle.
    Active,
    /// Passed on a non-zero value from above while idle.
    Relay,
    /// Faulty MAC emitted a non-zero value while idle and it reaches the
    /// bottom accumulator in time.
    Leak,
    /// As [`EmitTag::Leak`], but it lands after the window closes.
    Spill,
}

impl EmitTag {
    pub fn name(self) -> &'static str {
        match self {
            EmitTag::Idle => "-",
            EmitTag::Active => "active",
            EmitTag::Relay => "relay",
            EmitTag::Leak => "leak",
            EmitTag::Spill => "spill",
        }
    }
}

/// One MAC on one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub cycle: usize,
    /// Physical row, 1-based.
    pub row: usize,
    /// Physical column, 1-based.
    pub col: usize,
    pub activation: Option<u32>,
    pub product: u32,
    pub emitted: u32,
    pub tag: EmitTag,
}

/// Full record of one simulated layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub rows: usize,
    pub cols: usize,
    pub neurons: usize,
    pub fault: Option<FaultDescriptor>,
    /// Ordered by cycle, then row, then column.
    pub entries: Vec<TraceEntry>,
    /// Bottom accumulator of every column at the end of each cycle.
    pub bottom: Vec<Vec<u32>>,
}

impl Trace {
    pub fn cycles(&self) -> usize {
        self.bottom.len()
    }

    pub fn count(&self, tag: EmitTag) -> usize {
        self.entries.iter().filter(|e| e.tag == tag).count()
    }

    /// Emissions of the MAC at `(row, col)` with the given tag.
    pub fn count_at(&self, row: usize, col: usize, tag: EmitTag) -> usize {
        self.entries
            .iter()
            .filter(|e| e.row == row && e.col == col && e.tag == tag)
            .count()
    }

    /// Leaked emissions that reached a bottom accumulator.
    pub fn leak_count(&self) -> usize {
        self.count(EmitTag::Leak)
    }
}

/// A loaded array ready to run layers of one network, with at most one
/// fault. Buffers are reused between layers.
#[derive(Debug, Clone)]
pub struct SystolicArray {
    cfg: NetworkConfig,
    fault: Option<FaultDescriptor>,
    grid: Vec<MacState>,
    bottom: Vec<u32>,
    /// Columns simulated on the fast path; columns past `N` never reach
    /// an output.
    fast_cols: usize,
}

impl SystolicArray {
    pub fn new(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>) -> Result<Self> {
        check_network(&ActivationVector::zeros(cfg.neurons), w, cfg)?;
        if let Some(f) = fault {
            f.validate(cfg)?;
        }
        let (rows, cols, n) = (cfg.rows, cfg.cols, cfg.neurons);
        let mut grid = vec![MacState::default(); rows * cols];
        for r in 0..rows {
            let rr = r as i64 - rows as i64 + n as i64;
            for c in 0..cols {
                let mut weight = if rr >= 0 && c < n { w.get(rr as usize, c) } else { 0 };
                if let Some(f) = fault {
                    if f.site == FaultSite::WeightRegister && f.row == r + 1 && f.col == c + 1 {
                        weight = f.stuck.force(weight);
                    }
                }
                grid[r * cols + c].weight = weight;
            }
        }
        Ok(SystolicArray {
            cfg: *cfg,
            fault: fault.copied(),
            grid,
            bottom: vec![0; cols],
            fast_cols: n.min(cols),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    /// Runs one layer and writes the bottom accumulator of each output
    /// column to `out`, before the activation function.
    pub fn accumulate(&mut self, x: &[u32], out: &mut [u32]) {
        self.run(x, self.fast_cols, |_| {});
        out.copy_from_slice(&self.bottom[..out.len()]);
    }

    /// Runs one layer and writes the activated, quantized column results
    /// to `out`.
    pub fn layer(&mut self, x: &[u32], out: &mut [u32]) {
        self.run(x, self.fast_cols, |_| {});
        for (slot, &acc) in out.iter_mut().zip(&self.bottom) {
            *slot = self.cfg.activate(acc);
        }
    }

    /// Runs `cfg.layers` layers.
    pub fn network(&mut self, x: &[u32]) -> Vec<u32> {
        let mut cur = x.to_vec();
        let mut next = vec![0; cur.len()];
        for _ in 0..self.cfg.layers {
            self.layer(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Runs one layer over every column and records the trace.
    pub fn traced_layer(&mut self, x: &[u32]) -> (Vec<u32>, Trace) {
        let cols = self.cfg.cols;
        let mut entries = Vec::with_capacity(self.cfg.rows * cols * (2 * self.cfg.neurons + 1));
        let mut bottom = Vec::new();
        self.run(x, cols, |event| match event {
            Event::Mac(entry) => entries.push(entry),
            Event::CycleEnd(values) => bottom.push(values.to_vec()),
        });
        // entries are produced bottom-up, right-to-left within a cycle
        entries.sort_by_key(|e| (e.cycle, e.row, e.col));
        let out = (0..self.cfg.neurons).map(|c| self.cfg.activate(self.bottom[c])).collect();
        let trace = Trace {
            rows: self.cfg.rows,
            cols,
            neurons: self.cfg.neurons,
            fault: self.fault,
            entries,
            bottom,
        };
        (out, trace)
    }

    fn run<F: FnMut(Event<'_>)>(&mut self, x: &[u32], cols: usize, mut sink: F) {
        let NetworkConfig { rows, neurons: n, widths, .. } = self.cfg;
        let stride = self.cfg.cols;
        let mult_mask = mask(widths.multiplier);
        let acc_mask = mask(widths.accumulator);
        let window = 2 * n + 1;
        let fault = self.fault;
        let fault_idx = fault.map(|f| (f.row - 1) * stride + (f.col - 1));

        for mac in &mut self.grid {
            mac.activation = None;
            mac.product = 0;
            mac.acc = 0;
        }
        self.bottom.iter_mut().for_each(|b| *b = 0);

        for t in 1..=window {
            // bottom accumulators take last cycle's emissions of the bottom row
            for c in 0..cols {
                let emitted = self.grid[(rows - 1) * stride + c].acc as u64;
                self.bottom[c] = ((self.bottom[c] as u64 + emitted) & acc_mask) as u32;
            }
            // bottom-up and right-to-left so neighbours still hold last cycle's values
            for r in (0..rows).rev() {
                let rr = r as i64 + 1 - rows as i64 + n as i64;
                for c in (0..cols).rev() {
                    let idx = r * stride + c;
                    let activation = if c == 0 {
                        (rr >= 1 && t as i64 == rr).then(|| x[(rr - 1) as usize])
                    } else {
                        self.grid[idx - 1].activation
                    };
                    let above = if r == 0 { 0 } else { self.grid[idx - stride].acc as u64 };
                    let mac = &mut self.grid[idx];
                    let mut product = ((activation.unwrap_or(0) as u64 * mac.weight as u64) & mult_mask) as u32;
                    let faulty = fault_idx == Some(idx);
                    if faulty {
                        let f = fault.unwrap();
                        if f.site == FaultSite::Multiplier {
                            product = f.stuck.force(product);
                        }
                    }
                    let mut acc = ((above + product as u64) & acc_mask) as u32;
                    if faulty {
                        let f = fault.unwrap();
                        if f.site == FaultSite::Accumulator {
                            acc = f.stuck.force(acc);
                        }
                    }
                    mac.activation = activation;
                    mac.product = product;
                    mac.acc = acc;

                    let active = activation.is_some() && c < n;
                    let tag = if active {
                        EmitTag::Active
                    } else if acc == 0 {
                        EmitTag::Idle
                    } else if faulty {
                        let r_inv = rows - r;
                        if t + r_inv <= window {
                            EmitTag::Leak
                        } else {
                            EmitTag::Spill
                        }
                    } else {
                        EmitTag::Relay
                    };
                    sink(Event::Mac(TraceEntry {
                        cycle: t,
                        row: r + 1,
                        col: c + 1,
                        activation,
                        product,
                        emitted: acc,
                        tag,
                    }));
                }
            }
            sink(Event::CycleEnd(&self.bottom[..cols]));
        }
    }
}

enum Event<'a> {
    Mac(TraceEntry),
    CycleEnd(&'a [u32]),
}

/// Simulates one layer, returning its activations and the full trace.
pub fn simulate_layer(x: &ActivationVector, w: &WeightMatrix, fault: Option<&FaultDescriptor>, cfg: &NetworkConfig) -> Result<(ActivationVector, Trace)> {
    check_network(x, w, cfg)?;
    let mut array = SystolicArray::new(cfg, w, fault)?;
    let (out, trace) = array.traced_layer(x.as_slice());
    Ok((ActivationVector::from_raw(out), trace))
}

/// Simulates all `cfg.layers` layers with the fault present throughout.
pub fn simulate_network(x: &ActivationVector, w: &WeightMatrix, fault: Option<&FaultDescriptor>, cfg: &NetworkConfig) -> Result<ActivationVector> {
    check_network(x, w, cfg)?;
    let mut array = SystolicArray::new(cfg, w, fault)?;
    Ok(ActivationVector::from_raw(array.network(x.as_slice())))
}

/// Plain-text table of a trace, one line per MAC and cycle followed by the
/// bottom accumulators.
pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# systolic trace rows={} cols={} neurons={} cycles={}",
        trace.rows,
        trace.cols,
        trace.neurons,
        trace.cycles()
    );
    match &trace.fault {
        Some(f) => {
            let _ = writeln!(out, "# fault: {f}");
        }
        None => out.push_str("# fault: none\n"),
    }
    out.push_str("cycle row col activation product emitted tag\n");
    let mut entries = trace.entries.iter().peekable();
    for (idx, bottom) in trace.bottom.iter().enumerate() {
        let cycle = idx + 1;
        while let Some(e) = entries.next_if(|e| e.cycle == cycle) {
            let act = e.activation.map_or_else(|| "-".to_string(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                e.cycle,
                e.row,
                e.col,
                act,
                e.product,
                e.emitted,
                e.tag.name()
            );
        }
        let sums: Vec<String> = bottom.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{cycle} bottom {}", sums.join(" "));
    }
    out
}
