//! Exact `P=? [ F "error" ]` by weighted enumeration of the input space.
//!
//! The composed model is a tree of deterministic paths hanging off one
//! probabilistic branching point, so the reachability probability of the
//! error state is the sum of the probabilities of the input vectors whose
//! path ends there. The input space is split into contiguous chunks that
//! are evaluated independently and merged by exact addition.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use super::automaton::{ClosedFormEngine, LayerEngine, SimulatorEngine, TpuFaAutomaton};
use super::chain::Probability;
use super::compose::{compose_model, ModelStatistics};
use super::input::{InputDistribution, IntegerWeights};
use crate::error::{Error, Result};
use crate::faultmodel::FaultDescriptor;
use crate::network::{ActivationVector, NetworkConfig, WeightMatrix};

/// Largest number of input bits (`N * activation_bits`) that will be
/// enumerated.
pub const ENUMERATION_LIMIT_BITS: u32 = 24;

/// Which implementation computes the faulty accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Closed-form fault effects on top of the reference network.
    ClosedForm,
    /// Cycle-accurate simulation of both accelerators.
    Simulator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub engine: Engine,
    /// Threads used for enumeration; 0 and 1 both mean the calling
    /// thread only.
    pub workers: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            engine: Engine::ClosedForm,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisResult {
    pub p_error: Probability,
    /// Input vectors with non-zero probability that end in the error state.
    pub error_count: u128,
    /// Size of the input space, `v^N`.
    pub total_count: u128,
    /// Number of input vectors whose activations first diverged after
    /// layer `l`; only layers with at least one such vector appear.
    pub first_divergence: BTreeMap<usize, u128>,
    pub statistics: ModelStatistics,
    pub elapsed: Duration,
}

impl AnalysisResult {
    pub fn p_error_f64(&self) -> f64 {
        let numer = self.p_error.numer().to_f64().unwrap_or(f64::NAN);
        let denom = self.p_error.denom().to_f64().unwrap_or(f64::NAN);
        numer / denom
    }

    /// `p/q` in lowest terms; `0` and `1` print as integers.
    pub fn p_error_exact(&self) -> String {
        self.p_error.to_string()
    }
}

#[derive(Debug, Default)]
struct Partial {
    errors: u128,
    weight: BigUint,
    divergence: BTreeMap<usize, u128>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.errors += other.errors;
        self.weight += other.weight;
        for (layer, count) in other.divergence {
            *self.divergence.entry(layer).or_default() += count;
        }
        self
    }
}

pub(crate) fn check_enumeration_guard(cfg: &NetworkConfig) -> Result<()> {
    let bits = cfg.neurons as u32 * cfg.widths.activation as u32;
    if bits > ENUMERATION_LIMIT_BITS {
        return Err(Error::Guard {
            what: "exhaustive input enumeration",
            required: 1u128 << bits.min(127),
            limit: 1u128 << ENUMERATION_LIMIT_BITS,
        });
    }
    Ok(())
}

/// Exact error probability through the closed-form fault model.
pub fn probability_of_error(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, inputs: &InputDistribution) -> Result<AnalysisResult> {
    analyze(cfg, w, fault, inputs, AnalysisOptions::default())
}

/// Exact error probability through the cycle-accurate simulator.
pub fn brute_force_probability(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, inputs: &InputDistribution) -> Result<Probability> {
    let opts = AnalysisOptions {
        engine: Engine::Simulator,
        workers: 1,
    };
    Ok(analyze(cfg, w, fault, inputs, opts)?.p_error)
}

/// Full analysis with an explicit engine and worker count.
pub fn analyze(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, inputs: &InputDistribution, opts: AnalysisOptions) -> Result<AnalysisResult> {
    let start = Instant::now();
    let model = compose_model(cfg, w, fault, inputs)?;
    check_enumeration_guard(cfg)?;
    let statistics = model.statistics();

    let levels = cfg.widths.activation_levels();
    let total = levels.pow(cfg.neurons as u32);
    let uniform = inputs.is_uniform();
    let weights = (!uniform).then(|| inputs.integer_weights());

    let workers = opts.workers.max(1).min(total as usize);
    let chunk = total.div_ceil(workers as u64);
    let ranges: Vec<(u64, u64)> = (0..workers as u64)
        .map(|k| (k * chunk, ((k + 1) * chunk).min(total)))
        .filter(|(lo, hi)| lo < hi)
        .collect();

    let run = |lo: u64, hi: u64| -> Result<Partial> {
        match opts.engine {
            Engine::ClosedForm => {
                let engine = ClosedFormEngine::new(cfg, w, fault)?;
                Ok(enumerate(cfg, engine, lo, hi, levels, weights.as_ref()))
            }
            Engine::Simulator => {
                let engine = SimulatorEngine::new(cfg, w, fault)?;
                Ok(enumerate(cfg, engine, lo, hi, levels, weights.as_ref()))
            }
        }
    };

    let partial = if ranges.len() <= 1 {
        run(0, total)?
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|&(lo, hi)| scope.spawn(move || run(lo, hi)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("enumeration worker panicked"))
                .try_fold(Partial::default(), |acc, p| Ok::<_, Error>(acc.merge(p?)))
        })?
    };

    let p_error = match &weights {
        None => Probability::new(BigInt::from(partial.errors), BigInt::from(total)),
        Some(iw) => Probability::new(BigInt::from(partial.weight), BigInt::from(iw.denominator.clone())),
    };
    Ok(AnalysisResult {
        p_error,
        error_count: partial.errors,
        total_count: total as u128,
        first_divergence: partial.divergence,
        statistics,
        elapsed: start.elapsed(),
    })
}

fn enumerate<E: LayerEngine>(cfg: &NetworkConfig, engine: E, lo: u64, hi: u64, levels: u64, weights: Option<&IntegerWeights>) -> Partial {
    let mut fa = TpuFaAutomaton::new(cfg, engine);
    let mut partial = Partial::default();
    let mut x = ActivationVector::from_index(lo, cfg.neurons, levels).into_inner();
    for i in lo..hi {
        if i > lo {
            increment(&mut x, levels as u32);
        }
        let weight = weights.map(|iw| iw.weight(&x));
        if weight.as_ref().is_some_and(Zero::is_zero) {
            continue;
        }
        let outcome = fa.run(&x);
        if let Some(layer) = outcome.first_divergence {
            *partial.divergence.entry(layer).or_default() += 1;
        }
        if outcome.error {
            partial.errors += 1;
            if let Some(wt) = weight {
                partial.weight += wt;
            }
        }
    }
    partial
}

/// Next vector in lexicographic order, last neuron fastest.
#[inline]
fn increment(x: &mut [u32], levels: u32) {
    for slot in x.iter_mut().rev() {
        *slot += 1;
        if *slot < levels {
            return;
        }
        *slot = 0;
    }
}
