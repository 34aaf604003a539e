//! Randomized cross-check of the closed-form and simulator engines.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::parallel_map;
use super::weights::generate_weights;
use crate::dtmc::{analyze, AnalysisOptions, Engine, InputDistribution, Probability};
use crate::error::Result;
use crate::faultmodel::{FaultDescriptor, FaultSite};
use crate::fixedpoint::{QuantizationStrategy, StuckValue};
use crate::network::{NetworkConfig, WeightMatrix};

/// One randomized configuration on a 4x4 array with default widths.
#[derive(Debug, Clone)]
pub struct Case {
    pub network: NetworkConfig,
    pub weights: WeightMatrix,
    pub fault: FaultDescriptor,
}

/// Draws `count` cases from a SplitMix64 stream.
pub fn random_cases(count: usize, seed: u64) -> Vec<Case> {
    let mut rng = SplitMix64::from_seed(seed.to_le_bytes());
    let mut pick = |n: u64| rng.next_u64() % n;
    (0..count)
        .map(|_| {
            let neurons = 1 + pick(4) as usize;
            let layers = 1 + pick(5) as usize;
            let quantization = [QuantizationStrategy::KeepHigh, QuantizationStrategy::KeepLow, QuantizationStrategy::Saturate][pick(3) as usize];
            let network = NetworkConfig::new(4, 4, layers, neurons)
                .expect("valid shape")
                .with_quantization(quantization)
                .with_signed(pick(2) == 1);
            let site = FaultSite::ALL[pick(3) as usize];
            let stuck = if pick(2) == 1 { StuckValue::One } else { StuckValue::Zero };
            let bit = pick(site.width(&network) as u64) as u8;
            let row = 1 + pick(4) as usize;
            let col = 1 + pick(4) as usize;
            let weights = generate_weights(pick(u64::MAX), neurons, network.widths);
            Case {
                network,
                weights,
                fault: FaultDescriptor::new(site, bit, stuck, row, col),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub case: usize,
    pub fault: FaultDescriptor,
    pub closed_form: Probability,
    pub simulator: Probability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfcheckSummary {
    pub cases: usize,
    /// Cases with a non-zero error probability.
    pub nonzero: usize,
    pub mismatches: Vec<Mismatch>,
}

/// Exact error probability of every case through both engines.
pub fn selfcheck(count: usize, seed: u64, workers: usize) -> Result<SelfcheckSummary> {
    let cases = random_cases(count, seed);
    let results = parallel_map(&cases, workers, |c| {
        let dist = InputDistribution::uniform(c.network.neurons, c.network.widths.activation);
        let run = |engine| {
            let opts = AnalysisOptions { engine, workers: 1 };
            analyze(&c.network, &c.weights, Some(&c.fault), &dist, opts).map(|r| r.p_error)
        };
        Ok((run(Engine::ClosedForm)?, run(Engine::Simulator)?))
    })?;
    let mut summary = SelfcheckSummary {
        cases: count,
        nonzero: 0,
        mismatches: Vec::new(),
    };
    for (i, (case, (closed_form, simulator))) in cases.iter().zip(results).enumerate() {
        if closed_form != Probability::default() {
            summary.nonzero += 1;
        }
        if closed_form != simulator {
            summary.mismatches.push(Mismatch {
                case: i,
                fault: case.fault,
                closed_form,
                simulator,
            });
        }
    }
    Ok(summary)
}
