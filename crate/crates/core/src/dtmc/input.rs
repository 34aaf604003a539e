//! Per-neuron input distributions and the input-selection chain.

use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::chain::{Dtmc, Probability};
use crate::error::{Error, Result};
use crate::network::ActivationVector;

pub const NOT_SELECTED: &str = "not_selected";
pub const SELECTED: &str = "selected";

/// Independent distributions over the `2^b` values of each first-layer
/// input neuron.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDistribution {
    levels: u64,
    neurons: Vec<Vec<Probability>>,
}

impl InputDistribution {
    /// Every value of every neuron equally likely.
    pub fn uniform(neurons: usize, activation_bits: u8) -> Self {
        let levels = 1u64 << activation_bits;
        let p = Probability::new(BigInt::one(), BigInt::from(levels));
        InputDistribution {
            levels,
            neurons: vec![vec![p; levels as usize]; neurons],
        }
    }

    pub fn new(neurons: Vec<Vec<Probability>>, activation_bits: u8) -> Result<Self> {
        let levels = 1u64 << activation_bits;
        if neurons.is_empty() {
            return Err(Error::Config("input distribution has no neurons".into()));
        }
        for (i, probs) in neurons.iter().enumerate() {
            if probs.len() as u64 != levels {
                return Err(Error::Config(format!(
                    "neuron {} has {} probabilities, expected {levels}",
                    i + 1,
                    probs.len()
                )));
            }
            if probs.iter().any(Signed::is_negative) {
                return Err(Error::Config(format!("neuron {} has a negative probability", i + 1)));
            }
            let total: Probability = probs.iter().cloned().sum();
            if !total.is_one() {
                return Err(Error::Config(format!(
                    "probabilities of neuron {} sum to {total}, not 1",
                    i + 1
                )));
            }
        }
        Ok(InputDistribution { levels, neurons })
    }

    /// All mass on a single input vector.
    pub fn point(x: &ActivationVector, activation_bits: u8) -> Result<Self> {
        let levels = 1u64 << activation_bits;
        let neurons = x
            .as_slice()
            .iter()
            .map(|&v| {
                (0..levels)
                    .map(|z| if z == v as u64 { Probability::one() } else { Probability::zero() })
                    .collect()
            })
            .collect();
        Self::new(neurons, activation_bits)
    }

    /// Text format: one line per neuron with `2^b` probabilities written as
    /// integers, decimals or `p/q` fractions. A single line applies to every
    /// neuron. `#` starts a comment.
    pub fn parse(text: &str, neurons: usize, activation_bits: u8, source_name: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let row = body
                .split_whitespace()
                .map(|tok| {
                    parse_probability(tok).ok_or_else(|| Error::Parse {
                        source_name: source_name.to_string(),
                        line: idx + 1,
                        message: format!("{tok:?} is not a probability"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((idx + 1, row));
        }
        let rows: Vec<(usize, Vec<Probability>)> = match rows.len() {
            1 => vec![rows[0].clone(); neurons],
            n if n == neurons => rows,
            n => {
                return Err(Error::Config(format!(
                    "{source_name}: expected 1 or {neurons} distribution lines, found {n}"
                )))
            }
        };
        for (line, row) in &rows {
            let single = InputDistribution::new(vec![row.clone()], activation_bits);
            if let Err(e) = single {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: *line,
                    message: e.to_string(),
                });
            }
        }
        Self::new(rows.into_iter().map(|(_, r)| r).collect(), activation_bits)
    }

    pub fn load(path: &Path, neurons: usize, activation_bits: u8) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, neurons, activation_bits, &path.display().to_string())
    }

    pub fn levels(&self) -> u64 {
        self.levels
    }

    pub fn neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn neuron(&self, i: usize) -> &[Probability] {
        &self.neurons[i]
    }

    pub fn is_uniform(&self) -> bool {
        let p = Probability::new(BigInt::one(), BigInt::from(self.levels));
        self.neurons.iter().flatten().all(|q| *q == p)
    }

    /// Probability of drawing exactly `x`.
    pub fn probability(&self, x: &ActivationVector) -> Probability {
        x.as_slice()
            .iter()
            .zip(&self.neurons)
            .map(|(&v, probs)| probs[v as usize].clone())
            .product()
    }

    /// Number of input vectors with non-zero probability.
    pub fn support_size(&self) -> u128 {
        self.neurons
            .iter()
            .map(|probs| probs.iter().filter(|p| !p.is_zero()).count() as u128)
            .product()
    }

    /// Integer form used during enumeration: the probability of `x` is
    /// `prod(numerators[i][x_i]) / denominator`.
    pub fn integer_weights(&self) -> IntegerWeights {
        let mut numerators = Vec::with_capacity(self.neurons.len());
        let mut denominator = BigUint::one();
        for probs in &self.neurons {
            let lcm = probs
                .iter()
                .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
            let row = probs
                .iter()
                .map(|p| (p.numer() * (&lcm / p.denom())).to_biguint().expect("non-negative"))
                .collect();
            numerators.push(row);
            denominator *= lcm.to_biguint().expect("positive");
        }
        IntegerWeights {
            numerators,
            denominator,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegerWeights {
    pub numerators: Vec<Vec<BigUint>>,
    pub denominator: BigUint,
}

impl IntegerWeights {
    pub fn weight(&self, x: &[u32]) -> BigUint {
        x.iter()
            .zip(&self.numerators)
            .map(|(&v, row)| &row[v as usize])
            .fold(BigUint::one(), |acc, n| acc * n)
    }
}

fn parse_probability(tok: &str) -> Option<Probability> {
    if let Some((n, d)) = tok.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Probability::new(n, d));
    }
    if let Some((int, frac)) = tok.split_once('.') {
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Probability::new(digits, scale));
    }
    tok.parse::<BigInt>().ok().map(Probability::from_integer)
}

/// Input-selection chain for one neuron: `s0` (not selected) branches to
/// `s_z` with probability `p_z`; every `s_z` is absorbing.
pub fn build_is_dtmc(probabilities: &[Probability]) -> Result<Dtmc> {
    let bits = probabilities.len().trailing_zeros();
    if probabilities.is_empty() || !probabilities.len().is_power_of_two() {
        return Err(Error::Config(format!(
            "input-selection chain needs 2^b probabilities, got {}",
            probabilities.len()
        )));
    }
    InputDistribution::new(vec![probabilities.to_vec()], bits as u8)?;
    let mut chain = Dtmc::new();
    let s0 = chain.add_state([NOT_SELECTED]);
    chain.set_initial(s0);
    for (z, p) in probabilities.iter().enumerate() {
        let s = chain.add_state([SELECTED]);
        chain.add_transition(s0, s, p.clone(), Some(&format!("i{}", z + 1)));
        chain.make_absorbing(s);
    }
    Ok(chain)
}
