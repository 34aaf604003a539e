//! The execution automaton that runs the fault-free and faulty
//! accelerators side by side and compares their outputs.
//!
//! ```text
//! s0 --Init--> s1 --SA--> s2 --AF&Q--> s1 ... (L times) --No Error--> s3
//!                                                     \--Error-----> s4
//! ```
//!
//! All transitions have probability 1; the only randomness in the
//! composed model comes from the input-selection chains.

use std::fmt;

use crate::error::Result;
use crate::faultmodel::{fold_effect, layer_effect_raw, FaultDescriptor, FaultGeometry};
use crate::network::{partial_sum_raw, ActivationVector, NetworkConfig, WeightMatrix};
use crate::systolic::SystolicArray;

pub const ERROR_LABEL: &str = "error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaState {
    Begin,
    Ready,
    Calculating,
    NoError,
    Error,
}

impl FaState {
    pub const ALL: [FaState; 5] = [
        FaState::Begin,
        FaState::Ready,
        FaState::Calculating,
        FaState::NoError,
        FaState::Error,
    ];

    /// Index `i` of state `s_i`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            FaState::Begin => &["begin"],
            FaState::Ready => &["ready"],
            FaState::Calculating => &["calculating"],
            FaState::NoError => &["end"],
            FaState::Error => &["end", ERROR_LABEL],
        }
    }

    pub fn is_absorbing(self) -> bool {
        matches!(self, FaState::NoError | FaState::Error)
    }
}

impl fmt::Display for FaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaAction {
    Init,
    SystolicArray,
    ActivateQuantize,
    NoError,
    Error,
}

impl FaAction {
    pub fn name(self) -> &'static str {
        match self {
            FaAction::Init => "Init",
            FaAction::SystolicArray => "SA",
            FaAction::ActivateQuantize => "AF&Q",
            FaAction::NoError => "No Error",
            FaAction::Error => "Error",
        }
    }
}

impl fmt::Display for FaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Computes the accumulator values of one layer for both accelerators.
pub trait LayerEngine {
    fn accumulate_reference(&mut self, x: &[u32], out: &mut [u32]);
    fn accumulate_faulty(&mut self, x: &[u32], out: &mut [u32]);
}

/// Fault effects in closed form on top of the fault-free column sums.
#[derive(Debug, Clone)]
pub struct ClosedFormEngine {
    cfg: NetworkConfig,
    weights: WeightMatrix,
    fault: Option<(FaultDescriptor, FaultGeometry)>,
}

impl ClosedFormEngine {
    pub fn new(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>) -> Result<Self> {
        crate::network::check_network(&ActivationVector::zeros(cfg.neurons), w, cfg)?;
        if let Some(f) = fault {
            f.validate(cfg)?;
        }
        Ok(ClosedFormEngine {
            cfg: *cfg,
            weights: w.clone(),
            fault: fault.map(|f| (*f, f.geometry(cfg))),
        })
    }
}

impl LayerEngine for ClosedFormEngine {
    fn accumulate_reference(&mut self, x: &[u32], out: &mut [u32]) {
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = partial_sum_raw(x, &self.weights, m, x.len(), self.cfg.widths);
        }
    }

    fn accumulate_faulty(&mut self, x: &[u32], out: &mut [u32]) {
        self.accumulate_reference(x, out);
        if let Some((f, geo)) = &self.fault {
            let c = f.col - 1;
            if c < out.len() {
                let effect = layer_effect_raw(x, &self.weights, f, geo, &self.cfg);
                out[c] = fold_effect(out[c], effect, self.cfg.widths.accumulator);
            }
        }
    }
}

/// Both accelerators run on the cycle-accurate simulator.
#[derive(Debug, Clone)]
pub struct SimulatorEngine {
    reference: SystolicArray,
    faulty: SystolicArray,
}

impl SimulatorEngine {
    pub fn new(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>) -> Result<Self> {
        Ok(SimulatorEngine {
            reference: SystolicArray::new(cfg, w, None)?,
            faulty: SystolicArray::new(cfg, w, fault)?,
        })
    }
}

impl LayerEngine for SimulatorEngine {
    fn accumulate_reference(&mut self, x: &[u32], out: &mut [u32]) {
        self.reference.accumulate(x, out);
    }

    fn accumulate_faulty(&mut self, x: &[u32], out: &mut [u32]) {
        self.faulty.accumulate(x, out);
    }
}

/// Registers of the automaton; two runs reaching equal snapshots behave
/// identically from then on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaSnapshot {
    pub state: FaState,
    pub layer: usize,
    pub reference: Vec<u32>,
    pub faulty: Vec<u32>,
    pub reference_acc: Vec<u32>,
    pub faulty_acc: Vec<u32>,
}

/// How one input vector ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub error: bool,
    /// First layer (1-based) after which the two accelerators' activations
    /// differed, whether or not the difference survived to the output.
    pub first_divergence: Option<usize>,
}

/// Deterministic execution automaton over a [`LayerEngine`].
#[derive(Debug, Clone)]
pub struct TpuFaAutomaton<E> {
    cfg: NetworkConfig,
    engine: E,
    input: Vec<u32>,
    regs: FaSnapshot,
    first_divergence: Option<usize>,
}

impl<E: LayerEngine> TpuFaAutomaton<E> {
    pub fn new(cfg: &NetworkConfig, engine: E) -> Self {
        let n = cfg.neurons;
        TpuFaAutomaton {
            cfg: *cfg,
            engine,
            input: vec![0; n],
            regs: FaSnapshot {
                state: FaState::Begin,
                layer: 0,
                reference: vec![0; n],
                faulty: vec![0; n],
                reference_acc: vec![0; n],
                faulty_acc: vec![0; n],
            },
            first_divergence: None,
        }
    }

    /// Returns to `s0` with `x` as the selected input vector.
    pub fn reset(&mut self, x: &[u32]) {
        self.input.copy_from_slice(x);
        let r = &mut self.regs;
        r.state = FaState::Begin;
        r.layer = 0;
        for v in r
            .reference
            .iter_mut()
            .chain(r.faulty.iter_mut())
            .chain(r.reference_acc.iter_mut())
            .chain(r.faulty_acc.iter_mut())
        {
            *v = 0;
        }
        self.first_divergence = None;
    }

    pub fn state(&self) -> FaState {
        self.regs.state
    }

    pub fn snapshot(&self) -> &FaSnapshot {
        &self.regs
    }

    /// Takes the single enabled transition, or returns `None` in an
    /// absorbing state.
    pub fn step(&mut self) -> Option<(FaAction, FaState)> {
        let cfg = self.cfg;
        let r = &mut self.regs;
        let (action, next) = match r.state {
            FaState::Begin => {
                r.reference.copy_from_slice(&self.input);
                r.faulty.copy_from_slice(&self.input);
                (FaAction::Init, FaState::Ready)
            }
            FaState::Ready if r.layer < cfg.layers => {
                self.engine.accumulate_reference(&r.reference, &mut r.reference_acc);
                self.engine.accumulate_faulty(&r.faulty, &mut r.faulty_acc);
                (FaAction::SystolicArray, FaState::Calculating)
            }
            FaState::Ready if r.reference == r.faulty => (FaAction::NoError, FaState::NoError),
            FaState::Ready => (FaAction::Error, FaState::Error),
            FaState::Calculating => {
                for (x, &y) in r.reference.iter_mut().zip(&r.reference_acc) {
                    *x = cfg.activate(y);
                }
                for (x, &y) in r.faulty.iter_mut().zip(&r.faulty_acc) {
                    *x = cfg.activate(y);
                }
                r.layer += 1;
                if self.first_divergence.is_none() && r.reference != r.faulty {
                    self.first_divergence = Some(r.layer);
                }
                (FaAction::ActivateQuantize, FaState::Ready)
            }
            FaState::NoError | FaState::Error => return None,
        };
        r.state = next;
        Some((action, next))
    }

    /// Runs `x` to absorption.
    pub fn run(&mut self, x: &[u32]) -> Outcome {
        self.reset(x);
        while self.step().is_some() {}
        Outcome {
            error: self.regs.state == FaState::Error,
            first_divergence: self.first_divergence,
        }
    }

    /// Runs `x` to absorption and records every transition taken.
    pub fn trajectory(&mut self, x: &[u32]) -> Vec<(FaAction, FaState)> {
        self.reset(x);
        std::iter::from_fn(|| self.step()).collect()
    }

    /// Final activations of the fault-free and the faulty accelerator.
    pub fn outputs(&self) -> (&[u32], &[u32]) {
        (&self.regs.reference, &self.regs.faulty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faultmodel::{forward_network_faulty, FaultSite};
    use crate::fixedpoint::StuckValue;
    use crate::network::forward_network_reference;

    #[test]
    fn trajectory_shape() {
        let cfg = NetworkConfig::new(4, 4, 3, 2).unwrap();
        let w = WeightMatrix::from_rows(&[vec![3, 9], vec![12, 5]], 4).unwrap();
        let f = FaultDescriptor::new(FaultSite::Accumulator, 6, StuckValue::One, 3, 1);
        let mut fa = TpuFaAutomaton::new(&cfg, ClosedFormEngine::new(&cfg, &w, Some(&f)).unwrap());
        let path = fa.trajectory(&[4, 7]);
        assert_eq!(path.len(), 1 + 2 * 3 + 1);
        assert_eq!(path[0], (FaAction::Init, FaState::Ready));
        for l in 0..3 {
            assert_eq!(path[1 + 2 * l], (FaAction::SystolicArray, FaState::Calculating));
            assert_eq!(path[2 + 2 * l], (FaAction::ActivateQuantize, FaState::Ready));
        }
        assert!(path.last().unwrap().1.is_absorbing());
        assert!(fa.step().is_none());
    }

    #[test]
    fn outputs_match_forward_passes() {
        let cfg = NetworkConfig::new(4, 4, 2, 3).unwrap();
        let w = WeightMatrix::from_rows(&[vec![3, 9, 1], vec![12, 5, 0], vec![7, 7, 15]], 4).unwrap();
        let f = FaultDescriptor::new(FaultSite::Multiplier, 5, StuckValue::One, 2, 2);
        let mut closed = TpuFaAutomaton::new(&cfg, ClosedFormEngine::new(&cfg, &w, Some(&f)).unwrap());
        let mut sim = TpuFaAutomaton::new(&cfg, SimulatorEngine::new(&cfg, &w, Some(&f)).unwrap());
        for i in (0..4096).step_by(7) {
            let x = ActivationVector::from_index(i, 3, 16);
            let a = closed.run(x.as_slice());
            let b = sim.run(x.as_slice());
            assert_eq!(a, b);
            let reference = forward_network_reference(&x, &w, &cfg).unwrap();
            let faulty = forward_network_faulty(&x, &w, &f, &cfg).unwrap();
            assert_eq!(closed.outputs(), (reference.as_slice(), faulty.as_slice()));
            assert_eq!(a.error, reference != faulty);
        }
    }

    #[test]
    fn labels() {
        assert!(FaState::Error.labels().contains(&ERROR_LABEL));
        assert!(!FaState::NoError.labels().contains(&ERROR_LABEL));
        assert_eq!(FaState::Calculating.to_string(), "s2");
        assert_eq!(FaAction::ActivateQuantize.to_string(), "AF&Q");
    }
}
