//! Parallel composition of `N` input-selection chains with the execution
//! automaton.
//!
//! The chains synchronize on a single `select` step, after which each one
//! sits in its (absorbing) selected state while the automaton runs. A
//! product state is therefore the tuple of selected inputs plus the
//! automaton registers, and distinct input vectors never share a state.
//! Per input vector with non-zero probability the product has
//! `2L + 3` states (`s0`, `s1`, `L` times `s2`/`s1`, and one end state) and
//! `2L + 3` outgoing transitions (counting the end state's self-loop), on
//! top of one shared initial state with one `select` branch per vector.

use std::collections::HashMap;

use num_traits::Zero;

use super::automaton::{ClosedFormEngine, FaSnapshot, FaState, TpuFaAutomaton};
use super::chain::{Dtmc, Probability};
use super::input::{InputDistribution, NOT_SELECTED, SELECTED};
use crate::error::{Error, Result};
use crate::faultmodel::FaultDescriptor;
use crate::network::{check_network, ActivationVector, NetworkConfig, WeightMatrix};

/// Size of the composed model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelStatistics {
    pub states: u128,
    pub transitions: u128,
    /// Input vectors with non-zero probability.
    pub inputs: u128,
}

/// Largest product the explicit construction will build.
pub const EXPLICIT_STATE_LIMIT: u128 = 1_000_000;

/// Description of the composed model; nothing is materialized until
/// [`ComposedModel::explicit`] is called.
#[derive(Debug, Clone)]
pub struct ComposedModel<'a> {
    pub cfg: NetworkConfig,
    pub weights: &'a WeightMatrix,
    pub fault: Option<FaultDescriptor>,
    pub inputs: &'a InputDistribution,
}

pub fn compose_model<'a>(
    cfg: &NetworkConfig,
    weights: &'a WeightMatrix,
    fault: Option<&FaultDescriptor>,
    inputs: &'a InputDistribution,
) -> Result<ComposedModel<'a>> {
    check_network(&ActivationVector::zeros(cfg.neurons), weights, cfg)?;
    if let Some(f) = fault {
        f.validate(cfg)?;
    }
    if inputs.neurons() != cfg.neurons || inputs.levels() != cfg.widths.activation_levels() {
        return Err(Error::Config(format!(
            "input distribution covers {} neurons with {} values each, network needs {} with {}",
            inputs.neurons(),
            inputs.levels(),
            cfg.neurons,
            cfg.widths.activation_levels()
        )));
    }
    Ok(ComposedModel {
        cfg: *cfg,
        weights,
        fault: fault.copied(),
        inputs,
    })
}

impl ComposedModel<'_> {
    /// Reachable state and transition counts without building the product.
    pub fn statistics(&self) -> ModelStatistics {
        let k = self.inputs.support_size();
        let per_input = 2 * self.cfg.layers as u128 + 3;
        ModelStatistics {
            states: 1 + k * per_input,
            transitions: k * (per_input + 1),
            inputs: k,
        }
    }

    /// Builds the product explicitly by exploring reachable states.
    pub fn explicit(&self, state_limit: u128) -> Result<Dtmc> {
        let stats = self.statistics();
        if stats.states > state_limit {
            return Err(Error::Guard {
                what: "explicit product model",
                required: stats.states,
                limit: state_limit,
            });
        }
        let cfg = &self.cfg;
        let engine = ClosedFormEngine::new(cfg, self.weights, self.fault.as_ref())?;
        let mut fa = TpuFaAutomaton::new(cfg, engine);

        let mut dtmc = Dtmc::new();
        let mut index: HashMap<(Vec<u32>, FaSnapshot), usize> = HashMap::new();
        let initial = dtmc.add_state([NOT_SELECTED, "begin"]);
        dtmc.set_initial(initial);

        let levels = cfg.widths.activation_levels();
        let total = levels.pow(cfg.neurons as u32);
        for i in 0..total {
            let x = ActivationVector::from_index(i, cfg.neurons, levels);
            let p = self.inputs.probability(&x);
            if p.is_zero() {
                continue;
            }
            fa.reset(x.as_slice());
            let mut current = intern(&mut dtmc, &mut index, x.as_slice(), fa.snapshot());
            dtmc.add_transition(initial, current, p, Some("select"));
            while let Some((action, _)) = fa.step() {
                let next = intern(&mut dtmc, &mut index, x.as_slice(), fa.snapshot());
                dtmc.add_transition(current, next, Probability::from_integer(1.into()), Some(action.name()));
                current = next;
            }
            dtmc.make_absorbing(current);
        }
        Ok(dtmc)
    }
}

fn intern(dtmc: &mut Dtmc, index: &mut HashMap<(Vec<u32>, FaSnapshot), usize>, x: &[u32], snap: &FaSnapshot) -> usize {
    let key = (x.to_vec(), snap.clone());
    if let Some(&id) = index.get(&key) {
        return id;
    }
    let labels = std::iter::once(SELECTED).chain(snap.state.labels().iter().copied());
    let id = dtmc.add_state(labels);
    index.insert(key, id);
    id
}

/// Automaton state that a state of an explicit product projects to.
pub fn automaton_state(dtmc: &Dtmc, state: usize) -> Option<FaState> {
    let labels = dtmc.labels(state);
    FaState::ALL
        .into_iter()
        .rev()
        .find(|s| s.labels().iter().all(|l| labels.iter().any(|m| m == l)))
}
