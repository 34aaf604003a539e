//! Explicit discrete-time Markov chains with exact probabilities.

use std::collections::VecDeque;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Probability = BigRational;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub target: usize,
    pub probability: Probability,
    /// Action label; `None` for the implicit self-loop of an absorbing
    /// state.
    pub action: Option<String>,
}

/// States, labels and a sparse transition matrix.
#[derive(Debug, Clone, Default)]
pub struct Dtmc {
    initial: usize,
    labels: Vec<Vec<String>>,
    transitions: Vec<Vec<Transition>>,
}

impl Dtmc {
    pub fn new() -> Self {
        Dtmc::default()
    }

    pub fn add_state<I, S>(&mut self, labels: I) -> usize
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.labels.push(labels.into_iter().map(Into::into).collect());
        self.transitions.push(Vec::new());
        self.labels.len() - 1
    }

    pub fn set_initial(&mut self, state: usize) {
        self.initial = state;
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn add_transition(&mut self, from: usize, to: usize, probability: Probability, action: Option<&str>) {
        self.transitions[from].push(Transition {
            target: to,
            probability,
            action: action.map(str::to_string),
        });
    }

    /// Adds the probability-1 self-loop that makes `state` absorbing.
    pub fn make_absorbing(&mut self, state: usize) {
        self.add_transition(state, state, Probability::one(), None);
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    /// All matrix entries, self-loops included.
    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    /// Transitions carrying an action label.
    pub fn num_labeled_transitions(&self) -> usize {
        self.transitions
            .iter()
            .flatten()
            .filter(|t| t.action.is_some())
            .count()
    }

    pub fn labels(&self, state: usize) -> &[String] {
        &self.labels[state]
    }

    pub fn has_label(&self, state: usize, label: &str) -> bool {
        self.labels[state].iter().any(|l| l == label)
    }

    pub fn transitions(&self, state: usize) -> &[Transition] {
        &self.transitions[state]
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.transitions[state]
            .iter()
            .all(|t| t.target == state)
    }

    /// Checks that every row is a probability distribution.
    pub fn check_stochastic(&self) -> Result<()> {
        for (state, row) in self.transitions.iter().enumerate() {
            if row.iter().any(|t| t.probability.is_negative()) {
                return Err(Error::Config(format!("state {state} has a negative transition probability")));
            }
            let total: Probability = row.iter().map(|t| t.probability.clone()).sum();
            if !total.is_one() {
                return Err(Error::Config(format!("row of state {state} sums to {total}, not 1")));
            }
        }
        Ok(())
    }

    /// Exact `P=? [ F label ]` from the initial state.
    pub fn reachability(&self, label: &str) -> Probability {
        let n = self.num_states();
        let target: Vec<bool> = (0..n).map(|s| self.has_label(s, label)).collect();

        // states with a positive-probability path into the target set
        let mut predecessors = vec![Vec::new(); n];
        for (s, row) in self.transitions.iter().enumerate() {
            for t in row.iter().filter(|t| !t.probability.is_zero()) {
                predecessors[t.target].push(s);
            }
        }
        let mut can_reach = target.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| target[s]).collect();
        while let Some(s) = queue.pop_front() {
            for &p in &predecessors[s] {
                if !can_reach[p] {
                    can_reach[p] = true;
                    queue.push_back(p);
                }
            }
        }

        let unknown: Vec<usize> = (0..n).filter(|&s| can_reach[s] && !target[s]).collect();
        let mut value: Vec<Option<Probability>> = (0..n)
            .map(|s| {
                if target[s] {
                    Some(Probability::one())
                } else if !can_reach[s] {
                    Some(Probability::zero())
                } else {
                    None
                }
            })
            .collect();

        if !self.solve_acyclic(&unknown, &mut value) {
            self.solve_dense(&unknown, &mut value);
        }
        value[self.initial].clone().expect("initial state solved")
    }

    /// Back-substitution in reverse topological order. Returns false when
    /// the unknown states contain a cycle other than self-loops.
    fn solve_acyclic(&self, unknown: &[usize], value: &mut [Option<Probability>]) -> bool {
        let n = self.num_states();
        let mut is_unknown = vec![false; n];
        unknown.iter().for_each(|&s| is_unknown[s] = true);
        // out-degree towards other unknown states
        let mut pending = vec![0usize; n];
        let mut dependents = vec![Vec::new(); n];
        for &s in unknown {
            for t in &self.transitions[s] {
                if t.target != s && is_unknown[t.target] && !t.probability.is_zero() {
                    pending[s] += 1;
                    dependents[t.target].push(s);
                }
            }
        }
        let mut ready: VecDeque<usize> = unknown.iter().copied().filter(|&s| pending[s] == 0).collect();
        let mut solved = 0;
        while let Some(s) = ready.pop_front() {
            let mut stay = Probability::zero();
            let mut rest = Probability::zero();
            for t in &self.transitions[s] {
                if t.target == s {
                    stay += &t.probability;
                } else if !t.probability.is_zero() {
                    rest += &t.probability * value[t.target].as_ref().expect("dependency solved");
                }
            }
            value[s] = Some(rest / (Probability::one() - stay));
            solved += 1;
            for &d in &dependents[s] {
                pending[d] -= 1;
                if pending[d] == 0 {
                    ready.push_back(d);
                }
            }
        }
        solved == unknown.len()
    }

    /// Gaussian elimination on `(I - A) x = b` over the unknown states.
    fn solve_dense(&self, unknown: &[usize], value: &mut [Option<Probability>]) {
        let k = unknown.len();
        let mut column = vec![usize::MAX; self.num_states()];
        for (i, &s) in unknown.iter().enumerate() {
            column[s] = i;
        }
        let mut a = vec![vec![Probability::zero(); k + 1]; k];
        for (i, &s) in unknown.iter().enumerate() {
            a[i][i] = Probability::one();
            for t in &self.transitions[s] {
                if column[t.target] != usize::MAX {
                    a[i][column[t.target]] -= &t.probability;
                } else if let Some(v) = &value[t.target] {
                    a[i][k] += &t.probability * v;
                }
            }
        }
        for pivot in 0..k {
            let row = (pivot..k)
                .find(|&r| !a[r][pivot].is_zero())
                .expect("states that reach the target give a regular system");
            a.swap(pivot, row);
            let p = a[pivot][pivot].clone();
            for entry in a[pivot].iter_mut() {
                *entry /= &p;
            }
            for r in 0..k {
                if r != pivot && !a[r][pivot].is_zero() {
                    let factor = a[r][pivot].clone();
                    for c in pivot..=k {
                        let delta = &factor * &a[pivot][c];
                        a[r][c] -= delta;
                    }
                }
            }
        }
        for (i, &s) in unknown.iter().enumerate() {
            value[s] = Some(a[i][k].clone());
        }
    }
}
