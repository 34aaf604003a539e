//! Configuration files, sweeps, reports and the engine cross-check.

pub mod config;
pub mod report;
pub mod selfcheck;
pub mod sweep;
pub mod weights;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use config::{parse_config, ExperimentConfig, InputSource, Overrides, WeightSource};
pub use report::{analyze_single, export, simulate_trace, AnalysisReport};
pub use selfcheck::{selfcheck, SelfcheckSummary};
pub use sweep::{run_sweep, sweep_bit_position, sweep_layers, sweep_mac_row, to_csv, SweepKind, SweepRow};
pub use weights::generate_weights;

use crate::error::Result;

/// Maps `f` over `items` on up to `workers` threads. Results keep the
/// order of `items`; the first error in that order wins.
pub(crate) fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}
