//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::Zero;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use tpu_fault::dtmc::{
    analyze, brute_force_probability, build_is_dtmc, compose_model, AnalysisOptions, ClosedFormEngine, FaAction, FaState,
    InputDistribution, Probability, TpuFaAutomaton, ERROR_LABEL,
};
use tpu_fault::experiment::{self, generate_weights, parse_config, SweepKind};
use tpu_fault::faultmodel::{fault_effect_accumulator, fold_effect, forward_network_faulty, FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::{BitWidths, QuantizationStrategy, StuckValue, Word};
use tpu_fault::network::{forward_network_reference, ActivationVector, NetworkConfig, WeightMatrix};
use tpu_fault::systolic::{simulate_layer, simulate_network, EmitTag};

type Outcome = Result<String, String>;

struct Rng(SplitMix64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(SplitMix64::from_seed(seed.to_le_bytes()))
    }

    fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    fn stuck(&mut self) -> StuckValue {
        if self.below(2) == 1 {
            StuckValue::One
        } else {
            StuckValue::Zero
        }
    }

    fn quantization(&mut self) -> QuantizationStrategy {
        [QuantizationStrategy::KeepHigh, QuantizationStrategy::KeepLow, QuantizationStrategy::Saturate][self.below(3) as usize]
    }
}

fn q(n: i64, d: i64) -> Probability {
    Probability::new(BigInt::from(n), BigInt::from(d))
}

/// 1. Both engines give the same exact error probability.
fn cross_engine_identity() -> Outcome {
    let mut rng = Rng::new(0x5eed_0001);
    let mut coverage: BTreeSet<(FaultSite, StuckValue, u8)> = BTreeSet::new();
    let mut positions = BTreeSet::new();
    let mut shapes = BTreeSet::new();
    let mut nonzero = 0;
    let mut mismatches = Vec::new();
    for i in 0..1000u64 {
        let site = FaultSite::ALL[(i % 3) as usize];
        let neurons = 1 + rng.below(4) as usize;
        let layers = 1 + rng.below(5) as usize;
        let cfg = NetworkConfig::new(4, 4, layers, neurons)
            .unwrap()
            .with_quantization(rng.quantization())
            .with_signed(rng.below(2) == 1);
        let stuck = rng.stuck();
        let bit = rng.below(site.width(&cfg) as u64) as u8;
        let (row, col) = (1 + rng.below(4) as usize, 1 + rng.below(4) as usize);
        let w = generate_weights(rng.0.next_u64(), neurons, cfg.widths);
        let f = FaultDescriptor::new(site, bit, stuck, row, col);
        let dist = InputDistribution::uniform(neurons, cfg.widths.activation);
        let closed = analyze(&cfg, &w, Some(&f), &dist, AnalysisOptions::default())
            .map_err(|e| e.to_string())?
            .p_error;
        let brute = brute_force_probability(&cfg, &w, Some(&f), &dist).map_err(|e| e.to_string())?;
        coverage.insert((site, stuck, bit));
        positions.insert((row, col));
        shapes.insert((neurons, layers));
        if !closed.is_zero() {
            nonzero += 1;
        }
        if closed != brute {
            mismatches.push(format!("{f} N={neurons} L={layers}: {closed} vs {brute}"));
        }
    }
    let w = BitWidths::default();
    let expected_coverage = 2 * (w.weight + w.multiplier + w.accumulator) as usize;
    if coverage.len() != expected_coverage || positions.len() != 16 || shapes.len() != 20 {
        return Err(format!(
            "coverage incomplete: {} of {expected_coverage} (site, ST, SP), {} of 16 positions, {} of 20 (N, L)",
            coverage.len(),
            positions.len(),
            shapes.len()
        ));
    }
    if !mismatches.is_empty() {
        return Err(format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]));
    }
    Ok(format!("1000 configurations, 0 mismatches, {nonzero} with non-zero p_error"))
}

/// 2. Closed form and simulator produce the same faulty outputs.
fn closed_form_matches_simulator() -> Outcome {
    let mut checked = 0u64;
    let mut mismatches = 0u64;
    let mut first = None;
    for neurons in 1..=2 {
        for act in 1..=2u8 {
            let widths = BitWidths::new(2, act, 2 + act, 4 + act).unwrap();
            let levels = 1u64 << act;
            for quant in [QuantizationStrategy::KeepHigh, QuantizationStrategy::KeepLow, QuantizationStrategy::Saturate] {
                for signed in [false, true] {
                    for layers in 1..=3 {
                        let cfg = NetworkConfig::new(4, 4, layers, neurons)
                            .unwrap()
                            .with_widths(widths)
                            .with_quantization(quant)
                            .with_signed(signed);
                        for seed in 0..3 {
                            let w = generate_weights(seed, neurons, widths);
                            for site in FaultSite::ALL {
                                for bit in 0..site.width(&cfg) {
                                    for stuck in [StuckValue::Zero, StuckValue::One] {
                                        for row in 1..=4 {
                                            for col in 1..=4 {
                                                let f = FaultDescriptor::new(site, bit, stuck, row, col);
                                                for i in 0..levels.pow(neurons as u32) {
                                                    let x = ActivationVector::from_index(i, neurons, levels);
                                                    let a = forward_network_faulty(&x, &w, &f, &cfg).unwrap();
                                                    let b = simulate_network(&x, &w, Some(&f), &cfg).unwrap();
                                                    checked += 1;
                                                    if a != b {
                                                        mismatches += 1;
                                                        first.get_or_insert(format!("{f} x={x} {a} vs {b}"));
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let exhaustive = checked;

    let mut rng = Rng::new(0x5eed_0002);
    for _ in 0..10_000 {
        let cfg = NetworkConfig::default().with_layers(1 + rng.below(5) as usize);
        let site = FaultSite::ALL[rng.below(3) as usize];
        let f = FaultDescriptor::new(site, rng.below(site.width(&cfg) as u64) as u8, rng.stuck(), 1 + rng.below(4) as usize, 1 + rng.below(4) as usize);
        let w = generate_weights(rng.0.next_u64(), 4, cfg.widths);
        let x = ActivationVector::from_index(rng.below(65536), 4, 16);
        let a = forward_network_faulty(&x, &w, &f, &cfg).unwrap();
        let b = simulate_network(&x, &w, Some(&f), &cfg).unwrap();
        let r = forward_network_reference(&x, &w, &cfg).unwrap();
        let s = simulate_network(&x, &w, None, &cfg).unwrap();
        checked += 1;
        if a != b || r != s {
            mismatches += 1;
            first.get_or_insert(format!("{f} x={x} {a} vs {b}"));
        }
    }
    match first {
        Some(example) => Err(format!("{mismatches} mismatches of {checked}, first: {example}")),
        None => Ok(format!("{exhaustive} exhaustive + 10000 sampled runs, 0 mismatches")),
    }
}

/// 3. Leak multipliers read off the trace.
fn leak_count_law() -> Outcome {
    let n = 4usize;
    let rows = 2 * n;
    let widths = BitWidths::new(4, 4, 8, 16).unwrap();
    let cfg = NetworkConfig::new(rows, rows, 1, n).unwrap().with_widths(widths);
    let w = generate_weights(7, n, widths);
    let x = ActivationVector::zeros(n);
    let mut checked = 0;
    for site in [FaultSite::Accumulator, FaultSite::Multiplier] {
        for bit in [0u8, 3, 5] {
            for r_inv in 1..=2 * n {
                let row = rows - r_inv + 1;
                for col in 1..=n {
                    let f = FaultDescriptor::new(site, bit, StuckValue::One, row, col);
                    let (_, trace) = simulate_layer(&x, &w, Some(&f), &cfg).map_err(|e| e.to_string())?;
                    let leaks = trace.count_at(row, col, EmitTag::Leak);
                    let own = trace.count_at(row, col, EmitTag::Active);
                    let (want_leaks, want_own) = if r_inv <= n { (2 * n - r_inv, 1) } else { (2 * n - r_inv + 1, 0) };
                    if (leaks, own) != (want_leaks, want_own) {
                        return Err(format!("{f} r_inv={r_inv}: {leaks} leaks + {own} own, expected {want_leaks} + {want_own}"));
                    }
                    // with zero inputs every counted emission is exactly SM
                    let sm = 1u32 << bit;
                    let bottom = trace.bottom.last().unwrap()[col - 1];
                    if bottom != (leaks + own) as u32 * sm {
                        return Err(format!("{f}: bottom accumulator {bottom}, expected {}", (leaks + own) as u32 * sm));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} fault placements over r_inv 1..={}, all leak counts exact", 2 * n))
}

/// 4. A leak of exactly 2^10 vanishes in a 10-bit accumulator.
fn overflow_masking() -> Outcome {
    let cfg = NetworkConfig::default();
    let f = FaultDescriptor::new(FaultSite::Accumulator, 8, StuckValue::One, 1, 1);
    let geo = f.geometry(&cfg);
    if geo.r_inv != 4 || !geo.in_effective_area() {
        return Err(format!("r_inv = {}, expected 4 inside the effective area", geo.r_inv));
    }
    let mut masked = 0;
    for operand in 0..1024u32 {
        if operand & 0x100 == 0 {
            continue;
        }
        let effect = fault_effect_accumulator(&f, Word::new(operand as u64, 10).unwrap(), &cfg).map_err(|e| e.to_string())?;
        if effect != 1024 {
            return Err(format!("operand {operand}: effect {effect}, expected 1024"));
        }
        for y in 0..1024 {
            if fold_effect(y, effect, 10) != y {
                return Err(format!("Y = {y} changed by the folded effect"));
            }
        }
        masked += 1;
    }
    Ok(format!("{masked} masked operands, effect 1024 folds to 0 for every Y"))
}

/// 5. Mean error probability over ten seeds grows with the layer count.
fn layer_trend() -> Outcome {
    let cfg = parse_config("[network]\nlayers = [1, 2, 3, 4, 5]\n[fault]\nsite = \"weight\"\n[weights]\nseed = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]\n")
        .map_err(|e| e.to_string())?;
    let rows = experiment::run_sweep(&cfg, SweepKind::Bits).map_err(|e| e.to_string())?;
    if rows.len() != 400 {
        return Err(format!("{} rows, expected 400", rows.len()));
    }
    let mut sums: BTreeMap<(StuckValue, u8, usize), Probability> = BTreeMap::new();
    for r in &rows {
        *sums.entry((r.point.stuck, r.point.bit, r.point.layers)).or_default() += &r.p_error;
    }
    let mut inversions = Vec::new();
    let mut series = Vec::new();
    for stuck in [StuckValue::Zero, StuckValue::One] {
        for bit in 0..4u8 {
            let means: Vec<Probability> = (1..=5).map(|l| &sums[&(stuck, bit, l)] / q(10, 1)).collect();
            for l in 1..5 {
                if means[l] < means[l - 1] {
                    inversions.push(format!("SA{} SP={bit} L={}->{}", stuck.as_bit(), l, l + 1));
                }
            }
            let shown: Vec<String> = means.iter().map(experiment::sweep::decimal6).collect();
            series.push(format!("SA{}/SP{}: {}", stuck.as_bit(), bit, shown.join(" ")));
        }
    }
    if inversions.is_empty() {
        Ok(format!("40 points x 10 seeds, 0 inversions; {}", series.join("; ")))
    } else {
        Err(format!("{} inversions of 32 steps; means by L: {}", inversions.len(), series.join("; ")))
    }
}

/// 6. Toy configuration.
fn toy_point() -> Outcome {
    let cfg = NetworkConfig::new(1, 1, 1, 1)
        .unwrap()
        .with_widths(BitWidths::new(1, 1, 2, 2).unwrap())
        .with_quantization(QuantizationStrategy::KeepLow);
    let w = WeightMatrix::from_rows(&[vec![1]], 1).unwrap();
    let f = FaultDescriptor::new(FaultSite::WeightRegister, 0, StuckValue::Zero, 1, 1);
    let dist = InputDistribution::uniform(1, 1);
    let closed = analyze(&cfg, &w, Some(&f), &dist, AnalysisOptions::default()).map_err(|e| e.to_string())?.p_error;
    let brute = brute_force_probability(&cfg, &w, Some(&f), &dist).map_err(|e| e.to_string())?;
    let explicit = compose_model(&cfg, &w, Some(&f), &dist)
        .and_then(|m| m.explicit(1000))
        .map_err(|e| e.to_string())?
        .reachability(ERROR_LABEL);
    let half = q(1, 2);
    if closed == half && brute == half && explicit == half {
        Ok("p_error = 1/2 from enumeration, simulator and explicit product".into())
    } else {
        Err(format!("closed form {closed}, simulator {brute}, explicit {explicit}"))
    }
}

/// 7. Automaton trajectories and input-selection chain sizes.
fn automaton_semantics() -> Outcome {
    let base = NetworkConfig::default();
    let w = generate_weights(3, 4, base.widths);
    let f = FaultDescriptor::new(FaultSite::WeightRegister, 3, StuckValue::One, 4, 1);
    let mut runs = 0u64;
    let mut ends = [0u64; 2];
    for layers in 1..=5 {
        let cfg = base.with_layers(layers);
        let mut fa = TpuFaAutomaton::new(&cfg, ClosedFormEngine::new(&cfg, &w, Some(&f)).map_err(|e| e.to_string())?);
        for i in 0..65536 {
            let x = ActivationVector::from_index(i, 4, 16);
            let path = fa.trajectory(x.as_slice());
            let count = |a: FaAction| path.iter().filter(|(b, _)| *b == a).count();
            let into = |s: FaState| path.iter().filter(|(_, t)| *t == s).count();
            let last = path.last().map(|(_, s)| *s);
            let terminal = into(FaState::NoError) + into(FaState::Error);
            if count(FaAction::SystolicArray) != layers
                || count(FaAction::ActivateQuantize) != layers
                || into(FaState::Calculating) != layers
                || into(FaState::Ready) != layers + 1
                || terminal != 1
                || !matches!(last, Some(FaState::NoError | FaState::Error))
            {
                return Err(format!("L={layers} x={x}: trajectory {path:?}"));
            }
            let diverged = forward_network_reference(&x, &w, &cfg).unwrap() != forward_network_faulty(&x, &w, &f, &cfg).unwrap();
            if diverged != (last == Some(FaState::Error)) {
                return Err(format!("L={layers} x={x}: verdict disagrees with the forward pass"));
            }
            ends[diverged as usize] += 1;
            runs += 1;
        }
    }
    for bits in 1..=8u8 {
        let chain = build_is_dtmc(InputDistribution::uniform(1, bits).neuron(0)).map_err(|e| e.to_string())?;
        let v = 1usize << bits;
        if chain.num_states() != v + 1 || chain.num_labeled_transitions() != v {
            return Err(format!(
                "b={bits}: {} states and {} transitions, expected {} and {v}",
                chain.num_states(),
                chain.num_labeled_transitions(),
                v + 1
            ));
        }
    }
    Ok(format!("{runs} trajectories ({} error, {} no error); IS chains for b=1..=8 sized 2^b+1 / 2^b", ends[1], ends[0]))
}

/// 8. Byte-identical artifacts across runs and worker counts.
fn determinism() -> Outcome {
    let text = "[network]\nlayers = [1, 2, 3]\n[fault]\nbit = [0, 3]\n[weights]\nseed = [0, 1, 2]\n";
    let mut csvs = Vec::new();
    for workers in [1, 1, 2, 4] {
        let mut cfg = parse_config(text).map_err(|e| e.to_string())?;
        cfg.output.workers = workers;
        let rows = experiment::run_sweep(&cfg, SweepKind::Bits).map_err(|e| e.to_string())?;
        csvs.push(experiment::to_csv(&cfg, SweepKind::Bits, &rows));
    }
    if csvs.windows(2).any(|p| p[0] != p[1]) {
        return Err("sweep CSV differs between runs or worker counts".into());
    }

    let single = parse_config("[fault]\nbit = 3\nrow = 2\n[weights]\nseed = 5\n").map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for workers in [1, 3] {
        let mut cfg = single.clone();
        cfg.output.workers = workers;
        reports.push(experiment::analyze_single(&cfg, true).map_err(|e| e.to_string())?.render(false));
    }
    if reports[0] != reports[1] {
        return Err("analysis report differs between worker counts".into());
    }

    let traces: Vec<String> = (0..2)
        .map(|_| experiment::simulate_trace(&single, None))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if traces[0] != traces[1] {
        return Err("trace differs between runs".into());
    }

    let toy = parse_config("[network]\nneurons = 2\nactivation_bits = 2\nlayers = 2\n[fault]\nsite = \"accumulator\"\nbit = 5\nrow = 3\n[weights]\nseed = 9\n")
        .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in 0..2 {
        let (pm, pctl) = experiment::export(&toy, dir.path(), &format!("run{run}")).map_err(|e| e.to_string())?;
        files.push((std::fs::read(pm).unwrap(), std::fs::read(pctl).unwrap()));
    }
    if files[0] != files[1] {
        return Err("exported model files differ between runs".into());
    }
    Ok(format!(
        "CSV ({} bytes) identical for 1, 2 and 4 workers; report, trace and model files identical across runs",
        csvs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("cross-engine identity", cross_engine_identity),
        ("closed form equals simulator", closed_form_matches_simulator),
        ("leak-count law", leak_count_law),
        ("overflow masking", overflow_masking),
        ("layer trend", layer_trend),
        ("toy analytic point", toy_point),
        ("automaton semantics", automaton_semantics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
