// Weight-register faults over bit positions and layer counts, averaged
// over several weight seeds.

use std::collections::BTreeMap;

use tpu_fault::dtmc::Probability;
use tpu_fault::experiment::sweep::decimal6;
use tpu_fault::experiment::{parse_config, run_sweep, to_csv, SweepKind};

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = parse_config(
        "[network]\nlayers = [1, 2, 3]\n[fault]\nstuck = 1\n[weights]\nseed = [0, 1, 2, 3]\n",
    )?;
    let rows = run_sweep(&cfg, SweepKind::Bits)?;
    let mut out = to_csv(&cfg, SweepKind::Bits, &rows);

    let mut mean: BTreeMap<(u8, usize), Probability> = BTreeMap::new();
    for r in &rows {
        *mean.entry((r.point.bit, r.point.layers)).or_default() += &r.p_error / Probability::from_integer(4.into());
    }
    for ((bit, layers), p) in &mean {
        out += &format!("mean SP={bit} L={layers}: {}\n", decimal6(p));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
