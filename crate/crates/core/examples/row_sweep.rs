// Stuck-at-1 accumulator faults down the first column, every bit.

use tpu_fault::experiment::{parse_config, run_sweep, to_csv, SweepKind};

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = parse_config("[fault]\nsite = \"accumulator\"\n[weights]\nseed = 11\n")?;
    let rows = run_sweep(&cfg, SweepKind::Row)?;
    Ok(to_csv(&cfg, SweepKind::Row, &rows))
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
