// Both engines on randomized configurations.

use tpu_fault::experiment::selfcheck;

pub fn run_example() -> tpu_fault::Result<String> {
    let s = selfcheck(40, 2024, 2)?;
    Ok(format!(
        "{} cases, {} with non-zero error probability, {} mismatches\n",
        s.cases,
        s.nonzero,
        s.mismatches.len()
    ))
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
