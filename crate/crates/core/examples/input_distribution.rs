// Error probability under a non-uniform input distribution.

use tpu_fault::dtmc::{probability_of_error, InputDistribution};
use tpu_fault::faultmodel::{FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::{BitWidths, StuckValue};
use tpu_fault::network::{NetworkConfig, WeightMatrix};

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = NetworkConfig::new(2, 2, 1, 2)?.with_widths(BitWidths::new(2, 2, 4, 6)?);
    let w = WeightMatrix::from_rows(&[vec![3, 2], vec![1, 3]], 2)?;
    let f = FaultDescriptor::new(FaultSite::WeightRegister, 1, StuckValue::One, 2, 1);
    // small activations are more likely
    let skewed = InputDistribution::parse("1/2 1/4 1/8 1/8\n", 2, 2, "example")?;
    let uniform = InputDistribution::uniform(2, 2);
    let a = probability_of_error(&cfg, &w, Some(&f), &uniform)?;
    let b = probability_of_error(&cfg, &w, Some(&f), &skewed)?;
    Ok(format!("{f}\nuniform inputs: {}\nskewed inputs:  {}\n", a.p_error, b.p_error))
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
