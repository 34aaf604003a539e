// Model and property files for an external probabilistic model checker.

use tpu_fault::dtmc::{export_model, write_model, InputDistribution};
use tpu_fault::faultmodel::{FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::{BitWidths, StuckValue};
use tpu_fault::network::{NetworkConfig, WeightMatrix};

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = NetworkConfig::new(4, 4, 2, 2)?.with_widths(BitWidths::new(2, 2, 4, 6)?);
    let w = WeightMatrix::from_rows(&[vec![3, 1], vec![2, 3]], 2)?;
    let f = FaultDescriptor::new(FaultSite::Multiplier, 1, StuckValue::One, 3, 1);
    let model = export_model(&cfg, &w, Some(&f), &InputDistribution::uniform(2, 2))?;
    let dir = std::env::temp_dir().join("tpu-fault-export");
    let (pm, pctl) = write_model(&model, &dir, "mul_sa1")?;
    Ok(format!("{}\n{}\n{}", pm.display(), pctl.display(), model.model))
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
