// Closed-form effect of a stuck bit in each register, folded into the
// column sum it corrupts.

use tpu_fault::faultmodel::{fault_effect_accumulator, fault_effect_multiplier, fault_effect_weight, fold_effect, FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::{StuckValue, Word};
use tpu_fault::network::{column_sum, ActivationVector, NetworkConfig, WeightMatrix};

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = NetworkConfig::default();
    let w = WeightMatrix::from_rows(
        &[vec![3, 1, 4, 1], vec![5, 9, 2, 6], vec![5, 3, 5, 8], vec![9, 7, 9, 3]],
        4,
    )?;
    let x = ActivationVector::new(vec![2, 7, 1, 8], 4)?;
    let y = column_sum(&x, &w, 0, cfg.widths)?;
    let mut out = format!("fault-free Y(N,1) = {}\n", y.value());

    // bottom row of a 4x4 array multiplies x_4
    let weight = FaultDescriptor::new(FaultSite::WeightRegister, 2, StuckValue::One, 4, 1);
    let e = fault_effect_weight(&weight, &w, Word::new(8, 4)?, &cfg)?;
    out += &format!("{weight}: effect {e:+}, faulty Y = {}\n", fold_effect(y.value(), e, 10));

    for site in [FaultSite::Accumulator, FaultSite::Multiplier] {
        for row in 1..=4 {
            let bit = if site == FaultSite::Accumulator { 8 } else { 7 };
            let f = FaultDescriptor::new(site, bit, StuckValue::One, row, 1);
            let e = match site {
                FaultSite::Accumulator => fault_effect_accumulator(&f, Word::new(0, 10)?, &cfg)?,
                _ => fault_effect_multiplier(&f, Word::new(0, 8)?, &cfg)?,
            };
            out += &format!("{f}: effect {e:+}, faulty Y = {}\n", fold_effect(y.value(), e, 10));
        }
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
