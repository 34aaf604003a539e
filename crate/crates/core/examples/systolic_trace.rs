// Cycle-by-cycle trace of one layer on a faulty array.

use tpu_fault::faultmodel::{FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::StuckValue;
use tpu_fault::network::{forward_layer_reference, ActivationVector, NetworkConfig, WeightMatrix};
use tpu_fault::systolic::{render_trace, simulate_layer, EmitTag};

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = NetworkConfig::new(4, 4, 1, 2)?;
    let w = WeightMatrix::from_rows(&[vec![7, 3], vec![9, 14]], 4)?;
    let x = ActivationVector::new(vec![5, 12], 4)?;
    // row 1 sits above the two-neuron effective area and only leaks
    let f = FaultDescriptor::new(FaultSite::Accumulator, 6, StuckValue::One, 1, 1);

    let (faulty, trace) = simulate_layer(&x, &w, Some(&f), &cfg)?;
    let reference = forward_layer_reference(&x, &w, &cfg)?;
    let mut out = render_trace(&trace);
    out += &format!(
        "reference {reference} faulty {faulty}, {} leaked emissions\n",
        trace.count(EmitTag::Leak)
    );
    Ok(out)
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
