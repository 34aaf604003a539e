// The composed Markov chain built state by state, checked with exact
// reachability.

use tpu_fault::dtmc::{build_is_dtmc, compose_model, InputDistribution, ERROR_LABEL};
use tpu_fault::faultmodel::{FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::{BitWidths, QuantizationStrategy, StuckValue};
use tpu_fault::network::{NetworkConfig, WeightMatrix};

pub fn run_example() -> tpu_fault::Result<String> {
    let chain = build_is_dtmc(InputDistribution::uniform(1, 2).neuron(0))?;
    let mut out = format!(
        "input selection for a 2-bit neuron: {} states, {} transitions\n",
        chain.num_states(),
        chain.num_labeled_transitions()
    );

    let cfg = NetworkConfig::new(1, 1, 1, 1)?
        .with_widths(BitWidths::new(1, 1, 2, 2)?)
        .with_quantization(QuantizationStrategy::KeepLow);
    let w = WeightMatrix::from_rows(&[vec![1]], 1)?;
    let f = FaultDescriptor::new(FaultSite::WeightRegister, 0, StuckValue::Zero, 1, 1);
    let dist = InputDistribution::uniform(1, 1);
    let model = compose_model(&cfg, &w, Some(&f), &dist)?;
    let dtmc = model.explicit(1_000)?;
    dtmc.check_stochastic()?;
    out += &format!(
        "product: {} states, {} transitions, P=? [ F \"error\" ] = {}\n",
        dtmc.num_states(),
        dtmc.num_transitions(),
        dtmc.reachability(ERROR_LABEL)
    );
    for layers in 1..=5 {
        let s = compose_model(&NetworkConfig::default().with_layers(layers), &tpu_fault::experiment::generate_weights(0, 4, BitWidths::default()), None, &InputDistribution::uniform(4, 4))?.statistics();
        out += &format!("4x4-bit, L={layers}: {} states, {} transitions\n", s.states, s.transitions);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
