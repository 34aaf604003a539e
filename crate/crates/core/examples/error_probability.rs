// Exact probability that a fault changes the network output, through
// both engines.

use tpu_fault::dtmc::{analyze, brute_force_probability, AnalysisOptions, InputDistribution};
use tpu_fault::experiment::generate_weights;
use tpu_fault::faultmodel::{FaultDescriptor, FaultSite};
use tpu_fault::fixedpoint::StuckValue;
use tpu_fault::network::NetworkConfig;

pub fn run_example() -> tpu_fault::Result<String> {
    let cfg = NetworkConfig::default().with_layers(2);
    let w = generate_weights(4, cfg.neurons, cfg.widths);
    let inputs = InputDistribution::uniform(cfg.neurons, cfg.widths.activation);
    let mut out = String::new();
    for bit in 0..4 {
        let f = FaultDescriptor::new(FaultSite::WeightRegister, bit, StuckValue::Zero, 3, 2);
        let r = analyze(&cfg, &w, Some(&f), &inputs, AnalysisOptions::default())?;
        let oracle = brute_force_probability(&cfg, &w, Some(&f), &inputs)?;
        assert_eq!(r.p_error, oracle);
        out += &format!(
            "{f}: p_error = {} = {:.6}, first divergence {:?}\n",
            r.p_error,
            r.p_error_f64(),
            r.first_divergence
        );
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> tpu_fault::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
