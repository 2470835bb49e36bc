//! Simulate one hashtag under each diffusion model from the same seeds.

use cascadelab::engine::{run_simulation, SimulationConfig, Variant};
use cascadelab::graph::rewire_configuration_model;
use cascadelab::identity::HashtagSpec;
use cascadelab::worldio::{generate_world, sample_seed_group, SynthWorldParams};

fn main() -> cascadelab::Result<()> {
    let world = generate_world(&SynthWorldParams::default())?.world;
    let seeds = sample_seed_group(&world.net, 10, 7)?;
    let spec = HashtagSpec::from_seeds("#example", &world.ids, seeds, 1, 1.0)?;
    println!("hashtag signals registers {:?}", spec.relevant_dims);

    let rewired = rewire_configuration_model(&world.net, 1)?;
    for variant in Variant::ALL {
        let cfg = SimulationConfig {
            variant,
            stickiness: 0.5,
            rng_seed: 11,
            ..SimulationConfig::default()
        };
        let net = if variant.rewires() { &rewired } else { &world.net };
        let cascade = run_simulation(net, &world.ids, &spec, &cfg)?;
        let curve = cascade.usage_curve();
        let peak = curve.iter().cloned().fold(0.0, f64::max);
        println!(
            "{variant:>17}: {:>5} uses by {:>4} adopters over {:>3} steps, peak {peak} uses/step",
            cascade.uses(),
            cascade.adopters().len(),
            cascade.duration
        );
    }

    let cfg = SimulationConfig { stickiness: 0.5, rng_seed: 11, ..SimulationConfig::default() };
    let cascade = run_simulation(&world.net, &world.ids, &spec, &cfg)?;
    let mut out = Vec::new();
    cascade.write_jsonl(&world.net, Some("#example"), &mut out)?;
    let text = String::from_utf8(out).unwrap();
    println!("\nfirst JSONL lines:");
    for line in text.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
