//! Plant a cascade at a known stickiness and recover it by grid search.

use cascadelab::calibrate::fit_stickiness;
use cascadelab::engine::{SimulationConfig, Variant};
use cascadelab::worldio::{generate_world, plant_cascade, sample_seed_group, SynthWorldParams};

fn main() -> cascadelab::Result<()> {
    let world = generate_world(&SynthWorldParams {
        blocks: 10,
        nodes_per_block: 200,
        intra_p: 0.04,
        inter_p: 0.001,
        ..SynthWorldParams::default()
    })?
    .world;
    let truth = 0.42;
    let seeds = sample_seed_group(&world.net, 10, 3)?;
    let cfg = SimulationConfig { rng_seed: 5, ..SimulationConfig::default() };
    let planted = plant_cascade(&world, "#planted", seeds, Variant::NetworkIdentity, truth, &cfg)?;
    println!("planted S_h = {truth}: {} uses", planted.cascade.uses());

    let fit = fit_stickiness(&world.net, &world.ids, &planted.spec, &cfg, 99)?;
    println!(
        "fitted S_h = {:.2} (objective {:.4}, coarse interval {:.1}..{:.1}, {} runs)",
        fit.stickiness, fit.objective, fit.coarse_interval.0, fit.coarse_interval.1, fit.evaluations
    );
    fit.write_trace_csv(std::io::stdout().lock())?;
    Ok(())
}
