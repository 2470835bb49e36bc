//! Score simulated cascades against an observed one with all ten metrics.

use cascadelab::engine::{SimulationConfig, Variant};
use cascadelab::graph::{node_position_features, PositionOptions};
use cascadelab::metrics::{compute_metrics, MetricContext};
use cascadelab::worldio::{generate_world, plant_cascade, sample_seed_group, SynthWorldParams};

fn main() -> cascadelab::Result<()> {
    let world = generate_world(&SynthWorldParams::default())?.world;
    let positions = node_position_features(&world.net, &PositionOptions::default())?;
    let ctx = MetricContext::new(&world.net, &world.ids, &world.regions, &positions);

    let seeds = sample_seed_group(&world.net, 10, 1)?;
    let observed = plant_cascade(
        &world,
        "#obs",
        seeds.clone(),
        Variant::NetworkIdentity,
        0.5,
        &SimulationConfig::default(),
    )?;
    println!("observed: {} uses", observed.cascade.uses());
    println!("{:>17} {:>6}  m1..m10", "model", "uses");
    for variant in Variant::ALL {
        let cfg = SimulationConfig { rng_seed: 3, ..SimulationConfig::default() };
        let sim = plant_cascade(&world, "#sim", seeds.clone(), variant, 0.5, &cfg)?;
        let m = compute_metrics(&sim.cascade, &observed.cascade, &ctx)?;
        let cells: Vec<String> = m
            .values
            .iter()
            .map(|v| v.map_or("  --  ".into(), |x| format!("{x:6.3}")))
            .collect();
        println!("{variant:>17} {:>6}  {}", sim.cascade.uses(), cells.join(" "));
    }
    println!("(m7 needs a trained size model; see full_trial)");
    Ok(())
}
