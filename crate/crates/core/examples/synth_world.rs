//! Generate a homophilous block-model world, save it, and reload it.
//!
//! `cargo run --example synth_world -- [out_dir]`

use cascadelab::worldio::{generate_world, SynthWorldParams, World};

fn main() -> cascadelab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example_world".into());
    let params = SynthWorldParams {
        blocks: 8,
        nodes_per_block: 125,
        homophily: 0.8,
        rng_seed: 42,
        ..SynthWorldParams::default()
    };
    let generated = generate_world(&params)?;
    let world = &generated.world;
    let cross = world
        .net
        .edges()
        .filter(|&(s, d, _)| generated.blocks[s] != generated.blocks[d])
        .count();
    println!(
        "{} nodes, {} directed edges, {:.1}% across blocks",
        world.net.node_count(),
        world.net.edge_count(),
        100.0 * cross as f64 / world.net.edge_count() as f64
    );
    println!(
        "{} identity registers, {} regions",
        world.ids.dims(),
        world.regions.region_count()
    );

    let manifest = world.save(out.as_ref(), Some(&params))?;
    let (reloaded, _) = World::load(out.as_ref())?;
    assert_eq!(&reloaded, world);
    println!("saved to {out}, world hash {}", &manifest.world_hash()[..16]);
    Ok(())
}
