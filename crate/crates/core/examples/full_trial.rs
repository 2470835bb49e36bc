//! The trial protocol over a small batch of planted hashtags: fit each
//! model once, run it five times, score, and compose the index.

use cascadelab::cmi::{compose_cmi, Pooling};
use cascadelab::engine::{SimulationConfig, Variant};
use cascadelab::experiment::{batch_records, run_trials, train_size_model, write_trials_csv, TrialConfig, TrialContext};
use cascadelab::metrics::SizeModelKind;
use cascadelab::worldio::{generate_world, plant_cascade, sample_seed_group, Hashtag, SynthWorldParams};

fn main() -> cascadelab::Result<()> {
    let world = generate_world(&SynthWorldParams {
        blocks: 6,
        nodes_per_block: 100,
        ..SynthWorldParams::default()
    })?
    .world;
    let hashtags = (0..6u64)
        .map(|i| {
            let tag = format!("#h{i}");
            let seeds = sample_seed_group(&world.net, 10, 100 + i)?;
            let cfg = SimulationConfig { rng_seed: i, ..SimulationConfig::default() };
            let planted = plant_cascade(&world, &tag, seeds, Variant::NetworkIdentity, 0.3 + 0.1 * i as f64, &cfg)?;
            Hashtag::from_cascade(&world, &tag, planted.cascade, 1.0)
        })
        .collect::<cascadelab::Result<Vec<_>>>()?;

    let mut ctx = TrialContext::new(&world, 0)?;
    ctx.size_model = Some(train_size_model(&world, &hashtags, SizeModelKind::Ridge { lambda: 1.0 }, 0)?);
    let cfg = TrialConfig { master_seed: 7, ..TrialConfig::default() };
    let trials = run_trials(&ctx, &hashtags, &cfg)?;
    let report = compose_cmi(&batch_records(&trials), Pooling::Corpus)?;

    for t in &trials {
        let fits: Vec<String> = t
            .models
            .iter()
            .map(|m| format!("{}={:.2}", m.model, m.calibration.as_ref().map_or(f64::NAN, |c| c.stickiness)))
            .collect();
        println!("{}: {} uses; fitted {}", t.hashtag, t.empirical_uses, fits.join(", "));
    }
    for (model, mean) in report.mean_by_model() {
        println!("mean cmi {model:>17}: {mean:+.3}");
    }
    let mut csv = Vec::new();
    write_trials_csv(&trials, Some(&report), &mut csv)?;
    println!("\n{}", String::from_utf8_lossy(&csv).lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
