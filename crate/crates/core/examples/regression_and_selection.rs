//! Interaction regression and the random-forest model selector on a
//! synthetic covariate corpus with known structure.

use cascadelab::cmi::{compose_cmi, Pooling};
use cascadelab::engine::Variant;
use cascadelab::experiment::{
    combined_models, fit_interaction_regression, CovariateTable, ForestParams, RegressionObservation,
};
use cascadelab::metrics::{MetricRecord, MetricVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

fn main() -> cascadelab::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let n = 120;
    let table = CovariateTable {
        hashtags: (0..n).map(|i| format!("#h{i}")).collect(),
        names: vec!["seed_similarity".into(), "noise".into()],
        rows: (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect(),
    }
    .standardized();

    // network-only gains less from seed similarity than the others
    let mut obs = Vec::new();
    for (h, row) in table.hashtags.iter().zip(&table.rows) {
        for model in Variant::ALL {
            let net_only = f64::from(u8::from(model == Variant::NetworkOnly));
            let cmi = 0.5 * row[0] - 0.3 * row[0] * net_only + rng.random_range(-0.02..0.02);
            obs.push(RegressionObservation { hashtag: h.clone(), model, cmi });
        }
    }
    let fit = fit_interaction_regression(&table, &obs)?;
    for c in &fit.coefficients {
        println!("{:>34} {:+.3} (se {:.3})", c.name, c.estimate, c.std_error.unwrap_or(f64::NAN));
    }

    // the better model flips with the first covariate
    let mut records = Vec::new();
    for (h, row) in table.hashtags.iter().zip(&table.rows) {
        for (model, good) in [("network-only", row[0] > 0.0), ("identity-only", row[0] <= 0.0)] {
            let err = if good { 0.1 } else { 0.5 };
            records.push(MetricRecord {
                hashtag: h.clone(),
                model: model.into(),
                run: 0,
                metrics: MetricVector { values: [Some(err); 10] },
            });
        }
    }
    let report = compose_cmi(&records, Pooling::Corpus)?;
    let combined = combined_models(&report, &table, 5, 3, &ForestParams::default(), 3)?;
    println!(
        "\nselector accuracy {:.3} (majority baseline {:.3})",
        combined.accuracy, combined.majority_baseline
    );
    println!(
        "mean cmi: optimal {:+.3}, predicted {:+.3}, singles {:?}",
        combined.optimal_mean_cmi, combined.predicted_mean_cmi, combined.model_mean_cmi
    );
    Ok(())
}
