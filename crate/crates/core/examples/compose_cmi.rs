//! Pool metric rows into the composite index.

use cascadelab::cmi::{compose_cmi, Pooling};
use cascadelab::metrics::{MetricRecord, MetricVector};

fn row(hashtag: &str, model: &str, run: usize, v: [f64; 10]) -> MetricRecord {
    MetricRecord {
        hashtag: hashtag.into(),
        model: model.into(),
        run,
        metrics: MetricVector { values: v.map(Some) },
    }
}

fn main() -> cascadelab::Result<()> {
    // m9 is a similarity (higher is better); every other metric is an error
    let records = vec![
        row("#a", "good", 0, [0.1, 0.1, 0.2, 0.05, 0.1, 0.2, 0.1, 0.01, 0.8, 0.02]),
        row("#a", "poor", 0, [0.9, 0.5, 0.6, 0.30, 0.4, 0.9, 0.5, 0.20, 0.1, 0.30]),
        row("#b", "good", 0, [0.2, 0.1, 0.1, 0.10, 0.2, 0.1, 0.2, 0.02, 0.7, 0.05]),
        row("#b", "poor", 0, [0.3, 0.4, 0.2, 0.20, 0.2, 0.5, 0.3, 0.10, 0.3, 0.10]),
    ];
    for pooling in [Pooling::Corpus, Pooling::PerHashtag] {
        let report = compose_cmi(&records, pooling)?;
        println!("{pooling:?} pooling:");
        for r in &report.rows {
            println!("  {} {:<4} cmi {:+.3}", r.hashtag, r.model, r.cmi.unwrap());
        }
        for (model, mean) in report.mean_by_model() {
            println!("  mean {model}: {mean:+.3}");
        }
    }
    compose_cmi(&records, Pooling::Corpus)?.write_csv(std::io::stdout().lock())
}
