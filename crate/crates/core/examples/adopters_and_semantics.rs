//! Cascade-start detection from raw usage and semantic covariates from
//! precomputed embeddings.

use std::collections::HashMap;

use cascadelab::experiment::{detect_initial_adopters, semantic_covariates};

fn main() -> cascadelab::Result<()> {
    // a short early burst, a long gap, then the real take-off
    let mut usage: Vec<(usize, f64)> = (0..40).map(|i| (i, i as f64 * 0.5)).collect();
    usage.extend((0..300).map(|i| (100 + i % 60, 200.0 + i as f64 * 0.1)));
    let start = detect_initial_adopters(&usage, 100, 30.0, 10)?;
    println!("cascade starts at t={}, seeds {:?}", start.start_time, start.seeds);

    let embeddings: HashMap<String, Vec<f64>> = [
        ("#climatestrike", vec![0.9, 0.1, 0.0]),
        ("climate", vec![0.8, 0.2, 0.1]),
        ("strike", vec![0.7, 0.0, 0.3]),
        ("football", vec![0.0, 1.0, 0.0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let freq: HashMap<String, Vec<f64>> = [
        ("climate", vec![10.0, 12.0, 15.0, 30.0]),
        ("strike", vec![5.0, 4.0, 8.0, 9.0]),
        ("football", vec![50.0, 40.0, 30.0, 20.0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let s = semantic_covariates(&embeddings, &freq, "#climatestrike", 0.3)?;
    println!("semantic sparsity {}, growth {:+.2}", s.sparsity, s.growth);
    Ok(())
}
