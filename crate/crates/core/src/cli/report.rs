use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::cmi::CmiReport;
use crate::experiment::CovariateRow;
use crate::worldio::Hashtag;
use crate::Result;

#[derive(Default)]
struct Acc {
    values: Vec<f64>,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.values.push(v);
    }

    /// `(n, mean, standard error)`; the error is empty below two values.
    fn summary(&self) -> (usize, f64, Option<f64>) {
        let n = self.values.len();
        let mean = self.values.iter().sum::<f64>() / n as f64;
        let se = (n > 1).then(|| {
            let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        (n, mean, se)
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Quintile (1..=5) of each value by rank, ties broken by position.
fn quintiles(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut q = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        q[i] = rank * 5 / values.len() + 1;
    }
    q
}

/// Writes the summary tables and returns their file names.
pub(super) fn write_reports(
    report: &CmiReport,
    extra: Option<(&[CovariateRow], &[Hashtag])>,
    dir: &Path,
) -> Result<Vec<&'static str>> {
    let mut written = Vec::new();

    let mut by_model: BTreeMap<&str, [Acc; 4]> = BTreeMap::new();
    for r in &report.rows {
        let e = by_model.entry(r.model.as_str()).or_default();
        for (acc, v) in e.iter_mut().zip([r.cmi, r.popularity, r.growth, r.adopters]) {
            if let Some(v) = v {
                acc.push(v);
            }
        }
    }
    let mut w = writer(dir, "cmi_by_model.csv")?;
    w.write_record(["model", "n", "cmi_mean", "cmi_se", "popularity_mean", "growth_mean", "adopters_mean"])?;
    for (model, accs) in &by_model {
        if accs[0].values.is_empty() {
            continue;
        }
        let (n, mean, se) = accs[0].summary();
        let group = |a: &Acc| (!a.values.is_empty()).then(|| a.summary().1);
        w.write_record([
            model.to_string(),
            n.to_string(),
            mean.to_string(),
            fmt(se),
            fmt(group(&accs[1])),
            fmt(group(&accs[2])),
            fmt(group(&accs[3])),
        ])?;
    }
    w.flush()?;
    written.push("cmi_by_model.csv");

    let per_pair = report.mean_by_hashtag_model();
    let mut w = writer(dir, "cmi_by_hashtag_model.csv")?;
    w.write_record(["hashtag", "model", "cmi_mean"])?;
    for ((h, m), c) in &per_pair {
        w.write_record([h.as_str(), m.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    written.push("cmi_by_hashtag_model.csv");

    let Some((rows, hashtags)) = extra else {
        return Ok(written);
    };
    let models: Vec<&str> = by_model.keys().copied().collect();

    // (covariate, level) -> per model accumulator
    let mut levels: BTreeMap<(String, String), BTreeMap<&str, Acc>> = BTreeMap::new();
    let mut add = |cov: &str, level: String, tag: &str| {
        for &m in &models {
            if let Some(&c) = per_pair.get(&(tag.to_string(), m.to_string())) {
                levels
                    .entry((cov.to_string(), level.clone()))
                    .or_default()
                    .entry(m)
                    .or_default()
                    .push(c);
            }
        }
    };
    let mut numeric: Vec<(String, Vec<f64>)> = Vec::new();
    if rows.iter().all(|r| r.semantic_sparsity.is_some()) {
        numeric.push(("semantic_sparsity".into(), rows.iter().map(|r| f64::from(r.semantic_sparsity.unwrap())).collect()));
    }
    if rows.iter().all(|r| r.semantic_growth.is_some()) {
        numeric.push(("semantic_growth".into(), rows.iter().map(|r| r.semantic_growth.unwrap()).collect()));
    }
    if let Some(first) = rows.first() {
        for (j, (cat, _)) in first.seed_similarity.iter().enumerate() {
            numeric.push((format!("seed_similarity_{cat}"), rows.iter().map(|r| r.seed_similarity[j].1).collect()));
        }
    }
    numeric.push(("seed_proximity".into(), rows.iter().map(|r| r.seed_proximity).collect()));
    numeric.push((
        "median_seed_eigencentrality".into(),
        rows.iter().map(|r| r.median_seed_eigencentrality).collect(),
    ));
    for (name, values) in &numeric {
        for (r, q) in rows.iter().zip(quintiles(values)) {
            add(name, format!("q{q}"), &r.hashtag);
        }
    }
    for r in rows {
        if let Some(t) = &r.topic {
            add("topic", t.clone(), &r.hashtag);
        }
    }
    let mut w = writer(dir, "cmi_by_covariate_level.csv")?;
    w.write_record(["covariate", "level", "model", "n", "cmi_mean", "cmi_se"])?;
    for ((cov, level), per_model) in &levels {
        for (m, acc) in per_model {
            let (n, mean, se) = acc.summary();
            w.write_record([cov.as_str(), level.as_str(), m, &n.to_string(), &mean.to_string(), &fmt(se)])?;
        }
    }
    w.flush()?;
    written.push("cmi_by_covariate_level.csv");

    let sizes: Vec<f64> = hashtags
        .iter()
        .map(|h| h.spec.empirical_size as f64 / h.spec.sample_rate)
        .collect();
    let q = quintiles(&sizes);
    let mut bins: BTreeMap<usize, (f64, f64, BTreeMap<&str, Acc>)> = BTreeMap::new();
    for ((h, &s), &qi) in hashtags.iter().zip(&sizes).zip(&q) {
        let e = bins.entry(qi).or_insert((f64::INFINITY, f64::NEG_INFINITY, BTreeMap::new()));
        e.0 = e.0.min(s);
        e.1 = e.1.max(s);
        for &m in &models {
            if let Some(&c) = per_pair.get(&(h.spec.tag.clone(), m.to_string())) {
                e.2.entry(m).or_default().push(c);
            }
        }
    }
    let mut w = writer(dir, "cmi_by_size_quintile.csv")?;
    w.write_record(["quintile", "size_lo", "size_hi", "model", "n", "cmi_mean", "cmi_se"])?;
    for (qi, (lo, hi, per_model)) in &bins {
        for (m, acc) in per_model {
            let (n, mean, se) = acc.summary();
            w.write_record([
                qi.to_string(),
                lo.to_string(),
                hi.to_string(),
                m.to_string(),
                n.to_string(),
                mean.to_string(),
                fmt(se),
            ])?;
        }
    }
    w.flush()?;
    written.push("cmi_by_size_quintile.csv");
    Ok(written)
}
