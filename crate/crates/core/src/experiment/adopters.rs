use std::collections::HashSet;

use crate::{Error, Result};

/// Start of a hashtag's cascade and its initial adopters.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStart {
    pub start_time: f64,
    pub seeds: Vec<usize>,
}

/// Splits time-sorted `(agent, time)` uses into periods separated by gaps
/// of at least `max_gap`, picks the first period with at least `min_burst`
/// uses, and returns the first `seed_count` distinct agents from its start
/// onward. Fewer seeds are returned when fewer agents remain.
pub fn detect_initial_adopters(
    usage: &[(usize, f64)],
    min_burst: usize,
    max_gap: f64,
    seed_count: usize,
) -> Result<CascadeStart> {
    if usage.windows(2).any(|w| w[0].1 > w[1].1) {
        return Err(Error::invalid("usage events are not sorted by time"));
    }
    if usage.iter().any(|e| !e.1.is_finite()) {
        return Err(Error::invalid("usage event with non-finite time"));
    }
    if !(max_gap > 0.0) || seed_count == 0 {
        return Err(Error::invalid("max_gap and seed_count must be positive"));
    }
    let mut start = 0;
    while start < usage.len() {
        let mut end = start + 1;
        while end < usage.len() && usage[end].1 - usage[end - 1].1 < max_gap {
            end += 1;
        }
        if end - start >= min_burst.max(1) {
            let mut seen = HashSet::new();
            let seeds = usage[start..]
                .iter()
                .filter(|e| seen.insert(e.0))
                .map(|e| e.0)
                .take(seed_count)
                .collect();
            return Ok(CascadeStart {
                start_time: usage[start].1,
                seeds,
            });
        }
        start = end;
    }
    Err(Error::invalid(format!(
        "no cascade start: no period with {min_burst} uses"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_dense_burst() {
        let usage: Vec<(usize, f64)> = (0..150).map(|i| (i % 40, 5.0 + i as f64)).collect();
        let s = detect_initial_adopters(&usage, 100, 30.0, 10).unwrap();
        assert_eq!(s.start_time, 5.0);
        assert_eq!(s.seeds, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn skips_a_small_first_burst() {
        let mut usage: Vec<(usize, f64)> = (0..50).map(|i| (i, i as f64)).collect();
        usage.extend((0..120).map(|i| (1000 + i % 7, 500.0 + i as f64)));
        let s = detect_initial_adopters(&usage, 100, 30.0, 10).unwrap();
        assert_eq!(s.start_time, 500.0);
        assert_eq!(s.seeds, (1000..1007).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_uses() {
        let usage: Vec<(usize, f64)> = (0..30).map(|i| (i, i as f64)).collect();
        let err = detect_initial_adopters(&usage, 100, 30.0, 10).unwrap_err();
        assert!(err.to_string().contains("no cascade start"));
        assert!(detect_initial_adopters(&[(0, 2.0), (1, 1.0)], 1, 1.0, 1).is_err());
    }
}
