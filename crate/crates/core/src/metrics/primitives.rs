use crate::{Error, Result};

/// `|log10(sim * sample_rate / emp)|`.
pub fn log_ratio_error(sim: f64, emp: f64, sample_rate: f64) -> Result<f64> {
    if !(sim > 0.0 && emp > 0.0) {
        return Err(Error::invalid(format!("log-ratio error needs positive values, got {sim} and {emp}")));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    Ok((sim * sample_rate / emp).log10().abs())
}

/// `|sim - emp| / |emp|`.
pub fn relative_error(sim: f64, emp: f64) -> Result<f64> {
    if emp == 0.0 || !emp.is_finite() || !sim.is_finite() {
        return Err(Error::invalid(format!("relative error undefined for {sim} vs {emp}")));
    }
    Ok((sim - emp).abs() / emp.abs())
}

/// Dynamic time warping with absolute-difference cost and no window.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("DTW needs two non-empty sequences"));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = (x - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Sum a series into `bins` consecutive intervals; element `i` lands in
/// interval `floor(i * bins / len)`.
pub fn rebin(series: &[f64], bins: usize) -> Vec<f64> {
    let len = series.len();
    let mut out = vec![0.0; bins];
    if bins == 0 {
        return out;
    }
    for (i, &x) in series.iter().enumerate() {
        out[i * bins / len] += x;
    }
    out
}

/// Length of the prefix kept by the stopping rule: the series is cut after
/// the first step `t >= max(warmup, window)` at which cumulative volume grew
/// by less than `growth` over the preceding `window` steps.
pub fn stop_rule_length(series: &[f64], warmup: usize, window: usize, growth: f64) -> usize {
    let mut cumulative = Vec::with_capacity(series.len());
    let mut total = 0.0;
    for (t, &x) in series.iter().enumerate() {
        total += x;
        cumulative.push(total);
        if t >= warmup && t >= window && window > 0 {
            let before = cumulative[t - window];
            if total - before < growth * before {
                return t + 1;
            }
        }
    }
    series.len()
}

/// KL(p || q) between score histograms: `bins` equal-width bins on [0, 1],
/// each bin probability smoothed by `smoothing` and renormalized.
pub fn histogram_kl(p_scores: &[f64], q_scores: &[f64], bins: usize, smoothing: f64) -> Result<f64> {
    if p_scores.is_empty() || q_scores.is_empty() || bins == 0 {
        return Err(Error::invalid("histogram KL needs scores on both sides and at least one bin"));
    }
    let p = histogram(p_scores, bins, smoothing);
    let q = histogram(q_scores, bins, smoothing);
    Ok(p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0))
}

fn histogram(scores: &[f64], bins: usize, smoothing: f64) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    for &s in scores {
        let k = ((s.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let n = scores.len() as f64;
    let norm = 1.0 + bins as f64 * smoothing;
    counts.iter().map(|c| (c / n + smoothing) / norm).collect()
}

/// Sparse spatial weights: row `i` lists `(j, w_ij)`.
pub type SpatialWeights = Vec<Vec<(usize, f64)>>;

/// Lee's L bivariate spatial association.
pub fn lee_l(x: &[f64], y: &[f64], w: &SpatialWeights) -> Result<f64> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n {
        return Err(Error::invalid("Lee's L needs equal-length inputs over at least two regions"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let sx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy = y.iter().map(|a| (a - my).powi(2)).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::invalid("Lee's L undefined for a constant variable"));
    }
    let mut row_sq = 0.0;
    let mut cross = 0.0;
    for row in w {
        let mut rs = 0.0;
        let (mut lx, mut ly) = (0.0, 0.0);
        for &(j, wij) in row {
            if j >= n {
                return Err(Error::invalid(format!("spatial weight refers to region {j} of {n}")));
            }
            rs += wij;
            lx += wij * (x[j] - mx);
            ly += wij * (y[j] - my);
        }
        row_sq += rs * rs;
        cross += lx * ly;
    }
    if row_sq == 0.0 {
        return Err(Error::invalid("spatial weights are all zero"));
    }
    Ok(n as f64 / row_sq * cross / (sx * sy))
}

/// `L(x, y) / sqrt(L(x, x) L(y, y))`: Lee's L rescaled so a variable
/// compared with itself scores exactly 1.
pub fn lee_l_normalized(x: &[f64], y: &[f64], w: &SpatialWeights) -> Result<f64> {
    let lxy = lee_l(x, y, w)?;
    let lxx = lee_l(x, x, w)?;
    let lyy = lee_l(y, y, w)?;
    if !(lxx > 0.0 && lyy > 0.0) {
        return Err(Error::invalid("spatially smoothed variable has no variance"));
    }
    Ok((lxy / (lxx * lyy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn identity_weights(n: usize) -> SpatialWeights {
        (0..n).map(|i| vec![(i, 1.0)]).collect()
    }

    /// All warping paths of two short sequences, by recursion.
    fn brute_dtw(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
        let c = (a[i] - b[j]).abs();
        if i == 0 && j == 0 {
            return c;
        }
        let mut best = f64::INFINITY;
        if i > 0 {
            best = best.min(brute_dtw(a, b, i - 1, j));
        }
        if j > 0 {
            best = best.min(brute_dtw(a, b, i, j - 1));
        }
        if i > 0 && j > 0 {
            best = best.min(brute_dtw(a, b, i - 1, j - 1));
        }
        c + best
    }

    #[test]
    fn log_ratio_cases() {
        let two = 2f64.log10();
        assert!((log_ratio_error(5000.0, 1000.0, 0.1).unwrap() - two).abs() < 1e-12);
        assert!((log_ratio_error(20000.0, 1000.0, 0.1).unwrap() - two).abs() < 1e-12);
        assert!(log_ratio_error(10000.0, 1000.0, 0.1).unwrap().abs() < 1e-12);
        assert!(log_ratio_error(0.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn relative_error_cases() {
        assert!((relative_error(3.3, 3.0).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(relative_error(4.0, 4.0).unwrap(), 0.0);
        assert_eq!(relative_error(0.0, 2.0).unwrap(), 1.0);
        assert!(relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn dtw_cases() {
        assert_eq!(dtw_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(dtw_distance(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(dtw_distance(&[0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(dtw_distance(&[], &[1.0]).is_err());
    }

    #[test]
    fn lee_cases() {
        let x = [1.0, 4.0, 2.0, 7.0];
        assert!((lee_l(&x, &x, &identity_weights(4)).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((lee_l(&x, &neg, &identity_weights(4)).unwrap() + 1.0).abs() < 1e-12);

        // 2x2 grid, rook adjacency, row-standardized: each cell has two
        // neighbors of weight 1/2
        let w: SpatialWeights = vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(0, 0.5), (3, 0.5)],
            vec![(0, 0.5), (3, 0.5)],
            vec![(1, 0.5), (2, 0.5)],
        ];
        let y = [2.0, 1.0, 3.0, 6.0];
        // x mean 3.5, deviations (-2.5, 0.5, -1.5, 3.5);
        // y mean 3.0, deviations (-1, -2, 0, 3)
        // lagged x: (-0.5, 0.5, 0.5, -0.5), lagged y: (-1, 1, 1, -1)
        // cross = 2; row sums all 1 so prefactor 4/4
        // sx = sqrt(6.25+0.25+2.25+12.25) = sqrt(21), sy = sqrt(14)
        let expected = 2.0 / (21f64.sqrt() * 14f64.sqrt());
        assert!((lee_l(&x, &y, &w).unwrap() - expected).abs() < 1e-12);
        assert!(lee_l(&[1.0, 1.0], &[1.0, 2.0], &identity_weights(2)).is_err());
        assert!((lee_l_normalized(&x, &x, &w).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_kl_oracle() {
        let p = [0.05, 0.15, 0.15, 0.95];
        let q = [0.05, 0.55, 0.95, 1.0];
        // bins of width 0.5: p -> [3, 1], q -> [1, 3]
        let eps = 1e-6;
        let pn: [f64; 2] = [(0.75 + eps) / (1.0 + 2.0 * eps), (0.25 + eps) / (1.0 + 2.0 * eps)];
        let qn: [f64; 2] = [(0.25 + eps) / (1.0 + 2.0 * eps), (0.75 + eps) / (1.0 + 2.0 * eps)];
        let expected: f64 = (0..2).map(|k| pn[k] * (pn[k] / qn[k]).ln()).sum();
        assert!((histogram_kl(&p, &q, 2, eps).unwrap() - expected).abs() < 1e-12);
        assert_eq!(histogram_kl(&p, &p, 20, eps).unwrap(), 0.0);
    }

    #[test]
    fn stop_rule_cuts_flat_tail() {
        let mut s = vec![5.0; 120];
        s.extend(vec![0.0; 80]);
        // at t = 128 the last 10 steps add 5 (index 119) against a base of
        // 595, below 1%
        assert_eq!(stop_rule_length(&s, 100, 10, 0.01), 129);
        assert_eq!(stop_rule_length(&[1.0; 50], 100, 10, 0.01), 50);
    }

    proptest! {
        #[test]
        fn dtw_matches_brute_force_and_is_symmetric(
            a in prop::collection::vec(-5.0f64..5.0, 1..6),
            b in prop::collection::vec(-5.0f64..5.0, 1..6),
        ) {
            let d = dtw_distance(&a, &b).unwrap();
            let brute = brute_dtw(&a, &b, a.len() - 1, b.len() - 1);
            prop_assert!((d - brute).abs() < 1e-9);
            prop_assert!((d - dtw_distance(&b, &a).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn rebin_preserves_mass(s in prop::collection::vec(0.0f64..10.0, 1..60), bins in 1usize..20) {
            let bins = bins.min(s.len());
            let r = rebin(&s, bins);
            prop_assert_eq!(r.len(), bins);
            prop_assert!((r.iter().sum::<f64>() - s.iter().sum::<f64>()).abs() < 1e-9);
        }

        #[test]
        fn normalized_lee_is_bounded(
            x in prop::collection::vec(0.0f64..1.0, 4),
            y in prop::collection::vec(0.0f64..1.0, 4),
        ) {
            let w: SpatialWeights = vec![
                vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)],
                vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (3, 1.0 / 3.0)],
                vec![(0, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 3.0)],
                vec![(1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 3.0)],
            ];
            if let Ok(l) = lee_l_normalized(&x, &y, &w) {
                prop_assert!((-1.0..=1.0).contains(&l));
            }
        }
    }
}
