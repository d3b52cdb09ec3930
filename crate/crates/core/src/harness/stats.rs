//! Trend statistics used to summarize runs.

/// Ranks starting at 1, ties get the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` if either series is constant or lengths differ.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Normalized circular autocorrelation of `x` at `lag`.
pub fn circular_autocorrelation(x: &[f64], lag: usize) -> Option<f64> {
    let n = x.len();
    if n == 0 {
        return None;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let var: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if !(var > 0.0) {
        return None;
    }
    let cov: f64 = (0..n).map(|i| (x[i] - m) * (x[(i + lag) % n] - m)).sum();
    Some(cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_known_values() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let sq: Vec<f64> = t.iter().map(|v| v * v).collect();
        assert!((spearman(&t, &sq).unwrap() - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = t.iter().rev().copied().collect();
        assert!((spearman(&t, &rev).unwrap() + 1.0).abs() < 1e-15);
        // d = [0, 0, 1, -1] -> 1 - 6*2/(4*15) = 0.8
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&t, &[1.0; 10]), None);
    }

    #[test]
    fn autocorrelation_of_periodic_series() {
        let x: Vec<f64> = (0..100).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 50.0).sin()).collect();
        assert!((circular_autocorrelation(&x, 50).unwrap() - 1.0).abs() < 1e-12);
        assert!((circular_autocorrelation(&x, 25).unwrap() + 1.0).abs() < 1e-12);
        assert!((circular_autocorrelation(&x, 0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(circular_autocorrelation(&[3.0; 5], 1), None);
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_maps(x in proptest::collection::vec(-10.0f64..10.0, 3..40), y in proptest::collection::vec(-10.0f64..10.0, 40)) {
            let y = &y[..x.len()];
            let a = spearman(&x, y);
            let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let b = spearman(&ex, y);
            match (a, b) {
                (Some(a), Some(b)) => {
                    prop_assert!((a - b).abs() < 1e-12);
                    prop_assert!(a.abs() <= 1.0 + 1e-12);
                }
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn autocorrelation_bounded(x in proptest::collection::vec(-5.0f64..5.0, 2..60), lag in 0usize..100) {
            if let Some(r) = circular_autocorrelation(&x, lag) {
                prop_assert!(r.abs() <= 1.0 + 1e-12);
            }
        }
    }
}
