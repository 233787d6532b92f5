//! Kolmogorov–Smirnov distances.

/// `sup_x |F_n(x) - F(x)|` for the empirical distribution of `xs`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    assert!(!xs.is_empty(), "KS statistic of an empty sample");
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut stat: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        let below = i as f64 / n;
        let at = j as f64 / n;
        stat = stat.max((at - f).abs()).max((f - below).abs());
        i = j;
    }
    stat.min(1.0)
}

/// `sup_x |F_n(x) - G_m(x)|` for two empirical distributions.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(
        !xs.is_empty() && !ys.is_empty(),
        "KS statistic of an empty sample"
    );
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut stat: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        stat = stat.max((i as f64 / n - j as f64 / m).abs());
    }
    stat
}

/// Asymptotic two-sample critical value `c sqrt((n + m) / (n m))`; `c = 1.628`
/// is the 1% level.
pub fn ks_two_sample_critical(n: usize, m: usize, c: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;
    use crate::wishart::{edge_cdf, edge_quantile};

    #[test]
    fn self_consistent_one_sample() {
        let mut rng = TrialRng::from_seed(1);
        let xs: Vec<f64> = (0..10_000).map(|_| edge_quantile(rng.uniform())).collect();
        assert!(ks_one_sample(&xs, edge_cdf) <= 0.03);
    }

    #[test]
    fn maximal_mismatch() {
        assert_eq!(ks_one_sample(&[0.0; 5], |x: f64| x.clamp(0.0, 1.0)), 1.0);
    }

    #[test]
    fn single_point_at_median() {
        assert_eq!(ks_one_sample(&[0.5], |x: f64| x.clamp(0.0, 1.0)), 0.5);
    }

    #[test]
    fn two_sample_trivia() {
        let xs = [1.0, 2.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
        assert_eq!(ks_two_sample(&xs, &[4.0, 5.0]), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.5]), 0.5);
    }

    #[test]
    fn two_sample_null_rejection_rate() {
        let crit = ks_two_sample_critical(500, 500, 1.628);
        assert!((crit - 0.103).abs() < 5e-4);
        let mut rng = TrialRng::from_seed(2);
        let mut pass = 0;
        for _ in 0..200 {
            let xs: Vec<f64> = (0..500).map(|_| rng.gaussian()).collect();
            let ys: Vec<f64> = (0..500).map(|_| rng.gaussian()).collect();
            if ks_two_sample(&xs, &ys) <= crit {
                pass += 1;
            }
        }
        assert!(pass >= 190, "{pass}/200");
    }
}
