use voluma::distributions::DistributionModel;

/// Brute force: evaluate |F_n - F| on either side of every distinct sample
/// value, counting the empirical CDF from scratch each time.
pub fn ks_brute(samples: &[f64], model: &DistributionModel) -> f64 {
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for &x in samples {
        let below = samples.iter().filter(|v| **v < x).count() as f64 / n;
        let at = samples.iter().filter(|v| **v <= x).count() as f64 / n;
        let f = model.cdf(x);
        d = d.max((f - below).abs()).max((at - f).abs());
    }
    d
}
