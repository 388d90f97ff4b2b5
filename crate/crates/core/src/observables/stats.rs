use serde::Serialize;

use crate::error::{Error, Result};

/// Fewest samples accepted by [`gaussianity_stats`].
pub const MIN_MOMENT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `(mean - target) / se`; infinite when `se = 0` and the mean misses the target.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if self.se > 0.0 {
            d / self.se
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// Sample mean with the iid standard error `s / sqrt(n)`.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Estimate { mean, se: f64::NAN };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate { mean, se: (var / n).sqrt() }
}

/// Mean of a correlated series with the standard error from `batches` contiguous batch means.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> Estimate {
    let b = batches.clamp(2, xs.len().max(2));
    let len = xs.len() / b;
    if len == 0 {
        return mean_se(xs);
    }
    let means: Vec<f64> = (0..b).map(|k| xs[k * len..(k + 1) * len].iter().sum::<f64>() / len as f64).collect();
    let e = mean_se(&means);
    Estimate { mean: xs.iter().sum::<f64>() / xs.len() as f64, se: e.se }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianityStats {
    pub n: usize,
    pub mean: f64,
    pub se_mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub se_variance: f64,
    /// Adjusted Fisher-Pearson skewness; `None` for a constant sample.
    pub skewness: Option<f64>,
    pub se_skewness: Option<f64>,
    /// Bias-corrected excess kurtosis; `None` for a constant sample.
    pub excess_kurtosis: Option<f64>,
    pub se_kurtosis: Option<f64>,
}

#[derive(Clone, Copy)]
struct Sums {
    n: f64,
    s: [f64; 4],
}

impl Sums {
    fn moments(&self) -> (f64, f64, f64, f64) {
        let n = self.n;
        let [s1, s2, s3, s4] = self.s.map(|v| v / n);
        let m = s1;
        let m2 = s2 - m * m;
        let m3 = s3 - 3.0 * m * s2 + 2.0 * m.powi(3);
        let m4 = s4 - 4.0 * m * s3 + 6.0 * m * m * s2 - 3.0 * m.powi(4);
        (m, m2, m3, m4)
    }

    fn variance(&self) -> f64 {
        let (_, m2, _, _) = self.moments();
        m2 * self.n / (self.n - 1.0)
    }

    fn skewness(&self) -> Option<f64> {
        let n = self.n;
        let (_, m2, m3, _) = self.moments();
        (m2 > 0.0).then(|| (n * (n - 1.0)).sqrt() / (n - 2.0) * m3 / m2.powf(1.5))
    }

    fn kurtosis(&self) -> Option<f64> {
        let n = self.n;
        let (_, m2, _, m4) = self.moments();
        (m2 > 0.0).then(|| {
            let g2 = m4 / (m2 * m2) - 3.0;
            (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0)
        })
    }
}

fn jackknife_se(full: &Sums, ys: &[f64], stat: impl Fn(&Sums) -> Option<f64>) -> Option<f64> {
    let n = ys.len() as f64;
    let mut loo = Vec::with_capacity(ys.len());
    for &y in ys {
        let mut s = *full;
        s.n -= 1.0;
        let mut p = 1.0;
        for k in 0..4 {
            p *= y;
            s.s[k] -= p;
        }
        loo.push(stat(&s)?);
    }
    let bar = loo.iter().sum::<f64>() / n;
    Some(((n - 1.0) / n * loo.iter().map(|v| (v - bar).powi(2)).sum::<f64>()).sqrt())
}

/// Mean, variance, skewness and excess kurtosis with jackknife standard errors.
pub fn gaussianity_stats(samples: &[f64]) -> Result<GaussianityStats> {
    if samples.len() < MIN_MOMENT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "moment statistics need at least {MIN_MOMENT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let base = mean_se(samples);
    // Power sums of the centred data keep the leave-one-out updates well conditioned.
    let ys: Vec<f64> = samples.iter().map(|x| x - base.mean).collect();
    let mut full = Sums { n: ys.len() as f64, s: [0.0; 4] };
    for &y in &ys {
        let mut p = 1.0;
        for k in 0..4 {
            p *= y;
            full.s[k] += p;
        }
    }
    let variance = full.variance().max(0.0);
    let skewness = full.skewness();
    let excess_kurtosis = full.kurtosis();
    let se_variance = jackknife_se(&full, &ys, |s| Some(s.variance())).unwrap_or(0.0);
    let (se_skewness, se_kurtosis) = if variance > 0.0 {
        (jackknife_se(&full, &ys, Sums::skewness), jackknife_se(&full, &ys, Sums::kurtosis))
    } else {
        (None, None)
    };
    Ok(GaussianityStats {
        n: samples.len(),
        mean: base.mean,
        se_mean: base.se,
        variance,
        se_variance,
        skewness,
        se_skewness,
        excess_kurtosis,
        se_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_sample_has_no_shape() {
        let s = gaussianity_stats(&[2.5; 200]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert!(s.skewness.is_none() && s.excess_kurtosis.is_none());
        assert!(gaussianity_stats(&[1.0; 99]).is_err());
    }

    #[test]
    fn normal_draws_look_normal() {
        let mut rng = crate::particles::replica_rng(11, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = gaussianity_stats(&xs).unwrap();
        assert!(s.skewness.unwrap().abs() <= 3.0 * s.se_skewness.unwrap());
        assert!(s.excess_kurtosis.unwrap().abs() <= 3.0 * s.se_kurtosis.unwrap());
        assert!((s.variance - 1.0).abs() <= 3.0 * s.se_variance);
    }

    #[test]
    fn bernoulli_variance() {
        let mut rng = crate::particles::replica_rng(12, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| if rng.random::<f64>() < 0.3 { 0.7 } else { -0.3 }).collect();
        let s = gaussianity_stats(&xs).unwrap();
        assert!((s.variance - 0.21).abs() <= 3.0 * s.se_variance);
    }

    #[test]
    fn jackknife_matches_naive_recomputation() {
        let xs: Vec<f64> = (0..120).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let s = gaussianity_stats(&xs).unwrap();
        let loo: Vec<f64> = (0..xs.len())
            .map(|i| {
                let v: Vec<f64> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
            })
            .collect();
        let n = xs.len() as f64;
        let bar = loo.iter().sum::<f64>() / n;
        let se = ((n - 1.0) / n * loo.iter().map(|v| (v - bar).powi(2)).sum::<f64>()).sqrt();
        assert!((se - s.se_variance).abs() < 1e-10 * se);
    }

    #[test]
    fn batch_means_on_iid_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i % 7) as f64).collect();
        let e = batch_mean_se(&xs, 20);
        assert!((e.mean - mean_se(&xs).mean).abs() < 1e-12);
        assert!(e.se > 0.0);
        assert_eq!(Estimate { mean: 1.0, se: 0.0 }.z_score(1.0), 0.0);
    }
}
