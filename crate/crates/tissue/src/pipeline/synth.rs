//! Seeded synthetic event streams: a Gaussian cluster mixture for normal
//! behaviour plus clearly separated anomalies for evaluation.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::RawEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub mean: Vec<f64>,
    pub std: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// Mixture description. Anomalies land on a shell around the mixture
/// centroid whose inner radius guarantees at least `anomaly_min_sigma`
/// mixture standard deviations of separation from every cluster mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub clusters: Vec<ClusterSpec>,
    pub anomaly_fraction: f64,
    #[serde(default = "default_anomaly_min_sigma")]
    pub anomaly_min_sigma: f64,
    #[serde(default = "default_anomaly_max_sigma")]
    pub anomaly_max_sigma: f64,
}

fn default_anomaly_min_sigma() -> f64 {
    5.0
}

fn default_anomaly_max_sigma() -> f64 {
    8.0
}

impl SynthConfig {
    pub fn dim(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.mean.len())
    }

    /// The mixture standard deviation used for anomaly separation: the
    /// largest cluster std.
    pub fn mixture_std(&self) -> f64 {
        self.clusters.iter().map(|c| c.std).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::config("synth.clusters must not be empty".to_string()));
        }
        let dim = self.clusters[0].mean.len();
        if dim == 0 {
            return Err(Error::config("synth cluster means must have at least one dimension".to_string()));
        }
        for (i, cluster) in self.clusters.iter().enumerate() {
            if cluster.mean.len() != dim {
                return Err(Error::config(format!(
                    "synth cluster {i} has dimension {}, expected {dim}",
                    cluster.mean.len()
                )));
            }
            if cluster.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::config(format!("synth cluster {i} has a non-finite mean")));
            }
            if !(cluster.std.is_finite() && cluster.std > 0.0) {
                return Err(Error::config(format!(
                    "synth cluster {i} std must be positive, got {}",
                    cluster.std
                )));
            }
            if !(cluster.weight.is_finite() && cluster.weight > 0.0) {
                return Err(Error::config(format!(
                    "synth cluster {i} weight must be positive, got {}",
                    cluster.weight
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.anomaly_fraction) {
            return Err(Error::config(format!(
                "synth.anomaly_fraction must be in [0,1], got {}",
                self.anomaly_fraction
            )));
        }
        if !(self.anomaly_min_sigma >= 5.0 && self.anomaly_min_sigma.is_finite()) {
            return Err(Error::config(format!(
                "synth.anomaly_min_sigma must be >= 5, got {}",
                self.anomaly_min_sigma
            )));
        }
        if !(self.anomaly_max_sigma >= self.anomaly_min_sigma && self.anomaly_max_sigma.is_finite()) {
            return Err(Error::config(
                "synth.anomaly_max_sigma must be >= anomaly_min_sigma".to_string(),
            ));
        }
        Ok(())
    }
}

/// Generate `n` labeled events, deterministic in `seed`.
///
/// Normals sample a weighted cluster, then a Gaussian around its mean.
/// Anomalies pick a uniform direction and a radius from the shell
/// `[min_sigma, max_sigma] * mixture_std + max distance centroid-to-mean`,
/// centered on the mixture centroid; the triangle inequality then keeps
/// them at least `min_sigma * mixture_std` away from every cluster mean.
pub fn generate(cfg: &SynthConfig, n: usize, seed: u64) -> Result<Vec<RawEvent>> {
    cfg.validate()?;
    let dim = cfg.dim();
    let sigma = cfg.mixture_std();
    let centroid: Vec<f64> = (0..dim)
        .map(|j| cfg.clusters.iter().map(|c| c.mean[j]).sum::<f64>() / cfg.clusters.len() as f64)
        .collect();
    let spread = cfg
        .clusters
        .iter()
        .map(|c| {
            c.mean.iter().zip(&centroid).map(|(m, c)| (m - c) * (m - c)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    let r_inner = cfg.anomaly_min_sigma * sigma + spread;
    let r_outer = cfg.anomaly_max_sigma * sigma + spread;
    let total_weight: f64 = cfg.clusters.iter().map(|c| c.weight).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let anomalous = rng.random::<f64>() < cfg.anomaly_fraction;
        let features = if anomalous {
            let direction = loop {
                let d: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    break d.into_iter().map(|v| v / norm).collect::<Vec<f64>>();
                }
            };
            let radius = r_inner + rng.random::<f64>() * (r_outer - r_inner);
            centroid.iter().zip(&direction).map(|(c, u)| c + radius * u).collect()
        } else {
            let mut pick = rng.random::<f64>() * total_weight;
            let mut chosen = &cfg.clusters[0];
            for cluster in &cfg.clusters {
                pick -= cluster.weight;
                if pick <= 0.0 {
                    chosen = cluster;
                    break;
                }
            }
            chosen
                .mean
                .iter()
                .map(|m| m + chosen.std * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        events.push(RawEvent {
            ts: i as i64,
            source: "synth".to_string(),
            features,
            raw: None,
            label: Some(if anomalous { "anomaly" } else { "normal" }.to_string()),
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SynthConfig {
        SynthConfig {
            clusters: vec![
                ClusterSpec { mean: vec![0.0, 0.0], std: 0.05, weight: 1.0 },
                ClusterSpec { mean: vec![1.0, 0.2], std: 0.05, weight: 1.0 },
                ClusterSpec { mean: vec![0.4, 0.9], std: 0.05, weight: 1.0 },
            ],
            anomaly_fraction: 0.01,
            anomaly_min_sigma: 5.0,
            anomaly_max_sigma: 8.0,
        }
    }

    #[test]
    fn zero_fraction_means_no_anomalies() {
        let mut c = cfg();
        c.anomaly_fraction = 0.0;
        let events = generate(&c, 500, 9).unwrap();
        assert!(events.iter().all(|e| e.label.as_deref() == Some("normal")));
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate(&cfg(), 200, 1234).unwrap();
        let b = generate(&cfg(), 200, 1234).unwrap();
        assert_eq!(a, b);
        let c = generate(&cfg(), 200, 1235).unwrap();
        assert_ne!(a, c);
    }

    // Golden count: the deterministic seeded draw at n=10000, fraction 1%
    // produced 109 anomalies on its first run; frozen as a regression pin.
    #[test]
    fn golden_anomaly_count() {
        let events = generate(&cfg(), 10_000, 42).unwrap();
        let anomalies = events.iter().filter(|e| e.label.as_deref() == Some("anomaly")).count();
        assert_eq!(anomalies, 109);
    }

    #[test]
    fn anomalies_are_separated_from_every_mean() {
        let c = cfg();
        let sigma = c.mixture_std();
        let events = generate(&c, 5_000, 7).unwrap();
        for ev in events.iter().filter(|e| e.label.as_deref() == Some("anomaly")) {
            for cluster in &c.clusters {
                let dist: f64 = ev
                    .features
                    .iter()
                    .zip(&cluster.mean)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    dist >= 5.0 * sigma,
                    "anomaly at ts {} is only {dist} from a mean",
                    ev.ts
                );
            }
        }
    }

    #[test]
    fn timestamps_are_sequential() {
        let events = generate(&cfg(), 50, 3).unwrap();
        for (i, ev) in events.iter().enumerate() {
            assert_eq!(ev.ts, i as i64);
            assert_eq!(ev.features.len(), 2);
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = cfg();
        c.clusters.clear();
        assert!(c.validate().is_err());

        let mut c = cfg();
        c.clusters[1].mean = vec![1.0];
        assert!(c.validate().is_err());

        let mut c = cfg();
        c.clusters[0].std = 0.0;
        assert!(c.validate().is_err());

        let mut c = cfg();
        c.anomaly_fraction = 1.5;
        assert!(c.validate().is_err());

        let mut c = cfg();
        c.anomaly_min_sigma = 2.0;
        assert!(c.validate().is_err());
    }
}
