//! Observation series generated from the model itself, for recovery tests and
//! the shipped example dataset.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationConfig, Trajectory};
use crate::metrics::ObservationSeries;
use crate::params::ParameterSet;

/// ACTH and cortisol columns of `traj` at its own grid points.
pub fn observations_from_trajectory(traj: &Trajectory, subject_id: &str) -> ObservationSeries {
    ObservationSeries {
        times: traj.times.clone(),
        acth: Some(traj.acth()),
        cortisol: Some(traj.cortisol()),
        subject_id: subject_id.to_string(),
    }
}

/// Samples the model at `times` and applies multiplicative Gaussian noise,
/// `v * (1 + noise_sd * z)`, with a seeded generator. `noise_sd = 0` gives the
/// exact model values.
pub fn synthetic_observations(
    p: &ParameterSet,
    cfg: &IntegrationConfig,
    times: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if !(0.0..0.5).contains(&noise_sd) {
        return Err(Error::InvalidConfig(format!(
            "noise_sd = {noise_sd} must lie in [0, 0.5)"
        )));
    }
    let traj = integrate(cfg, p)?;
    let sampled = traj.sample(times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |v: f64| {
        let z: f64 = StandardNormal.sample(&mut rng);
        // a draw below -1/noise_sd would flip the sign; keep the value positive
        v * (1.0 + noise_sd * z).max(1e-3)
    };
    let mut acth = Vec::with_capacity(times.len());
    let mut cortisol = Vec::with_capacity(times.len());
    for s in &sampled {
        acth.push(noisy(s.a));
        cortisol.push(noisy(s.c));
    }
    Ok(ObservationSeries {
        times: times.to_vec(),
        acth: Some(acth),
        cortisol: Some(cortisol),
        subject_id: format!("synthetic-seed{seed}"),
    })
}

/// Every 30 min over one day, both ends included.
pub fn half_hourly_day() -> Vec<f64> {
    (0..=48).map(|i| i as f64 * 30.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_is_exact_and_noise_is_seeded() {
        let p = ParameterSet::default();
        let cfg = IntegrationConfig {
            burn_in: 1440.0,
            ..Default::default()
        };
        let times = half_hourly_day();
        let exact = synthetic_observations(&p, &cfg, &times, 0.0, 1).unwrap();
        let traj = integrate(&cfg, &p).unwrap();
        let s = traj.sample(&times).unwrap();
        assert_eq!(exact.cortisol.as_ref().unwrap()[10], s[10].c);

        let a = synthetic_observations(&p, &cfg, &times, 0.05, 42).unwrap();
        let b = synthetic_observations(&p, &cfg, &times, 0.05, 42).unwrap();
        let c = synthetic_observations(&p, &cfg, &times, 0.05, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.cortisol, c.cortisol);
        a.validate().unwrap();

        let rel: Vec<f64> = a
            .cortisol
            .unwrap()
            .iter()
            .zip(exact.cortisol.as_ref().unwrap())
            .map(|(n, e)| n / e - 1.0)
            .collect();
        let sd = (rel.iter().map(|r| r * r).sum::<f64>() / rel.len() as f64).sqrt();
        assert!(sd > 0.02 && sd < 0.09, "empirical noise sd {sd}");
    }

    #[test]
    fn rejects_bad_noise() {
        let p = ParameterSet::default();
        let cfg = IntegrationConfig::default();
        assert!(synthetic_observations(&p, &cfg, &[0.0], -0.1, 0).is_err());
        assert!(synthetic_observations(&p, &cfg, &[0.0], 0.7, 0).is_err());
    }
}
