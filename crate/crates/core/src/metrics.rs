//! Goodness-of-fit metrics and alignment of trajectories with observations.

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Measured hormone concentrations at observation times.
///
/// ACTH in pg/mL, cortisol in µg/dL. Values are taken as given; no unit
/// conversion happens anywhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub acth: Option<Vec<f64>>,
    pub cortisol: Option<Vec<f64>>,
    pub subject_id: String,
}

impl ObservationSeries {
    pub fn validate(&self) -> Result<()> {
        if self.acth.is_none() && self.cortisol.is_none() {
            return Err(Error::InvalidConfig(
                "observation series has neither ACTH nor cortisol".into(),
            ));
        }
        if self.times.is_empty() {
            return Err(Error::Empty);
        }
        if self.times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidConfig(
                "observation times must be nondecreasing".into(),
            ));
        }
        for (label, series) in [("acth", &self.acth), ("cortisol", &self.cortisol)] {
            if let Some(v) = series {
                if v.len() != self.times.len() {
                    return Err(Error::LengthMismatch {
                        predicted: self.times.len(),
                        actual: v.len(),
                    });
                }
                if let Some(i) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidConfig(format!(
                        "{label} value {} at index {i} must be positive",
                        v[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// MAPE (percent) and RMSE per hormone; `None` where the hormone was not observed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitScore {
    pub mape_cortisol: Option<f64>,
    pub mape_acth: Option<f64>,
    pub rmse_cortisol: Option<f64>,
    pub rmse_acth: Option<f64>,
}

fn check_lengths(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Mean absolute percentage error, `100/n * sum |p - a| / |a|`.
pub fn mape(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let mut sum = 0.0;
    for (i, (p, a)) in predicted.iter().zip(actual).enumerate() {
        if *a == 0.0 {
            return Err(Error::ZeroActual { index: i });
        }
        sum += ((p - a) / a).abs();
    }
    Ok(100.0 * sum / actual.len() as f64)
}

/// Root mean square error in the data's own units.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let ss: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((ss / actual.len() as f64).sqrt())
}

/// Samples `traj` at the observation times and scores each observed hormone.
/// ACTH is compared against the `a` component, cortisol against `c`.
pub fn score_fit(traj: &Trajectory, obs: &ObservationSeries) -> Result<FitScore> {
    let sampled = traj.sample(&obs.times)?;
    let mut score = FitScore::default();
    if let Some(actual) = &obs.acth {
        let pred: Vec<f64> = sampled.iter().map(|s| s.a).collect();
        score.mape_acth = Some(mape(&pred, actual)?);
        score.rmse_acth = Some(rmse(&pred, actual)?);
    }
    if let Some(actual) = &obs.cortisol {
        let pred: Vec<f64> = sampled.iter().map(|s| s.c).collect();
        score.mape_cortisol = Some(mape(&pred, actual)?);
        score.rmse_cortisol = Some(rmse(&pred, actual)?);
    }
    Ok(score)
}
