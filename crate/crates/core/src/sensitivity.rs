//! Relative sensitivity of cortisol to each model parameter.
//!
//! `SI_p(t) = dC/dp * p / C`, estimated by central differences with a relative
//! step. Each parameter is perturbed independently, so the per-parameter runs
//! go through [`Execution`].

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::{integrate, IntegrationConfig};
use crate::params::{ParamName, ParameterSet};

pub const DEFAULT_REL_STEP: f64 = 1e-3;

/// Relative change in an aggregate, between `rel_step` and `rel_step / 2`,
/// above which a parameter is flagged as finite-difference unstable.
pub const FD_STABILITY_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityOptions {
    pub rel_step: f64,
    /// Burn-in, tolerances and mode; `t0`/`t_end` are taken from the grid.
    pub integration: IntegrationConfig,
    /// Repeat every parameter at half the step and flag unstable aggregates.
    pub fd_check: bool,
    pub exec: Execution,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            rel_step: DEFAULT_REL_STEP,
            integration: IntegrationConfig {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
                ..IntegrationConfig::default()
            },
            fd_check: true,
            exec: Execution::default(),
        }
    }
}

/// One period on a 1-minute grid: `t0, t0 + 1, ..., t0 + 1439`.
pub fn period_grid(t0: f64) -> Vec<f64> {
    (0..1440).map(|i| t0 + i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub parameter_names: Vec<ParamName>,
    pub grid: Vec<f64>,
    /// `si_series[i][k]` is the SI of parameter `i` at `grid[k]`.
    pub si_series: Vec<Vec<f64>>,
    /// Mean of `|SI(t)|` over the grid, per parameter.
    pub si_aggregate: Vec<f64>,
    /// Parameter names by descending aggregate.
    pub ranking: Vec<ParamName>,
    /// Aggregates recomputed at half the step, when the check ran.
    pub half_step_aggregate: Option<Vec<f64>>,
    pub fd_unstable: Vec<ParamName>,
    /// Pearson correlations of the SI series, in `parameter_names` order.
    pub correlation: Option<Vec<Vec<f64>>>,
}

impl SensitivityReport {
    pub fn aggregate(&self, name: ParamName) -> Option<f64> {
        let i = self.parameter_names.iter().position(|&n| n == name)?;
        Some(self.si_aggregate[i])
    }

    pub fn series(&self, name: ParamName) -> Option<&[f64]> {
        let i = self.parameter_names.iter().position(|&n| n == name)?;
        Some(&self.si_series[i])
    }

    /// 1-based rank of `name`.
    pub fn rank_of(&self, name: ParamName) -> Option<usize> {
        self.ranking.iter().position(|&n| n == name).map(|i| i + 1)
    }

    pub fn correlation_between(&self, a: ParamName, b: ParamName) -> Option<f64> {
        let m = self.correlation.as_ref()?;
        let i = self.parameter_names.iter().position(|&n| n == a)?;
        let j = self.parameter_names.iter().position(|&n| n == b)?;
        Some(m[i][j])
    }
}

fn grid_config(grid: &[f64], base: &IntegrationConfig) -> Result<IntegrationConfig> {
    let (first, last) = match (grid.first(), grid.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::Empty),
    };
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "grid must be strictly increasing".into(),
        ));
    }
    Ok(IntegrationConfig {
        t0: first,
        t_end: last,
        ..base.clone()
    })
}

fn cortisol_on_grid(p: &ParameterSet, grid: &[f64], cfg: &IntegrationConfig) -> Result<Vec<f64>> {
    let traj = integrate(cfg, p)?;
    Ok(traj.sample(grid)?.into_iter().map(|s| s.c).collect())
}

fn check_step(rel_step: f64) -> Result<()> {
    if rel_step > 0.0 && rel_step <= 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "rel_step = {rel_step} must lie in (0, 0.5]"
        )))
    }
}

fn si_against_base(
    p: &ParameterSet,
    name: ParamName,
    grid: &[f64],
    base_c: &[f64],
    rel_step: f64,
    cfg: &IntegrationConfig,
) -> Result<Vec<f64>> {
    let value = p.get(name);
    if value == 0.0 {
        return Err(Error::Domain(format!(
            "{name} is zero; relative sensitivity undefined"
        )));
    }
    let delta = rel_step * value;
    let plus = cortisol_on_grid(&p.with(name, value + delta), grid, cfg)?;
    let minus = cortisol_on_grid(&p.with(name, value - delta), grid, cfg)?;
    grid.iter()
        .zip(base_c)
        .zip(plus.iter().zip(&minus))
        .map(|((&t, &c0), (cp, cm))| {
            if c0 == 0.0 {
                return Err(Error::ZeroCortisol { t });
            }
            Ok((cp - cm) / (2.0 * delta) * value / c0)
        })
        .collect()
}

/// SI of cortisol with respect to `name` at each grid time, default integration.
pub fn si_timeseries(
    p: &ParameterSet,
    name: ParamName,
    grid: &[f64],
    rel_step: f64,
) -> Result<Vec<f64>> {
    let opts = SensitivityOptions {
        rel_step,
        ..Default::default()
    };
    si_timeseries_with(p, name, grid, &opts)
}

pub fn si_timeseries_with(
    p: &ParameterSet,
    name: ParamName,
    grid: &[f64],
    opts: &SensitivityOptions,
) -> Result<Vec<f64>> {
    check_step(opts.rel_step)?;
    let cfg = grid_config(grid, &opts.integration)?;
    let base_c = cortisol_on_grid(p, grid, &cfg)?;
    si_against_base(p, name, grid, &base_c, opts.rel_step, &cfg)
}

fn mean_abs(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64
}

/// SI series, aggregates and ranking for all 19 parameters. The correlation
/// matrix is left empty; see [`analyze`].
pub fn rank_parameters(
    p: &ParameterSet,
    grid: &[f64],
    opts: &SensitivityOptions,
) -> Result<SensitivityReport> {
    check_step(opts.rel_step)?;
    let cfg = grid_config(grid, &opts.integration)?;
    let base_c = cortisol_on_grid(p, grid, &cfg)?;

    let names = ParamName::ALL.to_vec();
    let per_param = opts
        .exec
        .map(&names, |&name| -> Result<(Vec<f64>, Option<f64>)> {
            let series = si_against_base(p, name, grid, &base_c, opts.rel_step, &cfg)?;
            let half = if opts.fd_check {
                let s = si_against_base(p, name, grid, &base_c, 0.5 * opts.rel_step, &cfg)?;
                Some(mean_abs(&s))
            } else {
                None
            };
            Ok((series, half))
        });

    let mut si_series = Vec::with_capacity(names.len());
    let mut half_step = Vec::with_capacity(names.len());
    for r in per_param {
        let (series, half) = r?;
        si_series.push(series);
        half_step.push(half);
    }
    let si_aggregate: Vec<f64> = si_series.iter().map(|s| mean_abs(s)).collect();

    let mut order: Vec<usize> = (0..names.len()).collect();
    // stable sort: equal aggregates keep reporting order
    order.sort_by(|&a, &b| si_aggregate[b].total_cmp(&si_aggregate[a]));
    let ranking = order.iter().map(|&i| names[i]).collect();

    let (half_step_aggregate, fd_unstable) = if opts.fd_check {
        let half: Vec<f64> = half_step.into_iter().map(Option::unwrap).collect();
        let unstable = names
            .iter()
            .zip(si_aggregate.iter().zip(&half))
            .filter(|(_, (full, half))| !fd_stable(**full, **half))
            .map(|(n, _)| *n)
            .collect();
        (Some(half), unstable)
    } else {
        (None, Vec::new())
    };

    Ok(SensitivityReport {
        parameter_names: names,
        grid: grid.to_vec(),
        si_series,
        si_aggregate,
        ranking,
        half_step_aggregate,
        fd_unstable,
        correlation: None,
    })
}

fn fd_stable(full: f64, half: f64) -> bool {
    // aggregates at rounding level carry no signal to compare
    if full.abs() < 1e-12 && half.abs() < 1e-12 {
        return true;
    }
    ((full - half) / full.abs().max(half.abs())).abs() < FD_STABILITY_TOL
}

/// [`rank_parameters`] plus the correlation matrix of the SI series.
pub fn analyze(
    p: &ParameterSet,
    grid: &[f64],
    opts: &SensitivityOptions,
) -> Result<SensitivityReport> {
    let mut report = rank_parameters(p, grid, opts)?;
    let labels: Vec<String> = report
        .parameter_names
        .iter()
        .map(|n| n.to_string())
        .collect();
    report.correlation = Some(correlation_matrix(&labels, &report.si_series)?);
    Ok(report)
}

/// Pearson correlation between every pair of series. Unit diagonal, symmetric,
/// entries clamped to `[-1, 1]`.
pub fn correlation_matrix(labels: &[String], series: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if labels.len() != series.len() {
        return Err(Error::LengthMismatch {
            predicted: labels.len(),
            actual: series.len(),
        });
    }
    let len = series.first().map_or(0, Vec::len);
    if len < 3 {
        return Err(Error::InvalidConfig(
            "correlation needs series of length >= 3".into(),
        ));
    }
    let mut centered = Vec::with_capacity(series.len());
    for (label, s) in labels.iter().zip(series) {
        if s.len() != len {
            return Err(Error::LengthMismatch {
                predicted: len,
                actual: s.len(),
            });
        }
        let mean = s.iter().sum::<f64>() / len as f64;
        let dev: Vec<f64> = s.iter().map(|x| x - mean).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(norm > 1e-13 * scale * (len as f64).sqrt()) || !norm.is_finite() {
            return Err(Error::ZeroVariance(label.clone()));
        }
        centered.push((dev, norm));
    }

    let k = series.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let (di, ni) = &centered[i];
            let (dj, nj) = &centered[j];
            let dot: f64 = di.iter().zip(dj).map(|(a, b)| a * b).sum();
            let r = (dot / (ni * nj)).clamp(-1.0, 1.0);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn correlation_examples() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let m = correlation_matrix(&labels(3), &[a.clone(), a.clone(), neg]).unwrap();
        assert_eq!(m[0][0], 1.0);
        assert_abs_diff_eq!(m[0][1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[0][2], -1.0, epsilon = 1e-14);
        assert_eq!(m[1][2], m[2][1]);
    }

    #[test]
    fn correlation_errors() {
        let a = vec![1.0, 2.0, 3.0];
        let flat = vec![2.0, 2.0, 2.0];
        match correlation_matrix(&["a".into(), "flat".into()], &[a.clone(), flat]) {
            Err(Error::ZeroVariance(name)) => assert_eq!(name, "flat"),
            other => panic!("expected zero-variance error, got {other:?}"),
        }
        assert!(correlation_matrix(&labels(2), &[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(correlation_matrix(&labels(2), &[a.clone(), vec![1.0, 2.0]]).is_err());
        assert!(correlation_matrix(&labels(1), &[a.clone(), a]).is_err());
    }

    #[test]
    fn step_and_grid_validation() {
        let p = ParameterSet::default();
        let grid = [0.0, 1.0, 2.0];
        assert!(si_timeseries(&p, ParamName::K5, &grid, 0.0).is_err());
        assert!(si_timeseries(&p, ParamName::K5, &grid, 0.6).is_err());
        assert!(si_timeseries(&p, ParamName::K5, &[], 1e-3).is_err());
        assert!(si_timeseries(&p, ParamName::K5, &[1.0, 0.0], 1e-3).is_err());
        let zero_xi = p.with(ParamName::Xi, 0.0);
        assert!(matches!(
            si_timeseries(&zero_xi, ParamName::Xi, &grid, 1e-3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_cortisol_is_reported() {
        // no ACTH-to-cortisol drive and zero start: C stays exactly 0
        let p = ParameterSet {
            k5: 1e-300,
            ..Default::default()
        };
        let opts = SensitivityOptions {
            integration: IntegrationConfig {
                burn_in: 0.0,
                initial_state: Some(crate::HormoneState::new(1.0, 1.0, 0.0)),
                ..SensitivityOptions::default().integration
            },
            ..Default::default()
        };
        let err = si_timeseries_with(&p, ParamName::H3, &[0.0, 1.0], &opts).unwrap_err();
        assert!(matches!(err, Error::ZeroCortisol { t } if t == 0.0));
    }

    #[test]
    fn fd_stability_rule() {
        assert!(fd_stable(1.0, 1.005));
        assert!(!fd_stable(1.0, 1.02));
        assert!(fd_stable(0.0, 1e-14));
        assert!(!fd_stable(1e-3, 0.0));
    }

    #[test]
    fn period_grid_shape() {
        let g = period_grid(0.0);
        assert_eq!(g.len(), 1440);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1439], 1439.0);
    }
}
