//! Parameter estimation against an observation series.
//!
//! Free parameters are searched with a bounded Nelder–Mead simplex. The
//! simplex lives in log-scaled unit coordinates, `u = ln(x/lo) / ln(hi/lo)`,
//! so box projection is a clamp to `[0, 1]` and step sizes are relative. Several
//! starts (the caller's initial point plus log-uniform draws) run
//! independently; the best result wins, ties going to the earlier start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::{integrate, IntegrationConfig};
use crate::metrics::{score_fit, ObservationSeries};
use crate::params::{ParamName, ParameterSet};

/// Objective value returned when a candidate cannot be integrated or scored.
pub const PENALTY: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `w_acth * MAPE_acth + w_cortisol * MAPE_cortisol`.
    SumMape,
    /// Weighted sums of squared residuals.
    SumOfSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub free: Vec<ParamName>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub base: ParameterSet,
    pub objective: ObjectiveKind,
    pub weight_acth: f64,
    pub weight_cortisol: f64,
    pub integration: IntegrationConfig,
}

impl FitProblem {
    /// Bounds default to `[0.1x, 10x]` of the base value of each free parameter.
    pub fn new(base: ParameterSet, free: Vec<ParamName>) -> Self {
        let lower = free.iter().map(|&n| 0.1 * base.get(n)).collect();
        let upper = free.iter().map(|&n| 10.0 * base.get(n)).collect();
        Self {
            free,
            lower,
            upper,
            base,
            objective: ObjectiveKind::SumMape,
            weight_acth: 1.0,
            weight_cortisol: 1.0,
            integration: IntegrationConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::InvalidConfig("no free parameters".into()));
        }
        if self.lower.len() != self.free.len() || self.upper.len() != self.free.len() {
            return Err(Error::InvalidConfig(
                "bounds must match the free parameter list".into(),
            ));
        }
        for (i, name) in self.free.iter().enumerate() {
            if self.free[..i].contains(name) {
                return Err(Error::InvalidConfig(format!("{name} listed twice")));
            }
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo > 0.0 && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "bounds for {name} must satisfy 0 < lower < upper (got [{lo}, {hi}])"
                )));
            }
            name.check(lo)?;
            name.check(hi)?;
        }
        if !(self.weight_acth >= 0.0 && self.weight_cortisol >= 0.0) {
            return Err(Error::InvalidConfig("weights must be >= 0".into()));
        }
        self.integration.validate()
    }

    /// Full parameter set with the free values substituted into `base`.
    pub fn assemble(&self, candidate: &[f64]) -> ParameterSet {
        let mut p = self.base;
        for (&name, &v) in self.free.iter().zip(candidate) {
            p.set(name, v);
        }
        p
    }

    pub fn in_bounds(&self, candidate: &[f64]) -> bool {
        candidate.len() == self.free.len()
            && candidate
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| ((x / lo).ln() / (hi / lo).ln()).clamp(0.0, 1.0))
            .collect()
    }

    fn point_from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(u, (lo, hi))| (lo * (hi / lo).powf(*u)).clamp(*lo, *hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub fitted: ParameterSet,
    /// Values of the free parameters, in `FitProblem::free` order.
    pub free_values: Vec<f64>,
    pub objective_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// `(evaluation number, best objective so far)`, starts concatenated in order.
    pub history: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Total objective evaluations across all starts.
    pub budget: usize,
    pub seed: u64,
    pub starts: usize,
    /// Convergence threshold on the simplex diameter in log-unit coordinates.
    pub xtol: f64,
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            budget: 5000,
            seed: 0,
            starts: 5,
            xtol: 1e-6,
            exec: Execution::default(),
        }
    }
}

fn evaluate(candidate: &[f64], prob: &FitProblem, obs: &ObservationSeries) -> Result<f64> {
    let p = prob.assemble(candidate);
    p.validate()?;
    let traj = integrate(&prob.integration, &p)?;
    let value = match prob.objective {
        ObjectiveKind::SumMape => {
            let s = score_fit(&traj, obs)?;
            prob.weight_acth * s.mape_acth.unwrap_or(0.0)
                + prob.weight_cortisol * s.mape_cortisol.unwrap_or(0.0)
        }
        ObjectiveKind::SumOfSquares => {
            let sampled = traj.sample(&obs.times)?;
            let ss = |actual: &Option<Vec<f64>>, pick: fn(&crate::HormoneState) -> f64| {
                actual.as_ref().map_or(0.0, |v| {
                    v.iter()
                        .zip(&sampled)
                        .map(|(a, s)| (pick(s) - a).powi(2))
                        .sum::<f64>()
                })
            };
            prob.weight_acth * ss(&obs.acth, |s| s.a)
                + prob.weight_cortisol * ss(&obs.cortisol, |s| s.c)
        }
    };
    Ok(value)
}

/// Fit criterion for a free-parameter vector. Any failure (integration,
/// sampling, invalid candidate) maps to [`PENALTY`].
pub fn objective(candidate: &[f64], prob: &FitProblem, obs: &ObservationSeries) -> f64 {
    if !prob.in_bounds(candidate) {
        return PENALTY;
    }
    match evaluate(candidate, prob, obs) {
        Ok(v) if v.is_finite() => v,
        _ => PENALTY,
    }
}

/// Multi-start bounded simplex fit with default options and the given budget and seed.
pub fn fit(
    prob: &FitProblem,
    obs: &ObservationSeries,
    init: &[f64],
    budget: usize,
    seed: u64,
) -> Result<FitResult> {
    let opts = FitOptions {
        budget,
        seed,
        ..Default::default()
    };
    fit_with(prob, obs, init, &opts, |_, _| {})
}

/// As [`fit`], calling `hook(candidate, value)` after every objective evaluation.
pub fn fit_with<H>(
    prob: &FitProblem,
    obs: &ObservationSeries,
    init: &[f64],
    opts: &FitOptions,
    hook: H,
) -> Result<FitResult>
where
    H: Fn(&[f64], f64) + Sync,
{
    prob.validate()?;
    obs.validate()?;
    if init.len() != prob.free.len() {
        return Err(Error::InvalidConfig(format!(
            "initial point has {} values for {} free parameters",
            init.len(),
            prob.free.len()
        )));
    }
    if !prob.in_bounds(init) {
        return Err(Error::InvalidConfig("initial point outside bounds".into()));
    }
    if opts.budget == 0 || opts.starts == 0 {
        return Err(Error::InvalidConfig(
            "budget and starts must be >= 1".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start_points = vec![init.to_vec()];
    for _ in 1..opts.starts {
        let u: Vec<f64> = (0..prob.free.len()).map(|_| rng.random::<f64>()).collect();
        start_points.push(prob.point_from_unit(&u));
    }
    let runs: Vec<(Vec<f64>, usize)> = start_points
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let share = opts.budget / opts.starts + usize::from(i < opts.budget % opts.starts);
            (x, share)
        })
        .filter(|(_, share)| *share > 0)
        .collect();

    let outcomes = opts.exec.map(&runs, |(x0, share)| {
        let mut eval = |x: &[f64]| {
            let v = objective(x, prob, obs);
            hook(x, v);
            v
        };
        nelder_mead(prob, x0, *share, opts.xtol, &mut eval)
    });

    let mut history = Vec::new();
    let mut evaluations = 0;
    let mut running = f64::INFINITY;
    let mut best: Option<&SimplexOutcome> = None;
    for out in &outcomes {
        for &v in &out.trace {
            evaluations += 1;
            running = running.min(v);
            history.push((evaluations, running));
        }
        if best.is_none_or(|b| out.f < b.f) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start has budget");
    Ok(FitResult {
        fitted: prob.assemble(&best.x),
        free_values: best.x.clone(),
        objective_value: best.f,
        evaluations,
        converged: best.converged,
        history,
    })
}

struct SimplexOutcome {
    x: Vec<f64>,
    f: f64,
    converged: bool,
    /// Raw objective value of each evaluation, in order.
    trace: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_STEP: f64 = 0.05;

struct Vertex {
    u: Vec<f64>,
    x: Vec<f64>,
    f: f64,
}

fn nelder_mead(
    prob: &FitProblem,
    x0: &[f64],
    budget: usize,
    xtol: f64,
    eval: &mut dyn FnMut(&[f64]) -> f64,
) -> SimplexOutcome {
    let n = x0.len();
    let mut trace = Vec::new();
    let mut call = |u: Vec<f64>, x: Option<Vec<f64>>, trace: &mut Vec<f64>| -> Option<Vertex> {
        if trace.len() >= budget {
            return None;
        }
        let u: Vec<f64> = u.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let x = x.unwrap_or_else(|| prob.point_from_unit(&u));
        let f = eval(&x);
        trace.push(f);
        Some(Vertex { u, x, f })
    };

    let first = call(prob.to_unit(x0), Some(x0.to_vec()), &mut trace)
        .expect("budget >= 1 checked by caller");
    let mut simplex = vec![first];
    for i in 0..n {
        let mut u = simplex[0].u.clone();
        u[i] = if u[i] + INITIAL_STEP <= 1.0 {
            u[i] + INITIAL_STEP
        } else {
            u[i] - INITIAL_STEP
        };
        match call(u, None, &mut trace) {
            Some(v) => simplex.push(v),
            None => return finish(simplex, false, trace),
        }
    }

    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.u.iter().zip(&simplex[0].u).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < xtol {
            return finish(simplex, true, trace);
        }

        let worst = simplex[n].f;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.u[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].u)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let Some(reflected) = call(toward(REFLECT), None, &mut trace) else {
            return finish(simplex, false, trace);
        };
        if reflected.f < simplex[0].f {
            let Some(expanded) = call(toward(EXPAND), None, &mut trace) else {
                simplex[n] = reflected;
                return finish(simplex, false, trace);
            };
            simplex[n] = if expanded.f < reflected.f {
                expanded
            } else {
                reflected
            };
            continue;
        }
        if reflected.f < simplex[n - 1].f {
            simplex[n] = reflected;
            continue;
        }

        let (coef, reference) = if reflected.f < worst {
            (CONTRACT, reflected.f)
        } else {
            (-CONTRACT, worst)
        };
        let Some(contracted) = call(toward(coef), None, &mut trace) else {
            if reflected.f < worst {
                simplex[n] = reflected;
            }
            return finish(simplex, false, trace);
        };
        if contracted.f <= reference {
            simplex[n] = contracted;
            continue;
        }
        if reflected.f < worst {
            simplex[n] = reflected;
        }

        for i in 1..=n {
            let u: Vec<f64> = simplex[0]
                .u
                .iter()
                .zip(&simplex[i].u)
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            match call(u, None, &mut trace) {
                Some(v) => simplex[i] = v,
                None => return finish(simplex, false, trace),
            }
        }
    }
}

fn finish(mut simplex: Vec<Vertex>, converged: bool, trace: Vec<f64>) -> SimplexOutcome {
    simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
    let best = simplex.swap_remove(0);
    SimplexOutcome {
        x: best.x,
        f: best.f,
        converged,
        trace,
    }
}
