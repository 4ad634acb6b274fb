//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) integration with burn-in.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{forcing, open_loop_state, rhs, HormoneState};
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    /// Start of the reported window, minutes since midnight.
    pub t0: f64,
    pub t_end: f64,
    /// Step for [`StepMode::Fixed`].
    pub dt: f64,
    pub mode: StepMode,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Minutes integrated and discarded before `t0`.
    pub burn_in: f64,
    /// Output spacing for [`StepMode::Adaptive`]. Fixed mode records every step.
    pub output_step: f64,
    /// State at `t0 - burn_in`. `None` seeds with the open-loop steady state.
    pub initial_state: Option<HormoneState>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 1440.0,
            dt: 0.5,
            mode: StepMode::Adaptive,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            burn_in: 14_400.0,
            output_step: 1.0,
            initial_state: None,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t0.is_finite() && self.t_end.is_finite()) {
            return bad("t0 and t_end must be finite".into());
        }
        if self.t_end < self.t0 {
            return bad(format!("t_end = {} precedes t0 = {}", self.t_end, self.t0));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("tolerances must be > 0".into());
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return bad(format!("burn_in = {} must be >= 0", self.burn_in));
        }
        if !(self.output_step > 0.0 && self.output_step.is_finite()) {
            return bad(format!("output_step = {} must be > 0", self.output_step));
        }
        if let Some(s) = self.initial_state {
            if !s.is_finite() {
                return bad("initial state must be finite".into());
            }
        }
        Ok(())
    }
}

/// Hormone states sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<HormoneState>,
    pub params: ParameterSet,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn cortisol(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.c).collect()
    }

    pub fn acth(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.a).collect()
    }

    pub fn last(&self) -> Option<&HormoneState> {
        self.states.last()
    }

    /// Piecewise-linear interpolation at each query time.
    pub fn sample(&self, query_times: &[f64]) -> Result<Vec<HormoneState>> {
        query_times.iter().map(|&t| self.sample_at(t)).collect()
    }

    pub fn sample_at(&self, t: f64) -> Result<HormoneState> {
        let (start, end) = match (self.times.first(), self.times.last()) {
            (Some(&s), Some(&e)) => (s, e),
            _ => return Err(Error::Empty),
        };
        if !(t >= start && t <= end) {
            return Err(Error::OutOfRange { t, start, end });
        }
        // first index with times[i] >= t
        let i = self.times.partition_point(|&x| x < t);
        if self.times[i] == t {
            return Ok(self.states[i]);
        }
        let (t_lo, t_hi) = (self.times[i - 1], self.times[i]);
        let w = (t - t_lo) / (t_hi - t_lo);
        let lo = self.states[i - 1].to_array();
        let hi = self.states[i].to_array();
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = lo[k] + w * (hi[k] - lo[k]);
        }
        Ok(HormoneState::from_array(out))
    }
}

/// Free-function form of [`Trajectory::sample`].
pub fn sample(traj: &Trajectory, query_times: &[f64]) -> Result<Vec<HormoneState>> {
    traj.sample(query_times)
}

fn deriv(t: f64, y: &[f64; 3], p: &ParameterSet) -> Result<[f64; 3]> {
    let d = rhs(t, &HormoneState::from_array(*y), p)?;
    Ok([d.dr, d.da, d.dc])
}

fn axpy(y: &[f64; 3], h: f64, terms: &[(f64, &[f64; 3])]) -> [f64; 3] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..3 {
            out[i] += h * coef * k[i];
        }
    }
    out
}

fn finite(y: &[f64; 3], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn step_rk4(t: f64, s: &HormoneState, dt: f64, p: &ParameterSet) -> Result<HormoneState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt = {dt} must be > 0")));
    }
    let y = s.to_array();
    let k1 = deriv(t, &y, p)?;
    let y2 = axpy(&y, dt, &[(0.5, &k1)]);
    finite(&y2, t)?;
    let k2 = deriv(t + 0.5 * dt, &y2, p)?;
    let y3 = axpy(&y, dt, &[(0.5, &k2)]);
    finite(&y3, t)?;
    let k3 = deriv(t + 0.5 * dt, &y3, p)?;
    let y4 = axpy(&y, dt, &[(1.0, &k3)]);
    finite(&y4, t)?;
    let k4 = deriv(t + dt, &y4, p)?;
    let out = axpy(
        &y,
        dt,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    );
    finite(&out, t + dt)?;
    Ok(HormoneState::from_array(out))
}

/// Fixed RK4 steps from `start` to `end`; `visit` sees every step end.
fn fixed_span(
    start: f64,
    end: f64,
    dt: f64,
    mut y: HormoneState,
    p: &ParameterSet,
    mut visit: impl FnMut(f64, HormoneState),
) -> Result<HormoneState> {
    let span = end - start;
    if span <= 0.0 {
        return Ok(y);
    }
    let mut n = (span / dt).ceil() as usize;
    // absorb a last step that rounding made vanishingly short
    if n > 1 && start + (n - 1) as f64 * dt >= end - 1e-9 * dt {
        n -= 1;
    }
    let mut t = start;
    for i in 1..=n {
        let t_next = if i == n { end } else { start + i as f64 * dt };
        y = step_rk4(t, &y, t_next - t, p)?;
        visit(t_next, y);
        t = t_next;
    }
    Ok(y)
}

const H_MIN: f64 = 1e-6;
const H_MAX: f64 = 60.0;
const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Adaptive<'a> {
    p: &'a ParameterSet,
    abs_tol: f64,
    rel_tol: f64,
    h: f64,
    err_prev: f64,
}

impl Adaptive<'_> {
    /// Integrates from `t` to exactly `target`, landing on it.
    fn advance(&mut self, mut t: f64, y: [f64; 3], target: f64) -> Result<[f64; 3]> {
        let mut y = y;
        let mut k1 = deriv(t, &y, self.p)?;
        while t < target {
            let remaining = target - t;
            let mut h = self.h.min(H_MAX);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let p = self.p;
            let k2 = deriv(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]), p)?;
            let k3 = deriv(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]), p)?;
            let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = deriv(t + C4 * h, &y4, p)?;
            let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = deriv(t + C5 * h, &y5, p)?;
            let y6 = axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            let k6 = deriv(t + h, &y6, p)?;
            let y_new = axpy(
                &y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            finite(&y_new, t + h)?;
            let t_new = if last { target } else { t + h };
            let k7 = deriv(t_new, &y_new, p)?;

            let mut sum = 0.0;
            for i in 0..3 {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
                sum += (e / sc).powi(2);
            }
            let err = (sum / 3.0).sqrt();

            if err <= 1.0 {
                let err = err.max(1e-10);
                let factor =
                    (SAFETY * err.powf(-PI_ALPHA) * self.err_prev.powf(PI_BETA)).clamp(0.2, 10.0);
                self.err_prev = err;
                // a step shortened to hit the target says nothing about the
                // controller's preferred size
                if !last || h >= self.h {
                    self.h = (h * factor).min(H_MAX);
                }
                t = t_new;
                y = y_new;
                k1 = k7;
            } else {
                let factor = (SAFETY * err.powf(-0.2)).clamp(0.1, 1.0);
                self.h = h * factor;
                if self.h < H_MIN {
                    return Err(Error::StepUnderflow { t, h: self.h });
                }
            }
        }
        Ok(y)
    }
}

/// Integrates from `t0 - burn_in` to `t_end`, keeping samples from `t0` on.
pub fn integrate(config: &IntegrationConfig, p: &ParameterSet) -> Result<Trajectory> {
    config.validate()?;
    let start = config.t0 - config.burn_in;
    let y0 = match config.initial_state {
        Some(s) => s,
        None => open_loop_state(p, forcing(start, p))?,
    };

    let mut times = Vec::new();
    let mut states = Vec::new();
    match config.mode {
        StepMode::Fixed => {
            let y = fixed_span(start, config.t0, config.dt, y0, p, |_, _| {})?;
            times.push(config.t0);
            states.push(y);
            fixed_span(config.t0, config.t_end, config.dt, y, p, |t, s| {
                times.push(t);
                states.push(s);
            })?;
        }
        StepMode::Adaptive => {
            let mut ctl = Adaptive {
                p,
                abs_tol: config.abs_tol,
                rel_tol: config.rel_tol,
                h: config.dt.min(1.0),
                err_prev: 1.0,
            };
            let mut y = y0.to_array();
            if config.burn_in > 0.0 {
                y = ctl.advance(start, y, config.t0)?;
            }
            times.push(config.t0);
            states.push(HormoneState::from_array(y));
            let mut t = config.t0;
            for target in output_grid(config.t0, config.t_end, config.output_step)
                .into_iter()
                .skip(1)
            {
                y = ctl.advance(t, y, target)?;
                times.push(target);
                states.push(HormoneState::from_array(y));
                t = target;
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        params: *p,
    })
}

/// `t0, t0 + step, ...` up to `t_end`, with `t_end` always last.
pub fn output_grid(t0: f64, t_end: f64, step: f64) -> Vec<f64> {
    let n = ((t_end - t0) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * step).collect();
    if let Some(&last) = grid.last() {
        if t_end - last > 1e-9 * step {
            grid.push(t_end);
        } else {
            *grid.last_mut().unwrap() = t_end;
        }
    }
    grid
}

/// Integrates independent parameter sets with one shared configuration.
pub fn integrate_batch(
    config: &IntegrationConfig,
    params: &[ParameterSet],
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    exec.map(params, |p| integrate(config, p))
}
