//! Right-hand side of the CRH / ACTH / cortisol system and its forcing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::ParameterSet;

/// Instantaneous concentrations of CRH (`r`), ACTH (`a`) and cortisol (`c`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HormoneState {
    pub r: f64,
    pub a: f64,
    pub c: f64,
}

impl HormoneState {
    pub const fn new(r: f64, a: f64, c: f64) -> Self {
        Self { r, a, c }
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.a.is_finite() && self.c.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.a, self.c]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn max_abs(&self) -> f64 {
        self.r.abs().max(self.a.abs()).max(self.c.abs())
    }
}

/// Time derivatives of a [`HormoneState`], per minute.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivatives {
    pub dr: f64,
    pub da: f64,
    pub dc: f64,
}

/// Hill function `x^n / (k^n + x^n)`.
pub fn hill(x: f64, k: f64, n: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("hill: x = {x} must be >= 0")));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!("hill: K = {k} must be > 0")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // (x/k)^n / (1 + (x/k)^n) avoids overflow of x^n and k^n separately
    let q = (x / k).powf(n);
    if q.is_infinite() {
        return Ok(1.0);
    }
    Ok(q / (1.0 + q))
}

/// Daylight forcing at `t` minutes after midnight. Period 1440 min.
pub fn daylight(t: f64) -> f64 {
    // reduce to one period first so that t and t + 1440 give identical bits
    let t = t.rem_euclid(1440.0);
    let w = PI * t / 720.0;
    (3.9 * w.sin() - (2.0 * w).sin() - 1.3 * (2.0 * w).cos() - 2.8 * w.cos()) / 11.1 + 0.4
}

/// Forcing seen by the model: the daylight curve unless frozen in `p`.
pub fn forcing(t: f64, p: &ParameterSet) -> f64 {
    p.fixed_daylight.unwrap_or_else(|| daylight(t))
}

/// Cortisol-dependent modulation of CRH production,
/// `1 - xi*hill(C, R_C, beta) - psi*hill(C, R_C, delta)`, clamped at 0 when
/// `p.clamp_production` is set.
pub fn crh_feedback_factor(c: f64, p: &ParameterSet) -> Result<f64> {
    let f = 1.0 - p.xi * hill(c, p.r_c, p.beta)? - p.psi * hill(c, p.r_c, p.delta)?;
    Ok(if p.clamp_production { f.max(0.0) } else { f })
}

pub fn rhs(t: f64, s: &HormoneState, p: &ParameterSet) -> Result<Derivatives> {
    if !s.is_finite() {
        return Err(Error::NonFinite { t });
    }
    let d = forcing(t, p);
    let cortisol_hill = hill(s.c, p.r_c, p.beta)?;

    let crh_drive = (p.k1 + d * p.k2) * (1.0 - p.phi * hill(s.a, p.r_a, p.alpha)?);
    let dr = crh_drive * crh_feedback_factor(s.c, p)? - p.h1 * s.r;

    let acth_drive = p.k3 * hill(d, p.r_d, p.gamma)? + p.k4 * s.r;
    let da = acth_drive * (1.0 - p.rho * cortisol_hill) - p.h2 * s.a;

    let dc = p.k5 * s.a - p.h3 * s.c;

    Ok(Derivatives { dr, da, dc })
}

/// Open-loop fixed point for a constant forcing level, ignoring feedback
/// terms. Used to seed integrations.
pub(crate) fn open_loop_state(p: &ParameterSet, d: f64) -> Result<HormoneState> {
    let r = (p.k1 + d * p.k2) / p.h1;
    let a = (p.k3 * hill(d, p.r_d, p.gamma)? + p.k4 * r) / p.h2;
    let c = p.k5 * a / p.h3;
    Ok(HormoneState::new(r, a, c))
}

/// Closed-form steady state of the feedback-free system at constant forcing
/// `d_const`. Fails if any of phi, rho, psi, xi is nonzero.
pub fn steady_state_open_loop(p: &ParameterSet, d_const: f64) -> Result<HormoneState> {
    for (name, v) in [("phi", p.phi), ("rho", p.rho), ("psi", p.psi), ("xi", p.xi)] {
        if v != 0.0 {
            return Err(Error::FeedbackActive(name));
        }
    }
    if !(d_const >= 0.0) {
        return Err(Error::Domain(format!("D = {d_const} must be >= 0")));
    }
    open_loop_state(p, d_const)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zero_production() -> ParameterSet {
        // k's must be positive for validation, but rhs itself accepts zeros
        ParameterSet {
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            k4: 0.0,
            k5: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn hill_examples() {
        assert_abs_diff_eq!(hill(1.12, 1.12, 3.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(hill(0.0, 1.12, 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(hill(2.0, 1.0, 1.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(hill(1e300, 1.0, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn hill_domain_errors() {
        assert!(hill(-1e-9, 1.0, 2.0).is_err());
        assert!(hill(1.0, 0.0, 2.0).is_err());
        assert!(hill(1.0, -1.0, 2.0).is_err());
        assert!(hill(f64::NAN, 1.0, 2.0).is_err());
    }

    #[test]
    fn daylight_examples() {
        assert_abs_diff_eq!(daylight(0.0), (-1.3 - 2.8) / 11.1 + 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(daylight(0.0), 0.030_630_630_630_630_63, epsilon = 1e-12);
        assert_abs_diff_eq!(daylight(360.0), 0.868_468_468_468_468_5, epsilon = 1e-12);
        assert_abs_diff_eq!(daylight(720.0), 0.535_135_135_135_135_1, epsilon = 1e-12);
    }

    #[test]
    fn feedback_factor_examples() {
        let p = ParameterSet::default();
        assert_eq!(crh_feedback_factor(0.0, &p).unwrap(), 1.0);
        assert_eq!(crh_feedback_factor(1e12, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(crh_feedback_factor(1.12, &p).unwrap(), 0.0);
        let unclamped = ParameterSet {
            clamp_production: false,
            ..p
        };
        assert_abs_diff_eq!(
            crh_feedback_factor(1.12, &unclamped).unwrap(),
            -0.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            crh_feedback_factor(1e12, &unclamped).unwrap(),
            -1.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rhs_cortisol_equation() {
        let p = ParameterSet::default();
        for t in [0.0, 333.0, 1000.0] {
            let d = rhs(t, &HormoneState::new(0.0, 1.0, 0.0), &p).unwrap();
            assert_abs_diff_eq!(d.dc, 0.00430, epsilon = 1e-15);
        }
    }

    #[test]
    fn rhs_pure_decay() {
        let d = rhs(123.0, &HormoneState::new(1.0, 1.0, 1.0), &zero_production()).unwrap();
        assert_abs_diff_eq!(d.dr, -0.1732, epsilon = 1e-15);
        assert_abs_diff_eq!(d.da, -0.0315, epsilon = 1e-15);
        assert_abs_diff_eq!(d.dc, -0.0105, epsilon = 1e-15);
    }

    #[test]
    fn rhs_rejects_non_finite_state() {
        let p = ParameterSet::default();
        let err = rhs(5.0, &HormoneState::new(f64::NAN, 1.0, 1.0), &p).unwrap_err();
        assert!(matches!(err, Error::NonFinite { t } if t == 5.0));
    }

    #[test]
    fn steady_state_examples() {
        let zero = zero_production().feedback_free();
        assert_eq!(
            steady_state_open_loop(&zero, 0.3).unwrap(),
            HormoneState::default()
        );

        let p = ParameterSet::default().feedback_free();
        let s0 = steady_state_open_loop(&p, 0.0).unwrap();
        let r = 0.5703 / 0.1732;
        assert_abs_diff_eq!(s0.r, r, epsilon = 1e-12);
        assert_abs_diff_eq!(s0.r, 3.292_725_173_210_162, epsilon = 1e-12);
        assert_abs_diff_eq!(s0.a, 0.0821 * r / 0.0315, epsilon = 1e-12);
        assert_abs_diff_eq!(
            s0.c,
            0.00430 * (0.0821 * r / 0.0315) / 0.0105,
            epsilon = 1e-12
        );

        let s6 = steady_state_open_loop(&p, daylight(360.0)).unwrap();
        assert!(s6.c > s0.c);
    }

    #[test]
    fn steady_state_requires_feedback_free() {
        let p = ParameterSet::default();
        assert!(matches!(
            steady_state_open_loop(&p, 0.0),
            Err(Error::FeedbackActive("phi"))
        ));
        let p = ParameterSet::default()
            .feedback_free()
            .with(crate::ParamName::Xi, 0.1);
        assert!(matches!(
            steady_state_open_loop(&p, 0.0),
            Err(Error::FeedbackActive("xi"))
        ));
    }

    #[test]
    fn rhs_vanishes_at_open_loop_steady_state() {
        let d = daylight(500.0);
        let p = ParameterSet {
            fixed_daylight: Some(d),
            ..ParameterSet::default().feedback_free()
        };
        let s = steady_state_open_loop(&p, d).unwrap();
        let der = rhs(0.0, &s, &p).unwrap();
        assert!(der.dr.abs() <= 1e-12 && der.da.abs() <= 1e-12 && der.dc.abs() <= 1e-12);

        // same with the circadian curve, evaluated where it equals d
        let p = ParameterSet::default().feedback_free();
        let der = rhs(500.0, &s, &p).unwrap();
        assert!(der.dr.abs() <= 1e-12 && der.da.abs() <= 1e-12 && der.dc.abs() <= 1e-12);
    }

    fn feedback_free_params() -> impl Strategy<Value = ParameterSet> {
        (
            prop::array::uniform8(0.01f64..2.0),
            prop::array::uniform3(0.1f64..3.0),
            prop::array::uniform2(1.0f64..6.0),
        )
            .prop_map(|(k, sat, exps)| ParameterSet {
                k1: k[0],
                k2: k[1],
                k3: k[2],
                k4: k[3],
                k5: k[4] * 0.01,
                h1: k[5] * 0.2,
                h2: k[6] * 0.05,
                h3: k[7] * 0.02,
                r_c: sat[0],
                r_a: sat[1],
                r_d: sat[2],
                alpha: exps[0],
                gamma: exps[1],
                ..ParameterSet::default().feedback_free()
            })
    }

    proptest! {
        #[test]
        fn daylight_is_periodic(t in -1.0e6f64..1.0e6) {
            prop_assert!((daylight(t) - daylight(t + 1440.0)).abs() <= 1e-12);
        }

        #[test]
        fn hill_bounded_and_monotone(x in 0.0f64..50.0, dx in 0.0f64..50.0, k in 0.01f64..10.0, n in 1.0f64..8.0) {
            let lo = hill(x, k, n).unwrap();
            let hi = hill(x + dx, k, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&lo));
            // saturates to exactly 1 only once (x/k)^n exceeds 2^53
            prop_assert!(lo < 1.0 || (x / k).powf(n) > 1e15);
            prop_assert!(hi >= lo);
        }

        #[test]
        fn rhs_periodic_in_time(ticks in 0u32..10_000_000, r in 0.0f64..5.0, a in 0.0f64..5.0, c in 0.0f64..5.0) {
            // dyadic times: t and t + 1440 are both exact, so the reduced phase is identical
            let t = f64::from(ticks) / 64.0;
            let p = ParameterSet::default();
            let s = HormoneState::new(r, a, c);
            prop_assert_eq!(rhs(t, &s, &p).unwrap(), rhs(t + 1440.0, &s, &p).unwrap());
        }

        #[test]
        fn production_nonnegative_when_clamped(t in 0.0f64..1440.0, r in 0.0f64..10.0, a in 0.0f64..10.0, c in 0.0f64..10.0) {
            let p = ParameterSet::default();
            let s = HormoneState::new(r, a, c);
            let d = rhs(t, &s, &p).unwrap();
            prop_assert!(d.dr >= -p.h1 * r - 1e-15);
            prop_assert!(d.da >= -p.h2 * a - 1e-15);
            prop_assert!(d.dc >= -p.h3 * c - 1e-15);
        }

        #[test]
        fn open_loop_fixed_point(p in feedback_free_params(), d in 0.0f64..1.5) {
            let p = ParameterSet { fixed_daylight: Some(d), ..p };
            let s = steady_state_open_loop(&p, d).unwrap();
            let der = rhs(0.0, &s, &p).unwrap();
            let scale = s.max_abs().max(1.0);
            prop_assert!(der.dr.abs() <= 1e-12 * scale);
            prop_assert!(der.da.abs() <= 1e-12 * scale);
            prop_assert!(der.dc.abs() <= 1e-12 * scale);
        }
    }
}
