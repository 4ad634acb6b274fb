//! Model parameters and their names.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The 19 scalar model parameters, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamName {
    K1,
    K2,
    K3,
    K4,
    K5,
    H1,
    H2,
    H3,
    RC,
    RA,
    RD,
    Alpha,
    Beta,
    Gamma,
    Delta,
    Phi,
    Psi,
    Xi,
    Rho,
}

impl ParamName {
    pub const ALL: [ParamName; 19] = [
        ParamName::K1,
        ParamName::K2,
        ParamName::K3,
        ParamName::K4,
        ParamName::K5,
        ParamName::H1,
        ParamName::H2,
        ParamName::H3,
        ParamName::RC,
        ParamName::RA,
        ParamName::RD,
        ParamName::Alpha,
        ParamName::Beta,
        ParamName::Gamma,
        ParamName::Delta,
        ParamName::Phi,
        ParamName::Psi,
        ParamName::Xi,
        ParamName::Rho,
    ];

    /// Production rates estimated from data by default.
    pub const FITTED: [ParamName; 5] = [
        ParamName::K1,
        ParamName::K2,
        ParamName::K3,
        ParamName::K4,
        ParamName::K5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::K1 => "k1",
            ParamName::K2 => "k2",
            ParamName::K3 => "k3",
            ParamName::K4 => "k4",
            ParamName::K5 => "k5",
            ParamName::H1 => "h1",
            ParamName::H2 => "h2",
            ParamName::H3 => "h3",
            ParamName::RC => "R_C",
            ParamName::RA => "R_A",
            ParamName::RD => "R_D",
            ParamName::Alpha => "alpha",
            ParamName::Beta => "beta",
            ParamName::Gamma => "gamma",
            ParamName::Delta => "delta",
            ParamName::Phi => "phi",
            ParamName::Psi => "psi",
            ParamName::Xi => "xi",
            ParamName::Rho => "rho",
        }
    }

    /// Checks a candidate value against this parameter's domain.
    pub fn check(self, value: f64) -> Result<()> {
        let ok = value.is_finite()
            && match self {
                ParamName::K1
                | ParamName::K2
                | ParamName::K3
                | ParamName::K4
                | ParamName::K5
                | ParamName::H1
                | ParamName::H2
                | ParamName::H3
                | ParamName::RC
                | ParamName::RA
                | ParamName::RD => value > 0.0,
                ParamName::Alpha | ParamName::Beta | ParamName::Gamma | ParamName::Delta => {
                    value >= 1.0
                }
                ParamName::Phi | ParamName::Rho => (0.0..=1.0).contains(&value),
                ParamName::Psi | ParamName::Xi => value >= 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{} = {} is outside its domain ({})",
                self,
                value,
                self.domain()
            )))
        }
    }

    fn domain(self) -> &'static str {
        match self {
            ParamName::Alpha | ParamName::Beta | ParamName::Gamma | ParamName::Delta => ">= 1",
            ParamName::Phi | ParamName::Rho => "[0, 1]",
            ParamName::Psi | ParamName::Xi => ">= 0",
            _ => "> 0",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

/// Rate constants, saturation constants, Hill exponents and inhibition levels.
///
/// `xi` is the net coefficient of the cortisol `C^beta` Hill term acting on
/// CRH production (negative feedback minus hippocampal GR drive); `psi` is the
/// hippocampal MR coefficient on the `C^delta` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub r_c: f64,
    pub r_a: f64,
    pub r_d: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub phi: f64,
    pub psi: f64,
    pub xi: f64,
    pub rho: f64,
    /// Clamp the CRH feedback factor at zero so production never goes negative.
    pub clamp_production: bool,
    /// Replace the daylight forcing by a constant. `None` uses the circadian curve.
    pub fixed_daylight: Option<f64>,
}

// k2 happens to sit near log10(e)
#[allow(clippy::approx_constant)]
impl Default for ParameterSet {
    fn default() -> Self {
        Self {
            k1: 0.5703,
            k2: 0.4342,
            k3: 0.2166,
            k4: 0.0821,
            k5: 0.00430,
            h1: 0.1732,
            h2: 0.0315,
            h3: 0.0105,
            r_c: 1.12,
            r_a: 0.78,
            r_d: 1.3,
            alpha: 4.0,
            beta: 3.0,
            gamma: 3.0,
            delta: 3.0,
            phi: 0.160,
            psi: 0.5,
            xi: 2.0,
            rho: 0.304,
            clamp_production: true,
            fixed_daylight: None,
        }
    }
}

impl ParameterSet {
    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::K1 => self.k1,
            ParamName::K2 => self.k2,
            ParamName::K3 => self.k3,
            ParamName::K4 => self.k4,
            ParamName::K5 => self.k5,
            ParamName::H1 => self.h1,
            ParamName::H2 => self.h2,
            ParamName::H3 => self.h3,
            ParamName::RC => self.r_c,
            ParamName::RA => self.r_a,
            ParamName::RD => self.r_d,
            ParamName::Alpha => self.alpha,
            ParamName::Beta => self.beta,
            ParamName::Gamma => self.gamma,
            ParamName::Delta => self.delta,
            ParamName::Phi => self.phi,
            ParamName::Psi => self.psi,
            ParamName::Xi => self.xi,
            ParamName::Rho => self.rho,
        }
    }

    /// Sets a parameter without domain checking. See [`ParameterSet::validate`].
    pub fn set(&mut self, name: ParamName, value: f64) {
        let slot = match name {
            ParamName::K1 => &mut self.k1,
            ParamName::K2 => &mut self.k2,
            ParamName::K3 => &mut self.k3,
            ParamName::K4 => &mut self.k4,
            ParamName::K5 => &mut self.k5,
            ParamName::H1 => &mut self.h1,
            ParamName::H2 => &mut self.h2,
            ParamName::H3 => &mut self.h3,
            ParamName::RC => &mut self.r_c,
            ParamName::RA => &mut self.r_a,
            ParamName::RD => &mut self.r_d,
            ParamName::Alpha => &mut self.alpha,
            ParamName::Beta => &mut self.beta,
            ParamName::Gamma => &mut self.gamma,
            ParamName::Delta => &mut self.delta,
            ParamName::Phi => &mut self.phi,
            ParamName::Psi => &mut self.psi,
            ParamName::Xi => &mut self.xi,
            ParamName::Rho => &mut self.rho,
        };
        *slot = value;
    }

    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.set(name, value);
        self
    }

    /// Copy with all four feedback coefficients (phi, rho, psi, xi) zeroed.
    pub fn feedback_free(mut self) -> Self {
        self.phi = 0.0;
        self.rho = 0.0;
        self.psi = 0.0;
        self.xi = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for name in ParamName::ALL {
            name.check(self.get(name))?;
        }
        if let Some(d) = self.fixed_daylight {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::Domain(format!("fixed_daylight = {d} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_table() {
        let p = ParameterSet::default();
        p.validate().unwrap();
        assert_eq!(p.k5, 0.00430);
        assert_eq!(p.h1, 0.1732);
        assert_eq!(p.xi, 2.0);
        assert_eq!(p.delta, p.beta);
        assert!(p.clamp_production);
    }

    #[test]
    fn names_round_trip() {
        for name in ParamName::ALL {
            assert_eq!(name.as_str().parse::<ParamName>().unwrap(), name);
        }
        assert!(matches!(
            "k9".parse::<ParamName>(),
            Err(Error::UnknownParameter(_))
        ));
    }

    #[test]
    fn get_set_agree() {
        let mut p = ParameterSet::default();
        for (i, name) in ParamName::ALL.into_iter().enumerate() {
            p.set(name, 10.0 + i as f64);
        }
        for (i, name) in ParamName::ALL.into_iter().enumerate() {
            assert_eq!(p.get(name), 10.0 + i as f64);
        }
    }

    #[test]
    fn domain_checks() {
        assert!(ParamName::K1.check(0.0).is_err());
        assert!(ParamName::Alpha.check(0.5).is_err());
        assert!(ParamName::Phi.check(1.2).is_err());
        assert!(ParamName::Xi.check(-0.1).is_err());
        assert!(ParamName::Xi.check(0.0).is_ok());
        assert!(ParamName::H3.check(f64::NAN).is_err());
        let p = ParameterSet {
            fixed_daylight: Some(-1.0),
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
