//! `key = value` run configuration.
//!
//! Keys are namespaced (`model.`, `integrate.`, `fit.`, `sens.`, `output.`,
//! `data.`, `run.`). `#` starts a comment. Anything not set keeps its default,
//! so an empty file is the full default configuration.
//!
//! A resolved configuration serializes back to the same format
//! ([`RunConfig::to_text`]); run manifests are exactly that text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::calibration::ObjectiveKind;
use crate::error::{Error, Result};
use crate::integrator::{IntegrationConfig, StepMode};
use crate::io::fmt_float;
use crate::model::HormoneState;
use crate::params::{ParamName, ParameterSet};
use crate::sensitivity::DEFAULT_REL_STEP;

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub free: Vec<ParamName>,
    /// Bound overrides; unlisted free parameters get `[0.1x, 10x]` of the model value.
    pub lower: BTreeMap<ParamName, f64>,
    pub upper: BTreeMap<ParamName, f64>,
    /// Starting-point overrides; unlisted free parameters start at the model value.
    pub init: BTreeMap<ParamName, f64>,
    pub objective: ObjectiveKind,
    pub weight_acth: f64,
    pub weight_cortisol: f64,
    pub budget: usize,
    pub seed: u64,
    pub starts: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            free: ParamName::FITTED.to_vec(),
            lower: BTreeMap::new(),
            upper: BTreeMap::new(),
            init: BTreeMap::new(),
            objective: ObjectiveKind::SumMape,
            weight_acth: 1.0,
            weight_cortisol: 1.0,
            budget: 5000,
            seed: 0,
            starts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensSettings {
    pub rel_step: f64,
    /// Start of the analysed period (after burn-in).
    pub t0: f64,
    pub grid_step: f64,
    pub tol: f64,
    pub fd_check: bool,
}

impl Default for SensSettings {
    fn default() -> Self {
        Self {
            rel_step: DEFAULT_REL_STEP,
            t0: 0.0,
            grid_step: 1.0,
            tol: 1e-10,
            fd_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ParameterSet,
    pub integration: IntegrationConfig,
    pub fit: FitSettings,
    pub sens: SensSettings,
    pub output_dir: PathBuf,
    pub data_path: Option<PathBuf>,
    /// Subcommand recorded in a manifest.
    pub command: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ParameterSet::default(),
            integration: IntegrationConfig::default(),
            fit: FitSettings::default(),
            sens: SensSettings::default(),
            output_dir: PathBuf::from("out"),
            data_path: None,
            command: None,
        }
    }
}

fn num(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{value}` is not finite"))
    }
}

fn positive(value: &str) -> std::result::Result<f64, String> {
    let v = num(value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be > 0"))
    }
}

fn boolean(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{value}` is not true/false")),
    }
}

fn count(value: &str) -> std::result::Result<usize, String> {
    match value.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("`{value}` is not a positive integer")),
    }
}

pub fn parse_param_list(value: &str) -> Result<Vec<ParamName>> {
    let mut names = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let name: ParamName = item.parse()?;
        if names.contains(&name) {
            return Err(Error::InvalidConfig(format!("{name} listed twice")));
        }
        names.push(name);
    }
    if names.is_empty() {
        return Err(Error::InvalidConfig("empty parameter list".into()));
    }
    Ok(names)
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            if let Some(first) = seen.insert(key.to_string(), line_no) {
                return Err(err(format!(
                    "duplicate key `{key}` (first set on line {first})"
                )));
            }
            cfg.apply(key, value).map_err(err)?;
        }
        cfg.check().map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: 0,
                msg: other.to_string(),
            },
        })?;
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let unknown = || format!("unknown key `{key}`");
        let (ns, rest) = key.split_once('.').ok_or_else(unknown)?;
        match ns {
            "model" => match rest {
                "clamp_production" => self.model.clamp_production = boolean(value)?,
                "fixed_daylight" => {
                    self.model.fixed_daylight = match value {
                        "none" => None,
                        v => {
                            let d = num(v)?;
                            if d < 0.0 {
                                return Err(format!("fixed_daylight = {d} must be >= 0"));
                            }
                            Some(d)
                        }
                    }
                }
                name => {
                    let name: ParamName = name.parse().map_err(|_| unknown())?;
                    let v = num(value)?;
                    name.check(v).map_err(|e| e.to_string())?;
                    self.model.set(name, v);
                }
            },
            "integrate" => {
                let ic = &mut self.integration;
                match rest {
                    "t0_min" => ic.t0 = num(value)?,
                    "t_end_min" => ic.t_end = num(value)?,
                    "dt_min" => ic.dt = positive(value)?,
                    "mode" => {
                        ic.mode = match value {
                            "fixed" => StepMode::Fixed,
                            "adaptive" => StepMode::Adaptive,
                            _ => return Err(format!("mode `{value}` is not fixed/adaptive")),
                        }
                    }
                    "abs_tol" => ic.abs_tol = positive(value)?,
                    "rel_tol" => ic.rel_tol = positive(value)?,
                    "burn_in_min" => {
                        let v = num(value)?;
                        if v < 0.0 {
                            return Err(format!("burn_in_min = {v} must be >= 0"));
                        }
                        ic.burn_in = v;
                    }
                    "output_step_min" => ic.output_step = positive(value)?,
                    "initial_state" => {
                        ic.initial_state = match value {
                            "auto" => None,
                            v => {
                                let parts: Vec<f64> = v
                                    .split(',')
                                    .map(|s| num(s.trim()))
                                    .collect::<std::result::Result<_, _>>()?;
                                if parts.len() != 3 {
                                    return Err("initial_state needs `crh,acth,cortisol`".into());
                                }
                                Some(HormoneState::new(parts[0], parts[1], parts[2]))
                            }
                        }
                    }
                    _ => return Err(unknown()),
                }
            }
            "fit" => {
                let fs = &mut self.fit;
                match rest {
                    "free" => fs.free = parse_param_list(value).map_err(|e| e.to_string())?,
                    "objective" => {
                        fs.objective = match value {
                            "sum-mape" => ObjectiveKind::SumMape,
                            "sum-of-squares" => ObjectiveKind::SumOfSquares,
                            _ => {
                                return Err(format!(
                                    "objective `{value}` is not sum-mape/sum-of-squares"
                                ))
                            }
                        }
                    }
                    "weight_acth" | "weight_cortisol" => {
                        let v = num(value)?;
                        if v < 0.0 {
                            return Err(format!("{rest} = {v} must be >= 0"));
                        }
                        if rest == "weight_acth" {
                            fs.weight_acth = v;
                        } else {
                            fs.weight_cortisol = v;
                        }
                    }
                    "budget" => fs.budget = count(value)?,
                    "starts" => fs.starts = count(value)?,
                    "seed" => {
                        fs.seed = value
                            .parse()
                            .map_err(|_| format!("`{value}` is not a seed"))?
                    }
                    other => {
                        let (table, name) = other.split_once('.').ok_or_else(unknown)?;
                        let name: ParamName = name.parse().map_err(|_| unknown())?;
                        let v = positive(value)?;
                        let map = match table {
                            "lower" => &mut fs.lower,
                            "upper" => &mut fs.upper,
                            "init" => &mut fs.init,
                            _ => return Err(unknown()),
                        };
                        map.insert(name, v);
                    }
                }
            }
            "sens" => {
                let s = &mut self.sens;
                match rest {
                    "rel_step" => {
                        let v = num(value)?;
                        if !(v > 0.0 && v <= 0.5) {
                            return Err(format!("rel_step = {v} must lie in (0, 0.5]"));
                        }
                        s.rel_step = v;
                    }
                    "t0_min" => s.t0 = num(value)?,
                    "grid_step_min" => s.grid_step = positive(value)?,
                    "tol" => s.tol = positive(value)?,
                    "fd_check" => s.fd_check = boolean(value)?,
                    _ => return Err(unknown()),
                }
            }
            "output" if rest == "dir" => self.output_dir = PathBuf::from(value),
            "data" if rest == "path" => {
                self.data_path = (!value.is_empty()).then(|| PathBuf::from(value))
            }
            "run" if rest == "command" => self.command = Some(value.to_string()),
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Cross-field checks that single keys cannot express.
    pub fn check(&self) -> Result<()> {
        self.model.validate()?;
        self.integration.validate()?;
        for map in [&self.fit.lower, &self.fit.upper, &self.fit.init] {
            for name in map.keys() {
                if !self.fit.free.contains(name) {
                    return Err(Error::InvalidConfig(format!(
                        "fit override for {name}, which is not in fit.free"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolved configuration in the same `key = value` format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(cmd) = &self.command {
            kv("run.command", cmd.clone());
        }
        for name in ParamName::ALL {
            kv(&format!("model.{name}"), fmt_float(self.model.get(name)));
        }
        kv(
            "model.clamp_production",
            self.model.clamp_production.to_string(),
        );
        kv(
            "model.fixed_daylight",
            self.model.fixed_daylight.map_or("none".into(), fmt_float),
        );

        let ic = &self.integration;
        kv("integrate.t0_min", fmt_float(ic.t0));
        kv("integrate.t_end_min", fmt_float(ic.t_end));
        kv("integrate.dt_min", fmt_float(ic.dt));
        kv(
            "integrate.mode",
            match ic.mode {
                StepMode::Fixed => "fixed".into(),
                StepMode::Adaptive => "adaptive".into(),
            },
        );
        kv("integrate.abs_tol", fmt_float(ic.abs_tol));
        kv("integrate.rel_tol", fmt_float(ic.rel_tol));
        kv("integrate.burn_in_min", fmt_float(ic.burn_in));
        kv("integrate.output_step_min", fmt_float(ic.output_step));
        kv(
            "integrate.initial_state",
            ic.initial_state.map_or("auto".into(), |st| {
                format!(
                    "{},{},{}",
                    fmt_float(st.r),
                    fmt_float(st.a),
                    fmt_float(st.c)
                )
            }),
        );

        let fs = &self.fit;
        kv(
            "fit.free",
            fs.free
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        for (table, map) in [
            ("lower", &fs.lower),
            ("upper", &fs.upper),
            ("init", &fs.init),
        ] {
            for (name, v) in map {
                kv(&format!("fit.{table}.{name}"), fmt_float(*v));
            }
        }
        kv(
            "fit.objective",
            match fs.objective {
                ObjectiveKind::SumMape => "sum-mape".into(),
                ObjectiveKind::SumOfSquares => "sum-of-squares".into(),
            },
        );
        kv("fit.weight_acth", fmt_float(fs.weight_acth));
        kv("fit.weight_cortisol", fmt_float(fs.weight_cortisol));
        kv("fit.budget", fs.budget.to_string());
        kv("fit.seed", fs.seed.to_string());
        kv("fit.starts", fs.starts.to_string());

        let se = &self.sens;
        kv("sens.rel_step", fmt_float(se.rel_step));
        kv("sens.t0_min", fmt_float(se.t0));
        kv("sens.grid_step_min", fmt_float(se.grid_step));
        kv("sens.tol", fmt_float(se.tol));
        kv("sens.fd_check", se.fd_check.to_string());

        kv("output.dir", self.output_dir.display().to_string());
        if let Some(p) = &self.data_path {
            kv("data.path", p.display().to_string());
        }
        s
    }
}

/// Free-function form of [`RunConfig::parse_file`].
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    RunConfig::parse_file(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_line(text: &str) -> (usize, String) {
        match RunConfig::parse_str(text) {
            Err(Error::Parse { line, msg }) => (line, msg),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::parse_str("").unwrap(), RunConfig::default());
        assert_eq!(
            RunConfig::parse_str("# only a comment\n\n   \n").unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn single_override() {
        let cfg = RunConfig::parse_str("model.k4 = 0.0801").unwrap();
        let expected = RunConfig {
            model: ParameterSet {
                k4: 0.0801,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(cfg, expected);
    }

    #[test]
    fn namespaced_keys() {
        let cfg = RunConfig::parse_str(
            "model.k5 = 0.00430\n\
             integrate.burn_in_min = 14400   # ten days\n\
             fit.free = k1,k2,k3,k4,k5\n\
             sens.rel_step = 1e-3\n\
             integrate.mode = fixed\n\
             fit.lower.k5 = 0.001\n\
             model.fixed_daylight = 0.4\n\
             integrate.initial_state = 1,2,3\n",
        )
        .unwrap();
        assert_eq!(cfg.integration.burn_in, 14400.0);
        assert_eq!(cfg.integration.mode, StepMode::Fixed);
        assert_eq!(cfg.fit.free, ParamName::FITTED.to_vec());
        assert_eq!(cfg.fit.lower.get(&ParamName::K5), Some(&0.001));
        assert_eq!(cfg.model.fixed_daylight, Some(0.4));
        assert_eq!(
            cfg.integration.initial_state,
            Some(HormoneState::new(1.0, 2.0, 3.0))
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let (line, msg) = err_line("model.k4 = 0.08\nmodel.k9 = 1\n");
        assert_eq!(line, 2);
        assert!(msg.contains("unknown key"), "{msg}");

        let (line, msg) = err_line("\n\nthis line is malformed\n");
        assert_eq!(line, 3);
        assert!(msg.contains("key = value"));

        let (line, msg) = err_line("model.phi = 1.5\n");
        assert_eq!(line, 1);
        assert!(msg.contains("domain"), "{msg}");

        let (line, _) = err_line("model.k1 = abc\n");
        assert_eq!(line, 1);
        let (line, _) = err_line("integrate.dt_min = 0\n");
        assert_eq!(line, 1);
        let (line, _) = err_line("fit.free = k1,k99\n");
        assert_eq!(line, 1);
        let (line, _) = err_line("model.k1 = 1\nmodel.k1 = 2\n");
        assert_eq!(line, 2);
        let (line, _) = err_line("sens.rel_step = 0.9\n");
        assert_eq!(line, 1);
        let (line, _) = err_line("fit.bounds.k1 = 1\n");
        assert_eq!(line, 1);
    }

    #[test]
    fn resolved_text_parses_back() {
        let mut cfg = RunConfig::parse_str(
            "model.k4 = 0.0801\nfit.upper.k5 = 0.03\nintegrate.t_end_min = 2880\n",
        )
        .unwrap();
        cfg.command = Some("simulate".into());
        cfg.data_path = Some(PathBuf::from("data/x.csv"));
        let back = RunConfig::parse_str(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_must_be_free() {
        let (_, msg) = err_line("fit.free = k5\nfit.init.k1 = 0.5\n");
        assert!(msg.contains("not in fit.free"));
    }
}
