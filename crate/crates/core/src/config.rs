//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are rejected.
//! Every key has a default, so [`Config::resolved`] gives the complete set of
//! values a run actually used.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::str::FromStr;

use crate::closedform::{solve_scale_ode, SpecialSolutionParams};
use crate::error::{Error, Result};
use crate::fields::{snapshot, GridSpec, ModelParams, Topology};
use crate::flows::{InitialCondition, Regime, RunConfig, ScaleSettings, Tolerances};

/// Recognised keys with their defaults. `auto` defers to other keys.
pub const KEYS: &[(&str, &str)] = &[
    ("p", "2"),
    ("c", "inf"),
    ("eps", "1e-8"),
    ("n", "1"),
    ("N", "256"),
    ("domain", "torus"),
    ("lo", "auto"),
    ("hi", "auto"),
    ("t0", "1"),
    ("T", "1.5"),
    ("regime", "auto"),
    ("sigma", "0.4"),
    ("dt-max", "0.01"),
    ("diag-every", "1"),
    ("ic", "auto"),
    ("seed", "0"),
    ("amp", "0.1"),
    ("swirl", "0.5"),
    ("ic-rho", ""),
    ("ic-phi", ""),
    ("w0", "1"),
    ("wdot0", "1"),
    ("beta0", "0"),
    ("scale-dt", "1e-4"),
    ("eta-lower", "auto"),
    ("mass-tol", "1e-6"),
    ("consistency-factor", "10"),
    ("curl-factor", "10"),
    ("dump-fields", "false"),
];

fn default_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim();
            if cfg.values.contains_key(key) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            cfg.set(key, v.trim())?;
        }
        Ok(cfg)
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    /// Builds a config from `(key, value)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = Config::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if default_of(key).is_none() {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Explicitly set value, if any.
    pub fn explicit(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Value with the default filled in.
    pub fn get(&self, key: &str) -> Result<&str> {
        match self.values.get(key) {
            Some(v) => Ok(v),
            None => default_of(key).ok_or_else(|| Error::Config(format!("unknown key '{key}'"))),
        }
    }

    /// `self` with every key of `other` applied on top.
    pub fn overridden_by(&self, other: &Config) -> Config {
        let mut out = self.clone();
        for (k, v) in &other.values {
            out.values.insert(k.clone(), v.clone());
        }
        out
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{raw}'")))
    }

    fn parse_f64(&self, key: &str) -> Result<f64> {
        self.parse_value::<f64>(key)
    }

    fn parse_optional_f64(&self, key: &str, off: &str) -> Result<Option<f64>> {
        let raw = self.get(key)?;
        if raw == off {
            Ok(None)
        } else {
            self.parse_f64(key).map(Some)
        }
    }

    fn parse_bool(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Config(format!("key '{key}': expected a boolean, got '{other}'"))),
        }
    }

    pub fn dump_fields(&self) -> Result<bool> {
        self.parse_bool("dump-fields")
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.parse_f64("p")?,
            self.parse_f64("c")?,
            self.parse_f64("eps")?,
            self.parse_value("n")?,
        )
    }

    pub fn regime(&self) -> Result<Regime> {
        match self.get("regime")? {
            "auto" => {
                let c = self.parse_f64("c")?;
                Ok(if c == 0.0 {
                    Regime::Pheat
                } else if c.is_infinite() {
                    Regime::Geodesic
                } else {
                    Regime::Langevin
                })
            }
            other => other.parse(),
        }
    }

    fn topology(&self) -> Result<Topology> {
        match self.get("domain")? {
            "torus" | "periodic" => Ok(Topology::Periodic),
            "box" => Ok(Topology::Box),
            other => Err(Error::Config(format!("domain must be torus or box, got '{other}'"))),
        }
    }

    fn ic_name(&self) -> Result<&str> {
        match self.get("ic")? {
            "auto" => Ok(match self.topology()? {
                Topology::Periodic => "perturbed",
                Topology::Box => "special",
            }),
            other => Ok(other),
        }
    }

    fn scale_settings(&self) -> Result<ScaleSettings> {
        Ok(ScaleSettings {
            w0: self.parse_f64("w0")?,
            wdot0: self.parse_f64("wdot0")?,
            beta0: self.parse_f64("beta0")?,
            dt: self.parse_f64("scale-dt")?,
            eta_lower: self.parse_optional_f64("eta-lower", "auto")?,
        })
    }

    /// Half-width of a box wide enough for the self-similar profile up to `T`.
    fn special_half_width(&self, params: &ModelParams, scale: &ScaleSettings) -> Result<f64> {
        let (t0, t_end) = (self.parse_f64("t0")?, self.parse_f64("T")?);
        let traj = solve_scale_ode(params.c(), params.p(), scale.w0, scale.wdot0, t0, t_end, scale.dt)?;
        let w_max = traj.states().iter().fold(0.0f64, |m, s| m.max(s.w));
        Ok(SpecialSolutionParams::new(params.dim(), params.p(), params.c(), w_max)?.half_width)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let params = self.model_params()?;
        let topology = self.topology()?;
        let points: usize = self.parse_value("N")?;
        let (lo, hi) = match (self.get("lo")?, self.get("hi")?) {
            ("auto", "auto") => match topology {
                Topology::Periodic => (0.0, TAU),
                Topology::Box => {
                    let l = self.special_half_width(&params, &self.scale_settings()?)?;
                    (-l, l)
                }
            },
            ("auto", _) | (_, "auto") => {
                return Err(Error::Config("lo and hi must both be set or both be auto".into()))
            }
            _ => (self.parse_f64("lo")?, self.parse_f64("hi")?),
        };
        let n = params.dim();
        GridSpec::new(&vec![lo; n], &vec![hi; n], &vec![points; n], topology)
    }

    fn initial_condition(&self) -> Result<InitialCondition> {
        let seed: u64 = self.parse_value("seed")?;
        let amplitude = self.parse_f64("amp")?;
        match self.ic_name()? {
            "special" => Ok(InitialCondition::Special),
            "perturbed" => Ok(InitialCondition::Perturbed { seed, amplitude }),
            "rotational" => Ok(InitialCondition::Rotational { seed, amplitude, swirl: self.parse_f64("swirl")? }),
            "fields" => {
                let (r, f) = (self.get("ic-rho")?, self.get("ic-phi")?);
                if r.is_empty() || f.is_empty() {
                    return Err(Error::Config("ic = fields needs ic-rho and ic-phi".into()));
                }
                Ok(InitialCondition::Fields { rho: snapshot::load(r)?, phi: snapshot::load(f)? })
            }
            other => Err(Error::Config(format!(
                "ic must be special, perturbed, rotational or fields, got '{other}'"
            ))),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let params = self.model_params()?;
        let initial = self.initial_condition()?;
        let grid = match &initial {
            InitialCondition::Fields { rho, .. } => *rho.grid(),
            _ => self.grid()?,
        };
        let mut rc = RunConfig::new(params, grid, self.regime()?, self.parse_f64("t0")?, self.parse_f64("T")?);
        rc.sigma = self.parse_f64("sigma")?;
        rc.dt_max = self.parse_f64("dt-max")?;
        rc.diag_every = self.parse_value("diag-every")?;
        rc.tolerances = Tolerances {
            mass: self.parse_f64("mass-tol")?,
            consistency_factor: self.parse_optional_f64("consistency-factor", "off")?,
            curl_factor: self.parse_optional_f64("curl-factor", "off")?,
            ..Tolerances::default()
        };
        rc.initial = initial;
        rc.scale = self.scale_settings()?;
        rc.validate()?;
        Ok(rc)
    }

    /// Every key with its effective value; `auto` entries are replaced by what
    /// they resolved to where that is cheap to state.
    pub fn resolved(&self) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (k, _) in KEYS {
            out.insert(k.to_string(), self.get(k)?.to_string());
        }
        out.insert("regime".into(), self.regime()?.name().to_string());
        out.insert("ic".into(), self.ic_name()?.to_string());
        if self.ic_name()? != "fields" {
            let g = self.grid()?;
            out.insert("lo".into(), format!("{}", g.lo()[0]));
            out.insert("hi".into(), format!("{}", g.hi()[0]));
        }
        Ok(out)
    }
}
