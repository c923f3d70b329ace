//! Run configuration: INI-style `key = value` files, overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use expgeom::{make_family, Error, ExpFamily, Result, Route, ThetaDomain};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_N_LIST: [usize; 4] = [1, 2, 4, 8];

/// Keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 10] =
    ["family", "params", "theta", "n", "route", "tol", "seed", "out", "theta_lo", "theta_hi"];

/// Raw settings as strings, from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub family: Option<String>,
    pub params: Option<String>,
    pub theta: Option<String>,
    pub n: Option<String>,
    pub route: Option<String>,
    pub tol: Option<String>,
    pub seed: Option<String>,
    pub out: Option<String>,
    pub theta_lo: Option<String>,
    pub theta_hi: Option<String>,
}

impl Settings {
    /// Parses `key = value` lines. Blank lines, `#`/`;` comments and
    /// `[section]` headers are skipped; unknown keys are an error.
    pub fn parse_ini(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            let slot = match key {
                "family" => &mut s.family,
                "params" => &mut s.params,
                "theta" => &mut s.theta,
                "n" => &mut s.n,
                "route" => &mut s.route,
                "tol" => &mut s.tol,
                "seed" => &mut s.seed,
                "out" => &mut s.out,
                "theta_lo" => &mut s.theta_lo,
                "theta_hi" => &mut s.theta_hi,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}` (expected one of {})",
                        lineno + 1,
                        CONFIG_KEYS.join(", ")
                    )))
                }
            };
            *slot = Some(value);
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_ini(&text)
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: Settings) -> Settings {
        Settings {
            family: flags.family.or(self.family),
            params: flags.params.or(self.params),
            theta: flags.theta.or(self.theta),
            n: flags.n.or(self.n),
            route: flags.route.or(self.route),
            tol: flags.tol.or(self.tol),
            seed: flags.seed.or(self.seed),
            out: flags.out.or(self.out),
            theta_lo: flags.theta_lo.or(self.theta_lo),
            theta_hi: flags.theta_hi.or(self.theta_hi),
        }
    }
}

/// Validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: ExpFamily,
    pub thetas: Vec<Vec<f64>>,
    pub n_list: Vec<usize>,
    pub route: Route,
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("bad {what} entry `{s}`"))))
        .collect()
}

/// `grid`, or points separated by `;` with coordinates separated by `,`.
fn parse_thetas(text: &str, family: &ExpFamily) -> Result<Vec<Vec<f64>>> {
    if text.trim() == "grid" {
        return Ok(family.grid().to_vec());
    }
    let points = text
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| parse_list::<f64>("theta", p))
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(Error::Config("theta list is empty".into()));
    }
    for p in &points {
        if p.len() != family.order() {
            return Err(Error::Config(format!(
                "theta {p:?} has {} coordinates, {} expects {}",
                p.len(),
                family.name(),
                family.order()
            )));
        }
        family.check_domain(p).map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(points)
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let name = s.family.as_deref().ok_or_else(|| Error::Config("--family is required".into()))?;
        let params = match &s.params {
            Some(p) => parse_list::<usize>("params", p)?,
            None => Vec::new(),
        };
        let mut family = make_family(name, &params).map_err(|e| Error::Config(e.to_string()))?;
        if s.theta_lo.is_some() || s.theta_hi.is_some() {
            let lo = match &s.theta_lo {
                Some(t) => parse_list::<f64>("theta_lo", t)?,
                None => family.domain().lo.clone(),
            };
            let hi = match &s.theta_hi {
                Some(t) => parse_list::<f64>("theta_hi", t)?,
                None => family.domain().hi.clone(),
            };
            let domain = ThetaDomain::new(lo, hi).map_err(|e| Error::Config(e.to_string()))?;
            family = family.with_domain(domain).map_err(|e| Error::Config(e.to_string()))?;
        }
        let thetas = parse_thetas(s.theta.as_deref().unwrap_or("grid"), &family)?;
        let n_list = match &s.n {
            Some(n) => parse_list::<usize>("n", n)?,
            None => DEFAULT_N_LIST.to_vec(),
        };
        if n_list.is_empty() || n_list.contains(&0) || n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n list must be non-empty, positive and strictly ascending".into()));
        }
        let route = match &s.route {
            Some(r) => r.parse::<Route>().map_err(|e| Error::Config(e.to_string()))?,
            None => Route::A,
        };
        let tol = match &s.tol {
            Some(t) => {
                let v: f64 = t.trim().parse().map_err(|_| Error::Config(format!("bad tol `{t}`")))?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("tol must be positive, got {v}")));
                }
                Some(v)
            }
            None => None,
        };
        let seed = match &s.seed {
            Some(v) => v.trim().parse().map_err(|_| Error::Config(format!("bad seed `{v}`")))?,
            None => DEFAULT_SEED,
        };
        Ok(RunConfig { family, thetas, n_list, route, tol, seed, out: s.out.as_ref().map(PathBuf::from) })
    }
}
