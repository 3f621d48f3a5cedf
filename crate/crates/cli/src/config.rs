use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qwalk::coin::CoinPolicy;
use qwalk::graph::GraphDoc;
use qwalk::linalg::C64;
use serde::Deserialize;
use serde_json::Value;

use crate::spec::{self, GraphSpec};

pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_SAMPLES: usize = 1500;

#[derive(Debug)]
pub enum CliError {
    /// Invalid input, reported all at once.
    Config(Vec<String>),
    /// A result failed a numerical tolerance check.
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(problems) => {
                for (i, p) in problems.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<qwalk::Error> for CliError {
    fn from(e: qwalk::Error) -> Self {
        match e {
            qwalk::Error::Tolerance(_) => CliError::Numerical(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("i/o: {e}"))
    }
}

/// Collects validation failures so they can be reported together.
#[derive(Debug, Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    pub fn check<T, E: fmt::Display>(&mut self, field: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(format!("{field}: {e}"));
                None
            }
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.0))
        }
    }
}

/// Graph given in a config file, as a spec string or an inline document.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Spec(String),
    Document(GraphDoc),
}

/// Initial coin state: `"equal"`, `"basis:<port>"`, `"haar:<count>[:<seed>]"`
/// or a list of `(port, re, im)` triples.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitSource {
    Named(String),
    Ports(Vec<(usize, f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Equal,
    Basis(usize),
    Haar { count: usize, seed: Option<u64> },
    Ports(Vec<(usize, C64)>),
}

impl InitSpec {
    pub fn from_source(src: &InitSource) -> Result<Self, String> {
        match src {
            InitSource::Named(s) => s.parse(),
            InitSource::Ports(ps) => Ok(InitSpec::Ports(ps.iter().map(|&(k, re, im)| (k, C64::new(re, im))).collect())),
        }
    }
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "equal" {
            return Ok(InitSpec::Equal);
        }
        if s.starts_with('[') {
            let ps: Vec<(usize, f64, f64)> = serde_json::from_str(s).map_err(|e| format!("port list: {e}"))?;
            return InitSpec::from_source(&InitSource::Ports(ps));
        }
        if let Some(k) = s.strip_prefix("basis:") {
            return k.parse().map(InitSpec::Basis).map_err(|_| format!("bad port {k:?}"));
        }
        if let Some(rest) = s.strip_prefix("haar:") {
            let mut parts = rest.split(':');
            let count = parts
                .next()
                .and_then(|c| c.parse::<usize>().ok())
                .filter(|&c| c > 0)
                .ok_or_else(|| format!("bad sample count in {s:?}"))?;
            let seed = match parts.next() {
                Some(x) => Some(x.parse().map_err(|_| format!("bad seed in {s:?}"))?),
                None => None,
            };
            if parts.next().is_some() {
                return Err(format!("expected haar:<count>[:<seed>], got {s:?}"));
            }
            return Ok(InitSpec::Haar { count, seed });
        }
        Err(format!("unknown initial state {s:?} (expected equal, basis:<port>, haar:<count>[:<seed>] or a port list)"))
    }
}

/// Values read from `--config`. Every field is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub graph: Option<GraphSource>,
    pub policy: Option<Value>,
    pub policies: Option<Vec<String>>,
    pub init: Option<InitSource>,
    pub source: Option<usize>,
    pub target: Option<usize>,
    pub track: Option<Vec<usize>>,
    pub steps: Option<usize>,
    pub t_max: Option<f64>,
    pub time: Option<f64>,
    pub dt: Option<f64>,
    pub lambda: Option<f64>,
    pub pst_tol: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub basis: Option<String>,
    pub rates: Option<Vec<f64>>,
    pub base: Option<usize>,
    pub max_new: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub deltas: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
    pub random: Option<bool>,
    pub runs: Option<usize>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub couplings: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!("config {} line {} column {}: {e}", path.display(), e.line(), e.column()))
        })
    }

    pub fn check_command(&self, name: &str) -> Result<(), CliError> {
        match &self.command {
            Some(c) if c != name => Err(CliError::config(format!("config is for command {c:?} but {name:?} was run"))),
            _ => Ok(()),
        }
    }

    pub fn graph_spec(&self, flag: Option<&str>) -> Option<Result<GraphSpec, String>> {
        match (flag, &self.graph) {
            (Some(s), _) => Some(spec::parse(s, None)),
            (None, Some(GraphSource::Spec(s))) => Some(spec::parse(s, None)),
            (None, Some(GraphSource::Document(d))) => Some(Ok(GraphSpec::Document(d.clone()))),
            (None, None) => None,
        }
    }

    pub fn policy(&self, flag: Option<&str>) -> Result<CoinPolicy, String> {
        let text = match (flag, &self.policy) {
            (Some(s), _) => s.to_string(),
            (None, Some(Value::String(s))) => s.clone(),
            (None, Some(v)) => v.to_string(),
            (None, None) => return Ok(CoinPolicy::O2),
        };
        text.parse::<CoinPolicy>().map_err(|e| e.to_string())
    }

    pub fn init(&self, flag: Option<&str>) -> Result<InitSpec, String> {
        match (flag, &self.init) {
            (Some(s), _) => s.parse(),
            (None, Some(src)) => InitSpec::from_source(src),
            (None, None) => Ok(InitSpec::Equal),
        }
    }
}

/// Flag value, else config value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// A non-empty flag list, else the config list, else the default.
pub fn pick_list<T: Clone>(flag: &[T], file: &Option<Vec<T>>, default: impl FnOnce() -> Vec<T>) -> Vec<T> {
    if !flag.is_empty() {
        flag.to_vec()
    } else if let Some(v) = file {
        v.clone()
    } else {
        default()
    }
}
