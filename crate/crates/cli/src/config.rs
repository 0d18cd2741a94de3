//! Experiment configuration: nested key-value text with dotted keys.
//!
//! ```text
//! seed = 42
//! optimizer = "lkbo_fvse"      # a prefix may carry a value of its own
//!
//! [optimizer]                  # section header prefixes following keys
//! lambda = 1.0
//! init_box = [-3, 3]
//!
//! [benchmark]
//! col_values = ["uniform", "exponential", "normal"]
//! ```
//!
//! Values are strings, numbers, booleans, or homogeneous lists of numbers or
//! strings. `--overrides a.b=v` strings use the same `key = value` grammar.
//! Every key must appear in the schema below; lookups never invent keys, so
//! the per-subcommand `--help` listing stays in sync with what the code
//! reads (a test enforces that).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Str(String),
    Num(f64),
    Bool(bool),
    NumList(Vec<f64>),
    StrList(Vec<String>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::NumList(_) => "number list",
            Value::StrList(_) => "string list",
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parsed configuration: a flat map keyed by dotted paths.
#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut prefix = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            if let Some(section) = line.strip_prefix('[') {
                let section = section
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError(format!("line {}: unterminated section header", lineno + 1)))?
                    .trim();
                if section.is_empty() {
                    return err(format!("line {}: empty section header", lineno + 1));
                }
                prefix = format!("{section}.");
                continue;
            }
            let (key, value) = parse_assignment(&line)
                .map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e.0)))?;
            cfg.values.insert(format!("{prefix}{key}"), value);
        }
        Ok(cfg)
    }

    /// Apply one `key=value` override (no section headers).
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = parse_assignment(assignment)
            .map_err(|e| ConfigError(format!("override `{assignment}`: {}", e.0)))?;
        self.values.insert(key, value);
        Ok(())
    }

    /// Reject keys not present in the schema, naming the offender.
    pub fn validate_keys(&self) -> Result<(), ConfigError> {
        for key in self.values.keys() {
            if !SCHEMA.iter().any(|doc| doc.key == key) {
                return err(format!("unknown config key `{key}`"));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Value> {
        debug_assert!(
            SCHEMA.iter().any(|doc| doc.key == key),
            "lookup of unlisted config key `{key}`"
        );
        self.values.get(key)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Str(s)) => Ok(s),
            Some(other) => type_error(key, "string", other),
        }
    }

    pub fn require_str(&self, key: &str) -> Result<&str, ConfigError> {
        match self.get(key) {
            None => err(format!("missing required config key `{key}`")),
            Some(Value::Str(s)) => Ok(s),
            Some(other) => type_error(key, "string", other),
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Num(x)) => Ok(Some(*x)),
            Some(other) => type_error(key, "number", other),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64_opt(key)?
            .ok_or_else(|| ConfigError(format!("missing required config key `{key}`")))
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.f64_opt(key)? {
            None => Ok(None),
            // 2^53 bounds the exactly-representable integers.
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => {
                Ok(Some(x as usize))
            }
            Some(x) => err(format!("config key `{key}`: expected nonnegative integer, got {x}")),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.usize_opt(key)?
            .ok_or_else(|| ConfigError(format!("missing required config key `{key}`")))
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.f64_opt(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 => Ok(Some(x as u64)),
            Some(x) => err(format!("config key `{key}`: expected unsigned integer, got {x}")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(other) => type_error(key, "boolean", other),
        }
    }

    pub fn num_list_opt(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::NumList(v)) => Ok(Some(v.clone())),
            Some(Value::Num(x)) => Ok(Some(vec![*x])),
            Some(other) => type_error(key, "number list", other),
        }
    }

    pub fn str_list_opt(&self, key: &str) -> Result<Option<Vec<String>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::StrList(v)) => Ok(Some(v.clone())),
            Some(Value::Str(s)) => Ok(Some(vec![s.clone()])),
            Some(other) => type_error(key, "string list", other),
        }
    }
}

fn type_error<T>(key: &str, expected: &str, found: &Value) -> Result<T, ConfigError> {
    err(format!(
        "config key `{key}`: expected {expected}, found {} ({found:?})",
        found.type_name()
    ))
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_assignment(line: &str) -> Result<(String, Value), ConfigError> {
    let eq = line
        .find('=')
        .ok_or_else(|| ConfigError(format!("expected `key = value`, got `{line}`")))?;
    let key = line[..eq].trim();
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
        return err(format!("invalid key `{key}`"));
    }
    let value = parse_value(line[eq + 1..].trim())?;
    Ok((key.to_string(), value))
}

fn parse_value(text: &str) -> Result<Value, ConfigError> {
    if text.is_empty() {
        return err("empty value");
    }
    if let Some(stripped) = text.strip_prefix('"') {
        let inner = stripped
            .strip_suffix('"')
            .ok_or_else(|| ConfigError(format!("unterminated string `{text}`")))?;
        return Ok(Value::Str(inner.to_string()));
    }
    if text == "true" {
        return Ok(Value::Bool(true));
    }
    if text == "false" {
        return Ok(Value::Bool(false));
    }
    if let Some(stripped) = text.strip_prefix('[') {
        let inner = stripped
            .strip_suffix(']')
            .ok_or_else(|| ConfigError(format!("unterminated list `{text}`")))?
            .trim();
        if inner.is_empty() {
            return Ok(Value::NumList(Vec::new()));
        }
        let items: Vec<&str> = inner.split(',').map(str::trim).collect();
        if items.iter().all(|i| i.starts_with('"')) {
            let mut out = Vec::new();
            for item in items {
                match parse_value(item)? {
                    Value::Str(s) => out.push(s),
                    _ => return err(format!("mixed list `{text}`")),
                }
            }
            return Ok(Value::StrList(out));
        }
        let mut out = Vec::new();
        for item in items {
            out.push(
                item.parse::<f64>()
                    .map_err(|_| ConfigError(format!("invalid number `{item}` in list")))?,
            );
        }
        return Ok(Value::NumList(out));
    }
    text.parse::<f64>()
        .map(Value::Num)
        .map_err(|_| ConfigError(format!("invalid value `{text}` (quote strings)")))
}

/// One schema entry: the dotted key and its help line.
pub struct KeyDoc {
    pub key: &'static str,
    pub doc: &'static str,
}

macro_rules! keys {
    ($($key:literal => $doc:literal),* $(,)?) => {
        &[ $( KeyDoc { key: $key, doc: $doc } ),* ]
    };
}

/// Keys every subcommand understands.
pub const COMMON_KEYS: &[KeyDoc] = keys![
    "seed" => "master seed (u64); the --seed flag overrides it",
    "objective.name" => "registered objective: stochastic_rastrigin | bounded_cosine_toy | quadratic",
    "objective.dim" => "search-space dimension d",
    "objective.B" => "Rastrigin minimizer shift B (default 0)",
    "objective.C" => "Rastrigin value shift C (default 0)",
    "sampling.theta" => "scalar law: uniform | exponential | normal (default uniform)",
    "sampling.M" => "sample size M per realization (default 50)",
    "sampling.lo" => "uniform law lower end (default 0.1)",
    "sampling.hi" => "uniform law upper end (default 1.9)",
    "sampling.rate" => "exponential law rate (default 1)",
    "sampling.mean" => "normal law mean (default 1)",
    "sampling.var" => "normal law variance (default 1)",
    "optimizer" => "optimizer kind: lkbo_fvse | lkbo_fvse_sy | cbo | cbo_ffs (also optimizer.kind)",
    "optimizer.kind" => "alias for the bare `optimizer` key",
    "optimizer.lambda" => "drift rate lambda",
    "optimizer.sigma" => "diffusion strength sigma",
    "optimizer.alpha" => "consensus weight exponent alpha",
    "optimizer.dt" => "time step dt",
    "optimizer.eta" => "interaction time scale eta, dt/eta <= 1 (default dt)",
    "optimizer.epsilon" => "quasi-invariant scaling epsilon (default 1)",
    "optimizer.N" => "ensemble size N",
    "optimizer.n_it" => "iteration budget",
    "optimizer.diffusion" => "isotropic | anisotropic (default anisotropic)",
    "optimizer.n_sY" => "realizations averaged per iterate / inner runs (default 1)",
    "optimizer.init_box" => "uniform init box [lo, hi] per coordinate (default [-3, 3])",
];

pub const OPTIMIZE_KEYS: &[KeyDoc] = keys![
    "optimize.trace" => "write trace.csv with per-iterate h, m, V, consensus (default false)",
];

pub const BENCHMARK_KEYS: &[KeyDoc] = keys![
    "benchmark.n_runs" => "independent realizations per cell (default 100)",
    "benchmark.success_threshold" => "open infinity-ball radius for success (default 0.25)",
    "benchmark.record_rate_target" => "success level whose first-crossing iterate is reported (default 0.8)",
    "benchmark.track_per_iterate" => "record per-iterate metrics (auto-enabled when needed)",
    "benchmark.report_iterate" => "report table metrics at this iterate instead of the final one",
    "benchmark.show_first_target_iterate" => "append the first target-crossing iterate to each cell",
    "benchmark.grid_rows" => "row axis: M | iterate (absent: single row)",
    "benchmark.row_values" => "row axis values, e.g. [50, 150, 250]",
    "benchmark.grid_cols" => "column axis: theta | optimizer (absent: single column)",
    "benchmark.col_values" => "column axis values, e.g. [\"uniform\", \"exponential\", \"normal\"]; optimizer entries may carry :n_sY",
];

pub const MOMENTS_KEYS: &[KeyDoc] = keys![
    "moments.alphas" => "alpha sweep for the empirical traces (default [optimizer.alpha])",
    "moments.init_boxes" => "flattened init boxes [lo1, hi1, lo2, hi2, ...] (default [optimizer.init_box])",
    "moments.x_tilde" => "equilibrium consensus for the ODE (default: objective minimizer)",
    "moments.rel_tol" => "ODE relative tolerance (default 1e-8)",
    "moments.abs_tol" => "ODE absolute tolerance (default 1e-10)",
];

pub const DIAGNOSE_KEYS: &[KeyDoc] = keys![
    "diagnose.alpha" => "alpha for C_alpha (default optimizer.alpha)",
    "diagnose.n_mc" => "Monte Carlo batch draws for C_alpha (default 10000)",
    "diagnose.c_alpha" => "user-supplied C_alpha, skips estimation",
    "diagnose.c1" => "gradient bound constant c1 for nu",
    "diagnose.c2" => "Hessian bound constant c2 for nu",
    "diagnose.f_lower" => "objective lower bound f_lower for nu",
    "diagnose.v0" => "initial variance V(0) for nu",
    "diagnose.omega_norm" => "L1(g0) norm of the alpha-weight (default: Monte Carlo estimate)",
    "diagnose.omega_mc" => "Monte Carlo draws for the omega-norm estimate (default 10000)",
];

/// Full schema (union over subcommands); unknown keys are rejected against it.
pub static SCHEMA: std::sync::LazyLock<Vec<&'static KeyDoc>> = std::sync::LazyLock::new(|| {
    COMMON_KEYS
        .iter()
        .chain(OPTIMIZE_KEYS)
        .chain(BENCHMARK_KEYS)
        .chain(MOMENTS_KEYS)
        .chain(DIAGNOSE_KEYS)
        .collect()
});

/// Render "Config keys read by this subcommand" for `--help`.
pub fn render_key_help(sections: &[&[KeyDoc]]) -> String {
    let mut out = String::from("Config keys read by this subcommand:\n");
    for section in sections {
        for doc in *section {
            out.push_str(&format!("  {:<38} {}\n", doc.key, doc.doc));
        }
    }
    out
}
