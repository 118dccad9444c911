//! Line-oriented problem configuration.
//!
//! ```text
//! # comment
//! seed = 7
//!
//! [primal]
//! dim = 1
//! f = zero                  # catalog entry, parameters as f.weight, f.center, ...
//! h = quadratic             # zero | quadratic
//! h.weight = 1
//! h.center = 4
//!
//! [block]                   # one section per dual block, in order
//! dim = 1
//! g = l1
//! ell = zero-indicator      # zero-indicator | quadratic (with ell.nu)
//! L = identity              # identity | diff1d | grad2d | diag | matrix
//!
//! [steps]
//! mode = auto
//!
//! [stop]
//! tol = 1e-12
//! ```
//!
//! The full key list is in the repository README. Unknown sections and keys
//! are rejected with the offending line number.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use splitsolve::convexfront::{
    ConvexBlock, ConvexProblem, SmoothTerm, SolveOptions, StepChoice, StrongTerm,
};
use splitsolve::operators::{catalog_prox, CatalogParams, LinearOp, CATALOG_NAMES};
use splitsolve::solver::{ErrorComponents, ErrorSchedule, LambdaSchedule, StoppingRule};
use splitsolve::spaces::SpaceLayout;
use thiserror::Error;

/// A configuration error. `line` is 1-based; 0 means the file as a whole.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", render(*.line, .message))]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn render(line: usize, message: &str) -> String {
    if line == 0 {
        message.to_string()
    } else {
        format!("line {line}: {message}")
    }
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

/// A catalog entry by name with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub params: CatalogParams,
}

impl CatalogEntry {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: CatalogParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmoothConfig {
    Zero,
    /// `(weight/2)‖x − center‖²`, center defaulting to 0.
    Quadratic {
        weight: f64,
        center: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrongConfig {
    ZeroIndicator,
    /// `(ν/2)‖·‖²`.
    Quadratic { nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorConfig {
    Identity,
    Diff1d,
    Grad2d { height: usize, width: usize },
    Diag(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalConfig {
    pub dim: usize,
    pub f: CatalogEntry,
    pub h: SmoothConfig,
    /// Claimed cocoercivity constant of `∇h`, overriding the derived one.
    pub h_mu: Option<f64>,
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockConfig {
    pub dim: usize,
    pub weight: Option<f64>,
    pub g: CatalogEntry,
    pub ell: StrongConfig,
    pub l: OperatorConfig,
    pub l_norm: Option<f64>,
    pub r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Auto,
    Manual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepsConfig {
    pub mode: StepMode,
    pub safety: f64,
    pub tau: Option<f64>,
    /// One value per block, or a single value shared by all blocks.
    pub sigma: Option<Vec<f64>>,
    /// One value for a constant schedule, several for a sequence whose last
    /// value repeats.
    pub lambda: Vec<f64>,
    pub over_relaxation: bool,
}

impl Default for StepsConfig {
    fn default() -> Self {
        Self {
            mode: StepMode::Auto,
            safety: 0.99,
            tau: None,
            sigma: None,
            lambda: vec![1.0],
            over_relaxation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ErrorsConfig {
    Zero,
    /// Seeded from the config seed.
    Geometric {
        amplitude: f64,
        decay: f64,
        components: ErrorComponents,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub seed: u64,
    pub primal: PrimalConfig,
    pub blocks: Vec<BlockConfig>,
    pub steps: StepsConfig,
    pub errors: ErrorsConfig,
    pub stop: StoppingRule,
    pub source: SourceMap,
}

/// Header lines of the parsed sections, used to anchor semantic errors.
/// Ignored by equality so that re-serialized configs compare equal.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub primal: usize,
    pub blocks: Vec<usize>,
    pub steps: usize,
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl SourceMap {
    fn block(&self, i: usize) -> usize {
        self.blocks.get(i).copied().unwrap_or(0)
    }
}

/// A built problem ready to solve.
pub struct Built {
    pub problem: ConvexProblem,
    pub options: SolveOptions,
}

struct Entry {
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Vec<Entry>>,
}

impl Section {
    fn new(name: &str, line: usize) -> Self {
        Self {
            name: name.to_string(),
            line,
            entries: BTreeMap::new(),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for (key, list) in &self.entries {
            let first = list[0].line;
            if !allowed.contains(&key.as_str()) {
                return err(first, format!("unknown key '{key}' in [{}]", self.name));
            }
            if key != "L.row" && list.len() > 1 {
                return err(list[1].line, format!("duplicate key '{key}' in [{}]", self.name));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key).map(|l| &l[0])
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .or_else(|_| err(e.line, format!("{key}: expected {what}, got '{}'", e.value))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, ConfigError> {
        self.parsed(key, what)?
            .map_or_else(|| err(self.line, format!("[{}] is missing '{key}'", self.name)), Ok)
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parsed(key, "a number")
    }

    fn vector(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key).map(|e| parse_vector(key, e)).transpose()
    }
}

fn parse_vector(key: &str, e: &Entry) -> Result<Vec<f64>, ConfigError> {
    let out: Result<Vec<f64>, _> = e.value.split_whitespace().map(str::parse).collect();
    match out {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => err(e.line, format!("{key}: expected whitespace-separated numbers, got '{}'", e.value)),
    }
}

fn split_sections(text: &str) -> Result<(Section, Vec<Section>), ConfigError> {
    let mut top = Section::new("top level", 0);
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(line, format!("malformed section header '{content}'"));
            };
            sections.push(Section::new(name.trim(), line));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(line, format!("expected 'key = value', got '{content}'"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return err(line, format!("expected 'key = value', got '{content}'"));
        }
        let target = sections.last_mut().unwrap_or(&mut top);
        target.entries.entry(key.to_string()).or_default().push(Entry {
            value: value.to_string(),
            line,
        });
    }
    Ok((top, sections))
}

const CATALOG_PARAMS: [&str; 5] = ["weight", "center", "lower", "upper", "coeffs"];

fn catalog_entry(sec: &Section, prefix: &str) -> Result<CatalogEntry, ConfigError> {
    let name = match sec.raw(prefix) {
        None => "zero".to_string(),
        Some(e) if CATALOG_NAMES.contains(&e.value.as_str()) => e.value.clone(),
        Some(e) => {
            return err(
                e.line,
                format!("{prefix}: unknown catalog entry '{}' (known: {})", e.value, CATALOG_NAMES.join(", ")),
            )
        }
    };
    let key = |p: &str| format!("{prefix}.{p}");
    Ok(CatalogEntry {
        name,
        params: CatalogParams {
            weight: sec.real(&key("weight"))?,
            center: sec.vector(&key("center"))?,
            lower: sec.vector(&key("lower"))?,
            upper: sec.vector(&key("upper"))?,
            coeffs: sec.vector(&key("coeffs"))?,
        },
    })
}

fn with_catalog_keys(base: &[&'static str], prefix: &str) -> Vec<String> {
    let mut keys: Vec<String> = base.iter().map(|s| s.to_string()).collect();
    keys.push(prefix.to_string());
    keys.extend(CATALOG_PARAMS.iter().map(|p| format!("{prefix}.{p}")));
    keys
}

fn parse_primal(sec: &Section) -> Result<PrimalConfig, ConfigError> {
    let keys = with_catalog_keys(&["dim", "h", "h.weight", "h.center", "h.mu", "z"], "f");
    sec.check_keys(&keys.iter().map(String::as_str).collect::<Vec<_>>())?;
    let h = match sec.raw("h").map(|e| (e.value.as_str(), e.line)) {
        None | Some(("zero", _)) => {
            for k in ["h.weight", "h.center", "h.mu"] {
                if let Some(e) = sec.raw(k) {
                    return err(e.line, format!("{k} requires h = quadratic"));
                }
            }
            SmoothConfig::Zero
        }
        Some(("quadratic", _)) => SmoothConfig::Quadratic {
            weight: sec.real("h.weight")?.unwrap_or(1.0),
            center: sec.vector("h.center")?,
        },
        Some((other, line)) => return err(line, format!("h: expected zero or quadratic, got '{other}'")),
    };
    Ok(PrimalConfig {
        dim: sec.required("dim", "a positive integer")?,
        f: catalog_entry(sec, "f")?,
        h,
        h_mu: sec.real("h.mu")?,
        z: sec.vector("z")?,
    })
}

fn parse_operator(sec: &Section) -> Result<OperatorConfig, ConfigError> {
    let kind = sec.raw("L").map(|e| (e.value.as_str(), e.line));
    let allowed: &[&str] = match kind {
        Some(("grad2d", _)) => &["L.height", "L.width"],
        Some(("diag", _)) => &["L.diag"],
        Some(("matrix", _)) => &["L.row"],
        _ => &[],
    };
    for k in ["L.height", "L.width", "L.diag", "L.row"] {
        if !allowed.contains(&k) {
            if let Some(e) = sec.raw(k) {
                return err(e.line, format!("{k} does not apply to this L"));
            }
        }
    }
    Ok(match kind {
        None | Some(("identity", _)) => OperatorConfig::Identity,
        Some(("diff1d", _)) => OperatorConfig::Diff1d,
        Some(("grad2d", _)) => OperatorConfig::Grad2d {
            height: sec.required("L.height", "a positive integer")?,
            width: sec.required("L.width", "a positive integer")?,
        },
        Some(("diag", _)) => OperatorConfig::Diag(
            sec.vector("L.diag")?
                .map_or_else(|| err(sec.line, "L = diag needs L.diag"), Ok)?,
        ),
        Some(("matrix", _)) => {
            let rows = sec.entries.get("L.row").map(|l| l.as_slice()).unwrap_or(&[]);
            if rows.is_empty() {
                return err(sec.line, "L = matrix needs at least one L.row");
            }
            OperatorConfig::Matrix(rows.iter().map(|e| parse_vector("L.row", e)).collect::<Result<_, _>>()?)
        }
        Some((other, line)) => {
            return err(
                line,
                format!("L: expected identity, diff1d, grad2d, diag or matrix, got '{other}'"),
            )
        }
    })
}

fn parse_block(sec: &Section) -> Result<BlockConfig, ConfigError> {
    let keys = with_catalog_keys(
        &[
            "dim", "weight", "ell", "ell.nu", "L", "L.height", "L.width", "L.diag", "L.row",
            "L.norm", "r",
        ],
        "g",
    );
    sec.check_keys(&keys.iter().map(String::as_str).collect::<Vec<_>>())?;
    let ell = match sec.raw("ell").map(|e| (e.value.as_str(), e.line)) {
        None | Some(("zero-indicator", _)) => {
            if let Some(e) = sec.raw("ell.nu") {
                return err(e.line, "ell.nu requires ell = quadratic");
            }
            StrongConfig::ZeroIndicator
        }
        Some(("quadratic", _)) => StrongConfig::Quadratic {
            nu: sec.required("ell.nu", "a number")?,
        },
        Some((other, line)) => {
            return err(line, format!("ell: expected zero-indicator or quadratic, got '{other}'"))
        }
    };
    Ok(BlockConfig {
        dim: sec.required("dim", "a positive integer")?,
        weight: sec.real("weight")?,
        g: catalog_entry(sec, "g")?,
        ell,
        l: parse_operator(sec)?,
        l_norm: sec.real("L.norm")?,
        r: sec.vector("r")?,
    })
}

fn parse_bool(sec: &Section, key: &str) -> Result<Option<bool>, ConfigError> {
    sec.parsed(key, "true or false")
}

fn parse_steps(sec: &Section) -> Result<StepsConfig, ConfigError> {
    sec.check_keys(&["mode", "safety", "tau", "sigma", "lambda", "over_relaxation"])?;
    let d = StepsConfig::default();
    let mode = match sec.raw("mode").map(|e| (e.value.as_str(), e.line)) {
        None | Some(("auto", _)) => StepMode::Auto,
        Some(("manual", _)) => StepMode::Manual,
        Some((other, line)) => return err(line, format!("mode: expected auto or manual, got '{other}'")),
    };
    Ok(StepsConfig {
        mode,
        safety: sec.real("safety")?.unwrap_or(d.safety),
        tau: sec.real("tau")?,
        sigma: sec.vector("sigma")?,
        lambda: sec.vector("lambda")?.unwrap_or(d.lambda),
        over_relaxation: parse_bool(sec, "over_relaxation")?.unwrap_or(false),
    })
}

fn parse_components(e: &Entry) -> Result<ErrorComponents, ConfigError> {
    let mut c = ErrorComponents {
        a1: false,
        a2: false,
        b: false,
        c: false,
    };
    for tok in e.value.split_whitespace() {
        match tok {
            "a1" => c.a1 = true,
            "a2" => c.a2 = true,
            "b" => c.b = true,
            "c" => c.c = true,
            other => return err(e.line, format!("components: unknown error term '{other}' (a1, a2, b, c)")),
        }
    }
    Ok(c)
}

fn parse_errors(sec: &Section) -> Result<ErrorsConfig, ConfigError> {
    sec.check_keys(&["kind", "amplitude", "decay", "components"])?;
    match sec.raw("kind").map(|e| (e.value.as_str(), e.line)) {
        None | Some(("zero", _)) => {
            for k in ["amplitude", "decay", "components"] {
                if let Some(e) = sec.raw(k) {
                    return err(e.line, format!("{k} requires kind = geometric"));
                }
            }
            Ok(ErrorsConfig::Zero)
        }
        Some(("geometric", _)) => Ok(ErrorsConfig::Geometric {
            amplitude: sec.required("amplitude", "a number")?,
            decay: sec.required("decay", "a number")?,
            components: sec
                .raw("components")
                .map(parse_components)
                .transpose()?
                .unwrap_or(ErrorComponents::ALL),
        }),
        Some((other, line)) => err(line, format!("kind: expected zero or geometric, got '{other}'")),
    }
}

fn parse_stop(sec: &Section) -> Result<StoppingRule, ConfigError> {
    sec.check_keys(&["tol", "max_iter", "kkt_tol"])?;
    let d = StoppingRule::default();
    Ok(StoppingRule {
        tol: sec.real("tol")?.unwrap_or(d.tol),
        max_iter: sec.parsed("max_iter", "a non-negative integer")?.unwrap_or(d.max_iter),
        kkt_tol: sec.real("kkt_tol")?,
    })
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let (top, sections) = split_sections(text)?;
        top.check_keys(&["seed"])?;
        let seed = top.parsed("seed", "a non-negative integer")?.unwrap_or(0);

        let mut primal = None;
        let mut blocks = Vec::new();
        let mut steps = None;
        let mut errors = None;
        let mut stop = None;
        let mut source = SourceMap::default();
        for sec in &sections {
            let seen = match sec.name.as_str() {
                "primal" => {
                    source.primal = sec.line;
                    primal.replace(parse_primal(sec)?).is_some()
                }
                "block" => {
                    source.blocks.push(sec.line);
                    blocks.push(parse_block(sec)?);
                    false
                }
                "steps" => {
                    source.steps = sec.line;
                    steps.replace(parse_steps(sec)?).is_some()
                }
                "errors" => errors.replace(parse_errors(sec)?).is_some(),
                "stop" => stop.replace(parse_stop(sec)?).is_some(),
                other => return err(sec.line, format!("unknown section [{other}]")),
            };
            if seen {
                return err(sec.line, format!("section [{}] appears twice", sec.name));
            }
        }
        let Some(primal) = primal else {
            return err(0, "missing [primal] section");
        };
        if blocks.is_empty() {
            return err(0, "at least one [block] section is required");
        }
        Ok(Self {
            seed,
            primal,
            blocks,
            steps: steps.unwrap_or_default(),
            errors: errors.unwrap_or(ErrorsConfig::Zero),
            stop: stop.unwrap_or_default(),
            source,
        })
    }

    /// Builds the problem and solver options. The run tracks objectives.
    pub fn build(&self) -> Result<Built, ConfigError> {
        let n = self.primal.dim;
        let src = &self.source;
        let at_primal = |e: String| ConfigError {
            line: src.primal,
            message: format!("[primal]: {e}"),
        };
        let weights: Vec<Option<f64>> = self.blocks.iter().map(|b| b.weight).collect();
        let layout = if weights.iter().all(Option::is_none) {
            SpaceLayout::uniform(n, self.blocks.iter().map(|b| b.dim).collect())
        } else if let Some(i) = weights.iter().position(Option::is_none) {
            return err(src.block(i), "weight must be given for every block or for none");
        } else {
            SpaceLayout::new(
                n,
                self.blocks.iter().map(|b| b.dim).collect(),
                weights.into_iter().flatten().collect(),
            )
        }
        .map_err(|e| ConfigError {
            line: src.block(0),
            message: format!("layout: {e}"),
        })?;

        let f = catalog_prox(&self.primal.f.name, n, &self.primal.f.params)
            .map_err(|e| at_primal(format!("f: {e}")))?;
        let mut h = match &self.primal.h {
            SmoothConfig::Zero => SmoothTerm::zero(n),
            SmoothConfig::Quadratic { weight, center } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; n]);
                if c.len() != n {
                    return Err(at_primal(format!("h.center has {} entries, dim is {n}", c.len())));
                }
                SmoothTerm::quadratic(*weight, c)
                    .ok_or_else(|| at_primal("h.weight must be positive and finite".into()))?
            }
        };
        if let Some(mu) = self.primal.h_mu {
            h = h.with_mu(mu);
        }
        let z = self.primal.z.clone().unwrap_or_else(|| vec![0.0; n]);

        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let line = src.block(i);
            let at = |e: String| ConfigError {
                line,
                message: format!("[block] {i}: {e}"),
            };
            let l = build_operator(&b.l, n).map_err(at)?;
            let l = match b.l_norm {
                Some(hint) => l.with_norm_hint(hint),
                None => l,
            };
            if l.out_dim() != b.dim {
                return Err(at(format!("L maps into dimension {}, but dim = {}", l.out_dim(), b.dim)));
            }
            let g = catalog_prox(&b.g.name, b.dim, &b.g.params).map_err(|e| at(format!("g: {e}")))?;
            let ell = match b.ell {
                StrongConfig::ZeroIndicator => StrongTerm::zero_indicator(b.dim),
                StrongConfig::Quadratic { nu } => StrongTerm::quadratic(b.dim, nu)
                    .ok_or_else(|| at(format!("ell.nu must be positive and finite, got {nu}")))?,
            };
            blocks.push(ConvexBlock {
                g,
                ell,
                l,
                r: b.r.clone().unwrap_or_else(|| vec![0.0; b.dim]),
            });
        }
        let problem = ConvexProblem::new(layout, f, h, z, blocks).map_err(|e| ConfigError {
            line: 0,
            message: format!("problem: {e}"),
        })?;
        Ok(Built {
            problem,
            options: self.solve_options()?,
        })
    }

    fn solve_options(&self) -> Result<SolveOptions, ConfigError> {
        let s = &self.steps;
        let m = self.blocks.len();
        let steps = match s.mode {
            StepMode::Auto => StepChoice::Auto { safety: s.safety },
            StepMode::Manual => {
                let Some(tau) = s.tau else {
                    return err(self.source.steps, "mode = manual needs tau");
                };
                let sigmas = match s.sigma.as_deref() {
                    Some([one]) => vec![*one; m],
                    Some(v) if v.len() == m => v.to_vec(),
                    Some(v) => {
                        return err(
                            self.source.steps,
                            format!("sigma has {} values for {m} blocks", v.len()),
                        )
                    }
                    None => return err(self.source.steps, "mode = manual needs sigma"),
                };
                StepChoice::Manual { tau, sigmas }
            }
        };
        let lambda = match s.lambda.as_slice() {
            [one] => LambdaSchedule::Constant(*one),
            many => LambdaSchedule::Sequence(many.to_vec()),
        };
        let errors = match &self.errors {
            ErrorsConfig::Zero => ErrorSchedule::Zero,
            ErrorsConfig::Geometric {
                amplitude,
                decay,
                components,
            } => ErrorSchedule::Geometric {
                amplitude: *amplitude,
                decay: *decay,
                seed: self.seed,
                components: *components,
            },
        };
        Ok(SolveOptions {
            steps,
            lambda,
            over_relaxation: s.over_relaxation,
            errors,
            stop: self.stop,
            track_objectives: true,
            ..Default::default()
        })
    }
}

fn build_operator(op: &OperatorConfig, n: usize) -> Result<LinearOp, String> {
    match op {
        OperatorConfig::Identity => Ok(LinearOp::identity(n)),
        OperatorConfig::Diff1d => LinearOp::forward_difference(n).map_err(|e| e.to_string()),
        OperatorConfig::Grad2d { height, width } => {
            if height * width != n {
                return Err(format!("grad2d of {height}×{width} needs primal dim {}, got {n}", height * width));
            }
            LinearOp::gradient_2d(*height, *width).map_err(|e| e.to_string())
        }
        OperatorConfig::Diag(d) => {
            if d.len() != n {
                return Err(format!("L.diag has {} entries, primal dim is {n}", d.len()));
            }
            Ok(LinearOp::diagonal(d.clone()))
        }
        OperatorConfig::Matrix(rows) => {
            if let Some(r) = rows.iter().position(|r| r.len() != n) {
                return Err(format!("L.row {r} has {} entries, primal dim is {n}", rows[r].len()));
            }
            LinearOp::dense(rows.clone()).map_err(|e| e.to_string())
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn nums(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

fn write_catalog(out: &mut String, prefix: &str, c: &CatalogEntry) {
    let _ = writeln!(out, "{prefix} = {}", c.name);
    let p = &c.params;
    if let Some(w) = p.weight {
        let _ = writeln!(out, "{prefix}.weight = {}", num(w));
    }
    for (key, v) in [("center", &p.center), ("lower", &p.lower), ("upper", &p.upper), ("coeffs", &p.coeffs)] {
        if let Some(v) = v {
            let _ = writeln!(out, "{prefix}.{key} = {}", nums(v));
        }
    }
}

impl fmt::Display for ProblemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}\n\n[primal]\ndim = {}", self.seed, self.primal.dim);
        write_catalog(&mut out, "f", &self.primal.f);
        if let SmoothConfig::Quadratic { weight, center } = &self.primal.h {
            let _ = writeln!(out, "h = quadratic\nh.weight = {}", num(*weight));
            if let Some(c) = center {
                let _ = writeln!(out, "h.center = {}", nums(c));
            }
        }
        if let Some(mu) = self.primal.h_mu {
            let _ = writeln!(out, "h.mu = {}", num(mu));
        }
        if let Some(z) = &self.primal.z {
            let _ = writeln!(out, "z = {}", nums(z));
        }
        for b in &self.blocks {
            let _ = writeln!(out, "\n[block]\ndim = {}", b.dim);
            if let Some(w) = b.weight {
                let _ = writeln!(out, "weight = {}", num(w));
            }
            write_catalog(&mut out, "g", &b.g);
            match b.ell {
                StrongConfig::ZeroIndicator => out.push_str("ell = zero-indicator\n"),
                StrongConfig::Quadratic { nu } => {
                    let _ = writeln!(out, "ell = quadratic\nell.nu = {}", num(nu));
                }
            }
            match &b.l {
                OperatorConfig::Identity => out.push_str("L = identity\n"),
                OperatorConfig::Diff1d => out.push_str("L = diff1d\n"),
                OperatorConfig::Grad2d { height, width } => {
                    let _ = writeln!(out, "L = grad2d\nL.height = {height}\nL.width = {width}");
                }
                OperatorConfig::Diag(d) => {
                    let _ = writeln!(out, "L = diag\nL.diag = {}", nums(d));
                }
                OperatorConfig::Matrix(rows) => {
                    out.push_str("L = matrix\n");
                    for r in rows {
                        let _ = writeln!(out, "L.row = {}", nums(r));
                    }
                }
            }
            if let Some(hint) = b.l_norm {
                let _ = writeln!(out, "L.norm = {}", num(hint));
            }
            if let Some(r) = &b.r {
                let _ = writeln!(out, "r = {}", nums(r));
            }
        }
        let s = &self.steps;
        let mode = match s.mode {
            StepMode::Auto => "auto",
            StepMode::Manual => "manual",
        };
        let _ = writeln!(out, "\n[steps]\nmode = {mode}\nsafety = {}", num(s.safety));
        if let Some(t) = s.tau {
            let _ = writeln!(out, "tau = {}", num(t));
        }
        if let Some(sg) = &s.sigma {
            let _ = writeln!(out, "sigma = {}", nums(sg));
        }
        let _ = writeln!(out, "lambda = {}\nover_relaxation = {}", nums(&s.lambda), s.over_relaxation);
        if let ErrorsConfig::Geometric {
            amplitude,
            decay,
            components,
        } = &self.errors
        {
            let names: Vec<&str> = [
                (components.a1, "a1"),
                (components.a2, "a2"),
                (components.b, "b"),
                (components.c, "c"),
            ]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
            let _ = writeln!(
                out,
                "\n[errors]\nkind = geometric\namplitude = {}\ndecay = {}\ncomponents = {}",
                num(*amplitude),
                num(*decay),
                names.join(" ")
            );
        }
        let _ = writeln!(out, "\n[stop]\ntol = {}\nmax_iter = {}", num(self.stop.tol), self.stop.max_iter);
        if let Some(k) = self.stop.kkt_tol {
            let _ = writeln!(out, "kkt_tol = {}", num(k));
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LASSO: &str = "\
seed = 3
[primal]
dim = 1
h = quadratic
h.center = 4
[block]
dim = 1
g = l1
[stop]
tol = 1e-12
";

    #[test]
    fn parses_the_scalar_lasso() {
        let c = ProblemConfig::parse(LASSO).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.primal.f, CatalogEntry::named("zero"));
        assert_eq!(
            c.primal.h,
            SmoothConfig::Quadratic {
                weight: 1.0,
                center: Some(vec![4.0])
            }
        );
        assert_eq!(c.blocks[0].l, OperatorConfig::Identity);
        assert_eq!(c.stop.tol, 1e-12);
        assert!(c.build().is_ok());
    }

    #[test]
    fn unknown_key_is_line_anchored() {
        let text = LASSO.replace("g = l1", "g = l1\ngamma = 2");
        let e = ProblemConfig::parse(&text).unwrap_err();
        assert_eq!(e.line, 9);
        assert!(e.message.contains("unknown key 'gamma'"), "{e}");
        assert_eq!(e.to_string(), "line 9: unknown key 'gamma' in [block]");
    }

    #[test]
    fn unknown_section_and_bad_number() {
        let e = ProblemConfig::parse(&format!("{LASSO}[extra]\n")).unwrap_err();
        assert_eq!(e.line, 11);
        let e = ProblemConfig::parse(&LASSO.replace("tol = 1e-12", "tol = tiny")).unwrap_err();
        assert_eq!(e.line, 10);
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let e = ProblemConfig::parse(&LASSO.replace("dim = 1\ng", "dim = 1\ndim = 2\ng")).unwrap_err();
        assert!(e.message.contains("duplicate"), "{e}");
    }

    #[test]
    fn weights_not_summing_to_one() {
        let text = "[primal]\ndim = 1\n[block]\ndim = 1\nweight = 0.5\n[block]\ndim = 1\nweight = 0.6\n";
        let e = ProblemConfig::parse(text).unwrap().build().err().unwrap();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("sum to"), "{e}");
    }

    #[test]
    fn dimension_mismatch_names_the_block() {
        let text = "[primal]\ndim = 4\n[block]\ndim = 4\nL = diff1d\n";
        let e = ProblemConfig::parse(text).unwrap().build().err().unwrap();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("dimension 3"), "{e}");
    }

    #[test]
    fn round_trip_is_field_by_field() {
        let text = "\
seed = 11
[primal]
dim = 3
f = box
f.lower = -1 -inf 0
f.upper = 1 inf 0.1
h = quadratic
h.weight = 0.30000000000000004
h.center = 1 2 3
h.mu = 2
z = 0.1 0 -0.2
[block]
dim = 2
weight = 0.25
g = l2norm
g.weight = 0.7
ell = quadratic
ell.nu = 2.5
L = matrix
L.row = 1 0 2
L.row = 0 -1 1e-300
L.norm = 2.5
r = 1 1
[block]
dim = 3
weight = 0.75
g = l1
L = diag
L.diag = 1 2 3
[steps]
mode = manual
tau = 0.1
sigma = 0.2 0.3
lambda = 1 0.9 0.8
over_relaxation = true
[errors]
kind = geometric
amplitude = 0.1
decay = 0.9
components = a1 c
[stop]
tol = 1e-11
max_iter = 500
kkt_tol = 1e-9
";
        let a = ProblemConfig::parse(text).unwrap();
        let b = ProblemConfig::parse(&a.to_string()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), b.to_string());
        assert!(a.build().is_ok());
    }

    #[test]
    fn manual_steps_need_tau_and_sigma() {
        let text = format!("{LASSO}[steps]\nmode = manual\ntau = 0.5\n");
        let e = ProblemConfig::parse(&text).unwrap().build().err().unwrap();
        assert_eq!(e.line, 11);
        assert!(e.message.contains("sigma"));
    }

    #[test]
    fn l_parameters_must_match_the_kind() {
        let text = "[primal]\ndim = 2\n[block]\ndim = 2\nL = identity\nL.diag = 1 2\n";
        assert_eq!(ProblemConfig::parse(text).unwrap_err().line, 6);
    }
}
