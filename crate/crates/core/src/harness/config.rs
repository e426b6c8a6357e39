use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assembly::{AlphaScaling, Stabilization, DEFAULT_ALPHA0};
use crate::error::{Error, Result};
use crate::postprocess::PostprocessMode;
use crate::spaces::{ElementKind, ProjectionKind};

/// First eigenvalue of the Stokes operator on the unit square.
pub const UNIT_SQUARE_LAMBDA1: f64 = 52.3446911;

/// Supported velocity/pressure/projection combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementPair {
    /// Linear elements with the zero projection.
    P1Zero,
    /// Bubble-enriched quadratics with the discontinuous linear projection.
    P2BubblePDisc1,
}

impl ElementPair {
    pub fn element(self) -> ElementKind {
        match self {
            ElementPair::P1Zero => ElementKind::P1,
            ElementPair::P2BubblePDisc1 => ElementKind::P2Bubble,
        }
    }

    pub fn projection(self) -> ProjectionKind {
        match self {
            ElementPair::P1Zero => ProjectionKind::Zero,
            ElementPair::P2BubblePDisc1 => ProjectionKind::PDisc(1),
        }
    }
}

impl fmt::Display for ElementPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementPair::P1Zero => "p1-zero",
            ElementPair::P2BubblePDisc1 => "p2bubble-pdisc1",
        })
    }
}

impl FromStr for ElementPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1-zero" | "p1" => Ok(ElementPair::P1Zero),
            "p2bubble-pdisc1" | "p2bubble" | "p2b" => Ok(ElementPair::P2BubblePDisc1),
            _ => Err(Error::invalid(format!("unknown element pair '{s}'"))),
        }
    }
}

/// Where the eigenvalue errors are measured from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// The known first eigenvalue of the unit square.
    UnitSquare,
    Value(f64),
    /// Second-order Richardson extrapolation of the two finest levels.
    Richardson,
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::UnitSquare => f.write_str("default"),
            Reference::Value(v) => write!(f, "{v}"),
            Reference::Richardson => f.write_str("richardson"),
        }
    }
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "default" => Ok(Reference::UnitSquare),
            "richardson" => Ok(Reference::Richardson),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Reference::Value)
                .ok_or_else(|| Error::invalid(format!("bad reference value '{s}'"))),
        }
    }
}

/// Settings of a convergence study. See [`StudyConfig::set`] for the keys.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub pair: ElementPair,
    pub alpha0: f64,
    pub scaling: AlphaScaling,
    pub levels: Vec<usize>,
    pub eigen_count: usize,
    pub tol: f64,
    pub max_iterations: usize,
    pub postprocess: Option<PostprocessMode>,
    pub reference: Reference,
    pub output_dir: PathBuf,
    pub vtk: bool,
    pub matrix_market: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            pair: ElementPair::P1Zero,
            alpha0: DEFAULT_ALPHA0,
            scaling: AlphaScaling::HSquared,
            levels: vec![8, 16, 32, 64],
            eigen_count: 1,
            tol: 1e-10,
            max_iterations: 500,
            postprocess: None,
            reference: Reference::UnitSquare,
            output_dir: PathBuf::from("out"),
            vtk: true,
            matrix_market: false,
        }
    }
}

/// Keys accepted by [`StudyConfig::set`], in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "element",
    "alpha0",
    "alpha_scaling",
    "levels",
    "eigen_count",
    "tol",
    "max_iterations",
    "postprocess",
    "reference",
    "output_dir",
    "vtk",
    "matrix_market",
];

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("expected a boolean, got '{v}'"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse '{v}'")))
}

impl StudyConfig {
    /// Parses the flat `key = value` format, starting from the defaults.
    ///
    /// ```
    /// use stokes_lps::harness::StudyConfig;
    ///
    /// let cfg = StudyConfig::parse("levels = 4, 8\n# comment\npostprocess = two-space\n").unwrap();
    /// assert_eq!(cfg.levels, vec![4, 8]);
    /// assert!(cfg.postprocess.is_some());
    /// ```
    pub fn parse(text: &str) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        cfg.apply_text(text)?;
        cfg.validate().map_err(|e| Error::Config {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Applies every `key = value` line of `text` on top of `self` without
    /// the final cross-field validation.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
            seen.push(key);
            self.set(key, value.trim()).map_err(|e| Error::Config {
                line,
                message: match e {
                    Error::InvalidArgument(m) => m,
                    other => other.to_string(),
                },
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<StudyConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key. Values are validated individually; cross-field checks
    /// happen in [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "element" => self.pair = value.parse()?,
            "alpha0" => self.alpha0 = parse_num(key, value)?,
            "alpha_scaling" => self.scaling = value.parse()?,
            "levels" => {
                self.levels = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<Result<_>>()?
            }
            "eigen_count" => self.eigen_count = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "max_iterations" => self.max_iterations = parse_num(key, value)?,
            "postprocess" => {
                self.postprocess = match value.to_ascii_lowercase().as_str() {
                    "none" | "off" => None,
                    _ => Some(value.parse()?),
                }
            }
            "reference" => self.reference = value.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "vtk" => self.vtk = parse_bool(value)?,
            "matrix_market" => self.matrix_market = parse_bool(value)?,
            _ => return Err(Error::invalid(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::invalid("levels must not be empty"));
        }
        if self.levels[0] == 0 || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "levels must be positive and strictly increasing",
            ));
        }
        Stabilization::new(self.alpha0, self.scaling)?;
        if self.eigen_count == 0 {
            return Err(Error::invalid("eigen_count must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if self.postprocess == Some(PostprocessMode::TwoSpace) && self.pair != ElementPair::P1Zero {
            return Err(Error::invalid(
                "two-space postprocessing starts from p1-zero",
            ));
        }
        if self.reference == Reference::Richardson && self.levels.len() < 2 {
            return Err(Error::invalid("richardson reference needs two levels"));
        }
        Ok(())
    }

    pub fn stabilization(&self) -> Stabilization {
        Stabilization {
            alpha0: self.alpha0,
            scaling: self.scaling,
        }
    }

    /// Renders the configuration in the format [`parse`](Self::parse) reads.
    pub fn to_text(&self) -> String {
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        let post = self
            .postprocess
            .map_or("none".to_string(), |m| m.to_string());
        format!(
            "element = {}\nalpha0 = {}\nalpha_scaling = {}\nlevels = {}\neigen_count = {}\n\
             tol = {:e}\nmax_iterations = {}\npostprocess = {}\nreference = {}\n\
             output_dir = {}\nvtk = {}\nmatrix_market = {}\n",
            self.pair,
            self.alpha0,
            self.scaling,
            levels.join(", "),
            self.eigen_count,
            self.tol,
            self.max_iterations,
            post,
            self.reference,
            self.output_dir.display(),
            self.vtk,
            self.matrix_market
        )
    }
}
