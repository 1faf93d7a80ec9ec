//! Plain-text experiment configuration.
//!
//! ```text
//! # uniform walk on F2
//! [model]
//! kind = tree
//! rank = 2
//!
//! [mu]
//! uniform
//!
//! [run]
//! n = 10000
//! paths = 1000
//! seed = 0
//!
//! [gates]
//! drift = 0.49 .. 0.51
//! ```
//!
//! Half-plane models list generators as `a = m11 m12 m21 m22 | minus | plus`
//! with regions `disk c r`, `outside c r` or `halfplane cut left|right`.
//! Numbers may be written as fractions (`1/3`). Measure atoms are
//! `<word> <probability>`, or `<m11 m12 m21 m22> <probability>` for a
//! generator or inverse given by its matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equidist::{Chart, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::estimators::{DEFAULT_MAX_WIDTH, DEFAULT_MC_STEPS};
use crate::mobius::{HalfSpace, Mobius, SchottkyGenerator, SchottkyGroup};
use crate::model::Model;
use crate::walk::StepDistribution;
use crate::word::{Letter, ReducedWord, MAX_RANK};
use crate::HPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub matrix: [f64; 4],
    pub minus: HalfSpace<f64>,
    pub plus: HalfSpace<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Tree { rank: usize },
    HalfPlane { generators: Vec<GeneratorSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomSpec {
    Word { word: ReducedWord, p: f64 },
    Matrix { matrix: [f64; 4], p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
    /// Paths are simulated to `horizon · n` steps.
    pub horizon: usize,
    /// A word on the tree, `x y` on the half-plane.
    pub basepoint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    pub depth: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub c: f64,
    pub r: usize,
    pub sigmas: f64,
    pub chart: Chart,
    /// Smaller `n` for two-scale comparisons.
    pub compare_n: usize,
    pub mc_samples: usize,
    pub mc_steps: usize,
    pub fp_paths: usize,
    pub max_width: f64,
    /// Number of independent paths used to validate a flow prediction.
    pub oracle_paths: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            depth: 2,
            delta: DEFAULT_DELTA,
            epsilon: 0.1,
            c: 2.0,
            r: 1,
            sigmas: 3.0,
            chart: Chart::default(),
            compare_n: 1000,
            mc_samples: 100_000,
            mc_steps: DEFAULT_MC_STEPS,
            fp_paths: 100_000,
            max_width: DEFAULT_MAX_WIDTH,
            oracle_paths: 20,
        }
    }
}

/// Pass condition attached to a reported statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    Within { lo: f64, hi: f64 },
    /// Passes when the value is 1.
    Holds,
}

impl Gate {
    /// Signed distance to the gate boundary; nonnegative exactly when the
    /// value passes.
    pub fn margin(&self, value: f64) -> f64 {
        match *self {
            Gate::AtMost { bound } => bound - value,
            Gate::AtLeast { bound } => value - bound,
            Gate::Within { lo, hi } => (value - lo).min(hi - value),
            Gate::Holds => {
                if value == 1.0 {
                    0.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::AtMost { bound } => write!(f, "<= {bound}"),
            Gate::AtLeast { bound } => write!(f, ">= {bound}"),
            Gate::Within { lo, hi } => write!(f, "{lo} .. {hi}"),
            Gate::Holds => write!(f, "holds"),
        }
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "holds" || s == "true" {
            return Ok(Gate::Holds);
        }
        if let Some(rest) = s.strip_prefix("<=") {
            return Ok(Gate::AtMost { bound: number(rest)? });
        }
        if let Some(rest) = s.strip_prefix(">=") {
            return Ok(Gate::AtLeast { bound: number(rest)? });
        }
        if let Some((lo, hi)) = s.split_once("..") {
            let (lo, hi) = (number(lo)?, number(hi)?);
            if lo > hi {
                return Err(format!("empty interval {lo} .. {hi}"));
            }
            return Ok(Gate::Within { lo, hi });
        }
        Err(format!("cannot read gate {s:?}; use `<= x`, `>= x`, `lo .. hi` or `holds`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub mu: Vec<AtomSpec>,
    pub run: RunSpec,
    pub analysis: AnalysisSpec,
    pub gates: BTreeMap<String, Gate>,
}

/// Decimal or `p/q`.
pub fn number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    let v = match s.split_once('/') {
        Some((p, q)) => parse(p)? / parse(q)?,
        None => parse(s)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

fn matrix(tokens: &[&str]) -> std::result::Result<[f64; 4], String> {
    if tokens.len() != 4 {
        return Err(format!("a matrix needs 4 entries, got {}", tokens.len()));
    }
    let mut m = [0.0; 4];
    for (slot, t) in m.iter_mut().zip(tokens) {
        *slot = number(t)?;
    }
    Ok(m)
}

fn half_space(s: &str) -> std::result::Result<HalfSpace<f64>, String> {
    let t: Vec<&str> = s.split_whitespace().collect();
    match t.as_slice() {
        ["disk", c, r] => Ok(HalfSpace::Disk {
            center: number(c)?,
            radius: number(r)?,
        }),
        ["outside", c, r] => Ok(HalfSpace::Outside {
            center: number(c)?,
            radius: number(r)?,
        }),
        ["halfplane", cut, "left"] => Ok(HalfSpace::Left { cut: number(cut)? }),
        ["halfplane", cut, "right"] => Ok(HalfSpace::Right { cut: number(cut)? }),
        _ => Err(format!("cannot read region {s:?}")),
    }
}

#[derive(Default)]
struct Raw {
    kind: Option<(usize, String)>,
    rank: Option<(usize, usize)>,
    generators: Vec<(usize, char, GeneratorSpec)>,
    mu: Vec<(usize, AtomSpec)>,
    uniform: Option<usize>,
    run: BTreeMap<String, (usize, String)>,
    analysis: BTreeMap<String, (usize, String)>,
    gates: BTreeMap<String, Gate>,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn key_value(line: usize, s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| err(line, format!("expected `key = value`, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut raw = Raw::default();
        let mut section: Option<String> = None;
        for (i, full) in text.lines().enumerate() {
            let line = i + 1;
            let s = full.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                if !["model", "generators", "mu", "run", "analysis", "gates"].contains(&name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            match section.as_deref() {
                None => return Err(err(line, "entry before any section")),
                Some("model") => {
                    let (k, v) = key_value(line, s)?;
                    match k.as_str() {
                        "kind" => raw.kind = Some((line, v)),
                        "rank" => {
                            let r = v.parse().map_err(|_| err(line, format!("bad rank {v:?}")))?;
                            raw.rank = Some((line, r));
                        }
                        _ => return Err(err(line, format!("unknown model key {k:?}"))),
                    }
                }
                Some("generators") => {
                    let (k, v) = key_value(line, s)?;
                    let name = match k.chars().collect::<Vec<_>>().as_slice() {
                        [c] if c.is_ascii_lowercase() => *c,
                        _ => return Err(err(line, format!("generator names are single lowercase letters, got {k:?}"))),
                    };
                    let parts: Vec<&str> = v.split('|').collect();
                    if parts.len() != 3 {
                        return Err(err(line, "expected `matrix | minus region | plus region`"));
                    }
                    let m = matrix(&parts[0].split_whitespace().collect::<Vec<_>>()).map_err(|e| err(line, e))?;
                    let minus = half_space(parts[1]).map_err(|e| err(line, e))?;
                    let plus = half_space(parts[2]).map_err(|e| err(line, e))?;
                    raw.generators.push((line, name, GeneratorSpec { matrix: m, minus, plus }));
                }
                Some("mu") => {
                    if s == "uniform" {
                        raw.uniform = Some(line);
                        continue;
                    }
                    let t: Vec<&str> = s.split_whitespace().collect();
                    let p = number(t.last().expect("nonempty line")).map_err(|e| err(line, e))?;
                    let atom = match &t[..t.len() - 1] {
                        [w] => AtomSpec::Word {
                            word: w.parse().map_err(|e: Error| err(line, e.to_string()))?,
                            p,
                        },
                        m if m.len() == 4 => AtomSpec::Matrix {
                            matrix: matrix(m).map_err(|e| err(line, e))?,
                            p,
                        },
                        _ => return Err(err(line, "expected `<word> <p>` or `<m11 m12 m21 m22> <p>`")),
                    };
                    raw.mu.push((line, atom));
                }
                Some("run") => {
                    let (k, v) = key_value(line, s)?;
                    raw.run.insert(k, (line, v));
                }
                Some("analysis") => {
                    let (k, v) = key_value(line, s)?;
                    raw.analysis.insert(k, (line, v));
                }
                Some("gates") => {
                    let (k, v) = key_value(line, s)?;
                    let g = v.parse().map_err(|e| err(line, e))?;
                    raw.gates.insert(k, g);
                }
                Some(_) => unreachable!(),
            }
        }
        raw.finish()
    }
}

fn parse_field<T: FromStr>(map: &mut BTreeMap<String, (usize, String)>, key: &str, default: T) -> Result<T> {
    match map.remove(key) {
        None => Ok(default),
        Some((line, v)) => v.parse().map_err(|_| err(line, format!("bad value {v:?} for {key}"))),
    }
}

fn parse_number(map: &mut BTreeMap<String, (usize, String)>, key: &str, default: f64) -> Result<f64> {
    match map.remove(key) {
        None => Ok(default),
        Some((line, v)) => number(&v).map_err(|e| err(line, e)),
    }
}

impl Raw {
    fn finish(mut self) -> Result<ExperimentConfig> {
        let (kind_line, kind) = self.kind.take().ok_or_else(|| err(0, "missing [model] kind"))?;
        let model = match kind.as_str() {
            "tree" => {
                let (line, rank) = self.rank.ok_or_else(|| err(kind_line, "tree model needs a rank"))?;
                if !(1..=MAX_RANK).contains(&rank) {
                    return Err(err(line, format!("rank must lie in 1..={MAX_RANK}")));
                }
                if let Some((line, ..)) = self.generators.first() {
                    return Err(err(*line, "generators are only read for the halfplane model"));
                }
                ModelSpec::Tree { rank }
            }
            "halfplane" => {
                if self.generators.is_empty() {
                    return Err(err(kind_line, "halfplane model needs a [generators] section"));
                }
                for (i, (line, name, _)) in self.generators.iter().enumerate() {
                    if *name != Letter::generator(i).to_char() {
                        return Err(err(*line, format!("generators must be named a, b, c, ... in order; got {name}")));
                    }
                }
                if let Some((line, rank)) = self.rank {
                    if rank != self.generators.len() {
                        return Err(err(line, format!("rank {rank} but {} generators", self.generators.len())));
                    }
                }
                ModelSpec::HalfPlane {
                    generators: self.generators.into_iter().map(|(_, _, g)| g).collect(),
                }
            }
            other => return Err(err(kind_line, format!("unknown model kind {other:?}"))),
        };
        let rank = match &model {
            ModelSpec::Tree { rank } => *rank,
            ModelSpec::HalfPlane { generators } => generators.len(),
        };
        let mu = match (self.uniform, self.mu.is_empty()) {
            (Some(_), true) => {
                let p = 1.0 / (2 * rank) as f64;
                Letter::alphabet(rank)
                    .map(|x| AtomSpec::Word {
                        word: ReducedWord::letter(x),
                        p,
                    })
                    .collect()
            }
            (Some(line), false) => return Err(err(line, "`uniform` cannot be combined with listed atoms")),
            (None, true) => return Err(err(0, "missing [mu]")),
            (None, false) => self.mu.into_iter().map(|(_, a)| a).collect(),
        };
        let run = RunSpec {
            n: parse_field(&mut self.run, "n", 1000)?,
            paths: parse_field(&mut self.run, "paths", 100)?,
            seed: parse_field(&mut self.run, "seed", 0)?,
            horizon: parse_field(&mut self.run, "horizon", 2)?,
            basepoint: self.run.remove("basepoint").map(|(_, v)| v),
        };
        if let Some((k, (line, _))) = self.run.into_iter().next() {
            return Err(err(line, format!("unknown run key {k:?}")));
        }
        if run.n == 0 || run.paths == 0 || run.horizon == 0 {
            return Err(err(0, "n, paths and horizon must be positive"));
        }
        let d = AnalysisSpec::default();
        let a = &mut self.analysis;
        let chart = match a.remove("chart") {
            None => d.chart.clone(),
            Some((line, v)) => {
                let t: Vec<&str> = v.split_whitespace().collect();
                if t.len() != 7 {
                    return Err(err(line, "chart = x_min x_max x_bins y_min y_max y_bins angle_sectors"));
                }
                let f = |i: usize| number(t[i]).map_err(|e| err(line, e));
                let u = |i: usize| t[i].parse::<usize>().map_err(|_| err(line, format!("bad bin count {:?}", t[i])));
                let c = Chart {
                    x_min: f(0)?,
                    x_max: f(1)?,
                    x_bins: u(2)?,
                    y_min: f(3)?,
                    y_max: f(4)?,
                    y_bins: u(5)?,
                    angle_sectors: u(6)?,
                };
                c.validate().map_err(|e| err(line, e.to_string()))?;
                c
            }
        };
        let analysis = AnalysisSpec {
            depth: parse_field(a, "depth", d.depth)?,
            delta: parse_number(a, "delta", d.delta)?,
            epsilon: parse_number(a, "epsilon", d.epsilon)?,
            c: parse_number(a, "c", d.c)?,
            r: parse_field(a, "r", d.r)?,
            sigmas: parse_number(a, "sigmas", d.sigmas)?,
            chart,
            compare_n: parse_field(a, "compare_n", d.compare_n)?,
            mc_samples: parse_field(a, "mc_samples", d.mc_samples)?,
            mc_steps: parse_field(a, "mc_steps", d.mc_steps)?,
            fp_paths: parse_field(a, "fp_paths", d.fp_paths)?,
            max_width: parse_number(a, "max_width", d.max_width)?,
            oracle_paths: parse_field(a, "oracle_paths", d.oracle_paths)?,
        };
        if let Some((k, (line, _))) = std::mem::take(a).into_iter().next() {
            return Err(err(line, format!("unknown analysis key {k:?}")));
        }
        if !(analysis.delta > 0.0 && analysis.delta <= 0.05) {
            return Err(err(0, "delta must lie in (0, 0.05]"));
        }
        Ok(ExperimentConfig {
            model,
            mu,
            run,
            analysis,
            gates: self.gates,
        })
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn rank(&self) -> usize {
        match &self.model {
            ModelSpec::Tree { rank } => *rank,
            ModelSpec::HalfPlane { generators } => generators.len(),
        }
    }

    /// Certifies the Schottky group for half-plane models.
    pub fn build_model(&self) -> Result<Model> {
        match &self.model {
            ModelSpec::Tree { rank } => {
                let m = Model::tree(*rank)?;
                match &self.run.basepoint {
                    None => Ok(m),
                    Some(w) => m.with_tree_basepoint(w.parse()?),
                }
            }
            ModelSpec::HalfPlane { generators } => {
                let gens = generators
                    .iter()
                    .map(|g| {
                        let [a, b, c, d] = g.matrix;
                        Ok(SchottkyGenerator {
                            map: Mobius::new(a, b, c, d)?,
                            minus: g.minus,
                            plus: g.plus,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = Model::half_plane(SchottkyGroup::certify(gens)?);
                match &self.run.basepoint {
                    None => Ok(m),
                    Some(s) => {
                        let t: Vec<&str> = s.split_whitespace().collect();
                        let bad = || Error::Config {
                            line: 0,
                            message: format!("half-plane basepoint must be `x y`, got {s:?}"),
                        };
                        if t.len() != 2 {
                            return Err(bad());
                        }
                        let x = number(t[0]).map_err(|_| bad())?;
                        let y = number(t[1]).map_err(|_| bad())?;
                        m.with_plane_basepoint(HPoint::new(x, y)?)
                    }
                }
            }
        }
    }

    /// Step distribution with matrix atoms resolved to generator letters.
    pub fn build_mu(&self, model: &Model) -> Result<StepDistribution> {
        let atoms = self
            .mu
            .iter()
            .map(|a| match a {
                AtomSpec::Word { word, p } => {
                    word.check_rank(self.rank())?;
                    Ok((word.clone(), *p))
                }
                AtomSpec::Matrix { matrix, p } => {
                    let Model::HalfPlane { group, .. } = model else {
                        return Err(Error::Unsupported("matrix atoms on the tree".into()));
                    };
                    let [a, b, c, d] = *matrix;
                    let m = Mobius::new(a, b, c, d)?;
                    let x = group.match_matrix(&m, 1e-9).ok_or_else(|| {
                        Error::InvalidDistribution(format!("matrix {m} is not a generator or inverse"))
                    })?;
                    Ok((ReducedWord::letter(x), *p))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        StepDistribution::new(atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHOTTKY: &str = "
[model]
kind = halfplane
[generators]
a = 3 0 0 1/3 | disk 0 1/3 | outside 0 3
b = 5/3 -4/3 -4/3 5/3 | disk 1.25 0.75 | disk -1.25 0.75
[mu]
uniform
[run]
n = 2000
paths = 20
";

    #[test]
    fn parses_tree_config() {
        let c: ExperimentConfig = "
# comment
[model]
kind = tree
rank = 2
[mu]
ab 1   # point mass
[run]
n = 100
paths = 3
seed = 42
basepoint = ab
[analysis]
depth = 3
[gates]
drift = 1.99 .. 2.01
tracking_median = <= 0.02
"
        .parse()
        .unwrap();
        assert_eq!(c.model, ModelSpec::Tree { rank: 2 });
        assert_eq!(c.run.seed, 42);
        assert_eq!(c.analysis.depth, 3);
        assert_eq!(c.gates["drift"], Gate::Within { lo: 1.99, hi: 2.01 });
        let m = c.build_model().unwrap();
        assert_eq!(c.build_mu(&m).unwrap(), StepDistribution::point_mass("ab".parse().unwrap()));
    }

    #[test]
    fn parses_schottky_config() {
        let c: ExperimentConfig = SCHOTTKY.parse().unwrap();
        let m = c.build_model().unwrap();
        assert_eq!(m.rank(), 2);
        assert_eq!(c.build_mu(&m).unwrap(), StepDistribution::uniform_nearest_neighbor(2));
        let pm: ExperimentConfig = SCHOTTKY.replace("uniform", "1/3 0 0 3 1").parse().unwrap();
        let mu = pm.build_mu(&m).unwrap();
        assert_eq!(mu.atom(0).to_string(), "A");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = "[model]\nkind = tree\nrank = 2\n[mu]\nab 0.5\n[run]\nwidth = 3\n".parse::<ExperimentConfig>();
        assert!(matches!(e, Err(Error::Config { line: 7, .. })));
        let e = "[model]\nkind = tree\nrank = x\n".parse::<ExperimentConfig>();
        assert!(matches!(e, Err(Error::Config { line: 3, .. })));
        let e = "[modle]\n".parse::<ExperimentConfig>();
        assert!(matches!(e, Err(Error::Config { line: 1, .. })));
        let bad = SCHOTTKY.replace("disk 1.25 0.75 | disk -1.25 0.75", "disk 1.25 0.75 | ellipse");
        assert!(matches!(bad.parse::<ExperimentConfig>(), Err(Error::Config { line: 6, .. })));
    }

    #[test]
    fn overlapping_disks_fail_certification() {
        let c: ExperimentConfig = SCHOTTKY.replace("disk -1.25 0.75", "disk 0.5 0.75").parse().unwrap();
        assert!(matches!(c.build_model(), Err(Error::DisksOverlap(..))));
    }

    #[test]
    fn gate_margins() {
        assert_eq!(Gate::AtMost { bound: 0.02 }.margin(0.01), 0.01);
        assert!(Gate::Within { lo: 0.49, hi: 0.51 }.margin(0.52) < 0.0);
        assert_eq!(Gate::Holds.margin(1.0), 0.0);
        assert!(Gate::Holds.margin(0.0) < 0.0);
        for s in ["<= 0.5", ">= 1/2", "0.1 .. 0.2", "holds"] {
            let g: Gate = s.parse().unwrap();
            assert_eq!(g.to_string().parse::<Gate>().unwrap(), g);
        }
    }
}
