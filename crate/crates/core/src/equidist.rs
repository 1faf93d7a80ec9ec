//! Occupation measures of closed geodesics, Birkhoff averages along rays, and
//! the Markov prediction of the limit measure, on a fixed finite partition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{HarmonicKernel, MeanEstimate};
use crate::mobius::{sweep_closed_geodesic, sweep_ray, UnitTangent};
use crate::word::{cyclic_reduce, reduced_words, ReducedWord, TreeBoundaryPrefix};
use crate::{HPoint, Schottky};

/// Axis sampling step used unless configured otherwise.
pub const DEFAULT_DELTA: f64 = 0.02;

/// Masses of length-`depth` non-backtracking letter strings: a measure on
/// geodesic lines of the rose.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeFlowMeasure {
    pub rank: usize,
    pub depth: usize,
    pub masses: BTreeMap<ReducedWord, f64>,
}

impl TreeFlowMeasure {
    fn from_counts(rank: usize, depth: usize, counts: BTreeMap<ReducedWord, f64>, total: f64) -> Self {
        let masses = counts.into_iter().map(|(w, c)| (w, c / total)).collect();
        TreeFlowMeasure { rank, depth, masses }
    }

    pub fn mass(&self, w: &ReducedWord) -> f64 {
        self.masses.get(w).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.masses.values().sum()
    }

    /// `max_{w′} |Σ_s m[s w′] − Σ_t m[w′ t]|` over reduced `w′` of length
    /// `depth − 1`; zero for a flow-invariant measure.
    pub fn shift_gap(&self) -> f64 {
        if self.depth == 0 {
            return 0.0;
        }
        let mut left: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        let mut right: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        for (w, &m) in &self.masses {
            let l = w.letters();
            *left.entry(ReducedWord::from_letters(l[1..].iter().copied())).or_insert(0.0) += m;
            *right.entry(w.prefix(l.len() - 1)).or_insert(0.0) += m;
        }
        reduced_words(self.rank, self.depth - 1)
            .iter()
            .map(|v| (left.get(v).copied().unwrap_or(0.0) - right.get(v).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// Cell masses in [`reduced_words`] order.
    pub fn cells(&self) -> Vec<f64> {
        reduced_words(self.rank, self.depth).iter().map(|w| self.mass(w)).collect()
    }
}

/// Grid over fundamental-domain tangent vectors: `x` bins on a linear scale,
/// `y` bins on a log scale over `(y_min, y_max]`, and direction sectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub x_min: f64,
    pub x_max: f64,
    pub x_bins: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub y_bins: usize,
    pub angle_sectors: usize,
}

impl Default for Chart {
    fn default() -> Self {
        Chart {
            x_min: -3.0,
            x_max: 3.0,
            x_bins: 8,
            y_min: 0.2,
            y_max: 5.0,
            y_bins: 8,
            angle_sectors: 8,
        }
    }
}

impl Chart {
    pub fn validate(&self) -> Result<()> {
        let ok = self.x_min < self.x_max
            && 0.0 < self.y_min
            && self.y_min < self.y_max
            && self.x_bins > 0
            && self.y_bins > 0
            && self.angle_sectors > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Degenerate(format!("bad chart {self:?}")))
        }
    }

    /// Number of grid cells; the overflow cell comes after them.
    pub fn cells(&self) -> usize {
        self.x_bins * self.y_bins * self.angle_sectors
    }

    pub fn overflow_index(&self) -> usize {
        self.cells()
    }

    pub fn index(&self, ix: usize, iy: usize, ia: usize) -> usize {
        (ix * self.y_bins + iy) * self.angle_sectors + ia
    }

    pub fn coords(&self, cell: usize) -> (usize, usize, usize) {
        let ia = cell % self.angle_sectors;
        let rest = cell / self.angle_sectors;
        (rest / self.y_bins, rest % self.y_bins, ia)
    }

    pub fn bin(&self, v: &UnitTangent<f64>) -> usize {
        let (x, y) = (v.point.x, v.point.y);
        if !(self.x_min <= x && x <= self.x_max && self.y_min < y && y <= self.y_max) {
            return self.overflow_index();
        }
        let fx = (x - self.x_min) / (self.x_max - self.x_min);
        let fy = (y / self.y_min).ln() / (self.y_max / self.y_min).ln();
        let fa = v.angle.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU;
        let ix = ((fx * self.x_bins as f64) as usize).min(self.x_bins - 1);
        let iy = ((fy * self.y_bins as f64) as usize).min(self.y_bins - 1);
        let ia = ((fa * self.angle_sectors as f64) as usize).min(self.angle_sectors - 1);
        self.index(ix, iy, ia)
    }

    /// Label for a cell: `ix,iy,ia` or `overflow`.
    pub fn label(&self, cell: usize) -> String {
        if cell == self.overflow_index() {
            "overflow".into()
        } else {
            let (ix, iy, ia) = self.coords(cell);
            format!("{ix},{iy},{ia}")
        }
    }
}

/// Normalized bin masses over a [`Chart`], overflow last.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinnedMeasure {
    pub chart: Chart,
    pub masses: Vec<f64>,
}

impl BinnedMeasure {
    fn from_counts(chart: Chart, counts: Vec<f64>) -> Self {
        let total: f64 = counts.iter().sum();
        let masses = counts.into_iter().map(|c| c / total).collect();
        BinnedMeasure { chart, masses }
    }

    pub fn overflow(&self) -> f64 {
        self.masses[self.chart.overflow_index()]
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FlowMeasure {
    Tree(TreeFlowMeasure),
    Binned(BinnedMeasure),
}

impl FlowMeasure {
    /// Masses on a common cell index; errors if the partitions differ.
    fn aligned(&self, other: &FlowMeasure) -> Result<(Vec<f64>, Vec<f64>)> {
        match (self, other) {
            (FlowMeasure::Tree(a), FlowMeasure::Tree(b)) if a.depth == b.depth && a.rank == b.rank => {
                Ok((a.cells(), b.cells()))
            }
            (FlowMeasure::Binned(a), FlowMeasure::Binned(b)) if a.chart == b.chart => {
                Ok((a.masses.clone(), b.masses.clone()))
            }
            _ => Err(Error::ChartMismatch),
        }
    }

    pub fn cells(&self) -> Vec<f64> {
        match self {
            FlowMeasure::Tree(m) => m.cells(),
            FlowMeasure::Binned(m) => m.masses.clone(),
        }
    }

    /// `(key, mass)` rows for tabular output.
    pub fn entries(&self) -> Vec<(String, f64)> {
        match self {
            FlowMeasure::Tree(m) => m.masses.iter().map(|(w, &p)| (w.to_string(), p)).collect(),
            FlowMeasure::Binned(m) => m
                .masses
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| (m.chart.label(i), p))
                .collect(),
        }
    }
}

/// Normalized arclength on the closed geodesic of `source`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedGeodesicMeasure {
    pub measure: FlowMeasure,
    pub length: f64,
    pub source: ReducedWord,
}

/// `(1/2) Σ |m₁ − m₂|`.
pub fn tv_distance(a: &FlowMeasure, b: &FlowMeasure) -> Result<f64> {
    let (x, y) = a.aligned(b)?;
    Ok(0.5 * x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum::<f64>())
}

/// Frequencies of the length-`depth` windows of the periodic word `core(g)^∞`
/// over one period.
pub fn loxo_occupation_tree(g: &ReducedWord, rank: usize, depth: usize) -> Result<ClosedGeodesicMeasure> {
    let core = cyclic_reduce(g).core;
    let l = core.len();
    if l < depth || l == 0 {
        return Err(Error::TooShort { length: l, depth });
    }
    let mut counts = BTreeMap::new();
    for i in 0..l {
        let w = ReducedWord::from_letters(core.window(i, depth));
        *counts.entry(w).or_insert(0.0) += 1.0;
    }
    Ok(ClosedGeodesicMeasure {
        measure: FlowMeasure::Tree(TreeFlowMeasure::from_counts(rank, depth, counts, l as f64)),
        length: l as f64,
        source: g.clone(),
    })
}

/// Sliding-window frequencies of length-`depth` subwords along the ray.
pub fn ray_oracle_tree(xi: &TreeBoundaryPrefix, rank: usize, depth: usize) -> Result<TreeFlowMeasure> {
    let t = xi.depth();
    if depth == 0 || t < 10 * depth {
        return Err(Error::TooShort { length: t, depth });
    }
    let letters = xi.letters.letters();
    let mut counts = BTreeMap::new();
    for win in letters.windows(depth) {
        *counts.entry(ReducedWord::from_letters(win.iter().copied())).or_insert(0.0) += 1.0;
    }
    Ok(TreeFlowMeasure::from_counts(rank, depth, counts, (t - depth + 1) as f64))
}

/// `m[w] = π(w₁)·Π q(wᵢ → wᵢ₊₁)` with `π` stationary for `q`.
pub fn markov_flow_prediction(kernel: &HarmonicKernel, depth: usize) -> TreeFlowMeasure {
    let pi = kernel.stationary_law();
    let masses = reduced_words(kernel.rank, depth)
        .into_iter()
        .map(|w| {
            let l = w.letters();
            let m = pi[l[0].code()] * l.windows(2).map(|p| kernel.q(p[0], p[1])).product::<f64>();
            (w, m)
        })
        .collect();
    TreeFlowMeasure {
        rank: kernel.rank,
        depth,
        masses,
    }
}

/// Checks each cell of a prediction against the mean of independent ray
/// oracles within `sigmas` standard errors across oracles.
pub fn validate_flow_prediction(pred: &TreeFlowMeasure, oracles: &[TreeFlowMeasure], sigmas: f64) -> Result<()> {
    if oracles.len() < 2 {
        return Err(Error::Unsupported("validation needs at least two oracles".into()));
    }
    for w in reduced_words(pred.rank, pred.depth) {
        let xs: Vec<f64> = oracles.iter().map(|o| o.mass(&w)).collect();
        let e = MeanEstimate::from_samples(&xs);
        let p = pred.mass(&w);
        if (e.mean - p).abs() > sigmas * e.std_error {
            return Err(Error::ValidationFailed {
                cylinder: w.to_string(),
                detail: format!("predicted {p:.6}, ray average {:.6} ± {:.2e}", e.mean, e.std_error),
            });
        }
    }
    Ok(())
}

/// Bins `⌈ℓ/δ⌉` equally spaced unit tangents along one period of the closed
/// geodesic of `g`, taken in the fundamental domain.
pub fn loxo_occupation_h2(group: &Schottky, g: &ReducedWord, chart: &Chart, delta: f64) -> Result<ClosedGeodesicMeasure> {
    chart.validate()?;
    let core = cyclic_reduce(g).core;
    let mut counts = vec![0.0; chart.cells() + 1];
    let length = sweep_closed_geodesic(group, &core, delta, |v| counts[chart.bin(&v)] += 1.0)?;
    Ok(ClosedGeodesicMeasure {
        measure: FlowMeasure::Binned(BinnedMeasure::from_counts(chart.clone(), counts)),
        length,
        source: g.clone(),
    })
}

/// Bins the unit tangents of the ray from `o` toward the limit point of `xi`
/// at `t = 0, δ, …, ≤ length`.
pub fn ray_oracle_h2(
    group: &Schottky,
    o: HPoint,
    xi: &ReducedWord,
    length: f64,
    chart: &Chart,
    delta: f64,
) -> Result<BinnedMeasure> {
    chart.validate()?;
    let mut counts = vec![0.0; chart.cells() + 1];
    sweep_ray(group, o, xi.letters(), length, delta, |s| counts[chart.bin(&s.tangent)] += 1.0)?;
    Ok(BinnedMeasure::from_counts(chart.clone(), counts))
}

/// A test set `A` with its erosion and dilation, as cell indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestSet {
    pub name: String,
    pub cells: Vec<usize>,
    pub interior: Vec<usize>,
    pub neighborhood: Vec<usize>,
}

/// Depth-`D` cylinders (empty interior, neighbourhood the parent
/// depth-`(D−1)` cylinder), depth-`(D−1)` cylinders (their own interior and
/// neighbourhood), and the complements of both kinds.
pub fn tree_test_family(rank: usize, depth: usize) -> Vec<TestSet> {
    let words = reduced_words(rank, depth);
    let all: Vec<usize> = (0..words.len()).collect();
    let with_prefix = |p: &ReducedWord| -> Vec<usize> {
        all.iter().copied().filter(|&i| words[i].letters().starts_with(p.letters())).collect()
    };
    let complement = |s: &[usize]| -> Vec<usize> { all.iter().copied().filter(|i| !s.contains(i)).collect() };
    let mut out = Vec::new();
    for (i, w) in words.iter().enumerate() {
        let parent = with_prefix(&w.prefix(depth - 1));
        out.push(TestSet {
            name: format!("[{w}]"),
            cells: vec![i],
            interior: vec![],
            neighborhood: parent.clone(),
        });
        out.push(TestSet {
            name: format!("not [{w}]"),
            cells: complement(&[i]),
            interior: complement(&parent),
            neighborhood: all.clone(),
        });
    }
    if depth >= 2 {
        for p in reduced_words(rank, depth - 1) {
            let cells = with_prefix(&p);
            out.push(TestSet {
                name: format!("[{p}]"),
                cells: cells.clone(),
                interior: cells.clone(),
                neighborhood: cells.clone(),
            });
            let rest = complement(&cells);
            out.push(TestSet {
                name: format!("not [{p}]"),
                cells: rest.clone(),
                interior: rest.clone(),
                neighborhood: rest,
            });
        }
    }
    out
}

fn cyclic_dist(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Grid cells within `r` bins of `cell` in each coordinate, angles cyclic.
/// The overflow cell is its own only neighbour.
fn chart_ball(chart: &Chart, cell: usize, r: usize) -> Vec<usize> {
    if cell == chart.overflow_index() {
        return vec![cell];
    }
    let (ix, iy, ia) = chart.coords(cell);
    (0..chart.cells())
        .filter(|&c| {
            let (jx, jy, ja) = chart.coords(c);
            ix.abs_diff(jx) <= r && iy.abs_diff(jy) <= r && cyclic_dist(ia, ja, chart.angle_sectors) <= r
        })
        .collect()
}

fn chart_set(chart: &Chart, name: String, cells: Vec<usize>, r: usize) -> TestSet {
    let member: Vec<bool> = (0..=chart.cells()).map(|c| cells.contains(&c)).collect();
    let mut neighborhood = Vec::new();
    let mut interior = Vec::new();
    for c in 0..=chart.cells() {
        let ball = chart_ball(chart, c, r);
        if ball.iter().any(|&b| member[b]) {
            neighborhood.push(c);
        }
        if ball.iter().all(|&b| member[b]) {
            interior.push(c);
        }
    }
    TestSet {
        name,
        cells,
        interior,
        neighborhood,
    }
}

/// Slabs one and three bins wide along each chart axis, with their
/// `r`-bin erosions and dilations.
pub fn chart_test_family(chart: &Chart, r: usize) -> Vec<TestSet> {
    let mut out = Vec::new();
    let axes = [("x", chart.x_bins), ("y", chart.y_bins), ("angle", chart.angle_sectors)];
    for (axis, (name, bins)) in axes.iter().enumerate() {
        for width in [1usize, 3] {
            if width > *bins {
                continue;
            }
            let starts = if axis == 2 { *bins } else { bins - width + 1 };
            for start in 0..starts {
                let in_slab = |k: usize| {
                    if axis == 2 {
                        (k + bins - start) % bins < width
                    } else {
                        k >= start && k < start + width
                    }
                };
                let cells: Vec<usize> = (0..chart.cells())
                    .filter(|&c| {
                        let (ix, iy, ia) = chart.coords(c);
                        in_slab([ix, iy, ia][axis])
                    })
                    .collect();
                let label = format!("{name}[{start}..{}]", start + width);
                out.push(chart_set(chart, label, cells, r));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichCheck {
    pub name: String,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub slack: f64,
    /// Distance inside the slackened interval; negative on failure.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub pass: bool,
    pub worst_margin: f64,
    pub checks: Vec<SandwichCheck>,
}

fn set_mass(cells: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| cells[i]).sum()
}

/// For each test set checks `m̂(I A) − slack ≤ loxo(A) ≤ m̂(N A) + slack`,
/// with both sides averaged over the given measures and `slack` equal to
/// `sigmas` standard errors of the difference across them.
pub fn portmanteau_sandwich(
    loxo: &[FlowMeasure],
    oracle: &[FlowMeasure],
    family: &[TestSet],
    sigmas: f64,
) -> Result<SandwichReport> {
    let first = loxo.first().ok_or(Error::ChartMismatch)?;
    for m in loxo.iter().chain(oracle) {
        first.aligned(m)?;
    }
    let lc: Vec<Vec<f64>> = loxo.iter().map(|m| m.cells()).collect();
    let oc: Vec<Vec<f64>> = oracle.iter().map(|m| m.cells()).collect();
    let stat = |ms: &[Vec<f64>], set: &[usize]| {
        let xs: Vec<f64> = ms.iter().map(|c| set_mass(c, set)).collect();
        let e = MeanEstimate::from_samples(&xs);
        (e.mean, if e.std_error.is_finite() { e.std_error } else { 0.0 })
    };
    let checks: Vec<SandwichCheck> = family
        .iter()
        .map(|a| {
            let (value, se_v) = stat(&lc, &a.cells);
            let (lower, se_l) = stat(&oc, &a.interior);
            let (upper, se_u) = stat(&oc, &a.neighborhood);
            let slack = sigmas * (se_v * se_v + se_l.max(se_u).powi(2)).sqrt();
            let margin = (value - (lower - slack)).min(upper + slack - value);
            SandwichCheck {
                name: a.name.clone(),
                lower,
                value,
                upper,
                slack,
                margin,
                pass: margin >= -1e-12,
            }
        })
        .collect();
    let worst_margin = checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    Ok(SandwichReport {
        pass: checks.iter().all(|c| c.pass),
        worst_margin,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{first_passage_solve, harmonic_kernel};
    use crate::mobius::example_group;
    use crate::walk::{sample_path, StepDistribution};
    use crate::word::word;

    fn tree_masses(m: &ClosedGeodesicMeasure) -> &TreeFlowMeasure {
        match &m.measure {
            FlowMeasure::Tree(t) => t,
            _ => unreachable!(),
        }
    }

    fn binned(m: &ClosedGeodesicMeasure) -> &BinnedMeasure {
        match &m.measure {
            FlowMeasure::Binned(b) => b,
            _ => unreachable!(),
        }
    }

    #[test]
    fn loxo_tree_examples() {
        let m = loxo_occupation_tree(&word("abab"), 2, 1).unwrap();
        let t = tree_masses(&m);
        assert_eq!(t.mass(&word("a")), 0.5);
        assert_eq!(t.mass(&word("b")), 0.5);
        let m = loxo_occupation_tree(&word("abab"), 2, 2).unwrap();
        let t = tree_masses(&m);
        assert_eq!(t.mass(&word("ab")), 0.5);
        assert_eq!(t.mass(&word("ba")), 0.5);
        let m = loxo_occupation_tree(&word("abaBA"), 2, 1).unwrap();
        assert_eq!(tree_masses(&m).mass(&word("a")), 1.0);
        assert_eq!(loxo_occupation_tree(&word("ab"), 2, 3), Err(Error::TooShort { length: 2, depth: 3 }));
    }

    #[test]
    fn loxo_tree_is_shift_invariant_and_conjugation_invariant() {
        let g = word("abbaBcAbcc");
        let m = loxo_occupation_tree(&g, 3, 3).unwrap();
        assert!(tree_masses(&m).shift_gap() < 1e-15);
        let h = word("cAb");
        let c = loxo_occupation_tree(&(&(&h * &g) * &h.inverse()), 3, 3).unwrap();
        assert_eq!(m.measure, c.measure);
    }

    #[test]
    fn ray_oracle_tree_periodic() {
        let xi = TreeBoundaryPrefix::new(word("ab").pow(50));
        let m = ray_oracle_tree(&xi, 2, 2).unwrap();
        assert!((m.mass(&word("ab")) - 0.5).abs() <= 2.0 / 100.0);
        assert!((m.mass(&word("ba")) - 0.5).abs() <= 2.0 / 100.0);
        assert!(ray_oracle_tree(&TreeBoundaryPrefix::new(word("ab")), 2, 3).is_err());
    }

    #[test]
    fn markov_prediction_examples() {
        let mu = StepDistribution::uniform_nearest_neighbor(2);
        let k = harmonic_kernel(&first_passage_solve(&mu, 2).unwrap(), &mu).unwrap();
        let m = markov_flow_prediction(&k, 2);
        assert_eq!(m.masses.len(), 12);
        for v in m.masses.values() {
            assert!((v - 1.0 / 12.0).abs() < 1e-14);
        }
        let mu = StepDistribution::new(vec![(word("a"), 0.4), (word("A"), 0.1), (word("b"), 0.25), (word("B"), 0.25)]).unwrap();
        let k = harmonic_kernel(&first_passage_solve(&mu, 2).unwrap(), &mu).unwrap();
        let pi = k.stationary_law();
        let m1 = markov_flow_prediction(&k, 1);
        for x in crate::word::Letter::alphabet(2) {
            assert!((m1.mass(&ReducedWord::letter(x)) - pi[x.code()]).abs() < 1e-15);
        }
        for d in 1..=3 {
            let m = markov_flow_prediction(&k, d);
            assert!((m.total() - 1.0).abs() < 1e-12);
            assert!(m.shift_gap() < 1e-12);
        }
    }

    #[test]
    fn tv_examples() {
        let mk = |pairs: &[(&str, f64)]| {
            FlowMeasure::Tree(TreeFlowMeasure {
                rank: 2,
                depth: 1,
                masses: pairs.iter().map(|(w, p)| (word(w), *p)).collect(),
            })
        };
        let a = mk(&[("a", 0.5), ("b", 0.5)]);
        let b = mk(&[("a", 0.25), ("b", 0.25), ("A", 0.25), ("B", 0.25)]);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 0.5);
        assert_eq!(tv_distance(&a, &mk(&[("A", 1.0)])).unwrap(), 1.0);
        let c = FlowMeasure::Binned(BinnedMeasure::from_counts(Chart::default(), vec![1.0; 513]));
        assert_eq!(tv_distance(&a, &c), Err(Error::ChartMismatch));
    }

    #[test]
    fn chart_binning() {
        let c = Chart::default();
        assert_eq!(c.cells(), 512);
        let v = |x: f64, y: f64, a: f64| UnitTangent {
            point: HPoint::new_unchecked(x, y),
            angle: a,
        };
        assert_eq!(c.bin(&v(0.0, 10.0, 0.0)), c.overflow_index());
        assert_eq!(c.bin(&v(4.0, 1.0, 0.0)), c.overflow_index());
        assert_eq!(c.bin(&v(-3.0, 0.2000001, 0.0)), 0);
        assert_eq!(c.coords(c.bin(&v(3.0, 5.0, 6.2))), (7, 7, 7));
        for cell in 0..c.cells() {
            let (x, y, a) = c.coords(cell);
            assert_eq!(c.index(x, y, a), cell);
        }
    }

    #[test]
    fn g1_axis_occupies_the_imaginary_segment() {
        let g = example_group();
        let chart = Chart::default();
        let m = loxo_occupation_h2(&g, &word("a"), &chart, DEFAULT_DELTA).unwrap();
        assert!((m.length - 2.0 * 3f64.ln()).abs() < 1e-9);
        let b = binned(&m);
        assert!((b.total() - 1.0).abs() < 1e-12);
        // Upward along x = 0: a single direction, on the edge between sectors 1 and 2.
        let sectors: std::collections::BTreeSet<usize> = (0..chart.cells())
            .filter(|&c| b.masses[c] > 0.0)
            .map(|c| chart.coords(c).2)
            .collect();
        assert_eq!(sectors.len(), 1);
        assert!(sectors.is_subset(&[1, 2].into()));
        let xs: std::collections::BTreeSet<usize> = (0..chart.cells())
            .filter(|&c| b.masses[c] > 0.0)
            .map(|c| chart.coords(c).0)
            .collect();
        assert!(xs.is_subset(&[3, 4].into()));
        assert_eq!(b.overflow(), 0.0);
    }

    #[test]
    fn h2_occupation_depends_on_the_closed_curve_only() {
        let g = example_group();
        let chart = Chart::default();
        let w = word("abAAb");
        let m = loxo_occupation_h2(&g, &w, &chart, DEFAULT_DELTA).unwrap();
        let h = word("bA");
        let conj = loxo_occupation_h2(&g, &(&(&h * &w) * &h.inverse()), &chart, DEFAULT_DELTA).unwrap();
        let sq = loxo_occupation_h2(&g, &w.pow(2), &chart, DEFAULT_DELTA).unwrap();
        assert_eq!(m.measure, conj.measure);
        assert_eq!(m.measure, sq.measure);
    }

    #[test]
    fn ray_along_g1_matches_its_closed_geodesic() {
        let g = example_group();
        let chart = Chart::default();
        let xi = word("a").pow(80);
        let len = 50.0 * 2.0 * 3f64.ln();
        let ray = ray_oracle_h2(&g, HPoint::i(), &xi, len, &chart, DEFAULT_DELTA).unwrap();
        let lox = loxo_occupation_h2(&g, &word("a"), &chart, DEFAULT_DELTA).unwrap();
        let tv = tv_distance(&FlowMeasure::Binned(ray), &lox.measure).unwrap();
        assert!(tv < 0.01, "{tv}");
        assert!(ray_oracle_h2(&g, HPoint::i(), &word("ab"), 100.0, &chart, DEFAULT_DELTA).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let mu = StepDistribution::uniform_nearest_neighbor(2);
        let k = harmonic_kernel(&first_passage_solve(&mu, 2).unwrap(), &mu).unwrap();
        let pred = FlowMeasure::Tree(markov_flow_prediction(&k, 2));
        let family = tree_test_family(2, 2);
        let r = portmanteau_sandwich(std::slice::from_ref(&pred), std::slice::from_ref(&pred), &family, 0.0).unwrap();
        assert!(r.pass);
        // Depth-one cylinders are their own interior and neighbourhood.
        assert_eq!(r.worst_margin, 0.0);
        let mut bumped = markov_flow_prediction(&k, 2);
        *bumped.masses.get_mut(&word("ab")).unwrap() += 0.1;
        let total = bumped.total();
        bumped.masses.values_mut().for_each(|m| *m /= total);
        let r = portmanteau_sandwich(&[FlowMeasure::Tree(bumped)], &[pred], &family, 0.0).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn sandwich_on_tree_paths() {
        let mu = StepDistribution::uniform_nearest_neighbor(2);
        let n = 100_000;
        let mut loxo = Vec::new();
        let mut oracle = Vec::new();
        for i in 0..10 {
            let p = sample_path(&mu, n, 21, i);
            loxo.push(loxo_occupation_tree(&p.prefix(n), 2, 2).unwrap().measure);
            let q = sample_path(&mu, n, 21, 100 + i);
            let xi = TreeBoundaryPrefix::new(q.prefix_of_len(n, q.stable_prefix_len(3 * n / 4, n)));
            oracle.push(FlowMeasure::Tree(ray_oracle_tree(&xi, 2, 2).unwrap()));
        }
        let r = portmanteau_sandwich(&loxo, &oracle, &tree_test_family(2, 2), 3.0).unwrap();
        assert!(r.pass, "{:?}", r.checks.iter().find(|c| !c.pass));
    }

    #[test]
    fn chart_family_erosion_and_dilation() {
        let chart = Chart::default();
        let fam = chart_test_family(&chart, 1);
        // 3 axes × (slabs of width 1 and 3).
        assert_eq!(fam.len(), (8 + 6) * 2 + (8 + 8));
        for a in &fam {
            assert!(a.interior.iter().all(|c| a.cells.contains(c)));
            assert!(a.cells.iter().all(|c| a.neighborhood.contains(c)));
            assert!(!a.neighborhood.contains(&chart.overflow_index()));
        }
        let angle1 = fam.iter().find(|a| a.name == "angle[0..1]").unwrap();
        assert!(angle1.interior.is_empty());
        assert_eq!(angle1.neighborhood.len(), 3 * 64);
    }
}
