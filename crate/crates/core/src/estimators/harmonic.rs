use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::walk::rng::{stream, Purpose};
use crate::walk::{sample_path_on, StepDistribution};
use crate::word::{reduced_words, Letter, ReducedWord};

use super::laws::final_quarter_start;

/// Fixed-point iteration stops once the residual drops below this.
pub const FIRST_PASSAGE_TOL: f64 = 1e-14;
pub const FIRST_PASSAGE_MAX_ITER: usize = 1_000_000;
/// Largest stationarity residual accepted for an exact kernel.
pub const STATIONARITY_GATE: f64 = 1e-12;
/// Walks per harmonic Monte Carlo sample.
pub const DEFAULT_MC_STEPS: usize = 256;
/// Fraction of harmonic samples allowed to end without a settled prefix.
pub const FAILURE_BUDGET: f64 = 0.01;

/// `F(s)`: probability that the walk from the identity ever visits the
/// generator `s`, indexed by [`Letter::code`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstPassageVector {
    pub rank: usize,
    pub f: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl FirstPassageVector {
    pub fn get(&self, s: Letter) -> f64 {
        self.f[s.code()]
    }
}

fn first_passage_map(p: &[f64], f: &[f64]) -> Vec<f64> {
    // Σ_t p(t)F(t⁻¹), then drop the t = s term per coordinate.
    let total: f64 = (0..p.len()).map(|t| p[t] * f[t ^ 1]).sum();
    (0..p.len())
        .map(|s| p[s] + f[s] * (total - p[s] * f[s ^ 1]))
        .collect()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Minimal nonnegative solution of `F(s) = p(s) + F(s)·Σ_{t≠s} p(t)F(t⁻¹)`,
/// by iteration from zero.
pub fn first_passage_solve(mu: &StepDistribution, rank: usize) -> Result<FirstPassageVector> {
    let p = mu.letter_probabilities(rank)?;
    let mut f = vec![0.0; p.len()];
    for it in 1..=FIRST_PASSAGE_MAX_ITER {
        let next = first_passage_map(&p, &f);
        f = next;
        let residual = max_gap(&f, &first_passage_map(&p, &f));
        if residual <= FIRST_PASSAGE_TOL {
            return Ok(FirstPassageVector {
                rank,
                f,
                iterations: it,
                residual,
            });
        }
    }
    let residual = max_gap(&f, &first_passage_map(&p, &f));
    Err(Error::NonConvergence {
        iterations: FIRST_PASSAGE_MAX_ITER,
        residual,
    })
}

/// Monte Carlo hit frequencies of the generators, with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstPassageEstimate {
    pub f: Vec<f64>,
    pub std_error: Vec<f64>,
    pub paths: usize,
    pub escape: usize,
}

/// Runs `paths` walks from the identity until they reach distance `escape`,
/// recording which generators each one visited.
pub fn first_passage_mc(
    mu: &StepDistribution,
    rank: usize,
    paths: usize,
    seed: u64,
    escape: usize,
) -> Result<FirstPassageEstimate> {
    let p = mu.letter_probabilities(rank)?;
    let letters: Vec<Letter> = (0..p.len()).map(Letter::from_code).collect();
    let atoms: Vec<Letter> = mu.atoms().iter().map(|(w, _)| w.first().expect("length one")).collect();
    // Rank one walks with no drift never escape; cap the work per path.
    let step_cap = 10_000 * escape.max(1);
    let hits: Vec<u32> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Purpose::FirstPassage, i);
            let mut stack: Vec<Letter> = Vec::with_capacity(escape + 1);
            let mut seen = 0u32;
            for _ in 0..step_cap {
                let x = atoms[mu.sample_index(rng.gen::<f64>())];
                if stack.last() == Some(&x.inverse()) {
                    stack.pop();
                } else {
                    stack.push(x);
                }
                if stack.len() == 1 {
                    seen |= 1 << stack[0].code();
                } else if stack.len() >= escape {
                    break;
                }
            }
            seen
        })
        .collect();
    let m = paths as f64;
    let f: Vec<f64> = letters
        .iter()
        .map(|s| hits.iter().filter(|&&h| h & (1 << s.code()) != 0).count() as f64 / m)
        .collect();
    let std_error = f.iter().map(|q| (q * (1.0 - q) / m).sqrt()).collect();
    Ok(FirstPassageEstimate {
        f,
        std_error,
        paths,
        escape,
    })
}

/// Empirical or exact masses of cylinders `[w]` for every reduced `w` with
/// `|w| ≤ depth`. Absent words have mass zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylinderMeasure {
    pub depth: usize,
    pub masses: BTreeMap<ReducedWord, f64>,
    /// Sample count for Monte Carlo measures.
    pub samples: Option<usize>,
}

impl CylinderMeasure {
    /// Builds all shallower masses from masses at `depth`.
    pub fn from_leaves(depth: usize, leaves: BTreeMap<ReducedWord, f64>, samples: Option<usize>) -> Self {
        let mut masses = BTreeMap::new();
        for (w, m) in &leaves {
            for k in 0..=depth.min(w.len()) {
                *masses.entry(w.prefix(k)).or_insert(0.0) += m;
            }
        }
        CylinderMeasure { depth, masses, samples }
    }

    pub fn mass(&self, w: &ReducedWord) -> f64 {
        self.masses.get(w).copied().unwrap_or(0.0)
    }

    pub fn level(&self, k: usize) -> impl Iterator<Item = (&ReducedWord, f64)> + '_ {
        self.masses.iter().filter(move |(w, _)| w.len() == k).map(|(w, &m)| (w, m))
    }

    pub fn total_mass(&self, k: usize) -> f64 {
        self.level(k).map(|(_, m)| m).sum()
    }

    /// Binomial standard error of `[w]`, for Monte Carlo measures.
    pub fn std_error(&self, w: &ReducedWord) -> Option<f64> {
        self.samples.map(|m| {
            let q = self.mass(w);
            (q * (1.0 - q) / m as f64).sqrt()
        })
    }

    /// `max_w |ν[w] − Σ_s ν[ws]|` over `|w| < depth`.
    pub fn consistency_gap(&self) -> f64 {
        let mut children: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        for (w, &m) in &self.masses {
            if !w.is_empty() {
                *children.entry(w.prefix(w.len() - 1)).or_insert(0.0) += m;
            }
        }
        self.masses
            .iter()
            .filter(|(w, _)| w.len() < self.depth)
            .map(|(w, &m)| (m - children.get(w).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// Total variation distance between the depth-`k` marginals.
    pub fn tv_at_depth(&self, other: &CylinderMeasure, k: usize) -> f64 {
        let mut words: Vec<&ReducedWord> = self.level(k).map(|(w, _)| w).collect();
        words.extend(other.level(k).map(|(w, _)| w));
        words.sort();
        words.dedup();
        0.5 * words.iter().map(|w| (self.mass(w) - other.mass(w)).abs()).sum::<f64>()
    }
}

/// Empirical law of the depth-`depth` prefix of the boundary point, over
/// `samples` independent paths of `steps` steps. A sample whose prefix has
/// not settled over the final quarter of its path is a failure.
pub fn harmonic_cylinder_mc(
    mu: &StepDistribution,
    depth: usize,
    samples: usize,
    steps: usize,
    seed: u64,
) -> Result<CylinderMeasure> {
    if depth == 0 {
        return Err(Error::DepthInsufficient { have: 0, need: 1 });
    }
    let prefixes: Vec<Option<ReducedWord>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path_on(mu, steps, seed, Purpose::Harmonic, i);
            let stable = path.stable_prefix_len(final_quarter_start(steps), steps);
            (stable >= depth).then(|| path.prefix_of_len(steps, depth))
        })
        .collect();
    let failures = prefixes.iter().filter(|p| p.is_none()).count();
    if failures as f64 > FAILURE_BUDGET * samples as f64 {
        return Err(Error::Unstable(format!(
            "{failures} of {samples} paths did not settle to depth {depth} in {steps} steps"
        )));
    }
    let kept = (samples - failures) as f64;
    let mut leaves = BTreeMap::new();
    for w in prefixes.into_iter().flatten() {
        *leaves.entry(w).or_insert(0.0) += 1.0;
    }
    for m in leaves.values_mut() {
        *m /= kept;
    }
    Ok(CylinderMeasure::from_leaves(depth, leaves, Some(kept as usize)))
}

/// The letter chain of the limit point under a nearest-neighbour walk.
/// `exit[x]` is the chance that a walk started at a vertex whose last letter
/// is `x` ends in the subtree below that vertex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicKernel {
    pub rank: usize,
    pub first_passage: FirstPassageVector,
    pub exit: Vec<f64>,
    /// `ν[s]`.
    pub entry: Vec<f64>,
    /// `transition[t][s] = q(t → s)`, zero for `s = t⁻¹`.
    pub transition: Vec<Vec<f64>>,
}

/// Builds the kernel by splitting at the last visit to each prefix vertex:
/// `ν[w₁⋯w_m] = F(w₁)⋯F(w_m)·E(w_m)` with
/// `E(x) = (1 − F(x⁻¹)) / (1 − F(x)F(x⁻¹))`.
pub fn harmonic_kernel(first_passage: &FirstPassageVector, mu: &StepDistribution) -> Result<HarmonicKernel> {
    let rank = first_passage.rank;
    let p = mu.letter_probabilities(rank)?;
    if p.iter().any(|&q| q <= 0.0) {
        return Err(Error::NotIrreducible);
    }
    let f = &first_passage.f;
    let n = f.len();
    let exit: Vec<f64> = (0..n).map(|x| (1.0 - f[x ^ 1]) / (1.0 - f[x] * f[x ^ 1])).collect();
    if exit.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Degenerate("walk is recurrent; no exit law".into()));
    }
    let entry: Vec<f64> = (0..n).map(|s| f[s] * exit[s]).collect();
    let transition = (0..n)
        .map(|t| {
            (0..n)
                .map(|s| if s == t ^ 1 { 0.0 } else { f[s] * exit[s] / exit[t] })
                .collect()
        })
        .collect();
    Ok(HarmonicKernel {
        rank,
        first_passage: first_passage.clone(),
        exit,
        entry,
        transition,
    })
}

impl HarmonicKernel {
    pub fn q(&self, from: Letter, to: Letter) -> f64 {
        self.transition[from.code()][to.code()]
    }

    /// `ν[w]` for nonempty `w`; 1 for the identity.
    pub fn cylinder(&self, w: &ReducedWord) -> f64 {
        let l = w.letters();
        match l.first() {
            None => 1.0,
            Some(x) => self.entry[x.code()] * l.windows(2).map(|p| self.q(p[0], p[1])).product::<f64>(),
        }
    }

    pub fn cylinder_measure(&self, depth: usize) -> CylinderMeasure {
        let masses = (0..=depth)
            .flat_map(|k| reduced_words(self.rank, k))
            .map(|w| {
                let m = self.cylinder(&w);
                (w, m)
            })
            .collect();
        CylinderMeasure {
            depth,
            masses,
            samples: None,
        }
    }

    /// Largest deviation of a row sum of `q` or of `Σ ν[s]` from one.
    pub fn normalization_gap(&self) -> f64 {
        let rows = self.transition.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs());
        let entry = (self.entry.iter().sum::<f64>() - 1.0).abs();
        rows.fold(entry, f64::max)
    }

    /// Stationary law `π` of the letter chain `q`, by power iteration.
    pub fn stationary_law(&self) -> Vec<f64> {
        let n = self.entry.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..100_000 {
            let mut next = vec![0.0; n];
            for (p, row) in pi.iter().zip(&self.transition) {
                for (x, q) in next.iter_mut().zip(row) {
                    *x += p * q;
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            let gap = max_gap(&pi, &next);
            pi = next;
            if gap < 1e-15 {
                break;
            }
        }
        pi
    }
}

/// `R_w = ν[w] − Σ_s p(s)·ν(s⁻¹[w])`, for any mass function `nu`. Linear in
/// `nu`, which is what makes per-sample standard errors possible.
fn residual_at(w: &ReducedWord, nu: &dyn Fn(&ReducedWord) -> f64, p: &[f64]) -> f64 {
    let l = w.letters();
    let pushed: f64 = (0..p.len())
        .filter(|&s| p[s] > 0.0)
        .map(|s| {
            let s = Letter::from_code(s);
            let mass = match l.first() {
                None => 1.0,
                // sξ ∈ [s] exactly when ξ does not start with s⁻¹.
                Some(&x) if x == s && l.len() == 1 => 1.0 - nu(&ReducedWord::letter(s.inverse())),
                Some(&x) if x == s => nu(&ReducedWord::from_letters(l[1..].iter().copied())),
                Some(_) => nu(&(&ReducedWord::letter(s.inverse()) * w)),
            };
            p[s.code()] * mass
        })
        .sum();
    nu(w) - pushed
}

fn residual_words(nu: &CylinderMeasure, mu: &StepDistribution, rank: usize) -> Result<(Vec<f64>, Vec<ReducedWord>)> {
    if nu.depth < 2 {
        return Err(Error::DepthInsufficient { have: nu.depth, need: 2 });
    }
    let p = mu.letter_probabilities(rank)?;
    let words = (0..nu.depth).flat_map(|k| reduced_words(rank, k)).collect();
    Ok((p, words))
}

/// `max_{|w| < D} |ν[w] − Σ_s μ(s)·ν(s⁻¹[w])|`.
pub fn stationarity_residual(nu: &CylinderMeasure, mu: &StepDistribution, rank: usize) -> Result<f64> {
    let (p, words) = residual_words(nu, mu, rank)?;
    let mass = |w: &ReducedWord| nu.mass(w);
    Ok(words.iter().map(|w| residual_at(w, &mass, &p).abs()).fold(0.0, f64::max))
}

/// Stationarity residual of a Monte Carlo measure with its standard error:
/// each `R_w` is a sample mean of a function of the depth-`D` prefix, and the
/// reported error is the largest of their standard errors.
pub fn stationarity_residual_with_se(nu: &CylinderMeasure, mu: &StepDistribution, rank: usize) -> Result<(f64, f64)> {
    let m = nu
        .samples
        .ok_or_else(|| Error::Unsupported("standard error of an exact measure".into()))? as f64;
    let (p, words) = residual_words(nu, mu, rank)?;
    let leaves: Vec<(&ReducedWord, f64)> = nu.level(nu.depth).collect();
    let mut residual: f64 = 0.0;
    let mut se: f64 = 0.0;
    for w in &words {
        let r = residual_at(w, &|u: &ReducedWord| nu.mass(u), &p);
        let second: f64 = leaves
            .iter()
            .map(|(v, q)| {
                let point = |u: &ReducedWord| if v.letters().starts_with(u.letters()) { 1.0 } else { 0.0 };
                let x = residual_at(w, &point, &p);
                q * x * x
            })
            .sum();
        let var = (second - r * r).max(0.0) * m / (m - 1.0).max(1.0);
        residual = residual.max(r.abs());
        se = se.max((var / m).sqrt());
    }
    Ok((residual, se))
}

/// Checks a kernel against Monte Carlo cylinder masses at depths up to
/// `max_depth`, each within `sigmas` binomial standard errors of the
/// prediction, and its own stationarity residual against
/// [`STATIONARITY_GATE`].
pub fn validate_kernel(
    kernel: &HarmonicKernel,
    mc: &CylinderMeasure,
    mu: &StepDistribution,
    max_depth: usize,
    sigmas: f64,
) -> Result<()> {
    let m = mc
        .samples
        .ok_or_else(|| Error::Unsupported("validation needs a Monte Carlo measure".into()))? as f64;
    let depth = max_depth.min(mc.depth);
    for k in 1..=depth {
        for w in reduced_words(kernel.rank, k) {
            let pred = kernel.cylinder(&w);
            let got = mc.mass(&w);
            let se = (pred * (1.0 - pred) / m).sqrt();
            if (got - pred).abs() > sigmas * se {
                return Err(Error::ValidationFailed {
                    cylinder: w.to_string(),
                    detail: format!("predicted {pred:.6}, sampled {got:.6}, s.e. {se:.2e}"),
                });
            }
        }
    }
    let exact = kernel.cylinder_measure(depth.max(2));
    let r = stationarity_residual(&exact, mu, kernel.rank)?;
    if r > STATIONARITY_GATE {
        return Err(Error::ValidationFailed {
            cylinder: "stationarity".into(),
            detail: format!("residual {r:e}"),
        });
    }
    Ok(())
}
