use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::word::{Letter, ReducedWord};

/// Probabilities must sum to one within this tolerance.
pub const MASS_TOL: f64 = 1e-12;

/// A finitely supported probability measure on the free group, given by its
/// atoms. Half-plane models interpret atoms as words in the Schottky
/// generators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDistribution {
    atoms: Vec<(ReducedWord, f64)>,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl StepDistribution {
    pub fn new(atoms: Vec<(ReducedWord, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut seen = BTreeSet::new();
        for (w, p) in &atoms {
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("atom {w} has mass {p}")));
            }
            if !seen.insert(w.clone()) {
                return Err(Error::InvalidDistribution(format!("atom {w} listed twice")));
            }
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = atoms
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().expect("nonempty") = 1.0;
        Ok(StepDistribution { atoms, cdf })
    }

    /// Equal mass on every generator and inverse of `F_rank`.
    pub fn uniform_nearest_neighbor(rank: usize) -> Self {
        let p = 1.0 / (2 * rank) as f64;
        let atoms = Letter::alphabet(rank).map(|x| (ReducedWord::letter(x), p)).collect();
        Self::new(atoms).expect("uniform measure is valid")
    }

    pub fn point_mass(w: ReducedWord) -> Self {
        Self::new(vec![(w, 1.0)]).expect("point mass is valid")
    }

    pub fn atoms(&self) -> &[(ReducedWord, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, i: usize) -> &ReducedWord {
        &self.atoms[i].0
    }

    /// Inverse-CDF lookup for `u ∈ [0, 1)`.
    #[inline]
    pub fn sample_index(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u).min(self.atoms.len() - 1)
    }

    /// Smallest rank whose alphabet covers every atom.
    pub fn min_rank(&self) -> usize {
        self.atoms.iter().map(|(w, _)| w.min_rank()).max().unwrap_or(0)
    }

    /// `μ̌(g) = μ(g⁻¹)`.
    pub fn reflected(&self) -> Self {
        let atoms = self.atoms.iter().map(|(w, p)| (w.inverse(), *p)).collect();
        Self::new(atoms).expect("reflection preserves validity")
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.atoms.iter().all(|(w, _)| w.len() == 1)
    }

    /// `p(x)` for each letter of `F_rank`, indexed by [`Letter::code`].
    pub fn letter_probabilities(&self, rank: usize) -> Result<Vec<f64>> {
        if !self.is_nearest_neighbor() {
            return Err(Error::NotNearestNeighbor);
        }
        let mut p = vec![0.0; 2 * rank];
        for (w, m) in &self.atoms {
            let x = w.first().expect("length one");
            if x.generator_index() >= rank {
                return Err(Error::RankExceeded {
                    index: x.generator_index(),
                    rank,
                });
            }
            p[x.code()] = *m;
        }
        Ok(p)
    }

    pub fn mean(&self, f: impl Fn(&ReducedWord) -> f64) -> f64 {
        self.atoms.iter().map(|(w, p)| p * f(w)).sum()
    }
}

impl fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.atoms.iter().map(|(w, p)| format!("{w}:{p}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Outcome of [`generation_check`]. Negative results are warnings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationDiagnostic {
    pub radius: usize,
    pub elements_seen: usize,
    /// Two loxodromic elements with different axes, if found.
    pub witness: Option<(ReducedWord, ReducedWord)>,
    /// Generators or inverses not reached as products of at most `radius`
    /// atoms.
    pub missing: Vec<Letter>,
}

impl GenerationDiagnostic {
    pub fn nonelementary(&self) -> bool {
        self.witness.is_some()
    }

    pub fn generates(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.nonelementary() {
            out.push(format!(
                "no pair of loxodromics with distinct axes among products of at most {} steps; support looks elementary",
                self.radius
            ));
        }
        if !self.generates() {
            let miss: String = self.missing.iter().map(|x| x.to_char()).collect();
            out.push(format!("letters {miss} not reached within {} steps", self.radius));
        }
        out
    }
}

/// Caps the breadth-first closure.
const MAX_CLOSURE: usize = 200_000;

/// Breadth-first closure of the support up to `radius`-fold products in the
/// free group of the given rank. In a free group two nontrivial elements have
/// the same axis exactly when they commute, which is what the witness search
/// tests.
pub fn generation_check(mu: &StepDistribution, rank: usize, radius: usize) -> GenerationDiagnostic {
    let mut seen: BTreeSet<ReducedWord> = BTreeSet::new();
    let mut frontier = vec![ReducedWord::identity()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for g in &frontier {
            for (h, _) in mu.atoms() {
                let gh = g * h;
                if seen.len() < MAX_CLOSURE && seen.insert(gh.clone()) {
                    next.push(gh);
                }
            }
        }
        frontier = next;
    }
    let lox: Vec<&ReducedWord> = seen.iter().filter(|g| !g.is_identity()).collect();
    let witness = lox.first().and_then(|&g| {
        lox.iter()
            .find(|&&h| g * h != h * g)
            .map(|&h| (g.clone(), h.clone()))
    });
    let missing = Letter::alphabet(rank)
        .filter(|&x| !seen.contains(&ReducedWord::letter(x)))
        .collect();
    GenerationDiagnostic {
        radius,
        elements_seen: seen.len(),
        witness,
        missing,
    }
}
