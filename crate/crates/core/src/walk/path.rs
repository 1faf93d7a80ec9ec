use std::collections::HashMap;

use rand::Rng;

use super::rng::{stream, Purpose};
use super::step::StepDistribution;
use crate::error::{Error, Result};
use crate::word::{Letter, ReducedWord};

/// Vertices of the Cayley tree visited by a path, stored as a trie of reduced
/// words so that each prefix product costs O(1) extra memory.
#[derive(Clone, Debug, Default)]
struct PrefixTrie {
    parent: Vec<u32>,
    letter: Vec<Letter>,
    depth: Vec<u32>,
    children: HashMap<(u32, Letter), u32>,
}

const ROOT: u32 = 0;

impl PrefixTrie {
    fn new() -> Self {
        PrefixTrie {
            parent: vec![ROOT],
            letter: vec![Letter::generator(0)],
            depth: vec![0],
            children: HashMap::new(),
        }
    }

    #[inline]
    fn step(&mut self, node: u32, x: Letter) -> u32 {
        let i = node as usize;
        if node != ROOT && self.letter[i] == x.inverse() {
            return self.parent[i];
        }
        let next = self.parent.len() as u32;
        *self.children.entry((node, x)).or_insert_with(|| {
            self.parent.push(node);
            self.letter.push(x);
            self.depth.push(self.depth[i] + 1);
            next
        })
    }

    fn word(&self, mut node: u32) -> ReducedWord {
        let mut letters = Vec::with_capacity(self.depth[node as usize] as usize);
        while node != ROOT {
            letters.push(self.letter[node as usize]);
            node = self.parent[node as usize];
        }
        letters.reverse();
        ReducedWord::from_reduced_unchecked(letters)
    }

    fn ancestor_at(&self, mut node: u32, depth: u32) -> u32 {
        while self.depth[node as usize] > depth {
            node = self.parent[node as usize];
        }
        node
    }

    fn lca_depth(&self, a: u32, b: u32) -> u32 {
        let d = self.depth[a as usize].min(self.depth[b as usize]);
        let (mut a, mut b) = (self.ancestor_at(a, d), self.ancestor_at(b, d));
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
        }
        self.depth[a as usize]
    }
}

/// A realized trajectory `ω_m = h_1 ⋯ h_m`, `0 ≤ m ≤ n`, reproducible from
/// `(μ, n, seed, path_index)`.
#[derive(Clone, Debug)]
pub struct SamplePath {
    seed: u64,
    path_index: u64,
    increments: Vec<u32>,
    nodes: Vec<u32>,
    trie: PrefixTrie,
}

impl SamplePath {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Atom index of `h_m`, `1 ≤ m ≤ n`.
    pub fn increment(&self, m: usize) -> usize {
        self.increments[m - 1] as usize
    }

    pub fn increments(&self) -> impl Iterator<Item = usize> + '_ {
        self.increments.iter().map(|&i| i as usize)
    }

    /// `ω_m` as a reduced word.
    pub fn prefix(&self, m: usize) -> ReducedWord {
        self.trie.word(self.nodes[m])
    }

    /// `|ω_m|`.
    pub fn prefix_len(&self, m: usize) -> usize {
        self.trie.depth[self.nodes[m] as usize] as usize
    }

    pub fn is_identity(&self, m: usize) -> bool {
        self.nodes[m] == ROOT
    }

    /// `|lcp(ω_m, ω_k)|`.
    pub fn common_prefix_len(&self, m: usize, k: usize) -> usize {
        self.trie.lca_depth(self.nodes[m], self.nodes[k]) as usize
    }

    /// Length of the longest prefix of `ω_end` shared by every `ω_m` with
    /// `start ≤ m ≤ end`.
    pub fn stable_prefix_len(&self, start: usize, end: usize) -> usize {
        let target = self.nodes[end];
        let t = &self.trie;
        // Ancestors of the target, by depth.
        let mut chain = vec![ROOT; t.depth[target as usize] as usize + 1];
        let mut v = target;
        loop {
            chain[t.depth[v as usize] as usize] = v;
            if v == ROOT {
                break;
            }
            v = t.parent[v as usize];
        }
        let on_chain = |v: u32| {
            let d = t.depth[v as usize] as usize;
            d < chain.len() && chain[d] == v
        };
        (start..=end)
            .map(|m| {
                let v = self.nodes[m];
                if on_chain(v) {
                    return t.depth[v as usize] as usize;
                }
                // Consecutive prefixes are close in the tree, so this walk
                // is short in practice.
                let mut u = v;
                while !on_chain(u) {
                    u = t.parent[u as usize];
                }
                t.depth[u as usize] as usize
            })
            .min()
            .unwrap_or(0)
    }

    /// The prefix of `ω_end` of the given length.
    pub fn prefix_of_len(&self, end: usize, len: usize) -> ReducedWord {
        self.trie.word(self.trie.ancestor_at(self.nodes[end], len as u32))
    }

    /// Re-multiplies `ω_{j−1} · h_j` at `count` random indices and compares
    /// with the stored `ω_j`.
    pub fn verify_prefixes(&self, mu: &StepDistribution, count: usize) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        let mut rng = stream(self.seed, Purpose::SpotCheck, self.path_index);
        for _ in 0..count {
            let j = rng.gen_range(1..=self.len());
            let expect = &self.prefix(j - 1) * mu.atom(self.increment(j));
            if expect != self.prefix(j) {
                return Err(Error::ValidationFailed {
                    cylinder: format!("prefix {j}"),
                    detail: format!("stored {} but ω_(j-1)·h_j = {}", self.prefix(j), expect),
                });
            }
        }
        Ok(())
    }
}

/// Draws `n` i.i.d. increments from `μ` on the stream `(seed, path_index)` and
/// multiplies them out.
pub fn sample_path(mu: &StepDistribution, n: usize, seed: u64, path_index: u64) -> SamplePath {
    sample_path_on(mu, n, seed, Purpose::Steps, path_index)
}

/// [`sample_path`] on the sub-stream of another purpose, for auxiliary
/// simulations that must not reuse the main paths.
pub fn sample_path_on(mu: &StepDistribution, n: usize, seed: u64, purpose: Purpose, path_index: u64) -> SamplePath {
    let mut rng = stream(seed, purpose, path_index);
    let mut trie = PrefixTrie::new();
    let mut increments = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n + 1);
    let mut node = ROOT;
    nodes.push(node);
    for _ in 0..n {
        let k = mu.sample_index(rng.gen::<f64>());
        increments.push(k as u32);
        for &x in mu.atom(k).letters() {
            node = trie.step(node, x);
        }
        nodes.push(node);
    }
    SamplePath {
        seed,
        path_index,
        increments,
        nodes,
        trie,
    }
}
