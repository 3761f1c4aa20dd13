use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::group::{inv_letter, sphere_size, Word};

/// A finite symmetric generating set of F_r.
#[derive(Clone, PartialEq, Eq)]
pub struct GenSet {
    rank: usize,
    words: Vec<Word>,
}

impl GenSet {
    /// Validates symmetry and generation; duplicates are removed.
    pub fn new(rank: usize, words: Vec<Word>) -> Result<Self> {
        let set: BTreeSet<Word> = words.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidGenSet("empty".into()));
        }
        for w in &set {
            if w.rank() != rank {
                return Err(Error::RankMismatch(w.rank(), rank));
            }
            if w.is_identity() {
                return Err(Error::InvalidGenSet("contains the identity".into()));
            }
            if !set.contains(&w.invert()) {
                return Err(Error::InvalidGenSet(format!("not symmetric: {} lacks its inverse", w)));
            }
        }
        let gs = GenSet { rank, words: set.into_iter().collect() };
        gs.check_generates()?;
        Ok(gs)
    }

    /// Adds inverses before validating.
    pub fn symmetrized(rank: usize, words: Vec<Word>) -> Result<Self> {
        let mut all = words.clone();
        all.extend(words.iter().map(Word::invert));
        Self::new(rank, all)
    }

    pub fn standard(rank: usize) -> Self {
        let words = (0..2 * rank as u8).map(|c| Word::from_codes(rank, &[c]).expect("rank")).collect();
        GenSet { rank, words }
    }

    /// Parses one word per line; `#` starts a comment.
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let mut words = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            for tok in line.split_whitespace() {
                words.push(Word::parse(rank, tok)?);
            }
        }
        Self::new(rank, words)
    }

    pub fn read(rank: usize, path: &Path) -> Result<Self> {
        Self::parse(rank, &std::fs::read_to_string(path)?)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.words.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn is_standard(&self) -> bool {
        self.words.len() == 2 * self.rank && self.words.iter().all(|w| w.len() == 1)
    }

    /// The lengths present when the set is a union of full standard spheres.
    pub fn radial_lengths(&self) -> Option<Vec<usize>> {
        let mut counts = std::collections::BTreeMap::new();
        for w in &self.words {
            *counts.entry(w.len()).or_insert(0u128) += 1;
        }
        counts
            .iter()
            .all(|(&n, &c)| c == sphere_size(self.rank, n))
            .then(|| counts.keys().copied().collect())
    }

    /// Exact test that the set generates F_r: fold the bouquet of loops
    /// spelled by the words and check that every standard generator is read as
    /// a loop at the base vertex.
    fn check_generates(&self) -> Result<()> {
        let mut f = Folder::default();
        f.vertex();
        for w in &self.words {
            let s = w.letters();
            let mut v = 0;
            for (i, &c) in s.iter().enumerate() {
                let next = if i + 1 == s.len() { 0 } else { f.vertex() };
                f.link(v, c, next);
                f.link(next, inv_letter(c), v);
                v = next;
            }
        }
        f.fold();
        let base = f.find(0);
        for c in (0..2 * self.rank as u8).step_by(2) {
            match f.adj[base].get(&c).copied() {
                Some(t) if f.find(t) == base => {}
                _ => return Err(Error::InvalidGenSet("does not generate".into())),
            }
        }
        Ok(())
    }
}

/// Stallings folding with union-find on vertices.
#[derive(Default)]
struct Folder {
    parent: Vec<usize>,
    adj: Vec<BTreeMap<u8, usize>>,
    pending: Vec<(usize, usize)>,
}

impl Folder {
    fn vertex(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.adj.push(BTreeMap::new());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn link(&mut self, v: usize, c: u8, w: usize) {
        let v = self.find(v);
        if let Some(&t) = self.adj[v].get(&c) {
            self.pending.push((t, w));
        } else {
            self.adj[v].insert(c, w);
        }
    }

    fn fold(&mut self) {
        while let Some((a, b)) = self.pending.pop() {
            let (a, b) = (self.find(a), self.find(b));
            if a == b {
                continue;
            }
            self.parent[b] = a;
            for (c, t) in std::mem::take(&mut self.adj[b]) {
                self.link(a, c, t);
            }
        }
    }
}

impl fmt::Debug for GenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ws: Vec<String> = self.words.iter().map(|w| w.to_string()).collect();
        write!(f, "GenSet{{{}}}", ws.join(","))
    }
}
