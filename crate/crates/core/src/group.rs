//! Exact word algebra on the free group F_r.
//!
//! Letters are stored as byte codes: generator `i` (1-based) has code
//! `2(i-1)` and its inverse has code `2(i-1)+1`, so inversion is `code ^ 1`
//! and the numeric order of codes is the fixed order a < A < b < B < ….

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{limit, Error, Result};

/// Largest supported rank (letters a..z).
pub const MAX_RANK: usize = 26;

/// Default cap on enumerated elements.
pub const DEFAULT_CAP: u64 = 50_000_000;

pub type Letters = SmallVec<[u8; 24]>;

#[inline]
pub fn inv_letter(c: u8) -> u8 {
    c ^ 1
}

/// A generator `a_index^sign`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub index: usize,
    pub sign: i8,
}

impl Generator {
    pub fn new(index: usize, sign: i8) -> Self {
        Generator { index, sign }
    }

    pub fn code(self) -> u8 {
        (2 * (self.index - 1) + usize::from(self.sign < 0)) as u8
    }

    pub fn from_code(c: u8) -> Self {
        Generator { index: (c / 2) as usize + 1, sign: if c & 1 == 0 { 1 } else { -1 } }
    }
}

fn check_rank(rank: usize) -> Result<()> {
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Precondition(format!("rank {rank} not in 1..={MAX_RANK}")));
    }
    Ok(())
}

/// A reduced word in F_r. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    rank: u8,
    letters: Letters,
}

impl Ord for Word {
    /// Length first, then lexicographic on letter codes.
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.as_slice().cmp(other.letters.as_slice()))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn push_reduced(out: &mut Letters, c: u8) {
    if out.last() == Some(&inv_letter(c)) {
        out.pop();
    } else {
        out.push(c);
    }
}

impl Word {
    pub fn identity(rank: usize) -> Self {
        Word { rank: rank as u8, letters: Letters::new() }
    }

    /// Generator `index` (1-based) as a word.
    pub fn generator(rank: usize, index: usize) -> Result<Self> {
        Self::from_generators(rank, &[Generator::new(index, 1)])
    }

    /// Reduce an arbitrary letter sequence.
    pub fn from_generators(rank: usize, gens: &[Generator]) -> Result<Self> {
        check_rank(rank)?;
        let mut out = Letters::new();
        for g in gens {
            if g.index == 0 || g.index > rank || (g.sign != 1 && g.sign != -1) {
                return Err(Error::IndexOutOfRank { index: g.index, rank });
            }
            push_reduced(&mut out, g.code());
        }
        Ok(Word { rank: rank as u8, letters: out })
    }

    /// Reduce a sequence of letter codes.
    pub fn from_codes(rank: usize, codes: &[u8]) -> Result<Self> {
        check_rank(rank)?;
        let mut out = Letters::new();
        for &c in codes {
            if (c as usize) >= 2 * rank {
                return Err(Error::IndexOutOfRank { index: c as usize / 2 + 1, rank });
            }
            push_reduced(&mut out, c);
        }
        Ok(Word { rank: rank as u8, letters: out })
    }

    /// Wrap codes already known to be reduced and within rank.
    pub(crate) fn from_reduced_unchecked(rank: usize, letters: Letters) -> Self {
        debug_assert!(letters.windows(2).all(|p| p[0] != inv_letter(p[1])));
        Word { rank: rank as u8, letters }
    }

    /// Parse the letter format: `a..z` generators, `A..Z` inverses, `e` identity.
    pub fn parse(rank: usize, s: &str) -> Result<Self> {
        check_rank(rank)?;
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Self::identity(rank));
        }
        let mut codes = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let g = match ch {
                'a'..='z' => Generator::new((ch as u8 - b'a') as usize + 1, 1),
                'A'..='Z' => Generator::new((ch as u8 - b'A') as usize + 1, -1),
                _ => return Err(Error::Parse(format!("bad letter {ch:?} in {s:?}"))),
            };
            if g.index > rank {
                return Err(Error::IndexOutOfRank { index: g.index, rank });
            }
            codes.push(g.code());
        }
        Self::from_codes(rank, &codes)
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn generators(&self) -> Vec<Generator> {
        self.letters.iter().map(|&c| Generator::from_code(c)).collect()
    }

    fn same_rank(&self, other: &Word) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch(self.rank(), other.rank()));
        }
        Ok(())
    }

    pub fn multiply(&self, other: &Word) -> Result<Word> {
        self.same_rank(other)?;
        Ok(self.mul(other))
    }

    /// Product without the rank check.
    pub fn mul(&self, other: &Word) -> Word {
        let a = &self.letters;
        let b = &other.letters;
        let mut k = 0;
        while k < a.len() && k < b.len() && a[a.len() - 1 - k] == inv_letter(b[k]) {
            k += 1;
        }
        let mut out = Letters::with_capacity(a.len() + b.len() - 2 * k);
        out.extend_from_slice(&a[..a.len() - k]);
        out.extend_from_slice(&b[k..]);
        Word { rank: self.rank, letters: out }
    }

    pub fn invert(&self) -> Word {
        Word { rank: self.rank, letters: self.letters.iter().rev().map(|&c| inv_letter(c)).collect() }
    }

    /// `self^k` for k ≥ 0.
    pub fn pow(&self, k: usize) -> Word {
        let (core, conj) = self.cyclic_reduce();
        let mut letters = Letters::with_capacity(2 * conj.len() + k * core.len());
        letters.extend_from_slice(&conj.letters);
        for _ in 0..k {
            letters.extend_from_slice(&core.letters);
        }
        letters.extend(conj.letters.iter().rev().map(|&c| inv_letter(c)));
        if k == 0 {
            return Word::identity(self.rank());
        }
        Word { rank: self.rank, letters }
    }

    /// Whether the word is cyclically reduced (the identity counts as such).
    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != inv_letter(l),
            _ => true,
        }
    }

    /// Returns `(core, conjugator)` with `self = conjugator · core · conjugator⁻¹`.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == inv_letter(self.letters[n - 1 - k]) {
            k += 1;
        }
        let core = Word { rank: self.rank, letters: Letters::from_slice(&self.letters[k..n - k]) };
        let conj = Word { rank: self.rank, letters: Letters::from_slice(&self.letters[..k]) };
        (core, conj)
    }

    /// Length of the cyclically reduced core.
    pub fn cyclic_len(&self) -> usize {
        self.cyclic_reduce().0.len()
    }

    pub fn canonical_class(&self) -> Result<ConjClassRep> {
        if self.is_identity() {
            return Err(Error::Identity);
        }
        let (core, _) = self.cyclic_reduce();
        let s = least_rotation(&core.letters);
        Ok(ConjClassRep { core: Word { rank: self.rank, letters: rotate(&core.letters, s) } })
    }

    /// Random reduced word of exactly `len` letters, uniform over the sphere.
    pub fn random<R: Rng + ?Sized>(rank: usize, len: usize, rng: &mut R) -> Word {
        let mut letters = Letters::with_capacity(len);
        let m = 2 * rank as u8;
        for i in 0..len {
            let c = if i == 0 {
                rng.gen_range(0..m)
            } else {
                let prev_inv = inv_letter(letters[i - 1]);
                let p = rng.gen_range(0..m - 1);
                if p >= prev_inv {
                    p + 1
                } else {
                    p
                }
            };
            letters.push(c);
        }
        Word { rank: rank as u8, letters }
    }
}

fn rotate(s: &[u8], k: usize) -> Letters {
    let mut out = Letters::with_capacity(s.len());
    out.extend_from_slice(&s[k..]);
    out.extend_from_slice(&s[..k]);
    out
}

/// Start of the lexicographically least rotation.
fn least_rotation(s: &[u8]) -> usize {
    let n = s.len();
    let mut best = 0;
    for cand in 1..n {
        for i in 0..n {
            let (x, y) = (s[(cand + i) % n], s[(best + i) % n]);
            if x != y {
                if x < y {
                    best = cand;
                }
                break;
            }
        }
    }
    best
}

fn is_least_rotation(s: &[u8]) -> bool {
    let n = s.len();
    (1..n).all(|cand| {
        for i in 0..n {
            let (x, y) = (s[(cand + i) % n], s[i]);
            if x != y {
                return x > y;
            }
        }
        true
    })
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for &c in &self.letters {
            let base = if c & 1 == 0 { b'a' } else { b'A' };
            write!(f, "{}", (base + c / 2) as char)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

pub fn reduce(letters: &[Generator], rank: usize) -> Result<Word> {
    Word::from_generators(rank, letters)
}

/// Canonical representative of a nontrivial conjugacy class.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjClassRep {
    core: Word,
}

impl ConjClassRep {
    pub fn core(&self) -> &Word {
        &self.core
    }

    pub fn rank(&self) -> usize {
        self.core.rank()
    }

    pub fn len(&self) -> usize {
        self.core.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parse(rank: usize, s: &str) -> Result<Self> {
        Word::parse(rank, s)?.canonical_class()
    }

    pub fn inverse(&self) -> ConjClassRep {
        self.core.invert().canonical_class().expect("nontrivial")
    }

    /// Class of `h` with `core = h^m` and `m` maximal.
    pub fn primitive_root(&self) -> (ConjClassRep, usize) {
        let s = self.core.letters();
        let n = s.len();
        for p in 1..=n {
            if n.is_multiple_of(p) && (p..n).all(|i| s[i] == s[i - p]) {
                let root = Word { rank: self.core.rank, letters: Letters::from_slice(&s[..p]) };
                // a rotation of a lex-least word's period is lex-least as well
                return (root.canonical_class().expect("nontrivial"), n / p);
            }
        }
        unreachable!()
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive_root().1 == 1
    }
}

impl fmt::Display for ConjClassRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.core.fmt(f)
    }
}

impl fmt::Debug for ConjClassRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.core)
    }
}

/// Number of reduced words of length exactly `n`.
pub fn sphere_size(rank: usize, n: usize) -> u128 {
    if n == 0 {
        1
    } else {
        let q = (2 * rank - 1) as u128;
        (2 * rank) as u128 * q.pow(n as u32 - 1)
    }
}

/// `sphere_size` as a float, finite far beyond the u128 range.
pub fn sphere_size_f64(rank: usize, n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        (2 * rank) as f64 * ((2 * rank - 1) as f64).powi(n as i32 - 1)
    }
}

pub fn ball_size(rank: usize, n: usize) -> u128 {
    (0..=n).map(|k| sphere_size(rank, k)).sum()
}

/// Dense length-lex indexing of reduced words up to a maximal length.
///
/// A word of length n ≥ 1 has index `offset(n) + c0·q^(n-1) + Σ pos_i q^(n-1-i)`
/// where `q = 2r-1` and `pos_i` is the rank of letter i among the letters
/// allowed after letter i-1. Index order equals length-lex order.
#[derive(Clone, Debug)]
pub struct Indexer {
    rank: usize,
    q: u64,
    offsets: Vec<u64>,
}

impl Indexer {
    pub fn new(rank: usize, max_len: usize) -> Result<Self> {
        check_rank(rank)?;
        let need = ball_size(rank, max_len);
        if need > u64::MAX as u128 / 2 {
            return Err(limit("index space", u64::MAX, u64::MAX / 2));
        }
        let mut offsets = Vec::with_capacity(max_len + 2);
        offsets.push(0u64);
        let mut acc = 0u64;
        for n in 0..=max_len {
            acc += sphere_size(rank, n) as u64;
            offsets.push(acc);
        }
        Ok(Indexer { rank, q: (2 * rank - 1) as u64, offsets })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn max_len(&self) -> usize {
        self.offsets.len() - 2
    }

    /// First index of length `n`.
    pub fn offset(&self, n: usize) -> u64 {
        self.offsets[n]
    }

    /// Number of words of length ≤ n.
    pub fn ball_size(&self, n: usize) -> u64 {
        self.offsets[n + 1]
    }

    pub fn len_of(&self, idx: u64) -> usize {
        self.offsets.partition_point(|&o| o <= idx) - 1
    }

    pub fn index(&self, w: &Word) -> Result<u64> {
        if w.len() > self.max_len() {
            return Err(Error::OutOfRange(format!("{w} longer than {}", self.max_len())));
        }
        Ok(self.index_of(w.letters()))
    }

    /// Index of a reduced letter sequence of length ≤ max_len.
    pub fn index_of(&self, s: &[u8]) -> u64 {
        if s.is_empty() {
            return 0;
        }
        let mut r = s[0] as u64;
        for i in 1..s.len() {
            r = r * self.q + pos_after(s[i - 1], s[i]) as u64;
        }
        self.offsets[s.len()] + r
    }

    pub fn word(&self, idx: u64) -> Word {
        let n = self.len_of(idx);
        let mut r = idx - self.offsets[n];
        let mut digits = [0u8; 64];
        for i in (1..n).rev() {
            digits[i] = (r % self.q) as u8;
            r /= self.q;
        }
        let mut letters = Letters::with_capacity(n);
        if n > 0 {
            letters.push(r as u8);
            for i in 1..n {
                letters.push(letter_at(letters[i - 1], digits[i]));
            }
        }
        Word::from_reduced_unchecked(self.rank, letters)
    }

    /// Index of `w·y` given that `w` (length `n`, last letter `last`) does not end in `y⁻¹`.
    #[inline]
    pub fn child(&self, idx: u64, n: usize, last: u8, y: u8) -> u64 {
        if n == 0 {
            return self.offsets[1] + y as u64;
        }
        let r = idx - self.offsets[n];
        self.offsets[n + 1] + r * self.q + pos_after(last, y) as u64
    }

    /// Index of `w` with its last letter removed.
    #[inline]
    pub fn parent(&self, idx: u64, n: usize) -> u64 {
        if n <= 1 {
            return 0;
        }
        self.offsets[n - 1] + (idx - self.offsets[n]) / self.q
    }
}

#[inline]
fn pos_after(prev: u8, c: u8) -> u8 {
    if c > inv_letter(prev) {
        c - 1
    } else {
        c
    }
}

#[inline]
fn letter_at(prev: u8, pos: u8) -> u8 {
    if pos >= inv_letter(prev) {
        pos + 1
    } else {
        pos
    }
}

/// The standard ball as a graph with precomputed last letters, supporting
/// right multiplication by index.
#[derive(Clone, Debug)]
pub struct BallGraph {
    ix: Indexer,
    radius: usize,
    last: Vec<u8>,
}

pub const NO_LETTER: u8 = u8::MAX;

impl BallGraph {
    pub fn new(rank: usize, radius: usize, cap: u64) -> Result<Self> {
        let ix = Indexer::new(rank, radius)?;
        let size = ix.ball_size(radius);
        if size > cap {
            return Err(limit("ball", size, cap));
        }
        let mut last = vec![NO_LETTER; size as usize];
        for n in 1..=radius {
            let off = ix.offset(n);
            for idx in off..ix.offset(n + 1) {
                let r = idx - off;
                last[idx as usize] = if n == 1 {
                    r as u8
                } else {
                    letter_at(last[ix.parent(idx, n) as usize], (r % ix.q) as u8)
                };
            }
        }
        Ok(BallGraph { ix, radius, last })
    }

    pub fn indexer(&self) -> &Indexer {
        &self.ix
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn size(&self) -> usize {
        self.last.len()
    }

    pub fn rank(&self) -> usize {
        self.ix.rank
    }

    #[inline]
    pub fn last_letter(&self, idx: u64) -> u8 {
        self.last[idx as usize]
    }

    #[inline]
    pub fn len_of(&self, idx: u64) -> usize {
        self.ix.len_of(idx)
    }

    /// Index of `w·y`, or `None` when it leaves the ball.
    #[inline]
    pub fn mul_letter(&self, idx: u64, n: usize, y: u8) -> Option<(u64, usize)> {
        let l = self.last[idx as usize];
        if n > 0 && l == inv_letter(y) {
            Some((self.ix.parent(idx, n), n - 1))
        } else if n < self.radius {
            Some((self.ix.child(idx, n, l, y), n + 1))
        } else {
            None
        }
    }

    /// Index of `w·s` for a reduced word `s`, or `None` when it leaves the ball.
    #[inline]
    pub fn mul_word(&self, idx: u64, n: usize, s: &[u8]) -> Option<(u64, usize)> {
        let (mut cur, mut len) = (idx, n);
        for &y in s {
            (cur, len) = self.mul_letter(cur, len, y)?;
        }
        Some((cur, len))
    }
}

/// All reduced words of length ≤ n, in length-lex order.
pub fn enumerate_ball(rank: usize, n: usize, cap: u64) -> Result<Vec<Word>> {
    check_rank(rank)?;
    let size = ball_size(rank, n);
    if size > cap as u128 {
        return Err(limit("ball", size.min(u64::MAX as u128) as u64, cap));
    }
    let mut out = Vec::with_capacity(size as usize);
    out.push(Word::identity(rank));
    let mut start = 0;
    for _ in 0..n {
        let end = out.len();
        for i in start..end {
            let prev = out[i].letters.last().copied();
            for c in 0..(2 * rank) as u8 {
                if prev.is_none_or(|p| c != inv_letter(p)) {
                    let mut letters = out[i].letters.clone();
                    letters.push(c);
                    out.push(Word { rank: rank as u8, letters });
                }
            }
        }
        start = end;
    }
    Ok(out)
}

/// Calls `f` on every reduced word of length exactly `n`, in lex order.
fn for_each_reduced(rank: usize, n: usize, f: &mut dyn FnMut(&[u8])) {
    let m = (2 * rank) as u8;
    let mut buf = vec![0u8; n];
    fn rec(buf: &mut [u8], i: usize, m: u8, f: &mut dyn FnMut(&[u8])) {
        if i == buf.len() {
            f(buf);
            return;
        }
        for c in 0..m {
            if i > 0 && c == inv_letter(buf[i - 1]) {
                continue;
            }
            buf[i] = c;
            rec(buf, i + 1, m, f);
        }
    }
    if n > 0 {
        rec(&mut buf, 0, m, f);
    }
}

/// Canonical classes of length exactly `n`, in lex order.
pub fn classes_of_length(rank: usize, n: usize) -> Vec<ConjClassRep> {
    let mut out = Vec::new();
    for_each_reduced(rank, n, &mut |s| {
        if (n == 1 || s[0] != inv_letter(s[n - 1])) && is_least_rotation(s) {
            out.push(ConjClassRep {
                core: Word { rank: rank as u8, letters: Letters::from_slice(s) },
            });
        }
    });
    out
}

/// All conjugacy classes whose cyclically reduced core has length ≤ n,
/// ordered by length then lex.
pub fn enumerate_classes(rank: usize, n: usize, cap: u64) -> Result<Vec<ConjClassRep>> {
    check_rank(rank)?;
    if n == 0 {
        return Err(Error::Precondition("class enumeration needs n ≥ 1".into()));
    }
    let scanned = sphere_size(rank, n);
    if scanned > cap as u128 {
        return Err(limit("class scan", scanned.min(u64::MAX as u128) as u64, cap));
    }
    let mut out = Vec::new();
    for k in 1..=n {
        out.extend(classes_of_length(rank, k));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn w(s: &str) -> Word {
        Word::parse(2, s).unwrap()
    }

    fn stack_reduce(codes: &[u8]) -> Vec<u8> {
        let mut st: Vec<u8> = Vec::new();
        for &c in codes {
            if let Some(&t) = st.last() {
                if t ^ 1 == c {
                    st.pop();
                    continue;
                }
            }
            st.push(c);
        }
        st
    }

    #[test]
    fn reduce_examples() {
        let g = |i, s| Generator::new(i, s);
        assert!(reduce(&[g(1, 1), g(1, -1)], 2).unwrap().is_identity());
        assert_eq!(reduce(&[g(1, 1), g(2, 1), g(2, -1), g(1, 1)], 2).unwrap(), w("aa"));
        assert!(matches!(reduce(&[g(3, 1)], 2), Err(Error::IndexOutOfRank { .. })));
    }

    #[test]
    fn reduce_matches_stack_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let codes: Vec<u8> = (0..20).map(|_| rng.gen_range(0..4)).collect();
            let red = Word::from_codes(2, &codes).unwrap();
            assert_eq!(red.letters(), stack_reduce(&codes).as_slice());
        }
    }

    #[test]
    fn multiply_invert_examples() {
        assert_eq!(w("ab").multiply(&w("Ba")).unwrap(), w("aa"));
        assert_eq!(w("ab").invert().to_string(), "BA");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = Word::random(2, rng.gen_range(0..12), &mut rng);
            assert!(x.invert().mul(&x).is_identity());
        }
        assert!(matches!(
            w("a").multiply(&Word::parse(3, "a").unwrap()),
            Err(Error::RankMismatch(2, 3))
        ));
    }

    #[test]
    fn cyclic_reduce_examples() {
        let (c, k) = w("baB").cyclic_reduce();
        assert_eq!((c, k), (w("a"), w("b")));
        let (c, k) = w("abAB").cyclic_reduce();
        assert_eq!((c, k), (w("abAB"), Word::identity(2)));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = Word::random(2, rng.gen_range(1..15), &mut rng);
            let (core, conj) = x.cyclic_reduce();
            assert!(core.is_cyclically_reduced());
            assert_eq!(conj.mul(&core).mul(&conj.invert()), x);
        }
    }

    #[test]
    fn canonical_class_examples() {
        assert_eq!(w("ba").canonical_class().unwrap().to_string(), "ab");
        assert_eq!(w("baB").canonical_class().unwrap().to_string(), "a");
        assert_eq!(Word::identity(2).canonical_class(), Err(Error::Identity));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = Word::random(2, rng.gen_range(1..10), &mut rng);
            let h = Word::random(2, rng.gen_range(0..10), &mut rng);
            let c = h.mul(&g).mul(&h.invert());
            assert_eq!(g.canonical_class(), c.canonical_class());
        }
    }

    /// Brute conjugacy test: cores are rotations of one another.
    fn brute_conjugate(x: &Word, y: &Word) -> bool {
        let (cx, _) = x.cyclic_reduce();
        let (cy, _) = y.cyclic_reduce();
        let n = cx.len();
        n == cy.len() && (0..n).any(|k| rotate(cx.letters(), k).as_slice() == cy.letters())
    }

    #[test]
    fn canonical_class_separates_short_words() {
        let ball: Vec<Word> = enumerate_ball(2, 4, DEFAULT_CAP).unwrap().into_iter().skip(1).collect();
        let classes: Vec<_> = ball.iter().map(|x| x.canonical_class().unwrap()).collect();
        for i in 0..ball.len() {
            for j in 0..ball.len() {
                assert_eq!(classes[i] == classes[j], brute_conjugate(&ball[i], &ball[j]));
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_ball(2, 1, DEFAULT_CAP).unwrap().len(), 5);
        assert_eq!(enumerate_ball(2, 2, DEFAULT_CAP).unwrap().len(), 17);
        assert_eq!(enumerate_ball(3, 2, DEFAULT_CAP).unwrap().len(), 37);
        assert_eq!(enumerate_classes(2, 1, DEFAULT_CAP).unwrap().len(), 4);
        assert_eq!(enumerate_classes(2, 2, DEFAULT_CAP).unwrap().len(), 12);
        assert!(matches!(enumerate_ball(2, 20, 1000), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn sphere_counts_by_enumeration() {
        for rank in 2..=3 {
            let ball = enumerate_ball(rank, 6, DEFAULT_CAP).unwrap();
            for n in 0..=6 {
                let c = ball.iter().filter(|x| x.len() == n).count() as u128;
                assert_eq!(c, sphere_size(rank, n));
            }
        }
    }

    #[test]
    fn classes_match_brute_dedup() {
        let ball = enumerate_ball(2, 6, DEFAULT_CAP).unwrap();
        let brute: BTreeSet<ConjClassRep> = ball
            .iter()
            .filter(|x| !x.is_identity() && x.is_cyclically_reduced())
            .map(|x| x.canonical_class().unwrap())
            .collect();
        let listed = enumerate_classes(2, 6, DEFAULT_CAP).unwrap();
        assert_eq!(listed.len(), brute.len());
        assert!(listed.windows(2).all(|p| p[0] < p[1]));
        for c in &listed {
            assert!(c.core().is_cyclically_reduced());
            assert_eq!(c.core().canonical_class().unwrap(), *c);
        }
    }

    #[test]
    fn primitive_roots() {
        let c = ConjClassRep::parse(2, "abab").unwrap();
        assert_eq!(c.primitive_root(), (ConjClassRep::parse(2, "ab").unwrap(), 2));
        let c = ConjClassRep::parse(2, "aa").unwrap();
        assert_eq!(c.primitive_root(), (ConjClassRep::parse(2, "a").unwrap(), 2));
        assert!(ConjClassRep::parse(2, "aab").unwrap().is_primitive());
    }

    #[test]
    fn indexer_round_trip_and_order() {
        let ix = Indexer::new(2, 6).unwrap();
        let ball = enumerate_ball(2, 6, DEFAULT_CAP).unwrap();
        for (i, x) in ball.iter().enumerate() {
            assert_eq!(ix.index(x).unwrap(), i as u64);
            assert_eq!(ix.word(i as u64), *x);
        }
        assert!(ball.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn ball_graph_multiplication() {
        let g = BallGraph::new(2, 5, DEFAULT_CAP).unwrap();
        let ix = g.indexer();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let x = Word::random(2, rng.gen_range(0..6), &mut rng);
            let s = Word::random(2, rng.gen_range(0..4), &mut rng);
            let prod = x.mul(&s);
            let got = g.mul_word(ix.index(&x).unwrap(), x.len(), s.letters());
            if prod.len() <= 5 && (0..=s.len()).all(|k| x.mul(&Word::from_codes(2, &s.letters()[..k]).unwrap()).len() <= 5) {
                assert_eq!(got, Some((ix.index(&prod).unwrap(), prod.len())));
            } else {
                assert_eq!(got, None);
            }
        }
    }

    #[test]
    fn text_format() {
        assert_eq!(w("e"), Word::identity(2));
        assert_eq!(Word::identity(2).to_string(), "e");
        assert!(Word::parse(2, "c").is_err());
        assert!(Word::parse(2, "a1").is_err());
        assert_eq!(w("aBa").to_string(), "aBa");
    }

    proptest! {
        #[test]
        fn reduce_idempotent(codes in proptest::collection::vec(0u8..6, 0..30)) {
            let x = Word::from_codes(3, &codes).unwrap();
            prop_assert_eq!(Word::from_codes(3, x.letters()).unwrap(), x);
        }

        #[test]
        fn product_length_subadditive(a in proptest::collection::vec(0u8..4, 0..15),
                                      b in proptest::collection::vec(0u8..4, 0..15)) {
            let x = Word::from_codes(2, &a).unwrap();
            let y = Word::from_codes(2, &b).unwrap();
            let p = x.mul(&y);
            prop_assert!(p.len() <= x.len() + y.len());
            let mut cat = a.clone();
            cat.extend_from_slice(&b);
            prop_assert_eq!(p, Word::from_codes(2, &cat).unwrap());
        }

        #[test]
        fn pow_matches_repeated_product(a in proptest::collection::vec(0u8..4, 1..8), k in 0usize..6) {
            let x = Word::from_codes(2, &a).unwrap();
            let mut acc = Word::identity(2);
            for _ in 0..k { acc = acc.mul(&x); }
            prop_assert_eq!(x.pow(k), acc);
        }

        #[test]
        fn class_conjugation_invariant(a in proptest::collection::vec(0u8..4, 1..10),
                                       h in proptest::collection::vec(0u8..4, 0..10)) {
            let g = Word::from_codes(2, &a).unwrap();
            let h = Word::from_codes(2, &h).unwrap();
            if !g.is_identity() {
                let c = h.mul(&g).mul(&h.invert());
                prop_assert_eq!(g.canonical_class().unwrap(), c.canonical_class().unwrap());
            }
        }
    }
}
