use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{limit, Error, Result};
use crate::group::{enumerate_ball, sphere_size, Word, DEFAULT_CAP};
use crate::potentials::{MetricPotential, Sublevel};
use crate::value::big_to_f64;

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A finitely supported probability measure, atoms sorted by word order.
/// Exact weights are kept alongside the floats while available.
#[derive(Clone, PartialEq)]
pub struct FiniteMeasure {
    rank: usize,
    atoms: Vec<(Word, f64)>,
    exact: Option<Vec<BigRational>>,
}

impl FiniteMeasure {
    /// Exact rational measure; weights must be positive with total mass 1.
    pub fn from_exact(rank: usize, atoms: Vec<(Word, BigRational)>) -> Result<Self> {
        let mut map: BTreeMap<Word, BigRational> = BTreeMap::new();
        for (w, p) in atoms {
            if w.rank() != rank {
                return Err(Error::RankMismatch(w.rank(), rank));
            }
            if p <= BigRational::zero() {
                return Err(Error::Precondition(format!("non-positive weight at {w}")));
            }
            *map.entry(w).or_insert_with(BigRational::zero) += p;
        }
        let total: BigRational = map.values().fold(BigRational::zero(), |a, b| a + b);
        if map.is_empty() || total != BigRational::one() {
            return Err(Error::Precondition(format!("total mass {total} is not 1")));
        }
        let atoms = map.iter().map(|(w, p)| (w.clone(), big_to_f64(p))).collect();
        Ok(FiniteMeasure { rank, atoms, exact: Some(map.into_values().collect()) })
    }

    /// Float measure; total mass must be within 1e-12 of 1.
    pub fn from_float(rank: usize, atoms: Vec<(Word, f64)>) -> Result<Self> {
        let mut map: BTreeMap<Word, KahanSum> = BTreeMap::new();
        for (w, p) in atoms {
            if w.rank() != rank {
                return Err(Error::RankMismatch(w.rank(), rank));
            }
            if p.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Precondition(format!("non-positive weight at {w}")));
            }
            map.entry(w).or_default().add(p);
        }
        let mut total = KahanSum::default();
        map.values().for_each(|p| total.add(p.value()));
        if map.is_empty() || (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("total mass {} is not 1", total.value())));
        }
        let atoms = map.into_iter().map(|(w, p)| (w, p.value())).collect();
        Ok(FiniteMeasure { rank, atoms, exact: None })
    }

    /// Uniform measure on a nonempty set (duplicates ignored).
    pub fn uniform(set: &[Word]) -> Result<Self> {
        let first = set.first().ok_or_else(|| Error::Precondition("empty support".into()))?;
        let distinct: std::collections::BTreeSet<&Word> = set.iter().collect();
        let p = BigRational::new(BigInt::one(), BigInt::from(distinct.len()));
        Self::from_exact(first.rank(), distinct.into_iter().map(|w| (w.clone(), p.clone())).collect())
    }

    /// Simple random walk on the standard generators.
    pub fn simple(rank: usize) -> Self {
        let gens: Vec<Word> = (0..2 * rank as u8).map(|c| Word::from_codes(rank, &[c]).expect("rank")).collect();
        Self::uniform(&gens).expect("nonempty")
    }

    pub fn dirac(w: Word) -> Self {
        Self::uniform(&[w]).expect("nonempty")
    }

    /// Lines `word weight` with weights `p/q` or decimals; `#` comments.
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let mut exact = Vec::new();
        let mut floats = Vec::new();
        let mut all_exact = true;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (w, p) = match (it.next(), it.next(), it.next()) {
                (Some(w), Some(p), None) => (Word::parse(rank, w)?, p),
                _ => return Err(Error::Parse(format!("expected `word weight`: {line:?}"))),
            };
            let f: f64 = if let Some((a, b)) = p.split_once('/') {
                let (a, b): (BigInt, BigInt) = (
                    a.parse().map_err(|_| Error::Parse(p.into()))?,
                    b.parse().map_err(|_| Error::Parse(p.into()))?,
                );
                if b.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {p}")));
                }
                let r = BigRational::new(a, b);
                let f = big_to_f64(&r);
                exact.push((w.clone(), r));
                f
            } else {
                all_exact = false;
                p.parse().map_err(|_| Error::Parse(format!("bad weight {p:?}")))?
            };
            floats.push((w, f));
        }
        if all_exact {
            Self::from_exact(rank, exact)
        } else {
            Self::from_float(rank, floats)
        }
    }

    pub fn read(rank: usize, path: &Path) -> Result<Self> {
        Self::parse(rank, &std::fs::read_to_string(path)?)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn atoms(&self) -> &[(Word, f64)] {
        &self.atoms
    }

    pub fn exact_weights(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn max_len(&self) -> usize {
        self.atoms.iter().map(|a| a.0.len()).max().unwrap_or(0)
    }

    pub fn mass(&self, w: &Word) -> f64 {
        self.atoms.binary_search_by(|a| a.0.cmp(w)).map(|i| self.atoms[i].1).unwrap_or(0.0)
    }

    pub fn exact_mass(&self, w: &Word) -> Option<BigRational> {
        let ex = self.exact.as_ref()?;
        Some(self.atoms.binary_search_by(|a| a.0.cmp(w)).map(|i| ex[i].clone()).unwrap_or_else(|_| BigRational::zero()))
    }

    /// μ(g) = μ(g⁻¹) for every atom (exactly, or within 1e-15 in float mode).
    pub fn is_symmetric(&self) -> bool {
        self.atoms.iter().enumerate().all(|(i, (w, p))| {
            let inv = w.invert();
            match (&self.exact, self.atoms.binary_search_by(|a| a.0.cmp(&inv))) {
                (Some(ex), Ok(j)) => ex[i] == ex[j],
                (None, Ok(j)) => (p - self.atoms[j].1).abs() <= 1e-15,
                (_, Err(_)) => false,
            }
        })
    }

    /// Sphere masses when μ is constant on each standard sphere it meets and
    /// charges every element of it.
    pub fn radial_profile(&self) -> Option<Vec<(usize, f64)>> {
        if self.rank < 2 {
            return None;
        }
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, (w, _)) in self.atoms.iter().enumerate() {
            by_len.entry(w.len()).or_default().push(i);
        }
        let mut out = Vec::new();
        for (n, idx) in by_len {
            if idx.len() as u128 != sphere_size(self.rank, n) {
                return None;
            }
            let same = match &self.exact {
                Some(ex) => idx.iter().all(|&i| ex[i] == ex[idx[0]]),
                None => idx.iter().all(|&i| self.atoms[i].1 == self.atoms[idx[0]].1),
            };
            if !same {
                return None;
            }
            let mut m = KahanSum::default();
            idx.iter().for_each(|&i| m.add(self.atoms[i].1));
            out.push((n, m.value()));
        }
        Some(out)
    }

    /// Shannon entropy −Σ p log p.
    pub fn entropy(&self) -> f64 {
        let mut h = KahanSum::default();
        for (_, p) in &self.atoms {
            h.add(-p * p.ln());
        }
        h.value()
    }
}

impl fmt::Debug for FiniteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteMeasure(rank {}, {} atoms)", self.rank, self.atoms.len())
    }
}

/// Configuration of convolution.
#[derive(Clone, Copy, Debug)]
pub struct ConvolveConfig {
    /// Largest support computed in exact rationals.
    pub exact_threshold: usize,
    /// Largest support allowed.
    pub cap: usize,
}

impl Default for ConvolveConfig {
    fn default() -> Self {
        ConvolveConfig { exact_threshold: 20_000, cap: 20_000_000 }
    }
}

/// (μ∗ν)(g) = Σ_h μ(h) ν(h⁻¹g).
///
/// Exact while both inputs are exact and the product support stays below the
/// threshold; otherwise floats summed with compensation in the fixed order of
/// the atoms of μ then ν.
pub fn convolve(mu: &FiniteMeasure, nu: &FiniteMeasure, cfg: &ConvolveConfig) -> Result<FiniteMeasure> {
    if mu.rank != nu.rank {
        return Err(Error::RankMismatch(mu.rank, nu.rank));
    }
    let bound = mu.atoms.len().saturating_mul(nu.atoms.len());
    if let (Some(a), Some(b)) = (&mu.exact, &nu.exact) {
        let mut map: BTreeMap<Word, BigRational> = BTreeMap::new();
        let mut ok = true;
        'outer: for (i, (x, _)) in mu.atoms.iter().enumerate() {
            for (j, (y, _)) in nu.atoms.iter().enumerate() {
                *map.entry(x.mul(y)).or_insert_with(BigRational::zero) += &a[i] * &b[j];
                if map.len() > cfg.exact_threshold {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            let atoms = map.iter().map(|(w, p)| (w.clone(), big_to_f64(p))).collect();
            return Ok(FiniteMeasure { rank: mu.rank, atoms, exact: Some(map.into_values().collect()) });
        }
    }
    let mut map: BTreeMap<Word, KahanSum> = BTreeMap::new();
    for (x, p) in &mu.atoms {
        for (y, q) in &nu.atoms {
            map.entry(x.mul(y)).or_default().add(p * q);
            if map.len() > cfg.cap {
                return Err(limit("convolution support", bound as u64, cfg.cap as u64));
            }
        }
    }
    let atoms = map.into_iter().map(|(w, s)| (w, s.value())).collect();
    Ok(FiniteMeasure { rank: mu.rank, atoms, exact: None })
}

/// S_l = {g : l − δ < d(o,g) ≤ l} and the uniform measure on it.
pub fn thickened_sphere(d: &dyn MetricPotential, l: f64, delta: f64) -> Result<(Vec<Word>, FiniteMeasure)> {
    if !(l > delta && delta > 0.0) {
        return Err(Error::Precondition(format!("need l > δ > 0, got l = {l}, δ = {delta}")));
    }
    if !d.flags().exact {
        return Err(Error::Precondition(format!("{} is not exact", d.name())));
    }
    let inside = |v: f64| l - delta < v && v <= l;
    let words: Vec<Word> = match d.sublevel(l + 0.5, DEFAULT_CAP)? {
        Sublevel::Radial(levels) => {
            let keep: Vec<usize> = levels.iter().filter(|x| inside(x.1.mid())).map(|x| x.0).collect();
            let maxn = keep.iter().copied().max().unwrap_or(0);
            enumerate_ball(d.rank(), maxn, DEFAULT_CAP)?.into_iter().filter(|w| keep.contains(&w.len())).collect()
        }
        Sublevel::Explicit(v) => {
            let mut w: Vec<Word> = v.into_iter().filter(|x| inside(x.1.mid())).map(|x| x.0).collect();
            w.sort();
            w
        }
    };
    if words.is_empty() {
        return Err(Error::Precondition(format!("S_l empty for l = {l}, δ = {delta}")));
    }
    let mu = FiniteMeasure::uniform(&words)?;
    Ok((words, mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::WordMetric;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn uniform_examples() {
        let mu = FiniteMeasure::simple(2);
        assert_eq!(mu.support_size(), 4);
        assert!(mu.exact_weights().unwrap().iter().all(|p| *p == r(1, 4)));
        let pt = FiniteMeasure::dirac(Word::parse(2, "a").unwrap());
        assert_eq!(pt.exact_weights().unwrap(), &[r(1, 1)]);
        assert!(FiniteMeasure::uniform(&[]).is_err());
    }

    #[test]
    fn convolution_examples() {
        let cfg = ConvolveConfig::default();
        let mu = FiniteMeasure::simple(2);
        let o = FiniteMeasure::dirac(Word::identity(2));
        assert_eq!(convolve(&o, &mu, &cfg).unwrap(), mu);
        let m2 = convolve(&mu, &mu, &cfg).unwrap();
        assert_eq!(m2.exact_mass(&Word::identity(2)).unwrap(), r(1, 4));
        let total = m2.exact_weights().unwrap().iter().fold(BigRational::zero(), |a, b| a + b);
        assert_eq!(total, BigRational::one());
        let left = convolve(&m2, &mu, &cfg).unwrap();
        let right = convolve(&mu, &m2, &cfg).unwrap();
        assert_eq!(left.exact_weights(), right.exact_weights());
        let float = convolve(&m2, &mu, &ConvolveConfig { exact_threshold: 1, cap: 1000 }).unwrap();
        assert!(float.exact_weights().is_none());
        for ((w1, p), (w2, q)) in float.atoms().iter().zip(left.atoms()) {
            assert_eq!(w1, w2);
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn thickened_sphere_examples() {
        let d = WordMetric::standard(2);
        let (s, mu) = thickened_sphere(&d, 3.0, 1.5).unwrap();
        assert_eq!(s.len(), 48);
        assert_eq!(mu.exact_mass(&s[0]).unwrap(), r(1, 48));
        assert_eq!(thickened_sphere(&d, 1.0, 0.5).unwrap().0.len(), 4);
        assert!(thickened_sphere(&d, 1.0, 1.0).is_err());
        assert_eq!(mu.radial_profile().unwrap(), vec![(2, 12.0 / 48.0), (3, 36.0 / 48.0)]);
    }

    #[test]
    fn file_format() {
        let m = FiniteMeasure::parse(2, "a 1/4\nA 1/4 # inverse\nb 1/4\nB 1/4\n").unwrap();
        assert_eq!(m, FiniteMeasure::simple(2));
        let f = FiniteMeasure::parse(2, "a 0.5\nA 0.5\n").unwrap();
        assert!(f.exact_weights().is_none() && f.is_symmetric());
        assert!(!FiniteMeasure::parse(2, "a 1/2\nb 1/2\n").unwrap().is_symmetric());
        assert!(FiniteMeasure::parse(2, "a 1/3\n").is_err());
    }
}
