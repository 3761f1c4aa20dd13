//! Gromov products, hyperbolicity scans and Busemann partial sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{eval_pair, MetricPotential};
use crate::error::{Error, Result};
use crate::group::{enumerate_ball, Indexer, Word, DEFAULT_CAP};
use crate::value::Value;

/// ⟨x|y⟩_w = ½(ψ(x,w) + ψ(w,y) − ψ(x,y)).
pub fn gromov_product(p: &dyn MetricPotential, x: &Word, y: &Word, w: &Word) -> Result<Value> {
    Ok((eval_pair(p, x, w)? + eval_pair(p, w, y)? - eval_pair(p, x, y)?).half())
}

/// ⟨a,a′|b,b′⟩ = ½(ψ(a,b) − ψ(a′,b) − ψ(a,b′) + ψ(a′,b′)).
pub fn double_difference(p: &dyn MetricPotential, a: &Word, a2: &Word, b: &Word, b2: &Word) -> Result<Value> {
    let v = eval_pair(p, a, b)? - eval_pair(p, a2, b)? - eval_pair(p, a, b2)? + eval_pair(p, a2, b2)?;
    Ok(v.half())
}

#[derive(Clone, Copy, Debug)]
pub struct ScanConfig {
    /// Exhaustive scan when the quadruple count is at most this.
    pub budget: u64,
    /// Number of sampled quadruples above the budget.
    pub samples: u64,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { budget: 2_000_000_000, samples: 20_000_000, seed: 0 }
    }
}

/// Result of a scan: `value` is computed on interval midpoints and `slack`
/// bounds how far the exact value can be from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub value: f64,
    pub slack: f64,
    pub exhaustive: bool,
    pub quadruples: u64,
}

/// Pair matrix ψ(x_i, x_j) on the standard ball of radius n.
struct PairTable {
    n: usize,
    d: Vec<f64>,
    half_width: f64,
}

impl PairTable {
    fn new(p: &dyn MetricPotential, radius: usize) -> Result<Self> {
        let ball = enumerate_ball(p.rank(), radius, DEFAULT_CAP)?;
        let ix = Indexer::new(p.rank(), 2 * radius)?;
        let table = p.ball_table(2 * radius)?;
        let half_width = table.iter().map(|v| 0.5 * v.width()).fold(0.0, f64::max);
        let n = ball.len();
        let inv: Vec<Word> = ball.iter().map(Word::invert).collect();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = table[ix.index_of(inv[i].mul(&ball[j]).letters()) as usize].mid();
            }
        }
        Ok(PairTable { n, d, half_width })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    #[inline]
    fn gromov(&self, x: usize, y: usize, w: usize) -> f64 {
        0.5 * (self.at(x, w) + self.at(w, y) - self.at(x, y))
    }

    fn gromov_matrix(&self, w: usize) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                g[x * n + y] = self.gromov(x, y, w);
            }
        }
        g
    }
}

fn scan<F, S>(t: &PairTable, cfg: &ScanConfig, per_w: F, sample: S) -> (f64, bool, u64)
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: Fn(usize, usize, usize, usize) -> f64 + Sync,
{
    let n = t.n as u64;
    let total = n.saturating_pow(4);
    if total <= cfg.budget {
        let best = (0..t.n)
            .into_par_iter()
            .map(|w| per_w(&t.gromov_matrix(w)))
            .reduce(|| f64::NEG_INFINITY, f64::max);
        return (best.max(0.0), true, total);
    }
    let chunks = 64u64;
    let per = cfg.samples.div_ceil(chunks);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ c);
            let mut best = f64::NEG_INFINITY;
            for _ in 0..per {
                let q: [usize; 4] = std::array::from_fn(|_| rng.gen_range(0..t.n));
                best = best.max(sample(q[0], q[1], q[2], q[3]));
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    (best.max(0.0), false, per * chunks)
}

/// max over quadruples in ball n of min(⟨x|y⟩_w, ⟨y|z⟩_w) − ⟨x|z⟩_w, clipped at 0.
pub fn delta_hyperbolicity(p: &dyn MetricPotential, n: usize, cfg: &ScanConfig) -> Result<Diagnostic> {
    let t = PairTable::new(p, n)?;
    let m = t.n;
    let per_w = |g: &[f64]| {
        let mut best = f64::NEG_INFINITY;
        for x in 0..m {
            for z in 0..m {
                let mut top = f64::NEG_INFINITY;
                for y in 0..m {
                    top = top.max(g[x * m + y].min(g[y * m + z]));
                }
                best = best.max(top - g[x * m + z]);
            }
        }
        best
    };
    let sample = |x, y, z, w| t.gromov(x, y, w).min(t.gromov(y, z, w)) - t.gromov(x, z, w);
    let (value, exhaustive, quadruples) = scan(&t, cfg, per_w, sample);
    Ok(Diagnostic { value, slack: 3.0 * t.half_width, exhaustive, quadruples })
}

/// max over quadruples in ball n of e^{−ε⟨x|z⟩_w} − e^{−ε⟨x|y⟩_w} − e^{−ε⟨y|z⟩_w}, clipped at 0.
pub fn strong_hyp_defect(p: &dyn MetricPotential, eps: f64, n: usize, cfg: &ScanConfig) -> Result<Diagnostic> {
    if eps.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let t = PairTable::new(p, n)?;
    let m = t.n;
    let per_w = |g: &[f64]| {
        let e: Vec<f64> = g.iter().map(|v| (-eps * v).exp()).collect();
        let mut best = f64::NEG_INFINITY;
        for x in 0..m {
            for z in 0..m {
                let mut low = f64::INFINITY;
                for y in 0..m {
                    low = low.min(e[x * m + y] + e[y * m + z]);
                }
                best = best.max(e[x * m + z] - low);
            }
        }
        best
    };
    let sample = |x, y, z, w| {
        let f = |a, b| (-eps * t.gromov(a, b, w)).exp();
        f(x, z) - f(x, y) - f(y, z)
    };
    let (value, exhaustive, quadruples) = scan(&t, cfg, per_w, sample);
    let slack = 3.0 * ((1.5 * eps * t.half_width).exp() - 1.0);
    Ok(Diagnostic { value, slack, exhaustive, quadruples })
}

/// max over g, h in ball n and w on the tree geodesic [g,h] of |⟨g|h⟩_w|.
///
/// By left invariance this equals the max over u = g⁻¹h in ball 2n and
/// splittings u = pq of ½|ψ(p) + ψ(q) − ψ(u)|.
pub fn hmp_gromov_bound(p: &dyn MetricPotential, n: usize) -> Result<Diagnostic> {
    let r = 2 * n;
    let ix = Indexer::new(p.rank(), r)?;
    let table = p.ball_table(r)?;
    let half_width = table.iter().map(|v| 0.5 * v.width()).fold(0.0, f64::max);
    let size = ix.ball_size(r);
    let value = (0..size)
        .into_par_iter()
        .map(|i| {
            let u = ix.word(i);
            let s = u.letters();
            let vu = table[i as usize].mid();
            (0..=s.len())
                .map(|k| {
                    let a = table[ix.index_of(&s[..k]) as usize].mid();
                    let b = table[ix.index_of(&s[k..]) as usize].mid();
                    (0.5 * (a + b - vu)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(Diagnostic { value, slack: 1.5 * half_width, exhaustive: true, quadruples: size })
}

#[derive(Clone, Debug)]
pub struct BusemannSeries {
    /// ψ(x,g^k) − ψ(o,g^k) for k = 1..=kmax.
    pub values: Vec<Value>,
    /// Common value of the last three terms, when they agree exactly.
    pub stabilized: Option<Value>,
}

pub fn busemann_partial(p: &dyn MetricPotential, x: &Word, g: &Word, kmax: usize) -> Result<BusemannSeries> {
    if g.is_identity() {
        return Err(Error::Identity);
    }
    let xi = x.invert();
    let values: Vec<Value> = (1..=kmax)
        .map(|k| {
            let gk = g.pow(k);
            Ok(p.eval(&xi.mul(&gk))? - p.eval(&gk)?)
        })
        .collect::<Result<_>>()?;
    let stabilized = (values.len() >= 3)
        .then(|| &values[values.len() - 3..])
        .filter(|t| t.iter().all(|v| v.is_exact() && *v == t[0]))
        .map(|t| t[0]);
    Ok(BusemannSeries { values, stabilized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{CombinationPotential, GenSet, Potential, WordMetric};
    use crate::value::Scalar;
    use std::sync::Arc;

    fn w(s: &str) -> Word {
        Word::parse(2, s).unwrap()
    }

    fn sprime() -> WordMetric {
        WordMetric::new(GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap())
    }

    #[test]
    fn gromov_examples() {
        let d = WordMetric::standard(2);
        let o = Word::identity(2);
        assert_eq!(gromov_product(&d, &w("a"), &w("a"), &o).unwrap(), Value::int(1));
        assert_eq!(gromov_product(&d, &w("a"), &w("b"), &o).unwrap(), Value::int(0));
        assert_eq!(gromov_product(&d, &w("ab"), &w("abb"), &o).unwrap(), Value::int(2));
    }

    #[test]
    fn double_difference_identities() {
        let d = WordMetric::standard(2);
        let s = sprime();
        let o = Word::identity(2);
        assert_eq!(double_difference(&d, &w("a"), &w("a"), &w("b"), &w("ab")).unwrap(), Value::zero());
        let direct = (Value::int(1) - Value::int(2) - Value::int(2) + Value::int(1)).half();
        assert_eq!(double_difference(&d, &o, &w("a"), &w("b"), &w("ab")).unwrap(), direct);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q: Vec<Word> = (0..4).map(|_| Word::random(2, rng.gen_range(0..6), &mut rng)).collect();
            let (a, b, x, y) = (&q[0], &q[1], &q[2], &q[3]);
            for p in [&d as &dyn MetricPotential, &s] {
                let lhs = double_difference(p, a, b, x, y).unwrap();
                let rhs = gromov_product(p, b, x, a).unwrap() - gromov_product(p, b, y, a).unwrap();
                assert_eq!(lhs, rhs);
                let c = x;
                assert_eq!(gromov_product(p, a, b, c).unwrap(), double_difference(p, a, c, c, b).unwrap());
            }
        }
    }

    /// Direct quadruple maximization without the per-w matrices.
    fn brute_delta(p: &dyn MetricPotential, n: usize) -> f64 {
        let ball = enumerate_ball(2, n, DEFAULT_CAP).unwrap();
        let gp = |x: &Word, y: &Word, z: &Word| gromov_product(p, x, y, z).unwrap().mid();
        let mut best: f64 = 0.0;
        for x in &ball {
            for y in &ball {
                for z in &ball {
                    for o in &ball {
                        best = best.max(gp(x, y, o).min(gp(y, z, o)) - gp(x, z, o));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn tree_is_zero_hyperbolic() {
        let d = WordMetric::standard(2);
        let cfg = ScanConfig::default();
        for n in 0..=3 {
            assert_eq!(delta_hyperbolicity(&d, n, &cfg).unwrap().value, 0.0);
            for eps in [0.5, 1.0, 2.0] {
                assert_eq!(strong_hyp_defect(&d, eps, n, &cfg).unwrap().value, 0.0);
            }
        }
    }

    #[test]
    fn sprime_delta_matches_brute_force() {
        let s = sprime();
        let got = delta_hyperbolicity(&s, 2, &ScanConfig::default()).unwrap();
        assert!(got.exhaustive);
        assert_eq!(got.value, brute_delta(&s, 2));
    }

    #[test]
    fn sampling_never_exceeds_exhaustive() {
        let s = sprime();
        let full = delta_hyperbolicity(&s, 2, &ScanConfig::default()).unwrap();
        let cfg = ScanConfig { budget: 10, samples: 20_000, seed: 3 };
        let part = delta_hyperbolicity(&s, 2, &cfg).unwrap();
        assert!(!part.exhaustive && part.value <= full.value);
    }

    #[test]
    fn hmp_bound_vanishes_on_scaled_tree() {
        let d: Potential = Arc::new(WordMetric::standard(2));
        assert_eq!(hmp_gromov_bound(d.as_ref(), 3).unwrap().value, 0.0);
        let c = CombinationPotential::scaled(Scalar::Real(2.5), d);
        assert!(hmp_gromov_bound(&c, 3).unwrap().value <= 1e-12);
        assert!(hmp_gromov_bound(&sprime(), 3).unwrap().value > 0.0);
    }

    #[test]
    fn busemann_examples() {
        let d = WordMetric::standard(2);
        let o = Word::identity(2);
        let b = busemann_partial(&d, &o, &w("a"), 5).unwrap();
        assert!(b.values.iter().all(|v| *v == Value::zero()));
        assert_eq!(busemann_partial(&d, &w("a"), &w("a"), 5).unwrap().stabilized, Some(Value::int(-1)));
        assert_eq!(busemann_partial(&d, &w("b"), &w("a"), 5).unwrap().stabilized, Some(Value::int(1)));
    }
}
