//! Sample paths, drift and entropy of random walks.
//!
//! Randomness comes from ChaCha8 seeded by `seed_from_u64`; trial t of a
//! Monte-Carlo run uses seed ⊕ t.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::measure::{convolve, ConvolveConfig, FiniteMeasure, KahanSum};
use crate::error::{Error, Result};
use crate::group::Word;
use crate::potentials::{spectrum, MetricPotential, StableConfig};
use crate::spectrum::{mean_distortion_avg, sublevel_classes, DistortionAverage};

fn sampler(mu: &FiniteMeasure) -> WeightedIndex<f64> {
    WeightedIndex::new(mu.atoms().iter().map(|a| a.1)).expect("positive weights")
}

fn endpoint(mu: &FiniteMeasure, dist: &WeightedIndex<f64>, n: usize, seed: u64) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Word::identity(mu.rank());
    for _ in 0..n {
        z = z.mul(&mu.atoms()[dist.sample(&mut rng)].0);
    }
    z
}

/// Atom indices of n i.i.d. increments of law μ.
pub fn sample_increments(mu: &FiniteMeasure, n: usize, seed: u64) -> Vec<usize> {
    let dist = sampler(mu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

/// Z_0 = o, Z_{k+1} = Z_k·X_{k+1} with X_k i.i.d. of law μ.
pub fn sample_walk(mu: &FiniteMeasure, n: usize, seed: u64) -> Vec<Word> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(Word::identity(mu.rank()));
    for (k, i) in sample_increments(mu, n, seed).into_iter().enumerate() {
        let z = out[k].mul(&mu.atoms()[i].0);
        out.push(z);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub trials: usize,
}

/// Mean of d(o,Z_n)/n over independent trials.
pub fn drift(mu: &FiniteMeasure, d: &dyn MetricPotential, n: usize, trials: usize, seed: u64) -> Result<DriftEstimate> {
    if trials == 0 {
        return Err(Error::Precondition("drift needs at least one trial".into()));
    }
    if n == 0 {
        return Ok(DriftEstimate { mean: 0.0, stderr: 0.0, n, trials });
    }
    if let Some(max) = d.max_eval_len() {
        if n * mu.max_len() > max {
            return Err(Error::OutOfRange(format!("{} steps may leave the range of {}", n, d.name())));
        }
    }
    let dist = sampler(mu);
    let xs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| Ok(d.eval(&endpoint(mu, &dist, n, seed ^ t))?.mid() / n as f64))
        .collect::<Result<_>>()?;
    let mut s = KahanSum::default();
    xs.iter().for_each(|x| s.add(*x));
    let mean = s.value() / trials as f64;
    let mut v = KahanSum::default();
    xs.iter().for_each(|x| v.add((x - mean) * (x - mean)));
    let var = if trials > 1 { v.value() / (trials - 1) as f64 } else { 0.0 };
    Ok(DriftEstimate { mean, stderr: (var / trials as f64).sqrt(), n, trials })
}

/// Distribution of |Z_k| for a radial measure, k = 0..=kmax.
fn level_laws(rank: usize, profile: &[(usize, f64)], kmax: usize) -> Vec<Vec<f64>> {
    let l = profile.iter().map(|x| x.0).max().unwrap_or(0);
    let n_max = kmax * l;
    let tr = super::green::level_transitions(rank, profile, n_max);
    let mut cur = vec![0.0; n_max + 1];
    cur[0] = 1.0;
    let mut out = vec![cur.clone()];
    for _ in 0..kmax {
        let mut next = vec![0.0; n_max + 1];
        for (n, row) in tr.iter().enumerate() {
            if cur[n] != 0.0 {
                for &(t, p) in row {
                    next[t] += cur[n] * p;
                }
            }
        }
        out.push(next.clone());
        cur = next;
    }
    out
}

/// H(μ^{*k})/k for k = 1..=kmax, each an upper bound for the asymptotic
/// entropy. Radial measures have radial powers, uniform on each sphere, so
/// their entropies come from the law of |Z_k|.
pub fn entropy_upper(mu: &FiniteMeasure, kmax: usize, cfg: &ConvolveConfig) -> Result<Vec<f64>> {
    if let Some(profile) = mu.radial_profile() {
        let q = (2 * mu.rank() - 1) as f64;
        let ln_sphere = |n: usize| if n == 0 { 0.0 } else { (2.0 * mu.rank() as f64).ln() + (n - 1) as f64 * q.ln() };
        return Ok(level_laws(mu.rank(), &profile, kmax)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, law)| {
                let mut h = KahanSum::default();
                for (n, &p) in law.iter().enumerate() {
                    if p > 0.0 {
                        h.add(p * (ln_sphere(n) - p.ln()));
                    }
                }
                h.value() / k as f64
            })
            .collect());
    }
    let mut out = Vec::with_capacity(kmax);
    let mut pow = mu.clone();
    for k in 1..=kmax {
        if k > 1 {
            pow = convolve(&pow, mu, cfg)?;
        }
        out.push(pow.entropy() / k as f64);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// τ(d/d_μ) over classes with ℓ_{d_μ} < T.
    pub tau: DistortionAverage,
}

/// h/ℓ as 1/τ(d/d_μ): the Green metric's length spectrum against d's,
/// averaged over classes with ℓ_{d_μ} < T.
pub fn entropy_over_drift(green: &dyn MetricPotential, d: &dyn MetricPotential, t: f64, cfg: &StableConfig) -> Result<RatioEstimate> {
    let sample = sublevel_classes(green, t, None, cfg)?;
    let dspec = spectrum(d, &sample.classes(), cfg)?;
    let tau = mean_distortion_avg(&dspec, &sample.psi, t)?;
    if tau.lower <= 0.0 {
        return Err(Error::Numerical(format!("τ bracket [{}, {}] reaches 0", tau.lower, tau.upper)));
    }
    Ok(RatioEstimate { value: 1.0 / tau.value, lower: 1.0 / tau.upper, upper: 1.0 / tau.lower, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::WordMetric;
    use crate::randwalk::{thickened_sphere, GreenConfig, GreenPotential};

    #[test]
    fn sample_paths() {
        let a = Word::parse(2, "a").unwrap();
        let w = sample_walk(&FiniteMeasure::dirac(a.clone()), 5, 7);
        assert_eq!(w.last().unwrap(), &a.pow(5));
        assert_eq!(sample_walk(&FiniteMeasure::simple(2), 0, 1), vec![Word::identity(2)]);
        assert_eq!(sample_walk(&FiniteMeasure::simple(2), 50, 3), sample_walk(&FiniteMeasure::simple(2), 50, 3));
    }

    #[test]
    fn increment_frequencies() {
        let mu = FiniteMeasure::simple(2);
        let mut counts = vec![0.0f64; 4];
        for i in sample_increments(&mu, 100_000, 11) {
            counts[i] += 1.0;
        }
        let w = sample_walk(&mu, 200, 11);
        for (k, i) in sample_increments(&mu, 200, 11).into_iter().enumerate() {
            assert_eq!(w[k].mul(&mu.atoms()[i].0), w[k + 1]);
        }
        let (n, p): (f64, f64) = (100_000.0, 0.25);
        let sigma = (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c - n * p).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn drift_examples() {
        let d = WordMetric::standard(2);
        let e = drift(&FiniteMeasure::simple(2), &d, 200, 400, 5).unwrap();
        assert!((e.mean - 0.5).abs() <= 3.0 * e.stderr, "{e:?}");
        let a = FiniteMeasure::dirac(Word::parse(2, "a").unwrap());
        assert_eq!(drift(&a, &d, 30, 3, 0).unwrap().mean, 1.0);
        assert_eq!(drift(&a, &d, 0, 3, 0).unwrap().mean, 0.0);
    }

    #[test]
    fn entropy_examples() {
        let cfg = ConvolveConfig::default();
        let mu = FiniteMeasure::simple(2);
        let h = entropy_upper(&mu, 6, &cfg).unwrap();
        assert!((h[0] - 4f64.ln()).abs() < 1e-14);
        assert!((h[1] - 1.75 * 2f64.ln()).abs() < 1e-14);
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        // The radial route against explicit convolution powers.
        let (_, nu) = thickened_sphere(&WordMetric::standard(2), 2.0, 1.5).unwrap();
        let radial = entropy_upper(&nu, 3, &cfg).unwrap();
        let mut pow = nu.clone();
        for (k, hk) in radial.iter().enumerate() {
            if k > 0 {
                pow = convolve(&pow, &nu, &cfg).unwrap();
            }
            assert!((pow.entropy() / (k + 1) as f64 - hk).abs() < 1e-12);
        }
    }

    #[test]
    fn srw_entropy_over_drift() {
        // Equality case: h = log 4 · ... with h/ℓ = log 3 for the simple walk.
        let g = GreenPotential::new(&FiniteMeasure::simple(2), &GreenConfig::default().with_radius(40)).unwrap();
        let r = entropy_over_drift(&g, &WordMetric::standard(2), 6.0, &StableConfig::default()).unwrap();
        let l3 = 3f64.ln();
        assert!((r.value - l3).abs() < 1e-4 && r.lower <= l3 + 1e-9 && l3 - 1e-9 <= r.upper, "{r:?}");
    }
}
