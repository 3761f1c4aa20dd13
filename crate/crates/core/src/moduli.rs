//! Distances between metric structures: dilations, the symmetrized Thurston
//! metric Δ, the strong-length distance and comparability constants.
//!
//! Suprema over all classes are replaced by maxima over the enumerated ones,
//! so every quantity here is a lower bound carrying its witness.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{enumerate_classes, ConjClassRep, Indexer, Word, DEFAULT_CAP};
use crate::potentials::{spectrum, LengthEntry, LengthSpectrum, MetricPotential, StableConfig};
use crate::value::{big_to_f64, to_big, Interval};

pub(crate) fn ser_display<T: std::fmt::Display, S: Serializer>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DilEstimate {
    /// max ℓ_φ/ℓ_ψ over the enumerated classes.
    pub value: f64,
    /// Certified lower end of the same maximum.
    pub lower: f64,
    #[serde(serialize_with = "ser_display")]
    pub witness: ConjClassRep,
    pub maxlen: usize,
    #[serde(skip)]
    pub exact: Option<BigRational>,
}

fn big(e: &LengthEntry) -> Option<BigRational> {
    e.exact.filter(|_| e.certified).map(to_big)
}

fn ratio(a: &LengthEntry, b: &LengthEntry) -> (f64, Interval, Option<BigRational>) {
    let exact = match (big(a), big(b)) {
        (Some(x), Some(y)) => Some(x / y),
        _ => None,
    };
    let value = exact.as_ref().map(big_to_f64).unwrap_or(a.value / b.value);
    (value, a.interval().div_pos(&b.interval()), exact)
}

/// Largest ratio ℓ_φ/ℓ_ψ over the classes of ψ's spectrum; ties go to the
/// first class in canonical order.
pub fn dil_from_spectra(phi: &LengthSpectrum, psi: &LengthSpectrum) -> Result<DilEstimate> {
    let mut best: Option<DilEstimate> = None;
    let mut lower = f64::NEG_INFINITY;
    for (c, b) in psi.iter() {
        if b.lower <= 0.0 {
            return Err(Error::Precondition(format!("ℓ[{c}] of {} is not positive", psi.potential)));
        }
        let a = phi.get(c)?;
        let (value, iv, exact) = ratio(a, b);
        lower = lower.max(iv.lo);
        let better = match &best {
            None => true,
            Some(d) => match (&exact, &d.exact) {
                (Some(x), Some(y)) => x > y,
                _ => value > d.value,
            },
        };
        if better {
            best = Some(DilEstimate { value, lower: 0.0, witness: c.clone(), maxlen: 0, exact });
        }
    }
    let mut d = best.ok_or_else(|| Error::Precondition("empty spectrum".into()))?;
    d.lower = lower;
    d.maxlen = psi.iter().map(|(c, _)| c.len()).max().unwrap_or(0);
    Ok(d)
}

/// Spectra of two potentials on every class of length ≤ maxlen.
pub fn spectra_pair(
    phi: &dyn MetricPotential,
    psi: &dyn MetricPotential,
    maxlen: usize,
    cfg: &StableConfig,
) -> Result<(LengthSpectrum, LengthSpectrum)> {
    if phi.rank() != psi.rank() {
        return Err(Error::RankMismatch(phi.rank(), psi.rank()));
    }
    let classes = enumerate_classes(phi.rank(), maxlen, DEFAULT_CAP)?;
    Ok((spectrum(phi, &classes, cfg)?, spectrum(psi, &classes, cfg)?))
}

/// Dil(φ,ψ) lower bound from classes of length ≤ maxlen.
pub fn dil_lower(phi: &dyn MetricPotential, psi: &dyn MetricPotential, maxlen: usize, cfg: &StableConfig) -> Result<DilEstimate> {
    let (a, b) = spectra_pair(phi, psi, maxlen, cfg)?;
    dil_from_spectra(&a, &b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub dil_ab: DilEstimate,
    pub dil_ba: DilEstimate,
}

/// Δ = log(Dil(φ,ψ)·Dil(ψ,φ)) on the enumerated classes.
pub fn delta_from_spectra(phi: &LengthSpectrum, psi: &LengthSpectrum) -> Result<DeltaEstimate> {
    let dil_ab = dil_from_spectra(phi, psi)?;
    let dil_ba = dil_from_spectra(psi, phi)?;
    let delta = match (&dil_ab.exact, &dil_ba.exact) {
        (Some(x), Some(y)) => big_to_f64(&(x * y)).ln(),
        _ => (dil_ab.value * dil_ba.value).ln(),
    };
    Ok(DeltaEstimate { delta, dil_ab, dil_ba })
}

pub fn delta_dist(phi: &dyn MetricPotential, psi: &dyn MetricPotential, maxlen: usize, cfg: &StableConfig) -> Result<DeltaEstimate> {
    let (a, b) = spectra_pair(phi, psi, maxlen, cfg)?;
    delta_from_spectra(&a, &b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongDistance {
    pub value: f64,
    #[serde(serialize_with = "ser_display")]
    pub witness: ConjClassRep,
    pub dil_phi: f64,
    pub dil_psi: f64,
}

/// max |ℓ_φ/Dil(φ,ψ₀) − ℓ_ψ/Dil(ψ,ψ₀)| / ℓ_ψ₀ over the classes of ψ₀'s
/// spectrum, with the computed dilations as normalizers.
pub fn strong_length_from_spectra(phi: &LengthSpectrum, psi: &LengthSpectrum, psi0: &LengthSpectrum) -> Result<StrongDistance> {
    let a = dil_from_spectra(phi, psi0)?;
    let b = dil_from_spectra(psi, psi0)?;
    let mut best: Option<(f64, Option<BigRational>, ConjClassRep)> = None;
    for (c, e0) in psi0.iter() {
        let (x, y) = (phi.get(c)?, psi.get(c)?);
        let exact = match (big(x), big(y), big(e0), &a.exact, &b.exact) {
            (Some(x), Some(y), Some(z), Some(p), Some(q)) => Some(((x / p) - (y / q)).abs() / z),
            _ => None,
        };
        let v = exact.as_ref().map(big_to_f64).unwrap_or(((x.value / a.value) - (y.value / b.value)).abs() / e0.value);
        let better = match &best {
            None => true,
            Some((bv, bx, _)) => match (&exact, bx) {
                (Some(p), Some(q)) => p > q,
                _ => v > *bv,
            },
        };
        if better {
            best = Some((v, exact, c.clone()));
        }
    }
    let (value, _, witness) = best.ok_or_else(|| Error::Precondition("empty spectrum".into()))?;
    Ok(StrongDistance { value, witness, dil_phi: a.value, dil_psi: b.value })
}

pub fn strong_length_dist(
    phi: &dyn MetricPotential,
    psi: &dyn MetricPotential,
    psi0: &dyn MetricPotential,
    maxlen: usize,
    cfg: &StableConfig,
) -> Result<StrongDistance> {
    let classes = enumerate_classes(phi.rank(), maxlen, DEFAULT_CAP)?;
    strong_length_from_spectra(&spectrum(phi, &classes, cfg)?, &spectrum(psi, &classes, cfg)?, &spectrum(psi0, &classes, cfg)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparability {
    pub c: f64,
    #[serde(serialize_with = "ser_display")]
    pub witness: Word,
    pub radius: usize,
    pub dil_phi_psi: f64,
    pub dil_psi_phi: f64,
}

/// Smallest C with Dil(ψ,φ)⁻¹ψ(o,g) − C ≤ φ(o,g) ≤ Dil(φ,ψ)ψ(o,g) + C on the
/// standard ball, for the given dilation values. Exact when all inputs are.
pub fn comparability_c(
    phi: &dyn MetricPotential,
    psi: &dyn MetricPotential,
    radius: usize,
    dil_phi_psi: &DilEstimate,
    dil_psi_phi: &DilEstimate,
) -> Result<Comparability> {
    let ix = Indexer::new(phi.rank(), radius)?;
    let (a, b) = (phi.ball_table(radius)?, psi.ball_table(radius)?);
    let exact = match (&dil_phi_psi.exact, &dil_psi_phi.exact) {
        (Some(p), Some(q)) if a.iter().chain(&b).all(|v| v.is_exact()) => Some((p.clone(), q.clone())),
        _ => None,
    };
    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut best_exact: Option<BigRational> = None;
    for i in 0..a.len() {
        if let Some((p, q)) = &exact {
            let (x, y) = (to_big(a[i].exact().expect("exact")), to_big(b[i].exact().expect("exact")));
            let m = std::cmp::max(&y / q - &x, &x - p * &y).max(BigRational::zero());
            if best_exact.as_ref().is_none_or(|e| m > *e) {
                best = (big_to_f64(&m), i as u64);
                best_exact = Some(m);
            }
            continue;
        }
        let (x, y) = (a[i].interval(), b[i].interval());
        let v = (y.hi / dil_psi_phi.value - x.lo).max(x.hi - dil_phi_psi.value * y.lo).max(0.0);
        if v > best.0 {
            best = (v, i as u64);
        }
    }
    Ok(Comparability {
        c: best.0,
        witness: ix.word(best.1),
        radius,
        dil_phi_psi: dil_phi_psi.value,
        dil_psi_phi: dil_psi_phi.value,
    })
}

/// Exact rational as a string, for reports.
pub fn exact_string(x: &Option<BigRational>) -> Option<String> {
    x.as_ref().map(|r| {
        if r.denom() == &BigInt::from(1) {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{CombinationPotential, GenSet, Potential, WordMetric};
    use crate::value::Scalar;
    use std::sync::Arc;

    fn std2() -> Potential {
        Arc::new(WordMetric::standard(2))
    }

    fn sprime() -> Potential {
        let w = |s| Word::parse(2, s).unwrap();
        Arc::new(WordMetric::new(GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap()))
    }

    #[test]
    fn dilation_examples() {
        let cfg = StableConfig::default();
        let (s, sp) = (std2(), sprime());
        let d = dil_lower(s.as_ref(), s.as_ref(), 4, &cfg).unwrap();
        assert_eq!(d.value, 1.0);
        let two = CombinationPotential::scaled(Scalar::int(2), s.clone());
        assert_eq!(dil_lower(&two, s.as_ref(), 4, &cfg).unwrap().value, 2.0);
        let d = dil_lower(s.as_ref(), sp.as_ref(), 6, &cfg).unwrap();
        assert_eq!(d.value, 2.0);
        assert_eq!(d.witness, ConjClassRep::parse(2, "ab").unwrap());
        assert_eq!(dil_lower(sp.as_ref(), s.as_ref(), 6, &cfg).unwrap().value, 1.0);
        let delta = delta_dist(s.as_ref(), sp.as_ref(), 6, &cfg).unwrap();
        assert!((delta.delta - 2f64.ln()).abs() < 1e-15);
        assert_eq!(delta.delta, delta_dist(sp.as_ref(), s.as_ref(), 6, &cfg).unwrap().delta);
        assert_eq!(delta_dist(&two, s.as_ref(), 5, &cfg).unwrap().delta, 0.0);
    }

    #[test]
    fn dilations_grow_with_maxlen() {
        let cfg = StableConfig::default();
        let (s, sp) = (std2(), sprime());
        let mut prev = 0.0;
        for n in 1..6 {
            let d = dil_lower(sp.as_ref(), s.as_ref(), n, &cfg).unwrap().value * dil_lower(s.as_ref(), sp.as_ref(), n, &cfg).unwrap().value;
            assert!(d >= prev && d >= 1.0);
            prev = d;
        }
    }

    #[test]
    fn strong_length_examples() {
        let cfg = StableConfig::default();
        let (s, sp) = (std2(), sprime());
        let two = CombinationPotential::scaled(Scalar::int(2), s.clone());
        assert_eq!(strong_length_dist(s.as_ref(), s.as_ref(), s.as_ref(), 4, &cfg).unwrap().value, 0.0);
        assert_eq!(strong_length_dist(&two, s.as_ref(), sp.as_ref(), 4, &cfg).unwrap().value, 0.0);
        // Brute sweep with the dilations (1 for d_S, 2 for d_S') against d_S.
        let r = strong_length_dist(s.as_ref(), sp.as_ref(), s.as_ref(), 5, &cfg).unwrap();
        let classes = enumerate_classes(2, 5, DEFAULT_CAP).unwrap();
        let mut best: f64 = 0.0;
        for c in &classes {
            let n = c.len() as f64;
            let m = sp.eval_powers(c.core(), 12).unwrap()[12].mid() / 12.0;
            best = best.max((n - m).abs() / n);
        }
        assert_eq!((r.dil_phi, r.dil_psi), (1.0, 1.0));
        assert!((r.value - best).abs() < 1e-12, "{} vs {best}", r.value);
    }

    #[test]
    fn comparability_examples() {
        let cfg = StableConfig::default();
        let (s, sp) = (std2(), sprime());
        let one = dil_lower(s.as_ref(), s.as_ref(), 3, &cfg).unwrap();
        assert_eq!(comparability_c(s.as_ref(), s.as_ref(), 4, &one, &one).unwrap().c, 0.0);
        let two = CombinationPotential::scaled(Scalar::int(2), s.clone());
        let (a, b) = (dil_lower(&two, s.as_ref(), 3, &cfg).unwrap(), dil_lower(s.as_ref(), &two, 3, &cfg).unwrap());
        assert_eq!(comparability_c(&two, s.as_ref(), 4, &a, &b).unwrap().c, 0.0);
        let (a, b) = (dil_lower(s.as_ref(), sp.as_ref(), 6, &cfg).unwrap(), dil_lower(sp.as_ref(), s.as_ref(), 6, &cfg).unwrap());
        let c = comparability_c(s.as_ref(), sp.as_ref(), 8, &a, &b).unwrap();
        let mut brute: f64 = 0.0;
        for g in crate::group::enumerate_ball(2, 8, DEFAULT_CAP).unwrap() {
            let (x, y) = (g.len() as f64, sp.eval(&g).unwrap().mid());
            brute = brute.max(y / b.value - x).max(x - a.value * y);
        }
        assert_eq!(c.c, brute);
    }
}
