//! Rational currents as weighted class combinations, and Bowen averages.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::ConjClassRep;
use crate::potentials::{spectrum, LengthEntry, LengthSpectrum, MetricPotential, StableConfig};
use crate::spectrum::{mean_distortion_avg, sublevel_classes, ClassSample};
use crate::value::{big_to_f64, to_big};

#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Exact(BigRational),
    Float(f64),
}

impl Weight {
    pub fn to_f64(&self) -> f64 {
        match self {
            Weight::Exact(r) => big_to_f64(r),
            Weight::Float(x) => *x,
        }
    }

    fn add(&self, o: &Weight) -> Weight {
        match (self, o) {
            (Weight::Exact(a), Weight::Exact(b)) => Weight::Exact(a + b),
            _ => Weight::Float(self.to_f64() + o.to_f64()),
        }
    }

    fn scale(&self, c: &Weight) -> Weight {
        match (self, c) {
            (Weight::Exact(a), Weight::Exact(b)) => Weight::Exact(a * b),
            _ => Weight::Float(self.to_f64() * c.to_f64()),
        }
    }
}

impl std::fmt::Display for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weight::Exact(r) => write!(f, "{r}"),
            Weight::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Σ w·η_{[h]} over primitive classes h, with positive weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RationalCombo {
    terms: BTreeMap<ConjClassRep, Weight>,
}

impl RationalCombo {
    pub fn terms(&self) -> impl Iterator<Item = (&ConjClassRep, &Weight)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds w·η_{[g]}, rewriting a proper power h^m as m·η_{[h]}.
    pub fn add_class(&mut self, class: &ConjClassRep, w: Weight) -> Result<()> {
        if w.to_f64() <= 0.0 {
            return Err(Error::Precondition(format!("weight {w} on [{class}] is not positive")));
        }
        let (root, m) = class.primitive_root();
        let w = w.scale(&Weight::Exact(BigRational::from_integer(m.into())));
        let next = match self.terms.get(&root) {
            Some(old) => old.add(&w),
            None => w,
        };
        self.terms.insert(root, next);
        Ok(())
    }

    /// The sum of two combos.
    pub fn plus(&self, o: &RationalCombo) -> RationalCombo {
        let mut out = self.clone();
        for (c, w) in &o.terms {
            let next = match out.terms.get(c) {
                Some(old) => old.add(w),
                None => w.clone(),
            };
            out.terms.insert(c.clone(), next);
        }
        out
    }

    /// CSV with columns class, weight.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["class", "weight"])?;
        for (c, x) in &self.terms {
            wr.write_record([c.to_string(), x.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// η_{[g]}.
pub fn rational_current(class: &ConjClassRep) -> RationalCombo {
    let mut c = RationalCombo::default();
    c.add_class(class, Weight::Exact(BigRational::one())).expect("unit weight");
    c
}

/// Σ w·ℓ_φ[h]; exact when every weight and length is.
pub fn eval_length(phi: &LengthSpectrum, combo: &RationalCombo) -> Result<LengthEntry> {
    let mut exact = Some(BigRational::zero());
    let (mut v, mut lo, mut hi) = (0.0, 0.0, 0.0);
    for (c, w) in combo.terms() {
        let e = phi.get(c)?;
        if !e.certified {
            return Err(Error::Precondition(format!("ℓ[{c}] of {} is not certified", phi.potential)));
        }
        exact = match (exact, w, e.exact) {
            (Some(acc), Weight::Exact(a), Some(b)) => Some(acc + a * to_big(b)),
            _ => None,
        };
        let x = w.to_f64();
        v += x * e.value;
        lo += x * e.lower;
        hi += x * e.upper;
    }
    Ok(match exact {
        Some(e) => {
            let x = big_to_f64(&e);
            LengthEntry { value: x, lower: x, upper: x, certified: true, exact: None }
        }
        None => LengthEntry { value: v, lower: lo, upper: hi, certified: true, exact: None },
    })
}

/// Exact value of `eval_length` when available.
pub fn eval_length_exact(phi: &LengthSpectrum, combo: &RationalCombo) -> Result<Option<BigRational>> {
    let mut acc = BigRational::zero();
    for (c, w) in combo.terms() {
        match (w, phi.get(c)?.exact) {
            (Weight::Exact(a), Some(b)) => acc += a * to_big(b),
            _ => return Ok(None),
        }
    }
    Ok(Some(acc))
}

/// Λ_T from a class sample: weight 1/(N·ℓ_ψ[g]) on η_{[g]} for each class.
pub fn lambda_from_sample(psi: &LengthSpectrum, t: f64, primitive_only: bool) -> Result<(RationalCombo, usize)> {
    let chosen: Vec<(&ConjClassRep, &LengthEntry)> =
        psi.iter().filter(|(c, e)| e.value < t && (!primitive_only || c.is_primitive())).collect();
    let n = chosen.len();
    if n == 0 {
        return Err(Error::Precondition(format!("no classes with ℓ < {t}")));
    }
    let mut combo = RationalCombo::default();
    for (c, e) in chosen {
        let w = match e.exact {
            Some(l) if e.certified => Weight::Exact((to_big(l) * BigRational::from_integer(n.into())).recip()),
            _ => Weight::Float(1.0 / (n as f64 * e.value)),
        };
        combo.add_class(c, w)?;
    }
    Ok((combo, n))
}

/// Λ_T for ψ; insufficient `maxlen` is an error.
pub fn lambda_t(psi: &dyn MetricPotential, t: f64, maxlen: Option<usize>, cfg: &StableConfig) -> Result<RationalCombo> {
    let sample = sublevel_classes(psi, t, maxlen, cfg)?;
    Ok(lambda_from_sample(&sample.psi, t, false)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmsRow {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// ℓ_ψ(Λ_T), 1 by construction.
    pub psi_value: f64,
    /// The same average over primitive classes only.
    pub primitive_value: f64,
    /// Whether the spectrum-side average agrees (exactly, on rational data).
    pub agrees: bool,
    #[serde(skip)]
    pub exact: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmsTable {
    pub rows: Vec<BmsRow>,
    pub maxlen: usize,
}

impl BmsTable {
    /// CSV with columns T, N, value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["T", "N", "value"])?;
        for r in &self.rows {
            wr.write_record([r.t.to_string(), r.n.to_string(), r.value.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// ℓ_φ(Λ_T) along a grid of T.
pub fn bms_ratio_convergence(
    phi: &dyn MetricPotential,
    psi: &dyn MetricPotential,
    tgrid: &[f64],
    maxlen: Option<usize>,
    cfg: &StableConfig,
) -> Result<BmsTable> {
    let tmax = tgrid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !tmax.is_finite() {
        return Err(Error::Precondition("empty T grid".into()));
    }
    let sample: ClassSample = sublevel_classes(psi, tmax, maxlen, cfg)?;
    let phi_spec = spectrum(phi, &sample.classes(), cfg)?;
    let mut rows = Vec::with_capacity(tgrid.len());
    for &t in tgrid {
        let (combo, n) = lambda_from_sample(&sample.psi, t, false)?;
        let e = eval_length(&phi_spec, &combo)?;
        let exact = eval_length_exact(&phi_spec, &combo)?;
        let psi_value = eval_length(&sample.psi, &combo)?.value;
        let (prim, _) = lambda_from_sample(&sample.psi, t, true)?;
        let primitive_value = eval_length(&phi_spec, &prim)?.value;
        let avg = mean_distortion_avg(&phi_spec, &sample.psi, t)?;
        let agrees = match (&exact, &avg.exact) {
            (Some(a), Some(b)) => a == b,
            (None, None) => (avg.value - e.value).abs() <= 1e-12 * e.value.abs().max(1.0),
            _ => false,
        };
        rows.push(BmsRow {
            t,
            n,
            value: e.value,
            lower: e.lower,
            upper: e.upper,
            psi_value,
            primitive_value,
            agrees,
            exact,
        });
    }
    Ok(BmsTable { rows, maxlen: sample.maxlen })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_classes, DEFAULT_CAP};
    use crate::potentials::{CombinationPotential, GenSet, Potential, WordMetric};
    use crate::value::Scalar;
    use proptest::{prop_assert_eq, proptest};
    use std::sync::Arc;

    fn class(s: &str) -> ConjClassRep {
        ConjClassRep::parse(2, s).unwrap()
    }

    fn one_term(c: &RationalCombo) -> (ConjClassRep, BigRational) {
        assert_eq!(c.len(), 1);
        let (k, w) = c.terms().next().unwrap();
        match w {
            Weight::Exact(r) => (k.clone(), r.clone()),
            Weight::Float(_) => panic!("float weight"),
        }
    }

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn power_rule() {
        assert_eq!(one_term(&rational_current(&class("a"))), (class("a"), big(1, 1)));
        assert_eq!(one_term(&rational_current(&class("aa"))), (class("a"), big(2, 1)));
        assert_eq!(one_term(&rational_current(&class("abab"))), (class("ab"), big(2, 1)));
        // Oracle: the smallest period of the core.
        for c in enumerate_classes(2, 8, DEFAULT_CAP).unwrap() {
            let s = c.core().letters();
            let p = (1..=s.len()).find(|&p| s.len() % p == 0 && s.iter().zip(s.iter().cycle().skip(p)).all(|(x, y)| x == y)).unwrap();
            let (_, m) = one_term(&rational_current(&c));
            assert_eq!(m, big((s.len() / p) as i64, 1));
        }
    }

    #[test]
    fn standard_lambda_small() {
        let cfg = StableConfig::default();
        let d = WordMetric::standard(2);
        let l = lambda_t(&d, 1.5, None, &cfg).unwrap();
        assert_eq!(l.len(), 4);
        assert!(l.terms().all(|(_, w)| *w == Weight::Exact(big(1, 4))));
        assert!(lambda_t(&d, 6.0, Some(3), &cfg).is_err());
    }

    #[test]
    fn normalization_and_scaling() {
        let cfg = StableConfig::default();
        let d: Potential = Arc::new(WordMetric::standard(2));
        let two = CombinationPotential::scaled(Scalar::int(2), d.clone());
        for t in 2..=7 {
            let s = sublevel_classes(d.as_ref(), t as f64, None, &cfg).unwrap();
            let (l, _) = lambda_from_sample(&s.psi, t as f64, false).unwrap();
            assert_eq!(eval_length_exact(&s.psi, &l).unwrap(), Some(big(1, 1)));
            let s2 = spectrum(&two, &s.classes(), &cfg).unwrap();
            assert_eq!(eval_length_exact(&s2, &l).unwrap(), Some(big(2, 1)));
        }
    }

    #[test]
    fn bms_table_examples() {
        let cfg = StableConfig::default();
        let d: Potential = Arc::new(WordMetric::standard(2));
        let w = |s| crate::group::Word::parse(2, s).unwrap();
        let sp = WordMetric::new(GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap());
        let grid: Vec<f64> = (2..=7).map(f64::from).collect();
        let own = bms_ratio_convergence(d.as_ref(), d.as_ref(), &grid, None, &cfg).unwrap();
        assert!(own.rows.iter().all(|r| r.exact == Some(big(1, 1)) && r.agrees));
        let three = CombinationPotential::scaled(Scalar::int(3), d.clone());
        let t3 = bms_ratio_convergence(&three, d.as_ref(), &grid, None, &cfg).unwrap();
        assert!(t3.rows.iter().all(|r| r.exact == Some(big(3, 1))));
        let mixed = bms_ratio_convergence(&sp, d.as_ref(), &grid, None, &cfg).unwrap();
        for r in &mixed.rows {
            assert!(r.agrees && r.psi_value == 1.0 && r.exact.is_some());
            assert!(r.value <= 1.0 && r.value > 0.5);
        }
        let mut out = Vec::new();
        mixed.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("T,N,value\n2,4,1\n"));
    }

    #[test]
    fn inverse_pairing() {
        // Replacing every class by its inverse leaves ℓ_φ(Λ_T) unchanged.
        let cfg = StableConfig::default();
        let w = |s| crate::group::Word::parse(2, s).unwrap();
        let sp = WordMetric::new(GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap());
        let d = WordMetric::standard(2);
        let s = sublevel_classes(&d, 6.0, None, &cfg).unwrap();
        let phi = spectrum(&sp, &s.classes(), &cfg).unwrap();
        let (l, _) = lambda_from_sample(&s.psi, 6.0, false).unwrap();
        let mut inv = RationalCombo::default();
        for (c, x) in l.terms() {
            inv.add_class(&c.inverse(), x.clone()).unwrap();
        }
        assert_eq!(eval_length_exact(&phi, &l).unwrap(), eval_length_exact(&phi, &inv).unwrap());
    }

    proptest! {
        #[test]
        fn linearity(picks in proptest::collection::vec((0usize..60, 1i64..9), 1..6), c in 1i64..5) {
            let cfg = StableConfig::default();
            let classes = enumerate_classes(2, 4, DEFAULT_CAP).unwrap();
            let d: Potential = Arc::new(WordMetric::standard(2));
            let scaled = CombinationPotential::scaled(Scalar::int(c), d.clone());
            let s1 = spectrum(d.as_ref(), &classes, &cfg).unwrap();
            let sc = spectrum(&scaled, &classes, &cfg).unwrap();
            let mut combo = RationalCombo::default();
            let mut halves = (RationalCombo::default(), RationalCombo::default());
            for (i, (k, wt)) in picks.iter().enumerate() {
                let cl = &classes[k % classes.len()];
                combo.add_class(cl, Weight::Exact(big(*wt, 1))).unwrap();
                let h = if i % 2 == 0 { &mut halves.0 } else { &mut halves.1 };
                h.add_class(cl, Weight::Exact(big(*wt, 1))).unwrap();
            }
            let base = eval_length_exact(&s1, &combo).unwrap().unwrap();
            prop_assert_eq!(eval_length_exact(&sc, &combo).unwrap().unwrap(), base.clone() * big(c, 1));
            let split = eval_length_exact(&s1, &halves.0).unwrap().unwrap_or_default()
                + eval_length_exact(&s1, &halves.1).unwrap().unwrap_or_default();
            prop_assert_eq!(split, base.clone());
            prop_assert_eq!(eval_length_exact(&s1, &halves.0.plus(&halves.1)).unwrap().unwrap(), base);
        }
    }
}
