//! Stable translation lengths ℓ_ψ[g] = lim ψ(o,g^k)/k.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::MetricPotential;
use crate::error::{Error, Result};
use crate::group::{ConjClassRep, Word};
use crate::value::{Interval, Scalar, Value};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LengthEntry {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
    /// Exact value when certified on exact data.
    #[serde(skip)]
    pub exact: Option<Rational64>,
}

impl LengthEntry {
    pub fn exact(r: Rational64) -> Self {
        let f = r.to_f64().unwrap_or(f64::NAN);
        LengthEntry { value: f, lower: f, upper: f, certified: true, exact: Some(r) }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lower, self.upper)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StableConfig {
    /// Largest power evaluated.
    pub kmax: usize,
    /// Largest period searched for in the first differences.
    pub period_cap: usize,
}

impl Default for StableConfig {
    fn default() -> Self {
        StableConfig { kmax: 14, period_cap: 6 }
    }
}

/// Stable length of g from the powers of its cyclically reduced core.
///
/// `upper` is the Fekete bound min_k ψ(o,g^k)/k. On exact data, a period p
/// of the first differences repeated over two full windows certifies the
/// period mean. Otherwise the entry is uncertified: on exact data the value is
/// the Fekete bound and `lower` subtracts the slope oscillation; on interval
/// data the value is the mean slope over the last window and `lower` subtracts
/// the oscillation and the interval width.
pub fn stable_length(p: &dyn MetricPotential, g: &Word, cfg: &StableConfig) -> Result<LengthEntry> {
    if g.is_identity() {
        return Err(Error::Identity);
    }
    let (core, _) = g.cyclic_reduce();
    let mut kmax = cfg.kmax;
    if let Some(maxlen) = p.max_eval_len() {
        kmax = kmax.min(maxlen / core.len());
    }
    if kmax < 2 {
        return Err(Error::OutOfRange(format!("{}: powers of {core} exceed the evaluable range", p.name())));
    }
    let vals = p.eval_powers(&core, kmax)?;
    let diffs: Vec<Value> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let m = diffs.len();
    let window = cfg.period_cap.min(m);
    if vals.iter().all(Value::is_exact) {
        let ex: Vec<Rational64> = vals.iter().map(|v| v.exact().expect("exact")).collect();
        let upper = (1..=kmax).map(|k| ex[k] / Rational64::from_integer(k as i64)).min().expect("kmax ≥ 1");
        let d: Vec<Rational64> = diffs.iter().map(|v| v.exact().expect("exact")).collect();
        for per in 1..=cfg.period_cap {
            if 2 * per > m {
                break;
            }
            if d[m - 2 * per..m - per] == d[m - per..] {
                let mean = d[m - per..].iter().fold(Rational64::zero(), |a, b| a + b)
                    / Rational64::from_integer(per as i64);
                if mean <= upper {
                    return Ok(LengthEntry::exact(mean));
                }
            }
        }
        let last = &d[m - window..];
        let osc = (last.iter().max().expect("nonempty") - last.iter().min().expect("nonempty"))
            .to_f64()
            .unwrap_or(f64::NAN);
        let u = upper.to_f64().unwrap_or(f64::NAN);
        return Ok(LengthEntry { value: u, lower: u - osc, upper: u, certified: false, exact: None });
    }
    let upper = (1..=kmax).map(|k| vals[k].hi() / k as f64).fold(f64::INFINITY, f64::min);
    let last = &diffs[m - window..];
    let mids: Vec<f64> = last.iter().map(Value::mid).collect();
    let mean = mids.iter().sum::<f64>() / window as f64;
    let osc = mids.iter().copied().fold(f64::NEG_INFINITY, f64::max) - mids.iter().copied().fold(f64::INFINITY, f64::min);
    let wid = last.iter().map(Value::width).fold(0.0, f64::max);
    let value = mean.min(upper);
    Ok(LengthEntry { value, lower: value - osc - wid, upper, certified: false, exact: None })
}

/// Translation lengths of a potential on a list of classes.
#[derive(Clone, Debug, Default)]
pub struct LengthSpectrum {
    pub potential: String,
    pub entries: BTreeMap<ConjClassRep, LengthEntry>,
}

impl LengthSpectrum {
    pub fn get(&self, c: &ConjClassRep) -> Result<&LengthEntry> {
        self.entries.get(c).ok_or_else(|| Error::OutOfRange(format!("class {c} not in spectrum of {}", self.potential)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ConjClassRep, &LengthEntry)> {
        self.entries.iter()
    }

    pub fn all_certified(&self) -> bool {
        self.entries.values().all(|e| e.certified)
    }

    /// CSV with columns class, value, lower, upper, certified.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["class", "value", "lower", "upper", "certified"])?;
        for (c, e) in &self.entries {
            wr.write_record([
                c.to_string(),
                e.value.to_string(),
                e.lower.to_string(),
                e.upper.to_string(),
                e.certified.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Spectrum on the given classes; combinations are computed by linearity.
pub fn spectrum(p: &dyn MetricPotential, classes: &[ConjClassRep], cfg: &StableConfig) -> Result<LengthSpectrum> {
    if let Some(comb) = p.as_combination() {
        let base: Vec<(Scalar, LengthSpectrum)> = comb
            .terms()
            .iter()
            .map(|(c, q)| spectrum(q.as_ref(), classes, cfg).map(|s| (*c, s)))
            .collect::<Result<_>>()?;
        let mut entries = BTreeMap::new();
        for cl in classes {
            entries.insert(cl.clone(), combine_entries(base.iter().map(|(c, s)| (*c, s.entries[cl]))));
        }
        return Ok(LengthSpectrum { potential: p.name(), entries });
    }
    let vals: Vec<LengthEntry> =
        classes.par_iter().map(|c| stable_length(p, c.core(), cfg)).collect::<Result<_>>()?;
    Ok(LengthSpectrum { potential: p.name(), entries: classes.iter().cloned().zip(vals).collect() })
}

/// Σ cᵢ ℓᵢ with outward interval bounds.
pub fn combine_entries(terms: impl Iterator<Item = (Scalar, LengthEntry)>) -> LengthEntry {
    let mut value = 0.0;
    let mut iv = Interval::point(0.0);
    let mut certified = true;
    let mut exact = Some(Rational64::zero());
    for (c, e) in terms {
        value += c.to_f64() * e.value;
        iv = iv + e.interval() * c.as_interval();
        certified &= e.certified;
        exact = match (exact, c, e.exact) {
            (Some(acc), Scalar::Rational(q), Some(x)) => Some(acc + q * x),
            _ => None,
        };
    }
    if let (true, Some(x)) = (certified, exact) {
        return LengthEntry::exact(x);
    }
    LengthEntry { value: value.clamp(iv.lo, iv.hi), lower: iv.lo, upper: iv.hi, certified: false, exact: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_classes, DEFAULT_CAP};
    use crate::potentials::{CombinationPotential, Potential, WordMetric};
    use std::sync::Arc;

    fn std2() -> Potential {
        Arc::new(WordMetric::standard(2))
    }

    #[test]
    fn spec_examples() {
        let d = std2();
        let cfg = StableConfig::default();
        let e = stable_length(d.as_ref(), &Word::parse(2, "abAB").unwrap(), &cfg).unwrap();
        assert!(e.certified && e.value == 4.0);
        let e = stable_length(d.as_ref(), &Word::parse(2, "abA").unwrap(), &cfg).unwrap();
        assert!(e.certified && e.value == 1.0);
        let two = CombinationPotential::scaled(Scalar::int(2), d.clone());
        let e = stable_length(&two, &Word::parse(2, "ab").unwrap(), &cfg).unwrap();
        assert!(e.certified && e.value == 4.0);
        assert_eq!(stable_length(d.as_ref(), &Word::identity(2), &cfg), Err(Error::Identity));
    }

    #[test]
    fn standard_spectrum_is_core_length() {
        let classes = enumerate_classes(2, 3, DEFAULT_CAP).unwrap();
        let s = spectrum(std2().as_ref(), &classes, &StableConfig::default()).unwrap();
        for (c, e) in s.iter() {
            assert_eq!(e.exact, Some(Rational64::from_integer(c.len() as i64)));
            assert_eq!(e, s.get(&c.inverse()).unwrap());
        }
    }

    #[test]
    fn linearity_of_combinations() {
        let d = std2();
        let classes = enumerate_classes(2, 3, DEFAULT_CAP).unwrap();
        let c = CombinationPotential::new(vec![(Scalar::int(2), d.clone()), (Scalar::int(-1), d.clone())]).unwrap();
        let a = spectrum(&c, &classes, &StableConfig::default()).unwrap();
        let b = spectrum(d.as_ref(), &classes, &StableConfig::default()).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn csv_export() {
        let classes = enumerate_classes(2, 1, DEFAULT_CAP).unwrap();
        let s = spectrum(std2().as_ref(), &classes, &StableConfig::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("class,value,lower,upper,certified\na,1,1,1,true\n"));
    }
}
