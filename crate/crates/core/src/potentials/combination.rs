use std::fmt;

use super::{Flags, MetricPotential, Potential, Sublevel};
use crate::error::{Error, Result};
use crate::group::Word;
use crate::value::{Scalar, Value};

/// A finite linear combination Σ cᵢ ψᵢ, evaluated pointwise.
#[derive(Clone)]
pub struct CombinationPotential {
    terms: Vec<(Scalar, Potential)>,
    name: String,
}

impl CombinationPotential {
    pub fn new(terms: Vec<(Scalar, Potential)>) -> Result<Self> {
        let rank = terms.first().ok_or_else(|| Error::Precondition("empty combination".into()))?.1.rank();
        if let Some((_, p)) = terms.iter().find(|(_, p)| p.rank() != rank) {
            return Err(Error::RankMismatch(p.rank(), rank));
        }
        let name = terms.iter().map(|(c, p)| format!("{c}*{}", p.name())).collect::<Vec<_>>().join(" + ");
        Ok(CombinationPotential { terms, name })
    }

    pub fn scaled(c: Scalar, p: Potential) -> Self {
        Self::new(vec![(c, p)]).expect("single term")
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn terms(&self) -> &[(Scalar, Potential)] {
        &self.terms
    }

    fn combine(&self, vals: impl Iterator<Item = Result<Value>>) -> Result<Value> {
        let mut acc = Value::zero();
        for ((c, _), v) in self.terms.iter().zip(vals) {
            acc = acc + v?.scale(*c);
        }
        Ok(acc)
    }
}

impl fmt::Debug for CombinationPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Combination({})", self.name)
    }
}

impl MetricPotential for CombinationPotential {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn rank(&self) -> usize {
        self.terms[0].1.rank()
    }

    fn flags(&self) -> Flags {
        let all = |f: fn(&Flags) -> bool| self.terms.iter().all(|(_, p)| f(&p.flags()));
        let nonneg = self.terms.iter().all(|(c, _)| c.to_f64() >= 0.0);
        let rational = self.terms.iter().all(|(c, _)| matches!(c, Scalar::Rational(_)));
        Flags {
            symmetric: all(|f| f.symmetric),
            pseudometric: nonneg && all(|f| f.pseudometric),
            exact: rational && all(|f| f.exact),
        }
    }

    fn eval(&self, g: &Word) -> Result<Value> {
        self.combine(self.terms.iter().map(|(_, p)| p.eval(g)))
    }

    fn eval_powers(&self, g: &Word, kmax: usize) -> Result<Vec<Value>> {
        let base: Vec<Vec<Value>> =
            self.terms.iter().map(|(_, p)| p.eval_powers(g, kmax)).collect::<Result<_>>()?;
        (0..=kmax).map(|k| self.combine(base.iter().map(|b| Ok(b[k])))).collect()
    }

    fn max_eval_len(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(_, p)| p.max_eval_len()).min()
    }

    fn is_radial(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.is_radial())
    }

    fn radial_value(&self, n: usize) -> Result<Value> {
        self.combine(self.terms.iter().map(|(_, p)| p.radial_value(n)))
    }

    fn linear_lower_bound(&self) -> Option<(f64, f64)> {
        let (mut slope, mut off) = (0.0, 0.0);
        for (c, p) in &self.terms {
            let c = c.to_f64();
            if c >= 0.0 {
                let (s, b) = p.linear_lower_bound()?;
                slope += c * s;
                off += c * b;
            } else {
                slope += c * p.linear_upper_slope()?;
            }
        }
        (slope > 0.0).then_some((slope, off))
    }

    fn linear_upper_slope(&self) -> Option<f64> {
        let mut slope = 0.0;
        for (c, p) in &self.terms {
            let c = c.to_f64();
            if c >= 0.0 {
                slope += c * p.linear_upper_slope()?;
            } else {
                let (s, b) = p.linear_lower_bound()?;
                if b != 0.0 {
                    return None;
                }
                slope += c * s;
            }
        }
        Some(slope)
    }

    fn ball_table(&self, r: usize) -> Result<Vec<Value>> {
        let base: Vec<Vec<Value>> = self.terms.iter().map(|(_, p)| p.ball_table(r)).collect::<Result<_>>()?;
        (0..base[0].len()).map(|i| self.combine(base.iter().map(|b| Ok(b[i])))).collect()
    }

    fn sublevel(&self, t: f64, cap: u64) -> Result<Sublevel> {
        super::default_sublevel(self, t, cap)
    }

    fn as_combination(&self) -> Option<&CombinationPotential> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::WordMetric;
    use std::sync::Arc;

    #[test]
    fn pointwise_combination() {
        let d: Potential = Arc::new(WordMetric::standard(2));
        let c = CombinationPotential::new(vec![(Scalar::int(2), d.clone()), (Scalar::int(-1), d.clone())]).unwrap();
        let g = Word::parse(2, "abA").unwrap();
        assert_eq!(c.eval(&g).unwrap(), Value::int(3));
        assert!(c.flags().exact && !c.flags().pseudometric);
        assert_eq!(c.linear_lower_bound(), Some((1.0, 0.0)));
        assert!(c.is_radial());
    }
}
