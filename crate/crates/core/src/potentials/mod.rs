//! Metric potentials ψ: g ↦ ψ(o,g) and the quantities built from them.

mod combination;
mod diagnostics;
mod genset;
mod length;
mod word;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{sphere_size, Indexer, Word};
use crate::value::Value;

pub use combination::CombinationPotential;
pub use diagnostics::{
    busemann_partial, delta_hyperbolicity, double_difference, gromov_product, hmp_gromov_bound,
    strong_hyp_defect, BusemannSeries, Diagnostic, ScanConfig,
};
pub use genset::GenSet;
pub use length::{spectrum, stable_length, LengthEntry, LengthSpectrum, StableConfig};
pub use word::{tube_distances, WordMetric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub symmetric: bool,
    pub pseudometric: bool,
    pub exact: bool,
}

/// Elements with ψ(o,g) below a threshold.
#[derive(Clone, Debug)]
pub enum Sublevel {
    /// Whole spheres: (standard length, value, element count).
    Radial(Vec<(usize, Value, u128)>),
    Explicit(Vec<(Word, Value)>),
}

impl Sublevel {
    pub fn count(&self) -> u128 {
        match self {
            Sublevel::Radial(v) => v.iter().map(|x| x.2).sum(),
            Sublevel::Explicit(v) => v.len() as u128,
        }
    }

    /// (value, multiplicity) pairs.
    pub fn weighted_values(&self) -> Vec<(Value, f64)> {
        match self {
            Sublevel::Radial(v) => v.iter().map(|&(_, x, c)| (x, c as f64)).collect(),
            Sublevel::Explicit(v) => v.iter().map(|(_, x)| (*x, 1.0)).collect(),
        }
    }
}

/// A left-invariant potential on F_r, evaluated from the identity.
pub trait MetricPotential: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn rank(&self) -> usize;
    fn flags(&self) -> Flags;

    /// ψ(o,g).
    fn eval(&self, g: &Word) -> Result<Value>;

    /// ψ(o,g^k) for k = 0..=kmax.
    fn eval_powers(&self, g: &Word, kmax: usize) -> Result<Vec<Value>> {
        (0..=kmax).map(|k| self.eval(&g.pow(k))).collect()
    }

    /// Largest standard length at which `eval` is guaranteed to succeed.
    fn max_eval_len(&self) -> Option<usize> {
        None
    }

    /// Whether ψ(o,g) depends only on the standard length of g.
    fn is_radial(&self) -> bool {
        false
    }

    /// Value on the standard sphere of radius n, for radial potentials.
    fn radial_value(&self, n: usize) -> Result<Value> {
        let _ = n;
        Err(Error::Precondition(format!("{} is not radial", self.name())))
    }

    /// Constants (c, b) with ψ(o,g) ≥ c|g| − b for all g, c > 0.
    fn linear_lower_bound(&self) -> Option<(f64, f64)> {
        None
    }

    /// A constant K with ψ(o,g) ≤ K|g| for all g.
    fn linear_upper_slope(&self) -> Option<f64> {
        None
    }

    /// Values on the standard ball of radius r, indexed by length-lex index.
    fn ball_table(&self, r: usize) -> Result<Vec<Value>> {
        let ix = Indexer::new(self.rank(), r)?;
        if self.is_radial() {
            let vals: Vec<Value> = (0..=r).map(|n| self.radial_value(n)).collect::<Result<_>>()?;
            let mut out = Vec::with_capacity(ix.ball_size(r) as usize);
            for (n, v) in vals.iter().enumerate() {
                out.extend(std::iter::repeat_n(*v, sphere_size(self.rank(), n) as usize));
            }
            return Ok(out);
        }
        (0..ix.ball_size(r)).map(|i| self.eval(&ix.word(i))).collect()
    }

    /// All g with ψ(o,g) < t.
    fn sublevel(&self, t: f64, cap: u64) -> Result<Sublevel> {
        default_sublevel(self, t, cap)
    }

    fn as_combination(&self) -> Option<&CombinationPotential> {
        None
    }
}

pub type Potential = Arc<dyn MetricPotential>;

/// Standard-ball enumeration bounded by the linear lower bound.
pub fn default_sublevel<P: MetricPotential + ?Sized>(p: &P, t: f64, cap: u64) -> Result<Sublevel> {
    let (c, b) = p.linear_lower_bound().ok_or_else(|| {
        Error::Precondition(format!("{}: no linear lower bound, sublevel set not enumerable", p.name()))
    })?;
    let r = ((t + b) / c).floor().max(0.0) as usize;
    if p.is_radial() {
        let mut out = Vec::new();
        for n in 0..=r {
            let v = p.radial_value(n)?;
            if v.mid() < t {
                out.push((n, v, sphere_size(p.rank(), n)));
            }
        }
        return Ok(Sublevel::Radial(out));
    }
    let ix = Indexer::new(p.rank(), r)?;
    if ix.ball_size(r) > cap {
        return Err(crate::error::limit("sublevel ball", ix.ball_size(r), cap));
    }
    let table = p.ball_table(r)?;
    let out = table
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.mid() < t)
        .map(|(i, v)| (ix.word(i as u64), v))
        .collect();
    Ok(Sublevel::Explicit(out))
}

/// ψ(g,h) = ψ(o, g⁻¹h).
pub fn eval_pair(p: &dyn MetricPotential, g: &Word, h: &Word) -> Result<Value> {
    p.eval(&g.invert().mul(h))
}
