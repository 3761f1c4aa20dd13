//! Green functions G(o,g) = Σ_k μ^{*k}(g) of finitely supported symmetric
//! walks, and the Green metric d_μ(o,g) = −log(G(o,g)/G(o,o)).
//!
//! The series is summed on a chain killed outside a finite domain. Radial
//! measures (constant on the standard spheres they charge) reduce to a chain
//! on lengths, since right multiplication by a uniform sphere is the tree
//! sphere average, which commutes with the automorphisms of the tree fixing o.
//! Other measures are pushed on the index space of a standard ball.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use super::measure::{FiniteMeasure, KahanSum};
use crate::error::{Error, Result};
use crate::group::{sphere_size_f64, BallGraph, Indexer, Word, DEFAULT_CAP};
use crate::potentials::{Flags, MetricPotential};
use crate::value::{Interval, Value};

/// Relative padding on float sums of nonnegative terms.
const SUM_PAD: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct GreenConfig {
    /// Relative tail tolerance: stop once tail ≤ eps_tail · lower everywhere.
    pub eps_tail: f64,
    pub kmax: usize,
    /// Largest standard length evaluated.
    pub eval_radius: usize,
    /// Killing domain is eval_radius + margin; `None` picks a default.
    pub margin: Option<usize>,
    pub cap: u64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig { eps_tail: 1e-6, kmax: 20_000, eval_radius: 5, margin: None, cap: DEFAULT_CAP }
    }
}

impl GreenConfig {
    pub fn with_radius(mut self, r: usize) -> Self {
        self.eval_radius = r;
        self
    }
}

/// Truncated Green sum with its declared heuristic slack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenEstimate {
    /// Σ_{k ≤ K} of the killed chain; a certified lower bound up to rounding.
    pub lower: f64,
    /// Heuristic bound on Σ_{k > K}.
    pub tail: f64,
    /// Heuristic bound on paths leaving the killing domain.
    pub domain_slack: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho_hat: f64,
    pub heuristic_flag: bool,
}

impl GreenEstimate {
    pub fn upper(&self) -> f64 {
        self.lower + self.tail + self.domain_slack
    }

    /// [lower, lower + tail + slack], padded for rounding.
    pub fn interval(&self) -> Interval {
        Interval::new(self.lower * (1.0 - SUM_PAD), self.upper() * (1.0 + SUM_PAD))
    }

    fn scaled(&self, c: f64) -> Self {
        GreenEstimate { lower: self.lower * c, tail: self.tail * c, domain_slack: self.domain_slack * c, ..*self }
    }
}

/// Series state: per-state partial sums and the last four terms.
struct Series {
    sum: Vec<KahanSum>,
    hist: [Vec<f64>; 4],
    ret: Vec<f64>,
}

impl Series {
    fn new(states: usize, start: usize) -> Self {
        let mut a0 = vec![0.0; states];
        a0[start] = 1.0;
        let mut sum = vec![KahanSum::default(); states];
        sum[start].add(1.0);
        Series { sum, hist: [a0, vec![0.0; states], vec![0.0; states], vec![0.0; states]], ret: vec![1.0] }
    }

    fn push(&mut self, next: Vec<f64>, start: usize) {
        for (s, x) in self.sum.iter_mut().zip(&next) {
            if *x != 0.0 {
                s.add(*x);
            }
        }
        self.ret.push(next[start]);
        self.hist.rotate_right(1);
        self.hist[0] = next;
    }

    /// sqrt(ret_j / ret_{j−2}) at the largest even j with ret_{j−2} > 0.
    fn rho_hat(&self) -> Option<f64> {
        let k = self.ret.len() - 1;
        let j = k - k % 2;
        if j < 4 || self.ret[j - 2] <= 0.0 || self.ret[j] <= 0.0 {
            return None;
        }
        Some((self.ret[j] / self.ret[j - 2]).sqrt())
    }

    fn term(&self, i: usize) -> f64 {
        self.hist[0][i].max(self.hist[1][i])
    }

    fn decreasing(&self, i: usize) -> bool {
        self.term(i) <= self.hist[2][i].max(self.hist[3][i])
    }

    /// Tail estimates on `targets` when the stopping rule holds.
    fn converged(&self, targets: usize, eps: f64) -> Option<(f64, Vec<f64>)> {
        let rho = self.rho_hat().filter(|&r| r < 1.0)?;
        let f = 1.5 * rho / (1.0 - rho);
        let mut tails = Vec::with_capacity(targets);
        for i in 0..targets {
            let lower = self.sum[i].value();
            let tail = f * self.term(i);
            if lower <= 0.0 || !self.decreasing(i) || tail > eps * lower {
                return None;
            }
            tails.push(tail);
        }
        Some((rho, tails))
    }
}

/// Transitions of the length chain killed above `n_max`.
pub(crate) fn level_transitions(rank: usize, profile: &[(usize, f64)], n_max: usize) -> Vec<Vec<(usize, f64)>> {
    let r2 = 2.0 * rank as f64;
    let q = r2 - 1.0;
    (0..=n_max)
        .map(|n| {
            let mut out: Vec<(usize, f64)> = Vec::new();
            let mut put = |t: usize, p: f64| {
                if t <= n_max && p > 0.0 {
                    match out.iter_mut().find(|x| x.0 == t) {
                        Some(x) => x.1 += p,
                        None => out.push((t, p)),
                    }
                }
            };
            for &(m, pm) in profile {
                if n == 0 || m == 0 {
                    put(n + m, pm);
                    continue;
                }
                for c in 0..=n.min(m) {
                    let p = if c == 0 {
                        q / r2
                    } else if c < n.min(m) {
                        (r2 - 2.0) / r2 * q.powi(-(c as i32))
                    } else if c == m {
                        1.0 / (r2 * q.powi(m as i32 - 1))
                    } else {
                        q.powi(1 - n as i32) / r2
                    };
                    put(n + m - 2 * c, pm * p);
                }
            }
            out.sort_by_key(|x| x.0);
            out
        })
        .collect()
}

/// Green function per element, by standard length, for a radial measure.
fn solve_radial(rank: usize, profile: &[(usize, f64)], cfg: &GreenConfig) -> Result<Vec<GreenEstimate>> {
    let l = profile.iter().map(|x| x.0).max().unwrap_or(0);
    let n_max = cfg.eval_radius + cfg.margin.unwrap_or(40.max(8 * l));
    let tr = level_transitions(rank, profile, n_max);
    let mut s = Series::new(n_max + 1, 0);
    let targets = cfg.eval_radius + 1;
    for k in 1..=cfg.kmax {
        let mut next = vec![0.0; n_max + 1];
        for (n, row) in tr.iter().enumerate() {
            let a = s.hist[0][n];
            if a != 0.0 {
                for &(t, p) in row {
                    next[t] += a * p;
                }
            }
        }
        s.push(next, 0);
        if let Some((rho, tails)) = s.converged(targets, cfg.eps_tail) {
            // Exit points are uniform on their spheres by radial symmetry, and
            // the expected visits to a sphere are at most the largest level sum.
            let visits = s.sum.iter().map(KahanSum::value).fold(0.0, f64::max);
            let slack = 1.5 * visits / sphere_size_f64(rank, n_max + 1);
            return Ok((0..targets)
                .map(|n| {
                    let e = GreenEstimate {
                        lower: s.sum[n].value(),
                        tail: tails[n],
                        domain_slack: 0.0,
                        k,
                        rho_hat: rho,
                        heuristic_flag: true,
                    };
                    let mut e = e.scaled(1.0 / sphere_size_f64(rank, n));
                    e.domain_slack = slack;
                    e
                })
                .collect());
        }
    }
    Err(Error::Numerical(format!("Green series did not meet eps_tail = {} within kmax = {}", cfg.eps_tail, cfg.kmax)))
}

/// Green function on every index of B_{eval_radius}, by pushing mass on a
/// killed standard ball.
fn solve_ball(mu: &FiniteMeasure, cfg: &GreenConfig) -> Result<Vec<GreenEstimate>> {
    let l = mu.max_len();
    let radius = cfg.eval_radius + cfg.margin.unwrap_or(7.max(2 * l));
    let bg = BallGraph::new(mu.rank(), radius, cfg.cap)?;
    let ix = bg.indexer();
    let size = bg.size();
    let lens: Vec<usize> = (0..size as u64).map(|i| ix.len_of(i)).collect();
    let atoms: Vec<(&[u8], f64)> = mu.atoms().iter().map(|(w, p)| (w.letters(), *p)).collect();
    let targets = ix.ball_size(cfg.eval_radius) as usize;
    let mut s = Series::new(size, 0);
    for k in 1..=cfg.kmax {
        let mut next = vec![0.0; size];
        let cur = &s.hist[0];
        for i in 0..size {
            let a = cur[i];
            if a == 0.0 {
                continue;
            }
            for &(w, p) in &atoms {
                if let Some((j, _)) = bg.mul_word(i as u64, lens[i], w) {
                    next[j as usize] += a * p;
                }
            }
        }
        s.push(next, 0);
        if let Some((rho, tails)) = s.converged(targets, cfg.eps_tail) {
            // Any exit point is at distance ≥ radius + 1 − |g| from g.
            let sphere_max = |d: usize| {
                (ix.offset(d)..ix.offset(d + 1)).map(|i| s.sum[i as usize].value()).fold(0.0, f64::max)
            };
            return Ok((0..targets)
                .map(|i| GreenEstimate {
                    lower: s.sum[i].value(),
                    tail: tails[i],
                    domain_slack: 1.5 * sphere_max((radius + 1 - lens[i]).min(radius)),
                    k,
                    rho_hat: rho,
                    heuristic_flag: true,
                })
                .collect());
        }
    }
    Err(Error::Numerical(format!("Green series did not meet eps_tail = {} within kmax = {}", cfg.eps_tail, cfg.kmax)))
}

#[derive(Clone, Debug)]
enum Table {
    Radial(Vec<GreenEstimate>),
    Ball(Indexer, Vec<GreenEstimate>),
}

/// Green function of μ on the standard ball of radius `eval_radius`.
#[derive(Clone, Debug)]
pub struct GreenTable {
    rank: usize,
    radius: usize,
    table: Table,
}

impl GreenTable {
    pub fn new(mu: &FiniteMeasure, cfg: &GreenConfig) -> Result<Self> {
        Self::build(mu, cfg, true)
    }

    /// Always pushes on the standard ball, even for radial measures.
    pub fn new_ball(mu: &FiniteMeasure, cfg: &GreenConfig) -> Result<Self> {
        Self::build(mu, cfg, false)
    }

    fn build(mu: &FiniteMeasure, cfg: &GreenConfig, radial: bool) -> Result<Self> {
        if !mu.is_symmetric() {
            return Err(Error::Precondition("the tail heuristic requires a symmetric measure".into()));
        }
        let table = match mu.radial_profile().filter(|_| radial) {
            Some(p) => Table::Radial(solve_radial(mu.rank(), &p, cfg)?),
            None => Table::Ball(Indexer::new(mu.rank(), cfg.eval_radius)?, solve_ball(mu, cfg)?),
        };
        Ok(GreenTable { rank: mu.rank(), radius: cfg.eval_radius, table })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.table, Table::Radial(_))
    }

    /// G(o,g).
    pub fn get(&self, g: &Word) -> Result<GreenEstimate> {
        if g.rank() != self.rank {
            return Err(Error::RankMismatch(g.rank(), self.rank));
        }
        if g.len() > self.radius {
            return Err(Error::OutOfRange(format!("|{g}| > Green table radius {}", self.radius)));
        }
        Ok(match &self.table {
            Table::Radial(v) => v[g.len()],
            Table::Ball(ix, v) => v[ix.index(g)? as usize],
        })
    }

    /// G(o,g) on a sphere, for radial tables.
    pub fn level(&self, n: usize) -> Option<GreenEstimate> {
        match &self.table {
            Table::Radial(v) => v.get(n).copied(),
            Table::Ball(..) => None,
        }
    }

    fn metric_from(&self, o: &GreenEstimate, g: &GreenEstimate) -> Value {
        Value::Approx(o.interval().ln() - g.interval().ln())
    }

    /// d_μ(o,g) as an interval; exactly 0 at the identity.
    pub fn metric(&self, g: &Word) -> Result<Value> {
        if g.is_identity() {
            return Ok(Value::zero());
        }
        let o = self.get(&Word::identity(self.rank))?;
        Ok(self.metric_from(&o, &self.get(g)?))
    }

    /// CSV with columns g, lower, upper, K, rho_hat, heuristic on B_r.
    pub fn write_csv<W: Write>(&self, w: W, r: usize) -> Result<()> {
        let ix = Indexer::new(self.rank, r.min(self.radius))?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["g", "lower", "upper", "K", "rho_hat", "heuristic"])?;
        for i in 0..ix.ball_size(ix.max_len()) {
            let g = ix.word(i);
            let e = self.get(&g)?;
            let iv = e.interval();
            wr.write_record([
                g.to_string(),
                iv.lo.to_string(),
                iv.hi.to_string(),
                e.k.to_string(),
                e.rho_hat.to_string(),
                e.heuristic_flag.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Green function at a single element.
pub fn green_function(mu: &FiniteMeasure, g: &Word, cfg: &GreenConfig) -> Result<GreenEstimate> {
    GreenTable::new(mu, &cfg.with_radius(g.len()))?.get(g)
}

/// Green metric d_μ(o,g) at a single element.
pub fn green_metric(mu: &FiniteMeasure, g: &Word, cfg: &GreenConfig) -> Result<Interval> {
    Ok(GreenTable::new(mu, &cfg.with_radius(g.len()))?.metric(g)?.interval())
}

/// The Green metric as an interval-valued potential on a finite ball.
#[derive(Clone, Debug)]
pub struct GreenPotential {
    name: String,
    symmetric: bool,
    table: Arc<GreenTable>,
    /// d_μ(o,s) upper ends on standard generators.
    gen_max: f64,
}

impl GreenPotential {
    pub fn new(mu: &FiniteMeasure, cfg: &GreenConfig) -> Result<Self> {
        Self::from_table(mu, GreenTable::new(mu, cfg)?)
    }

    pub fn from_table(mu: &FiniteMeasure, table: GreenTable) -> Result<Self> {
        if table.radius < 1 {
            return Err(Error::Precondition("Green potential needs radius ≥ 1".into()));
        }
        let mut gen_max: f64 = 0.0;
        for c in 0..2 * mu.rank() as u8 {
            gen_max = gen_max.max(table.metric(&Word::from_codes(mu.rank(), &[c])?)?.hi());
        }
        Ok(GreenPotential { name: "d_mu".into(), symmetric: mu.is_symmetric(), table: Arc::new(table), gen_max })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn table(&self) -> &GreenTable {
        &self.table
    }
}

impl MetricPotential for GreenPotential {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn rank(&self) -> usize {
        self.table.rank
    }

    fn flags(&self) -> Flags {
        Flags { symmetric: self.symmetric, pseudometric: true, exact: false }
    }

    fn eval(&self, g: &Word) -> Result<Value> {
        self.table.metric(g)
    }

    fn max_eval_len(&self) -> Option<usize> {
        Some(self.table.radius)
    }

    fn is_radial(&self) -> bool {
        self.table.is_radial()
    }

    fn radial_value(&self, n: usize) -> Result<Value> {
        let g = self
            .table
            .level(n)
            .ok_or_else(|| Error::OutOfRange(format!("{}: no radial value at length {n}", self.name)))?;
        if n == 0 {
            return Ok(Value::zero());
        }
        Ok(self.table.metric_from(&self.table.level(0).expect("radius ≥ 0"), &g))
    }

    /// The smallest ratio d_μ/|g| on the table; not certified beyond it.
    fn linear_lower_bound(&self) -> Option<(f64, f64)> {
        let mut c = f64::INFINITY;
        if self.is_radial() {
            for n in 1..=self.table.radius {
                c = c.min(self.radial_value(n).ok()?.lo() / n as f64);
            }
        } else {
            let ix = Indexer::new(self.table.rank, self.table.radius).ok()?;
            for n in 1..=self.table.radius {
                for i in ix.offset(n)..ix.offset(n + 1) {
                    c = c.min(self.table.metric(&ix.word(i)).ok()?.lo() / n as f64);
                }
            }
        }
        (c > 0.0).then_some((c, 0.0))
    }

    fn linear_upper_slope(&self) -> Option<f64> {
        Some(self.gen_max)
    }
}
