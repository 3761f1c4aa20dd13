//! Word metrics d_S for finite symmetric generating sets.
//!
//! Three evaluation routes share one metric:
//! * sets that are unions of full standard spheres give radial metrics, solved
//!   exactly on the level graph of the tree;
//! * dense tables come from a breadth-first search restricted to a standard
//!   ball of radius `R + D`;
//! * single long elements (powers) use a breadth-first search restricted to the
//!   tube of standard radius `D` around the tree geodesic.
//!
//! `D` is the tube depth, by default the longest generator length. The ball and
//! tube routes are exact when d_S-geodesics stay inside that tube; the tests
//! check both against unrestricted search in the Cayley graph.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_rational::Rational64;

use super::{Flags, GenSet, MetricPotential, Sublevel};
use crate::error::{limit, Error, Result};
use crate::group::{inv_letter, sphere_size, BallGraph, Indexer, Letters, Word, DEFAULT_CAP};
use crate::value::Value;

#[derive(Debug)]
pub struct WordMetric {
    gens: GenSet,
    name: String,
    tube_depth: usize,
    cap: u64,
    radial: Option<Vec<usize>>,
    levels: RwLock<Arc<Vec<u32>>>,
    table: RwLock<Option<Arc<BallTable>>>,
}

#[derive(Debug)]
struct BallTable {
    radius: usize,
    dist: Arc<Vec<u16>>,
}

impl WordMetric {
    pub fn new(gens: GenSet) -> Self {
        let name = if gens.is_standard() { "d_std".to_string() } else { format!("d_{:?}", gens) };
        Self::named(gens, name)
    }

    pub fn named(gens: GenSet, name: impl Into<String>) -> Self {
        let radial = if gens.rank() >= 2 { gens.radial_lengths() } else { None };
        let tube_depth = gens.max_len().max(1);
        WordMetric {
            gens,
            name: name.into(),
            tube_depth,
            cap: DEFAULT_CAP,
            radial,
            levels: RwLock::new(Arc::new(Vec::new())),
            table: RwLock::new(None),
        }
    }

    pub fn standard(rank: usize) -> Self {
        Self::new(GenSet::standard(rank))
    }

    pub fn with_tube_depth(mut self, d: usize) -> Self {
        self.tube_depth = d.max(1);
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn gens(&self) -> &GenSet {
        &self.gens
    }

    pub fn tube_depth(&self) -> usize {
        self.tube_depth
    }

    /// Word length on the level graph, for radial sets.
    fn level_value(&self, n: usize) -> Result<u32> {
        {
            let lv = self.levels.read().expect("lock");
            if n < lv.len() {
                return Ok(lv[n]);
            }
        }
        let lengths = self.radial.as_ref().expect("radial");
        let want = (2 * n + 64).max(128);
        let table = radial_levels(lengths, want + 4 * self.gens.max_len());
        let mut lv = self.levels.write().expect("lock");
        *lv = Arc::new(table[..=want].to_vec());
        Ok(lv[n])
    }

    /// Distances on the standard ball of radius r, by length-lex index.
    pub fn ball_distances(&self, r: usize) -> Result<Arc<Vec<u16>>> {
        if let Some(t) = self.table.read().expect("lock").as_ref() {
            if t.radius >= r {
                let need = Indexer::new(self.gens.rank(), r)?.ball_size(r) as usize;
                if need == t.dist.len() {
                    return Ok(t.dist.clone());
                }
                return Ok(Arc::new(t.dist[..need].to_vec()));
            }
        }
        let dist = if self.radial.is_some() {
            let ix = Indexer::new(self.gens.rank(), r)?;
            if ix.ball_size(r) > self.cap {
                return Err(limit("ball table", ix.ball_size(r), self.cap));
            }
            let mut d = Vec::with_capacity(ix.ball_size(r) as usize);
            for n in 0..=r {
                let v = self.level_value(n)? as u16;
                d.extend(std::iter::repeat_n(v, sphere_size(self.gens.rank(), n) as usize));
            }
            d
        } else {
            restricted_ball_bfs(&self.gens, r, self.tube_depth, self.cap)?
        };
        let dist = Arc::new(dist);
        *self.table.write().expect("lock") = Some(Arc::new(BallTable { radius: r, dist: dist.clone() }));
        Ok(dist)
    }

    fn cached(&self, g: &Word) -> Option<u32> {
        let t = self.table.read().expect("lock");
        let t = t.as_ref()?;
        if g.len() > t.radius {
            return None;
        }
        let ix = Indexer::new(self.gens.rank(), t.radius).ok()?;
        Some(t.dist[ix.index_of(g.letters()) as usize] as u32)
    }

    /// Exact distance d_S(o,g).
    pub fn distance(&self, g: &Word) -> Result<u32> {
        if g.rank() != self.gens.rank() {
            return Err(Error::RankMismatch(g.rank(), self.gens.rank()));
        }
        if self.gens.is_standard() {
            return Ok(g.len() as u32);
        }
        if self.radial.is_some() {
            return self.level_value(g.len());
        }
        if let Some(d) = self.cached(g) {
            return Ok(d);
        }
        let d = tube_distances(&self.gens, g.letters(), self.tube_depth)?;
        Ok(*d.last().expect("nonempty"))
    }

    /// The Cayley-graph ball {g : d_S(o,g) ≤ radius} by unrestricted search,
    /// sorted by distance then word order.
    pub fn cayley_ball(&self, radius: u32, cap: u64) -> Result<Vec<(Word, u32)>> {
        let rank = self.gens.rank();
        let mut seen: HashMap<Word, u32> = HashMap::new();
        seen.insert(Word::identity(rank), 0);
        let mut frontier = vec![Word::identity(rank)];
        let mut out = vec![(Word::identity(rank), 0)];
        for d in 1..=radius {
            let mut next = Vec::new();
            for x in &frontier {
                for s in self.gens.words() {
                    let y = x.mul(s);
                    if !seen.contains_key(&y) {
                        seen.insert(y.clone(), d);
                        next.push(y);
                        if seen.len() as u64 > cap {
                            return Err(limit("Cayley ball", seen.len() as u64, cap));
                        }
                    }
                }
            }
            next.sort();
            out.extend(next.iter().map(|w| (w.clone(), d)));
            frontier = next;
        }
        Ok(out)
    }
}

/// Word lengths on levels 0..=max of the tree for a generating set made of
/// the full spheres with the given radii.
///
/// Right multiplication by the sphere of radius m moves a vertex at level n to
/// every vertex at tree distance m, i.e. to the levels n + m − 2c with
/// 0 ≤ c ≤ min(n, m); rank ≥ 2 makes each such level reachable.
pub(crate) fn radial_levels(lengths: &[usize], max: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; max + 1];
    dist[0] = 0;
    let mut frontier = vec![0usize];
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for &n in &frontier {
            for &m in lengths {
                for c in 0..=n.min(m) {
                    let k = n + m - 2 * c;
                    if k <= max && dist[k] == u32::MAX {
                        dist[k] = d;
                        next.push(k);
                    }
                }
            }
        }
        frontier = next;
    }
    dist
}

fn restricted_ball_bfs(gens: &GenSet, r: usize, depth: usize, cap: u64) -> Result<Vec<u16>> {
    let graph = BallGraph::new(gens.rank(), r + depth, cap)?;
    let need = graph.indexer().ball_size(r);
    let mut dist = vec![u16::MAX; graph.size()];
    let mut queue: Vec<u32> = Vec::with_capacity(graph.size().min(1 << 24));
    dist[0] = 0;
    queue.push(0);
    let mut inner = 1u64;
    let mut head = 0;
    let words: Vec<&[u8]> = gens.words().iter().map(|w| w.letters()).collect();
    while head < queue.len() && inner < need {
        let x = queue[head] as u64;
        head += 1;
        let n = graph.len_of(x);
        let dx = dist[x as usize];
        for s in &words {
            if let Some((y, ny)) = graph.mul_word(x, n, s) {
                if dist[y as usize] == u16::MAX {
                    dist[y as usize] = dx + 1;
                    queue.push(y as u32);
                    if ny <= r {
                        inner += 1;
                    }
                }
            }
        }
    }
    if inner < need {
        return Err(Error::OutOfRange(format!("ball of radius {r} not connected inside depth {depth}")));
    }
    dist.truncate(need as usize);
    Ok(dist)
}

/// Distances from the identity to every prefix of `seg`, by search restricted
/// to vertices within standard distance `depth` of the tree geodesic.
pub fn tube_distances(gens: &GenSet, seg: &[u8], depth: usize) -> Result<Vec<u32>> {
    let rank = gens.rank();
    let ix = Indexer::new(rank, depth)?;
    let nb = ix.ball_size(depth) as usize;
    let offs: Vec<Word> = (0..nb as u64).map(|i| ix.word(i)).collect();
    let n = seg.len();
    let mut dist = vec![u32::MAX; (n + 1) * nb];
    let mut queue: Vec<u32> = vec![0];
    dist[0] = 0;
    let mut remaining = n;
    let mut head = 0;
    let mut u = Letters::new();
    while head < queue.len() && remaining > 0 {
        let st = queue[head] as usize;
        head += 1;
        let (i, o) = (st / nb, st % nb);
        let d = dist[st];
        for t in gens.words() {
            u.clear();
            u.extend_from_slice(offs[o].letters());
            for &c in t.letters() {
                if u.last() == Some(&inv_letter(c)) {
                    u.pop();
                } else {
                    u.push(c);
                }
            }
            let mut j = 0;
            let ni;
            if !u.is_empty() && i < n && u[0] == seg[i] {
                while j < u.len() && i + j < n && u[j] == seg[i + j] {
                    j += 1;
                }
                ni = i + j;
            } else if !u.is_empty() && i > 0 && u[0] == inv_letter(seg[i - 1]) {
                while j < u.len() && i > j && u[j] == inv_letter(seg[i - 1 - j]) {
                    j += 1;
                }
                ni = i - j;
            } else {
                ni = i;
            }
            let rest = &u[j..];
            if rest.len() > depth {
                continue;
            }
            let ns = ni * nb + ix.index_of(rest) as usize;
            if dist[ns] == u32::MAX {
                dist[ns] = d + 1;
                queue.push(ns as u32);
                if rest.is_empty() {
                    remaining -= 1;
                }
            }
        }
    }
    let out: Vec<u32> = (0..=n).map(|i| dist[i * nb]).collect();
    if out.contains(&u32::MAX) {
        return Err(Error::OutOfRange(format!("tube of depth {depth} does not connect the segment")));
    }
    Ok(out)
}

impl MetricPotential for WordMetric {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn rank(&self) -> usize {
        self.gens.rank()
    }

    fn flags(&self) -> Flags {
        Flags { symmetric: true, pseudometric: true, exact: true }
    }

    fn eval(&self, g: &Word) -> Result<Value> {
        Ok(Value::int(self.distance(g)? as i64))
    }

    fn eval_powers(&self, g: &Word, kmax: usize) -> Result<Vec<Value>> {
        if self.gens.is_standard() || self.radial.is_some() || !g.is_cyclically_reduced() {
            return (0..=kmax).map(|k| self.eval(&g.pow(k))).collect();
        }
        let seg = g.pow(kmax);
        let d = tube_distances(&self.gens, seg.letters(), self.tube_depth)?;
        Ok((0..=kmax).map(|k| Value::int(d[k * g.len()] as i64)).collect())
    }

    fn is_radial(&self) -> bool {
        self.radial.is_some()
    }

    fn radial_value(&self, n: usize) -> Result<Value> {
        if self.radial.is_none() {
            return Err(Error::Precondition(format!("{} is not radial", self.name)));
        }
        Ok(Value::int(self.level_value(n)? as i64))
    }

    fn linear_lower_bound(&self) -> Option<(f64, f64)> {
        Some((1.0 / self.gens.max_len() as f64, 0.0))
    }

    fn linear_upper_slope(&self) -> Option<f64> {
        let rank = self.gens.rank();
        (0..2 * rank as u8)
            .map(|c| self.distance(&Word::from_codes(rank, &[c]).expect("rank")).map(|d| d as f64))
            .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))
            .ok()
    }

    fn ball_table(&self, r: usize) -> Result<Vec<Value>> {
        let d = self.ball_distances(r)?;
        Ok(d.iter().map(|&x| Value::Exact(Rational64::from_integer(x as i64))).collect())
    }

    fn sublevel(&self, t: f64, cap: u64) -> Result<Sublevel> {
        if self.radial.is_some() {
            return super::default_sublevel(self, t, cap);
        }
        let radius = (t.ceil() as i64 - 1).max(-1);
        if radius < 0 {
            return Ok(Sublevel::Explicit(Vec::new()));
        }
        let ball = self.cayley_ball(radius as u32, cap)?;
        Ok(Sublevel::Explicit(ball.into_iter().map(|(w, d)| (w, Value::int(d as i64))).collect()))
    }
}
