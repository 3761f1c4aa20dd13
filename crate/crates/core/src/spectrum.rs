//! Growth rates, Manhattan curves and mean distortion.
//!
//! Growth is read from counting data on the upper half [Tmax/2, Tmax) of the
//! range. The point estimate is the least-squares slope of the log shell
//! weight; the bracket is the hull of the successive shell slopes and, for
//! positive rates, of the cumulative slopes, which share the same rate.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{enumerate_classes, sphere_size, ConjClassRep, Indexer, DEFAULT_CAP};
use crate::moduli::{dil_from_spectra, spectra_pair, DilEstimate};
use crate::potentials::{
    spectrum, CombinationPotential, LengthSpectrum, MetricPotential, Potential, StableConfig, Sublevel,
};
use crate::value::{big_to_f64, to_big, Scalar};

type Points = Vec<(f64, f64)>;

/// Above this many distinct values in the upper half, counts are binned.
const MAX_LEVELS: usize = 32;
const GRID_CELLS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "Tmax")]
    pub tmax: f64,
    pub levels: usize,
}

impl GrowthEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn ls_log_slope(s: &[(f64, f64)]) -> f64 {
    let n = s.len() as f64;
    let mx = s.iter().map(|p| p.0).sum::<f64>() / n;
    let my = s.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = s.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = s.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Exponential rate of the weight w at x, the abscissa of convergence of
/// Σ w e^{−sx}, from (x, w) points with x < tmax.
pub fn rate_from_points(points: &[(f64, f64)], tmax: f64) -> Result<GrowthEstimate> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 < tmax && p.1 > 0.0).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (x, w) in pts {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => merged.push((x, w)),
        }
    }
    let half = tmax / 2.0;
    let upper: Vec<(f64, f64)> = merged.iter().copied().filter(|p| p.0 >= half).collect();
    let below: f64 = merged.iter().filter(|p| p.0 < half).map(|p| p.1).sum();
    // (x, cumulative) and (x, shell) samples.
    let (cum, shell): (Points, Points) = if upper.len() > MAX_LEVELS {
        let step = half / GRID_CELLS as f64;
        let mut cells = [0.0; GRID_CELLS];
        for (x, w) in &upper {
            cells[(((x - half) / step) as usize).min(GRID_CELLS - 1)] += w;
        }
        let mut acc = below;
        let mut cum = Vec::new();
        let mut shell = Vec::new();
        for (j, w) in cells.iter().enumerate() {
            acc += w;
            cum.push((half + (j + 1) as f64 * step, acc));
            if *w > 0.0 {
                shell.push((half + (j as f64 + 0.5) * step, *w));
            }
        }
        (cum, shell)
    } else {
        let mut acc = below;
        let cum = upper
            .iter()
            .map(|&(x, w)| {
                acc += w;
                (x, acc)
            })
            .collect();
        (cum, upper.clone())
    };
    if cum.len() < 4 {
        return Err(Error::Precondition(format!("Tmax = {tmax} gives {} count levels, need 4", cum.len())));
    }
    if shell.len() < 4 {
        return Err(Error::Precondition(format!("Tmax = {tmax} gives {} shells, need 4", shell.len())));
    }
    let slopes = |s: &[(f64, f64)]| -> Vec<f64> {
        s.windows(2).map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0 - w[0].0)).collect()
    };
    let point = ls_log_slope(&shell);
    let mut all = if upper.len() <= MAX_LEVELS {
        slopes(&shell)
    } else {
        // Binned shells alias against the value lattice; halves average it out.
        let h = shell.len() / 2;
        vec![ls_log_slope(&shell[..h + 1]), ls_log_slope(&shell[h - 1..])]
    };
    if point > 0.0 {
        // The cumulative shares a positive rate; a negative one it flattens to 0.
        all.extend(slopes(&cum));
    }
    let lower = all.iter().copied().fold(point, f64::min);
    let upper = all.iter().copied().fold(point, f64::max);
    Ok(GrowthEstimate { point, lower, upper, tmax, levels: cum.len() })
}

/// v_ψ from N(T) = #{g : ψ(o,g) < T}.
pub fn growth_rate(psi: &dyn MetricPotential, tmax: f64, cap: u64) -> Result<GrowthEstimate> {
    let pts: Vec<(f64, f64)> = psi.sublevel(tmax, cap)?.weighted_values().into_iter().map(|(v, c)| (v.mid(), c)).collect();
    rate_from_points(&pts, tmax)
}

/// Counts of (φ(o,g), ψ(o,g)) over {ψ < Tmax}.
#[derive(Clone, Debug)]
pub struct JointTable {
    pub phi: String,
    pub psi: String,
    pub tmax: f64,
    rows: Vec<(f64, f64, f64)>,
}

impl JointTable {
    pub fn build(phi: &dyn MetricPotential, psi: &dyn MetricPotential, tmax: f64, cap: u64) -> Result<Self> {
        if phi.rank() != psi.rank() {
            return Err(Error::RankMismatch(phi.rank(), psi.rank()));
        }
        let rank = psi.rank();
        let mut rows = Vec::new();
        match psi.sublevel(tmax, cap)? {
            Sublevel::Radial(levels) => {
                let r = levels.iter().map(|x| x.0).max().unwrap_or(0);
                if phi.is_radial() {
                    for (n, v, c) in levels {
                        rows.push((phi.radial_value(n)?.mid(), v.mid(), c as f64));
                    }
                } else {
                    let ix = Indexer::new(rank, r)?;
                    if ix.ball_size(r) > cap {
                        return Err(crate::error::limit("joint table", ix.ball_size(r), cap));
                    }
                    let table = phi.ball_table(r)?;
                    for (n, v, _) in levels {
                        for i in ix.offset(n)..ix.offset(n + 1) {
                            rows.push((table[i as usize].mid(), v.mid(), 1.0));
                        }
                    }
                }
            }
            Sublevel::Explicit(words) => {
                for (w, v) in words {
                    let x = if phi.is_radial() { phi.radial_value(w.len())? } else { phi.eval(&w)? };
                    rows.push((x.mid(), v.mid(), 1.0));
                }
            }
        }
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        let mut merged: Vec<(f64, f64, f64)> = Vec::new();
        for r in rows {
            match merged.last_mut() {
                Some(m) if m.0 == r.0 && m.1 == r.1 => m.2 += r.2,
                _ => merged.push(r),
            }
        }
        Ok(JointTable { phi: phi.name(), psi: psi.name(), tmax, rows: merged })
    }

    /// A table from stored (φ, ψ, count) rows, sorted by ψ then φ.
    pub fn from_rows(phi: String, psi: String, tmax: f64, rows: Vec<(f64, f64, f64)>) -> Self {
        JointTable { phi, psi, tmax, rows }
    }

    pub fn rows(&self) -> &[(f64, f64, f64)] {
        &self.rows
    }

    /// The table of (aφ, bψ) over {bψ < b·Tmax}.
    pub fn scaled(&self, a: f64, b: f64) -> JointTable {
        JointTable {
            phi: format!("{a}*{}", self.phi),
            psi: format!("{b}*{}", self.psi),
            tmax: self.tmax * b,
            rows: self.rows.iter().map(|&(x, y, c)| (a * x, b * y, c)).collect(),
        }
    }

    pub fn growth_psi(&self) -> Result<GrowthEstimate> {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.1, r.2)).collect();
        rate_from_points(&pts, self.tmax)
    }

    /// θ(t): the exponential rate of Σ_{ψ < T} e^{−tφ}, which is the
    /// abscissa of convergence in s of Σ e^{−tφ − sψ}.
    pub fn theta(&self, t: f64) -> Result<ManhattanSample> {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.1, r.2 * (-t * r.0).exp())).collect();
        let g = rate_from_points(&pts, self.tmax)?;
        Ok(ManhattanSample { t, theta: g.point, theta_lower: g.lower, theta_upper: g.upper })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManhattanSample {
    pub t: f64,
    pub theta: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
}

impl ManhattanSample {
    pub fn width(&self) -> f64 {
        self.theta_upper - self.theta_lower
    }
}

pub fn poincare_theta(phi: &dyn MetricPotential, psi: &dyn MetricPotential, t: f64, tmax: f64) -> Result<ManhattanSample> {
    JointTable::build(phi, psi, tmax, DEFAULT_CAP)?.theta(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManhattanCurve {
    pub samples: Vec<ManhattanSample>,
    /// Second differences of the midpoints ≥ −(bracket slack).
    pub convex: bool,
    pub decreasing: bool,
}

impl ManhattanCurve {
    /// CSV with columns t, theta_lower, theta_upper.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "theta_lower", "theta_upper"])?;
        for s in &self.samples {
            wr.write_record([s.t.to_string(), s.theta_lower.to_string(), s.theta_upper.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Samples of θ on an increasing grid, with convexity and decrease checks.
pub fn manhattan_curve(table: &JointTable, tgrid: &[f64]) -> Result<ManhattanCurve> {
    if tgrid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("t grid must be increasing".into()));
    }
    let samples: Vec<ManhattanSample> = tgrid.iter().map(|&t| table.theta(t)).collect::<Result<_>>()?;
    let decreasing = samples.windows(2).all(|w| w[1].theta < w[0].theta);
    let convex = samples.windows(3).all(|w| {
        let s1 = (w[1].theta - w[0].theta) / (w[1].t - w[0].t);
        let s2 = (w[2].theta - w[1].theta) / (w[2].t - w[1].t);
        let slack = (w[0].width() + 2.0 * w[1].width() + w[2].width()) / (w[2].t - w[0].t).min(w[1].t - w[0].t);
        s2 - s1 >= -slack
    });
    Ok(ManhattanCurve { samples, convex, decreasing })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub h: f64,
}

/// −(θ(h) − θ(−h))/(2h) with the θ brackets propagated.
pub fn mean_distortion_slope(table: &JointTable, h: f64) -> Result<SlopeEstimate> {
    if h <= 0.0 {
        return Err(Error::Precondition("h must be positive".into()));
    }
    let (p, m) = (table.theta(h)?, table.theta(-h)?);
    Ok(SlopeEstimate {
        value: -(p.theta - m.theta) / (2.0 * h),
        lower: -(p.theta_upper - m.theta_lower) / (2.0 * h),
        upper: -(p.theta_lower - m.theta_upper) / (2.0 * h),
        h,
    })
}

/// Classes with ℓ_ψ < T and ψ's spectrum on them.
#[derive(Clone, Debug)]
pub struct ClassSample {
    pub t: f64,
    /// Core length enumerated; every class with ℓ_ψ < T has a shorter core.
    pub maxlen: usize,
    pub psi: LengthSpectrum,
    /// Uncertified entries whose bracket straddles T.
    pub ambiguous: usize,
}

impl ClassSample {
    pub fn classes(&self) -> Vec<ConjClassRep> {
        self.psi.entries.keys().cloned().collect()
    }
}

/// Core length needed so that {ℓ_ψ < T} is exhausted, from ψ ≥ c|g| − b.
pub fn required_maxlen(psi: &dyn MetricPotential, t: f64) -> Result<usize> {
    let (c, _) = psi.linear_lower_bound().ok_or_else(|| {
        Error::Precondition(format!("{}: no linear lower bound, cannot certify enumeration", psi.name()))
    })?;
    Ok(((t / c).ceil() as usize).saturating_sub(1))
}

/// Enumerates {ℓ_ψ < T}; `maxlen` below the required length is an error.
pub fn sublevel_classes(psi: &dyn MetricPotential, t: f64, maxlen: Option<usize>, cfg: &StableConfig) -> Result<ClassSample> {
    let need = required_maxlen(psi, t)?;
    if let Some(m) = maxlen {
        if m < need {
            return Err(Error::Precondition(format!(
                "maxlen {m} cannot exhaust ℓ < {t} for {}: core lengths up to {need} needed",
                psi.name()
            )));
        }
    }
    let classes = enumerate_classes(psi.rank(), need, DEFAULT_CAP)?;
    let mut s = spectrum(psi, &classes, cfg)?;
    let ambiguous = s.entries.values().filter(|e| !e.certified && e.lower < t && t <= e.upper).count();
    s.entries.retain(|_, e| e.value < t);
    Ok(ClassSample { t, maxlen: need, psi: s, ambiguous })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionAverage {
    #[serde(rename = "T")]
    pub t: f64,
    pub n: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
    #[serde(skip)]
    pub exact: Option<BigRational>,
}

/// (1/N) Σ ℓ_φ[g]/ℓ_ψ[g] over the classes of ψ's spectrum with ℓ_ψ < T.
pub fn mean_distortion_avg(phi: &LengthSpectrum, psi: &LengthSpectrum, t: f64) -> Result<DistortionAverage> {
    let mut n = 0usize;
    let mut exact = Some(BigRational::zero());
    let (mut sum, mut lo, mut hi) = (0.0, 0.0, 0.0);
    let mut certified = true;
    for (c, b) in psi.iter().filter(|(_, e)| e.value < t) {
        let a = phi.get(c)?;
        if b.lower <= 0.0 {
            return Err(Error::Precondition(format!("ℓ[{c}] of {} is not positive", psi.potential)));
        }
        n += 1;
        certified &= a.certified && b.certified;
        exact = match (exact, a.exact.filter(|_| a.certified), b.exact.filter(|_| b.certified)) {
            (Some(acc), Some(x), Some(y)) => Some(acc + to_big(x) / to_big(y)),
            _ => None,
        };
        let iv = a.interval().div_pos(&b.interval());
        sum += a.value / b.value;
        lo += iv.lo;
        hi += iv.hi;
    }
    if n == 0 {
        return Err(Error::Precondition(format!("no classes with ℓ < {t}")));
    }
    let exact = exact.map(|e| e / BigRational::from_integer(n.into()));
    let nf = n as f64;
    if let Some(e) = &exact {
        let v = big_to_f64(e);
        return Ok(DistortionAverage { t, n, value: v, lower: v, upper: v, certified: true, exact });
    }
    Ok(DistortionAverage { t, n, value: sum / nf, lower: lo / nf, upper: hi / nf, certified, exact: None })
}

/// tφ + θψ; its growth rate is 1 when φ and ψ are normalized.
pub fn manhattan_combination(phi: Potential, psi: Potential, t: f64, theta: f64) -> Result<CombinationPotential> {
    CombinationPotential::new(vec![(Scalar::Real(t), phi), (Scalar::Real(theta), psi)])
}

/// Dil(ψ,φ)·φ − ψ with the dilation computed on classes of length ≤ maxlen.
pub fn manhattan_boundary(phi: Potential, psi: Potential, maxlen: usize, cfg: &StableConfig) -> Result<(CombinationPotential, DilEstimate)> {
    let (a, b) = spectra_pair(phi.as_ref(), psi.as_ref(), maxlen, cfg)?;
    let dil = dil_from_spectra(&b, &a)?;
    let back = dil_from_spectra(&a, &b)?;
    let proportional = match (&dil.exact, &back.exact) {
        (Some(x), Some(y)) => x * y == BigRational::from_integer(1.into()),
        _ => (dil.value * back.value - 1.0).abs() < 1e-12,
    };
    if proportional {
        return Err(Error::Precondition("proportional spectra: the Manhattan boundary is undefined".into()));
    }
    let coef = match &dil.exact {
        Some(x) if x.numer().bits() < 63 && x.denom().bits() < 63 => Scalar::Rational(num_rational::Rational64::new(
            x.numer().try_into().expect("fits"),
            x.denom().try_into().expect("fits"),
        )),
        _ => Scalar::Real(dil.value),
    };
    Ok((CombinationPotential::new(vec![(coef, phi), (Scalar::int(-1), psi)])?, dil))
}

/// ψ rescaled by its estimated growth rate, so that v = 1.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub potential: Potential,
    pub factor: f64,
    pub growth: GrowthEstimate,
}

pub fn normalize(psi: Potential, tmax: f64, cap: u64) -> Result<Normalized> {
    let growth = growth_rate(psi.as_ref(), tmax, cap)?;
    let name = format!("{}*{}", growth.point, psi.name());
    let potential = std::sync::Arc::new(CombinationPotential::scaled(Scalar::Real(growth.point), psi).named(name));
    Ok(Normalized { potential, factor: growth.point, growth })
}

/// Sphere counts of the standard metric by the closed formula.
pub fn standard_sphere_counts(rank: usize, n: usize) -> Vec<u128> {
    (0..=n).map(|k| sphere_size(rank, k)).collect()
}

/// Histogram of {ψ < T} by distinct value, for reports.
pub fn value_histogram(psi: &dyn MetricPotential, t: f64, cap: u64) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (v, c) in psi.sublevel(t, cap)?.weighted_values() {
        *out.entry(v.to_string()).or_insert(0.0) += c;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Word;
    use crate::potentials::{GenSet, WordMetric};
    use crate::randwalk::{FiniteMeasure, GreenConfig, GreenPotential};
    use std::sync::Arc;

    fn std2() -> Potential {
        Arc::new(WordMetric::standard(2))
    }

    fn sprime() -> Potential {
        let w = |s| Word::parse(2, s).unwrap();
        Arc::new(WordMetric::new(GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap()))
    }

    #[test]
    fn growth_examples() {
        let l3 = 3f64.ln();
        let g = growth_rate(std2().as_ref(), 12.0, DEFAULT_CAP).unwrap();
        assert!(g.contains(l3) && g.width() <= 0.05, "{g:?}");
        let two = CombinationPotential::scaled(Scalar::int(2), std2());
        let g = growth_rate(&two, 24.0, DEFAULT_CAP).unwrap();
        assert!(g.contains(l3 / 2.0) && (g.point - l3 / 2.0).abs() < 0.01, "{g:?}");
        let d = GreenPotential::new(&FiniteMeasure::simple(2), &GreenConfig::default().with_radius(14)).unwrap();
        let g = growth_rate(&d, 14.0, DEFAULT_CAP).unwrap();
        assert!(g.lower <= 1.0 + 1e-6 && 1.0 <= g.upper, "{g:?}");
        assert!(growth_rate(std2().as_ref(), 3.0, DEFAULT_CAP).is_err());
    }

    #[test]
    fn binned_rate_matches_exponential() {
        // Weights e^{0.7x} on a fine grid trigger binning.
        let pts: Vec<(f64, f64)> = (0..400).map(|i| (i as f64 * 0.05, (0.7 * i as f64 * 0.05).exp())).collect();
        let g = rate_from_points(&pts, 20.0).unwrap();
        assert!(g.contains(0.7) && g.width() < 0.1 && (g.point - 0.7).abs() < 0.005, "{g:?}");
    }

    #[test]
    fn self_pair_line() {
        let table = JointTable::build(std2().as_ref(), std2().as_ref(), 12.0, DEFAULT_CAP).unwrap();
        let v = 3f64.ln();
        let norm = table.scaled(v, v);
        for t in [-0.5, 0.0, 0.5] {
            let s = norm.theta(t).unwrap();
            assert!(s.theta_lower <= 1.0 - t && 1.0 - t <= s.theta_upper && s.width() <= 0.05, "{s:?}");
        }
        let slope = mean_distortion_slope(&norm, 0.05).unwrap();
        assert!(slope.lower <= 1.0 && 1.0 <= slope.upper && (slope.value - 1.0).abs() < 0.005, "{slope:?}");
        let curve = manhattan_curve(&norm, &[-0.5, 0.0, 0.5, 1.0]).unwrap();
        assert!(curve.convex && curve.decreasing);
    }

    #[test]
    fn theta_at_zero_is_growth_and_scaling() {
        let table = JointTable::build(sprime().as_ref(), std2().as_ref(), 10.0, DEFAULT_CAP).unwrap();
        assert_eq!(table.theta(0.0).unwrap().theta, table.growth_psi().unwrap().point);
        let c = table.scaled(3.0, 1.0);
        // θ_{3φ}(t) = θ_φ(3t).
        let s = mean_distortion_slope(&c, 0.05).unwrap().value / mean_distortion_slope(&table, 0.15).unwrap().value;
        assert!((s - 3.0).abs() < 1e-9);
    }

    #[test]
    fn theta_brackets_shell_ratio() {
        // Oracle: shell sums S_n = Σ_{|g|=n} e^{−tφ(g)} by direct evaluation;
        // Σ_n S_n e^{−sn} changes behaviour at s = lim ln(S_{n+1}/S_n).
        let sp = sprime();
        let t = 0.3;
        let mut shells = [0.0f64; 11];
        for w in crate::group::enumerate_ball(2, 10, DEFAULT_CAP).unwrap() {
            shells[w.len()] += (-t * sp.eval(&w).unwrap().mid()).exp();
        }
        let ratio = (shells[10] / shells[9]).ln();
        let s = JointTable::build(sp.as_ref(), std2().as_ref(), 11.0, DEFAULT_CAP).unwrap().theta(t).unwrap();
        assert!(s.theta_lower <= ratio && ratio <= s.theta_upper, "{s:?} vs {ratio}");
    }

    #[test]
    fn distortion_average_examples() {
        let cfg = StableConfig::default();
        let psi = sublevel_classes(std2().as_ref(), 6.0, Some(5), &cfg).unwrap();
        let two = CombinationPotential::scaled(Scalar::int(2), std2());
        let phi = spectrum(&two, &psi.classes(), &cfg).unwrap();
        let a = mean_distortion_avg(&phi, &psi.psi, 6.0).unwrap();
        assert_eq!(a.exact, Some(BigRational::from_integer(2.into())));
        let self_avg = mean_distortion_avg(&psi.psi, &psi.psi, 6.0).unwrap();
        assert_eq!(self_avg.value, 1.0);
        assert!(sublevel_classes(std2().as_ref(), 6.0, Some(4), &cfg).is_err());
    }

    #[test]
    fn distortion_average_matches_class_sweep() {
        let cfg = StableConfig::default();
        let t = 7.0;
        let psi = sublevel_classes(std2().as_ref(), t, None, &cfg).unwrap();
        let sp = sprime();
        let phi = spectrum(sp.as_ref(), &psi.classes(), &cfg).unwrap();
        let a = mean_distortion_avg(&phi, &psi.psi, t).unwrap();
        let (mut sum, mut n) = (0.0, 0);
        for c in enumerate_classes(2, 6, DEFAULT_CAP).unwrap() {
            let v = sp.eval_powers(c.core(), 12).unwrap();
            sum += (v[12].mid() - v[6].mid()) / 6.0 / c.len() as f64;
            n += 1;
        }
        assert_eq!(a.n, n);
        assert!((a.value - sum / n as f64).abs() < 1e-12, "{} vs {}", a.value, sum / n as f64);
    }

    #[test]
    fn boundary_examples() {
        let cfg = StableConfig::default();
        let (b, dil) = manhattan_boundary(std2(), sprime(), 6, &cfg).unwrap();
        assert_eq!(dil.value, 1.0);
        let classes = enumerate_classes(2, 6, DEFAULT_CAP).unwrap();
        let s = spectrum(&b, &classes, &cfg).unwrap();
        let mut inf = f64::INFINITY;
        for (c, e) in s.iter() {
            assert!(e.value >= 0.0);
            inf = inf.min(e.value / c.len() as f64);
        }
        assert!(inf <= 0.05);
        let two = Arc::new(CombinationPotential::scaled(Scalar::int(2), std2()));
        assert!(manhattan_boundary(two, std2(), 4, &cfg).is_err());
    }

    #[test]
    fn combination_growth_is_one() {
        let phi = normalize(sprime(), 9.0, DEFAULT_CAP).unwrap();
        let psi = normalize(std2(), 12.0, DEFAULT_CAP).unwrap();
        let table = JointTable::build(phi.potential.as_ref(), psi.potential.as_ref(), 12.0, DEFAULT_CAP).unwrap();
        let th = table.theta(0.5).unwrap().theta;
        let c = manhattan_combination(phi.potential.clone(), psi.potential.clone(), 0.5, th).unwrap();
        let g = growth_rate(&c, 9.0, DEFAULT_CAP).unwrap();
        assert!(g.lower - 0.05 <= 1.0 && 1.0 <= g.upper + 0.05, "{g:?}");
    }
}
