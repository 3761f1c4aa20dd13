use std::sync::Arc;

use hyplab_core::group::{enumerate_ball, enumerate_classes, Word, DEFAULT_CAP};
use hyplab_core::potentials::{
    delta_hyperbolicity, spectrum, stable_length, CombinationPotential, GenSet, Potential, ScanConfig,
    StableConfig, WordMetric,
};
use hyplab_core::randwalk::{convolve, ConvolveConfig, FiniteMeasure, GreenConfig, GreenTable};
use hyplab_core::spectrum::JointTable;
use hyplab_core::value::Scalar;
use proptest::{prop_assert, prop_assert_eq, proptest};

fn w(s: &str) -> Word {
    Word::parse(2, s).unwrap()
}

fn sprime() -> Potential {
    Arc::new(WordMetric::new(GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap()))
}

fn sprime_measure() -> FiniteMeasure {
    let gens = GenSet::symmetrized(2, vec![w("a"), w("b"), w("ab")]).unwrap();
    FiniteMeasure::uniform(gens.words()).unwrap()
}

#[test]
fn convolution_is_associative_on_exact_weights() {
    let cfg = ConvolveConfig::default();
    let mu = FiniteMeasure::parse(2, "a 1/2\nB 1/3\nab 1/6\n").unwrap();
    let mm = convolve(&mu, &mu, &cfg).unwrap();
    let left = convolve(&mm, &mu, &cfg).unwrap();
    let right = convolve(&mu, &mm, &cfg).unwrap();
    assert!(left.exact_weights().is_some());
    assert_eq!(left.atoms().len(), right.atoms().len());
    for (x, _) in left.atoms() {
        assert_eq!(left.exact_mass(x), right.exact_mass(x));
    }
}

#[test]
fn green_metric_symmetry_and_triangle() {
    let table = GreenTable::new_ball(&sprime_measure(), &GreenConfig::default().with_radius(4)).unwrap();
    let ball = enumerate_ball(2, 2, DEFAULT_CAP).unwrap();
    for g in &ball {
        let a = table.metric(g).unwrap().interval();
        let b = table.metric(&g.invert()).unwrap().interval();
        assert!(a.overlaps(&b), "{g}: {a} vs {b}");
        for h in &ball {
            let gh = table.metric(&g.mul(h)).unwrap();
            let bound = a.hi + table.metric(h).unwrap().hi();
            assert!(gh.lo() <= bound + 1e-12, "{g}·{h}");
        }
    }
}

#[test]
fn theta_brackets_refine_with_tmax() {
    let d = WordMetric::standard(2);
    let sp = sprime();
    let mut last = f64::INFINITY;
    for tmax in [8.0, 10.0, 12.0] {
        let s = JointTable::build(sp.as_ref(), &d, tmax, DEFAULT_CAP).unwrap().theta(0.5).unwrap();
        assert!(s.width() <= last + 1e-12, "Tmax {tmax}: {s:?}");
        last = s.width();
    }
}

#[test]
fn delta_is_monotone_in_radius() {
    let cfg = ScanConfig::default();
    let sp = sprime();
    let mut last = 0.0;
    for n in 1..=3 {
        let d = delta_hyperbolicity(sp.as_ref(), n, &cfg).unwrap();
        assert!(d.value >= last);
        last = d.value;
    }
}

proptest! {
    #[test]
    fn fekete_upper_bounds(s in "[aAbB]{1,6}", kmax in 2usize..10) {
        let g = w(&s);
        if g.is_identity() {
            return Ok(());
        }
        let sp = sprime();
        let e = stable_length(sp.as_ref(), &g, &StableConfig { kmax, period_cap: 4 }).unwrap();
        let (core, _) = g.cyclic_reduce();
        for (k, v) in sp.eval_powers(&core, kmax).unwrap().iter().enumerate().skip(1) {
            prop_assert!(e.upper <= v.mid() / k as f64 + 1e-12);
        }
        let more = stable_length(sp.as_ref(), &g, &StableConfig { kmax: kmax + 3, period_cap: 4 }).unwrap();
        prop_assert!(more.upper <= e.upper + 1e-12);
    }

    #[test]
    fn spectrum_scales_entrywise(c in 1i64..7) {
        let classes = enumerate_classes(2, 4, DEFAULT_CAP).unwrap();
        let cfg = StableConfig::default();
        let sp = sprime();
        let scaled = CombinationPotential::scaled(Scalar::int(c), sp.clone());
        let a = spectrum(sp.as_ref(), &classes, &cfg).unwrap();
        let b = spectrum(&scaled, &classes, &cfg).unwrap();
        for (k, e) in a.iter() {
            prop_assert_eq!(b.get(k).unwrap().exact, e.exact.map(|x| x * c));
        }
    }
}
