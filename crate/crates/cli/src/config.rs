//! Experiment configuration: a JSON file plus flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hyplab_core::group::Word;
use hyplab_core::potentials::GenSet;
use hyplab_core::randwalk::FiniteMeasure;
use serde::{Deserialize, Serialize};

/// All parameters. Fields left `None` take the experiment's default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rank: usize,
    /// Generating set of the comparison word metric; default {a, b, ab}±.
    pub gens: Option<PathBuf>,
    /// Step law of the walk; default the simple random walk.
    pub measure: Option<PathBuf>,
    /// Ball radius: ball 12, classes 8, green 5, hyperbolicity 4, certificates 8.
    pub radius: Option<usize>,
    /// Range of the counting data: 12 for growth, curves and distortion.
    pub tmax: Option<f64>,
    /// Range for the growth of the comparison metric.
    pub tmax_phi: f64,
    /// Class-average cutoff T.
    pub t: f64,
    /// Manhattan-curve sample points.
    pub t_grid: Vec<f64>,
    /// Cutoffs for the Bowen averages.
    pub lambda_grid: Vec<f64>,
    /// Step of the symmetric difference quotient of θ.
    pub h: f64,
    pub l: Vec<usize>,
    pub delta: f64,
    /// Rough-geodesic constant of the base metric.
    pub alpha: f64,
    /// Green series term cap.
    pub kmax: usize,
    pub eps_tail: f64,
    /// Evaluation radius of Green tables in the density and fundamental runs.
    pub green_radius: usize,
    /// Core length for dilations.
    pub maxlen: usize,
    /// ℓ_{d_μ} cutoff for the entropy-over-drift average.
    pub t_fundamental: f64,
    /// Powers of μ for the entropy upper bounds.
    pub entropy_k: usize,
    pub seed: u64,
    pub trials: usize,
    pub steps: usize,
    pub threads: Option<usize>,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rank: 2,
            gens: None,
            measure: None,
            radius: None,
            tmax: None,
            tmax_phi: 9.0,
            t: 10.0,
            t_grid: vec![-0.5, 0.0, 0.5],
            lambda_grid: (2..=10).map(f64::from).collect(),
            h: 0.05,
            l: vec![5, 6],
            delta: 4.25,
            alpha: 0.0,
            kmax: 20_000,
            eps_tail: 1e-6,
            green_radius: 150,
            maxlen: 5,
            t_fundamental: 7.0,
            entropy_k: 6,
            seed: 0,
            trials: 200,
            steps: 100,
            threads: None,
            cache_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank < 2 {
            bail!("rank must be at least 2, got {}", self.rank);
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            bail!("eps_tail must lie in (0, 1), got {}", self.eps_tail);
        }
        if self.h <= 0.0 {
            bail!("h must be positive, got {}", self.h);
        }
        if self.trials == 0 {
            bail!("trials must be positive");
        }
        if self.alpha < 0.0 {
            bail!("alpha must be nonnegative");
        }
        if self.lambda_grid.is_empty() || self.l.is_empty() {
            bail!("empty grid");
        }
        Ok(())
    }

    /// l > δ > 2(⌈α⌉ + α + 2) for every l on the grid.
    pub fn validate_density(&self) -> Result<()> {
        let floor = 2.0 * (self.alpha.ceil() + self.alpha + 2.0);
        if self.delta <= floor {
            bail!("δ = {} must exceed 2(⌈α⌉ + α + 2) = {floor}", self.delta);
        }
        if let Some(l) = self.l.iter().find(|&&l| l as f64 <= self.delta) {
            bail!("l = {l} must exceed δ = {}", self.delta);
        }
        Ok(())
    }

    pub fn gens(&self) -> Result<GenSet> {
        match &self.gens {
            Some(p) => Ok(GenSet::read(self.rank, p)?),
            None => {
                let mut words: Vec<Word> = (1..=self.rank).map(|i| Word::generator(self.rank, i)).collect::<Result<_, _>>()?;
                words.push(Word::parse(self.rank, "ab")?);
                Ok(GenSet::symmetrized(self.rank, words)?)
            }
        }
    }

    pub fn measure(&self) -> Result<FiniteMeasure> {
        match &self.measure {
            Some(p) => Ok(FiniteMeasure::read(self.rank, p)?),
            None => Ok(FiniteMeasure::simple(self.rank)),
        }
    }

    pub fn radius_or(&self, d: usize) -> usize {
        self.radius.unwrap_or(d)
    }

    pub fn tmax_or(&self, d: f64) -> f64 {
        self.tmax.unwrap_or(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        c.validate_density().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"rank": 3, "l": [7]}"#).unwrap();
        assert_eq!((partial.rank, partial.l.clone(), partial.delta), (3, vec![7], 4.25));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
        assert_eq!(c.gens().unwrap().len(), 6);
    }

    #[test]
    fn density_range() {
        let c = ExperimentConfig { delta: 4.0, ..Default::default() };
        assert!(c.validate_density().is_err());
        let c = ExperimentConfig { l: vec![4], ..Default::default() };
        assert!(c.validate_density().is_err());
        let c = ExperimentConfig { rank: 1, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
