//! Name-based and image-based gender estimates, and their fusion.
//!
//! The name channel votes over the top-K nearest dataset entries. The image
//! channel reduces per-image classifier scores to one estimate by a weighted
//! mean. [`fuse`] trusts a confident name estimate outright and only then
//! consults the image channel.

use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Gender;
use crate::fuzzy::{IndexError, NameIndex, ScriptChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateSource {
    Name,
    Image,
    Fused,
}

/// The winning label with its probability; `P(other) = 1 - probability`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenderEstimate {
    pub gender: Gender,
    pub probability: f64,
    pub source: EstimateSource,
    /// The channels were exactly split and the label came from the tie rule.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
    /// The image channel was needed but unavailable.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
}

impl GenderEstimate {
    pub fn new(gender: Gender, probability: f64, source: EstimateSource) -> Self {
        Self {
            gender,
            probability,
            source,
            low_confidence: false,
            degraded: false,
        }
    }

    /// Probability that the person is male.
    pub fn p_male(&self) -> f64 {
        match self.gender {
            Gender::Male => self.probability,
            Gender::Female => 1.0 - self.probability,
        }
    }

    /// Converts a P(male) value into a labelled estimate; exactly 0.5 goes to
    /// `tie_label` and is marked low-confidence.
    pub fn from_p_male(p_male: f64, source: EstimateSource, tie_label: Gender) -> Self {
        if p_male > 0.5 {
            Self::new(Gender::Male, p_male, source)
        } else if p_male < 0.5 {
            Self::new(Gender::Female, 1.0 - p_male, source)
        } else {
            Self {
                low_confidence: true,
                ..Self::new(tie_label, 0.5, source)
            }
        }
    }

    fn relabel(self, source: EstimateSource) -> Self {
        Self { source, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub k: usize,
    pub confidence_threshold: f64,
    pub name_weight: f64,
    pub image_weight: f64,
    pub similarity_weighted_vote: bool,
    pub tie_label: Gender,
    /// Upper bound on the image channel; expiry counts as unavailable.
    pub image_timeout_ms: Option<u64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            k: 5,
            confidence_threshold: 0.8,
            name_weight: 0.6,
            image_weight: 0.4,
            similarity_weighted_vote: false,
            tie_label: Gender::Female,
            image_timeout_ms: Some(10_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("k must be odd and at least 1, got {0}")]
    EvenK(usize),
    #[error("confidence_threshold must lie in (0.5, 1], got {0}")]
    Threshold(f64),
    #[error("weights must be finite, non-negative and not both zero")]
    Weights,
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k.is_multiple_of(2) {
            return Err(ConfigError::EvenK(self.k));
        }
        if !(self.confidence_threshold > 0.5 && self.confidence_threshold <= 1.0) {
            return Err(ConfigError::Threshold(self.confidence_threshold));
        }
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(self.name_weight) || !ok(self.image_weight) || self.name_weight + self.image_weight <= 0.0 {
            return Err(ConfigError::Weights);
        }
        Ok(())
    }

    fn weighted_p_male(&self, name: &GenderEstimate, image: &GenderEstimate) -> f64 {
        (self.name_weight * name.p_male() + self.image_weight * image.p_male()) / (self.name_weight + self.image_weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub gender: Gender,
    pub probability: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

impl ImageScore {
    pub fn new(gender: Gender, probability: f64) -> Self {
        Self {
            gender,
            probability,
            weight: 1.0,
        }
    }

    pub fn weighted(gender: Gender, probability: f64, weight: f64) -> Self {
        Self {
            gender,
            probability,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("query is empty after normalization")]
    EmptyQuery,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no image scores")]
    NoScores,
    #[error("invalid image score: {0}")]
    InvalidScore(String),
    #[error("name estimate expected, got {0:?}")]
    NotANameEstimate(EstimateSource),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("image channel unavailable: {0}")]
pub struct ImageUnavailable(pub String);

/// Majority gender among the top-k neighbours of `name`.
///
/// When the index holds fewer than `k` records the vote runs over the
/// largest odd count that fits, so uniform votes still cannot split evenly.
pub fn infer_from_name(index: &NameIndex, name: &str, cfg: &FusionConfig) -> Result<GenderEstimate, InferenceError> {
    cfg.validate()?;
    if index.is_empty() {
        return Err(InferenceError::EmptyDataset);
    }
    let mut k = cfg.k.min(index.len());
    if k.is_multiple_of(2) {
        k -= 1;
    }
    let neighbors = index.top_k(name, k, ScriptChoice::Auto).map_err(|e| match e {
        IndexError::EmptyQuery => InferenceError::EmptyQuery,
        _ => InferenceError::EmptyDataset,
    })?;

    let uniform = || neighbors.iter().map(|_| 1.0).collect::<Vec<f64>>();
    let mut weights = if cfg.similarity_weighted_vote {
        neighbors.iter().map(|n| 1.0 - n.distance).collect()
    } else {
        uniform()
    };
    if weights.iter().sum::<f64>() <= 0.0 {
        weights = uniform();
    }
    let total: f64 = weights.iter().sum();
    let votes_for = |g: Gender| -> f64 {
        neighbors
            .iter()
            .zip(&weights)
            .filter(|(n, _)| n.record.gender() == g)
            .map(|(_, w)| w)
            .sum()
    };
    let (male, female) = (votes_for(Gender::Male), votes_for(Gender::Female));
    Ok(match male.partial_cmp(&female) {
        Some(std::cmp::Ordering::Greater) => GenderEstimate::new(Gender::Male, male / total, EstimateSource::Name),
        Some(std::cmp::Ordering::Less) => GenderEstimate::new(Gender::Female, female / total, EstimateSource::Name),
        _ => GenderEstimate {
            low_confidence: true,
            ..GenderEstimate::new(cfg.tie_label, 0.5, EstimateSource::Name)
        },
    })
}

/// Weight-normalized mean of per-image P(male).
pub fn aggregate_image_scores(scores: &[ImageScore], tie_label: Gender) -> Result<GenderEstimate, InferenceError> {
    if scores.is_empty() {
        return Err(InferenceError::NoScores);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for s in scores {
        if !(0.5..=1.0).contains(&s.probability) || !s.weight.is_finite() || s.weight < 0.0 {
            return Err(InferenceError::InvalidScore(format!("{s:?}")));
        }
        let p_male = match s.gender {
            Gender::Male => s.probability,
            Gender::Female => 1.0 - s.probability,
        };
        num += s.weight * p_male;
        den += s.weight;
    }
    if den <= 0.0 {
        return Err(InferenceError::InvalidScore("all weights are zero".into()));
    }
    Ok(GenderEstimate::from_p_male(num / den, EstimateSource::Image, tie_label))
}

/// Combines the name estimate with an image estimate supplied on demand.
///
/// 1. A name estimate at or above the confidence threshold is returned
///    as-is and `image` is never called.
/// 2. If both channels agree, the label is kept and the probability is the
///    weighted mean of the two confidences.
/// 3. If they disagree, the label follows the weighted mean of P(male).
///
/// An unavailable image channel falls back to the name estimate, marked
/// degraded.
pub fn fuse<F>(name_est: GenderEstimate, image: F, cfg: &FusionConfig) -> Result<GenderEstimate, InferenceError>
where
    F: FnOnce() -> Result<GenderEstimate, ImageUnavailable>,
{
    cfg.validate()?;
    if name_est.source != EstimateSource::Name {
        return Err(InferenceError::NotANameEstimate(name_est.source));
    }
    if name_est.probability >= cfg.confidence_threshold {
        return Ok(name_est.relabel(EstimateSource::Fused));
    }
    let image_est = match image() {
        Ok(est) => est,
        Err(ImageUnavailable(reason)) => {
            tracing::debug!(%reason, "image channel unavailable, using name estimate");
            return Ok(GenderEstimate {
                degraded: true,
                ..name_est.relabel(EstimateSource::Fused)
            });
        }
    };
    if image_est.gender == name_est.gender {
        let probability = (cfg.name_weight * name_est.probability + cfg.image_weight * image_est.probability)
            / (cfg.name_weight + cfg.image_weight);
        return Ok(GenderEstimate::new(name_est.gender, probability, EstimateSource::Fused));
    }
    Ok(GenderEstimate::from_p_male(
        cfg.weighted_p_male(&name_est, &image_est),
        EstimateSource::Fused,
        cfg.tie_label,
    ))
}

/// Like [`fuse`], but runs the image supplier on a worker thread and treats
/// expiry of `cfg.image_timeout_ms` as unavailability.
pub fn fuse_with_timeout<F>(name_est: GenderEstimate, image: F, cfg: &FusionConfig) -> Result<GenderEstimate, InferenceError>
where
    F: FnOnce() -> Result<GenderEstimate, ImageUnavailable> + Send + 'static,
{
    let Some(ms) = cfg.image_timeout_ms else {
        return fuse(name_est, image, cfg);
    };
    let deferred = move || {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let _ = tx.send(image());
        });
        match rx.recv_timeout(Duration::from_millis(ms)) {
            Ok(result) => result,
            Err(mpsc::RecvTimeoutError::Timeout) => Err(ImageUnavailable(format!("timed out after {ms} ms"))),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(ImageUnavailable("image worker failed".into())),
        }
    };
    fuse(name_est, deferred, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bundled_sample, NameRecord};
    use std::cell::Cell;

    fn name(g: Gender, p: f64) -> GenderEstimate {
        GenderEstimate::new(g, p, EstimateSource::Name)
    }

    fn image(g: Gender, p: f64) -> GenderEstimate {
        GenderEstimate::new(g, p, EstimateSource::Image)
    }

    fn cfg(nw: f64, iw: f64) -> FusionConfig {
        FusionConfig {
            name_weight: nw,
            image_weight: iw,
            ..FusionConfig::default()
        }
    }

    fn index_of(rows: &[(&str, &str, Gender)]) -> NameIndex {
        NameIndex::build(rows.iter().map(|(p, l, g)| NameRecord::new(p, l, *g).unwrap()).collect()).unwrap()
    }

    #[test]
    fn unanimous_vote() {
        use Gender::Male;
        let idx = index_of(&[("الف", "ala", Male), ("ب", "alb", Male), ("پ", "alc", Male), ("ت", "ald", Male), ("ث", "ale", Male)]);
        let est = infer_from_name(&idx, "al", &FusionConfig::default()).unwrap();
        assert_eq!((est.gender, est.probability, est.source), (Male, 1.0, EstimateSource::Name));
    }

    #[test]
    fn three_two_split() {
        use Gender::*;
        let idx = index_of(&[("الف", "ala", Male), ("ب", "alb", Male), ("پ", "alc", Male), ("ت", "ald", Female), ("ث", "ale", Female)]);
        let est = infer_from_name(&idx, "al", &FusionConfig::default()).unwrap();
        assert_eq!(est.gender, Male);
        assert!((est.probability - 0.6).abs() < 1e-12);
    }

    #[test]
    fn exact_hit_in_sample() {
        let idx = NameIndex::build(bundled_sample()).unwrap();
        let cfg = FusionConfig { k: 1, ..FusionConfig::default() };
        let est = infer_from_name(&idx, "سارا", &cfg).unwrap();
        assert_eq!((est.gender, est.probability), (Gender::Female, 1.0));
    }

    #[test]
    fn similarity_weighting() {
        use Gender::*;
        // male "sara" at distance 0 outweighs two females at distance 0.75
        let idx = index_of(&[("الف", "sara", Male), ("ب", "sxxx", Female), ("پ", "xxxa", Female)]);
        let mut c = FusionConfig { k: 3, ..FusionConfig::default() };
        assert_eq!(infer_from_name(&idx, "sara", &c).unwrap().gender, Female);
        c.similarity_weighted_vote = true;
        let est = infer_from_name(&idx, "sara", &c).unwrap();
        assert_eq!(est.gender, Male);
        assert!((est.probability - 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn similarity_weighting_uniform_fallback() {
        use Gender::*;
        let idx = index_of(&[("الف", "xyz", Male), ("ب", "uvw", Female), ("پ", "rst", Female)]);
        let c = FusionConfig { k: 3, similarity_weighted_vote: true, ..FusionConfig::default() };
        let est = infer_from_name(&idx, "abc", &c).unwrap();
        assert_eq!(est.gender, Female);
        assert!((est.probability - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_index_uses_odd_vote() {
        use Gender::*;
        let idx = index_of(&[("الف", "ab", Male), ("ب", "ac", Female)]);
        let est = infer_from_name(&idx, "ab", &FusionConfig::default()).unwrap();
        assert_eq!((est.gender, est.probability), (Male, 1.0));
    }

    #[test]
    fn empty_query() {
        let idx = NameIndex::build(bundled_sample()).unwrap();
        assert_eq!(infer_from_name(&idx, "  ", &FusionConfig::default()), Err(InferenceError::EmptyQuery));
    }

    #[test]
    fn aggregate_examples() {
        let est = aggregate_image_scores(&[ImageScore::new(Gender::Male, 0.9)], Gender::Female).unwrap();
        assert_eq!((est.gender, est.probability, est.source), (Gender::Male, 0.9, EstimateSource::Image));

        let tie = aggregate_image_scores(&[ImageScore::new(Gender::Male, 0.8), ImageScore::new(Gender::Female, 0.8)], Gender::Female).unwrap();
        assert_eq!((tie.gender, tie.low_confidence), (Gender::Female, true));
        assert!((tie.probability - 0.5).abs() < 1e-12);

        let est = aggregate_image_scores(
            &[ImageScore::weighted(Gender::Male, 0.9, 2.0), ImageScore::weighted(Gender::Female, 0.6, 1.0)],
            Gender::Female,
        )
        .unwrap();
        assert_eq!(est.gender, Gender::Male);
        assert!((est.probability - 2.2 / 3.0).abs() < 1e-12);

        assert_eq!(aggregate_image_scores(&[], Gender::Female), Err(InferenceError::NoScores));
        assert!(aggregate_image_scores(&[ImageScore::new(Gender::Male, 0.3)], Gender::Female).is_err());
    }

    #[test]
    fn threshold_bypass_skips_image() {
        let called = Cell::new(false);
        let est = fuse(
            name(Gender::Male, 0.9),
            || {
                called.set(true);
                Ok(image(Gender::Female, 0.99))
            },
            &FusionConfig::default(),
        )
        .unwrap();
        assert!(!called.get());
        assert_eq!((est.gender, est.probability, est.source), (Gender::Male, 0.9, EstimateSource::Fused));
    }

    #[test]
    fn agreement_branch() {
        let est = fuse(name(Gender::Male, 0.6), || Ok(image(Gender::Male, 0.8)), &cfg(0.6, 0.4)).unwrap();
        assert_eq!(est.gender, Gender::Male);
        assert!((est.probability - 0.68).abs() < 1e-9);
    }

    #[test]
    fn disagreement_branch() {
        let est = fuse(name(Gender::Male, 0.6), || Ok(image(Gender::Female, 0.7)), &cfg(0.5, 0.5)).unwrap();
        assert_eq!(est.gender, Gender::Female);
        assert!((est.probability - 0.55).abs() < 1e-9);
    }

    #[test]
    fn unavailable_image_degrades() {
        let est = fuse(name(Gender::Female, 0.6), || Err(ImageUnavailable("down".into())), &FusionConfig::default()).unwrap();
        assert!(est.degraded);
        assert_eq!((est.gender, est.probability, est.source), (Gender::Female, 0.6, EstimateSource::Fused));
    }

    #[test]
    fn timeout_degrades() {
        let c = FusionConfig { image_timeout_ms: Some(20), ..FusionConfig::default() };
        let est = fuse_with_timeout(
            name(Gender::Male, 0.6),
            || {
                std::thread::sleep(Duration::from_millis(500));
                Ok(image(Gender::Female, 0.99))
            },
            &c,
        )
        .unwrap();
        assert!(est.degraded);
        assert_eq!(est.gender, Gender::Male);
        let est = fuse_with_timeout(name(Gender::Male, 0.6), || Ok(image(Gender::Male, 0.8)), &cfg(0.6, 0.4)).unwrap();
        assert!(!est.degraded);
    }

    #[test]
    fn rejects_non_name_estimates_and_bad_configs() {
        assert!(fuse(image(Gender::Male, 0.6), || unreachable!(), &FusionConfig::default()).is_err());
        assert!(fuse(name(Gender::Male, 0.6), || unreachable!(), &cfg(0.0, 0.0)).is_err());
        assert_eq!(FusionConfig { k: 4, ..FusionConfig::default() }.validate(), Err(ConfigError::EvenK(4)));
        assert!(FusionConfig { confidence_threshold: 0.5, ..FusionConfig::default() }.validate().is_err());
    }

    #[test]
    fn estimate_serializes_without_unset_markers() {
        let json = serde_json::to_value(GenderEstimate::new(Gender::Female, 1.0, EstimateSource::Fused)).unwrap();
        assert_eq!(json, serde_json::json!({"gender": "female", "probability": 1.0, "source": "fused"}));
    }
}
