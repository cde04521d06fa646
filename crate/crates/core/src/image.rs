//! Pluggable per-image gender scorers feeding [`aggregate_image_scores`].
//!
//! The remote adapter posts `{"images": [...]}` to a single endpoint and
//! expects `{"scores": [{"gender": "male", "probability": 0.9}, ...]}`, one
//! entry per image, in request order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::Gender;
use crate::inference::{aggregate_image_scores, GenderEstimate, ImageScore, ImageUnavailable};

pub trait ImageScorer: Send + Sync {
    fn score(&self, image_refs: &[String]) -> Result<Vec<ImageScore>, ImageUnavailable>;
}

/// Returns the same score for every image.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub ImageScore);

impl ImageScorer for ConstantScorer {
    fn score(&self, image_refs: &[String]) -> Result<Vec<ImageScore>, ImageUnavailable> {
        Ok(image_refs.iter().map(|_| self.0).collect())
    }
}

/// Always unavailable; the default when no scorer is configured.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoScorer;

impl ImageScorer for NoScorer {
    fn score(&self, _image_refs: &[String]) -> Result<Vec<ImageScore>, ImageUnavailable> {
        Err(ImageUnavailable("no image scorer configured".into()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub images: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<RemoteScore>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RemoteScore {
    pub gender: Gender,
    pub probability: f64,
}

pub struct RemoteScorer {
    url: String,
    client: reqwest::blocking::Client,
}

impl RemoteScorer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, ImageUnavailable> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ImageUnavailable(e.to_string()))?;
        Ok(Self {
            url: url.into(),
            client,
        })
    }
}

impl ImageScorer for RemoteScorer {
    fn score(&self, image_refs: &[String]) -> Result<Vec<ImageScore>, ImageUnavailable> {
        let unavailable = |e: reqwest::Error| ImageUnavailable(e.to_string());
        let resp = self
            .client
            .post(&self.url)
            .json(&ScoreRequest {
                images: image_refs.to_vec(),
            })
            .send()
            .map_err(unavailable)?;
        if !resp.status().is_success() {
            return Err(ImageUnavailable(format!("scorer returned {}", resp.status())));
        }
        let body: ScoreResponse = resp.json().map_err(unavailable)?;
        if body.scores.len() != image_refs.len() {
            return Err(ImageUnavailable(format!(
                "scorer returned {} scores for {} images",
                body.scores.len(),
                image_refs.len()
            )));
        }
        Ok(body
            .scores
            .into_iter()
            .map(|s| ImageScore::new(s.gender, s.probability))
            .collect())
    }
}

/// Scores `image_refs` and aggregates them into one image estimate.
pub fn image_estimate<S: ImageScorer + ?Sized>(
    scorer: &S,
    image_refs: &[String],
    tie_label: Gender,
) -> Result<GenderEstimate, ImageUnavailable> {
    if image_refs.is_empty() {
        return Err(ImageUnavailable("no images supplied".into()));
    }
    let scores = scorer.score(image_refs)?;
    aggregate_image_scores(&scores, tie_label).map_err(|e| ImageUnavailable(e.to_string()))
}
