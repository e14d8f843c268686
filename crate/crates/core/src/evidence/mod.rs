//! Statistical evidence and the claims–arguments–evidence graph.

mod cae;
mod campaign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cae::{default_cae_skeleton, CaeGraph, CaeNode, EvidencePayload, NodeKind};
pub use campaign::{
    aggregate, campaign_threads, run_campaign, run_campaign_with_threads, CampaignResult, EpisodeSummary, OutcomeCounts,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardGroup {
    NuclearRadiological,
    Conventional,
    Physical,
    CyberSecurity,
}

impl HazardGroup {
    pub const ALL: [HazardGroup; 4] = [
        HazardGroup::NuclearRadiological,
        HazardGroup::Conventional,
        HazardGroup::Physical,
        HazardGroup::CyberSecurity,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlarpBand {
    #[serde(rename = "below_2")]
    Below2,
    #[serde(rename = "band_2_to_20")]
    Band2To20,
    #[serde(rename = "above_20")]
    Above20,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsequenceProfile {
    pub dose_msv: f64,
    pub band: AlarpBand,
}

impl ConsequenceProfile {
    pub fn new(dose_msv: f64) -> Result<Self, EvidenceError> {
        Ok(ConsequenceProfile {
            dose_msv,
            band: alarp_band(dose_msv)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    #[error("dose must be a non-negative number of mSv, got {0}")]
    NegativeDose(f64),
    #[error("no node `{0}` in the graph")]
    NodeNotFound(String),
    #[error("node `{0}` is not an evidence node")]
    NotEvidenceNode(String),
    #[error("node `{node}` already holds evidence with hash {existing}; refusing {new} without force")]
    HashConflict {
        node: String,
        existing: String,
        new: String,
    },
    #[error("malformed graph: {0}")]
    InvalidGraph(String),
    #[error("cannot read evidence `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("episodes must be at least 1")]
    NoEpisodes,
    #[error(transparent)]
    Sim(#[from] crate::pond_sim::SimError),
}

/// Both band edges belong to the middle band.
pub fn alarp_band(dose_msv: f64) -> Result<AlarpBand, EvidenceError> {
    if dose_msv.is_nan() || dose_msv < 0.0 {
        return Err(EvidenceError::NegativeDose(dose_msv));
    }
    Ok(if dose_msv < 2.0 {
        AlarpBand::Below2
    } else if dose_msv <= 20.0 {
        AlarpBand::Band2To20
    } else {
        AlarpBand::Above20
    })
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n and n > 0");
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let low = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}
