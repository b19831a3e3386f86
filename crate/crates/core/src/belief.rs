//! Discrete latent-stance model behind the synthetic agent.
//!
//! An agent holds a prior over `K` stances. Evidence about the meeting is
//! summarised as a token with a per-stance likelihood, and each peer label
//! observed in the previous round contributes a per-stance likelihood factor.
//! Given a stance, the agent's own label is drawn from a fixed emission row,
//! independent of the evidence and the peers.
//!
//! The posterior over stances is
//!
//! ```text
//! p(stance | e, peers) ∝ prior[stance] · evidence[e][stance] · Π_j peer[stance][label_j]
//! ```
//!
//! and the label distribution is the emission mixture under that posterior.
//! [`posterior`] works in the log domain; [`posterior_linear`] and
//! [`marginal_direct`] are the plain-arithmetic routes used to cross-check it.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{label_counts, AgentResponse, PolicyLabel};

/// Row sums must be within this of one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("invalid belief parameters: {0}")]
    InvalidParameters(String),
    #[error("unknown evidence token {0:?}")]
    UnknownEvidence(String),
    #[error("every stance assigns zero probability to the observed evidence and peer labels")]
    DegenerateEvidence,
    #[error("cannot read parameter file {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Ordered, uniquely named stance set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StanceSpace(Vec<String>);

impl StanceSpace {
    pub fn new(stances: Vec<String>) -> Result<Self, BeliefError> {
        if stances.is_empty() {
            return Err(BeliefError::InvalidParameters("stance space is empty".into()));
        }
        for (i, s) in stances.iter().enumerate() {
            if stances[..i].contains(s) {
                return Err(BeliefError::InvalidParameters(format!("duplicate stance {s:?}")));
            }
        }
        Ok(Self(stances))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for StanceSpace {
    type Error = BeliefError;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<StanceSpace> for Vec<String> {
    fn from(s: StanceSpace) -> Self {
        s.0
    }
}

/// Discrete summary of the meeting inputs for the synthetic world.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceToken(pub String);

impl EvidenceToken {
    pub fn new(token: impl Into<String>) -> Self {
        Self(token.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for EvidenceToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// On-disk shape; `peer_likelihood` defaults to `emission`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawParameters {
    stances: StanceSpace,
    prior: Vec<f64>,
    evidence: BTreeMap<String, Vec<f64>>,
    emission: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    peer_likelihood: Option<Vec<[f64; 3]>>,
}

/// Validated tables for one agent. Label columns are in
/// (Raise, Hold, Lower) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters", into = "RawParameters")]
pub struct BeliefParameters {
    stances: StanceSpace,
    prior: Vec<f64>,
    evidence: BTreeMap<String, Vec<f64>>,
    emission: Vec<[f64; 3]>,
    peer_likelihood: Vec<[f64; 3]>,
}

impl TryFrom<RawParameters> for BeliefParameters {
    type Error = BeliefError;

    fn try_from(raw: RawParameters) -> Result<Self, Self::Error> {
        let peer = raw.peer_likelihood.unwrap_or_else(|| raw.emission.clone());
        BeliefParameters::new(raw.stances, raw.prior, raw.evidence, raw.emission, Some(peer))
    }
}

impl From<BeliefParameters> for RawParameters {
    fn from(p: BeliefParameters) -> Self {
        RawParameters {
            stances: p.stances,
            prior: p.prior,
            evidence: p.evidence,
            emission: p.emission,
            peer_likelihood: Some(p.peer_likelihood),
        }
    }
}

fn check_entries(what: &str, values: &[f64]) -> Result<(), BeliefError> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(BeliefError::InvalidParameters(format!("{what} has invalid entry {bad}")));
    }
    Ok(())
}

fn check_sums_to_one(what: &str, values: &[f64]) -> Result<(), BeliefError> {
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(BeliefError::InvalidParameters(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl BeliefParameters {
    /// Validates and builds a parameter set. `peer_likelihood = None` makes
    /// the agent model its peers with its own emission table.
    pub fn new(
        stances: StanceSpace,
        prior: Vec<f64>,
        evidence: BTreeMap<String, Vec<f64>>,
        emission: Vec<[f64; 3]>,
        peer_likelihood: Option<Vec<[f64; 3]>>,
    ) -> Result<Self, BeliefError> {
        let k = stances.len();
        let peer_likelihood = peer_likelihood.unwrap_or_else(|| emission.clone());
        if prior.len() != k {
            return Err(BeliefError::InvalidParameters(format!("prior has {} entries for K={k}", prior.len())));
        }
        check_entries("prior", &prior)?;
        check_sums_to_one("prior", &prior)?;
        if emission.len() != k || peer_likelihood.len() != k {
            return Err(BeliefError::InvalidParameters(format!(
                "emission/peer tables need {k} rows, got {}/{}",
                emission.len(),
                peer_likelihood.len()
            )));
        }
        for (i, row) in emission.iter().enumerate() {
            check_entries(&format!("emission row {i}"), row)?;
            check_sums_to_one(&format!("emission row {i}"), row)?;
        }
        for (i, row) in peer_likelihood.iter().enumerate() {
            check_entries(&format!("peer_likelihood row {i}"), row)?;
        }
        if evidence.is_empty() {
            return Err(BeliefError::InvalidParameters("no evidence tokens".into()));
        }
        for (token, lik) in &evidence {
            if lik.len() != k {
                return Err(BeliefError::InvalidParameters(format!(
                    "evidence {token:?} has {} entries for K={k}",
                    lik.len()
                )));
            }
            check_entries(&format!("evidence {token:?}"), lik)?;
            if lik.iter().all(|v| *v == 0.0) {
                return Err(BeliefError::InvalidParameters(format!("evidence {token:?} is zero for every stance")));
            }
        }
        Ok(Self {
            stances,
            prior,
            evidence,
            emission,
            peer_likelihood,
        })
    }

    pub fn from_json(json: &str) -> Result<Self, BeliefError> {
        serde_json::from_str(json).map_err(|e| BeliefError::InvalidParameters(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BeliefError> {
        let text = std::fs::read_to_string(path).map_err(|e| BeliefError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn k(&self) -> usize {
        self.stances.len()
    }

    pub fn stances(&self) -> &StanceSpace {
        &self.stances
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn emission(&self) -> &[[f64; 3]] {
        &self.emission
    }

    pub fn peer_likelihood(&self) -> &[[f64; 3]] {
        &self.peer_likelihood
    }

    pub fn evidence_tokens(&self) -> impl Iterator<Item = &str> {
        self.evidence.keys().map(String::as_str)
    }

    pub fn has_evidence(&self, token: &EvidenceToken) -> bool {
        self.evidence.contains_key(token.as_str())
    }

    pub fn evidence_likelihood(&self, token: &EvidenceToken) -> Result<&[f64], BeliefError> {
        self.evidence
            .get(token.as_str())
            .map(Vec::as_slice)
            .ok_or_else(|| BeliefError::UnknownEvidence(token.0.clone()))
    }

    /// Replaces one evidence entry; used to probe monotonicity.
    pub fn with_evidence(mut self, token: &EvidenceToken, likelihood: Vec<f64>) -> Result<Self, BeliefError> {
        self.evidence.insert(token.0.clone(), likelihood);
        Self::new(self.stances, self.prior, self.evidence, self.emission, Some(self.peer_likelihood))
    }
}

/// Posterior over stances, computed with log-domain products and
/// max-subtraction before exponentiation.
///
/// Peers enter through their label counts, and each label's log-likelihood
/// column is shifted by its maximum over stances. Both are constant in the
/// stance, so the result is unchanged mathematically, but it makes the output
/// bit-for-bit independent of peer order, and exactly equal to the no-peer
/// posterior when every stance shares one peer row.
pub fn posterior(
    params: &BeliefParameters,
    evidence: &EvidenceToken,
    peer_labels: &[PolicyLabel],
) -> Result<Vec<f64>, BeliefError> {
    let lik = params.evidence_likelihood(evidence)?;
    let counts = label_counts(peer_labels);
    let mut log_weights: Vec<f64> = (0..params.k()).map(|s| params.prior[s].ln() + lik[s].ln()).collect();
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let column: Vec<f64> = params.peer_likelihood.iter().map(|row| row[c].ln()).collect();
        let top = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(BeliefError::DegenerateEvidence);
        }
        for (w, l) in log_weights.iter_mut().zip(&column) {
            *w += count as f64 * (l - top);
        }
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(BeliefError::DegenerateEvidence);
    }
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Same posterior by direct multiplication. Underflows for extreme tables;
/// kept as a cross-check of [`posterior`].
pub fn posterior_linear(
    params: &BeliefParameters,
    evidence: &EvidenceToken,
    peer_labels: &[PolicyLabel],
) -> Result<Vec<f64>, BeliefError> {
    let lik = params.evidence_likelihood(evidence)?;
    let weights: Vec<f64> = (0..params.k())
        .map(|s| {
            peer_labels
                .iter()
                .fold(params.prior[s] * lik[s], |acc, l| acc * params.peer_likelihood[s][l.index()])
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(BeliefError::DegenerateEvidence);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Label distribution (Raise, Hold, Lower): the emission rows mixed by the
/// stance posterior.
pub fn output_distribution(
    params: &BeliefParameters,
    evidence: &EvidenceToken,
    peer_labels: &[PolicyLabel],
) -> Result<[f64; 3], BeliefError> {
    let post = posterior(params, evidence, peer_labels)?;
    let mut out = [0.0; 3];
    for (w, row) in post.iter().zip(&params.emission) {
        for (o, e) in out.iter_mut().zip(row) {
            *o += w * e;
        }
    }
    Ok(out)
}

/// Label distribution obtained by enumerating the unnormalised joint over
/// (label, stance) and normalising once at the end. Never forms the
/// posterior, so it is independent of [`output_distribution`].
pub fn marginal_direct(
    params: &BeliefParameters,
    evidence: &EvidenceToken,
    peer_labels: &[PolicyLabel],
) -> Result<[f64; 3], BeliefError> {
    let lik = params.evidence_likelihood(evidence)?;
    let mut joint = [0.0; 3];
    for (z, slot) in joint.iter_mut().enumerate() {
        let stances = params.prior.iter().zip(lik).zip(&params.emission).zip(&params.peer_likelihood);
        for (((prior, l), emission), peer) in stances {
            let mut p = prior * l * emission[z];
            for label in peer_labels {
                p *= peer[label.index()];
            }
            *slot += p;
        }
    }
    // Each stance's emission row sums to one, so this is also Σ_stance of the
    // unnormalised posterior weights.
    let total: f64 = joint.iter().sum();
    if total == 0.0 {
        return Err(BeliefError::DegenerateEvidence);
    }
    Ok(joint.map(|p| p / total))
}

/// Inverse-CDF draw from a 3-way distribution.
pub fn draw_label<R: Rng + ?Sized>(distribution: &[f64; 3], rng: &mut R) -> PolicyLabel {
    let u: f64 = rng.gen::<f64>() * distribution.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in distribution.iter().enumerate() {
        acc += p;
        if u < acc {
            return PolicyLabel::ALL[i];
        }
    }
    // u landed on the rounding gap at the top; take the last label with mass
    let last = distribution.iter().rposition(|p| *p > 0.0).unwrap_or(2);
    PolicyLabel::ALL[last]
}

/// Draws one synthetic response. The justification names the most probable
/// stance under the posterior.
pub fn sample_label(
    params: &BeliefParameters,
    evidence: &EvidenceToken,
    peer_labels: &[PolicyLabel],
    seed: u64,
) -> Result<AgentResponse, BeliefError> {
    let post = posterior(params, evidence, peer_labels)?;
    let dist = output_distribution(params, evidence, peer_labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = draw_label(&dist, &mut rng);
    let (best, p) = post
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if *p > acc.1 { (i, *p) } else { acc });
    let justification = format!(
        "Synthetic agent: most probable stance {} (posterior {:.3}) given evidence {}.",
        params.stances.names()[best],
        p,
        evidence
    );
    Ok(AgentResponse::new(label, justification))
}
