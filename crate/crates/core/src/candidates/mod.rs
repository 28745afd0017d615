//! Candidate confidence functions: normalized statistics of a labelset
//! distribution that score 0 on the uniform distribution and 1 on any point
//! mass.
//!
//! Each candidate implements [`ConfidenceFunction`] and is looked up by its
//! two-letter tag through a [`CandidateRegistry`].

mod functions;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelset::LabelsetDistribution;

pub use functions::{
    ChiSquared, CollisionEntropy, GiniImpurity, HighProbability, MinEntropy, ShannonEntropy, TopGap,
};

/// Slack tolerated outside `[0, 1]` before a score is rejected.
pub const SCORE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CandidateKind {
    HP,
    TG,
    SE,
    CE,
    ME,
    GI,
    CS,
}

impl CandidateKind {
    pub const ALL: [CandidateKind; 7] = [
        CandidateKind::HP,
        CandidateKind::TG,
        CandidateKind::SE,
        CandidateKind::CE,
        CandidateKind::ME,
        CandidateKind::GI,
        CandidateKind::CS,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            CandidateKind::HP => "HP",
            CandidateKind::TG => "TG",
            CandidateKind::SE => "SE",
            CandidateKind::CE => "CE",
            CandidateKind::ME => "ME",
            CandidateKind::GI => "GI",
            CandidateKind::CS => "CS",
        }
    }

    pub fn position(&self) -> usize {
        Self::ALL.iter().position(|k| k == self).expect("closed enumeration")
    }
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CandidateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        CandidateKind::ALL
            .into_iter()
            .find(|k| k.tag() == upper)
            .ok_or_else(|| Error::Unknown { kind: "candidate", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceScore {
    pub value: f64,
    pub kind: CandidateKind,
}

/// A candidate expected-accuracy function over labelset distributions.
pub trait ConfidenceFunction: Send + Sync {
    fn kind(&self) -> CandidateKind;

    /// The statistic before normalization (natural log for entropies).
    fn raw(&self, d: &LabelsetDistribution) -> f64;

    /// Normalized value; may stray from `[0, 1]` by rounding error.
    fn normalized(&self, d: &LabelsetDistribution) -> f64;

    fn name(&self) -> &'static str {
        self.kind().tag()
    }

    fn score(&self, d: &LabelsetDistribution) -> Result<ConfidenceScore> {
        let v = self.normalized(d);
        if !(-SCORE_SLACK..=1.0 + SCORE_SLACK).contains(&v) || v.is_nan() {
            return Err(Error::numerical(format!("{} score {v} outside [0, 1]", self.name())));
        }
        Ok(ConfidenceScore { value: v.clamp(0.0, 1.0), kind: self.kind() })
    }
}

/// Name-indexed collection of confidence functions.
pub struct CandidateRegistry {
    functions: BTreeMap<CandidateKind, Box<dyn ConfidenceFunction>>,
}

impl CandidateRegistry {
    pub fn empty() -> Self {
        Self { functions: BTreeMap::new() }
    }

    pub fn register(&mut self, f: Box<dyn ConfidenceFunction>) {
        self.functions.insert(f.kind(), f);
    }

    pub fn get(&self, kind: CandidateKind) -> Option<&dyn ConfidenceFunction> {
        self.functions.get(&kind).map(|f| f.as_ref())
    }

    pub fn by_name(&self, name: &str) -> Result<&dyn ConfidenceFunction> {
        let kind: CandidateKind = name.parse()?;
        self.get(kind).ok_or_else(|| Error::Unknown { kind: "candidate", name: name.to_string() })
    }

    pub fn kinds(&self) -> impl Iterator<Item = CandidateKind> + '_ {
        self.functions.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ConfidenceFunction> {
        self.functions.values().map(|f| f.as_ref())
    }
}

impl Default for CandidateRegistry {
    /// All seven candidates.
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(HighProbability));
        r.register(Box::new(TopGap));
        r.register(Box::new(ShannonEntropy));
        r.register(Box::new(CollisionEntropy));
        r.register(Box::new(MinEntropy));
        r.register(Box::new(GiniImpurity));
        r.register(Box::new(ChiSquared));
        r
    }
}

fn builtin(kind: CandidateKind) -> &'static dyn ConfidenceFunction {
    match kind {
        CandidateKind::HP => &HighProbability,
        CandidateKind::TG => &TopGap,
        CandidateKind::SE => &ShannonEntropy,
        CandidateKind::CE => &CollisionEntropy,
        CandidateKind::ME => &MinEntropy,
        CandidateKind::GI => &GiniImpurity,
        CandidateKind::CS => &ChiSquared,
    }
}

pub fn score(d: &LabelsetDistribution, kind: CandidateKind) -> Result<ConfidenceScore> {
    builtin(kind).score(d)
}

pub fn raw_statistic(d: &LabelsetDistribution, kind: CandidateKind) -> f64 {
    builtin(kind).raw(d)
}

pub fn c_hp(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    HighProbability.score(d)
}

pub fn c_tg(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    TopGap.score(d)
}

pub fn c_se(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    ShannonEntropy.score(d)
}

pub fn c_ce(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    CollisionEntropy.score(d)
}

pub fn c_me(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    MinEntropy.score(d)
}

pub fn c_gi(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    GiniImpurity.score(d)
}

pub fn c_cs(d: &LabelsetDistribution) -> Result<ConfidenceScore> {
    ChiSquared.score(d)
}

/// Scores for every kind, in `CandidateKind::ALL` order.
pub fn score_all(d: &LabelsetDistribution) -> Result<BTreeMap<CandidateKind, ConfidenceScore>> {
    CandidateKind::ALL.iter().map(|&k| Ok((k, score(d, k)?))).collect()
}

/// Plain array form of [`score_all`], indexed by [`CandidateKind::position`].
pub fn score_vector(d: &LabelsetDistribution) -> Result<[f64; 7]> {
    let mut out = [0.0; 7];
    for (slot, kind) in out.iter_mut().zip(CandidateKind::ALL) {
        *slot = score(d, kind)?.value;
    }
    Ok(out)
}
