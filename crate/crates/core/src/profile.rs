//! Strategy profile files (`qrepath-profile v1`).
//!
//! A JSON object with `"format": "qrepath-profile v1"` and exactly one of
//!
//! - `gamma`: realization plan per player, indexed by sequence (empty sequence first);
//! - `behavior`: per player, per information set, action probabilities;
//! - `mixed`: per player, probabilities over reduced pure strategies.
//!
//! Optional fields: `anchor` (a realization plan), `t`, and `nu` (multipliers per player and
//! information set). Players, information sets and sequences follow the order of the compiled
//! game, as printed by `qrepath convert`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{realization_of, Behavior, MixedProfile, RealizationProfile, SequenceSpace};

pub const PROFILE_FORMAT_TAG: &str = "qrepath-profile v1";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<Behavior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<Vec<f64>>>,
}

impl ProfileFile {
    pub fn parse(text: &str) -> Result<Self> {
        let p: ProfileFile = serde_json::from_str(text)?;
        if p.format != PROFILE_FORMAT_TAG {
            return Err(Error::Config(format!(
                "expected format {PROFILE_FORMAT_TAG:?}, found {:?}",
                p.format
            )));
        }
        Ok(p)
    }

    pub fn from_gamma(gamma: &RealizationProfile) -> Self {
        ProfileFile {
            format: PROFILE_FORMAT_TAG.into(),
            gamma: Some(gamma.plans.clone()),
            ..Default::default()
        }
    }

    /// The realization plan described by whichever of `gamma`, `behavior` or `mixed` is set.
    pub fn realization(&self, space: &SequenceSpace) -> Result<RealizationProfile> {
        let given = [self.gamma.is_some(), self.behavior.is_some(), self.mixed.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::Config(
                "profile needs exactly one of gamma, behavior, mixed".into(),
            ));
        }
        let gamma = if let Some(plans) = &self.gamma {
            RealizationProfile { plans: plans.clone() }
        } else if let Some(behavior) = &self.behavior {
            check_behavior(space, behavior)?;
            RealizationProfile::from_behavior(space, behavior)
        } else {
            realization_of(
                space,
                &MixedProfile {
                    probs: self.mixed.clone().expect("checked above"),
                },
            )?
        };
        gamma.validate(space, 1e-9)?;
        Ok(gamma)
    }

    pub fn anchor(&self, space: &SequenceSpace) -> Result<Option<RealizationProfile>> {
        self.anchor
            .as_ref()
            .map(|plans| {
                let a = RealizationProfile { plans: plans.clone() };
                a.validate(space, 1e-9)?;
                Ok(a)
            })
            .transpose()
    }
}

fn check_behavior(space: &SequenceSpace, behavior: &Behavior) -> Result<()> {
    let shape_ok = behavior.len() == space.num_players()
        && behavior.iter().zip(space.players()).all(|(b, p)| {
            b.len() == p.infosets.len()
                && b.iter().zip(&p.infosets).all(|(d, info)| d.len() == info.actions.len())
        });
    if !shape_ok {
        return Err(Error::DimensionMismatch(
            "behavior profile does not match the game's information sets".into(),
        ));
    }
    for d in behavior.iter().flatten() {
        let total: f64 = d.iter().sum();
        if d.iter().any(|&v| !(v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("behavioral distribution {d:?} is not a probability vector")));
        }
    }
    Ok(())
}
