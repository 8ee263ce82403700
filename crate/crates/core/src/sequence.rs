//! Sequence form of a perfect-recall game.
//!
//! Every player's sequences are numbered with `0` for the empty sequence, followed by the
//! extensions of each information set in information-set order, so the extensions of infoset
//! `j` occupy a contiguous block starting at [`InfosetSeqs::first_seq`]. Chance is folded into
//! the payoff coefficients at compile time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameTree, NodeId, NodeKind};

/// Label used for the empty sequence.
pub const EMPTY_SEQ: &str = "∅";

const FLOW_TOL: f64 = 1e-9;
const STRATEGY_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfosetSeqs {
    pub name: String,
    pub actions: Vec<String>,
    /// Sequence leading to this information set.
    pub parent_seq: usize,
    /// Sequence of the first action; action `a` extends to `first_seq + a`.
    pub first_seq: usize,
}

impl InfosetSeqs {
    pub fn extensions(&self) -> std::ops::Range<usize> {
        self.first_seq..self.first_seq + self.actions.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerSequences {
    pub name: String,
    pub labels: Vec<String>,
    /// `(infoset, action)` producing each sequence; `None` for the empty sequence.
    pub origin: Vec<Option<(usize, usize)>>,
    pub infosets: Vec<InfosetSeqs>,
    /// Information sets directly reached by each sequence.
    pub downstream: Vec<Vec<usize>>,
}

impl PlayerSequences {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn extension(&self, infoset: usize, action: usize) -> usize {
        self.infosets[infoset].first_seq + action
    }

    /// Parent sequence of sequence `seq` (the empty sequence is its own parent).
    pub fn parent(&self, seq: usize) -> usize {
        match self.origin[seq] {
            Some((j, _)) => self.infosets[j].parent_seq,
            None => 0,
        }
    }
}

/// Terminal payoff coefficient: one sequence per player and the chance-weighted payoff vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub seqs: Vec<usize>,
    pub payoff: Vec<f64>,
}

/// A reduced pure strategy: actions at the information sets the player can reach.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedStrategy {
    pub choices: Vec<Option<usize>>,
    /// Sequences `s` with `s(ϖ) = 1`, ascending, always starting with the empty sequence.
    pub sequences: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpace {
    players: Vec<PlayerSequences>,
    coefficients: Vec<Coefficient>,
}

/// Realization plan per player, indexed by sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationProfile {
    pub plans: Vec<Vec<f64>>,
}

/// Mixed strategy per player over its reduced pure strategies, in
/// [`SequenceSpace::reduced_strategies`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    pub probs: Vec<Vec<f64>>,
}

/// Behavioral strategy: per player, per information set, a distribution over actions.
pub type Behavior = Vec<Vec<Vec<f64>>>;

/// Compile a perfect-recall game into its sequence form.
pub fn compile(game: &GameTree) -> Result<SequenceSpace> {
    game.ensure_perfect_recall()?;
    let n = game.num_players();
    let mut players: Vec<PlayerSequences> = game
        .players()
        .iter()
        .map(|name| PlayerSequences {
            name: name.clone(),
            labels: vec![EMPTY_SEQ.to_string()],
            origin: vec![None],
            infosets: Vec::new(),
            downstream: vec![Vec::new()],
        })
        .collect();
    let mut coeffs: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();

    let mut stack: Vec<(NodeId, Vec<usize>, f64)> = vec![(game.root(), vec![0; n], 1.0)];
    while let Some((id, seqs, prob)) = stack.pop() {
        match &game.node(id).kind {
            NodeKind::Terminal { payoffs } => {
                let entry = coeffs.entry(seqs).or_insert_with(|| vec![0.0; n]);
                for (e, p) in entry.iter_mut().zip(payoffs) {
                    *e += prob * p;
                }
            }
            NodeKind::Chance { probs, children, .. } => {
                for (&child, &p) in children.iter().zip(probs).rev() {
                    stack.push((child, seqs.clone(), prob * p));
                }
            }
            NodeKind::Decision {
                player,
                infoset,
                children,
            } => {
                let ps = &mut players[*player];
                if *infoset == ps.infosets.len() {
                    let info = &game.infosets(*player)[*infoset];
                    let parent_seq = seqs[*player];
                    let first_seq = ps.labels.len();
                    for (a, label) in info.actions.iter().enumerate() {
                        let full = if parent_seq == 0 {
                            label.clone()
                        } else {
                            format!("{}/{}", ps.labels[parent_seq], label)
                        };
                        ps.labels.push(full);
                        ps.origin.push(Some((*infoset, a)));
                        ps.downstream.push(Vec::new());
                    }
                    ps.downstream[parent_seq].push(*infoset);
                    ps.infosets.push(InfosetSeqs {
                        name: info.name.clone(),
                        actions: info.actions.clone(),
                        parent_seq,
                        first_seq,
                    });
                }
                let first = ps.infosets[*infoset].first_seq;
                for (a, &child) in children.iter().enumerate().rev() {
                    let mut next = seqs.clone();
                    next[*player] = first + a;
                    stack.push((child, next, prob));
                }
            }
        }
    }

    let coefficients = coeffs
        .into_iter()
        .map(|(seqs, payoff)| Coefficient { seqs, payoff })
        .collect();
    Ok(SequenceSpace {
        players,
        coefficients,
    })
}

impl SequenceSpace {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn player(&self, i: usize) -> &PlayerSequences {
        &self.players[i]
    }

    pub fn players(&self) -> &[PlayerSequences] {
        &self.players
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    /// Number of non-empty sequences over all players.
    pub fn n0(&self) -> usize {
        self.players.iter().map(|p| p.len() - 1).sum()
    }

    /// Number of information sets over all players.
    pub fn m0(&self) -> usize {
        self.players.iter().map(|p| p.infosets.len()).sum()
    }

    /// Offset of player `i`'s non-empty sequences in a stacked vector of length `n0`;
    /// sequence `k >= 1` sits at `action_offset(i) + k - 1`.
    pub fn action_offset(&self, i: usize) -> usize {
        self.players[..i].iter().map(|p| p.len() - 1).sum()
    }

    /// Offset of player `i`'s information sets in a stacked vector of length `m0`.
    pub fn infoset_offset(&self, i: usize) -> usize {
        self.players[..i].iter().map(|p| p.infosets.len()).sum()
    }

    /// Number of reduced pure strategies of player `i`.
    pub fn count_reduced_strategies(&self, i: usize) -> u128 {
        fn count(p: &PlayerSequences, seq: usize) -> u128 {
            p.downstream[seq]
                .iter()
                .map(|&j| p.infosets[j].extensions().map(|s| count(p, s)).sum::<u128>())
                .product()
        }
        count(&self.players[i], 0)
    }

    /// Enumerate player `i`'s reduced pure strategies in lexicographic order of
    /// (infoset, action).
    pub fn reduced_strategies(&self, i: usize) -> Result<Vec<ReducedStrategy>> {
        let count = self.count_reduced_strategies(i);
        if count > STRATEGY_CAP {
            return Err(Error::CapExceeded {
                what: "reduced strategy set",
                count,
                cap: STRATEGY_CAP,
            });
        }
        let p = &self.players[i];
        let mut out = Vec::with_capacity(count as usize);
        let mut active = vec![false; p.len()];
        active[0] = true;
        let mut choices = vec![None; p.infosets.len()];
        fn rec(
            p: &PlayerSequences,
            j: usize,
            active: &mut Vec<bool>,
            choices: &mut Vec<Option<usize>>,
            out: &mut Vec<ReducedStrategy>,
        ) {
            if j == p.infosets.len() {
                let sequences = (0..p.len()).filter(|&s| active[s]).collect();
                out.push(ReducedStrategy {
                    choices: choices.clone(),
                    sequences,
                });
                return;
            }
            let info = &p.infosets[j];
            if !active[info.parent_seq] {
                rec(p, j + 1, active, choices, out);
                return;
            }
            for a in 0..info.actions.len() {
                active[info.first_seq + a] = true;
                choices[j] = Some(a);
                rec(p, j + 1, active, choices, out);
                active[info.first_seq + a] = false;
            }
            choices[j] = None;
        }
        rec(p, 0, &mut active, &mut choices, &mut out);
        Ok(out)
    }

    /// Display label of a reduced strategy, e.g. `{L+r}`.
    pub fn strategy_label(&self, i: usize, s: &ReducedStrategy) -> String {
        let p = &self.players[i];
        let parts: Vec<&str> = s
            .choices
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|a| p.infosets[j].actions[a].as_str()))
            .collect();
        format!("{{{}}}", parts.join("+"))
    }

    fn check_dims(&self, gamma: &RealizationProfile) -> Result<()> {
        if gamma.plans.len() != self.players.len()
            || gamma.plans.iter().zip(&self.players).any(|(g, p)| g.len() != p.len())
        {
            return Err(Error::DimensionMismatch(format!(
                "realization profile has shape {:?}, expected {:?}",
                gamma.plans.iter().map(Vec::len).collect::<Vec<_>>(),
                self.players.iter().map(PlayerSequences::len).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// Product of the opponents' realization weights for a coefficient.
    fn opponents_weight(gamma: &RealizationProfile, c: &Coefficient, i: usize) -> f64 {
        c.seqs
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != i)
            .map(|(q, &s)| gamma.plans[q][s])
            .product()
    }
}

impl RealizationProfile {
    /// The plan of the behavioral profile choosing uniformly at every information set.
    pub fn uniform(space: &SequenceSpace) -> Self {
        let behavior: Behavior = space
            .players
            .iter()
            .map(|p| {
                p.infosets
                    .iter()
                    .map(|info| vec![1.0 / info.actions.len() as f64; info.actions.len()])
                    .collect()
            })
            .collect();
        Self::from_behavior(space, &behavior)
    }

    /// Compose a realization plan from behavioral probabilities top-down.
    pub fn from_behavior(space: &SequenceSpace, behavior: &Behavior) -> Self {
        let plans = space
            .players
            .iter()
            .zip(behavior)
            .map(|(p, b)| {
                let mut plan = vec![0.0; p.len()];
                plan[0] = 1.0;
                for (j, info) in p.infosets.iter().enumerate() {
                    let base = plan[info.parent_seq];
                    for (a, s) in info.extensions().enumerate() {
                        plan[s] = base * b[j][a];
                    }
                }
                plan
            })
            .collect();
        RealizationProfile { plans }
    }

    /// Conditional action probabilities at every information set; unreached information
    /// sets get the uniform distribution.
    pub fn behavior(&self, space: &SequenceSpace) -> Behavior {
        space
            .players
            .iter()
            .zip(&self.plans)
            .map(|(p, plan)| {
                p.infosets
                    .iter()
                    .map(|info| {
                        let total: f64 = info.extensions().map(|s| plan[s]).sum();
                        let k = info.actions.len();
                        if total > 0.0 {
                            info.extensions().map(|s| plan[s] / total).collect()
                        } else {
                            vec![1.0 / k as f64; k]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `Σ_a γ(ϖa) − γ(ϖ)` for every information set, stacked player by player.
    pub fn flow_residuals(&self, space: &SequenceSpace) -> Vec<f64> {
        let mut out = Vec::with_capacity(space.m0());
        for (p, plan) in space.players.iter().zip(&self.plans) {
            for info in &p.infosets {
                out.push(info.extensions().map(|s| plan[s]).sum::<f64>() - plan[info.parent_seq]);
            }
        }
        out
    }

    pub fn max_flow_residual(&self, space: &SequenceSpace) -> f64 {
        let root = self.plans.iter().map(|p| (p[0] - 1.0).abs()).fold(0.0, f64::max);
        self.flow_residuals(space)
            .into_iter()
            .map(f64::abs)
            .fold(root, f64::max)
    }

    /// Check dimensions, nonnegativity and flow feasibility within `tol`.
    pub fn validate(&self, space: &SequenceSpace, tol: f64) -> Result<()> {
        space.check_dims(self)?;
        if let Some(&bad) = self.plans.iter().flatten().find(|v| !(**v >= 0.0)) {
            return Err(Error::NonPositive(bad));
        }
        let r = self.max_flow_residual(space);
        if r > tol {
            return Err(Error::Infeasible(r));
        }
        Ok(())
    }

    pub fn is_interior(&self) -> bool {
        self.plans.iter().flatten().all(|&v| v > 0.0)
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.plans
            .iter()
            .flatten()
            .zip(other.plans.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl MixedProfile {
    pub fn uniform(space: &SequenceSpace) -> Result<Self> {
        let probs = (0..space.num_players())
            .map(|i| {
                let k = space.reduced_strategies(i)?.len();
                Ok(vec![1.0 / k as f64; k])
            })
            .collect::<Result<_>>()?;
        Ok(MixedProfile { probs })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .flatten()
            .zip(other.probs.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Realization plan induced by a mixed profile over reduced strategies.
pub fn realization_of(space: &SequenceSpace, sigma: &MixedProfile) -> Result<RealizationProfile> {
    if sigma.probs.len() != space.num_players() {
        return Err(Error::DimensionMismatch(format!(
            "mixed profile has {} players, game has {}",
            sigma.probs.len(),
            space.num_players()
        )));
    }
    let mut plans = Vec::with_capacity(space.num_players());
    for (i, probs) in sigma.probs.iter().enumerate() {
        let strategies = space.reduced_strategies(i)?;
        if strategies.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "player {i} has {} reduced strategies, mixed strategy has {} entries",
                strategies.len(),
                probs.len()
            )));
        }
        let mut plan = vec![0.0; space.player(i).len()];
        for (s, &p) in strategies.iter().zip(probs) {
            for &seq in &s.sequences {
                plan[seq] += p;
            }
        }
        plans.push(plan);
    }
    Ok(RealizationProfile { plans })
}

/// A mixed profile inducing `gamma`: each reduced strategy gets the product of the
/// conditional probabilities of its actions, uniform where the information set is unreached.
pub fn mixed_of(space: &SequenceSpace, gamma: &RealizationProfile) -> Result<MixedProfile> {
    gamma.validate(space, FLOW_TOL)?;
    let behavior = gamma.behavior(space);
    let probs = (0..space.num_players())
        .map(|i| {
            let strategies = space.reduced_strategies(i)?;
            Ok(strategies
                .iter()
                .map(|s| {
                    s.choices
                        .iter()
                        .enumerate()
                        .filter_map(|(j, c)| c.map(|a| behavior[i][j][a]))
                        .product()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(MixedProfile { probs })
}

/// Expected payoff vector `g(γ)`.
pub fn expected_payoff(space: &SequenceSpace, gamma: &RealizationProfile) -> Vec<f64> {
    let n = space.num_players();
    let mut out = vec![0.0; n];
    for c in &space.coefficients {
        let w: f64 = c.seqs.iter().enumerate().map(|(q, &s)| gamma.plans[q][s]).product();
        for (o, v) in out.iter_mut().zip(&c.payoff) {
            *o += w * v;
        }
    }
    out
}

/// `g^i(ϖ, γ^{-i})` for every sequence `ϖ` of player `i`.
pub fn seq_marginal_payoff(space: &SequenceSpace, i: usize, gamma: &RealizationProfile) -> Vec<f64> {
    let mut out = vec![0.0; space.player(i).len()];
    for c in &space.coefficients {
        out[c.seqs[i]] += c.payoff[i] * SequenceSpace::opponents_weight(gamma, c, i);
    }
    out
}

/// Best payoff player `i` can secure against `γ^{-i}`, by backward induction over its
/// information sets.
pub fn best_response_value(space: &SequenceSpace, i: usize, gamma: &RealizationProfile) -> f64 {
    let p = space.player(i);
    let marginal = seq_marginal_payoff(space, i, gamma);
    let mut value = marginal.clone();
    // Infosets are ordered parent-first, so every block is final before its parent reads it.
    for info in p.infosets.iter().rev() {
        let best = info.extensions().map(|s| value[s]).fold(f64::NEG_INFINITY, f64::max);
        value[info.parent_seq] += best;
    }
    value[0]
}

/// Per-player gain from the best unilateral deviation.
pub fn nash_gaps(space: &SequenceSpace, gamma: &RealizationProfile) -> Vec<f64> {
    let payoff = expected_payoff(space, gamma);
    (0..space.num_players())
        .map(|i| (best_response_value(space, i, gamma) - payoff[i]).max(0.0))
        .collect()
}

pub fn nash_gap(space: &SequenceSpace, gamma: &RealizationProfile) -> f64 {
    nash_gaps(space, gamma).into_iter().fold(0.0, f64::max)
}
