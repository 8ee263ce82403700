//! Brute-force reduced normal form.
//!
//! Everything here enumerates pure strategy profiles, so it only scales to small games. It is
//! built straight from the game tree, independently of [`crate::sequence`], and serves as the
//! reference the sequence-form machinery is checked against.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{GameTree, NodeId, NodeKind};
use crate::sequence::MixedProfile;

pub const DEFAULT_PROFILE_CAP: u128 = 1_000_000;

/// Actions of one player at the information sets its own earlier choices leave reachable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureStrategy {
    pub choices: Vec<Option<usize>>,
}

#[derive(Clone, Debug)]
pub struct NormalForm {
    strategies: Vec<Vec<PureStrategy>>,
    /// Stride of each player in the flat profile index; player 0 is most significant.
    strides: Vec<usize>,
    num_profiles: usize,
    /// `payoffs[k * n + i]` is player `i`'s payoff at profile `k`.
    payoffs: Vec<f64>,
}

/// Enumerate player `player`'s reduced strategies from the tree: an information set receives
/// an action exactly when the player's own record leading to it is consistent with the
/// actions already chosen.
fn reduced_strategies(game: &GameTree, player: usize) -> Vec<PureStrategy> {
    let infosets = game.infosets(player);
    let requirements: Vec<Vec<(usize, usize)>> = infosets
        .iter()
        .map(|info| {
            let rec = game.record(player, info.members[0]);
            rec.iter()
                .filter_map(|e| e.action.map(|a| (e.infoset.index, a)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut choices = vec![None; infosets.len()];
    fn rec(
        j: usize,
        infosets: &[crate::game::Infoset],
        requirements: &[Vec<(usize, usize)>],
        choices: &mut Vec<Option<usize>>,
        out: &mut Vec<PureStrategy>,
    ) {
        if j == infosets.len() {
            out.push(PureStrategy {
                choices: choices.clone(),
            });
            return;
        }
        let reachable = requirements[j].iter().all(|&(k, a)| choices[k] == Some(a));
        if !reachable {
            rec(j + 1, infosets, requirements, choices, out);
            return;
        }
        for a in 0..infosets[j].actions.len() {
            choices[j] = Some(a);
            rec(j + 1, infosets, requirements, choices, out);
        }
        choices[j] = None;
    }
    rec(0, infosets, &requirements, &mut choices, &mut out);
    out
}

/// Payoff of a pure profile by walking the tree (chance nodes are averaged).
fn walk(game: &GameTree, strategies: &[&PureStrategy], id: NodeId, out: &mut [f64], weight: f64) {
    match &game.node(id).kind {
        NodeKind::Terminal { payoffs } => {
            for (o, p) in out.iter_mut().zip(payoffs) {
                *o += weight * p;
            }
        }
        NodeKind::Chance { probs, children, .. } => {
            for (&c, &p) in children.iter().zip(probs) {
                walk(game, strategies, c, out, weight * p);
            }
        }
        NodeKind::Decision {
            player,
            infoset,
            children,
        } => {
            // A reduced strategy never reaches an information set it leaves unassigned.
            if let Some(a) = strategies[*player].choices[*infoset] {
                walk(game, strategies, children[a], out, weight);
            }
        }
    }
}

/// Build the reduced normal form, refusing games with more than `cap` pure profiles.
pub fn build_normal_form(game: &GameTree, cap: u128) -> Result<NormalForm> {
    game.ensure_perfect_recall()?;
    let n = game.num_players();
    let strategies: Vec<Vec<PureStrategy>> = (0..n).map(|i| reduced_strategies(game, i)).collect();
    let count: u128 = strategies.iter().map(|s| s.len() as u128).product();
    if count > cap {
        return Err(Error::CapExceeded {
            what: "normal form",
            count,
            cap,
        });
    }
    let num_profiles = count as usize;
    let mut strides = vec![1; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * strategies[i + 1].len();
    }
    let payoffs: Vec<f64> = (0..num_profiles)
        .into_par_iter()
        .flat_map_iter(|k| {
            let chosen: Vec<&PureStrategy> = (0..n)
                .map(|i| &strategies[i][(k / strides[i]) % strategies[i].len()])
                .collect();
            let mut out = vec![0.0; n];
            walk(game, &chosen, game.root(), &mut out, 1.0);
            out
        })
        .collect();
    Ok(NormalForm {
        strategies,
        strides,
        num_profiles,
        payoffs,
    })
}

impl NormalForm {
    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self, i: usize) -> &[PureStrategy] {
        &self.strategies[i]
    }

    pub fn num_strategies(&self, i: usize) -> usize {
        self.strategies[i].len()
    }

    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    fn index_of(&self, k: usize, i: usize) -> usize {
        (k / self.strides[i]) % self.strategies[i].len()
    }

    /// Payoff vector of the pure profile `profile` (one strategy index per player).
    pub fn payoff(&self, profile: &[usize]) -> &[f64] {
        let k: usize = profile.iter().zip(&self.strides).map(|(s, w)| s * w).sum();
        let n = self.num_players();
        &self.payoffs[k * n..(k + 1) * n]
    }

    fn check(&self, sigma: &MixedProfile) -> Result<()> {
        if sigma.probs.len() != self.num_players()
            || sigma
                .probs
                .iter()
                .zip(&self.strategies)
                .any(|(p, s)| p.len() != s.len())
        {
            return Err(Error::DimensionMismatch(
                "mixed profile does not match the normal form".into(),
            ));
        }
        Ok(())
    }

    /// `u^i(s^i, σ^{-i})` for every pure strategy `s^i` of player `i`.
    pub fn payoff_against(&self, i: usize, sigma: &MixedProfile) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; self.num_strategies(i)];
        for k in 0..self.num_profiles {
            let w: f64 = (0..n)
                .filter(|&q| q != i)
                .map(|q| sigma.probs[q][self.index_of(k, q)])
                .product();
            if w != 0.0 {
                out[self.index_of(k, i)] += w * self.payoffs[k * n + i];
            }
        }
        out
    }

    /// Expected payoff `u(σ)`.
    pub fn expected_payoff(&self, sigma: &MixedProfile) -> Vec<f64> {
        let n = self.num_players();
        let mut out = vec![0.0; n];
        for k in 0..self.num_profiles {
            let w: f64 = (0..n).map(|q| sigma.probs[q][self.index_of(k, q)]).product();
            for (i, o) in out.iter_mut().enumerate() {
                *o += w * self.payoffs[k * n + i];
            }
        }
        out
    }

    /// `u^i(s^i, s^q, σ^{-i,-q})` as a matrix over `(s^i, s^q)`.
    fn cross_payoff(&self, i: usize, q: usize, sigma: &MixedProfile) -> DMatrix<f64> {
        let n = self.num_players();
        let mut out = DMatrix::zeros(self.num_strategies(i), self.num_strategies(q));
        for k in 0..self.num_profiles {
            let w: f64 = (0..n)
                .filter(|&r| r != i && r != q)
                .map(|r| sigma.probs[r][self.index_of(k, r)])
                .product();
            if w != 0.0 {
                out[(self.index_of(k, i), self.index_of(k, q))] += w * self.payoffs[k * n + i];
            }
        }
        out
    }
}

fn softmax(weights: Option<&[f64]>, scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(k, s)| weights.map_or(1.0, |w| w[k]) * (s - max).exp())
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// One logit response: `σ'^i(s) ∝ σ⁰(s)·exp(λ u^i(s, σ^{-i}))`, uniform weights when no anchor
/// is given.
pub fn logit_response(
    nf: &NormalForm,
    sigma: &MixedProfile,
    lambda: f64,
    anchor: Option<&MixedProfile>,
) -> MixedProfile {
    let probs = (0..nf.num_players())
        .map(|i| {
            let scores: Vec<f64> = nf
                .payoff_against(i, sigma)
                .into_iter()
                .map(|u| lambda * u)
                .collect();
            softmax(anchor.map(|a| a.probs[i].as_slice()), &scores)
        })
        .collect();
    MixedProfile { probs }
}

#[derive(Clone, Debug)]
pub struct QreOptions {
    /// Weight of the new response in the damped fallback iteration.
    pub damping: f64,
    pub max_iterations: usize,
    pub tol: f64,
    /// Fixed-point residual below which the fallback iteration hands over to Newton.
    pub polish_below: f64,
}

impl Default for QreOptions {
    fn default() -> Self {
        QreOptions {
            damping: 0.5,
            max_iterations: 20_000,
            tol: 1e-10,
            polish_below: 1e-4,
        }
    }
}

fn fixed_point_residual(
    nf: &NormalForm,
    sigma: &MixedProfile,
    lambda: f64,
    anchor: Option<&MixedProfile>,
) -> (MixedProfile, f64) {
    let response = logit_response(nf, sigma, lambda, anchor);
    let r = sigma.max_abs_diff(&response);
    (response, r)
}

fn flatten(sigma: &MixedProfile) -> DVector<f64> {
    DVector::from_iterator(
        sigma.probs.iter().map(Vec::len).sum(),
        sigma.probs.iter().flatten().copied(),
    )
}

fn unflatten(v: &DVector<f64>, like: &MixedProfile) -> MixedProfile {
    let mut it = v.iter().copied();
    MixedProfile {
        probs: like
            .probs
            .iter()
            .map(|p| it.by_ref().take(p.len()).collect())
            .collect(),
    }
}

/// Newton on `σ − L(σ) = 0` with the analytic Jacobian of the logit response.
fn newton_polish(
    nf: &NormalForm,
    mut sigma: MixedProfile,
    lambda: f64,
    anchor: Option<&MixedProfile>,
    tol: f64,
) -> (MixedProfile, f64) {
    let n = nf.num_players();
    let offsets: Vec<usize> = (0..n)
        .scan(0, |acc, i| {
            let o = *acc;
            *acc += nf.num_strategies(i);
            Some(o)
        })
        .collect();
    let dim: usize = (0..n).map(|i| nf.num_strategies(i)).sum();
    let (mut response, mut r) = fixed_point_residual(nf, &sigma, lambda, anchor);
    for _ in 0..50 {
        if r <= tol {
            break;
        }
        let mut jac = DMatrix::<f64>::identity(dim, dim);
        for i in 0..n {
            let li = &response.probs[i];
            for q in (0..n).filter(|&q| q != i) {
                let cross = nf.cross_payoff(i, q, &sigma);
                for sq in 0..nf.num_strategies(q) {
                    let mean: f64 = (0..li.len()).map(|s| li[s] * cross[(s, sq)]).sum();
                    for s in 0..li.len() {
                        jac[(offsets[i] + s, offsets[q] + sq)] -=
                            lambda * li[s] * (cross[(s, sq)] - mean);
                    }
                }
            }
        }
        let f = flatten(&sigma) - flatten(&response);
        let Some(step) = jac.lu().solve(&(-f)) else {
            break;
        };
        let base = flatten(&sigma);
        let mut scale = 1.0;
        let mut improved = false;
        while scale > 1e-4 {
            let cand = unflatten(&(&base + &step * scale), &sigma);
            let (cand_resp, cand_r) = fixed_point_residual(nf, &cand, lambda, anchor);
            if cand_r < r {
                sigma = cand;
                response = cand_resp;
                r = cand_r;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (sigma, r)
}

/// Logit QRE at rationality `lambda`, anchored at `anchor` (uniform when `None`), on the
/// branch connected to the anchor at `lambda = 0`.
pub fn solve_logit_qre(
    nf: &NormalForm,
    lambda: f64,
    anchor: Option<&MixedProfile>,
    opts: &QreOptions,
) -> Result<MixedProfile> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Config(format!("rationality {lambda} must be finite and nonnegative")));
    }
    let start = match anchor {
        Some(a) => {
            nf.check(a)?;
            a.clone()
        }
        None => MixedProfile {
            probs: (0..nf.num_players())
                .map(|i| vec![1.0 / nf.num_strategies(i) as f64; nf.num_strategies(i)])
                .collect(),
        },
    };
    if lambda == 0.0 {
        return Ok(start);
    }
    // Newton continuation in the rationality parameter keeps the solution on the branch that
    // starts at the anchor.
    let mut sigma = start;
    let mut current = 0.0;
    let mut step = lambda.min(0.1);
    let mut steps = 0;
    while current < lambda && step >= 1e-9 && steps < opts.max_iterations {
        steps += 1;
        let next = if current + step >= lambda { lambda } else { current + step };
        let (cand, r) = newton_polish(nf, sigma.clone(), next, anchor, opts.tol);
        if r <= opts.tol {
            sigma = cand;
            current = next;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    if current == lambda {
        return Ok(sigma);
    }
    log::debug!("continuation stalled at rationality {current}; falling back to damped iteration");
    damped_iteration(nf, sigma, lambda, anchor, opts)
}

fn damped_iteration(
    nf: &NormalForm,
    mut sigma: MixedProfile,
    lambda: f64,
    anchor: Option<&MixedProfile>,
    opts: &QreOptions,
) -> Result<MixedProfile> {
    let mut beta = opts.damping;
    let (mut response, mut r) = fixed_point_residual(nf, &sigma, lambda, anchor);
    for _ in 0..opts.max_iterations {
        if r <= opts.polish_below {
            let (polished, pr) = newton_polish(nf, sigma.clone(), lambda, anchor, opts.tol);
            if pr <= opts.tol {
                return Ok(polished);
            }
            if pr < r {
                sigma = polished;
                (response, r) = fixed_point_residual(nf, &sigma, lambda, anchor);
            }
        }
        if r <= opts.tol {
            return Ok(sigma);
        }
        let next = MixedProfile {
            probs: sigma
                .probs
                .iter()
                .zip(&response.probs)
                .map(|(s, l)| s.iter().zip(l).map(|(a, b)| (1.0 - beta) * a + beta * b).collect())
                .collect(),
        };
        let (next_resp, next_r) = fixed_point_residual(nf, &next, lambda, anchor);
        if next_r > r && beta > 1.0 / 64.0 {
            beta *= 0.5;
        }
        sigma = next;
        response = next_resp;
        r = next_r;
    }
    Err(Error::NoConvergence {
        what: "logit QRE fixed point",
        residual: r,
        iterations: opts.max_iterations,
    })
}

/// Per-player gain from the best pure deviation.
pub fn nash_gaps(nf: &NormalForm, sigma: &MixedProfile) -> Vec<f64> {
    (0..nf.num_players())
        .map(|i| {
            let against = nf.payoff_against(i, sigma);
            let best = against.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let current: f64 = against.iter().zip(&sigma.probs[i]).map(|(u, p)| u * p).sum();
            (best - current).max(0.0)
        })
        .collect()
}

pub fn nash_gap(nf: &NormalForm, sigma: &MixedProfile) -> f64 {
    nash_gaps(nf, sigma).into_iter().fold(0.0, f64::max)
}

/// Nash test by support: no strategy strictly worse than another (by more than `tol`)
/// carries positive probability.
pub fn is_nash_by_support(nf: &NormalForm, sigma: &MixedProfile, tol: f64) -> bool {
    (0..nf.num_players()).all(|i| {
        let against = nf.payoff_against(i, sigma);
        let best = against.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        against
            .iter()
            .zip(&sigma.probs[i])
            .all(|(u, p)| *p == 0.0 || *u >= best - tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::sequence::{compile, realization_of, MixedProfile};

    const TABLE: [([usize; 3], [f64; 3]); 12] = [
        ([0, 0, 0], [1.0, 3.0, 0.0]),
        ([0, 0, 1], [1.0, 3.0, 0.0]),
        ([0, 1, 0], [2.0, 0.0, 0.0]),
        ([0, 1, 1], [2.0, 0.0, 0.0]),
        ([1, 0, 0], [1.0, 3.0, 0.0]),
        ([1, 0, 1], [1.0, 3.0, 0.0]),
        ([1, 1, 0], [0.0, 0.0, 5.0]),
        ([1, 1, 1], [4.0, 4.0, 0.0]),
        ([2, 0, 0], [0.0, 0.0, 0.0]),
        ([2, 0, 1], [3.0, 0.0, 3.0]),
        ([2, 1, 0], [0.0, 0.0, 0.0]),
        ([2, 1, 1], [3.0, 0.0, 3.0]),
    ];

    fn selten_nf() -> NormalForm {
        build_normal_form(&catalog::selten(), DEFAULT_PROFILE_CAP).unwrap()
    }

    fn type_a() -> MixedProfile {
        MixedProfile {
            probs: vec![vec![0.0, 0.0, 1.0], vec![0.5, 0.5], vec![0.0, 1.0]],
        }
    }

    fn type_c() -> MixedProfile {
        MixedProfile {
            probs: vec![
                vec![0.0, 24.0 / 49.0, 25.0 / 49.0],
                vec![3.0 / 8.0, 5.0 / 8.0],
                vec![0.25, 0.75],
            ],
        }
    }

    #[test]
    fn selten_table_entries() {
        let nf = selten_nf();
        assert_eq!(nf.num_profiles(), 12);
        for (profile, payoff) in TABLE {
            assert_eq!(nf.payoff(&profile), payoff, "{profile:?}");
        }
    }

    #[test]
    fn strategy_order_matches_sequence_form() {
        let game = catalog::selten();
        let nf = selten_nf();
        let space = compile(&game).unwrap();
        for i in 0..3 {
            let seq: Vec<_> = space
                .reduced_strategies(i)
                .unwrap()
                .into_iter()
                .map(|s| s.choices)
                .collect();
            let tree: Vec<_> = nf.strategies(i).iter().map(|s| s.choices.clone()).collect();
            assert_eq!(seq, tree);
        }
    }

    #[test]
    fn single_infoset_tensor_is_leaf_payoffs() {
        let nf = build_normal_form(&catalog::one_player(&[1.0, 0.0]), 10).unwrap();
        assert_eq!(nf.payoff(&[0]), [1.0]);
        assert_eq!(nf.payoff(&[1]), [0.0]);
    }

    #[test]
    fn chance_is_folded() {
        let nf = build_normal_form(&catalog::chance_split(0.3, &[5.0], &[0.0]), 10).unwrap();
        assert_eq!(nf.num_profiles(), 1);
        assert!((nf.payoff(&[0])[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let err = build_normal_form(&catalog::selten(), 11).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { count: 12, .. }));
    }

    #[test]
    fn logit_at_zero_rationality() {
        let nf = selten_nf();
        let r = logit_response(&nf, &type_c(), 0.0, None);
        assert_eq!(r.probs[0], vec![1.0 / 3.0; 3]);
        assert_eq!(r.probs[1], vec![0.5; 2]);
        let r = logit_response(&nf, &type_a(), 0.0, Some(&type_c()));
        assert!(r.max_abs_diff(&type_c()) < 1e-16);
    }

    #[test]
    fn logit_response_by_independent_sum() {
        let nf = selten_nf();
        let sigma = type_c();
        let r = logit_response(&nf, &sigma, 1.0, None);
        // Recompute player 1's scores directly from the table.
        let mut scores = [0.0f64; 3];
        for (profile, payoff) in TABLE {
            scores[profile[0]] += sigma.probs[1][profile[1]] * sigma.probs[2][profile[2]] * payoff[0];
        }
        let z: f64 = scores.iter().map(|s| s.exp()).sum();
        for k in 0..3 {
            assert!((r.probs[0][k] - scores[k].exp() / z).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_at_zero_is_exact() {
        let nf = selten_nf();
        let s = solve_logit_qre(&nf, 0.0, None, &QreOptions::default()).unwrap();
        assert_eq!(s.probs[0], vec![1.0 / 3.0; 3]);
        let s = solve_logit_qre(&nf, 0.0, Some(&type_c()), &QreOptions::default()).unwrap();
        assert_eq!(s, type_c());
    }

    #[test]
    fn solve_certifies_residual() {
        let nf = selten_nf();
        for lambda in [1.0 / 9.0, 1.0, 4.0] {
            let s = solve_logit_qre(&nf, lambda, None, &QreOptions::default()).unwrap();
            let (_, r) = fixed_point_residual(&nf, &s, lambda, None);
            assert!(r <= 1e-10, "lambda {lambda}: {r}");
        }
    }

    #[test]
    fn dominant_strategy_limit() {
        // Player 1 gets 1 from the first action and 0 from the second whatever player 2 does.
        let g = crate::game::GameTree::from_value(&serde_json::json!({
            "players": ["1", "2"],
            "root": {"player": "1", "infoset": "a", "actions": [
                {"label": "T", "child": {"player": "2", "infoset": "b", "actions": [
                    {"label": "l", "child": {"payoffs": [1, 0]}},
                    {"label": "r", "child": {"payoffs": [1, 1]}}]}},
                {"label": "B", "child": {"player": "2", "infoset": "b", "actions": [
                    {"label": "l", "child": {"payoffs": [0, 1]}},
                    {"label": "r", "child": {"payoffs": [0, 0]}}]}}]}
        }))
        .unwrap();
        let nf = build_normal_form(&g, 100).unwrap();
        let s = solve_logit_qre(&nf, 1e3, None, &QreOptions::default()).unwrap();
        assert!(s.probs[0][0] >= 1.0 - 1e-6);
    }

    #[test]
    fn nash_gap_examples() {
        let nf = selten_nf();
        assert!(nash_gap(&nf, &type_a()) < 1e-15);
        assert!(nash_gap(&nf, &type_c()) < 1e-14);
        let uniform = MixedProfile {
            probs: vec![vec![1.0 / 3.0; 3], vec![0.5; 2], vec![0.5; 2]],
        };
        let gap = nash_gap(&nf, &uniform);
        // Enumerated deviations for player 1 against the uniform opponents.
        let mut scores = [0.0f64; 3];
        for (profile, payoff) in TABLE {
            scores[profile[0]] += 0.25 * payoff[0];
        }
        let mean = scores.iter().sum::<f64>() / 3.0;
        let best = scores.iter().copied().fold(f64::MIN, f64::max);
        assert!(gap >= best - mean - 1e-15);
        assert!(gap > 0.0);
        assert!(!is_nash_by_support(&nf, &uniform, 1e-12));
        assert!(is_nash_by_support(&nf, &type_c(), 1e-12));
    }

    #[test]
    fn payoff_identity_against_sequence_form() {
        let game = catalog::selten();
        let nf = selten_nf();
        let space = compile(&game).unwrap();
        let sigma = type_c();
        let gamma = realization_of(&space, &sigma).unwrap();
        let g = crate::sequence::expected_payoff(&space, &gamma);
        let u = nf.expected_payoff(&sigma);
        for i in 0..3 {
            assert!((g[i] - u[i]).abs() < 1e-14);
        }
    }
}
