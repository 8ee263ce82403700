//! Sequence-form logit QRE equilibrium systems.
//!
//! For a homotopy parameter `t ∈ (0, 1]` with rationality `λ_r = (1 − t)/t`, an interior
//! realization profile `γ` and one multiplier `ν` per information set solve
//!
//! ```text
//! (1−t)·g^i(ϖa, γ^{-i}) − t·(ln γ(ϖa) − ln γ(ϖ) [− ln γ⁰(ϖa) + ln γ⁰(ϖ)]) − ν_I + ζ_I(a) = 0
//! Σ_a γ(ϖa) − γ(ϖ) = 0
//! ```
//!
//! where `ζ_I(a)` sums the multipliers of the information sets directly reached by `ϖa` and the
//! bracket is present for anchored instances. Rows are ordered as everywhere else in the crate:
//! one row per non-empty sequence (player by player), then one flow row per information set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oracle::{logit_response, NormalForm};
use crate::sequence::{
    mixed_of, seq_marginal_payoff, MixedProfile, RealizationProfile, SequenceSpace,
};

const FIXED_T_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// One multiplier per information set, per player.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSet {
    pub nu: Vec<Vec<f64>>,
}

impl MultiplierSet {
    pub fn zeros(space: &SequenceSpace) -> Self {
        MultiplierSet {
            nu: space.players().iter().map(|p| vec![0.0; p.infosets.len()]).collect(),
        }
    }

    /// `ζ` of sequence `seq` of player `i`: the multipliers of the information sets it reaches.
    pub fn zeta(&self, space: &SequenceSpace, i: usize, seq: usize) -> f64 {
        space.player(i).downstream[seq].iter().map(|&j| self.nu[i][j]).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.nu.iter().flatten().copied().collect()
    }

    pub fn from_flat(space: &SequenceSpace, values: &[f64]) -> Self {
        let mut it = values.iter().copied();
        MultiplierSet {
            nu: space
                .players()
                .iter()
                .map(|p| it.by_ref().take(p.infosets.len()).collect())
                .collect(),
        }
    }
}

/// A QRE system at a fixed `t`, anchored when `anchor` is present.
#[derive(Clone, Copy, Debug)]
pub struct QreInstance<'a> {
    pub space: &'a SequenceSpace,
    pub anchor: Option<&'a RealizationProfile>,
    pub t: f64,
}

impl<'a> QreInstance<'a> {
    pub fn new(
        space: &'a SequenceSpace,
        anchor: Option<&'a RealizationProfile>,
        t: f64,
    ) -> Result<Self> {
        if t == 0.0 {
            return Err(Error::ZeroT);
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Config(format!("t = {t} is outside (0, 1]")));
        }
        if let Some(a) = anchor {
            a.validate(space, 1e-9)?;
            if let Some(&bad) = a.plans.iter().flatten().find(|&&v| v <= 0.0) {
                return Err(Error::NonPositive(bad));
            }
        }
        Ok(QreInstance { space, anchor, t })
    }

    pub fn lambda_r(&self) -> f64 {
        (1.0 - self.t) / self.t
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        QreInstance::new(self.space, self.anchor, t)
    }

    /// `ln γ⁰(ϖa) − ln γ⁰(ϖ)` for non-empty sequence `seq`, zero without anchor.
    fn anchor_log_ratio(&self, i: usize, seq: usize) -> f64 {
        match self.anchor {
            Some(a) => {
                let plan = &a.plans[i];
                plan[seq].ln() - plan[self.space.player(i).parent(seq)].ln()
            }
            None => 0.0,
        }
    }
}

fn row_of(space: &SequenceSpace, i: usize, seq: usize) -> usize {
    space.action_offset(i) + seq - 1
}

/// Visit every cross derivative `∂g^i(ϖ^i, γ^{-i}) / ∂γ^q(ϖ^q)` with `q ≠ i` and both
/// sequences non-empty, as `f(i, ϖ^i, q, ϖ^q, value)`.
pub(crate) fn for_each_cross_term(
    space: &SequenceSpace,
    plans: &[Vec<f64>],
    mut f: impl FnMut(usize, usize, usize, usize, f64),
) {
    let n = space.num_players();
    for c in space.coefficients() {
        for i in 0..n {
            if c.seqs[i] == 0 || c.payoff[i] == 0.0 {
                continue;
            }
            for q in (0..n).filter(|&q| q != i && c.seqs[q] != 0) {
                let w: f64 = (0..n)
                    .filter(|&r| r != i && r != q)
                    .map(|r| plans[r][c.seqs[r]])
                    .product();
                if w != 0.0 {
                    f(i, c.seqs[i], q, c.seqs[q], c.payoff[i] * w);
                }
            }
        }
    }
}

/// Residual of the equilibrium system (anchored iff the instance has an anchor), of length
/// `n₀ + m₀`.
pub fn residual_gamma_sys(
    inst: &QreInstance,
    gamma: &RealizationProfile,
    nu: &MultiplierSet,
) -> Result<Vec<f64>> {
    let space = inst.space;
    if gamma.plans.len() != space.num_players()
        || gamma.plans.iter().zip(space.players()).any(|(g, p)| g.len() != p.len())
    {
        return Err(Error::DimensionMismatch("realization profile shape".into()));
    }
    if let Some(&bad) = gamma.plans.iter().flatten().find(|&&v| !(v > 0.0)) {
        return Err(Error::NonPositive(bad));
    }
    let t = inst.t;
    let mut out = Vec::with_capacity(space.n0() + space.m0());
    for i in 0..space.num_players() {
        let p = space.player(i);
        let g = seq_marginal_payoff(space, i, gamma);
        let plan = &gamma.plans[i];
        for seq in 1..p.len() {
            let (j, _) = p.origin[seq].expect("non-empty sequence has an origin");
            let log_ratio = plan[seq].ln() - plan[p.parent(seq)].ln();
            out.push(
                (1.0 - t) * g[seq] - t * (log_ratio - inst.anchor_log_ratio(i, seq)) - nu.nu[i][j]
                    + nu.zeta(space, i, seq),
            );
        }
    }
    out.extend(gamma.flow_residuals(space));
    Ok(out)
}

/// `ln gₑ` of every sequence and information set of one player.
#[derive(Clone, Debug, PartialEq)]
pub struct GeValues {
    pub ln_seq: Vec<f64>,
    pub ln_infoset: Vec<f64>,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// The recursion `gₑ(ϖ) = β⁰(ϖ)·exp(λ_r g^i(ϖ, γ^{-i}))·Π gₑ(I)` over the information sets
/// `ϖ` reaches, with `gₑ(I) = Σ_a gₑ(ϖa)`, evaluated in log space. `β⁰` is the anchor's
/// conditional probability of the last action and is 1 without an anchor.
pub fn recursive_ge(inst: &QreInstance, i: usize, gamma: &RealizationProfile) -> Result<GeValues> {
    let space = inst.space;
    let p = space.player(i);
    let lambda = inst.lambda_r();
    let g = seq_marginal_payoff(space, i, gamma);
    let mut ln_seq: Vec<f64> = g.iter().map(|v| lambda * v).collect();
    if inst.anchor.is_some() {
        for (seq, v) in ln_seq.iter_mut().enumerate().skip(1) {
            *v += inst.anchor_log_ratio(i, seq);
        }
    }
    let mut ln_infoset = vec![0.0; p.infosets.len()];
    // Children come after their parents, so a reverse sweep sees every block complete.
    for (j, info) in p.infosets.iter().enumerate().rev() {
        ln_infoset[j] = log_sum_exp(info.extensions().map(|s| ln_seq[s]));
        ln_seq[info.parent_seq] += ln_infoset[j];
    }
    Ok(GeValues { ln_seq, ln_infoset })
}

/// Behavioral logit response: at every information set, action `a` gets `gₑ(ϖa)/gₑ(I)`.
pub fn ge_response(inst: &QreInstance, gamma: &RealizationProfile) -> Result<RealizationProfile> {
    let space = inst.space;
    let mut plans = Vec::with_capacity(space.num_players());
    for i in 0..space.num_players() {
        let ge = recursive_ge(inst, i, gamma)?;
        let p = space.player(i);
        let mut plan = vec![0.0; p.len()];
        plan[0] = 1.0;
        for (j, info) in p.infosets.iter().enumerate() {
            for s in info.extensions() {
                plan[s] = plan[info.parent_seq] * (ge.ln_seq[s] - ge.ln_infoset[j]).exp();
            }
        }
        plans.push(plan);
    }
    Ok(RealizationProfile { plans })
}

/// `ν_I = t·ln gₑ(I)` for every information set.
pub fn recover_multipliers(inst: &QreInstance, gamma: &RealizationProfile) -> Result<MultiplierSet> {
    let nu = (0..inst.space.num_players())
        .map(|i| {
            Ok(recursive_ge(inst, i, gamma)?
                .ln_infoset
                .into_iter()
                .map(|v| inst.t * v)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(MultiplierSet { nu })
}

/// Logit response in mixed strategies to the mixed profile induced by `gamma`, weighted by
/// the anchor's mixed profile when the instance is anchored.
pub fn sigma_e(inst: &QreInstance, nf: &NormalForm, gamma: &RealizationProfile) -> Result<MixedProfile> {
    let sigma = mixed_of(inst.space, gamma)?;
    let anchor = inst.anchor.map(|a| mixed_of(inst.space, a)).transpose()?;
    Ok(logit_response(nf, &sigma, inst.lambda_r(), anchor.as_ref()))
}

/// Unknowns `(ln γ over non-empty sequences, ν)` of the Newton solve.
struct LogSystem<'a, 'b> {
    inst: &'b QreInstance<'a>,
}

impl LogSystem<'_, '_> {
    fn dim(&self) -> usize {
        self.inst.space.n0() + self.inst.space.m0()
    }

    fn gamma(&self, z: &DVector<f64>) -> (Vec<Vec<f64>>, RealizationProfile) {
        let space = self.inst.space;
        let mut logs = Vec::with_capacity(space.num_players());
        for i in 0..space.num_players() {
            let p = space.player(i);
            let mut l = vec![0.0; p.len()];
            for (seq, v) in l.iter_mut().enumerate().skip(1) {
                *v = z[row_of(space, i, seq)];
            }
            logs.push(l);
        }
        let plans = logs.iter().map(|l| l.iter().map(|v| v.exp()).collect()).collect();
        (logs, RealizationProfile { plans })
    }

    fn nu(&self, z: &DVector<f64>) -> MultiplierSet {
        let n0 = self.inst.space.n0();
        MultiplierSet::from_flat(self.inst.space, &z.as_slice()[n0..])
    }

    fn encode(&self, gamma: &RealizationProfile, nu: &MultiplierSet) -> DVector<f64> {
        let space = self.inst.space;
        let mut z = DVector::zeros(self.dim());
        for i in 0..space.num_players() {
            for seq in 1..space.player(i).len() {
                z[row_of(space, i, seq)] = gamma.plans[i][seq].ln();
            }
        }
        for (k, v) in nu.flatten().into_iter().enumerate() {
            z[space.n0() + k] = v;
        }
        z
    }

    /// Residual with flow rows divided by the parent mass, and optionally its Jacobian.
    fn eval(&self, z: &DVector<f64>, want_jac: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let inst = self.inst;
        let space = inst.space;
        let t = inst.t;
        let n0 = space.n0();
        let dim = self.dim();
        let (logs, gamma) = self.gamma(z);
        let nu = self.nu(z);
        let mut f = DVector::zeros(dim);
        let mut jac = want_jac.then(|| DMatrix::zeros(dim, dim));
        for i in 0..space.num_players() {
            let p = space.player(i);
            let g = seq_marginal_payoff(space, i, &gamma);
            for seq in 1..p.len() {
                let row = row_of(space, i, seq);
                let (j, _) = p.origin[seq].expect("non-empty sequence has an origin");
                let parent = p.parent(seq);
                f[row] = (1.0 - t) * g[seq]
                    - t * (logs[i][seq] - logs[i][parent] - inst.anchor_log_ratio(i, seq))
                    - nu.nu[i][j]
                    + nu.zeta(space, i, seq);
                if let Some(jac) = jac.as_mut() {
                    jac[(row, row)] -= t;
                    if parent != 0 {
                        jac[(row, row_of(space, i, parent))] += t;
                    }
                    jac[(row, n0 + space.infoset_offset(i) + j)] -= 1.0;
                    for &q in &p.downstream[seq] {
                        jac[(row, n0 + space.infoset_offset(i) + q)] += 1.0;
                    }
                }
            }
            for (j, info) in p.infosets.iter().enumerate() {
                let row = n0 + space.infoset_offset(i) + j;
                let base = logs[i][info.parent_seq];
                let mut total = 0.0;
                for s in info.extensions() {
                    let w = (logs[i][s] - base).exp();
                    total += w;
                    if let Some(jac) = jac.as_mut() {
                        jac[(row, row_of(space, i, s))] += w;
                    }
                }
                f[row] = total - 1.0;
                if let Some(jac) = jac.as_mut() {
                    if info.parent_seq != 0 {
                        jac[(row, row_of(space, i, info.parent_seq))] -= total;
                    }
                }
            }
        }
        if let Some(jac) = jac.as_mut() {
            for_each_cross_term(space, &gamma.plans, |i, si, q, sq, d| {
                jac[(row_of(space, i, si), row_of(space, q, sq))] +=
                    (1.0 - t) * d * gamma.plans[q][sq];
            });
        }
        (f, jac)
    }

    /// Damped Newton; returns the final point and its scaled residual norm.
    fn newton(&self, mut z: DVector<f64>, tol: f64) -> (DVector<f64>, f64) {
        let (mut f, _) = self.eval(&z, false);
        let mut norm = f.amax();
        for _ in 0..NEWTON_MAX_ITER {
            if norm <= tol {
                break;
            }
            let (_, jac) = self.eval(&z, true);
            let Some(mut step) = jac.expect("requested").lu().solve(&(-&f)) else {
                break;
            };
            let biggest = step.amax();
            if biggest > 5.0 {
                step *= 5.0 / biggest;
            }
            let mut scale = 1.0;
            let current = f.norm();
            let mut accepted = false;
            while scale >= 1e-8 {
                let cand = &z + &step * scale;
                let (cf, _) = self.eval(&cand, false);
                let cn = cf.norm();
                if cn.is_finite() && cn < (1.0 - 1e-4 * scale) * current {
                    z = cand;
                    f = cf;
                    norm = f.amax();
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (z, norm)
    }
}

/// Solution at `t = 1`: the anchor itself, or the plan of the uniform mixed profile over reduced
/// strategies when unanchored.
fn solution_at_one(space: &SequenceSpace, anchor: Option<&RealizationProfile>) -> Result<RealizationProfile> {
    match anchor {
        Some(a) => Ok(a.clone()),
        None => ge_response(&QreInstance::new(space, None, 1.0)?, &RealizationProfile::uniform(space)),
    }
}

fn certify(inst: &QreInstance, gamma: RealizationProfile, nu: MultiplierSet) -> Result<(RealizationProfile, MultiplierSet)> {
    let r = residual_gamma_sys(inst, &gamma, &nu)?
        .into_iter()
        .fold(0.0, |m, v| f64::max(m, v.abs()));
    if r <= FIXED_T_TOL {
        Ok((gamma, nu))
    } else {
        Err(Error::NoConvergence {
            what: "fixed-t equilibrium system",
            residual: r,
            iterations: NEWTON_MAX_ITER,
        })
    }
}

/// Solve the equilibrium system at the instance's `t`. With an initial guess Newton starts
/// there (multipliers recovered from the guess); otherwise, or if that fails, the solution is
/// continued in `t` from the known solution at `t = 1`.
pub fn solve_fixed_t(
    inst: &QreInstance,
    initial: Option<&RealizationProfile>,
) -> Result<(RealizationProfile, MultiplierSet)> {
    let space = inst.space;
    let sys = LogSystem { inst };
    if let Some(guess) = initial {
        if !guess.is_interior() {
            return Err(Error::NonPositive(
                guess.plans.iter().flatten().copied().fold(f64::INFINITY, f64::min),
            ));
        }
        let nu = recover_multipliers(inst, guess)?;
        let (z, norm) = sys.newton(sys.encode(guess, &nu), FIXED_T_TOL * 0.1);
        if norm <= FIXED_T_TOL * 0.1 {
            let (_, gamma) = sys.gamma(&z);
            if let Ok(sol) = certify(inst, gamma, sys.nu(&z)) {
                return Ok(sol);
            }
        }
        log::debug!("Newton from the initial guess stalled at {norm:e}; continuing from t = 1");
    }

    let gamma1 = solution_at_one(space, inst.anchor)?;
    let at_one = inst.with_t(1.0)?;
    let nu1 = recover_multipliers(&at_one, &gamma1)?;
    let mut z = sys.encode(&gamma1, &nu1);
    let mut t = 1.0;
    let mut h = 0.1f64;
    while t > inst.t {
        let next_t = (t - h).max(inst.t);
        let step_inst = inst.with_t(next_t)?;
        let step_sys = LogSystem { inst: &step_inst };
        let (cand, norm) = step_sys.newton(z.clone(), FIXED_T_TOL * 0.1);
        if norm <= FIXED_T_TOL * 0.1 {
            z = cand;
            t = next_t;
            h = (h * 1.5).min(0.2);
        } else {
            h *= 0.5;
            if h < 1e-7 {
                return Err(Error::NoConvergence {
                    what: "fixed-t continuation",
                    residual: norm,
                    iterations: NEWTON_MAX_ITER,
                });
            }
        }
    }
    let (_, gamma) = sys.gamma(&z);
    certify(inst, gamma, sys.nu(&z))
}
