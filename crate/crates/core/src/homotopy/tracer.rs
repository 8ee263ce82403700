//! Pseudo-arclength predictor-corrector along the transformed system.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::{Homotopy, PathPoint};
use super::transform::TransformParams;
use crate::error::{Error, Result};
use crate::sequence::{
    expected_payoff, mixed_of, nash_gap, Behavior, MixedProfile, RealizationProfile, SequenceSpace,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TracerConfig {
    /// Tracing stops once `t` reaches this value.
    pub t_end: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tol: f64,
    pub max_corrector_iter: usize,
    /// Nash gap certifying a converged run.
    pub eps_nash: f64,
    /// Masses below this are set to zero before the Nash gap is measured.
    pub support_tol: f64,
    /// `‖x‖∞` beyond which the path counts as diverged.
    pub divergence_bound: f64,
    pub max_steps: usize,
    /// Retries with `α` halved after a stall.
    pub max_restarts: usize,
}

impl Default for TracerConfig {
    fn default() -> Self {
        TracerConfig {
            t_end: 1e-6,
            initial_step: 1e-2,
            min_step: 1e-9,
            max_step: 0.1,
            corrector_tol: 1e-10,
            max_corrector_iter: 12,
            eps_nash: 1e-6,
            support_tol: 1e-8,
            divergence_bound: 1e6,
            max_steps: 200_000,
            max_restarts: 3,
        }
    }
}

impl TracerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end <= 0.01) {
            return Err(Error::Config(format!("t_end = {} must lie in (0, 0.01]", self.t_end)));
        }
        if !(self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step)
        {
            return Err(Error::Config(
                "step bounds must satisfy 0 < min_step <= initial_step <= max_step".into(),
            ));
        }
        if !(self.corrector_tol > 0.0) || self.max_corrector_iter == 0 {
            return Err(Error::Config("corrector tolerance and iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceStatus {
    /// Reached `t_end` with a Nash gap within `eps_nash`.
    Converged,
    /// The step size fell below `min_step`, or `t_end` was reached without the certificate.
    Stalled,
    Diverged,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceResult {
    pub path: Vec<PathPoint>,
    pub final_gamma: RealizationProfile,
    /// `None` when the game has too many reduced strategies to enumerate.
    pub final_sigma: Option<MixedProfile>,
    pub payoffs: Vec<f64>,
    pub nash_gap: f64,
    pub status: TraceStatus,
    pub anchor: RealizationProfile,
    /// Parameters of the attempt that produced `path`.
    pub params: TransformParams,
    pub restarts: usize,
}

/// An interior realization plan with behavioral probabilities drawn uniformly from each
/// information set's simplex.
pub fn random_anchor(space: &SequenceSpace, seed: u64) -> RealizationProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let behavior: Behavior = space
        .players()
        .iter()
        .map(|p| {
            p.infosets
                .iter()
                .map(|info| {
                    let w: Vec<f64> = info
                        .actions
                        .iter()
                        .map(|_| {
                            let v: f64 = Exp1.sample(&mut rng);
                            v.max(1e-12)
                        })
                        .collect();
                    let total: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / total).collect()
                })
                .collect()
        })
        .collect();
    RealizationProfile::from_behavior(space, &behavior)
}

struct Corrected {
    z: DVector<f64>,
    tangent: DVector<f64>,
    iterations: usize,
}

struct Tracer<'h, 'a> {
    h: &'h Homotopy<'a>,
    cfg: &'h TracerConfig,
}

impl Tracer<'_, '_> {
    fn n(&self) -> usize {
        self.h.dim()
    }

    fn raw_residual(&self, z: &DVector<f64>) -> f64 {
        let point = PathPoint::from_vector(z, self.h.n0());
        self.h
            .residual_transformed(&point)
            .map(|r| r.into_iter().fold(0.0, |m, v| f64::max(m, v.abs())))
            .unwrap_or(f64::INFINITY)
    }

    /// Unit tangent with `[J; prevᵀ] τ = e`, or with `dt < 0` when there is no previous one.
    fn tangent(&self, jac: &DMatrix<f64>, prev: Option<&DVector<f64>>) -> Option<DVector<f64>> {
        let n = self.n();
        let tau = match prev {
            Some(prev) => {
                let mut a = DMatrix::zeros(n + 1, n + 1);
                a.rows_mut(0, n).copy_from(jac);
                a.row_mut(n).copy_from(&prev.transpose());
                let mut e = DVector::zeros(n + 1);
                e[n] = 1.0;
                a.lu().solve(&e)?
            }
            None => {
                let square = jac.columns(0, n).into_owned();
                let rhs = -jac.column(n);
                let w = square.lu().solve(&rhs)?;
                let mut tau = DVector::zeros(n + 1);
                tau.rows_mut(0, n).copy_from(&w);
                tau[n] = 1.0;
                -tau
            }
        };
        let norm = tau.norm();
        (norm.is_finite() && norm > 0.0).then(|| tau / norm)
    }

    /// Newton on `[H(z); c·z − target] = 0` starting from `pred`.
    fn correct(
        &self,
        pred: DVector<f64>,
        constraint: &DVector<f64>,
        target: f64,
        prev_tangent: &DVector<f64>,
        step: f64,
    ) -> Option<Corrected> {
        let n = self.n();
        let mut z = pred;
        let mut last_update = f64::INFINITY;
        for it in 1..=self.cfg.max_corrector_iter {
            let (f, jac) = self.h.scaled_system(&z, true)?;
            let jac = jac.expect("requested");
            let mut a = DMatrix::zeros(n + 1, n + 1);
            a.rows_mut(0, n).copy_from(&jac);
            a.row_mut(n).copy_from(&constraint.transpose());
            let mut rhs = DVector::zeros(n + 1);
            rhs.rows_mut(0, n).copy_from(&(-&f));
            rhs[n] = target - constraint.dot(&z);
            let delta = a.lu().solve(&rhs)?;
            let update = delta.amax();
            if !update.is_finite() || (it == 1 && update > step.max(1e-6)) || update > 2.0 * last_update {
                return None;
            }
            last_update = update;
            z += &delta;
            let (f_new, _) = self.h.scaled_system(&z, false)?;
            let scaled = f_new.amax();
            let small_update = update <= 1e-12 * (1.0 + z.amax());
            if (scaled <= self.cfg.corrector_tol || small_update)
                && self.raw_residual(&z) <= self.cfg.corrector_tol
            {
                let (_, jac) = self.h.scaled_system(&z, true)?;
                let tangent = self.tangent(&jac.expect("requested"), Some(prev_tangent))?;
                return Some(Corrected {
                    z,
                    tangent,
                    iterations: it,
                });
            }
        }
        None
    }

    fn follow(&self) -> (Vec<PathPoint>, TraceStatus) {
        let cfg = self.cfg;
        let n = self.n();
        let n0 = self.h.n0();
        let start = self.h.start_point();
        let mut path = vec![start.clone()];
        let mut z = start.to_vector();
        let Some((_, Some(jac))) = self.h.scaled_system(&z, true) else {
            return (path, TraceStatus::Stalled);
        };
        let Some(mut tangent) = self.tangent(&jac, None) else {
            log::warn!("singular Jacobian at the start point");
            return (path, TraceStatus::Stalled);
        };
        let mut step = cfg.initial_step;
        for _ in 0..cfg.max_steps {
            if z[n] <= cfg.t_end {
                return (path, TraceStatus::Converged);
            }
            let mut pred = &z + &tangent * step;
            let landing = pred[n] <= cfg.t_end && tangent[n] < 0.0;
            let (constraint, target, used) = if landing {
                let h_land = (z[n] - cfg.t_end) / -tangent[n];
                pred = &z + &tangent * h_land;
                pred[n] = cfg.t_end;
                let mut e = DVector::zeros(n + 1);
                e[n] = 1.0;
                (e, cfg.t_end, h_land)
            } else {
                let target = tangent.dot(&pred);
                (tangent.clone(), target, step)
            };
            match self.correct(pred, &constraint, target, &tangent, used) {
                Some(c) => {
                    if c.z.rows(0, n0).amax() > cfg.divergence_bound {
                        path.push(PathPoint::from_vector(&c.z, n0));
                        return (path, TraceStatus::Diverged);
                    }
                    z = c.z;
                    tangent = c.tangent;
                    path.push(PathPoint::from_vector(&z, n0));
                    if c.iterations <= 3 {
                        step = (step * 1.5).min(cfg.max_step);
                    } else if c.iterations > 8 {
                        step = (step * 0.5).max(cfg.min_step);
                    }
                }
                None => {
                    step *= 0.5;
                    if step < cfg.min_step {
                        log::debug!("step fell below {} at t = {}", cfg.min_step, z[n]);
                        return (path, TraceStatus::Stalled);
                    }
                }
            }
        }
        (path, TraceStatus::Stalled)
    }
}

/// Zero out masses below `tol` and restore the flow constraints top-down, using `behavior`
/// wherever every extension of a reached information set was cleared.
fn round_support(
    space: &SequenceSpace,
    gamma: &RealizationProfile,
    behavior: &Behavior,
    tol: f64,
) -> RealizationProfile {
    let plans = space
        .players()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut plan = vec![0.0; p.len()];
            plan[0] = 1.0;
            for (j, info) in p.infosets.iter().enumerate() {
                let base = plan[info.parent_seq];
                if base == 0.0 {
                    continue;
                }
                let kept: Vec<f64> = info
                    .extensions()
                    .map(|s| if gamma.plans[i][s] < tol { 0.0 } else { gamma.plans[i][s] })
                    .collect();
                let total: f64 = kept.iter().sum();
                for (a, s) in info.extensions().enumerate() {
                    plan[s] = if total > 0.0 {
                        base * kept[a] / total
                    } else {
                        base * behavior[i][j][a]
                    };
                }
            }
            plan
        })
        .collect();
    RealizationProfile { plans }
}

/// Gauss-Newton on the `t = 0` system from the last path point, with least-squares steps since
/// the limit system is often singular on equilibrium components.
fn polish_at_zero(h: &Homotopy, z: &DVector<f64>) -> PathPoint {
    let n = h.dim();
    let mut w = z.rows(0, n).into_owned();
    let (mut f, mut jac) = h.system_at_zero(&w);
    for _ in 0..30 {
        if f.amax() <= 1e-13 {
            break;
        }
        let Ok(delta) = jac.clone().svd(true, true).solve(&(-&f), 1e-12) else {
            break;
        };
        let mut scale = 1.0;
        let mut improved = false;
        while scale >= 1e-6 {
            let cand = &w + &delta * scale;
            let (cf, cj) = h.system_at_zero(&cand);
            if cf.norm() < f.norm() {
                w = cand;
                f = cf;
                jac = cj;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let mut full = DVector::zeros(n + 1);
    full.rows_mut(0, n).copy_from(&w);
    PathPoint::from_vector(&full, h.n0())
}

fn certify(h: &Homotopy, point: &PathPoint, tol: f64) -> (RealizationProfile, f64) {
    let gamma = round_support(h.space(), &h.gamma(point), &h.behavior(point), tol);
    let gap = nash_gap(h.space(), &gamma);
    (gamma, gap)
}

/// Follow the path from the anchor. Stalls are retried with `α` halved up to
/// `cfg.max_restarts` times; the result describes the last attempt.
pub fn trace(
    space: &SequenceSpace,
    anchor: &RealizationProfile,
    params: &TransformParams,
    cfg: &TracerConfig,
) -> Result<TraceResult> {
    cfg.validate()?;
    let mut params = params.clone();
    let mut restarts = 0;
    loop {
        let h = Homotopy::new(space, anchor.clone(), params.clone())?;
        let tracer = Tracer { h: &h, cfg };
        let (path, mut status) = tracer.follow();
        let last = path.last().expect("path starts with the start point");
        let (mut final_gamma, mut gap) = certify(&h, last, cfg.support_tol);
        if status == TraceStatus::Converged && gap > 1e-3 * cfg.eps_nash {
            let polished = polish_at_zero(&h, &last.to_vector());
            let (g0, gap0) = certify(&h, &polished, cfg.support_tol);
            log::debug!("endpoint gap {gap:e}, after polishing at t = 0 {gap0:e}");
            if gap0 < gap {
                final_gamma = g0;
                gap = gap0;
            }
            if gap > cfg.eps_nash {
                status = TraceStatus::Stalled;
            }
        }
        if status == TraceStatus::Stalled && restarts < cfg.max_restarts && params.alpha_scale > 0.0 {
            restarts += 1;
            params = params.halved();
            log::info!("restart {restarts} with alpha_scale {:e}", params.alpha_scale);
            continue;
        }
        let final_sigma = match mixed_of(space, &final_gamma) {
            Ok(s) => Some(s),
            Err(Error::CapExceeded { .. }) => None,
            Err(e) => return Err(e),
        };
        let payoffs = expected_payoff(space, &final_gamma);
        return Ok(TraceResult {
            path,
            final_gamma,
            final_sigma,
            payoffs,
            nash_gap: gap,
            status,
            anchor: anchor.clone(),
            params,
            restarts,
        });
    }
}

/// Independent traces run in parallel; results keep the order of `jobs`.
pub fn trace_many(
    space: &SequenceSpace,
    jobs: &[(RealizationProfile, TransformParams)],
    cfg: &TracerConfig,
) -> Vec<Result<TraceResult>> {
    jobs.par_iter()
        .map(|(anchor, params)| trace(space, anchor, params, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::sequence::compile;

    #[test]
    fn config_validation() {
        assert!(TracerConfig::default().validate().is_ok());
        let bad = TracerConfig {
            t_end: 0.5,
            ..TracerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TracerConfig {
            min_step: 1.0,
            ..TracerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_anchor_is_interior_and_seeded() {
        let s = compile(&catalog::selten()).unwrap();
        let a = random_anchor(&s, 5);
        assert!(a.is_interior());
        assert!(a.max_flow_residual(&s) < 1e-15);
        assert_eq!(a, random_anchor(&s, 5));
        assert_ne!(a, random_anchor(&s, 6));
    }

    #[test]
    fn round_support_restores_flow() {
        let s = compile(&catalog::selten()).unwrap();
        let g = RealizationProfile {
            plans: vec![
                vec![1.0, 1e-9, 1.0 - 1e-9, 5e-10, 5e-10],
                vec![1.0, 0.5, 0.5],
                vec![1.0, 0.25, 0.75],
            ],
        };
        let b = g.behavior(&s);
        let r = round_support(&s, &g, &b, 1e-8);
        assert_eq!(r.plans[0], vec![1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.plans[2], g.plans[2]);
    }

    #[test]
    fn one_player_converges_to_best_action() {
        let s = compile(&catalog::one_player(&[1.0, 0.0])).unwrap();
        let anchor = RealizationProfile::uniform(&s);
        let res = trace(&s, &anchor, &TransformParams::unperturbed(2), &TracerConfig::default()).unwrap();
        assert_eq!(res.status, TraceStatus::Converged);
        assert_eq!(res.final_gamma.plans[0], vec![1.0, 1.0, 0.0]);
        assert_eq!(res.path[0].t, 1.0);
        assert!(res.path.last().unwrap().t <= 1e-6);
    }

    #[test]
    fn zero_game_path_stays_at_anchor() {
        let s = compile(&catalog::zeroed(&catalog::selten())).unwrap();
        let anchor = RealizationProfile::uniform(&s);
        let res = trace(&s, &anchor, &TransformParams::unperturbed(8), &TracerConfig::default()).unwrap();
        assert_eq!(res.status, TraceStatus::Converged);
        let h = Homotopy::new(&s, anchor.clone(), TransformParams::unperturbed(8)).unwrap();
        for p in &res.path {
            let b = h.behavior(p);
            for v in b.iter().flatten().flatten() {
                assert!((v - 0.5).abs() < 1e-9);
            }
        }
        assert!(res.final_gamma.max_abs_diff(&anchor) < 1e-9);
    }

    #[test]
    fn traces_are_deterministic() {
        let s = compile(&catalog::selten()).unwrap();
        let anchor = random_anchor(&s, 11);
        let params = TransformParams::seeded(8, 1e-2, 11);
        let cfg = TracerConfig::default();
        let a = trace(&s, &anchor, &params, &cfg).unwrap();
        let b = trace(&s, &anchor, &params, &cfg).unwrap();
        assert_eq!(a.path, b.path);
        let many = trace_many(&s, &[(anchor.clone(), params.clone()), (anchor, params)], &cfg);
        assert_eq!(many[0].as_ref().unwrap().path, a.path);
        assert_eq!(many[1].as_ref().unwrap().path, a.path);
    }
}
