//! The transformed equilibrium system in the path variables `(x, ν, t)`.
//!
//! With `r = t^{1/κ₀}`, every non-empty sequence carries `y = ψ₁(x, r)`, a slack `ψ₂(x, r)`
//! and mass `γ = φ(y)`; the empty sequence has mass 1 and slack 1. The system stacks, per
//! non-empty sequence `ϖa` with parent `ϖ` at information set `I`,
//!
//! ```text
//! (1−t)·g(ϖa, γ^{-i}) + t·(ln γ⁰(ϖa) − ln γ⁰(ϖ)) + slack(ϖa) − slack(ϖ) − ν_I + ζ_I(a) − t(1−t)·α(ϖa)
//! ```
//!
//! followed by one flow row `Σ_a γ(ϖa) − γ(ϖ)` per information set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::transform::{ln_phi, phi, phi_prime, psi, r_of_t, TransformParams};
use crate::error::{Error, Result};
use crate::qre::for_each_cross_term;
use crate::sequence::{seq_marginal_payoff, Behavior, RealizationProfile, SequenceSpace};

/// A point `(x, ν, t)` of the path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
    pub t: f64,
}

impl PathPoint {
    pub(crate) fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len() + self.nu.len() + 1,
            self.x.iter().chain(&self.nu).copied().chain([self.t]),
        )
    }

    pub(crate) fn from_vector(z: &DVector<f64>, n0: usize) -> Self {
        let n = z.len() - 1;
        PathPoint {
            x: z.as_slice()[..n0].to_vec(),
            nu: z.as_slice()[n0..n].to_vec(),
            t: z[n],
        }
    }

    pub fn lambda_r(&self) -> f64 {
        (1.0 - self.t) / self.t
    }
}

/// Static description of one stationarity row.
#[derive(Clone, Debug)]
struct Row {
    player: usize,
    seq: usize,
    /// Row of the parent sequence, `None` for the empty sequence.
    parent: Option<usize>,
    /// Column of the information set's multiplier.
    own_nu: usize,
    downstream_nu: Vec<usize>,
    anchor_ratio: f64,
}

/// One flow row: the rows of the extensions and of the parent sequence.
#[derive(Clone, Debug)]
struct Flow {
    children: std::ops::Range<usize>,
    parent: Option<usize>,
}

/// Per-sequence transformed coordinates at a point.
struct Coords {
    y: Vec<f64>,
    slack: Vec<f64>,
    dy_dx: Vec<f64>,
    dslack_dx: Vec<f64>,
    dy_dt: Vec<f64>,
    dslack_dt: Vec<f64>,
    plans: Vec<Vec<f64>>,
}

/// The transformed system for a game, an interior anchor `γ⁰` and transform parameters.
#[derive(Clone, Debug)]
pub struct Homotopy<'a> {
    space: &'a SequenceSpace,
    anchor: RealizationProfile,
    params: TransformParams,
    rows: Vec<Row>,
    flows: Vec<Flow>,
}

impl<'a> Homotopy<'a> {
    pub fn new(
        space: &'a SequenceSpace,
        anchor: RealizationProfile,
        params: TransformParams,
    ) -> Result<Self> {
        anchor.validate(space, 1e-9)?;
        if let Some(&bad) = anchor.plans.iter().flatten().find(|&&v| v <= 0.0) {
            return Err(Error::NonPositive(bad));
        }
        let n0 = space.n0();
        params.validate(n0)?;
        let mut rows = Vec::with_capacity(n0);
        let mut flows = Vec::with_capacity(space.m0());
        for (i, p) in space.players().iter().enumerate() {
            let offset = space.action_offset(i);
            let nu_offset = n0 + space.infoset_offset(i);
            let row_of = |seq: usize| (seq != 0).then(|| offset + seq - 1);
            for seq in 1..p.len() {
                let (j, _) = p.origin[seq].expect("non-empty sequence has an origin");
                let parent = p.parent(seq);
                let plan = &anchor.plans[i];
                rows.push(Row {
                    player: i,
                    seq,
                    parent: row_of(parent),
                    own_nu: nu_offset + j,
                    downstream_nu: p.downstream[seq].iter().map(|&q| nu_offset + q).collect(),
                    anchor_ratio: plan[seq].ln() - plan[parent].ln(),
                });
            }
            for info in &p.infosets {
                flows.push(Flow {
                    children: offset + info.first_seq - 1..offset + info.first_seq - 1 + info.actions.len(),
                    parent: row_of(info.parent_seq),
                });
            }
        }
        Ok(Homotopy {
            space,
            anchor,
            params,
            rows,
            flows,
        })
    }

    pub fn space(&self) -> &'a SequenceSpace {
        self.space
    }

    pub fn anchor(&self) -> &RealizationProfile {
        &self.anchor
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    /// Number of equations, `n₀ + m₀`.
    pub fn dim(&self) -> usize {
        self.rows.len() + self.flows.len()
    }

    pub fn n0(&self) -> usize {
        self.rows.len()
    }

    /// The exact solution at `t = 1`: `x` chosen so that `φ(ψ₁(x, 1)) = γ⁰` and `ν = 0`.
    pub fn start_point(&self) -> PathPoint {
        let kappa = self.params.kappa0;
        let x = self
            .rows
            .iter()
            .map(|row| {
                let c = 1.0 - self.anchor.plans[row.player][row.seq].ln();
                c.powf(-1.0 / kappa) - c.powf(1.0 / kappa)
            })
            .collect();
        PathPoint {
            x,
            nu: vec![0.0; self.flows.len()],
            t: 1.0,
        }
    }

    fn coords(&self, x: &[f64], t: f64) -> Coords {
        let (r, dr_dt) = r_of_t(t, self.params.kappa0);
        let n0 = self.rows.len();
        let mut c = Coords {
            y: Vec::with_capacity(n0),
            slack: Vec::with_capacity(n0),
            dy_dx: Vec::with_capacity(n0),
            dslack_dx: Vec::with_capacity(n0),
            dy_dt: Vec::with_capacity(n0),
            dslack_dt: Vec::with_capacity(n0),
            plans: self.space.players().iter().map(|p| vec![1.0; p.len()]).collect(),
        };
        for (row, &v) in self.rows.iter().zip(x) {
            let s = psi(v, r, &self.params);
            c.y.push(s.psi1);
            c.slack.push(s.psi2);
            c.dy_dx.push(s.d1_dv);
            c.dslack_dx.push(s.d2_dv);
            c.dy_dt.push(s.d1_dr * dr_dt);
            c.dslack_dt.push(s.d2_dr * dr_dt);
            c.plans[row.player][row.seq] = phi(s.psi1);
        }
        c
    }

    fn marginals(&self, c: &Coords) -> Vec<Vec<f64>> {
        let gamma = RealizationProfile { plans: c.plans.clone() };
        (0..self.space.num_players())
            .map(|i| seq_marginal_payoff(self.space, i, &gamma))
            .collect()
    }

    /// `y = ψ₁(x, t^{1/κ₀})` per non-empty sequence.
    pub fn y(&self, point: &PathPoint) -> Vec<f64> {
        self.coords(&point.x, point.t).y
    }

    /// Slack `ψ₂(x, t^{1/κ₀})` per non-empty sequence.
    pub fn slack(&self, point: &PathPoint) -> Vec<f64> {
        self.coords(&point.x, point.t).slack
    }

    /// `γ = φ(y)`, with the empty sequences at 1.
    pub fn gamma(&self, point: &PathPoint) -> RealizationProfile {
        RealizationProfile {
            plans: self.coords(&point.x, point.t).plans,
        }
    }

    /// Conditional action probabilities computed from `ln γ`, so they stay meaningful below
    /// sequences whose mass underflows. Information sets under a sequence with `y ≤ 0` get the
    /// uniform distribution.
    pub fn behavior(&self, point: &PathPoint) -> Behavior {
        let c = self.coords(&point.x, point.t);
        let mut out: Behavior = self
            .space
            .players()
            .iter()
            .map(|p| p.infosets.iter().map(|info| vec![0.0; info.actions.len()]).collect())
            .collect();
        let mut k = 0;
        for (i, p) in self.space.players().iter().enumerate() {
            for (j, info) in p.infosets.iter().enumerate() {
                let flow = &self.flows[k];
                k += 1;
                let base = flow.parent.map_or(0.0, |r| ln_phi(c.y[r]));
                let logs: Vec<f64> = flow.children.clone().map(|r| ln_phi(c.y[r]) - base).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !max.is_finite() {
                    out[i][j] = vec![1.0 / info.actions.len() as f64; info.actions.len()];
                    continue;
                }
                let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let total: f64 = w.iter().sum();
                out[i][j] = w.into_iter().map(|v| v / total).collect();
            }
        }
        out
    }

    fn check_point(&self, point: &PathPoint) -> Result<()> {
        if point.x.len() != self.rows.len() || point.nu.len() != self.flows.len() {
            return Err(Error::DimensionMismatch(format!(
                "path point has {} + {} coordinates, expected {} + {}",
                point.x.len(),
                point.nu.len(),
                self.rows.len(),
                self.flows.len()
            )));
        }
        Ok(())
    }

    fn stationarity(&self, row: &Row, c: &Coords, g: &[Vec<f64>], nu: &[f64], t: f64, k: usize) -> f64 {
        let n0 = self.rows.len();
        let parent_slack = row.parent.map_or(1.0, |p| c.slack[p]);
        let zeta: f64 = row.downstream_nu.iter().map(|&q| nu[q - n0]).sum();
        (1.0 - t) * g[row.player][row.seq] + t * row.anchor_ratio + c.slack[k] - parent_slack
            - nu[row.own_nu - n0]
            + zeta
            - t * (1.0 - t) * self.params.alpha[k]
    }

    /// Residual of the transformed system, length `n₀ + m₀`.
    pub fn residual_transformed(&self, point: &PathPoint) -> Result<Vec<f64>> {
        self.check_point(point)?;
        let t = point.t;
        let c = self.coords(&point.x, t);
        let g = self.marginals(&c);
        let mut out = Vec::with_capacity(self.dim());
        for (k, row) in self.rows.iter().enumerate() {
            out.push(self.stationarity(row, &c, &g, &point.nu, t, k));
        }
        for flow in &self.flows {
            let parent = flow.parent.map_or(1.0, |p| phi(c.y[p]));
            out.push(flow.children.clone().map(|r| phi(c.y[r])).sum::<f64>() - parent);
        }
        Ok(out)
    }

    /// Jacobian of the residual with columns `(x, ν, t)`, shape `(n₀+m₀) × (n₀+m₀+1)`.
    /// The `t` column is not finite at `t = 0`.
    pub fn jacobian_transformed(&self, point: &PathPoint) -> Result<DMatrix<f64>> {
        self.check_point(point)?;
        let c = self.coords(&point.x, point.t);
        let g = self.marginals(&c);
        let mut jac = DMatrix::zeros(self.dim(), self.dim() + 1);
        self.fill_jacobian(&c, &g, point.t, &mut jac);
        for (f, flow) in self.flows.iter().enumerate() {
            let row = self.rows.len() + f;
            for r in flow.children.clone() {
                let d = phi_prime(c.y[r]);
                jac[(row, r)] += d * c.dy_dx[r];
                jac[(row, self.dim())] += d * c.dy_dt[r];
            }
            if let Some(p) = flow.parent {
                let d = phi_prime(c.y[p]);
                jac[(row, p)] -= d * c.dy_dx[p];
                jac[(row, self.dim())] -= d * c.dy_dt[p];
            }
        }
        Ok(jac)
    }

    /// Stationarity rows of the Jacobian; the flow rows are left to the caller.
    fn fill_jacobian(&self, c: &Coords, g: &[Vec<f64>], t: f64, jac: &mut DMatrix<f64>) {
        let n = self.dim();
        let offsets: Vec<usize> = (0..self.space.num_players()).map(|i| self.space.action_offset(i)).collect();
        for (k, row) in self.rows.iter().enumerate() {
            let g = g[row.player][row.seq];
            jac[(k, k)] += c.dslack_dx[k];
            jac[(k, n)] += -g + row.anchor_ratio + c.dslack_dt[k] - (1.0 - 2.0 * t) * self.params.alpha[k];
            if let Some(p) = row.parent {
                jac[(k, p)] -= c.dslack_dx[p];
                jac[(k, n)] -= c.dslack_dt[p];
            }
            jac[(k, row.own_nu)] -= 1.0;
            for &q in &row.downstream_nu {
                jac[(k, q)] += 1.0;
            }
        }
        for_each_cross_term(self.space, &c.plans, |i, si, q, sq, d| {
            let k = offsets[i] + si - 1;
            let col = offsets[q] + sq - 1;
            let dphi = phi_prime(c.y[col]);
            jac[(k, col)] += (1.0 - t) * d * dphi * c.dy_dx[col];
            jac[(k, n)] += (1.0 - t) * d * dphi * c.dy_dt[col];
        });
    }

    /// Residual and Jacobian at `z = (x, ν, t)` with every flow row divided by its parent mass
    /// and evaluated in log space: `Σ_a exp(ln γ(ϖa) − ln γ(ϖ)) − 1`. The zero set is the same
    /// wherever `y > 0`, but the rows stay well scaled when masses underflow. `None` when some
    /// `y ≤ 0` or `t ∉ (0, 1]`.
    pub(crate) fn scaled_system(
        &self,
        z: &DVector<f64>,
        want_jac: bool,
    ) -> Option<(DVector<f64>, Option<DMatrix<f64>>)> {
        let n0 = self.rows.len();
        let n = self.dim();
        let t = z[n];
        if !(t > 0.0 && t <= 1.0) {
            return None;
        }
        let x = &z.as_slice()[..n0];
        let nu = &z.as_slice()[n0..n];
        let c = self.coords(x, t);
        if c.y.iter().any(|&y| !(y > 0.0)) {
            return None;
        }
        let g = self.marginals(&c);
        let mut f = DVector::zeros(n);
        for (k, row) in self.rows.iter().enumerate() {
            f[k] = self.stationarity(row, &c, &g, nu, t, k);
        }
        let mut jac = want_jac.then(|| DMatrix::zeros(n, n + 1));
        if let Some(jac) = jac.as_mut() {
            self.fill_jacobian(&c, &g, t, jac);
        }
        for (fi, flow) in self.flows.iter().enumerate() {
            let row = n0 + fi;
            let base = flow.parent.map_or(0.0, |p| ln_phi(c.y[p]));
            let mut total = 0.0;
            for r in flow.children.clone() {
                let w = (ln_phi(c.y[r]) - base).exp();
                total += w;
                if let Some(jac) = jac.as_mut() {
                    let dl = w / (c.y[r] * c.y[r]);
                    jac[(row, r)] += dl * c.dy_dx[r];
                    jac[(row, n)] += dl * c.dy_dt[r];
                }
            }
            f[row] = total - 1.0;
            if let (Some(jac), Some(p)) = (jac.as_mut(), flow.parent) {
                let dl = total / (c.y[p] * c.y[p]);
                jac[(row, p)] -= dl * c.dy_dx[p];
                jac[(row, n)] -= dl * c.dy_dt[p];
            }
        }
        f.iter().all(|v| v.is_finite()).then_some((f, jac))
    }

    /// Residual at `t = 0` and its `(x, ν)` Jacobian, for the endpoint polish.
    pub(crate) fn system_at_zero(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        let n0 = self.rows.len();
        let point = PathPoint {
            x: z.as_slice()[..n0].to_vec(),
            nu: z.as_slice()[n0..n].to_vec(),
            t: 0.0,
        };
        let f = DVector::from_vec(self.residual_transformed(&point).expect("shape checked"));
        let jac = self.jacobian_transformed(&point).expect("shape checked");
        (f, jac.columns(0, n).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::qre::{solve_fixed_t, QreInstance};
    use crate::sequence::compile;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
    }

    fn anchor(space: &SequenceSpace) -> RealizationProfile {
        let behavior: Behavior = vec![
            vec![vec![0.3, 0.7], vec![0.55, 0.45]],
            vec![vec![0.2, 0.8]],
            vec![vec![0.6, 0.4]],
        ];
        RealizationProfile::from_behavior(space, &behavior)
    }

    #[test]
    fn start_point_examples() {
        let s = compile(&catalog::one_player(&[1.0, 0.0])).unwrap();
        let e = (-1f64).exp();
        let a = RealizationProfile {
            plans: vec![vec![1.0, e, 1.0 - e]],
        };
        let h = Homotopy::new(&s, a, TransformParams::unperturbed(2)).unwrap();
        let x = h.start_point().x;
        assert!((x[0] - (2f64.powf(-1.0 / 3.0) - 2f64.powf(1.0 / 3.0))).abs() < 1e-15);
        assert!((x[0] + 0.46622).abs() < 1e-5);
    }

    #[test]
    fn start_point_solves_system() {
        let s = compile(&catalog::selten()).unwrap();
        let h = Homotopy::new(&s, anchor(&s), TransformParams::seeded(8, 1e-2, 7)).unwrap();
        let p = h.start_point();
        assert!(max_abs(&h.residual_transformed(&p).unwrap()) < 1e-12);
        assert!(h.gamma(&p).max_abs_diff(&anchor(&s)) < 1e-12);
    }

    #[test]
    fn t_column_at_start() {
        let s = compile(&catalog::selten()).unwrap();
        let params = TransformParams::seeded(8, 1e-2, 7);
        let alpha = params.alpha.clone();
        let h = Homotopy::new(&s, anchor(&s), params).unwrap();
        let p = h.start_point();
        let jac = h.jacobian_transformed(&p).unwrap();
        let unperturbed = Homotopy::new(&s, anchor(&s), TransformParams::unperturbed(8)).unwrap();
        let jac0 = unperturbed.jacobian_transformed(&p).unwrap();
        for k in 0..8 {
            assert!((jac[(k, 12)] - jac0[(k, 12)] - alpha[k]).abs() < 1e-14);
        }
        let square = jac.columns(0, 12).into_owned();
        assert!(square.lu().determinant().abs() > 1e-8);
    }

    #[test]
    fn fixed_t_solution_maps_onto_path() {
        let s = compile(&catalog::selten()).unwrap();
        let a = anchor(&s);
        let t = 0.5;
        let inst = QreInstance::new(&s, Some(&a), t).unwrap();
        let (gamma, nu) = solve_fixed_t(&inst, None).unwrap();
        let h = Homotopy::new(&s, a.clone(), TransformParams::unperturbed(8)).unwrap();
        // Invert y = t/slack with ln γ = 1 − 1/y, then x = p − q from ψ's bases.
        let (r, _) = r_of_t(t, 3.0);
        let mut x = Vec::new();
        for i in 0..3 {
            for seq in 1..s.player(i).len() {
                let y = 1.0 / (1.0 - gamma.plans[i][seq].ln());
                let p = y.powf(1.0 / 3.0);
                x.push(p - r / p);
            }
        }
        let mut nu = nu.flatten();
        for (k, info) in s.players().iter().flat_map(|p| p.infosets.iter()).enumerate() {
            if info.parent_seq == 0 {
                nu[k] += t - 1.0;
            }
        }
        let point = PathPoint { x, nu, t };
        assert!(max_abs(&h.residual_transformed(&point).unwrap()) < 1e-10);
    }

    #[test]
    fn behavior_from_logs() {
        let s = compile(&catalog::selten()).unwrap();
        let h = Homotopy::new(&s, anchor(&s), TransformParams::unperturbed(8)).unwrap();
        let b = h.behavior(&h.start_point());
        assert!((b[0][1][0] - 0.55).abs() < 1e-12);
        assert!((b[2][0][1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn scaled_system_shares_zeros() {
        let s = compile(&catalog::selten()).unwrap();
        let h = Homotopy::new(&s, anchor(&s), TransformParams::seeded(8, 1e-2, 1)).unwrap();
        let z = h.start_point().to_vector();
        let (f, jac) = h.scaled_system(&z, true).unwrap();
        assert!(f.amax() < 1e-12);
        let jac = jac.unwrap();
        assert_eq!(jac.shape(), (12, 13));
        let mut bad = z.clone();
        bad[12] = 0.0;
        assert!(h.scaled_system(&bad, false).is_none());
    }
}
