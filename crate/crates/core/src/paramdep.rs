//! Sampled checks of how fixed points and conjugacies depend on parameters.
//!
//! Sup distances between function-valued objects are estimated on a point
//! cloud; distances between family members are exact where the family
//! knows them. Every report carries the slack it allowed for truncation.

use std::sync::Arc;

use rayon::prelude::*;

use crate::conjugacy::{solve_v, solve_w, ConjugacyProblem, HolderCertificate};
use crate::error::{Error, Result};
use crate::linspace::{HyperbolicSystem, Vector};
use crate::maps::{invert_perturbed, Perturbation};
use crate::sampling;
use crate::scalars::{FieldSpec, Scalar};

type MemberFn = dyn Fn(f64) -> Result<Perturbation> + Send + Sync;
type DistanceFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// One-parameter family `t -> g_t`.
#[derive(Clone)]
pub struct Family {
    pub name: String,
    member: Arc<MemberFn>,
    distance: Option<Arc<DistanceFn>>,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family").field("name", &self.name).field("exact_distance", &self.distance.is_some()).finish()
    }
}

fn scalar_param(field: FieldSpec, t: f64) -> Result<Scalar> {
    field.from_f64(t)
}

impl Family {
    /// Arbitrary family; without `distance` the sup distance is sampled.
    pub fn new<M>(name: impl Into<String>, member: M, distance: Option<Arc<DistanceFn>>) -> Self
    where
        M: Fn(f64) -> Result<Perturbation> + Send + Sync + 'static,
    {
        Family { name: name.into(), member: Arc::new(member), distance }
    }

    /// `g_t = t c` (constant maps).
    pub fn constant(c: Vector) -> Self {
        let field = c.field();
        let c2 = c.clone();
        Family {
            name: "constant".into(),
            member: Arc::new(move |t| Ok(Perturbation::constant(c.scale(scalar_param(field, t)?)))),
            distance: Some(Arc::new(move |t, u| {
                let d = scalar_param(field, t).and_then(|a| Ok(a - scalar_param(field, u)?));
                d.map(|d| c2.scale(d).max_abs()).unwrap_or(f64::NAN)
            })),
        }
    }

    /// `g_t = radial_bump(t c, r1, r2)`; the bump attains its sup, so the
    /// distance is `||(t - u) c||`.
    pub fn radial_bump(c: Vector, r1: f64, r2: f64) -> Self {
        let field = c.field();
        let c2 = c.clone();
        Family {
            name: "radial_bump".into(),
            member: Arc::new(move |t| Perturbation::radial_bump(c.scale(scalar_param(field, t)?), r1, r2)),
            distance: Some(Arc::new(move |t, u| c2.scale(Scalar::Real(t - u)).max_abs())),
        }
    }

    /// `g_t = damped_sin(t amp, freq)`; distance sampled.
    pub fn damped_sin(field: FieldSpec, dim: usize, amp: f64, freq: f64) -> Self {
        Family {
            name: "damped_sin".into(),
            member: Arc::new(move |t| Perturbation::damped_sin(field, dim, t * amp, freq)),
            distance: None,
        }
    }

    /// `g_t = t base` where `sup_exact` is the exact sup norm of `base`.
    pub fn scaled(base: Perturbation, sup_exact: f64) -> Self {
        let field = base.field();
        Family {
            name: format!("scaled({})", base.name()),
            member: Arc::new(move |t| {
                let k = scalar_param(field, t)?;
                let abs_k = field.abs(&k);
                let c = base.cert();
                let b = base.clone();
                let cert = crate::maps::Certificate {
                    sup: c.sup * abs_k,
                    lip: c.lip * abs_k,
                    sup_s: c.sup_s * abs_k,
                    sup_u: c.sup_u * abs_k,
                    lip_s: c.lip_s * abs_k,
                    lip_u: c.lip_u * abs_k,
                };
                Perturbation::new(format!("{t} * {}", base.name()), field, base.dim(), cert, base.vanishes_at_zero(), move |x: &Vector| {
                    Ok(b.apply(x)?.scale(k))
                })
            }),
            distance: Some(Arc::new(move |t, u| match (scalar_param(field, t), scalar_param(field, u)) {
                (Ok(a), Ok(b)) => field.abs(&(a - b)) * sup_exact,
                _ => f64::NAN,
            })),
        }
    }

    pub fn member(&self, t: f64) -> Result<Perturbation> {
        (self.member)(t)
    }

    pub fn has_exact_distance(&self) -> bool {
        self.distance.is_some()
    }

    /// `d_inf(g_t, g_u)`: exact when known, else sampled on `points`.
    pub fn distance(&self, t: f64, u: f64, points: &[Vector]) -> Result<f64> {
        if let Some(d) = &self.distance {
            return Ok(d(t, u));
        }
        let (a, b) = (self.member(t)?, self.member(u)?);
        let ds: Vec<f64> = points
            .par_iter()
            .map(|x| Ok((&a.apply(x)? - &b.apply(x)?).max_abs()))
            .collect::<Result<_>>()?;
        Ok(ds.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub name: String,
    /// `(parameter distance, solution distance)` per parameter pair.
    pub pairs: Vec<(f64, f64)>,
    pub empirical_constant: f64,
    pub theoretical_constant: f64,
    pub exponent: f64,
    pub slack: f64,
    /// Description of the point cloud used for sup distances.
    pub cloud: String,
    /// Failed auxiliary checks (partial-sum bounds for fixed-point sweeps).
    pub auxiliary_violations: usize,
}

impl SweepReport {
    pub fn pass(&self) -> bool {
        self.empirical_constant <= self.theoretical_constant + self.slack && self.auxiliary_violations == 0
    }
}

/// Point cloud description for reports.
pub fn describe_cloud(points: &[Vector]) -> String {
    let max = points.iter().map(Vector::max_abs).fold(0.0, f64::max);
    format!("{} points, max coordinate norm {max:.3e}", points.len())
}

fn check_delta(sys: &HyperbolicSystem, g: &Perturbation, delta: f64) -> Result<()> {
    if g.sup().max(g.lip()) > delta * (1.0 + 1e-12) {
        return Err(Error::DeltaViolation(format!(
            "{}: max(sup, Lip) = {} exceeds delta = {delta}",
            g.name(),
            g.sup().max(g.lip())
        )));
    }
    let c = sys.constants();
    if !(c.a2inv * (1.0 + delta) < 1.0 && c.a1 + delta < 1.0 && delta * c.a_inv_norm < 1.0) {
        return Err(Error::DeltaViolation(format!("delta = {delta} too large for the system")));
    }
    Ok(())
}

fn contraction_factor(sys: &HyperbolicSystem, delta: f64) -> f64 {
    let c = sys.constants();
    (c.a2inv * (1.0 + delta)).max(c.a1 + delta)
}

struct Solved {
    values: Vec<Vector>,
    truncation: f64,
}

fn assemble(
    name: &str,
    family: &Family,
    params: &[f64],
    solved: &[Solved],
    points: &[Vector],
    exponent: f64,
    theoretical: f64,
    norm: impl Fn(&Vector) -> Result<f64> + Sync,
) -> Result<SweepReport> {
    let mut pairs = Vec::new();
    let mut empirical = 0.0f64;
    let mut slack = 0.0f64;
    for i in 0..params.len() {
        for j in i + 1..params.len() {
            let pd = family.distance(params[i], params[j], points)?;
            let sd = solved[i]
                .values
                .iter()
                .zip(&solved[j].values)
                .map(|(a, b)| norm(&(a - b)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            pairs.push((pd, sd));
            if pd > 0.0 {
                let denom = pd.powf(exponent);
                empirical = empirical.max(sd / denom);
                slack = slack.max((solved[i].truncation + solved[j].truncation + 1e-12) / denom);
            }
        }
    }
    Ok(SweepReport {
        name: name.into(),
        pairs,
        empirical_constant: empirical,
        theoretical_constant: theoretical,
        exponent,
        slack,
        cloud: describe_cloud(points),
        auxiliary_violations: 0,
    })
}

/// Lipschitz dependence of `v_g` on `g` over a family inside the
/// `delta`-ball, against `max(1, ||A_2^{-1}||) / (1 - lambda)`.
pub fn sweep_sigma(
    sys: Arc<HyperbolicSystem>,
    family: &Family,
    params: &[f64],
    points: &[Vector],
    delta: f64,
    target_trunc: f64,
) -> Result<SweepReport> {
    let members = params.iter().map(|&t| family.member(t)).collect::<Result<Vec<_>>>()?;
    for g in &members {
        check_delta(&sys, g, delta)?;
    }
    let solved = members
        .par_iter()
        .map(|g| {
            let sol = solve_v(&ConjugacyProblem::linearization(sys.clone(), g.clone())?, target_trunc)?;
            Ok(Solved { values: sol.evaluate_many(points)?, truncation: sol.truncation() })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda = contraction_factor(&sys, delta);
    let theoretical = sys.constants().a2inv.max(1.0) / (1.0 - lambda);
    assemble("sigma", family, params, &solved, points, 1.0, theoretical, |x| sys.norm(x))
}

/// The Hölder constant of `g -> w_g` assembled from the proof estimates:
/// `M / (1 - lambda)` with
/// `M = max((||A_1|| eps + 2 delta) L^alpha + rho, ||A_2^{-1}|| (rho + eps L^alpha))`,
/// `L = ||A^{-1}|| / (1 - delta ||A^{-1}||)` and `rho = max(1, 2 delta)`.
pub fn tau_constant(sys: &HyperbolicSystem, cert: &HolderCertificate, delta: f64) -> f64 {
    let c = sys.constants();
    let l = c.a_inv_norm / (1.0 - delta * c.a_inv_norm);
    let rho = 1f64.max(2.0 * delta);
    let la = l.powf(cert.alpha);
    let m = ((c.a1 * cert.eps + 2.0 * delta) * la + rho).max(c.a2inv * rho + c.a2inv * cert.eps * la);
    m / (1.0 - contraction_factor(sys, delta))
}

/// Hölder dependence of `w_g` on `g`.
pub fn sweep_tau(
    sys: Arc<HyperbolicSystem>,
    family: &Family,
    cert: &HolderCertificate,
    params: &[f64],
    points: &[Vector],
    delta: f64,
    target_trunc: f64,
) -> Result<SweepReport> {
    let members = params.iter().map(|&t| family.member(t)).collect::<Result<Vec<_>>>()?;
    for g in &members {
        check_delta(&sys, g, delta)?;
    }
    let solved = members
        .par_iter()
        .map(|g| {
            let sol = solve_w(&ConjugacyProblem::linearization(sys.clone(), g.clone())?, target_trunc)?;
            Ok(Solved { values: sol.evaluate_many(points)?, truncation: sol.truncation() })
        })
        .collect::<Result<Vec<_>>>()?;
    let theoretical = tau_constant(&sys, cert, delta);
    assemble("tau", family, params, &solved, points, cert.alpha, theoretical, |x| sys.norm(x))
}

/// Fixed points of a uniform family of contractions `f_x` on a metric
/// space, checked against `mu / (1 - lambda)`.
///
/// The iteration for `y_x` starts at `y0` and stops at `tol`; the partial
/// sums `d(f_v^n(y_w), y_w) <= mu d(v, w)^alpha sum_{k<n} lambda^k` are
/// checked for `n <= partial_terms`.
#[allow(clippy::too_many_arguments)]
pub fn check_fixed_point_family<Y, F, D>(
    params: &[f64],
    f: F,
    dist: D,
    y0: Y,
    mu: f64,
    lambda: f64,
    alpha: f64,
    partial_terms: usize,
) -> Result<SweepReport>
where
    Y: Clone + Send + Sync,
    F: Fn(f64, &Y) -> Y + Sync,
    D: Fn(&Y, &Y) -> f64 + Sync,
{
    if !(lambda >= 0.0 && lambda < 1.0) {
        return Err(Error::NotContractive(format!("lambda = {lambda}")));
    }
    let tol = 1e-14;
    let fixed: Vec<(Y, f64)> = params
        .par_iter()
        .map(|&x| {
            let mut y = y0.clone();
            for _ in 0..100_000 {
                let next = f(x, &y);
                let step = dist(&next, &y);
                y = next;
                // a-posteriori bound on the distance to the fixed point
                let bound = lambda * step / (1.0 - lambda);
                if bound <= tol * (1.0 + dist(&y, &y0)) {
                    return Ok((y, bound));
                }
            }
            Err(Error::MaxIterations(100_000))
        })
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut empirical = 0.0f64;
    let mut slack = 0.0f64;
    let mut violations = 0usize;
    let theoretical = mu / (1.0 - lambda);
    for i in 0..params.len() {
        for j in i + 1..params.len() {
            let pd = (params[i] - params[j]).abs();
            let sd = dist(&fixed[i].0, &fixed[j].0);
            pairs.push((pd, sd));
            if pd == 0.0 {
                continue;
            }
            let denom = pd.powf(alpha);
            let pair_slack = (fixed[i].1 + fixed[j].1 + 1e-13 * (1.0 + sd)) / denom;
            empirical = empirical.max(sd / denom);
            slack = slack.max(pair_slack);
            // partial sums from y_w under f_v, both directions
            for (v, w) in [(i, j), (j, i)] {
                let yw = &fixed[w].0;
                let mut y = yw.clone();
                let mut sum = 0.0;
                for n in 1..=partial_terms {
                    y = f(params[v], &y);
                    sum += lambda.powi(n as i32 - 1);
                    let lhs = dist(&y, yw);
                    let rhs = mu * denom * sum + 2.0 * fixed[w].1 + 1e-13 * (1.0 + lhs);
                    if lhs > rhs {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok(SweepReport {
        name: "fixed-point dependence".into(),
        pairs,
        empirical_constant: empirical,
        theoretical_constant: theoretical,
        exponent: alpha,
        slack,
        cloud: format!("{} parameters", params.len()),
        auxiliary_violations: violations,
    })
}

/// Lipschitz dependence of `(A + v)^{-1} - A^{-1}` on `v`, against
/// `||A^{-1}|| / (1 - lambda)`.
pub fn check_inverse_dependence(
    sys: &HyperbolicSystem,
    family: &Family,
    params: &[f64],
    points: &[Vector],
    lambda: f64,
) -> Result<SweepReport> {
    if !(lambda < 1.0) {
        return Err(Error::NotContractive(format!("lambda = {lambda}")));
    }
    let c = sys.constants();
    let members = params.iter().map(|&t| family.member(t)).collect::<Result<Vec<_>>>()?;
    for v in &members {
        if v.lip() * c.a_inv_norm > lambda * (1.0 + 1e-12) {
            return Err(Error::NotContractive(format!(
                "{}: Lip(v) ||A^-1|| = {} exceeds lambda = {lambda}",
                v.name(),
                v.lip() * c.a_inv_norm
            )));
        }
    }
    let tol = crate::maps::default_inverse_tol(sys.field());
    let solved = members
        .par_iter()
        .map(|v| {
            let values = points
                .iter()
                .map(|x| Ok(&invert_perturbed(sys, v, x, tol)? - &sys.apply_inv(x)))
                .collect::<Result<Vec<_>>>()?;
            // residual tol maps to an error of at most tol / (1/||A^-1|| - Lip v)
            let err = tol / (1.0 / c.a_inv_norm - v.lip()) + 1e-12;
            Ok(Solved { values, truncation: err })
        })
        .collect::<Result<Vec<_>>>()?;
    let theoretical = c.a_inv_norm / (1.0 - lambda);
    assemble("perturbed inverse", family, params, &solved, points, 1.0, theoretical, |x| sys.norm(x))
}

/// Default cloud for sweeps: `count` points over mixed radii.
pub fn default_cloud(field: FieldSpec, dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    sampling::mixed_cloud(field, dim, count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linspace::{check_hyperbolic, Matrix, NormSpec, Splitting};

    fn standard() -> Arc<HyperbolicSystem> {
        let f = FieldSpec::real(1.0).unwrap();
        let a = Matrix::from_f64_rows(f, &[&[0.5, 0.0], &[0.0, 2.0]]).unwrap();
        Arc::new(check_hyperbolic(&a, Splitting::new(1, 1), NormSpec::CoordMax).unwrap())
    }

    #[test]
    fn sigma_constant_family_ratio_two() {
        let f = FieldSpec::real(1.0).unwrap();
        let fam = Family::constant(Vector::from_f64(f, &[1.0, 1.0]).unwrap());
        let pts = default_cloud(f, 2, 50, 0);
        let rep = sweep_sigma(standard(), &fam, &[0.0, 0.02, 0.05, 0.1], &pts, 0.1, 1e-12).unwrap();
        assert!((rep.empirical_constant - 2.0).abs() < 1e-8, "{rep:?}");
        assert!((rep.theoretical_constant - 2.5).abs() < 1e-12);
        assert!(rep.pass());
    }

    #[test]
    fn sigma_equal_params() {
        let f = FieldSpec::real(1.0).unwrap();
        let fam = Family::constant(Vector::from_f64(f, &[1.0, 1.0]).unwrap());
        let pts = default_cloud(f, 2, 10, 0);
        let rep = sweep_sigma(standard(), &fam, &[0.05, 0.05], &pts, 0.1, 1e-12).unwrap();
        assert_eq!(rep.pairs[0].0, 0.0);
        assert!(rep.pairs[0].1 < 1e-12);
    }

    #[test]
    fn delta_violation() {
        let f = FieldSpec::real(1.0).unwrap();
        let fam = Family::constant(Vector::from_f64(f, &[1.0, 1.0]).unwrap());
        let pts = default_cloud(f, 2, 10, 0);
        assert!(matches!(sweep_sigma(standard(), &fam, &[0.0, 0.2], &pts, 0.1, 1e-10), Err(Error::DeltaViolation(_))));
    }

    #[test]
    fn fixed_point_family_tight_case() {
        let lam = 0.5;
        let rep = check_fixed_point_family(&[0.0, 0.3, -0.7, 1.0], |x, y: &f64| lam * y + x, |a, b| (a - b).abs(), 0.0, 1.0, lam, 1.0, 10).unwrap();
        assert!((rep.empirical_constant - 2.0).abs() < 0.02 * 2.0);
        assert!(rep.pass(), "{rep:?}");
    }

    #[test]
    fn inverse_dependence_constant_family() {
        let f = FieldSpec::real(1.0).unwrap();
        let sys = standard();
        let fam = Family::constant(Vector::from_f64(f, &[1.0, -1.0]).unwrap());
        let pts = default_cloud(f, 2, 20, 3);
        let rep = check_inverse_dependence(&sys, &fam, &[0.0, 0.1, 0.4], &pts, 0.2).unwrap();
        // w = -A^{-1} c_t; ratio ||A^{-1}(1, -1)|| = 2
        assert!((rep.empirical_constant - 2.0).abs() < 1e-9);
        assert!(rep.pass());
    }
}
