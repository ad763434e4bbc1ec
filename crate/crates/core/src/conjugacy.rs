//! The contraction `theta = (theta_1, theta_2)` whose fixed point `v`
//! satisfies `(id + v) o (A + h) = (A + g) o (id + v)`, its truncated
//! evaluation, a-priori bounds, and Hölder certificates.
//!
//! With `k = (A + h)^{-1}` and `F = A + h`:
//!
//! ```text
//! theta_1(v)(x) = A_1 v_s(k x) - h_s(k x) + g_s(k x + v(k x))
//! theta_2(v)(x) = A_2^{-1} [ h_u(x) + v_u(F x) - g_u(x + v(x)) ]
//! ```
//!
//! `theta` is a contraction of `BC(E, E)` with constant
//! `Lambda = max(||A_2^{-1}|| (1 + Lip g_u), ||A_1|| + Lip g_s)`, so the
//! depth-`N` iterate `theta^N(0)` is within
//! `Lambda^N ||theta(0)|| / (1 - Lambda)` of `v` in sup norm.
//!
//! Since `v_m(x)` depends on `v_{m-1}` only at `k x`, `x` and `F x`, and
//! `k o F = id`, every value needed for `v_N(x)` lives on the orbit
//! `F^j x, |j| <= N`. [`Strategy::Orbit`] evaluates bottom-up on that
//! orbit in `O(N^2)` steps. [`Strategy::WordTree`] recurses over all words
//! in `{k, F}` with a memo and is kept as an independent cross-check.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linspace::{HyperbolicSystem, SystemConstants, Vector};
use crate::maps::{apply_perturbed, invert_perturbed, Perturbation};
use crate::scalars::{FieldSpec, ScalarKey};

/// Default word-tree depth cap.
pub const DEFAULT_DEPTH_CAP: usize = 20;

/// Component constants of `g` and `h` as seen by the problem. Blocks of
/// dimension zero contribute nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Parts {
    sup_s: f64,
    sup_u: f64,
    lip_s: f64,
    lip_u: f64,
    lip: f64,
}

impl Parts {
    fn of(p: &Perturbation, sys: &HyperbolicSystem) -> Self {
        let c = p.cert();
        let sp = sys.splitting();
        let (sup_s, lip_s) = if sp.dim_s == 0 { (0.0, 0.0) } else { (c.sup_s, c.lip_s) };
        let (sup_u, lip_u) = if sp.dim_u == 0 { (0.0, 0.0) } else { (c.sup_u, c.lip_u) };
        Parts { sup_s, sup_u, lip_s, lip_u, lip: c.lip }
    }
}

#[derive(Debug, Clone)]
pub struct ConjugacyProblem {
    sys: Arc<HyperbolicSystem>,
    g: Perturbation,
    h: Perturbation,
    lambda: f64,
}

impl ConjugacyProblem {
    /// Checks `Lip(h) ||A^{-1}|| < 1` and `Lambda < 1`.
    pub fn new(sys: Arc<HyperbolicSystem>, g: Perturbation, h: Perturbation) -> Result<Self> {
        for p in [&g, &h] {
            if p.dim() != sys.dim() {
                return Err(Error::DimensionMismatch { expected: sys.dim(), got: p.dim() });
            }
            if p.field() != sys.field() {
                return Err(Error::InvalidArgument("perturbation field differs from system field".into()));
            }
        }
        let c = sys.constants();
        if !(h.lip() * c.a_inv_norm < 1.0) {
            return Err(Error::NotContractive(format!(
                "Lip(h) = {} is not below 1/||A^-1|| = {}",
                h.lip(),
                1.0 / c.a_inv_norm
            )));
        }
        let gp = Parts::of(&g, &sys);
        let lambda = (c.a2inv * (1.0 + gp.lip_u)).max(c.a1 + gp.lip_s);
        if !(lambda < 1.0) {
            return Err(Error::NotContractive(format!("Lambda = {lambda} is not below 1")));
        }
        Ok(ConjugacyProblem { sys, g, h, lambda })
    }

    /// Linearization of `A + g`: `h = 0`.
    pub fn linearization(sys: Arc<HyperbolicSystem>, g: Perturbation) -> Result<Self> {
        let h = Perturbation::zero(sys.field(), sys.dim());
        Self::new(sys, g, h)
    }

    /// The problem with the roles of `g` and `h` exchanged.
    pub fn swapped(&self) -> Result<Self> {
        Self::new(self.sys.clone(), self.h.clone(), self.g.clone())
    }

    pub fn sys(&self) -> &HyperbolicSystem {
        &self.sys
    }

    pub fn sys_arc(&self) -> Arc<HyperbolicSystem> {
        self.sys.clone()
    }

    pub fn g(&self) -> &Perturbation {
        &self.g
    }

    pub fn h(&self) -> &Perturbation {
        &self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn field(&self) -> FieldSpec {
        self.sys.field()
    }

    /// Certified bound on `||theta(0)||_inf` from the triangle inequality.
    pub fn theta0_sup(&self) -> f64 {
        let (g, h) = (Parts::of(&self.g, &self.sys), Parts::of(&self.h, &self.sys));
        (h.sup_s + g.sup_s).max(self.sys.constants().a2inv * (h.sup_u + g.sup_u))
    }

    /// Truncation bound of the depth-`n` iterate started at 0.
    pub fn truncation(&self, n: usize) -> f64 {
        self.lambda.powi(n as i32) * self.theta0_sup() / (1.0 - self.lambda)
    }

    /// Smallest depth whose truncation bound is at most `target`.
    pub fn depth_for(&self, target: f64) -> Result<usize> {
        let t0 = self.theta0_sup();
        if t0 == 0.0 {
            return Ok(0);
        }
        if !(target > 0.0) {
            return Err(Error::InvalidArgument(format!("target truncation {target} must be positive")));
        }
        let mut n = 0usize;
        while self.truncation(n) > target {
            n += 1;
            if n > 100_000 {
                return Err(Error::MaxIterations(n));
            }
        }
        Ok(n)
    }

    /// `(A + h)(x)`.
    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        apply_perturbed(&self.sys, &self.h, x)
    }

    /// `(A + h)^{-1}(x)`.
    pub fn backward(&self, x: &Vector, tol_inv: f64) -> Result<Vector> {
        invert_perturbed(&self.sys, &self.h, x, tol_inv)
    }
}

/// Right-hand side of the a-priori estimate `||v|| <= ||theta(0)|| / (1 - Lambda)`.
pub fn a_priori_sup(problem: &ConjugacyProblem) -> f64 {
    problem.theta0_sup() / (1.0 - problem.lambda)
}

/// `theta(v)(x)` for an arbitrary evaluator `v`.
pub fn theta_apply<V>(problem: &ConjugacyProblem, v: V, x: &Vector, tol_inv: f64) -> Result<Vector>
where
    V: Fn(&Vector) -> Result<Vector>,
{
    let sys = problem.sys();
    sys.check_dim(x)?;
    let kx = problem.backward(x, tol_inv)?;
    let v_kx = v(&kx)?;
    let g_k = problem.g.apply(&(&kx + &v_kx))?;
    let h_k = problem.h.apply(&kx)?;
    let stable = &(&sys.apply_a1(&sys.project_s(&v_kx)) - &sys.project_s(&h_k)) + &sys.project_s(&g_k);

    let fx = problem.forward(x)?;
    let v_fx = v(&fx)?;
    let v_x = v(x)?;
    let g_x = problem.g.apply(&(x + &v_x))?;
    let h_x = problem.h.apply(x)?;
    let inner = &(&sys.project_u(&h_x) + &sys.project_u(&v_fx)) - &sys.project_u(&g_x);
    Ok(Vector::concat(&stable, &sys.apply_a2_inv(&inner)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Bottom-up over the orbit `F^j x, |j| <= N`.
    Orbit,
    /// Memoized recursion over words in `{k, F}`, depth at most `cap`.
    WordTree { cap: usize },
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub strategy: Strategy,
    /// Inner-inverse tolerance; `None` picks the default.
    pub tol_inv: Option<f64>,
    /// Constant starting function `v_0`; `None` means `v_0 = 0`.
    pub seed: Option<Vector>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { strategy: Strategy::Orbit, tol_inv: None, seed: None }
    }
}

/// Certified Hölder data: `Lip_alpha(v) <= eps` for `v` and `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCertificate {
    pub alpha: f64,
    pub eps: f64,
    /// Largest admissible exponent found by the search.
    pub alpha_max: f64,
    /// `Delta_{g,h}` at `alpha` (minimum over both orderings).
    pub delta_gh_s: f64,
    /// `delta_{g,h}` at `alpha` (minimum over both orderings).
    pub delta_gh_u: f64,
}

type MemoKey = (usize, Vec<ScalarKey>);

/// `theta^N(v_0)` as a lazily evaluated map.
#[derive(Debug)]
pub struct ConjugacySolution {
    problem: ConjugacyProblem,
    depth: usize,
    strategy: Strategy,
    a_priori: f64,
    truncation: f64,
    tol_inv: f64,
    seed: Option<Vector>,
    cert: Option<HolderCertificate>,
    cache: RwLock<HashMap<MemoKey, Vector>>,
}

/// Default inner-inverse tolerance for a given truncation bound.
pub fn default_tol_inv(field: FieldSpec, truncation: f64) -> f64 {
    if field.is_ultrametric() {
        0.0
    } else {
        (truncation / 100.0).min(1e-13)
    }
}

/// Builds `theta^N(0)` with `N` chosen so that the truncation bound is at
/// most `target_trunc`.
pub fn solve_v(problem: &ConjugacyProblem, target_trunc: f64) -> Result<ConjugacySolution> {
    solve_v_with(problem, target_trunc, SolveOptions::default())
}

pub fn solve_v_with(problem: &ConjugacyProblem, target_trunc: f64, opts: SolveOptions) -> Result<ConjugacySolution> {
    let depth = match &opts.seed {
        None => problem.depth_for(target_trunc)?,
        Some(seed) => {
            let start = seed_defect(problem, seed)?;
            let mut n = 0usize;
            while problem.lambda.powi(n as i32) * start / (1.0 - problem.lambda) > target_trunc {
                n += 1;
                if n > 100_000 {
                    return Err(Error::MaxIterations(n));
                }
            }
            n
        }
    };
    ConjugacySolution::at_depth(problem.clone(), depth, opts)
}

/// Bound on `||theta(v_0) - v_0||` for a constant seed `v_0 = c`.
fn seed_defect(problem: &ConjugacyProblem, seed: &Vector) -> Result<f64> {
    let c = problem.sys().norm(seed)?;
    Ok(problem.theta0_sup() + (1.0 + problem.lambda) * c)
}

/// `w` for the problem: `v` of the problem with `g` and `h` exchanged.
pub fn solve_w(problem: &ConjugacyProblem, target_trunc: f64) -> Result<ConjugacySolution> {
    solve_w_with(problem, target_trunc, SolveOptions::default())
}

pub fn solve_w_with(problem: &ConjugacyProblem, target_trunc: f64, opts: SolveOptions) -> Result<ConjugacySolution> {
    solve_v_with(&problem.swapped()?, target_trunc, opts)
}

impl ConjugacySolution {
    pub fn at_depth(problem: ConjugacyProblem, depth: usize, opts: SolveOptions) -> Result<Self> {
        if let Strategy::WordTree { cap } = opts.strategy {
            if depth > cap {
                return Err(Error::DepthCap { required: depth, cap });
            }
        }
        let truncation = match &opts.seed {
            None => problem.truncation(depth),
            Some(seed) => {
                problem.sys().check_dim(seed)?;
                problem.lambda.powi(depth as i32) * seed_defect(&problem, seed)? / (1.0 - problem.lambda)
            }
        };
        let tol_inv = opts.tol_inv.unwrap_or_else(|| default_tol_inv(problem.field(), truncation));
        Ok(ConjugacySolution {
            a_priori: a_priori_sup(&problem),
            problem,
            depth,
            strategy: opts.strategy,
            truncation,
            tol_inv,
            seed: opts.seed,
            cert: None,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Same problem and options at another depth (fresh cache).
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        let opts = SolveOptions { strategy: self.strategy, tol_inv: Some(self.tol_inv), seed: self.seed.clone() };
        Self::at_depth(self.problem.clone(), depth, opts)
    }

    pub fn with_cert(mut self, cert: HolderCertificate) -> Self {
        self.cert = Some(cert);
        self
    }

    pub fn problem(&self) -> &ConjugacyProblem {
        &self.problem
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn a_priori_sup(&self) -> f64 {
        self.a_priori
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn tol_inv(&self) -> f64 {
        self.tol_inv
    }

    pub fn cert(&self) -> Option<&HolderCertificate> {
        self.cert.as_ref()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().len()
    }

    fn start_value(&self, x: &Vector) -> Vector {
        match &self.seed {
            Some(c) => c.clone(),
            None => Vector::zeros(x.field(), x.dim()),
        }
    }

    /// `v_N(x)`.
    pub fn evaluate(&self, x: &Vector) -> Result<Vector> {
        self.problem.sys().check_dim(x)?;
        let key = (self.depth, x.key());
        if let Some(v) = self.cache.read().get(&key) {
            return Ok(v.clone());
        }
        let v = match self.strategy {
            Strategy::Orbit => self.eval_orbit(x)?,
            Strategy::WordTree { .. } => self.eval_word(x, self.depth)?,
        };
        self.cache.write().entry(key).or_insert_with(|| v.clone());
        Ok(v)
    }

    /// Evaluates at many points in parallel, preserving order.
    pub fn evaluate_many(&self, xs: &[Vector]) -> Result<Vec<Vector>> {
        xs.par_iter().map(|x| self.evaluate(x)).collect()
    }

    /// `x + v_N(x)`.
    pub fn apply_conjugacy(&self, x: &Vector) -> Result<Vector> {
        Ok(x + &self.evaluate(x)?)
    }

    fn eval_orbit(&self, x: &Vector) -> Result<Vector> {
        let n = self.depth;
        let p = &self.problem;
        let sys = p.sys();
        if n == 0 {
            return Ok(self.start_value(x));
        }
        // pts[n + j] = F^j x
        let len = 2 * n + 1;
        let mut pts: Vec<Vector> = vec![x.clone(); len];
        for i in n..len - 1 {
            pts[i + 1] = p.forward(&pts[i])?;
        }
        for i in (1..=n).rev() {
            pts[i - 1] = p.backward(&pts[i], self.tol_inv)?;
        }
        let h_vals: Vec<Vector> = if p.h.is_identically_zero() {
            vec![Vector::zeros(x.field(), x.dim()); len]
        } else {
            pts.iter().map(|q| p.h.apply(q)).collect::<Result<_>>()?
        };
        let ds = sys.splitting().dim_s;
        let mut v: Vec<Vector> = vec![self.start_value(x); len];
        for m in 1..=n {
            // g(P_i + v_{m-1}(P_i)) for every index used at this level
            let lo = m - 1;
            let hi = len - m;
            let mut gv: Vec<Option<Vector>> = vec![None; len];
            for i in lo..=hi {
                gv[i] = Some(p.g.apply(&(&pts[i] + &v[i]))?);
            }
            let mut next = v.clone();
            for i in m..len - m {
                let gk = gv[i - 1].as_ref().unwrap();
                let (vk_s, _) = v[i - 1].split(ds);
                let (hk_s, _) = h_vals[i - 1].split(ds);
                let (gk_s, _) = gk.split(ds);
                let stable = &(&sys.apply_a1(&vk_s) - &hk_s) + &gk_s;

                let (_, hx_u) = h_vals[i].split(ds);
                let (_, vf_u) = v[i + 1].split(ds);
                let (_, gx_u) = gv[i].as_ref().unwrap().split(ds);
                let unstable = sys.apply_a2_inv(&(&(&hx_u + &vf_u) - &gx_u));
                next[i] = Vector::concat(&stable, &unstable);
            }
            v = next;
        }
        Ok(v.swap_remove(n))
    }

    fn eval_word(&self, x: &Vector, level: usize) -> Result<Vector> {
        if level == 0 {
            return Ok(self.start_value(x));
        }
        let key = (level, x.key());
        if let Some(v) = self.cache.read().get(&key) {
            return Ok(v.clone());
        }
        let tol = self.tol_inv;
        let v = theta_apply(&self.problem, |y| self.eval_word(y, level - 1), x, tol)?;
        self.cache.write().entry(key).or_insert_with(|| v.clone());
        Ok(v)
    }
}

/// Floating-point and digit-truncation slack for residual checks at a
/// point of norm `scale`.
pub fn arithmetic_slack(field: FieldSpec, scale: f64) -> f64 {
    field.rounding_floor(scale, ARITHMETIC_REL)
}

/// Relative float error allowed on a residual, about 1e5 ulps.
pub const ARITHMETIC_REL: f64 = 1e-11;

/// `||(A + g)(x + v(x)) - (A + h)(x) - v((A + h)(x))||`.
pub fn conjugacy_residual(sol: &ConjugacySolution, x: &Vector) -> Result<f64> {
    let p = sol.problem();
    let sys = p.sys();
    let y = sol.apply_conjugacy(x)?;
    let lhs = apply_perturbed(sys, p.g(), &y)?;
    let fx = p.forward(x)?;
    let rhs = &fx + &sol.evaluate(&fx)?;
    sys.norm(&(&lhs - &rhs))
}

/// Budget for [`conjugacy_residual`]: `(1 + ||A|| + Lip g) T + slack`.
pub fn conjugacy_budget(sol: &ConjugacySolution, x: &Vector) -> Result<f64> {
    let p = sol.problem();
    let c = p.sys().constants();
    let scale = p.sys().norm(x)?.max(c.a_norm * p.sys().norm(x)?);
    Ok((1.0 + c.a_norm + p.g().lip()) * sol.truncation() + arithmetic_slack(p.field(), scale))
}

/// `||(id + v)((id + w)(x)) - x||`.
pub fn pairing_residual(v: &ConjugacySolution, w: &ConjugacySolution, x: &Vector) -> Result<f64> {
    let y = w.apply_conjugacy(x)?;
    let z = v.apply_conjugacy(&y)?;
    v.problem().sys().norm(&(&z - x))
}

/// Budget for [`pairing_residual`]: `T_v + T_w + eps T_w^alpha + slack`,
/// using that every iterate of `v` has `Lip_alpha <= eps`.
pub fn pairing_budget(v: &ConjugacySolution, w: &ConjugacySolution, cert: &HolderCertificate, x: &Vector) -> Result<f64> {
    let tw = w.truncation();
    let scale = v.problem().sys().norm(x)?;
    Ok(v.truncation() + tw + cert.eps * tw.powf(cert.alpha) + arithmetic_slack(v.problem().field(), scale))
}

/// Sampled `max ||v(x) - v(y)|| / ||x - y||^alpha` over pairs at least
/// `min_sep` apart.
pub fn empirical_holder(sol: &ConjugacySolution, alpha: f64, pairs: &[(Vector, Vector)], min_sep: f64) -> Result<f64> {
    let sys = sol.problem().sys();
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| {
            let d = sys.norm(&(x - y))?;
            if d < min_sep {
                return Ok(0.0);
            }
            let dv = sys.norm(&(&sol.evaluate(x)? - &sol.evaluate(y)?))?;
            Ok(dv / d.powf(alpha))
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Upper bound that [`empirical_holder`] must respect.
pub fn empirical_holder_bound(sol: &ConjugacySolution, cert: &HolderCertificate, min_sep: f64) -> f64 {
    cert.eps + 2.0 * sol.truncation() / min_sep.powf(cert.alpha)
}

// ---------------------------------------------------------------------------
// Hölder certificates

/// Constants of one ordering `(g, h)`.
#[derive(Debug, Clone, Copy)]
struct Ordering {
    c: SystemConstants,
    g: Parts,
    h: Parts,
    g_sup: f64,
    has_s: bool,
    has_u: bool,
}

impl Ordering {
    fn new(problem: &ConjugacyProblem, g: &Perturbation, h: &Perturbation) -> Self {
        let sys = problem.sys();
        let sp = sys.splitting();
        Ordering {
            c: sys.constants(),
            g: Parts::of(g, sys),
            h: Parts::of(h, sys),
            g_sup: g.sup(),
            has_s: sp.dim_s > 0,
            has_u: sp.dim_u > 0,
        }
    }

    /// `1/||A^{-1}|| - Lip(h)`.
    fn base(&self) -> f64 {
        1.0 / self.c.a_inv_norm - self.h.lip
    }

    fn delta_s(&self, alpha: f64) -> f64 {
        if !self.has_s {
            return 1.0;
        }
        1.0 - (self.c.a1 + self.g.lip_s) / self.base().powf(alpha)
    }

    fn delta_u(&self, alpha: f64) -> f64 {
        if !self.has_u {
            return 1.0;
        }
        1.0 - self.c.a2inv * ((self.c.a_norm + self.h.lip).powf(alpha) + self.g.lip_u)
    }

    fn eps_s(&self, alpha: f64) -> f64 {
        if !self.has_s {
            return 0.0;
        }
        let b = self.base();
        let num = (self.h.lip_s / b).max(2.0 * self.h.sup_s) + self.g.lip_s.max(2.0 * self.g.sup_s) / b.powf(alpha);
        num / self.delta_s(alpha)
    }

    fn eps_u(&self, alpha: f64) -> f64 {
        if !self.has_u {
            return 0.0;
        }
        self.c.a2inv * (self.h.lip_u.max(2.0 * self.h.sup_u) + self.g.lip_u.max(2.0 * self.g.sup_u)) / self.delta_u(alpha)
    }

    /// Left-hand sides of the sufficient conditions for the stable and
    /// unstable Hölder estimates.
    fn lhs(&self, alpha: f64, eps: f64) -> (f64, f64) {
        let b = self.base();
        let c = self.c;
        let s = if self.has_s {
            eps * c.a1 / b.powf(alpha)
                + (self.h.lip_s / b).max(2.0 * self.h.sup_s)
                + (self.g.lip_s * (1.0 + eps)).max(2.0 * self.g.sup_s) / b.powf(alpha)
        } else {
            0.0
        };
        let u = if self.has_u {
            c.a2inv * self.h.lip_u.max(2.0 * self.h.sup_u)
                + eps * c.a2inv * (c.a_norm + self.h.lip).powf(alpha)
                + c.a2inv * (self.g.lip_u * (1.0 + eps)).max(2.0 * self.g.sup_u)
        } else {
            0.0
        };
        (s, u)
    }

    fn positive(&self, alpha: f64) -> bool {
        self.base() > 0.0 && self.delta_s(alpha) > 0.0 && self.delta_u(alpha) > 0.0
    }

    fn trivial(&self) -> bool {
        self.g.lip == 0.0 && self.h.lip == 0.0 && self.g_sup == 0.0 && self.h.sup_s == 0.0 && self.h.sup_u == 0.0
    }
}

fn orderings(problem: &ConjugacyProblem) -> [Ordering; 2] {
    [Ordering::new(problem, &problem.g, &problem.h), Ordering::new(problem, &problem.h, &problem.g)]
}

/// Fraction of the largest admissible exponent that is returned, keeping
/// `Delta` and `delta` away from zero.
pub const ALPHA_SAFETY: f64 = 0.95;
const ALPHA_GRID: f64 = 1e-3;

/// Largest `alpha` in `(0, 1)` such that `Delta > 0` and `delta > 0` hold on
/// `[1e-3, alpha]` for both orderings. Returns 1 when no grid point fails.
pub fn max_alpha(problem: &ConjugacyProblem) -> Result<f64> {
    let ords = orderings(problem);
    let ok = |a: f64| ords.iter().all(|o| o.positive(a));
    if !ok(ALPHA_GRID) {
        return Err(Error::NoExponent(format!("positivity fails already at alpha = {ALPHA_GRID}")));
    }
    let steps = (1.0 / ALPHA_GRID).round() as usize;
    let mut good = ALPHA_GRID;
    for k in 2..steps {
        let a = k as f64 * ALPHA_GRID;
        if ok(a) {
            good = a;
            continue;
        }
        let (mut lo, mut hi) = (good, a);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(lo);
    }
    // the grid never failed; check up to 1 from the last grid point
    if ok(1.0 - 1e-12) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (good, 1.0 - 1e-12);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Chooses `(alpha, eps)` valid for both orderings `(g, h)` and `(h, g)`.
///
/// `alpha` is [`ALPHA_SAFETY`] times the largest admissible exponent and
/// `eps` the largest of the closed-form lower bounds. With `g = h = 0` the
/// result is `alpha = 1/2, eps = 0`.
pub fn select_alpha_eps(problem: &ConjugacyProblem) -> Result<HolderCertificate> {
    let ords = orderings(problem);
    if ords.iter().all(Ordering::trivial) {
        return holder_certificate_at(problem, 0.5);
    }
    let alpha_max = max_alpha(problem)?;
    let alpha = ALPHA_SAFETY * alpha_max;
    let mut cert = holder_certificate_at(problem, alpha)?;
    cert.alpha_max = alpha_max;
    Ok(cert)
}

/// Hölder certificate at a fixed exponent.
pub fn holder_certificate_at(problem: &ConjugacyProblem, alpha: f64) -> Result<HolderCertificate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::NoExponent(format!("alpha = {alpha} not in (0, 1)")));
    }
    let ords = orderings(problem);
    if !ords.iter().all(|o| o.positive(alpha)) {
        return Err(Error::NoExponent(format!("Delta or delta not positive at alpha = {alpha}")));
    }
    let eps = ords.iter().map(|o| o.eps_s(alpha).max(o.eps_u(alpha))).fold(0.0, f64::max);
    Ok(HolderCertificate {
        alpha,
        eps,
        alpha_max: alpha,
        delta_gh_s: ords.iter().map(|o| o.delta_s(alpha)).fold(f64::INFINITY, f64::min),
        delta_gh_u: ords.iter().map(|o| o.delta_u(alpha)).fold(f64::INFINITY, f64::min),
    })
}

/// Per-ordering values of `Delta_{g,h}` and `delta_{g,h}`.
pub fn holder_deltas(problem: &ConjugacyProblem, alpha: f64) -> [(f64, f64); 2] {
    orderings(problem).map(|o| (o.delta_s(alpha), o.delta_u(alpha)))
}

/// Per-ordering closed-form lower bounds on `eps` (stable, unstable).
pub fn holder_eps_bounds(problem: &ConjugacyProblem, alpha: f64) -> [(f64, f64); 2] {
    orderings(problem).map(|o| (o.eps_s(alpha), o.eps_u(alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    /// Stable-block left-hand side for `(g, h)` and `(h, g)`.
    pub lhs_s: [f64; 2],
    /// Unstable-block left-hand side for `(g, h)` and `(h, g)`.
    pub lhs_u: [f64; 2],
    pub eps: f64,
    pub pass: bool,
}

/// Evaluates the sufficient Hölder conditions (spreads replaced by twice
/// the sup bound) for both orderings and compares with `eps`.
pub fn check_holder_conditions(problem: &ConjugacyProblem, cert: &HolderCertificate) -> HolderReport {
    let ords = orderings(problem);
    let l0 = ords[0].lhs(cert.alpha, cert.eps);
    let l1 = ords[1].lhs(cert.alpha, cert.eps);
    let tol = 1e-12 * cert.eps.max(1.0);
    let base_ok = ords.iter().all(|o| o.base() > 0.0);
    let pass = base_ok && [l0.0, l0.1, l1.0, l1.1].iter().all(|l| *l <= cert.eps + tol);
    HolderReport { lhs_s: [l0.0, l1.0], lhs_u: [l0.1, l1.1], eps: cert.eps, pass }
}

/// Whether `delta` satisfies the three size conditions that make every
/// pair `g, h` with `max(sup, Lip) <= delta` admissible for `(alpha, eps)`.
pub fn delta_admissible(c: &SystemConstants, alpha: f64, eps: f64, delta: f64) -> bool {
    let b = 1.0 / c.a_inv_norm;
    if !(delta > 0.0 && delta < b && c.a2inv * (1.0 + delta) < 1.0 && c.a1 + delta < 1.0) {
        return false;
    }
    let m = (delta * (1.0 + eps)).max(2.0 * delta);
    let u = 2.0 * c.a2inv * delta + eps * c.a2inv * (c.a_norm + delta).powf(alpha) + c.a2inv * m;
    let s = eps * c.a1 / (b - delta).powf(alpha) + (delta / (b - delta)).max(2.0 * delta) + m / (b - delta).powf(alpha);
    u <= eps && s <= eps
}

/// Largest `delta` (to bisection precision) with [`delta_admissible`].
pub fn select_delta(c: &SystemConstants, alpha: f64, eps: f64) -> Result<f64> {
    let mut hi = (1.0 / c.a_inv_norm).min(1.0 - c.a1);
    if c.a2inv > 0.0 {
        hi = hi.min(1.0 / c.a2inv - 1.0);
    }
    let tiny = hi * 1e-12;
    if !delta_admissible(c, alpha, eps, tiny) {
        return Err(Error::NoDelta(format!("no delta works for alpha = {alpha}, eps = {eps}")));
    }
    let mut lo = tiny;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta_admissible(c, alpha, eps, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linspace::{check_hyperbolic, Matrix, NormSpec, Splitting};
    use crate::maps::Certificate;
    use crate::sampling;

    fn r1() -> FieldSpec {
        FieldSpec::real(1.0).unwrap()
    }

    fn standard() -> Arc<HyperbolicSystem> {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5, 0.0], &[0.0, 2.0]]).unwrap();
        Arc::new(check_hyperbolic(&a, Splitting::new(1, 1), NormSpec::CoordMax).unwrap())
    }

    /// Constant perturbation certified as a member of the 0.1-ball.
    fn const_g(c: &[f64]) -> Perturbation {
        Perturbation::constant(Vector::from_f64(r1(), c).unwrap())
            .with_certificate(Certificate::uniform(0.1, 0.1))
            .unwrap()
    }

    /// Perturbation with prescribed constants whose map is irrelevant.
    fn certified(sup: f64, lip: f64) -> Perturbation {
        Perturbation::new("data", r1(), 2, Certificate::uniform(sup, lip), true, |x: &Vector| {
            Ok(Vector::zeros(x.field(), x.dim()))
        })
        .unwrap()
    }

    #[test]
    fn theta_of_zero_vanishes() {
        let p = ConjugacyProblem::linearization(standard(), Perturbation::zero(r1(), 2)).unwrap();
        let x = Vector::from_f64(r1(), &[1.0, -3.0]).unwrap();
        let t = theta_apply(&p, |y| Ok(Vector::zeros(y.field(), 2)), &x, 1e-13).unwrap();
        assert!(t.is_zero());
    }

    #[test]
    fn theta_of_zero_constant_g() {
        let p = ConjugacyProblem::linearization(standard(), const_g(&[0.1, 0.1])).unwrap();
        let x = Vector::from_f64(r1(), &[1.0, 1.0]).unwrap();
        let t = theta_apply(&p, |y| Ok(Vector::zeros(y.field(), 2)), &x, 1e-13).unwrap();
        assert_eq!(t.to_f64().unwrap(), vec![0.1, -0.05]);
    }

    #[test]
    fn theta_stable_only() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5]]).unwrap();
        let sys = Arc::new(check_hyperbolic(&a, Splitting::new(1, 0), NormSpec::CoordMax).unwrap());
        let g = Perturbation::constant(Vector::from_f64(f, &[0.3]).unwrap());
        let p = ConjugacyProblem::linearization(sys, g).unwrap();
        let x = Vector::from_f64(f, &[7.0]).unwrap();
        let t = theta_apply(&p, |y| Ok(Vector::zeros(y.field(), 1)), &x, 1e-13).unwrap();
        assert_eq!(t.to_f64().unwrap(), vec![0.3]);
    }

    #[test]
    fn constant_g_depth_and_bounds() {
        let p = ConjugacyProblem::linearization(standard(), const_g(&[0.1, 0.1])).unwrap();
        assert!((p.lambda() - 0.6).abs() < 1e-15);
        assert!((a_priori_sup(&p) - 0.25).abs() < 1e-15);
        let n = p.depth_for(1e-8).unwrap();
        // smallest N with 0.6^N 0.1 / 0.4 <= 1e-8
        let oracle = (0..).find(|&k| 0.6f64.powi(k) * 0.25 <= 1e-8).unwrap() as usize;
        assert_eq!(n, oracle);
        let sol = solve_v(&p, 1e-8).unwrap();
        for x in sampling::mixed_cloud(r1(), 2, 50, 4) {
            let v = sol.evaluate(&x).unwrap().to_f64().unwrap();
            assert!((v[0] - 0.2).abs() <= sol.truncation());
            assert!((v[1] + 0.1).abs() <= sol.truncation());
        }
    }

    #[test]
    fn orbit_matches_word_tree() {
        let f = r1();
        let g = Perturbation::damped_sin(f, 2, 0.05, 1.5).unwrap();
        let h = Perturbation::radial_bump(Vector::from_f64(f, &[0.02, -0.03]).unwrap(), 0.5, 2.0).unwrap();
        let p = ConjugacyProblem::new(standard(), g, h).unwrap();
        let orbit = ConjugacySolution::at_depth(p.clone(), 8, SolveOptions::default()).unwrap();
        let word = ConjugacySolution::at_depth(
            p,
            8,
            SolveOptions { strategy: Strategy::WordTree { cap: 20 }, ..Default::default() },
        )
        .unwrap();
        for x in sampling::mixed_cloud(f, 2, 30, 9) {
            let a = orbit.evaluate(&x).unwrap();
            let b = word.evaluate(&x).unwrap();
            assert!((&a - &b).max_abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn word_tree_depth_cap() {
        let p = ConjugacyProblem::linearization(standard(), const_g(&[0.1, 0.1])).unwrap();
        let opts = SolveOptions { strategy: Strategy::WordTree { cap: 20 }, ..Default::default() };
        assert!(matches!(solve_v_with(&p, 1e-12, opts), Err(Error::DepthCap { .. })));
    }

    #[test]
    fn not_contractive_problems() {
        let big = certified(0.1, 0.6);
        assert!(matches!(ConjugacyProblem::linearization(standard(), big.clone()), Err(Error::NotContractive(_))));
        assert!(matches!(
            ConjugacyProblem::new(standard(), Perturbation::zero(r1(), 2), big),
            Err(Error::NotContractive(_))
        ));
    }

    #[test]
    fn worked_alpha_and_eps() {
        // a1 = a2inv = 0.5, ||A|| = ||A^-1|| = 2, h = 0, Lip g = 0.1, sup g = 0.05
        let p = ConjugacyProblem::linearization(standard(), certified(0.05, 0.1)).unwrap();
        let alpha_max = max_alpha(&p).unwrap();
        let oracle = (0.6f64).ln() / (0.5f64).ln();
        assert!((alpha_max - oracle).abs() < 1e-9, "{alpha_max} vs {oracle}");
        let [(ds, du), _] = holder_deltas(&p, 0.7);
        assert!((ds - (1.0 - 0.6 / 0.5f64.powf(0.7))).abs() < 1e-12);
        assert!((du - (1.0 - 0.5 * (2f64.powf(0.7) + 0.1))).abs() < 1e-12);
        let [(e1, e2), _] = holder_eps_bounds(&p, 0.7);
        let e1_oracle = (0.1 / 0.5f64.powf(0.7)) / ds;
        let e2_oracle = 0.5 * 0.1 / du;
        assert!((e1 - e1_oracle).abs() < 1e-12 && (e2 - e2_oracle).abs() < 1e-12);
        let cert = select_alpha_eps(&p).unwrap();
        assert!(cert.alpha < oracle);
        assert!(check_holder_conditions(&p, &cert).pass);
    }

    #[test]
    fn worked_conditions_at_fixed_eps() {
        let p = ConjugacyProblem::linearization(standard(), certified(0.05, 0.1)).unwrap();
        let cert = HolderCertificate { alpha: 0.7, eps: 6.5, alpha_max: 0.7, delta_gh_s: 0.0, delta_gh_u: 0.0 };
        assert!(check_holder_conditions(&p, &cert).pass);
        let cert = HolderCertificate { eps: 5.0, ..cert };
        assert!(!check_holder_conditions(&p, &cert).pass);
    }

    #[test]
    fn trivial_certificate() {
        let p = ConjugacyProblem::linearization(standard(), Perturbation::zero(r1(), 2)).unwrap();
        let cert = select_alpha_eps(&p).unwrap();
        assert_eq!((cert.alpha, cert.eps), (0.5, 0.0));
        assert!(check_holder_conditions(&p, &cert).pass);
    }

    #[test]
    fn select_delta_resubstitutes() {
        let c = standard().constants();
        let d = select_delta(&c, 0.5, 1.0).unwrap();
        assert!(d > 0.0 && delta_admissible(&c, 0.5, 1.0, d));
        assert!(!delta_admissible(&c, 0.5, 1.0, d * 1.001));
        assert!(matches!(select_delta(&c, 0.5, 1e-9), Ok(_) | Err(Error::NoDelta(_))));
    }

    #[test]
    fn alternative_seed_same_limit() {
        let f = r1();
        let g = Perturbation::damped_sin(f, 2, 0.05, 1.0).unwrap();
        let p = ConjugacyProblem::linearization(standard(), g).unwrap();
        let a = solve_v(&p, 1e-9).unwrap();
        let seed = Vector::from_f64(f, &[0.3, -0.4]).unwrap();
        let b = solve_v_with(&p, 1e-9, SolveOptions { seed: Some(seed), ..Default::default() }).unwrap();
        for x in sampling::mixed_cloud(f, 2, 40, 2) {
            let d = (&a.evaluate(&x).unwrap() - &b.evaluate(&x).unwrap()).max_abs();
            assert!(d <= a.truncation() + b.truncation() + 1e-12);
        }
    }
}
