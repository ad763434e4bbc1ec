//! Local linearization near a hyperbolic fixed point.
//!
//! The remainder `R = f - A` is cut off to a globally Lipschitz map `R_s`
//! that agrees with `R` near 0, the global conjugacy for `A + R_s` is built,
//! and the result is restricted to a ball `U` on which it conjugates `f`
//! itself to `A`.

use std::fmt;
use std::sync::Arc;

use crate::conjugacy::{
    check_holder_conditions, conjugacy_budget, conjugacy_residual, select_delta, solve_v, solve_w,
    ConjugacyProblem, ConjugacySolution, HolderCertificate, HolderReport,
};
use crate::error::{Error, Result};
use crate::linspace::{HyperbolicSystem, Vector};
use crate::maps::{Certificate, Perturbation};
use crate::scalars::FieldSpec;

type MapFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;
type ModulusFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A remainder `R` with `R(0) = 0` and a certified modulus
/// `r -> Lip(R on the open ball B_r(0))`.
#[derive(Clone)]
pub struct Remainder {
    name: String,
    field: FieldSpec,
    dim: usize,
    map: Arc<MapFn>,
    modulus: Arc<ModulusFn>,
}

impl fmt::Debug for Remainder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Remainder").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl Remainder {
    pub fn new<F, M>(name: impl Into<String>, field: FieldSpec, dim: usize, map: F, modulus: M) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
        M: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let r = Remainder { name: name.into(), field, dim, map: Arc::new(map), modulus: Arc::new(modulus) };
        if !r.apply(&Vector::zeros(field, dim))?.is_zero() {
            return Err(Error::InvalidArgument(format!("remainder {} does not vanish at 0", r.name)));
        }
        Ok(r)
    }

    pub fn zero(field: FieldSpec, dim: usize) -> Self {
        Remainder {
            name: "zero".into(),
            field,
            dim,
            map: Arc::new(|x: &Vector| Ok(Vector::zeros(x.field(), x.dim()))),
            modulus: Arc::new(|_| 0.0),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        (self.map)(x)
    }

    pub fn modulus(&self, r: f64) -> f64 {
        (self.modulus)(r)
    }
}

/// Cut-off profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffProfile {
    /// `R` on the open ball `B_s(0)`, zero outside.
    UltrametricHard,
    /// `eta(rho(y) / s^(1/q)) R(y)` where `rho` is the ordinary max-magnitude
    /// and `eta` is 1 on `[0, 1]`, `2 - t` on `[1, 2]`, 0 beyond.
    RealBump,
}

impl CutoffProfile {
    pub fn for_field(field: FieldSpec) -> Self {
        if field.is_ultrametric() {
            CutoffProfile::UltrametricHard
        } else {
            CutoffProfile::RealBump
        }
    }

    /// Lipschitz constant of `eta`.
    pub const LIP_ETA: f64 = 1.0;

    fn check(&self, field: FieldSpec) -> Result<()> {
        match (self, field.is_ultrametric()) {
            (CutoffProfile::UltrametricHard, true) | (CutoffProfile::RealBump, false) => Ok(()),
            _ => Err(Error::ProfileFieldMismatch),
        }
    }
}

/// `eta(t)`.
pub fn eta(t: f64) -> f64 {
    (2.0 - t).clamp(0.0, 1.0)
}

fn max_magnitude(x: &Vector) -> Result<f64> {
    let xs = x.to_f64().ok_or_else(|| Error::Evaluation("expected real coordinates".into()))?;
    Ok(xs.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// The cut-off `R_s` with certified constants.
pub fn cutoff(r: &Remainder, s: f64, profile: CutoffProfile) -> Result<Perturbation> {
    profile.check(r.field)?;
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("cut-off radius {s} must be positive")));
    }
    let field = r.field;
    let map = r.map.clone();
    match profile {
        CutoffProfile::UltrametricHard => {
            if s > 1.0 {
                return Err(Error::RadiusTooLarge(format!("s = {s} > 1")));
            }
            let lip = r.modulus(s);
            let cert = Certificate::uniform(lip * s, lip);
            Perturbation::new(format!("cutoff({}, {s})", r.name), field, r.dim, cert, true, move |x: &Vector| {
                if x.max_abs() < s {
                    map(x)
                } else {
                    Ok(Vector::zeros(x.field(), x.dim()))
                }
            })
        }
        CutoffProfile::RealBump => {
            let FieldSpec::RealPower { exponent: q } = field else { unreachable!() };
            if 3.0 * s > 1.0 {
                return Err(Error::RadiusTooLarge(format!("3s = {} > 1", 3.0 * s)));
            }
            let l = r.modulus(3.0 * s);
            let lip = (1.0 + 3.0 * CutoffProfile::LIP_ETA) * l;
            // support is rho < 2 s^(1/q), where |R| <= L^(1/q) rho in ordinary units
            let sup = 2f64.powf(q) * l * s;
            let scale = s.powf(1.0 / q);
            let outer = (3.0 * s).powf(1.0 / q);
            let cert = Certificate::uniform(sup, lip);
            Perturbation::new(format!("cutoff({}, {s})", r.name), field, r.dim, cert, true, move |x: &Vector| {
                let rho = max_magnitude(x)?;
                if rho >= outer {
                    return Ok(Vector::zeros(x.field(), x.dim()));
                }
                let xi = eta(rho / scale);
                if xi == 0.0 {
                    return Ok(Vector::zeros(x.field(), x.dim()));
                }
                let rx = map(x)?;
                Ok(if xi == 1.0 { rx } else { rx.scale(crate::scalars::Scalar::Real(xi)) })
            })
        }
    }
}

/// Largest grid radius whose cut-off has Lipschitz constant at most `delta`.
///
/// Ultrametric grid: `1, 1/p, 1/p^2, ...`. Real grid: `1/3, 1/6, 1/12, ...`.
pub fn choose_s(r: &Remainder, delta: f64, profile: CutoffProfile) -> Result<f64> {
    profile.check(r.field)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    let tol = 1e-12;
    for k in 0..400 {
        let (s, ok) = match (profile, r.field) {
            (CutoffProfile::UltrametricHard, FieldSpec::PAdic { prime, .. }) => {
                let s = (prime as f64).powi(-k);
                (s, r.modulus(s) <= delta * (1.0 + tol))
            }
            _ => {
                let s = (1.0 / 3.0) * 0.5f64.powi(k);
                let bound = delta / (1.0 + 3.0 * CutoffProfile::LIP_ETA);
                (s, r.modulus(3.0 * s) <= bound * (1.0 + tol))
            }
        };
        if s == 0.0 {
            break;
        }
        if ok {
            return Ok(s);
        }
    }
    Err(Error::NoRadius(format!("Lipschitz modulus of {} never drops below {delta}", r.name)))
}

/// `omega(a) = a + eps a^alpha`.
pub fn omega(a: f64, alpha: f64, eps: f64) -> f64 {
    a + eps * a.powf(alpha)
}

/// Inverse of [`omega`] by bisection to relative tolerance `1e-12`.
pub fn omega_inv(a: f64, alpha: f64, eps: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if eps == 0.0 {
        return a;
    }
    let (mut lo, mut hi) = (0.0f64, a);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if omega(mid, alpha, eps) <= a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Output of [`build_local`].
#[derive(Debug)]
pub struct LocalLinearization {
    pub s: f64,
    pub delta: f64,
    pub g: Perturbation,
    pub sol_v: ConjugacySolution,
    pub sol_w: ConjugacySolution,
    pub cert: HolderCertificate,
    pub holder: HolderReport,
    /// Radius of `U`.
    pub u: f64,
    /// Radius of `W`.
    pub w_rad: f64,
    remainder: Remainder,
}

impl LocalLinearization {
    pub fn sys(&self) -> &HyperbolicSystem {
        self.sol_v.problem().sys()
    }

    /// `f(y) = A y + R(y)`.
    pub fn f(&self, y: &Vector) -> Result<Vector> {
        Ok(&self.sys().apply(y) + &self.remainder.apply(y)?)
    }

    /// `H(y) = y + v(y)`.
    pub fn h(&self, y: &Vector) -> Result<Vector> {
        self.sol_v.apply_conjugacy(y)
    }

    /// `H^{-1}(z) = z + w(z)`.
    pub fn h_inv(&self, z: &Vector) -> Result<Vector> {
        self.sol_w.apply_conjugacy(z)
    }

    /// `||f(H(y)) - H(A y)||`.
    pub fn local_residual(&self, y: &Vector) -> Result<f64> {
        let lhs = self.f(&self.h(y)?)?;
        let rhs = self.h(&self.sys().apply(y))?;
        self.sys().norm(&(&lhs - &rhs))
    }

    /// Budget for [`Self::local_residual`] on `U ∩ A^{-1}(U)`.
    pub fn local_budget(&self, y: &Vector) -> Result<f64> {
        conjugacy_budget(&self.sol_v, y)
    }

    /// Residual of the global conjugacy for `A + R_s`.
    pub fn global_residual(&self, y: &Vector) -> Result<f64> {
        conjugacy_residual(&self.sol_v, y)
    }
}

/// Runs the full local pipeline for `f = A + R` at `(alpha, eps)`.
pub fn build_local(
    sys: Arc<HyperbolicSystem>,
    r: &Remainder,
    alpha: f64,
    eps: f64,
    profile: CutoffProfile,
    target_trunc: f64,
) -> Result<LocalLinearization> {
    if r.dim() != sys.dim() || r.field() != sys.field() {
        return Err(Error::InvalidArgument("remainder does not match the system".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::NoExponent(format!("alpha = {alpha} not in (0, 1)")));
    }
    let delta = select_delta(&sys.constants(), alpha, eps)?;
    let s = choose_s(r, delta, profile)?;
    let g = cutoff(r, s, profile)?;
    let problem = ConjugacyProblem::linearization(sys, g.clone())?;
    let cert = HolderCertificate { alpha, eps, alpha_max: alpha, delta_gh_s: f64::NAN, delta_gh_u: f64::NAN };
    let holder = check_holder_conditions(&problem, &cert);
    let sol_v = solve_v(&problem, target_trunc)?.with_cert(cert);
    let sol_w = solve_w(&problem, target_trunc)?.with_cert(cert);
    let u = omega_inv(s, alpha, eps);
    let w_rad = omega_inv(u, alpha, eps);
    Ok(LocalLinearization { s, delta, g, sol_v, sol_w, cert, holder, u, w_rad, remainder: r.clone() })
}
