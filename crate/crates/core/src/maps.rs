//! Perturbations with certified constants, the Hölder constant calculus and
//! the perturbed-inverse solver.
//!
//! Certificates are always supplied, never inferred. They refer to the
//! coordinate-max norm. [`falsify_certificate`] can refute a certificate by
//! sampling but never proves one.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linspace::{HyperbolicSystem, NormSpec, Vector};
use crate::scalars::{FieldSpec, Scalar};

type EvalFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;

/// Certified sup and Lipschitz bounds, globally and per block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub sup: f64,
    pub lip: f64,
    pub sup_s: f64,
    pub sup_u: f64,
    pub lip_s: f64,
    pub lip_u: f64,
}

impl Certificate {
    /// Component bounds equal to the global ones.
    pub fn uniform(sup: f64, lip: f64) -> Self {
        Certificate { sup, lip, sup_s: sup, sup_u: sup, lip_s: lip, lip_u: lip }
    }

    pub fn zero() -> Self {
        Self::uniform(0.0, 0.0)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.sup, self.lip, self.sup_s, self.sup_u, self.lip_s, self.lip_u];
        if all.iter().any(|v| !(*v >= 0.0) || v.is_nan()) {
            return Err(Error::BadCertificate("constants must be nonnegative".into()));
        }
        if self.sup_s > self.sup || self.sup_u > self.sup || self.lip_s > self.lip || self.lip_u > self.lip {
            return Err(Error::BadCertificate("component bounds exceed global bounds".into()));
        }
        Ok(())
    }
}

/// A map `K^d -> K^d` with certified constants.
#[derive(Clone)]
pub struct Perturbation {
    name: String,
    field: FieldSpec,
    dim: usize,
    eval: Arc<EvalFn>,
    cert: Certificate,
    vanishes_at_zero: bool,
    identically_zero: bool,
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Perturbation")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("cert", &self.cert)
            .field("vanishes_at_zero", &self.vanishes_at_zero)
            .finish()
    }
}

impl Perturbation {
    pub fn new<F>(
        name: impl Into<String>,
        field: FieldSpec,
        dim: usize,
        cert: Certificate,
        vanishes_at_zero: bool,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        cert.validate()?;
        let p = Perturbation {
            name: name.into(),
            field,
            dim,
            eval: Arc::new(f),
            cert,
            vanishes_at_zero,
            identically_zero: false,
        };
        if vanishes_at_zero && !p.apply(&Vector::zeros(field, dim))?.is_zero() {
            return Err(Error::BadCertificate(format!("{} does not vanish at 0", p.name)));
        }
        Ok(p)
    }

    pub fn zero(field: FieldSpec, dim: usize) -> Self {
        Perturbation {
            name: "zero".into(),
            field,
            dim,
            eval: Arc::new(move |x: &Vector| Ok(Vector::zeros(x.field(), x.dim()))),
            cert: Certificate::zero(),
            vanishes_at_zero: true,
            identically_zero: true,
        }
    }

    /// Replaces the per-block constants; they may not exceed the global ones.
    pub fn with_components(mut self, sup_s: f64, sup_u: f64, lip_s: f64, lip_u: f64) -> Result<Self> {
        let cert = Certificate { sup_s, sup_u, lip_s, lip_u, ..self.cert };
        cert.validate()?;
        self.cert = cert;
        Ok(self)
    }

    /// Replaces the certificate by a weaker one (every constant at least
    /// as large as before).
    pub fn with_certificate(mut self, cert: Certificate) -> Result<Self> {
        cert.validate()?;
        let old = self.cert;
        let pairs = [
            (cert.sup, old.sup),
            (cert.lip, old.lip),
            (cert.sup_s, old.sup_s),
            (cert.sup_u, old.sup_u),
            (cert.lip_s, old.lip_s),
            (cert.lip_u, old.lip_u),
        ];
        if pairs.iter().any(|(new, old)| new < old) {
            return Err(Error::BadCertificate("a certificate can only be weakened".into()));
        }
        self.cert = cert;
        self.identically_zero = self.identically_zero && cert == Certificate::zero();
        Ok(self)
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

    pub fn cert(&self) -> &Certificate {
        &self.cert
    }

    pub fn sup(&self) -> f64 {
        self.cert.sup
    }

    pub fn lip(&self) -> f64 {
        self.cert.lip
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.vanishes_at_zero
    }

    pub fn is_identically_zero(&self) -> bool {
        self.identically_zero
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        if self.identically_zero {
            return Ok(Vector::zeros(self.field, self.dim));
        }
        let y = (self.eval)(x)?;
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.dim() });
        }
        Ok(y)
    }

    /// Constant map `x -> c`.
    pub fn constant(c: Vector) -> Self {
        let sup = c.max_abs();
        let field = c.field();
        let dim = c.dim();
        let zero = c.is_zero();
        Perturbation {
            name: format!("constant({})", fmt_vector(&c)),
            field,
            dim,
            eval: Arc::new(move |_: &Vector| Ok(c.clone())),
            cert: Certificate::uniform(sup, 0.0),
            vanishes_at_zero: zero,
            identically_zero: zero,
        }
    }

    /// Real only: `c * phi(rho(x))` with `rho(x) = max_i |x_i|` and `phi`
    /// equal to 1 up to `r1`, falling linearly to 0 at `r2`.
    pub fn radial_bump(c: Vector, r1: f64, r2: f64) -> Result<Self> {
        let FieldSpec::RealPower { exponent } = c.field() else {
            return Err(Error::InvalidArgument("radial_bump needs a real field".into()));
        };
        if !(r1 >= 0.0 && r2 > r1) {
            return Err(Error::InvalidArgument(format!("radial_bump radii {r1}, {r2}")));
        }
        let sup = c.max_abs();
        let lip = sup / (r2 - r1).powf(exponent);
        let field = c.field();
        let dim = c.dim();
        Perturbation::new(
            format!("radial_bump({}, {r1}, {r2})", fmt_vector(&c)),
            field,
            dim,
            Certificate::uniform(sup, lip),
            c.is_zero(),
            move |x: &Vector| {
                let rho = real_coords(x)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let phi = ((r2 - rho) / (r2 - r1)).clamp(0.0, 1.0);
                Ok(c.scale(Scalar::Real(phi)))
            },
        )
    }

    /// Real only: `g_i(x) = amp sin(freq x_{i+1}) / (1 + x_{i+1}^2)`, indices cyclic.
    pub fn damped_sin(field: FieldSpec, dim: usize, amp: f64, freq: f64) -> Result<Self> {
        let FieldSpec::RealPower { exponent } = field else {
            return Err(Error::InvalidArgument("damped_sin needs a real field".into()));
        };
        // max_t 2|t|/(1+t^2)^2 = 3 sqrt(3) / 8
        let slope = amp.abs() * (freq.abs() + 3.0 * 3f64.sqrt() / 8.0);
        let cert = Certificate::uniform(amp.abs().powf(exponent), slope.powf(exponent));
        Perturbation::new(
            format!("damped_sin({amp}, {freq})"),
            field,
            dim,
            cert,
            true,
            move |x: &Vector| {
                let xs = real_coords(x)?;
                let d = xs.len();
                let coords = (0..d)
                    .map(|i| {
                        let t = xs[(i + 1) % d];
                        Scalar::Real(amp * (freq * t).sin() / (1.0 + t * t))
                    })
                    .collect();
                Ok(Vector::new(field, coords))
            },
        )
    }

    /// p-adic only: `c` on the closed ball `||x|| <= r`, zero outside.
    pub fn ball_indicator(c: Vector, r: f64) -> Result<Self> {
        let FieldSpec::PAdic { prime, .. } = c.field() else {
            return Err(Error::InvalidArgument("ball_indicator needs a p-adic field".into()));
        };
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("ball_indicator radius {r}")));
        }
        let sup = c.max_abs();
        // points outside the ball have norm at least the next power of p above r
        let p = prime as f64;
        let mut k = (r.ln() / p.ln()).floor() as i32;
        while p.powi(k) <= r {
            k += 1;
        }
        while k > i32::MIN + 1 && p.powi(k - 1) > r {
            k -= 1;
        }
        let lip = sup / p.powi(k);
        let field = c.field();
        let dim = c.dim();
        Ok(Perturbation {
            name: format!("ball_indicator({}, {r})", fmt_vector(&c)),
            field,
            dim,
            eval: Arc::new(move |x: &Vector| {
                Ok(if x.max_abs() <= r { c.clone() } else { Vector::zeros(field, dim) })
            }),
            cert: Certificate::uniform(sup, lip),
            vanishes_at_zero: false,
            identically_zero: false,
        })
    }
}

fn fmt_vector(v: &Vector) -> String {
    let parts: Vec<String> = v.coords().iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn real_coords(x: &Vector) -> Result<Vec<f64>> {
    x.to_f64().ok_or_else(|| Error::Evaluation("expected real coordinates".into()))
}

/// `(A + h)(x)`.
pub fn apply_perturbed(sys: &HyperbolicSystem, h: &Perturbation, x: &Vector) -> Result<Vector> {
    let ax = sys.apply(x);
    if h.is_identically_zero() {
        return Ok(ax);
    }
    Ok(&ax + &h.apply(x)?)
}

/// Default tolerance for [`invert_perturbed`]: `1e-12` for real fields,
/// exact (iterate to stationarity) for p-adic fields.
pub fn default_inverse_tol(field: FieldSpec) -> f64 {
    if field.is_ultrametric() {
        0.0
    } else {
        1e-12
    }
}

const MAX_INVERSE_ITERATIONS: usize = 10_000;

/// Solves `(A + v)(y) = x` by the iteration `y <- A^{-1}(x - v(y))` from
/// `y_0 = A^{-1} x`, stopping once `||(A + v)(y) - x|| <= tol`.
///
/// With `tol = 0` the iteration runs until it becomes stationary, which it
/// does digit by digit over p-adic fields.
pub fn invert_perturbed(sys: &HyperbolicSystem, v: &Perturbation, x: &Vector, tol: f64) -> Result<Vector> {
    sys.check_dim(x)?;
    let q = sys.constants().a_inv_norm * v.lip();
    if !(q < 1.0) {
        return Err(Error::NotContractive(format!(
            "Lip(v) ||A^-1|| = {q} is not below 1"
        )));
    }
    let mut y = sys.apply_inv(x);
    if v.is_identically_zero() {
        return Ok(y);
    }
    // below this the residual is rounding noise and may never settle
    let tol = tol.max(sys.field().rounding_floor(sys.norm(&y)?.max(sys.norm(x)?), 1e-14));
    let mut vy = v.apply(&y)?;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let next = sys.apply_inv(&(x - &vy));
        let v_next = v.apply(&next)?;
        // (A + v)(next) - x = v(next) - v(y)
        let residual = sys.norm(&(&v_next - &vy))?;
        let stationary = next == y;
        y = next;
        vy = v_next;
        if residual <= tol || stationary {
            return Ok(y);
        }
    }
    Err(Error::MaxIterations(MAX_INVERSE_ITERATIONS))
}

/// Budget of constants for a map between metric spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBudget {
    pub lip: f64,
    pub sup: f64,
    pub spread: f64,
    pub holder_exp: f64,
    pub holder_const: f64,
}

impl ConstantBudget {
    /// Lipschitz budget with `spread = 2 sup`.
    pub fn lipschitz(lip: f64, sup: f64) -> Self {
        ConstantBudget { lip, sup, spread: 2.0 * sup, holder_exp: 1.0, holder_const: lip }
    }

    pub fn holder(exp: f64, constant: f64) -> Self {
        ConstantBudget {
            lip: f64::INFINITY,
            sup: f64::INFINITY,
            spread: f64::INFINITY,
            holder_exp: exp,
            holder_const: constant,
        }
    }
}

/// `Lip_{ab}(g o f) <= Lip_b(g) Lip_a(f)^b`.
pub fn holder_compose_bound(f: &ConstantBudget, g: &ConstantBudget) -> ConstantBudget {
    let beta = g.holder_exp;
    ConstantBudget {
        lip: if f.holder_exp == 1.0 && beta == 1.0 { g.lip * f.lip } else { f64::INFINITY },
        sup: g.sup,
        spread: g.spread,
        holder_exp: f.holder_exp * beta,
        holder_const: g.holder_const * f.holder_const.powf(beta),
    }
}

/// `Lip_b(f) <= max(Lip_a(f), spread(f))` for `b <= a` (unit-scale metric).
pub fn holder_downgrade_bound(f: &ConstantBudget, beta: f64) -> Result<ConstantBudget> {
    if !(beta > 0.0 && beta <= f.holder_exp) {
        return Err(Error::InvalidArgument(format!(
            "downgrade exponent {beta} must lie in (0, {}]",
            f.holder_exp
        )));
    }
    Ok(ConstantBudget { holder_exp: beta, holder_const: f.holder_const.max(f.spread), ..*f })
}

/// `Lip_a(h o (id + v)) <= max(Lip(h)(1 + Lip_a(v)), spread(h))`.
pub fn shifted_compose_bound(h: &ConstantBudget, v: &ConstantBudget) -> ConstantBudget {
    ConstantBudget {
        lip: f64::INFINITY,
        sup: h.sup,
        spread: h.spread,
        holder_exp: v.holder_exp,
        holder_const: (h.lip * (1.0 + v.holder_const)).max(h.spread),
    }
}

/// [`shifted_compose_bound`] with `spread(h)` replaced by `2 ||h||`.
pub fn shifted_compose_bound_sup(h: &ConstantBudget, v: &ConstantBudget) -> ConstantBudget {
    let mut b = shifted_compose_bound(&ConstantBudget { spread: 2.0 * h.sup, ..*h }, v);
    b.spread = h.spread;
    b
}

/// Lipschitz constant of a product `xi * f` of a scalar function and a map.
pub fn product_lip_bound(xi: &ConstantBudget, f: &ConstantBudget) -> ConstantBudget {
    let lip = xi.lip * f.sup + xi.sup * f.lip;
    let sup = xi.sup * f.sup;
    ConstantBudget { lip, sup, spread: 2.0 * sup, holder_exp: 1.0, holder_const: lip }
}

/// Worst observed sup and Lipschitz ratio of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalsifierReport {
    pub max_sup: f64,
    pub max_lip_ratio: f64,
    pub samples: usize,
}

impl FalsifierReport {
    pub fn refutes(&self, cert: &Certificate, slack: f64) -> bool {
        self.max_sup > cert.sup + slack || self.max_lip_ratio > cert.lip + slack
    }
}

/// Samples `g` on the given pairs and reports the largest sup and
/// Lipschitz ratio seen.
pub fn falsify_certificate(g: &Perturbation, norm: &NormSpec, pairs: &[(Vector, Vector)]) -> Result<FalsifierReport> {
    let per_pair: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(x, y)| {
            let gx = g.apply(x)?;
            let gy = g.apply(y)?;
            let sup = norm.norm(&gx)?.max(norm.norm(&gy)?);
            let dxy = norm.norm(&(x - y))?;
            let ratio = if dxy > 0.0 { norm.norm(&(&gx - &gy))? / dxy } else { 0.0 };
            Ok((sup, ratio))
        })
        .collect::<Result<_>>()?;
    let (max_sup, max_lip_ratio) =
        per_pair.iter().fold((0.0f64, 0.0f64), |(a, b), (s, r)| (a.max(*s), b.max(*r)));
    Ok(FalsifierReport { max_sup, max_lip_ratio, samples: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linspace::{check_hyperbolic, Matrix, Splitting};
    use crate::sampling;

    fn r1() -> FieldSpec {
        FieldSpec::real(1.0).unwrap()
    }

    fn diag_sys(f: FieldSpec, d: &[f64], dim_s: usize) -> HyperbolicSystem {
        let m = Matrix::diagonal(f, &d.iter().map(|&v| f.from_f64(v).unwrap()).collect::<Vec<_>>());
        check_hyperbolic(&m, Splitting::new(dim_s, d.len() - dim_s), NormSpec::CoordMax).unwrap()
    }

    #[test]
    fn compose_examples() {
        let b = holder_compose_bound(&ConstantBudget::lipschitz(2.0, 1.0), &ConstantBudget::lipschitz(3.0, 1.0));
        assert_eq!((b.holder_exp, b.holder_const), (1.0, 6.0));
        let b = holder_compose_bound(&ConstantBudget::holder(0.5, 4.0), &ConstantBudget::lipschitz(1.0, 1.0));
        assert_eq!((b.holder_exp, b.holder_const), (0.5, 4.0));
        let b = holder_compose_bound(&ConstantBudget::holder(0.5, 4.0), &ConstantBudget::holder(0.5, 9.0));
        assert_eq!((b.holder_exp, b.holder_const), (0.25, 18.0));
    }

    #[test]
    fn downgrade_examples() {
        let f = ConstantBudget { spread: 0.3, ..ConstantBudget::lipschitz(0.1, 0.15) };
        assert_eq!(holder_downgrade_bound(&f, 0.5).unwrap().holder_const, 0.3);
        let f = ConstantBudget { spread: 1.0, ..ConstantBudget::lipschitz(2.0, 0.5) };
        assert_eq!(holder_downgrade_bound(&f, 0.9).unwrap().holder_const, 2.0);
        assert!(holder_downgrade_bound(&ConstantBudget::holder(0.5, 1.0), 0.7).is_err());
    }

    #[test]
    fn shifted_examples() {
        let h = ConstantBudget { spread: 0.05, ..ConstantBudget::lipschitz(0.1, 0.025) };
        assert!((shifted_compose_bound(&h, &ConstantBudget::holder(0.5, 0.0)).holder_const - 0.1).abs() < 1e-15);
        let h = ConstantBudget { spread: 0.1, ..ConstantBudget::lipschitz(0.1, 0.05) };
        assert!((shifted_compose_bound(&h, &ConstantBudget::holder(0.5, 6.0)).holder_const - 0.7).abs() < 1e-15);
    }

    #[test]
    fn product_examples() {
        let one = ConstantBudget::lipschitz(0.0, 1.0);
        let f = ConstantBudget::lipschitz(3.5, 2.0);
        assert_eq!(product_lip_bound(&one, &f).lip, 3.5);
        // cut-off estimate: Lip(xi) = 1/s, ||f|| = 3 s L, ||xi|| = 1, Lip(f) = L
        let (s, l) = (0.1, 0.7);
        let b = product_lip_bound(&ConstantBudget::lipschitz(1.0 / s, 1.0), &ConstantBudget::lipschitz(l, 3.0 * s * l));
        assert!((b.lip - 4.0 * l).abs() < 1e-12);
    }

    #[test]
    fn invert_zero_is_linear() {
        let sys = diag_sys(r1(), &[0.5, 2.0], 1);
        let x = Vector::from_f64(r1(), &[1.0, 1.0]).unwrap();
        let y = invert_perturbed(&sys, &Perturbation::zero(r1(), 2), &x, 1e-12).unwrap();
        assert_eq!(y.to_f64().unwrap(), vec![2.0, 0.5]);
    }

    #[test]
    fn invert_constant_closed_form() {
        let sys = diag_sys(r1(), &[0.5, 2.0], 1);
        let c = Vector::from_f64(r1(), &[0.1, -0.3]).unwrap();
        let v = Perturbation::constant(c.clone());
        let x = Vector::from_f64(r1(), &[1.0, 1.0]).unwrap();
        let y = invert_perturbed(&sys, &v, &x, 1e-12).unwrap();
        let expected = sys.apply_inv(&(&x - &c));
        assert!((&y - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn invert_against_bisection() {
        let f = r1();
        let sys = diag_sys(f, &[2.0], 0);
        let v = Perturbation::new("bump", f, 1, Certificate::uniform(0.1, 0.2), true, move |x: &Vector| {
            let t = x.get(0).as_real().unwrap();
            Vector::from_f64(f, &[0.2 * t / (1.0 + t * t)])
        })
        .unwrap();
        let x = Vector::from_f64(f, &[1.0]).unwrap();
        let y = invert_perturbed(&sys, &v, &x, 1e-14).unwrap().get(0).as_real().unwrap();
        let phi = |t: f64| 2.0 * t + 0.2 * t / (1.0 + t * t) - 1.0;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!((y - lo).abs() < 1e-12, "{y} vs {lo}");
    }

    #[test]
    fn invert_padic_exact() {
        let q = FieldSpec::padic(3, 24).unwrap();
        let sys = check_hyperbolic(&Matrix::diagonal(q, &[q.from_i64(3)]), Splitting::new(1, 0), NormSpec::CoordMax).unwrap();
        // v(y) = y^2 restricted to the unit ball has Lip <= 1/9 < 1/3 once scaled by 3^2
        let v = Perturbation::new("sq", q, 1, Certificate::uniform(1.0 / 9.0, 1.0 / 9.0), true, move |x: &Vector| {
            let t = x.get(0);
            let nine = q.from_i64(9);
            Ok(Vector::new(q, vec![if q.abs(&t) <= 1.0 { nine * t * t } else { q.zero() }]))
        })
        .unwrap();
        let x = Vector::from_i64(q, &[5]);
        let y = invert_perturbed(&sys, &v, &x, 0.0).unwrap();
        let back = apply_perturbed(&sys, &v, &y).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn invert_rejects_non_contraction() {
        let sys = diag_sys(r1(), &[0.5, 2.0], 1);
        let v = Perturbation::constant(Vector::from_f64(r1(), &[0.0, 0.0]).unwrap());
        let big = Perturbation::new("big", r1(), 2, Certificate::uniform(1.0, 0.6), true, |x: &Vector| Ok(x.clone())).unwrap();
        let x = Vector::from_f64(r1(), &[1.0, 1.0]).unwrap();
        assert!(invert_perturbed(&sys, &v, &x, 1e-12).is_ok());
        assert!(matches!(invert_perturbed(&sys, &big, &x, 1e-12), Err(Error::NotContractive(_))));
    }

    #[test]
    fn builtin_certificates_hold() {
        let f = r1();
        let half = FieldSpec::real(0.5).unwrap();
        let q = FieldSpec::padic(3, 24).unwrap();
        let fams = vec![
            Perturbation::radial_bump(Vector::from_f64(f, &[0.1, -0.05]).unwrap(), 0.5, 1.5).unwrap(),
            Perturbation::radial_bump(Vector::from_f64(half, &[0.1, -0.05]).unwrap(), 0.5, 1.5).unwrap(),
            Perturbation::damped_sin(f, 2, 0.05, 2.0).unwrap(),
            Perturbation::damped_sin(half, 3, 0.01, 1.0).unwrap(),
            Perturbation::ball_indicator(Vector::from_i64(q, &[3]), 1.0).unwrap(),
        ];
        for g in fams {
            let pairs = sampling::pair_cloud(g.field(), g.dim(), 4000, 11);
            let rep = falsify_certificate(&g, &NormSpec::CoordMax, &pairs).unwrap();
            assert!(!rep.refutes(g.cert(), 1e-12), "{g:?}: {rep:?}");
        }
    }

    #[test]
    fn ball_indicator_constants() {
        let q = FieldSpec::padic(3, 24).unwrap();
        let g = Perturbation::ball_indicator(Vector::from_i64(q, &[3]), 1.0).unwrap();
        assert!((g.lip() - 1.0 / 9.0).abs() < 1e-15);
        assert!((g.sup() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn vanishing_is_checked() {
        let f = r1();
        let bad = Perturbation::new("one", f, 1, Certificate::uniform(1.0, 0.0), true, move |_: &Vector| Vector::from_f64(f, &[1.0]));
        assert!(bad.is_err());
    }

    #[test]
    fn component_bounds_validated() {
        let g = Perturbation::zero(r1(), 2);
        assert!(g.clone().with_components(0.0, 0.0, 0.0, 0.0).is_ok());
        assert!(Perturbation::constant(Vector::from_f64(r1(), &[0.1, 0.1]).unwrap())
            .with_components(0.2, 0.1, 0.0, 0.0)
            .is_err());
    }
}
