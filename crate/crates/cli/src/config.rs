//! TOML run configuration and its translation into core objects.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use hartman_core::expr::{parse_expr, Ty};
use hartman_core::linspace::adapted_renorm;
use hartman_core::localize::Remainder;
use hartman_core::maps::Certificate;
use hartman_core::paramdep::Family;
use hartman_core::{check_hyperbolic, FieldSpec, HyperbolicSystem, Matrix, NormSpec, Perturbation, Scalar, Splitting, Vector};

/// Problems with the configuration itself (as opposed to failures of the
/// mathematics it describes).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(msg.into()))
}

/// A scalar literal as it may appear in TOML: an integer, a float, or a
/// string in the scalar literal syntax (`3:1:4`, `1/3`, `0.25`).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Lit {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Lit {
    pub fn to_scalar(&self, field: FieldSpec) -> Result<Scalar> {
        let s = match self {
            Lit::Int(n) => Ok(field.from_i64(*n)),
            Lit::Float(x) => field.from_f64(*x),
            Lit::Text(t) => field.parse_literal(t),
        };
        s.map_err(|e| config_err(format!("literal {self:?}: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldCfg {
    pub kind: String,
    pub prime: Option<u64>,
    pub precision: Option<u32>,
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceCfg {
    pub dim: usize,
    pub dim_s: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixCfg {
    pub rows: Vec<Vec<Lit>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormCfg {
    #[serde(default = "default_norm_kind")]
    pub kind: String,
    pub theta: Option<f64>,
    pub c: Option<f64>,
}

impl Default for NormCfg {
    fn default() -> Self {
        NormCfg { kind: default_norm_kind(), theta: None, c: None }
    }
}

fn default_norm_kind() -> String {
    "coord_max".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationCfg {
    pub kind: String,
    pub expr: Option<String>,
    pub sup: Option<f64>,
    pub lip: Option<f64>,
    pub sup_s: Option<f64>,
    pub sup_u: Option<f64>,
    pub lip_s: Option<f64>,
    pub lip_u: Option<f64>,
    pub c: Option<Vec<Lit>>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub r: Option<f64>,
    pub amp: Option<f64>,
    pub freq: Option<f64>,
    /// Exact sup norm, needed to sweep expression-defined families.
    pub sup_exact: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveCfg {
    #[serde(default = "default_target")]
    pub target_trunc: f64,
    #[serde(default = "default_cap")]
    pub depth_cap: usize,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for SolveCfg {
    fn default() -> Self {
        SolveCfg { target_trunc: default_target(), depth_cap: default_cap(), strategy: default_strategy(), points: default_points() }
    }
}

fn default_target() -> f64 {
    1e-8
}
fn default_cap() -> usize {
    hartman_core::conjugacy::DEFAULT_DEPTH_CAP
}
fn default_strategy() -> String {
    "orbit".into()
}
fn default_points() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderCfg {
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_min_sep")]
    pub min_sep: f64,
}

impl Default for HolderCfg {
    fn default() -> Self {
        HolderCfg { alpha: None, eps: None, pairs: default_pairs(), min_sep: default_min_sep() }
    }
}

fn default_pairs() -> usize {
    10_000
}
fn default_min_sep() -> f64 {
    0.01
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizeCfg {
    /// Remainder `R` as an expression; must vanish at 0.
    pub remainder: String,
    /// Modulus of `R`: `Lip(R on ||y|| <= r) <= modulus_coeff * r^modulus_power`.
    pub modulus_coeff: f64,
    #[serde(default = "one")]
    pub modulus_power: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    pub params: Vec<f64>,
    #[serde(default = "default_sweep_kind")]
    pub kind: String,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(default = "default_sweep_points")]
    pub points: usize,
}

fn default_sweep_kind() -> String {
    "sigma".into()
}
fn default_sweep_points() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormCfg {
    pub theta: Option<f64>,
    pub c: Option<f64>,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    #[serde(default = "default_unit_samples")]
    pub samples: usize,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

impl Default for RenormCfg {
    fn default() -> Self {
        RenormCfg { theta: None, c: None, kmax: default_kmax(), samples: default_unit_samples(), pairs: default_pairs() }
    }
}

fn default_kmax() -> u32 {
    200
}
fn default_unit_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldCfg,
    pub space: SpaceCfg,
    pub matrix: MatrixCfg,
    #[serde(default)]
    pub norm: NormCfg,
    pub perturbation: Option<PerturbationCfg>,
    /// Second perturbation `h` (defaults to zero).
    pub perturbation_h: Option<PerturbationCfg>,
    #[serde(default)]
    pub solve: SolveCfg,
    #[serde(default)]
    pub holder: HolderCfg,
    pub linearize: Option<LinearizeCfg>,
    pub sweep: Option<SweepCfg>,
    #[serde(default)]
    pub renorm: RenormCfg,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn field_spec(&self) -> Result<FieldSpec> {
        let f = &self.field;
        let spec = match f.kind.as_str() {
            "real" => FieldSpec::real(f.exponent.unwrap_or(1.0)),
            "padic" => {
                let p = f.prime.ok_or_else(|| config_err("field.prime is required for padic fields"))?;
                FieldSpec::padic(p, f.precision.unwrap_or(24))
            }
            other => bail!(config_err(format!("field.kind must be `real` or `padic`, got `{other}`"))),
        };
        spec.map_err(|e| config_err(format!("field: {e}")))
    }

    pub fn matrix(&self) -> Result<Matrix> {
        let field = self.field_spec()?;
        let d = self.space.dim;
        if self.matrix.rows.len() != d || self.matrix.rows.iter().any(|r| r.len() != d) {
            bail!(config_err(format!("matrix.rows must be {d} x {d}")));
        }
        let rows = self
            .matrix
            .rows
            .iter()
            .map(|r| r.iter().map(|l| l.to_scalar(field)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_rows(field, rows)?)
    }

    pub fn splitting(&self) -> Result<Splitting> {
        if self.space.dim_s > self.space.dim {
            bail!(config_err("space.dim_s exceeds space.dim"));
        }
        Ok(Splitting::new(self.space.dim_s, self.space.dim - self.space.dim_s))
    }

    pub fn norm_spec(&self, a: &Matrix) -> Result<NormSpec> {
        match self.norm.kind.as_str() {
            "coord_max" => Ok(NormSpec::CoordMax),
            "renorm" => {
                let theta = self.norm.theta.ok_or_else(|| config_err("norm.theta is required for renorm"))?;
                let c = match self.norm.c {
                    Some(c) => c,
                    None => hartman_core::linspace::power_certificate(a, &NormSpec::CoordMax, theta, self.renorm.kmax)?,
                };
                Ok(adapted_renorm(a, NormSpec::CoordMax, theta, c)?)
            }
            other => bail!(config_err(format!("norm.kind must be `coord_max` or `renorm`, got `{other}`"))),
        }
    }

    pub fn system(&self) -> Result<Arc<HyperbolicSystem>> {
        let a = self.matrix()?;
        let norm = self.norm_spec(&a)?;
        Ok(Arc::new(check_hyperbolic(&a, self.splitting()?, norm)?))
    }

    fn vector(&self, lits: &[Lit], what: &str) -> Result<Vector> {
        let field = self.field_spec()?;
        if lits.len() != self.space.dim {
            bail!(config_err(format!("{what} must have {} entries", self.space.dim)));
        }
        let coords = lits.iter().map(|l| l.to_scalar(field)).collect::<Result<Vec<_>>>()?;
        Ok(Vector::new(field, coords))
    }

    /// `g` (from `[perturbation]`), zero when absent.
    pub fn g(&self) -> Result<Perturbation> {
        self.build_perturbation(self.perturbation.as_ref(), "perturbation")
    }

    /// `h` (from `[perturbation_h]`), zero when absent.
    pub fn h(&self) -> Result<Perturbation> {
        self.build_perturbation(self.perturbation_h.as_ref(), "perturbation_h")
    }

    fn build_perturbation(&self, cfg: Option<&PerturbationCfg>, table: &str) -> Result<Perturbation> {
        let field = self.field_spec()?;
        let d = self.space.dim;
        let Some(p) = cfg else {
            return Ok(Perturbation::zero(field, d));
        };
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| config_err(format!("{table}.{key} is required for kind `{}`", p.kind)));
        let base = match p.kind.as_str() {
            "zero" => Perturbation::zero(field, d),
            "constant" => Perturbation::constant(self.vector(p.c.as_deref().unwrap_or_default(), &format!("{table}.c"))?),
            "radial_bump" => Perturbation::radial_bump(
                self.vector(p.c.as_deref().unwrap_or_default(), &format!("{table}.c"))?,
                need(p.r1, "r1")?,
                need(p.r2, "r2")?,
            )?,
            "damped_sin" => Perturbation::damped_sin(field, d, need(p.amp, "amp")?, need(p.freq, "freq")?)?,
            "ball_indicator" => Perturbation::ball_indicator(
                self.vector(p.c.as_deref().unwrap_or_default(), &format!("{table}.c"))?,
                need(p.r, "r")?,
            )?,
            "expr" => {
                let text = p.expr.as_deref().ok_or_else(|| config_err(format!("{table}.expr is required")))?;
                let ast = parse_expr(text, d, field).map_err(|e| config_err(format!("{table}.expr: {e}")))?;
                // expression maps carry no certificate of their own
                return finish(ast.into_perturbation(need(p.sup, "sup")?, need(p.lip, "lip")?)?, p);
            }
            other => bail!(config_err(format!("{table}.kind `{other}` is not a known perturbation"))),
        };
        let base = if p.sup.is_some() || p.lip.is_some() {
            let c = base.cert();
            let sup = p.sup.unwrap_or(c.sup);
            let lip = p.lip.unwrap_or(c.lip);
            base.with_certificate(Certificate::uniform(sup, lip))?
        } else {
            base
        };
        finish(base, p)
    }

    /// One-parameter family `t -> g_t` for sweeps, built from `[perturbation]`.
    pub fn family(&self) -> Result<Family> {
        let p = self.perturbation.as_ref().ok_or_else(|| config_err("sweep needs a [perturbation] table"))?;
        let field = self.field_spec()?;
        let c = || self.vector(p.c.as_deref().unwrap_or_default(), "perturbation.c");
        Ok(match p.kind.as_str() {
            "constant" => Family::constant(c()?),
            "radial_bump" => Family::radial_bump(
                c()?,
                p.r1.ok_or_else(|| config_err("perturbation.r1 is required"))?,
                p.r2.ok_or_else(|| config_err("perturbation.r2 is required"))?,
            ),
            "damped_sin" => Family::damped_sin(
                field,
                self.space.dim,
                p.amp.ok_or_else(|| config_err("perturbation.amp is required"))?,
                p.freq.ok_or_else(|| config_err("perturbation.freq is required"))?,
            ),
            _ => {
                let exact = p.sup_exact.ok_or_else(|| {
                    config_err(format!("perturbation.sup_exact is required to sweep kind `{}`", p.kind))
                })?;
                Family::scaled(self.g()?, exact)
            }
        })
    }

    pub fn remainder(&self) -> Result<Remainder> {
        let l = self.linearize.as_ref().ok_or_else(|| config_err("linearize needs a [linearize] table"))?;
        let field = self.field_spec()?;
        let d = self.space.dim;
        let ast = parse_expr(&l.remainder, d, field).map_err(|e| config_err(format!("linearize.remainder: {e}")))?;
        let shape_ok = match ast.ty {
            Ty::Vector(n) => n == d,
            Ty::Scalar => d == 1,
        };
        if !shape_ok {
            bail!(config_err(format!("linearize.remainder must be a vector of dimension {d}")));
        }
        let (coeff, power) = (l.modulus_coeff, l.modulus_power);
        if !(coeff >= 0.0) || !(power > 0.0) {
            bail!(config_err("linearize.modulus_coeff must be >= 0 and modulus_power > 0"));
        }
        let name = format!("expr({ast})");
        Ok(Remainder::new(name, field, d, move |x: &Vector| ast.eval(x), move |r| coeff * r.powf(power))?)
    }
}

fn finish(p: Perturbation, cfg: &PerturbationCfg) -> Result<Perturbation> {
    match (cfg.sup_s, cfg.sup_u, cfg.lip_s, cfg.lip_u) {
        (None, None, None, None) => Ok(p),
        (Some(a), Some(b), Some(c), Some(d)) => Ok(p.with_components(a, b, c, d)?),
        _ => Err(anyhow!(config_err("give all of sup_s, sup_u, lip_s, lip_u or none"))),
    }
}
