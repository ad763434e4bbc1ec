//! Vectors in `K^d`, matrices, norms and hyperbolic linear systems.
//!
//! A hyperbolic system is always given in adapted block coordinates: the
//! first `dim_s` coordinates span the stable block, the remaining `dim_u`
//! the unstable block, and the matrix is block diagonal. Everything
//! downstream of [`HyperbolicSystem`] uses only its four certified
//! operator-norm constants.

use std::ops::{Add, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling;
use crate::scalars::{FieldSpec, Scalar, ScalarKey};

#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    field: FieldSpec,
    coords: Vec<Scalar>,
}

impl Vector {
    pub fn new(field: FieldSpec, coords: Vec<Scalar>) -> Self {
        Vector { field, coords }
    }

    pub fn zeros(field: FieldSpec, dim: usize) -> Self {
        Vector { field, coords: vec![field.zero(); dim] }
    }

    pub fn from_f64(field: FieldSpec, values: &[f64]) -> Result<Self> {
        let coords = values.iter().map(|&v| field.from_f64(v)).collect::<Result<_>>()?;
        Ok(Vector { field, coords })
    }

    pub fn from_i64(field: FieldSpec, values: &[i64]) -> Self {
        Vector { field, coords: values.iter().map(|&v| field.from_i64(v)).collect() }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.coords[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Scalar::is_zero)
    }

    pub fn scale(&self, s: Scalar) -> Vector {
        Vector { field: self.field, coords: self.coords.iter().map(|c| s * *c).collect() }
    }

    /// Splits into the first `k` and the remaining coordinates.
    pub fn split(&self, k: usize) -> (Vector, Vector) {
        let (a, b) = self.coords.split_at(k);
        (Vector::new(self.field, a.to_vec()), Vector::new(self.field, b.to_vec()))
    }

    pub fn concat(a: &Vector, b: &Vector) -> Vector {
        let mut coords = a.coords.clone();
        coords.extend_from_slice(&b.coords);
        Vector { field: a.field, coords }
    }

    /// Coordinate-max norm `max_i |x_i|`.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|c| self.field.abs(c)).fold(0.0, f64::max)
    }

    pub fn key(&self) -> Vec<ScalarKey> {
        self.coords.iter().map(Scalar::key).collect()
    }

    pub fn to_f64(&self) -> Option<Vec<f64>> {
        self.coords.iter().map(Scalar::as_real).collect()
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        Vector {
            field: self.field,
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        Vector {
            field: self.field,
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector { field: self.field, coords: self.coords.iter().map(|c| -*c).collect() }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix { field, rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_rows(field: FieldSpec, rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, got: bad.len() });
        }
        Ok(Matrix { field, rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_f64_rows(field: FieldSpec, rows: &[&[f64]]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|row| row.iter().map(|&v| field.from_f64(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(field, rows)
    }

    pub fn diagonal(field: FieldSpec, diag: &[Scalar]) -> Self {
        let mut m = Self::zeros(field, diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.dim(), "matrix-vector dimension mismatch");
        let coords = (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(self.field.zero(), |acc, j| acc + self.get(i, j) * x.get(j))
            })
            .collect();
        Vector::new(self.field, coords)
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix dimension mismatch");
        let mut out = Matrix::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let v = (0..self.cols)
                    .fold(self.field.zero(), |acc, k| acc + self.get(i, k) * other.get(k, j));
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Matrix {
        (0..k).fold(Matrix::identity(self.field, self.rows), |acc, _| acc.mul(self))
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        let mut out = Matrix::zeros(self.field, r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out.set(i - r0, j - c0, self.get(i, j));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Gauss-Jordan elimination with the largest-absolute-value pivot.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let f = self.field;
        let mut a = self.clone();
        let mut inv = Matrix::identity(f, n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| f.abs(&a.get(i, col)).total_cmp(&f.abs(&a.get(j, col))))
                .expect("non-empty range");
            if a.get(pivot, col).is_zero() {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    let (x, y) = (a.get(col, j), a.get(pivot, j));
                    a.set(col, j, y);
                    a.set(pivot, j, x);
                    let (x, y) = (inv.get(col, j), inv.get(pivot, j));
                    inv.set(col, j, y);
                    inv.set(pivot, j, x);
                }
            }
            let p_inv = a.get(col, col).inv()?;
            for j in 0..n {
                a.set(col, j, a.get(col, j) * p_inv);
                inv.set(col, j, inv.get(col, j) * p_inv);
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let factor = a.get(i, col);
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a.set(i, j, a.get(i, j) - factor * a.get(col, j));
                    inv.set(i, j, inv.get(i, j) - factor * inv.get(col, j));
                }
            }
        }
        // Reject numerically singular real matrices.
        if let FieldSpec::RealPower { .. } = f {
            let prod = self.mul(&inv);
            let id = Matrix::identity(f, n);
            let scale = self.data.iter().chain(&inv.data).map(|s| f.abs(s)).fold(1.0, f64::max);
            let err = prod.data.iter().zip(&id.data).map(|(a, b)| f.abs(&(*a - *b))).fold(0.0, f64::max);
            if !(err <= 1e-9 * scale) {
                return Err(Error::Singular);
            }
        }
        Ok(inv)
    }

    /// Entrywise comparison; reals within a relative tolerance.
    pub fn approx_eq(&self, other: &Matrix, rel: f64) -> bool {
        if self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        self.data.iter().zip(&other.data).all(|(a, b)| match (a, b) {
            (Scalar::Real(x), Scalar::Real(y)) => (x - y).abs() <= rel * (1.0 + x.abs().max(y.abs())),
            _ => a == b,
        })
    }
}

/// Stable/unstable block sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splitting {
    pub dim_s: usize,
    pub dim_u: usize,
}

impl Splitting {
    pub fn new(dim_s: usize, dim_u: usize) -> Self {
        Splitting { dim_s, dim_u }
    }

    pub fn dim(&self) -> usize {
        self.dim_s + self.dim_u
    }
}

/// Norms on `K^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// `max_i |x_i|`.
    CoordMax,
    /// `max(stable(x_s), unstable(x_u))` for the first `dim_s` / remaining coordinates.
    BlockMax { dim_s: usize, stable: Box<NormSpec>, unstable: Box<NormSpec> },
    /// `max_{k<n} theta^{-k/(n-1)} base(B^k x)`.
    Renorm(Box<Renorm>),
}

/// Max-of-iterates renorming of a contraction `map`, certified by
/// `||map^k|| <= c^2 theta^k` in the base norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Renorm {
    pub base: NormSpec,
    pub map: Matrix,
    pub theta: f64,
    pub n: usize,
    pub c: f64,
}

impl Renorm {
    pub fn sigma(&self) -> f64 {
        self.c * self.c * self.theta.powi(self.n as i32 - 1)
    }

    /// Certified bound on the operator norm of `map` under the renorm.
    pub fn contraction_bound(&self) -> f64 {
        self.theta.powf(1.0 / (self.n as f64 - 1.0)).max(self.sigma())
    }

    /// Certified bound on the operator norm of `map^{-1}` under the renorm.
    pub fn inverse_bound(&self) -> Result<f64> {
        let inv = self.map.inverse()?;
        let base = op_norm(&inv, &self.base)?;
        Ok(base.max(self.theta.powf(-1.0 / (self.n as f64 - 1.0))))
    }

    fn eval(&self, x: &Vector) -> Result<f64> {
        if x.dim() != self.map.cols() {
            return Err(Error::DimensionMismatch { expected: self.map.cols(), got: x.dim() });
        }
        let mut best = 0.0f64;
        let mut y = x.clone();
        for k in 0..self.n {
            let w = self.theta.powf(-(k as f64) / (self.n as f64 - 1.0));
            best = best.max(w * self.base.norm(&y)?);
            if k + 1 < self.n {
                y = self.map.mul_vec(&y);
            }
        }
        Ok(best)
    }
}

impl NormSpec {
    pub fn norm(&self, x: &Vector) -> Result<f64> {
        match self {
            NormSpec::CoordMax => Ok(x.max_abs()),
            NormSpec::BlockMax { dim_s, stable, unstable } => {
                if *dim_s > x.dim() {
                    return Err(Error::DimensionMismatch { expected: *dim_s, got: x.dim() });
                }
                let (s, u) = x.split(*dim_s);
                Ok(stable.norm(&s)?.max(unstable.norm(&u)?))
            }
            NormSpec::Renorm(r) => r.eval(x),
        }
    }

    /// True when the norm satisfies the ultrametric inequality over `field`.
    pub fn is_ultrametric(&self, field: &FieldSpec) -> bool {
        match self {
            NormSpec::CoordMax => field.is_ultrametric(),
            NormSpec::BlockMax { stable, unstable, .. } => {
                stable.is_ultrametric(field) && unstable.is_ultrametric(field)
            }
            NormSpec::Renorm(r) => r.base.is_ultrametric(field),
        }
    }

    fn is_coord_max(&self) -> bool {
        match self {
            NormSpec::CoordMax => true,
            NormSpec::BlockMax { stable, unstable, .. } => {
                stable.is_coord_max() && unstable.is_coord_max()
            }
            NormSpec::Renorm(_) => false,
        }
    }
}

/// Exact operator norm with respect to the coordinate-max norm.
///
/// p-adic: `max_ij |M_ij|`. Real with exponent `q`: `(max_i sum_j |M_ij|_R)^q`.
pub fn op_norm(m: &Matrix, norm: &NormSpec) -> Result<f64> {
    if !norm.is_coord_max() {
        return Err(Error::UnsupportedNorm(
            "operator norms are exact only for the coordinate-max norm".into(),
        ));
    }
    let f = m.field();
    Ok(match f {
        FieldSpec::PAdic { .. } => m.entries().iter().map(|s| f.abs(s)).fold(0.0, f64::max),
        FieldSpec::RealPower { exponent } => {
            let row_max = (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m.get(i, j).as_real().unwrap().abs()).sum::<f64>())
                .fold(0.0, f64::max);
            if exponent == 1.0 {
                row_max
            } else {
                row_max.powf(exponent)
            }
        }
    })
}

/// Builds the max-of-iterates renorm for a contraction `a`.
///
/// The caller certifies `||a^k|| <= c^2 theta^k` in `base` (see
/// [`power_certificate`]); `n` is the least integer `>= 2` with
/// `c^2 theta^(n-1) < 1`, and the operator norm of `a` under the result is
/// at most `max(theta^(1/(n-1)), c^2 theta^(n-1)) < 1`.
pub fn adapted_renorm(a: &Matrix, base: NormSpec, theta: f64, c: f64) -> Result<NormSpec> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::BadCertificate(format!("theta = {theta} not in (0, 1)")));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::BadCertificate(format!("C = {c} < 1")));
    }
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    let mut n = 2usize;
    while c * c * theta.powi(n as i32 - 1) >= 1.0 {
        n += 1;
        if n > 100_000 {
            return Err(Error::BadCertificate("no n with C^2 theta^(n-1) < 1".into()));
        }
    }
    Ok(NormSpec::Renorm(Box::new(Renorm { base, map: a.clone(), theta, n, c })))
}

/// Smallest `c >= 1` with `||a^k|| <= c^2 theta^k` for all `k <= kmax`,
/// from exact coordinate-max operator norms of the powers.
pub fn power_certificate(a: &Matrix, base: &NormSpec, theta: f64, kmax: u32) -> Result<f64> {
    let mut c2 = 1.0f64;
    let mut p = Matrix::identity(a.field(), a.rows());
    for k in 0..=kmax {
        c2 = c2.max(op_norm(&p, base)? / theta.powi(k as i32));
        p = p.mul(a);
    }
    Ok(c2.sqrt())
}

/// Sampled falsifier for a power certificate: returns the worst observed
/// ratio `||a^k x|| / (c^2 theta^k ||x||)` over `k <= kmax`. Values above one
/// disprove the certificate.
pub fn falsify_power_certificate<R: Rng>(
    a: &Matrix,
    base: &NormSpec,
    theta: f64,
    c: f64,
    kmax: u32,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = sampling::random_vector(a.field(), a.cols(), 1.0, rng);
        let nx = base.norm(&x)?;
        if nx == 0.0 {
            continue;
        }
        let mut y = x.clone();
        for k in 0..=kmax {
            worst = worst.max(base.norm(&y)? / (c * c * theta.powi(k as i32) * nx));
            y = a.mul_vec(&y);
        }
    }
    Ok(worst)
}

/// The four operator-norm constants of an adapted norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConstants {
    /// `||A_1||` on the stable block.
    pub a1: f64,
    /// `||A_2^{-1}||` on the unstable block.
    pub a2inv: f64,
    /// `||A||`.
    pub a_norm: f64,
    /// `||A^{-1}||`.
    pub a_inv_norm: f64,
}

/// A hyperbolic automorphism in adapted block coordinates.
#[derive(Debug, Clone)]
pub struct HyperbolicSystem {
    field: FieldSpec,
    a: Matrix,
    a_inv: Matrix,
    splitting: Splitting,
    norm: NormSpec,
    a1: Matrix,
    a2: Matrix,
    a1_inv: Matrix,
    a2_inv: Matrix,
    constants: SystemConstants,
}

/// Validates block structure, inverts, and certifies the four constants.
pub fn check_hyperbolic(a: &Matrix, splitting: Splitting, norm: NormSpec) -> Result<HyperbolicSystem> {
    HyperbolicSystem::new(a.clone(), splitting, norm)
}

impl HyperbolicSystem {
    pub fn new(a: Matrix, splitting: Splitting, norm: NormSpec) -> Result<Self> {
        let d = splitting.dim();
        if a.rows() != d || a.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: a.rows().max(a.cols()) });
        }
        let ds = splitting.dim_s;
        if !a.block(0, ds, ds, d).is_zero() || !a.block(ds, d, 0, ds).is_zero() {
            return Err(Error::NotBlockDiagonal);
        }
        let field = a.field();
        let a1 = a.block(0, ds, 0, ds);
        let a2 = a.block(ds, d, ds, d);
        let a1_inv = a1.inverse()?;
        let a2_inv = a2.inverse()?;
        let mut a_inv = Matrix::zeros(field, d, d);
        for i in 0..ds {
            for j in 0..ds {
                a_inv.set(i, j, a1_inv.get(i, j));
            }
        }
        for i in ds..d {
            for j in ds..d {
                a_inv.set(i, j, a2_inv.get(i - ds, j - ds));
            }
        }

        let (stable_norm, unstable_norm) = match &norm {
            NormSpec::CoordMax => (NormSpec::CoordMax, NormSpec::CoordMax),
            NormSpec::BlockMax { dim_s, stable, unstable } => {
                if *dim_s != ds {
                    return Err(Error::DimensionMismatch { expected: ds, got: *dim_s });
                }
                ((**stable).clone(), (**unstable).clone())
            }
            NormSpec::Renorm(_) if splitting.dim_u == 0 => (norm.clone(), NormSpec::CoordMax),
            NormSpec::Renorm(_) if splitting.dim_s == 0 => (NormSpec::CoordMax, norm.clone()),
            NormSpec::Renorm(_) => {
                return Err(Error::UnsupportedNorm(
                    "a whole-space renorm needs a trivial splitting; use BlockMax".into(),
                ))
            }
        };
        // stable block: A_1 contracts; unstable block: A_2^{-1} contracts.
        let (a1_norm, a1_inv_norm) = block_constants(&a1, &a1_inv, &stable_norm)?;
        let (a2_inv_norm, a2_norm) = block_constants(&a2_inv, &a2, &unstable_norm)?;
        let constants = SystemConstants {
            a1: a1_norm,
            a2inv: a2_inv_norm,
            a_norm: a1_norm.max(a2_norm),
            a_inv_norm: a1_inv_norm.max(a2_inv_norm),
        };
        if constants.a1 >= 1.0 || constants.a2inv >= 1.0 {
            return Err(Error::NotHyperbolic(format!(
                "||A_1|| = {}, ||A_2^-1|| = {} (both must be < 1)",
                constants.a1, constants.a2inv
            )));
        }
        Ok(HyperbolicSystem { field, a, a_inv, splitting, norm, a1, a2, a1_inv, a2_inv, constants })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.splitting.dim()
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    pub fn norm_spec(&self) -> &NormSpec {
        &self.norm
    }

    pub fn constants(&self) -> SystemConstants {
        self.constants
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.a_inv
    }

    pub fn stable_block(&self) -> &Matrix {
        &self.a1
    }

    pub fn unstable_block(&self) -> &Matrix {
        &self.a2
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        self.norm.norm(x)
    }

    pub fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// `A x`, block by block.
    pub fn apply(&self, x: &Vector) -> Vector {
        let (s, u) = x.split(self.splitting.dim_s);
        Vector::concat(&self.a1.mul_vec(&s), &self.a2.mul_vec(&u))
    }

    /// `A^{-1} x`, block by block.
    pub fn apply_inv(&self, x: &Vector) -> Vector {
        let (s, u) = x.split(self.splitting.dim_s);
        Vector::concat(&self.a1_inv.mul_vec(&s), &self.a2_inv.mul_vec(&u))
    }

    pub fn apply_a1(&self, xs: &Vector) -> Vector {
        self.a1.mul_vec(xs)
    }

    pub fn apply_a2_inv(&self, xu: &Vector) -> Vector {
        self.a2_inv.mul_vec(xu)
    }

    pub fn project_s(&self, x: &Vector) -> Vector {
        x.split(self.splitting.dim_s).0
    }

    pub fn project_u(&self, x: &Vector) -> Vector {
        x.split(self.splitting.dim_s).1
    }
}

/// `(||M||, ||M^{-1}||)` for one diagonal block, where `m` is the block's
/// contracting map.
fn block_constants(m: &Matrix, m_inv: &Matrix, norm: &NormSpec) -> Result<(f64, f64)> {
    if m.rows() == 0 {
        return Ok((0.0, 0.0));
    }
    match norm {
        NormSpec::Renorm(r) => {
            if !r.map.approx_eq(m, 1e-12) {
                return Err(Error::BadCertificate(
                    "renorm map does not match the contracting block".into(),
                ));
            }
            Ok((r.contraction_bound(), r.inverse_bound()?))
        }
        other => Ok((op_norm(m, other)?, op_norm(m_inv, other)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::DEFAULT_PRECISION;

    fn r1() -> FieldSpec {
        FieldSpec::real(1.0).unwrap()
    }

    fn q3() -> FieldSpec {
        FieldSpec::padic(3, DEFAULT_PRECISION).unwrap()
    }

    #[test]
    fn coord_max_norm() {
        let x = Vector::from_f64(r1(), &[3.0, -4.0]).unwrap();
        assert_eq!(NormSpec::CoordMax.norm(&x).unwrap(), 4.0);
    }

    #[test]
    fn op_norm_examples() {
        let f = r1();
        assert_eq!(op_norm(&Matrix::identity(f, 3), &NormSpec::CoordMax).unwrap(), 1.0);
        assert_eq!(op_norm(&Matrix::identity(q3(), 2), &NormSpec::CoordMax).unwrap(), 1.0);
        let m = Matrix::from_f64_rows(f, &[&[1.0, 2.0], &[-3.0, 0.5]]).unwrap();
        assert_eq!(op_norm(&m, &NormSpec::CoordMax).unwrap(), 3.5);
        let q = q3();
        let m = Matrix::from_rows(
            q,
            vec![
                vec![q.from_i64(3), q.from_ratio(1, 3).unwrap()],
                vec![q.from_i64(9), q.from_i64(1)],
            ],
        )
        .unwrap();
        assert_eq!(op_norm(&m, &NormSpec::CoordMax).unwrap(), 3.0);
    }

    #[test]
    fn op_norm_rejects_renorm() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5]]).unwrap();
        let n = adapted_renorm(&a, NormSpec::CoordMax, 0.6, 1.0).unwrap();
        assert!(matches!(op_norm(&a, &n), Err(Error::UnsupportedNorm(_))));
    }

    #[test]
    fn hyperbolic_diag_real() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5, 0.0], &[0.0, 2.0]]).unwrap();
        let sys = check_hyperbolic(&a, Splitting::new(1, 1), NormSpec::CoordMax).unwrap();
        let c = sys.constants();
        assert_eq!((c.a1, c.a2inv, c.a_norm, c.a_inv_norm), (0.5, 0.5, 2.0, 2.0));
    }

    #[test]
    fn hyperbolic_padic_stable_only() {
        let q = q3();
        let a = Matrix::diagonal(q, &[q.from_i64(3)]);
        let sys = check_hyperbolic(&a, Splitting::new(1, 0), NormSpec::CoordMax).unwrap();
        assert_eq!(sys.constants().a1, 1.0 / 3.0);
        assert_eq!(sys.constants().a2inv, 0.0);
        assert_eq!(sys.constants().a_inv_norm, 3.0);
    }

    #[test]
    fn not_hyperbolic() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        assert!(matches!(
            check_hyperbolic(&a, Splitting::new(1, 1), NormSpec::CoordMax),
            Err(Error::NotHyperbolic(_))
        ));
    }

    #[test]
    fn not_block_diagonal_and_singular() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5, 1.0], &[0.0, 2.0]]).unwrap();
        assert_eq!(
            check_hyperbolic(&a, Splitting::new(1, 1), NormSpec::CoordMax).unwrap_err(),
            Error::NotBlockDiagonal
        );
        let a = Matrix::from_f64_rows(f, &[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert_eq!(
            check_hyperbolic(&a, Splitting::new(2, 0), NormSpec::CoordMax).unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn inverse_identity() {
        let q = q3();
        let a = Matrix::from_rows(
            q,
            vec![vec![q.from_i64(3), q.from_i64(1)], vec![q.from_i64(0), q.from_i64(3)]],
        )
        .unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(q, 2));
    }

    #[test]
    fn renorm_of_scalar_multiple_is_base() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.9, 0.0], &[0.0, 0.9]]).unwrap();
        let n = adapted_renorm(&a, NormSpec::CoordMax, 0.9, 1.0).unwrap();
        let NormSpec::Renorm(r) = &n else { unreachable!() };
        assert_eq!(r.n, 2);
        assert!((r.contraction_bound() - 0.9).abs() < 1e-15);
        let x = Vector::from_f64(f, &[0.3, -0.7]).unwrap();
        assert!((n.norm(&x).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn renorm_direct_evaluation() {
        // A = [[1/2, 1], [0, 1/2]], theta = 0.9, n = 8, x = (0, 1).
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5, 1.0], &[0.0, 0.5]]).unwrap();
        let r = Renorm { base: NormSpec::CoordMax, map: a, theta: 0.9, n: 8, c: 1.0 };
        // A^k (0,1) = (k 2^{1-k}, 2^{-k}); weights 0.9^{-k/7}.
        let expected = (0..8)
            .map(|k| {
                let v = (k as f64 * 0.5f64.powi(k - 1)).max(0.5f64.powi(k));
                0.9f64.powf(-(k as f64) / 7.0) * v
            })
            .fold(0.0, f64::max);
        let x = Vector::from_f64(f, &[0.0, 1.0]).unwrap();
        let got = NormSpec::Renorm(Box::new(r)).norm(&x).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
        // k = 1 and k = 2 both give 1 before weighting; k = 2 wins.
        assert!((expected - 0.9f64.powf(-2.0 / 7.0)).abs() < 1e-14);
    }

    #[test]
    fn renorm_bad_certificate() {
        let f = r1();
        let a = Matrix::from_f64_rows(f, &[&[0.5]]).unwrap();
        assert!(adapted_renorm(&a, NormSpec::CoordMax, 1.0, 1.0).is_err());
        assert!(adapted_renorm(&a, NormSpec::CoordMax, 0.5, 0.5).is_err());
    }

    #[test]
    fn power_certificate_padic() {
        let q = q3();
        let a = Matrix::from_rows(
            q,
            vec![vec![q.from_i64(3), q.from_i64(1)], vec![q.from_i64(0), q.from_i64(3)]],
        )
        .unwrap();
        // ||A^k|| = 3^{1-k} for k >= 1 (until |k|_3 kicks in); worst at k = 1.
        let c = power_certificate(&a, &NormSpec::CoordMax, 0.5, 20).unwrap();
        assert!((c * c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn block_renorm_system_constants() {
        let f = r1();
        let a1 = Matrix::from_f64_rows(f, &[&[0.5, 10.0], &[0.0, 0.5]]).unwrap();
        let c = power_certificate(&a1, &NormSpec::CoordMax, 0.8, 60).unwrap();
        let stable = adapted_renorm(&a1, NormSpec::CoordMax, 0.8, c).unwrap();
        let a = Matrix::from_f64_rows(
            f,
            &[&[0.5, 10.0, 0.0], &[0.0, 0.5, 0.0], &[0.0, 0.0, 3.0]],
        )
        .unwrap();
        let norm = NormSpec::BlockMax {
            dim_s: 2,
            stable: Box::new(stable),
            unstable: Box::new(NormSpec::CoordMax),
        };
        let sys = check_hyperbolic(&a, Splitting::new(2, 1), norm).unwrap();
        assert!(sys.constants().a1 < 1.0);
        assert!((sys.constants().a2inv - 1.0 / 3.0).abs() < 1e-15);
    }
}
