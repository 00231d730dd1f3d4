//! Exact arithmetic in Q(zeta_n), power basis modulo the cyclotomic polynomial.
//!
//! Mixed-order operands are lifted to the lcm of their orders (capped at
//! [`MAX_ORDER`]). Rationals are numbers of order 1.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arith;

pub const MAX_ORDER: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycError {
    #[error("cyclotomic order must be positive")]
    ZeroOrder,
    #[error("cyclotomic order {0} exceeds the cap {MAX_ORDER}")]
    OrderTooLarge(u64),
    #[error("cannot parse cyclotomic number {0:?}")]
    Parse(String),
}

type PhiTable = RwLock<HashMap<u64, Arc<Vec<i64>>>>;

fn phi_table() -> &'static PhiTable {
    static T: OnceLock<PhiTable> = OnceLock::new();
    T.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Coefficients of Phi_n, constant term first.
pub fn cyclotomic_poly(n: u64) -> Arc<Vec<i64>> {
    if let Some(p) = phi_table().read().unwrap().get(&n) {
        return p.clone();
    }
    let p = Arc::new(compute_phi(n));
    phi_table().write().unwrap().insert(n, p.clone());
    p
}

fn compute_phi(n: u64) -> Vec<i64> {
    // Phi_n(x) = Phi_rad(n)(x^(n/rad(n))), and Phi_rad(n) = prod_{d | rad} (x^d - 1)^mu(rad/d).
    let rad = arith::radical(n);
    let stretch = (n / rad) as usize;
    let divs = arith::divisors(rad);
    let mut num: Vec<i64> = vec![1];
    for &d in &divs {
        if arith::moebius(rad / d) == 1 {
            num = mul_x_d_minus_1(&num, d as usize);
        }
    }
    for &d in &divs {
        if arith::moebius(rad / d) == -1 {
            num = div_x_d_minus_1(&num, d as usize);
        }
    }
    let mut out = vec![0i64; (num.len() - 1) * stretch + 1];
    for (i, c) in num.into_iter().enumerate() {
        out[i * stretch] = c;
    }
    out
}

fn mul_x_d_minus_1(p: &[i64], d: usize) -> Vec<i64> {
    let mut out = vec![0i64; p.len() + d];
    for (i, &c) in p.iter().enumerate() {
        out[i + d] += c;
        out[i] -= c;
    }
    out
}

fn div_x_d_minus_1(p: &[i64], d: usize) -> Vec<i64> {
    // p = q (x^d - 1)  =>  p_j = q_{j-d} - q_j
    let deg_q = p.len() - 1 - d;
    let mut q = vec![0i64; deg_q + 1];
    for j in 0..=deg_q {
        let prev = if j >= d { q[j - d] } else { 0 };
        q[j] = prev - p[j];
    }
    q
}

trait Coef: Clone {
    fn coef_zero() -> Self;
    fn coef_is_zero(&self) -> bool;
    fn sub_scaled(&mut self, c: &Self, k: i64);
}

impl Coef for i64 {
    fn coef_zero() -> Self {
        0
    }
    fn coef_is_zero(&self) -> bool {
        *self == 0
    }
    fn sub_scaled(&mut self, c: &Self, k: i64) {
        *self -= c * k;
    }
}

impl Coef for BigRational {
    fn coef_zero() -> Self {
        Zero::zero()
    }
    fn coef_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub_scaled(&mut self, c: &Self, k: i64) {
        if k == 1 {
            *self -= c;
        } else if k == -1 {
            *self += c;
        } else {
            *self -= c * BigRational::from_integer(BigInt::from(k));
        }
    }
}

fn reduce_in_place<T: Coef>(v: &mut Vec<T>, n: u64) {
    let phi = cyclotomic_poly(n);
    let deg = phi.len() - 1;
    if v.len() > deg {
        for i in (deg..v.len()).rev() {
            if v[i].coef_is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut v[i], T::coef_zero());
            for j in 0..deg {
                if phi[j] != 0 {
                    v[i - deg + j].sub_scaled(&c, phi[j]);
                }
            }
        }
    }
    v.resize(deg, T::coef_zero());
}

#[derive(Clone, Debug)]
pub struct CyclotomicNumber {
    order: u64,
    coeffs: Vec<BigRational>,
}

impl CyclotomicNumber {
    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(k: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(k)))
    }

    pub fn from_bigint(k: BigInt) -> Self {
        Self::from_rational(BigRational::from_integer(k))
    }

    pub fn from_rational(q: BigRational) -> Self {
        CyclotomicNumber {
            order: 1,
            coeffs: vec![q],
        }
    }

    /// zeta_n^j.
    pub fn zeta_pow(j: i64, n: u64) -> Result<Self, CycError> {
        if n == 0 {
            return Err(CycError::ZeroOrder);
        }
        if n > MAX_ORDER {
            return Err(CycError::OrderTooLarge(n));
        }
        let mut counts = vec![0i64; n as usize];
        counts[j.rem_euclid(n as i64) as usize] = 1;
        Self::from_exponent_counts(n, counts)
    }

    /// sum_j counts[j] zeta_n^j, for an integer vector of length n.
    pub fn from_exponent_counts(n: u64, mut counts: Vec<i64>) -> Result<Self, CycError> {
        if n == 0 {
            return Err(CycError::ZeroOrder);
        }
        if n > MAX_ORDER {
            return Err(CycError::OrderTooLarge(n));
        }
        reduce_in_place(&mut counts, n);
        Ok(CyclotomicNumber {
            order: n,
            coeffs: counts
                .into_iter()
                .map(|c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        })
    }

    /// Build from raw power-basis coordinates (any length); reduces mod Phi_n.
    pub fn from_coeffs(n: u64, coeffs: Vec<BigRational>) -> Result<Self, CycError> {
        if n == 0 {
            return Err(CycError::ZeroOrder);
        }
        if n > MAX_ORDER {
            return Err(CycError::OrderTooLarge(n));
        }
        Ok(Self::reduced(n, coeffs))
    }

    fn reduced(n: u64, mut v: Vec<BigRational>) -> Self {
        reduce_in_place(&mut v, n);
        CyclotomicNumber { order: n, coeffs: v }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn canonicalize(&self) -> Self {
        Self::reduced(self.order, self.coeffs.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational value, if this number is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    /// Rewrite in order `target`, a multiple of the current order.
    pub fn lift(&self, target: u64) -> Result<Self, CycError> {
        if target == self.order {
            return Ok(self.clone());
        }
        if target > MAX_ORDER {
            return Err(CycError::OrderTooLarge(target));
        }
        assert!(target % self.order == 0, "lift target must be a multiple");
        let step = (target / self.order) as usize;
        let mut v = vec![BigRational::zero(); target as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * step] = c.clone();
        }
        Ok(Self::reduced(target, v))
    }

    fn common(&self, other: &Self) -> Result<(Self, Self), CycError> {
        if self.order == other.order {
            return Ok((self.clone(), other.clone()));
        }
        let l = arith::lcm_u64(self.order, other.order);
        if l > MAX_ORDER {
            return Err(CycError::OrderTooLarge(l));
        }
        Ok((self.lift(l)?, other.lift(l)?))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, CycError> {
        if self.order == other.order {
            let coeffs = self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect();
            return Ok(CyclotomicNumber {
                order: self.order,
                coeffs,
            });
        }
        let (a, b) = self.common(other)?;
        a.try_add(&b)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, CycError> {
        if self.order == 1 {
            return Ok(other.scale(&self.coeffs[0]));
        }
        if other.order == 1 {
            return Ok(self.scale(&other.coeffs[0]));
        }
        if self.order != other.order {
            let (a, b) = self.common(other)?;
            return a.try_mul(&b);
        }
        let mut v = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len()];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    v[i + j] += a * b;
                }
            }
        }
        Ok(Self::reduced(self.order, v))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        CyclotomicNumber {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
    }

    pub fn scale_int(&self, k: &BigInt) -> Self {
        self.scale(&BigRational::from_integer(k.clone()))
    }

    /// Complex conjugate: zeta -> zeta^{-1}.
    pub fn conj(&self) -> Self {
        if self.order <= 2 {
            return self.clone();
        }
        let n = self.order as usize;
        let mut v = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[(n - i) % n] += c;
        }
        Self::reduced(self.order, v)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Self::one();
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Numerical value under zeta_n -> exp(2 pi i / n). Reporting only.
    pub fn embed_complex(&self) -> Complex64 {
        let n = self.order as f64;
        let mut z = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let x = c.to_f64().unwrap_or(f64::NAN);
            let ang = 2.0 * std::f64::consts::PI * i as f64 / n;
            z += Complex64::from_polar(x, ang);
        }
        z
    }

    /// |z|^2 as a float (reporting and moment sums).
    pub fn abs_sq_f64(&self) -> f64 {
        if let Some(q) = self.as_rational() {
            let x = q.to_f64().unwrap_or(f64::NAN);
            return x * x;
        }
        self.embed_complex().norm_sqr()
    }
}

impl PartialEq for CyclotomicNumber {
    fn eq(&self, other: &Self) -> bool {
        match self.common(other) {
            Ok((a, b)) => a.coeffs == b.coeffs,
            Err(_) => false,
        }
    }
}

impl Eq for CyclotomicNumber {}

impl<'a> std::ops::Add<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;
    /// Panics if the common order exceeds [`MAX_ORDER`]; use `try_add` to handle that.
    fn add(self, o: &CyclotomicNumber) -> CyclotomicNumber {
        self.try_add(o).expect("cyclotomic order cap")
    }
}

impl<'a> std::ops::Sub<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn sub(self, o: &CyclotomicNumber) -> CyclotomicNumber {
        self.try_add(&-o).expect("cyclotomic order cap")
    }
}

impl<'a> std::ops::Mul<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn mul(self, o: &CyclotomicNumber) -> CyclotomicNumber {
        self.try_mul(o).expect("cyclotomic order cap")
    }
}

impl std::ops::Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl std::ops::AddAssign<&CyclotomicNumber> for CyclotomicNumber {
    fn add_assign(&mut self, o: &CyclotomicNumber) {
        if self.order == o.order {
            for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
                *a += b;
            }
        } else {
            *self = &*self + o;
        }
    }
}

impl std::ops::SubAssign<&CyclotomicNumber> for CyclotomicNumber {
    fn sub_assign(&mut self, o: &CyclotomicNumber) {
        if self.order == o.order {
            for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
                *a -= b;
            }
        } else {
            *self = &*self - o;
        }
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Rationals print as `p/q`; other numbers as `cyc:n:c0;c1;...` in the power basis.
impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return f.write_str(&fmt_rational(&q));
        }
        let parts: Vec<String> = self.coeffs.iter().map(fmt_rational).collect();
        write!(f, "cyc:{}:{}", self.order, parts.join(";"))
    }
}

impl FromStr for CyclotomicNumber {
    type Err = CycError;

    fn from_str(s: &str) -> Result<Self, CycError> {
        let bad = || CycError::Parse(s.to_string());
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("cyc:") {
            let (n, body) = rest.split_once(':').ok_or_else(bad)?;
            let n: u64 = n.parse().map_err(|_| bad())?;
            let coeffs = body
                .split(';')
                .map(|c| parse_rational(c).ok_or_else(bad))
                .collect::<Result<Vec<_>, _>>()?;
            return Self::from_coeffs(n, coeffs);
        }
        parse_rational(t).map(Self::from_rational).ok_or_else(bad)
    }
}

impl Serialize for CyclotomicNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CyclotomicNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) => Ok(Self::from_integer(k)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Integer power n^e as a rational (negative e allowed).
pub fn int_pow_rational(n: u64, e: i64) -> BigRational {
    let p = num_traits::pow(BigInt::from(n), e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Exact sign helper used by reports.
pub fn rational_sign(q: &BigRational) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

/// lcm of two orders, with the cap enforced.
pub fn common_order(a: u64, b: u64) -> Result<u64, CycError> {
    let l = a.lcm(&b);
    if l > MAX_ORDER {
        Err(CycError::OrderTooLarge(l))
    } else {
        Ok(l)
    }
}
