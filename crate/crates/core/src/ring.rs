//! Exact arithmetic in the ring of integers O of the nine imaginary quadratic
//! fields of class number one.
//!
//! Elements are `a + b*w` with `w = sqrt(D)/2` for even D and `w = (1 + sqrt(D))/2`
//! for odd D. Divisibility is an exact 2x2 solve in this basis, so nothing here
//! relies on a Euclidean algorithm.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arith;

pub const DISCRIMINANTS: [i64; 9] = [-3, -4, -7, -8, -11, -19, -43, -67, -163];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("unsupported discriminant {0}: expected one of -3,-4,-7,-8,-11,-19,-43,-67,-163")]
    UnsupportedDiscriminant(i64),
    #[error("zero modulus")]
    ZeroModulus,
    #[error("zero element has no factorization")]
    ZeroElement,
    #[error("elements live in different fields ({0} vs {1})")]
    FieldMismatch(i64, i64),
    #[error("{0} is not a rational prime")]
    NotPrime(u64),
    #[error("cannot parse ring element {0:?}: expected \"a+b*w@D\"")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadField {
    d: i64,
}

impl QuadField {
    pub fn new(d: i64) -> Result<Self, RingError> {
        if DISCRIMINANTS.contains(&d) {
            Ok(QuadField { d })
        } else {
            Err(RingError::UnsupportedDiscriminant(d))
        }
    }

    pub fn all() -> impl Iterator<Item = QuadField> {
        DISCRIMINANTS.iter().map(|&d| QuadField { d })
    }

    pub fn disc(&self) -> i64 {
        self.d
    }

    pub fn abs_disc(&self) -> u64 {
        self.d.unsigned_abs()
    }

    /// The prime p_K with |D| a power of p_K.
    pub fn p_k(&self) -> u64 {
        if self.d % 4 == 0 {
            2
        } else {
            self.abs_disc()
        }
    }

    /// Order w of the unit group.
    pub fn unit_count(&self) -> usize {
        match self.d {
            -3 => 6,
            -4 => 4,
            _ => 2,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.d, -3 | -4 | -7 | -8 | -11)
    }

    /// Trace of w.
    pub fn omega_trace(&self) -> i64 {
        if self.d % 4 == 0 {
            0
        } else {
            1
        }
    }

    /// Norm of w, so that w^2 = tr(w) w - N(w).
    pub fn omega_norm(&self) -> i64 {
        if self.d % 4 == 0 {
            -self.d / 4
        } else {
            (1 - self.d) / 4
        }
    }

    pub fn elem(&self, a: i64, b: i64) -> RingElement {
        RingElement { a, b, field: *self }
    }

    pub fn int(&self, a: i64) -> RingElement {
        self.elem(a, 0)
    }

    pub fn zero(&self) -> RingElement {
        self.elem(0, 0)
    }

    pub fn one(&self) -> RingElement {
        self.elem(1, 0)
    }

    pub fn omega(&self) -> RingElement {
        self.elem(0, 1)
    }

    /// sqrt(D) = i sqrt(|D|) in the w basis.
    pub fn sqrt_d(&self) -> RingElement {
        if self.d % 4 == 0 {
            self.elem(0, 2)
        } else {
            self.elem(-1, 2)
        }
    }

    /// Generator of the unit group, identified with exp(2 pi i / w).
    pub fn unit_generator(&self) -> RingElement {
        match self.d {
            -3 | -4 => self.omega(),
            _ => self.int(-1),
        }
    }

    /// Units listed as powers zeta^0, zeta^1, ... of `unit_generator`.
    pub fn units(&self) -> Vec<RingElement> {
        let z = self.unit_generator();
        let mut out = Vec::with_capacity(self.unit_count());
        let mut u = self.one();
        for _ in 0..self.unit_count() {
            out.push(u);
            u = u * z;
        }
        out
    }

    /// j with eps = zeta^j, if eps is a unit.
    pub fn unit_exponent(&self, eps: RingElement) -> Option<usize> {
        self.units().iter().position(|&u| u == eps)
    }

    /// All elements of norm at most `bound`.
    pub fn elements_up_to_norm(&self, bound: i64) -> Vec<RingElement> {
        let mut out = Vec::new();
        if bound < 0 {
            return out;
        }
        let absd = self.abs_disc() as f64;
        let bmax = (2.0 * (bound as f64 / absd).sqrt()).floor() as i64 + 1;
        let t = self.omega_trace();
        for b in -bmax..=bmax {
            // N = (a + t b/2)^2 + (|D|/4) b^2
            let rest = bound as f64 - absd * (b * b) as f64 / 4.0;
            if rest < -1.0 {
                continue;
            }
            let r = rest.max(0.0).sqrt() + 1.0;
            let centre = -(t * b) as f64 / 2.0;
            let lo = (centre - r).floor() as i64;
            let hi = (centre + r).ceil() as i64;
            for a in lo..=hi {
                let e = self.elem(a, b);
                if e.norm() <= bound {
                    out.push(e);
                }
            }
        }
        out
    }
}

impl fmt::Display for QuadField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt({}))", self.d)
    }
}

/// a + b*w in O.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingElement {
    pub a: i64,
    pub b: i64,
    field: QuadField,
}

impl RingElement {
    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn norm(&self) -> i64 {
        self.norm_wide() as i64
    }

    /// The norm without narrowing, for callers whose coordinates can be large.
    pub fn norm_wide(&self) -> i128 {
        let (a, b) = (self.a as i128, self.b as i128);
        let t = self.field.omega_trace() as i128;
        let n = self.field.omega_norm() as i128;
        a * a + t * a * b + n * b * b
    }

    pub fn conj(&self) -> RingElement {
        let t = self.field.omega_trace();
        self.field.elem(self.a + t * self.b, -self.b)
    }

    pub fn norm_conj(&self) -> (i64, RingElement) {
        (self.norm(), self.conj())
    }

    /// Trace a + a-bar.
    pub fn trace(&self) -> i64 {
        2 * self.a + self.field.omega_trace() * self.b
    }

    pub fn scale(&self, k: i64) -> RingElement {
        self.field.elem(self.a * k, self.b * k)
    }

    pub fn pow(&self, e: u32) -> RingElement {
        let mut r = self.field.one();
        for _ in 0..e {
            r = r * *self;
        }
        r
    }

    /// self / other when the quotient lies in O.
    pub fn div_exact(&self, other: &RingElement) -> Option<RingElement> {
        if other.is_zero() {
            return None;
        }
        let n = other.norm();
        let num = *self * other.conj();
        if num.a % n == 0 && num.b % n == 0 {
            Some(self.field.elem(num.a / n, num.b / n))
        } else {
            None
        }
    }

    pub fn divides(&self, other: &RingElement) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.div_exact(self).is_some()
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    /// Ordering used to pick residue representatives: smallest norm, then
    /// smallest |a|, |b|, preferring nonnegative coordinates.
    pub fn canonical_key(&self) -> (i64, u64, u64, bool, bool) {
        (
            self.norm(),
            self.a.unsigned_abs(),
            self.b.unsigned_abs(),
            self.a < 0,
            self.b < 0,
        )
    }

    fn check(&self, other: &RingElement) {
        assert_eq!(
            self.field, other.field,
            "ring elements from different fields"
        );
    }
}

impl std::ops::Add for RingElement {
    type Output = RingElement;
    fn add(self, o: RingElement) -> RingElement {
        self.check(&o);
        self.field.elem(self.a + o.a, self.b + o.b)
    }
}

impl std::ops::Sub for RingElement {
    type Output = RingElement;
    fn sub(self, o: RingElement) -> RingElement {
        self.check(&o);
        self.field.elem(self.a - o.a, self.b - o.b)
    }
}

impl std::ops::Neg for RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        self.field.elem(-self.a, -self.b)
    }
}

impl std::ops::Mul for RingElement {
    type Output = RingElement;
    fn mul(self, o: RingElement) -> RingElement {
        self.check(&o);
        let t = self.field.omega_trace();
        let n = self.field.omega_norm();
        let bd = self.b * o.b;
        self.field
            .elem(self.a * o.a - n * bd, self.a * o.b + self.b * o.a + t * bd)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*w@{}", self.a, self.b, self.field.d)
    }
}

impl FromStr for RingElement {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, RingError> {
        let bad = || RingError::Parse(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (lhs, d) = t.split_once('@').ok_or_else(bad)?;
        let d: i64 = d.parse().map_err(|_| bad())?;
        let field = QuadField::new(d)?;
        let body = lhs.strip_suffix("*w").ok_or_else(bad)?;
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1].is_ascii_digit())
            .ok_or_else(bad)?;
        let a: i64 = body[..split].parse().map_err(|_| bad())?;
        let rest = &body[split..];
        let rest = rest.strip_prefix('+').unwrap_or(rest);
        let b: i64 = rest.parse().map_err(|_| bad())?;
        Ok(field.elem(a, b))
    }
}

impl Serialize for RingElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RingElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A complete residue system of O modulo a nonzero element.
///
/// The lattice `M*O` is put in Hermite form `{(a, b) : C | b, a = (b/C) B mod A}`,
/// which gives an O(1) reduction to a box index; each class is labelled by its
/// representative minimizing `canonical_key`.
#[derive(Debug)]
pub struct ResidueSystem {
    field: QuadField,
    modulus: RingElement,
    hnf: (i64, i64, i64),
    reps: Vec<RingElement>,
    box_to_rep: Vec<u32>,
}

type ResidueCache = Mutex<HashMap<(i64, i64, i64, i64), Arc<ResidueSystem>>>;

fn residue_cache() -> &'static ResidueCache {
    static CACHE: OnceLock<ResidueCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn hermite_form(m: RingElement) -> (i64, i64, i64) {
    let v1 = (m.a, m.b);
    let mw = m * m.field.omega();
    let v2 = (mw.a, mw.b);
    let (g, u, v) = arith::ext_gcd(v1.1, v2.1);
    let w1 = (u * v1.0 + v * v2.0, g);
    let x0 = (v2.1 / g) * v1.0 - (v1.1 / g) * v2.0;
    let big_a = x0.abs();
    let big_b = w1.0.rem_euclid(big_a);
    (big_a, big_b, g)
}

impl ResidueSystem {
    pub fn new(modulus: RingElement) -> Result<Arc<ResidueSystem>, RingError> {
        if modulus.is_zero() {
            return Err(RingError::ZeroModulus);
        }
        let hnf = hermite_form(modulus);
        let key = (modulus.field.d, hnf.0, hnf.1, hnf.2);
        if let Some(rs) = residue_cache().lock().unwrap().get(&key) {
            return Ok(rs.clone());
        }
        let rs = Arc::new(Self::build(modulus, hnf));
        residue_cache().lock().unwrap().insert(key, rs.clone());
        Ok(rs)
    }

    fn build(modulus: RingElement, hnf: (i64, i64, i64)) -> ResidueSystem {
        let field = modulus.field;
        let size = (hnf.0 * hnf.2) as usize;
        debug_assert_eq!(size as i64, modulus.norm());
        let mut rs = ResidueSystem {
            field,
            modulus,
            hnf,
            reps: Vec::new(),
            box_to_rep: vec![u32::MAX; size],
        };
        let mut bound = modulus.norm().max(4);
        loop {
            let mut cands = field.elements_up_to_norm(bound);
            cands.sort_by_key(|e| e.canonical_key());
            let mut chosen: Vec<Option<RingElement>> = vec![None; size];
            let mut filled = 0;
            for e in cands {
                let bi = rs.box_index(e);
                if chosen[bi].is_none() {
                    chosen[bi] = Some(e);
                    filled += 1;
                }
            }
            if filled == size {
                let mut reps: Vec<(usize, RingElement)> = chosen
                    .into_iter()
                    .enumerate()
                    .map(|(i, e)| (i, e.unwrap()))
                    .collect();
                reps.sort_by_key(|(_, e)| e.canonical_key());
                for (ri, (bi, e)) in reps.into_iter().enumerate() {
                    rs.box_to_rep[bi] = ri as u32;
                    rs.reps.push(e);
                }
                return rs;
            }
            bound *= 2;
        }
    }

    fn box_index(&self, x: RingElement) -> usize {
        let (a_mod, b_off, c) = self.hnf;
        let t = x.b.div_euclid(c);
        let b = x.b - t * c;
        let a = (x.a - t * b_off).rem_euclid(a_mod);
        (b * a_mod + a) as usize
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn modulus(&self) -> RingElement {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[RingElement] {
        &self.reps
    }

    pub fn rep(&self, i: usize) -> RingElement {
        self.reps[i]
    }

    /// Index of the class of x, in canonical order.
    pub fn index_of(&self, x: RingElement) -> usize {
        self.box_to_rep[self.box_index(x)] as usize
    }

    pub fn reduce(&self, x: RingElement) -> RingElement {
        self.reps[self.index_of(x)]
    }

    pub fn congruent(&self, x: RingElement, y: RingElement) -> bool {
        self.box_index(x) == self.box_index(y)
    }
}

/// Coset representatives of O/rho O. For prime N(rho) these are 1, ..., N(rho).
pub fn residues_mod(rho: RingElement) -> Result<Vec<RingElement>, RingError> {
    if rho.is_zero() {
        return Err(RingError::ZeroModulus);
    }
    let n = rho.norm();
    if arith::is_prime(n as u64) {
        return Ok((1..=n).map(|k| rho.field.int(k)).collect());
    }
    Ok(ResidueSystem::new(rho)?.reps().to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Split,
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub kind: SplitKind,
    pub pi: Option<RingElement>,
}

/// Kronecker symbol (D/n).
pub fn chi_d(n: i64, field: QuadField) -> i64 {
    arith::kronecker(field.d, n)
}

fn prime_above(p: u64, field: QuadField) -> RingElement {
    let mut found: Vec<RingElement> = field
        .elements_up_to_norm(p as i64)
        .into_iter()
        .filter(|e| e.norm() == p as i64)
        .collect();
    // Smallest |b|, then |a|, preferring positive coordinates: 5 = (2+i)(2-i) gives 2+i.
    found.sort_by_key(|e| (e.b.unsigned_abs(), e.a.unsigned_abs(), e.b < 0, e.a < 0));
    found[0]
}

pub fn split_rational_prime(p: u64, field: QuadField) -> Result<SplitInfo, RingError> {
    if !arith::is_prime(p) {
        return Err(RingError::NotPrime(p));
    }
    Ok(match chi_d(p as i64, field) {
        0 => SplitInfo {
            kind: SplitKind::Ramified,
            pi: Some(prime_above(p, field)),
        },
        1 => SplitInfo {
            kind: SplitKind::Split,
            pi: Some(prime_above(p, field)),
        },
        _ => SplitInfo {
            kind: SplitKind::Inert,
            pi: None,
        },
    })
}

/// One prime ideal factor (pi)^e of an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeFactor {
    pub prime: RingElement,
    /// Rational prime below.
    pub p: u64,
    pub exponent: u32,
}

/// Prime ideal factorization, by factoring N(alpha) and splitting each rational prime.
pub fn factor_element(alpha: RingElement) -> Result<Vec<PrimeFactor>, RingError> {
    if alpha.is_zero() {
        return Err(RingError::ZeroElement);
    }
    let field = alpha.field;
    let mut out = Vec::new();
    for (p, e) in arith::factor(alpha.norm() as u64) {
        let info = split_rational_prime(p, field)?;
        match info.kind {
            SplitKind::Inert => out.push(PrimeFactor {
                prime: field.int(p as i64),
                p,
                exponent: e / 2,
            }),
            SplitKind::Ramified => out.push(PrimeFactor {
                prime: info.pi.unwrap(),
                p,
                exponent: e,
            }),
            SplitKind::Split => {
                let pi = info.pi.unwrap();
                let mut x = alpha;
                let mut e1 = 0;
                while let Some(q) = x.div_exact(&pi) {
                    x = q;
                    e1 += 1;
                }
                if e1 > 0 {
                    out.push(PrimeFactor {
                        prime: pi,
                        p,
                        exponent: e1,
                    });
                }
                if e > e1 {
                    out.push(PrimeFactor {
                        prime: pi.conj(),
                        p,
                        exponent: e - e1,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Moebius function on nonzero elements of O.
pub fn moebius(alpha: RingElement) -> Result<i64, RingError> {
    let f = factor_element(alpha)?;
    if f.iter().any(|pf| pf.exponent > 1) {
        return Ok(0);
    }
    Ok(if f.len() % 2 == 0 { 1 } else { -1 })
}

/// Coprimality of the ideals (alpha) and (beta).
pub fn ideal_coprime(alpha: RingElement, beta: RingElement) -> Result<bool, RingError> {
    if beta.is_zero() {
        return Ok(alpha.is_unit());
    }
    Ok(factor_element(alpha)?
        .iter()
        .all(|pf| !pf.prime.divides(&beta)))
}

/// Closed form of sum_{r in O/sO} e(2 Re(i r x / (sqrt|D| s)))
pub fn exponential_sum(x: RingElement, s: RingElement) -> Result<i64, RingError> {
    if s.is_zero() {
        return Err(RingError::ZeroModulus);
    }
    Ok(if s.divides(&x) { s.norm() } else { 0 })
}
