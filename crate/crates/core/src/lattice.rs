//! Positive definite Hermitian forms T = (n, r; conj(r), m) with n, m in Z and
//! r = i s / sqrt|D| for s in O, their GL2(O) equivalence, the search for an
//! equivalent form with odd prime bottom-right entry, and slicing of degree-2
//! coefficient tables into Jacobi coefficient systems.
//!
//! Since 2 Re(i z / sqrt|D|) = -b(z) for z = a + b w, every Hermitian
//! expression below is an integer read off the w-coordinate.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::cyclotomic::CyclotomicNumber;
use crate::jacobi::{JacobiCoefficientSystem, JacobiError};
use crate::ring::{QuadField, RingElement, RingError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("not positive definite: |D|nm - N(s) = {0}")]
    NotPositiveDefinite(i64),
    #[error("det g = {0} is not a unit")]
    NotUnitDeterminant(String),
    #[error("primitive required (content {0})")]
    NotPrimitive(u64),
    #[error("no odd prime found within shell bound {0}")]
    NotFound(u64),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("bad table data: {0}")]
    Parse(String),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// (n, r; conj(r), m) with r = i s / sqrt|D|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HermitianForm {
    pub n: i64,
    pub m: i64,
    pub s: RingElement,
}

impl HermitianForm {
    pub fn new(n: i64, m: i64, s: RingElement) -> Result<Self, LatticeError> {
        let t = HermitianForm { n, m, s };
        t.scaled_det()?;
        Ok(t)
    }

    pub fn field(&self) -> QuadField {
        self.s.field()
    }

    /// |D| det T = |D| n m - N(s).
    pub fn scaled_det(&self) -> Result<u64, LatticeError> {
        // the two terms can each pass 2^63 after a GL2 conjugation while the
        // difference stays small
        let v = self.field().abs_disc() as i128 * self.n as i128 * self.m as i128 - self.s.norm_wide();
        if v <= 0 || self.n <= 0 || self.m <= 0 {
            return Err(LatticeError::NotPositiveDefinite(v.clamp(i64::MIN as i128, i64::MAX as i128) as i64));
        }
        u64::try_from(v).map_err(|_| LatticeError::NotPositiveDefinite(i64::MAX))
    }

    /// Largest a with T / a in the lattice, and whether it is 1.
    pub fn content(&self) -> (u64, bool) {
        let c = [self.m, self.s.a, self.s.b]
            .iter()
            .fold(self.n, |g, &x| g.gcd(&x))
            .unsigned_abs();
        (c, c == 1)
    }

    pub fn scale(&self, a: i64) -> Self {
        HermitianForm {
            n: self.n * a,
            m: self.m * a,
            s: self.s.scale(a),
        }
    }

    /// T / a, if it stays in the lattice.
    pub fn divide(&self, a: i64) -> Option<Self> {
        if a == 0 || self.n % a != 0 || self.m % a != 0 || self.s.a % a != 0 || self.s.b % a != 0 {
            return None;
        }
        Some(HermitianForm {
            n: self.n / a,
            m: self.m / a,
            s: self.field().elem(self.s.a / a, self.s.b / a),
        })
    }

    pub fn key(&self) -> (i64, i64, i64, i64) {
        (self.n, self.m, self.s.a, self.s.b)
    }
}

impl fmt::Display for HermitianForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, m={}, s={})", self.n, self.m, self.s)
    }
}

/// g = (alpha, beta; gamma, delta) over O.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gl2 {
    pub alpha: RingElement,
    pub beta: RingElement,
    pub gamma: RingElement,
    pub delta: RingElement,
}

impl Gl2 {
    pub fn new(alpha: RingElement, beta: RingElement, gamma: RingElement, delta: RingElement) -> Self {
        Gl2 {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    pub fn identity(field: QuadField) -> Self {
        Gl2::new(field.one(), field.zero(), field.zero(), field.one())
    }

    pub fn det(&self) -> RingElement {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn mul(&self, o: &Gl2) -> Gl2 {
        Gl2::new(
            self.alpha * o.alpha + self.beta * o.gamma,
            self.alpha * o.beta + self.beta * o.delta,
            self.gamma * o.alpha + self.delta * o.gamma,
            self.gamma * o.beta + self.delta * o.delta,
        )
    }
}

impl fmt::Display for Gl2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.alpha, self.beta, self.gamma, self.delta)
    }
}

/// g* T g in (n, m, s) coordinates.
pub fn gl2_conjugate(g: &Gl2, t: &HermitianForm) -> Result<HermitianForm, LatticeError> {
    let f = t.field();
    for x in [g.alpha, g.beta, g.gamma, g.delta] {
        if x.field() != f {
            return Err(LatticeError::FieldMismatch(format!("{x} vs D={}", f.disc())));
        }
    }
    let det = g.det();
    if !det.is_unit() {
        return Err(LatticeError::NotUnitDeterminant(det.to_string()));
    }
    let (a, b, c, d) = (g.alpha, g.beta, g.gamma, g.delta);
    let s = t.s;
    // 2 Re(conj(x) r y) = -b(conj(x) s y)
    let n = t.n * a.norm() + t.m * c.norm() - (a.conj() * s * c).b;
    let m = t.n * b.norm() + t.m * d.norm() - (b.conj() * s * d).b;
    // s' = -sqrt(D) r' with r' = n conj(a) b + conj(a) r d + conj(c) conj(r) b + m conj(c) d
    let s2 = f.sqrt_d() * (a.conj() * b).scale(-t.n) - f.sqrt_d() * (c.conj() * d).scale(t.m)
        + a.conj() * s * d
        - c.conj() * s.conj() * b;
    HermitianForm::new(n, m, s2)
}

/// An equivalent form with odd prime bottom-right entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRep {
    pub g: Gl2,
    pub p: u64,
    pub form: HermitianForm,
    pub shell: u64,
    pub point: (i64, i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Completion {
    /// (1, beta; 0, 1): bottom-right n N(beta) + m - b(conj(beta) s).
    Upper,
    /// (0, 1; -1, delta): bottom-right n + m N(delta) - b(s delta).
    Swapped,
}

/// Walks square shells max(|x|, |y|) = h <= bound with beta or delta = x + y w,
/// trying the parity class that forces an odd bottom-right entry first, and
/// returns the first odd prime.
pub fn prime_rep_search(t: &HermitianForm, bound: u64) -> Result<PrimeRep, LatticeError> {
    t.scaled_det()?;
    let (c, primitive) = t.content();
    if !primitive {
        return Err(LatticeError::NotPrimitive(c));
    }
    let f = t.field();
    let (kind, class) = if t.m % 2 != 0 {
        (Completion::Upper, (0, 0))
    } else if t.n % 2 != 0 {
        (Completion::Swapped, (0, 0))
    } else if t.s.b % 2 != 0 {
        // b(conj(beta) s) = b(s) mod 2 for beta = 1 mod 2
        (Completion::Upper, (1, 0))
    } else {
        // b(conj(w) s) = -a(s), odd because T is primitive
        (Completion::Upper, (0, 1))
    };
    let build = |x: i64, y: i64| {
        let v = f.elem(x, y);
        match kind {
            Completion::Upper => Gl2::new(f.one(), v, f.zero(), f.one()),
            Completion::Swapped => Gl2::new(f.zero(), f.one(), f.int(-1), v),
        }
    };
    for h in 0..=bound as i64 {
        let mut pts: Vec<(i64, i64)> = Vec::new();
        for x in -h..=h {
            for y in -h..=h {
                if x.abs().max(y.abs()) == h {
                    pts.push((x, y));
                }
            }
        }
        pts.sort_by_key(|&(x, y)| {
            let in_class = (x.rem_euclid(2), y.rem_euclid(2)) == class;
            (!in_class, x.abs(), y.abs(), x < 0, y < 0)
        });
        for (x, y) in pts {
            let g = build(x, y);
            let form = gl2_conjugate(&g, t)?;
            let p = form.m;
            if p > 2 && p % 2 == 1 && arith::is_prime(p as u64) {
                return Ok(PrimeRep {
                    g,
                    p: p as u64,
                    form,
                    shell: h as u64,
                    point: (x, y),
                });
            }
        }
    }
    Err(LatticeError::NotFound(bound))
}

/// Fourier coefficients a(F, T) of a degree-2 Hermitian form, keyed by T.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    field: QuadField,
    weight: i64,
    entries: BTreeMap<(i64, i64, i64, i64), CyclotomicNumber>,
}

#[derive(Serialize, Deserialize)]
struct TableLine {
    n: i64,
    m: i64,
    s: RingElement,
    value: CyclotomicNumber,
}

impl CoefficientTable {
    pub fn new(field: QuadField, weight: i64) -> Self {
        CoefficientTable {
            field,
            weight,
            entries: BTreeMap::new(),
        }
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, t: HermitianForm, value: CyclotomicNumber) -> Result<(), LatticeError> {
        if t.field() != self.field {
            return Err(LatticeError::FieldMismatch(format!(
                "{t} in a table over D={}",
                self.field.disc()
            )));
        }
        t.scaled_det()?;
        self.entries.insert(t.key(), value);
        Ok(())
    }

    pub fn get(&self, t: &HermitianForm) -> Option<&CyclotomicNumber> {
        self.entries.get(&t.key())
    }

    pub fn iter(&self) -> impl Iterator<Item = (HermitianForm, &CyclotomicNumber)> {
        let f = self.field;
        self.entries.iter().map(move |(&(n, m, a, b), v)| {
            (
                HermitianForm {
                    n,
                    m,
                    s: f.elem(a, b),
                },
                v,
            )
        })
    }

    /// Distinct bottom-right entries, ascending.
    pub fn indices(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.entries.keys().map(|k| k.1).collect();
        v.dedup();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// a(F, g* T g) = det(g)^k a(F, T) applied to every entry.
    pub fn transform(&self, g: &Gl2) -> Result<Self, LatticeError> {
        let det = g.det();
        let j = self
            .field
            .unit_exponent(det)
            .ok_or_else(|| LatticeError::NotUnitDeterminant(det.to_string()))?;
        let w = self.field.unit_count() as u64;
        let factor = CyclotomicNumber::zeta_pow(j as i64 * self.weight, w).expect("valid order");
        let mut out = CoefficientTable::new(self.field, self.weight);
        for (t, v) in self.iter() {
            out.insert(gl2_conjugate(g, &t)?, &factor * v)?;
        }
        Ok(out)
    }

    /// Entries divisible by c, divided by c.
    pub fn divide_content(&self, c: i64) -> Self {
        let mut out = CoefficientTable::new(self.field, self.weight);
        for (t, v) in self.iter() {
            if let Some(u) = t.divide(c) {
                out.entries.insert(u.key(), v.clone());
            }
        }
        out
    }

    /// One JSON object per line: {"n", "m", "s", "value"}.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (t, v) in self.iter() {
            let line = TableLine {
                n: t.n,
                m: t.m,
                s: t.s,
                value: v.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("table line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, field: QuadField, weight: i64) -> Result<Self, LatticeError> {
        let mut table = CoefficientTable::new(field, weight);
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let l: TableLine = serde_json::from_str(line)
                .map_err(|e| LatticeError::Parse(format!("line {}: {e}", no + 1)))?;
            table.insert(HermitianForm::new(l.n, l.m, l.s)?, l.value)?;
        }
        Ok(table)
    }
}

/// Field of the first entry of a JSON-lines table, if any.
pub fn sniff_table_field(text: &str) -> Result<Option<QuadField>, LatticeError> {
    let Some(line) = text.lines().map(str::trim).find(|l| !l.is_empty()) else {
        return Ok(None);
    };
    let l: TableLine = serde_json::from_str(line).map_err(|e| LatticeError::Parse(e.to_string()))?;
    Ok(Some(l.s.field()))
}

/// The index-m Fourier-Jacobi slice: c(d, s) = a(F, (n, s, m)) with
/// d = |D| n m - N(s); the bound is the largest such d in the table.
pub fn fj_extract(table: &CoefficientTable, m: u64) -> Result<JacobiCoefficientSystem, LatticeError> {
    let slice: Vec<(HermitianForm, &CyclotomicNumber)> =
        table.iter().filter(|(t, _)| t.m == m as i64).collect();
    let mut bound = 0;
    for (t, _) in &slice {
        bound = bound.max(t.scaled_det()?);
    }
    let mut sys = JacobiCoefficientSystem::new(table.field(), table.weight(), m, bound)?;
    for (t, v) in slice {
        sys.set_consistent(t.scaled_det()?, t.s, v.clone())?;
    }
    Ok(sys)
}
