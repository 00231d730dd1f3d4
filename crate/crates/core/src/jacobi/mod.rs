//! Fourier coefficient systems of Hermitian Jacobi cusp forms.
//!
//! A coefficient c(n, s) depends only on the discriminant d = |D|nm - N(s)
//! and on s modulo sqrt(D) m, and c(d, eps s) = eps^-k c(d, s) for units eps.
//! Values are stored once per unit orbit of residues; the other members of
//! the orbit are recovered through that relation. A class whose residue is
//! fixed by a unit eps with eps^-k != 1 is identically zero.

mod maps;
mod ops;

pub use maps::{
    assemble, ez_map, is_spez, random_admissible, spez_system, theta_components,
    twisted_ez_map, ThetaComponent,
};
pub use ops::{apply_u_rho, apply_U_rho, apply_V_l, eta_project, psi_combination, w_mu};

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characters::CharError;
use crate::cyclotomic::CyclotomicNumber;
use crate::ring::{QuadField, RingElement, RingError, ResidueSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JacobiError {
    #[error("not cuspidal support (discriminant {0})")]
    NotCuspidal(i64),
    #[error("beyond precision: discriminant {d} exceeds the bound {bound}")]
    BeyondPrecision { d: u64, bound: u64 },
    #[error("discriminant {d} is not congruent to -N({s}) modulo {modulus}")]
    Support { d: u64, s: String, modulus: u64 },
    #[error("class ({d}, {s}) is forced to zero by the unit relation")]
    ForcedZero { d: u64, s: String },
    #[error("conflicting values for class ({d}, {s})")]
    Inconsistent { d: u64, s: String },
    #[error("systems are incompatible: {0}")]
    Mismatch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("bad system data: {0}")]
    Parse(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Character(#[from] CharError),
}

/// Unit-orbit structure of O / sqrt(D) m O.
#[derive(Debug)]
pub(crate) struct Orbits {
    residues: Arc<ResidueSystem>,
    /// Orbit representative (a residue index) of every residue.
    rep: Vec<usize>,
    /// j with residue = zeta^j * rep.
    shift: Vec<usize>,
    /// For representatives: the least j > 0 with zeta^j rep = rep.
    stab: Vec<usize>,
    reps: Vec<usize>,
}

fn orbit_cache() -> &'static Mutex<HashMap<(i64, u64), Arc<Orbits>>> {
    static CACHE: OnceLock<Mutex<HashMap<(i64, u64), Arc<Orbits>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn rep_key(e: &RingElement) -> (i64, i64, i64, bool, bool) {
    (e.norm(), e.b.abs(), e.a.abs(), e.b < 0, e.a < 0)
}

impl Orbits {
    pub(crate) fn get(field: QuadField, m: u64) -> Result<Arc<Orbits>, JacobiError> {
        let key = (field.disc(), m);
        if let Some(o) = orbit_cache().lock().unwrap().get(&key) {
            return Ok(o.clone());
        }
        let residues = ResidueSystem::new(field.sqrt_d().scale(m as i64))?;
        let units = field.units();
        let w = units.len();
        let len = residues.len();
        let mut rep = vec![usize::MAX; len];
        let mut shift = vec![0; len];
        let mut stab = vec![w; len];
        let mut reps = Vec::new();
        for i in 0..len {
            if rep[i] != usize::MAX {
                continue;
            }
            let x = residues.rep(i);
            let orbit: Vec<usize> = units.iter().map(|u| residues.index_of(*u * x)).collect();
            let r = *orbit
                .iter()
                .min_by_key(|&&t| rep_key(&residues.rep(t)))
                .unwrap();
            // shift of every member relative to r
            let j0 = orbit.iter().position(|&t| t == r).unwrap();
            for (j, &t) in orbit.iter().enumerate() {
                if rep[t] == usize::MAX {
                    rep[t] = r;
                    shift[t] = (j + w - j0) % w;
                }
            }
            stab[r] = (1..w).find(|&j| orbit[(j0 + j) % w] == r).unwrap_or(w);
            reps.push(r);
        }
        reps.sort_unstable();
        let o = Arc::new(Orbits {
            residues,
            rep,
            shift,
            stab,
            reps,
        });
        orbit_cache().lock().unwrap().insert(key, o.clone());
        Ok(o)
    }

    pub(crate) fn forced_zero(&self, rep: usize, k: i64) -> bool {
        let st = self.stab[rep] as i64;
        (st * k).rem_euclid(self.residues.field().unit_count() as i64) != 0
    }
}

/// eps^-k for eps = zeta^j.
fn unit_factor(field: QuadField, j: usize, k: i64) -> CyclotomicNumber {
    let w = field.unit_count() as u64;
    CyclotomicNumber::zeta_pow(-(j as i64) * k, w).expect("w is a valid order")
}

/// Coefficients c(d, s) of an index-m Hermitian Jacobi cusp form of weight k,
/// known for all discriminants 0 < d <= disc_bound.
#[derive(Debug, Clone)]
pub struct JacobiCoefficientSystem {
    field: QuadField,
    weight: i64,
    index: u64,
    disc_bound: u64,
    orbits: Arc<Orbits>,
    values: BTreeMap<(usize, u64), CyclotomicNumber>,
}

impl PartialEq for JacobiCoefficientSystem {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.weight == other.weight
            && self.index == other.index
            && self.disc_bound == other.disc_bound
            && self.values == other.values
    }
}

impl JacobiCoefficientSystem {
    pub fn new(field: QuadField, weight: i64, index: u64, disc_bound: u64) -> Result<Self, JacobiError> {
        if index == 0 {
            return Err(JacobiError::Precondition("index must be positive".into()));
        }
        Ok(JacobiCoefficientSystem {
            field,
            weight,
            index,
            disc_bound,
            orbits: Orbits::get(field, index)?,
            values: BTreeMap::new(),
        })
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn disc_bound(&self) -> u64 {
        self.disc_bound
    }

    /// |D| m, the modulus of the support congruence.
    pub fn level(&self) -> u64 {
        self.field.abs_disc() * self.index
    }

    pub fn residues(&self) -> &Arc<ResidueSystem> {
        &self.orbits.residues
    }

    /// Residue indices of the unit-orbit representatives.
    pub fn orbit_reps(&self) -> &[usize] {
        &self.orbits.reps
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of stored (nonzero) orbit classes.
    pub fn class_count(&self) -> usize {
        self.values.len()
    }

    /// True when residue s carries no cusp coefficients of this weight.
    pub fn is_forced_zero(&self, s: RingElement) -> bool {
        let i = self.orbits.residues.index_of(s);
        self.orbits.forced_zero(self.orbits.rep[i], self.weight)
    }

    pub fn in_support(&self, d: u64, s: RingElement) -> bool {
        let l = self.level() as i64;
        (d as i64 + s.norm()).rem_euclid(l) == 0
    }

    fn check_class(&self, d: u64, s: RingElement) -> Result<(), JacobiError> {
        if d == 0 {
            return Err(JacobiError::NotCuspidal(0));
        }
        if d > self.disc_bound {
            return Err(JacobiError::BeyondPrecision {
                d,
                bound: self.disc_bound,
            });
        }
        if !self.in_support(d, s) {
            return Err(JacobiError::Support {
                d,
                s: s.to_string(),
                modulus: self.level(),
            });
        }
        Ok(())
    }

    /// c(d, s); zero off the support congruence.
    pub fn value(&self, d: u64, s: RingElement) -> Result<CyclotomicNumber, JacobiError> {
        match self.check_class(d, s) {
            Err(JacobiError::Support { .. }) => return Ok(CyclotomicNumber::zero()),
            Err(e) => return Err(e),
            Ok(()) => {}
        }
        Ok(self.value_at_index(d, self.orbits.residues.index_of(s)))
    }

    /// c(d, s) for the residue with index i; the caller guarantees 0 < d <= bound.
    pub(crate) fn value_at_index(&self, d: u64, i: usize) -> CyclotomicNumber {
        let r = self.orbits.rep[i];
        match self.values.get(&(r, d)) {
            None => CyclotomicNumber::zero(),
            Some(v) => {
                let j = self.orbits.shift[i];
                if j == 0 {
                    v.clone()
                } else {
                    &unit_factor(self.field, j, self.weight) * v
                }
            }
        }
    }

    /// c(n, s) with the discriminant |D| n m - N(s).
    pub fn lookup(&self, n: i64, s: RingElement) -> Result<CyclotomicNumber, JacobiError> {
        let d = self.level() as i64 * n - s.norm();
        if d <= 0 {
            return Err(JacobiError::NotCuspidal(d));
        }
        self.value(d as u64, s)
    }

    /// Sets c(d, s), and with it the whole unit orbit of s.
    pub fn set(&mut self, d: u64, s: RingElement, value: CyclotomicNumber) -> Result<(), JacobiError> {
        self.check_class(d, s)?;
        let i = self.orbits.residues.index_of(s);
        let r = self.orbits.rep[i];
        if value.is_zero() {
            self.values.remove(&(r, d));
            return Ok(());
        }
        if self.orbits.forced_zero(r, self.weight) {
            return Err(JacobiError::ForcedZero {
                d,
                s: s.to_string(),
            });
        }
        let j = self.orbits.shift[i];
        let at_rep = if j == 0 {
            value
        } else {
            // c(rep) = eps^k c(eps rep)
            &unit_factor(self.field, j, -self.weight) * &value
        };
        self.values.insert((r, d), at_rep.canonicalize());
        Ok(())
    }

    /// Like `set`, but refuses to overwrite a different existing value.
    pub fn set_consistent(
        &mut self,
        d: u64,
        s: RingElement,
        value: CyclotomicNumber,
    ) -> Result<(), JacobiError> {
        self.check_class(d, s)?;
        let old = self.value(d, s)?;
        let fixed = self.is_forced_zero(s);
        if (fixed && !value.is_zero()) || (!old.is_zero() && old != value) {
            return Err(JacobiError::Inconsistent {
                d,
                s: s.to_string(),
            });
        }
        if !fixed {
            self.set(d, s, value)?;
        }
        Ok(())
    }

    /// Stored classes as (d, orbit representative, value), ordered by d then residue.
    pub fn classes(&self) -> Vec<(u64, RingElement, CyclotomicNumber)> {
        let mut out: Vec<_> = self
            .values
            .iter()
            .map(|(&(r, d), v)| (d, r, v.clone()))
            .collect();
        out.sort_by_key(|(d, r, _)| (*d, *r));
        out.into_iter()
            .map(|(d, r, v)| (d, self.orbits.residues.rep(r), v))
            .collect()
    }

    pub(crate) fn stored(&self) -> impl Iterator<Item = (usize, u64, &CyclotomicNumber)> {
        self.values.iter().map(|(&(r, d), v)| (r, d, v))
    }

    /// Discriminants 0 < d <= bound allowed for the residue with index i.
    pub(crate) fn discs_for(&self, i: usize) -> impl Iterator<Item = u64> {
        let l = self.level();
        let n = self.orbits.residues.rep(i).norm().rem_euclid(l as i64) as u64;
        let first = if n == 0 { l } else { l - n };
        (first..=self.disc_bound).step_by(l as usize)
    }

    pub(crate) fn orbits(&self) -> &Arc<Orbits> {
        &self.orbits
    }

    pub(crate) fn insert_rep(&mut self, r: usize, d: u64, v: CyclotomicNumber) {
        if !v.is_zero() {
            self.values.insert((r, d), v.canonicalize());
        }
    }

    pub(crate) fn rep_of(&self, i: usize) -> usize {
        self.orbits.rep[i]
    }

    pub fn empty_like(&self) -> Self {
        let mut out = self.clone();
        out.values.clear();
        out
    }

    /// Drops classes beyond a smaller bound.
    pub fn truncate(&self, bound: u64) -> Self {
        let bound = bound.min(self.disc_bound);
        let mut out = self.clone();
        out.disc_bound = bound;
        out.values.retain(|&(_, d), _| d <= bound);
        out
    }

    fn check_same_space(&self, other: &Self) -> Result<(), JacobiError> {
        if self.field != other.field || self.weight != other.weight || self.index != other.index {
            return Err(JacobiError::Mismatch(format!(
                "(D={}, k={}, m={}) vs (D={}, k={}, m={})",
                self.field.disc(),
                self.weight,
                self.index,
                other.field.disc(),
                other.weight,
                other.index
            )));
        }
        Ok(())
    }

    /// Sum on the common precision window.
    pub fn try_add(&self, other: &Self) -> Result<Self, JacobiError> {
        self.check_same_space(other)?;
        let bound = self.disc_bound.min(other.disc_bound);
        let mut out = self.truncate(bound);
        for (r, d, v) in other.stored() {
            if d > bound {
                continue;
            }
            let sum = match out.values.get(&(r, d)) {
                Some(x) => x + v,
                None => v.clone(),
            };
            if sum.is_zero() {
                out.values.remove(&(r, d));
            } else {
                out.values.insert((r, d), sum.canonicalize());
            }
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, JacobiError> {
        self.try_add(&other.scale(&CyclotomicNumber::from_integer(-1)))
    }

    pub fn scale(&self, c: &CyclotomicNumber) -> Self {
        let mut out = self.empty_like();
        for (r, d, v) in self.stored() {
            out.insert_rep(r, d, v * c);
        }
        out
    }

    pub fn with_disc_bound(mut self, bound: u64) -> Self {
        if bound < self.disc_bound {
            return self.truncate(bound);
        }
        self.disc_bound = bound;
        self
    }

    /// Checks the support, unit and precision invariants of every stored class.
    pub fn check_invariants(&self) -> Result<(), JacobiError> {
        for (r, d, _) in self.stored() {
            let s = self.orbits.residues.rep(r);
            self.check_class(d, s)?;
            if self.orbits.rep[r] != r {
                return Err(JacobiError::Parse(format!("{s} is not an orbit representative")));
            }
            if self.orbits.forced_zero(r, self.weight) {
                return Err(JacobiError::ForcedZero {
                    d,
                    s: s.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SystemFile::from(self)).expect("system serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, JacobiError> {
        let f: SystemFile = serde_json::from_str(s).map_err(|e| JacobiError::Parse(e.to_string()))?;
        let field = QuadField::new(f.d)?;
        let mut sys = JacobiCoefficientSystem::new(field, f.k, f.m, f.disc_bound)?;
        for e in f.entries {
            if e.s.field() != field {
                return Err(JacobiError::Parse(format!("{} is not in the field {}", e.s, f.d)));
            }
            sys.set_consistent(e.d, e.s, e.value)?;
        }
        Ok(sys)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    #[serde(rename = "D")]
    d: i64,
    k: i64,
    m: u64,
    disc_bound: u64,
    entries: Vec<SystemEntry>,
}

#[derive(Serialize, Deserialize)]
struct SystemEntry {
    d: u64,
    s: RingElement,
    value: CyclotomicNumber,
}

impl From<&JacobiCoefficientSystem> for SystemFile {
    fn from(sys: &JacobiCoefficientSystem) -> Self {
        SystemFile {
            d: sys.field.disc(),
            k: sys.weight,
            m: sys.index,
            disc_bound: sys.disc_bound,
            entries: sys
                .classes()
                .into_iter()
                .map(|(d, s, value)| SystemEntry { d, s, value })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> QuadField {
        QuadField::new(-4).unwrap()
    }

    #[test]
    fn lookup_examples() {
        let k = gauss();
        let mut sys = JacobiCoefficientSystem::new(k, 8, 1, 20).unwrap();
        sys.set(3, k.one(), CyclotomicNumber::from_integer(7)).unwrap();
        assert_eq!(sys.lookup(1, k.one()).unwrap(), CyclotomicNumber::from_integer(7));
        assert_eq!(sys.lookup(1, k.omega()).unwrap(), CyclotomicNumber::from_integer(7));
        assert!(matches!(sys.lookup(6, k.one()), Err(JacobiError::BeyondPrecision { .. })));
        assert!(matches!(sys.lookup(0, k.one()), Err(JacobiError::NotCuspidal(_))));
        let mut odd = JacobiCoefficientSystem::new(k, 6, 1, 20).unwrap();
        odd.set(3, k.one(), CyclotomicNumber::from_integer(7)).unwrap();
        assert_eq!(odd.lookup(1, k.omega()).unwrap(), CyclotomicNumber::from_integer(-7));
        // -1 = 1 mod 2, so lookups at -1 agree with 1
        assert_eq!(odd.lookup(1, k.int(-1)).unwrap(), CyclotomicNumber::from_integer(7));
    }

    #[test]
    fn unit_relation_holds_for_every_unit() {
        for f in QuadField::all() {
            for k in 0..13 {
                for m in 1..=3 {
                    let mut sys = JacobiCoefficientSystem::new(f, k, m, 60).unwrap();
                    let res = sys.residues().clone();
                    for (t, s) in res.reps().iter().enumerate() {
                        let d = sys.discs_for(t).next();
                        let Some(d) = d else { continue };
                        if sys.is_forced_zero(*s) {
                            assert!(sys.set(d, *s, CyclotomicNumber::one()).is_err());
                            continue;
                        }
                        sys.set(d, *s, CyclotomicNumber::from_integer(t as i64 + 1)).unwrap();
                        let base = sys.value(d, *s).unwrap();
                        for (j, e) in f.units().into_iter().enumerate() {
                            let got = sys.value(d, e * *s).unwrap();
                            assert_eq!(got, &unit_factor(f, j, k) * &base, "D={} k={k} s={s}", f.disc());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn forced_zero_examples() {
        let k = gauss();
        let sys = JacobiCoefficientSystem::new(k, 6, 1, 10).unwrap();
        // 1+i is fixed by i modulo 2 and i^-6 = -1
        assert!(sys.is_forced_zero(k.elem(1, 1)));
        assert!(sys.is_forced_zero(k.zero()));
        assert!(!sys.is_forced_zero(k.one()));
        let sys4 = JacobiCoefficientSystem::new(k, 4, 1, 10).unwrap();
        assert!(!sys4.is_forced_zero(k.elem(1, 1)));
        let sys_odd = JacobiCoefficientSystem::new(k, 5, 1, 10).unwrap();
        assert!(sys_odd.is_forced_zero(k.one()));
    }

    #[test]
    fn set_rejects_bad_classes() {
        let k = gauss();
        let mut sys = JacobiCoefficientSystem::new(k, 8, 1, 10).unwrap();
        assert!(matches!(
            sys.set(2, k.one(), CyclotomicNumber::one()),
            Err(JacobiError::Support { .. })
        ));
        assert!(matches!(
            sys.set(0, k.zero(), CyclotomicNumber::one()),
            Err(JacobiError::NotCuspidal(_))
        ));
        assert!(matches!(
            sys.set(11, k.one(), CyclotomicNumber::one()),
            Err(JacobiError::BeyondPrecision { .. })
        ));
        sys.set(3, k.one(), CyclotomicNumber::one()).unwrap();
        assert!(sys.set_consistent(3, k.omega(), CyclotomicNumber::from_integer(2)).is_err());
        assert!(sys.set_consistent(3, k.omega(), CyclotomicNumber::one()).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let f = QuadField::new(-7).unwrap();
        let sys = random_admissible(f, 4, 2, 40, 11).unwrap();
        let back = JacobiCoefficientSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back, sys);
        assert!(JacobiCoefficientSystem::from_json("{}").is_err());
    }

    #[test]
    fn linear_structure() {
        let f = QuadField::new(-3).unwrap();
        let a = random_admissible(f, 6, 2, 30, 1).unwrap();
        let b = random_admissible(f, 6, 2, 20, 2).unwrap();
        let s = a.try_add(&b).unwrap();
        assert_eq!(s.disc_bound(), 20);
        let back = s.try_sub(&b).unwrap();
        assert_eq!(back, a.truncate(20));
        assert!(a.try_sub(&a).unwrap().is_zero());
        let c = random_admissible(f, 6, 3, 20, 2).unwrap();
        assert!(a.try_add(&c).is_err());
    }
}
