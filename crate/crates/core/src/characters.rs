//! Unit groups of O / sqrt(D) m O, the norm-one subgroup G, characters of G
//! with prescribed values on the global units, their extensions, and
//! Dirichlet characters.
//!
//! Groups are small (|D| m is capped), so the structure is found by brute
//! force: generators are picked greedily, first inside G and then in the
//! full group, giving a polycyclic normal form for every element. A
//! character is an exponent vector on those generators with values
//! zeta_E^a, where E is the lcm of the group exponent and w.

use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::cyclotomic::CyclotomicNumber;
use crate::ring::{self, QuadField, RingElement, ResidueSystem};

pub const DEFAULT_GROUP_CAP: u64 = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharError {
    #[error("index m must be at least 1")]
    InvalidIndex,
    #[error("|D|m = {0} exceeds the group cap {1}")]
    CapExceeded(u64, u64),
    #[error("{0} is not in the group")]
    NotInGroup(String),
    #[error("character belongs to a different group (D={0}, m={1})")]
    GroupMismatch(i64, u64),
    #[error("bad character data: {0}")]
    Parse(String),
    #[error(transparent)]
    Ring(#[from] ring::RingError),
}

/// (O / sqrt(D) m O)^x with a generator decomposition.
#[derive(Debug)]
pub struct ResidueUnitGroup {
    field: QuadField,
    m: u64,
    residues: Arc<ResidueSystem>,
    elements: Vec<usize>,
    position: Vec<Option<usize>>,
    in_g: Vec<bool>,
    gens: Vec<usize>,
    rel_orders: Vec<u64>,
    relations: Vec<Vec<u32>>,
    normal_form: Vec<Vec<u32>>,
    g_rank: usize,
    g_size: usize,
    exponent: u64,
}

pub fn unit_group(field: QuadField, m: u64) -> Result<Arc<ResidueUnitGroup>, CharError> {
    unit_group_capped(field, m, DEFAULT_GROUP_CAP)
}

pub fn unit_group_capped(
    field: QuadField,
    m: u64,
    cap: u64,
) -> Result<Arc<ResidueUnitGroup>, CharError> {
    if m == 0 {
        return Err(CharError::InvalidIndex);
    }
    let dm = field.abs_disc() * m;
    if dm > cap {
        return Err(CharError::CapExceeded(dm, cap));
    }
    Ok(Arc::new(ResidueUnitGroup::build(field, m)?))
}

impl ResidueUnitGroup {
    fn build(field: QuadField, m: u64) -> Result<Self, CharError> {
        let modulus = field.sqrt_d().scale(m as i64);
        let residues = ResidueSystem::new(modulus)?;
        let primes = ring::factor_element(modulus)?;
        let dm = (field.abs_disc() * m) as i64;
        let mut elements = Vec::new();
        let mut position = vec![None; residues.len()];
        let mut in_g = Vec::new();
        for (i, r) in residues.reps().iter().enumerate() {
            if primes.iter().all(|pf| !pf.prime.divides(r)) {
                position[i] = Some(elements.len());
                elements.push(i);
                in_g.push(r.norm().rem_euclid(dm) == 1 % dm);
            }
        }
        let g_size = in_g.iter().filter(|&&b| b).count();
        let mut grp = ResidueUnitGroup {
            field,
            m,
            residues,
            elements,
            position,
            in_g,
            gens: Vec::new(),
            rel_orders: Vec::new(),
            relations: Vec::new(),
            normal_form: Vec::new(),
            g_rank: 0,
            g_size,
            exponent: 1,
        };
        grp.decompose();
        Ok(grp)
    }

    fn mul_pos(&self, x: usize, y: usize) -> usize {
        let p = self.rep(x) * self.rep(y);
        self.position[self.residues.index_of(p)].expect("units are closed under products")
    }

    fn decompose(&mut self) {
        let n = self.elements.len();
        let one = self.position[self.residues.index_of(self.field.one())].unwrap();
        let mut nf: Vec<Option<Vec<u32>>> = vec![None; n];
        nf[one] = Some(Vec::new());
        let mut span = vec![one];
        let order: Vec<usize> = (0..n)
            .filter(|&i| self.in_g[i])
            .chain((0..n).filter(|&i| !self.in_g[i]))
            .collect();
        for x in order {
            if nf[x].is_some() {
                continue;
            }
            let mut y = x;
            let mut t = 1u64;
            while nf[y].is_none() {
                y = self.mul_pos(y, x);
                t += 1;
            }
            let j = self.gens.len();
            self.relations.push(nf[y].clone().unwrap());
            self.rel_orders.push(t);
            self.gens.push(x);
            let mut new_span = span.clone();
            for &s in &span {
                let mut cur = s;
                for e in 1..t {
                    cur = self.mul_pos(cur, x);
                    let mut v = nf[s].clone().unwrap();
                    v.resize(j, 0);
                    v.push(e as u32);
                    nf[cur] = Some(v);
                    new_span.push(cur);
                }
            }
            span = new_span;
            if span.len() == self.g_size {
                self.g_rank = self.gens.len();
            }
        }
        let r = self.gens.len();
        self.normal_form = nf
            .into_iter()
            .map(|v| {
                let mut v = v.expect("every unit reached");
                v.resize(r, 0);
                v
            })
            .collect();
        let mut e = self.field.unit_count() as u64;
        for i in 0..n {
            e = e.lcm(&self.element_order(i));
        }
        self.exponent = e;
    }

    fn element_order(&self, x: usize) -> u64 {
        let one = self.identity_pos();
        let mut y = x;
        let mut t = 1;
        while y != one {
            y = self.mul_pos(y, x);
            t += 1;
        }
        t
    }

    fn identity_pos(&self) -> usize {
        self.position[self.residues.index_of(self.field.one())].unwrap()
    }

    pub fn field(&self) -> QuadField {
        self.field
    }

    pub fn index(&self) -> u64 {
        self.m
    }

    pub fn modulus(&self) -> RingElement {
        self.residues.modulus()
    }

    pub fn residues(&self) -> &Arc<ResidueSystem> {
        &self.residues
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Canonical representatives of the units, in canonical residue order.
    pub fn elements(&self) -> Vec<RingElement> {
        self.elements.iter().map(|&i| self.residues.rep(i)).collect()
    }

    pub fn rep(&self, pos: usize) -> RingElement {
        self.residues.rep(self.elements[pos])
    }

    /// Position of x in `elements()`, if x is a unit modulo sqrt(D) m.
    pub fn position_of(&self, x: RingElement) -> Option<usize> {
        self.position[self.residues.index_of(x)]
    }

    pub fn generators(&self) -> Vec<RingElement> {
        self.gens.iter().map(|&g| self.rep(g)).collect()
    }

    /// Relative orders of the generators in the polycyclic series.
    pub fn generator_orders(&self) -> &[u64] {
        &self.rel_orders
    }

    /// lcm of the group exponent and w; all character values are E-th roots of unity.
    pub fn value_order(&self) -> u64 {
        self.exponent
    }

    pub fn in_g(&self, pos: usize) -> bool {
        self.in_g[pos]
    }

    pub fn g_order(&self) -> usize {
        self.g_size
    }

    /// [G~ : G].
    pub fn g_index(&self) -> usize {
        self.order() / self.g_size
    }

    fn exponent_at(&self, exps: &[u64], pos: usize) -> u64 {
        let e = self.exponent;
        let nf = &self.normal_form[pos];
        let mut acc = 0u64;
        for (a, &k) in exps.iter().zip(nf) {
            acc = (acc + a * k as u64) % e;
        }
        acc
    }

    /// All exponent vectors extending `prefix` (on generators < from) to generators < to.
    fn extend(&self, prefix: Vec<u64>, from: usize, to: usize) -> Vec<Vec<u64>> {
        let e = self.exponent;
        let mut partial = vec![prefix];
        for j in from..to {
            let t = self.rel_orders[j];
            let rel = &self.relations[j];
            let mut next = Vec::new();
            for a in partial {
                let b = rel
                    .iter()
                    .zip(&a)
                    .fold(0u64, |acc, (&c, &x)| (acc + c as u64 * x) % e);
                assert!(b % t == 0, "character extension must exist");
                for u in 0..t {
                    let mut v = a.clone();
                    v.push((b / t + u * (e / t)) % e);
                    next.push(v);
                }
            }
            partial = next;
        }
        partial
    }
}

/// The subgroup G = {mu : N(mu) = 1 mod |D|m}.
#[derive(Debug, Clone)]
pub struct GSubgroup {
    parent: Arc<ResidueUnitGroup>,
}

pub fn build_g(parent: &Arc<ResidueUnitGroup>) -> GSubgroup {
    GSubgroup {
        parent: parent.clone(),
    }
}

impl GSubgroup {
    pub fn parent(&self) -> &Arc<ResidueUnitGroup> {
        &self.parent
    }

    pub fn order(&self) -> usize {
        self.parent.g_size
    }

    pub fn elements(&self) -> Vec<RingElement> {
        (0..self.parent.order())
            .filter(|&p| self.parent.in_g[p])
            .map(|p| self.parent.rep(p))
            .collect()
    }

    pub fn contains(&self, x: RingElement) -> bool {
        self.parent
            .position_of(x)
            .map(|p| self.parent.in_g[p])
            .unwrap_or(false)
    }
}

/// A character of G, stored as exponents on the generators of G.
#[derive(Debug, Clone)]
pub struct GCharacter {
    group: Arc<ResidueUnitGroup>,
    weight: i64,
    exps: Vec<u64>,
}

/// A character of the full unit group; its first generators span G.
#[derive(Debug, Clone)]
pub struct ExtendedCharacter {
    group: Arc<ResidueUnitGroup>,
    weight: i64,
    exps: Vec<u64>,
}

/// Characters of G with eta(eps) = eps^{-k} on the image of the global units.
pub fn g_characters(g: &GSubgroup, k: i64) -> Vec<GCharacter> {
    let grp = &g.parent;
    let e = grp.exponent;
    let w = grp.field.unit_count() as i64;
    let units: Vec<(usize, u64)> = grp
        .field
        .units()
        .into_iter()
        .enumerate()
        .map(|(j, u)| {
            let pos = grp.position_of(u).expect("global units are residue units");
            let target = (-(j as i64) * k).rem_euclid(w) as u64 * (e / w as u64);
            (pos, target % e)
        })
        .collect();
    grp.extend(Vec::new(), 0, grp.g_rank)
        .into_iter()
        .filter(|a| units.iter().all(|&(p, t)| grp.exponent_at(a, p) == t))
        .map(|exps| GCharacter {
            group: grp.clone(),
            weight: k,
            exps,
        })
        .collect()
}

/// All [G~:G] extensions of eta to the full unit group.
pub fn extensions_of(eta: &GCharacter) -> Vec<ExtendedCharacter> {
    let grp = &eta.group;
    grp.extend(eta.exps.clone(), grp.g_rank, grp.gens.len())
        .into_iter()
        .map(|exps| ExtendedCharacter {
            group: grp.clone(),
            weight: eta.weight,
            exps,
        })
        .collect()
}

impl GCharacter {
    pub fn group(&self) -> &Arc<ResidueUnitGroup> {
        &self.group
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&a| a == 0)
    }

    /// eta(x) as an exponent of zeta_E, or None off G.
    pub fn exponent(&self, x: RingElement) -> Option<u64> {
        let pos = self.group.position_of(x)?;
        if !self.group.in_g[pos] {
            return None;
        }
        Some(self.group.exponent_at(&self.exps, pos))
    }

    pub fn value(&self, x: RingElement) -> Option<CyclotomicNumber> {
        let a = self.exponent(x)?;
        Some(CyclotomicNumber::zeta_pow(a as i64, self.group.exponent).unwrap())
    }
}

impl ExtendedCharacter {
    pub fn group(&self) -> &Arc<ResidueUnitGroup> {
        &self.group
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn base(&self) -> GCharacter {
        GCharacter {
            group: self.group.clone(),
            weight: self.weight,
            exps: self.exps[..self.group.g_rank].to_vec(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&a| a == 0)
    }

    pub fn exponent(&self, x: RingElement) -> Option<u64> {
        let pos = self.group.position_of(x)?;
        Some(self.group.exponent_at(&self.exps, pos))
    }

    pub fn value(&self, x: RingElement) -> Option<CyclotomicNumber> {
        let a = self.exponent(x)?;
        Some(CyclotomicNumber::zeta_pow(a as i64, self.group.exponent).unwrap())
    }

    pub fn to_json(&self) -> String {
        let data = CharacterData {
            d: self.group.field.disc(),
            m: self.group.m,
            k: self.weight,
            order: self.group.exponent,
            generators: self.group.generators(),
            exponents: self.exps.clone(),
        };
        serde_json::to_string(&data).expect("character data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CharError> {
        let data: CharacterData =
            serde_json::from_str(s).map_err(|e| CharError::Parse(e.to_string()))?;
        let field = QuadField::new(data.d)?;
        let group = unit_group_capped(field, data.m, u64::MAX)?;
        if group.generators() != data.generators
            || group.exponent != data.order
            || data.exponents.len() != group.gens.len()
        {
            return Err(CharError::Parse("generator data does not match the group".into()));
        }
        let ch = ExtendedCharacter {
            group,
            weight: data.k,
            exps: data.exponents,
        };
        let consistent = (0..ch.group.gens.len()).all(|j| {
            let t = ch.group.rel_orders[j];
            let b = ch.group.relations[j]
                .iter()
                .zip(&ch.exps)
                .fold(0u64, |acc, (&c, &x)| (acc + c as u64 * x) % ch.group.exponent);
            (t * ch.exps[j]) % ch.group.exponent == b
        });
        if !consistent {
            return Err(CharError::Parse("exponents violate the group relations".into()));
        }
        Ok(ch)
    }
}

impl PartialEq for ExtendedCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.group.field == other.group.field
            && self.group.m == other.group.m
            && self.weight == other.weight
            && self.exps == other.exps
    }
}

#[derive(Serialize, Deserialize)]
struct CharacterData {
    #[serde(rename = "D")]
    d: i64,
    m: u64,
    k: i64,
    order: u64,
    generators: Vec<RingElement>,
    exponents: Vec<u64>,
}

/// A Dirichlet character mod q as an exponent table: chi(n) = zeta_order^e[n],
/// `None` off the units. The order is kept minimal so equal characters compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u64,
    exponents: Vec<Option<u64>>,
}

impl DirichletCharacter {
    pub fn new(modulus: u64, order: u64, exponents: Vec<Option<u64>>) -> Result<Self, CharError> {
        if modulus == 0 || order == 0 || exponents.len() != modulus as usize {
            return Err(CharError::Parse("modulus, order and table length disagree".into()));
        }
        for (n, e) in exponents.iter().enumerate() {
            let unit = (n as u64).gcd(&modulus) == 1;
            if unit != e.is_some() {
                return Err(CharError::Parse(format!("entry {n} has the wrong support")));
            }
        }
        let ch = DirichletCharacter {
            modulus,
            order,
            exponents: exponents.into_iter().map(|e| e.map(|a| a % order)).collect(),
        };
        if !ch.is_multiplicative() {
            return Err(CharError::Parse("table is not multiplicative".into()));
        }
        Ok(ch.normalized())
    }

    fn normalized(mut self) -> Self {
        let g = self
            .exponents
            .iter()
            .flatten()
            .fold(self.order, |g, &a| g.gcd(&a));
        if g > 1 {
            self.order /= g;
            for a in self.exponents.iter_mut().flatten() {
                *a /= g;
            }
        }
        self
    }

    fn is_multiplicative(&self) -> bool {
        let q = self.modulus as usize;
        (0..q).all(|a| {
            (0..q).all(|b| match (self.exponents[a], self.exponents[b]) {
                (Some(x), Some(y)) => self.exponents[a * b % q] == Some((x + y) % self.order),
                _ => true,
            })
        })
    }

    pub fn principal(modulus: u64) -> Self {
        let q = modulus.max(1);
        DirichletCharacter {
            modulus: q,
            order: 1,
            exponents: (0..q)
                .map(|n| if n.gcd(&q) == 1 { Some(0) } else { None })
                .collect(),
        }
    }

    /// chi_D = (D/.) as a character mod |D|.
    pub fn kronecker(field: QuadField) -> Self {
        let q = field.abs_disc();
        let exponents = (0..q)
            .map(|n| match ring::chi_d(n as i64, field) {
                1 => Some(0),
                -1 => Some(1),
                _ => None,
            })
            .collect();
        DirichletCharacter {
            modulus: q,
            order: 2,
            exponents,
        }
    }

    /// Real character n -> (a/n) restricted to n coprime to q.
    pub fn kronecker_symbol(a: i64, q: u64) -> Result<Self, CharError> {
        let q = q.max(1);
        let exponents = (0..q)
            .map(|n| {
                if n.gcd(&q) != 1 {
                    return Ok(None);
                }
                match arith::kronecker(a, n as i64) {
                    1 => Ok(Some(0)),
                    -1 => Ok(Some(1)),
                    _ => Err(CharError::Parse(format!("({a}/{n}) vanishes on a unit mod {q}"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(q, 2, exponents)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponent(&self, n: i64) -> Option<u64> {
        self.exponents[n.rem_euclid(self.modulus as i64) as usize]
    }

    /// chi(n), zero off the units.
    pub fn value(&self, n: i64) -> CyclotomicNumber {
        match self.exponent(n) {
            Some(a) => CyclotomicNumber::zeta_pow(a as i64, self.order).unwrap(),
            None => CyclotomicNumber::zero(),
        }
    }

    pub fn is_principal(&self) -> bool {
        self.order == 1
    }

    pub fn conj(&self) -> Self {
        DirichletCharacter {
            modulus: self.modulus,
            order: self.order,
            exponents: self
                .exponents
                .iter()
                .map(|e| e.map(|a| (self.order - a) % self.order))
                .collect(),
        }
    }

    /// The same character viewed modulo a multiple of its modulus.
    pub fn lift(&self, modulus: u64) -> Self {
        assert!(modulus % self.modulus == 0, "lift needs a multiple of the modulus");
        DirichletCharacter {
            modulus,
            order: self.order,
            exponents: (0..modulus)
                .map(|n| {
                    if n.gcd(&modulus) == 1 {
                        self.exponents[(n % self.modulus) as usize]
                    } else {
                        None
                    }
                })
                .collect(),
        }
    }

    /// Smallest d | q with chi(n) = 1 whenever n = 1 mod d.
    pub fn conductor(&self) -> u64 {
        let q = self.modulus;
        for d in arith::divisors(q) {
            let ok = (0..q).all(|n| {
                n % d != 1 % d || self.exponents[n as usize].map_or(true, |a| a == 0)
            });
            if ok {
                return d;
            }
        }
        q
    }

    /// Compact text id: `q:order:e0,e1,...` with `-` off the units.
    pub fn id(&self) -> String {
        let body: Vec<String> = self
            .exponents
            .iter()
            .map(|e| e.map_or("-".to_string(), |a| a.to_string()))
            .collect();
        format!("{}:{}:{}", self.modulus, self.order, body.join(","))
    }

    pub fn from_id(s: &str) -> Result<Self, CharError> {
        let bad = || CharError::Parse(format!("bad character id {s:?}"));
        let mut it = s.splitn(3, ':');
        let q: u64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let order: u64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let exps = it
            .next()
            .ok_or_else(bad)?
            .split(',')
            .map(|t| if t == "-" { Ok(None) } else { t.parse().map(Some).map_err(|_| bad()) })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(q, order, exps)
    }
}

/// Pointwise product, on the lcm of the moduli.
pub fn dirichlet_product(a: &DirichletCharacter, b: &DirichletCharacter) -> DirichletCharacter {
    let q = arith::lcm_u64(a.modulus, b.modulus);
    let e = arith::lcm_u64(a.order, b.order);
    let exponents = (0..q)
        .map(|n| {
            if n.gcd(&q) != 1 {
                return None;
            }
            let x = a.exponents[(n % a.modulus) as usize]?;
            let y = b.exponents[(n % b.modulus) as usize]?;
            Some((x * (e / a.order) + y * (e / b.order)) % e)
        })
        .collect();
    DirichletCharacter {
        modulus: q,
        order: e,
        exponents,
    }
    .normalized()
}

/// n -> eta~(n mod sqrt(D) m), a character mod |D| m.
pub fn restrict_to_dirichlet(eta: &ExtendedCharacter) -> DirichletCharacter {
    let grp = &eta.group;
    let q = grp.field.abs_disc() * grp.m;
    let exponents = (0..q)
        .map(|n| {
            if n.gcd(&q) != 1 {
                return None;
            }
            let x = grp.field.int(n as i64);
            Some(eta.exponent(x).expect("integers prime to |D|m are residue units"))
        })
        .collect();
    DirichletCharacter {
        modulus: q,
        order: grp.exponent,
        exponents,
    }
    .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> QuadField {
        QuadField::new(-4).unwrap()
    }

    #[test]
    fn unit_group_examples() {
        let k = gauss();
        let g = unit_group(k, 1).unwrap();
        assert_eq!(g.elements(), vec![k.omega(), k.one()]);
        let e = QuadField::new(-3).unwrap();
        assert_eq!(unit_group(e, 1).unwrap().order(), 2);
        assert_eq!(unit_group(k, 0).unwrap_err(), CharError::InvalidIndex);
        assert!(matches!(unit_group(k, 51), Err(CharError::CapExceeded(204, 200))));
    }

    #[test]
    fn unit_group_is_closed_and_decomposed() {
        for f in QuadField::all() {
            for m in 1..=(40 / f.abs_disc()).max(1) {
                let g = unit_group(f, m).unwrap();
                let elems = g.elements();
                let rs = g.residues();
                let brute = rs
                    .reps()
                    .iter()
                    .filter(|r| ring::ideal_coprime(g.modulus(), **r).unwrap())
                    .count();
                assert_eq!(brute, g.order());
                for x in &elems {
                    for y in &elems {
                        assert!(g.position_of(*x * *y).is_some());
                    }
                }
                let prod: u64 = g.generator_orders().iter().product();
                assert_eq!(prod as usize, g.order());
            }
        }
    }

    #[test]
    fn g_examples() {
        let k = gauss();
        let g1 = build_g(&unit_group(k, 1).unwrap());
        assert_eq!(g1.elements(), vec![k.omega(), k.one()]);
        let g2 = build_g(&unit_group(k, 2).unwrap());
        for x in g2.elements() {
            assert_eq!(x.norm() % 8, 1);
        }
        assert_eq!(g2.parent().order(), 8);
        for f in QuadField::all() {
            let g = build_g(&unit_group(f, 1).unwrap());
            assert!(g.contains(f.one()));
            for u in f.units() {
                assert!(g.contains(u));
            }
        }
    }

    #[test]
    fn g_character_examples() {
        let k = gauss();
        let g = build_g(&unit_group(k, 1).unwrap());
        // i = -i mod 2, so G has order 2 and eta(i) = i^{-k} = (-1)^{k/2} pins eta.
        assert_eq!(g_characters(&g, 4).len(), 1);
        assert!(g_characters(&g, 4)[0].is_trivial());
        assert_eq!(g_characters(&g, 6).len(), 1);
        assert!(!g_characters(&g, 6)[0].is_trivial());
        assert!(g_characters(&g, 3).is_empty());
        assert!(g_characters(&g, 5).is_empty());
        for f in QuadField::all() {
            let w = f.unit_count() as i64;
            let g = build_g(&unit_group(f, 1).unwrap());
            assert!(g_characters(&g, 2 * w).iter().any(|c| c.is_trivial()));
        }
    }

    #[test]
    fn extension_counts_and_restrictions() {
        let k = gauss();
        let g1 = build_g(&unit_group(k, 1).unwrap());
        let eta = &g_characters(&g1, 4)[0];
        assert_eq!(extensions_of(eta).len(), 1);
        let grp = unit_group(k, 3).unwrap();
        let g3 = build_g(&grp);
        for eta in g_characters(&g3, 4) {
            let ext = extensions_of(&eta);
            assert_eq!(ext.len(), grp.g_index());
            for x in g3.elements() {
                for e in &ext {
                    assert_eq!(e.value(x), eta.value(x));
                }
            }
        }
    }

    #[test]
    fn characters_are_multiplicative() {
        for (d, m, k) in [(-4, 5, 8), (-3, 4, 6), (-7, 3, 2), (-8, 3, 4), (-4, 3, 5)] {
            let f = QuadField::new(d).unwrap();
            let grp = unit_group(f, m).unwrap();
            let g = build_g(&grp);
            let elems = grp.elements();
            for eta in g_characters(&g, k) {
                for ext in extensions_of(&eta) {
                    for x in &elems {
                        for y in &elems {
                            let lhs = ext.value(*x * *y).unwrap();
                            let rhs = &ext.value(*x).unwrap() * &ext.value(*y).unwrap();
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn quotient_orthogonality() {
        for f in QuadField::all() {
            for m in 1..=(40 / f.abs_disc()) {
                let grp = unit_group(f, m).unwrap();
                let g = build_g(&grp);
                let trivial = g_characters(&g, 0)
                    .into_iter()
                    .find(|c| c.is_trivial())
                    .expect("trivial character for k = 0");
                let lambdas = extensions_of(&trivial);
                let idx = grp.g_index() as i64;
                for (pos, x) in grp.elements().into_iter().enumerate() {
                    let mut s = CyclotomicNumber::zero();
                    for l in &lambdas {
                        s += &l.value(x).unwrap();
                    }
                    let expect = if grp.in_g(pos) { idx } else { 0 };
                    assert_eq!(s, CyclotomicNumber::from_integer(expect), "D={} m={m} x={x}", f.disc());
                }
            }
        }
    }

    #[test]
    fn extension_sum_identity() {
        for (d, m, k) in [(-4, 5, 4), (-4, 3, 2), (-3, 4, 6), (-8, 3, 4), (-7, 4, 2)] {
            let f = QuadField::new(d).unwrap();
            let grp = unit_group(f, m).unwrap();
            let g = build_g(&grp);
            for eta in g_characters(&g, k) {
                let ext = extensions_of(&eta);
                let e0 = &ext[0];
                for (pos, x) in grp.elements().into_iter().enumerate() {
                    let mut s = CyclotomicNumber::zero();
                    for e in &ext {
                        s += &e.value(x).unwrap();
                    }
                    let expect = if grp.in_g(pos) {
                        e0.value(x).unwrap().scale_int(&(grp.g_index() as i64).into())
                    } else {
                        CyclotomicNumber::zero()
                    };
                    assert_eq!(s, expect);
                }
            }
        }
    }

    #[test]
    fn dirichlet_restriction() {
        let k = gauss();
        let grp = unit_group(k, 5).unwrap();
        let g = build_g(&grp);
        let triv = g_characters(&g, 4).into_iter().find(|c| c.is_trivial()).unwrap();
        let ext = extensions_of(&triv);
        let t = ext.iter().find(|e| e.is_trivial()).unwrap();
        let chi = restrict_to_dirichlet(t);
        assert!(chi.is_principal());
        assert_eq!(chi.conductor(), 1);
        for eta in g_characters(&g, 4) {
            let ext = extensions_of(&eta);
            assert!(ext.iter().any(|e| restrict_to_dirichlet(e).conductor() % 5 == 0));
            for e in &ext {
                let chi = restrict_to_dirichlet(e);
                let c = chi.conductor();
                assert_eq!(chi.modulus() % c, 0);
                // c is a period on units, and no proper divisor is
                for n in 0..chi.modulus() as i64 {
                    for j in 0..chi.modulus() as i64 {
                        let a = n;
                        let b = n + c as i64 * j;
                        if let (Some(x), Some(y)) = (chi.exponent(a), chi.exponent(b)) {
                            assert_eq!(x, y);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dirichlet_products() {
        let chi4 = DirichletCharacter::kronecker(gauss());
        assert_eq!(dirichlet_product(&chi4, &DirichletCharacter::principal(4)), chi4);
        assert_eq!(dirichlet_product(&chi4, &chi4.conj()), DirichletCharacter::principal(4));
        let chi3 = DirichletCharacter::kronecker(QuadField::new(-3).unwrap());
        let p = dirichlet_product(&chi4, &chi3);
        assert_eq!(p.modulus(), 12);
        // (-4/5)(-3/5) = 1*(-1), (-4/7)(-3/7) = (-1)(1), (-4/11)(-3/11) = (-1)(-1)
        assert_eq!(p.value(5), CyclotomicNumber::from_integer(-1));
        assert_eq!(p.value(7), CyclotomicNumber::from_integer(-1));
        assert_eq!(p.value(11), CyclotomicNumber::from_integer(1));
        assert_eq!(p.value(6), CyclotomicNumber::zero());
        assert_eq!(p.conductor(), 12);
        assert_eq!(chi4.conductor(), 4);
    }

    #[test]
    fn serialization_round_trips() {
        let k = gauss();
        let grp = unit_group(k, 5).unwrap();
        let g = build_g(&grp);
        for eta in g_characters(&g, 2) {
            for e in extensions_of(&eta) {
                let s = e.to_json();
                assert_eq!(ExtendedCharacter::from_json(&s).unwrap(), e);
                let chi = restrict_to_dirichlet(&e);
                assert_eq!(DirichletCharacter::from_id(&chi.id()).unwrap(), chi);
                let js = serde_json::to_string(&chi).unwrap();
                assert_eq!(serde_json::from_str::<DirichletCharacter>(&js).unwrap(), chi);
            }
        }
    }
}
