//! Theta decomposition, the plain and twisted Eichler-Zagier maps, the spez
//! predicate and seeded random systems.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::characters::{dirichlet_product, restrict_to_dirichlet, DirichletCharacter, ExtendedCharacter};
use crate::cyclotomic::CyclotomicNumber;
use crate::elliptic::QExpansion;
use crate::ring::{QuadField, RingElement};

use super::{JacobiCoefficientSystem as Sys, JacobiError};

/// h_s as a sparse series in the discriminant: h_s = sum_d c(d, s) q^(d / |D| m).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaComponent {
    pub s: RingElement,
    pub series: BTreeMap<u64, CyclotomicNumber>,
}

/// One component per residue modulo sqrt(D) m, in residue order.
pub fn theta_components(sys: &Sys) -> Vec<ThetaComponent> {
    let res = sys.residues().clone();
    (0..res.len())
        .map(|i| ThetaComponent {
            s: res.rep(i),
            series: sys
                .discs_for(i)
                .filter_map(|d| {
                    let v = sys.value_at_index(d, i);
                    (!v.is_zero()).then_some((d, v))
                })
                .collect(),
        })
        .collect()
}

/// Rebuilds a system from theta components, checking the unit relation.
pub fn assemble(
    field: QuadField,
    weight: i64,
    index: u64,
    disc_bound: u64,
    components: &[ThetaComponent],
) -> Result<Sys, JacobiError> {
    let mut sys = Sys::new(field, weight, index, disc_bound)?;
    for c in components {
        for (&d, v) in &c.series {
            sys.set_consistent(d, c.s, v.clone())?;
        }
    }
    // every nonzero class must be reproduced by every orbit member listed
    for c in components {
        for d in sys.discs_for(sys.residues().index_of(c.s)).collect::<Vec<_>>() {
            let want = c.series.get(&d).cloned().unwrap_or_else(CyclotomicNumber::zero);
            if sys.value(d, c.s)? != want {
                return Err(JacobiError::Inconsistent {
                    d,
                    s: c.s.to_string(),
                });
            }
        }
    }
    Ok(sys)
}

/// A(n) = sum over residues s with N(s) + n = 0 mod |D| m of c(n, s); weight k-1,
/// level |D| m, character chi_D.
pub fn ez_map(sys: &Sys) -> QExpansion {
    let b = sys.disc_bound() as usize;
    let mut coeffs = vec![CyclotomicNumber::zero(); b + 1];
    for i in 0..sys.residues().len() {
        for d in sys.discs_for(i) {
            let v = sys.value_at_index(d, i);
            if !v.is_zero() {
                coeffs[d as usize] += &v;
            }
        }
    }
    QExpansion::new(
        sys.weight() - 1,
        sys.level(),
        DirichletCharacter::kronecker(sys.field()),
        coeffs,
    )
}

/// B(n) = sum over unit residues s of conj(eta~(s)) c(n, s); level 2 f |D| m with
/// f = |D| m for odd D and |D| m / 2 for even D, character chi_D conj(eta~).
pub fn twisted_ez_map(sys: &Sys, eta: &ExtendedCharacter) -> Result<QExpansion, JacobiError> {
    let grp = eta.group();
    if grp.field() != sys.field() || grp.index() != sys.index() {
        return Err(JacobiError::Mismatch(format!(
            "character modulo sqrt({}) {} on a system of index {}",
            grp.field().disc(),
            grp.index(),
            sys.index()
        )));
    }
    let b = sys.disc_bound() as usize;
    let mut coeffs = vec![CyclotomicNumber::zero(); b + 1];
    let res = sys.residues().clone();
    for i in 0..res.len() {
        let Some(w) = eta.value(res.rep(i)) else {
            continue;
        };
        let w = w.conj();
        for d in sys.discs_for(i) {
            let v = sys.value_at_index(d, i);
            if !v.is_zero() {
                coeffs[d as usize] += &(&w * &v);
            }
        }
    }
    let dm = sys.level();
    let f = if sys.field().disc() % 2 == 0 { dm / 2 } else { dm };
    let chi = dirichlet_product(
        &DirichletCharacter::kronecker(sys.field()),
        &restrict_to_dirichlet(eta).conj(),
    );
    Ok(QExpansion::new(sys.weight() - 1, 2 * f * dm, chi, coeffs))
}

/// True when, at every discriminant, all residues in the support carry one value.
pub fn is_spez(sys: &Sys) -> bool {
    let res = sys.residues().clone();
    let l = sys.level() as i64;
    let mut by_norm: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for i in 0..res.len() {
        by_norm.entry(res.rep(i).norm().rem_euclid(l)).or_default().push(i);
    }
    for idx in by_norm.values() {
        for d in sys.discs_for(idx[0]) {
            let first = sys.value_at_index(d, idx[0]);
            if idx[1..].iter().any(|&i| sys.value_at_index(d, i) != first) {
                return false;
            }
        }
    }
    true
}

/// The spez system with c(d, s) = value(d) wherever the unit relation allows a
/// common value at d, and zero elsewhere.
pub fn spez_system(
    field: QuadField,
    weight: i64,
    index: u64,
    disc_bound: u64,
    value: impl Fn(u64) -> CyclotomicNumber,
) -> Result<Sys, JacobiError> {
    let mut sys = Sys::new(field, weight, index, disc_bound)?;
    let res = sys.residues().clone();
    let w = field.unit_count() as i64;
    let l = sys.level() as i64;
    // norm classes where some residue would pick up a nontrivial unit factor
    let mut blocked: BTreeMap<i64, bool> = BTreeMap::new();
    for i in 0..res.len() {
        let twisted = (sys.orbits().shift[i] as i64 * weight).rem_euclid(w) != 0
            || sys.orbits().forced_zero(sys.rep_of(i), weight);
        let e = blocked.entry(res.rep(i).norm().rem_euclid(l)).or_insert(false);
        *e |= twisted;
    }
    for &r in sys.orbit_reps().to_vec().iter() {
        if blocked[&res.rep(r).norm().rem_euclid(l)] {
            continue;
        }
        for d in sys.discs_for(r).collect::<Vec<_>>() {
            sys.insert_rep(r, d, value(d));
        }
    }
    Ok(sys)
}

/// Seeded system with values in [-9, 9] on every class the unit relation permits.
pub fn random_admissible(
    field: QuadField,
    weight: i64,
    index: u64,
    disc_bound: u64,
    seed: u64,
) -> Result<Sys, JacobiError> {
    if disc_bound < 1 {
        return Err(JacobiError::Precondition("discriminant bound must be at least 1".into()));
    }
    let mut sys = Sys::new(field, weight, index, disc_bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &r in sys.orbit_reps().to_vec().iter() {
        if sys.orbits().forced_zero(r, weight) {
            continue;
        }
        for d in sys.discs_for(r).collect::<Vec<_>>() {
            let v: i64 = rng.gen_range(-9..=9);
            sys.insert_rep(r, d, CyclotomicNumber::from_integer(v));
        }
    }
    Ok(sys)
}
