//! Index-changing operators and the W_mu action.

use crate::arith;
use crate::characters::GCharacter;
use crate::cyclotomic::{int_pow_rational, CyclotomicNumber};
use crate::ring::{self, RingElement, SplitKind};

use super::{JacobiCoefficientSystem as Sys, JacobiError};

fn check_field(sys: &Sys, x: RingElement) -> Result<(), JacobiError> {
    if x.field() != sys.field() {
        return Err(JacobiError::Precondition(format!(
            "{x} is not in the field of discriminant {}",
            sys.field().disc()
        )));
    }
    Ok(())
}

/// (phi|U_rho)(n, r) = phi(n, r/rho); index m N(rho), discriminants scale by N(rho).
#[allow(non_snake_case)]
pub fn apply_U_rho(sys: &Sys, rho: RingElement) -> Result<Sys, JacobiError> {
    check_field(sys, rho)?;
    if rho.is_zero() {
        return Err(JacobiError::Precondition("rho must be nonzero".into()));
    }
    let nr = rho.norm() as u64;
    let mut out = Sys::new(sys.field(), sys.weight(), sys.index() * nr, sys.disc_bound() * nr)?;
    let res_out = out.residues().clone();
    let k = sys.weight();
    for &r in out.orbit_reps().to_vec().iter() {
        if out.orbits().forced_zero(r, k) {
            continue;
        }
        let Some(s_in) = res_out.rep(r).div_exact(&rho) else {
            continue;
        };
        let i = sys.residues().index_of(s_in);
        for d in sys.discs_for(i).collect::<Vec<_>>() {
            out.insert_rep(r, d * nr, sys.value_at_index(d, i));
        }
    }
    Ok(out)
}

/// phi|u_rho(n, r) = sum over r' = r mod sqrt(D) m/N(rho), taken mod sqrt(D) m / rho,
/// of phi(n + N(rho)(N(r') - N(r))/(|D| m), rho r'). Needs N(rho) | m.
pub fn apply_u_rho(sys: &Sys, rho: RingElement) -> Result<Sys, JacobiError> {
    check_field(sys, rho)?;
    if rho.is_zero() {
        return Err(JacobiError::Precondition("rho must be nonzero".into()));
    }
    let nr = rho.norm() as u64;
    if sys.index() % nr != 0 {
        return Err(JacobiError::Precondition(format!(
            "u_rho needs N(rho) = {nr} to divide the index {}",
            sys.index()
        )));
    }
    let m0 = sys.index() / nr;
    let mut out = Sys::new(sys.field(), sys.weight(), m0, sys.disc_bound() / nr)?;
    let step = sys.field().sqrt_d().scale(m0 as i64);
    // r' = r + sqrt(D) m0 t with t over O / conj(rho)
    let ts = ring::residues_mod(rho.conj())?;
    let res_out = out.residues().clone();
    let k = sys.weight();
    for &r in out.orbit_reps().to_vec().iter() {
        if out.orbits().forced_zero(r, k) {
            continue;
        }
        let x = res_out.rep(r);
        let idx: Vec<usize> = ts
            .iter()
            .map(|&t| sys.residues().index_of(rho * (x + step * t)))
            .collect();
        for d in out.discs_for(r).collect::<Vec<_>>() {
            let mut acc = CyclotomicNumber::zero();
            for &i in &idx {
                acc += &sys.value_at_index(nr * d, i);
            }
            out.insert_rep(r, d, acc);
        }
    }
    Ok(out)
}

/// (phi|V_l)(n, r) = sum_{a | (n, l), a | r} a^(k-1) phi(n l / a^2, r / a); index m l.
#[allow(non_snake_case)]
pub fn apply_V_l(sys: &Sys, l: u64) -> Result<Sys, JacobiError> {
    if l == 0 {
        return Err(JacobiError::Precondition("l must be positive".into()));
    }
    let ml = sys.index() * l;
    let mut out = Sys::new(sys.field(), sys.weight(), ml, sys.disc_bound())?;
    let level = out.level() as i64;
    let divs = arith::divisors(l);
    let res_out = out.residues().clone();
    let k = sys.weight();
    for &r in out.orbit_reps().to_vec().iter() {
        if out.orbits().forced_zero(r, k) {
            continue;
        }
        let s = res_out.rep(r);
        let terms: Vec<(u64, RingElement, CyclotomicNumber)> = divs
            .iter()
            .filter(|&&a| s.a % a as i64 == 0 && s.b % a as i64 == 0)
            .map(|&a| {
                let w = CyclotomicNumber::from_rational(int_pow_rational(a, k - 1));
                (a, RingElement::div_exact(&s, &sys.field().int(a as i64)).unwrap(), w)
            })
            .collect();
        for d in out.discs_for(r).collect::<Vec<_>>() {
            // n is well defined modulo every a dividing both l and s
            let n = (d as i64 + s.norm()) / level;
            let mut acc = CyclotomicNumber::zero();
            for (a, sa, w) in &terms {
                if n % *a as i64 != 0 {
                    continue;
                }
                let v = sys.value(d / (a * a), *sa)?;
                if !v.is_zero() {
                    acc += &(w * &v);
                }
            }
            out.insert_rep(r, d, acc);
        }
    }
    Ok(out)
}

fn check_in_g(sys: &Sys, mu: RingElement) -> Result<(), JacobiError> {
    check_field(sys, mu)?;
    let l = sys.level() as i64;
    if mu.norm().rem_euclid(l) != 1 % l {
        return Err(JacobiError::Precondition(format!(
            "{mu} is not in G: N = {} is not 1 mod {l}",
            mu.norm()
        )));
    }
    Ok(())
}

/// W_mu: c_out(d, s) = c(d, mu s) for mu with N(mu) = 1 mod |D| m.
pub fn w_mu(sys: &Sys, mu: RingElement) -> Result<Sys, JacobiError> {
    check_in_g(sys, mu)?;
    let mut out = sys.empty_like();
    let res = sys.residues().clone();
    for &r in sys.orbit_reps() {
        if sys.orbits().forced_zero(r, sys.weight()) {
            continue;
        }
        let i = res.index_of(mu * res.rep(r));
        for d in sys.discs_for(r).collect::<Vec<_>>() {
            out.insert_rep(r, d, sys.value_at_index(d, i));
        }
    }
    Ok(out)
}

/// |G|^-1 sum_{mu in G} conj(eta(mu)) W_mu(sys).
pub fn eta_project(sys: &Sys, eta: &GCharacter) -> Result<Sys, JacobiError> {
    let grp = eta.group();
    if grp.field() != sys.field() || grp.index() != sys.index() {
        return Err(JacobiError::Mismatch(format!(
            "character of (D={}, m={}) on a system of (D={}, m={})",
            grp.field().disc(),
            grp.index(),
            sys.field().disc(),
            sys.index()
        )));
    }
    let g: Vec<(RingElement, CyclotomicNumber)> = (0..grp.order())
        .filter(|&p| grp.in_g(p))
        .map(|p| {
            let mu = grp.rep(p);
            (mu, eta.value(mu).expect("mu in G").conj())
        })
        .collect();
    let inv = CyclotomicNumber::from_rational(num_rational::BigRational::new(
            1.into(),
            (g.len() as i64).into(),
        ));
    let mut out = sys.empty_like();
    let res = sys.residues().clone();
    for &r in sys.orbit_reps() {
        if sys.orbits().forced_zero(r, sys.weight()) {
            continue;
        }
        let s = res.rep(r);
        let idx: Vec<(usize, &CyclotomicNumber)> =
            g.iter().map(|(mu, c)| (res.index_of(*mu * s), c)).collect();
        for d in sys.discs_for(r).collect::<Vec<_>>() {
            let mut acc = CyclotomicNumber::zero();
            for (i, c) in &idx {
                let v = sys.value_at_index(d, *i);
                if !v.is_zero() {
                    acc += &(*c * &v);
                }
            }
            out.insert_rep(r, d, &acc * &inv);
        }
    }
    Ok(out)
}

/// p^4 phi - p^3 phi|u_pi U_pi - p^3 phi|u_pibar U_pibar + p^2 phi|u_pibar U_pi,
/// each term applying the u operator first.
pub fn psi_combination(sys: &Sys, pi: RingElement) -> Result<Sys, JacobiError> {
    check_field(sys, pi)?;
    let p = pi.norm() as u64;
    if sys.index() != p || !arith::is_prime(p) {
        return Err(JacobiError::Precondition(format!(
            "index {} must equal the prime N(pi) = {p}",
            sys.index()
        )));
    }
    let info = ring::split_rational_prime(p, sys.field())?;
    if info.kind != SplitKind::Split {
        return Err(JacobiError::Precondition(format!("{p} does not split")));
    }
    let pib = pi.conj();
    let a = apply_U_rho(&apply_u_rho(sys, pi)?, pi)?;
    let b = apply_U_rho(&apply_u_rho(sys, pib)?, pib)?;
    let c = apply_U_rho(&apply_u_rho(sys, pib)?, pi)?;
    let pk = |e: u32| CyclotomicNumber::from_integer((p as i64).pow(e));
    let neg = |e: u32| CyclotomicNumber::from_integer(-(p as i64).pow(e));
    sys.scale(&pk(4))
        .try_add(&a.scale(&neg(3)))?
        .try_add(&b.scale(&neg(3)))?
        .try_add(&c.scale(&pk(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{build_g, g_characters, unit_group};
    use crate::jacobi::{ez_map, is_spez, random_admissible, spez_system};
    use crate::ring::QuadField;

    fn gauss() -> QuadField {
        QuadField::new(-4).unwrap()
    }

    fn int(k: i64) -> CyclotomicNumber {
        CyclotomicNumber::from_integer(k)
    }

    #[test]
    fn u_rho_support_and_bookkeeping() {
        let k = gauss();
        let rho = k.elem(1, 1);
        let sys = random_admissible(k, 8, 1, 40, 3).unwrap();
        let up = apply_U_rho(&sys, rho).unwrap();
        assert_eq!(up.index(), 2);
        assert_eq!(up.disc_bound(), 80);
        up.check_invariants().unwrap();
        for (d, s, v) in up.classes() {
            assert!(rho.divides(&s));
            assert_eq!(v, sys.value(d / 2, s.div_exact(&rho).unwrap()).unwrap());
        }
        let unit = apply_U_rho(&sys, k.omega()).unwrap();
        assert_eq!(unit.index(), 1);
        for (d, s, v) in sys.classes() {
            assert_eq!(unit.value(d, k.omega() * s).unwrap(), v);
        }
    }

    #[test]
    fn u_then_lower_scales_by_norm() {
        let cases = [(-4, (1, 1), 1u64), (-4, (2, 1), 1), (-8, (0, 1), 1), (-7, (0, 1), 1), (-3, (2, 1), 2)];
        for (d, (a, b), m) in cases {
            let f = QuadField::new(d).unwrap();
            let rho = f.elem(a, b);
            for seed in 0..5 {
                let sys = random_admissible(f, 6, m, 30, seed).unwrap();
                let back = apply_u_rho(&apply_U_rho(&sys, rho).unwrap(), rho).unwrap();
                assert_eq!(back, sys.scale(&int(rho.norm())), "D={d} rho={rho}");
            }
        }
    }

    #[test]
    fn u_then_lower_by_conjugate_is_identity_at_index_one() {
        for (d, p) in [(-4i64, 5u64), (-4, 13), (-7, 2), (-3, 7), (-8, 3)] {
            let f = QuadField::new(d).unwrap();
            let pi = ring::split_rational_prime(p, f).unwrap().pi.unwrap();
            for seed in 0..4 {
                let sys = random_admissible(f, 12, 1, 30, seed).unwrap();
                let back = apply_u_rho(&apply_U_rho(&sys, pi).unwrap(), pi.conj()).unwrap();
                assert_eq!(back, sys, "D={d} p={p}");
            }
        }
    }

    #[test]
    fn lower_needs_divisible_index() {
        let k = gauss();
        let sys = random_admissible(k, 8, 1, 20, 0).unwrap();
        assert!(apply_u_rho(&sys, k.elem(1, 1)).is_err());
        assert!(apply_u_rho(&sys, k.omega()).is_ok());
        assert!(apply_U_rho(&sys.empty_like(), k.elem(2, 1)).unwrap().is_zero());
    }

    #[test]
    fn v_examples() {
        let k = gauss();
        let sys = random_admissible(k, 8, 1, 40, 9).unwrap();
        assert_eq!(apply_V_l(&sys, 1).unwrap(), sys);
        let v3 = apply_V_l(&sys, 3).unwrap();
        v3.check_invariants().unwrap();
        for (d, s, v) in v3.classes() {
            let n = (d as i64 + s.norm()) / 12;
            if n % 3 != 0 || s.a % 3 != 0 || s.b % 3 != 0 {
                assert_eq!(v, sys.value(d, s).unwrap());
            }
        }
    }

    #[test]
    fn v_breaks_spez_when_odd_component_is_nonzero() {
        // c_p(Np, p) picks up p^(k-1) c(N, 1) while c_p(Np, pi^2) does not
        let k = gauss();
        let p = 13u64;
        let pi = ring::split_rational_prime(p, k).unwrap().pi.unwrap();
        let sys = spez_system(k, 8, 1, 700, |d| int(d as i64 % 5 + 1)).unwrap();
        assert!(is_spez(&sys));
        let vp = apply_V_l(&sys, p).unwrap();
        let n = 1i64;
        let r1 = k.int(p as i64);
        let r2 = pi * pi;
        let d1 = (4 * n * p as i64 * p as i64 - r1.norm()) as u64;
        let d2 = (4 * n * p as i64 * p as i64 - r2.norm()) as u64;
        assert_eq!(d1, d2);
        let c1 = vp.value(d1, r1).unwrap();
        let c2 = vp.value(d2, r2).unwrap();
        let expect = &sys.value(d1, k.one()).unwrap()
            + &(&int(13i64.pow(7)) * &sys.value(3, k.one()).unwrap());
        assert_eq!(c1, expect);
        assert_eq!(c2, sys.value(d2, k.one()).unwrap());
        assert_ne!(c1, c2);
        assert!(!is_spez(&vp));
    }

    #[test]
    fn w_is_a_group_action() {
        let k = gauss();
        let grp = unit_group(k, 5).unwrap();
        let g = build_g(&grp).elements();
        let sys = random_admissible(k, 4, 5, 60, 5).unwrap();
        assert_eq!(w_mu(&sys, k.one()).unwrap(), sys);
        for &mu in &g {
            for &nu in &g {
                let lhs = w_mu(&w_mu(&sys, nu).unwrap(), mu).unwrap();
                let rhs = w_mu(&sys, mu * nu).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        assert!(w_mu(&sys, k.elem(1, 1)).is_err());
        assert!(w_mu(&sys, k.int(2)).is_err());
    }

    #[test]
    fn projectors_resolve_identity_and_kill_ez() {
        for (d, m, k) in [(-4, 3, 4), (-4, 5, 8), (-3, 2, 6), (-7, 2, 2)] {
            let f = QuadField::new(d).unwrap();
            let grp = unit_group(f, m).unwrap();
            let g = build_g(&grp);
            let sys = random_admissible(f, k, m, 50, 21).unwrap();
            let mut total = sys.empty_like();
            for eta in g_characters(&g, k) {
                let p = eta_project(&sys, &eta).unwrap();
                assert_eq!(eta_project(&p, &eta).unwrap(), p);
                for mu in g.elements() {
                    assert_eq!(w_mu(&p, mu).unwrap(), p.scale(&eta.value(mu).unwrap()));
                }
                if !eta.is_trivial() {
                    assert!(ez_map(&p).is_zero());
                }
                total = total.try_add(&p).unwrap();
            }
            assert_eq!(total, sys);
        }
    }

    #[test]
    fn psi_on_images() {
        let k = gauss();
        let p = 5u64;
        let pi = ring::split_rational_prime(p, k).unwrap().pi.unwrap();
        let alpha = random_admissible(k, 8, 1, 40, 1).unwrap();
        let beta = random_admissible(k, 8, 1, 40, 2).unwrap();
        let ua = apply_U_rho(&alpha, pi).unwrap();
        let ub = apply_U_rho(&beta, pi.conj()).unwrap();
        // kills the conjugate image outright
        assert!(psi_combination(&ub, pi).unwrap().is_zero());
        // on the other image it leaves p^2 U_pi(alpha) - p^3 U_pibar(alpha)
        let got = psi_combination(&ua.try_add(&ub).unwrap(), pi).unwrap();
        let expect = ua
            .scale(&int(25))
            .try_sub(&apply_U_rho(&alpha, pi.conj()).unwrap().scale(&int(125)))
            .unwrap();
        assert_eq!(got, expect.truncate(got.disc_bound()));
        assert!(psi_combination(&alpha, pi).is_err());
        let three = random_admissible(k, 8, 3, 30, 0).unwrap();
        assert!(psi_combination(&three, k.int(3)).is_err());
    }

    #[test]
    #[ignore = "the printed combination does not vanish on U_pi images; see psi_on_images"]
    fn psi_vanishes_on_both_images() {
        let k = gauss();
        let pi = ring::split_rational_prime(5, k).unwrap().pi.unwrap();
        let alpha = random_admissible(k, 8, 1, 40, 1).unwrap();
        let beta = random_admissible(k, 8, 1, 40, 2).unwrap();
        let phi = apply_U_rho(&alpha, pi)
            .unwrap()
            .try_add(&apply_U_rho(&beta, pi.conj()).unwrap())
            .unwrap();
        assert!(psi_combination(&phi, pi).unwrap().is_zero());
    }

    #[test]
    fn psi_is_linear() {
        let k = gauss();
        let pi = ring::split_rational_prime(5, k).unwrap().pi.unwrap();
        let a = random_admissible(k, 4, 5, 60, 7).unwrap();
        let b = random_admissible(k, 4, 5, 60, 8).unwrap();
        let lhs = psi_combination(&a.scale(&int(3)).try_add(&b).unwrap(), pi).unwrap();
        let rhs = psi_combination(&a, pi)
            .unwrap()
            .scale(&int(3))
            .try_add(&psi_combination(&b, pi).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        assert!(psi_combination(&a.empty_like(), pi).unwrap().is_zero());
    }
}
