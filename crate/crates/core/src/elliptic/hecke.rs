//! Hecke, U and B operators on coefficient windows.
//!
//! Each operator states its output window: T_n and U_n keep floor(X/n)
//! coefficients, B_d keeps X.

use super::qexp::{QError, QExpansion};
use crate::arith;
use crate::characters::DirichletCharacter;
use crate::cyclotomic::{int_pow_rational, CyclotomicNumber};

/// a(T_n f, m) = sum_{d | (m, n)} chi(d) d^{k-1} a(mn/d^2), for (n, N) = 1.
pub fn hecke_t(f: &QExpansion, n: u64) -> Result<QExpansion, QError> {
    if n == 0 {
        return Err(QError::Precondition("T_0 is undefined".into()));
    }
    if arith::gcd(n as i64, f.level() as i64) != 1 {
        return Err(QError::Precondition(format!(
            "T_{n} needs n coprime to the level {}; use U_{n}",
            f.level()
        )));
    }
    if n == 1 {
        return Ok(f.clone());
    }
    let x = f.precision() / n as usize;
    let k = f.weight();
    let chi = f.character();
    let weights: Vec<(u64, CyclotomicNumber)> = arith::divisors(n)
        .into_iter()
        .map(|d| {
            let w = chi.value(d as i64).scale(&int_pow_rational(d, k - 1));
            (d, w)
        })
        .collect();
    let mut coeffs = Vec::with_capacity(x + 1);
    for m in 0..=x as u64 {
        let mut acc = CyclotomicNumber::zero();
        for (d, w) in &weights {
            if m % d != 0 || w.is_zero() {
                continue;
            }
            let idx = (m * n / (d * d)) as usize;
            let a = f.coeff(idx);
            if !a.is_zero() {
                acc += &(w * a);
            }
        }
        coeffs.push(acc);
    }
    Ok(QExpansion::new(k, f.level(), chi.clone(), coeffs))
}

/// a(U_n f, m) = a(f, nm); level lcm(N, n) times the part of n prime to N.
pub fn u_op(f: &QExpansion, n: u64) -> Result<QExpansion, QError> {
    if n == 0 {
        return Err(QError::Precondition("U_0 is undefined".into()));
    }
    if n == 1 {
        return Ok(f.clone());
    }
    let x = f.precision() / n as usize;
    let coeffs = (0..=x).map(|m| f.coeff(m * n as usize).clone()).collect();
    let level = u_level(f.level(), n);
    let chi = lift_to(f.character(), level);
    Ok(QExpansion::new(f.weight(), level, chi, coeffs))
}

fn u_level(level: u64, n: u64) -> u64 {
    // primes of n already in N keep the level; new primes enter with their full power
    let mut out = level;
    for (p, e) in arith::factor(n) {
        if level % p != 0 {
            out *= p.pow(e);
        }
    }
    out
}

/// a(B_d f, m) = a(f, m/d) when d | m, else 0; level N d.
pub fn b_op(f: &QExpansion, d: u64) -> Result<QExpansion, QError> {
    if d == 0 {
        return Err(QError::Precondition("B_0 is undefined".into()));
    }
    if d == 1 {
        return Ok(f.clone());
    }
    let x = f.precision();
    let coeffs = (0..=x)
        .map(|m| {
            if m as u64 % d == 0 {
                f.coeff(m / d as usize).clone()
            } else {
                CyclotomicNumber::zero()
            }
        })
        .collect();
    let level = f.level() * d;
    Ok(QExpansion::new(f.weight(), level, lift_to(f.character(), level), coeffs))
}

/// chi on the lcm of its modulus and `level`.
pub(crate) fn lift_to(chi: &DirichletCharacter, level: u64) -> DirichletCharacter {
    chi.lift(arith::lcm_u64(chi.modulus(), level.max(1)))
}

/// chi viewed modulo a divisor q of its modulus, when its conductor divides q.
pub fn restrict_character(chi: &DirichletCharacter, q: u64) -> Option<DirichletCharacter> {
    let big = chi.modulus();
    if q == 0 || big % q != 0 || q % chi.conductor() != 0 {
        return None;
    }
    let mut exps = Vec::with_capacity(q as usize);
    for n in 0..q {
        if arith::gcd(n as i64, q as i64) != 1 {
            exps.push(None);
            continue;
        }
        // a lift of n coprime to the big modulus exists by CRT
        let lift = (0..big / q)
            .map(|j| n + j * q)
            .find(|&m| arith::gcd(m as i64, big as i64) == 1)?;
        exps.push(chi.exponent(lift as i64));
    }
    DirichletCharacter::new(q, chi.order(), exps).ok()
}
