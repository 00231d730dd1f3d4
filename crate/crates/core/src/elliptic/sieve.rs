//! Coprime and square-free sieves, and nonvanishing counts.

use serde::{Deserialize, Serialize};

use super::hecke::lift_to;
use super::qexp::{QError, QExpansion};
use crate::arith;
use crate::cyclotomic::CyclotomicNumber;

/// Index constraints shared by moments and counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    /// n = residue mod modulus.
    pub progression: Option<(u64, u64)>,
    /// (n, M) = 1.
    pub coprime_to: Option<u64>,
    pub squarefree: bool,
}

impl Constraints {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn squarefree() -> Self {
        Constraints {
            squarefree: true,
            ..Self::default()
        }
    }

    pub fn admits(&self, n: u64) -> bool {
        if let Some((q, a)) = self.progression {
            if q > 0 && n % q != a % q {
                return false;
            }
        }
        if let Some(m) = self.coprime_to {
            if arith::gcd(n as i64, m as i64) != 1 {
                return false;
            }
        }
        !self.squarefree || arith::is_squarefree(n)
    }

    /// Indicator table over 0..=limit; square-freeness comes from the sieve.
    pub fn table(&self, limit: usize) -> Vec<bool> {
        let sf = self.squarefree.then(|| squarefree_indicator(limit));
        let plain = Constraints {
            squarefree: false,
            ..self.clone()
        };
        (0..=limit)
            .map(|n| {
                if n == 0 {
                    return false;
                }
                plain.admits(n as u64) && sf.as_ref().map_or(true, |s| s[n] == 1)
            })
            .collect()
    }
}

/// Keep a(n) with (n, M) = 1; level N M^2 / M_0 with M_0 = (M, N).
pub fn coprime_sieve(f: &QExpansion, m: u64) -> Result<QExpansion, QError> {
    if m == 0 || !arith::is_squarefree(m) {
        return Err(QError::Precondition(format!("sieve modulus {m} is not square-free")));
    }
    if m == 1 {
        return Ok(f.clone());
    }
    let coeffs = (0..=f.precision())
        .map(|n| {
            if arith::gcd(n as i64, m as i64) == 1 {
                f.coeff(n).clone()
            } else {
                CyclotomicNumber::zero()
            }
        })
        .collect();
    let m0 = arith::gcd(m as i64, f.level() as i64) as u64;
    let level = f.level() * m * m / m0;
    Ok(QExpansion::new(f.weight(), level, lift_to(f.character(), level), coeffs))
}

/// sum_{r^2 | n} mu(r) for 0 <= n <= limit (entry 0 is 0).
pub fn squarefree_indicator(limit: usize) -> Vec<i64> {
    let mut ind = vec![0i64; limit + 1];
    let mut r = 1usize;
    while r * r <= limit.max(1) {
        let mu = arith::moebius(r as u64);
        if mu != 0 {
            let step = r * r;
            for n in (step..=limit).step_by(step) {
                ind[n] += mu;
            }
        }
        r += 1;
    }
    ind
}

/// a(n) [n square-free].
pub fn squarefree_select(f: &QExpansion) -> QExpansion {
    let ind = squarefree_indicator(f.precision());
    debug_assert!((1..=f.precision().min(10_000))
        .all(|n| (ind[n] == 1) == arith::is_squarefree(n as u64)));
    let mut out = f.clone();
    for (n, i) in ind.iter().enumerate() {
        if *i == 0 {
            out.set_coeff(n, CyclotomicNumber::zero());
        }
    }
    out
}

/// #{1 <= n <= x : n admitted, a(n) != 0}.
pub fn nonvanish_count(f: &QExpansion, x: usize, c: &Constraints) -> Result<u64, QError> {
    f.require_precision(x)?;
    let ok = c.table(x);
    Ok((1..=x).filter(|&n| ok[n] && !f.coeff(n).is_zero()).count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::eta::{eta_quotient, parse_eta_spec};
    use proptest::prelude::*;

    fn delta(x: usize) -> QExpansion {
        eta_quotient(&parse_eta_spec("1^24").unwrap(), x).unwrap()
    }

    #[test]
    fn indicator_examples_and_cross_check() {
        let ind = squarefree_indicator(10_000);
        assert_eq!(ind[1], 1);
        assert_eq!(ind[4], 0);
        assert_eq!(ind[12], 0);
        assert_eq!(ind[10], 1);
        for n in 1..=10_000u64 {
            assert_eq!(ind[n as usize] == 1, arith::is_squarefree(n), "n = {n}");
            assert!(ind[n as usize] == 0 || ind[n as usize] == 1);
        }
    }

    #[test]
    fn sieve_by_two() {
        let d = delta(200);
        let g = coprime_sieve(&d, 2).unwrap();
        assert_eq!(g.level(), 4);
        for n in 1..=200 {
            if n % 2 == 0 {
                assert!(g.coeff(n).is_zero());
            } else {
                assert_eq!(g.coeff(n), d.coeff(n));
            }
        }
        assert!(coprime_sieve(&d, 1).unwrap().agrees_with(&d));
        assert!(coprime_sieve(&d, 12).is_err());
    }

    #[test]
    fn iterated_equals_one_shot() {
        let d = delta(300);
        let mut g = d.clone();
        for p in [2, 3, 5, 7] {
            g = coprime_sieve(&g, p).unwrap();
        }
        let one = coprime_sieve(&d, 210).unwrap();
        assert!(g.agrees_with(&one));
        assert_eq!(g.level(), one.level());
    }

    #[test]
    fn level_keeps_primes_of_n_once() {
        let f = eta_quotient(&parse_eta_spec("1^2,11^2").unwrap(), 50).unwrap();
        assert_eq!(coprime_sieve(&f, 11).unwrap().level(), 121);
        assert_eq!(coprime_sieve(&f, 22).unwrap().level(), 11 * 4 * 11);
    }

    #[test]
    fn counts() {
        let d = delta(2000);
        let z = QExpansion::zero(12, 1, d.character().clone(), 2000);
        assert_eq!(nonvanish_count(&z, 2000, &Constraints::squarefree()).unwrap(), 0);
        let c = nonvanish_count(&d, 2000, &Constraints::squarefree()).unwrap();
        let sf = (1..=2000u64).filter(|&n| arith::is_squarefree(n)).count() as u64;
        assert_eq!(c, sf);
        assert!(nonvanish_count(&d, 2001, &Constraints::none()).is_err());
        let odd = Constraints {
            progression: Some((2, 1)),
            ..Constraints::default()
        };
        assert_eq!(nonvanish_count(&d, 2000, &odd).unwrap(), 1000);
    }

    proptest! {
        #[test]
        fn count_is_monotone(x1 in 1usize..600, dx in 0usize..600, sf in any::<bool>(), m in 1u64..31) {
            let d = delta(1200);
            let c = Constraints { progression: None, coprime_to: Some(m), squarefree: sf };
            let a = nonvanish_count(&d, x1, &c).unwrap();
            let b = nonvanish_count(&d, x1 + dx, &c).unwrap();
            prop_assert!(a <= b);
        }
    }
}
