//! Component elimination and the prime-by-prime descent to a form
//! supported on indices coprime to the level.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::hecke::{hecke_t, restrict_character, u_op};
use super::qexp::{QError, QExpansion};
use super::sieve::coprime_sieve;
use crate::arith;
use crate::cyclotomic::{int_pow_rational, CyclotomicNumber};

/// A(n) = sum_j beta_j a(f, gamma_j n), with a(f, x) = 0 off the integers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientLedger {
    terms: BTreeMap<(u64, u64), CyclotomicNumber>,
}

impl Default for CoefficientLedger {
    fn default() -> Self {
        Self::identity()
    }
}

impl CoefficientLedger {
    pub fn identity() -> Self {
        CoefficientLedger {
            terms: BTreeMap::from([((1, 1), CyclotomicNumber::one())]),
        }
    }

    /// (beta_j, gamma_j) with gamma_j = num/den in lowest terms.
    pub fn terms(&self) -> impl Iterator<Item = (&CyclotomicNumber, BigRational)> {
        self.terms.iter().map(|(&(n, d), b)| {
            (b, BigRational::new(BigInt::from(n), BigInt::from(d)))
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exponent of p in each gamma_j.
    pub fn exponents(&self, p: u64) -> Vec<i64> {
        self.terms
            .keys()
            .map(|&(n, d)| valuation(n, p) as i64 - valuation(d, p) as i64)
            .collect()
    }

    /// Every gamma_j has numerator and denominator square-free.
    pub fn all_squarefree(&self) -> bool {
        self.terms
            .keys()
            .all(|&(n, d)| arith::is_squarefree(n) && arith::is_squarefree(d))
    }

    fn push(&mut self, num: u64, den: u64, beta: CyclotomicNumber) {
        let g = num.gcd(&den);
        let key = (num / g, den / g);
        let e = self.terms.entry(key).or_insert_with(CyclotomicNumber::zero);
        *e += &beta;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// The ledger after n -> A(pn) + c A(n/p) - b A(n).
    fn step(&self, p: u64, c: &CyclotomicNumber, b: &CyclotomicNumber) -> Self {
        let mut out = CoefficientLedger {
            terms: BTreeMap::new(),
        };
        for (&(n, d), beta) in &self.terms {
            out.push(n * p, d, beta.clone());
            out.push(n, d * p, beta * c);
            out.push(n, d, -&(beta * b));
        }
        out
    }

    /// Evaluate A(n) against the stored coefficients of f.
    pub fn evaluate(&self, f: &QExpansion, n: u64) -> Option<CyclotomicNumber> {
        let mut acc = CyclotomicNumber::zero();
        for (&(num, den), beta) in &self.terms {
            let x = n * num;
            if x % den != 0 {
                continue;
            }
            let idx = (x / den) as usize;
            if idx > f.precision() {
                return None;
            }
            acc += &(beta * f.coeff(idx));
        }
        Some(acc)
    }
}

fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub form: QExpansion,
    pub ledger: CoefficientLedger,
}

/// T_p f - b f: a_1(n) = a(pn) + chi(p) p^(k-1) a(n/p) - b a(n).
pub fn eliminate_component(
    f: &QExpansion,
    p: u64,
    b: &CyclotomicNumber,
) -> Result<Elimination, QError> {
    eliminate_with_ledger(f, p, b, &CoefficientLedger::identity())
}

/// One elimination step on a form whose coefficients the ledger expresses
/// through an original form.
pub fn eliminate_with_ledger(
    f: &QExpansion,
    p: u64,
    b: &CyclotomicNumber,
    ledger: &CoefficientLedger,
) -> Result<Elimination, QError> {
    if !arith::is_prime(p) {
        return Err(QError::Precondition(format!("{p} is not prime")));
    }
    if f.precision() < p as usize {
        return Err(QError::Precision {
            have: f.precision(),
            need: p as usize,
        });
    }
    let t = hecke_t(f, p)?;
    let form = t.try_sub(&f.truncate(t.precision()).scale(b))?;
    let c = f
        .character()
        .value(p as i64)
        .scale(&int_pow_rational(p, f.weight() - 1));
    Ok(Elimination {
        form,
        ledger: ledger.step(p, &c, b),
    })
}

/// Apply (p_j, b_j) in order, compounding the ledger.
pub fn eliminate_chain(
    f: &QExpansion,
    steps: &[(u64, CyclotomicNumber)],
) -> Result<Elimination, QError> {
    let mut cur = Elimination {
        form: f.clone(),
        ledger: CoefficientLedger::identity(),
    };
    for (p, b) in steps {
        cur = eliminate_with_ledger(&cur.form, *p, b, &cur.ledger)?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Start,
    /// The part coprime to p was nonzero.
    Sieve,
    /// f was g(p tau); g = U_p f, then sieved.
    Undilate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentStep {
    pub prime: Option<u64>,
    pub branch: Branch,
    pub form: QExpansion,
}

/// f_0 = f, then f_i from f_{i-1} at p_i by the two-branch rule.
pub fn descend_sequence(f: &QExpansion, primes: &[u64]) -> Result<Vec<DescentStep>, QError> {
    if f.is_cusp_zero() {
        return Err(QError::Precondition("descent needs a nonzero form".into()));
    }
    let mut out = vec![DescentStep {
        prime: None,
        branch: Branch::Start,
        form: f.clone(),
    }];
    for &p in primes {
        if !arith::is_prime(p) {
            return Err(QError::Precondition(format!("{p} is not prime")));
        }
        let prev = &out.last().unwrap().form;
        let sieved = coprime_sieve(prev, p)?;
        if !sieved.is_cusp_zero() {
            out.push(DescentStep {
                prime: Some(p),
                branch: Branch::Sieve,
                form: sieved,
            });
            continue;
        }
        // every a(n) with p not dividing n vanishes: prev = g(p tau)
        let n = prev.level();
        if n % p != 0 {
            return Err(QError::LevelHypothesis(format!(
                "coefficients prime to {p} vanish but {p} does not divide the level {n}"
            )));
        }
        let lower = n / p;
        let chi = restrict_character(prev.character(), lower).ok_or_else(|| {
            QError::LevelHypothesis(format!(
                "the character does not descend to level {lower} at p = {p}"
            ))
        })?;
        let g = u_op(prev, p)?;
        let g = QExpansion::new(g.weight(), lower, chi, g.coeffs().to_vec());
        let next = coprime_sieve(&g, p)?;
        if next.is_cusp_zero() {
            return Err(QError::LevelHypothesis(format!(
                "both branches vanish at p = {p} on level {n}"
            )));
        }
        out.push(DescentStep {
            prime: Some(p),
            branch: Branch::Undilate,
            form: next,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::DirichletCharacter;
    use crate::elliptic::eta::{eta_quotient, parse_eta_spec};
    use crate::elliptic::hecke::b_op;

    fn delta(x: usize) -> QExpansion {
        eta_quotient(&parse_eta_spec("1^24").unwrap(), x).unwrap()
    }

    fn cint(k: i64) -> CyclotomicNumber {
        CyclotomicNumber::from_integer(k)
    }

    #[test]
    fn self_elimination() {
        let d = delta(600);
        let e = eliminate_component(&d, 2, &cint(-24)).unwrap();
        assert!(e.form.is_zero());
        assert_eq!(e.form.precision(), 300);
        let e3 = eliminate_component(&d, 3, &cint(252)).unwrap();
        assert!(e3.form.is_zero());
    }

    /// Old-form combination f = Delta + c Delta(2 tau) at level 2; eliminate with p = 3.
    #[test]
    fn ledger_replays_coefficients() {
        let d = delta(3000);
        let f = d.try_add(&b_op(&d, 2).unwrap().scale(&cint(5))).unwrap();
        let steps = vec![(3, cint(7)), (5, cint(-11)), (7, cint(2))];
        let e = eliminate_chain(&f, &steps).unwrap();
        assert!(e.ledger.all_squarefree());
        for p in [3, 5, 7] {
            assert!(e.ledger.exponents(p).iter().all(|x| (-1..=1).contains(x)));
        }
        for n in 1..=e.form.precision() as u64 {
            assert_eq!(&e.ledger.evaluate(&f, n).unwrap(), e.form.coeff(n as usize));
        }
    }

    #[test]
    fn elimination_is_linear() {
        let d = delta(400);
        let e4 = eta_quotient(&parse_eta_spec("1^-24,2^48").unwrap(), 400).unwrap();
        let d2 = b_op(&d, 2).unwrap();
        let a = e4.try_add(&d2.scale(&cint(3))).unwrap();
        let b = cint(13);
        let lhs = eliminate_component(&a, 3, &b).unwrap().form;
        let r1 = eliminate_component(&e4, 3, &b).unwrap().form;
        let r2 = eliminate_component(&d2, 3, &b).unwrap().form;
        let rhs = r1.try_add(&r2.scale(&cint(3))).unwrap();
        assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn precision_is_checked() {
        let d = delta(4);
        assert!(matches!(
            eliminate_component(&d, 5, &cint(1)),
            Err(QError::Precision { .. })
        ));
        assert!(eliminate_component(&delta(50), 4, &cint(1)).is_err());
    }

    #[test]
    fn descent_branches() {
        let d = delta(400);
        let steps = descend_sequence(&d, &[]).unwrap();
        assert_eq!(steps.len(), 1);
        let f = b_op(&d, 2).unwrap();
        let steps = descend_sequence(&f, &[2]).unwrap();
        assert_eq!(steps[1].branch, Branch::Undilate);
        let last = &steps[1].form;
        assert_eq!(last.level(), 4);
        assert!(!last.is_cusp_zero());
        for n in 1..=last.precision() {
            if n % 2 == 0 {
                assert!(last.coeff(n).is_zero());
            } else {
                assert_eq!(last.coeff(n), d.coeff(n));
            }
        }
        // already coprime-supported: the sieve branch returns the same coefficients
        let g = coprime_sieve(&d, 6).unwrap();
        let s = descend_sequence(&g, &[2, 3]).unwrap();
        assert!(s.iter().skip(1).all(|st| st.branch == Branch::Sieve));
        assert!(s.iter().all(|st| st.form.agrees_with(&g)));
    }

    #[test]
    fn descent_diagnoses_level_violation() {
        // Delta(2 tau) labelled with level 1 cannot be undone at p = 2
        let f = b_op(&delta(100), 2).unwrap().with_metadata(12, 1, DirichletCharacter::principal(1));
        assert!(matches!(
            descend_sequence(&f, &[2]),
            Err(QError::LevelHypothesis(_))
        ));
        let z = QExpansion::zero(12, 1, DirichletCharacter::principal(1), 10);
        assert!(descend_sequence(&z, &[2]).is_err());
    }
}
