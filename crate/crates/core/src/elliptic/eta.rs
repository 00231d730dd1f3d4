//! Concrete test forms: eta quotients and level-one Eisenstein series.
//!
//! Eta quotients get weight (1/2) sum r_d and the usual Ligozat level: the
//! least multiple N of lcm(d) with N sum r_d/d = 0 mod 24. The character is
//! n -> ((-1)^k prod d^{r_d} / n). Cusp holomorphy is not checked.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::qexp::{QError, QExpansion};
use crate::arith;
use crate::characters::DirichletCharacter;
use crate::cyclotomic::CyclotomicNumber;

/// One factor eta(d tau)^r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EtaFactor {
    pub delta: u64,
    pub exponent: i64,
}

/// Parse "1^24" or "1^-2,2^5,4^-2".
pub fn parse_eta_spec(s: &str) -> Result<Vec<EtaFactor>, QError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let (d, r) = t
                .trim()
                .split_once('^')
                .ok_or_else(|| QError::Parse(format!("eta factor {t:?} is not d^r")))?;
            let delta: u64 = d.trim().parse().map_err(|_| QError::Parse(format!("bad d in {t:?}")))?;
            let exponent: i64 = r.trim().parse().map_err(|_| QError::Parse(format!("bad r in {t:?}")))?;
            if delta == 0 {
                return Err(QError::Parse("eta factor with d = 0".into()));
            }
            Ok(EtaFactor { delta, exponent })
        })
        .collect()
}

/// Merge repeated d and drop zero exponents.
fn normalize(spec: &[EtaFactor]) -> Vec<EtaFactor> {
    let mut m = std::collections::BTreeMap::new();
    for f in spec {
        *m.entry(f.delta).or_insert(0i64) += f.exponent;
    }
    m.into_iter()
        .filter(|&(_, r)| r != 0)
        .map(|(delta, exponent)| EtaFactor { delta, exponent })
        .collect()
}

pub fn eta_weight(spec: &[EtaFactor]) -> Result<i64, QError> {
    let s: i64 = spec.iter().map(|f| f.exponent).sum();
    if s % 2 != 0 {
        return Err(QError::Precondition(format!(
            "half-integral weight {s}/2 is not supported"
        )));
    }
    Ok(s / 2)
}

pub fn eta_level(spec: &[EtaFactor]) -> u64 {
    let l = spec.iter().fold(1u64, |acc, f| arith::lcm_u64(acc, f.delta));
    let t: i64 = spec.iter().map(|f| f.exponent * (l / f.delta) as i64).sum();
    let g = t.unsigned_abs().gcd(&24);
    l * (24 / g)
}

pub fn eta_character(spec: &[EtaFactor], level: u64) -> Result<DirichletCharacter, QError> {
    let k = eta_weight(spec)?;
    let mut a: i64 = if k % 2 == 0 { 1 } else { -1 };
    for f in spec {
        if f.exponent % 2 != 0 {
            a = a
                .checked_mul(f.delta as i64)
                .ok_or_else(|| QError::Precondition("character discriminant overflows".into()))?;
        }
    }
    if a == 1 {
        return Ok(DirichletCharacter::principal(level));
    }
    for n in 1..level as i64 {
        if arith::gcd(n, level as i64) == 1
            && arith::kronecker(a, n) != arith::kronecker(a, n + level as i64)
        {
            return Err(QError::Precondition(format!(
                "({a}/.) is not periodic modulo the level {level}"
            )));
        }
    }
    Ok(DirichletCharacter::kronecker_symbol(a, level)?)
}

/// Coefficient arithmetic for the power recurrence; i128 first, BigInt on overflow.
trait Acc: Clone {
    fn acc_zero() -> Self;
    fn acc_one() -> Self;
    /// self += c * x
    fn add_scaled(&mut self, c: i64, x: &Self) -> Option<()>;
    fn div_exact(&mut self, n: i64) -> Option<()>;
}

impl Acc for i128 {
    fn acc_zero() -> Self {
        0
    }
    fn acc_one() -> Self {
        1
    }
    fn add_scaled(&mut self, c: i64, x: &Self) -> Option<()> {
        *self = self.checked_add((c as i128).checked_mul(*x)?)?;
        Some(())
    }
    fn div_exact(&mut self, n: i64) -> Option<()> {
        debug_assert_eq!(*self % n as i128, 0);
        *self /= n as i128;
        Some(())
    }
}

impl Acc for BigInt {
    fn acc_zero() -> Self {
        Zero::zero()
    }
    fn acc_one() -> Self {
        One::one()
    }
    fn add_scaled(&mut self, c: i64, x: &Self) -> Option<()> {
        *self += x * c;
        Some(())
    }
    fn div_exact(&mut self, n: i64) -> Option<()> {
        *self /= n;
        Some(())
    }
}

/// Sparse prod_{n>=1}(1 - q^{dn}) up to q^len: (exponent, +-1).
fn euler_product_support(delta: usize, len: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    let mut k: i64 = 1;
    out.push((0, 1));
    loop {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let e1 = (k * (3 * k - 1) / 2) as usize * delta;
        let e2 = (k * (3 * k + 1) / 2) as usize * delta;
        if e1 > len {
            break;
        }
        out.push((e1, sign));
        if e2 <= len {
            out.push((e2, sign));
        }
        k += 1;
    }
    out.sort_unstable();
    out
}

/// P(q^d)^r to q^len via g_n = (1/n) sum_j ((r+1) j - n) P_j g_{n-j}.
fn power_series<T: Acc>(delta: usize, r: i64, len: usize) -> Option<Vec<T>> {
    let p = euler_product_support(delta, len);
    let mut g = vec![T::acc_zero(); len + 1];
    g[0] = T::acc_one();
    for n in 1..=len {
        let mut acc = T::acc_zero();
        for &(j, pj) in &p[1..] {
            if j > n {
                break;
            }
            let c = ((r + 1).checked_mul(j as i64)?.checked_sub(n as i64)?).checked_mul(pj)?;
            if c != 0 {
                acc.add_scaled(c, &g[n - j])?;
            }
        }
        acc.div_exact(n as i64)?;
        g[n] = acc;
    }
    Some(g)
}

/// h * P(q^d)^{+-1}, repeated |r| times, in place.
fn apply_sparse<T: Acc>(h: &mut [T], delta: usize, r: i64) -> Option<()> {
    let len = h.len() - 1;
    let p = euler_product_support(delta, len);
    for _ in 0..r.unsigned_abs() {
        if r > 0 {
            for n in (1..=len).rev() {
                let mut acc = h[n].clone();
                for &(j, pj) in &p[1..] {
                    if j > n {
                        break;
                    }
                    acc.add_scaled(pj, &h[n - j])?;
                }
                h[n] = acc;
            }
        } else {
            for n in 1..=len {
                let mut acc = h[n].clone();
                for &(j, pj) in &p[1..] {
                    if j > n {
                        break;
                    }
                    acc.add_scaled(-pj, &h[n - j])?;
                }
                h[n] = acc;
            }
        }
    }
    Some(())
}

fn product_series<T: Acc>(spec: &[EtaFactor], len: usize) -> Option<Vec<T>> {
    if spec.is_empty() {
        let mut v = vec![T::acc_zero(); len + 1];
        v[0] = T::acc_one();
        return Some(v);
    }
    // the recurrence for the factor with the largest |r|, then sparse passes
    let lead = spec
        .iter()
        .enumerate()
        .max_by_key(|(_, f)| (f.exponent.unsigned_abs(), std::cmp::Reverse(f.delta)))
        .map(|(i, _)| i)
        .unwrap();
    let mut h = power_series::<T>(spec[lead].delta as usize, spec[lead].exponent, len)?;
    for (i, f) in spec.iter().enumerate() {
        if i != lead {
            apply_sparse(&mut h, f.delta as usize, f.exponent)?;
        }
    }
    Some(h)
}

/// prod eta(d tau)^{r_d} with coefficients a(0..=precision).
pub fn eta_quotient(spec: &[EtaFactor], precision: usize) -> Result<QExpansion, QError> {
    let spec = normalize(spec);
    let shift: i64 = spec.iter().map(|f| f.delta as i64 * f.exponent).sum();
    if shift.rem_euclid(24) != 0 {
        return Err(QError::Precondition(format!(
            "leading exponent {shift}/24 is not an integer"
        )));
    }
    if shift < 0 {
        return Err(QError::Precondition(format!(
            "leading exponent {} is negative",
            shift / 24
        )));
    }
    let weight = eta_weight(&spec)?;
    let level = eta_level(&spec);
    let character = eta_character(&spec, level)?;
    let shift = (shift / 24) as usize;
    let mut coeffs = vec![CyclotomicNumber::zero(); precision + 1];
    if shift <= precision {
        let len = precision - shift;
        let series: Vec<BigInt> = match product_series::<i128>(&spec, len) {
            Some(v) => v.into_iter().map(BigInt::from).collect(),
            None => product_series::<BigInt>(&spec, len).expect("BigInt path is total"),
        };
        for (i, c) in series.into_iter().enumerate() {
            coeffs[i + shift] = CyclotomicNumber::from_bigint(c);
        }
    }
    Ok(QExpansion::new(weight, level, character, coeffs))
}

/// B_0..=B_n with B_1 = -1/2.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        let mut s = BigRational::zero();
        let mut binom = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            s += bj * BigRational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// sigma_e(n) for 1 <= n <= len (index 0 unused).
pub fn divisor_power_sums(e: u32, len: usize) -> Vec<BigInt> {
    let mut s = vec![BigInt::zero(); len + 1];
    for d in 1..=len {
        let de = num_traits::pow(BigInt::from(d), e as usize);
        for m in (d..=len).step_by(d) {
            s[m] += &de;
        }
    }
    s
}

/// E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, level one.
pub fn eisenstein(k: i64, precision: usize) -> Result<QExpansion, QError> {
    if k < 4 || k % 2 != 0 {
        return Err(QError::Precondition(format!(
            "Eisenstein weight must be even and at least 4, got {k}"
        )));
    }
    let bk = bernoulli_numbers(k as usize).pop().unwrap();
    let c = -BigRational::from_integer(BigInt::from(2 * k)) / bk;
    let sig = divisor_power_sums((k - 1) as u32, precision);
    let mut coeffs = Vec::with_capacity(precision + 1);
    coeffs.push(CyclotomicNumber::one());
    for s in sig.into_iter().skip(1) {
        coeffs.push(CyclotomicNumber::from_rational(&c * BigRational::from_integer(s)));
    }
    Ok(QExpansion::new(k, 1, DirichletCharacter::principal(1), coeffs))
}

/// Integer coefficients as i64 when they fit, for cheap checks.
pub fn small_coeffs(f: &QExpansion) -> Option<Vec<i64>> {
    (0..=f.precision())
        .map(|n| f.coeff_integer(n).and_then(|b| b.to_i64()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force: multiply (1 - q^{dn}) factors one at a time with BigInt.
    fn naive(spec: &[EtaFactor], len: usize) -> Vec<BigInt> {
        let mut h = vec![BigInt::zero(); len + 1];
        h[0] = BigInt::one();
        for f in spec {
            for n in 1..=len / f.delta as usize {
                let step = n * f.delta as usize;
                for _ in 0..f.exponent.unsigned_abs() {
                    if f.exponent > 0 {
                        for i in (step..=len).rev() {
                            let t = h[i - step].clone();
                            h[i] -= t;
                        }
                    } else {
                        for i in step..=len {
                            let t = h[i - step].clone();
                            h[i] += t;
                        }
                    }
                }
            }
        }
        h
    }

    #[test]
    fn delta_first_coefficients() {
        let d = eta_quotient(&parse_eta_spec("1^24").unwrap(), 10).unwrap();
        let want = [0, 1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920];
        assert_eq!(small_coeffs(&d).unwrap(), want);
        assert_eq!(d.weight(), 12);
        assert_eq!(d.level(), 1);
        assert!(d.character().is_principal());
    }

    #[test]
    fn empty_spec_is_one() {
        let f = eta_quotient(&[], 5).unwrap();
        assert_eq!(small_coeffs(&f).unwrap(), [1, 0, 0, 0, 0, 0]);
        assert_eq!(f.weight(), 0);
    }

    #[test]
    fn eta4_six_is_supported_on_one_mod_four() {
        let f = eta_quotient(&parse_eta_spec("4^6").unwrap(), 200).unwrap();
        assert_eq!(f.weight(), 3);
        assert_eq!(f.level(), 16);
        assert_eq!(f.character().value(3), CyclotomicNumber::from_integer(-1));
        let c = small_coeffs(&f).unwrap();
        assert_eq!(c[1], 1);
        for (n, a) in c.iter().enumerate() {
            if n % 4 != 1 {
                assert_eq!(*a, 0, "n = {n}");
            }
        }
        assert_eq!(c[5], -6);
        assert_eq!(c[9], 9);
    }

    #[test]
    fn agrees_with_naive_products() {
        for s in ["1^24", "1^2,11^2", "2^12", "1^-4,2^10,4^-4", "1^3,7^3", "1^8,2^8", "3^8"] {
            let spec = normalize(&parse_eta_spec(s).unwrap());
            let shift: i64 = spec.iter().map(|f| f.delta as i64 * f.exponent).sum::<i64>() / 24;
            let f = eta_quotient(&spec, 120).unwrap();
            let want = naive(&spec, 120 - shift as usize);
            for (i, w) in want.iter().enumerate() {
                assert_eq!(&f.coeff_integer(i + shift as usize).unwrap(), w, "{s} at {i}");
            }
        }
    }

    #[test]
    fn bigint_fallback_matches() {
        let spec = parse_eta_spec("1^24").unwrap();
        let a = product_series::<i128>(&spec, 300).unwrap();
        let b = product_series::<BigInt>(&spec, 300).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| BigInt::from(*x) == *y));
        let spec = parse_eta_spec("1^2400").unwrap();
        assert!(product_series::<i128>(&spec, 40).is_none());
        let big = eta_quotient(&spec, 140).unwrap();
        assert_eq!(big.weight(), 1200);
        assert_eq!(big.coeff_integer(100), Some(BigInt::one()));
        assert_eq!(big.coeff_integer(101), Some(BigInt::from(-2400)));
        let want = naive(&spec, 40);
        assert_eq!(big.coeff_integer(140).as_ref(), Some(&want[40]));
    }

    #[test]
    fn level_and_character_rules() {
        assert_eq!(eta_level(&parse_eta_spec("1^2,11^2").unwrap()), 11);
        assert_eq!(eta_level(&parse_eta_spec("2^12").unwrap()), 4);
        assert_eq!(eta_level(&parse_eta_spec("1^8,2^8").unwrap()), 2);
        assert!(eta_quotient(&parse_eta_spec("1^1").unwrap(), 5).is_err());
        assert!(eta_quotient(&parse_eta_spec("1^3,3^3").unwrap(), 5).is_err());
        let f = eta_quotient(&parse_eta_spec("1^3,7^3").unwrap(), 5).unwrap();
        assert_eq!((f.weight(), f.level()), (3, 7));
        assert_eq!(f.character().value(3), CyclotomicNumber::from_integer(-1));
        assert_eq!(f.character().value(2), CyclotomicNumber::from_integer(1));
        assert!(eta_quotient(&parse_eta_spec("1^-24").unwrap(), 5).is_err());
        assert!(matches!(
            eta_quotient(&parse_eta_spec("8^3").unwrap(), 5),
            Err(QError::Precondition(_))
        ));
    }

    #[test]
    fn theta_squared_counts_sums_of_two_squares() {
        let f = eta_quotient(&parse_eta_spec("1^-4,2^10,4^-4").unwrap(), 100).unwrap();
        assert_eq!((f.weight(), f.level()), (1, 4));
        let c = small_coeffs(&f).unwrap();
        for n in 0..=100i64 {
            let r2 = (-10..=10i64)
                .flat_map(|a| (-10..=10i64).map(move |b| a * a + b * b))
                .filter(|&v| v == n)
                .count() as i64;
            assert_eq!(c[n as usize], r2, "n = {n}");
        }
    }

    #[test]
    fn eisenstein_values() {
        let e4 = eisenstein(4, 5).unwrap();
        assert_eq!(small_coeffs(&e4).unwrap(), [1, 240, 2160, 6720, 17520, 30240]);
        let e6 = eisenstein(6, 3).unwrap();
        assert_eq!(small_coeffs(&e6).unwrap(), [1, -504, -16632, -122976]);
        let e12 = eisenstein(12, 2).unwrap();
        assert_eq!(
            e12.coeff(1).as_rational().unwrap(),
            BigRational::new(BigInt::from(65520), BigInt::from(691))
        );
        assert!(eisenstein(5, 3).is_err());
        assert!(eisenstein(2, 3).is_err());
    }

    #[test]
    fn e4_cubed_minus_e6_squared_is_1728_delta() {
        let x = 30;
        let e4 = small_coeffs(&eisenstein(4, x).unwrap()).unwrap();
        let e6 = small_coeffs(&eisenstein(6, x).unwrap()).unwrap();
        let d = small_coeffs(&eta_quotient(&parse_eta_spec("1^24").unwrap(), x).unwrap()).unwrap();
        let mul = |a: &[i64], b: &[i64]| -> Vec<i128> {
            (0..=x)
                .map(|n| (0..=n).map(|i| a[i] as i128 * b[n - i] as i128).sum())
                .collect()
        };
        let e4sq = mul(&e4, &e4);
        let e4cube: Vec<i128> = (0..=x)
            .map(|n| (0..=n).map(|i| e4sq[i] * e4[n - i] as i128).sum())
            .collect();
        let e6sq = mul(&e6, &e6);
        for n in 0..=x {
            assert_eq!(e4cube[n] - e6sq[n], 1728 * d[n] as i128);
        }
    }
}
