//! Second moments of normalized coefficients and their predicted slopes.
//!
//! Partial sums are accumulated in f64 with Neumaier compensation; the
//! inputs a(n)^2 / n^(k-1) are not integral, so exact sums would carry
//! denominators of size prod n^(k-1).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qexp::{rational_to_f64, QError, QExpansion};
use super::sieve::Constraints;
use crate::arith;
use crate::characters::DirichletCharacter;
use crate::cyclotomic::int_pow_rational;

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub dilation: u64,
    pub constraints: Constraints,
    pub grid: Vec<u64>,
    /// S(X) = sum_{n <= X admitted} |a'(r n)|^2 at each grid point.
    pub sums: Vec<f64>,
    /// Least squares slope of S against X through the origin.
    pub slope: f64,
    /// ||S - slope X|| / ||S||.
    pub residual: f64,
    /// Relative change of S(X)/X between the last two grid points.
    pub drift: f64,
}

pub fn second_moment(
    f: &QExpansion,
    grid: &[u64],
    c: &Constraints,
    dilation: u64,
) -> Result<MomentReport, QError> {
    let mut grid: Vec<u64> = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() || grid[0] == 0 {
        return Err(QError::Precondition("moment grid needs positive X values".into()));
    }
    if dilation == 0 {
        return Err(QError::Precondition("dilation must be positive".into()));
    }
    let xmax = *grid.last().unwrap() as usize;
    f.require_precision(xmax * dilation as usize)?;
    let ok = c.table(xmax);
    let terms: Vec<f64> = (1..=xmax)
        .into_par_iter()
        .map(|n| if ok[n] { f.normalized_abs_sq(n * dilation as usize) } else { 0.0 })
        .collect();
    let mut acc = NeumaierSum::default();
    let mut sums = Vec::with_capacity(grid.len());
    let mut next = 0;
    for (i, t) in terms.iter().enumerate() {
        acc.add(*t);
        while next < grid.len() && grid[next] as usize == i + 1 {
            sums.push(acc.value());
            next += 1;
        }
    }
    let (slope, residual) = fit_through_origin(&grid, &sums);
    let drift = if grid.len() >= 2 {
        let l = grid.len();
        let a = sums[l - 1] / grid[l - 1] as f64;
        let b = sums[l - 2] / grid[l - 2] as f64;
        if a == 0.0 { 0.0 } else { ((a - b) / a).abs() }
    } else {
        0.0
    };
    Ok(MomentReport {
        dilation,
        constraints: c.clone(),
        grid,
        sums,
        slope,
        residual,
        drift,
    })
}

fn fit_through_origin(xs: &[u64], ys: &[f64]) -> (f64, f64) {
    let sxx: f64 = xs.iter().map(|&x| (x as f64).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, y)| x as f64 * y).sum();
    let slope = sxy / sxx;
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    if syy == 0.0 {
        return (slope, 0.0);
    }
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, y)| (y - slope * x as f64).powi(2))
        .sum();
    (slope, (rss / syy).sqrt())
}

/// Hecke eigenvalues at one prime; lambda_p2 defaults to lambda_p^2 - chi(p) p^(k-1).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEigen {
    pub lambda_p: BigRational,
    pub lambda_p2: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPrediction {
    pub r: u64,
    /// Predicted A_{f,r} / A_f.
    pub ratio: BigRational,
    /// Per prime power (p, e, factor).
    pub factors: Vec<(u64, u32, BigRational)>,
    /// 19^omega(r).
    pub bound: u64,
    pub within_bound: bool,
}

impl RatioPrediction {
    pub fn ratio_f64(&self) -> f64 {
        rational_to_f64(&self.ratio)
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Ratio A_{f,r}/A_f for r with prime-power parts p or p^2, (r, N) = 1.
///
/// r^(1-k) <U_r f, U_r f>_{Nr} / <f, f>_{Nr}: the level-Nr index factors
/// cancel and the Petersson ratio is the local factor of U_p or U_{p^2}.
/// When r is a square the 19^omega bound is enforced.
pub fn predicted_moment_ratio(
    k: i64,
    level: u64,
    chi: &DirichletCharacter,
    eigen: &BTreeMap<u64, LocalEigen>,
    r: u64,
) -> Result<RatioPrediction, QError> {
    if r == 0 {
        return Err(QError::Precondition("r must be positive".into()));
    }
    if arith::gcd(r as i64, level as i64) != 1 {
        return Err(QError::Precondition(format!("r = {r} is not coprime to the level {level}")));
    }
    let mut ratio = BigRational::one();
    let mut factors = Vec::new();
    let fac = arith::factor(r);
    let square = fac.iter().all(|&(_, e)| e == 2);
    for &(p, e) in &fac {
        let data = eigen
            .get(&p)
            .ok_or_else(|| QError::Precondition(format!("no eigenvalue supplied at p = {p}")))?;
        let l1 = &data.lambda_p;
        let l1sq = l1 * l1;
        let pp1 = rat(p as i64 + 1);
        let pk2 = int_pow_rational(p, k - 2);
        let factor = match e {
            1 => {
                let inner = &pk2 + &l1sq * rat(p as i64 - 1) / &pp1;
                int_pow_rational(p, 1 - k) * inner
            }
            2 => {
                let l2 = match &data.lambda_p2 {
                    Some(v) => v.clone(),
                    None => {
                        let c = chi.value(p as i64).as_rational().ok_or_else(|| {
                            QError::Precondition(format!(
                                "chi({p}) is not real; supply lambda(p^2)"
                            ))
                        })?;
                        &l1sq - c * int_pow_rational(p, k - 1)
                    }
                };
                let inner = &l2 * &l2 + &pk2 * &l1sq - rat(2) * &l2 * &l1sq / &pp1;
                int_pow_rational(p, 2 - 2 * k) * inner
            }
            _ => {
                return Err(QError::Precondition(format!(
                    "r = {r} has p^{e} with e > 2 at p = {p}"
                )))
            }
        };
        ratio *= &factor;
        factors.push((p, e, factor));
    }
    let bound = 19u64.pow(fac.len() as u32);
    let within_bound = ratio <= rat(bound as i64);
    if square && !within_bound {
        return Err(QError::Bound(format!(
            "predicted ratio {} exceeds 19^omega = {bound} at r = {r}",
            rational_to_f64(&ratio)
        )));
    }
    Ok(RatioPrediction {
        r,
        ratio,
        factors,
        bound,
        within_bound,
    })
}

/// Upper bound for e^x, x >= 0: Taylor polynomial plus a 3 x^n/n! tail on
/// [0, 1], and e^x = (e^(x/m))^m beyond.
pub fn exp_upper(x: &BigRational, terms: u32) -> BigRational {
    assert!(!x.is_negative());
    if *x > BigRational::one() {
        let m = x.ceil().to_integer();
        let e = num_traits::ToPrimitive::to_usize(&m).expect("exponent fits");
        return num_traits::pow(exp_upper(&(x / BigRational::from_integer(m)), terms), e);
    }
    let mut sum = BigRational::zero();
    let mut t = BigRational::one();
    for j in 0..terms {
        sum += &t;
        t = t * x / rat(j as i64 + 1);
    }
    sum + t * rat(3)
}

fn product_tree(v: &[BigInt]) -> BigInt {
    match v.len() {
        0 => BigInt::one(),
        1 => v[0].clone(),
        n => product_tree(&v[..n / 2]) * product_tree(&v[n / 2..]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// Primes excluded from the product: p < cutoff and p | N.
    pub sieve_primes: Vec<u64>,
    pub truncation: u64,
    /// 5/2 - 2 prod (1 + 19/p^2), with the tail replaced by e^(19/Y).
    pub estimate: f64,
    /// The exact rational lower bound is > 0.
    pub positive: bool,
    /// e^(19/cutoff) < 5/4, checked exactly.
    pub tail_below_five_quarters: bool,
}

/// The constant 5/2 - 2 prod_{p not | M} (1 + 19/p^2) for M = primes below `cutoff`
/// and primes of N, with primes up to Y explicit and e^(19/Y) for the rest.
pub fn lower_bound_constant(level: u64, cutoff: u64, truncation: u64) -> LowerBoundReport {
    let mut sieve_primes: Vec<u64> = arith::primes_below(cutoff);
    for (p, _) in arith::factor(level.max(1)) {
        if !sieve_primes.contains(&p) {
            sieve_primes.push(p);
        }
    }
    sieve_primes.sort_unstable();
    let primes: Vec<u64> = arith::primes_below(truncation + 1)
        .into_iter()
        .filter(|p| *p >= cutoff && level % p != 0)
        .collect();
    let num: Vec<BigInt> = primes.iter().map(|&p| BigInt::from(p * p + 19)).collect();
    let den: Vec<BigInt> = primes.iter().map(|&p| BigInt::from(p * p)).collect();
    let (num, den) = rayon::join(|| product_tree(&num), || product_tree(&den));
    let tail = exp_upper(&BigRational::new(BigInt::from(19), BigInt::from(truncation)), 24);
    // 5/2 - 2 (num/den) tail > 0  <=>  5 den tail_d > 4 num tail_n
    let lhs = BigInt::from(5) * &den * tail.denom();
    let rhs = BigInt::from(4) * &num * tail.numer();
    let positive = lhs > rhs;
    let log_prod: f64 = primes
        .iter()
        .map(|&p| (19.0 / (p as f64).powi(2)).ln_1p())
        .sum::<f64>()
        + 19.0 / truncation as f64;
    let estimate = 2.5 - 2.0 * log_prod.exp();
    let t87 = exp_upper(&BigRational::new(BigInt::from(19), BigInt::from(cutoff)), 24);
    let tail_below_five_quarters = t87 < BigRational::new(BigInt::from(5), BigInt::from(4));
    LowerBoundReport {
        sieve_primes,
        truncation,
        estimate,
        positive,
        tail_below_five_quarters,
    }
}

/// 19^omega(r) r^-2 summed over square-free r >= 2 coprime to M, to the truncation.
pub fn sieve_tail_sum(m_primes: &[u64], truncation: u64) -> f64 {
    let prod: f64 = arith::primes_below(truncation + 1)
        .into_iter()
        .filter(|p| !m_primes.contains(p))
        .map(|p| 1.0 + 19.0 / (p as f64).powi(2))
        .product();
    prod - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::eta::{eta_quotient, parse_eta_spec};
    use num_traits::ToPrimitive;

    fn to_f64_lossy(x: &BigRational) -> f64 {
        x.to_f64().unwrap_or(f64::NAN)
    }

    fn delta(x: usize) -> QExpansion {
        eta_quotient(&parse_eta_spec("1^24").unwrap(), x).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn delta_eigen(p: u64, tau: i64) -> BTreeMap<u64, LocalEigen> {
        BTreeMap::from([(p, LocalEigen { lambda_p: rat(tau), lambda_p2: None })])
    }

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn zero_form_and_monotone() {
        let z = QExpansion::zero(12, 1, DirichletCharacter::principal(1), 100);
        let r = second_moment(&z, &[10, 50, 100], &Constraints::none(), 1).unwrap();
        assert!(r.sums.iter().all(|s| *s == 0.0));
        let d = delta(2000);
        let r = second_moment(&d, &[2000, 100, 500, 1000], &Constraints::none(), 1).unwrap();
        assert_eq!(r.grid, [100, 500, 1000, 2000]);
        assert!(r.sums.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.slope > 0.0);
    }

    #[test]
    fn first_terms_by_hand() {
        let d = delta(10);
        let r = second_moment(&d, &[1, 2, 3], &Constraints::none(), 1).unwrap();
        let s2 = 1.0 + 576.0 / 2048.0;
        assert!((r.sums[0] - 1.0).abs() < 1e-15);
        assert!((r.sums[1] - s2).abs() < 1e-12);
        let s3 = s2 + 252.0f64.powi(2) / 3f64.powi(11);
        assert!((r.sums[2] - s3).abs() < 1e-12);
        let dil = second_moment(&d, &[5], &Constraints::none(), 2).unwrap();
        let direct: f64 = (1..=5).map(|n| d.normalized_abs_sq(2 * n)).sum();
        assert!((dil.sums[0] - direct).abs() < 1e-12);
    }

    #[test]
    fn precision_error_names_requirement() {
        let d = delta(100);
        let e = second_moment(&d, &[60], &Constraints::none(), 2).unwrap_err();
        assert_eq!(e, QError::Precision { have: 100, need: 120 });
        assert!(e.to_string().contains("120"));
    }

    #[test]
    fn delta_ratio_at_two() {
        let chi = DirichletCharacter::principal(1);
        let r1 = predicted_moment_ratio(12, 1, &chi, &BTreeMap::new(), 1).unwrap();
        assert_eq!(r1.ratio, BigRational::one());
        let p = predicted_moment_ratio(12, 1, &chi, &delta_eigen(2, -24), 2).unwrap();
        assert_eq!(p.ratio, q(19, 32));
        let p4 = predicted_moment_ratio(12, 1, &chi, &delta_eigen(2, -24), 4).unwrap();
        // independent: 4 (1 - (1 + x lambda'^2) / F(x)) at x = 1/2
        let l = 576.0 / 2048.0;
        let x = 0.5;
        let big_f = (1.0 + x) / ((1.0 - x) * (1.0 - (l - 2.0) * x + x * x));
        let want = 4.0 * (1.0 - (1.0 + x * l) / big_f);
        assert!((p4.ratio_f64() - want).abs() < 1e-12);
        assert!(predicted_moment_ratio(12, 2, &chi, &delta_eigen(2, -24), 2).is_err());
        assert!(predicted_moment_ratio(12, 1, &chi, &delta_eigen(2, -24), 8).is_err());
        assert!(predicted_moment_ratio(12, 1, &chi, &delta_eigen(2, -24), 3).is_err());
    }

    #[test]
    fn local_factor_matches_mass_fraction() {
        // p (mass fraction of p | n) from the local Rankin-Selberg series
        for (p, lam) in [(3u64, 252i64), (5, 4830), (7, -16744)] {
            let chi = DirichletCharacter::principal(1);
            let got = predicted_moment_ratio(12, 1, &chi, &delta_eigen(p, lam), p).unwrap();
            let l = (lam as f64).powi(2) / (p as f64).powi(11);
            let x = 1.0 / p as f64;
            let big_f = (1.0 + x) / ((1.0 - x) * (1.0 - (l - 2.0) * x + x * x));
            let want = p as f64 * (1.0 - 1.0 / big_f);
            assert!((got.ratio_f64() - want).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn bound_for_synthetic_deligne_eigenvalues() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let chi = DirichletCharacter::principal(1);
        let k = 12;
        for s in [2u64, 3, 5, 6, 10] {
            for _ in 0..200 {
                let mut eig = BTreeMap::new();
                for (p, _) in arith::factor(s) {
                    // |lambda| <= 2 p^((k-1)/2), sampled as a rational below the bound
                    let cap = 2.0 * (p as f64).powf((k as f64 - 1.0) / 2.0);
                    let v = rng.gen_range(-cap..=cap).trunc() as i64;
                    eig.insert(p, LocalEigen { lambda_p: rat(v), lambda_p2: None });
                }
                let r = predicted_moment_ratio(k, 1, &chi, &eig, s * s).unwrap();
                assert!(r.within_bound);
                assert!(r.ratio <= rat(r.bound as i64));
            }
        }
    }

    #[test]
    fn bound_violation_is_an_error() {
        let chi = DirichletCharacter::principal(1);
        let eig = BTreeMap::from([(
            2u64,
            LocalEigen { lambda_p: rat(1 << 20), lambda_p2: None },
        )]);
        assert!(matches!(
            predicted_moment_ratio(12, 1, &chi, &eig, 4),
            Err(QError::Bound(_))
        ));
    }

    #[test]
    fn exp_upper_is_an_upper_bound() {
        for (n, d) in [(1, 2), (19, 87), (1, 1), (19, 1_000_000)] {
            let x = q(n, d);
            let u = to_f64_lossy(&exp_upper(&x, 24));
            let e = (n as f64 / d as f64).exp();
            assert!(u >= e && u - e < 1e-12);
        }
    }

    #[test]
    fn lower_bound_small_truncation() {
        let r = lower_bound_constant(1, 87, 10_000);
        assert!(r.positive);
        assert!(r.tail_below_five_quarters);
        assert!(r.estimate > 0.0 && r.estimate < 0.5);
        assert_eq!(r.sieve_primes.len(), 23);
        // the remark's sum is below 1/4
        assert!(sieve_tail_sum(&r.sieve_primes, 10_000) < 0.25);
        // without the sieve the constant is negative
        assert!(!lower_bound_constant(1, 2, 10_000).positive);
    }
}
