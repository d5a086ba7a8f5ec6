//! Exact scalars: rationals, rationals with a symbolic infinitesimal, and
//! the generalized binomial coefficients used by the wall-crossing formulas.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub type Rat = BigRational;

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rat {
    Rat::from(BigInt::from(p))
}

/// Parse "p/q" or "p".
pub fn rat_from_str(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rat::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().ok()?;
            Some(Rat::from(p))
        }
    }
}

pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// An exact rational together with the coefficient of a formal infinitesimal
/// `e > 0`: values `base + eps * e` ordered lexicographically.
///
/// This removes every magnitude-tuning knob from wall perturbations: two
/// polarizations on opposite sides of a hyperplane differ only in their `eps`
/// parts, so they straddle exactly the walls through the base point.
#[derive(Clone, PartialEq, Eq)]
pub struct PerturbedRational {
    pub base: Rat,
    pub eps: Rat,
}

impl PerturbedRational {
    pub fn new(base: Rat, eps: Rat) -> Self {
        PerturbedRational { base, eps }
    }

    pub fn from_rat(base: Rat) -> Self {
        PerturbedRational { base, eps: Rat::zero() }
    }

    pub fn from_int(k: i64) -> Self {
        Self::from_rat(rat_int(k))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.eps.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    pub fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    /// True when the value is an integer of the plain rational kind
    /// (no infinitesimal part and integral base).
    pub fn is_integer(&self) -> bool {
        self.eps.is_zero() && self.base.denom().is_one()
    }

    pub fn scale(&self, c: &Rat) -> Self {
        PerturbedRational { base: &self.base * c, eps: &self.eps * c }
    }
}

impl fmt::Debug for PerturbedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.eps.is_zero() {
            write!(f, "{}", rat_to_string(&self.base))
        } else if self.eps.is_positive() {
            write!(f, "{}+{}e", rat_to_string(&self.base), rat_to_string(&self.eps))
        } else {
            write!(f, "{}{}e", rat_to_string(&self.base), rat_to_string(&self.eps))
        }
    }
}

impl fmt::Display for PerturbedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl PartialOrd for PerturbedRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PerturbedRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.base.cmp(&other.base).then_with(|| self.eps.cmp(&other.eps))
    }
}

impl Add for &PerturbedRational {
    type Output = PerturbedRational;
    fn add(self, rhs: &PerturbedRational) -> PerturbedRational {
        PerturbedRational { base: &self.base + &rhs.base, eps: &self.eps + &rhs.eps }
    }
}

impl Add for PerturbedRational {
    type Output = PerturbedRational;
    fn add(self, rhs: PerturbedRational) -> PerturbedRational {
        &self + &rhs
    }
}

impl AddAssign<&PerturbedRational> for PerturbedRational {
    fn add_assign(&mut self, rhs: &PerturbedRational) {
        self.base += &rhs.base;
        self.eps += &rhs.eps;
    }
}

impl Sub for &PerturbedRational {
    type Output = PerturbedRational;
    fn sub(self, rhs: &PerturbedRational) -> PerturbedRational {
        PerturbedRational { base: &self.base - &rhs.base, eps: &self.eps - &rhs.eps }
    }
}

impl Sub for PerturbedRational {
    type Output = PerturbedRational;
    fn sub(self, rhs: PerturbedRational) -> PerturbedRational {
        &self - &rhs
    }
}

impl Neg for PerturbedRational {
    type Output = PerturbedRational;
    fn neg(self) -> PerturbedRational {
        PerturbedRational { base: -self.base, eps: -self.eps }
    }
}

impl Mul<&Rat> for &PerturbedRational {
    type Output = PerturbedRational;
    fn mul(self, rhs: &Rat) -> PerturbedRational {
        self.scale(rhs)
    }
}

/// Generalized binomial coefficient: `binom(a, b) = 0` for `b < 0`, and
/// `a (a-1) ... (a-b+1) / b!` otherwise. Negative tops are allowed.
pub fn binom(a: i64, b: i64) -> i128 {
    if b < 0 {
        return 0;
    }
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for i in 0..b as i128 {
        num *= a as i128 - i;
        den *= i + 1;
    }
    num / den
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product::<u64>().max(1)
}

/// All tuples of `len` nonnegative integers summing to `total`.
pub fn compositions(total: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; len];
    fn rec(total: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if idx + 1 == cur.len() {
            cur[idx] = total;
            out.push(cur.clone());
            return;
        }
        for v in 0..=total {
            cur[idx] = v;
            rec(total - v, idx + 1, cur, out);
        }
    }
    if len == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, 0, &mut cur, &mut out);
    out
}
