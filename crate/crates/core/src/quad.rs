//! Exact arithmetic in a real quadratic field Q(√D).
//!
//! A value is `(p + q√D) / r` with integers `p`, `q`, `r > 0` and
//! `gcd(p, q, r) = 1`. Values with `q = 0` carry `D = 0` so that plain
//! rationals mix freely with any field. Small values live in machine
//! integers and overflow into big integers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(i64, i64, i64),
    Big(BigInt, BigInt, BigInt),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadNumber {
    v: Repr,
    d: u32,
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn small(p: i128, q: i128, r: i128, d: u32) -> QuadNumber {
    assert!(r != 0, "division by zero");
    let (mut p, mut q, mut r) = if r < 0 { (-p, -q, -r) } else { (p, q, r) };
    let g = p.gcd(&q).gcd(&r);
    if g > 1 {
        p /= g;
        q /= g;
        r /= g;
    }
    let d = if q == 0 { 0 } else { d };
    match (i64::try_from(p), i64::try_from(q), i64::try_from(r)) {
        (Ok(p), Ok(q), Ok(r)) => QuadNumber { v: Repr::Small(p, q, r), d },
        _ => QuadNumber { v: Repr::Big(BigInt::from(p), BigInt::from(q), BigInt::from(r)), d },
    }
}

fn big(p: BigInt, q: BigInt, r: BigInt, d: u32) -> QuadNumber {
    assert!(!r.is_zero(), "division by zero");
    let (mut p, mut q, mut r) = if r.is_negative() { (-p, -q, -r) } else { (p, q, r) };
    let g = p.gcd(&q).gcd(&r);
    if !g.is_one() {
        p /= &g;
        q /= &g;
        r /= &g;
    }
    let d = if q.is_zero() { 0 } else { d };
    match (p.to_i64(), q.to_i64(), r.to_i64()) {
        (Some(p), Some(q), Some(r)) => QuadNumber { v: Repr::Small(p, q, r), d },
        _ => QuadNumber { v: Repr::Big(p, q, r), d },
    }
}

impl QuadNumber {
    /// `a + b√D`.
    pub fn new(a: BigRational, b: BigRational, d: u32) -> Self {
        if b.is_zero() {
            return Self::from_rational(a);
        }
        assert!(d > 1, "irrational part needs D > 1");
        let r = a.denom().lcm(b.denom());
        let p = a.numer() * (&r / a.denom());
        let q = b.numer() * (&r / b.denom());
        big(p, q, r, d)
    }

    pub fn zero() -> Self {
        QuadNumber { v: Repr::Small(0, 0, 1), d: 0 }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        QuadNumber { v: Repr::Small(n, 0, 1), d: 0 }
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        small(p as i128, 0, q as i128, 0)
    }

    pub fn from_rational(a: BigRational) -> Self {
        big(a.numer().clone(), BigInt::zero(), a.denom().clone(), 0)
    }

    pub fn from_bigint(n: BigInt) -> Self {
        big(n, BigInt::zero(), BigInt::one(), 0)
    }

    /// The exact value of a finite double.
    pub fn from_f64(x: f64) -> Self {
        Self::from_rational(rational_from_f64(x))
    }

    /// `√D` itself.
    pub fn sqrt_d(d: u32) -> Self {
        assert!(d > 1, "irrational part needs D > 1");
        QuadNumber { v: Repr::Small(0, 1, 1), d }
    }

    fn big_parts(&self) -> (BigInt, BigInt, BigInt) {
        match &self.v {
            Repr::Small(p, q, r) => (BigInt::from(*p), BigInt::from(*q), BigInt::from(*r)),
            Repr::Big(p, q, r) => (p.clone(), q.clone(), r.clone()),
        }
    }

    /// `a` in `a + b√D`.
    pub fn rational_part(&self) -> BigRational {
        let (p, _, r) = self.big_parts();
        BigRational::new(p, r)
    }

    /// `b` in `a + b√D`.
    pub fn irrational_part(&self) -> BigRational {
        let (_, q, r) = self.big_parts();
        BigRational::new(q, r)
    }

    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.v, Repr::Small(0, 0, _))
    }

    pub fn is_rational(&self) -> bool {
        self.d == 0
    }

    fn join_d(&self, other: &Self) -> u32 {
        match (self.d, other.d) {
            (0, d) | (d, 0) => d,
            (x, y) => {
                assert_eq!(x, y, "mixing different quadratic fields");
                x
            }
        }
    }

    pub fn conj(&self) -> Self {
        let v = match &self.v {
            Repr::Small(p, q, r) if *q != i64::MIN => Repr::Small(*p, -*q, *r),
            _ => {
                let (p, q, r) = self.big_parts();
                return big(p, -q, r, self.d);
            }
        };
        QuadNumber { v, d: self.d }
    }

    /// Field norm `a² − D b²`.
    pub fn norm(&self) -> BigRational {
        let (p, q, r) = self.big_parts();
        BigRational::new(&p * &p - &q * &q * BigInt::from(self.d), &r * &r)
    }

    /// Nearest double. When the two parts have opposite signs the exact norm
    /// is divided by the conjugate, so no cancellation occurs.
    pub fn to_f64(&self) -> f64 {
        let sd = (self.d as f64).sqrt();
        match &self.v {
            Repr::Small(p, q, r) => {
                let (pf, qf) = (*p as f64, *q as f64 * sd);
                if *q == 0 || *p == 0 || (*p > 0) == (*q > 0) {
                    return (pf + qf) / *r as f64;
                }
                let n = ((*q as i128) * (*q as i128)).checked_mul(self.d as i128).and_then(|x| ((*p as i128) * (*p as i128)).checked_sub(x));
                match n {
                    Some(n) => n as f64 / (pf - qf) / *r as f64,
                    None => self.norm().to_f64().unwrap_or(f64::NAN) / ((pf - qf) / *r as f64),
                }
            }
            Repr::Big(p, q, r) => {
                let a = BigRational::new(p.clone(), r.clone()).to_f64().unwrap_or(f64::NAN);
                if q.is_zero() {
                    return a;
                }
                let b = BigRational::new(q.clone(), r.clone()).to_f64().unwrap_or(f64::NAN) * sd;
                if p.is_zero() || p.sign() == q.sign() {
                    return a + b;
                }
                self.norm().to_f64().unwrap_or(f64::NAN) / (a - b)
            }
        }
    }

    /// Exact sign, with a floating-point shortcut when the value is far from zero.
    pub fn signum(&self) -> i32 {
        match &self.v {
            Repr::Small(p, q, _) => {
                if *q == 0 {
                    return p.signum() as i32;
                }
                let pf = *p as f64;
                let qf = *q as f64 * (self.d as f64).sqrt();
                let v = pf + qf;
                if v.abs() > 1e-9 * (pf.abs() + qf.abs()) {
                    return if v > 0.0 { 1 } else { -1 };
                }
                let (sp, sq) = (p.signum() as i32, q.signum() as i32);
                if sp == sq || sp == 0 {
                    return if sq == 0 { sp } else { sq };
                }
                let lhs = (*p as i128) * (*p as i128);
                match ((*q as i128) * (*q as i128)).checked_mul(self.d as i128) {
                    Some(rhs) => match lhs.cmp(&rhs) {
                        Ordering::Equal => 0,
                        Ordering::Greater => sp,
                        Ordering::Less => sq,
                    },
                    None => self.big_signum(),
                }
            }
            Repr::Big(p, q, _) => {
                if q.is_zero() {
                    return sign_of(p);
                }
                let pf = p.to_f64().unwrap_or(f64::NAN);
                let qf = q.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt();
                let v = pf + qf;
                let scale = pf.abs() + qf.abs();
                if v.is_finite() && scale.is_finite() && v.abs() > 1e-9 * scale {
                    return if v > 0.0 { 1 } else { -1 };
                }
                self.big_signum()
            }
        }
    }

    fn big_signum(&self) -> i32 {
        let (p, q, _) = self.big_parts();
        let (sp, sq) = (sign_of(&p), sign_of(&q));
        if sp == sq || sp == 0 {
            return if sq == 0 { sp } else { sq };
        }
        if sq == 0 {
            return sp;
        }
        match (&p * &p).cmp(&(&q * &q * BigInt::from(self.d))) {
            Ordering::Equal => 0,
            Ordering::Greater => sp,
            Ordering::Less => sq,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        if let Repr::Small(p, q, r) = self.v {
            let (p, q, r) = (p as i128, q as i128, r as i128);
            if let Some(n) = (q * q).checked_mul(self.d as i128).and_then(|x| (p * p).checked_sub(x)) {
                // r (p - q√D) / n
                if let (Some(a), Some(b)) = (r.checked_mul(p), r.checked_mul(-q)) {
                    return small(a, b, n, self.d);
                }
            }
        }
        let (p, q, r) = self.big_parts();
        let n = &p * &p - &q * &q * BigInt::from(self.d);
        big(&r * &p, -(&r * &q), n, self.d)
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        if let Repr::Small(p, 0, r) = self.v {
            return BigInt::from(Integer::div_floor(&p, &r));
        }
        let guess = self.to_f64().floor();
        let mut k = if guess.is_finite() && guess.abs() < 1e15 {
            BigInt::from(guess as i64)
        } else {
            let (p, q, r) = self.big_parts();
            let bound = q.abs() * BigInt::from((self.d as i64 + 1).max(2));
            (p - bound).div_floor(&r)
        };
        loop {
            let kq = QuadNumber::from_bigint(k.clone());
            if (self - &kq).signum() < 0 {
                k -= 1;
                continue;
            }
            let k1 = QuadNumber::from_bigint(&k + 1);
            if (self - &k1).signum() >= 0 {
                k += 1;
                continue;
            }
            return k;
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Self {
        self - &QuadNumber::from_bigint(self.floor())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = QuadNumber::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Integer power, negative exponents allowed.
    pub fn powi(&self, e: i64) -> Self {
        if e >= 0 {
            self.pow(e as u32)
        } else {
            self.recip().pow((-e) as u32)
        }
    }
}

fn sign_of(r: &BigInt) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for QuadNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).signum() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        }
    }
}

impl fmt::Debug for QuadNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QuadNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.rational_part();
        let b = self.irrational_part();
        if b.is_zero() {
            write!(f, "{}", a)
        } else if a.is_zero() {
            write!(f, "({})√{}", b, self.d)
        } else {
            write!(f, "{}+({})√{}", a, b, self.d)
        }
    }
}

impl<'a> Add<&'a QuadNumber> for &'a QuadNumber {
    type Output = QuadNumber;
    fn add(self, o: &QuadNumber) -> QuadNumber {
        let d = self.join_d(o);
        if let (Repr::Small(p1, q1, r1), Repr::Small(p2, q2, r2)) = (&self.v, &o.v) {
            let (p1, q1, r1, p2, q2, r2) = (*p1 as i128, *q1 as i128, *r1 as i128, *p2 as i128, *q2 as i128, *r2 as i128);
            if r1 == r2 {
                return small(p1 + p2, q1 + q2, r1, d);
            }
            return small(p1 * r2 + p2 * r1, q1 * r2 + q2 * r1, r1 * r2, d);
        }
        let (p1, q1, r1) = self.big_parts();
        let (p2, q2, r2) = o.big_parts();
        big(&p1 * &r2 + &p2 * &r1, &q1 * &r2 + &q2 * &r1, r1 * r2, d)
    }
}

impl<'a> Sub<&'a QuadNumber> for &'a QuadNumber {
    type Output = QuadNumber;
    fn sub(self, o: &QuadNumber) -> QuadNumber {
        self + &(-o)
    }
}

impl<'a> Mul<&'a QuadNumber> for &'a QuadNumber {
    type Output = QuadNumber;
    fn mul(self, o: &QuadNumber) -> QuadNumber {
        let d = self.join_d(o);
        if let (Repr::Small(p1, q1, r1), Repr::Small(p2, q2, r2)) = (&self.v, &o.v) {
            let (p1, q1, r1, p2, q2, r2) = (*p1 as i128, *q1 as i128, *r1 as i128, *p2 as i128, *q2 as i128, *r2 as i128);
            let p = (q1 * q2).checked_mul(d as i128).and_then(|x| x.checked_add(p1 * p2));
            let q = (p1 * q2).checked_add(q1 * p2);
            if let (Some(p), Some(q)) = (p, q) {
                return small(p, q, r1 * r2, d);
            }
        }
        let (p1, q1, r1) = self.big_parts();
        let (p2, q2, r2) = o.big_parts();
        let p = &p1 * &p2 + &q1 * &q2 * BigInt::from(d);
        let q = &p1 * &q2 + &q1 * &p2;
        big(p, q, r1 * r2, d)
    }
}

impl<'a> Div<&'a QuadNumber> for &'a QuadNumber {
    type Output = QuadNumber;
    fn div(self, o: &QuadNumber) -> QuadNumber {
        self * &o.recip()
    }
}

impl Neg for QuadNumber {
    type Output = QuadNumber;
    fn neg(self) -> QuadNumber {
        -&self
    }
}

impl Neg for &QuadNumber {
    type Output = QuadNumber;
    fn neg(self) -> QuadNumber {
        let v = match &self.v {
            Repr::Small(p, q, r) if *p != i64::MIN && *q != i64::MIN => Repr::Small(-*p, -*q, *r),
            _ => {
                let (p, q, r) = self.big_parts();
                return big(-p, -q, r, self.d);
            }
        };
        QuadNumber { v, d: self.d }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<QuadNumber> for QuadNumber {
            type Output = QuadNumber;
            fn $m(self, o: QuadNumber) -> QuadNumber {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a QuadNumber> for QuadNumber {
            type Output = QuadNumber;
            fn $m(self, o: &QuadNumber) -> QuadNumber {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<QuadNumber> for &'a QuadNumber {
            type Output = QuadNumber;
            fn $m(self, o: QuadNumber) -> QuadNumber {
                self.$m(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Zero for QuadNumber {
    fn zero() -> Self {
        QuadNumber::zero()
    }
    fn is_zero(&self) -> bool {
        QuadNumber::is_zero(self)
    }
}

impl One for QuadNumber {
    fn one() -> Self {
        QuadNumber::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi() -> QuadNumber {
        (QuadNumber::one() + QuadNumber::sqrt_d(5)) / QuadNumber::from_int(2)
    }

    #[test]
    fn golden_ratio_identity() {
        let p = phi();
        assert_eq!(&p * &p, &p + &QuadNumber::one());
        assert_eq!(p.recip(), &p - &QuadNumber::one());
    }

    #[test]
    fn signs_near_zero_are_exact() {
        // 161/72 is a convergent of √5; the difference is about 1e-5.
        let x = QuadNumber::sqrt_d(5) - QuadNumber::from_ratio(161, 72);
        assert_eq!(x.big_signum(), x.signum());
        let f = QuadNumber::from_ratio(5_702_887, 2_550_409) - QuadNumber::sqrt_d(5);
        assert_eq!(f.signum(), f.big_signum());
        assert!(f.signum() != 0);
    }

    #[test]
    fn floor_and_frac() {
        let p = phi();
        assert_eq!(p.floor(), BigInt::from(1));
        assert_eq!((-p.clone()).floor(), BigInt::from(-2));
        let f = p.pow(20).frac();
        assert!(f >= QuadNumber::zero() && f < QuadNumber::one());
    }

    #[test]
    fn overflow_into_big_and_back() {
        let p = phi();
        let up = p.pow(200);
        assert!(matches!(up.v, Repr::Big(..)));
        let back = &up * &p.powi(-200);
        assert_eq!(back, QuadNumber::one());
        assert!(matches!(back.v, Repr::Small(..)));
    }

    #[test]
    fn tiny_powers_convert_accurately() {
        let p = phi();
        let t = p.powi(-120);
        let expect = ((1.0 + 5f64.sqrt()) / 2.0).powi(-120);
        assert!((t.to_f64() / expect - 1.0).abs() < 1e-12);
    }
}
