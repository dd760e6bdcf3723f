//! Binary extension fields GF(2^t), t <= 64.
//!
//! Elements are polynomial residues packed into `u64` (bit i = coefficient of
//! x^i). Addition is xor; multiplication is shift-and-reduce against a fixed
//! degree-t modulus. `Field::new` picks the canonical modulus for its degree:
//! the irreducible polynomial of minimal weight, ties broken by numerically
//! least bit pattern (constant term forced for t = 1, automatic otherwise).

use crate::{Error, Result};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Field {
    t: u32,
    /// Modulus with the leading x^t bit stripped; full modulus fits u128.
    low: u64,
}

impl Field {
    /// Field with the canonical modulus for degree `t`.
    pub fn new(t: u32) -> Result<Field> {
        if t == 0 || t > 64 {
            return Err(Error::InvalidArgument(format!("field degree {t} out of range 1..=64")));
        }
        Ok(Field { t, low: canonical_low(t) })
    }

    /// Field with an explicit modulus bit pattern (bit t must be set).
    pub fn with_modulus(t: u32, modulus: u128) -> Result<Field> {
        if t == 0 || t > 64 {
            return Err(Error::InvalidArgument(format!("field degree {t} out of range 1..=64")));
        }
        if modulus >> t != 1 {
            return Err(Error::InvalidArgument(format!(
                "modulus {modulus:#x} does not have degree {t}"
            )));
        }
        if !is_irreducible(modulus, t) {
            return Err(Error::InvalidArgument(format!("modulus {modulus:#x} is reducible")));
        }
        Ok(Field { t, low: (modulus & ((1u128 << t) - 1)) as u64 })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Field size q = 2^t.
    pub fn order(&self) -> u128 {
        1u128 << self.t
    }

    /// Full modulus bit pattern, including the x^t term.
    pub fn modulus(&self) -> u128 {
        (1u128 << self.t) | self.low as u128
    }

    pub fn contains(&self, a: u64) -> bool {
        self.t == 64 || a < (1u64 << self.t)
    }

    pub fn check_elem(&self, a: u64) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{a} is not an element of GF(2^{})", self.t)))
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.contains(a) && self.contains(b));
        a ^ b
    }

    /// Subtraction; coincides with addition in characteristic 2 but is kept
    /// separate so call sites read like the algebra they implement.
    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, b)
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.contains(a) && self.contains(b));
        poly_mulmod(a, b, self.modulus(), self.t)
    }

    pub fn pow(&self, a: u64, mut e: u128) -> u64 {
        let mut base = a;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.order() - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Iterator over all field elements; only sensible for small t.
    pub fn elems(&self) -> impl Iterator<Item = u64> {
        assert!(self.t <= 24, "element iteration is for small fields");
        0..(1u64 << self.t)
    }
}

/// Carryless multiply of residues followed by reduction mod `modulus`.
fn poly_mulmod(a: u64, b: u64, modulus: u128, t: u32) -> u64 {
    let mut acc: u128 = 0;
    let a = a as u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    let mut d = 127 - acc.leading_zeros() as i64;
    while acc != 0 && d >= t as i64 {
        acc ^= modulus << (d - t as i64);
        if acc == 0 {
            break;
        }
        d = 127 - acc.leading_zeros() as i64;
    }
    acc as u64
}

fn poly_deg(a: u128) -> i64 {
    127 - a.leading_zeros() as i64
}

fn poly_rem(mut a: u128, g: u128) -> u128 {
    let dg = poly_deg(g);
    while a != 0 && poly_deg(a) >= dg {
        a ^= g << (poly_deg(a) - dg);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Irreducibility over F_2 via iterated Frobenius: f of degree t is
/// irreducible iff x^(2^t) = x mod f and gcd(x^(2^(t/p)) - x, f) = 1 for
/// every prime p dividing t.
pub fn is_irreducible(f: u128, t: u32) -> bool {
    debug_assert_eq!(f >> t, 1);
    if t == 1 {
        return true;
    }
    if f & 1 == 0 {
        return false; // divisible by x
    }
    let checkpoints: Vec<u32> = prime_factors(t).iter().map(|p| t / p).collect();
    let x = 2u64;
    let mut y = x;
    for k in 1..=t {
        y = poly_mulmod(y, y, f, t);
        if k < t && checkpoints.contains(&k) && poly_gcd(y as u128 ^ x as u128, f) != 1 {
            return false;
        }
    }
    y == x
}

/// Irreducibility by dividing against every polynomial of degree 1..=t/2.
/// Exponential in t; reference oracle for the fast test above.
pub fn is_irreducible_trial_division(f: u128, t: u32) -> bool {
    debug_assert_eq!(f >> t, 1);
    if t == 1 {
        return true;
    }
    for dg in 1..=t / 2 {
        for low in 0..(1u128 << dg) {
            let g = (1u128 << dg) | low;
            if poly_rem(f, g) == 0 {
                return false;
            }
        }
    }
    true
}

/// Canonical modulus search: minimal total weight, then minimal bit pattern.
/// The constant term is required so the residue ring has no nilpotents; for
/// t >= 2 that is forced by irreducibility anyway.
fn canonical_low(t: u32) -> u64 {
    static CACHE: OnceLock<Mutex<HashMap<u32, u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&low) = cache.lock().unwrap().get(&t) {
        return low;
    }
    let low = search_canonical_low(t);
    cache.lock().unwrap().insert(t, low);
    low
}

fn search_canonical_low(t: u32) -> u64 {
    if t == 1 {
        return 1; // x + 1
    }
    // Total weight is odd (even-weight polynomials vanish at 1), so the low
    // part carries an even number of bits, one of them the constant term.
    let mut w = 2u32;
    while w <= t {
        // Sub-pattern over positions 1..t-1 with w-1 bits, ascending.
        let mut c: u64 = ((1u64 << (w - 1)) - 1) << 1;
        let limit: u128 = 1u128 << t;
        while (c as u128) < limit {
            let lowbits = c | 1;
            if (lowbits as u128) < limit {
                let f = (1u128 << t) | lowbits as u128;
                if is_irreducible(f, t) {
                    return lowbits;
                }
            }
            c = gosper_next(c);
            if c == 0 {
                break;
            }
        }
        w += 2;
    }
    unreachable!("an irreducible polynomial exists for every degree");
}

/// Next-larger integer with the same popcount.
fn gosper_next(v: u64) -> u64 {
    if v == 0 {
        return 0;
    }
    let c = v & v.wrapping_neg();
    let r = v.wrapping_add(c);
    if r == 0 {
        return 0;
    }
    (((v ^ r) >> 2) / c) | r
}
