//! Finite field arithmetic over GF(p^k) using log/antilog tables.
//!
//! Elements are stored as dense indices: index 0 is the zero element and
//! index `i >= 1` is `α^(i-1)` for the primitive root `α` of the modulus.
//! Point labels of the projective geometry therefore coincide with
//! exponents of `α`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field size.
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

/// Polynomial over GF(p), coefficients lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Polynomial {
    coefficients: Vec<u32>,
    p: u32,
}

impl Polynomial {
    /// Builds a polynomial, reducing coefficients mod `p` and trimming
    /// leading zeros.
    pub fn new(p: u32, coefficients: impl Into<Vec<u32>>) -> Self {
        let mut coefficients: Vec<u32> = coefficients.into().into_iter().map(|c| c % p).collect();
        while coefficients.last() == Some(&0) {
            coefficients.pop();
        }
        Polynomial { coefficients, p }
    }

    pub fn coefficients(&self) -> &[u32] {
        &self.coefficients
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coefficients.last() == Some(&1)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficients.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (deg, &c) in self.coefficients.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let coef = if c == 1 && deg > 0 { String::new() } else { c.to_string() };
            match deg {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{coef}x")?,
                _ => write!(f, "{coef}x^{deg}")?,
            }
        }
        Ok(())
    }
}

/// Field element as a dense index (0 = zero, i = α^(i-1)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Elem(pub u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Exponent of α, if nonzero.
    pub fn log(self) -> Option<u32> {
        self.0.checked_sub(1)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors in ascending order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// If `n = p^s` for a prime `p`, returns `(p, s)`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    let factors = prime_factors(n);
    if factors.len() != 1 {
        return None;
    }
    let p = factors[0];
    let mut s = 0;
    let mut m = n;
    while m > 1 {
        m /= p;
        s += 1;
    }
    Some((p, s))
}

fn checked_order(p: u32, k: u32) -> Result<u64> {
    if !is_prime(p as u64) {
        return Err(Error::NotPrime(p as u64));
    }
    if k == 0 {
        return Err(Error::domain("extension degree must be at least 1"));
    }
    let order = (p as u64)
        .checked_pow(k)
        .filter(|&o| o <= MAX_FIELD_ORDER)
        .ok_or(Error::Capacity { p, k })?;
    Ok(order)
}

// Dense polynomial helpers over GF(p), lowest degree first, used for the
// primitivity search before any tables exist.

fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let k = modulus.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    // modulus is monic: reduce from the top.
    for deg in (k..prod.len()).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        for (j, &m) in modulus.iter().enumerate() {
            let idx = deg - k + j;
            prod[idx] = (prod[idx] + (p as u64 - c) * m as u64) % p as u64;
        }
    }
    prod.truncate(k);
    prod.into_iter().map(|c| c as u32).collect()
}

fn x_pow_mod(e: u64, modulus: &[u32], p: u32) -> Vec<u32> {
    let k = modulus.len() - 1;
    let mut result = vec![0u32; k];
    result[0] = 1 % p;
    let mut base = vec![0u32; k];
    if k == 1 {
        // x mod (x + c) = -c
        base[0] = (p - modulus[0] % p) % p;
    } else {
        base[1] = 1;
    }
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &base, modulus, p);
        }
        base = poly_mulmod(&base, &base, modulus, p);
        e >>= 1;
    }
    result
}

fn is_one(v: &[u32]) -> bool {
    v.first() == Some(&1) && v[1..].iter().all(|&c| c == 0)
}

/// Order test for the root of a monic polynomial: `x` has multiplicative
/// order exactly `p^k - 1` modulo `f`. This also implies irreducibility,
/// since a reducible modulus has fewer than `p^k - 1` units.
fn root_is_primitive(coeffs: &[u32], p: u32, order: u64) -> bool {
    if coeffs[0] == 0 {
        return false;
    }
    let n = order - 1;
    if !is_one(&x_pow_mod(n, coeffs, p)) {
        return false;
    }
    prime_factors(n)
        .into_iter()
        .all(|r| !is_one(&x_pow_mod(n / r, coeffs, p)))
}

/// Smallest monic primitive polynomial of degree `k` over GF(p).
///
/// Candidates are ordered by their coefficient vector read from the
/// highest degree down, so x^3+x+1 precedes x^3+x^2+1.
pub fn find_primitive_polynomial(p: u32, k: u32) -> Result<Polynomial> {
    let order = checked_order(p, k)?;
    let k = k as usize;
    for v in 0..order {
        let mut coeffs = vec![0u32; k + 1];
        let mut rest = v;
        for c in coeffs.iter_mut().take(k) {
            *c = (rest % p as u64) as u32;
            rest /= p as u64;
        }
        coeffs[k] = 1;
        if root_is_primitive(&coeffs, p, order) {
            return Ok(Polynomial::new(p, coeffs));
        }
    }
    Err(Error::Internal(format!("no primitive polynomial of degree {k} over GF({p})")))
}

/// GF(p^k) with log/antilog tables.
#[derive(Debug, Clone)]
pub struct FiniteField {
    p: u32,
    k: u32,
    modulus: Polynomial,
    /// antilog[i] = coefficient-vector code of α^i, for i in [0, p^k - 1).
    antilog: Vec<u32>,
    /// log[code] = i with α^i = code; entry 0 is unused.
    log: Vec<u32>,
}

impl FiniteField {
    /// Builds the tables for GF(p^k) modulo `modulus`, rejecting moduli whose
    /// root does not generate every nonzero element.
    pub fn build(p: u32, k: u32, modulus: Polynomial) -> Result<Self> {
        let order = checked_order(p, k)?;
        if modulus.modulus() != p || modulus.degree() != Some(k as usize) || !modulus.is_monic() {
            return Err(Error::NotPrimitive {
                poly: modulus.to_string(),
                p,
                reason: format!("expected a monic polynomial of degree {k} over GF({p})"),
            });
        }
        let n = (order - 1) as usize;
        let k_us = k as usize;
        let coeffs = modulus.coefficients();
        let pw: Vec<u32> = (0..k_us).map(|i| p.pow(i as u32)).collect();

        let mut antilog = Vec::with_capacity(n);
        let mut log = vec![u32::MAX; order as usize];
        // Current power as a coefficient vector.
        let mut cur = vec![0u32; k_us];
        cur[0] = 1;
        for i in 0..n {
            let code: u32 = cur.iter().zip(&pw).map(|(c, w)| c * w).sum();
            if log[code as usize] != u32::MAX || code == 0 {
                return Err(Error::NotPrimitive {
                    poly: modulus.to_string(),
                    p,
                    reason: format!("root has order {i}, expected {n}"),
                });
            }
            log[code as usize] = i as u32;
            antilog.push(code);
            // cur *= x, then reduce x^k = -(c_0 + ... + c_{k-1} x^{k-1})
            let top = cur[k_us - 1];
            cur.rotate_right(1);
            cur[0] = 0;
            for j in 0..k_us {
                let sub = (top as u64 * coeffs[j] as u64 % p as u64) as u32;
                cur[j] = (cur[j] + p - sub) % p;
            }
        }
        if !is_one(&cur) {
            return Err(Error::NotPrimitive {
                poly: modulus.to_string(),
                p,
                reason: format!("α^{n} != 1"),
            });
        }
        Ok(FiniteField {
            p,
            k,
            modulus,
            antilog,
            log,
        })
    }

    /// Builds GF(p^k) with the smallest primitive polynomial.
    pub fn with_default_modulus(p: u32, k: u32) -> Result<Self> {
        let modulus = find_primitive_polynomial(p, k)?;
        Self::build(p, k, modulus)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> &Polynomial {
        &self.modulus
    }

    /// Number of elements, p^k.
    pub fn order(&self) -> u32 {
        self.log.len() as u32
    }

    /// Size of the multiplicative group, p^k - 1.
    pub fn group_order(&self) -> u32 {
        self.antilog.len() as u32
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.order()).map(Elem)
    }

    pub fn alpha_pow(&self, e: u64) -> Elem {
        Elem((e % self.group_order() as u64) as u32 + 1)
    }

    fn check(&self, a: Elem) -> Result<()> {
        if a.0 >= self.order() {
            return Err(Error::domain(format!(
                "element index {} outside GF({}^{})",
                a.0, self.p, self.k
            )));
        }
        Ok(())
    }

    /// Coefficient-vector code (Σ c_i p^i) of an element.
    pub fn to_code(&self, a: Elem) -> u32 {
        match a.log() {
            None => 0,
            Some(i) => self.antilog[i as usize],
        }
    }

    pub fn from_code(&self, code: u32) -> Elem {
        if code == 0 {
            Elem::ZERO
        } else {
            Elem(self.log[code as usize] + 1)
        }
    }

    /// Coefficient vector of an element in the polynomial basis, lowest first.
    pub fn to_vector(&self, a: Elem) -> Vec<u32> {
        let mut code = self.to_code(a);
        (0..self.k)
            .map(|_| {
                let c = code % self.p;
                code /= self.p;
                c
            })
            .collect()
    }

    fn combine(&self, a: Elem, b: Elem, sign: u32) -> Elem {
        let (mut x, mut y) = (self.to_code(a), self.to_code(b));
        let mut code = 0;
        let mut w = 1;
        for _ in 0..self.k {
            let (cx, cy) = (x % self.p, y % self.p);
            code += ((cx + sign * cy) % self.p) * w;
            x /= self.p;
            y /= self.p;
            w *= self.p;
        }
        self.from_code(code)
    }

    pub fn add(&self, a: Elem, b: Elem) -> Result<Elem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.combine(a, b, 1))
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Result<Elem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.combine(a, b, self.p - 1))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Result<Elem> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (a.log(), b.log()) {
            (Some(i), Some(j)) => {
                let n = self.group_order() as u64;
                Elem(((i as u64 + j as u64) % n) as u32 + 1)
            }
            _ => Elem::ZERO,
        })
    }

    pub fn pow(&self, a: Elem, e: u64) -> Result<Elem> {
        self.check(a)?;
        Ok(match a.log() {
            None if e == 0 => Elem::ONE,
            None => Elem::ZERO,
            Some(i) => {
                let n = self.group_order() as u64;
                Elem(((i as u64 % n) * (e % n) % n) as u32 + 1)
            }
        })
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        self.check(a)?;
        match a.log() {
            None => Err(Error::domain("inverse of zero")),
            Some(i) => {
                let n = self.group_order();
                Ok(Elem((n - i) % n + 1))
            }
        }
    }

    fn subfield_degree(&self, q: u32) -> Result<u32> {
        let (qp, s) = prime_power(q as u64)
            .ok_or_else(|| Error::domain(format!("subfield order {q} is not a prime power")))?;
        if qp != self.p as u64 || self.k % s != 0 {
            return Err(Error::domain(format!(
                "GF({q}) is not a subfield of GF({}^{})",
                self.p, self.k
            )));
        }
        Ok(s)
    }

    /// True if `a` lies in the subfield with `q` elements.
    pub fn in_subfield(&self, a: Elem, q: u32) -> Result<bool> {
        self.check(a)?;
        self.subfield_degree(q)?;
        Ok(match a.log() {
            None => true,
            Some(i) => i % (self.group_order() / (q - 1)) == 0,
        })
    }

    /// Tr(e) = e + e^q + ... + e^(q^(m-1)) from this field to GF(q),
    /// m = [GF(p^k) : GF(q)]. The result lies in the subfield.
    pub fn trace_to_subfield(&self, e: Elem, q: u32) -> Result<Elem> {
        self.check(e)?;
        let s = self.subfield_degree(q)?;
        let m = self.k / s;
        let mut acc = Elem::ZERO;
        let mut exp = 1u64;
        for _ in 0..m {
            acc = self.combine(acc, self.pow(e, exp)?, 1);
            exp *= q as u64;
        }
        Ok(acc)
    }
}
