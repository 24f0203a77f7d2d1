//! Arithmetic in GF(q) for q = p^e <= 256.
//!
//! Elements use the canonical integer encoding `c0 + c1*p + ... + c_{e-1}*p^{e-1}`
//! for the polynomial `c0 + c1*X + ...` reduced modulo a fixed Conway polynomial.
//! All operations are table driven; a field is built once per `(p, e)` and then
//! shared behind an `Arc`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

/// Errors raised by field construction and element arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{e} exceeds 256")]
    TooLarge { p: u32, e: u32 },
    #[error("no reduction polynomial shipped for GF({p}^{e})")]
    MissingPolynomial { p: u32, e: u32 },
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u32, q: u32 },
    #[error("elements belong to different fields: GF({left}) and GF({right})")]
    MixedFields { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
}

/// Conway polynomials for every non-prime order <= 256, lowest coefficient
/// first, monic leading coefficient included.
const CONWAY: &[(u32, u32, &[u8])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 1, 1, 0, 1]),
    (2, 7, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (2, 8, &[1, 0, 1, 1, 1, 0, 0, 0, 1]),
    (3, 2, &[2, 2, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 0, 0, 2, 1]),
    (3, 5, &[1, 2, 0, 0, 0, 1]),
    (5, 2, &[2, 4, 1]),
    (5, 3, &[3, 3, 0, 1]),
    (7, 2, &[3, 6, 1]),
    (11, 2, &[2, 7, 1]),
    (13, 2, &[2, 12, 1]),
];

/// The shipped reduction polynomial for GF(p^e), if any (e >= 2).
pub fn conway_polynomial(p: u32, e: u32) -> Option<&'static [u8]> {
    CONWAY
        .iter()
        .find(|(pp, ee, _)| *pp == p && *ee == e)
        .map(|(_, _, c)| *c)
}

fn is_prime(n: u32) -> bool {
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

struct FieldInner {
    p: u32,
    e: u32,
    q: u32,
    poly: Vec<u8>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    exp: Vec<u8>,
    log: Vec<u8>,
}

/// A finite field GF(p^e). Cloning is cheap.
#[derive(Clone)]
pub struct Field(Arc<FieldInner>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.e == other.0.e
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.0.q)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.e == 1 {
            write!(f, "GF({})", self.0.p)
        } else {
            write!(f, "GF({}^{})", self.0.p, self.0.e)
        }
    }
}

fn cache() -> &'static Mutex<HashMap<(u32, u32), Field>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Field>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Field {
    /// Builds GF(p^e). Fields are memoized, so repeated calls are cheap.
    pub fn new(p: u32, e: u32) -> Result<Field, GfError> {
        if e < 1 {
            return Err(GfError::ZeroDegree);
        }
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        let q = (p as u64).checked_pow(e).unwrap_or(u64::MAX);
        if q > 256 {
            return Err(GfError::TooLarge { p, e });
        }
        if let Some(f) = cache().lock().expect("field cache poisoned").get(&(p, e)) {
            return Ok(f.clone());
        }
        let field = Self::build(p, e, q as u32)?;
        cache()
            .lock()
            .expect("field cache poisoned")
            .insert((p, e), field.clone());
        Ok(field)
    }

    /// GF(q) from its order; `q` must be a prime power <= 256.
    pub fn with_order(q: u32) -> Result<Field, GfError> {
        if q < 2 {
            return Err(GfError::NotPrime(q));
        }
        let p = (2..=q).find(|d| q % d == 0).unwrap_or(q);
        let mut e = 0;
        let mut rest = q;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if rest != 1 {
            return Err(GfError::NotPrime(q));
        }
        Field::new(p, e)
    }

    /// GF(2), the dominant experimental case.
    pub fn binary() -> Field {
        Field::new(2, 1).expect("GF(2) always exists")
    }

    fn build(p: u32, e: u32, q: u32) -> Result<Field, GfError> {
        let poly: Vec<u8> = if e == 1 {
            vec![0, 1]
        } else {
            conway_polynomial(p, e)
                .ok_or(GfError::MissingPolynomial { p, e })?
                .to_vec()
        };
        let qs = q as usize;
        let digits = |mut v: u32| -> Vec<u32> {
            let mut d = vec![0; e as usize];
            for slot in d.iter_mut() {
                *slot = v % p;
                v /= p;
            }
            d
        };
        let encode = |d: &[u32]| -> u8 {
            let mut v = 0u32;
            for &c in d.iter().rev() {
                v = v * p + c;
            }
            v as u8
        };

        let mut add = vec![0u8; qs * qs];
        let mut mul = vec![0u8; qs * qs];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[(a * q + b) as usize] = encode(&sum);

                // schoolbook product, then reduce by the monic modulus
                let mut prod = vec![0u32; 2 * e as usize];
                for (i, x) in da.iter().enumerate() {
                    for (j, y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                for deg in (e as usize..prod.len()).rev() {
                    let c = prod[deg];
                    if c == 0 {
                        continue;
                    }
                    prod[deg] = 0;
                    for (i, &pc) in poly.iter().enumerate().take(e as usize) {
                        let sub = (c * pc as u32) % p;
                        let idx = deg - e as usize + i;
                        prod[idx] = (prod[idx] + p - sub) % p;
                    }
                }
                mul[(a * q + b) as usize] = encode(&prod[..e as usize]);
            }
        }

        let mut neg = vec![0u8; qs];
        let mut inv = vec![0u8; qs];
        for a in 0..qs {
            for b in 0..qs {
                if add[a * qs + b] == 0 {
                    neg[a] = b as u8;
                }
                if a != 0 && mul[a * qs + b] == 1 {
                    inv[a] = b as u8;
                }
            }
        }

        // smallest generator of the multiplicative group
        let mut exp = vec![0u8; qs - 1];
        let mut log = vec![0u8; qs];
        'gen: for g in 1..qs {
            let mut x = 1usize;
            for (i, slot) in exp.iter_mut().enumerate() {
                if i > 0 && x == 1 {
                    continue 'gen;
                }
                *slot = x as u8;
                x = mul[x * qs + g] as usize;
            }
            if x == 1 {
                break;
            }
        }
        for (i, &v) in exp.iter().enumerate() {
            log[v as usize] = i as u8;
        }

        Ok(Field(Arc::new(FieldInner {
            p,
            e,
            q,
            poly,
            add,
            mul,
            neg,
            inv,
            exp,
            log,
        })))
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn e(&self) -> u32 {
        self.0.e
    }

    pub fn order(&self) -> u32 {
        self.0.q
    }

    pub fn is_binary(&self) -> bool {
        self.0.q == 2
    }

    /// Coefficients of the reduction polynomial, constant term first.
    /// For prime fields this is `X`.
    pub fn reduction_poly(&self) -> &[u8] {
        &self.0.poly
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.0.add[a as usize * self.0.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.0.neg[b as usize])
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.0.neg[a as usize]
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.0.mul[a as usize * self.0.q as usize + b as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: u8) -> Option<u8> {
        if a == 0 {
            None
        } else {
            Some(self.0.inv[a as usize])
        }
    }

    pub fn pow(&self, a: u8, n: u64) -> u8 {
        if n == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.0.q - 1) as u64;
        let l = self.0.log[a as usize] as u64;
        self.0.exp[((l * (n % order)) % order) as usize]
    }

    /// The generator used for the exp/log tables.
    pub fn generator(&self) -> u8 {
        if self.0.q == 2 {
            1
        } else {
            self.0.exp[1]
        }
    }

    pub fn exp_table(&self) -> &[u8] {
        &self.0.exp
    }

    pub fn log_table(&self) -> &[u8] {
        &self.0.log
    }

    /// Polynomial coefficients of an encoded element.
    pub fn decode(&self, value: u8) -> Result<Vec<u8>, GfError> {
        self.check(value as u32)?;
        let mut v = value as u32;
        let mut out = Vec::with_capacity(self.0.e as usize);
        for _ in 0..self.0.e {
            out.push((v % self.0.p) as u8);
            v /= self.0.p;
        }
        Ok(out)
    }

    /// Inverse of [`Field::decode`].
    pub fn encode(&self, coeffs: &[u8]) -> Result<u8, GfError> {
        if coeffs.len() != self.0.e as usize || coeffs.iter().any(|&c| c as u32 >= self.0.p) {
            return Err(GfError::OutOfRange {
                value: coeffs.iter().map(|&c| c as u32).max().unwrap_or(0),
                q: self.0.q,
            });
        }
        let mut v = 0u32;
        for &c in coeffs.iter().rev() {
            v = v * self.0.p + c as u32;
        }
        Ok(v as u8)
    }

    fn check(&self, value: u32) -> Result<(), GfError> {
        if value >= self.0.q {
            Err(GfError::OutOfRange {
                value,
                q: self.0.q,
            })
        } else {
            Ok(())
        }
    }

    /// Wraps an encoding as an element of this field.
    pub fn elem(&self, value: u32) -> Result<Elem, GfError> {
        self.check(value)?;
        Ok(Elem {
            field: self.clone(),
            value: value as u8,
        })
    }

    /// Nonzero elements `1..q`, the set F*.
    pub fn nonzero(&self) -> impl Iterator<Item = u8> {
        (1..self.0.q).map(|v| v as u8)
    }
}

/// A field element bound to its field.
#[derive(Clone, PartialEq, Eq)]
pub struct Elem {
    field: Field,
    value: u8,
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.value, self.field)
    }
}

impl Elem {
    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same(&self, other: &Elem) -> Result<(), GfError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(GfError::MixedFields {
                left: self.field.order(),
                right: other.field.order(),
            })
        }
    }

    fn with(&self, value: u8) -> Elem {
        Elem {
            field: self.field.clone(),
            value,
        }
    }

    pub fn add(&self, other: &Elem) -> Result<Elem, GfError> {
        self.same(other)?;
        Ok(self.with(self.field.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &Elem) -> Result<Elem, GfError> {
        self.same(other)?;
        Ok(self.with(self.field.sub(self.value, other.value)))
    }

    pub fn neg(&self) -> Elem {
        self.with(self.field.neg(self.value))
    }

    pub fn mul(&self, other: &Elem) -> Result<Elem, GfError> {
        self.same(other)?;
        Ok(self.with(self.field.mul(self.value, other.value)))
    }

    pub fn inv(&self) -> Result<Elem, GfError> {
        self.field
            .inv(self.value)
            .map(|v| self.with(v))
            .ok_or(GfError::DivisionByZero)
    }

    pub fn div(&self, other: &Elem) -> Result<Elem, GfError> {
        self.same(other)?;
        let inv = other.inv()?;
        self.mul(&inv)
    }

    pub fn pow(&self, n: u64) -> Elem {
        self.with(self.field.pow(self.value, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_fields() -> Vec<Field> {
        let mut out = Vec::new();
        for q in 2..=256u32 {
            if let Ok(f) = Field::with_order(q) {
                out.push(f);
            }
        }
        out
    }

    #[test]
    fn make_errors() {
        assert_eq!(Field::new(4, 1).unwrap_err(), GfError::NotPrime(4));
        assert_eq!(Field::new(2, 0).unwrap_err(), GfError::ZeroDegree);
        assert_eq!(
            Field::new(2, 9).unwrap_err(),
            GfError::TooLarge { p: 2, e: 9 }
        );
        assert!(Field::new(17, 2).is_err());
        assert!(Field::with_order(6).is_err());
    }

    #[test]
    fn every_prime_power_up_to_256_exists() {
        let orders: Vec<u32> = all_fields().iter().map(|f| f.order()).collect();
        assert!(orders.contains(&256));
        assert!(orders.contains(&243));
        assert!(orders.contains(&169));
        assert!(orders.contains(&251));
        assert_eq!(orders.len(), 54 + 16);
    }

    fn poly_eval_roots(p: u32, poly: &[u8]) -> Vec<u32> {
        (0..p)
            .filter(|&x| {
                let mut acc = 0u32;
                for &c in poly.iter().rev() {
                    acc = (acc * x + c as u32) % p;
                }
                acc == 0
            })
            .collect()
    }

    #[test]
    fn gf4_reduction_is_the_unique_irreducible_quadratic() {
        // exhaustive: monic quadratics over GF(2) with no root
        let irreducible: Vec<Vec<u8>> = (0..4u8)
            .map(|v| vec![v & 1, (v >> 1) & 1, 1])
            .filter(|poly| poly_eval_roots(2, poly).is_empty())
            .collect();
        assert_eq!(irreducible, vec![vec![1, 1, 1]]);
        assert_eq!(Field::new(2, 2).unwrap().reduction_poly(), &[1, 1, 1]);
    }

    #[test]
    fn shipped_polynomials_are_primitive() {
        // X must generate the multiplicative group, which also implies irreducibility
        for f in all_fields().iter().filter(|f| f.e() >= 2) {
            let x = f.p() as u8; // encoding of X
            let mut acc = 1u8;
            let mut order = 0;
            loop {
                acc = f.mul(acc, x);
                order += 1;
                if acc == 1 {
                    break;
                }
                assert!(order < 300);
            }
            assert_eq!(order, f.order() - 1, "{f}");
        }
    }

    #[test]
    fn small_products() {
        let gf2 = Field::binary();
        assert_eq!(gf2.mul(1, 1), 1);
        let gf5 = Field::new(5, 1).unwrap();
        assert_eq!(gf5.mul(2, 3), 1);
        assert_eq!(gf5.inv(2), Some(3));
        assert_eq!(gf2.inv(1), Some(1));
        // X * X = X + 1 in GF(4)
        let gf4 = Field::new(2, 2).unwrap();
        assert_eq!(gf4.mul(2, 2), 3);
        assert_eq!(gf4.inv(2), Some(3));
    }

    #[test]
    fn gf4_product_matches_polynomial_oracle() {
        // independent: multiply as GF(2)[X] bit polynomials, reduce by X^2+X+1
        let gf4 = Field::new(2, 2).unwrap();
        for a in 0..4u8 {
            for b in 0..4u8 {
                let mut prod = 0u8;
                for i in 0..2 {
                    if (b >> i) & 1 == 1 {
                        prod ^= a << i;
                    }
                }
                if prod & 4 != 0 {
                    prod ^= 0b111;
                }
                assert_eq!(gf4.mul(a, b), prod);
            }
        }
    }

    #[test]
    fn inverse_by_exhaustive_search() {
        for f in all_fields() {
            for a in 1..f.order() as u16 {
                let a = a as u8;
                let found: Vec<u8> = (0..f.order() as u16)
                    .map(|b| b as u8)
                    .filter(|&b| f.mul(a, b) == 1)
                    .collect();
                assert_eq!(found, vec![f.inv(a).unwrap()]);
                assert_eq!(f.pow(a, (f.order() - 1) as u64), 1);
            }
            assert_eq!(f.inv(0), None);
        }
    }

    #[test]
    fn axioms_exhaustive_small_fields() {
        for f in all_fields().into_iter().filter(|f| f.order() <= 16) {
            let q = f.order() as u8;
            for a in 0..q {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn encoding_round_trip() {
        for f in all_fields() {
            for v in 0..f.order() {
                let d = f.decode(v as u8).unwrap();
                assert_eq!(f.encode(&d).unwrap() as u32, v);
            }
        }
    }

    #[test]
    fn elems_reject_mixed_fields() {
        let a = Field::new(3, 1).unwrap().elem(2).unwrap();
        let b = Field::new(5, 1).unwrap().elem(2).unwrap();
        assert!(matches!(a.mul(&b), Err(GfError::MixedFields { .. })));
        assert_eq!(a.inv().unwrap().value(), 2);
        let zero = Field::new(3, 1).unwrap().elem(0).unwrap();
        assert_eq!(zero.inv(), Err(GfError::DivisionByZero));
        assert!(Field::binary().elem(2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn axioms_sampled_large_fields(qi in 0usize..70, a: u8, b: u8, c: u8) {
                let fields = all_fields();
                let f = &fields[qi % fields.len()];
                let q = f.order() as u16;
                let (a, b, c) = ((a as u16 % q) as u8, (b as u16 % q) as u8, (c as u16 % q) as u8);
                prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                prop_assert_eq!(f.sub(f.add(a, b), b), a);
                if a != 0 {
                    prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }
        }
    }
}
