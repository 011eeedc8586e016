//! Normal ordering over the one-mode Heisenberg algebra.
//!
//! Operator polynomials in `Q`, `P` with `[Q, P] = i` are rewritten into
//! antistandard order (all `P` factors left of all `Q` factors). The
//! canonical basis monomial `P^m Q^k` matches the unknowns of the cubic
//! moment solver, which are exactly the antistandard expectations.
//!
//! Coefficients are exact Gaussian rationals for the symbolic identities and
//! plain complex floats when a polynomial is evaluated at numeric `(mu, nu)`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use num_rational::Rational64;

use crate::scalar::Real;
use crate::{Error, Result, MAX_ORDER};

/// Coefficient ring: needs ring ops plus the imaginary unit and exact-ish
/// division by small integers (for symmetrized averages).
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn i() -> Self;
    fn from_int(n: i64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div_int(&self, n: i64) -> Self;
    fn is_zero(&self) -> bool;
}

/// Exact coefficient: Gaussian rational.
pub type Exact = Complex<Rational64>;

impl Coeff for Exact {
    fn zero() -> Self {
        Complex::new(Rational64::from_integer(0), Rational64::from_integer(0))
    }
    fn one() -> Self {
        Complex::new(Rational64::from_integer(1), Rational64::from_integer(0))
    }
    fn i() -> Self {
        Complex::new(Rational64::from_integer(0), Rational64::from_integer(1))
    }
    fn from_int(n: i64) -> Self {
        Complex::new(Rational64::from_integer(n), Rational64::from_integer(0))
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_int(&self, n: i64) -> Self {
        let d = Rational64::from_integer(n);
        Complex::new(self.re / d, self.im / d)
    }
    fn is_zero(&self) -> bool {
        self.re.numer() == &0 && self.im.numer() == &0
    }
}

impl<T: Real> Coeff for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn one() -> Self {
        Complex::new(T::one(), T::zero())
    }
    fn i() -> Self {
        Complex::new(T::zero(), T::one())
    }
    fn from_int(n: i64) -> Self {
        Complex::new(T::from_f64(n as f64), T::zero())
    }
    fn add(&self, rhs: &Self) -> Self {
        *self + *rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        *self * *rhs
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn div_int(&self, n: i64) -> Self {
        *self / T::from_f64(n as f64)
    }
    fn is_zero(&self) -> bool {
        *self == <Self as Coeff>::zero()
    }
}

pub fn exact_to_complex<T: Real>(c: &Exact) -> Complex<T> {
    let r = |x: &Rational64| T::from_f64(*x.numer() as f64 / *x.denom() as f64);
    Complex::new(r(&c.re), r(&c.im))
}

/// One letter of an operator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    Q,
    P,
}

/// Antistandard basis monomial `P^m Q^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderedMonomial {
    /// power of P (left block)
    pub p: u32,
    /// power of Q (right block)
    pub q: u32,
}

impl OrderedMonomial {
    pub fn new(p: u32, q: u32) -> Self {
        Self { p, q }
    }
    pub fn degree(&self) -> u32 {
        self.p + self.q
    }
}

impl fmt::Display for OrderedMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.p, self.q) {
            (0, 0) => write!(f, "1"),
            _ => {
                let mut parts = Vec::new();
                match self.p {
                    0 => {}
                    1 => parts.push("P".to_string()),
                    m => parts.push(format!("P^{m}")),
                }
                match self.q {
                    0 => {}
                    1 => parts.push("Q".to_string()),
                    k => parts.push(format!("Q^{k}")),
                }
                write!(f, "{}", parts.join(" "))
            }
        }
    }
}

/// Finitely supported map monomial -> coefficient, kept free of zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPolynomial<C: Coeff> {
    terms: BTreeMap<OrderedMonomial, C>,
}

/// Exact-coefficient polynomial (symbolic identities).
pub type ExactPolynomial = OperatorPolynomial<Exact>;
/// Numeric polynomial over a real scalar.
pub type NumericPolynomial<T> = OperatorPolynomial<Complex<T>>;

impl<C: Coeff> Default for OperatorPolynomial<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> OperatorPolynomial<C> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.accumulate(OrderedMonomial::new(0, 0), c);
        p
    }

    pub fn monomial(m: OrderedMonomial, c: C) -> Self {
        let mut p = Self::zero();
        p.accumulate(m, c);
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OrderedMonomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: OrderedMonomial) -> C {
        self.terms.get(&m).cloned().unwrap_or_else(C::zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn accumulate(&mut self, m: OrderedMonomial, c: C) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(C::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.accumulate(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&C::one().neg()))
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero();
        for (m, v) in self.terms() {
            out.accumulate(*m, v.mul(c));
        }
        out
    }

    fn div_int(&self, n: i64) -> Self {
        let mut out = Self::zero();
        for (m, v) in self.terms() {
            out.accumulate(*m, v.div_int(n));
        }
        out
    }

    /// Right-multiply by a single letter, staying in antistandard form.
    /// `P^m Q^k * P = P^(m+1) Q^k + i k P^m Q^(k-1)` from `[Q^k, P] = i k Q^(k-1)`.
    pub fn mul_letter(&self, letter: Letter) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms() {
            match letter {
                Letter::Q => out.accumulate(OrderedMonomial::new(m.p, m.q + 1), c.clone()),
                Letter::P => {
                    out.accumulate(OrderedMonomial::new(m.p + 1, m.q), c.clone());
                    if m.q > 0 {
                        let corr = C::i().mul(&C::from_int(m.q as i64)).mul(c);
                        out.accumulate(OrderedMonomial::new(m.p, m.q - 1), corr);
                    }
                }
            }
        }
        out
    }

    /// Operator product, reduced to antistandard order.
    pub fn multiply(&self, rhs: &Self) -> Result<Self> {
        let deg = self.degree() + rhs.degree();
        if deg > MAX_ORDER {
            return Err(Error::DegreeOverflow(deg, MAX_ORDER));
        }
        let mut out = Self::zero();
        for (mb, cb) in rhs.terms() {
            // self * P^p Q^q: append letters on the right
            let mut part = self.clone();
            for _ in 0..mb.p {
                part = part.mul_letter(Letter::P);
            }
            for _ in 0..mb.q {
                part = part.mul_letter(Letter::Q);
            }
            for (m, c) in part.terms() {
                out.accumulate(*m, c.mul(cb));
            }
        }
        Ok(out)
    }
}

impl<C: Coeff> fmt::Display for OperatorPolynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let rendered: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| {
                if *m == OrderedMonomial::new(0, 0) {
                    format!("({c:?})")
                } else {
                    format!("({c:?}) {m}")
                }
            })
            .collect();
        write!(f, "{}", rendered.join(" + "))
    }
}

impl ExactPolynomial {
    pub fn to_numeric<T: Real>(&self) -> NumericPolynomial<T> {
        let mut out = NumericPolynomial::zero();
        for (m, c) in self.terms() {
            out.accumulate(*m, exact_to_complex(c));
        }
        out
    }
}

/// Rewrite an operator word (sequence of Q/P letters, leftmost first) into an
/// antistandard polynomial. The result equals the word as an operator.
pub fn reduce_to_antistandard(word: &[Letter]) -> Result<ExactPolynomial> {
    if word.len() as u32 > MAX_ORDER {
        return Err(Error::DegreeOverflow(word.len() as u32, MAX_ORDER));
    }
    let mut poly = ExactPolynomial::constant(Exact::one());
    for &letter in word {
        poly = poly.mul_letter(letter);
    }
    Ok(poly)
}

/// `(mu Q + nu P)^n` fully reduced to antistandard order.
pub fn expand_quadrature_power<T: Real>(mu: T, nu: T, n: u32) -> Result<NumericPolynomial<T>> {
    if n > MAX_ORDER {
        return Err(Error::DegreeOverflow(n, MAX_ORDER));
    }
    let cmu = Complex::new(mu, T::zero());
    let cnu = Complex::new(nu, T::zero());
    let mut poly = NumericPolynomial::constant(Complex::new(T::one(), T::zero()));
    for _ in 0..n {
        let with_q = poly.mul_letter(Letter::Q).scale(&cmu);
        let with_p = poly.mul_letter(Letter::P).scale(&cnu);
        poly = with_q.add(&with_p);
    }
    Ok(poly)
}

fn words_with(p: u32, q: u32) -> Vec<Vec<Letter>> {
    if p == 0 && q == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    if p > 0 {
        for mut w in words_with(p - 1, q) {
            w.insert(0, Letter::P);
            out.push(w);
        }
    }
    if q > 0 {
        for mut w in words_with(p, q - 1) {
            w.insert(0, Letter::Q);
            out.push(w);
        }
    }
    out
}

/// Weyl-symmetrized product of `m` P's and `k` Q's: the average over all
/// distinct orderings, reduced to antistandard form. Its expectation equals
/// the Wigner phase-space moment `<p^m q^k>`.
pub fn symmetrized(m: u32, k: u32) -> Result<ExactPolynomial> {
    if m + k > MAX_ORDER {
        return Err(Error::DegreeOverflow(m + k, MAX_ORDER));
    }
    let words = words_with(m, k);
    let count = words.len() as i64;
    let mut acc = ExactPolynomial::zero();
    for w in &words {
        acc = acc.add(&reduce_to_antistandard(w)?);
    }
    Ok(acc.div_int(count))
}

/// Expansion of the antistandard basis in the symmetrized basis:
/// `P^m Q^k = sum_{a,b} c_{ab} S_{a,b}` with `S` from [`symmetrized`].
///
/// Returned as a polynomial whose monomial `(a, b)` stands for `S_{a,b}`.
/// The inversion is triangular in total degree since
/// `S_{m,k} = P^m Q^k + lower-degree antistandard terms`.
pub fn ordered_in_symmetric_basis(m: u32, k: u32) -> Result<ExactPolynomial> {
    let mut remainder = ExactPolynomial::monomial(OrderedMonomial::new(m, k), Exact::one());
    let mut out = ExactPolynomial::zero();
    loop {
        // peel the highest-degree monomial via its symmetrized image
        let lead = remainder
            .terms
            .iter()
            .max_by_key(|(m, _)| (m.degree(), m.p))
            .map(|(m, c)| (*m, c.clone()));
        let Some((mono, coeff)) = lead else { break };
        out.accumulate(mono, coeff.clone());
        let sym = symmetrized(mono.p, mono.q)?;
        remainder = remainder.sub(&sym.scale(&coeff));
    }
    Ok(out)
}
