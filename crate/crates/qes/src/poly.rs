//! Sparse multivariate polynomials over [`Scalar`].
//!
//! The assembled residual rows are polynomials in the unknown vector
//! (weight coefficients, the factor exponent, the energy, the expansion
//! coefficients, adjustable potential entries). Keeping rows in this form
//! gives exact assembly, exact partial substitution during the staged
//! solve, and analytic Jacobians for the polishing step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::coeffseq::Ring;
use crate::scalar::Scalar;

/// A power product of variables, e.g. `x0^2·x3`. Factors are sorted by
/// variable id and have nonzero exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: u32) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (va, ea) = self.0[i];
            let (vb, eb) = other.0[j];
            match va.cmp(&vb) {
                std::cmp::Ordering::Less => {
                    out.push((va, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((vb, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn degree_of(&self, v: u32) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }

    /// Remove `v` entirely, returning the removed exponent.
    fn without(&self, v: u32) -> (Monomial, u32) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(w, exp)| {
                if *w == v {
                    e = *exp;
                    false
                } else {
                    true
                }
            })
            .cloned()
            .collect();
        (Monomial(rest), e)
    }
}

/// Sparse polynomial: monomial → nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::unit(), c);
        }
        Poly { terms }
    }

    pub fn var(v: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(v), Scalar::one());
        Poly { terms }
    }

    fn insert(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let s = &old + &c;
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.0.is_empty())
    }

    pub fn constant_value(&self) -> Option<Scalar> {
        if self.terms.is_empty() {
            return Some(Scalar::zero());
        }
        if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn degree_of(&self, v: u32) -> u32 {
        self.terms.keys().map(|m| m.degree_of(v)).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    /// Largest coefficient magnitude; 0 for the zero polynomial.
    pub fn max_coeff_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Drop float terms of magnitude ≤ `cut` (exact terms are kept).
    pub fn pruned(&self, cut: f64) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.is_exact() || c.to_f64().abs() > cut)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.terms.values().all(|c| c.is_exact())
    }

    /// Coefficient polynomials with respect to `v`: index `t` holds the
    /// polynomial multiplying `v^t`.
    pub fn coeffs_in(&self, v: u32) -> Vec<Poly> {
        let d = self.degree_of(v) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.without(v);
            out[e as usize].insert(rest, c.clone());
        }
        out
    }

    /// If the polynomial involves no variable except possibly `v`, return
    /// its dense scalar coefficients (constant term first).
    pub fn as_univariate(&self, v: u32) -> Option<Vec<Scalar>> {
        let vars = self.vars();
        if !vars.is_empty() && !(vars.len() == 1 && vars.contains(&v)) {
            return None;
        }
        let d = self.degree_of(v) as usize;
        let mut out = vec![Scalar::zero(); d + 1];
        for (m, c) in &self.terms {
            out[m.degree_of(v) as usize] = c.clone();
        }
        Some(out)
    }

    /// Substitute scalar values for a subset of the variables.
    pub fn eval_partial(&self, assign: &dyn Fn(u32) -> Option<Scalar>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for &(v, e) in &m.0 {
                match assign(v) {
                    Some(val) => {
                        for _ in 0..e {
                            coeff = &coeff * &val;
                        }
                    }
                    None => rest.push((v, e)),
                }
            }
            out.insert(Monomial(rest), coeff);
        }
        out
    }

    /// Full numeric evaluation in `f64`.
    pub fn eval_f64(&self, value: &dyn Fn(u32) -> f64) -> f64 {
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64();
            for &(v, e) in &m.0 {
                t *= value(v).powi(e as i32);
            }
            sum += t;
        }
        sum
    }

    /// Replace `v` by an arbitrary polynomial.
    pub fn substitute(&self, v: u32, rep: &Poly) -> Poly {
        let parts = self.coeffs_in(v);
        let mut out = Poly::zero();
        let mut pow = Poly::constant(Scalar::one());
        for (t, part) in parts.into_iter().enumerate() {
            if t > 0 {
                pow = pow.mul(rep);
            }
            out = out.add(&part.mul(&pow));
        }
        out
    }

    /// Partial derivative.
    pub fn derivative(&self, v: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.degree_of(v);
            if e == 0 {
                continue;
            }
            let mut rest: Vec<(u32, u32)> = Vec::new();
            for &(w, exp) in &m.0 {
                if w == v {
                    if exp > 1 {
                        rest.push((w, exp - 1));
                    }
                } else {
                    rest.push((w, exp));
                }
            }
            out.insert(Monomial(rest), c.mul_int(e as i64));
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, k: &Scalar) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    /// Resultant-style elimination of a variable that appears linearly in
    /// `linear = A·v + B`: substitutes `v = −B/A` into `self` and clears the
    /// denominator, returning `Σ_t coeff_t·(−B)^t·A^{d−t}`.
    ///
    /// Roots may be introduced where `A` vanishes; candidates must be
    /// re-checked against the full system.
    pub fn eliminate_linear(&self, v: u32, linear: &Poly) -> Option<Poly> {
        if linear.degree_of(v) != 1 {
            return None;
        }
        let parts = linear.coeffs_in(v);
        let a = parts.get(1).cloned().unwrap_or_else(Poly::zero);
        let b = parts.first().cloned().unwrap_or_else(Poly::zero);
        let neg_b = b.neg();
        let own = self.coeffs_in(v);
        let d = own.len() - 1;
        let mut out = Poly::zero();
        let mut nb_pow = Poly::constant(Scalar::one());
        let mut a_pows = vec![Poly::constant(Scalar::one())];
        for t in 1..=d {
            a_pows.push(a_pows[t - 1].mul(&a));
        }
        for (t, part) in own.into_iter().enumerate() {
            if t > 0 {
                nb_pow = nb_pow.mul(&neg_b);
            }
            out = out.add(&part.mul(&nb_pow).mul(&a_pows[d - t]));
        }
        Some(out)
    }
}

impl Ring for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::constant(Scalar::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn neg_ref(&self) -> Self {
        self.neg()
    }
    fn mul_int(&self, k: i64) -> Self {
        self.scale(&Scalar::from_int(k))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Poly::constant(Scalar::ratio(num, den))
    }
    fn prune_magnitude(&self) -> Option<f64> {
        // Polynomials are never auto-pruned inside sequences: a term with a
        // float coefficient may sit next to symbolic terms of any size.
        None
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for &(v, e) in &m.0 {
                if e == 1 {
                    write!(f, "·u{v}")?;
                } else {
                    write!(f, "·u{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::var(0)
    }
    fn y() -> Poly {
        Poly::var(1)
    }

    #[test]
    fn ring_arithmetic() {
        // (x + 2)(x − 2) = x² − 4
        let p = x().add(&Poly::constant(Scalar::from_int(2)));
        let q = x().sub(&Poly::constant(Scalar::from_int(2)));
        let prod = p.mul(&q);
        let expect = x().mul(&x()).sub(&Poly::constant(Scalar::from_int(4)));
        assert_eq!(prod, expect);
    }

    #[test]
    fn partial_eval_and_univariate() {
        // p = x²y + 3x − y, at y = 2: 2x² + 3x − 2
        let p = x()
            .mul(&x())
            .mul(&y())
            .add(&x().scale(&Scalar::from_int(3)))
            .sub(&y());
        let at2 = p.eval_partial(&|v| (v == 1).then(|| Scalar::from_int(2)));
        let c = at2.as_univariate(0).unwrap();
        assert_eq!(c, vec![Scalar::from_int(-2), Scalar::from_int(3), Scalar::from_int(2)]);
        assert!(p.as_univariate(0).is_none());
    }

    #[test]
    fn derivative_and_substitute() {
        // d/dx (x³y) = 3x²y ; substitute x := y+1 into x² gives (y+1)²
        let p = x().mul(&x()).mul(&x()).mul(&y());
        let d = p.derivative(0);
        assert_eq!(d, x().mul(&x()).mul(&y()).scale(&Scalar::from_int(3)));
        let sq = x().mul(&x());
        let rep = y().add(&Poly::constant(Scalar::one()));
        assert_eq!(sq.substitute(0, &rep), rep.mul(&rep));
    }

    #[test]
    fn linear_elimination_clears_denominator() {
        // linear: y·x − 1 = 0 (x = 1/y); p = x² + y → y²·p(x=1/y) = 1 + y³
        let linear = y().mul(&x()).sub(&Poly::constant(Scalar::one()));
        let p = x().mul(&x()).add(&y());
        let out = p.eliminate_linear(0, &linear).unwrap();
        let expect = Poly::constant(Scalar::one()).add(&y().mul(&y()).mul(&y()));
        assert_eq!(out, expect);
    }
}
