//! Finite-support sequences indexed over ℤ and their convolution algebra.
//!
//! Every expansion family in the solver — the potential powers, the basis
//! derivative series, the weight series and all derived families — is a
//! [`CoeffSeq`]: a sparse map from an integer index to a coefficient. The
//! index may be negative (Laurent-style supports appear as soon as the basis
//! function has poles), and all operations are pure.
//!
//! Sequences are generic over the coefficient [`Ring`]: numeric work uses
//! [`Scalar`](crate::scalar::Scalar), while system assembly runs the same
//! code over multivariate polynomials in the unknowns.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

/// Minimal commutative-ring interface needed by the coefficient algebra.
///
/// No division is ever required: index weights enter through `mul_int` and
/// the single 1/2 in the second-derivative family through `from_ratio`.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn mul_int(&self, k: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Magnitude used for float-mode pruning; `None` means exact (never prune).
    fn prune_magnitude(&self) -> Option<f64>;
}

impl Ring for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn one() -> Self {
        Scalar::one()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn mul_int(&self, k: i64) -> Self {
        Scalar::mul_int(self, k)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Scalar::ratio(num, den)
    }
    fn prune_magnitude(&self) -> Option<f64> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::F64(x) => Some(x.abs()),
        }
    }
}

/// Relative threshold below which float entries are dropped during
/// normalization. Exact entries are only dropped when exactly zero.
pub const FLOAT_PRUNE_REL: f64 = 1e-14;

/// A finite-support sequence `l ∈ ℤ → R`, the carrier of every expansion
/// coefficient family.
///
/// Invariants after construction: no stored entry is zero, lookups outside
/// the support return the ring zero, and the support window `[lo, hi]` is
/// minimal.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeq<R: Ring = Scalar> {
    entries: BTreeMap<i64, R>,
}

impl<R: Ring> Default for CoeffSeq<R> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<R: Ring> CoeffSeq<R> {
    pub fn zero() -> Self {
        CoeffSeq { entries: BTreeMap::new() }
    }

    /// The Kronecker delta at `index`, i.e. the sequence with a single 1.
    pub fn delta(index: i64) -> Self {
        Self::from_entries(vec![(index, R::one())])
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (i64, R)>) -> Self {
        let mut map = BTreeMap::new();
        for (l, v) in entries {
            if !v.is_zero() {
                let cur = map.remove(&l).unwrap_or_else(R::zero);
                let sum = cur.add_ref(&v);
                if !sum.is_zero() {
                    map.insert(l, sum);
                }
            }
        }
        let mut s = CoeffSeq { entries: map };
        s.prune();
        s
    }

    /// Drop float entries below `FLOAT_PRUNE_REL` times the largest float
    /// magnitude in the sequence. Exact entries are untouched.
    fn prune(&mut self) {
        let max_mag = self
            .entries
            .values()
            .filter_map(|v| v.prune_magnitude())
            .fold(0.0_f64, f64::max);
        if max_mag > 0.0 {
            let cut = FLOAT_PRUNE_REL * max_mag;
            self.entries
                .retain(|_, v| v.prune_magnitude().map_or(true, |m| m > cut));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lookup; indices outside the support give the exact ring zero.
    pub fn get(&self, l: i64) -> R {
        self.entries.get(&l).cloned().unwrap_or_else(R::zero)
    }

    /// Minimal support window, `None` for the zero sequence.
    pub fn window(&self) -> Option<(i64, i64)> {
        let lo = *self.entries.keys().next()?;
        let hi = *self.entries.keys().next_back()?;
        Some((lo, hi))
    }

    pub fn support(&self) -> impl Iterator<Item = (&i64, &R)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.entries.clone();
        for (l, v) in &other.entries {
            let cur = out.remove(l).unwrap_or_else(R::zero);
            let sum = cur.add_ref(v);
            if !sum.is_zero() {
                out.insert(*l, sum);
            }
        }
        let mut s = CoeffSeq { entries: out };
        s.prune();
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        CoeffSeq {
            entries: self.entries.iter().map(|(l, v)| (*l, v.neg_ref())).collect(),
        }
    }

    pub fn scale(&self, factor: &R) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self::from_entries(self.entries.iter().map(|(l, v)| (*l, v.mul_ref(factor))))
    }

    /// Convolution: `out[i] = Σ_j b[j] · a[i−j]`, support
    /// `[a.lo+b.lo, a.hi+b.hi]`. The empty sequence annihilates.
    pub fn convolve(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut acc: BTreeMap<i64, R> = BTreeMap::new();
        for (la, va) in &self.entries {
            for (lb, vb) in &other.entries {
                let idx = la + lb;
                let term = va.mul_ref(vb);
                if term.is_zero() {
                    continue;
                }
                let cur = acc.remove(&idx).unwrap_or_else(R::zero);
                let sum = cur.add_ref(&term);
                if !sum.is_zero() {
                    acc.insert(idx, sum);
                }
            }
        }
        let mut s = CoeffSeq { entries: acc };
        s.prune();
        s
    }

    /// k-th convolution power, defined recursively: power 0 is δ₀ and
    /// each next power convolves once more with `self`.
    pub fn power(&self, k: u32) -> Self {
        let mut out = Self::delta(0);
        for _ in 0..k {
            out = out.convolve(self);
        }
        out
    }

    /// `out[l] = factor · self[l + shift]`.
    pub fn shift_scale(&self, factor: &R, shift: i64) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self::from_entries(
            self.entries
                .iter()
                .map(|(l, v)| (*l - shift, v.mul_ref(factor))),
        )
    }

    /// `out[l] = self[l + shift]`.
    pub fn shift(&self, shift: i64) -> Self {
        CoeffSeq {
            entries: self.entries.iter().map(|(l, v)| (*l - shift, v.clone())).collect(),
        }
    }

    /// Weighted shift: `out[l] = w(l) · self[l + shift]` with an integer
    /// weight. `weighted_shift(s, 1, |l| l + 1)` is the series derivative
    /// d/dh, the pattern `(l+1)·s_{l+1}` that appears throughout the
    /// derived families.
    pub fn weighted_shift(&self, shift: i64, w: impl Fn(i64) -> i64) -> Self {
        Self::from_entries(self.entries.iter().filter_map(|(l, v)| {
            let out_idx = *l - shift;
            let k = w(out_idx);
            if k == 0 {
                None
            } else {
                Some((out_idx, v.mul_int(k)))
            }
        }))
    }

    /// Series derivative with respect to the expansion variable:
    /// `out[l] = (l+1) · self[l+1]`.
    pub fn dh(&self) -> Self {
        self.weighted_shift(1, |l| l + 1)
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> CoeffSeq<S> {
        CoeffSeq::from_entries(self.entries.iter().map(|(l, v)| (*l, f(v))))
    }
}

impl CoeffSeq<Scalar> {
    /// Demote every entry to float mode.
    pub fn demote(&self) -> Self {
        self.map(|v| v.demote())
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(|v| v.is_exact())
    }

    /// Evaluate `Σ_l c_l · t^l` at a point (compensated summation).
    /// `t = 0` with negative support yields `None`.
    pub fn eval_at(&self, t: f64) -> Option<f64> {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (l, v) in &self.entries {
            let term = if *l >= 0 {
                v.to_f64() * t.powi(*l as i32)
            } else {
                if t == 0.0 {
                    return None;
                }
                v.to_f64() * t.powi(*l as i32)
            };
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        Some(sum)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

impl<R: Ring> fmt::Display for CoeffSeq<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (l, v) in &self.entries {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({v:?})·h^{l}")?;
        }
        Ok(())
    }
}

/// JSON form: `{"index": value}` with scalar values as numbers or "p/q".
impl Serialize for CoeffSeq<Scalar> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = serializer.serialize_map(Some(self.entries.len()))?;
        for (l, v) in &self.entries {
            m.serialize_entry(&l.to_string(), v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for CoeffSeq<Scalar> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, Scalar> = BTreeMap::deserialize(deserializer)?;
        let mut entries = Vec::with_capacity(raw.len());
        for (k, v) in raw {
            let idx: i64 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad sequence index `{k}`")))?;
            entries.push((idx, v));
        }
        Ok(CoeffSeq::from_entries(entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(pairs: &[(i64, i64)]) -> CoeffSeq {
        CoeffSeq::from_entries(pairs.iter().map(|&(l, n)| (l, Scalar::from_int(n))))
    }

    #[test]
    fn delta_is_convolution_identity() {
        let s = seq(&[(-2, 3), (0, 1), (5, -7)]);
        assert_eq!(CoeffSeq::delta(0).convolve(&s), s);
        assert_eq!(s.convolve(&CoeffSeq::delta(0)), s);
    }

    #[test]
    fn binomial_square_matches_energy_row() {
        // (a·δ0 + b·δ2)^2 with a=1 reproduces δ0 + 2b·δ2 + b²·δ4.
        let b = Scalar::from_int(3);
        let f = CoeffSeq::from_entries(vec![(0, Scalar::one()), (2, b.clone())]);
        let sq = f.convolve(&f);
        assert_eq!(sq.get(0), Scalar::one());
        assert_eq!(sq.get(2), b.mul_int(2));
        assert_eq!(sq.get(4), &b * &b);
        assert_eq!(sq.window(), Some((0, 4)));
    }

    #[test]
    fn convolve_against_double_loop() {
        let a = seq(&[(-1, 2), (0, -3), (2, 5), (3, 1), (7, -4)]);
        let b = seq(&[(-2, 1), (0, 4), (1, -1), (4, 2), (5, 3)]);
        let c = a.convolve(&b);
        let (alo, ahi) = a.window().unwrap();
        let (blo, bhi) = b.window().unwrap();
        for i in (alo + blo)..=(ahi + bhi) {
            let mut direct = Scalar::zero();
            for j in blo..=bhi {
                direct += &b.get(j) * &a.get(i - j);
            }
            assert_eq!(c.get(i), direct, "index {i}");
        }
        assert!(c.window().unwrap().0 >= alo + blo);
        assert!(c.window().unwrap().1 <= ahi + bhi);
    }

    #[test]
    fn power_base_case_and_binomial() {
        let s = seq(&[(0, 1), (2, 1)]);
        assert_eq!(s.power(0), CoeffSeq::delta(0));
        let sq = s.power(2);
        assert_eq!(sq, seq(&[(0, 1), (2, 2), (4, 1)]));
        let cube = s.power(3);
        assert_eq!(cube, s.convolve(&s).convolve(&s));
    }

    #[test]
    fn weighted_shift_matches_index_weight_pattern() {
        // s = δ2, shift 1, weight (l+1): entry 2 lands at 1 with factor 2.
        let s = CoeffSeq::delta(2);
        let out = s.weighted_shift(1, |l| l + 1);
        assert_eq!(out, seq(&[(1, 2)]));
        // shift round trip
        let r = seq(&[(-3, 4), (0, 1), (2, -2)]);
        assert_eq!(r.shift(5).shift(-5), r);
    }

    #[test]
    fn zero_annihilates_and_support_is_minimal() {
        let s = seq(&[(1, 2), (4, -1)]);
        assert!(s.convolve(&CoeffSeq::zero()).is_zero());
        let t = CoeffSeq::from_entries(vec![
            (0, Scalar::zero()),
            (1, Scalar::from_int(2)),
            (9, Scalar::zero()),
        ]);
        assert_eq!(t.window(), Some((1, 1)));
    }

    #[test]
    fn float_prune_is_relative() {
        let s = CoeffSeq::from_entries(vec![
            (0, Scalar::from_f64(1.0)),
            (1, Scalar::from_f64(1e-20)),
            (2, Scalar::from_f64(1e-10)),
        ]);
        assert!(s.get(1).is_zero());
        assert!(!s.get(2).is_zero());
    }
}
