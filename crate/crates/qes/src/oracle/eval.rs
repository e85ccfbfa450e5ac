//! Pointwise evaluation of candidate eigenfunctions.
//!
//! ψ(x) = exp(−Σ_l g̃_l h^l) · h^{−g̃log} · f(x)^λ · Σ_m c_m h(x)^m,
//! with h from the closed form or from numeric integration of its
//! defining first-order ODE, and f reconstructed from its series in h.

use crate::coeffseq::CoeffSeq;
use crate::error::{Error, Result};
use crate::model::{BasisSpec, HEval, ProblemSpec, SheetSign};
use crate::scalar::Scalar;

/// Everything needed to evaluate one resolved ansatz pointwise.
#[derive(Clone, Debug)]
pub struct PsiForm {
    pub lambda: f64,
    pub glog: f64,
    /// Resolved weight series (knowns merged with solved unknowns).
    pub gtilde: CoeffSeq<Scalar>,
    /// Resolved expansion coefficients.
    pub c: CoeffSeq<Scalar>,
}

/// Tabulated h(x) along a grid, built by integrating h′ = P(h)·√Q(h)
/// when no closed form exists.
#[derive(Clone, Debug)]
pub struct HTable {
    xs: Vec<f64>,
    hs: Vec<f64>,
}

impl HTable {
    /// Integrate the basis ODE through the sorted points `xs` starting
    /// from the anchor. Adaptive classical Runge–Kutta with step
    /// doubling to local tolerance 1e−12.
    pub fn build(basis: &BasisSpec, xs: &[f64]) -> Result<HTable> {
        let (x0, h0) = match basis.h_eval {
            HEval::Integrate { x0, h0 } => (x0, h0),
            _ => {
                let hs = xs
                    .iter()
                    .map(|&x| basis.h_closed(x).ok_or(Error::PointSingular { x }))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(HTable { xs: xs.to_vec(), hs });
            }
        };
        let rhs = |h: f64| basis.hprime_of_h(h);
        let mut hs = vec![0.0; xs.len()];
        // Integrate outward from the anchor to each side.
        let split = xs.partition_point(|&x| x < x0);
        let mut cur = (x0, h0);
        for i in split..xs.len() {
            let h = integrate_to(rhs, cur, xs[i])?;
            hs[i] = h;
            cur = (xs[i], h);
        }
        cur = (x0, h0);
        for i in (0..split).rev() {
            let h = integrate_to(rhs, cur, xs[i])?;
            hs[i] = h;
            cur = (xs[i], h);
        }
        Ok(HTable { xs: xs.to_vec(), hs })
    }

    pub fn h_at(&self, i: usize) -> f64 {
        self.hs[i]
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.xs[i]
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

fn rk4_step(rhs: &impl Fn(f64) -> Option<f64>, h: f64, dx: f64) -> Option<f64> {
    let k1 = rhs(h)?;
    let k2 = rhs(h + 0.5 * dx * k1)?;
    let k3 = rhs(h + 0.5 * dx * k2)?;
    let k4 = rhs(h + dx * k3)?;
    Some(h + dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

fn integrate_to(
    rhs: impl Fn(f64) -> Option<f64>,
    from: (f64, f64),
    x_target: f64,
) -> Result<f64> {
    let (mut x, mut h) = from;
    let total = x_target - x;
    if total == 0.0 {
        return Ok(h);
    }
    let mut dx = total / 8.0;
    let tol = 1e-12;
    let sing = |x: f64| Error::PointSingular { x };
    let mut guard = 0;
    while (x_target - x).abs() > 1e-15 * (1.0 + x_target.abs()) {
        guard += 1;
        if guard > 2_000_000 {
            return Err(sing(x));
        }
        if dx.abs() > (x_target - x).abs() {
            dx = x_target - x;
        }
        let full = rk4_step(&rhs, h, dx).ok_or_else(|| sing(x))?;
        let half = rk4_step(&rhs, h, 0.5 * dx).ok_or_else(|| sing(x))?;
        let two_half = rk4_step(&rhs, half, 0.5 * dx).ok_or_else(|| sing(x))?;
        let err = (full - two_half).abs();
        let scale = 1.0 + h.abs();
        if err < tol * scale {
            x += dx;
            h = two_half;
            if err < 0.01 * tol * scale {
                dx *= 2.0;
            }
        } else {
            dx *= 0.5;
            if dx.abs() < 1e-14 * (1.0 + x.abs()) {
                return Err(sing(x));
            }
        }
    }
    Ok(h)
}

/// Fractional power with the edge cases spelled out. `None` marks a
/// genuinely singular combination (negative base with non-integer
/// exponent, or a pole).
fn frac_pow(base: f64, exp: f64) -> Option<f64> {
    if exp == 0.0 {
        return Some(1.0);
    }
    if base > 0.0 {
        return Some(base.powf(exp));
    }
    if base == 0.0 {
        return if exp > 0.0 { Some(0.0) } else { None };
    }
    // Negative base: only integer exponents continue through.
    let r = exp.round();
    if (exp - r).abs() < 1e-9 {
        let p = (-base).powf(exp);
        Some(if (r as i64) % 2 == 0 { p } else { -p })
    } else {
        None
    }
}

/// Evaluate ψ at a point, given h(x).
pub fn eval_psi_at_h(p: &ProblemSpec, form: &PsiForm, h: f64, x: f64) -> Result<f64> {
    let sing = || Error::PointSingular { x };
    // Weight exponent Σ g̃_l h^l.
    let wexp = form.gtilde.eval_at(h).ok_or_else(sing)?;
    let g = (-wexp).exp();
    // Logarithmic weight h^{−glog}.
    let hlog = if form.glog == 0.0 {
        1.0
    } else {
        frac_pow(h, -form.glog).ok_or_else(sing)?
    };
    // Factor power f^λ with sheet continuation across interior zeros.
    let f = p.basis.f_at_h(h).ok_or_else(sing)?;
    let mut fpow = frac_pow(f, form.lambda).ok_or_else(sing)?;
    if p.basis.sheet_sign == SheetSign::SignOfH {
        let two_lam = 2.0 * form.lambda;
        let r = two_lam.round();
        if (two_lam - r).abs() < 1e-9 && (r as i64).rem_euclid(2) == 1 && h < 0.0 {
            fpow = -fpow;
        }
    }
    // Expansion polynomial.
    let cpoly = form.c.eval_at(h).ok_or_else(sing)?;
    let v = g * hlog * fpow * cpoly;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(sing())
    }
}

/// Evaluate ψ at a point using the closed-form basis evaluator.
pub fn eval_psi(p: &ProblemSpec, form: &PsiForm, x: f64) -> Result<f64> {
    let h = p
        .basis
        .h_closed(x)
        .ok_or(Error::PointSingular { x })?;
    eval_psi_at_h(p, form, h, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnsatzSpec, Domain, Mode, PotentialSpec, WeightSpec};
    use std::collections::{BTreeMap, BTreeSet};

    fn trivial_spec() -> ProblemSpec {
        ProblemSpec {
            potential: PotentialSpec {
                vmin: 2,
                vmax: 0,
                coeffs: BTreeMap::new(),
                modulation: BTreeMap::new(),
            },
            basis: BasisSpec {
                hprime_poly: CoeffSeq::delta(0),
                hprime_sqrt: CoeffSeq::delta(0),
                f0: CoeffSeq::from_entries(vec![(0, Scalar::one()), (2, Scalar::one())]),
                h_eval: HEval::Identity,
                sheet_sign: SheetSign::None,
            },
            weight: WeightSpec::default(),
            ansatz: AnsatzSpec { n: 0, lambda: Some(Scalar::zero()), pivot: 0 },
            domain: Domain::FullLine,
            mode: Mode::Simple,
            adjustable: BTreeSet::new(),
        }
    }

    #[test]
    fn constant_ansatz_is_one() {
        let p = trivial_spec();
        let form = PsiForm {
            lambda: 0.0,
            glog: 0.0,
            gtilde: CoeffSeq::zero(),
            c: CoeffSeq::delta(0),
        };
        for x in [-2.0, 0.0, 0.7, 10.0] {
            assert_eq!(eval_psi(&p, &form, x).unwrap(), 1.0);
        }
    }

    #[test]
    fn gaussian_weight_factor() {
        let p = trivial_spec();
        // g = exp(−x²/4) via g̃₂ = 1/4.
        let form = PsiForm {
            lambda: 0.0,
            glog: 0.0,
            gtilde: CoeffSeq::from_entries(vec![(2, Scalar::ratio(1, 4))]),
            c: CoeffSeq::delta(0),
        };
        let v = eval_psi(&p, &form, 2.0).unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn integration_fallback_matches_closed_form() {
        // h′ = 1 + h² integrates to tan from the origin; compare with a
        // spec declared through the Integrate evaluator.
        let mut p = trivial_spec();
        p.basis.hprime_sqrt = CoeffSeq::delta(0);
        p.basis.hprime_poly =
            CoeffSeq::from_entries(vec![(0, Scalar::one()), (2, Scalar::one())]);
        p.basis.h_eval = HEval::Integrate { x0: 0.0, h0: 0.0 };
        let xs: Vec<f64> = (0..20).map(|i| -1.2 + 0.126 * i as f64).collect();
        let tab = HTable::build(&p.basis, &xs).unwrap();
        for i in 0..xs.len() {
            assert!(
                (tab.h_at(i) - xs[i].tan()).abs() < 1e-9,
                "x = {}, got {}, want {}",
                xs[i],
                tab.h_at(i),
                xs[i].tan()
            );
        }
    }

    #[test]
    fn sheet_sign_produces_odd_continuation() {
        // f = x² (a = 0, b = 1) with λ = 1/2 and sign continuation: ψ = x.
        let mut p = trivial_spec();
        p.basis.f0 = CoeffSeq::from_entries(vec![(2, Scalar::one())]);
        p.basis.sheet_sign = SheetSign::SignOfH;
        let form = PsiForm {
            lambda: 0.5,
            glog: 0.0,
            gtilde: CoeffSeq::zero(),
            c: CoeffSeq::delta(0),
        };
        assert!((eval_psi(&p, &form, -1.5).unwrap() + 1.5).abs() < 1e-12);
        assert!((eval_psi(&p, &form, 2.5).unwrap() - 2.5).abs() < 1e-12);
    }
}
