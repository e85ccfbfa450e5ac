//! Declarative description of one eigenproblem instance.
//!
//! A [`ProblemSpec`] captures everything the assembler needs: the potential
//! as a finite Laurent expansion in a factor function `f`, the basis
//! function `h` through its first-derivative series, the weight structure,
//! the expansion ansatz, the domain, and which quantities are unknowns to
//! be solved for rather than given.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coeffseq::CoeffSeq;
use crate::elliptic::sncndn;
use crate::scalar::Scalar;

/// Where the differential problem lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    FullLine,
    HalfLine,
    Periodic { period: f64 },
}

/// Which assembly path applies. The simple path is a fast special case
/// (no square-root factor in h′, no logarithmic weight, expansion indices
/// starting at zero); the general path covers everything.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simple,
    General,
}

/// Closed-form (or fallback) evaluator for the basis function h(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HEval {
    /// h(x) = x.
    Identity,
    /// h(x) = sn(x,k)/cn(x,k), the sc Jacobi function.
    JacobiSc { modulus: f64 },
    /// No closed form: integrate h′ numerically from the anchor (x₀, h₀).
    Integrate { x0: f64, h0: f64 },
}

/// How to continue fractional powers of f across interior zeros of f.
/// `SignOfH` multiplies ψ by sign(h(x)) whenever 2λ is an odd integer,
/// which turns |x|-type kinks into smooth odd continuations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SheetSign {
    #[default]
    None,
    SignOfH,
}

/// Potential `V(x) = Σ_k V_k f(x)^k · (Σ_l v_{l,k} h(x)^l)` with
/// `k ∈ [−vmin, vmax]`. The modulation `v_{·,k}` defaults to δ₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub vmin: u32,
    pub vmax: u32,
    /// Map k → V_k. Missing keys are zero.
    #[serde(default)]
    pub coeffs: BTreeMap<i64, Scalar>,
    /// Map k → modulation series in h. Missing keys mean δ₀.
    #[serde(default)]
    pub modulation: BTreeMap<i64, CoeffSeq>,
}

impl PotentialSpec {
    pub fn coeff(&self, k: i64) -> Scalar {
        self.coeffs.get(&k).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn modulation_of(&self, k: i64) -> CoeffSeq {
        self.modulation
            .get(&k)
            .cloned()
            .unwrap_or_else(|| CoeffSeq::delta(0))
    }

    pub fn has_nontrivial_modulation(&self) -> bool {
        self.modulation
            .values()
            .any(|m| *m != CoeffSeq::delta(0))
    }
}

/// Basis function data: h′(x) = P(h)·√Q(h) with series P (`hprime_poly`)
/// and Q (`hprime_sqrt`), plus the expansion of f in powers of h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub hprime_poly: CoeffSeq,
    #[serde(default = "CoeffSeq::<Scalar>::delta0")]
    pub hprime_sqrt: CoeffSeq,
    pub f0: CoeffSeq,
    #[serde(default = "default_h_eval")]
    pub h_eval: HEval,
    #[serde(default)]
    pub sheet_sign: SheetSign,
}

fn default_h_eval() -> HEval {
    HEval::Identity
}

impl CoeffSeq<Scalar> {
    fn delta0() -> Self {
        CoeffSeq::delta(0)
    }
}

impl BasisSpec {
    /// h(x) by the closed form, or `None` when only the integration
    /// fallback exists (use [`crate::oracle::HTable`] for that).
    pub fn h_closed(&self, x: f64) -> Option<f64> {
        match &self.h_eval {
            HEval::Identity => Some(x),
            HEval::JacobiSc { modulus } => {
                let v = sncndn(x, *modulus);
                Some(v.sn / v.cn)
            }
            HEval::Integrate { .. } => None,
        }
    }

    /// f(x) from the f0 series at h(x). `None` at poles of the series.
    pub fn f_at_h(&self, h: f64) -> Option<f64> {
        self.f0.eval_at(h)
    }

    /// h′ as a function of h (the right-hand side of the defining ODE).
    pub fn hprime_of_h(&self, h: f64) -> Option<f64> {
        let p = self.hprime_poly.eval_at(h)?;
        let q = self.hprime_sqrt.eval_at(h)?;
        if q < 0.0 {
            return None;
        }
        Some(p * q.sqrt())
    }
}

/// Weight structure: g(x) = exp(−Σ_l g̃_l h(x)^l − g̃_log · ln h(x)).
/// Indices listed in `unknown` (or `unknown_log`) are solved for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(default = "CoeffSeq::<Scalar>::zero")]
    pub gtilde: CoeffSeq,
    #[serde(default)]
    pub glog: Scalar,
    #[serde(default)]
    pub unknown: BTreeSet<i64>,
    #[serde(default)]
    pub unknown_log: bool,
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec {
            gtilde: CoeffSeq::zero(),
            glog: Scalar::zero(),
            unknown: BTreeSet::new(),
            unknown_log: false,
        }
    }
}

/// Expansion ansatz: order N, the factor exponent λ (None = unknown), and
/// the index of the expansion coefficient pinned to 1 for normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n: u32,
    #[serde(default)]
    pub lambda: Option<Scalar>,
    #[serde(default)]
    pub pivot: i64,
}

/// An adjustable potential entry: either a bare `V_k` or a modulation
/// entry `v_{l,k}`, treated as an unknown fitted from surplus rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AdjustableKey {
    V { k: i64 },
    Mod { l: i64, k: i64 },
}

/// Full description of one problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub potential: PotentialSpec,
    pub basis: BasisSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    pub ansatz: AnsatzSpec,
    pub domain: Domain,
    pub mode: Mode,
    #[serde(default, rename = "unknowns")]
    pub adjustable: BTreeSet<AdjustableKey>,
}

impl ProblemSpec {
    /// Active expansion window for the c coefficients.
    pub fn c_window(&self) -> (i64, i64) {
        let n = self.ansatz.n as i64;
        match self.mode {
            Mode::Simple => (0, n),
            Mode::General => (-n, n),
        }
    }

    /// Potential V(x) at a point, given h(x). Returns `None` at poles.
    pub fn v_at(&self, h: f64) -> Option<f64> {
        let f = self.basis.f_at_h(h)?;
        let mut sum = 0.0;
        for (k, vk) in &self.potential.coeffs {
            if vk.is_zero() {
                continue;
            }
            let modl = self.potential.modulation_of(*k).eval_at(h)?;
            if modl == 0.0 {
                continue;
            }
            if f == 0.0 && *k < 0 {
                return None;
            }
            sum += vk.to_f64() * f.powi(*k as i32) * modl;
        }
        Some(sum)
    }

    pub fn with_n(&self, n: u32) -> ProblemSpec {
        let mut p = self.clone();
        p.ansatz.n = n;
        p
    }
}

/// Severity of a validation finding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub issues: Vec<Diagnostic>,
    /// Active row window of the assembled system (filled by the top-level
    /// validate when the structural checks pass).
    pub j_window: Option<(i64, i64)>,
}

impl Diagnostics {
    pub fn push(&mut self, severity: Severity, message: impl Into<String>) {
        self.issues.push(Diagnostic { severity, message: message.into() });
    }

    pub fn is_ok(&self) -> bool {
        !self.issues.iter().any(|d| d.severity == Severity::Error)
    }
}

/// Structural validation: every violated invariant becomes a diagnostic.
/// The row-window report is added by [`crate::validate`].
pub fn validate_structure(p: &ProblemSpec) -> Diagnostics {
    let mut d = Diagnostics::default();
    let vmin = p.potential.vmin as i64;
    let vmax = p.potential.vmax as i64;

    for (k, v) in &p.potential.coeffs {
        if !v.is_zero() && (*k < -vmin || *k > vmax) {
            d.push(Severity::Error, format!("potential key {k} outside [-{vmin}, {vmax}]"));
        }
    }
    for k in p.potential.modulation.keys() {
        if *k < -vmin || *k > vmax {
            d.push(Severity::Error, format!("modulation key {k} outside [-{vmin}, {vmax}]"));
        }
    }

    if p.basis.f0.is_zero() {
        d.push(Severity::Error, "f0 must not vanish identically");
    }
    if p.basis.hprime_poly.is_zero() {
        d.push(Severity::Error, "hprime_poly must not vanish identically");
    }
    if p.basis.hprime_sqrt.is_zero() {
        d.push(Severity::Error, "hprime_sqrt must not vanish identically");
    }

    let deep_negative = p
        .potential
        .coeffs
        .iter()
        .any(|(k, v)| *k < -2 && !v.is_zero());
    if p.mode == Mode::Simple {
        if p.basis.hprime_sqrt != CoeffSeq::delta(0) {
            d.push(Severity::Error, "simple mode requires hprime_sqrt = delta_0");
        }
        if !p.weight.glog.is_zero() || p.weight.unknown_log {
            d.push(Severity::Error, "simple mode forbids log weight");
        }
        if vmin > 2 {
            d.push(Severity::Error, "simple mode requires vmin <= 2");
        }
        if deep_negative {
            d.push(Severity::Error, "potential keys below -2 require general mode");
        }
        if p.potential.has_nontrivial_modulation() {
            d.push(Severity::Error, "modulated potentials require general mode");
        }
        if p.adjustable.iter().any(|a| matches!(a, AdjustableKey::Mod { .. })) {
            d.push(Severity::Error, "adjustable modulation entries require general mode");
        }
    }

    let all_negative_zero = p
        .potential
        .coeffs
        .iter()
        .filter(|(k, _)| **k < 0)
        .all(|(_, v)| v.is_zero())
        && !p.adjustable.iter().any(|a| match a {
            AdjustableKey::V { k } => *k < 0,
            AdjustableKey::Mod { k, .. } => *k < 0,
        });
    if vmin < 2 && !all_negative_zero {
        d.push(
            Severity::Warning,
            "vmin < 2 with negative potential powers: the factored residual may not close",
        );
    }

    let (lo, hi) = p.c_window();
    if p.ansatz.pivot < lo || p.ansatz.pivot > hi {
        d.push(Severity::Error, format!("pivot {} outside c window [{lo}, {hi}]", p.ansatz.pivot));
    }

    for idx in &p.weight.unknown {
        if !p.weight.gtilde.get(*idx).is_zero() {
            d.push(
                Severity::Error,
                format!("weight index {idx} is both given and marked unknown"),
            );
        }
    }
    if p.weight.unknown_log && !p.weight.glog.is_zero() {
        d.push(Severity::Error, "glog is both given and marked unknown");
    }

    for key in &p.adjustable {
        match key {
            AdjustableKey::V { k } => {
                if !p.potential.coeff(*k).is_zero() {
                    d.push(Severity::Error, format!("V_{k} is both given and adjustable"));
                }
                if *k < -vmin || *k > vmax {
                    d.push(Severity::Error, format!("adjustable V_{k} outside [-{vmin}, {vmax}]"));
                }
            }
            AdjustableKey::Mod { l, k } => {
                if !p.potential.modulation_of(*k).get(*l).is_zero() {
                    d.push(
                        Severity::Error,
                        format!("modulation ({l},{k}) is both given and adjustable"),
                    );
                }
            }
        }
    }

    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sextic_like() -> ProblemSpec {
        ProblemSpec {
            potential: PotentialSpec {
                vmin: 2,
                vmax: 3,
                coeffs: BTreeMap::from([
                    (3, Scalar::one()),
                    (1, Scalar::from_int(-2)),
                ]),
                modulation: BTreeMap::new(),
            },
            basis: BasisSpec {
                hprime_poly: CoeffSeq::delta(0),
                hprime_sqrt: CoeffSeq::delta(0),
                f0: CoeffSeq::from_entries(vec![(0, Scalar::one()), (2, Scalar::one())]),
                h_eval: HEval::Identity,
                sheet_sign: SheetSign::None,
            },
            weight: WeightSpec {
                unknown: BTreeSet::from([1, 2, 3, 4]),
                ..WeightSpec::default()
            },
            ansatz: AnsatzSpec { n: 0, lambda: None, pivot: 0 },
            domain: Domain::FullLine,
            mode: Mode::Simple,
            adjustable: BTreeSet::from([AdjustableKey::V { k: -1 }, AdjustableKey::V { k: -2 }]),
        }
    }

    #[test]
    fn valid_spec_passes() {
        let d = validate_structure(&sextic_like());
        assert!(d.is_ok(), "{:?}", d.issues);
    }

    #[test]
    fn simple_mode_forbids_log_weight() {
        let mut p = sextic_like();
        p.weight.glog = Scalar::one();
        let d = validate_structure(&p);
        assert!(!d.is_ok());
        assert!(d.issues.iter().any(|i| i.message.contains("log weight")));
    }

    #[test]
    fn degenerate_basis_rejected() {
        let mut p = sextic_like();
        p.basis.f0 = CoeffSeq::zero();
        assert!(!validate_structure(&p).is_ok());
    }

    #[test]
    fn json_round_trip_semantic() {
        let p = sextic_like();
        let js = serde_json::to_string_pretty(&p).unwrap();
        let back: ProblemSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(p, back);
    }
}
