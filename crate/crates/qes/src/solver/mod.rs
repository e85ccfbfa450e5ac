//! Solve the assembled algebraic system for every admissible assignment:
//! staged back-substitution through the weight chain and factor-exponent
//! rows, energy-pencil extraction, constraint fitting for adjustable
//! potential entries, iterative polishing, and deduplication of
//! gauge-equivalent eigenpairs.

pub mod linear;
pub mod newton;
pub mod stage;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assembler::{assemble, AlgebraicSystem, Unknown};
use crate::coeffseq::CoeffSeq;
use crate::error::{Error, Result};
use crate::model::{AdjustableKey, ProblemSpec};
use crate::oracle::{self, PsiForm};
use crate::poly::Poly;
use crate::scalar::Scalar;

pub use stage::{solve_univariate, RawSolution, StageOptions};

/// Tunables for [`solve`].
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub stage: StageOptions,
    /// Energy agreement threshold in the duplicate test.
    pub dedup_tol: f64,
    /// Sup-norm threshold for probe-grid wavefunction agreement.
    pub probe_tol: f64,
    /// Grid used for the boundedness verdict.
    pub bounded_length: f64,
    pub bounded_pts: usize,
    pub check_bounded: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            stage: StageOptions::default(),
            dedup_tol: 1e-9,
            probe_tol: 1e-6,
            bounded_length: 12.0,
            bounded_pts: 256,
            check_bounded: true,
        }
    }
}

/// One solved eigenpair with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionRecord {
    /// Expansion order of the ansatz this record was found at.
    pub ansatz_n: u32,
    pub lambda: Scalar,
    pub energy: Scalar,
    /// Expansion coefficients, pivot-normalized.
    pub c: CoeffSeq<Scalar>,
    /// Resolved weight series and logarithmic coefficient.
    pub gtilde: CoeffSeq<Scalar>,
    pub glog: Scalar,
    /// Values fitted for the adjustable potential entries.
    pub fitted_potential: Vec<(AdjustableKey, Scalar)>,
    /// Scaled residual left in each row of the system.
    pub constraint_residuals: Vec<(i64, f64)>,
    /// Every sign/branch decision taken on the way to this record.
    pub root_choices: Vec<String>,
    /// Set when other branches produced the same wavefunction.
    pub degeneracy: Option<String>,
    /// Boundedness verdict from the grid oracle (None if not checked).
    pub bounded: Option<bool>,
    /// True when the whole derivation stayed in exact arithmetic.
    pub exact: bool,
}

impl SolutionRecord {
    pub fn psi_form(&self) -> PsiForm {
        PsiForm {
            lambda: self.lambda.to_f64(),
            glog: self.glog.to_f64(),
            gtilde: self.gtilde.clone(),
            c: self.c.clone(),
        }
    }

    /// The spec with every solved quantity pinned: fitted potential
    /// entries inserted, weight resolved, λ fixed. The oracle evaluates
    /// the potential of *this* record through it.
    pub fn resolved_spec(&self, p: &ProblemSpec) -> ProblemSpec {
        let mut out = p.clone();
        for (key, value) in &self.fitted_potential {
            match key {
                AdjustableKey::V { k } => {
                    out.potential.coeffs.insert(*k, value.clone());
                }
                AdjustableKey::Mod { l, k } => {
                    let cur = out.potential.modulation_of(*k);
                    let updated = cur.add(&CoeffSeq::from_entries(vec![(*l, value.clone())]));
                    out.potential.modulation.insert(*k, updated);
                }
            }
        }
        out.adjustable.clear();
        out.weight.gtilde = self.gtilde.clone();
        out.weight.unknown.clear();
        out.weight.glog = self.glog.clone();
        out.weight.unknown_log = false;
        out.ansatz.lambda = Some(self.lambda.clone());
        out
    }
}

fn record_from_raw(
    p: &ProblemSpec,
    sys: &AlgebraicSystem,
    raw: &RawSolution,
) -> Option<SolutionRecord> {
    let get = |u: Unknown| -> Option<Scalar> {
        sys.unknowns.index_of(u).and_then(|v| raw.assign.get(&v).cloned())
    };
    let lambda = match &p.ansatz.lambda {
        Some(v) => v.clone(),
        None => get(Unknown::Lambda)?,
    };
    let energy = get(Unknown::Energy)?;
    let glog = if p.weight.unknown_log {
        get(Unknown::GLog)?
    } else {
        p.weight.glog.clone()
    };
    let mut gtilde = p.weight.gtilde.clone();
    for l in &p.weight.unknown {
        gtilde = gtilde.add(&CoeffSeq::from_entries(vec![(*l, get(Unknown::GTilde(*l))?)]));
    }
    let (lo, hi) = p.c_window();
    let mut c_entries = Vec::new();
    for m in lo..=hi {
        c_entries.push((m, get(Unknown::C(m))?));
    }
    let c = CoeffSeq::from_entries(c_entries);
    if c.is_zero() {
        return None;
    }
    // Pivot normalization: the declared pivot when it carries weight,
    // otherwise the largest coefficient.
    let cmax = c.max_abs();
    let pivot_val = {
        let declared = c.get(p.ansatz.pivot);
        if declared.to_f64().abs() > 1e-6 * cmax {
            declared
        } else {
            let mut best = Scalar::zero();
            for (_, v) in c.support() {
                if v.to_f64().abs() > best.to_f64().abs() {
                    best = v.clone();
                }
            }
            best
        }
    };
    let inv = Scalar::one().checked_div(&pivot_val)?;
    let c = c.scale(&inv);

    let mut fitted = Vec::new();
    for key in &p.adjustable {
        let u = match key {
            AdjustableKey::V { k } => Unknown::VCoeff(*k),
            AdjustableKey::Mod { l, k } => Unknown::VMod { l: *l, k: *k },
        };
        fitted.push((*key, get(u)?));
    }

    Some(SolutionRecord {
        ansatz_n: p.ansatz.n,
        lambda,
        energy,
        c,
        gtilde,
        glog,
        fitted_potential: fitted,
        constraint_residuals: raw.row_residuals.clone(),
        root_choices: raw.choices.clone(),
        degeneracy: None,
        bounded: None,
        exact: raw.exact,
    })
}

/// Polish a float assignment against the original rows; exact
/// assignments are left untouched.
fn polish(sys: &AlgebraicSystem, raw: &mut RawSolution, opts: &StageOptions) {
    let refresh = |raw: &mut RawSolution| {
        let assign = raw.assign.clone();
        let lookup = move |v: u32| assign.get(&v).cloned();
        raw.row_residuals.clear();
        raw.worst_residual = 0.0;
        for row in &sys.rows {
            let r = row
                .poly
                .eval_partial(&lookup)
                .constant_value()
                .map(|s| s.to_f64().abs() / row.scale)
                .unwrap_or(f64::INFINITY);
            raw.row_residuals.push((row.j, r));
            raw.worst_residual = raw.worst_residual.max(r);
        }
    };
    if raw.exact {
        refresh(raw);
        return;
    }
    let vars: Vec<u32> = raw.assign.keys().copied().collect();
    let mut rows: Vec<(Poly, f64)> =
        sys.rows.iter().map(|r| (r.poly.clone(), r.scale)).collect();
    // Pin the scale freedom at the current coefficient norm.
    let mut norm_val = 0.0;
    let mut norm = Poly::zero();
    for (v, u) in sys.unknowns.iter() {
        if matches!(u, Unknown::C(_)) {
            let x = raw.assign.get(&v).map(|s| s.to_f64()).unwrap_or(0.0);
            norm_val += x * x;
            let c = Poly::var(v);
            norm = norm.add(&c.mul(&c));
        }
    }
    norm = norm.sub(&Poly::constant(Scalar::from_f64(norm_val)));
    rows.push((norm, 1.0));
    let nsys = newton::NewtonSystem::new(vars.clone(), &rows);
    let x0: Vec<f64> = vars.iter().map(|v| raw.assign[v].to_f64()).collect();
    let out = newton::gauss_newton(&nsys, &x0, opts.newton_tol, opts.newton_iters);
    if out.converged {
        for (i, v) in vars.iter().enumerate() {
            // Keep exact entries exact; only float entries move.
            if let Some(cur) = raw.assign.get(v) {
                if !cur.is_exact() {
                    raw.assign.insert(*v, Scalar::from_f64(out.x[i]));
                }
            }
        }
    }
    refresh(raw);
}

fn records_equal(
    p: &ProblemSpec,
    a: &SolutionRecord,
    b: &SolutionRecord,
    opts: &SolveOptions,
) -> bool {
    let ea = a.energy.to_f64();
    let eb = b.energy.to_f64();
    let scale = 1.0 + ea.abs().max(eb.abs());
    if (ea - eb).abs() > opts.dedup_tol * scale {
        return false;
    }
    for ((ka, va), (kb, vb)) in a.fitted_potential.iter().zip(&b.fitted_potential) {
        if ka != kb {
            return false;
        }
        let s = 1.0 + va.to_f64().abs().max(vb.to_f64().abs());
        if (va.to_f64() - vb.to_f64()).abs() > opts.dedup_tol * scale.max(s) {
            return false;
        }
    }
    // Wavefunction probe: gauge-shifted duplicates have different (λ, c)
    // but the same ψ.
    let (Ok(sa), Ok(sb)) = (
        oracle::probe_signature(p, &a.psi_form()),
        oracle::probe_signature(p, &b.psi_form()),
    ) else {
        return false;
    };
    let mut diff = 0.0_f64;
    let mut compared = 0;
    for (x, y) in sa.iter().zip(sb.iter()) {
        if let (Some(x), Some(y)) = (x, y) {
            diff = diff.max((x - y).abs());
            compared += 1;
        }
    }
    compared >= 8 && diff <= opts.probe_tol
}

fn dedup(
    p: &ProblemSpec,
    mut records: Vec<SolutionRecord>,
    opts: &SolveOptions,
) -> Vec<SolutionRecord> {
    // Prefer exact records, then staged ones (fewer fallback choices).
    records.sort_by(|a, b| {
        b.exact
            .cmp(&a.exact)
            .then(a.root_choices.len().cmp(&b.root_choices.len()))
    });
    let mut kept: Vec<SolutionRecord> = Vec::new();
    for rec in records {
        if let Some(prev) = kept.iter_mut().find(|k| records_equal(p, k, &rec, opts)) {
            let n = prev
                .degeneracy
                .as_ref()
                .and_then(|s| s.split_whitespace().nth(2))
                .and_then(|s| s.parse::<usize>().ok())
                .unwrap_or(1);
            prev.degeneracy = Some(format!("duplicated by {} branch(es)", n + 1));
            continue;
        }
        kept.push(rec);
    }
    kept.sort_by(|a, b| {
        a.energy
            .to_f64()
            .partial_cmp(&b.energy.to_f64())
            .unwrap()
            .then(a.lambda.to_f64().partial_cmp(&b.lambda.to_f64()).unwrap())
    });
    kept
}

/// Solve one problem instance at its declared expansion order.
pub fn solve(p: &ProblemSpec, opts: &SolveOptions) -> Result<Vec<SolutionRecord>> {
    let diags = crate::validate(p);
    if !diags.is_ok() {
        return Err(Error::Invalid(diags));
    }
    let sys = assemble(p)?;
    let mut engine = stage::Engine::new(&sys, &opts.stage);
    engine.run();
    let mut records = Vec::new();
    let mut raws = std::mem::take(&mut engine.solutions);
    for raw in raws.iter_mut() {
        polish(&sys, raw, &opts.stage);
        if raw.worst_residual > opts.stage.tol_abs {
            continue;
        }
        if let Some(rec) = record_from_raw(p, &sys, raw) {
            records.push(rec);
        }
    }
    let mut records = dedup(p, records, opts);
    if opts.check_bounded {
        for rec in records.iter_mut() {
            rec.bounded = boundedness(p, rec, opts);
        }
    }
    Ok(records)
}

/// Solve at every order 0..=n_max and merge, keeping the lowest-order
/// representative of duplicated wavefunctions.
pub fn solve_levels(
    p: &ProblemSpec,
    n_max: u32,
    opts: &SolveOptions,
) -> Result<Vec<SolutionRecord>> {
    let mut all: Vec<SolutionRecord> = Vec::new();
    for n in 0..=n_max {
        let pn = p.with_n(n);
        let recs = solve(&pn, opts)?;
        for rec in recs {
            if let Some(prev) = all.iter_mut().find(|k| records_equal(p, k, &rec, opts)) {
                prev.degeneracy = Some(format!(
                    "also arises at order {} (kept order {})",
                    rec.ansatz_n, prev.ansatz_n
                ));
                continue;
            }
            all.push(rec);
        }
    }
    all.sort_by(|a, b| {
        a.energy
            .to_f64()
            .partial_cmp(&b.energy.to_f64())
            .unwrap()
            .then(a.lambda.to_f64().partial_cmp(&b.lambda.to_f64()).unwrap())
    });
    Ok(all)
}

fn boundedness(p: &ProblemSpec, rec: &SolutionRecord, opts: &SolveOptions) -> Option<bool> {
    let grid = oracle::Grid::for_domain(&p.domain, opts.bounded_length, opts.bounded_pts);
    let xs = grid.points();
    let psi = oracle::psi_on_grid(p, &rec.psi_form(), &xs).ok()?;
    Some(oracle::bounded_verdict(&p.domain, &psi))
}

// ───────────────────────── staged views ──────────────────────────

/// Resolve the weight unknowns through the triangular chain, enumerating
/// both square-root branches at the top. Requires the chain to close with
/// the weight unknowns alone (its documented precondition); specs with
/// entangled weights should go through [`solve`].
pub fn stage_weight(
    p: &ProblemSpec,
    opts: &StageOptions,
) -> Result<Vec<(CoeffSeq<Scalar>, Scalar, Vec<String>)>> {
    let sys = assemble(p)?;
    let mut vars: Vec<u32> = Vec::new();
    for (v, u) in sys.unknowns.iter() {
        if matches!(u, Unknown::GTilde(_) | Unknown::GLog) {
            vars.push(v);
        }
    }
    if vars.is_empty() {
        return Ok(vec![(p.weight.gtilde.clone(), p.weight.glog.clone(), Vec::new())]);
    }
    let mut engine = stage::Engine::new(&sys, opts).with_stop_set(vars.clone());
    engine.run();
    let mut out: Vec<(CoeffSeq<Scalar>, Scalar, Vec<String>)> = Vec::new();
    for (assign, choices) in &engine.partials {
        let mut gtilde = p.weight.gtilde.clone();
        for l in &p.weight.unknown {
            let v = sys.unknowns.index_of(Unknown::GTilde(*l)).unwrap();
            gtilde = gtilde.add(&CoeffSeq::from_entries(vec![(*l, assign[&v].clone())]));
        }
        let glog = if p.weight.unknown_log {
            assign[&sys.unknowns.index_of(Unknown::GLog).unwrap()].clone()
        } else {
            p.weight.glog.clone()
        };
        let dup = out.iter().any(|(g, gl, _)| {
            let mut same = (gl.to_f64() - glog.to_f64()).abs() < 1e-10;
            for l in &p.weight.unknown {
                same &= (g.get(*l).to_f64() - gtilde.get(*l).to_f64()).abs() < 1e-10;
            }
            same
        });
        if !dup {
            out.push((gtilde, glog, choices.clone()));
        }
    }
    if out.is_empty() {
        return Err(Error::NoWeightSolution);
    }
    Ok(out)
}

/// Factor-exponent roots after a weight assignment: the engine is run
/// with the weight pinned, stopping as soon as λ is determined.
pub fn stage_lambda(
    p: &ProblemSpec,
    gtilde: &CoeffSeq<Scalar>,
    glog: &Scalar,
    opts: &StageOptions,
) -> Result<Vec<Scalar>> {
    if let Some(l) = &p.ansatz.lambda {
        return Ok(vec![l.clone()]);
    }
    let mut pinned = p.clone();
    pinned.weight.gtilde = gtilde.clone();
    pinned.weight.unknown.clear();
    pinned.weight.glog = glog.clone();
    pinned.weight.unknown_log = false;
    let sys = assemble(&pinned)?;
    let lvar = sys.unknowns.index_of(Unknown::Lambda).expect("lambda unknown");
    let mut engine = stage::Engine::new(&sys, opts).with_stop_set(vec![lvar]);
    engine.run();
    let mut out: Vec<Scalar> = Vec::new();
    for (assign, _) in &engine.partials {
        let v = assign[&lvar].clone();
        if !out
            .iter()
            .any(|w| (w.to_f64() - v.to_f64()).abs() < 1e-10 * (1.0 + v.to_f64().abs()))
        {
            out.push(v);
        }
    }
    Ok(out)
}

/// Energy-pencil eigenpairs with weight and λ pinned: the rows of maximal
/// coefficient coupling (ties to lower row index) form the square
/// generalized eigenproblem; adjustable-entry rows are excluded.
pub fn stage_pencil(p: &ProblemSpec, opts: &StageOptions) -> Result<Vec<(f64, Vec<f64>)>> {
    let sys = assemble(p)?;
    let evar = sys.unknowns.index_of(Unknown::Energy).unwrap();
    let (lo, hi) = p.c_window();
    let cvec: Vec<u32> = (lo..=hi)
        .map(|m| sys.unknowns.index_of(Unknown::C(m)).unwrap())
        .collect();
    let mut eligible: Vec<(usize, usize)> = Vec::new();
    for (ri, row) in sys.rows.iter().enumerate() {
        let vars = row.poly.vars();
        if vars
            .iter()
            .any(|v| sys.unknowns.is_adjustable(*v) || sys.unknowns.is_nonlinear(*v))
        {
            continue;
        }
        let coupling = vars.iter().filter(|v| sys.unknowns.is_c(**v)).count();
        if coupling > 0 {
            eligible.push((ri, coupling));
        }
    }
    eligible.sort_by_key(|(ri, c)| (usize::MAX - c, sys.rows[*ri].j));
    if eligible.len() < cvec.len() {
        return Err(Error::NoPencilSolution);
    }
    let n = cvec.len();
    let mut amat = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut bmat = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (r, (ri, _)) in eligible.iter().take(n).enumerate() {
        for (k, cv) in cvec.iter().enumerate() {
            let coeff = sys.rows[*ri]
                .poly
                .coeffs_in(*cv)
                .get(1)
                .cloned()
                .unwrap_or_else(Poly::zero);
            let parts = coeff.coeffs_in(evar);
            amat[(r, k)] = parts
                .first()
                .and_then(|q| q.constant_value())
                .map(|s| s.to_f64())
                .ok_or(Error::NoPencilSolution)?;
            bmat[(r, k)] = -parts
                .get(1)
                .map(|q| q.constant_value())
                .unwrap_or(Some(Scalar::zero()))
                .map(|s| s.to_f64())
                .ok_or(Error::NoPencilSolution)?;
        }
    }
    let sol = linear::solve_pencil(&amat, &bmat, opts.realify)?;
    Ok(sol.pairs)
}

/// Gauss–Newton polish of a full assignment against the assembled rows
/// (all unknowns iterated together, scale pinned at the starting norm).
pub fn newton_polish(
    p: &ProblemSpec,
    start: &BTreeMap<Unknown, f64>,
    opts: &StageOptions,
) -> Result<(BTreeMap<Unknown, f64>, f64, bool)> {
    let sys = assemble(p)?;
    let mut raw = RawSolution {
        assign: start
            .iter()
            .filter_map(|(u, x)| sys.unknowns.index_of(*u).map(|v| (v, Scalar::from_f64(*x))))
            .collect(),
        choices: Vec::new(),
        exact: false,
        row_residuals: Vec::new(),
        worst_residual: f64::INFINITY,
    };
    polish(&sys, &mut raw, opts);
    let out = raw
        .assign
        .iter()
        .map(|(v, s)| (sys.unknowns.kind(*v), s.to_f64()))
        .collect();
    Ok((out, raw.worst_residual, raw.worst_residual <= opts.tol_abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AnsatzSpec, BasisSpec, Domain, HEval, Mode, PotentialSpec, SheetSign, WeightSpec,
    };
    use std::collections::BTreeSet;

    /// Sixth-power oscillator with unit parameters, weight and exponent
    /// unknown, the two singular potential entries adjustable.
    fn sextic_unit(n: u32) -> ProblemSpec {
        ProblemSpec {
            potential: PotentialSpec {
                vmin: 2,
                vmax: 3,
                coeffs: BTreeMap::from([
                    (0, Scalar::zero()),
                    (1, Scalar::one()),
                    (2, Scalar::one()),
                    (3, Scalar::one()),
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
                gtilde: CoeffSeq::zero(),
                glog: Scalar::zero(),
                unknown: BTreeSet::from([1, 2, 3, 4]),
                unknown_log: false,
            },
            ansatz: AnsatzSpec { n, lambda: None, pivot: 0 },
            domain: Domain::FullLine,
            mode: Mode::Simple,
            adjustable: BTreeSet::from([AdjustableKey::V { k: -1 }, AdjustableKey::V { k: -2 }]),
        }
    }

    #[test]
    fn sextic_ground_level_staged_exactly() {
        let p = sextic_unit(0);
        let opts = SolveOptions::default();
        let recs = solve(&p, &opts).unwrap();
        let bounded: Vec<_> = recs.iter().filter(|r| r.bounded == Some(true)).collect();
        assert_eq!(bounded.len(), 1, "records: {recs:#?}");
        let r = bounded[0];
        assert!(r.exact, "expected fully exact derivation");
        assert_eq!(r.lambda, Scalar::ratio(-5, 4));
        assert_eq!(r.energy, Scalar::zero());
        assert_eq!(r.gtilde.get(2), Scalar::from_int(1));
        assert_eq!(r.gtilde.get(4), Scalar::ratio(1, 4));
        assert_eq!(r.gtilde.get(1), Scalar::zero());
        assert_eq!(r.gtilde.get(3), Scalar::zero());
        let vm1 = &r.fitted_potential.iter().find(|(k, _)| matches!(k, AdjustableKey::V { k: -1 })).unwrap().1;
        let vm2 = &r.fitted_potential.iter().find(|(k, _)| matches!(k, AdjustableKey::V { k: -2 })).unwrap().1;
        assert_eq!(*vm1, Scalar::ratio(15, 4));
        assert_eq!(*vm2, Scalar::ratio(-45, 4));
    }

    #[test]
    fn sextic_first_gap_is_two_a_sqrt_bv3() {
        let opts = SolveOptions::default();
        let e0 = solve(&sextic_unit(0), &opts).unwrap();
        let e1 = solve(&sextic_unit(1), &opts).unwrap();
        let ground: Vec<_> = e0.iter().filter(|r| r.bounded == Some(true)).collect();
        let first: Vec<_> = e1
            .iter()
            .filter(|r| r.bounded == Some(true) && !r.c.get(1).is_zero())
            .collect();
        assert_eq!(ground.len(), 1);
        assert_eq!(first.len(), 1, "{e1:#?}");
        let gap = first[0].energy.to_f64() - ground[0].energy.to_f64();
        assert!((gap - 2.0).abs() < 1e-10, "gap {gap}");
    }
}
