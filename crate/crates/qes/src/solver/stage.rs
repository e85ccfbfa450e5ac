//! Branching triangularization of the assembled polynomial system.
//!
//! Every residual row is linear and homogeneous in the expansion
//! coefficients: `row = Σ_m c_m · q_m(other unknowns)`. The engine walks a
//! tree of branches, repeatedly applying the cheapest available action:
//!
//! * a row with a single active coefficient whose cofactor is a nonzero
//!   constant forces that coefficient to zero;
//! * a single-coefficient row whose cofactor is univariate in one unknown
//!   branches over the roots (and over the coefficient-vanishes case) —
//!   this is the weight chain and the factor-exponent row of the staged
//!   hand procedure;
//! * a single-coefficient row whose cofactor is linear in an unknown with
//!   constant coefficient eliminates that unknown exactly;
//! * a linear-in-one-unknown row with a polynomial coefficient eliminates
//!   by clearing denominators (resultant style; candidates re-verified);
//! * with no nonlinear unknowns left, the rows split into connected
//!   components and each component yields an energy pencil (or a null
//!   space at fixed energy), followed by least-squares fitting of
//!   adjustable potential entries from the surplus rows;
//! * when nonlinear unknowns remain but no row isolates them, a
//!   deterministic parameter sweep and seeded multi-start iteration
//!   produce starting points that re-enter the staged path.
//!
//! Every candidate assignment is finally checked against the original
//! rows, so eliminations can never introduce spurious solutions.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembler::{AlgebraicSystem, Unknown};
use crate::coeffseq::Ring;
use crate::poly::Poly;
use crate::scalar::Scalar;

use super::newton::{gauss_newton, NewtonSystem};
use super::linear::{least_squares, null_space, solve_pencil};

/// Tunables for the staged solve.
#[derive(Clone, Debug)]
pub struct StageOptions {
    /// Scaled absolute tolerance on residual rows.
    pub tol_abs: f64,
    /// Convergence tolerance of the polishing iteration.
    pub newton_tol: f64,
    pub newton_iters: usize,
    /// Random starts in the multi-start fallback.
    pub multistart: usize,
    pub seed: u64,
    /// Sweep window and step count for the one-variable fallback.
    pub sweep_range: (f64, f64),
    pub sweep_steps: usize,
    /// Hard cap on explored branches.
    pub branch_cap: usize,
    /// Relative imaginary tolerance when realifying pencil eigenvalues.
    pub realify: f64,
}

impl Default for StageOptions {
    fn default() -> Self {
        StageOptions {
            tol_abs: 1e-10,
            newton_tol: 1e-11,
            newton_iters: 100,
            multistart: 64,
            seed: 20_240_601,
            sweep_range: (-16.0, 16.0),
            sweep_steps: 1601,
            branch_cap: 20_000,
            realify: 1e-9,
        }
    }
}

/// A complete assignment of the unknown vector that satisfies every row.
#[derive(Clone, Debug)]
pub struct RawSolution {
    pub assign: BTreeMap<u32, Scalar>,
    pub choices: Vec<String>,
    pub exact: bool,
    /// Scaled residual of each original row at this assignment.
    pub row_residuals: Vec<(i64, f64)>,
    pub worst_residual: f64,
}

#[derive(Clone)]
struct RowState {
    j: i64,
    poly: Poly,
    /// Historical maximum coefficient magnitude (vacuousness reference).
    scale: f64,
}

#[derive(Clone)]
struct Elim {
    var: u32,
    /// The eliminating relation a·x + b = 0.
    a: Poly,
    b: Poly,
    note: String,
}

#[derive(Clone)]
struct Branch {
    rows: Vec<RowState>,
    assign: BTreeMap<u32, Scalar>,
    elims: Vec<Elim>,
    choices: Vec<String>,
    exact: bool,
}

impl Branch {
    fn substitute(&mut self, var: u32, value: &Scalar) {
        if !value.is_exact() {
            self.exact = false;
        }
        self.assign.insert(var, value.clone());
        let v = value.clone();
        for row in &mut self.rows {
            let p = row.poly.eval_partial(&|w| (w == var).then(|| v.clone()));
            row.scale = row.scale.max(p.max_coeff_abs());
            row.poly = p;
        }
    }

    fn substitute_poly(&mut self, var: u32, rep: &Poly) {
        for row in &mut self.rows {
            let p = row.poly.substitute(var, rep);
            row.scale = row.scale.max(p.max_coeff_abs());
            row.poly = p;
        }
    }
}

enum Action {
    /// Row forces a single coefficient to vanish.
    ForceZero { cvar: u32 },
    /// Single-coefficient row, cofactor univariate in `var`.
    UniRoot { row: usize, cvar: u32, var: u32 },
    /// Single-coefficient row, cofactor linear in `var` with constant
    /// leading coefficient: exact elimination.
    LinearElim { row: usize, cvar: u32, var: u32 },
    /// Linear in `var` with polynomial leading coefficient.
    ResultantElim { row: usize, cvar: u32, var: u32 },
}

pub struct Engine<'a> {
    sys: &'a AlgebraicSystem,
    opts: &'a StageOptions,
    pub solutions: Vec<RawSolution>,
    branches: usize,
    /// Stop exploring a branch once these variables are all assigned
    /// (used by the stage-view entry points).
    stop_when_assigned: Option<Vec<u32>>,
    pub partials: Vec<(BTreeMap<u32, Scalar>, Vec<String>)>,
}

impl<'a> Engine<'a> {
    pub fn new(sys: &'a AlgebraicSystem, opts: &'a StageOptions) -> Self {
        Engine {
            sys,
            opts,
            solutions: Vec::new(),
            branches: 0,
            stop_when_assigned: None,
            partials: Vec::new(),
        }
    }

    /// Stop branches as soon as the given unknowns are assigned, recording
    /// partial assignments instead of full solutions.
    pub fn with_stop_set(mut self, vars: Vec<u32>) -> Self {
        self.stop_when_assigned = Some(vars);
        self
    }

    pub fn run(&mut self) {
        let root = Branch {
            rows: self
                .sys
                .rows
                .iter()
                .map(|r| RowState { j: r.j, poly: r.poly.clone(), scale: r.scale })
                .collect(),
            assign: BTreeMap::new(),
            elims: Vec::new(),
            choices: Vec::new(),
            exact: self.sys.rows.iter().all(|r| r.poly.is_exact()),
        };
        self.explore(root, 0);
    }

    fn vac_cut(&self, scale: f64) -> f64 {
        1e-11 * scale.max(1.0)
    }

    /// Prune float noise, drop vacuous rows; `false` means contradiction.
    fn simplify(&self, b: &mut Branch) -> bool {
        let mut keep = Vec::new();
        for row in b.rows.drain(..) {
            let cut = self.vac_cut(row.scale);
            let p = row.poly.pruned(cut);
            if p.is_zero() {
                continue;
            }
            if let Some(c) = p.constant_value() {
                if c.is_zero() || c.to_f64().abs() <= cut {
                    continue;
                }
                return false; // nonzero constant: contradiction
            }
            keep.push(RowState { j: row.j, poly: p, scale: row.scale });
        }
        b.rows = keep;
        true
    }

    /// Cofactors of the active expansion coefficients in a row.
    fn c_parts(&self, p: &Poly) -> Vec<(u32, Poly)> {
        let mut out = Vec::new();
        for v in p.vars() {
            if self.sys.unknowns.is_c(v) {
                let q = p.coeffs_in(v).get(1).cloned().unwrap_or_else(Poly::zero);
                if !q.is_zero() {
                    out.push((v, q));
                }
            }
        }
        out
    }

    fn pick_action(&self, b: &Branch) -> Option<Action> {
        let mut force: Option<Action> = None;
        let mut uni: Option<(u32, usize, Action)> = None; // (rank, degree, action)
        let mut lin: Option<(u32, Action)> = None;
        let mut res: Option<Action> = None;

        for (ridx, row) in b.rows.iter().enumerate() {
            let parts = self.c_parts(&row.poly);
            if parts.len() != 1 {
                continue;
            }
            let (cvar, q) = &parts[0];
            if q.is_constant() {
                if force.is_none() {
                    force = Some(Action::ForceZero { cvar: *cvar });
                }
                continue;
            }
            let qvars: Vec<u32> = q.vars().into_iter().collect();
            if qvars.len() == 1 {
                let var = qvars[0];
                if self.sys.unknowns.is_c(var) {
                    continue;
                }
                let rank = match self.sys.unknowns.kind(var) {
                    Unknown::GTilde(_) => 0,
                    Unknown::GLog => 1,
                    Unknown::Lambda => 2,
                    Unknown::VCoeff(_) | Unknown::VMod { .. } => 3,
                    Unknown::Energy => 4,
                    Unknown::C(_) => unreachable!(),
                };
                let deg = q.degree_of(var) as usize;
                let better = match &uni {
                    None => true,
                    Some((r, d, _)) => (rank, deg) < (*r, *d),
                };
                if better {
                    uni = Some((rank, deg, Action::UniRoot { row: ridx, cvar: *cvar, var }));
                }
                continue;
            }
            // Multivariate cofactor: try a linear unknown with constant
            // coefficient, preferring non-energy unknowns.
            for var in &qvars {
                if self.sys.unknowns.is_c(*var) || q.degree_of(*var) != 1 {
                    continue;
                }
                let lead = q.coeffs_in(*var).get(1).cloned().unwrap_or_else(Poly::zero);
                let rank = match self.sys.unknowns.kind(*var) {
                    Unknown::GTilde(_) => 0,
                    Unknown::GLog => 1,
                    Unknown::VCoeff(_) | Unknown::VMod { .. } => 2,
                    Unknown::Lambda => 3,
                    Unknown::Energy => 4,
                    Unknown::C(_) => unreachable!(),
                };
                if lead.is_constant() {
                    let better = match &lin {
                        None => true,
                        Some((r, _)) => rank < *r,
                    };
                    if better {
                        lin = Some((rank, Action::LinearElim { row: ridx, cvar: *cvar, var: *var }));
                    }
                } else if res.is_none() && self.sys.unknowns.is_nonlinear(*var) {
                    res = Some(Action::ResultantElim { row: ridx, cvar: *cvar, var: *var });
                }
            }
        }

        if let Some(a) = force {
            return Some(a);
        }
        if let Some((_, _, a)) = uni {
            return Some(a);
        }
        if let Some((_, a)) = lin {
            return Some(a);
        }
        res
    }

    fn remaining_nonlinear(&self, b: &Branch) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for row in &b.rows {
            for v in row.poly.vars() {
                if self.sys.unknowns.is_nonlinear(v) && !b.assign.contains_key(&v) {
                    out.insert(v);
                }
            }
        }
        out
    }

    fn explore(&mut self, mut b: Branch, depth: usize) {
        self.branches += 1;
        if self.branches > self.opts.branch_cap || depth > 128 {
            return;
        }
        if !self.simplify(&mut b) {
            return;
        }
        if let Some(stop) = &self.stop_when_assigned {
            if stop.iter().all(|v| b.assign.contains_key(v)) {
                self.partials.push((b.assign.clone(), b.choices.clone()));
                return;
            }
        }

        match self.pick_action(&b) {
            Some(Action::ForceZero { cvar }) => {
                let mut child = b;
                child
                    .choices
                    .push(format!("{} = 0 (forced)", self.sys.unknowns.label(cvar)));
                child.substitute(cvar, &Scalar::zero());
                self.explore(child, depth + 1);
            }
            Some(Action::UniRoot { row, cvar, var }) => {
                let q = self.c_parts(&b.rows[row].poly)[0].1.clone();
                let coeffs = q.as_univariate(var).expect("checked univariate");
                let roots = solve_univariate(&coeffs, self.vac_cut(b.rows[row].scale));
                let j = b.rows[row].j;
                // Coefficient-vanishes branch.
                let mut zero_branch = b.clone();
                zero_branch
                    .choices
                    .push(format!("{} = 0 (row {j} released)", self.sys.unknowns.label(cvar)));
                zero_branch.substitute(cvar, &Scalar::zero());
                self.explore(zero_branch, depth + 1);
                for (i, r) in roots.iter().enumerate() {
                    let mut child = b.clone();
                    child.choices.push(format!(
                        "{} = {} (root {} of row {j}, degree {})",
                        self.sys.unknowns.label(var),
                        r,
                        i + 1,
                        coeffs.len() - 1,
                    ));
                    child.substitute(var, r);
                    self.explore(child, depth + 1);
                }
            }
            Some(Action::LinearElim { row, cvar, var }) => {
                let q = self.c_parts(&b.rows[row].poly)[0].1.clone();
                let parts = q.coeffs_in(var);
                let a = parts[1].constant_value().expect("constant lead");
                let bb = parts[0].clone();
                let j = b.rows[row].j;
                // Coefficient-vanishes branch keeps var free.
                let mut zero_branch = b.clone();
                zero_branch
                    .choices
                    .push(format!("{} = 0 (row {j} released)", self.sys.unknowns.label(cvar)));
                zero_branch.substitute(cvar, &Scalar::zero());
                self.explore(zero_branch, depth + 1);

                let inv = Scalar::one().checked_div(&a).expect("nonzero constant");
                let rep = bb.neg().scale(&inv);
                let mut child = b;
                child.rows.remove(row);
                if let Some(value) = rep.constant_value() {
                    child.choices.push(format!(
                        "{} = {} (linear row {j})",
                        self.sys.unknowns.label(var),
                        value
                    ));
                    child.substitute(var, &value);
                } else {
                    child.choices.push(format!(
                        "{} eliminated from row {j}",
                        self.sys.unknowns.label(var)
                    ));
                    if !rep.is_exact() {
                        child.exact = false;
                    }
                    child.substitute_poly(var, &rep);
                    child.elims.push(Elim {
                        var,
                        a: Poly::constant(a),
                        b: bb,
                        note: format!("linear from row {j}"),
                    });
                }
                self.explore(child, depth + 1);
            }
            Some(Action::ResultantElim { row, cvar, var }) => {
                let q = self.c_parts(&b.rows[row].poly)[0].1.clone();
                let parts = q.coeffs_in(var);
                let j = b.rows[row].j;
                let mut zero_branch = b.clone();
                zero_branch
                    .choices
                    .push(format!("{} = 0 (row {j} released)", self.sys.unknowns.label(cvar)));
                zero_branch.substitute(cvar, &Scalar::zero());
                self.explore(zero_branch, depth + 1);

                let mut child = b;
                child.choices.push(format!(
                    "{} eliminated from row {j} (denominator-cleared)",
                    self.sys.unknowns.label(var)
                ));
                child.exact = child.exact && q.is_exact();
                let eliminator = q.clone();
                child.rows.remove(row);
                for r in &mut child.rows {
                    if r.poly.degree_of(var) > 0 {
                        if let Some(p) = r.poly.eliminate_linear(var, &eliminator) {
                            r.scale = r.scale.max(p.max_coeff_abs());
                            r.poly = p;
                        }
                    }
                }
                child.elims.push(Elim {
                    var,
                    a: parts[1].clone(),
                    b: parts[0].clone(),
                    note: format!("cleared from row {j}"),
                });
                self.explore(child, depth + 1);
            }
            None => {
                let nl = self.remaining_nonlinear(&b);
                if nl.is_empty() {
                    self.finish_linear(b);
                } else {
                    self.fallback(b, nl, depth);
                }
            }
        }
    }

    /// No nonlinear unknowns left: split into row/coefficient components,
    /// run the pencil or null-space per component, fit adjustable
    /// potential entries, and verify against the original rows.
    fn finish_linear(&mut self, b: Branch) {
        let comps = self.components(&b);
        if comps.is_empty() {
            // Every row collapsed: the remaining coefficients are free
            // directions (the usual case is the single surviving
            // coefficient of a fully chained solve). Emit one candidate
            // per free coefficient; each is verified independently.
            let evar = self.sys.unknowns.index_of(Unknown::Energy).expect("energy");
            if !b.assign.contains_key(&evar) {
                return; // energy left unconstrained: degenerate branch
            }
            let free: Vec<u32> = self
                .sys
                .unknowns
                .iter()
                .filter(|(v, u)| matches!(u, Unknown::C(_)) && !b.assign.contains_key(v))
                .map(|(v, _)| v)
                .collect();
            for pick in &free {
                let mut child = b.clone();
                child.choices.push(format!(
                    "{} spans the solution (free direction)",
                    self.sys.unknowns.label(*pick)
                ));
                for v in &free {
                    let val = if v == pick { Scalar::one() } else { Scalar::zero() };
                    child.substitute(*v, &val);
                }
                self.fit_and_emit(child);
            }
            return;
        }
        for (ci, (cvars, rows)) in comps.iter().enumerate() {
            let mut sub = b.clone();
            sub.choices.push(format!(
                "component {} of {}: coefficients {}",
                ci + 1,
                comps.len(),
                cvars
                    .iter()
                    .map(|v| self.sys.unknowns.label(*v))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            // Zero every coefficient outside this component.
            let all_c: Vec<u32> = self
                .sys
                .unknowns
                .iter()
                .filter(|(v, u)| matches!(u, Unknown::C(_)) && !sub.assign.contains_key(v))
                .map(|(v, _)| v)
                .collect();
            for v in all_c {
                if !cvars.contains(&v) {
                    sub.substitute(v, &Scalar::zero());
                }
            }
            let _ = rows;
            if !self.simplify(&mut sub) {
                continue;
            }
            self.solve_component(sub, cvars);
        }
    }

    /// Connected components of the row ↔ coefficient bipartite graph.
    fn components(&self, b: &Branch) -> Vec<(BTreeSet<u32>, Vec<usize>)> {
        let row_cs: Vec<BTreeSet<u32>> = b
            .rows
            .iter()
            .map(|r| {
                r.poly
                    .vars()
                    .into_iter()
                    .filter(|v| self.sys.unknowns.is_c(*v))
                    .collect()
            })
            .collect();
        let mut comps: Vec<(BTreeSet<u32>, Vec<usize>)> = Vec::new();
        let mut assigned_row = vec![usize::MAX; b.rows.len()];
        loop {
            let Some(start) = assigned_row.iter().position(|&a| a == usize::MAX) else { break };
            if row_cs[start].is_empty() {
                assigned_row[start] = usize::MAX - 1; // constantless row: kept aside
                continue;
            }
            let id = comps.len();
            let mut cset = row_cs[start].clone();
            let mut rows = vec![start];
            assigned_row[start] = id;
            loop {
                let mut grew = false;
                for (ri, cs) in row_cs.iter().enumerate() {
                    if assigned_row[ri] == usize::MAX && !cs.is_disjoint(&cset) {
                        cset.extend(cs.iter().copied());
                        rows.push(ri);
                        assigned_row[ri] = id;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            rows.sort_unstable();
            comps.push((cset, rows));
        }
        comps.sort_by(|a, b| a.0.iter().next().cmp(&b.0.iter().next()));
        comps
    }

    fn solve_component(&mut self, b: Branch, cvars: &BTreeSet<u32>) {
        let evar = self
            .sys
            .unknowns
            .index_of(Unknown::Energy)
            .expect("energy registered");
        let e_assigned = b.assign.contains_key(&evar);
        let cvec: Vec<u32> = cvars.iter().copied().collect();

        if !e_assigned {
            // Pencil-eligible rows: no adjustable potential entries.
            let mut eligible: Vec<(usize, usize)> = Vec::new(); // (row idx, coupling)
            for (ri, row) in b.rows.iter().enumerate() {
                let vars = row.poly.vars();
                if vars.iter().any(|v| self.sys.unknowns.is_adjustable(*v)) {
                    continue;
                }
                let coupling = vars.iter().filter(|v| self.sys.unknowns.is_c(**v)).count();
                if coupling > 0 {
                    eligible.push((ri, coupling));
                }
            }
            // Maximal coupling first, ties by lower j.
            eligible.sort_by_key(|(ri, coupling)| (usize::MAX - coupling, b.rows[*ri].j));
            if eligible.len() >= cvec.len() {
                let picked: Vec<usize> =
                    eligible.iter().take(cvec.len()).map(|(ri, _)| *ri).collect();
                let n = cvec.len();
                let mut amat = DMatrix::<f64>::zeros(n, n);
                let mut bmat = DMatrix::<f64>::zeros(n, n);
                let mut ok = true;
                for (r, ri) in picked.iter().enumerate() {
                    for (k, cv) in cvec.iter().enumerate() {
                        let coeff = b.rows[*ri]
                            .poly
                            .coeffs_in(*cv)
                            .get(1)
                            .cloned()
                            .unwrap_or_else(Poly::zero);
                        let eparts = coeff.coeffs_in(evar);
                        if eparts.len() > 2 {
                            ok = false;
                            continue;
                        }
                        let a_val = eparts
                            .first()
                            .and_then(|p| p.constant_value())
                            .map(|s| s.to_f64());
                        let b_val = eparts
                            .get(1)
                            .map(|p| p.constant_value().map(|s| s.to_f64()))
                            .unwrap_or(Some(0.0));
                        match (a_val, b_val) {
                            (Some(av), Some(bv)) => {
                                amat[(r, k)] = av;
                                bmat[(r, k)] = -bv;
                            }
                            _ => ok = false,
                        }
                    }
                }
                if ok {
                    if let Ok(sol) = solve_pencil(&amat, &bmat, self.opts.realify) {
                        for (e, cvals) in sol.pairs {
                            let mut child = b.clone();
                            child.choices.push(format!(
                                "pencil eigenpair E = {e} from rows {:?}",
                                picked.iter().map(|ri| b.rows[*ri].j).collect::<Vec<_>>()
                            ));
                            child.substitute(evar, &Scalar::from_f64(e));
                            for (k, cv) in cvec.iter().enumerate() {
                                child.substitute(*cv, &Scalar::from_f64(cvals[k]));
                            }
                            self.fit_and_emit(child);
                        }
                    }
                    return;
                }
            }
            // Not enough pencil rows: iterate on the whole component.
            self.component_newton(b, &cvec);
            return;
        }

        // Energy known: coefficients from the null space of the
        // adjustable-free rows.
        let vrows: Vec<&RowState> = b
            .rows
            .iter()
            .filter(|r| !r.poly.vars().iter().any(|v| self.sys.unknowns.is_adjustable(*v)))
            .collect();
        let m = DMatrix::from_fn(vrows.len(), cvec.len(), |i, k| {
            vrows[i]
                .poly
                .coeffs_in(cvec[k])
                .get(1)
                .and_then(|p| p.constant_value())
                .map(|s| s.to_f64())
                .unwrap_or(f64::NAN)
                / vrows[i].scale
        });
        if m.iter().any(|x| x.is_nan()) {
            self.component_newton(b, &cvec);
            return;
        }
        let dirs = if vrows.is_empty() {
            // Unconstrained: one free direction per coefficient.
            (0..cvec.len())
                .map(|i| {
                    let mut v = vec![0.0; cvec.len()];
                    v[i] = 1.0;
                    v
                })
                .collect()
        } else {
            null_space(&m, 1e-8)
        };
        for dir in dirs {
            let mut child = b.clone();
            child.choices.push("null direction at fixed E".into());
            for (k, cv) in cvec.iter().enumerate() {
                child.substitute(*cv, &Scalar::from_f64(dir[k]));
            }
            self.fit_and_emit(child);
        }
    }

    /// Fit adjustable potential entries from the remaining rows by least
    /// squares, then verify and emit.
    fn fit_and_emit(&mut self, mut b: Branch) {
        if !self.simplify(&mut b) {
            return;
        }
        let vadj: Vec<u32> = {
            let mut s = BTreeSet::new();
            for row in &b.rows {
                for v in row.poly.vars() {
                    if self.sys.unknowns.is_adjustable(v) && !b.assign.contains_key(&v) {
                        s.insert(v);
                    }
                }
            }
            s.into_iter().collect()
        };
        if !vadj.is_empty() {
            let rows: Vec<&RowState> = b
                .rows
                .iter()
                .filter(|r| r.poly.vars().iter().any(|v| vadj.contains(v)))
                .collect();
            let mut mat = DMatrix::<f64>::zeros(rows.len(), vadj.len());
            let mut rhs = DVector::<f64>::zeros(rows.len());
            let mut linear = true;
            for (i, row) in rows.iter().enumerate() {
                let mut rest = row.poly.clone();
                for (k, v) in vadj.iter().enumerate() {
                    let parts = rest.coeffs_in(*v);
                    if parts.len() > 2 {
                        linear = false;
                        break;
                    }
                    match parts.get(1).and_then(|p| p.constant_value()) {
                        Some(c) => mat[(i, k)] = c.to_f64() / row.scale,
                        None => {
                            linear = false;
                            break;
                        }
                    }
                    rest = parts.first().cloned().unwrap_or_else(Poly::zero);
                }
                if !linear {
                    break;
                }
                match rest.constant_value() {
                    Some(c) => rhs[i] = -c.to_f64() / row.scale,
                    None => {
                        linear = false;
                        break;
                    }
                }
            }
            if !linear {
                return;
            }
            let Ok((vals, resid)) = least_squares(&mat, &rhs) else { return };
            if resid > self.opts.tol_abs.max(1e-10) * 10.0 {
                return;
            }
            for (k, v) in vadj.iter().enumerate() {
                b.choices
                    .push(format!("{} fitted from surplus rows", self.sys.unknowns.label(*v)));
                b.substitute(*v, &Scalar::from_f64(vals[k]));
            }
        }
        self.emit(b);
    }

    /// Resolve eliminated unknowns, default leftover free unknowns, and
    /// verify the assignment against the original system.
    fn emit(&mut self, mut b: Branch) {
        if !self.simplify(&mut b) {
            return;
        }
        if !b.rows.is_empty() {
            // Rows that still carry unknowns at this point are leftovers
            // with free variables; a valid assignment cannot remain.
            return;
        }
        // Recover eliminated unknowns in reverse order.
        for elim in b.elims.clone().into_iter().rev() {
            let value = {
                let lookup = |v: u32| b.assign.get(&v).cloned();
                let a = elim.a.eval_partial(&lookup).constant_value();
                let bb = elim.b.eval_partial(&lookup).constant_value();
                match (a, bb) {
                    (Some(a), Some(bb)) => {
                        if a.to_f64().abs() < 1e-13 * (1.0 + bb.to_f64().abs()) {
                            None
                        } else {
                            (-&bb).checked_div(&a)
                        }
                    }
                    _ => None,
                }
            };
            match value {
                Some(v) => {
                    if !v.is_exact() {
                        b.exact = false;
                    }
                    b.choices.push(format!(
                        "{} = {} ({})",
                        self.sys.unknowns.label(elim.var),
                        v,
                        elim.note
                    ));
                    b.assign.insert(elim.var, v);
                }
                None => return, // denominator vanished: spurious branch
            }
        }
        // Default any never-mentioned unknowns (e.g. weight entries whose
        // rows disappeared) to zero.
        for (v, _) in self.sys.unknowns.iter() {
            b.assign.entry(v).or_insert_with(Scalar::zero);
        }
        // Reject the trivial solution.
        let c_norm: f64 = self
            .sys
            .unknowns
            .iter()
            .filter(|(_, u)| matches!(u, Unknown::C(_)))
            .map(|(v, _)| b.assign[&v].to_f64().powi(2))
            .sum();
        if c_norm < 1e-24 {
            return;
        }
        // Verify against the original rows.
        let lookup = |v: u32| b.assign.get(&v).cloned();
        let mut residuals = Vec::new();
        let mut worst = 0.0_f64;
        for row in &self.sys.rows {
            let val = row.poly.eval_partial(&lookup);
            let r = match val.constant_value() {
                Some(s) => s.to_f64().abs() / row.scale,
                None => return,
            };
            residuals.push((row.j, r));
            worst = worst.max(r);
        }
        if worst > self.opts.tol_abs {
            return;
        }
        self.solutions.push(RawSolution {
            assign: b.assign,
            choices: b.choices,
            exact: b.exact,
            row_residuals: residuals,
            worst_residual: worst,
        });
    }

    /// Newton iteration on one component (energy, coefficients and any
    /// adjustable entries together), used when the pencil cannot be
    /// formed. Converged points re-enter the verified emission path.
    fn component_newton(&mut self, b: Branch, cvec: &[u32]) {
        let mut vars: Vec<u32> = Vec::new();
        for row in &b.rows {
            for v in row.poly.vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        if vars.is_empty() {
            return;
        }
        vars.sort_unstable();
        let mut rows: Vec<(Poly, f64)> =
            b.rows.iter().map(|r| (r.poly.clone(), r.scale)).collect();
        // Fix the scale freedom: Σ c² = 1 over this component.
        let mut norm = Poly::constant(Scalar::from_int(-1));
        for cv in cvec {
            let c = Poly::var(*cv);
            norm = norm.add(&c.mul(&c));
        }
        rows.push((norm, 1.0));
        let sys = NewtonSystem::new(vars.clone(), &rows);
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed ^ (b.rows.len() as u64) << 32);
        let mut found: Vec<Vec<f64>> = Vec::new();
        for start_idx in 0..self.opts.multistart {
            let x0: Vec<f64> = (0..vars.len())
                .map(|_| rng.gen_range(-4.0..4.0))
                .collect();
            let out = gauss_newton(&sys, &x0, self.opts.newton_tol, self.opts.newton_iters);
            if !out.converged {
                continue;
            }
            if found
                .iter()
                .any(|f| f.iter().zip(&out.x).all(|(a, c)| (a - c).abs() < 1e-7 * (1.0 + a.abs())))
            {
                continue;
            }
            found.push(out.x.clone());
            let mut child = b.clone();
            child
                .choices
                .push(format!("component iteration (start {start_idx}) converged"));
            for (i, v) in vars.iter().enumerate() {
                child.substitute(*v, &Scalar::from_f64(out.x[i]));
            }
            self.fit_and_emit(child);
        }
    }

    /// Stuck with nonlinear unknowns: one-variable deterministic sweep
    /// when possible, then seeded multi-start iteration. Converged
    /// nonlinear values re-enter the staged path.
    fn fallback(&mut self, b: Branch, nl: BTreeSet<u32>, depth: usize) {
        let mut starts: Vec<BTreeMap<u32, f64>> = Vec::new();
        let has_vadj = b.rows.iter().any(|r| {
            r.poly
                .vars()
                .iter()
                .any(|v| self.sys.unknowns.is_adjustable(*v) && !b.assign.contains_key(v))
        });
        if nl.len() == 1 && !has_vadj {
            let var = *nl.iter().next().unwrap();
            starts.extend(self.sweep_starts(&b, var));
        }
        // Random multi-start over the nonlinear unknowns.
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed ^ 0x5eed);
        for _ in 0..self.opts.multistart {
            let mut s = BTreeMap::new();
            for v in &nl {
                s.insert(*v, rng.gen_range(-5.0..5.0));
            }
            starts.push(s);
        }

        // Iterate on the full remaining system from each start.
        let mut vars: Vec<u32> = Vec::new();
        for row in &b.rows {
            for v in row.poly.vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars.sort_unstable();
        let cvars: Vec<u32> = vars
            .iter()
            .copied()
            .filter(|v| self.sys.unknowns.is_c(*v))
            .collect();
        let mut rows: Vec<(Poly, f64)> =
            b.rows.iter().map(|r| (r.poly.clone(), r.scale)).collect();
        let mut norm = Poly::constant(Scalar::from_int(-1));
        for cv in &cvars {
            let c = Poly::var(*cv);
            norm = norm.add(&c.mul(&c));
        }
        rows.push((norm, 1.0));
        let sys = NewtonSystem::new(vars.clone(), &rows);

        let mut rng2 = ChaCha8Rng::seed_from_u64(self.opts.seed ^ 0xa11ce);
        let mut seen: Vec<Vec<f64>> = Vec::new();
        for start in starts {
            let x0: Vec<f64> = vars
                .iter()
                .map(|v| start.get(v).copied().unwrap_or_else(|| rng2.gen_range(-2.0..2.0)))
                .collect();
            let out = gauss_newton(&sys, &x0, self.opts.newton_tol, self.opts.newton_iters);
            if !out.converged {
                continue;
            }
            let nlvals: Vec<f64> = vars
                .iter()
                .enumerate()
                .filter(|(_, v)| nl.contains(v))
                .map(|(i, _)| out.x[i])
                .collect();
            if seen
                .iter()
                .any(|s| s.iter().zip(&nlvals).all(|(a, c)| (a - c).abs() < 1e-8 * (1.0 + a.abs())))
            {
                continue;
            }
            seen.push(nlvals);
            let mut child = b.clone();
            child.choices.push("fallback iteration converged".into());
            for (i, v) in vars.iter().enumerate() {
                if nl.contains(v) {
                    child.substitute(*v, &Scalar::from_f64(out.x[i]));
                }
            }
            self.explore(child, depth + 1);
        }
    }

    /// Deterministic one-variable sweep: at each grid value the remaining
    /// system is linear; score it by the best leftover residual and keep
    /// local minima as starting values.
    fn sweep_starts(&self, b: &Branch, var: u32) -> Vec<BTreeMap<u32, f64>> {
        let (lo, hi) = self.opts.sweep_range;
        let steps = self.opts.sweep_steps.max(8);
        let mut scores: Vec<(f64, f64)> = Vec::with_capacity(steps);
        for i in 0..steps {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            let s = self.sweep_score(b, var, x).unwrap_or(f64::INFINITY);
            scores.push((x, s));
        }
        let mut out = Vec::new();
        for i in 1..steps - 1 {
            let (x, s) = scores[i];
            if s.is_finite() && s < scores[i - 1].1 && s <= scores[i + 1].1 && s < 1.0 {
                let mut m = BTreeMap::new();
                m.insert(var, x);
                out.push(m);
            }
        }
        out
    }

    fn sweep_score(&self, b: &Branch, var: u32, x: f64) -> Option<f64> {
        let val = Scalar::from_f64(x);
        let rows: Vec<RowState> = b
            .rows
            .iter()
            .map(|r| {
                let p = r.poly.eval_partial(&|w| (w == var).then(|| val.clone()));
                RowState { j: r.j, poly: p, scale: r.scale }
            })
            .collect();
        let evar = self.sys.unknowns.index_of(Unknown::Energy)?;
        // Active coefficients.
        let mut cvars: BTreeSet<u32> = BTreeSet::new();
        for r in &rows {
            for v in r.poly.vars() {
                if self.sys.unknowns.is_c(v) {
                    cvars.insert(v);
                }
            }
        }
        if cvars.is_empty() {
            return None;
        }
        let cvec: Vec<u32> = cvars.into_iter().collect();
        let n = cvec.len();
        let mut coupled: Vec<(usize, usize)> = rows
            .iter()
            .enumerate()
            .map(|(ri, r)| {
                let k = r.poly.vars().iter().filter(|v| self.sys.unknowns.is_c(**v)).count();
                (ri, k)
            })
            .filter(|(_, k)| *k > 0)
            .collect();
        coupled.sort_by_key(|(ri, k)| (usize::MAX - k, rows[*ri].j));
        if coupled.len() < n {
            return None;
        }
        let picked: Vec<usize> = coupled.iter().take(n).map(|(ri, _)| *ri).collect();
        let rest: Vec<usize> = coupled.iter().skip(n).map(|(ri, _)| *ri).collect();
        let mut amat = DMatrix::<f64>::zeros(n, n);
        let mut bmat = DMatrix::<f64>::zeros(n, n);
        for (r, ri) in picked.iter().enumerate() {
            for (k, cv) in cvec.iter().enumerate() {
                let coeff = rows[*ri].poly.coeffs_in(*cv).get(1).cloned().unwrap_or_else(Poly::zero);
                let eparts = coeff.coeffs_in(evar);
                if eparts.len() > 2 {
                    return None;
                }
                amat[(r, k)] = eparts.first()?.constant_value()?.to_f64();
                bmat[(r, k)] = -eparts.get(1).map(|p| p.constant_value()).unwrap_or(Some(Scalar::zero()))?.to_f64();
            }
        }
        let sol = solve_pencil(&amat, &bmat, self.opts.realify).ok()?;
        let mut best = f64::INFINITY;
        for (e, cvals) in &sol.pairs {
            let mut worst = 0.0_f64;
            for ri in &rest {
                let row = &rows[*ri];
                let mut acc = 0.0;
                for (k, cv) in cvec.iter().enumerate() {
                    let coeff = row.poly.coeffs_in(*cv).get(1).cloned().unwrap_or_else(Poly::zero);
                    let eparts = coeff.coeffs_in(evar);
                    let a = eparts.first()?.constant_value()?.to_f64();
                    let bb = eparts
                        .get(1)
                        .map(|p| p.constant_value())
                        .unwrap_or(Some(Scalar::zero()))?
                        .to_f64();
                    acc += cvals[k] * (a + e * bb);
                }
                worst = worst.max(acc.abs() / row.scale);
            }
            best = best.min(worst);
        }
        Some(best)
    }
}

/// Real roots of a dense univariate polynomial (constant term first).
/// Exact linear roots and exact quadratic roots with perfect-square
/// discriminants stay exact; everything else is numeric.
pub fn solve_univariate(coeffs: &[Scalar], noise: f64) -> Vec<Scalar> {
    // Trim numerically negligible leading coefficients.
    let maxmag = coeffs.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max);
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 {
        let c = &coeffs[deg];
        let negligible = if c.is_exact() {
            c.is_zero()
        } else {
            c.to_f64().abs() <= noise.max(1e-13 * maxmag)
        };
        if negligible {
            deg -= 1;
        } else {
            break;
        }
    }
    match deg {
        0 => Vec::new(),
        1 => {
            let root = (-&coeffs[0]).checked_div(&coeffs[1]);
            root.into_iter().collect()
        }
        2 => {
            let (a, b, c) = (&coeffs[2], &coeffs[1], &coeffs[0]);
            let disc = &(b * b) - &(&(a * c).mul_int(4));
            if disc.to_f64() < -1e-13 * maxmag * maxmag {
                return Vec::new();
            }
            let disc = if disc.to_f64() < 0.0 { Scalar::zero() } else { disc };
            match disc.sqrt() {
                Some(s) => {
                    let two_a = a.mul_int(2);
                    let r1 = (&(-b) + &s).checked_div(&two_a);
                    let r2 = (&(-b) - &s).checked_div(&two_a);
                    let mut out: Vec<Scalar> = r1.into_iter().chain(r2).collect();
                    out.dedup_by(|x, y| {
                        (x.to_f64() - y.to_f64()).abs() <= 1e-12 * (1.0 + x.to_f64().abs())
                    });
                    out
                }
                None => Vec::new(),
            }
        }
        _ => {
            // Companion matrix of the monic polynomial.
            let lead = coeffs[deg].to_f64();
            let mut m = DMatrix::<f64>::zeros(deg, deg);
            for i in 1..deg {
                m[(i, i - 1)] = 1.0;
            }
            for i in 0..deg {
                m[(i, deg - 1)] = -coeffs[i].to_f64() / lead;
            }
            let mut roots: Vec<f64> = m
                .complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
                .map(|z| z.re)
                .collect();
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + a.abs()));
            roots.into_iter().map(Scalar::from_f64).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_roots_exactness() {
        // x² − 9/4 = 0 → ±3/2 exactly.
        let roots = solve_univariate(
            &[Scalar::ratio(-9, 4), Scalar::zero(), Scalar::one()],
            0.0,
        );
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().all(|r| r.is_exact()));
        // x² − 2 = 0 → float roots.
        let roots = solve_univariate(&[Scalar::from_int(-2), Scalar::zero(), Scalar::one()], 0.0);
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().all(|r| !r.is_exact()));
        // Cubic x³ − 6x² + 11x − 6 → 1, 2, 3.
        let roots = solve_univariate(
            &[
                Scalar::from_int(-6),
                Scalar::from_int(11),
                Scalar::from_int(-6),
                Scalar::one(),
            ],
            0.0,
        );
        let vals: Vec<f64> = roots.iter().map(|r| r.to_f64()).collect();
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 1.0).abs() < 1e-9 && (vals[2] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn no_real_roots_detected() {
        let roots = solve_univariate(&[Scalar::one(), Scalar::zero(), Scalar::one()], 0.0);
        assert!(roots.is_empty());
    }
}
