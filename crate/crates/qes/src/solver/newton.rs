//! Damped Gauss–Newton least squares on polynomial residual rows, with
//! analytic Jacobians taken directly from the row polynomials.

use nalgebra::{DMatrix, DVector};

use crate::poly::Poly;

/// One residual row prepared for iteration: the polynomial, its partial
/// derivatives with respect to the active variables, and its scale.
pub struct NewtonRow {
    pub poly: Poly,
    pub grads: Vec<Poly>,
    pub scale: f64,
}

pub struct NewtonSystem {
    pub vars: Vec<u32>,
    pub rows: Vec<NewtonRow>,
}

impl NewtonSystem {
    pub fn new(vars: Vec<u32>, rows: &[(Poly, f64)]) -> NewtonSystem {
        let rows = rows
            .iter()
            .map(|(p, scale)| NewtonRow {
                grads: vars.iter().map(|v| p.derivative(*v)).collect(),
                poly: p.clone(),
                scale: scale.max(1.0),
            })
            .collect();
        NewtonSystem { vars, rows }
    }

    fn value_fn<'a>(&'a self, x: &'a [f64]) -> impl Fn(u32) -> f64 + 'a {
        move |v: u32| {
            self.vars
                .iter()
                .position(|w| *w == v)
                .map(|i| x[i])
                .unwrap_or(0.0)
        }
    }

    pub fn residual(&self, x: &[f64]) -> DVector<f64> {
        let val = self.value_fn(x);
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| r.poly.eval_f64(&val) / r.scale),
        )
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let val = self.value_fn(x);
        DMatrix::from_fn(self.rows.len(), self.vars.len(), |i, j| {
            self.rows[i].grads[j].eval_f64(&val) / self.rows[i].scale
        })
    }
}

pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual_inf: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Damped Gauss–Newton from one starting point.
pub fn gauss_newton(
    sys: &NewtonSystem,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> NewtonOutcome {
    let mut x = x0.to_vec();
    let mut r = sys.residual(&x);
    let mut best = r.amax();
    for it in 0..max_iters {
        if best <= tol {
            return NewtonOutcome { x, residual_inf: best, converged: true, iterations: it };
        }
        let j = sys.jacobian(&x);
        let svd = j.svd(true, true);
        let step = match svd.solve(&(-&r), 1e-13) {
            Ok(s) => s,
            Err(_) => break,
        };
        // Backtracking on the 2-norm.
        let n0 = r.norm();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..16 {
            let trial: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(xi, di)| xi + alpha * di)
                .collect();
            let rt = sys.residual(&trial);
            if rt.norm() < n0 * (1.0 - 1e-4 * alpha) || rt.amax() < best {
                x = trial;
                r = rt;
                best = r.amax();
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let converged = best <= tol;
    NewtonOutcome { x, residual_inf: best, converged, iterations: max_iters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn solves_circle_line_intersection() {
        // x² + y² − 25 = 0, x − y − 1 = 0 → (4, 3) and (−3, −4).
        let x = Poly::var(0);
        let y = Poly::var(1);
        let r1 = x.mul(&x).add(&y.mul(&y)).sub(&Poly::constant(Scalar::from_int(25)));
        let r2 = x.sub(&y).sub(&Poly::constant(Scalar::one()));
        let sys = NewtonSystem::new(vec![0, 1], &[(r1, 1.0), (r2, 1.0)]);
        let out = gauss_newton(&sys, &[5.0, 1.0], 1e-12, 100);
        assert!(out.converged);
        assert!((out.x[0] - 4.0).abs() < 1e-10 && (out.x[1] - 3.0).abs() < 1e-10);
        let out2 = gauss_newton(&sys, &[-4.0, -2.0], 1e-12, 100);
        assert!(out2.converged);
        assert!((out2.x[0] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_stays_put() {
        let x = Poly::var(0);
        let r = x.mul(&x).sub(&Poly::constant(Scalar::from_int(4)));
        let sys = NewtonSystem::new(vec![0], &[(r, 1.0)]);
        let out = gauss_newton(&sys, &[2.0], 1e-12, 100);
        assert!(out.converged && out.iterations <= 2);
        assert!((out.x[0] - 2.0).abs() < 1e-12);
    }
}
