//! Independent finite-difference eigensolver for the cross-check.
//!
//! Discretizes −ψ″ + Vψ on a uniform grid with either the plain 3-point
//! stencil or the Numerov weighting, under Dirichlet or (anti)periodic
//! boundary conditions, and Richardson-extrapolates eigenvalues over two
//! grid resolutions. Never touches the coefficient algebra: the potential
//! enters only through pointwise evaluation.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Discretization stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Stencil {
    #[default]
    ThreePoint,
    Numerov,
}

/// Boundary condition for the discrete Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    Dirichlet,
    /// ψ(x + T) = phase · ψ(x) with phase = ±1.
    Periodic { phase: f64 },
}

/// Lowest eigenvalues of the discrete Hamiltonian on `[a, b]` with `n`
/// interior points (Dirichlet) or `n` cell points (periodic).
pub fn fd_eigenvalues(
    v: &dyn Fn(f64) -> Option<f64>,
    a: f64,
    b: f64,
    n: usize,
    boundary: Boundary,
    stencil: Stencil,
    n_states: usize,
) -> Result<Vec<f64>> {
    assert!(n >= 8, "grid too small");
    let (step, xs): (f64, Vec<f64>) = match boundary {
        Boundary::Dirichlet => {
            let step = (b - a) / (n as f64 + 1.0);
            (step, (1..=n).map(|i| a + step * i as f64).collect())
        }
        Boundary::Periodic { .. } => {
            let step = (b - a) / n as f64;
            // Half-step offset keeps cell-edge singular points off-grid.
            (step, (0..n).map(|i| a + step * (i as f64 + 0.5)).collect())
        }
    };
    let vs: Vec<f64> = xs
        .iter()
        .map(|&x| v(x).ok_or(Error::PointSingular { x }))
        .collect::<Result<Vec<_>>>()?;

    let h2 = step * step;
    let mut amat = DMatrix::<f64>::zeros(n, n);
    let mut bmat = DMatrix::<f64>::identity(n, n);
    let couple = |m: &mut DMatrix<f64>, i: usize, j: usize, val: f64| {
        m[(i, j)] += val;
    };
    for i in 0..n {
        couple(&mut amat, i, i, 2.0 / h2);
        let neighbors: Vec<(usize, f64)> = match boundary {
            Boundary::Dirichlet => {
                let mut nb = Vec::new();
                if i > 0 {
                    nb.push((i - 1, 1.0));
                }
                if i + 1 < n {
                    nb.push((i + 1, 1.0));
                }
                nb
            }
            Boundary::Periodic { phase } => {
                let mut nb = Vec::new();
                nb.push(((i + n - 1) % n, if i == 0 { phase } else { 1.0 }));
                nb.push(((i + 1) % n, if i + 1 == n { phase } else { 1.0 }));
                nb
            }
        };
        for &(j, w) in &neighbors {
            couple(&mut amat, i, j, -w / h2);
        }
        match stencil {
            Stencil::ThreePoint => {
                couple(&mut amat, i, i, vs[i]);
            }
            Stencil::Numerov => {
                // Numerov weighting: (1 + h²δ²/12) on both V and E sides.
                couple(&mut amat, i, i, vs[i] * 10.0 / 12.0);
                couple(&mut bmat, i, i, 10.0 / 12.0 - 1.0);
                for &(j, w) in &neighbors {
                    couple(&mut amat, i, j, w * vs[j] / 12.0);
                    couple(&mut bmat, i, j, w / 12.0);
                }
            }
        }
    }
    let mut out: Vec<f64> = match stencil {
        Stencil::ThreePoint => SymmetricEigen::new(amat).eigenvalues.iter().copied().collect(),
        Stencil::Numerov => {
            // A ψ = E B ψ with A = K + B·diag(V): eigenvalues of
            // C = B⁻¹K + diag(V), which are real although C is not
            // symmetric (it is similar to a symmetric matrix).
            let lu = bmat.lu();
            let c = lu
                .solve(&amat)
                .ok_or_else(|| Error::LinAlg("Numerov weight matrix is singular".into()))?;
            c.complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
                .map(|z| z.re)
                .collect()
        }
    };
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.truncate(n_states);
    Ok(out)
}

/// Richardson-extrapolated lowest eigenvalues over grids `n` and `2n`.
/// Both stencils converge at even order, so the n²-elimination
/// `(4·E_{2n} − E_n)/3` applies to the 3-point stencil; Numerov values
/// are already high order and are combined as `(16·E_{2n} − E_n)/15`.
pub fn fd_spectrum(
    v: &dyn Fn(f64) -> Option<f64>,
    a: f64,
    b: f64,
    n: usize,
    boundary: Boundary,
    stencil: Stencil,
    n_states: usize,
) -> Result<Vec<f64>> {
    let coarse = fd_eigenvalues(v, a, b, n, boundary, stencil, n_states)?;
    let fine = fd_eigenvalues(v, a, b, 2 * n, boundary, stencil, n_states)?;
    Ok(coarse
        .iter()
        .zip(fine.iter())
        .map(|(c, f)| match stencil {
            Stencil::ThreePoint => (4.0 * f - c) / 3.0,
            Stencil::Numerov => (16.0 * f - c) / 15.0,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// V = x²/4 has levels n + 1/2: unit spacing.
    #[test]
    fn harmonic_quarter_potential() {
        let v = |x: f64| Some(0.25 * x * x);
        let e = fd_spectrum(&v, -14.0, 14.0, 700, Boundary::Dirichlet, Stencil::ThreePoint, 5)
            .unwrap();
        for (i, ei) in e.iter().enumerate() {
            assert!(
                (ei - (i as f64 + 0.5)).abs() < 1e-4,
                "level {i}: {ei}"
            );
        }
    }

    #[test]
    fn numerov_beats_three_point_on_free_rotor() {
        // Free particle on a periodic cell of length 2π: E = m² (periodic)
        // and (m + 1/2)² (antiperiodic).
        let v = |_: f64| Some(0.0);
        let t = 2.0 * std::f64::consts::PI;
        let per = fd_eigenvalues(&v, 0.0, t, 160, Boundary::Periodic { phase: 1.0 }, Stencil::Numerov, 3).unwrap();
        assert!((per[0] - 0.0).abs() < 1e-8);
        assert!((per[1] - 1.0).abs() < 1e-6);
        assert!((per[2] - 1.0).abs() < 1e-6);
        let anti =
            fd_eigenvalues(&v, 0.0, t, 160, Boundary::Periodic { phase: -1.0 }, Stencil::Numerov, 2).unwrap();
        assert!((anti[0] - 0.25).abs() < 1e-6, "{}", anti[0]);
        assert!((anti[1] - 0.25).abs() < 1e-6);
    }
}
