//! Linear-algebra stage: the energy pencil A c = E B c extracted from
//! rows linear in the expansion coefficients and affine in the energy,
//! null spaces at fixed energy, and least-squares fitting of adjustable
//! potential entries from surplus rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs of the (possibly singular-B) pencil A c = E B c.
///
/// Nearly-real eigenvalues are realified at relative tolerance `realify`;
/// genuinely complex ones are dropped (counted in `complex_dropped`).
pub struct PencilSolution {
    pub pairs: Vec<(f64, Vec<f64>)>,
    pub complex_dropped: usize,
}

pub fn solve_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>, realify: f64) -> Result<PencilSolution> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let scale = a.amax().max(b.amax()).max(1.0);

    // Prefer the direct route when B is comfortably invertible; otherwise
    // shift-invert around deterministic probes (handles singular B, i.e.
    // infinite eigenvalues).
    let mut eigs: Option<Vec<f64>> = None;
    let mut complex_dropped = 0usize;
    if let Some(binv) = b.clone().try_inverse() {
        if binv.amax() * b.amax() < 1e10 {
            let m = &binv * a;
            let (vals, dropped) = near_real(m.complex_eigenvalues().as_slice(), realify);
            eigs = Some(vals);
            complex_dropped = dropped;
        }
    }
    if eigs.is_none() {
        let probes = [0.618_033_988_749, -1.0, 2.414, -3.162, 7.389, 0.0, 13.7];
        'probe: for p in probes {
            let sigma = p * scale / 4.0;
            let shifted = a - b * sigma;
            let Some(inv) = shifted.clone().try_inverse() else { continue };
            if inv.amax() * shifted.amax() > 1e12 {
                continue;
            }
            let m = &inv * b;
            let (mus, dropped) = near_real(m.complex_eigenvalues().as_slice(), realify);
            let mut vals = Vec::new();
            for mu in mus {
                if mu.abs() > 1e-10 {
                    vals.push(sigma + 1.0 / mu);
                }
            }
            eigs = Some(vals);
            complex_dropped = dropped;
            break 'probe;
        }
    }
    let Some(mut eigs) = eigs else {
        return Err(Error::NoPencilSolution);
    };
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * (1.0 + x.abs().max(y.abs())));

    let mut pairs = Vec::new();
    for e in eigs {
        if !e.is_finite() {
            continue;
        }
        let m = a - b * e;
        if let Some(v) = null_vector(&m, 1e-7) {
            pairs.push((e, v));
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoPencilSolution);
    }
    Ok(PencilSolution { pairs, complex_dropped })
}

fn near_real(zs: &[nalgebra::Complex<f64>], realify: f64) -> (Vec<f64>, usize) {
    let mut out = Vec::new();
    let mut dropped = 0;
    for z in zs {
        if z.im.abs() <= realify * (1.0 + z.re.abs()) {
            out.push(z.re);
        } else {
            dropped += 1;
        }
    }
    (out, dropped)
}

/// Unit-norm null vector of M (smallest singular direction), accepted when
/// the smallest singular value is below `tol` relative to the largest.
pub fn null_vector(m: &DMatrix<f64>, tol: f64) -> Option<Vec<f64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref()?;
    let (min_idx, min_sv) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    let max_sv = svd.singular_values.max();
    if *min_sv > tol * max_sv.max(1.0) {
        return None;
    }
    Some(vt.row(min_idx).iter().copied().collect())
}

/// All near-null directions of a (possibly rectangular) matrix. The
/// matrix is zero-padded to at least as many rows as columns so that the
/// full orthogonal complement is reported.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let mut work = m.clone();
    if work.nrows() < work.ncols() {
        work = work.insert_rows(m.nrows(), m.ncols() - m.nrows(), 0.0);
    }
    let svd = work.svd(false, true);
    let vt = match svd.v_t.as_ref() {
        Some(v) => v,
        None => return Vec::new(),
    };
    let max_sv = svd.singular_values.max().max(1.0);
    let mut out = Vec::new();
    for (i, sv) in svd.singular_values.iter().enumerate() {
        if *sv <= tol * max_sv {
            out.push(vt.row(i).iter().copied().collect());
        }
    }
    out
}

/// Least squares solve; returns (solution, residual ∞-norm).
pub fn least_squares(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let svd = m.clone().svd(true, true);
    let sol = svd
        .solve(rhs, 1e-12)
        .map_err(|e| Error::LinAlg(e.to_string()))?;
    let resid = (m * &sol - rhs).amax();
    Ok((sol.iter().copied().collect(), resid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_with_singular_b() {
        // A = [[0, 2], [3, 0]], B = [[1, 0], [0, 0]]: only finite
        // eigenpair comes from row structure: 3x = 0 → x = 0, 2y = E x...
        // Classic singular pencil: finite eigenvalue E with c = (x, y):
        // rows: 0·x + 2y = E x ; 3x + 0 = 0 → x = 0, then 2y = 0 — no
        // nontrivial finite solution. Use a well-posed singular-B case:
        // A = [[1, 0], [0, 1]], B = [[1, 0], [0, 0]]: E = 1 with c = e1.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let sol = solve_pencil(&a, &b, 1e-9).unwrap();
        assert!(sol.pairs.iter().any(|(e, v)| (e - 1.0).abs() < 1e-9 && v[0].abs() > 0.9));
    }

    #[test]
    fn pencil_standard_case() {
        // B = I: plain eigenvalues of A = diag(2, 5).
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let b = DMatrix::identity(2, 2);
        let sol = solve_pencil(&a, &b, 1e-9).unwrap();
        let mut es: Vec<f64> = sol.pairs.iter().map(|p| p.0).collect();
        es.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((es[0] - 2.0).abs() < 1e-10 && (es[1] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn null_vector_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let v = null_vector(&m, 1e-9).unwrap();
        let r = m * DVector::from_vec(v);
        assert!(r.amax() < 1e-9);
    }
}
