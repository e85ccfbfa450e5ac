//! Jacobi elliptic functions sn, cn, dn and the complete integral K(k),
//! by the arithmetic-geometric mean / descending Landen transformation.
//!
//! Conventions: modulus `k` with 0 ≤ k ≤ 1 (not the parameter m = k²).

/// Result of [`sncndn`].
#[derive(Clone, Copy, Debug)]
pub struct Sncndn {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// Complete elliptic integral of the first kind K(k) via the AGM.
/// K(1) diverges and returns `f64::INFINITY`.
pub fn ellip_k(k: f64) -> f64 {
    assert!((0.0..=1.0).contains(&k), "modulus out of range");
    if k == 1.0 {
        return f64::INFINITY;
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - k * k).sqrt();
    while (a - b).abs() > 1e-16 * a {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::FRAC_PI_2 / a
}

/// Jacobi elliptic functions of real argument `u` and modulus `k`.
///
/// Uses the descending AGM recursion with backward substitution of the
/// amplitude; accurate to close to machine precision for moderate `u`.
pub fn sncndn(u: f64, k: f64) -> Sncndn {
    assert!((0.0..=1.0).contains(&k), "modulus out of range");
    let m = k * k;
    if m < 1e-14 {
        // Trigonometric limit with the first-order correction in m.
        let (s, c) = u.sin_cos();
        return Sncndn {
            sn: s - 0.25 * m * (u - s * c) * c,
            cn: c + 0.25 * m * (u - s * c) * s,
            dn: 1.0 - 0.5 * m * s * s,
        };
    }
    if (1.0 - m) < 1e-14 {
        // Hyperbolic limit.
        let s = u.tanh();
        let c = 1.0 / u.cosh();
        return Sncndn { sn: s, cn: c, dn: c };
    }
    let mut a = vec![1.0_f64];
    let mut c = vec![k];
    let mut b = (1.0 - m).sqrt();
    let mut n = 0;
    while c[n].abs() > 1e-16 * a[n] && n < 64 {
        let an = 0.5 * (a[n] + b);
        let cn = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        a.push(an);
        c.push(cn);
        n += 1;
    }
    let mut phi = a[n] * u * 2.0_f64.powi(n as i32);
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = (1.0 - m * sn * sn).sqrt();
    Sncndn { sn, cn, dn }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits() {
        let v = sncndn(0.7, 0.0);
        assert!((v.sn - 0.7_f64.sin()).abs() < 1e-12);
        assert!((v.cn - 0.7_f64.cos()).abs() < 1e-12);
        assert!((v.dn - 1.0).abs() < 1e-12);
        let w = sncndn(0.7, 1.0);
        assert!((w.sn - 0.7_f64.tanh()).abs() < 1e-12);
        assert!((ellip_k(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn pythagorean_identities() {
        for &k in &[0.1, 0.5, 0.9, 0.99] {
            for i in 0..40 {
                let u = -4.0 + 0.2 * i as f64;
                let v = sncndn(u, k);
                assert!((v.sn * v.sn + v.cn * v.cn - 1.0).abs() < 1e-12, "sn²+cn² at u={u} k={k}");
                assert!((v.dn * v.dn + k * k * v.sn * v.sn - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quarter_period() {
        // sn(K) = 1, cn(K) = 0, dn(K) = k' for each modulus.
        for &k in &[0.3, 0.5, 0.8] {
            let kk = ellip_k(k);
            let v = sncndn(kk, k);
            assert!((v.sn - 1.0).abs() < 1e-10);
            assert!(v.cn.abs() < 1e-10);
            assert!((v.dn - (1.0 - k * k).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        // d/du sn = cn·dn
        let (k, u, h) = (0.6, 0.9, 1e-6);
        let p = sncndn(u + h, k);
        let m = sncndn(u - h, k);
        let d = (p.sn - m.sn) / (2.0 * h);
        let v = sncndn(u, k);
        assert!((d - v.cn * v.dn).abs() < 1e-8);
    }
}
