//! Dense real nonsymmetric eigenvalues: balancing, reduction to upper
//! Hessenberg form by stabilized elimination, then the Francis double-shift
//! QR iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Max-row-sum norm.
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues with their verified residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    /// `min ‖Av − λv‖` over unit `v`, estimated by inverse iteration.
    pub residuals: Vec<f64>,
    pub norm: f64,
}

impl Spectrum {
    pub fn max_relative_residual(&self) -> f64 {
        let scale = self.norm.max(f64::MIN_POSITIVE);
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r / scale))
    }
}

/// All eigenvalues of `a` with an inverse-iteration residual per value.
pub fn spectrum(a: &DMatrix<f64>) -> Result<Spectrum> {
    let values = eigenvalues(a)?;
    let residuals = values.iter().map(|&l| eigen_residual(a, l)).collect();
    Ok(Spectrum {
        values,
        residuals,
        norm: norm_inf(a),
    })
}

/// All eigenvalues of a square real matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenConvergence {
            iterations: 0,
            norm: f64::NAN,
        });
    }
    // 1-based working copy keeps the classical index arithmetic readable.
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    balance(&mut h, n);
    hessenberg(&mut h, n);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            h[i][j] = 0.0;
        }
    }
    hqr(&mut h, n, 30 * n).map_err(|iterations| Error::EigenConvergence {
        iterations,
        norm: norm_inf(a),
    })
}

const RADIX: f64 = 2.0;

fn balance(a: &mut [Vec<f64>], n: usize) {
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based).
/// Returns the total sweep count on failure.
fn hqr(a: &mut [Vec<f64>], n: usize, max_sweeps: usize) -> std::result::Result<Vec<Complex64>, usize> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut total = 0usize;
    let mut nn = n as isize;
    let mut t = 0.0;
    while nn >= 1 {
        let nu = nn as usize;
        let mut its = 0;
        loop {
            // Look for a negligible subdiagonal element.
            let mut l = nu;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let y = a[nu - 1][nu - 1];
            let w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if total >= max_sweeps {
                return Err(total);
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for i in 1..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nu - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nu - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nu - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Residual `‖Av − λv‖` (unit `v`) after a few steps of inverse iteration
/// with a slightly perturbed shift.
pub fn eigen_residual(a: &DMatrix<f64>, lambda: Complex64) -> f64 {
    let n = a.nrows();
    let scale = norm_inf(a).max(f64::MIN_POSITIVE);
    let ac: DMatrix<Complex64> = a.map(|v| Complex64::new(v, 0.0));
    let residual_of = |v: &nalgebra::DVector<Complex64>| (&ac * v - v * lambda).norm();

    let mut best = f64::INFINITY;
    for perturb in [1e-13, 1e-11] {
        let shift = lambda + Complex64::new(perturb * scale, perturb * scale);
        let mut shifted = ac.clone();
        for i in 0..n {
            shifted[(i, i)] -= shift;
        }
        let lu = shifted.lu();
        let mut v = nalgebra::DVector::from_fn(n, |i, _| {
            Complex64::new(1.0 + 0.1 * i as f64, 0.01 * (i as f64 + 1.0).sqrt())
        });
        v /= Complex64::new(v.norm(), 0.0);
        for _ in 0..4 {
            let Some(next) = lu.solve(&v) else { break };
            let norm = next.norm();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            v = next / Complex64::new(norm, 0.0);
            best = best.min(residual_of(&v));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0]));
        let e = sorted(eigenvalues(&a).unwrap());
        let want = [-3.0, -2.0, -1.0];
        for (x, w) in e.iter().zip(want) {
            assert!((x.re - w).abs() < 1e-14 && x.im == 0.0);
        }
    }

    #[test]
    fn rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = sorted(eigenvalues(&a).unwrap());
        assert!(e[0].re.abs() < 1e-15 && (e[0].im + 1.0).abs() < 1e-15);
        assert!(e[1].re.abs() < 1e-15 && (e[1].im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn companion_cubic() {
        // (x − 1)(x − 2)(x − 3) = x³ − 6x² + 11x − 6
        let a = DMatrix::from_row_slice(3, 3, &[6.0, -11.0, 6.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let e = sorted(eigenvalues(&a).unwrap());
        for (x, w) in e.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x.re - w).abs() < 1e-12 && x.im.abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn one_by_one_and_empty() {
        let a = DMatrix::from_element(1, 1, 4.5);
        assert_eq!(eigenvalues(&a).unwrap(), vec![Complex64::new(4.5, 0.0)]);
        assert!(eigenvalues(&DMatrix::<f64>::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn non_finite_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(eigenvalues(&a).is_err());
    }

    #[test]
    fn residuals_are_small() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -3.0, 0.1, 4.0, 0.2, -1.0, 2.0]);
        let s = spectrum(&a).unwrap();
        assert!(s.max_relative_residual() < 1e-10, "{:?}", s.residuals);
    }
}
