//! Small self-contained numerical kernels: root bracketing, the error
//! function, symmetric tridiagonal eigensolves, dense complex linear algebra
//! at the sizes the cascade module needs, and log-linear fitting.

use num_complex::Complex64 as C64;

/// Bisection on a monotone function over `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must bracket a root. Converges to `tol` in the
/// argument; exact and branch-free for monotone inputs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    debug_assert!(
        flo * fhi <= 0.0,
        "bisect: endpoints do not bracket a root ({flo}, {fhi})"
    );
    // 200 halvings take any bracket below f64 resolution.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() < tol {
            return mid;
        }
        let fmid = f(mid);
        if flo * fmid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Error function, accurate to ~1e-13 over the real line.
///
/// Alternating Maclaurin series for |x| <= 2, Lentz continued fraction for
/// erfc beyond.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 2.0 {
        // erf(x) = 2/sqrt(pi) * sum_k (-1)^k x^(2k+1) / (k! (2k+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0f64;
        loop {
            k += 1.0;
            term *= -x2 / k;
            let contrib = term / (2.0 * k + 1.0);
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        1.0 - erfc_cf(x)
    }
}

/// Complementary error function for x > 0 via Lentz's continued fraction.
fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let tiny = 1e-300;
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = 0.0f64;
    let mut n = 0.5f64;
    for _ in 0..200 {
        d = x + n * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + n / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
        n += 0.5;
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / f
}

/// Count eigenvalues of a symmetric tridiagonal matrix strictly below
/// `lambda` via the Sturm sequence (number of negative LDL^T pivots).
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for (i, d) in diag.iter().enumerate() {
        let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        let q_safe = if q.abs() < 1e-300 {
            1e-300f64.copysign(q)
        } else {
            q
        };
        q = (d - lambda) - e2 / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiag_lowest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    assert!(n > 0 && off.len() + 1 == n);
    // Gershgorin bounds.
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let el = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let er = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - el - er);
        hi = hi.max(diag[i] + el + er);
    }
    let (mut a, mut b) = (lo - 1.0, hi + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) < 2.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        if sturm_count(diag, off, mid) < 1 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Eigenvector of a symmetric tridiagonal matrix for an isolated eigenvalue,
/// by inverse iteration with a Thomas solve on the shifted matrix.
///
/// Returns the l2-normalized vector.
pub fn tridiag_eigenvector(diag: &[f64], off: &[f64], eigenvalue: f64) -> Vec<f64> {
    let n = diag.len();
    // Small shift keeps the factorization nonsingular.
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()))
        + off.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let shift = eigenvalue + 1e-12 * scale.max(1.0);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    normalize(&mut v);
    let mut work_c = vec![0.0f64; n];
    let mut work_d = vec![0.0f64; n];
    for _ in 0..4 {
        thomas_solve(diag, off, shift, &mut v, &mut work_c, &mut work_d);
        normalize(&mut v);
    }
    v
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Solve (T - shift I) x = b in place (b -> x) for symmetric tridiagonal T.
fn thomas_solve(
    diag: &[f64],
    off: &[f64],
    shift: f64,
    b: &mut [f64],
    cp: &mut [f64],
    dp: &mut [f64],
) {
    let n = diag.len();
    let tiny = 1e-300;
    let mut denom = diag[0] - shift;
    if denom.abs() < tiny {
        denom = tiny;
    }
    cp[0] = off.first().copied().unwrap_or(0.0) / denom;
    dp[0] = b[0] / denom;
    for i in 1..n {
        let mut m = (diag[i] - shift) - off[i - 1] * cp[i - 1];
        if m.abs() < tiny {
            m = tiny;
        }
        cp[i] = if i < n - 1 { off[i] / m } else { 0.0 };
        dp[i] = (b[i] - off[i - 1] * dp[i - 1]) / m;
    }
    b[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        b[i] = dp[i] - cp[i] * b[i + 1];
    }
}

/// Solve the dense complex system `a x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major n x n and is consumed.
pub fn solve_complex(mut a: Vec<C64>, mut b: Vec<C64>, n: usize) -> Option<Vec<C64>> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = a[row * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = C64::new(1.0, 0.0) / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let t = a[col * n + k];
                a[row * n + k] -= factor * t;
            }
            let t = b[col];
            b[row] -= factor * t;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(b)
}

/// Null space of a dense complex n x n matrix (row-major), up to `max_dim`
/// basis vectors. Pivots below `tol * max_pivot` count as zero.
pub fn null_space_complex(mut a: Vec<C64>, n: usize, tol: f64) -> Vec<Vec<C64>> {
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    let mut max_pivot = 0.0f64;
    for col in 0..n {
        let mut piv = row;
        let mut best = 0.0;
        for r in row..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        max_pivot = max_pivot.max(best);
        if best <= tol * max_pivot.max(1e-300) {
            continue;
        }
        if piv != row {
            for k in 0..n {
                a.swap(row * n + k, piv * n + k);
            }
        }
        let inv = C64::new(1.0, 0.0) / a[row * n + col];
        for k in col..n {
            a[row * n + k] *= inv;
        }
        for r in 0..n {
            if r == row {
                continue;
            }
            let factor = a[r * n + col];
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let t = a[row * n + k];
                a[r * n + k] -= factor * t;
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[fc] = C64::new(1.0, 0.0);
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -a[r * n + fc];
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        basis.push(v);
    }
    basis
}

/// All eigenvalues of a real symmetric matrix (row-major n x n) by cyclic
/// Jacobi rotations. Intended for the small matrices of the cascade module;
/// O(n^3) per sweep.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-28 * (n * n) as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Eigenvalues of a complex Hermitian matrix via the real symmetric
/// embedding [[Re, -Im], [Im, Re]]; each eigenvalue appears twice.
pub fn hermitian_eigenvalues(h: &[C64], n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            a[i * m + j] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
            a[(i + n) * m + (j + n)] = z.re;
        }
    }
    let doubled = jacobi_eigenvalues(a, m);
    doubled.into_iter().step_by(2).collect()
}

/// Log-linear least-squares fit of `values ~ exp(-rate * t)`.
///
/// Returns `(rate, rms_log_residual)`.
pub fn log_linear_rate(times: &[f64], values: &[f64]) -> (f64, f64) {
    assert_eq!(times.len(), values.len());
    let logs: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = times.len() as f64;
    let mean_t = times.iter().sum::<f64>() / n;
    let mean_l = logs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, l) in times.iter().zip(&logs) {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (l - mean_l);
    }
    let slope = sxy / sxx;
    let intercept = mean_l - slope * mean_t;
    let mut ss = 0.0;
    for (t, l) in times.iter().zip(&logs) {
        let r = l - (intercept + slope * t);
        ss += r * r;
    }
    (-slope, (ss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        // Frozen from standard tables.
        let cases = [
            (0.5, 0.5204998778130465),
            (1.0, 0.8427007929497149),
            (2.0, 0.9953222650189527),
            (3.0, 0.9999779095030014),
        ];
        for (x, want) in cases {
            assert!((erf(x) - want).abs() < 1e-12, "erf({x})");
            assert!((erf(-x) + want).abs() < 1e-12, "erf(-{x})");
        }
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((root - 2.0f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn tridiag_matches_known_chain_spectrum() {
        // Free chain with hopping -1: eigenvalues -2 cos(pi j / (n+1)).
        let n = 64;
        let diag = vec![0.0; n];
        let off = vec![-1.0; n - 1];
        let lowest = tridiag_lowest_eigenvalue(&diag, &off);
        let want = -2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((lowest - want).abs() < 1e-12);

        let v = tridiag_eigenvector(&diag, &off, lowest);
        // Residual check: (T - E) v ~ 0.
        let mut res = 0.0f64;
        for i in 0..n {
            let mut acc = diag[i] * v[i] - lowest * v[i];
            if i > 0 {
                acc += off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += off[i] * v[i + 1];
            }
            res = res.max(acc.abs());
        }
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn complex_solve_roundtrip() {
        let n = 5;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = C64::new(
                    ((i * 3 + j * 7) % 11) as f64 - 5.0,
                    ((i * 5 + j * 2) % 7) as f64 - 3.0,
                );
            }
            a[i * n + i] += C64::new(10.0, 0.0);
        }
        let x_true: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let mut b = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[i * n + j] * x_true[j];
            }
        }
        let x = solve_complex(a, b, n).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn null_space_of_projector() {
        // diag(1, 1, 0, 0) has a two-dimensional null space.
        let n = 4;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        a[0] = C64::new(1.0, 0.0);
        a[5] = C64::new(1.0, 0.0);
        let basis = null_space_complex(a, n, 1e-12);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(v[0].norm() < 1e-14 && v[1].norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_eigenvalues_pauli_y_like() {
        // [[0, -i], [i, 0]] has eigenvalues -1, +1.
        let h = vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ];
        let eig = hermitian_eigenvalues(&h, 2);
        assert!((eig[0] + 1.0).abs() < 1e-10);
        assert!((eig[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_linear_fit_exact_exponential() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.3).collect();
        let values: Vec<f64> = times.iter().map(|t| (-0.37 * t).exp()).collect();
        let (rate, residual) = log_linear_rate(&times, &values);
        assert!((rate - 0.37).abs() < 1e-12);
        assert!(residual < 1e-12);
    }
}
