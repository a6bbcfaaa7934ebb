/// Thomas algorithm for `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
///
/// `a[0]` and `c[n-1]` are ignored. Scratch space is kept between calls so
/// time-stepping loops do not allocate.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tridiagonal {
    c_prime: Vec<f64>,
}

impl Tridiagonal {
    pub(crate) fn new(n: usize) -> Self {
        Tridiagonal {
            c_prime: vec![0.0; n],
        }
    }

    /// Solves in place: `d` holds the right-hand side on entry and the
    /// solution on exit. The matrix must be nonsingular without pivoting
    /// (diagonally dominant in every use here).
    pub(crate) fn solve(&mut self, a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
        let n = d.len();
        debug_assert!(a.len() == n && b.len() == n && c.len() == n);
        if self.c_prime.len() < n {
            self.c_prime.resize(n, 0.0);
        }
        let cp = &mut self.c_prime[..n];
        let mut denom = b[0];
        cp[0] = c[0] / denom;
        d[0] /= denom;
        for i in 1..n {
            denom = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / denom;
            d[i] = (d[i] - a[i] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= cp[i] * d[i + 1];
        }
    }
}

/// Tridiagonal systems whose rows share coefficients `(a, b, c)` except the
/// first row `(·, b0, c0)`.
///
/// The elimination multipliers `c'_i = c / (b − a c'_{i−1})` become stationary
/// after a few rows when the matrix is diagonally dominant; from then on the
/// same multipliers are reused, turning the sweeps into division-free loops.
#[derive(Clone, Debug, Default)]
pub(crate) struct ToeplitzTridiagonal {
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
    lookahead: Vec<f64>,
}

impl ToeplitzTridiagonal {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn solve(&mut self, b0: f64, c0: f64, a: f64, b: f64, c: f64, d: &mut [f64]) {
        let n = d.len();
        if n == 0 {
            return;
        }
        self.c_prime.clear();
        self.inv_denom.clear();
        let mut inv = 1.0 / b0;
        let mut cp = c0 * inv;
        self.c_prime.push(cp);
        self.inv_denom.push(inv);
        // Rows [0, k) use tabulated multipliers, rows >= k the (ulp-level) stationary pair.
        let mut k = n;
        for i in 1..n {
            let inv_i = 1.0 / (b - a * cp);
            let cp_i = c * inv_i;
            if (cp_i - cp).abs() <= 4.0 * f64::EPSILON * cp.abs()
                && (inv_i - inv).abs() <= 4.0 * f64::EPSILON * inv.abs()
            {
                k = i;
                break;
            }
            inv = inv_i;
            cp = cp_i;
            self.c_prime.push(cp);
            self.inv_denom.push(inv);
        }
        let (cp_s, inv_s) = (cp, inv);
        let a_inv = a * inv_s;

        d[0] *= self.inv_denom[0];
        for i in 1..k {
            d[i] = (d[i] - a * d[i - 1]) * self.inv_denom[i];
        }
        let start = k.max(1);
        for v in d[start..].iter_mut() {
            *v *= inv_s;
        }
        linear_recurrence(
            &mut d[start.saturating_sub(1)..],
            -a_inv,
            &mut self.lookahead,
        );
        linear_recurrence_rev(&mut d[k.min(n)..], -cp_s, &mut self.lookahead);
        for i in (0..k.min(n - 1)).rev() {
            d[i] -= self.c_prime[i] * d[i + 1];
        }
    }
}

/// In place `y_0 = x_0`, `y_i = x_i + beta * y_{i-1}`.
///
/// Unrolled four ways so the loop-carried chain is `y_{i-4}`, not `y_{i-1}`.
fn linear_recurrence(x: &mut [f64], beta: f64, scratch: &mut Vec<f64>) {
    let n = x.len();
    if n < 8 {
        for i in 1..n {
            x[i] += beta * x[i - 1];
        }
        return;
    }
    let (b2, b3) = (beta * beta, beta * beta * beta);
    let b4 = b2 * b2;
    scratch.clear();
    scratch.extend((4..n).map(|i| x[i] + beta * x[i - 1] + b2 * x[i - 2] + b3 * x[i - 3]));
    for i in 1..4 {
        x[i] += beta * x[i - 1];
    }
    for (i, &s) in (4..n).zip(scratch.iter()) {
        x[i] = s + b4 * x[i - 4];
    }
}

/// Mirror of [`linear_recurrence`] running from the last element down.
fn linear_recurrence_rev(x: &mut [f64], beta: f64, scratch: &mut Vec<f64>) {
    let n = x.len();
    if n < 8 {
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] += beta * x[i + 1];
        }
        return;
    }
    let (b2, b3) = (beta * beta, beta * beta * beta);
    let b4 = b2 * b2;
    scratch.clear();
    scratch.extend((0..n - 4).map(|i| x[i] + beta * x[i + 1] + b2 * x[i + 2] + b3 * x[i + 3]));
    for i in (n - 4..n - 1).rev() {
        x[i] += beta * x[i + 1];
    }
    for i in (0..n - 4).rev() {
        x[i] = scratch[i] + b4 * x[i + 4];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 1 0; 1 3 1; 0 1 2] x = [3, 5, 3] -> x = [1, 1, 1]
        let a = [0.0, 1.0, 1.0];
        let b = [2.0, 3.0, 2.0];
        let c = [1.0, 1.0, 0.0];
        let mut d = [3.0, 5.0, 3.0];
        Tridiagonal::new(3).solve(&a, &b, &c, &mut d);
        for x in d {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn toeplitz_matches_general() {
        for &(n, b0, c0, a, b, c) in &[
            (1usize, 2.0, 0.0, -0.5, 2.0, -0.5),
            (7, 2.0, -1.0, -0.45, 2.0, -0.55),
            (500, 3.0, -2.0, -0.9, 3.0, -1.1),
            (2000, 1.1, -0.05, -0.04, 1.1, -0.06),
        ] {
            let rhs: Vec<f64> = (0..n).map(|i| 1.0 + (0.37 * i as f64).sin()).collect();
            let mut av = vec![a; n];
            av[0] = 0.0;
            let mut bv = vec![b; n];
            bv[0] = b0;
            let mut cv = vec![c; n];
            cv[0] = c0;
            let mut x1 = rhs.clone();
            Tridiagonal::new(n).solve(&av, &bv, &cv, &mut x1);
            let mut x2 = rhs.clone();
            ToeplitzTridiagonal::new().solve(b0, c0, a, b, c, &mut x2);
            for (p, q) in x1.iter().zip(&x2) {
                assert!(
                    (p - q).abs() < 1e-13 * p.abs().max(1.0),
                    "n={n}: {p} vs {q}"
                );
            }
        }
    }

    #[test]
    fn matches_dense_residual() {
        let n = 50;
        let a: Vec<f64> = (0..n).map(|i| -1.0 - 0.01 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 4.0 + (i % 3) as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| -0.5 + 0.001 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = rhs.clone();
        Tridiagonal::new(n).solve(&a, &b, &c, &mut x);
        for i in 0..n {
            let mut r = b[i] * x[i] - rhs[i];
            if i > 0 {
                r += a[i] * x[i - 1];
            }
            if i + 1 < n {
                r += c[i] * x[i + 1];
            }
            assert!(r.abs() < 1e-13);
        }
    }
}
