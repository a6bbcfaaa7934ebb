//! Bounded positive steady state `u*_g` of `u_t = u_xx + u(g(x) − u)` on a
//! truncated line `[−L, L]` with zero-slope ends.
//!
//! The constants `lower(g)` and `upper(g)` are a lower and an upper solution,
//! so a monotone scheme started from either one converges monotonically to
//! `u*`. Both marches are run and must agree.

use crate::error::{Error, Result};
use crate::media::{GridMedium, QuasiPeriodicMedium};
use crate::tridiag::Tridiagonal;

const MAX_ITERATIONS: usize = 200_000;

#[derive(Clone, Debug)]
pub struct SteadyState {
    half_width: f64,
    dx: f64,
    values: Vec<f64>,
    medium: QuasiPeriodicMedium,
    tol: f64,
    residual_norm: f64,
    sandwich_gap: f64,
}

impl SteadyState {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn medium(&self) -> &QuasiPeriodicMedium {
        &self.medium
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Max distance between the march from above and the march from below.
    pub fn sandwich_gap(&self) -> f64 {
        self.sandwich_gap
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    pub fn domain(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= -self.half_width - 1e-9 * self.dx && x <= self.half_width + 1e-9 * self.dx
    }

    /// Cubic interpolation (linear in the end cells); outside `[−L, L]` the end values are continued
    /// flat, matching the zero-slope truncation.
    pub fn sample(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = (x + self.half_width) / self.dx;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = s.floor() as usize;
        let theta = s - i as f64;
        let u = &self.values;
        if theta == 0.0 {
            u[i]
        } else if i == 0 || i + 2 >= n {
            (1.0 - theta) * u[i] + theta * u[i + 1]
        } else {
            // Cubic Lagrange through nodes i-1..=i+2.
            let (a, b, c) = (theta + 1.0, theta - 1.0, theta - 2.0);
            -theta * b * c / 6.0 * u[i - 1] + a * b * c / 2.0 * u[i]
                - a * theta * c / 2.0 * u[i + 1]
                + a * theta * b / 6.0 * u[i + 2]
        }
    }

    pub fn sample_checked(&self, x: f64) -> Result<f64> {
        if self.contains(x) {
            Ok(self.sample(x))
        } else {
            Err(Error::OutsideSteadyDomain {
                x,
                lo: -self.half_width,
                hi: self.half_width,
            })
        }
    }
}

/// Max-norm of the discrete `u_xx + u(g − u)` with central differences and
/// zero-slope ghost nodes at both ends.
pub fn steady_residual(state: &SteadyState) -> f64 {
    let xs: Vec<f64> = (0..state.len()).map(|i| state.x(i)).collect();
    let g: Vec<f64> = xs.iter().map(|&x| state.medium.eval(x)).collect();
    residual_norm(&state.values, &g, state.dx)
}

pub(crate) fn residual_norm(u: &[f64], g: &[f64], dx: f64) -> f64 {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    let mut worst = 0.0f64;
    for i in 0..n {
        let left = if i == 0 { u[1] } else { u[i - 1] };
        let right = if i == n - 1 { u[n - 2] } else { u[i + 1] };
        let r = (left - 2.0 * u[i] + right) * inv + u[i] * (g[i] - u[i]);
        worst = worst.max(r.abs());
    }
    worst
}

struct Grid {
    n: usize,
    g: Vec<f64>,
}

fn grid(medium: &QuasiPeriodicMedium, half_width: f64, dx: f64) -> Result<Grid> {
    if !(dx > 0.0 && half_width > 0.0 && dx.is_finite() && half_width.is_finite()) {
        return Err(Error::InvalidInput("L and dx must be positive".into()));
    }
    let cells = half_width / dx;
    let m = cells.round();
    if (cells - m).abs() > 1e-9 * cells.max(1.0) || m < 2.0 {
        return Err(Error::InvalidInput(format!(
            "L/dx = {cells} must be an integer >= 2"
        )));
    }
    let n = 2 * m as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * dx).collect();
    let mut g = vec![0.0; n];
    GridMedium::new(medium, &xs).fill(0.0, &mut g);
    Ok(Grid { n, g })
}

/// Semi-implicit monotone march: implicit diffusion, explicit reaction, until
/// the residual drops below `target`. The step keeps `u + dt·u(g − u)`
/// increasing in `u` on the band, which makes the scheme order preserving.
fn march(
    grid: &Grid,
    dx: f64,
    init: f64,
    band: (f64, f64),
    target: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = grid.n;
    let g_min = grid.g.iter().cloned().fold(f64::INFINITY, f64::min);
    let u_max = band.1.max(init);
    let dt = (0.9 / (2.0 * u_max - g_min).max(1e-12)).min(1.0);
    let r = dt / (dx * dx);

    let mut a = vec![-r; n];
    let b = vec![1.0 + 2.0 * r; n];
    let mut c = vec![-r; n];
    // Zero-slope ghost nodes.
    c[0] = -2.0 * r;
    a[n - 1] = -2.0 * r;
    a[0] = 0.0;
    c[n - 1] = 0.0;

    let mut solver = Tridiagonal::new(n);
    let mut u = vec![init; n];
    let mut rhs = vec![0.0; n];
    let mut residual = residual_norm(&u, &grid.g, dx);
    let mut it = 0;
    while residual >= target {
        if it >= MAX_ITERATIONS {
            return Err(Error::SteadyNotConverged {
                iterations: it,
                residual,
            });
        }
        for i in 0..n {
            rhs[i] = u[i] + dt * u[i] * (grid.g[i] - u[i]);
        }
        solver.solve(&a, &b, &c, &mut rhs);
        std::mem::swap(&mut u, &mut rhs);
        for (i, &v) in u.iter().enumerate() {
            if !(v >= band.0 && v <= band.1) {
                return Err(Error::SteadyOutOfBand {
                    x: -(n as f64 - 1.0) / 2.0 * dx + i as f64 * dx,
                    lower: band.0,
                    upper: band.1,
                });
            }
        }
        residual = residual_norm(&u, &grid.g, dx);
        it += 1;
    }
    Ok((u, residual))
}

pub fn compute_steady_state(
    medium: &QuasiPeriodicMedium,
    half_width: f64,
    dx: f64,
    tol: f64,
) -> Result<SteadyState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let grid = grid(medium, half_width, dx)?;
    let (s, big_s) = medium.bounds();
    let band = (s * (1.0 - tol), big_s * (1.0 + tol));
    // Marching to a fraction of `tol` keeps the two limits within `tol`; the
    // floor is the rounding level of the second difference.
    let target = residual_target(tol, big_s, dx);
    let (upper, residual) = march(&grid, dx, big_s, band, target)?;
    let (lower, _) = march(&grid, dx, s, band, target)?;
    let sandwich_gap = upper
        .iter()
        .zip(&lower)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if sandwich_gap > tol {
        return Err(Error::SteadyNotConverged {
            iterations: MAX_ITERATIONS,
            residual: sandwich_gap,
        });
    }
    Ok(SteadyState {
        half_width,
        dx,
        values: upper,
        medium: medium.clone(),
        tol,
        residual_norm: residual,
        sandwich_gap,
    })
}

/// Marches from an arbitrary positive constant. Used to probe global
/// stability of `u*`.
pub fn march_from_constant(
    medium: &QuasiPeriodicMedium,
    half_width: f64,
    dx: f64,
    tol: f64,
    init: f64,
) -> Result<Vec<f64>> {
    if !(init > 0.0) {
        return Err(Error::InvalidInput("initial value must be positive".into()));
    }
    let grid = grid(medium, half_width, dx)?;
    let (s, big_s) = medium.bounds();
    let band = (s.min(init) * (1.0 - tol), big_s.max(init) * (1.0 + tol));
    march(
        &grid,
        dx,
        init,
        band,
        residual_target(tol, big_s.max(init), dx),
    )
    .map(|(u, _)| u)
}

fn residual_target(tol: f64, scale: f64, dx: f64) -> f64 {
    (0.01 * tol).max(64.0 * f64::EPSILON * scale / (dx * dx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Mode;
    use std::f64::consts::PI;

    #[test]
    fn constant_medium_is_exact() {
        let m = QuasiPeriodicMedium::constant(2.0).unwrap();
        let st = compute_steady_state(&m, 10.0, 0.1, 1e-9).unwrap();
        assert!(st.values().iter().all(|&u| (u - 2.0).abs() < 1e-8));
        assert_eq!(steady_residual(&st), 0.0);
    }

    #[test]
    fn trivial_zero_state_has_zero_residual() {
        let m = QuasiPeriodicMedium::constant(1.0).unwrap();
        let mut st = compute_steady_state(&m, 5.0, 0.5, 1e-9).unwrap();
        st.values.iter_mut().for_each(|u| *u = 0.0);
        assert_eq!(steady_residual(&st), 0.0);
    }

    #[test]
    fn converged_residual_below_tol() {
        let m = QuasiPeriodicMedium::default_quasi_periodic();
        let st = compute_steady_state(&m, 30.0, 0.05, 1e-9).unwrap();
        assert!(steady_residual(&st) <= 1e-9);
        assert!(st.sandwich_gap() <= 1e-9);
        let (lo, hi) = m.bounds();
        assert!(st.values().iter().all(|&u| u >= lo && u <= hi));
    }

    #[test]
    fn global_stability_from_other_constants() {
        let m = QuasiPeriodicMedium::new(1.0, vec![Mode::new(0.5, 1.0, -PI / 2.0)]).unwrap();
        let dx = 2.0 * PI / 64.0;
        let half = 8.0 * PI;
        let tol = 1e-9;
        let st = compute_steady_state(&m, half, dx, tol).unwrap();
        for init in [0.25, 3.0] {
            let u = march_from_constant(&m, half, dx, tol, init).unwrap();
            let gap = u
                .iter()
                .zip(st.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(gap < tol, "init {init}: gap {gap}");
        }
    }

    #[test]
    fn second_order_in_dx() {
        // Richardson: errors against a fine reference shrink ~4x per halving.
        let m = QuasiPeriodicMedium::new(1.0, vec![Mode::new(0.5, 1.0, -PI / 2.0)]).unwrap();
        let half = 8.0 * PI;
        let base_dx = 2.0 * PI / 16.0;
        let runs: Vec<SteadyState> = (0..4)
            .map(|k| compute_steady_state(&m, half, base_dx / f64::powi(2.0, k), 1e-9).unwrap())
            .collect();
        let fine = &runs[3];
        let err = |st: &SteadyState| {
            let stride = (st.dx() / fine.dx()).round() as usize;
            (0..st.len())
                .map(|i| (st.values()[i] - fine.values()[i * stride]).abs())
                .fold(0.0, f64::max)
        };
        let e0 = err(&runs[0]);
        let e1 = err(&runs[1]);
        assert!(e0 / e1 > 3.0, "ratio {}", e0 / e1);
    }

    #[test]
    fn rejects_bad_grid() {
        let m = QuasiPeriodicMedium::constant(1.0).unwrap();
        assert!(compute_steady_state(&m, 1.0, 0.3, 1e-9).is_err());
        assert!(compute_steady_state(&m, 1.0, 0.25, 0.0).is_err());
    }

    #[test]
    fn sample_clamps_and_checks() {
        let m = QuasiPeriodicMedium::default_periodic();
        let st = compute_steady_state(&m, 10.0, 0.25, 1e-9).unwrap();
        assert_eq!(st.sample(-100.0), st.values()[0]);
        assert_eq!(st.sample(st.x(7)), st.values()[7]);
        assert!(st.sample_checked(10.5).is_err());
        assert!(st.sample_checked(9.9).is_ok());
    }
}
