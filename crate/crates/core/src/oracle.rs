//! Shooting solver for the constant-medium semi-wave.
//!
//! On `ξ ≤ 0` the profile `u(x, t) = q(x − ct)` satisfies
//!
//! ```text
//! q'' + c q' + q (a0 − q) = 0,   q(−∞) = a0,   q(0) = 0,   c = −μ q'(0).
//! ```
//!
//! For `0 < c < 2√a0` the unstable manifold of `(a0, 0)` reaches `q = 0` at a
//! finite point with negative slope; the speed is the root of
//! `Φ(c) = −μ q'(0; c) − c`.

use crate::error::{Error, Result};

/// Offset from `a0` on the unstable manifold where integration starts.
pub const MANIFOLD_OFFSET: f64 = 1e-6;
pub const DEFAULT_ODE_DX: f64 = 1e-3;
pub const DEFAULT_L_FAR: f64 = 400.0;

#[derive(Clone, Debug)]
pub struct ShootProfile {
    /// Increasing, ending at 0.
    pub xi: Vec<f64>,
    pub q: Vec<f64>,
    pub slope0: f64,
    /// Exit rate of the unstable manifold; `a0 − q ~ e^{λ ξ}` in the tail.
    pub lambda: f64,
    pub a0: f64,
}

impl ShootProfile {
    /// Profile value at `ξ ≤ 0`; left of the integrated range the linear
    /// manifold is used.
    pub fn eval(&self, xi: f64) -> f64 {
        if xi >= 0.0 {
            return 0.0;
        }
        let start = self.xi[0];
        if xi <= start {
            return self.a0 - MANIFOLD_OFFSET * (self.lambda * (xi - start)).exp();
        }
        let k = self.xi.partition_point(|&s| s <= xi).saturating_sub(1);
        let k = k.min(self.xi.len() - 2);
        let theta = (xi - self.xi[k]) / (self.xi[k + 1] - self.xi[k]);
        (1.0 - theta) * self.q[k] + theta * self.q[k + 1]
    }
}

#[derive(Clone, Debug)]
pub struct ShootingResult {
    pub a0: f64,
    pub mu: f64,
    pub c: f64,
    pub profile: ShootProfile,
    pub slope0: f64,
    /// `|c + μ q'(0)|`.
    pub residual: f64,
    /// `Φ` sampled on the bracket was strictly decreasing.
    pub phi_monotone: bool,
}

#[inline]
fn rhs(a0: f64, c: f64, (q, p): (f64, f64)) -> (f64, f64) {
    (p, -c * p - q * (a0 - q))
}

#[inline]
fn rk4(a0: f64, c: f64, y: (f64, f64), h: f64) -> (f64, f64) {
    let k1 = rhs(a0, c, y);
    let k2 = rhs(a0, c, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
    let k3 = rhs(a0, c, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
    let k4 = rhs(a0, c, (y.0 + h * k3.0, y.1 + h * k3.1));
    (
        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

pub fn shoot_profile(a0: f64, c: f64, l_far: f64, ode_dx: f64) -> Result<ShootProfile> {
    if !(a0 > 0.0) || !(ode_dx > 0.0) || !(l_far > 0.0) {
        return Err(Error::InvalidInput(
            "a0, ode_dx and L_far must be positive".into(),
        ));
    }
    if !(c > 0.0 && c < 2.0 * a0.sqrt()) {
        return Err(Error::InvalidInput(format!(
            "speed {c} outside (0, 2*sqrt(a0)) = (0, {})",
            2.0 * a0.sqrt()
        )));
    }
    let lambda = 0.5 * (-c + (c * c + 4.0 * a0).sqrt());
    let mut y = (a0 - MANIFOLD_OFFSET, -lambda * MANIFOLD_OFFSET);
    let mut s = 0.0;
    let mut xs = vec![0.0];
    let mut qs = vec![y.0];
    loop {
        let next = rk4(a0, c, y, ode_dx);
        if next.0 > a0 {
            return Err(Error::WrongManifold { c });
        }
        if next.0 <= 0.0 {
            // Locate the crossing inside the step with sub-steps of the same scheme.
            let (mut lo, mut hi) = (0.0, ode_dx);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if rk4(a0, c, y, mid).0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * ode_dx {
                    break;
                }
            }
            let theta = 0.5 * (lo + hi);
            let end = rk4(a0, c, y, theta);
            let crossing = s + theta;
            let mut xi: Vec<f64> = xs.iter().map(|&x| x - crossing).collect();
            xi.push(0.0);
            qs.push(0.0);
            if theta < 1e-12 * ode_dx {
                // Degenerate sub-step; drop the duplicate node.
                xi.remove(xi.len() - 2);
                qs.remove(qs.len() - 2);
            }
            return Ok(ShootProfile {
                xi,
                q: qs,
                slope0: end.1,
                lambda,
                a0,
            });
        }
        y = next;
        s += ode_dx;
        xs.push(s);
        qs.push(y.0);
        if s > l_far {
            return Err(Error::NoZeroCrossing { l_far });
        }
    }
}

fn phi(a0: f64, mu: f64, c: f64) -> Result<f64> {
    let prof = shoot_profile(a0, c, DEFAULT_L_FAR, DEFAULT_ODE_DX)?;
    Ok(-mu * prof.slope0 - c)
}

/// Bisection for the semi-wave speed of the constant medium `a0`.
pub fn solve_speed(a0: f64, mu: f64, tol: f64) -> Result<ShootingResult> {
    if !(a0 > 0.0 && mu > 0.0 && tol > 0.0) {
        return Err(Error::InvalidInput(
            "a0, mu and tol must be positive".into(),
        ));
    }
    let c_max = 2.0 * a0.sqrt();
    let (mut lo, mut hi) = (1e-6 * c_max, (1.0 - 1e-3) * c_max);
    let phi_lo = phi(a0, mu, lo)?;
    let phi_hi = phi(a0, mu, hi)?;
    if !(phi_lo > 0.0 && phi_hi < 0.0) {
        return Err(Error::NoBracket { phi_lo, phi_hi });
    }
    let samples: Result<Vec<f64>> = (0..=16)
        .map(|k| phi(a0, mu, lo + (hi - lo) * k as f64 / 16.0))
        .collect();
    let samples = samples?;
    let phi_monotone = samples.windows(2).all(|w| w[1] < w[0]);

    let mut c = 0.5 * (lo + hi);
    for _ in 0..200 {
        c = 0.5 * (lo + hi);
        let f = phi(a0, mu, c)?;
        if f.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * c {
            break;
        }
        if f > 0.0 {
            lo = c;
        } else {
            hi = c;
        }
    }
    let profile = shoot_profile(a0, c, DEFAULT_L_FAR, DEFAULT_ODE_DX)?;
    let slope0 = profile.slope0;
    Ok(ShootingResult {
        a0,
        mu,
        c,
        slope0,
        residual: (c + mu * slope0).abs(),
        profile,
        phi_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_construction() {
        let p = shoot_profile(1.0, 0.5, DEFAULT_L_FAR, 1e-3).unwrap();
        assert_eq!(*p.q.last().unwrap(), 0.0);
        assert_eq!(*p.xi.last().unwrap(), 0.0);
        assert!(p.slope0 < 0.0);
        assert!((p.eval(-1e3) - 1.0).abs() <= MANIFOLD_OFFSET);
        assert!(p.q.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn slope_converges_at_fourth_order() {
        let s = |dx| shoot_profile(1.0, 0.5, DEFAULT_L_FAR, dx).unwrap().slope0;
        let (a, b, c) = (s(0.04), s(0.02), s(0.01));
        let ratio = (a - b) / (b - c);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_invalid_speeds() {
        assert!(shoot_profile(1.0, 0.0, 100.0, 1e-3).is_err());
        assert!(shoot_profile(1.0, 2.0, 100.0, 1e-3).is_err());
        assert!(matches!(
            shoot_profile(1.0, 1.0, 1.0, 1e-3),
            Err(Error::NoZeroCrossing { .. })
        ));
    }

    #[test]
    fn pinned_speed_unit_medium() {
        // Frozen from this bisection; an independent adaptive-RK shooting gives
        // 0.364370723315056.
        let r = solve_speed(1.0, 1.0, 1e-12).unwrap();
        assert!((r.c - 0.364_370_723_315).abs() < 1e-9, "c = {}", r.c);
        assert!(r.residual <= 1e-12);
        assert!(r.phi_monotone);
    }

    #[test]
    fn speed_increases_with_mu_and_stays_below_kpp_speed() {
        let cs: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&mu| solve_speed(1.0, mu, 1e-10).unwrap().c)
            .collect();
        assert!(cs.windows(2).all(|w| w[0] < w[1]));
        assert!(cs.iter().all(|&c| c > 0.0 && c < 2.0));
        assert!(cs[6] > 1.4);
        let gaps: Vec<f64> = cs.iter().map(|c| 2.0 - c).collect();
        assert!(gaps[6] < 0.5 * gaps[3]);
    }
}
