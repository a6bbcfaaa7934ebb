//! Measurements on profiles and speed series: the comparison ratio `ρ`, the
//! speed law `h' = f(h)`, average speed, speed bounds and almost periods.

use crate::builder::Profile;
use crate::error::{Error, Result};
use crate::solver::{SpeedBounds, Trajectory};
use crate::steady_state::SteadyState;

/// Second-order one-sided slope at the last node.
fn end_slope(v: &[f64], dx: f64) -> f64 {
    let n = v.len() - 1;
    (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dx)
}

/// `inf_{ξ<0} v1 / v2`: the minimum over interior nodes and the ratio of the
/// one-sided slopes at `ξ = 0`.
pub fn rho(v1: &[f64], v2: &[f64], dx: f64) -> Result<f64> {
    if v1.len() != v2.len() || v1.len() < 3 {
        return Err(Error::InvalidInput(
            "slices must match and have >= 3 nodes".into(),
        ));
    }
    let n = v1.len() - 1;
    let mut r = f64::INFINITY;
    for i in 0..n {
        if !(v2[i] > 0.0) {
            return Err(Error::InvalidInput(format!(
                "v2[{i}] = {} is not positive",
                v2[i]
            )));
        }
        r = r.min(v1[i] / v2[i]);
    }
    let s2 = end_slope(v2, dx);
    if !(s2 < 0.0) {
        return Err(Error::InvalidInput(format!(
            "v2 slope at the front is {s2}, not negative"
        )));
    }
    Ok(r.min(end_slope(v1, dx) / s2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoSeries {
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    /// `max (ρ_k − ρ_{k+1})`, clamped at 0.
    pub max_backward_step: f64,
    /// `max (v1 − v2)`; positive means `v1 ≤ v2` fails.
    pub order_violation: f64,
    /// `max (v2 − u*)` when a steady state is supplied.
    pub steady_violation: Option<f64>,
    /// `max (v2_ξ − v2_τ)` over interior nodes and interior `τ`.
    pub growth_violation: f64,
}

impl RhoSeries {
    pub fn nondecreasing(&self, tol: f64) -> bool {
        self.max_backward_step <= tol
    }
}

/// `ρ(τ)` on the shared `τ` grid, with the hypotheses screened: computed even
/// when they fail.
pub fn rho_series(p1: &Profile, p2: &Profile, steady: Option<&SteadyState>) -> Result<RhoSeries> {
    if p1.xi() != p2.xi() || p1.tau() != p2.tau() {
        return Err(Error::InvalidInput("profiles use different grids".into()));
    }
    let dx = p1.dx();
    let tau = p1.tau().to_vec();
    let rho = (0..tau.len())
        .map(|k| rho(p1.slice(k), p2.slice(k), dx))
        .collect::<Result<Vec<_>>>()?;
    let max_backward_step = rho.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max);
    let order_violation = p1
        .slices()
        .iter()
        .zip(p2.slices())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y))
        .fold(f64::NEG_INFINITY, f64::max);
    let steady_violation = match steady {
        None => None,
        Some(st) => {
            let mut worst = f64::NEG_INFINITY;
            for (k, &t) in tau.iter().enumerate() {
                for (&xi, &v) in p2.xi().iter().zip(p2.slice(k)) {
                    worst = worst.max(v - st.sample_checked(xi + t)?);
                }
            }
            Some(worst)
        }
    };
    let mut growth_violation = f64::NEG_INFINITY;
    for k in 1..tau.len().saturating_sub(1) {
        let (a, v, b) = (p2.slice(k - 1), p2.slice(k), p2.slice(k + 1));
        let dtau = tau[k + 1] - tau[k - 1];
        for i in 1..v.len() - 1 {
            let v_xi = (v[i + 1] - v[i - 1]) / (2.0 * dx);
            let v_tau = (b[i] - a[i]) / dtau;
            growth_violation = growth_violation.max(v_xi - v_tau);
        }
    }
    Ok(RhoSeries {
        tau,
        rho,
        max_backward_step,
        order_violation,
        steady_violation,
        growth_violation,
    })
}

/// Piecewise-linear `h ↦ h'` tabulated along a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedLaw {
    h: Vec<f64>,
    f: Vec<f64>,
}

impl SpeedLaw {
    /// `h` must be strictly increasing and every speed positive.
    pub fn new(h: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if h.len() < 2 || h.len() != f.len() {
            return Err(Error::EmptyWindow("speed law needs >= 2 samples".into()));
        }
        if h.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidInput(
                "speed law positions must increase".into(),
            ));
        }
        if let Some(k) = f.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "speed {} at h = {} is not positive",
                f[k], h[k]
            )));
        }
        Ok(SpeedLaw { h, f })
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn range(&self) -> (f64, f64) {
        (self.h[0], self.h[self.h.len() - 1])
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = self
            .h
            .partition_point(|&h| h <= x)
            .clamp(1, self.h.len() - 1);
        let (h0, h1) = (self.h[k - 1], self.h[k]);
        let theta = (x - h0) / (h1 - h0);
        Some(self.f[k - 1] + theta * (self.f[k] - self.f[k - 1]))
    }

    pub fn min(&self) -> f64 {
        self.f.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `|s − r| / ∫ 1/f` over `[r, s]` (see [`average_speed`]) for the whole range.
    pub fn mean(&self) -> f64 {
        let (lo, hi) = self.range();
        average_speed(self, lo, hi).expect("full range is tabulated")
    }

    /// Values on `lo, lo + step, …` up to `hi`.
    pub fn resample(&self, lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(hi > lo) {
            return Err(Error::InvalidInput(format!(
                "bad resampling [{lo}, {hi}] step {step}"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|k| {
                let x = lo + k as f64 * step;
                self.eval(x).ok_or_else(|| {
                    let (a, b) = self.range();
                    Error::TauOutOfRange {
                        tau: x,
                        lo: a,
                        hi: b,
                    }
                })
            })
            .collect()
    }

    /// `sup |f(h + shift) − f(h)|` over the overlap, sampled at `step`.
    pub fn shift_defect(&self, shift: f64, step: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(hi - shift > lo) {
            return Err(Error::EmptyWindow(format!(
                "shift {shift} leaves no overlap"
            )));
        }
        let base = self.resample(lo, hi - shift, step)?;
        let moved = self.resample(lo + shift, hi, step)?;
        Ok(base
            .iter()
            .zip(&moved)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// Speed samples with `t ≥ transient_cutoff`, keeping only strict increases
/// of `h`.
pub fn speed_law(traj: &Trajectory, transient_cutoff: f64) -> Result<SpeedLaw> {
    let mut h = Vec::new();
    let mut f = Vec::new();
    for p in traj.series.iter().filter(|p| p.t >= transient_cutoff) {
        if h.last().is_none_or(|&last| p.h > last) {
            h.push(p.h);
            f.push(p.hprime);
        }
    }
    if h.len() < 2 {
        return Err(Error::EmptyWindow(format!(
            "fewer than two samples after t = {transient_cutoff}"
        )));
    }
    SpeedLaw::new(h, f)
}

/// `|s − r| / ∫_r^s dh / f(h)` by the trapezoid rule on the tabulated nodes.
pub fn average_speed(law: &SpeedLaw, r: f64, s: f64) -> Result<f64> {
    let (r, s) = if r <= s { (r, s) } else { (s, r) };
    let (lo, hi) = law.range();
    for x in [r, s] {
        if !(x >= lo && x <= hi) {
            return Err(Error::TauOutOfRange { tau: x, lo, hi });
        }
    }
    if s == r {
        return Ok(law.eval(r).expect("inside range"));
    }
    let first = law.h.partition_point(|&h| h <= r);
    let last = law.h.partition_point(|&h| h < s);
    let nodes = std::iter::once((r, law.eval(r).expect("inside range")))
        .chain((first..last).map(|k| (law.h[k], law.f[k])))
        .chain(std::iter::once((s, law.eval(s).expect("inside range"))));
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (h, f) in nodes {
        if let Some((h0, f0)) = prev {
            integral += 0.5 * (h - h0) * (1.0 / f0 + 1.0 / f);
        }
        prev = Some((h, f));
    }
    Ok((s - r) / integral)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostPeriods {
    /// Every scanned shift with its sup-defect.
    pub scanned: Vec<(f64, f64)>,
    /// Shifts whose defect is at most `eps`, including 0.
    pub qualifying: Vec<f64>,
    /// Largest distance between consecutive qualifying shifts, counting the
    /// stretch from the last one to the end of the scan.
    pub max_gap: f64,
}

/// Bohr scan of uniformly sampled `values` (spacing `step`): shift `T = j·step`
/// for `j = 0..=max_shift_steps` is an `eps`-almost period if
/// `sup |F(· + T) − F(·)| ≤ eps` over the overlap.
pub fn almost_period_scan(
    values: &[f64],
    step: f64,
    eps: f64,
    max_shift_steps: usize,
) -> Result<AlmostPeriods> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    if values.len() < 4 * max_shift_steps.max(1) {
        return Err(Error::InvalidInput(format!(
            "window of {} samples is shorter than 4x the largest shift ({max_shift_steps})",
            values.len()
        )));
    }
    let scanned: Vec<(f64, f64)> = (0..=max_shift_steps)
        .map(|j| {
            let d = values[j..]
                .iter()
                .zip(values)
                .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
            (j as f64 * step, d)
        })
        .collect();
    let qualifying: Vec<f64> = scanned.iter().filter(|p| p.1 <= eps).map(|p| p.0).collect();
    let end = max_shift_steps as f64 * step;
    let max_gap = qualifying
        .windows(2)
        .map(|p| p[1] - p[0])
        .chain(std::iter::once(
            end - qualifying.last().copied().unwrap_or(0.0),
        ))
        .fold(0.0, f64::max);
    Ok(AlmostPeriods {
        scanned,
        qualifying,
        max_gap,
    })
}

/// `(min, max)` of `h'` for `t ≥ transient_cutoff`; flagged when `m ≤ 0`.
pub fn speed_bounds(traj: &Trajectory, transient_cutoff: f64) -> Result<SpeedBounds> {
    let (m, big_m) = traj
        .series
        .iter()
        .filter(|p| p.t >= transient_cutoff)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.hprime), hi.max(p.hprime))
        });
    if m > big_m {
        return Err(Error::EmptyWindow(format!(
            "no samples after t = {transient_cutoff}"
        )));
    }
    Ok(SpeedBounds {
        m,
        big_m,
        violation: m <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::QuasiPeriodicMedium;
    use crate::solver::{SeriesPoint, SolverConfig};

    fn slice(dx: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=n).map(|i| f(-((n - i) as f64) * dx)).collect()
    }

    fn trajectory(series: Vec<SeriesPoint>) -> Trajectory {
        Trajectory {
            config: SolverConfig::default(),
            medium: QuasiPeriodicMedium::constant(1.0).unwrap(),
            snapshots: Vec::new(),
            series,
            bounds: None,
            monotonicity_violation: None,
        }
    }

    #[test]
    fn rho_of_identical_and_scaled_slices() {
        let v = slice(0.05, 200, |x| -x * x.exp());
        assert_eq!(rho(&v, &v, 0.05).unwrap(), 1.0);
        let half: Vec<f64> = v.iter().map(|x| 0.5 * x).collect();
        assert!((rho(&half, &v, 0.05).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rho_is_set_by_the_front_slope() {
        let dx = 0.01;
        let v2 = slice(dx, 1000, |x| -x * x.exp());
        let v1 = slice(dx, 1000, |x| -x * x.exp() * (0.9 + 0.1 * (1.0 - x.exp())));
        let interior = v1[..1000]
            .iter()
            .zip(&v2)
            .map(|(a, b)| a / b)
            .fold(f64::INFINITY, f64::min);
        let r = rho(&v1, &v2, dx).unwrap();
        assert!(r < interior);
        assert!((r - 0.9).abs() < 1e-3, "{r}");
    }

    #[test]
    fn rho_rejects_nonpositive_denominator() {
        let v = slice(0.1, 20, |x| -x);
        let z = vec![0.0; v.len()];
        assert!(rho(&v, &z, 0.1).is_err());
    }

    #[test]
    fn average_speed_of_constant_law() {
        let law = SpeedLaw::new(vec![0.0, 3.0, 10.0], vec![0.8; 3]).unwrap();
        for (r, s) in [(0.0, 10.0), (1.5, 7.25), (9.0, 2.0)] {
            assert!((average_speed(&law, r, s).unwrap() - 0.8).abs() < 1e-14);
        }
        assert!((law.mean() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn average_speed_is_a_harmonic_mean() {
        // 0.5 on [0, 1], 1.0 on [1, 2], with a jump over a tiny interval.
        let e = 1e-9;
        let law = SpeedLaw::new(vec![0.0, 1.0, 1.0 + e, 2.0], vec![0.5, 0.5, 1.0, 1.0]).unwrap();
        assert!((average_speed(&law, 0.0, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn average_speed_outside_the_table_fails() {
        let law = SpeedLaw::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(average_speed(&law, -1.0, 1.0).is_err());
    }

    #[test]
    fn speed_law_rejects_bad_tables() {
        assert!(SpeedLaw::new(vec![0.0], vec![1.0]).is_err());
        assert!(SpeedLaw::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SpeedLaw::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn periodic_series_has_period_multiples_as_almost_periods() {
        let step = 0.01;
        let values: Vec<f64> = (0..4000)
            .map(|k| (k as f64 * step * std::f64::consts::PI).sin())
            .collect();
        let scan = almost_period_scan(&values, step, 1e-9, 1000).unwrap();
        for t in [0.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
            assert!(
                scan.qualifying.iter().any(|&q| (q - t).abs() < 1e-9),
                "missing {t}"
            );
        }
        assert!((scan.max_gap - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_series_qualifies_everywhere() {
        let scan = almost_period_scan(&[0.3; 400], 0.1, 0.0, 100).unwrap();
        assert_eq!(scan.qualifying.len(), 101);
        assert!((scan.max_gap - 0.1).abs() < 1e-12);
    }

    #[test]
    fn two_frequency_series_has_relatively_dense_almost_periods() {
        let step = 0.05;
        let values: Vec<f64> = (0..20_000)
            .map(|k| {
                let h = k as f64 * step;
                h.cos() + (2f64.sqrt() * h).cos()
            })
            .collect();
        let scan = almost_period_scan(&values, step, 0.2, 4000).unwrap();
        assert!(scan.qualifying.len() > 1);
        assert!(scan.max_gap < 200.0, "{}", scan.max_gap);
    }

    #[test]
    fn almost_period_scan_needs_a_long_window() {
        assert!(almost_period_scan(&[1.0; 10], 0.1, 0.1, 5).is_err());
    }

    #[test]
    fn speed_law_and_bounds_skip_the_transient() {
        let series: Vec<SeriesPoint> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.5;
                let hprime = if t < 10.0 {
                    -0.1
                } else {
                    0.6 + 0.1 * (t * 0.3).sin()
                };
                SeriesPoint { t, h: t, hprime }
            })
            .collect();
        let traj = trajectory(series);
        let b = speed_bounds(&traj, 10.0).unwrap();
        assert!(!b.violation && b.m >= 0.5 && b.big_m <= 0.7);
        assert!(speed_bounds(&traj, 0.0).unwrap().violation);
        let law = speed_law(&traj, 10.0).unwrap();
        assert_eq!(law.range(), (10.0, 49.5));
        assert!(speed_bounds(&traj, 100.0).is_err());
    }
}
