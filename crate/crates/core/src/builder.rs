//! Semi-wave profiles `v(ξ, τ)` pulled back from moving-frame trajectories,
//! and the cutoff ladder that approximates them.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::QuasiPeriodicMedium;
use crate::solver::{evolve, init_cutoff, FrontState, Solver, SolverConfig, Stop, Trajectory};
use crate::steady_state::SteadyState;

/// `v(ξ, τ)` on a uniform `ξ` grid over `[−L, 0]` and an increasing grid of
/// front positions `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    xi: Vec<f64>,
    tau: Vec<f64>,
    v: Vec<Vec<f64>>,
    medium: QuasiPeriodicMedium,
    mu: f64,
}

impl Profile {
    pub fn new(
        xi: Vec<f64>,
        tau: Vec<f64>,
        v: Vec<Vec<f64>>,
        medium: QuasiPeriodicMedium,
        mu: f64,
    ) -> Result<Self> {
        if xi.len() < 3 {
            return Err(Error::InvalidInput("profile needs >= 3 xi nodes".into()));
        }
        if tau.is_empty() || v.len() != tau.len() {
            return Err(Error::InvalidInput(format!(
                "{} tau values but {} slices",
                tau.len(),
                v.len()
            )));
        }
        if tau.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidInput(
                "tau grid must be strictly increasing".into(),
            ));
        }
        if let Some(k) = v.iter().position(|s| s.len() != xi.len()) {
            return Err(Error::InvalidInput(format!(
                "slice {k} has the wrong length"
            )));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mu must be positive, got {mu}"
            )));
        }
        Ok(Profile {
            xi,
            tau,
            v,
            medium,
            mu,
        })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.v[k]
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn medium(&self) -> &QuasiPeriodicMedium {
        &self.medium
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dx(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }

    pub fn depth(&self) -> f64 {
        -self.xi[0]
    }

    /// Restricts to the slices with `τ` in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Profile> {
        let keep: Vec<usize> = (0..self.tau.len())
            .filter(|&k| self.tau[k] >= lo && self.tau[k] <= hi)
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyWindow(format!("no tau in [{lo}, {hi}]")));
        }
        Ok(Profile {
            xi: self.xi.clone(),
            tau: keep.iter().map(|&k| self.tau[k]).collect(),
            v: keep.iter().map(|&k| self.v[k].clone()).collect(),
            medium: self.medium.clone(),
            mu: self.mu,
        })
    }
}

/// `n` points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Pull-back `v(·, τ) = w(·, t)` where `h(t) = τ`; `t` comes from the dense
/// series and `w` is linear in `t` between snapshots.
pub fn extract_profile(traj: &Trajectory, tau_grid: &[f64]) -> Result<Profile> {
    let series = &traj.series;
    let snaps = &traj.snapshots;
    if tau_grid.is_empty() {
        return Err(Error::InvalidInput("empty tau grid".into()));
    }
    if tau_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidInput(
            "tau grid must be strictly increasing".into(),
        ));
    }
    let (first, last) = (tau_grid[0], tau_grid[tau_grid.len() - 1]);
    let lo = series[0].h.max(snaps[0].h);
    let hi = series[series.len() - 1].h.min(snaps[snaps.len() - 1].h);
    for tau in [first, last] {
        if !(tau >= lo && tau <= hi) {
            return Err(Error::TauOutOfRange { tau, lo, hi });
        }
    }

    let mut j = series
        .iter()
        .position(|p| p.h >= first)
        .unwrap_or(0)
        .saturating_sub(1);
    let mut k = 0;
    let mut v = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        while j + 1 < series.len() && series[j + 1].h < tau {
            if !(series[j + 1].h > series[j].h) {
                return Err(Error::NonMonotoneFront { t: series[j + 1].t });
            }
            j += 1;
        }
        let t_star = if series[j].h >= tau || j + 1 == series.len() {
            series[j].t
        } else {
            let (a, b) = (series[j], series[j + 1]);
            if !(b.h > a.h) {
                return Err(Error::NonMonotoneFront { t: b.t });
            }
            a.t + (tau - a.h) / (b.h - a.h) * (b.t - a.t)
        };
        while k + 1 < snaps.len() && snaps[k + 1].t <= t_star {
            k += 1;
        }
        let s0 = &snaps[k];
        let slice = if s0.t == t_star || k + 1 == snaps.len() {
            s0.w.clone()
        } else {
            let s1 = &snaps[k + 1];
            let theta = (t_star - s0.t) / (s1.t - s0.t);
            s0.w.iter()
                .zip(&s1.w)
                .map(|(&a, &b)| a + theta * (b - a))
                .collect()
        };
        v.push(slice);
    }
    Profile::new(
        traj.config.xi_grid(),
        tau_grid.to_vec(),
        v,
        traj.medium.clone(),
        traj.config.mu,
    )
}

#[derive(Clone, Debug)]
pub struct VeqResidual {
    /// Front positions of the rows of `field` (interior `τ` only).
    pub tau: Vec<f64>,
    /// `ξ` of the columns of `field`.
    pub xi: Vec<f64>,
    pub field: Vec<Vec<f64>>,
    pub norm: f64,
}

/// Residual of `h'(τ) (v_τ − v_ξ) = v_ξξ + v (g(ξ + τ) − v)` with
/// `h'(τ) = −μ v_ξ(0, τ)`.
///
/// `ξ` derivatives use fourth-order stencils, so the residual of a
/// second-order solution measures its truncation error rather than the
/// consistency of a matching stencil. `mu_literal` drops `μ` from `h'`.
/// `trim` interior cells are skipped at each end (at least two).
pub fn veq_residual(profile: &Profile, mu_literal: bool, trim: usize) -> Result<VeqResidual> {
    let tau = profile.tau();
    let m = tau.len();
    let n = profile.xi.len() - 1;
    let trim = trim.max(2);
    if m < 3 {
        return Err(Error::InvalidInput(
            "veq residual needs >= 3 tau values".into(),
        ));
    }
    if n < 4 || 2 * trim > n {
        return Err(Error::InvalidInput(
            "xi grid too short for the residual stencil".into(),
        ));
    }
    let dx = profile.dx();
    let coef = if mu_literal { 1.0 } else { profile.mu };
    let cols: Vec<usize> = (trim..=n - trim).collect();
    let mut field = Vec::with_capacity(m - 2);
    let mut norm: f64 = 0.0;
    for k in 1..m - 1 {
        let (prev, v, next) = (&profile.v[k - 1], &profile.v[k], &profile.v[k + 1]);
        let dtau = tau[k + 1] - tau[k - 1];
        let slope0 = (25.0 * v[n] - 48.0 * v[n - 1] + 36.0 * v[n - 2] - 16.0 * v[n - 3]
            + 3.0 * v[n - 4])
            / (12.0 * dx);
        let speed = -coef * slope0;
        let row: Vec<f64> = cols
            .iter()
            .map(|&i| {
                let v_xi = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * dx);
                let v_xixi = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1]
                    - v[i - 2])
                    / (12.0 * dx * dx);
                let v_tau = (next[i] - prev[i]) / dtau;
                let g = profile.medium.eval(profile.xi[i] + tau[k]);
                speed * (v_tau - v_xi) - v_xixi - v[i] * (g - v[i])
            })
            .collect();
        norm = row.iter().fold(norm, |acc, r| acc.max(r.abs()));
        field.push(row);
    }
    Ok(VeqResidual {
        tau: tau[1..m - 1].to_vec(),
        xi: cols.iter().map(|&i| profile.xi[i]).collect(),
        field,
        norm,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailGap {
    pub xi: Vec<f64>,
    /// `sup_τ |v(ξ, τ) − u*(ξ + τ)|` at each `ξ`.
    pub gap: Vec<f64>,
}

impl TailGap {
    /// Gap at `ξ` by linear interpolation.
    pub fn at(&self, xi: f64) -> f64 {
        let dx = self.xi[1] - self.xi[0];
        let s = ((xi - self.xi[0]) / dx).clamp(0.0, (self.xi.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.xi.len() - 2);
        let theta = s - i as f64;
        (1.0 - theta) * self.gap[i] + theta * self.gap[i + 1]
    }
}

pub fn tail_gap(profile: &Profile, steady: &SteadyState) -> Result<TailGap> {
    let mut gap = vec![0.0f64; profile.xi.len()];
    for (k, &tau) in profile.tau.iter().enumerate() {
        for (i, &xi) in profile.xi.iter().enumerate() {
            let d = (profile.v[k][i] - steady.sample_checked(xi + tau)?).abs();
            gap[i] = gap[i].max(d);
        }
    }
    Ok(TailGap {
        xi: profile.xi.clone(),
        gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneReport {
    /// `min (u(x, t2) − u(x, t1))` over compared points; 0 if none.
    pub min_diff: f64,
    /// Snapshot times where `min_diff` is attained.
    pub worst: (f64, f64),
    pub pairs: usize,
}

impl MonotoneReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_diff >= -tol
    }
}

/// Compares consecutive snapshots `t1 < t2` at the lab points
/// `h(t2) − L ≤ x ≤ h(t1)`, only from `t_min` on.
pub fn monotone_in_time_check(traj: &Trajectory, t_min: f64) -> MonotoneReport {
    let cfg = &traj.config;
    let mut report = MonotoneReport {
        min_diff: 0.0,
        worst: (t_min, t_min),
        pairs: 0,
    };
    let mut first = true;
    for pair in traj.snapshots.windows(2) {
        let (s1, s2) = (&pair[0], &pair[1]);
        if s1.t < t_min {
            continue;
        }
        report.pairs += 1;
        let shift = (s1.h - s2.h) / cfg.dx;
        for (i, &u1) in s1.w.iter().enumerate() {
            let Some(u2) = s2.frame_value(i as f64 + shift) else {
                continue;
            };
            let d = u2 - u1;
            if first || d < report.min_diff {
                report.min_diff = d;
                report.worst = (s1.t, s2.t);
                first = false;
            }
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowError {
    pub t: f64,
    pub h: f64,
    /// `sup |u(x, t) − u*(x)|` over the lab window.
    pub err: f64,
}

/// `sup |u(·, t) − u*|` over the lab window `[x_lo, x_hi]` at each snapshot
/// whose frame covers the window.
pub fn window_error(
    traj: &Trajectory,
    steady: &SteadyState,
    x_lo: f64,
    x_hi: f64,
) -> Result<Vec<WindowError>> {
    let cfg = &traj.config;
    let mut out = Vec::new();
    for s in &traj.snapshots {
        if s.h - cfg.depth > x_lo {
            continue;
        }
        let mut err: f64 = 0.0;
        for (i, &w) in s.w.iter().enumerate() {
            let x = s.h + cfg.xi(i);
            if x < x_lo || x > x_hi {
                continue;
            }
            err = err.max((w - steady.sample_checked(x)?).abs());
        }
        out.push(WindowError {
            t: s.t,
            h: s.h,
            err,
        });
    }
    Ok(out)
}

/// Shift `T` (a multiple of the `τ` spacing, `|T| ≤ max_shift`) minimizing
/// `sup |v1(·, τ + T) − v2(·, τ)|` over the overlap of the two grids.
/// Both profiles must share `ξ` and a uniform `τ` spacing.
pub fn align(p1: &Profile, p2: &Profile, max_shift: f64) -> Result<(f64, f64)> {
    if p1.xi != p2.xi {
        return Err(Error::InvalidInput(
            "profiles use different xi grids".into(),
        ));
    }
    let dtau = |p: &Profile| {
        if p.tau.len() < 2 {
            f64::NAN
        } else {
            (p.tau[p.tau.len() - 1] - p.tau[0]) / (p.tau.len() - 1) as f64
        }
    };
    let d = dtau(p1);
    if !(d > 0.0) || (dtau(p2) - d).abs() > 1e-9 * d {
        return Err(Error::InvalidInput(
            "profiles need one uniform tau spacing".into(),
        ));
    }
    let offset = ((p2.tau[0] - p1.tau[0]) / d).round() as i64;
    let reach = (max_shift / d).floor() as i64;
    let mut best: Option<(f64, f64)> = None;
    for s in -reach..=reach {
        let mut dist: f64 = 0.0;
        let mut overlap = 0;
        for (k2, v2) in p2.v.iter().enumerate() {
            let k1 = k2 as i64 + offset + s;
            if k1 < 0 || k1 as usize >= p1.v.len() {
                continue;
            }
            overlap += 1;
            let v1 = &p1.v[k1 as usize];
            dist = v1
                .iter()
                .zip(v2)
                .fold(dist, |a, (x, y)| a.max((x - y).abs()));
        }
        if overlap == 0 {
            continue;
        }
        let shift = s as f64 * d;
        let better = match best {
            None => true,
            Some((t, b)) => dist < b || (dist == b && shift.abs() < t.abs()),
        };
        if better {
            best = Some((shift, dist));
        }
    }
    best.ok_or_else(|| Error::EmptyWindow("profiles share no tau".into()))
}

/// Sup distance between two profiles on a common `(ξ, τ)` grid.
pub fn profile_distance(p1: &Profile, p2: &Profile) -> Result<f64> {
    if p1.xi != p2.xi || p1.tau != p2.tau {
        return Err(Error::InvalidInput("profiles use different grids".into()));
    }
    Ok(p1
        .v
        .iter()
        .zip(&p2.v)
        .flat_map(|(a, b)| a.iter().zip(b))
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs())))
}

/// Sup of `u_b − u_a` in the lab frame over snapshots at common steps from
/// `t_min` on, together with the sup of `|u_b − u_a|`. The frame of `a` is
/// the comparison window; `u = 0` past either front.
pub fn lab_difference(a: &Trajectory, b: &Trajectory, t_min: f64) -> Result<(f64, f64)> {
    if a.config.dx != b.config.dx || a.config.depth != b.config.depth {
        return Err(Error::InvalidInput(
            "trajectories use different grids".into(),
        ));
    }
    let dx = a.config.dx;
    let mut signed = f64::NEG_INFINITY;
    let mut abs: f64 = 0.0;
    let mut j = 0;
    for sa in a.snapshots.iter().filter(|s| s.t >= t_min) {
        while j < b.snapshots.len() && b.snapshots[j].step < sa.step {
            j += 1;
        }
        let Some(sb) = b.snapshots.get(j) else { break };
        if sb.step != sa.step {
            continue;
        }
        let lead = sa.h.max(sb.h);
        let cells = ((lead - sa.h) / dx).ceil() as usize;
        let shift = (sa.h - sb.h) / dx;
        for i in 0..sa.w.len() + cells {
            let ua = sa.frame_value(i as f64).unwrap_or(0.0);
            let Some(ub) = sb.frame_value(i as f64 + shift) else {
                continue;
            };
            signed = signed.max(ub - ua);
            abs = abs.max((ub - ua).abs());
        }
    }
    if signed == f64::NEG_INFINITY {
        return Err(Error::EmptyWindow(format!(
            "no common snapshots after t = {t_min}"
        )));
    }
    Ok((signed, abs))
}

#[derive(Clone, Debug)]
pub struct Ladder {
    pub n_list: Vec<u32>,
    pub h0_list: Vec<f64>,
    /// Front positions at which profiles are extracted.
    pub tau_grid: Vec<f64>,
    /// Runs stop once the front passes this position.
    pub h_end: f64,
    /// Tolerance on `h_n ≤ h_{n'}` and `u_n ≤ u_{n'}` for `n < n'`.
    pub order_tol: f64,
}

#[derive(Clone, Debug)]
pub struct LadderRun {
    pub n: u32,
    pub h0: f64,
    pub trajectory: Trajectory,
    pub profile: Profile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderRow {
    pub n: u32,
    pub h0: f64,
    /// Against the previous `n` at the same `h0`: `max(h_prev − h)`.
    pub front_gap: Option<f64>,
    /// Against the previous `n`: sup of `u_prev − u` (order violation).
    pub order_violation: Option<f64>,
    /// Against the previous `n`: post-transient sup `|u − u_prev|`.
    pub sup_diff: Option<f64>,
    /// Against the previous `h0` at the same `n`: profile distance on the
    /// shared `τ` grid.
    pub h0_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<LadderRow>,
    /// Some `n`-step broke the ordering beyond tolerance.
    pub construction_violated: bool,
    /// Consecutive `n` differences decrease for every `h0`.
    pub cauchy_shrinking: bool,
    /// Largest profile distance between consecutive `h0`.
    pub h0_spread: f64,
}

#[derive(Clone, Debug)]
pub struct SemiwaveBuild {
    /// Profile of the largest `n` with the most negative `h0`.
    pub profile: Profile,
    pub runs: Vec<LadderRun>,
    pub report: ConvergenceReport,
}

/// Runs every `(n, h0)` pair on `jobs` threads.
pub fn build_semiwave(
    steady: Arc<SteadyState>,
    config: &SolverConfig,
    ladder: &Ladder,
    jobs: usize,
) -> Result<SemiwaveBuild> {
    config.validate()?;
    if ladder.n_list.is_empty() || ladder.h0_list.is_empty() {
        return Err(Error::InvalidInput("ladder lists must be nonempty".into()));
    }
    if ladder.n_list.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidInput("n_list must be increasing".into()));
    }
    if ladder.h0_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidInput("h0_list must be decreasing".into()));
    }
    let pairs: Vec<(u32, f64)> = ladder
        .h0_list
        .iter()
        .flat_map(|&h0| ladder.n_list.iter().map(move |&n| (n, h0)))
        .collect();
    let run_one = |&(n, h0): &(u32, f64)| -> Result<LadderRun> {
        let mut solver = Solver::new(config.clone(), steady.clone())?;
        let init = init_cutoff(&steady, h0, n, config)?;
        let trajectory = evolve(&mut solver, init, Stop::Front(ladder.h_end))?;
        let profile = extract_profile(&trajectory, &ladder.tau_grid)?;
        Ok(LadderRun {
            n,
            h0,
            trajectory,
            profile,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let runs: Vec<LadderRun> =
        pool.install(|| pairs.par_iter().map(run_one).collect::<Result<_>>())?;

    let nn = ladder.n_list.len();
    let mut rows = Vec::with_capacity(runs.len());
    let mut violated = false;
    let mut shrinking = true;
    let mut spread: f64 = 0.0;
    for (idx, run) in runs.iter().enumerate() {
        let (hi, ni) = (idx / nn, idx % nn);
        let mut row = LadderRow {
            n: run.n,
            h0: run.h0,
            front_gap: None,
            order_violation: None,
            sup_diff: None,
            h0_diff: None,
        };
        if ni > 0 {
            let prev = &runs[idx - 1];
            let gap = prev
                .trajectory
                .series
                .iter()
                .zip(&run.trajectory.series)
                .map(|(p, q)| p.h - q.h)
                .fold(f64::NEG_INFINITY, f64::max);
            let (violation, _) = lab_difference(&run.trajectory, &prev.trajectory, 0.0)?;
            let (_, sup) =
                lab_difference(&prev.trajectory, &run.trajectory, config.transient_cutoff)?;
            violated |= gap > ladder.order_tol || violation > ladder.order_tol;
            if ni > 1 {
                let before: &LadderRow = &rows[idx - 1];
                shrinking &= before.sup_diff.is_none_or(|b| sup <= b);
            }
            row.front_gap = Some(gap);
            row.order_violation = Some(violation);
            row.sup_diff = Some(sup);
        }
        if hi > 0 {
            let d = profile_distance(&runs[idx - nn].profile, &run.profile)?;
            spread = spread.max(d);
            row.h0_diff = Some(d);
        }
        rows.push(row);
    }
    let profile = runs[runs.len() - 1].profile.clone();
    Ok(SemiwaveBuild {
        profile,
        runs,
        report: ConvergenceReport {
            rows,
            construction_violated: violated,
            cauchy_shrinking: shrinking,
            h0_spread: spread,
        },
    })
}

/// Restarts from `state` with `w` scaled by `factor ∈ (0, 1]`.
pub fn scaled_restart(state: &FrontState, factor: f64) -> Result<FrontState> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "scale factor {factor} outside (0, 1]"
        )));
    }
    FrontState::new(
        state.t,
        state.h,
        state.step,
        state.w.iter().map(|v| v * factor).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady_state::compute_steady_state;

    fn short_run() -> (Arc<SteadyState>, Trajectory) {
        let medium = QuasiPeriodicMedium::constant(1.0).unwrap();
        let cfg = SolverConfig {
            dx: 0.1,
            dt: 4e-3,
            depth: 20.0,
            transient_cutoff: 5.0,
            snapshot_stride: 25,
            ..SolverConfig::default()
        };
        let st = Arc::new(compute_steady_state(&medium, 60.0, cfg.dx, 1e-9).unwrap());
        let init = init_cutoff(&st, 0.0, 1, &cfg).unwrap();
        let mut solver = Solver::new(cfg, st.clone()).unwrap();
        let traj = evolve(&mut solver, init, Stop::Front(15.0)).unwrap();
        (st, traj)
    }

    fn profile_with(v: f64, tau: &[f64]) -> Profile {
        let xi = uniform_grid(-5.0, 0.0, 51);
        let slices = tau.iter().map(|_| vec![v; xi.len()]).collect();
        Profile::new(
            xi,
            tau.to_vec(),
            slices,
            QuasiPeriodicMedium::constant(1.0).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn uniform_grid_hits_both_ends() {
        assert_eq!(uniform_grid(30.0, 80.0, 101)[100], 80.0);
        assert_eq!(uniform_grid(1.0, 2.0, 1), vec![1.0]);
        assert!(uniform_grid(1.0, 2.0, 0).is_empty());
    }

    #[test]
    fn extraction_at_a_snapshot_front_is_exact() {
        let (_, traj) = short_run();
        let snap = traj.snapshots.iter().find(|s| s.h > 8.0).unwrap();
        // The snapshot's h sits on the dense series, so inversion lands on it.
        let p = extract_profile(&traj, &[snap.h]).unwrap();
        assert_eq!(p.slice(0), &snap.w[..]);
        assert!(extract_profile(&traj, &[1e3]).is_err());
        assert!(extract_profile(&traj, &[9.0, 8.0]).is_err());
    }

    #[test]
    fn zero_profile_has_zero_residual() {
        let r = veq_residual(&profile_with(0.0, &[1.0, 2.0, 3.0, 4.0]), false, 4).unwrap();
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn perturbation_shows_in_the_residual() {
        // v ≡ 1 solves the reaction part for g ≡ 1 away from the front.
        let base = profile_with(1.0, &[1.0, 2.0, 3.0]);
        let mut v: Vec<Vec<f64>> = base.slices().to_vec();
        for s in &mut v {
            for x in s.iter_mut().skip(10).take(20) {
                *x += 0.1;
            }
        }
        let bumped = Profile::new(
            base.xi().to_vec(),
            base.tau().to_vec(),
            v,
            base.medium().clone(),
            1.0,
        )
        .unwrap();
        let r0 = veq_residual(&base, false, 4).unwrap().norm;
        let r1 = veq_residual(&bumped, false, 4).unwrap().norm;
        assert!(r0 < 1e-12);
        assert!(r1 >= 0.05, "{r1}");
    }

    #[test]
    fn window_keeps_matching_slices() {
        let p = profile_with(0.5, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.window(1.5, 3.0).unwrap().tau(), &[2.0, 3.0]);
        assert!(p.window(10.0, 11.0).is_err());
    }

    #[test]
    fn pinned_tail_has_no_gap_at_the_left_end() {
        let (st, traj) = short_run();
        let p = extract_profile(&traj, &uniform_grid(8.0, 14.0, 13)).unwrap();
        let gap = tail_gap(&p, &st).unwrap();
        assert!(gap.gap[0] < 1e-12, "{}", gap.gap[0]);
        assert!(gap.at(-10.0) < gap.at(-5.0));
    }

    #[test]
    fn front_run_increases_in_time() {
        let (_, traj) = short_run();
        let report = monotone_in_time_check(&traj, traj.config.transient_cutoff);
        assert!(report.pairs > 0);
        assert!(report.holds(1e-3), "{report:?}");
    }

    #[test]
    fn profile_is_aligned_with_itself() {
        let (_, traj) = short_run();
        let p = extract_profile(&traj, &uniform_grid(8.0, 14.0, 13)).unwrap();
        let (shift, dist) = align(&p, &p, 2.0).unwrap();
        assert_eq!((shift, dist), (0.0, 0.0));
        assert_eq!(profile_distance(&p, &p).unwrap(), 0.0);
        let (signed, abs) = lab_difference(&traj, &traj, 0.0).unwrap();
        assert_eq!((signed, abs), (0.0, 0.0));
    }

    #[test]
    fn scaled_restart_scales_the_interior() {
        let (_, traj) = short_run();
        let s = traj.final_state();
        let r = scaled_restart(s, 0.9).unwrap();
        assert!(r
            .w
            .iter()
            .zip(&s.w)
            .all(|(a, b)| (a - 0.9 * b).abs() < 1e-15));
    }
}
