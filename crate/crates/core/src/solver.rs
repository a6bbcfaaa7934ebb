//! Free-boundary solver in the front-fixed frame `ξ = x − h(t)`.
//!
//! On `ξ ∈ [−L, 0]` the problem reads
//!
//! ```text
//! w_t = w_ξξ + h'(t) w_ξ + w (g(ξ + h) − w),   w(0, t) = 0,
//! h'(t) = −μ w_ξ(0, t),
//! ```
//!
//! with `w(−L, t)` pinned to the steady state `u*(h − L)` or given zero slope.
//! Each step treats diffusion implicitly, the reaction and `h` explicitly, and
//! the transport term either implicitly with central differences (default) or
//! explicitly with first-order upwinding.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::media::{GridMedium, QuasiPeriodicMedium};
use crate::steady_state::SteadyState;
use crate::tridiag::ToeplitzTridiagonal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeftBc {
    /// `w(−L) = u*(h − L)`.
    Pin,
    ZeroSlope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Advection {
    /// Central differences inside the implicit solve.
    Central,
    /// First-order upwind, explicit.
    Upwind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxOrder {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Time(f64),
    Front(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dx: f64,
    pub dt: f64,
    /// Moving-frame depth `L`.
    pub depth: f64,
    pub mu: f64,
    pub left_bc: LeftBc,
    pub flux_order: FluxOrder,
    pub advection: Advection,
    pub transient_cutoff: f64,
    /// Steps between stored snapshots.
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dx: 0.05,
            dt: 1e-3,
            depth: 20.0,
            mu: 1.0,
            left_bc: LeftBc::Pin,
            flux_order: FluxOrder::Second,
            advection: Advection::Central,
            transient_cutoff: 20.0,
            snapshot_stride: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("dx must be positive, got {}", self.dx));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.dt > 0.5 * self.dx * self.dx * (1.0 + 1e-12) {
            return bad(format!(
                "dt = {} exceeds 0.5*dx^2 = {}",
                self.dt,
                0.5 * self.dx * self.dx
            ));
        }
        if !(self.depth >= 20.0) {
            return bad(format!(
                "moving-frame depth L must be >= 20, got {}",
                self.depth
            ));
        }
        let cells = self.depth / self.dx;
        if (cells - cells.round()).abs() > 1e-9 * cells {
            return bad(format!("L/dx = {cells} must be an integer"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be >= 1".into());
        }
        if !self.transient_cutoff.is_finite() {
            return bad("transient_cutoff must be finite".into());
        }
        Ok(())
    }

    /// Index of the front node; the grid is `ξ_i = −L + i·dx`, `i = 0..=N`.
    pub fn cells(&self) -> usize {
        (self.depth / self.dx).round() as usize
    }

    pub fn xi(&self, i: usize) -> f64 {
        -self.depth + i as f64 * self.dx
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        (0..=self.cells()).map(|i| self.xi(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontState {
    pub t: f64,
    pub h: f64,
    /// Global step counter; used to keep snapshot strides aligned on resume.
    pub step: u64,
    /// Samples on `ξ_i = −L + i·dx`; the last entry is the front and is 0.
    pub w: Vec<f64>,
}

impl FrontState {
    pub fn new(t: f64, h: f64, step: u64, w: Vec<f64>) -> Result<Self> {
        if w.len() < 3 {
            return Err(Error::InvalidInput("front state needs >= 3 nodes".into()));
        }
        if w.last() != Some(&0.0) {
            return Err(Error::InvalidInput("w must vanish at the front".into()));
        }
        if !t.is_finite() || !h.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        if w.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("w must be nonnegative".into()));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput(
                "initial data identically zero; the front cannot move".into(),
            ));
        }
        Ok(FrontState { t, h, step, w })
    }

    /// `u(x, t)` by linear interpolation in the moving frame: zero beyond the
    /// front, `None` behind the truncation.
    pub fn lab_value(&self, x: f64, config: &SolverConfig) -> Option<f64> {
        let xi = x - self.h;
        if xi >= 0.0 {
            return Some(0.0);
        }
        self.frame_value((xi + config.depth) / config.dx)
    }

    /// Value at fractional node index `s`; zero past the front, `None` behind
    /// the left end.
    pub fn frame_value(&self, s: f64) -> Option<f64> {
        let last = (self.w.len() - 1) as f64;
        if s >= last {
            return Some(0.0);
        }
        if s < -1e-9 {
            return None;
        }
        let s = s.max(0.0);
        let i = (s.floor() as usize).min(self.w.len() - 2);
        let theta = s - i as f64;
        if theta == 0.0 {
            return Some(self.w[i]);
        }
        Some((1.0 - theta) * self.w[i] + theta * self.w[i + 1])
    }

    pub fn max_value(&self) -> f64 {
        extremes(&self.w).1.max(0.0)
    }
}

/// `(min, max)` over `v`; either is NaN if `v` holds a non-finite value.
fn extremes(v: &[f64]) -> (f64, f64) {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    let mut poison = [0.0; 4];
    let chunks = v.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..4 {
            lo[k] = if c[k] < lo[k] { c[k] } else { lo[k] };
            hi[k] = if c[k] > hi[k] { c[k] } else { hi[k] };
            poison[k] += c[k] * 0.0;
        }
    }
    for (k, &x) in rest.iter().enumerate() {
        lo[k] = lo[k].min(x);
        hi[k] = hi[k].max(x);
        poison[k] += x * 0.0;
    }
    let poison = poison.iter().sum::<f64>();
    let lo = lo.iter().cloned().fold(f64::INFINITY, f64::min) + poison;
    let hi = hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + poison;
    (lo, hi)
}

/// One-sided `w_ξ(0)` with `w_N = 0`.
pub fn boundary_flux(w: &[f64], dx: f64, order: FluxOrder) -> f64 {
    let n = w.len() - 1;
    match order {
        FluxOrder::First => (w[n] - w[n - 1]) / dx,
        FluxOrder::Second => (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / (2.0 * dx),
    }
}

/// `H(y) = 1` for `y ≤ −1`, `−y` on `(−1, 0]`.
pub fn cutoff_ramp(y: f64) -> f64 {
    if y <= -1.0 {
        1.0
    } else if y <= 0.0 {
        -y
    } else {
        0.0
    }
}

/// Cutoff initial data `w(ξ) = H(n ξ) u*(ξ + h0)` at `t = 0`.
pub fn init_cutoff(
    steady: &SteadyState,
    h0: f64,
    n: u32,
    config: &SolverConfig,
) -> Result<FrontState> {
    config.validate()?;
    if n < 1 {
        return Err(Error::InvalidInput("cutoff index n must be >= 1".into()));
    }
    steady.sample_checked(h0 - config.depth)?;
    steady.sample_checked(h0)?;
    let nf = n as f64;
    let cells = config.cells();
    let mut w: Vec<f64> = (0..=cells)
        .map(|i| {
            let xi = config.xi(i);
            cutoff_ramp(nf * xi) * steady.sample(xi + h0)
        })
        .collect();
    w[cells] = 0.0;
    FrontState::new(0.0, h0, 0, w)
}

/// A configured problem: medium, steady state for the pinned end, and the
/// numerical parameters. Owns the scratch buffers used by [`Solver::step`].
pub struct Solver {
    config: SolverConfig,
    medium: QuasiPeriodicMedium,
    steady: Arc<SteadyState>,
    grid_medium: GridMedium,
    g: Vec<f64>,
    rhs: Vec<f64>,
    tridiag: ToeplitzTridiagonal,
    ceiling: f64,
}

impl Solver {
    pub fn new(config: SolverConfig, steady: Arc<SteadyState>) -> Result<Self> {
        config.validate()?;
        let medium = steady.medium().clone();
        let xi = config.xi_grid();
        let n = xi.len();
        let grid_medium = GridMedium::new(&medium, &xi);
        let ceiling = medium.bounds().1;
        Ok(Solver {
            config,
            medium,
            steady,
            grid_medium,
            g: vec![0.0; n],
            rhs: vec![0.0; n],
            tridiag: ToeplitzTridiagonal::new(),
            ceiling,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn medium(&self) -> &QuasiPeriodicMedium {
        &self.medium
    }

    pub fn steady(&self) -> &Arc<SteadyState> {
        &self.steady
    }

    /// Current front speed `−μ w_ξ(0)`.
    pub fn front_speed(&self, state: &FrontState) -> f64 {
        -self.config.mu * boundary_flux(&state.w, self.config.dx, self.config.flux_order)
    }

    /// Advances `state` by one step and returns the speed used for the step.
    pub fn step(&mut self, state: &mut FrontState) -> Result<f64> {
        let cfg = &self.config;
        let n = state.w.len() - 1;
        if n != cfg.cells() {
            return Err(Error::InvalidInput(format!(
                "state has {} nodes, config expects {}",
                n + 1,
                cfg.cells() + 1
            )));
        }
        let (dx, dt) = (cfg.dx, cfg.dt);
        let speed = -cfg.mu * boundary_flux(&state.w, dx, cfg.flux_order);
        if !speed.is_finite() {
            return Err(Error::NonFinite { t: state.t });
        }
        if dt * speed.abs() > dx {
            return Err(Error::Cfl {
                t: state.t,
                courant: dt * speed.abs(),
                dx,
            });
        }
        let h_next = state.h + dt * speed;
        if !self.steady.contains(h_next) {
            let (lo, hi) = self.steady.domain();
            return Err(Error::OutsideSteadyDomain { x: h_next, lo, hi });
        }
        self.grid_medium.fill(state.h, &mut self.g);

        let r = dt / (dx * dx);
        let p = match cfg.advection {
            Advection::Central => dt * speed / (2.0 * dx),
            Advection::Upwind => 0.0,
        };
        let (lower, diag, upper) = (-(r - p), 1.0 + 2.0 * r, -(r + p));
        let w = &state.w;
        let rhs = &mut self.rhs;
        for i in 1..n {
            rhs[i] = w[i] + dt * w[i] * (self.g[i] - w[i]);
        }
        if cfg.advection == Advection::Upwind {
            let k = dt * speed / dx;
            for i in 1..n {
                rhs[i] += k * (w[i + 1] - w[i]);
            }
        }
        // Unknowns occupy rows `first..n`; the front node stays 0.
        let (first, b0, c0) = match cfg.left_bc {
            LeftBc::Pin => {
                let pinned = self.steady.sample_checked(h_next - cfg.depth)?;
                rhs[1] -= lower * pinned;
                rhs[0] = pinned;
                (1, diag, upper)
            }
            LeftBc::ZeroSlope => {
                rhs[0] = w[0] + dt * w[0] * (self.g[0] - w[0]);
                if cfg.advection == Advection::Upwind {
                    rhs[0] += dt * speed / dx * (w[1] - w[0]);
                }
                (0, diag, -2.0 * r)
            }
        };
        self.tridiag
            .solve(b0, c0, lower, diag, upper, &mut rhs[first..n]);
        self.rhs[n] = 0.0;

        let ceiling = self.ceiling.max(state.max_value());
        let (lo, hi) = extremes(&self.rhs[..=n]);
        if lo.is_nan() {
            return Err(Error::NonFinite { t: state.t + dt });
        }
        if lo < -1e-12 || hi > ceiling * (1.0 + 1e-12) {
            let (i, v) = self.rhs[..=n]
                .iter()
                .cloned()
                .enumerate()
                .find(|&(_, v)| v < -1e-12 || v > ceiling * (1.0 + 1e-12))
                .unwrap_or((0, f64::NAN));
            return Err(Error::Invariant {
                t: state.t + dt,
                detail: format!("w[{i}] = {v} outside [0, {ceiling}]"),
            });
        }
        std::mem::swap(&mut state.w, &mut self.rhs);
        state.w.truncate(n + 1);
        self.rhs.resize(n + 1, 0.0);
        state.h = h_next;
        state.t += dt;
        state.step += 1;
        Ok(speed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub h: f64,
    /// Speed `−μ w_ξ(0)` evaluated at `(t, h)`.
    pub hprime: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedBounds {
    pub m: f64,
    pub big_m: f64,
    /// `m ≤ 0`: the post-transient speed is not bounded away from zero.
    pub violation: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub medium: QuasiPeriodicMedium,
    pub snapshots: Vec<FrontState>,
    pub series: Vec<SeriesPoint>,
    /// Post-transient `(min h', max h')`, when the run extends past the cutoff.
    pub bounds: Option<SpeedBounds>,
    /// First post-transient time where `h` failed to increase strictly.
    pub monotonicity_violation: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FrontState {
        self.snapshots
            .last()
            .expect("trajectory has at least one snapshot")
    }

    pub fn post_transient(&self) -> impl Iterator<Item = &SeriesPoint> {
        let cut = self.config.transient_cutoff;
        self.series.iter().filter(move |p| p.t >= cut)
    }

    /// Front position at time `t` by linear interpolation of the series.
    pub fn front_at(&self, t: f64) -> Option<f64> {
        let s = &self.series;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let k = s
            .partition_point(|p| p.t <= t)
            .saturating_sub(1)
            .min(s.len() - 1);
        if k + 1 == s.len() {
            return Some(s[k].h);
        }
        let theta = (t - s[k].t) / (s[k + 1].t - s[k].t);
        Some(s[k].h + theta * (s[k + 1].h - s[k].h))
    }
}

/// Time-steps until the stop condition, recording snapshots at the configured
/// stride and the `(t, h, h')` series at every step.
pub fn evolve(solver: &mut Solver, mut state: FrontState, stop: Stop) -> Result<Trajectory> {
    let cfg = solver.config().clone();
    match stop {
        Stop::Time(t_end) if !(t_end >= state.t) => {
            return Err(Error::InvalidInput(format!(
                "stop time {t_end} before t = {}",
                state.t
            )))
        }
        Stop::Front(h_end) if !(h_end >= state.h) => {
            return Err(Error::InvalidInput(format!(
                "stop front {h_end} behind h = {}",
                state.h
            )))
        }
        _ => {}
    }
    let done = |s: &FrontState| match stop {
        Stop::Time(t_end) => s.t >= t_end - 1e-9 * cfg.dt,
        Stop::Front(h_end) => s.h >= h_end,
    };
    let stride = cfg.snapshot_stride as u64;
    let mut snapshots = vec![state.clone()];
    let mut series = Vec::new();
    let mut bounds: Option<(f64, f64)> = None;
    let mut violation = None;
    let mut last_h = state.h;

    while !done(&state) {
        let (t, h) = (state.t, state.h);
        let speed = solver.step(&mut state)?;
        series.push(SeriesPoint {
            t,
            h,
            hprime: speed,
        });
        if t >= cfg.transient_cutoff {
            bounds = Some(match bounds {
                None => (speed, speed),
                Some((lo, hi)) => (lo.min(speed), hi.max(speed)),
            });
            if state.h <= last_h && violation.is_none() {
                violation = Some(state.t);
            }
        }
        last_h = state.h;
        if state.step.is_multiple_of(stride) {
            snapshots.push(state.clone());
        }
    }
    let speed = solver.front_speed(&state);
    series.push(SeriesPoint {
        t: state.t,
        h: state.h,
        hprime: speed,
    });
    if snapshots.last().map(|s| s.step) != Some(state.step) {
        snapshots.push(state);
    }
    Ok(Trajectory {
        config: cfg,
        medium: solver.medium().clone(),
        snapshots,
        series,
        bounds: bounds.map(|(m, big_m)| SpeedBounds {
            m,
            big_m,
            violation: m <= 0.0,
        }),
        monotonicity_violation: violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderingReport {
    /// `(min, max)` of `h1 − h2` over common series times.
    pub front_diff: (f64, f64),
    /// `(min, max)` of `u1 − u2` over common lab points of common snapshots.
    pub u_diff: (f64, f64),
    pub compared_times: usize,
}

impl OrderingReport {
    pub fn front_violation(&self) -> f64 {
        self.front_diff.1.max(0.0)
    }

    pub fn u_violation(&self) -> f64 {
        self.u_diff.1.max(0.0)
    }

    pub fn holds(&self, h_tol: f64, u_tol: f64) -> bool {
        self.front_violation() <= h_tol && self.u_violation() <= u_tol
    }
}

/// Checks `h1 ≤ h2` and `u1 ≤ u2` on the lab-frame overlap. Both runs must
/// share the time step so that series indices line up.
pub fn compare_ordered(traj1: &Trajectory, traj2: &Trajectory) -> Result<OrderingReport> {
    if (traj1.config.dt - traj2.config.dt).abs() > 0.0 {
        return Err(Error::InvalidInput("trajectories use different dt".into()));
    }
    let mut front = (f64::INFINITY, f64::NEG_INFINITY);
    let mut compared = 0;
    for (p, q) in traj1.series.iter().zip(&traj2.series) {
        if (p.t - q.t).abs() > 1e-9 * traj1.config.dt {
            continue;
        }
        let d = p.h - q.h;
        front = (front.0.min(d), front.1.max(d));
        compared += 1;
    }
    let mut u = (f64::INFINITY, f64::NEG_INFINITY);
    let mut j = 0;
    for s1 in &traj1.snapshots {
        while j < traj2.snapshots.len() && traj2.snapshots[j].step < s1.step {
            j += 1;
        }
        let Some(s2) = traj2.snapshots.get(j) else {
            break;
        };
        if s2.step != s1.step {
            continue;
        }
        let same_grid =
            traj1.config.dx == traj2.config.dx && traj1.config.depth == traj2.config.depth;
        let front_min = s1.h.min(s2.h);
        for (i, &v1) in s1.w.iter().enumerate() {
            let x = s1.h + traj1.config.xi(i);
            if x > front_min {
                break;
            }
            let v2 = if same_grid {
                // Index arithmetic avoids round-off when both fronts coincide.
                s2.frame_value(i as f64 + (s1.h - s2.h) / traj2.config.dx)
            } else {
                s2.lab_value(x, &traj2.config)
            };
            if let Some(v2) = v2 {
                let d = v1 - v2;
                u = (u.0.min(d), u.1.max(d));
            }
        }
    }
    if compared == 0 {
        return Err(Error::EmptyWindow("no common times to compare".into()));
    }
    if u.0 > u.1 {
        u = (0.0, 0.0);
    }
    Ok(OrderingReport {
        front_diff: front,
        u_diff: u,
        compared_times: compared,
    })
}
