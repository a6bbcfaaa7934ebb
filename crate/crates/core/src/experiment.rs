//! Subcommand pipelines: each runs one stage from an [`ExperimentConfig`],
//! writes its CSV artifacts and returns a key=value [`Summary`].

use std::fmt::{self, Display};
use std::path::PathBuf;
use std::sync::Arc;

use crate::builder::{
    self, build_semiwave, extract_profile, monotone_in_time_check, tail_gap, uniform_grid,
    veq_residual, Ladder,
};
use crate::config::ExperimentConfig;
use crate::diagnostics::{
    almost_period_scan, average_speed, rho_series, speed_bounds, speed_law, SpeedLaw,
};
use crate::error::{Error, Result};
use crate::io;
use crate::oracle::solve_speed;
use crate::solver::{evolve, init_cutoff, Solver, SolverConfig, Stop, Trajectory};
use crate::steady_state::{compute_steady_state, SteadyState};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

/// Ordered `key=value` lines plus named pass/fail checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub values: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn value(&mut self, key: &str, v: impl Display) {
        self.values.push((key.to_string(), v.to_string()));
    }

    pub fn check(&mut self, name: &str, pass: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            pass,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.pass)
    }

    /// Prefixes every key and check name with `prefix.`.
    pub fn merge(&mut self, prefix: &str, other: Summary) {
        for (k, v) in other.values {
            self.values.push((format!("{prefix}.{k}"), v));
        }
        for c in other.checks {
            self.checks.push(Check {
                name: format!("{prefix}.{}", c.name),
                pass: c.pass,
            });
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k}={v}")?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "check.{}={}",
                c.name,
                if c.pass { "pass" } else { "fail" }
            )?;
        }
        writeln!(f, "all_pass={}", self.all_pass())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Steady,
    Evolve,
    Semiwave,
    Speed,
    Rho,
    AlmostPeriod,
    Oracle,
    VerifyAll,
}

pub struct Runner {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub jobs: usize,
    pub resume: Option<PathBuf>,
    pub mu_literal: bool,
}

/// Mean of `h'` over the samples in the last `frac` of the front range.
pub fn tail_mean_speed(traj: &Trajectory, frac: f64) -> Result<f64> {
    let first = traj.series[0].h;
    let last = traj.series[traj.series.len() - 1].h;
    let cut = last - frac * (last - first);
    let (sum, count) = traj
        .series
        .iter()
        .filter(|p| p.h >= cut)
        .fold((0.0, 0usize), |(s, c), p| (s + p.hprime, c + 1));
    if count == 0 {
        return Err(Error::EmptyWindow("no samples in the final window".into()));
    }
    Ok(sum / count as f64)
}

/// `true` when successive differences of `values` shrink by `factor`, or the
/// earlier difference is already below `floor`.
pub fn cauchy_shrinking(values: &[f64], factor: f64, floor: f64) -> bool {
    values.windows(3).all(|w| {
        let (d1, d2) = ((w[1] - w[0]).abs(), (w[2] - w[1]).abs());
        d1 <= floor || factor * d2 <= d1
    })
}

impl Runner {
    pub fn new(config: ExperimentConfig, out: PathBuf) -> Self {
        let mu_literal = config.diagnostics.mu_literal;
        Runner {
            config,
            out,
            jobs: 1,
            resume: None,
            mu_literal,
        }
    }

    fn solver_config(&self) -> Result<SolverConfig> {
        self.config.solver.solver_config()
    }

    fn path(&self, sub: &str, name: &str) -> PathBuf {
        self.out.join(sub).join(name)
    }

    fn rho_end(&self) -> f64 {
        let d = &self.config.diagnostics;
        d.rho_restart + d.rho_window + 2.0 * self.config.ladder.tau_step
    }

    /// Half-width covering every position any stage can visit.
    fn steady_half_width(&self) -> f64 {
        let c = &self.config;
        if let Some(w) = c.steady.half_width {
            return w;
        }
        let depth = c.solver.depth;
        let far_left = c
            .ladder
            .h0_list
            .iter()
            .chain(std::iter::once(&c.solver.h0))
            .fold(0.0f64, |acc, h| acc.max(h.abs()))
            + depth;
        let far_right = [
            c.solver.stop_h.unwrap_or(0.0),
            c.ladder.tau_end + 1.0,
            self.rho_end() + 1.0,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let need = far_left.max(far_right) + 20.0;
        (need / c.solver.dx).ceil() * c.solver.dx
    }

    fn steady(&self) -> Result<SteadyState> {
        compute_steady_state(
            &self.config.medium,
            self.steady_half_width(),
            self.config.solver.dx,
            self.config.steady.tol,
        )
    }

    pub fn run(&self, cmd: Subcommand) -> Result<Summary> {
        match cmd {
            Subcommand::Steady => self.steady_stage("steady"),
            Subcommand::Evolve => self.evolve_stage("evolve"),
            Subcommand::Semiwave => self.semiwave_stage("semiwave"),
            Subcommand::Speed => self.speed_stage("speed"),
            Subcommand::Rho => self.rho_stage("rho"),
            Subcommand::AlmostPeriod => self.almost_period_stage("almost-period"),
            Subcommand::Oracle => self.oracle_stage("oracle"),
            Subcommand::VerifyAll => self.verify_all(),
        }
    }

    fn finish(&self, sub: &str, summary: Summary) -> Result<Summary> {
        io::write_file(&self.path(sub, "summary.txt"), &summary.to_string())?;
        Ok(summary)
    }

    fn steady_stage(&self, sub: &str) -> Result<Summary> {
        let st = self.steady()?;
        io::write_file(&self.path(sub, "steady.csv"), &io::steady_csv(&st))?;
        let (lo, hi) = st.medium().bounds();
        let tol = st.tol();
        let (umin, umax) = st
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| {
                (a.min(u), b.max(u))
            });
        let mut s = Summary::default();
        s.value("half_width", st.half_width());
        s.value("residual_norm", st.residual_norm());
        s.value("sandwich_gap", st.sandwich_gap());
        s.value("u_min", umin);
        s.value("u_max", umax);
        s.check("residual", st.residual_norm() <= tol);
        s.check("sandwich", st.sandwich_gap() <= tol);
        s.check(
            "bounds",
            umin >= lo * (1.0 - tol) && umax <= hi * (1.0 + tol),
        );
        self.finish(sub, s)
    }

    fn run_from_cutoff(
        &self,
        steady: &Arc<SteadyState>,
        n: u32,
        h0: f64,
        stop: Stop,
    ) -> Result<Trajectory> {
        let cfg = self.solver_config()?;
        let mut solver = Solver::new(cfg.clone(), steady.clone())?;
        evolve(&mut solver, init_cutoff(steady, h0, n, &cfg)?, stop)
    }

    fn evolve_stage(&self, sub: &str) -> Result<Summary> {
        let cfg = self.solver_config()?;
        let stop = self.config.solver.stop()?;
        let steady = Arc::new(self.steady()?);
        let mut s = Summary::default();
        let start = match &self.resume {
            Some(path) => {
                let snap = io::read_snapshot(path)?;
                if snap.dx != cfg.dx || snap.depth != cfg.depth || snap.medium != self.config.medium
                {
                    return Err(Error::Snapshot(format!(
                        "{} was written for a different grid or medium",
                        path.display()
                    )));
                }
                s.value("resumed_from", path.display());
                snap.state
            }
            None => init_cutoff(&steady, self.config.solver.h0, self.config.solver.n, &cfg)?,
        };
        let mut solver = Solver::new(cfg.clone(), steady)?;
        let traj = evolve(&mut solver, start, stop)?;
        io::write_file(&self.path(sub, "series.csv"), &io::series_csv(&traj.series))?;
        let fin = traj.final_state();
        io::write_file(
            &self.path(sub, "final_snapshot.csv"),
            &io::snapshot_csv(fin, &cfg, &self.config.medium),
        )?;
        let every = self.config.solver.checkpoint_every;
        if every > 0 {
            for snap in traj.snapshots.iter().filter(|x| x.step % every == 0) {
                io::write_file(
                    &self.path(sub, &format!("snapshots/step_{:010}.csv", snap.step)),
                    &io::snapshot_csv(snap, &cfg, &self.config.medium),
                )?;
            }
        }
        s.value("t_final", fin.t);
        s.value("h_final", fin.h);
        s.value("steps", fin.step);
        match traj.bounds {
            Some(b) => {
                io::write_file(&self.path(sub, "bounds.csv"), &io::bounds_csv("evolve", &b))?;
                s.value("m", b.m);
                s.value("M", b.big_m);
                s.check("speed_lower_bound_positive", !b.violation);
            }
            None => s.value("m", "none (run ended before the transient cutoff)"),
        }
        s.check("front_increasing", traj.monotonicity_violation.is_none());
        self.finish(sub, s)
    }

    fn law_for(&self, traj: &Trajectory) -> Result<SpeedLaw> {
        speed_law(traj, self.config.solver.transient_cutoff)
    }

    fn speed_stage(&self, sub: &str) -> Result<Summary> {
        let stop = self.config.solver.stop()?;
        let steady = Arc::new(self.steady()?);
        let traj =
            self.run_from_cutoff(&steady, self.config.solver.n, self.config.solver.h0, stop)?;
        let law = self.law_for(&traj)?;
        let bounds = speed_bounds(&traj, self.config.solver.transient_cutoff)?;
        io::write_file(&self.path(sub, "series.csv"), &io::series_csv(&traj.series))?;
        io::write_file(&self.path(sub, "speedlaw.csv"), &io::speed_law_csv(&law))?;
        io::write_file(
            &self.path(sub, "bounds.csv"),
            &io::bounds_csv("speed", &bounds),
        )?;
        let mut s = Summary::default();
        let mean = law.mean();
        s.value("f_mean", mean);
        s.value("f_min", law.min());
        s.value("f_max", law.max());
        s.value("m", bounds.m);
        s.value("M", bounds.big_m);
        s.check("speed_lower_bound_positive", !bounds.violation);

        let medium = &self.config.medium;
        if medium.is_constant() {
            let oracle = solve_speed(medium.base(), self.config.solver.mu, self.config.oracle.tol)?;
            let tail = tail_mean_speed(&traj, 0.2)?;
            let rel = (tail - oracle.c).abs() / oracle.c;
            s.value("oracle_c", oracle.c);
            s.value("tail_mean_speed", tail);
            s.value("oracle_rel_err", rel);
            s.check("oracle_match", rel <= self.config.oracle.speed_rel_tol);
            s.check("f_constant", law.max() - law.min() <= 0.01 * mean);
        } else if let [mode] = medium.modes() {
            let period = 2.0 * std::f64::consts::PI / mode.frequency;
            let defect = law.shift_defect(period, self.config.diagnostics.almost_step)?;
            s.value("period", period);
            s.value("period_defect", defect);
            s.check("f_periodic", defect < 0.02 * mean);
        }
        self.finish(sub, s)
    }

    fn tau_grid(&self) -> Vec<f64> {
        let l = &self.config.ladder;
        let n = ((l.tau_end - l.tau_start) / l.tau_step).round() as usize + 1;
        uniform_grid(l.tau_start, l.tau_end, n)
    }

    fn semiwave_stage(&self, sub: &str) -> Result<Summary> {
        let cfg = self.solver_config()?;
        let steady = Arc::new(self.steady()?);
        let l = &self.config.ladder;
        let ladder = Ladder {
            n_list: l.n_list.clone(),
            h0_list: l.h0_list.clone(),
            tau_grid: self.tau_grid(),
            h_end: l.tau_end + l.tau_step,
            order_tol: l.order_tol.unwrap_or(2.0 * cfg.dx),
        };
        let build = build_semiwave(steady.clone(), &cfg, &ladder, self.jobs)?;
        let d = &self.config.diagnostics;
        io::write_file(
            &self.path(sub, "profile.csv"),
            &io::profile_csv(&build.profile),
        )?;
        io::write_file(
            &self.path(sub, "convergence.csv"),
            &io::convergence_csv(&build.report),
        )?;
        let gap = tail_gap(&build.profile, &steady)?;
        io::write_file(&self.path(sub, "tail_gap.csv"), &io::tail_gap_csv(&gap))?;
        let residual = veq_residual(&build.profile, self.mu_literal, d.residual_trim)?;
        let finest = &build.runs[build.runs.len() - 1];
        let mono = monotone_in_time_check(&finest.trajectory, cfg.transient_cutoff);

        let vmax = build
            .profile
            .slices()
            .iter()
            .flatten()
            .fold(0.0f64, |a, &v| a.max(v));
        let (half, quarter) = (gap.at(-cfg.depth / 2.0), gap.at(-cfg.depth / 4.0));
        let mut s = Summary::default();
        s.value("runs", build.runs.len());
        s.value("h0_spread", build.report.h0_spread);
        s.value("veq_residual", residual.norm);
        s.value("veq_mu_literal", self.mu_literal);
        s.value("tail_gap_half", half);
        s.value("tail_gap_quarter", quarter);
        s.value("monotone_min_diff", mono.min_diff);
        s.check("construction_monotone", !build.report.construction_violated);
        s.check("cauchy_shrinking", build.report.cauchy_shrinking);
        if l.h0_list.len() > 1 {
            s.check(
                "h0_independent",
                build.report.h0_spread <= l.h0_rel_tol * vmax,
            );
        }
        s.check("tail_gap_small", half < d.tail_tol);
        s.check("tail_gap_decreasing", half < quarter);
        s.check("monotone_in_time", mono.holds(d.monotone_tol));
        s.check("veq_residual_finite", residual.norm.is_finite());
        if self.config.medium.is_constant() {
            let oracle = solve_speed(self.config.medium.base(), cfg.mu, self.config.oracle.tol)?;
            let last = build.profile.slice(build.profile.tau().len() - 1);
            let dist = build
                .profile
                .xi()
                .iter()
                .zip(last)
                .fold(0.0f64, |a, (&xi, &v)| {
                    a.max((v - oracle.profile.eval(xi)).abs())
                });
            s.value("oracle_profile_dist", dist);
            s.check("oracle_profile", dist <= 0.01 * self.config.medium.base());
        }
        self.finish(sub, s)
    }

    fn rho_stage(&self, sub: &str) -> Result<Summary> {
        let cfg = self.solver_config()?;
        let steady = Arc::new(self.steady()?);
        let d = &self.config.diagnostics;
        let n = *self.config.ladder.n_list.last().unwrap_or(&1);
        let h0 = self
            .config
            .ladder
            .h0_list
            .first()
            .copied()
            .unwrap_or(self.config.solver.h0);
        let end = self.rho_end();
        let upper = self.run_from_cutoff(&steady, n, h0, Stop::Front(end))?;
        let snap = upper
            .snapshots
            .iter()
            .find(|x| x.h >= d.rho_restart)
            .ok_or_else(|| Error::EmptyWindow(format!("front never reached {}", d.rho_restart)))?;
        let start = builder::scaled_restart(snap, d.rho_scale)?;
        let mut solver = Solver::new(cfg.clone(), steady.clone())?;
        let lower = evolve(&mut solver, start, Stop::Front(end))?;
        let step = self.config.ladder.tau_step;
        let lo = snap.h + step;
        let count = (d.rho_window / step).round() as usize + 1;
        let grid = uniform_grid(lo, lo + d.rho_window, count);
        let p1 = extract_profile(&lower, &grid)?;
        let p2 = extract_profile(&upper, &grid)?;
        let series = rho_series(&p1, &p2, Some(&steady))?;
        io::write_file(&self.path(sub, "rho.csv"), &io::rho_csv(&series))?;
        let mut s = Summary::default();
        s.value("rho_first", series.rho[0]);
        s.value("rho_last", series.rho[series.rho.len() - 1]);
        s.value("max_backward_step", series.max_backward_step);
        s.value("screen_order_violation", series.order_violation);
        s.value(
            "screen_steady_violation",
            series.steady_violation.unwrap_or(f64::NAN),
        );
        s.value("screen_growth_violation", series.growth_violation);
        s.check("rho_nondecreasing", series.nondecreasing(d.rho_tol));
        self.finish(sub, s)
    }

    fn almost_period_stage(&self, sub: &str) -> Result<Summary> {
        let stop = self.config.solver.stop()?;
        let steady = Arc::new(self.steady()?);
        let traj =
            self.run_from_cutoff(&steady, self.config.solver.n, self.config.solver.h0, stop)?;
        let law = self.law_for(&traj)?;
        let d = &self.config.diagnostics;
        let (lo, hi) = law.range();
        let values = law.resample(lo, hi, d.almost_step)?;
        let mean = law.mean();
        let max_steps =
            ((d.almost_max_shift / d.almost_step).round() as usize).min(values.len() / 4);
        let scan = almost_period_scan(&values, d.almost_step, d.almost_eps_rel * mean, max_steps)?;
        io::write_file(
            &self.path(sub, "almostperiods.csv"),
            &io::almost_periods_csv(&scan),
        )?;
        io::write_file(&self.path(sub, "speedlaw.csv"), &io::speed_law_csv(&law))?;
        let mut s = Summary::default();
        s.value("f_mean", mean);
        s.value("qualifying", scan.qualifying.len());
        s.value("max_gap", scan.max_gap);
        s.value("scan_range", max_steps as f64 * d.almost_step);
        s.check("almost_periods_exist", scan.qualifying.len() > 1);
        s.check(
            "almost_periods_relatively_dense",
            scan.max_gap < d.almost_max_gap,
        );

        let start = d.average_start.unwrap_or(lo);
        let averages = d
            .average_lengths
            .iter()
            .map(|len| average_speed(&law, start, start + len))
            .collect::<Result<Vec<_>>>()?;
        for (len, c) in d.average_lengths.iter().zip(&averages) {
            s.value(&format!("average_speed_{len}"), c);
        }
        s.check(
            "average_speed_cauchy",
            cauchy_shrinking(&averages, 1.5, 1e-6 * mean),
        );
        self.finish(sub, s)
    }

    fn oracle_stage(&self, sub: &str) -> Result<Summary> {
        let o = &self.config.oracle;
        let a0 = o.a0.unwrap_or_else(|| self.config.medium.bounds().0);
        let results = o
            .mu_list
            .iter()
            .map(|&mu| solve_speed(a0, mu, o.tol))
            .collect::<Result<Vec<_>>>()?;
        io::write_file(&self.path(sub, "oracle.csv"), &io::oracle_csv(&results))?;
        if let Some(first) = results.first() {
            io::write_file(
                &self.path(sub, "oracle_profile.csv"),
                &io::oracle_profile_csv(first),
            )?;
        }
        let mut s = Summary::default();
        s.value("a0", a0);
        for r in &results {
            s.value(&format!("c_mu_{}", r.mu), r.c);
        }
        let cap = 2.0 * a0.sqrt();
        s.check("residual", results.iter().all(|r| r.residual <= 1e-8));
        s.check(
            "below_linear_speed",
            results.iter().all(|r| r.c > 0.0 && r.c < cap),
        );
        let mut sorted: Vec<(f64, f64)> = results.iter().map(|r| (r.mu, r.c)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        s.check(
            "increasing_in_mu",
            sorted.windows(2).all(|w| w[1].1 > w[0].1),
        );
        self.finish(sub, s)
    }

    fn verify_all(&self) -> Result<Summary> {
        let mut s = Summary::default();
        s.merge("steady", self.steady_stage("steady")?);
        s.merge("oracle", self.oracle_stage("oracle")?);
        s.merge("speed", self.speed_stage("speed")?);
        s.merge("semiwave", self.semiwave_stage("semiwave")?);
        s.merge("rho", self.rho_stage("rho")?);
        s.merge("almost_period", self.almost_period_stage("almost-period")?);
        io::write_file(&self.out.join("summary.txt"), &s.to_string())?;
        Ok(s)
    }
}
