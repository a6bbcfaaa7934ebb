//! CSV artifacts. Every float is written as `{:.16e}` (17 significant digits),
//! which reads back bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::builder::{ConvergenceReport, Profile, TailGap};
use crate::diagnostics::{AlmostPeriods, RhoSeries, SpeedLaw};
use crate::error::{Error, Result};
use crate::media::QuasiPeriodicMedium;
use crate::oracle::ShootingResult;
use crate::solver::{FrontState, SeriesPoint, SolverConfig, SpeedBounds};
use crate::steady_state::SteadyState;

pub const SNAPSHOT_VERSION: &str = "semiwave-snapshot v1";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// A snapshot file: the state plus the grid and medium it belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state: FrontState,
    pub dx: f64,
    pub depth: f64,
    pub medium: QuasiPeriodicMedium,
}

pub fn snapshot_csv(
    state: &FrontState,
    config: &SolverConfig,
    medium: &QuasiPeriodicMedium,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {SNAPSHOT_VERSION}");
    let _ = writeln!(
        s,
        "# t={} h={} step={}",
        num(state.t),
        num(state.h),
        state.step
    );
    let _ = writeln!(
        s,
        "# dx={} L={} nodes={}",
        num(config.dx),
        num(config.depth),
        state.w.len()
    );
    let _ = writeln!(s, "# medium={medium}");
    s.push_str("xi,w\n");
    for (i, &w) in state.w.iter().enumerate() {
        let _ = writeln!(s, "{},{}", num(config.xi(i)), num(w));
    }
    s
}

fn header_fields(line: Option<&str>, prefix: &str) -> Result<Vec<(String, String)>> {
    let line = line.ok_or_else(|| Error::Snapshot(format!("missing `{prefix}` header")))?;
    let body = line
        .strip_prefix("# ")
        .ok_or_else(|| Error::Snapshot(format!("expected a `# ` header, got `{line}`")))?;
    if !body.starts_with(prefix) {
        return Err(Error::Snapshot(format!(
            "expected `{prefix}` header, got `{line}`"
        )));
    }
    body.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Snapshot(format!("bad header field `{kv}`")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(fields: &[(String, String)], key: &str) -> Result<T> {
    let (_, v) = fields
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| Error::Snapshot(format!("missing header field `{key}`")))?;
    v.parse()
        .map_err(|_| Error::Snapshot(format!("cannot parse `{key}` from `{v}`")))
}

pub fn parse_snapshot(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == format!("# {SNAPSHOT_VERSION}") => {}
        Some(l) => return Err(Error::Snapshot(format!("unsupported version line `{l}`"))),
        None => return Err(Error::Snapshot("empty file".into())),
    }
    let time = header_fields(lines.next(), "t=")?;
    let grid = header_fields(lines.next(), "dx=")?;
    let medium_line = lines
        .next()
        .and_then(|l| l.strip_prefix("# medium="))
        .ok_or_else(|| Error::Snapshot("missing `# medium=` header".into()))?;
    let medium: QuasiPeriodicMedium = medium_line.parse()?;
    if lines.next() != Some("xi,w") {
        return Err(Error::Snapshot("missing `xi,w` column header".into()));
    }
    let nodes: usize = field(&grid, "nodes")?;
    let mut w = Vec::with_capacity(nodes);
    for (k, line) in lines.enumerate() {
        let (_, value) = line
            .split_once(',')
            .ok_or_else(|| Error::Snapshot(format!("row {k}: expected `xi,w`, got `{line}`")))?;
        w.push(
            value
                .parse::<f64>()
                .map_err(|_| Error::Snapshot(format!("row {k}: bad value `{value}`")))?,
        );
    }
    if w.len() != nodes {
        return Err(Error::Snapshot(format!(
            "expected {nodes} rows, found {} (truncated file?)",
            w.len()
        )));
    }
    let state = FrontState::new(
        field(&time, "t")?,
        field(&time, "h")?,
        field(&time, "step")?,
        w,
    )?;
    Ok(Snapshot {
        state,
        dx: field(&grid, "dx")?,
        depth: field(&grid, "L")?,
        medium,
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    parse_snapshot(&read_file(path)?)
}

pub fn series_csv(series: &[SeriesPoint]) -> String {
    let mut s = String::from("t,h,hprime\n");
    for p in series {
        let _ = writeln!(s, "{},{},{}", num(p.t), num(p.h), num(p.hprime));
    }
    s
}

pub fn steady_csv(steady: &SteadyState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# medium={}", steady.medium());
    let _ = writeln!(
        s,
        "# dx={} half_width={} residual={} sandwich_gap={}",
        num(steady.dx()),
        num(steady.half_width()),
        num(steady.residual_norm()),
        num(steady.sandwich_gap())
    );
    s.push_str("x,u_star\n");
    for (i, &u) in steady.values().iter().enumerate() {
        let _ = writeln!(s, "{},{}", num(steady.x(i)), num(u));
    }
    s
}

pub fn profile_csv(profile: &Profile) -> String {
    let mut s = String::new();
    for (k, &tau) in profile.tau().iter().enumerate() {
        let _ = writeln!(s, "# tau={}", num(tau));
        s.push_str("xi,v\n");
        for (&xi, &v) in profile.xi().iter().zip(profile.slice(k)) {
            let _ = writeln!(s, "{},{}", num(xi), num(v));
        }
    }
    s
}

pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut s = String::from("n,h0,front_gap,order_violation,sup_diff,h0_diff\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.n,
            num(r.h0),
            opt(r.front_gap),
            opt(r.order_violation),
            opt(r.sup_diff),
            opt(r.h0_diff)
        );
    }
    s
}

pub fn tail_gap_csv(gap: &TailGap) -> String {
    let mut s = String::from("xi,gap\n");
    for (&xi, &g) in gap.xi.iter().zip(&gap.gap) {
        let _ = writeln!(s, "{},{}", num(xi), num(g));
    }
    s
}

pub fn rho_csv(series: &RhoSeries) -> String {
    let mut s = String::from("tau,rho\n");
    for (&t, &r) in series.tau.iter().zip(&series.rho) {
        let _ = writeln!(s, "{},{}", num(t), num(r));
    }
    s
}

pub fn speed_law_csv(law: &SpeedLaw) -> String {
    let mut s = String::from("h,f\n");
    for (&h, &f) in law.h().iter().zip(law.f()) {
        let _ = writeln!(s, "{},{}", num(h), num(f));
    }
    s
}

pub fn almost_periods_csv(scan: &AlmostPeriods) -> String {
    let mut s = String::from("T,sup_diff\n");
    for &(t, d) in &scan.scanned {
        let _ = writeln!(s, "{},{}", num(t), num(d));
    }
    s
}

pub fn bounds_csv(label: &str, bounds: &SpeedBounds) -> String {
    format!(
        "label,m,M,violation\n{label},{},{},{}\n",
        num(bounds.m),
        num(bounds.big_m),
        bounds.violation
    )
}

pub fn oracle_csv(results: &[ShootingResult]) -> String {
    let mut s = String::from("mu,c\n");
    for r in results {
        let _ = writeln!(s, "{},{}", num(r.mu), num(r.c));
    }
    s
}

pub fn oracle_profile_csv(result: &ShootingResult) -> String {
    let mut s = String::from("xi,q\n");
    for (&xi, &q) in result.profile.xi.iter().zip(&result.profile.q) {
        let _ = writeln!(s, "{},{}", num(xi), num(q));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> (FrontState, SolverConfig) {
        let cfg = SolverConfig {
            dx: 0.5,
            dt: 0.1,
            depth: 20.0,
            ..SolverConfig::default()
        };
        let n = cfg.cells();
        let w = (0..=n)
            .map(|i| {
                if i == n {
                    0.0
                } else {
                    1.0 / 3.0 + i as f64 * 1e-3
                }
            })
            .collect();
        (
            FrontState::new(12.345678901234567, 0.1 + 0.2, 42, w).unwrap(),
            cfg,
        )
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let (s, cfg) = state();
        let medium = QuasiPeriodicMedium::default_quasi_periodic();
        let text = snapshot_csv(&s, &cfg, &medium);
        let back = parse_snapshot(&text).unwrap();
        assert_eq!(back.state, s);
        assert_eq!(back.dx, cfg.dx);
        assert_eq!(back.depth, cfg.depth);
        assert_eq!(back.medium, medium);
        assert_eq!(snapshot_csv(&back.state, &cfg, &back.medium), text);
    }

    #[test]
    fn truncated_snapshot_is_rejected() {
        let (s, cfg) = state();
        let text = snapshot_csv(&s, &cfg, &QuasiPeriodicMedium::default_periodic());
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_snapshot(&cut), Err(Error::Snapshot(_))));
        assert!(matches!(parse_snapshot(""), Err(Error::Snapshot(_))));
        let wrong = text.replacen("v1", "v0", 1);
        assert!(matches!(parse_snapshot(&wrong), Err(Error::Snapshot(_))));
    }
}
