//! Almost periodic reaction coefficients realized as finite trigonometric sums.
//!
//! A medium is `a(x) = base + Σ A_k cos(ω_k (x + shift) + φ_k)`. Translates of
//! `a` (elements of its hull) are represented by changing `shift`; the phase
//! torus of the modes is reachable through [`QuasiPeriodicMedium::with_phases`].

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub amplitude: f64,
    /// Angular frequency in rad per unit length.
    pub frequency: f64,
    pub phase: f64,
}

impl Mode {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Mode {
            amplitude,
            frequency,
            phase,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiPeriodicMedium {
    base: f64,
    modes: Vec<Mode>,
    shift: f64,
}

impl QuasiPeriodicMedium {
    pub fn new(base: f64, modes: Vec<Mode>) -> Result<Self> {
        Self::with_shift(base, modes, 0.0)
    }

    pub fn with_shift(base: f64, modes: Vec<Mode>, shift: f64) -> Result<Self> {
        if !base.is_finite() || !shift.is_finite() {
            return Err(Error::InvalidMedium("base and shift must be finite".into()));
        }
        for (k, m) in modes.iter().enumerate() {
            if !(m.amplitude >= 0.0 && m.amplitude.is_finite()) {
                return Err(Error::InvalidMedium(format!(
                    "mode {k}: amplitude must be finite and >= 0, got {}",
                    m.amplitude
                )));
            }
            if !(m.frequency > 0.0 && m.frequency.is_finite()) {
                return Err(Error::InvalidMedium(format!(
                    "mode {k}: frequency must be finite and > 0, got {}",
                    m.frequency
                )));
            }
            if !m.phase.is_finite() {
                return Err(Error::InvalidMedium(format!(
                    "mode {k}: phase must be finite"
                )));
            }
        }
        let lower = base - modes.iter().map(|m| m.amplitude).sum::<f64>();
        if lower <= 0.0 {
            return Err(Error::InvalidMedium(format!(
                "lower bound base - sum(amplitudes) = {lower} must be positive"
            )));
        }
        Ok(QuasiPeriodicMedium { base, modes, shift })
    }

    /// `a ≡ a0`.
    pub fn constant(a0: f64) -> Result<Self> {
        Self::new(a0, Vec::new())
    }

    /// `1 + 0.5 sin x`, the default periodic test medium.
    pub fn default_periodic() -> Self {
        Self::new(1.0, vec![Mode::new(0.5, 1.0, -FRAC_PI_2)]).expect("valid medium")
    }

    /// `1.5 + 0.3 cos x + 0.2 cos(√2 x)`, the default quasi-periodic test medium.
    pub fn default_quasi_periodic() -> Self {
        Self::new(
            1.5,
            vec![Mode::new(0.3, 1.0, 0.0), Mode::new(0.2, SQRT_2, 0.0)],
        )
        .expect("valid medium")
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let y = x + self.shift;
        self.base
            + self
                .modes
                .iter()
                .map(|m| m.amplitude * (m.frequency * y + m.phase).cos())
                .sum::<f64>()
    }

    /// The hull translate `a(· + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        QuasiPeriodicMedium {
            base: self.base,
            modes: self.modes.clone(),
            shift: self.shift + s,
        }
    }

    /// Hull element with per-mode phases replaced; the shift is kept.
    pub fn with_phases(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.modes.len() {
            return Err(Error::InvalidMedium(format!(
                "expected {} phases, got {}",
                self.modes.len(),
                phases.len()
            )));
        }
        let modes = self
            .modes
            .iter()
            .zip(phases)
            .map(|(m, &p)| Mode::new(m.amplitude, m.frequency, p))
            .collect();
        Self::with_shift(self.base, modes, self.shift)
    }

    /// `(base − ΣA_k, base + ΣA_k)`.
    pub fn bounds(&self) -> (f64, f64) {
        let total: f64 = self.modes.iter().map(|m| m.amplitude).sum();
        (self.base - total, self.base + total)
    }
}

impl fmt::Display for QuasiPeriodicMedium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "base={}", self.base)?;
        for m in &self.modes {
            write!(f, "; mode={},{},{}", m.amplitude, m.frequency, m.phase)?;
        }
        write!(f, "; shift={}", self.shift)
    }
}

impl FromStr for QuasiPeriodicMedium {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut base = None;
        let mut shift = 0.0;
        let mut modes = Vec::new();
        for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidMedium(format!("expected key=value, got `{item}`")))?;
            let value = value.trim();
            match key.trim() {
                "base" => base = Some(parse_num(value)?),
                "shift" => shift = parse_num(value)?,
                "mode" => {
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return Err(Error::InvalidMedium(format!(
                            "mode needs <amp>,<freq>,<phase>, got `{value}`"
                        )));
                    }
                    modes.push(Mode::new(
                        parse_num(parts[0])?,
                        parse_num(parts[1])?,
                        parse_num(parts[2])?,
                    ));
                }
                other => {
                    return Err(Error::InvalidMedium(format!(
                        "unknown medium key `{other}`"
                    )))
                }
            }
        }
        let base = base.ok_or_else(|| Error::InvalidMedium("missing `base`".into()))?;
        Self::with_shift(base, modes, shift)
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidMedium(format!("not a number: `{}`", s.trim())))
}

/// A medium tabulated against a fixed grid so that `g(x_i + offset)` can be
/// refreshed for a moving offset without per-node trigonometric calls.
#[derive(Clone, Debug)]
pub(crate) struct GridMedium {
    base: f64,
    // Per mode: amplitude, frequency, phase + frequency * shift.
    modes: Vec<(f64, f64, f64)>,
    cos_tab: Vec<Vec<f64>>,
    sin_tab: Vec<Vec<f64>>,
}

impl GridMedium {
    pub(crate) fn new(medium: &QuasiPeriodicMedium, xs: &[f64]) -> Self {
        let modes: Vec<(f64, f64, f64)> = medium
            .modes
            .iter()
            .filter(|m| m.amplitude != 0.0)
            .map(|m| {
                (
                    m.amplitude,
                    m.frequency,
                    m.phase + m.frequency * medium.shift,
                )
            })
            .collect();
        let cos_tab = modes
            .iter()
            .map(|&(_, w, _)| xs.iter().map(|&x| (w * x).cos()).collect())
            .collect();
        let sin_tab = modes
            .iter()
            .map(|&(_, w, _)| xs.iter().map(|&x| (w * x).sin()).collect())
            .collect();
        GridMedium {
            base: medium.base,
            modes,
            cos_tab,
            sin_tab,
        }
    }

    /// Writes `g(x_i + offset)` into `out`.
    pub(crate) fn fill(&self, offset: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = self.base);
        for (k, &(amp, w, ph)) in self.modes.iter().enumerate() {
            let arg = w * offset + ph;
            let (s, c) = arg.sin_cos();
            let (ac, as_) = (amp * c, amp * s);
            for ((v, &ct), &st) in out.iter_mut().zip(&self.cos_tab[k]).zip(&self.sin_tab[k]) {
                *v += ac * ct - as_ * st;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn two_mode() -> QuasiPeriodicMedium {
        QuasiPeriodicMedium::new(
            1.5,
            vec![Mode::new(0.3, 1.0, 0.0), Mode::new(0.2, SQRT_2, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert!((two_mode().eval(0.0) - 2.0).abs() < 1e-15);
        let one = QuasiPeriodicMedium::new(1.5, vec![Mode::new(0.3, 1.0, 0.0)]).unwrap();
        assert!((one.eval(PI) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn bounds_examples() {
        let (lo, hi) = two_mode().bounds();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
        assert_eq!(
            QuasiPeriodicMedium::constant(2.0).unwrap().bounds(),
            (2.0, 2.0)
        );
        let bad = QuasiPeriodicMedium::new(
            1.0,
            vec![Mode::new(0.6, 1.0, 0.0), Mode::new(0.5, 2.0, 0.0)],
        );
        assert!(matches!(bad, Err(Error::InvalidMedium(_))));
    }

    #[test]
    fn shift_identity_and_period() {
        let m = two_mode();
        assert_eq!(m.shifted(0.0), m);
        let p = QuasiPeriodicMedium::new(1.0, vec![Mode::new(0.5, 1.0, 0.3)]).unwrap();
        let q = p.shifted(2.0 * PI);
        for i in 0..100 {
            let x = -20.0 + 0.4 * i as f64;
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_modes() {
        assert!(QuasiPeriodicMedium::new(2.0, vec![Mode::new(-0.1, 1.0, 0.0)]).is_err());
        assert!(QuasiPeriodicMedium::new(2.0, vec![Mode::new(0.1, 0.0, 0.0)]).is_err());
        assert!(
            QuasiPeriodicMedium::new(2.0, vec![Mode::new(0.1, 1.0, 0.0)])
                .unwrap()
                .with_phases(&[])
                .is_err()
        );
    }

    #[test]
    fn text_spec_round_trip() {
        let m = two_mode().shifted(0.125);
        let text = m.to_string();
        let back: QuasiPeriodicMedium = text.parse().unwrap();
        assert_eq!(back, m);
        let parsed: QuasiPeriodicMedium = "base=2; mode=0.5,1,0; shift=1".parse().unwrap();
        assert_eq!(parsed.modes().len(), 1);
        assert_eq!(parsed.shift(), 1.0);
        assert!("mode=0.5,1,0".parse::<QuasiPeriodicMedium>().is_err());
        assert!("base=2; mode=0.5,1".parse::<QuasiPeriodicMedium>().is_err());
        assert!("base=2; wobble=1".parse::<QuasiPeriodicMedium>().is_err());
    }

    #[test]
    fn grid_medium_matches_eval() {
        let m = two_mode().shifted(-3.7);
        let xs: Vec<f64> = (0..=400).map(|i| -20.0 + 0.05 * i as f64).collect();
        let gm = GridMedium::new(&m, &xs);
        let mut out = vec![0.0; xs.len()];
        for &off in &[0.0, 13.25, -150.5, 1234.0] {
            gm.fill(off, &mut out);
            for (x, g) in xs.iter().zip(&out) {
                assert!((m.eval(x + off) - g).abs() < 1e-11);
            }
        }
    }

    proptest! {
        #[test]
        fn shift_equivariance(s in -1e3f64..1e3, x in -1e3f64..1e3) {
            let m = two_mode();
            let lhs = m.shifted(s).eval(x);
            let rhs = m.eval(x + s);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn group_action(s1 in -100f64..100.0, s2 in -100f64..100.0, x in -100f64..100.0) {
            let m = two_mode();
            prop_assert!((m.shifted(s1).shifted(s2).eval(x) - m.shifted(s1 + s2).eval(x)).abs() < 1e-12);
        }

        #[test]
        fn eval_within_bounds(x in -1e4f64..1e4, p1 in -PI..PI, p2 in -PI..PI) {
            let m = two_mode().with_phases(&[p1, p2]).unwrap();
            let (lo, hi) = m.bounds();
            let v = m.eval(x);
            prop_assert!(v >= lo - 1e-14 && v <= hi + 1e-14);
            prop_assert_eq!(v, m.eval(x));
        }
    }
}
