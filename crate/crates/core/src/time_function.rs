use std::f64::consts::PI;
use std::fmt;

use crate::error::{FbiError, Result};

/// Scalar time profile used for inflow velocities and prescribed motions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFunction {
    Constant(f64),
    /// `0.5 (1 - cos(pi t / t_ramp))` up to `t_ramp`, then 1.
    CosineRamp {
        t_ramp: f64,
    },
    /// `0.5 (1 - cos(2 pi t / period))` for all t.
    CosineWave {
        period: f64,
    },
}

impl TimeFunction {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant(c) => c,
            TimeFunction::CosineRamp { t_ramp } => {
                if t < t_ramp {
                    0.5 * (1.0 - (PI * t / t_ramp).cos())
                } else {
                    1.0
                }
            }
            TimeFunction::CosineWave { period } => 0.5 * (1.0 - (2.0 * PI * t / period).cos()),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant(_) => 0.0,
            TimeFunction::CosineRamp { t_ramp } => {
                if t < t_ramp {
                    0.5 * PI / t_ramp * (PI * t / t_ramp).sin()
                } else {
                    0.0
                }
            }
            TimeFunction::CosineWave { period } => {
                let w = 2.0 * PI / period;
                0.5 * w * (w * t).sin()
            }
        }
    }

    /// Integral of the profile from 0 to `t`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant(c) => c * t,
            TimeFunction::CosineRamp { t_ramp } => {
                if t < t_ramp {
                    0.5 * (t - t_ramp / PI * (PI * t / t_ramp).sin())
                } else {
                    0.5 * t_ramp + (t - t_ramp)
                }
            }
            TimeFunction::CosineWave { period } => {
                let w = 2.0 * PI / period;
                0.5 * (t - (w * t).sin() / w)
            }
        }
    }

    /// Parses `constant`, `constant 2.0`, `cosine_ramp 0.1`, `cosine_wave 0.2`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split_whitespace();
        let name = parts.next().unwrap_or("");
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(FbiError::Config(format!("time function '{text}': too many arguments")));
        }
        let num = |a: Option<&str>| -> Result<Option<f64>> {
            a.map(|s| {
                s.parse::<f64>()
                    .map_err(|_| FbiError::Config(format!("time function '{text}': bad number '{s}'")))
            })
            .transpose()
        };
        let f = match name {
            "constant" => TimeFunction::Constant(num(arg)?.unwrap_or(1.0)),
            "cosine_ramp" => TimeFunction::CosineRamp {
                t_ramp: num(arg)?.ok_or_else(|| FbiError::Config("cosine_ramp needs a ramp time".into()))?,
            },
            "cosine_wave" => TimeFunction::CosineWave {
                period: num(arg)?.ok_or_else(|| FbiError::Config("cosine_wave needs a period".into()))?,
            },
            _ => return Err(FbiError::Config(format!("unknown time function '{text}'"))),
        };
        match f {
            TimeFunction::CosineRamp { t_ramp: p } | TimeFunction::CosineWave { period: p } if p <= 0.0 => Err(
                FbiError::Config(format!("time function '{text}': duration must be positive")),
            ),
            _ => Ok(f),
        }
    }
}

impl fmt::Display for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFunction::Constant(c) => write!(f, "constant {c}"),
            TimeFunction::CosineRamp { t_ramp } => write!(f, "cosine_ramp {t_ramp}"),
            TimeFunction::CosineWave { period } => write!(f, "cosine_wave {period}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inflow_ramp_matches_channel_profile() {
        let f = TimeFunction::CosineRamp { t_ramp: 0.1 };
        for &t in &[0.0, 0.013, 0.05, 0.0999] {
            let expected = 0.5 * (1.0 - (10.0 * PI * t).cos());
            assert!((f.value(t) - expected).abs() < 1e-14);
        }
        assert_eq!(f.value(0.1), 1.0);
        assert_eq!(f.value(0.7), 1.0);
    }

    #[test]
    fn wave_matches_oscillatory_inflow() {
        let f = TimeFunction::CosineWave { period: 0.2 };
        for &t in &[0.0, 0.03, 0.11, 0.57] {
            let expected = 0.5 * (1.0 - (PI * 10.0 * t).cos());
            assert!((f.value(t) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_and_derivative_are_consistent() {
        let fs = [
            TimeFunction::Constant(2.5),
            TimeFunction::CosineRamp { t_ramp: 0.1 },
            TimeFunction::CosineWave { period: 0.2 },
        ];
        let h = 1e-6;
        for f in fs {
            for &t in &[0.02, 0.07, 0.13, 0.4] {
                let d_fd = (f.integral(t + h) - f.integral(t - h)) / (2.0 * h);
                assert!((d_fd - f.value(t)).abs() < 1e-7, "{f}");
                let v_fd = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
                assert!((v_fd - f.derivative(t)).abs() < 1e-5, "{f}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["constant 2", "cosine_ramp 0.1", "cosine_wave 0.2"] {
            let f = TimeFunction::parse(s).unwrap();
            assert_eq!(TimeFunction::parse(&f.to_string()).unwrap(), f);
        }
        assert!(TimeFunction::parse("cosine_ramp").is_err());
        assert!(TimeFunction::parse("cosine_ramp -1").is_err());
        assert!(TimeFunction::parse("sawtooth 1").is_err());
    }
}
