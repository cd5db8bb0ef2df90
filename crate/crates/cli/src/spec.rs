//! Parsing of `--density`, `--phantom`, and list-valued flags.

use std::fmt;
use std::str::FromStr;

use localcoh::phantom::{random_compressible, shepp_logan, two_rectangles_32};
use localcoh::sampling::{
    density_inverse_max, density_inverse_square, density_power_law, density_uniform, deterministic_mask, draw_plan,
    Alpha, MaskSpec,
};
use localcoh::{Image, SamplingPlan};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A stochastic density or a deterministic mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensitySpec {
    Uniform,
    InverseSquare,
    InverseMax,
    Power(f64),
    /// Limit of the power law: the `m` lowest frequencies.
    PowerInfinite,
    Lowpass,
    Radial(usize),
}

impl FromStr for DensitySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Invalid(format!("unknown density '{s}'"));
        Ok(match s {
            "uniform" => DensitySpec::Uniform,
            "inv-square" => DensitySpec::InverseSquare,
            "inv-max" => DensitySpec::InverseMax,
            "lowpass" => DensitySpec::Lowpass,
            _ => {
                if let Some(a) = s.strip_prefix("power:") {
                    match parse_alpha(a)? {
                        Alpha::Infinite => DensitySpec::PowerInfinite,
                        Alpha::Finite(a) => DensitySpec::Power(a),
                    }
                } else if let Some(l) = s.strip_prefix("radial:") {
                    DensitySpec::Radial(l.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Uniform => f.write_str("uniform"),
            DensitySpec::InverseSquare => f.write_str("inv-square"),
            DensitySpec::InverseMax => f.write_str("inv-max"),
            DensitySpec::Power(a) => write!(f, "power:{a}"),
            DensitySpec::PowerInfinite => f.write_str("power:inf"),
            DensitySpec::Lowpass => f.write_str("lowpass"),
            DensitySpec::Radial(l) => write!(f, "radial:{l}"),
        }
    }
}

/// Nonnegative exponent or `inf`.
pub fn parse_alpha(s: &str) -> Result<Alpha, CliError> {
    match s {
        "inf" | "infinity" | "∞" => Ok(Alpha::Infinite),
        _ => {
            let a: f64 = s
                .parse()
                .map_err(|_| CliError::Invalid(format!("invalid exponent '{s}'")))?;
            if a.is_nan() || a < 0.0 {
                return Err(CliError::Invalid(format!("exponent must be >= 0, got {s}")));
            }
            Ok(if a.is_infinite() {
                Alpha::Infinite
            } else {
                Alpha::Finite(a)
            })
        }
    }
}

pub fn alpha_label(alpha: Alpha) -> String {
    match alpha {
        Alpha::Infinite => "inf".into(),
        Alpha::Finite(a) => a.to_string(),
    }
}

impl DensitySpec {
    pub fn from_alpha(alpha: Alpha) -> Self {
        match alpha {
            Alpha::Infinite => DensitySpec::PowerInfinite,
            Alpha::Finite(a) => DensitySpec::Power(a),
        }
    }

    /// Builds the plan; `m` is required except for radial lines.
    pub fn plan(&self, n: usize, m: Option<usize>, seed: u64) -> Result<SamplingPlan, CliError> {
        let need_m = || m.ok_or_else(|| CliError::Invalid(format!("--m is required for density {self}")));
        let plan = match *self {
            DensitySpec::Uniform => draw_plan(&density_uniform(n)?, need_m()?, seed)?,
            DensitySpec::InverseSquare => draw_plan(&density_inverse_square(n)?, need_m()?, seed)?,
            DensitySpec::InverseMax => draw_plan(&density_inverse_max(n)?, need_m()?, seed)?,
            DensitySpec::Power(a) => draw_plan(&density_power_law(n, Alpha::Finite(a))?, need_m()?, seed)?,
            DensitySpec::PowerInfinite | DensitySpec::Lowpass => {
                deterministic_mask(n, MaskSpec::LowestFrequencies(need_m()?))?
            }
            DensitySpec::Radial(lines) => deterministic_mask(n, MaskSpec::RadialLines(lines))?,
        };
        Ok(plan)
    }
}

/// Built-in synthetic test images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhantomSpec {
    /// Two rectangles on 32 x 32.
    Rectangles,
    SheppLogan,
    /// Random rectangles plus a gentle ramp (seed 0).
    Compressible,
}

impl FromStr for PhantomSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "rectangles" => Ok(PhantomSpec::Rectangles),
            "shepp-logan" => Ok(PhantomSpec::SheppLogan),
            "compressible" => Ok(PhantomSpec::Compressible),
            _ => Err(CliError::Invalid(format!(
                "unknown phantom '{s}' (rectangles | shepp-logan | compressible)"
            ))),
        }
    }
}

impl PhantomSpec {
    pub fn render(&self, n: usize) -> Result<Image, CliError> {
        match self {
            PhantomSpec::Rectangles if n != 32 => Err(CliError::Invalid(format!(
                "the rectangles phantom is 32x32, got --n {n}"
            ))),
            PhantomSpec::Rectangles => Ok(two_rectangles_32()),
            PhantomSpec::SheppLogan => Ok(shepp_logan(n)?),
            PhantomSpec::Compressible => {
                localcoh::image::side_exponent(n)?;
                if n < 8 {
                    return Err(CliError::Invalid("compressible phantom needs --n >= 8".into()));
                }
                Ok(random_compressible(n, 6, 0.3, 0)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_specs_round_trip() {
        for s in [
            "uniform",
            "inv-square",
            "inv-max",
            "power:2",
            "power:0.5",
            "power:inf",
            "lowpass",
            "radial:8",
        ] {
            let d: DensitySpec = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        for s in ["power:-1", "power:x", "radial:", "gauss"] {
            assert!(s.parse::<DensitySpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn infinite_power_is_the_lowpass_mask() {
        let a = DensitySpec::PowerInfinite.plan(16, Some(9), 0).unwrap();
        let b = DensitySpec::Lowpass.plan(16, Some(9), 5).unwrap();
        assert_eq!(a.freqs, b.freqs);
        assert!(DensitySpec::InverseSquare.plan(16, None, 0).is_err());
        assert!(DensitySpec::Radial(3).plan(16, None, 0).is_ok());
    }
}
