//! Test functions applied to eigenvalues.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64 as C64;
use std::fmt;
use std::sync::Arc;

type ComplexFn = dyn Fn(C64) -> C64 + Send + Sync;

/// The function `f` in the partial linear spectral statistic.
///
/// Every variant is evaluated both on the real line and at complex contour
/// nodes; `Custom` closures must therefore accept complex arguments.
#[derive(Clone)]
pub enum SpectralFn {
    X,
    Log,
    /// `log(1 + kappa x)`
    Log1pScaled(f64),
    Custom { name: String, f: Arc<ComplexFn> },
}

impl SpectralFn {
    pub fn custom(name: impl Into<String>, f: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        SpectralFn::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpectralFn::X => x,
            SpectralFn::Log => x.ln(),
            SpectralFn::Log1pScaled(k) => (k * x).ln_1p(),
            SpectralFn::Custom { f, .. } => f(C64::new(x, 0.0)).re,
        }
    }

    pub fn eval_c(&self, z: C64) -> C64 {
        match self {
            SpectralFn::X => z,
            SpectralFn::Log => z.ln(),
            SpectralFn::Log1pScaled(k) => (z * *k + 1.0).ln(),
            SpectralFn::Custom { f, .. } => f(z),
        }
    }

    /// Checked evaluation at an eigenvalue.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        match self {
            SpectralFn::Log if x <= 0.0 => Err(Error::Domain(format!("log of eigenvalue {x}"))),
            SpectralFn::Log1pScaled(k) if 1.0 + k * x <= 0.0 => {
                Err(Error::Domain(format!("log(1 + {k} x) at eigenvalue {x}")))
            }
            _ => {
                let v = self.eval(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!("{self} is not finite at {x}")))
                }
            }
        }
    }

    /// Leftmost real point where the function stops being analytic, if any.
    pub fn singular_point(&self) -> Option<f64> {
        match self {
            SpectralFn::X | SpectralFn::Custom { .. } => None,
            SpectralFn::Log => Some(0.0),
            SpectralFn::Log1pScaled(k) if *k > 0.0 => Some(-1.0 / k),
            SpectralFn::Log1pScaled(_) => None,
        }
    }
}

impl fmt::Display for SpectralFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralFn::X => write!(f, "x"),
            SpectralFn::Log => write!(f, "log"),
            SpectralFn::Log1pScaled(k) => write!(f, "log1p({k}x)"),
            SpectralFn::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

impl fmt::Debug for SpectralFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpectralFn({self})")
    }
}

impl std::str::FromStr for SpectralFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(SpectralFn::X),
            "log" => Ok(SpectralFn::Log),
            other => invalid(format!("unknown spectral function '{other}' (expected x or log)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_complex_agree_on_real_axis() {
        let fs = [
            SpectralFn::X,
            SpectralFn::Log,
            SpectralFn::Log1pScaled(0.4),
            SpectralFn::custom("sq", |z| z * z),
        ];
        for f in &fs {
            for x in [0.3, 1.0, 4.5] {
                assert!((f.eval(x) - f.eval_c(C64::new(x, 0.0)).re).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn log_rejects_zero() {
        assert!(SpectralFn::Log.eval_checked(0.0).is_err());
        assert!(SpectralFn::X.eval_checked(0.0).is_ok());
    }
}
