use crate::error::{Error, Result};

/// Peak of |d/dr (1+r²)^{-1/2}|, attained at r = 1/√2.
pub const SMOOTH_KERNEL_SLOPE_MAX: f64 = 0.384_900_179_459_750_5;

/// The communication weight φ(r).
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// φ(r) = (1 + (r/ℓ)²)^{-1/2}; the default has ℓ = 1.
    Smooth { length: f64 },
    /// φ ≡ 1.
    ConstantOne,
    /// Linear interpolation of `values` on nodes r = i·dr, constant past the last node.
    Table { dr: f64, values: Vec<f64> },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Smooth { length: 1.0 }
    }
}

/// Reasons a kernel fails the normalisation or monotonicity contract.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelViolation {
    NonPositive { r: f64, value: f64 },
    Increasing { r: f64 },
    ValueAboveOne { r: f64, value: f64 },
    SlopeAboveOne { r: f64, slope: f64 },
    Malformed(String),
}

impl std::fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelViolation::NonPositive { r, value } => write!(f, "phi({r}) = {value} is not positive"),
            KernelViolation::Increasing { r } => write!(f, "phi increases at r = {r}"),
            KernelViolation::ValueAboveOne { r, value } => {
                write!(f, "|phi({r})| = {value} exceeds 1 (need max(|phi|,|phi'|) <= 1)")
            }
            KernelViolation::SlopeAboveOne { r, slope } => {
                write!(f, "|phi'({r})| = {slope} exceeds 1 (need max(|phi|,|phi'|) <= 1)")
            }
            KernelViolation::Malformed(m) => f.write_str(m),
        }
    }
}

impl Kernel {
    /// φ(r) for r ≥ 0.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Argument(format!("kernel radius must be >= 0, got {r}")));
        }
        Ok(self.value(r))
    }

    #[inline]
    pub(crate) fn value(&self, r: f64) -> f64 {
        match self {
            Kernel::Smooth { length } => {
                let s = r / length;
                1.0 / (1.0 + s * s).sqrt()
            }
            Kernel::ConstantOne => 1.0,
            Kernel::Table { dr, values } => {
                let s = r / dr;
                let i = s.floor() as usize;
                if i + 1 >= values.len() {
                    *values.last().expect("validated non-empty")
                } else {
                    let w = s - i as f64;
                    values[i] * (1.0 - w) + values[i + 1] * w
                }
            }
        }
    }

    /// φ'(r); one-sided (right) slope for tables.
    pub fn derivative(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Argument(format!("kernel radius must be >= 0, got {r}")));
        }
        Ok(match self {
            Kernel::Smooth { length } => {
                let s = r / length;
                -s / (length * (1.0 + s * s).powf(1.5))
            }
            Kernel::ConstantOne => 0.0,
            Kernel::Table { dr, values } => {
                let i = (r / dr).floor() as usize;
                if i + 1 >= values.len() {
                    0.0
                } else {
                    (values[i + 1] - values[i]) / dr
                }
            }
        })
    }

    /// Checks positivity, monotonicity and max(|φ|, |φ'|) ≤ 1.
    ///
    /// Smooth kernels are checked analytically; tables node by node, which is
    /// exact for a piecewise-linear kernel.
    pub fn validate(&self) -> std::result::Result<(), KernelViolation> {
        match self {
            Kernel::ConstantOne => Ok(()),
            Kernel::Smooth { length } => {
                if !(length.is_finite() && *length > 0.0) {
                    return Err(KernelViolation::Malformed(format!(
                        "kernel length must be positive, got {length}"
                    )));
                }
                let slope = SMOOTH_KERNEL_SLOPE_MAX / length;
                if slope > 1.0 {
                    return Err(KernelViolation::SlopeAboveOne {
                        r: length / std::f64::consts::SQRT_2,
                        slope,
                    });
                }
                Ok(())
            }
            Kernel::Table { dr, values } => {
                if !(dr.is_finite() && *dr > 0.0) || values.is_empty() {
                    return Err(KernelViolation::Malformed(
                        "kernel table needs dr > 0 and at least one value".into(),
                    ));
                }
                for (i, &v) in values.iter().enumerate() {
                    let r = i as f64 * dr;
                    if !(v > 0.0) {
                        return Err(KernelViolation::NonPositive { r, value: v });
                    }
                    if v > 1.0 {
                        return Err(KernelViolation::ValueAboveOne { r, value: v });
                    }
                }
                for (i, w) in values.windows(2).enumerate() {
                    let r = i as f64 * dr;
                    if w[1] > w[0] {
                        return Err(KernelViolation::Increasing { r });
                    }
                    let slope = (w[1] - w[0]).abs() / dr;
                    if slope > 1.0 {
                        return Err(KernelViolation::SlopeAboveOne { r, slope });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Smooth { .. } => "smooth",
            Kernel::ConstantOne => "constant_one",
            Kernel::Table { .. } => "table",
        }
    }
}

/// Free-function form of [`Kernel::eval`].
pub fn eval_kernel(kernel: &Kernel, r: f64) -> Result<f64> {
    kernel.eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_kernel_at_origin_is_one() {
        assert_eq!(eval_kernel(&Kernel::default(), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn constant_kernel_is_one_everywhere() {
        for r in [0.0, 0.5, 10.0, 1e9] {
            assert_eq!(Kernel::ConstantOne.eval(r).unwrap(), 1.0);
        }
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(Kernel::default().eval(-1e-9).is_err());
        assert!(Kernel::default().eval(f64::NAN).is_err());
    }

    #[test]
    fn default_kernel_slope_scan() {
        // 1e6-point scan of |φ'| on [0, 20].
        let k = Kernel::default();
        let mut peak = 0.0f64;
        for i in 0..1_000_000 {
            let r = 20.0 * i as f64 / 1e6;
            peak = peak.max(k.derivative(r).unwrap().abs());
        }
        assert!(peak <= 1.0);
        assert!((peak - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-9, "{peak}");
        assert!((SMOOTH_KERNEL_SLOPE_MAX - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn default_kernel_is_positive_nonincreasing() {
        let k = Kernel::default();
        let mut prev = k.value(0.0);
        for e in -60..=60 {
            let r = 10f64.powf(e as f64 / 10.0);
            let v = k.value(r);
            assert!(v > 0.0 && v <= prev);
            prev = v;
        }
        assert!(k.validate().is_ok());
    }

    #[test]
    fn table_validation() {
        let ok = Kernel::Table {
            dr: 0.5,
            values: vec![1.0, 0.8, 0.5, 0.4],
        };
        assert!(ok.validate().is_ok());
        assert!((ok.value(0.75) - 0.65).abs() < 1e-15);
        assert_eq!(ok.value(100.0), 0.4);
        let steep = Kernel::Table {
            dr: 0.1,
            values: vec![1.0, 0.5],
        };
        assert!(matches!(steep.validate(), Err(KernelViolation::SlopeAboveOne { .. })));
        let up = Kernel::Table {
            dr: 1.0,
            values: vec![0.5, 0.6],
        };
        assert!(matches!(up.validate(), Err(KernelViolation::Increasing { .. })));
        let big = Kernel::Table {
            dr: 1.0,
            values: vec![1.5],
        };
        assert!(big.validate().is_err());
        let narrow = Kernel::Smooth { length: 0.2 };
        assert!(narrow.validate().is_err());
    }
}
