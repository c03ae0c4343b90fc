/// Mean and standard error from equal-length batch means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_batches(values: &[f64]) -> Estimate {
        let b = values.len();
        if b == 0 {
            return Estimate {
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / b as f64;
        if b == 1 {
            return Estimate {
                mean,
                std_err: f64::NAN,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        Estimate {
            mean,
            std_err: (var / b as f64).sqrt(),
        }
    }

    pub fn unbounded() -> Estimate {
        Estimate {
            mean: f64::INFINITY,
            std_err: f64::NAN,
        }
    }

    /// `|mean − target| ≤ k · std_err + slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err + slack
    }
}
