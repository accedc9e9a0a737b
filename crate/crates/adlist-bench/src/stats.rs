//! Repeat statistics: mean and Student-t 99% confidence half-width.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub ci99_halfwidth: f64,
}

/// Arithmetic mean and the half-width of the 99% confidence interval using
/// Student's t with n-1 degrees of freedom. A single repeat has no spread
/// estimate; its half-width is reported as 0.
pub fn summarize(xs: &[f64]) -> Summary {
    assert!(!xs.is_empty(), "summarize on empty sample");
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Summary {
            mean,
            ci99_halfwidth: 0.0,
        };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("valid t distribution")
        .inverse_cdf(0.995);
    Summary {
        mean,
        ci99_halfwidth: t * (var / n).sqrt(),
    }
}
