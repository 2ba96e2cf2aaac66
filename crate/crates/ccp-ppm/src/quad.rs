//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! A 15-point Kronrod rule with embedded 7-point Gauss rule supplies the
//! per-segment error estimate; the segment with the largest estimate is
//! bisected until the summed estimates meet the requested absolute
//! tolerance. Reported error bounds are the sum of the per-segment
//! estimates, so they are conservative.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{CcpError, Result};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule (odd Kronrod abscissae).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// An integral value with a conservative absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment {
        a,
        b,
        value,
        error,
    }
}

fn run_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> QuadEstimate {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 15;
    heap.push(gk15(f, a, b));
    let mut total_error: f64 = heap.peek().map(|s| s.error).unwrap_or(0.0);

    while total_error > abs_tol && heap.len() < max_segments {
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating point resolution; keep its estimate.
            heap.push(worst);
            break;
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        evaluations += 30;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let mut value = 0.0;
    let mut abs_error = 0.0;
    for seg in heap {
        value += seg.value;
        abs_error += seg.error;
    }
    QuadEstimate {
        value,
        abs_error,
        evaluations,
    }
}

fn check_interval(a: f64, b: f64, abs_tol: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(CcpError::InvalidInput(format!(
            "invalid integration interval [{a}, {b}]"
        )));
    }
    if abs_tol <= 0.0 {
        return Err(CcpError::InvalidInput(format!(
            "tolerance must be positive, got {abs_tol}"
        )));
    }
    Ok(())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Fails with [`CcpError::QuadratureNonConvergence`] if the tolerance is
/// not met within `max_segments` bisections.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadEstimate> {
    check_interval(a, b, abs_tol)?;
    let est = run_adaptive(&f, a, b, abs_tol, max_segments);
    if est.abs_error > abs_tol {
        return Err(CcpError::QuadratureNonConvergence {
            achieved: est.abs_error,
            requested: abs_tol,
            evaluations: est.evaluations,
        });
    }
    Ok(est)
}

/// Like [`adaptive_gk15`] but returns whatever accuracy was achieved
/// instead of failing. Used when composing nested integrals whose total
/// error budget is checked by the caller.
pub fn adaptive_gk15_best_effort<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadEstimate> {
    check_interval(a, b, abs_tol)?;
    Ok(run_adaptive(&f, a, b, abs_tol, max_segments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let q = adaptive_gk15(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert_abs_diff_eq!(q.value, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        let q = adaptive_gk15(|x| (10.0 * x).sin(), 0.0, PI, 1e-12, 500).unwrap();
        let exact = (1.0 - (10.0 * PI).cos()) / 10.0;
        assert_abs_diff_eq!(q.value, exact, epsilon = 1e-10);
    }

    #[test]
    fn peaked_integrand_needs_subdivision() {
        // Narrow Gaussian bump: sigma = 1e-3 around 0.3.
        let s = 1e-3;
        let q = adaptive_gk15(
            |x: f64| (-0.5 * ((x - 0.3) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt()),
            0.0,
            1.0,
            1e-9,
            4000,
        )
        .unwrap();
        assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-8);
        assert!(q.abs_error <= 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let err = adaptive_gk15(|x: f64| (1e6 * x).sin().abs(), 0.0, 1.0, 1e-14, 8);
        match err {
            Err(CcpError::QuadratureNonConvergence {
                achieved,
                requested,
                ..
            }) => {
                assert!(achieved > requested);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_intervals() {
        assert!(adaptive_gk15(|x| x, 1.0, 0.0, 1e-8, 10).is_err());
        assert!(adaptive_gk15(|x| x, 0.0, f64::INFINITY, 1e-8, 10).is_err());
        assert!(adaptive_gk15(|x| x, 0.0, 1.0, 0.0, 10).is_err());
    }
}
