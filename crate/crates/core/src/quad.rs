//! Adaptive Gauss-Kronrod quadrature.
//!
//! One-dimensional integration uses the embedded 7-point Gauss / 15-point
//! Kronrod pair. The panel with the largest error estimate is bisected until
//! the summed error falls below `max(abs_tol, rel_tol * |I|)`. A panel that
//! would have to be split beyond `max_depth` bisections aborts the
//! integration with [`QuadError::NotConverged`], carrying the best estimate.
//!
//! Two-dimensional integrals over regions of the form
//! `{ a <= u <= b, lo(u) <= v <= hi(u) }` are computed by nesting the 1-D
//! integrator; see [`integrate_2d`].

use std::fmt;

use crate::num::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

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

// Gauss weights for XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq)]
pub enum QuadError {
    /// The error target could not be met within the depth limit.
    NotConverged {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },
    /// The integrand returned a non-finite value.
    NonFinite { at: f64 },
    InvalidInterval { a: f64, b: f64 },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::NotConverged {
                estimate,
                error,
                tolerance,
            } => write!(
                f,
                "quadrature did not converge: estimate {estimate:e}, error {error:e}, tolerance {tolerance:e}"
            ),
            QuadError::NonFinite { at } => write!(f, "integrand not finite at {at:e}"),
            QuadError::InvalidInterval { a, b } => write!(f, "invalid interval [{a:e}, {b:e}]"),
        }
    }
}

impl std::error::Error for QuadError {}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_depth: u32,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-4),
            abs_tol: T::zero(),
            max_depth: 14,
        }
    }
}

impl<T: Real> QuadConfig<T> {
    pub fn with_rel_tol(mut self, rel_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: T) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    depth: u32,
}

/// Applies the 15-point Kronrod rule on `[a, b]` and returns `(value, error)`.
///
/// The error uses the QUADPACK scaling of `|K15 - G7|`.
fn gk15<T, F>(f: &mut F, a: T, b: T) -> Result<(T, T), QuadError>
where
    T: Real,
    F: FnMut(T) -> Result<T, QuadError>,
{
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let abs_half = half_len.abs();

    let fc = f(center)?;
    check_finite(fc, center)?;
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    let mut res_abs = fc.abs() * T::lit(WGK[7]);
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];

    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let x1 = center - dx;
        let x2 = center + dx;
        let f1 = f(x1)?;
        check_finite(f1, x1)?;
        let f2 = f(x2)?;
        check_finite(f2, x2)?;
        fv1[j] = f1;
        fv2[j] = f2;
        let wk = T::lit(WGK[j]);
        res_k = res_k + wk * (f1 + f2);
        res_abs = res_abs + wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }

    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half_len;
    res_abs = res_abs * abs_half;
    res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * scale.min(T::one());
    }
    let eps = T::epsilon();
    if res_abs > T::min_positive_value() / (T::lit(50.0) * eps) {
        err = err.max(T::lit(50.0) * eps * res_abs);
    }
    Ok((value, err))
}

#[inline]
fn check_finite<T: Real>(v: T, at: T) -> Result<(), QuadError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(QuadError::NonFinite { at: at.as_f64() })
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>, QuadError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    try_integrate_breaks(|x| Ok(f(x)), &[a, b], cfg)
}

/// Integrates `f` over consecutive intervals delimited by `points`.
///
/// Interior points should sit on kinks or discontinuities of the integrand.
pub fn integrate_breaks<T, F>(mut f: F, points: &[T], cfg: &QuadConfig<T>) -> Result<QuadResult<T>, QuadError>
where
    T: Real,
    F: FnMut(T) -> T,
{
    try_integrate_breaks(|x| Ok(f(x)), points, cfg)
}

/// Fallible-integrand variant of [`integrate_breaks`]; the first integrand
/// error aborts the integration.
pub fn try_integrate_breaks<T, F>(
    mut f: F,
    points: &[T],
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError>
where
    T: Real,
    F: FnMut(T) -> Result<T, QuadError>,
{
    if points.len() < 2 {
        return Ok(QuadResult {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
        });
    }
    for w in points.windows(2) {
        if !(w[0] <= w[1]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(QuadError::InvalidInterval {
                a: w[0].as_f64(),
                b: w[1].as_f64(),
            });
        }
    }

    let mut panels: Vec<Panel<T>> = Vec::with_capacity(64);
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1])?;
        evaluations += 15;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
            depth: 0,
        });
    }

    loop {
        let (value, error) = panels
            .iter()
            .fold((T::zero(), T::zero()), |(v, e), p| (v + p.value, e + p.error));
        let tolerance = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tolerance || panels.is_empty() {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }

        let worst = panels
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if p.error > panels[best].error { i } else { best });
        let panel = panels[worst];
        if panel.depth >= cfg.max_depth {
            return Err(QuadError::NotConverged {
                estimate: value.as_f64(),
                error: error.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        let mid = T::lit(0.5) * (panel.a + panel.b);
        let (lv, le) = gk15(&mut f, panel.a, mid)?;
        let (rv, re) = gk15(&mut f, mid, panel.b)?;
        evaluations += 30;
        panels[worst] = Panel {
            a: panel.a,
            b: mid,
            value: lv,
            error: le,
            depth: panel.depth + 1,
        };
        panels.push(Panel {
            a: mid,
            b: panel.b,
            value: rv,
            error: re,
            depth: panel.depth + 1,
        });
    }
}

/// Integrates `f(u, v)` over `{ u in [points[0], points[n-1]], lo(u) <= v <= hi(u) }`.
///
/// `limits(u)` returns `(lo, hi)`; empty slices (`hi <= lo`) contribute zero.
/// The inner integral inherits the relative tolerance; its absolute floor is
/// the outer floor divided by the outer span.
pub fn integrate_2d<T, F, L>(
    f: F,
    points: &[T],
    limits: L,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError>
where
    T: Real,
    F: Fn(T, T) -> T,
    L: Fn(T) -> (T, T),
{
    let span = match (points.first(), points.last()) {
        (Some(&a), Some(&b)) if b > a => b - a,
        _ => T::one(),
    };
    let inner_cfg = QuadConfig {
        abs_tol: cfg.abs_tol / span,
        ..*cfg
    };
    let mut inner_evals = 0usize;
    let outer = try_integrate_breaks(
        |u| {
            let (lo, hi) = limits(u);
            if !(hi > lo) {
                return Ok(T::zero());
            }
            let r = try_integrate_breaks(|v| Ok(f(u, v)), &[lo, hi], &inner_cfg)?;
            inner_evals += r.evaluations;
            Ok(r.value)
        },
        points,
        cfg,
    )?;
    Ok(QuadResult {
        evaluations: outer.evaluations + inner_evals,
        ..outer
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let cfg = QuadConfig::<f64>::default();
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, &cfg).unwrap();
        assert!((r.value - 3.75).abs() < 1e-13);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn peaked_integrand_refines() {
        // Lorentzian with width 1e-3: integral over [-1, 1] is 2 atan(1000).
        let w = 1e-3_f64;
        let cfg = QuadConfig::default().with_rel_tol(1e-10);
        let r = integrate(|x| w / (w * w + x * x), -1.0, 1.0, &cfg).unwrap();
        let exact = 2.0 * (1.0 / w).atan();
        assert!((r.value - exact).abs() / exact < 1e-9);
        assert!(r.evaluations > 15);
    }

    #[test]
    fn single_precision_works() {
        let cfg = QuadConfig::<f32>::default();
        let r = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-5);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let cfg = QuadConfig::default().with_rel_tol(1e-12);
        let r = integrate_breaks(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0], &cfg).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let cfg = QuadConfig {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_depth: 2,
        };
        let err = integrate(|x: f64| (200.0 * x).sin().abs(), 0.0, 10.0, &cfg).unwrap_err();
        match err {
            QuadError::NotConverged {
                estimate, tolerance, ..
            } => {
                assert!(estimate.is_finite());
                assert!(tolerance > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let cfg = QuadConfig::<f64>::default();
        let err = integrate(|x: f64| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { .. }));
    }

    #[test]
    fn triangle_area_2d() {
        // Integral of 1 over the triangle u in [0,1], v in [0, u] is 1/2.
        let cfg = QuadConfig::default().with_rel_tol(1e-12);
        let r = integrate_2d(|_, _| 1.0_f64, &[0.0, 1.0], |u| (0.0, u), &cfg).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        let r = integrate_2d(|u, v| u * v, &[0.0, 1.0], |u| (0.0, u), &cfg).unwrap();
        assert!((r.value - 0.125).abs() < 1e-14);
    }
}
