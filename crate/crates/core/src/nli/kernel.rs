//! Single-span GN link kernel and its exact integral along one frequency axis.
//!
//! With offsets `u`, `v` from the CUT center, `x = 4 pi^2 beta2 u v` and
//! `a = exp(-alpha L)`, the kernel is
//!
//! ```text
//! rho(u, v) = |1 - a exp(j x L)|^2 / (alpha^2 + x^2)
//!           = ((1 - a)^2 + 4 a sin^2(x L / 2)) / (alpha^2 + x^2)
//! ```
//!
//! so `rho(0, 0) = L_eff^2`. For fixed `u` the kernel depends on `v` only
//! through `x`, hence
//! `int rho dv = (F(c u v2) - F(c u v1)) / (c u)` with `c = 4 pi^2 beta2` and
//! `F(x) = (1 + a^2)/alpha * atan(x/alpha) - 2 a C(x)`,
//! `C(x) = int_0^x cos(L t) / (alpha^2 + t^2) dt`.
//! [`SpanKernel`] tabulates `C` on `[0, T]` (cubic Hermite with the exact
//! derivative) and uses its asymptotic expansion beyond `T`.

use num_complex::Complex;

use crate::num::Real;
use crate::phys::Span;

/// Phase at the end of the tabulated range, `L * T`, in radians.
const TABLE_PHASE_RAD: f64 = 200.0;
const KNOTS_PER_PERIOD: f64 = 200.0;
const MAX_KNOTS: usize = 2_000_000;

#[inline]
fn dispersion_coefficient<T: Real>(span: &Span<T>) -> T {
    T::lit(4.0) * T::PI() * T::PI() * span.fiber.beta2_s2_per_km()
}

/// Link kernel for frequency offsets given in Hz. Returns km^2.
pub fn kernel_rho_hz<T: Real>(u_hz: T, v_hz: T, span: &Span<T>) -> T {
    let alpha = span.fiber.alpha_np_per_km();
    let len = span.length_km;
    let x = dispersion_coefficient(span) * (u_hz * v_hz);
    let a = (-alpha * len).exp();
    let one_minus_a = -(-alpha * len).exp_m1();
    let s = (x * len / T::lit(2.0)).sin();
    (one_minus_a * one_minus_a + T::lit(4.0) * a * s * s) / (alpha * alpha + x * x)
}

/// Link kernel for offsets `f1_offset_ghz`, `f2_offset_ghz` from the CUT
/// center. Symmetric in its two arguments; `kernel_rho(0, 0) = L_eff^2`.
pub fn kernel_rho<T: Real>(f1_offset_ghz: T, f2_offset_ghz: T, span: &Span<T>) -> T {
    let ghz = T::lit(1e9);
    kernel_rho_hz(f1_offset_ghz * ghz, f2_offset_ghz * ghz, span)
}

/// Precomputed primitive of the kernel along one axis for a single span.
#[derive(Debug, Clone)]
pub struct SpanKernel<T> {
    span: Span<T>,
    alpha: T,
    len: T,
    a: T,
    c: T,
    l_eff2: T,
    atan_scale: T,
    step: T,
    table_end: T,
    values: Vec<T>,
    cos_int_inf: T,
}

impl<T: Real> SpanKernel<T> {
    pub fn new(span: &Span<T>) -> Self {
        let alpha = span.fiber.alpha_np_per_km();
        let len = span.length_km;
        let a = (-alpha * len).exp();
        let one_minus_a = -(-alpha * len).exp_m1();
        let l_eff = one_minus_a / alpha;

        let period = T::lit(2.0) * T::PI() / len;
        let table_end = (T::lit(TABLE_PHASE_RAD) / len).max(T::lit(50.0) * alpha);
        let mut step = (period / T::lit(KNOTS_PER_PERIOD)).min(alpha / T::lit(20.0));
        let mut knots = (table_end / step).ceil().to_usize().unwrap_or(MAX_KNOTS);
        if knots > MAX_KNOTS {
            knots = MAX_KNOTS;
        }
        step = table_end / T::lit(knots as f64);

        let integrand = |t: T| (len * t).cos() / (alpha * alpha + t * t);
        let mut values = Vec::with_capacity(knots + 1);
        let mut acc = T::zero();
        values.push(acc);
        for i in 0..knots {
            let lo = step * T::lit(i as f64);
            let hi = step * T::lit((i + 1) as f64);
            acc = acc + fixed_gk15(&integrand, lo, hi);
            values.push(acc);
        }

        Self {
            span: *span,
            alpha,
            len,
            a,
            c: dispersion_coefficient(span),
            l_eff2: l_eff * l_eff,
            atan_scale: (T::one() + a * a) / alpha,
            step,
            table_end,
            values,
            cos_int_inf: T::PI() * a / (T::lit(2.0) * alpha),
        }
    }

    pub fn span(&self) -> &Span<T> {
        &self.span
    }

    pub fn effective_length_sq(&self) -> T {
        self.l_eff2
    }

    #[inline]
    fn cos_integrand(&self, t: T) -> T {
        (self.len * t).cos() / (self.alpha * self.alpha + t * t)
    }

    /// `C(x) = int_0^x cos(L t) / (alpha^2 + t^2) dt`.
    pub fn cos_integral(&self, x: T) -> T {
        let ax = x.abs();
        let v = if ax < self.table_end {
            let pos = ax / self.step;
            let i = pos.floor().to_usize().unwrap_or(0).min(self.values.len() - 2);
            let x0 = self.step * T::lit(i as f64);
            let t = (ax - x0) / self.step;
            let (y0, y1) = (self.values[i], self.values[i + 1]);
            let m0 = self.cos_integrand(x0);
            let m1 = self.cos_integrand(x0 + self.step);
            let t2 = t * t;
            let t3 = t2 * t;
            let two = T::lit(2.0);
            let three = T::lit(3.0);
            let h00 = two * t3 - three * t2 + T::one();
            let h10 = t3 - two * t2 + t;
            let h01 = three * t2 - two * t3;
            let h11 = t3 - t2;
            h00 * y0 + h10 * self.step * m0 + h01 * y1 + h11 * self.step * m1
        } else {
            self.cos_int_inf - self.cos_tail(ax)
        };
        if x < T::zero() {
            -v
        } else {
            v
        }
    }

    /// `int_x^inf cos(L t) g(t) dt` by repeated integration by parts, where
    /// `g(t) = 1/(alpha^2 + t^2)` and `g^(n)(t) = (-1)^n n! Im((t - j alpha)^-(n+1)) / alpha`.
    fn cos_tail(&self, x: T) -> T {
        let z_inv = Complex::new(T::one(), T::zero()) / Complex::new(x, -self.alpha);
        let mut power = z_inv;
        let mut derivs = [T::zero(); 6];
        let mut fact = T::one();
        for (n, d) in derivs.iter_mut().enumerate() {
            if n > 0 {
                fact = fact * T::lit(n as f64);
                power = power * z_inv;
            }
            let sign = if n % 2 == 0 { T::one() } else { -T::one() };
            *d = sign * fact * power.im / self.alpha;
        }
        let (s, c) = (self.len * x).sin_cos();
        let mut tail = T::zero();
        let mut lpow = self.len;
        for k in 0..3 {
            let sign = if k % 2 == 0 { -T::one() } else { T::one() };
            tail = tail + sign * s * derivs[2 * k] / lpow;
            lpow = lpow * self.len;
            tail = tail + sign * c * derivs[2 * k + 1] / lpow;
            lpow = lpow * self.len;
        }
        tail
    }

    /// `F(x) = int_0^x (1 + a^2 - 2 a cos(L t)) / (alpha^2 + t^2) dt`.
    pub fn primitive(&self, x: T) -> T {
        self.atan_scale * (x / self.alpha).atan() - T::lit(2.0) * self.a * self.cos_integral(x)
    }

    /// `int_{v1}^{v2} rho(u, v) dv` with all offsets in Hz. Returns km^2 Hz.
    pub fn inner_integral(&self, u_hz: T, v1_hz: T, v2_hz: T) -> T {
        let cu = self.c * u_hz;
        if cu == T::zero() {
            return self.l_eff2 * (v2_hz - v1_hz);
        }
        (self.primitive(cu * v2_hz) - self.primitive(cu * v1_hz)) / cu
    }
}

fn fixed_gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    const X: [f64; 8] = [
        0.991_455_371_120_812_639_206_854_697_526_329,
        0.949_107_912_342_758_524_526_189_684_047_851,
        0.864_864_423_359_769_072_789_712_788_640_926,
        0.741_531_185_599_394_439_863_864_773_280_788,
        0.586_087_235_467_691_130_294_144_845_693_013,
        0.405_845_151_377_397_166_906_606_412_076_961,
        0.207_784_955_007_898_467_600_689_403_773_245,
        0.0,
    ];
    const W: [f64; 8] = [
        0.022_935_322_010_529_224_963_732_008_058_970,
        0.063_092_092_629_978_553_290_700_663_189_204,
        0.104_790_010_322_250_183_839_876_322_541_518,
        0.140_653_259_715_525_918_745_189_590_510_238,
        0.169_004_726_639_267_902_826_583_426_598_550,
        0.190_350_578_064_785_409_913_256_402_421_014,
        0.204_432_940_075_298_892_414_161_999_234_649,
        0.209_482_141_084_727_828_012_999_174_891_714,
    ];
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let mut s = T::lit(W[7]) * f(c);
    for j in 0..7 {
        let d = h * T::lit(X[j]);
        s = s + T::lit(W[j]) * (f(c - d) + f(c + d));
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::FiberParams;
    use crate::quad::{integrate, QuadConfig};

    fn span80() -> Span<f64> {
        Span::new(80.0, FiberParams::default())
    }

    #[test]
    fn origin_is_effective_length_squared() {
        let s = span80();
        let le = s.effective_length_km();
        assert!((kernel_rho(0.0, 0.0, &s) - le * le).abs() < 1e-9);
        assert!((kernel_rho(0.0, 0.0, &s) - 448.14).abs() < 0.05);
    }

    #[test]
    fn symmetric_in_arguments() {
        let s = span80();
        for &(u, v) in &[(10.0, 50.0), (-30.0, 7.5), (200.0, -1.0)] {
            assert_eq!(kernel_rho(u, v, &s), kernel_rho(v, u, &s));
        }
    }

    #[test]
    fn direct_complex_form_matches() {
        // |(1 - a e^{jxL}) / (alpha - j x)|^2 evaluated with complex arithmetic.
        let s = span80();
        let alpha = s.fiber.alpha_np_per_km();
        let c = 4.0 * std::f64::consts::PI.powi(2) * s.fiber.beta2_s2_per_km();
        let x = c * 50e9 * 50e9;
        let num = Complex::new(1.0, 0.0) - Complex::from_polar((-alpha * 80.0).exp(), x * 80.0);
        let den = Complex::new(alpha, -x);
        let direct = (num / den).norm_sqr();
        let got = kernel_rho(50.0, 50.0, &s);
        assert!(((got - direct) / direct).abs() < 1e-12, "{got} vs {direct}");
    }

    #[test]
    fn cos_integral_table_and_tail_match_quadrature() {
        let s = span80();
        let k = SpanKernel::new(&s);
        let alpha = s.fiber.alpha_np_per_km();
        let cfg = QuadConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-13);
        let cfg = QuadConfig { max_depth: 30, ..cfg };
        for &x in &[1e-4, 0.01, 0.0371, 0.5, 1.7, 2.4, 2.6, 3.3, 7.0] {
            let reference = integrate(|t: f64| (80.0 * t).cos() / (alpha * alpha + t * t), 0.0, x, &cfg)
                .unwrap()
                .value;
            let got = k.cos_integral(x);
            assert!((got - reference).abs() < 1e-7, "x={x}: {got} vs {reference}");
            assert_eq!(k.cos_integral(-x), -got);
        }
    }

    #[test]
    fn inner_integral_matches_brute_force() {
        let s = span80();
        let k = SpanKernel::new(&s);
        let cfg = QuadConfig::default().with_rel_tol(1e-10);
        let cfg = QuadConfig { max_depth: 40, ..cfg };
        for &(u, v1, v2) in &[
            (0.0, -17.5e9, 17.5e9),
            (1e9, -17.5e9, 10e9),
            (50e9, -17.5e9, 17.5e9),
            (-300e9, -5e9, 17.5e9),
        ] {
            let reference = integrate(|v| kernel_rho_hz(u, v, &s), v1, v2, &cfg).unwrap().value;
            let got = k.inner_integral(u, v1, v2);
            assert!(((got - reference) / reference).abs() < 1e-7, "u={u}: {got} vs {reference}");
        }
    }

    #[test]
    fn single_precision_kernel() {
        let s = Span::new(80.0_f32, FiberParams::<f32>::default());
        let k = SpanKernel::new(&s);
        let d = SpanKernel::new(&span80());
        let got = k.inner_integral(50e9_f32, -17.5e9, 17.5e9) as f64;
        let want = d.inner_integral(50e9, -17.5e9, 17.5e9);
        assert!(((got - want) / want).abs() < 1e-3);
    }
}
