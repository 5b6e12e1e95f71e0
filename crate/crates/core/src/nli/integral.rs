//! Integral-form GN coefficients.
//!
//! Offsets are measured from the CUT center. All rectangular spectra have
//! width equal to the symbol rate and share one PSD, so the coefficients are
//! independent of the launch power:
//!
//! * SCI: `eta = (16/27) gamma^2 / Rc^2 * int_hex rho`, over
//!   `|u|, |v|, |u + v| <= Rc/2`.
//! * XCI: `eta_k = (32/27) gamma^2 / Rk^2 * int_D rho` with `u` and `u + v`
//!   in the interferer band and `v` in the CUT band, normalized so that
//!   `sigma^2 = eta_k * Pc * Pk^2`.
//!
//! The `*_coefficient` functions integrate the inner axis exactly through
//! [`SpanKernel`]; the `*_direct` functions and [`full_spectrum_integral`]
//! run brute-force nested 2-D quadrature on [`kernel_rho_hz`].

use crate::error::{Error, Result};
use crate::num::Real;
use crate::phys::{Channel, FiberParams, LinkConfig, Span};
use crate::quad::{integrate_2d, integrate_breaks, QuadConfig};

use super::kernel::{kernel_rho_hz, SpanKernel};

/// Largest spectrum accepted by [`full_spectrum_integral`].
pub const FULL_SPECTRUM_MAX_CHANNELS: usize = 5;

#[inline]
fn sci_prefactor<T: Real>(gamma: T, rate_hz: T) -> T {
    T::lit(16.0 / 27.0) * gamma * gamma / (rate_hz * rate_hz)
}

#[inline]
fn xci_prefactor<T: Real>(gamma: T, interferer_rate_hz: T) -> T {
    T::lit(32.0 / 27.0) * gamma * gamma / (interferer_rate_hz * interferer_rate_hz)
}

fn check_rate<T: Real>(rate_gbd: T) -> Result<()> {
    if rate_gbd > T::zero() && rate_gbd.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("symbol rate must be positive, got {rate_gbd}")))
    }
}

fn check_separation<T: Real>(cut_rate_gbd: T, interferer_rate_gbd: T, delta_f_ghz: T) -> Result<()> {
    let min_sep = T::lit(0.5) * (cut_rate_gbd + interferer_rate_gbd);
    if delta_f_ghz.abs() < min_sep {
        return Err(Error::Overlap(format!(
            "|delta f| = {} GHz below the half-sum of symbol rates {} GHz",
            delta_f_ghz.abs(),
            min_sep
        )));
    }
    Ok(())
}

/// Per-span SCI coefficient (1/W^2) of a channel with `rate_gbd`.
pub fn sci_coefficient<T: Real>(kernel: &SpanKernel<T>, rate_gbd: T, cfg: &QuadConfig<T>) -> Result<T> {
    check_rate(rate_gbd)?;
    let r = rate_gbd * T::lit(1e9);
    let half = T::lit(0.5) * r;
    // The hexagon is symmetric under (u, v) -> (-u, -v); integrate u >= 0.
    let res = integrate_breaks(|u| kernel.inner_integral(u, -half, half - u), &[T::zero(), half], cfg)?;
    let gamma = kernel.span().fiber.gamma_per_w_km;
    Ok(T::lit(2.0) * res.value * sci_prefactor(gamma, r))
}

/// Per-span XCI coefficient (1/W^2) of one interferer at signed spacing
/// `delta_f_ghz` from the CUT.
pub fn xci_coefficient<T: Real>(
    kernel: &SpanKernel<T>,
    cut_rate_gbd: T,
    interferer_rate_gbd: T,
    delta_f_ghz: T,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    check_rate(cut_rate_gbd)?;
    check_rate(interferer_rate_gbd)?;
    check_separation(cut_rate_gbd, interferer_rate_gbd, delta_f_ghz)?;
    let ghz = T::lit(1e9);
    let (rc, rk) = (cut_rate_gbd * ghz, interferer_rate_gbd * ghz);
    // eta(-df) = eta(df) by the reflection (u, v) -> (-u, -v).
    let df = delta_f_ghz.abs() * ghz;
    let half = T::lit(0.5);
    let (k_lo, k_hi) = (df - half * rk, df + half * rk);
    let (c_lo, c_hi) = (-half * rc, half * rc);
    let points = breakpoints(k_lo, k_hi, &[k_lo - c_lo, k_hi - c_hi]);
    let res = integrate_breaks(
        |u| {
            let lo = c_lo.max(k_lo - u);
            let hi = c_hi.min(k_hi - u);
            if hi > lo {
                kernel.inner_integral(u, lo, hi)
            } else {
                T::zero()
            }
        },
        &points,
        cfg,
    )?;
    let gamma = kernel.span().fiber.gamma_per_w_km;
    Ok(res.value * xci_prefactor(gamma, rk))
}

fn breakpoints<T: Real>(lo: T, hi: T, interior: &[T]) -> Vec<T> {
    let mut pts = vec![lo, hi];
    pts.extend(interior.iter().copied().filter(|&p| p > lo && p < hi));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup();
    pts
}

/// Per-span SCI coefficient of `channel`.
pub fn sci_integral(channel: &Channel, span: &Span<f64>) -> Result<f64> {
    let kernel = SpanKernel::new(span);
    sci_coefficient(&kernel, channel.symbol_rate_gbd, &QuadConfig::default())
}

/// Per-span XCI coefficient that `interferer` induces on `cut`.
pub fn xci_pair_integral(cut: &Channel, interferer: &Channel, span: &Span<f64>) -> Result<f64> {
    let kernel = SpanKernel::new(span);
    xci_coefficient(
        &kernel,
        cut.symbol_rate_gbd,
        interferer.symbol_rate_gbd,
        interferer.center_freq_ghz - cut.center_freq_ghz,
        &QuadConfig::default(),
    )
}

/// Brute-force 2-D quadrature route for the SCI coefficient.
pub fn sci_integral_direct<T: Real>(rate_gbd: T, span: &Span<T>, cfg: &QuadConfig<T>) -> Result<T> {
    check_rate(rate_gbd)?;
    let r = rate_gbd * T::lit(1e9);
    let half = T::lit(0.5) * r;
    let res = integrate_2d(
        |u, v| kernel_rho_hz(u, v, span),
        &[-half, T::zero(), half],
        |u| ((-half).max(-half - u), half.min(half - u)),
        cfg,
    )?;
    Ok(res.value * sci_prefactor(span.fiber.gamma_per_w_km, r))
}

/// Brute-force 2-D quadrature route for the XCI coefficient.
pub fn xci_integral_direct<T: Real>(
    cut_rate_gbd: T,
    interferer_rate_gbd: T,
    delta_f_ghz: T,
    span: &Span<T>,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    check_rate(cut_rate_gbd)?;
    check_rate(interferer_rate_gbd)?;
    check_separation(cut_rate_gbd, interferer_rate_gbd, delta_f_ghz)?;
    let ghz = T::lit(1e9);
    let (rc, rk, df) = (cut_rate_gbd * ghz, interferer_rate_gbd * ghz, delta_f_ghz * ghz);
    let half = T::lit(0.5);
    let (k_lo, k_hi) = (df - half * rk, df + half * rk);
    let (c_lo, c_hi) = (-half * rc, half * rc);
    let points = breakpoints(k_lo, k_hi, &[k_lo - c_lo, k_hi - c_hi]);
    let res = integrate_2d(
        |u, v| kernel_rho_hz(u, v, span),
        &points,
        |u| (c_lo.max(k_lo - u), c_hi.min(k_hi - u)),
        cfg,
    )?;
    Ok(res.value * xci_prefactor(span.fiber.gamma_per_w_km, rk))
}

#[derive(Debug, Clone, Copy)]
struct Band {
    lo: f64,
    hi: f64,
    psd: f64,
}

/// NLI power (W, one span) at the center of channel `cut`, integrating the
/// GN double integral over the complete multi-channel PSD.
///
/// Every channel triple `(a, b, c)` with `f1` in `a`, `f2` in `b` and
/// `f1 + f2 - f` in `c` is integrated separately, so the result includes the
/// multi-channel terms that the SCI + pairwise XCI decomposition neglects.
pub fn full_spectrum_integral(link: &LinkConfig, cut: usize, fiber: &FiberParams<f64>) -> Result<f64> {
    if link.channels.is_empty() {
        return Ok(0.0);
    }
    if link.channels.len() > FULL_SPECTRUM_MAX_CHANNELS {
        return Err(Error::invalid(format!(
            "full-spectrum integral limited to {FULL_SPECTRUM_MAX_CHANNELS} channels, got {}",
            link.channels.len()
        )));
    }
    let cut_ch = link.channel(cut)?;
    let span = link.span(fiber);
    let f0 = cut_ch.center_freq_ghz;
    let bands: Vec<Band> = link
        .channels
        .iter()
        .map(|c| {
            let r = c.symbol_rate_gbd * 1e9;
            let center = (c.center_freq_ghz - f0) * 1e9;
            Band {
                lo: center - 0.5 * r,
                hi: center + 0.5 * r,
                psd: c.power_w() / r,
            }
        })
        .collect();

    let rc = cut_ch.symbol_rate_gbd * 1e9;
    let le = span.effective_length_km();
    let base = QuadConfig::<f64>::default();
    // Triples far below the SCI scale need only absolute accuracy.
    let scale = le * le * rc * rc;
    let cfg = base.with_abs_tol(1e-2 * base.rel_tol * scale);

    let mut total = 0.0;
    for a in &bands {
        for b in &bands {
            for c in &bands {
                if a.lo + b.lo >= c.hi || a.hi + b.hi <= c.lo {
                    continue;
                }
                let points = breakpoints(
                    a.lo,
                    a.hi,
                    &[c.lo - b.lo, c.lo - b.hi, c.hi - b.lo, c.hi - b.hi, 0.0],
                );
                let res = integrate_2d(
                    |u, v| kernel_rho_hz(u, v, &span),
                    &points,
                    |u| (b.lo.max(c.lo - u), b.hi.min(c.hi - u)),
                    &cfg,
                )?;
                total += a.psd * b.psd * c.psd * res.value;
            }
        }
    }
    let gamma = fiber.gamma_per_w_km;
    Ok(16.0 / 27.0 * gamma * gamma * rc * total)
}
