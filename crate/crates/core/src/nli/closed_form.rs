//! Closed-form incoherent GN approximation, the fast analytical baseline.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::phys::{FiberParams, LinkConfig, Span};

#[inline]
fn dispersion_length_term<T: Real>(span: &Span<T>, rate_hz: T) -> T {
    T::PI() * span.fiber.beta2_s2_per_km().abs() * span.asymptotic_length_km() * rate_hz * rate_hz
}

/// Per-span SCI coefficient (1/W^2).
pub fn closed_form_sci<T: Real>(rate_gbd: T, span: &Span<T>) -> T {
    let r = rate_gbd * T::lit(1e9);
    let le = span.effective_length_km();
    let gamma = span.fiber.gamma_per_w_km;
    let arg = T::PI() * T::PI() / T::lit(2.0)
        * span.fiber.beta2_s2_per_km().abs()
        * span.asymptotic_length_km()
        * r
        * r;
    T::lit(8.0 / 27.0) * gamma * gamma * le * le * arg.asinh() / dispersion_length_term(span, r)
}

/// Per-span XCI coefficient (1/W^2) of an interferer with `interferer_rate_gbd`
/// at spacing `delta_f_ghz`, normalized so that `sigma^2 = eta * Pc * Pk^2`.
///
/// The expression is singular at `|delta_f| = Rk/2`.
pub fn closed_form_xci<T: Real>(interferer_rate_gbd: T, delta_f_ghz: T, span: &Span<T>) -> Result<T> {
    let half_rk = T::lit(0.5) * interferer_rate_gbd;
    let df = delta_f_ghz.abs();
    if df <= half_rk {
        return Err(Error::invalid(format!(
            "closed-form XCI singular: |delta f| = {df} GHz <= Rk/2 = {half_rk} GHz"
        )));
    }
    let rk = interferer_rate_gbd * T::lit(1e9);
    let le = span.effective_length_km();
    let gamma = span.fiber.gamma_per_w_km;
    let log_ratio = ((df + half_rk) / (df - half_rk)).ln();
    Ok(T::lit(8.0 / 27.0) * gamma * gamma * le * le * log_ratio / dispersion_length_term(span, rk))
}

/// Full-link NLI power (W) on channel `cut` under the closed-form model.
pub fn closed_form_nli(link: &LinkConfig, cut: usize, fiber: &FiberParams<f64>) -> Result<f64> {
    Ok(closed_form_eta(link, cut, fiber)? * link.channel(cut)?.power_w().powi(3))
}

/// Full-link NLI coefficient `sigma^2 / Pc^3` (1/W^2) under the closed-form model.
pub fn closed_form_eta(link: &LinkConfig, cut: usize, fiber: &FiberParams<f64>) -> Result<f64> {
    let span = link.span(fiber);
    let c = link.channel(cut)?;
    let pc = c.power_w();
    let mut eta = closed_form_sci(c.symbol_rate_gbd, &span);
    for (k, ch) in link.channels.iter().enumerate() {
        if k == cut {
            continue;
        }
        let pk = ch.power_w();
        let xci = closed_form_xci(ch.symbol_rate_gbd, ch.center_freq_ghz - c.center_freq_ghz, &span)?;
        eta += xci * (pk / pc) * (pk / pc);
    }
    Ok(link.span_count as f64 * eta)
}
