use crate::error::Result;
use crate::phys::LinkConfig;

use super::store::SciStore;

/// Full-link NLI coefficient `sigma^2_NLI / Pc^3` (1/W^2) on channel `cut`,
/// accumulating spans incoherently.
pub fn oracle_eta(link: &LinkConfig, cut: usize, store: &SciStore) -> Result<f64> {
    let c = link.channel(cut)?;
    let pc = c.power_w();
    let mut eta = store.sci(c.symbol_rate_gbd, link.span_length_km)?;
    for (k, ch) in link.channels.iter().enumerate() {
        if k == cut {
            continue;
        }
        let ratio = ch.power_w() / pc;
        eta += store.xci(
            c.symbol_rate_gbd,
            ch.symbol_rate_gbd,
            ch.center_freq_ghz - c.center_freq_ghz,
            link.span_length_km,
        )? * ratio
            * ratio;
    }
    Ok(link.span_count as f64 * eta)
}

/// Full-link NLI power (W) on channel `cut`:
/// `N * (eta_sci Pc^3 + sum_k eta_k Pc Pk^2)`.
pub fn oracle_nli(link: &LinkConfig, cut: usize, store: &SciStore) -> Result<f64> {
    let pc = link.channel(cut)?.power_w();
    Ok(oracle_eta(link, cut, store)? * pc * pc * pc)
}
