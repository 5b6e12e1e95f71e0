//! Nonlinear-interference coefficients: integral-form oracle, closed-form
//! baseline and the coefficient store.

mod closed_form;
mod integral;
mod kernel;
mod oracle;
mod store;

pub use closed_form::{closed_form_eta, closed_form_nli, closed_form_sci, closed_form_xci};
pub use integral::{
    full_spectrum_integral, sci_coefficient, sci_integral, sci_integral_direct, xci_coefficient,
    xci_integral_direct, xci_pair_integral, FULL_SPECTRUM_MAX_CHANNELS,
};
pub use kernel::{kernel_rho, kernel_rho_hz, SpanKernel};
pub use oracle::{oracle_eta, oracle_nli};
pub use store::{link_keys, CoeffKey, CoeffKind, SciStore, StoreRecord};
