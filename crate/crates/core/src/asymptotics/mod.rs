//! Second-order behaviour of `D₀^ε` on iid products.

mod iid;
mod normal;

pub use iid::{
    berry_esseen_slack, d0_eps_expansion, d0_eps_expansion_with, d0_eps_iid_exact, d0_eps_iid_exact_with,
    expansion_csv, iid_work_quantities, lower_sandwich, typical_set_masses, upper_sandwich, ExpansionReport,
    IidInstance, IidValue, IidWork, BERRY_ESSEEN_C, DEFAULT_CLASS_CAP,
};
pub use normal::{std_normal_cdf, std_normal_quantile};
