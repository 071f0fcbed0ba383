//! Settings, preference orders, allocations and utilities over exact rationals.

mod allocation;
mod order;
mod profile;
pub mod ratio;
mod setting;
mod utility;

pub use allocation::{fosd_compare, row_delta, Allocation, Dominance};
pub use order::{OrderDisplay, PrefOrder};
pub use profile::Profile;
pub use ratio::Rational;
pub use setting::{default_labels, make_setting, Setting, SettingDoc, DUMMY_LABEL};
pub use utility::{expected_utility, utility_consistent, UtilityFn};
