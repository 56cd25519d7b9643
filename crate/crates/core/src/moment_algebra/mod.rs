//! Closed-form moment brackets and truncated bracket tables.

mod closed_form;
mod table;

pub use closed_form::{
    checked_bracket, closed_form, closed_form_bracket, exact_poisson_bracket, kcoeff, ClosedForm,
    Convention,
};
pub use table::{
    build_bracket_table, build_bracket_table_with, poisson_bracket, truncate, BracketTable,
    TableOptions,
};
