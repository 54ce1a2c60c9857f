//! Number formatting shared by every CSV this crate and its front ends emit.

/// Version of the CSV column layouts, written as the first row of every file.
pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}
