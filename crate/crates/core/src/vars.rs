//! Variable naming convention shared by every expression.
//!
//! Base coordinates are `x1..xn`, fiber (velocity) coordinates `y1..yd`
//! and dual fiber coordinates (momenta, ξ) `p1..pd`. Monitors may also use
//! the time `t`. Indices in names are 1-based; everything else is 0-based.

pub const TIME: &str = "t";

pub fn base(i: usize) -> String {
    format!("x{}", i + 1)
}

pub fn fiber(i: usize) -> String {
    format!("y{}", i + 1)
}

pub fn dual(i: usize) -> String {
    format!("p{}", i + 1)
}

pub fn bases(n: usize) -> Vec<String> {
    (0..n).map(base).collect()
}

pub fn fibers(d: usize) -> Vec<String> {
    (0..d).map(fiber).collect()
}

pub fn duals(d: usize) -> Vec<String> {
    (0..d).map(dual).collect()
}

/// Bindings `names[i] = values[i]` appended to `out`.
pub(crate) fn bind_into(out: &mut Vec<(String, f64)>, names: &[String], values: &[f64]) {
    out.extend(names.iter().cloned().zip(values.iter().copied()));
}
