//! Small dense symmetric matrices (n <= 3) and the Krylov solver used by
//! the Newton iterations.

mod krylov;
mod symmat;

pub use krylov::{bicgstab, KrylovOptions, KrylovReport};
pub use symmat::{SpdMatrix, SymMat};

/// Largest spatial dimension supported by the toolkit.
pub const MAX_DIM: usize = 3;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn subtract_mean(a: &mut [f64]) {
    if a.is_empty() {
        return;
    }
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter_mut().for_each(|v| *v -= mean);
}
