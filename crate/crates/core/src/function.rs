/// A scalar function of `(x, t)` that can be evaluated anywhere in its domain.
pub trait SpaceTimeFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], t: f64) -> f64;
}

/// Adapter turning a closure into a [`SpaceTimeFunction`].
pub struct FnFunction<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], f64) -> f64> FnFunction<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], f64) -> f64> SpaceTimeFunction for FnFunction<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        (self.f)(x, t)
    }
}

impl<T: SpaceTimeFunction + ?Sized> SpaceTimeFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        (**self).value(x, t)
    }
}
