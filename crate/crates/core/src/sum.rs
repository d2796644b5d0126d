//! Compensated summation.
//!
//! Neumaier's variant of Kahan summation: the running compensation also
//! catches the case where the incoming term is larger than the partial sum.
//! All reductions in this crate go through [`NeumaierSum`] in ascending
//! index order so results do not depend on thread count.

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Compensated dot product `Σ a[i]·b[i]` in ascending `i`.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.total()
}
