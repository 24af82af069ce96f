//! Small numeric helpers shared across modules.

/// Compensated (Kahan) accumulator. The truncated Poisson series and the
/// enumeration reductions add up to ~1e5 terms spanning many orders of
/// magnitude; plain summation loses 2-3 digits there.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Kahan-sum an iterator of f64.
pub fn sum_compensated(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
