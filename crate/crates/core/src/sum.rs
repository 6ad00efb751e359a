/// Neumaier compensated summation, fed in ascending index order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = Accumulator::default();
    for t in terms {
        acc.add(t);
    }
    acc.total()
}
