/// Fenwick tree over non-negative weights with proportional sampling.
#[derive(Clone, Debug)]
pub(crate) struct WeightTree {
    tree: Vec<f64>,
    weights: Vec<f64>,
    top_bit: usize,
}

impl WeightTree {
    pub fn new(n: usize) -> Self {
        let top_bit = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        WeightTree {
            tree: vec![0.0; n + 1],
            weights: vec![0.0; n],
            top_bit,
        }
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        if delta == 0.0 {
            return;
        }
        self.weights[i] = w;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        let mut k = self.tree.len() - 1;
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Index whose cumulative weight interval contains `u * total`, for
    /// `u` in `[0, 1)`. `None` when every weight is zero.
    pub fn sample(&self, u: f64) -> Option<usize> {
        let total = self.total();
        if total <= 0.0 {
            return None;
        }
        let mut target = u * total;
        let mut pos = 0;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        // Rounding can land on a zero-weight slot or past the end.
        let i = pos.min(self.weights.len() - 1);
        if self.weights[i] > 0.0 {
            return Some(i);
        }
        (0..i).rev().chain(i + 1..self.weights.len()).find(|&j| self.weights[j] > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_proportionally() {
        let mut t = WeightTree::new(5);
        t.set(1, 1.0);
        t.set(3, 3.0);
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.sample(0.0), Some(1));
        assert_eq!(t.sample(0.24), Some(1));
        assert_eq!(t.sample(0.26), Some(3));
        assert_eq!(t.sample(0.999), Some(3));
        t.set(3, 0.0);
        assert_eq!(t.sample(0.9), Some(1));
        t.set(1, 0.0);
        assert_eq!(t.sample(0.5), None);
    }

    #[test]
    fn single_and_power_of_two_sizes() {
        for n in [1usize, 2, 7, 8, 9, 64] {
            let mut t = WeightTree::new(n);
            for i in 0..n {
                t.set(i, 1.0);
            }
            for i in 0..n {
                let u = (i as f64 + 0.5) / n as f64;
                assert_eq!(t.sample(u), Some(i), "n={n} i={i}");
            }
        }
    }
}
