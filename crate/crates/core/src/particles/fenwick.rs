/// Binary indexed tree over non-negative per-site rates with prefix-sum search.
#[derive(Debug, Clone)]
pub struct RateTree {
    tree: Vec<f64>,
    values: Vec<f64>,
    top: usize,
}

impl RateTree {
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        let top = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        let mut t = RateTree { tree: vec![0.0; n + 1], values, top };
        t.rebuild();
        t
    }

    /// Recomputes every partial sum from the stored values, discarding accumulated rounding.
    pub fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=n {
            self.tree[i] += self.values[i - 1];
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                self.tree[j] += self.tree[i];
            }
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let n = self.values.len();
        let mut k = i + 1;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        let mut s = 0.0;
        let mut k = self.values.len();
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index `i` whose inclusive prefix sum exceeds `u`, skipping zero-rate entries.
    pub fn find(&self, mut u: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                u -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        // Rounding can land on a zero-rate entry at a boundary; move to the nearest live one.
        let mut i = pos.min(n - 1);
        while i + 1 < n && self.values[i] <= 0.0 {
            i += 1;
        }
        while i > 0 && self.values[i] <= 0.0 {
            i -= 1;
        }
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prefix_search() {
        let t = RateTree::new(vec![1.0, 0.0, 2.0, 3.0]);
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.9), 2);
        assert_eq!(t.find(3.0), 3);
        assert_eq!(t.find(5.99), 3);
    }

    proptest! {
        #[test]
        fn find_matches_linear_scan(vals in prop::collection::vec(0.0f64..5.0, 1..40), frac in 0.0f64..1.0, upd in prop::collection::vec((0usize..40, 0.0f64..5.0), 0..20)) {
            let mut t = RateTree::new(vals.clone());
            let mut v = vals;
            for (i, x) in upd {
                let i = i % v.len();
                v[i] = x;
                t.set(i, x);
            }
            let total: f64 = v.iter().sum();
            prop_assert!((t.total() - total).abs() < 1e-9);
            prop_assume!(total > 0.0);
            let u = frac * total;
            let mut acc = 0.0;
            let mut expect = v.len() - 1;
            for (i, x) in v.iter().enumerate() {
                acc += x;
                if acc > u {
                    expect = i;
                    break;
                }
            }
            let got = t.find(u);
            prop_assert!(v[got] > 0.0);
            // Exact boundary ties may resolve to either neighbour; compare prefix sums instead.
            let before: f64 = v[..got].iter().sum();
            prop_assert!(before <= u + 1e-9 && before + v[got] >= u - 1e-9, "got {} expect {}", got, expect);
        }
    }
}
