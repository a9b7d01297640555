//! Binary indexed tree over non-negative weights with append and
//! swap-remove, used to pick an atom proportionally to its rate.

#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    // 1-based implicit tree; tree[0] unused.
    tree: Vec<f64>,
    weights: Vec<f64>,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl Default for Fenwick {
    fn default() -> Self {
        Fenwick::from_weights(Vec::new())
    }
}

impl Fenwick {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(&weights);
        for i in 1..=n {
            let j = i + lowbit(i);
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Fenwick { tree, weights }
    }

    fn prefix(&self, mut i: usize) -> f64 {
        // Sum of the first i weights.
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lowbit(i);
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.weights.len())
    }

    pub fn add(&mut self, i: usize, delta: f64) {
        self.weights[i] += delta;
        let n = self.weights.len();
        let mut j = i + 1;
        while j <= n {
            self.tree[j] += delta;
            j += lowbit(j);
        }
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        self.add(i, delta);
    }

    pub fn push(&mut self, w: f64) {
        let n = self.weights.len() + 1;
        let node = w + self.prefix(n - 1) - self.prefix(n - lowbit(n));
        self.weights.push(w);
        self.tree.push(node);
    }

    /// Moves the last weight into slot `i` and drops the last slot.
    pub fn swap_remove(&mut self, i: usize) {
        let last = self.weights.len() - 1;
        if i != last {
            let w = self.weights[last];
            self.set(i, w);
        }
        self.weights.pop();
        self.tree.pop();
    }

    /// Index `i` with `prefix(i) <= u < prefix(i + 1)`, skipping
    /// zero-weight slots; clamps to the last positive slot on round-off.
    pub fn find(&self, mut u: f64) -> usize {
        let n = self.weights.len();
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                pos = next;
                u -= self.tree[next];
            }
            step >>= 1;
        }
        let mut i = pos.min(n - 1);
        while self.weights[i] <= 0.0 && i > 0 {
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
    fn finds_by_cumulative_weight() {
        let f = Fenwick::from_weights(vec![1.0, 0.0, 2.0, 3.0]);
        assert_eq!(f.total(), 6.0);
        assert_eq!(f.find(0.5), 0);
        assert_eq!(f.find(1.0), 2);
        assert_eq!(f.find(2.999), 2);
        assert_eq!(f.find(3.0), 3);
        assert_eq!(f.find(5.999), 3);
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            ops in prop::collection::vec((0u8..3, 0usize..50, 0u32..10), 1..200),
            probe in 0.0f64..1.0,
        ) {
            let mut f = Fenwick::default();
            let mut w: Vec<f64> = Vec::new();
            for (op, i, v) in ops {
                match op {
                    0 => { f.push(v as f64); w.push(v as f64); }
                    1 if !w.is_empty() => { let i = i % w.len(); f.set(i, v as f64); w[i] = v as f64; }
                    _ if !w.is_empty() => { let i = i % w.len(); f.swap_remove(i); w.swap_remove(i); }
                    _ => {}
                }
                let total: f64 = w.iter().sum();
                prop_assert_eq!(f.total(), total);
                if total > 0.0 {
                    let u = probe * total;
                    let mut acc = 0.0;
                    let mut expect = 0;
                    for (k, x) in w.iter().enumerate() {
                        if u < acc + x { expect = k; break; }
                        acc += x;
                    }
                    prop_assert_eq!(f.find(u), expect);
                }
            }
        }
    }
}
