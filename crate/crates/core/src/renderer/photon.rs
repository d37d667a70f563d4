use crate::math::Vec3;

/// Uniform hash grid over points with cell size `2r`, so a radius-`r`
/// query touches at most two cells per axis.
#[derive(Debug, Clone)]
pub struct PhotonStore {
    radius: f64,
    inv_cell: f64,
    positions: Vec<Vec3>,
    /// `cell_starts[b]..cell_starts[b + 1]` indexes `order` for bucket `b`.
    cell_starts: Vec<usize>,
    order: Vec<usize>,
}

impl PhotonStore {
    pub fn build(positions: Vec<Vec3>, radius: f64) -> Self {
        assert!(radius > 0.0, "merge radius must be positive");
        let inv_cell = 1.0 / (2.0 * radius);
        let buckets = positions.len().max(1);
        let mut cell_starts = vec![0usize; buckets + 1];
        let keys: Vec<usize> = positions
            .iter()
            .map(|&p| bucket(cell_of(p, inv_cell), buckets))
            .collect();
        for &k in &keys {
            cell_starts[k + 1] += 1;
        }
        for b in 0..buckets {
            cell_starts[b + 1] += cell_starts[b];
        }
        let mut fill = cell_starts.clone();
        let mut order = vec![0; positions.len()];
        for (i, &k) in keys.iter().enumerate() {
            order[fill[k]] = i;
            fill[k] += 1;
        }
        Self {
            radius,
            inv_cell,
            positions,
            cell_starts,
            order,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Calls `f` once for every stored point within `radius` of `p`. The
    /// visiting order depends only on the stored points and `p`.
    pub fn for_each_in_range(&self, p: Vec3, mut f: impl FnMut(usize)) {
        if self.positions.is_empty() {
            return;
        }
        let buckets = self.cell_starts.len() - 1;
        let lo = cell_of(p - Vec3::splat(self.radius), self.inv_cell);
        let hi = cell_of(p + Vec3::splat(self.radius), self.inv_cell);
        let mut hit = [usize::MAX; 8];
        let mut n = 0;
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let b = bucket([x, y, z], buckets);
                    if !hit[..n].contains(&b) {
                        hit[n] = b;
                        n += 1;
                    }
                }
            }
        }
        let r2 = self.radius * self.radius;
        for &b in &hit[..n] {
            for &i in &self.order[self.cell_starts[b]..self.cell_starts[b + 1]] {
                if (self.positions[i] - p).length_squared() <= r2 {
                    f(i);
                }
            }
        }
    }

    /// Indices within `radius` of `p`, sorted.
    pub fn query(&self, p: Vec3) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_range(p, |i| out.push(i));
        out.sort_unstable();
        out
    }
}

fn cell_of(p: Vec3, inv_cell: f64) -> [i64; 3] {
    [
        (p.x * inv_cell).floor() as i64,
        (p.y * inv_cell).floor() as i64,
        (p.z * inv_cell).floor() as i64,
    ]
}

fn bucket(c: [i64; 3], buckets: usize) -> usize {
    let h = (c[0].wrapping_mul(73_856_093))
        ^ (c[1].wrapping_mul(19_349_663))
        ^ (c[2].wrapping_mul(83_492_791));
    (h as u64 % buckets as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    #[test]
    fn empty_and_single() {
        let store = PhotonStore::build(Vec::new(), 0.1);
        assert!(store.query(Vec3::ZERO).is_empty());
        let p = vec3(0.3, -2.0, 5.0);
        let store = PhotonStore::build(vec![p], 0.1);
        assert_eq!(store.query(p), vec![0]);
        assert!(store.query(p + vec3(0.2, 0.0, 0.0)).is_empty());
    }
}
