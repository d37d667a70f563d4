//! Binned-SAH bounding volume hierarchy over shape indices.

use super::shape::{Aabb, Ray, Shape};
use crate::math::{vec3, Vec3};

const LEAF_SIZE: usize = 2;
const BINS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { bounds: Aabb, first: usize, count: usize },
    Inner { bounds: Aabb, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(shapes: &[Shape]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..shapes.len()).collect(),
        };
        if shapes.is_empty() {
            return bvh;
        }
        let boxes: Vec<Aabb> = shapes.iter().map(Shape::bounds).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(Aabb::centroid).collect();
        bvh.build_range(&boxes, &centroids, 0, shapes.len());
        bvh
    }

    fn build_range(&mut self, boxes: &[Aabb], cents: &[Vec3], lo: usize, hi: usize) -> usize {
        let bounds = self.order[lo..hi]
            .iter()
            .fold(Aabb::EMPTY, |b, &i| b.union(boxes[i]));
        let node = self.nodes.len();
        let count = hi - lo;
        if count <= LEAF_SIZE {
            self.nodes.push(Node::Leaf {
                bounds,
                first: lo,
                count,
            });
            return node;
        }
        let cb = self.order[lo..hi]
            .iter()
            .fold(Aabb::EMPTY, |b, &i| b.grow(cents[i]));
        let extent = cb.max - cb.min;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let split = if extent[axis] > 0.0 {
            self.sah_split(boxes, cents, lo, hi, axis, cb)
        } else {
            None
        };
        let mid = match split {
            Some(m) if m > lo && m < hi => m,
            _ => {
                self.order[lo..hi]
                    .sort_by(|&a, &b| cents[a][axis].total_cmp(&cents[b][axis]).then(a.cmp(&b)));
                lo + count / 2
            }
        };
        self.nodes.push(Node::Inner { bounds, right: 0 });
        self.build_range(boxes, cents, lo, mid);
        let right = self.build_range(boxes, cents, mid, hi);
        self.nodes[node] = Node::Inner { bounds, right };
        node
    }

    /// Partitions `order[lo..hi]` at the cheapest bin boundary.
    fn sah_split(
        &mut self,
        boxes: &[Aabb],
        cents: &[Vec3],
        lo: usize,
        hi: usize,
        axis: usize,
        cb: Aabb,
    ) -> Option<usize> {
        let (c0, c1) = (cb.min[axis], cb.max[axis]);
        let bin_of = |c: f64| (((c - c0) / (c1 - c0) * BINS as f64) as usize).min(BINS - 1);
        let mut bins = [(Aabb::EMPTY, 0usize); BINS];
        for &i in &self.order[lo..hi] {
            let b = &mut bins[bin_of(cents[i][axis])];
            b.0 = b.0.union(boxes[i]);
            b.1 += 1;
        }
        let mut best = (f64::INFINITY, 0);
        for split in 1..BINS {
            let (l, r) = bins.split_at(split);
            let fold = |s: &[(Aabb, usize)]| {
                s.iter()
                    .fold((Aabb::EMPTY, 0), |(b, n), (bb, nn)| (b.union(*bb), n + nn))
            };
            let (lb, ln) = fold(l);
            let (rb, rn) = fold(r);
            if ln == 0 || rn == 0 {
                continue;
            }
            let cost = lb.surface_area() * ln as f64 + rb.surface_area() * rn as f64;
            if cost < best.0 {
                best = (cost, split);
            }
        }
        if best.0.is_infinite() {
            return None;
        }
        let order = &mut self.order[lo..hi];
        order.sort_by_key(|&i| (bin_of(cents[i][axis]) >= best.1, i));
        Some(lo + order.iter().filter(|&&i| bin_of(cents[i][axis]) < best.1).count())
    }

    /// Nearest hit as `(t, normal, shape index)`. Equal distances resolve
    /// to the lowest shape index, matching a linear scan.
    pub fn intersect(&self, shapes: &[Shape], ray: &Ray) -> Option<(f64, Vec3, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = vec3(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<(f64, Vec3, usize)> = None;
        let mut stack = [0usize; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp];
            let node = &self.nodes[idx];
            let t_max = best.map_or(ray.t_max, |b| b.0);
            if node.bounds().hit(ray.origin, inv, ray.t_min, t_max).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { first, count, .. } => {
                    for &i in &self.order[first..first + count] {
                        if let Some((t, n)) = shapes[i].intersect(ray) {
                            let better = match best {
                                None => true,
                                Some((bt, _, bi)) => t < bt || (t == bt && i < bi),
                            };
                            if better {
                                best = Some((t, n, i));
                            }
                        }
                    }
                }
                Node::Inner { right, .. } => {
                    stack[sp] = right;
                    stack[sp + 1] = idx + 1;
                    sp += 2;
                }
            }
        }
        best
    }

    /// Whether anything blocks the open segment `(t_min, t_max)`.
    pub fn occluded(&self, shapes: &[Shape], ray: &Ray) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv = vec3(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut stack = [0usize; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp];
            let node = &self.nodes[idx];
            if node.bounds().hit(ray.origin, inv, ray.t_min, ray.t_max).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { first, count, .. } => {
                    if self.order[first..first + count]
                        .iter()
                        .any(|&i| shapes[i].intersect(ray).is_some())
                    {
                        return true;
                    }
                }
                Node::Inner { right, .. } => {
                    stack[sp] = right;
                    stack[sp + 1] = idx + 1;
                    sp += 2;
                }
            }
        }
        false
    }
}

/// Linear scan used as the reference for [`Bvh::intersect`].
pub fn brute_force_intersect(shapes: &[Shape], ray: &Ray) -> Option<(f64, Vec3, usize)> {
    let mut best: Option<(f64, Vec3, usize)> = None;
    for (i, s) in shapes.iter().enumerate() {
        if let Some((t, n)) = s.intersect(ray) {
            if best.map_or(true, |b| t < b.0) {
                best = Some((t, n, i));
            }
        }
    }
    best
}
