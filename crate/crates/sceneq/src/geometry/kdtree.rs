//! Exact k-nearest-neighbour queries over 3D point clouds.
//!
//! The tree is the textbook construction: the split dimension cycles
//! x -> y -> z with depth, each node stores the median point of its range,
//! and search descends the near side first, visiting the far side only when
//! the splitting plane is at least as close as the current k-th best. Ties
//! in distance are broken by input index so results are reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{GeomError, PointCloud};

/// A single answer from [`KdTree::knn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index of the point in the cloud the tree was built from.
    pub index: usize,
    pub point: [f64; 3],
    pub distance: f64,
}

#[derive(Debug, Clone)]
struct Node {
    point: [f64; 3],
    index: usize,
    left: Option<u32>,
    right: Option<u32>,
}

/// Balanced median-split KD-tree over a fixed point cloud.
#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    root: Option<u32>,
}

impl KdTree {
    /// Builds a tree over `cloud`. Errors on an empty cloud.
    pub fn build(cloud: &PointCloud) -> Result<KdTree, GeomError> {
        if cloud.is_empty() {
            return Err(GeomError::EmptyCloud);
        }
        let mut items: Vec<(usize, [f64; 3])> = cloud.0.iter().copied().enumerate().collect();
        let mut tree = KdTree { nodes: Vec::with_capacity(items.len()), root: None };
        tree.root = tree.build_range(&mut items, 0);
        Ok(tree)
    }

    fn build_range(&mut self, items: &mut [(usize, [f64; 3])], depth: usize) -> Option<u32> {
        if items.is_empty() {
            return None;
        }
        let dim = depth % 3;
        // Equal coordinates fall back to input order so builds are
        // deterministic for any input.
        items.sort_unstable_by(|a, b| a.1[dim].total_cmp(&b.1[dim]).then(a.0.cmp(&b.0)));
        let mid = items.len() / 2;
        let (index, point) = items[mid];
        let slot = self.nodes.len() as u32;
        self.nodes.push(Node { point, index, left: None, right: None });
        let (lo, rest) = items.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_range(lo, depth + 1);
        let right = self.build_range(hi, depth + 1);
        self.nodes[slot as usize].left = left;
        self.nodes[slot as usize].right = right;
        Some(slot)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Longest root-to-leaf path, counted in edges. A single node has
    /// depth 0. Median splits keep this logarithmic.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: Option<u32>) -> usize {
            match at {
                None => 0,
                Some(i) => {
                    let n = &nodes[i as usize];
                    match (n.left, n.right) {
                        (None, None) => 0,
                        _ => 1 + walk(nodes, n.left).max(walk(nodes, n.right)),
                    }
                }
            }
        }
        walk(&self.nodes, self.root)
    }

    /// The `min(k, len)` points nearest to `query`, ordered by distance and
    /// then by input index. `k` must be at least 1.
    pub fn knn(&self, query: [f64; 3], k: usize) -> Vec<Neighbor> {
        assert!(k >= 1, "k must be at least 1");
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, 0, query, k, &mut heap);
        let mut hits = heap.into_vec();
        hits.sort_by(|a, b| a.d2.total_cmp(&b.d2).then(a.index.cmp(&b.index)));
        hits.into_iter()
            .map(|h| Neighbor { index: h.index, point: h.point, distance: h.d2.sqrt() })
            .collect()
    }

    fn search(
        &self,
        at: Option<u32>,
        depth: usize,
        query: [f64; 3],
        k: usize,
        heap: &mut BinaryHeap<HeapEntry>,
    ) {
        let Some(i) = at else { return };
        let node = &self.nodes[i as usize];
        let d2 = dist2(query, node.point);
        let candidate = HeapEntry { d2, index: node.index, point: node.point };
        if heap.len() < k {
            heap.push(candidate);
        } else if candidate.cmp(heap.peek().expect("heap is non-empty")) == Ordering::Less {
            heap.pop();
            heap.push(candidate);
        }

        let dim = depth % 3;
        let diff = query[dim] - node.point[dim];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, depth + 1, query, k, heap);
        // The far side can only matter when the splitting plane is no
        // farther than the current worst hit; equality still matters because
        // an equally distant point with a smaller index wins ties.
        let worst = heap.peek().expect("heap is non-empty").d2;
        if heap.len() < k || diff * diff <= worst {
            self.search(far, depth + 1, query, k, heap);
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    d2: f64,
    index: usize,
    point: [f64; 3],
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
