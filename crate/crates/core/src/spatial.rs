use std::num::NonZero;

use kiddo::immutable::float::kdtree::ImmutableKdTree;
use kiddo::SquaredEuclidean;

use crate::geometry::Vec3;

type Tree = ImmutableKdTree<f64, u64, 3, 32>;

/// Static k-d tree over a fixed point set. Query results are returned as
/// indices into that set, ordered by (distance, index) so that ties resolve
/// the same way on every run.
pub struct SpatialIndex {
    tree: Tree,
    len: usize,
}

impl SpatialIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let raw: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        Self {
            tree: Tree::new_from_slice(&raw),
            len: points.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The `k` nearest points to `query` (including a point at distance 0,
    /// if any), nearest first.
    pub fn nearest(&self, query: &Vec3, k: usize) -> Vec<usize> {
        let k = k.min(self.len);
        let Some(k) = NonZero::new(k) else {
            return Vec::new();
        };
        let mut hits: Vec<(f64, usize)> = self
            .tree
            .nearest_n::<SquaredEuclidean>(&[query.x, query.y, query.z], k)
            .into_iter()
            .map(|nn| (nn.distance, nn.item as usize))
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits.into_iter().map(|(_, i)| i).collect()
    }

    /// Every point within `radius` of `query`, sorted by index.
    pub fn within(&self, query: &Vec3, radius: f64) -> Vec<usize> {
        let mut hits: Vec<usize> = self
            .tree
            .within_unsorted::<SquaredEuclidean>(&[query.x, query.y, query.z], radius * radius)
            .into_iter()
            .map(|nn| nn.item as usize)
            .collect();
        hits.sort_unstable();
        hits
    }
}

/// Median distance from each point to its nearest other point.
pub fn median_spacing(points: &[Vec3]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let index = SpatialIndex::new(points);
    let mut gaps: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            index
                .nearest(p, 2)
                .into_iter()
                .find(|&j| j != i)
                .map(|j| (points[j] - p).norm())
                .unwrap_or(0.0)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_brute_force() {
        let pts: Vec<Vec3> = (0..200)
            .map(|i| {
                let t = i as f64;
                Vec3::new((t * 0.37).sin() * 10.0, (t * 0.11).cos() * 7.0, t * 0.05)
            })
            .collect();
        let index = SpatialIndex::new(&pts);
        let q = Vec3::new(1.0, 2.0, 3.0);
        let got = index.nearest(&q, 7);
        let mut brute: Vec<(f64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - q).norm_squared(), i))
            .collect();
        brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = brute[..7].iter().map(|x| x.1).collect();
        assert_eq!(got, want);

        let within = index.within(&q, 4.0);
        let want: Vec<usize> = (0..pts.len())
            .filter(|&i| (pts[i] - q).norm() <= 4.0)
            .collect();
        assert_eq!(within, want);
    }

    #[test]
    fn spacing_of_grid() {
        let pts: Vec<Vec3> = (0..10)
            .flat_map(|i| (0..10).map(move |j| Vec3::new(i as f64 * 2.0, j as f64 * 2.0, 0.0)))
            .collect();
        assert!((median_spacing(&pts) - 2.0).abs() < 1e-12);
    }
}
