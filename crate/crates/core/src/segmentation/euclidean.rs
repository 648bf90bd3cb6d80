use std::collections::VecDeque;

use crate::cloudio::FeatureCloud;
use crate::spatial::SpatialIndex;

use super::Region;

/// Splits a region into the connected components of its radius-neighbor
/// graph. Components smaller than `min_size` are merged into the large
/// component with the nearest centroid, so no point is dropped. If no
/// component reaches `min_size`, the largest one absorbs the rest.
///
/// Output regions keep the input's flags and are ordered by their smallest
/// member index.
pub fn euclidean_split(
    region: &Region,
    cloud: &FeatureCloud,
    radius: f64,
    min_size: usize,
) -> Vec<Region> {
    let members = &region.indices;
    if members.is_empty() {
        return Vec::new();
    }
    let points: Vec<_> = members.iter().map(|&i| cloud.positions[i]).collect();
    let index = SpatialIndex::new(&points);

    let mut component = vec![usize::MAX; points.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..points.len() {
        if component[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut group = vec![start];
        component[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            for nb in index.within(&points[cur], radius) {
                if component[nb] == usize::MAX {
                    component[nb] = id;
                    group.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        groups.push(group);
    }

    if groups.len() == 1 {
        return vec![region.clone()];
    }

    let mut large: Vec<usize> = (0..groups.len())
        .filter(|&g| groups[g].len() >= min_size)
        .collect();
    if large.is_empty() {
        let biggest = (0..groups.len())
            .max_by_key(|&g| (groups[g].len(), std::cmp::Reverse(g)))
            .unwrap();
        large.push(biggest);
    }
    let centroid_of = |g: &[usize]| crate::geometry::centroid(g.iter().map(|&k| &points[k]));
    let large_centroids: Vec<_> = large.iter().map(|&g| centroid_of(&groups[g])).collect();

    let mut merged: Vec<Vec<usize>> = large.iter().map(|&g| groups[g].clone()).collect();
    for (g, group) in groups.iter().enumerate() {
        if large.contains(&g) {
            continue;
        }
        let c = centroid_of(group);
        let target = (0..large.len())
            .min_by(|&a, &b| {
                (large_centroids[a] - c)
                    .norm()
                    .total_cmp(&(large_centroids[b] - c).norm())
            })
            .unwrap();
        merged[target].extend_from_slice(group);
    }

    let mut out: Vec<Region> = merged
        .into_iter()
        .map(|g| {
            let mut r = Region::new(cloud, g.into_iter().map(|k| members[k]).collect());
            r.label = region.label;
            r.is_planar = region.is_planar;
            r.plane = region.plane;
            r.feature_centroid = region.feature_centroid;
            r
        })
        .collect();
    out.sort_by_key(|r| r.indices[0]);
    out
}
