//! Global sequencing of local scan paths.
//!
//! A tour visits every local path once, scanning it start-to-end or
//! end-to-start, and moves in straight lines between paths at constant
//! speed. The tour is open: it ends at the last path's exit viewpoint.
//!
//! Total length is the sum of all scan lengths (a constant of the instance,
//! summed in path-id order) plus the transit legs summed in tour order.
//! Every cost in this module is computed that way, so the same tour always
//! yields bit-identical totals whichever routine produced it.

mod pso;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::localpath::LocalPath;

pub use pso::{pso_optimize, pso_optimize_traced, PsoConfig, PsoTrace};

/// Largest instance the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Scan from `start` to `end`.
    Forward,
    /// Scan from `end` to `start`.
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    /// Local-path ids in visiting order.
    pub order: Vec<usize>,
    /// Scan direction of each visited path, aligned with `order`.
    pub directions: Vec<Direction>,
    pub speed: f64,
    /// Per visited path, in tour order (s).
    pub scan_times: Vec<f64>,
    /// Between consecutive visited paths (s); one fewer than `scan_times`.
    pub transit_times: Vec<f64>,
    pub total_length: f64,
    pub total_time: f64,
}

impl Tour {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn scan_time(&self) -> f64 {
        self.scan_times.iter().sum()
    }

    pub fn transit_time(&self) -> f64 {
        self.transit_times.iter().sum()
    }
}

/// Precomputed endpoint geometry for one instance. Endpoint `2k` is path
/// `k`'s start, `2k + 1` its end (paths indexed by position in the input).
pub(crate) struct Instance<'a> {
    paths: &'a [LocalPath],
    slot_of_id: Vec<Option<usize>>,
    dist: Vec<f64>,
    scan_total: f64,
}

impl<'a> Instance<'a> {
    pub(crate) fn new(paths: &'a [LocalPath]) -> Result<Self> {
        let max_id = paths.iter().map(|p| p.id).max().unwrap_or(0);
        let mut slot_of_id = vec![None; max_id + 1];
        for (k, p) in paths.iter().enumerate() {
            if slot_of_id[p.id].replace(k).is_some() {
                return Err(Error::InvalidPermutation(format!(
                    "duplicate path id {}",
                    p.id
                )));
            }
        }
        let ends: Vec<Vec3> = paths
            .iter()
            .flat_map(|p| [p.start.position, p.end.position])
            .collect();
        let m = ends.len();
        let mut dist = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                dist[a * m + b] = (ends[b] - ends[a]).norm();
            }
        }
        let mut by_id: Vec<usize> = (0..paths.len()).collect();
        by_id.sort_by_key(|&k| paths[k].id);
        let scan_total = by_id
            .iter()
            .fold(0.0, |acc, &k| acc + dist[(2 * k) * m + 2 * k + 1]);
        Ok(Self {
            paths,
            slot_of_id,
            dist,
            scan_total,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.paths.len()
    }

    fn d(&self, a: usize, b: usize) -> f64 {
        self.dist[a * 2 * self.paths.len() + b]
    }

    fn entry(slot: usize, dir: Direction) -> usize {
        match dir {
            Direction::Forward => 2 * slot,
            Direction::Reverse => 2 * slot + 1,
        }
    }

    fn exit(slot: usize, dir: Direction) -> usize {
        match dir {
            Direction::Forward => 2 * slot + 1,
            Direction::Reverse => 2 * slot,
        }
    }

    pub(crate) fn id(&self, slot: usize) -> usize {
        self.paths[slot].id
    }

    /// Maps an order of ids to slots, rejecting anything but a permutation.
    pub(crate) fn slots(&self, order: &[usize]) -> Result<Vec<usize>> {
        if order.len() != self.paths.len() {
            return Err(Error::InvalidPermutation(format!(
                "order has {} entries for {} paths",
                order.len(),
                self.paths.len()
            )));
        }
        let mut seen = vec![false; self.paths.len()];
        order
            .iter()
            .map(|&id| {
                let slot =
                    self.slot_of_id.get(id).copied().flatten().ok_or_else(|| {
                        Error::InvalidPermutation(format!("unknown path id {id}"))
                    })?;
                if std::mem::replace(&mut seen[slot], true) {
                    return Err(Error::InvalidPermutation(format!("path id {id} repeated")));
                }
                Ok(slot)
            })
            .collect()
    }

    /// Exact best directions for a fixed slot order: a two-state dynamic
    /// program over the exit endpoint. Ties prefer `Forward`. Returns the
    /// directions and the total length.
    pub(crate) fn best_directions(&self, slots: &[usize]) -> (Vec<Direction>, f64) {
        use Direction::{Forward, Reverse};
        const DIRS: [Direction; 2] = [Forward, Reverse];
        let n = slots.len();
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        let mut cost = [0.0f64; 2];
        let mut back: Vec<[usize; 2]> = Vec::with_capacity(n);
        back.push([0, 0]);
        for i in 1..n {
            let mut next = [f64::INFINITY; 2];
            let mut from = [0usize; 2];
            for (di, &d) in DIRS.iter().enumerate() {
                let entry = Self::entry(slots[i], d);
                for (pi, &p) in DIRS.iter().enumerate() {
                    let c = cost[pi] + self.d(Self::exit(slots[i - 1], p), entry);
                    if c < next[di] {
                        next[di] = c;
                        from[di] = pi;
                    }
                }
            }
            cost = next;
            back.push(from);
        }
        let mut state = if cost[1] < cost[0] { 1 } else { 0 };
        let transit = cost[state];
        let mut dirs = vec![Forward; n];
        for i in (0..n).rev() {
            dirs[i] = DIRS[state];
            state = back[i][state];
        }
        (dirs, self.scan_total + transit)
    }

    /// Length of a fully specified tour, summed the same way as
    /// [`Instance::best_directions`].
    pub(crate) fn length(&self, slots: &[usize], dirs: &[Direction]) -> (Vec<f64>, Vec<f64>, f64) {
        let scans: Vec<f64> = slots.iter().map(|&s| self.d(2 * s, 2 * s + 1)).collect();
        let transits: Vec<f64> = (1..slots.len())
            .map(|i| {
                self.d(
                    Self::exit(slots[i - 1], dirs[i - 1]),
                    Self::entry(slots[i], dirs[i]),
                )
            })
            .collect();
        let transit_total = transits.iter().fold(0.0, |acc, d| acc + d);
        (scans, transits, self.scan_total + transit_total)
    }

    pub(crate) fn tour(&self, slots: &[usize], dirs: Vec<Direction>, speed: f64) -> Tour {
        let (scans, transits, total_length) = self.length(slots, &dirs);
        Tour {
            order: slots.iter().map(|&s| self.id(s)).collect(),
            directions: dirs,
            speed,
            scan_times: scans.into_iter().map(|d| d / speed).collect(),
            transit_times: transits.into_iter().map(|d| d / speed).collect(),
            total_length,
            total_time: total_length / speed,
        }
    }
}

fn check_speed(speed: f64) -> Result<()> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "speed {speed} must be positive"
        )));
    }
    Ok(())
}

/// Time and leg breakdown of a given order and set of directions, at
/// constant `speed` (mm/s).
pub fn tour_cost(
    order: &[usize],
    directions: &[Direction],
    paths: &[LocalPath],
    speed: f64,
) -> Result<Tour> {
    check_speed(speed)?;
    let inst = Instance::new(paths)?;
    let slots = inst.slots(order)?;
    if directions.len() != slots.len() {
        return Err(Error::InvalidParameter(format!(
            "{} directions for {} paths",
            directions.len(),
            slots.len()
        )));
    }
    Ok(inst.tour(&slots, directions.to_vec(), speed))
}

/// Cheapest directions for a fixed order, and the resulting tour.
pub fn optimal_directions(order: &[usize], paths: &[LocalPath], speed: f64) -> Result<Tour> {
    check_speed(speed)?;
    let inst = Instance::new(paths)?;
    let slots = inst.slots(order)?;
    let (dirs, _) = inst.best_directions(&slots);
    Ok(inst.tour(&slots, dirs, speed))
}

/// Global optimum by enumerating every order (lexicographic, first best
/// kept) with optimal directions for each.
pub fn brute_force_tour(paths: &[LocalPath], speed: f64) -> Result<Tour> {
    check_speed(speed)?;
    if paths.is_empty() {
        return Err(Error::EmptyInput("no local paths to order"));
    }
    if paths.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard {
            size: paths.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let inst = Instance::new(paths)?;
    let mut slots: Vec<usize> = (0..inst.len()).collect();
    slots.sort_by_key(|&s| inst.id(s));
    let mut best: Option<(f64, Vec<usize>, Vec<Direction>)> = None;
    loop {
        let (dirs, len) = inst.best_directions(&slots);
        if best.as_ref().is_none_or(|b| len < b.0) {
            best = Some((len, slots.clone(), dirs));
        }
        if !next_permutation(&mut slots) {
            break;
        }
    }
    let (_, slots, dirs) = best.expect("at least one order");
    Ok(inst.tour(&slots, dirs, speed))
}

/// Advances to the next lexicographic permutation; false after the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
