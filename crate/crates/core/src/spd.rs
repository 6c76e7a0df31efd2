//! Scalar sticky particle dynamics.
//!
//! Particles move at constant speed and stick on contact; a cluster moves at
//! the mean initial velocity of its members. The cluster chain defined here
//! is also the per-type building block of the multitype engine.

use crate::error::{Error, Result};

/// Relative tolerance under which two positions are taken to coincide.
pub const EPS_POS: f64 = 1e-12;

/// Same relative tolerance, for deciding ties between mean velocities.
pub const EPS_VEL: f64 = 1e-12;

pub(crate) fn pos_tol(x: f64) -> f64 {
    EPS_POS * (1.0 + x.abs())
}

fn vel_tol(a: f64, b: f64) -> f64 {
    EPS_VEL * (1.0 + a.abs().max(b.abs()))
}

/// A block of consecutive particles `start..end` sharing one position.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub start: usize,
    pub end: usize,
    pub position: f64,
    /// Sum of the members' initial velocities.
    pub momentum: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn velocity(&self) -> f64 {
        self.momentum / self.len() as f64
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.start..self.end).contains(&k)
    }
}

/// Pool-adjacent-violators on consecutive units `(start, end, momentum)` at a
/// common position: neighbours merge while the left mean is not smaller than
/// the right mean, which yields the segments of the greatest convex minorant
/// of the cumulative momentum.
fn pool(units: impl IntoIterator<Item = (usize, usize, f64)>, position: f64, out: &mut Vec<Cluster>) {
    let base = out.len();
    for (start, end, momentum) in units {
        out.push(Cluster {
            start,
            end,
            position,
            momentum,
        });
        while out.len() >= base + 2 {
            let r = &out[out.len() - 1];
            let l = &out[out.len() - 2];
            let (vl, vr) = (l.velocity(), r.velocity());
            if vl >= vr - vel_tol(vl, vr) {
                let r = out.pop().expect("two clusters on the stack");
                let l = out.last_mut().expect("two clusters on the stack");
                l.end = r.end;
                l.momentum += r.momentum;
            } else {
                break;
            }
        }
    }
}

fn check_sorted(positions: &[f64], velocities: &[f64]) -> Result<()> {
    if positions.len() != velocities.len() {
        return Err(Error::DimensionMismatch {
            expected: positions.len(),
            found: velocities.len(),
        });
    }
    if let Some(i) = positions.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(Error::UnsortedInput { index: i + 1 });
    }
    Ok(())
}

/// Initial clusters of a sorted configuration: inside every block of equal
/// positions, the largest sub-blocks satisfying the stability condition.
pub fn initial_clusters(positions: &[f64], velocities: &[f64]) -> Result<Vec<Cluster>> {
    check_sorted(positions, velocities)?;
    Ok(clusters_unchecked(positions, velocities))
}

pub(crate) fn clusters_unchecked(positions: &[f64], velocities: &[f64]) -> Vec<Cluster> {
    let n = positions.len();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && positions[j] == positions[i] {
            j += 1;
        }
        pool((i..j).map(|k| (k, k + 1, velocities[k])), positions[i], &mut out);
        i = j;
    }
    out
}

/// A same-type merge: the particles `first..=last` now form one cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeEvent {
    pub time: f64,
    pub position: f64,
    pub first: usize,
    pub last: usize,
    /// Number of clusters that met.
    pub parts: usize,
    /// Velocity of the resulting cluster.
    pub velocity: f64,
}

/// The ordered clusters of one type.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub clusters: Vec<Cluster>,
}

impl Chain {
    pub fn new(clusters: Vec<Cluster>) -> Self {
        Chain { clusters }
    }

    /// Earliest meeting time from now of two adjacent clusters, with the
    /// index of the left one.
    pub fn next_merge(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, w) in self.clusters.windows(2).enumerate() {
            let (vl, vr) = (w[0].velocity(), w[1].velocity());
            if vl > vr {
                let dt = ((w[1].position - w[0].position) / (vl - vr)).max(0.0);
                if best.is_none_or(|(b, _)| dt < b) {
                    best = Some((dt, i));
                }
            }
        }
        best
    }

    pub fn advance(&mut self, dt: f64) {
        if dt == 0.0 {
            return;
        }
        for c in &mut self.clusters {
            c.position += c.velocity() * dt;
        }
    }

    /// Restores ordering after rounding and snaps approaching neighbours
    /// closer than the contact tolerance onto each other.
    pub fn settle(&mut self) -> bool {
        let mut moved = false;
        for i in 1..self.clusters.len() {
            let pl = self.clusters[i - 1].position;
            let vl = self.clusters[i - 1].velocity();
            let c = &mut self.clusters[i];
            let gap = c.position - pl;
            if gap < 0.0 || (gap <= pos_tol(pl) && gap > 0.0 && vl > c.velocity()) {
                c.position = pl;
                moved = true;
            }
        }
        moved
    }

    /// Pools runs of coincident clusters; returns the merges performed.
    pub fn regroup(&mut self, time: f64) -> Vec<MergeEvent> {
        let old = std::mem::take(&mut self.clusters);
        let mut out = Vec::with_capacity(old.len());
        let mut events = Vec::new();
        let mut i = 0;
        while i < old.len() {
            let mut j = i + 1;
            while j < old.len() && old[j].position == old[i].position {
                j += 1;
            }
            let before = out.len();
            pool(
                old[i..j].iter().map(|c| (c.start, c.end, c.momentum)),
                old[i].position,
                &mut out,
            );
            record_merges(&old[i..j], &out[before..], time, &mut events);
            i = j;
        }
        self.clusters = out;
        events
    }

    /// Re-splits every coincident block from scratch with new particle
    /// velocities; returns the clusters built from several old ones.
    pub fn reset(&mut self, velocities: &[f64], time: f64) -> Vec<MergeEvent> {
        let positions = self.particle_positions();
        let new = clusters_unchecked(&positions, velocities);
        let mut events = Vec::new();
        record_merges(&self.clusters, &new, time, &mut events);
        self.clusters = new;
        events
    }

    pub fn particle_positions(&self) -> Vec<f64> {
        let n = self.clusters.last().map_or(0, |c| c.end);
        let mut out = Vec::with_capacity(n);
        for c in &self.clusters {
            out.extend(std::iter::repeat_n(c.position, c.len()));
        }
        out
    }

    pub fn particle_velocities(&self) -> Vec<f64> {
        let n = self.clusters.last().map_or(0, |c| c.end);
        let mut out = Vec::with_capacity(n);
        for c in &self.clusters {
            out.extend(std::iter::repeat_n(c.velocity(), c.len()));
        }
        out
    }

    /// Index of the cluster containing particle `k`.
    pub fn cluster_of(&self, k: usize) -> usize {
        self.clusters.partition_point(|c| c.end <= k)
    }
}

/// Clusters of `new` assembled from more than one cluster of `old`.
fn record_merges(old: &[Cluster], new: &[Cluster], time: f64, events: &mut Vec<MergeEvent>) {
    for c in new {
        let parts = old.iter().filter(|o| o.start < c.end && c.start < o.end).count();
        if parts > 1 {
            events.push(MergeEvent {
                time,
                position: c.position,
                first: c.start,
                last: c.end - 1,
                parts,
                velocity: c.velocity(),
            });
        }
    }
}

/// State of a scalar sticky particle system at some time.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarState {
    pub time: f64,
    /// Initial velocity vector λ̄.
    pub initial_velocities: Vec<f64>,
    pub chain: Chain,
}

impl ScalarState {
    pub fn positions(&self) -> Vec<f64> {
        self.chain.particle_positions()
    }

    /// Current velocity of each particle (that of its cluster).
    pub fn velocities(&self) -> Vec<f64> {
        self.chain.particle_velocities()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.chain.clusters
    }
}

/// Runs the sticky particle dynamics started at `positions` with initial
/// velocities `velocities` up to time `t`.
pub fn spd_flow(positions: &[f64], velocities: &[f64], t: f64) -> Result<(ScalarState, Vec<MergeEvent>)> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let clusters = initial_clusters(positions, velocities)?;
    let mut chain = Chain::new(clusters);
    let mut now = 0.0;
    let mut log = Vec::new();
    // each event merges at least two clusters
    let budget = positions.len() + 1;
    let mut events = 0;
    loop {
        let next = chain.next_merge();
        let Some((dt, i)) = next.filter(|(dt, _)| now + dt <= t) else {
            chain.advance(t - now);
            chain.settle();
            log.extend(chain.regroup(t));
            break;
        };
        chain.advance(dt);
        now += dt;
        let snap = chain.clusters[i].position;
        chain.clusters[i + 1].position = snap;
        chain.settle();
        let merged = chain.regroup(now);
        if merged.is_empty() {
            return Err(Error::Stalled(events));
        }
        log.extend(merged);
        events += 1;
        if events > budget {
            return Err(Error::Stalled(events));
        }
    }
    Ok((
        ScalarState {
            time: t,
            initial_velocities: velocities.to_vec(),
            chain,
        },
        log,
    ))
}
