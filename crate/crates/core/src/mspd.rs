//! Multitype sticky particle dynamics.
//!
//! Each type runs its own sticky dynamics with velocities frozen from the
//! rank statistics of the configuration. When particles of different types
//! meet, all velocities are recomputed from the new ranks and coincident
//! same-type blocks are re-split; the process then restarts.

use crate::configuration::{Configuration, ParticleId};
use crate::error::{Error, Result};
use crate::fields::FieldSpec;
use crate::spd::{clusters_unchecked, pos_tol, Chain, MergeEvent};

/// Pairs (α:i, β:j) with α < β and x_i^α < x_j^β, in lexicographic order.
pub fn crossing_set(x: &Configuration) -> Vec<(ParticleId, ParticleId)> {
    let mut out = Vec::new();
    for alpha in 0..x.d() {
        for beta in alpha + 1..x.d() {
            let row_b = x.positions(beta);
            for (i, &xa) in x.positions(alpha).iter().enumerate() {
                let first = row_b.partition_point(|&xb| xb <= xa);
                for j in first..row_b.len() {
                    out.push((ParticleId::new(alpha, i), ParticleId::new(beta, j)));
                }
            }
        }
    }
    out
}

/// N(x), the cardinality of the crossing set.
pub fn crossing_count(x: &Configuration) -> usize {
    count_rows(x.rows())
}

fn count_rows(rows: &[Vec<f64>]) -> usize {
    let mut total = 0;
    for alpha in 0..rows.len() {
        for beta in alpha + 1..rows.len() {
            let row_b = &rows[beta];
            total += rows[alpha]
                .iter()
                .map(|&xa| row_b.len() - row_b.partition_point(|&xb| xb <= xa))
                .sum::<usize>();
        }
    }
    total
}

/// Rank vector ω_{γ:k}(x): entry γ' is the fraction of type-γ' particles
/// already crossed by γ:k. The particle's own entry is NaN.
pub fn ranks(x: &Configuration, id: ParticleId) -> Vec<f64> {
    let mut out = vec![f64::NAN; x.d()];
    rank_into(x.rows(), id.gamma, x.position(id), &mut out);
    out
}

fn rank_into(rows: &[Vec<f64>], gamma: usize, xk: f64, out: &mut [f64]) {
    for (g, row) in rows.iter().enumerate() {
        let n = row.len() as f64;
        out[g] = match g.cmp(&gamma) {
            std::cmp::Ordering::Less => row.partition_point(|&y| y < xk) as f64 / n,
            std::cmp::Ordering::Greater => row.partition_point(|&y| y <= xk) as f64 / n,
            std::cmp::Ordering::Equal => f64::NAN,
        };
    }
}

fn check_dims(x: &Configuration, spec: &FieldSpec) -> Result<()> {
    if x.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            found: x.d(),
        });
    }
    Ok(())
}

/// Initial velocities tλ_k^γ(x): the average of λ^γ over the k-th
/// n-th of its own coordinate, the others frozen at the ranks of γ:k.
pub fn initial_velocities(x: &Configuration, spec: &FieldSpec) -> Result<Vec<Vec<f64>>> {
    check_dims(x, spec)?;
    Ok(velocities_of(x.rows(), spec))
}

fn velocities_of(rows: &[Vec<f64>], spec: &FieldSpec) -> Vec<Vec<f64>> {
    let d = rows.len();
    let mut point = vec![0.0; d];
    rows.iter()
        .enumerate()
        .map(|(gamma, row)| {
            let n = row.len() as f64;
            row.iter()
                .enumerate()
                .map(|(k, &xk)| {
                    rank_into(rows, gamma, xk, &mut point);
                    spec.avg_own_unchecked(gamma, &point, k as f64 / n, (k + 1) as f64 / n)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    SameTypeMerge,
    CrossTypeCollision,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::SameTypeMerge => "merge",
            EventKind::CrossTypeCollision => "collision",
        })
    }
}

/// One entry of the event log.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub position: f64,
    pub participants: Vec<ParticleId>,
    /// Type pairs (α, β), α < β, that crossed here; empty for merges.
    pub type_pairs: Vec<(usize, usize)>,
}

/// Breakpoint of a particle path: from `time` on, the particle sits at
/// `position` and moves with `slope` until the next breakpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub time: f64,
    pub position: f64,
    pub slope: f64,
}

/// Piecewise-linear paths and event log of a run over [0, horizon].
#[derive(Clone, Debug)]
pub struct TrajectoryBundle {
    pub horizon: f64,
    paths: Vec<Vec<Vec<PathPoint>>>,
    pub events: Vec<Event>,
    pub final_state: Configuration,
}

impl TrajectoryBundle {
    pub fn d(&self) -> usize {
        self.paths.len()
    }

    pub fn n(&self) -> usize {
        self.paths[0].len()
    }

    pub fn path(&self, id: ParticleId) -> &[PathPoint] {
        &self.paths[id.gamma][id.k]
    }

    /// Accepts [0, horizon], with a few ulps of slack at the end for grids
    /// computed as horizon·i/m.
    fn check_time(&self, t: f64) -> Result<f64> {
        if t >= 0.0 && t <= self.horizon * (1.0 + 4.0 * f64::EPSILON) {
            Ok(t.min(self.horizon))
        } else {
            Err(Error::OutOfHorizon {
                time: t,
                horizon: self.horizon,
            })
        }
    }

    fn segment(&self, id: ParticleId, t: f64) -> &PathPoint {
        let path = self.path(id);
        let i = path.partition_point(|p| p.time <= t);
        &path[i.saturating_sub(1)]
    }

    pub fn position_at(&self, id: ParticleId, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        let p = self.segment(id, t);
        Ok(if t == p.time {
            p.position
        } else {
            p.position + p.slope * (t - p.time)
        })
    }

    /// Right derivative of the path at t.
    pub fn slope_at(&self, id: ParticleId, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        Ok(self.segment(id, t).slope)
    }

    /// Φ(x; t), read off the paths.
    pub fn configuration_at(&self, t: f64) -> Result<Configuration> {
        let t = self.check_time(t)?;
        if t == self.horizon {
            return Ok(self.final_state.clone());
        }
        let rows = (0..self.d())
            .map(|g| {
                let mut row: Vec<f64> = (0..self.n())
                    .map(|k| {
                        let p = self.segment(ParticleId::new(g, k), t);
                        p.position + p.slope * (t - p.time)
                    })
                    .collect();
                for k in 1..row.len() {
                    row[k] = row[k].max(row[k - 1]);
                }
                row
            })
            .collect();
        Ok(Configuration::from_sorted(rows))
    }

    /// Times of cross-type collisions, in order.
    pub fn collision_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::CrossTypeCollision)
            .map(|e| e.time)
            .collect();
        times.dedup();
        times
    }

    /// Distinct event times of any kind, in order.
    pub fn event_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self.events.iter().map(|e| e.time).collect();
        times.dedup();
        times
    }
}

/// First cross-type collision time and the pairs (α:i, β:j) meeting then.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstCross {
    pub time: f64,
    pub pairs: Vec<(ParticleId, ParticleId)>,
}

#[derive(Clone, Copy, Debug)]
enum Trigger {
    Merge {
        gamma: usize,
        left: usize,
    },
    Cross {
        alpha: usize,
        a: usize,
        beta: usize,
        b: usize,
    },
}

struct Engine<'a> {
    spec: &'a FieldSpec,
    now: f64,
    chains: Vec<Chain>,
    events: Vec<Event>,
    paths: Option<Vec<Vec<Vec<PathPoint>>>>,
    first_cross: Option<FirstCross>,
}

/// Cluster pairs (α cluster, β cluster) that crossed between two states of
/// the chains, per type pair.
type Crossed = Vec<(usize, usize, usize, usize)>;

impl<'a> Engine<'a> {
    fn new(x: &Configuration, spec: &'a FieldSpec, record: bool) -> Self {
        let velocities = velocities_of(x.rows(), spec);
        let chains = x
            .rows()
            .iter()
            .zip(&velocities)
            .map(|(row, v)| Chain::new(clusters_unchecked(row, v)))
            .collect();
        let mut engine = Engine {
            spec,
            now: 0.0,
            chains,
            events: Vec::new(),
            paths: record.then(Vec::new),
            first_cross: None,
        };
        if let Some(paths) = engine.paths.as_mut() {
            *paths = engine
                .chains
                .iter()
                .map(|c| {
                    let pos = c.particle_positions();
                    c.particle_velocities()
                        .into_iter()
                        .zip(pos)
                        .map(|(slope, position)| {
                            vec![PathPoint {
                                time: 0.0,
                                position,
                                slope,
                            }]
                        })
                        .collect()
                })
                .collect();
        }
        engine
    }

    fn next_event(&self) -> Option<(f64, Trigger)> {
        let mut best: Option<(f64, Trigger)> = None;
        let mut offer = |dt: f64, trig: Trigger| {
            if best.as_ref().is_none_or(|(b, _)| dt < *b) {
                best = Some((dt, trig));
            }
        };
        for (gamma, chain) in self.chains.iter().enumerate() {
            if let Some((dt, left)) = chain.next_merge() {
                offer(dt, Trigger::Merge { gamma, left });
            }
        }
        let d = self.chains.len();
        for alpha in 0..d {
            for beta in alpha + 1..d {
                let cb = &self.chains[beta].clusters;
                let mut b = 0;
                for (a, ca) in self.chains[alpha].clusters.iter().enumerate() {
                    // nearest β cluster strictly to the right
                    while b < cb.len() && cb[b].position <= ca.position {
                        b += 1;
                    }
                    if b == cb.len() {
                        break;
                    }
                    let closing = ca.velocity() - cb[b].velocity();
                    if closing > 0.0 {
                        let dt = (cb[b].position - ca.position) / closing;
                        offer(dt, Trigger::Cross { alpha, a, beta, b });
                    }
                }
            }
        }
        best
    }

    /// Snaps approaching clusters of different types that ended up within
    /// the contact tolerance of each other.
    fn snap_across(&mut self) {
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for (g, chain) in self.chains.iter().enumerate() {
            all.extend(chain.clusters.iter().enumerate().map(|(i, c)| (c.position, g, i)));
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for j in 1..all.len() {
            let (p0, g0, i0) = all[j - 1];
            let (p1, g1, i1) = all[j];
            if g0 == g1 {
                continue;
            }
            let gap = p1 - p0;
            let v0 = self.chains[g0].clusters[i0].velocity();
            let v1 = self.chains[g1].clusters[i1].velocity();
            if gap > 0.0 && gap <= pos_tol(p0) && v0 > v1 {
                all[j].0 = p0;
                self.chains[g1].clusters[i1].position = p0;
            }
        }
    }

    fn crossed_since(&self, before: &[Vec<f64>]) -> Crossed {
        let mut out = Vec::new();
        let d = self.chains.len();
        for alpha in 0..d {
            for beta in alpha + 1..d {
                let cb_now = &self.chains[beta].clusters;
                let cb_pre = &before[beta];
                for (a, ca) in self.chains[alpha].clusters.iter().enumerate() {
                    let pre = cb_pre.partition_point(|&p| p <= before[alpha][a]);
                    let post = cb_now.partition_point(|c| c.position <= ca.position);
                    for b in pre..post.max(pre) {
                        out.push((alpha, a, beta, b));
                    }
                }
            }
        }
        out
    }

    fn positions_snapshot(&self) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.clusters.iter().map(|c| c.position).collect())
            .collect()
    }

    /// Moves to `now + dt`, resolves contacts and restarts if particles of
    /// different types met. Returns whether anything happened.
    fn step(&mut self, dt: f64, trigger: Option<Trigger>) -> bool {
        let before = self.positions_snapshot();
        for chain in &mut self.chains {
            chain.advance(dt);
        }
        self.now += dt;
        match trigger {
            Some(Trigger::Merge { gamma, left }) => {
                let p = self.chains[gamma].clusters[left].position;
                self.chains[gamma].clusters[left + 1].position = p;
            }
            Some(Trigger::Cross { alpha, a, beta, b }) => {
                let p = self.chains[alpha].clusters[a].position;
                self.chains[beta].clusters[b].position = p;
            }
            None => {}
        }
        for chain in &mut self.chains {
            chain.settle();
        }
        self.snap_across();
        for chain in &mut self.chains {
            chain.settle();
        }
        let crossed = self.crossed_since(&before);
        let now = self.now;
        let mut merges: Vec<(usize, MergeEvent)> = Vec::new();
        if crossed.is_empty() {
            for (g, chain) in self.chains.iter_mut().enumerate() {
                merges.extend(chain.regroup(now).into_iter().map(|m| (g, m)));
            }
        } else {
            self.log_collisions(&crossed);
            let rows: Vec<Vec<f64>> = self.chains.iter().map(Chain::particle_positions).collect();
            let velocities = velocities_of(&rows, self.spec);
            for (g, chain) in self.chains.iter_mut().enumerate() {
                merges.extend(chain.reset(&velocities[g], now).into_iter().map(|m| (g, m)));
            }
        }
        let happened = !crossed.is_empty() || !merges.is_empty();
        for (g, m) in merges {
            self.events.push(Event {
                time: m.time,
                kind: EventKind::SameTypeMerge,
                position: m.position,
                participants: (m.first..=m.last).map(|k| ParticleId::new(g, k)).collect(),
                type_pairs: Vec::new(),
            });
        }
        self.record_paths();
        happened
    }

    /// Groups crossed cluster pairs into collision points (connected
    /// components) and logs one event per point.
    fn log_collisions(&mut self, crossed: &Crossed) {
        let mut nodes: Vec<(usize, usize)> = Vec::new();
        for &(al, a, be, b) in crossed {
            nodes.push((al, a));
            nodes.push((be, b));
        }
        nodes.sort_unstable();
        nodes.dedup();
        let idx = |key: (usize, usize)| nodes.binary_search(&key).expect("node listed");
        let mut parent: Vec<usize> = (0..nodes.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(al, a, be, b) in crossed {
            let (r1, r2) = (find(&mut parent, idx((al, a))), find(&mut parent, idx((be, b))));
            if r1 != r2 {
                parent[r1.max(r2)] = r1.min(r2);
            }
        }
        let mut groups: Vec<(usize, Event)> = Vec::new();
        for (ni, &(g, c)) in nodes.iter().enumerate() {
            let root = find(&mut parent, ni);
            let cluster = &self.chains[g].clusters[c];
            let pos = groups.iter().position(|(r, _)| *r == root);
            let ev = match pos {
                Some(i) => &mut groups[i].1,
                None => {
                    groups.push((
                        root,
                        Event {
                            time: self.now,
                            kind: EventKind::CrossTypeCollision,
                            position: cluster.position,
                            participants: Vec::new(),
                            type_pairs: Vec::new(),
                        },
                    ));
                    &mut groups.last_mut().expect("just pushed").1
                }
            };
            ev.position = ev.position.min(cluster.position);
            ev.participants
                .extend((cluster.start..cluster.end).map(|k| ParticleId::new(g, k)));
        }
        for &(al, a, be, _) in crossed {
            let root = find(&mut parent, idx((al, a)));
            let ev = &mut groups
                .iter_mut()
                .find(|(r, _)| *r == root)
                .expect("group exists")
                .1;
            if !ev.type_pairs.contains(&(al, be)) {
                ev.type_pairs.push((al, be));
            }
        }
        let mut events: Vec<Event> = groups.into_iter().map(|(_, e)| e).collect();
        for e in &mut events {
            e.participants.sort_unstable();
            e.type_pairs.sort_unstable();
        }
        events.sort_by(|a, b| a.position.total_cmp(&b.position));
        if self.first_cross.is_none() {
            let mut pairs = Vec::new();
            for &(al, a, be, b) in crossed {
                let (ca, cb) = (&self.chains[al].clusters[a], &self.chains[be].clusters[b]);
                for i in ca.start..ca.end {
                    for j in cb.start..cb.end {
                        pairs.push((ParticleId::new(al, i), ParticleId::new(be, j)));
                    }
                }
            }
            pairs.sort_unstable();
            self.first_cross = Some(FirstCross {
                time: self.now,
                pairs,
            });
        }
        self.events.extend(events);
    }

    fn record_paths(&mut self) {
        let Some(paths) = self.paths.as_mut() else {
            return;
        };
        let now = self.now;
        for (g, chain) in self.chains.iter().enumerate() {
            for c in &chain.clusters {
                let v = c.velocity();
                for path in &mut paths[g][c.start..c.end] {
                    let last = *path.last().expect("paths start with a point");
                    let predicted = last.position + last.slope * (now - last.time);
                    if last.slope != v || predicted != c.position {
                        let point = PathPoint {
                            time: now,
                            position: c.position,
                            slope: v,
                        };
                        if last.time == now {
                            *path.last_mut().expect("nonempty") = point;
                        } else {
                            path.push(point);
                        }
                    }
                }
            }
        }
    }

    /// Runs up to `horizon` (possibly infinite), or until the first
    /// cross-type collision when `stop_at_cross` is set.
    fn run(&mut self, horizon: f64, stop_at_cross: bool, budget: usize) -> Result<()> {
        let mut count = 0;
        loop {
            if stop_at_cross && self.first_cross.is_some() {
                return Ok(());
            }
            match self.next_event() {
                Some((dt, trigger)) if self.now + dt <= horizon => {
                    if !self.step(dt, Some(trigger)) {
                        return Err(Error::Stalled(count));
                    }
                    count += 1;
                    if count > budget {
                        return Err(Error::Stalled(count));
                    }
                }
                _ => {
                    if horizon.is_finite() {
                        let dt = horizon - self.now;
                        self.step(dt, None);
                        self.now = horizon;
                    }
                    return Ok(());
                }
            }
        }
    }

    fn finish(self, horizon: f64) -> TrajectoryBundle {
        let rows = self.chains.iter().map(Chain::particle_positions).collect();
        let final_state = Configuration::from_sorted(rows);
        let mut paths = self.paths.unwrap_or_default();
        for (g, row) in final_state.rows().iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                if let Some(path) = paths.get_mut(g).and_then(|p| p.get_mut(k)) {
                    let last = *path.last().expect("nonempty");
                    if last.time < horizon {
                        path.push(PathPoint {
                            time: horizon,
                            position: x,
                            slope: last.slope,
                        });
                    } else {
                        path.last_mut().expect("nonempty").position = x;
                    }
                }
            }
        }
        TrajectoryBundle {
            horizon,
            paths,
            events: self.events,
            final_state,
        }
    }
}

fn event_budget(x: &Configuration) -> usize {
    (crossing_count(x) + 1) * (x.d() * x.n() + 1) + 16
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// Earliest cross-type meeting time t*(x) under typewise dynamics with the
/// initial velocities of x, with the pairs of R(x) meeting at that time.
/// Infinite, with no pairs, when R(x) is empty.
pub fn first_cross_time(x: &Configuration, spec: &FieldSpec) -> Result<FirstCross> {
    check_dims(x, spec)?;
    if crossing_count(x) == 0 {
        return Ok(FirstCross {
            time: f64::INFINITY,
            pairs: Vec::new(),
        });
    }
    let mut engine = Engine::new(x, spec, false);
    engine.run(f64::INFINITY, true, event_budget(x))?;
    Ok(engine.first_cross.unwrap_or(FirstCross {
        time: f64::INFINITY,
        pairs: Vec::new(),
    }))
}

/// Φ(x; t).
pub fn mspd_flow(x: &Configuration, spec: &FieldSpec, t: f64) -> Result<Configuration> {
    check_dims(x, spec)?;
    check_time(t)?;
    let mut engine = Engine::new(x, spec, false);
    engine.run(t, false, event_budget(x))?;
    Ok(engine.finish(t).final_state)
}

/// Full paths and event log of the dynamics over [0, horizon].
pub fn mspd_trajectories(x: &Configuration, spec: &FieldSpec, horizon: f64) -> Result<TrajectoryBundle> {
    check_dims(x, spec)?;
    check_time(horizon)?;
    let mut engine = Engine::new(x, spec, true);
    engine.run(horizon, false, event_budget(x))?;
    Ok(engine.finish(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::spd_flow;

    fn hand_spec() -> FieldSpec {
        // λ¹ = 3 − u², λ² = 0
        FieldSpec::affine(vec![3.0, 0.0], vec![vec![0.0, -1.0], vec![0.0, 0.0]]).unwrap()
    }

    fn cfg(rows: Vec<Vec<f64>>) -> Configuration {
        Configuration::new(rows).unwrap()
    }

    #[test]
    fn crossing_set_examples() {
        let x = cfg(vec![vec![0.0], vec![1.0]]);
        assert_eq!(
            crossing_set(&x),
            vec![(ParticleId::new(0, 0), ParticleId::new(1, 0))]
        );
        assert_eq!(crossing_count(&cfg(vec![vec![2.0], vec![1.0]])), 0);
        assert_eq!(crossing_count(&cfg(vec![vec![1.0], vec![1.0]])), 0);
        let x = cfg(vec![vec![0.0, 2.0], vec![1.0, 3.0], vec![-1.0, 5.0]]);
        assert_eq!(crossing_set(&x).len(), crossing_count(&x));
    }

    #[test]
    fn rank_examples() {
        let x = cfg(vec![vec![0.0, 2.0], vec![1.0, 3.0]]);
        assert_eq!(ranks(&x, ParticleId::new(0, 0))[1], 0.0);
        assert_eq!(ranks(&x, ParticleId::new(0, 1))[1], 0.5);
        assert!(ranks(&x, ParticleId::new(0, 1))[0].is_nan());
        // type 1 sees type 0 particles strictly below
        assert_eq!(ranks(&x, ParticleId::new(1, 0))[0], 0.5);
        let x = cfg(vec![vec![1.0], vec![1.0]]);
        assert_eq!(ranks(&x, ParticleId::new(0, 0))[1], 1.0);
        assert_eq!(ranks(&x, ParticleId::new(1, 0))[0], 0.0);
    }

    #[test]
    fn velocity_examples() {
        let x = cfg(vec![vec![0.0], vec![1.0]]);
        assert_eq!(
            initial_velocities(&x, &hand_spec()).unwrap(),
            vec![vec![3.0], vec![0.0]]
        );
        let burgers = FieldSpec::scalar_affine(0.0, 1.0);
        let v = initial_velocities(&cfg(vec![vec![0.0, 1.0]]), &burgers).unwrap();
        assert_eq!(v, vec![vec![0.25, 0.75]]);
        let bad = cfg(vec![vec![0.0]]);
        assert!(initial_velocities(&bad, &hand_spec()).is_err());
    }

    #[test]
    fn hand_instance() {
        let x = cfg(vec![vec![0.0], vec![1.0]]);
        let fc = first_cross_time(&x, &hand_spec()).unwrap();
        assert!((fc.time - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(fc.pairs.len(), 1);
        let y = mspd_flow(&x, &hand_spec(), 1.0).unwrap();
        assert!((y.positions(0)[0] - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(y.positions(1)[0], 1.0);
        let b = mspd_trajectories(&x, &hand_spec(), 1.0).unwrap();
        assert_eq!(b.events.len(), 1);
        let e = &b.events[0];
        assert_eq!(e.kind, EventKind::CrossTypeCollision);
        assert!((e.time - 1.0 / 3.0).abs() < 1e-15 && (e.position - 1.0).abs() < 1e-15);
        assert_eq!(e.type_pairs, vec![(0, 1)]);
        assert_eq!(b.slope_at(ParticleId::new(0, 0), 0.5).unwrap(), 2.0);
        assert!(b.position_at(ParticleId::new(0, 0), 1.5).is_err());
    }

    #[test]
    fn no_crossing_means_infinite_time() {
        let x = cfg(vec![vec![2.0], vec![1.0]]);
        let fc = first_cross_time(&x, &hand_spec()).unwrap();
        assert!(fc.time.is_infinite() && fc.pairs.is_empty());
    }

    #[test]
    fn zero_time_and_negative_time() {
        let x = cfg(vec![vec![0.0, 0.5], vec![0.25, 1.0]]);
        assert_eq!(mspd_flow(&x, &hand_spec(), 0.0).unwrap(), x);
        assert!(matches!(
            mspd_flow(&x, &hand_spec(), -1.0),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn scalar_reduction_matches_spd() {
        let spec = FieldSpec::scalar_affine(1.0, -1.0);
        let x = cfg(vec![vec![0.0, 0.1, 0.1, 0.4, 0.5, 0.9]]);
        let v = initial_velocities(&x, &spec).unwrap();
        for t in [0.0, 0.05, 0.3, 1.0, 4.0] {
            let (s, _) = spd_flow(x.positions(0), &v[0], t).unwrap();
            assert_eq!(
                mspd_flow(&x, &spec, t).unwrap().positions(0),
                s.positions().as_slice()
            );
        }
    }
}
