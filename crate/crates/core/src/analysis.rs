//! Quantitative checks: stability constants and estimates, spacing of
//! rarefaction coordinates, time bounds and configuration diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::configuration::{Configuration, ParticleId};
use crate::error::{domain, Error, Result};
use crate::fields::{FieldConstants, FieldSpec};
use crate::measures::check_exponent;
use crate::mspd::{crossing_count, mspd_trajectories, EventKind, TrajectoryBundle};
use crate::spd::pos_tol;

/// Absolute slack on every inequality check.
pub const SLACK: f64 = 1e-9;

/// Relative time tolerance below which distinct event times are deemed
/// indistinguishable.
pub const EPS_TIME: f64 = 1e-10;

/// The stability constant ℒ_p of the multitype dynamics.
pub fn stability_constants(p: f64, d: usize, lipschitz: f64, ush_gap: f64) -> Result<f64> {
    check_exponent(p)?;
    if d == 0 {
        return Err(domain("d must be positive"));
    }
    if !(lipschitz >= 0.0) {
        return Err(domain(format!(
            "Lipschitz constant must be >= 0, got {lipschitz}"
        )));
    }
    if !(ush_gap > 0.0) {
        return Err(domain(format!("hyperbolicity gap must be > 0, got {ush_gap}")));
    }
    if d == 1 {
        return Ok(1.0);
    }
    let (d, dm1) = (d as f64, (d - 1) as f64);
    let theta = 3.0 * lipschitz / ush_gap;
    let e = (theta * dm1).exp();
    let l1 = (1.0 + 4.0 * theta * dm1 * e) * (2.0 * theta * theta * d * dm1 * e).exp();
    let linf = (1.0 + theta * d * l1) * e;
    Ok(if p.is_infinite() {
        linf
    } else {
        l1.powf(1.0 / p) * linf.powf(1.0 - 1.0 / p)
    })
}

/// Normalised distance ((1/n) Σ_{γ,k} |x_k^γ − y_k^γ|^p)^{1/p}, or the max
/// for p = ∞.
pub fn config_lp_distance(x: &Configuration, y: &Configuration, p: f64) -> Result<f64> {
    check_exponent(p)?;
    x.same_shape(y)?;
    let diffs = x
        .rows()
        .iter()
        .zip(y.rows())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()));
    Ok(if p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else {
        (diffs.map(|t| t.powf(p)).sum::<f64>() / x.n() as f64).powf(1.0 / p)
    })
}

/// d rows of n i.i.d. uniform positions on [0, width], each sorted.
pub fn random_configuration<R: Rng>(rng: &mut R, d: usize, n: usize, width: f64) -> Configuration {
    let rows = (0..d)
        .map(|_| {
            let mut row: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * width).collect();
            row.sort_by(f64::total_cmp);
            row
        })
        .collect();
    Configuration::from_sorted(rows)
}

/// Random affine fields with coefficients in [−coupling, coupling] (own
/// coefficient in [0, coupling] when `rarefaction` is set) and constants
/// chosen so that every gap inf λ^γ − sup λ^{γ+1} lies in [0.5, 1.5].
pub fn random_affine_field<R: Rng>(rng: &mut R, d: usize, coupling: f64, rarefaction: bool) -> FieldSpec {
    let matrix: Vec<Vec<f64>> = (0..d)
        .map(|g| {
            (0..d)
                .map(|h| {
                    if rarefaction && g == h {
                        rng.random::<f64>() * coupling
                    } else {
                        (2.0 * rng.random::<f64>() - 1.0) * coupling
                    }
                })
                .collect()
        })
        .collect();
    let neg = |row: &[f64]| row.iter().map(|a| a.min(0.0)).sum::<f64>();
    let pos = |row: &[f64]| row.iter().map(|a| a.max(0.0)).sum::<f64>();
    let mut constants = vec![0.0; d];
    constants[d - 1] = 2.0 * rng.random::<f64>() - 1.0;
    for g in (0..d - 1).rev() {
        let gap = 0.5 + rng.random::<f64>();
        constants[g] = constants[g + 1] + pos(&matrix[g + 1]) - neg(&matrix[g]) + gap;
    }
    FieldSpec::affine(constants, matrix).expect("finite coefficients")
}

/// (1/ℒ_USH)·max{x_j^β − x_i^α : (α:i, β:j) ∈ R(x)}, or 0 when R(x) is empty.
pub fn tbar_bound(x: &Configuration, spec: &FieldSpec) -> Result<f64> {
    if x.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            found: x.d(),
        });
    }
    Ok(tbar_with_gap(x, spec.constants()?.ush_gap))
}

pub fn tbar_with_gap(x: &Configuration, ush_gap: f64) -> f64 {
    let mut widest: f64 = 0.0;
    for alpha in 0..x.d() {
        let lo = x.positions(alpha)[0];
        for beta in alpha + 1..x.d() {
            let hi = x.positions(beta)[x.n() - 1];
            if lo < hi {
                widest = widest.max(hi - lo);
            }
        }
    }
    if widest > 0.0 {
        widest / ush_gap
    } else {
        0.0
    }
}

/// Worst case of one trial of the stability check for one exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub p: f64,
    /// ℒ_p used on the right-hand side.
    pub constant: f64,
    pub horizon: f64,
    pub grid_points: usize,
    /// max over the grid of lhs / rhs (0 when both sides vanish).
    pub worst_ratio: f64,
    /// max over the grid of lhs − rhs.
    pub worst_excess: f64,
    pub violated: bool,
}

/// Outcome of [`check_stability`]: one row per (trial, p).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StabilityReport {
    pub rows: Vec<TrialRow>,
}

impl StabilityReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }

    pub fn worst_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.worst_ratio).fold(0.0, f64::max)
    }

    pub fn merge(mut self, other: StabilityReport) -> StabilityReport {
        self.rows.extend(other.rows);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySettings {
    pub n: usize,
    pub ps: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub grid_points: usize,
    /// Width of the window the random positions are drawn from.
    pub width: f64,
}

impl Default for StabilitySettings {
    fn default() -> Self {
        StabilitySettings {
            n: 4,
            ps: vec![1.0, 2.0, f64::INFINITY],
            trials: 100,
            seed: 0,
            grid_points: 20,
            width: 1.0,
        }
    }
}

fn grid(horizon: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| horizon * i as f64 / (points - 1) as f64)
        .collect()
}

/// Evaluates ||Φ(x;s) − Φ(y;t)||_p ≤ ℒ_p||x − y||_p + |t − s|L_{C,p} for all
/// (s, t) on a grid of `grid_points` times up to 1.2·max(t̄(x), t̄(y)).
/// Rows carry `trial = 0` and `seed = 0`.
pub fn stability_for_pair(
    spec: &FieldSpec,
    constants: &FieldConstants,
    x: &Configuration,
    y: &Configuration,
    ps: &[f64],
    grid_points: usize,
) -> Result<Vec<TrialRow>> {
    x.same_shape(y)?;
    let tb = tbar_with_gap(x, constants.ush_gap).max(tbar_with_gap(y, constants.ush_gap));
    let horizon = if tb > 0.0 { 1.2 * tb } else { 1.0 };
    let times = grid(horizon, grid_points);
    let bx = mspd_trajectories(x, spec, horizon)?;
    let by = mspd_trajectories(y, spec, horizon)?;
    let cx = times
        .iter()
        .map(|&t| bx.configuration_at(t))
        .collect::<Result<Vec<_>>>()?;
    let cy = times
        .iter()
        .map(|&t| by.configuration_at(t))
        .collect::<Result<Vec<_>>>()?;
    ps.iter()
        .map(|&p| {
            let lp = stability_constants(p, x.d(), constants.lipschitz, constants.ush_gap)?;
            let bound = constants.bound(p);
            let dist = config_lp_distance(x, y, p)?;
            // ℒ_p can overflow; x = y must not turn into ∞·0
            let base = if dist == 0.0 { 0.0 } else { lp * dist };
            let (mut ratio, mut excess): (f64, f64) = (0.0, f64::NEG_INFINITY);
            for (i, s) in times.iter().enumerate() {
                for (j, t) in times.iter().enumerate() {
                    let lhs = config_lp_distance(&cx[i], &cy[j], p)?;
                    let rhs = base + (t - s).abs() * bound;
                    excess = excess.max(lhs - rhs);
                    let r = if rhs > 0.0 {
                        lhs / rhs
                    } else if lhs <= SLACK {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    ratio = ratio.max(r);
                }
            }
            Ok(TrialRow {
                trial: 0,
                seed: 0,
                d: x.d(),
                n: x.n(),
                p,
                constant: lp,
                horizon,
                grid_points: times.len(),
                worst_ratio: ratio,
                worst_excess: excess,
                violated: excess > SLACK,
            })
        })
        .collect()
}

/// Random-pair stability check. Trial i draws from a generator seeded with
/// `seed + i`; even trials compare x with a small perturbation of itself,
/// odd trials with an independent configuration.
pub fn check_stability(spec: &FieldSpec, settings: &StabilitySettings) -> Result<StabilityReport> {
    let constants = spec.constants()?;
    let d = spec.d();
    let rows: Vec<Vec<TrialRow>> = (0..settings.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = settings.seed.wrapping_add(trial as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_configuration(&mut rng, d, settings.n, settings.width);
            let y = if trial % 2 == 0 {
                let scale = 0.1 * settings.width * rng.random::<f64>();
                let rows = x
                    .rows()
                    .iter()
                    .map(|row| {
                        let mut r: Vec<f64> = row
                            .iter()
                            .map(|v| v + scale * (2.0 * rng.random::<f64>() - 1.0))
                            .collect();
                        r.sort_by(f64::total_cmp);
                        r
                    })
                    .collect();
                Configuration::from_sorted(rows)
            } else {
                random_configuration(&mut rng, d, settings.n, settings.width)
            };
            let mut rows = stability_for_pair(spec, &constants, &x, &y, &settings.ps, settings.grid_points)?;
            for r in &mut rows {
                r.trial = trial;
                r.seed = seed;
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        rows: rows.into_iter().flatten().collect(),
    })
}

/// κ = exp((d − 1)L/ℒ_USH).
pub fn kappa(constants: &FieldConstants) -> f64 {
    let d = constants.d();
    if d == 1 {
        1.0
    } else {
        ((d - 1) as f64 * constants.lipschitz / constants.ush_gap).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingReport {
    pub kappa: f64,
    /// min over times and positive initial gaps of gap(t)·κ / gap(0).
    pub worst_ratio: f64,
    pub violations: usize,
    pub checks: usize,
}

/// Checks that adjacent type-γ gaps never fall below their initial value
/// divided by κ, at the given times and at every event time before the
/// last of them.
pub fn check_rarefaction_spacing(
    spec: &FieldSpec,
    gamma: usize,
    x: &Configuration,
    times: &[f64],
) -> Result<SpacingReport> {
    if gamma >= spec.d() {
        return Err(domain(format!("type index {gamma} out of range")));
    }
    if spec.own_coefficient(gamma).is_some_and(|a| a < 0.0) {
        return Err(Error::NotRarefactionCoordinate(gamma));
    }
    let constants = spec.constants()?;
    let kappa = kappa(&constants);
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let bundle = mspd_trajectories(x, spec, horizon)?;
    let mut all: Vec<f64> = times.to_vec();
    all.extend(bundle.event_times());
    all.sort_by(f64::total_cmp);
    all.dedup();
    let initial = x.positions(gamma);
    let mut report = SpacingReport {
        kappa,
        worst_ratio: f64::INFINITY,
        violations: 0,
        checks: 0,
    };
    for t in all {
        let y = bundle.configuration_at(t)?;
        let row = y.positions(gamma);
        for k in 1..row.len() {
            let g0 = initial[k] - initial[k - 1];
            if g0 <= 0.0 {
                continue;
            }
            let g = row[k] - row[k - 1];
            report.checks += 1;
            report.worst_ratio = report.worst_ratio.min(g * kappa / g0);
            if g < g0 / kappa - SLACK {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Goodness {
    Good,
    NotGood,
    /// Some events are closer in time than the resolution ε_time.
    Indeterminate,
}

/// A cross-type collision a × b of the diagnosed run.
#[derive(Clone, Debug, PartialEq)]
pub struct Collision {
    pub time: f64,
    pub position: f64,
    pub type_pairs: Vec<(usize, usize)>,
    pub participants: Vec<ParticleId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    /// No two particles of different types share a position.
    pub in_interior: bool,
    pub goodness: Goodness,
    pub crossing_count: usize,
    /// Collisions in their admissible numbering (by time, then position).
    pub collisions: Vec<Collision>,
    /// Arcs (m', m, γ) of the collision graph, on numbered collisions.
    pub arcs: Vec<(usize, usize, usize)>,
    /// Every arc satisfies m' < m.
    pub numbering_valid: bool,
}

/// Diagnoses x: interior membership, goodness, and the collision graph of
/// the run up to `horizon`.
pub fn classify_configuration(x: &Configuration, spec: &FieldSpec, horizon: f64) -> Result<Classification> {
    let in_interior = (0..x.d()).all(|a| {
        (a + 1..x.d()).all(|b| {
            let rb = x.positions(b);
            x.positions(a)
                .iter()
                .all(|v| rb.binary_search_by(|w| w.total_cmp(v)).is_err())
        })
    });
    let n_cross = crossing_count(x);
    let bundle = mspd_trajectories(x, spec, horizon)?;
    let (collisions, arcs) = collision_graph(&bundle);
    let numbering_valid = arcs.iter().all(|&(a, b, _)| a < b);
    let goodness = if !in_interior {
        Goodness::NotGood
    } else if n_cross == 0 {
        Goodness::Good
    } else {
        goodness(&bundle, &collisions, horizon)
    };
    Ok(Classification {
        in_interior,
        goodness,
        crossing_count: n_cross,
        collisions,
        arcs,
        numbering_valid,
    })
}

fn collision_graph(bundle: &TrajectoryBundle) -> (Vec<Collision>, Vec<(usize, usize, usize)>) {
    let mut collisions: Vec<Collision> = bundle
        .events
        .iter()
        .filter(|e| e.kind == EventKind::CrossTypeCollision)
        .map(|e| Collision {
            time: e.time,
            position: e.position,
            type_pairs: e.type_pairs.clone(),
            participants: e.participants.clone(),
        })
        .collect();
    collisions.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.position.total_cmp(&b.position)));
    let mut last: std::collections::HashMap<ParticleId, usize> = std::collections::HashMap::new();
    let mut arcs = Vec::new();
    for (m, c) in collisions.iter().enumerate() {
        for id in &c.participants {
            if let Some(prev) = last.insert(*id, m) {
                if !arcs.contains(&(prev, m, id.gamma)) {
                    arcs.push((prev, m, id.gamma));
                }
            }
        }
    }
    arcs.sort_unstable();
    (collisions, arcs)
}

fn goodness(bundle: &TrajectoryBundle, collisions: &[Collision], horizon: f64) -> Goodness {
    let eps_t = EPS_TIME * horizon.max(f64::MIN_POSITIVE);
    let mut verdict = Goodness::Good;
    let mut flag = |dt: f64| {
        if dt == 0.0 {
            verdict = Goodness::NotGood;
        } else if dt <= eps_t && verdict == Goodness::Good {
            verdict = Goodness::Indeterminate;
        }
    };
    let near = |a: f64, b: f64| (a - b).abs() <= 1e3 * pos_tol(a.abs().max(b.abs()));
    for (i, c) in collisions.iter().enumerate() {
        if c.type_pairs.len() > 1 {
            flag(0.0);
        }
        for other in &collisions[i + 1..] {
            if near(c.position, other.position) && other.type_pairs != c.type_pairs {
                flag((other.time - c.time).abs());
            }
        }
        for merge in bundle
            .events
            .iter()
            .filter(|e| e.kind == EventKind::SameTypeMerge)
        {
            if near(c.position, merge.position) {
                flag((merge.time - c.time).abs());
            }
        }
    }
    verdict
}
