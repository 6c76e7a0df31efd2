//! Subcommands. Each one computes everything in memory and hands back the
//! CSV files to write, so a failure never leaves partial output behind.

use anyhow::{bail, ensure, Context, Result};
use log::{debug, info};
use mspd_core::fields::Field;
use mspd_core::{
    check_rarefaction_spacing, check_stability, config_lp_distance, crossing_count, mspd_flow,
    mspd_trajectories, random_configuration, stability_for_pair, tbar_bound, wasserstein_p, Configuration,
    Error as CoreError, InitialProfile, RiemannFan, ScalarOracle, SolutionSnapshot, StabilitySettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scenario::Scenario;

pub struct Output {
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub violations: usize,
    /// One line for standard output, printed by checks.
    pub summary: Option<String>,
}

impl Output {
    fn clean(files: Vec<(&'static str, Vec<u8>)>) -> Self {
        Output {
            files,
            violations: 0,
            summary: None,
        }
    }

    fn report(name: &str, table: Table, rows: usize, violations: usize, extra: String) -> Result<Self> {
        Ok(Output {
            files: vec![("report.csv", table.finish()?)],
            violations,
            summary: Some(format!("{name}: {rows} rows, {violations} violations{extra}")),
        })
    }
}

/// Builds one CSV file in memory.
struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Table(w))
    }

    fn row(&mut self, fields: Vec<String>) -> Result<()> {
        self.0.write_record(fields)?;
        Ok(())
    }

    fn finish(self) -> Result<Vec<u8>> {
        self.0
            .into_inner()
            .map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
    }
}

macro_rules! cells {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

fn sorted_unique(mut t: Vec<f64>) -> Vec<f64> {
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

pub fn simulate(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let x = s.initial_configuration()?;
    let horizon = s.horizon()?;
    let bundle = mspd_trajectories(&x, spec, horizon)?;
    info!("{} events up to t = {horizon}", bundle.events.len());

    let mut times = vec![0.0, horizon];
    times.extend(s.raw().times.iter().flatten());
    times.extend(bundle.event_times());
    let times = sorted_unique(times);

    let mut traj = Table::new(&["time", "type", "index", "position"])?;
    for &t in &times {
        let c = bundle.configuration_at(t)?;
        for g in 0..c.d() {
            for (k, p) in c.positions(g).iter().enumerate() {
                traj.row(cells![t, g + 1, k + 1, p])?;
            }
        }
    }
    let mut events = Table::new(&["time", "kind", "participants", "position"])?;
    for e in &bundle.events {
        let who: Vec<String> = e.participants.iter().map(|p| p.to_string()).collect();
        events.row(cells![e.time, e.kind, who.join(" "), e.position])?;
    }
    Ok(Output::clean(vec![
        ("trajectories.csv", traj.finish()?),
        ("events.csv", events.finish()?),
    ]))
}

pub fn solve(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let x = s.initial_configuration()?;
    let times = s.times()?;
    let bundle = mspd_trajectories(&x, spec, s.horizon()?)?;
    let raw = s.raw();
    // a fixed grid when `points` is set, otherwise the jump points
    let grid = raw.points.map(|points| {
        let (lo, hi) = (raw.x_min.unwrap_or(-1.0), raw.x_max.unwrap_or(2.0));
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64)
            .collect::<Vec<f64>>()
    });
    let mut snaps = Table::new(&["time", "type", "x", "cdf"])?;
    let mut quant = Table::new(&["time", "type", "v", "position"])?;
    let n = x.n() as f64;
    for &t in &times {
        let c = bundle.configuration_at(t)?;
        let snap = SolutionSnapshot::from_configuration(t, &c);
        for g in 0..c.d() {
            let xs: Vec<f64> = match &grid {
                Some(xs) => xs.clone(),
                None => snap.measures.get(g).atoms().iter().map(|a| a.0).collect(),
            };
            for x in xs {
                snaps.row(cells![t, g + 1, x, snap.cdf(g, x)])?;
            }
            for (k, p) in c.positions(g).iter().enumerate() {
                quant.row(cells![t, g + 1, (k as f64 + 0.5) / n, p])?;
            }
        }
    }
    Ok(Output::clean(vec![
        ("snapshots.csv", snaps.finish()?),
        ("quantiles.csv", quant.finish()?),
    ]))
}

pub fn riemann(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let raw = s.raw();
    let d = spec.d();
    let gamma = raw.gamma.unwrap_or(1);
    ensure!((1..=d).contains(&gamma), "gamma = {gamma} is outside 1..={d}");
    let gamma = gamma - 1;
    let xi = raw.xi.unwrap_or(0.0);
    let (um, up) = match (&raw.u_minus, &raw.u_plus) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        (None, None) if d == 1 => (vec![0.0], vec![1.0]),
        _ => bail!("`u_minus` and `u_plus` are required when d > 1"),
    };
    let fan = RiemannFan::new(spec, gamma, &um, &up)?;
    let times = s.times()?;
    ensure!(times.iter().all(|&t| t > 0.0), "Riemann profiles need t > 0");
    let (s0, s1) = fan.speed_range();
    let tmax = times[times.len() - 1];
    let x_min = raw.x_min.unwrap_or(xi + s0.min(0.0) * tmax - 1.0);
    let x_max = raw.x_max.unwrap_or(xi + s1.max(0.0) * tmax + 1.0);
    ensure!(x_min < x_max, "x_min must be below x_max");
    let points = raw.points.unwrap_or(201).max(2);
    debug!("fan {fan:?}");
    let mut profile = Table::new(&["time", "x", "u"])?;
    for &t in &times {
        for i in 0..points {
            let x = x_min + (x_max - x_min) * i as f64 / (points - 1) as f64;
            profile.row(cells![t, x, fan.value((x - xi) / t)])?;
        }
    }
    Ok(Output::clean(vec![("profile.csv", profile.finish()?)]))
}

/// Explicit positions, or one seeded random configuration per trial.
fn instances(s: &Scenario) -> Result<Vec<(usize, u64, Configuration)>> {
    let d = s.spec()?.d();
    if let Some(x) = &s.positions {
        return Ok(vec![(0, s.seed(), x.clone())]);
    }
    let n = s.raw().n.unwrap_or(4);
    let width = s.raw().width.unwrap_or(1.0);
    Ok((0..s.trials())
        .map(|i| {
            let seed = s.seed().wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (i, seed, random_configuration(&mut rng, d, n, width))
        })
        .collect())
}

pub fn check_stability_cmd(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let raw = s.raw();
    let ps = raw.ps.clone().unwrap_or_else(|| vec![1.0, 2.0, f64::INFINITY]);
    let grid_points = raw.grid_points.unwrap_or(20);
    let rows = match (&s.positions, &s.compare) {
        (Some(x), Some(y)) => stability_for_pair(spec, &spec.constants()?, x, y, &ps, grid_points)?,
        (Some(_), None) => bail!("pairwise stability needs `compare_positions` next to `positions`"),
        (None, Some(_)) => bail!("`compare_positions` given without `positions`"),
        (None, None) => {
            let settings = StabilitySettings {
                n: raw.n.unwrap_or(4),
                ps,
                trials: s.trials(),
                seed: s.seed(),
                grid_points,
                width: raw.width.unwrap_or(1.0),
            };
            check_stability(spec, &settings)?.rows
        }
    };
    let mut report = Table::new(&[
        "trial",
        "seed",
        "d",
        "n",
        "p",
        "constant",
        "horizon",
        "grid_points",
        "worst_ratio",
        "worst_excess",
        "violated",
    ])?;
    for r in &rows {
        report.row(cells![
            r.trial,
            r.seed,
            r.d,
            r.n,
            r.p,
            r.constant,
            r.horizon,
            r.grid_points,
            r.worst_ratio,
            r.worst_excess,
            r.violated
        ])?;
    }
    let worst = rows.iter().map(|r| r.worst_ratio).fold(0.0, f64::max);
    let violations = rows.iter().filter(|r| r.violated).count();
    Output::report(
        "stability",
        report,
        rows.len(),
        violations,
        format!(", worst ratio {worst}"),
    )
}

pub fn check_rarefaction(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let c = spec.constants()?;
    let types: Vec<usize> = (0..spec.d())
        .filter(|&g| spec.own_coefficient(g).is_some_and(|a| a >= 0.0))
        .collect();
    ensure!(
        !types.is_empty(),
        "no type has a nonnegative own coefficient; nothing to check"
    );
    let grid_points = s.raw().grid_points.unwrap_or(21);
    let explicit = s.raw().times.clone();
    let rows: Vec<Vec<Vec<String>>> = instances(s)?
        .into_par_iter()
        .map(|(trial, seed, x)| {
            let times = match &explicit {
                Some(t) => t.clone(),
                None => {
                    let tb = mspd_core::analysis::tbar_with_gap(&x, c.ush_gap);
                    let h = if tb > 0.0 { 1.2 * tb } else { 1.0 };
                    (0..grid_points)
                        .map(|i| h * i as f64 / (grid_points - 1).max(1) as f64)
                        .collect()
                }
            };
            types
                .iter()
                .map(|&g| {
                    let r = check_rarefaction_spacing(spec, g, &x, &times)?;
                    Ok(cells![
                        trial,
                        seed,
                        g + 1,
                        r.kappa,
                        r.worst_ratio,
                        r.checks,
                        r.violations
                    ])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut report = Table::new(&[
        "trial",
        "seed",
        "type",
        "kappa",
        "worst_ratio",
        "checks",
        "violations",
    ])?;
    let (mut violations, mut count) = (0, 0);
    for row in rows.into_iter().flatten() {
        violations += row[6].parse::<usize>()?;
        count += 1;
        report.row(row)?;
    }
    Output::report("rarefaction", report, count, violations, String::new())
}

pub fn check_flow(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let horizon = s.raw().horizon.unwrap_or(1.0);
    let rows: Vec<(Vec<String>, bool)> = instances(s)?
        .into_par_iter()
        .map(|(trial, seed, x)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let (a, b) = (rng.random::<f64>() * horizon, rng.random::<f64>() * horizon);
            let direct = mspd_flow(&x, spec, a + b)?;
            let split = mspd_flow(&mspd_flow(&x, spec, a)?, spec, b)?;
            let dev = config_lp_distance(&direct, &split, f64::INFINITY)?;
            let tol = 1e-9 * (1.0 + x.scale());
            Ok((cells![trial, seed, a, b, dev, tol, dev > tol], dev > tol))
        })
        .collect::<Result<_>>()?;
    let mut report = Table::new(&["trial", "seed", "s", "t", "deviation", "tolerance", "violated"])?;
    let (count, violations) = (rows.len(), rows.iter().filter(|r| r.1).count());
    for (row, _) in rows {
        report.row(row)?;
    }
    Output::report("flow", report, count, violations, String::new())
}

pub fn check_tbar(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    let rows: Vec<(Vec<String>, bool)> = instances(s)?
        .into_par_iter()
        .map(|(trial, seed, x)| {
            let bound = tbar_bound(&x, spec)?;
            let after = crossing_count(&mspd_flow(&x, spec, bound)?);
            Ok((
                cells![trial, seed, bound, crossing_count(&x), after, after > 0],
                after > 0,
            ))
        })
        .collect::<Result<_>>()?;
    let mut report = Table::new(&[
        "trial",
        "seed",
        "bound",
        "initial_crossings",
        "crossings_at_bound",
        "violated",
    ])?;
    let (count, violations) = (rows.len(), rows.iter().filter(|r| r.1).count());
    for (row, _) in rows {
        report.row(row)?;
    }
    Output::report("tbar", report, count, violations, String::new())
}

pub fn convergence(s: &Scenario) -> Result<Output> {
    let spec = s.spec()?;
    ensure!(
        spec.d() == 1,
        "convergence runs against the scalar oracle and needs d = 1"
    );
    let (a, b) = match spec.field(0) {
        Field::Affine { constant, coeffs } => (*constant, coeffs[0]),
        _ => bail!("convergence needs an affine scalar field"),
    };
    let m = s.measures()?;
    let t = s.horizon()?;
    let oracle = ScalarOracle::new(a, b, InitialProfile::Measure(m.get(0).clone())).map_err(|e| match e {
        CoreError::UnsupportedFamily(msg) => anyhow::anyhow!("no closed-form oracle: {msg}"),
        other => other.into(),
    })?;
    let exact = oracle.measure_at(t)?;
    let ns = match (&s.raw().ns, s.raw().n) {
        (Some(ns), _) => ns.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => vec![16, 64, 256],
    };
    let errors: Vec<f64> = ns
        .par_iter()
        .map(|&n| {
            let snap = &mspd_core::solve_system(m, spec, n, &[t])?[0];
            Ok(wasserstein_p(snap.measures.get(0), &exact, 1.0)?)
        })
        .collect::<Result<_>>()
        .context("running the n sweep")?;
    let mut table = Table::new(&["n", "W1_error", "observed_order"])?;
    for (i, (&n, &e)) in ns.iter().zip(&errors).enumerate() {
        let order = if i == 0 {
            String::new()
        } else {
            let ratio = errors[i - 1] / e;
            (ratio.ln() / (n as f64 / ns[i - 1] as f64).ln()).to_string()
        };
        table.row(vec![n.to_string(), e.to_string(), order])?;
    }
    Ok(Output::clean(vec![("errors.csv", table.finish()?)]))
}
