//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mspd_core::analysis::{kappa, tbar_with_gap};
use mspd_core::{
    characteristic_residual, check_rarefaction_spacing, check_stability, config_lp_distance, crossing_count,
    discretise, first_cross_time, mspd_flow, mspd_trajectories, random_affine_field, random_configuration,
    solve_system, spd_flow, wasserstein_p, wasserstein_vec, EventKind, FieldSpec, InitialProfile,
    MeasureVector, ParticleId, ProbMeasure1D, RiemannFan, ScalarOracle, StabilitySettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: mspd_core::Error) -> String {
    e.to_string()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn hand_spec() -> FieldSpec {
    FieldSpec::affine(vec![3.0, 0.0], vec![vec![0.0, -1.0], vec![0.0, 0.0]]).unwrap()
}

fn two_particle_merge() -> Outcome {
    let mut best = Duration::MAX;
    let mut result = None;
    for _ in 0..20 {
        let start = Instant::now();
        let r = spd_flow(&[0.0, 1.0], &[1.0, 0.0], 2.0).map_err(err)?;
        best = best.min(start.elapsed());
        result = Some(r);
    }
    let (state, log) = result.expect("ran at least once");
    let pos = state.positions();
    ensure(
        pos.iter().all(|&x| close(x, 1.5, 1e-12)),
        format!("positions {pos:?}"),
    )?;
    ensure(log.len() == 1, format!("{} merge events", log.len()))?;
    ensure(
        close(log[0].time, 1.0, 1e-12) && close(log[0].position, 1.0, 1e-12),
        format!("merge at {:?}", log[0]),
    )?;
    ensure(best < Duration::from_millis(1), format!("runtime {best:?}"))?;
    Ok(format!(
        "positions {pos:?}, merge at (t=1, x=1), runtime {best:?}"
    ))
}

fn triple_merge() -> Outcome {
    let (state, log) = spd_flow(&[0.0, 1.0, 2.0], &[2.0, 1.0, 0.0], 2.0).map_err(err)?;
    let pos = state.positions();
    ensure(
        pos.iter().all(|&x| close(x, 3.0, 1e-12)),
        format!("positions {pos:?}"),
    )?;
    ensure(
        log.len() == 1 && close(log[0].time, 1.0, 1e-12) && close(log[0].position, 2.0, 1e-12),
        format!("log {log:?}"),
    )?;
    Ok(format!("positions {pos:?}, single triple merge at (t=1, x=2)"))
}

fn hand_instance() -> Outcome {
    let spec = hand_spec();
    let x = mspd_core::Configuration::new(vec![vec![0.0], vec![1.0]]).map_err(err)?;
    let fc = first_cross_time(&x, &spec).map_err(err)?;
    ensure(close(fc.time, 1.0 / 3.0, 1e-12), format!("t* = {}", fc.time))?;
    let b = mspd_trajectories(&x, &spec, 1.0).map_err(err)?;
    let cross: Vec<_> = b
        .events
        .iter()
        .filter(|e| e.kind == EventKind::CrossTypeCollision)
        .collect();
    ensure(cross.len() == 1, format!("{} collisions", cross.len()))?;
    ensure(
        close(cross[0].time, 1.0 / 3.0, 1e-12) && close(cross[0].position, 1.0, 1e-12),
        format!("{:?}", cross[0]),
    )?;
    let y = mspd_flow(&x, &spec, 1.0).map_err(err)?;
    let (a, c) = (y.positions(0)[0], y.positions(1)[0]);
    ensure(
        close(a, 7.0 / 3.0, 1e-12) && close(c, 1.0, 1e-12),
        format!("Φ(x;1) = ({a}, {c})"),
    )?;
    Ok(format!(
        "t* = {}, collision at x = {}, Φ(x;1) = ({a}, {c})",
        fc.time, cross[0].position
    ))
}

fn uniform_stability() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    let mut total_rows = 0;
    for d in [2usize, 3] {
        for n in [4usize, 16] {
            let mut violations = 0;
            let mut worst: f64 = 0.0;
            // 4 fields × 25 trials = 100 random pairs per (d, n)
            for f in 0..4u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(40_000 + 100 * d as u64 + 10 * n as u64 + f);
                let coupling = [0.05, 0.15, 0.3, 0.6][f as usize];
                let spec = random_affine_field(&mut rng, d, coupling, false);
                let settings = StabilitySettings {
                    n,
                    ps: vec![1.0, 2.0, f64::INFINITY],
                    trials: 25,
                    seed: 1_000 * (f + 1) + d as u64 + n as u64,
                    grid_points: 20,
                    width: 1.0,
                };
                let report = check_stability(&spec, &settings).map_err(err)?;
                violations += report.violations();
                worst = worst.max(report.worst_ratio());
                total_rows += report.rows.len();
            }
            ensure(violations == 0, format!("d={d} n={n}: {violations} violations"))?;
            summary.push(format!("d={d},n={n}: worst ratio {worst:.3e}"));
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "0 violations over {total_rows} (trial, p) rows; {}; runtime {elapsed:.2?}",
        summary.join("; ")
    ))
}

fn scalar_contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checks = 0;
    for trial in 0..100 {
        let spec = FieldSpec::scalar_affine(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = rng.random_range(2..12usize);
        let x = random_configuration(&mut rng, 1, n, 1.0);
        let y = random_configuration(&mut rng, 1, n, 1.0);
        let bx = mspd_trajectories(&x, &spec, 2.0).map_err(err)?;
        let by = mspd_trajectories(&y, &spec, 2.0).map_err(err)?;
        for p in [1.0, 2.0, f64::INFINITY] {
            let mut last = config_lp_distance(&x, &y, p).map_err(err)?;
            for i in 1..=40 {
                let t = 2.0 * i as f64 / 40.0;
                let now = config_lp_distance(
                    &bx.configuration_at(t).map_err(err)?,
                    &by.configuration_at(t).map_err(err)?,
                    p,
                )
                .map_err(err)?;
                ensure(
                    now <= last + 1e-9,
                    format!("trial {trial} p={p} t={t}: {now} > {last}"),
                )?;
                last = now;
                checks += 1;
            }
        }
    }
    Ok(format!(
        "{checks} consecutive-time comparisons, all nonincreasing"
    ))
}

fn flow_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let d = rng.random_range(1..4usize);
        let n = rng.random_range(1..12usize);
        let coupling = rng.random_range(0.0..0.8);
        let spec = random_affine_field(&mut rng, d, coupling, false);
        let x = random_configuration(&mut rng, d, n, 1.0);
        let (s, t) = (rng.random_range(0.0..1.5), rng.random_range(0.0..1.5));
        let direct = mspd_flow(&x, &spec, s + t).map_err(err)?;
        let split = mspd_flow(&mspd_flow(&x, &spec, s).map_err(err)?, &spec, t).map_err(err)?;
        let gap = config_lp_distance(&direct, &split, f64::INFINITY).map_err(err)?;
        ensure(gap <= 1e-9 * (1.0 + x.scale()), format!("trial {trial}: {gap}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("max ||Φ(x;s+t) − Φ(Φ(x;s);t)||_∞ = {worst:.3e}"))
}

fn rarefaction_convergence() -> Outcome {
    let spec = FieldSpec::scalar_affine(0.0, 1.0);
    let m = MeasureVector::new(vec![ProbMeasure1D::uniform(0.0, 1.0).map_err(err)?]).map_err(err)?;
    let exact = ScalarOracle::new(0.0, 1.0, InitialProfile::Ramp { x0: 0.0, width: 1.0 })
        .map_err(err)?
        .measure_at(1.0)
        .map_err(err)?;
    let mut errors = Vec::new();
    for n in [16usize, 64, 256] {
        let snap = &solve_system(&m, &spec, n, &[1.0]).map_err(err)?[0];
        let e = wasserstein_p(snap.measures.get(0), &exact, 1.0).map_err(err)?;
        ensure(e <= 2.0 / n as f64, format!("n={n}: W1 = {e} > 2/n"))?;
        errors.push(e);
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(
        orders.iter().all(|&r| r >= 3.0),
        format!("error ratios {orders:?}"),
    )?;
    Ok(format!(
        "W1 errors {errors:.3?} at n = 16, 64, 256; ratios {orders:.3?}"
    ))
}

fn shock_consistency() -> Outcome {
    let spec = FieldSpec::scalar_affine(1.0, -1.0);
    let m = MeasureVector::new(vec![ProbMeasure1D::uniform(0.0, 1.0).map_err(err)?]).map_err(err)?;
    let oracle = ScalarOracle::new(1.0, -1.0, InitialProfile::Ramp { x0: 0.0, width: 1.0 }).map_err(err)?;
    let shock = oracle.measure_at(2.0).map_err(err)?.atoms()[0].0;
    let mut notes = Vec::new();
    for n in [16usize, 64, 256] {
        let x = discretise(&m, n).map_err(err)?;
        let b = mspd_trajectories(&x, &spec, 2.0).map_err(err)?;
        let row = b.final_state.positions(0);
        ensure(
            row.iter().all(|&p| p == row[0]),
            format!("n={n}: more than one cluster"),
        )?;
        let v = b.slope_at(ParticleId::new(0, 0), 2.0).map_err(err)?;
        ensure(v == 0.5, format!("n={n}: cluster velocity {v}"))?;
        ensure(
            (row[0] - shock).abs() <= 2.0 / n as f64,
            format!("n={n}: cluster at {}", row[0]),
        )?;
        notes.push(format!("n={n}: x={}", row[0]));
    }
    Ok(format!(
        "one cluster, velocity exactly 0.5, oracle shock at {shock}; {}",
        notes.join(", ")
    ))
}

fn riemann_vs_particles() -> Outcome {
    let spec = FieldSpec::scalar_affine(1.0, -1.0);
    let xi = 0.3;
    let fan = RiemannFan::new(&spec, 0, &[0.0], &[1.0]).map_err(err)?;
    let (s0, s1) = fan.speed_range();
    ensure(s0 == 0.5 && s1 == 0.5, format!("fan speeds ({s0}, {s1})"))?;
    let m = MeasureVector::new(vec![ProbMeasure1D::dirac(xi).map_err(err)?]).map_err(err)?;
    let mut worst: f64 = 0.0;
    for n in [16usize, 64, 256] {
        let snaps = solve_system(&m, &spec, n, &[0.5, 1.0]).map_err(err)?;
        for snap in &snaps {
            let front = xi + s0 * snap.time;
            let (lo, hi) = snap.measures.get(0).support();
            let dev = (lo - front).abs().max((hi - front).abs());
            ensure(
                dev <= 2.0 / n as f64,
                format!(
                    "n={n} t={}: particles in [{lo}, {hi}], shock at {front}",
                    snap.time
                ),
            )?;
            worst = worst.max(dev);
        }
    }
    Ok(format!("max particle distance to x = ξ + t/2 is {worst:.3e}"))
}

fn random_measure(rng: &mut ChaCha8Rng) -> ProbMeasure1D {
    let na = rng.random_range(0..=2usize);
    let ns = rng.random_range(if na == 0 { 1 } else { 0 }..=2usize);
    let mut w: Vec<f64> = (0..na + ns).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let atoms = (0..na).map(|i| (rng.random_range(-1.0..1.0), w[i])).collect();
    let segments = (0..ns)
        .map(|i| {
            let a: f64 = rng.random_range(-1.0..1.0);
            (a, a + rng.random_range(0.05..1.0), w[na + i])
        })
        .collect();
    ProbMeasure1D::new(atoms, segments).unwrap()
}

fn discretisation_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ns = [1usize, 2, 8, 64];
    let ps = [1.0, 2.0, f64::INFINITY];
    // mean |ratio − 1| per (p, n), ratio = ||χₙm − χₙm'||_p / W_p^{(d)}(m, m')
    let mut dev = vec![vec![0.0; ns.len()]; ps.len()];
    for pair in 0..50 {
        let m1 = MeasureVector::new((0..2).map(|_| random_measure(&mut rng)).collect()).map_err(err)?;
        let m2 = MeasureVector::new((0..2).map(|_| random_measure(&mut rng)).collect()).map_err(err)?;
        for (j, &n) in ns.iter().enumerate() {
            let (x, y) = (discretise(&m1, n).map_err(err)?, discretise(&m2, n).map_err(err)?);
            for (i, &p) in ps.iter().enumerate() {
                let w = wasserstein_vec(&m1, &m2, p).map_err(err)?;
                let lhs = config_lp_distance(&x, &y, p).map_err(err)?;
                let factor = if p.is_infinite() {
                    1.0
                } else {
                    ((n + 1) as f64 / n as f64).powf(1.0 / p)
                };
                ensure(
                    lhs <= factor * w + 1e-10,
                    format!("pair {pair} n={n} p={p}: {lhs} > {}", factor * w),
                )?;
                dev[i][j] += (lhs / w - 1.0).abs() / 50.0;
            }
        }
    }
    for (i, row) in dev.iter().enumerate() {
        ensure(
            row.windows(2).all(|w| w[1] <= w[0]),
            format!("p={}: mean |ratio−1| over n = {row:?} not monotone", ps[i]),
        )?;
    }
    Ok(format!(
        "inequality holds; mean |ratio−1| for n=1,2,8,64: p=1 {:.3?}, p=2 {:.3?}, p=∞ {:.3?}",
        dev[0], dev[1], dev[2]
    ))
}

fn rarefaction_spacing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    let mut checks = 0;
    for trial in 0..50 {
        let coupling = rng.random_range(0.05..0.8);
        let spec = random_affine_field(&mut rng, 2, coupling, true);
        let c = spec.constants().map_err(err)?;
        let x = random_configuration(&mut rng, 2, 8, 1.0);
        let horizon = 1.2 * tbar_with_gap(&x, c.ush_gap) + 0.5;
        let times: Vec<f64> = (0..=20).map(|i| horizon * i as f64 / 20.0).collect();
        for gamma in 0..2 {
            let r = check_rarefaction_spacing(&spec, gamma, &x, &times).map_err(err)?;
            ensure(
                r.violations == 0,
                format!(
                    "trial {trial} type {gamma}: {} gaps below initial/κ (κ={})",
                    r.violations,
                    kappa(&c)
                ),
            )?;
            worst = worst.min(r.worst_ratio);
            checks += r.checks;
        }
    }
    Ok(format!("{checks} gap checks, min gap·κ/initial gap = {worst:.4}"))
}

fn characteristic_equation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(2..4usize);
        let coupling = rng.random_range(0.0..0.8);
        let spec = random_affine_field(&mut rng, d, coupling, false);
        let x = random_configuration(&mut rng, d, 8, 1.0);
        let b = mspd_trajectories(&x, &spec, 2.0).map_err(err)?;
        let mut marks = vec![0.0];
        marks.extend(b.event_times());
        marks.push(2.0);
        let mids: Vec<f64> = marks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        worst = worst.max(characteristic_residual(&b, &spec, &mids).map_err(err)?);
    }
    ensure(worst <= 1e-9, format!("residual {worst}"))?;
    Ok(format!("max residual {worst:.3e}"))
}

fn tbar() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut nonzero = 0;
    for trial in 0..50 {
        let d = rng.random_range(2..4usize);
        let n = rng.random_range(1..10usize);
        let coupling = rng.random_range(0.0..0.8);
        let spec = random_affine_field(&mut rng, d, coupling, false);
        let x = random_configuration(&mut rng, d, n, 1.0);
        let bound = tbar_with_gap(&x, spec.constants().map_err(err)?.ush_gap);
        if crossing_count(&x) > 0 {
            nonzero += 1;
        }
        let y = mspd_flow(&x, &spec, bound).map_err(err)?;
        ensure(
            crossing_count(&y) == 0,
            format!("trial {trial}: N = {} at the bound", crossing_count(&y)),
        )?;
    }
    Ok(format!(
        "N(Φ(x; bound)) = 0 in all 50 trials ({nonzero} started with N > 0)"
    ))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("two-particle SPD merge", two_particle_merge),
        ("triple merge", triple_merge),
        ("multitype hand instance", hand_instance),
        ("uniform L^p stability", uniform_stability),
        ("scalar contraction", scalar_contraction),
        ("flow property", flow_property),
        ("rarefaction convergence", rarefaction_convergence),
        ("shock consistency", shock_consistency),
        ("Riemann solver vs particles", riemann_vs_particles),
        ("discretisation inequality", discretisation_inequality),
        ("rarefaction spacing", rarefaction_spacing),
        ("characteristic residual", characteristic_equation),
        ("t-bar bound", tbar),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
