#![allow(dead_code)]

use mspd_core::{random_configuration, Configuration};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force sticky particles: free flight over small steps, then any
/// overlapping neighbours are fused at their centre of mass. Free flight
/// preserves the centre of mass, so fusing there is exact.
pub fn stepping_spd(positions: &[f64], velocities: &[f64], t: f64) -> Vec<f64> {
    // (first, len, position, momentum)
    let mut cl: Vec<(usize, usize, f64, f64)> = definition_clusters(positions, velocities)
        .iter()
        .map(|&(a, b)| (a, b - a, positions[a], velocities[a..b].iter().sum()))
        .collect();
    let scale = positions.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let steps = ((t / (1e-5 * scale)).ceil() as usize).max(1);
    let dt = t / steps as f64;
    for _ in 0..steps {
        for c in &mut cl {
            c.2 += c.3 / c.1 as f64 * dt;
        }
        loop {
            let hit = cl.windows(2).position(|w| w[0].2 > w[1].2);
            let Some(i) = hit else { break };
            let r = cl.remove(i + 1);
            let l = &mut cl[i];
            let m = (l.1 + r.1) as f64;
            l.2 = (l.2 * l.1 as f64 + r.2 * r.1 as f64) / m;
            l.1 += r.1;
            l.3 += r.3;
        }
    }
    let mut out = Vec::new();
    for c in cl {
        out.extend(std::iter::repeat_n(c.2, c.1));
    }
    out
}

/// Initial clusters from the definition: for each k, the largest block of
/// equal positions containing k where every prefix average is at least the
/// matching suffix average.
pub fn definition_clusters(positions: &[f64], velocities: &[f64]) -> Vec<(usize, usize)> {
    let n = positions.len();
    let stable = |a: usize, b: usize| {
        if positions[a..b].iter().any(|&x| x != positions[a]) {
            return false;
        }
        (a + 1..b).all(|j| {
            let left: f64 = velocities[a..j].iter().sum::<f64>() / (j - a) as f64;
            let right: f64 = velocities[j..b].iter().sum::<f64>() / (b - j) as f64;
            left >= right
        })
    };
    let mut out: Vec<(usize, usize)> = Vec::new();
    for k in 0..n {
        let mut best = (k, k + 1);
        for a in 0..=k {
            for b in k + 1..=n {
                if b - a > best.1 - best.0 && stable(a, b) {
                    best = (a, b);
                }
            }
        }
        if !out.contains(&best) {
            out.push(best);
        }
    }
    out
}

/// Positions with a fair share of exact ties: drawn from a coarse grid.
pub fn tied_positions(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64 * 0.25).collect();
    x.sort_by(f64::total_cmp);
    x
}

pub fn velocities(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-4..=4) as f64 * 0.25).collect()
}

pub fn config(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Configuration {
    random_configuration(rng, d, n, 1.0)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
