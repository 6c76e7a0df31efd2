//! Probability measures on the line built from atoms and uniform segments.
//!
//! Every measure of this class has a piecewise-linear CDF with jumps, so its
//! pseudo-inverse is piecewise linear (with flat pieces for atoms). All
//! operations below are exact on that representation: CDF and quantile
//! evaluation, quantile integrals, and Wasserstein distances.

use std::fmt;
use std::str::FromStr;

use crate::configuration::Configuration;
use crate::error::{domain, Error, Result};
use crate::quadrature::mean_gl16;

const MASS_TOLERANCE: f64 = 1e-12;

/// A linear piece of a quantile function: on (v0, v1] it runs from x0 to x1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantilePiece {
    pub v0: f64,
    pub v1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl QuantilePiece {
    /// Linear interpolation on the closed piece.
    pub fn at(&self, v: f64) -> f64 {
        if self.x0 == self.x1 || self.v1 == self.v0 {
            self.x0
        } else {
            self.x0 + (self.x1 - self.x0) * (v - self.v0) / (self.v1 - self.v0)
        }
    }
}

/// A probability measure made of atoms and uniform segments.
#[derive(Clone, Debug)]
pub struct ProbMeasure1D {
    atoms: Vec<(f64, f64)>,
    segments: Vec<(f64, f64, f64)>,
    breaks: Vec<f64>,
    cdf_left: Vec<f64>,
    cdf_at: Vec<f64>,
    quantile: Vec<QuantilePiece>,
}

impl PartialEq for ProbMeasure1D {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.segments == other.segments
    }
}

impl ProbMeasure1D {
    /// Builds a measure from `(location, mass)` atoms and `(x0, x1, mass)`
    /// segments carrying uniform mass on [x0, x1]. Masses must sum to one.
    pub fn new(atoms: Vec<(f64, f64)>, segments: Vec<(f64, f64, f64)>) -> Result<Self> {
        let mut clean_atoms = Vec::with_capacity(atoms.len());
        let mut clean_segments = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for (x, m) in atoms {
            if !x.is_finite() || !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMeasure(format!("bad atom ({x}, {m})")));
            }
            total += m;
            if m > 0.0 {
                clean_atoms.push((x, m));
            }
        }
        for (x0, x1, m) in segments {
            if !x0.is_finite() || !x1.is_finite() || !m.is_finite() || m < 0.0 || x0 > x1 {
                return Err(Error::InvalidMeasure(format!("bad segment ({x0}, {x1}, {m})")));
            }
            total += m;
            if m > 0.0 {
                if x0 == x1 {
                    clean_atoms.push((x0, m));
                } else {
                    clean_segments.push((x0, x1, m));
                }
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        clean_atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(clean_atoms.len());
        for (x, m) in clean_atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        clean_segments.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(Self::assemble(merged, clean_segments, total))
    }

    fn assemble(atoms: Vec<(f64, f64)>, segments: Vec<(f64, f64, f64)>, total: f64) -> Self {
        let mut breaks: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        for s in &segments {
            breaks.push(s.0);
            breaks.push(s.1);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        // density changes at each breakpoint: (starts, ends)
        let mut starts: Vec<(f64, f64)> = segments.iter().map(|s| (s.0, s.2 / (s.1 - s.0))).collect();
        let mut ends: Vec<(f64, f64)> = segments.iter().map(|s| (s.1, s.2 / (s.1 - s.0))).collect();
        starts.sort_by(|a, b| a.0.total_cmp(&b.0));
        ends.sort_by(|a, b| a.0.total_cmp(&b.0));

        let nb = breaks.len();
        let mut cdf_left = vec![0.0; nb];
        let mut cdf_at = vec![0.0; nb];
        let (mut ia, mut is, mut ie) = (0, 0, 0);
        let mut density = 0.0;
        let mut active = 0usize;
        let mut cum = 0.0;
        for (i, &b) in breaks.iter().enumerate() {
            if i > 0 {
                cum += density * (b - breaks[i - 1]);
            }
            cdf_left[i] = cum;
            while ie < ends.len() && ends[ie].0 == b {
                density -= ends[ie].1;
                active -= 1;
                ie += 1;
            }
            while is < starts.len() && starts[is].0 == b {
                density += starts[is].1;
                active += 1;
                is += 1;
            }
            if active == 0 {
                density = 0.0;
            }
            if ia < atoms.len() && atoms[ia].0 == b {
                cum += atoms[ia].1;
                ia += 1;
            }
            cdf_at[i] = cum;
        }
        // normalise, clamp and force monotonicity against rounding
        let mut running: f64 = 0.0;
        for i in 0..nb {
            let l = (cdf_left[i] / total).clamp(0.0, 1.0).max(running);
            let r = (cdf_at[i] / total).clamp(0.0, 1.0).max(l);
            cdf_left[i] = l;
            cdf_at[i] = r;
            running = r;
        }
        cdf_at[nb - 1] = 1.0;

        let mut quantile = Vec::new();
        for i in 0..nb {
            if cdf_at[i] > cdf_left[i] {
                quantile.push(QuantilePiece {
                    v0: cdf_left[i],
                    v1: cdf_at[i],
                    x0: breaks[i],
                    x1: breaks[i],
                });
            }
            if i + 1 < nb && cdf_left[i + 1] > cdf_at[i] {
                quantile.push(QuantilePiece {
                    v0: cdf_at[i],
                    v1: cdf_left[i + 1],
                    x0: breaks[i],
                    x1: breaks[i + 1],
                });
            }
        }
        ProbMeasure1D {
            atoms,
            segments,
            breaks,
            cdf_left,
            cdf_at,
            quantile,
        }
    }

    /// The Dirac mass δ_a.
    pub fn dirac(a: f64) -> Result<Self> {
        Self::new(vec![(a, 1.0)], vec![])
    }

    /// The uniform distribution on [a, b] (a Dirac mass when a = b).
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![], vec![(a, b, 1.0)])
    }

    /// Rebuilds a measure from a nondecreasing piecewise-linear quantile
    /// function covering (0, 1].
    pub fn from_quantile_pieces(pieces: &[QuantilePiece]) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut segments = Vec::new();
        for p in pieces {
            let mass = p.v1 - p.v0;
            if mass < 0.0 || p.x1 < p.x0 {
                return Err(Error::InvalidMeasure(format!("decreasing quantile piece {p:?}")));
            }
            if mass == 0.0 {
                continue;
            }
            if p.x0 == p.x1 {
                atoms.push((p.x0, mass));
            } else {
                segments.push((p.x0, p.x1, mass));
            }
        }
        Self::new(atoms, segments)
    }

    /// Merged atoms, sorted by location.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn segments(&self) -> &[(f64, f64, f64)] {
        &self.segments
    }

    /// Pieces of the quantile function, in increasing order of v.
    pub fn quantile_pieces(&self) -> &[QuantilePiece] {
        &self.quantile
    }

    /// Smallest and largest points of the support.
    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    /// Right-continuous CDF F(x) = m((−∞, x]).
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.breaks.partition_point(|&b| b <= x);
        if idx == 0 {
            return 0.0;
        }
        let i = idx - 1;
        if self.breaks[i] == x || i + 1 == self.breaks.len() {
            return self.cdf_at[i];
        }
        self.interp(i, x)
    }

    /// Left limit F(x−) = m((−∞, x)).
    pub fn cdf_left(&self, x: f64) -> f64 {
        let idx = self.breaks.partition_point(|&b| b < x);
        if idx == 0 {
            return 0.0;
        }
        let i = idx - 1;
        if i + 1 == self.breaks.len() {
            return self.cdf_at[i];
        }
        if self.breaks[i + 1] == x {
            return self.cdf_left[i + 1];
        }
        self.interp(i, x)
    }

    fn interp(&self, i: usize, x: f64) -> f64 {
        let (b0, b1) = (self.breaks[i], self.breaks[i + 1]);
        let (f0, f1) = (self.cdf_at[i], self.cdf_left[i + 1]);
        (f0 + (f1 - f0) * (x - b0) / (b1 - b0)).clamp(f0, f1)
    }

    /// Pseudo-inverse F⁻¹(v) = inf{x : F(x) ≥ v} for v in (0, 1).
    pub fn quantile(&self, v: f64) -> Result<f64> {
        if !(v > 0.0 && v < 1.0) {
            return Err(domain(format!("quantile level {v} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(v))
    }

    pub(crate) fn quantile_unchecked(&self, v: f64) -> f64 {
        let idx = self
            .quantile
            .partition_point(|p| p.v1 < v)
            .min(self.quantile.len() - 1);
        self.quantile[idx].at(v)
    }

    /// ∫_a^b F⁻¹(w) dw for 0 ≤ a ≤ b ≤ 1, computed piece by piece.
    pub fn quantile_integral(&self, a: f64, b: f64) -> f64 {
        self.quantile_average_parts(a, b).0
    }

    /// Returns (∫_a^b F⁻¹, total overlap length), so that callers can form an
    /// average that is exact on constant pieces.
    fn quantile_average_parts(&self, a: f64, b: f64) -> (f64, f64) {
        let start = self.quantile.partition_point(|p| p.v1 <= a);
        let mut integral = 0.0;
        let mut length = 0.0;
        for p in &self.quantile[start..] {
            if p.v0 >= b {
                break;
            }
            let lo = p.v0.max(a);
            let hi = p.v1.min(b);
            if hi > lo {
                let len = hi - lo;
                let mean = if p.x0 == p.x1 {
                    p.x0
                } else {
                    0.5 * (p.at(lo) + p.at(hi))
                };
                integral += len * mean;
                length += len;
            }
        }
        (integral, length)
    }

    /// Mean of F⁻¹ over [a, b]; equals F⁻¹(a) when a = b.
    pub fn quantile_average(&self, a: f64, b: f64) -> f64 {
        let (integral, length) = self.quantile_average_parts(a, b);
        if length > 0.0 {
            integral / length
        } else {
            self.quantile_unchecked(a.clamp(f64::MIN_POSITIVE, 1.0))
        }
    }

    /// Empirical measure (1/n) Σ δ_{x_k} of sorted positions.
    pub fn empirical(positions: &[f64]) -> Result<Self> {
        empirical_from_positions(positions)
    }
}

impl fmt::Display for ProbMeasure1D {
    /// Plain-text record: one `atom <x> <mass>` or `segment <x0> <x1> <mass>`
    /// per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, m) in &self.atoms {
            writeln!(f, "atom {x} {m}")?;
        }
        for (x0, x1, m) in &self.segments {
            writeln!(f, "segment {x0} {x1} {m}")?;
        }
        Ok(())
    }
}

impl FromStr for ProbMeasure1D {
    type Err = Error;

    /// Parses the record format written by `Display`. Blank lines and lines
    /// starting with `#` are skipped; `;` also separates records.
    fn from_str(s: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut segments = Vec::new();
        for (lineno, raw) in s.split(['\n', ';']).enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let mut tokens = line.split_whitespace();
            let kind = tokens.next().unwrap_or_default();
            let nums: Vec<f64> = tokens
                .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?;
            match (kind, nums.as_slice()) {
                ("atom", [x, m]) => atoms.push((*x, *m)),
                ("segment", [x0, x1, m]) => segments.push((*x0, *x1, *m)),
                _ => return Err(parse_err(format!("unrecognised record {line:?}"))),
            }
        }
        if atoms.is_empty() && segments.is_empty() {
            return Err(Error::InvalidMeasure("empty record".into()));
        }
        Self::new(atoms, segments)
    }
}

/// Empirical measure of a sorted sample; coincident positions merge.
pub fn empirical_from_positions(positions: &[f64]) -> Result<ProbMeasure1D> {
    if positions.is_empty() {
        return Err(domain("empirical measure of an empty sample"));
    }
    if let Some(index) = positions.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::UnsortedInput { index: index + 1 });
    }
    let n = positions.len();
    let mut atoms: Vec<(f64, usize)> = Vec::new();
    for &x in positions {
        if !x.is_finite() {
            return Err(domain("non-finite position"));
        }
        match atoms.last_mut() {
            Some(last) if last.0 == x => last.1 += 1,
            _ => atoms.push((x, 1)),
        }
    }
    let atoms = atoms.into_iter().map(|(x, c)| (x, c as f64 / n as f64)).collect();
    ProbMeasure1D::new(atoms, vec![])
}

/// Checks an exponent p ∈ [1, ∞].
pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("exponent p = {p} must lie in [1, ∞]")))
    }
}

/// Mean of x^p over [a, b] with 0 ≤ a ≤ b.
fn mean_pow(a: f64, b: f64, p: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    if b - a > 1e-4 * b {
        (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a))
    } else {
        // nearly constant: the closed form cancels, the integrand is smooth
        mean_gl16(a, b, |x| x.powf(p))
    }
}

/// ∫ |f|^p over a cell of length `len` where f is linear from f0 to f1.
fn integrate_abs_pow_linear(f0: f64, f1: f64, len: f64, p: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    if f0 == f1 {
        return len * f0.abs().powf(p);
    }
    if (f0 >= 0.0 && f1 >= 0.0) || (f0 <= 0.0 && f1 <= 0.0) {
        let (a, b) = (f0.abs().min(f1.abs()), f0.abs().max(f1.abs()));
        return len * mean_pow(a, b, p);
    }
    // sign change at fraction r of the cell
    let r = f0 / (f0 - f1);
    len * (r * mean_pow(0.0, f0.abs(), p) + (1.0 - r) * mean_pow(0.0, f1.abs(), p))
}

/// Wasserstein distance W_p between two measures, `p = f64::INFINITY`
/// included, as the L^p distance between their quantile functions.
pub fn wasserstein_p(m: &ProbMeasure1D, other: &ProbMeasure1D, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let (qa, qb) = (&m.quantile, &other.quantile);
    let (mut ia, mut ib) = (0, 0);
    let mut cur = 0.0;
    let mut acc: f64 = 0.0;
    while ia < qa.len() && ib < qb.len() {
        let (pa, pb) = (&qa[ia], &qb[ib]);
        let next = pa.v1.min(pb.v1);
        if next > cur {
            let d0 = pa.at(cur) - pb.at(cur);
            let d1 = pa.at(next) - pb.at(next);
            if p.is_infinite() {
                acc = acc.max(d0.abs()).max(d1.abs());
            } else {
                acc += integrate_abs_pow_linear(d0, d1, next - cur, p);
            }
            cur = next;
        }
        if pa.v1 <= next {
            ia += 1;
        }
        if pb.v1 <= next {
            ib += 1;
        }
    }
    Ok(if p.is_infinite() { acc } else { acc.powf(1.0 / p) })
}

/// The d measures of a multitype system, one per type.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureVector(Vec<ProbMeasure1D>);

impl MeasureVector {
    pub fn new(measures: Vec<ProbMeasure1D>) -> Result<Self> {
        if measures.is_empty() {
            return Err(domain("a measure vector needs at least one component"));
        }
        Ok(MeasureVector(measures))
    }

    /// Empirical measures of each type of a configuration.
    pub fn from_configuration(x: &Configuration) -> Self {
        MeasureVector(
            x.rows()
                .iter()
                .map(|row| empirical_from_positions(row).expect("configuration rows are sorted"))
                .collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, gamma: usize) -> &ProbMeasure1D {
        &self.0[gamma]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ProbMeasure1D> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[ProbMeasure1D] {
        &self.0
    }
}

/// W_p^{(d)}: ℓ^p combination of the componentwise distances.
pub fn wasserstein_vec(m: &MeasureVector, other: &MeasureVector, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if m.d() != other.d() {
        return Err(Error::DimensionMismatch {
            expected: m.d(),
            found: other.d(),
        });
    }
    let parts = m
        .iter()
        .zip(other.iter())
        .map(|(a, b)| wasserstein_p(a, b, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(if p.is_infinite() {
        parts.into_iter().fold(0.0, f64::max)
    } else {
        parts.iter().map(|w| w.powf(p)).sum::<f64>().powf(1.0 / p)
    })
}

/// The discretisation operator χₙ: particle k of type γ sits at the average
/// of the quantile function over [(2k−1)/(2(n+1)), (2k+1)/(2(n+1))].
pub fn discretise(m: &MeasureVector, n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(domain("discretisation needs n >= 1"));
    }
    let denom = 2.0 * (n as f64 + 1.0);
    let rows = m
        .iter()
        .map(|measure| {
            let mut row: Vec<f64> = (1..=n)
                .map(|k| {
                    let a = (2 * k - 1) as f64 / denom;
                    let b = (2 * k + 1) as f64 / denom;
                    measure.quantile_average(a, b)
                })
                .collect();
            for k in 1..n {
                if row[k] < row[k - 1] {
                    row[k] = row[k - 1];
                }
            }
            row
        })
        .collect();
    Ok(Configuration::from_sorted(rows))
}
