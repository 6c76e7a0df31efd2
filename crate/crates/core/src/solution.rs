//! From particles to PDE solutions: empirical CDFs, the λ{u} functional, the
//! particle solver for measure data, Riemann fans and scalar entropy
//! solutions with closed forms.

use crate::configuration::{Configuration, ParticleId};
use crate::error::{domain, Error, Result};
use crate::fields::{Field, FieldSpec};
use crate::measures::{discretise, MeasureVector, ProbMeasure1D, QuantilePiece};
use crate::mspd::{mspd_trajectories, TrajectoryBundle};

/// The d measures (equivalently CDFs u^γ(t, ·)) at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSnapshot {
    pub time: f64,
    pub measures: MeasureVector,
}

impl SolutionSnapshot {
    /// Empirical measures of a particle configuration.
    pub fn from_configuration(time: f64, x: &Configuration) -> Self {
        SolutionSnapshot {
            time,
            measures: MeasureVector::from_configuration(x),
        }
    }

    pub fn d(&self) -> usize {
        self.measures.d()
    }

    /// u^γ(t, x).
    pub fn cdf(&self, gamma: usize, x: f64) -> f64 {
        self.measures.get(gamma).cdf(x)
    }

    /// u^γ(t, x−).
    pub fn cdf_left(&self, gamma: usize, x: f64) -> f64 {
        self.measures.get(gamma).cdf_left(x)
    }
}

/// u^γ[x](t, x) = (1/n)·#{k : Φ_k^γ(x; t) ≤ x}.
pub fn empirical_cdf(bundle: &TrajectoryBundle, t: f64, gamma: usize, x: f64) -> Result<f64> {
    if gamma >= bundle.d() {
        return Err(domain(format!("type index {gamma} out of range")));
    }
    let n = bundle.n();
    let mut count = 0;
    for k in 0..n {
        if bundle.position_at(ParticleId::new(gamma, k), t)? <= x {
            count += 1;
        }
    }
    Ok(count as f64 / n as f64)
}

/// λ^γ{u}(t, x): λ^γ(u(t, x)) where u^γ(t, ·) is continuous at x, and the
/// average of λ^γ over the jump [u^γ(t, x−), u^γ(t, x)] in the own
/// coordinate otherwise, the other coordinates taken at x.
pub fn lambda_brace(u: &SolutionSnapshot, spec: &FieldSpec, gamma: usize, x: f64) -> f64 {
    let mut point: Vec<f64> = (0..u.d()).map(|g| u.cdf(g, x)).collect();
    let (lo, hi) = (u.cdf_left(gamma, x), point[gamma]);
    if lo == hi {
        spec.eval(gamma, &point)
    } else {
        point[gamma] = f64::NAN;
        spec.avg_own_unchecked(gamma, &point, lo, hi)
    }
}

/// Largest |slope − λ^γ{u[x]}(t, position)| over all particles and the
/// given times, which should avoid event times.
pub fn characteristic_residual(bundle: &TrajectoryBundle, spec: &FieldSpec, times: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let x = bundle.configuration_at(t)?;
        let snap = SolutionSnapshot::from_configuration(t, &x);
        for gamma in 0..x.d() {
            for k in 0..x.n() {
                let slope = bundle.slope_at(ParticleId::new(gamma, k), t)?;
                let target = lambda_brace(&snap, spec, gamma, x.positions(gamma)[k]);
                worst = worst.max((slope - target).abs());
            }
        }
    }
    Ok(worst)
}

/// Approximate solution at each of `times`: discretise m with n particles
/// per type, run the dynamics, and take the empirical measures.
pub fn solve_system(
    m: &MeasureVector,
    spec: &FieldSpec,
    n: usize,
    times: &[f64],
) -> Result<Vec<SolutionSnapshot>> {
    if m.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            found: m.d(),
        });
    }
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("snapshot times must be sorted"));
    }
    let x = discretise(m, n)?;
    let horizon = times.last().copied().unwrap_or(0.0);
    let bundle = mspd_trajectories(&x, spec, horizon)?;
    times
        .iter()
        .map(|&t| {
            Ok(SolutionSnapshot::from_configuration(
                t,
                &bundle.configuration_at(t)?,
            ))
        })
        .collect()
}

/// Number of cells of the grid on which non-affine fluxes are convexified.
pub const HULL_GRID: usize = 1 << 12;

/// Self-similar entropy solution of a scalar Riemann problem with
/// nondecreasing data, as a function of ζ = (x − ξ)/t.
#[derive(Clone, Debug, PartialEq)]
pub enum RiemannFan {
    Constant(f64),
    /// u = clamp((ζ − α)/β, lo, hi): flux derivative α + βu with β > 0.
    Rarefaction {
        alpha: f64,
        beta: f64,
        lo: f64,
        hi: f64,
    },
    /// A single jump from lo to hi travelling at `speed`.
    Shock {
        speed: f64,
        lo: f64,
        hi: f64,
    },
    /// Lower convex envelope on a grid: vertex values and the slopes of the
    /// edges between consecutive vertices.
    Hull {
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
}

impl RiemannFan {
    /// Fan of type γ for the flux
    /// Λ(u) = ∫_{u_−}^u λ^γ(u_−^1, …, u_−^{γ−1}, v, u_+^{γ+1}, …, u_+^d) dv.
    pub fn new(spec: &FieldSpec, gamma: usize, u_minus: &[f64], u_plus: &[f64]) -> Result<Self> {
        let d = spec.d();
        if gamma >= d {
            return Err(domain(format!("type index {gamma} out of range")));
        }
        for side in [u_minus, u_plus] {
            if side.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: side.len(),
                });
            }
        }
        for g in 0..d {
            let (lo, hi) = (u_minus[g], u_plus[g]);
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(domain(format!(
                    "need 0 <= u_- <= u_+ <= 1 in coordinate {g}, got ({lo}, {hi})"
                )));
            }
        }
        let point: Vec<f64> = (0..d)
            .map(|g| if g < gamma { u_minus[g] } else { u_plus[g] })
            .collect();
        let (lo, hi) = (u_minus[gamma], u_plus[gamma]);
        if lo == hi {
            return Ok(RiemannFan::Constant(lo));
        }
        if let Field::Affine { constant, coeffs } = spec.field(gamma) {
            let alpha = constant
                + coeffs
                    .iter()
                    .zip(&point)
                    .enumerate()
                    .filter(|(g, _)| *g != gamma)
                    .map(|(_, (c, u))| c * u)
                    .sum::<f64>();
            let beta = coeffs[gamma];
            return Ok(if beta > 0.0 {
                RiemannFan::Rarefaction { alpha, beta, lo, hi }
            } else {
                RiemannFan::Shock {
                    speed: alpha + beta * 0.5 * (lo + hi),
                    lo,
                    hi,
                }
            });
        }
        // cumulative flux on a uniform grid, cell averages by quadrature
        let m = HULL_GRID;
        let grid: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
        let mut flux = vec![0.0; m + 1];
        for i in 0..m {
            let avg = spec.avg_own_unchecked(gamma, &point, grid[i], grid[i + 1]);
            flux[i + 1] = flux[i] + avg * (grid[i + 1] - grid[i]);
        }
        Ok(lower_hull(&grid, &flux))
    }

    /// Solution value at ζ = (x − ξ)/t, right-continuous in ζ.
    pub fn value(&self, zeta: f64) -> f64 {
        match self {
            RiemannFan::Constant(u) => *u,
            RiemannFan::Rarefaction { alpha, beta, lo, hi } => ((zeta - alpha) / beta).clamp(*lo, *hi),
            RiemannFan::Shock { speed, lo, hi } => {
                if zeta < *speed {
                    *lo
                } else {
                    *hi
                }
            }
            RiemannFan::Hull { values, slopes } => values[slopes.partition_point(|&s| s <= zeta)],
        }
    }

    /// Slowest and fastest wave speeds of the fan.
    pub fn speed_range(&self) -> (f64, f64) {
        match self {
            RiemannFan::Constant(_) => (0.0, 0.0),
            RiemannFan::Rarefaction { alpha, beta, lo, hi } => (alpha + beta * lo, alpha + beta * hi),
            RiemannFan::Shock { speed, .. } => (*speed, *speed),
            RiemannFan::Hull { slopes, .. } => (slopes[0], slopes[slopes.len() - 1]),
        }
    }
}

/// Monotone-chain lower hull of the points (u_i, Λ_i).
fn lower_hull(u: &[f64], flux: &[f64]) -> RiemannFan {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..u.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (u[b] - u[a]) * (flux[i] - flux[a]) - (flux[b] - flux[a]) * (u[i] - u[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let values = hull.iter().map(|&i| u[i]).collect();
    let slopes = hull
        .windows(2)
        .map(|w| (flux[w[1]] - flux[w[0]]) / (u[w[1]] - u[w[0]]))
        .collect();
    RiemannFan::Hull { values, slopes }
}

/// Value at (t, x) of the entropy solution of the Riemann problem of type γ
/// with the jump at ξ.
pub fn riemann_solve(
    spec: &FieldSpec,
    gamma: usize,
    xi: f64,
    u_minus: &[f64],
    u_plus: &[f64],
    t: f64,
    x: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("Riemann solution needs t > 0, got {t}")));
    }
    Ok(RiemannFan::new(spec, gamma, u_minus, u_plus)?.value((x - xi) / t))
}

/// Initial CDFs with a closed-form scalar entropy solution.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialProfile {
    /// u₀(x) = clamp((x − x0)/width, 0, 1), width > 0.
    Ramp { x0: f64, width: f64 },
    /// u₀(x) = 1{x ≥ xi}.
    Step { xi: f64 },
    /// Any measure of the atoms-and-segments class.
    Measure(ProbMeasure1D),
}

/// Entropy solution of ∂_t u + ∂_x Λ(u) = 0 with Λ' = a + bu.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarOracle {
    pub a: f64,
    pub b: f64,
    pub initial: InitialProfile,
}

impl ScalarOracle {
    /// Single-segment and single-atom measures are recognised as ramps and
    /// steps; with b < 0 only those two shapes are supported.
    pub fn new(a: f64, b: f64, initial: InitialProfile) -> Result<Self> {
        let initial = match initial {
            InitialProfile::Measure(m) => match (m.atoms(), m.segments()) {
                ([(x, _)], []) => InitialProfile::Step { xi: *x },
                ([], [(x0, x1, _)]) => InitialProfile::Ramp {
                    x0: *x0,
                    width: x1 - x0,
                },
                _ => InitialProfile::Measure(m),
            },
            InitialProfile::Ramp { width, .. } if !(width > 0.0) => {
                return Err(domain(format!("ramp width must be positive, got {width}")))
            }
            other => other,
        };
        if b < 0.0 && matches!(initial, InitialProfile::Measure(_)) {
            return Err(Error::UnsupportedFamily(
                "compressive flux with initial data other than a ramp or a step".into(),
            ));
        }
        Ok(ScalarOracle { a, b, initial })
    }

    fn initial_measure(&self) -> ProbMeasure1D {
        match &self.initial {
            InitialProfile::Ramp { x0, width } => {
                ProbMeasure1D::uniform(*x0, x0 + width).expect("valid ramp")
            }
            InitialProfile::Step { xi } => ProbMeasure1D::dirac(*xi).expect("finite step"),
            InitialProfile::Measure(m) => m.clone(),
        }
    }

    /// The solution at time t as a measure (u(t, ·) is its CDF).
    pub fn measure_at(&self, t: f64) -> Result<ProbMeasure1D> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let (a, b) = (self.a, self.b);
        if b >= 0.0 {
            // characteristics never cross: X_v(t) = X_v(0) + t(a + bv)
            let m0 = self.initial_measure();
            let pieces: Vec<QuantilePiece> = m0
                .quantile_pieces()
                .iter()
                .map(|p| QuantilePiece {
                    v0: p.v0,
                    v1: p.v1,
                    x0: p.x0 + t * (a + b * p.v0),
                    x1: p.x1 + t * (a + b * p.v1),
                })
                .collect();
            return ProbMeasure1D::from_quantile_pieces(&pieces);
        }
        let shock = a + 0.5 * b;
        match self.initial {
            InitialProfile::Step { xi } => ProbMeasure1D::dirac(xi + shock * t),
            InitialProfile::Ramp { x0, width } => {
                let focus = width / -b;
                if t < focus {
                    ProbMeasure1D::uniform(x0 + a * t, x0 + a * t + width + b * t)
                } else {
                    ProbMeasure1D::dirac(x0 + a * focus + shock * (t - focus))
                }
            }
            InitialProfile::Measure(_) => unreachable!("rejected at construction"),
        }
    }

    /// u(t, x).
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.measure_at(t)?.cdf(x))
    }
}
