//! Characteristic fields λ¹, …, λ^d on the unit cube and their constants.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::quadrature::mean_gl16;

/// A black-box field evaluator. The slice always has length `d`.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Number of Sobol points used to cross-check declared constants of
/// black-box fields.
pub const SOBOL_CHECK_POINTS: u32 = 10_000;

/// One characteristic field λ^γ.
#[derive(Clone)]
pub enum Field {
    /// λ(u) = constant + Σ coeffs[γ'] · u^{γ'}.
    Affine { constant: f64, coeffs: Vec<f64> },
    /// Arbitrary continuous map with caller-declared constants.
    Custom {
        eval: FieldFn,
        inf: Option<f64>,
        sup: Option<f64>,
        lipschitz: Option<f64>,
    },
}

impl Field {
    pub fn affine(constant: f64, coeffs: Vec<f64>) -> Self {
        Field::Affine { constant, coeffs }
    }

    pub fn custom(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        inf: f64,
        sup: f64,
        lipschitz: f64,
    ) -> Self {
        Field::Custom {
            eval: Arc::new(eval),
            inf: Some(inf),
            sup: Some(sup),
            lipschitz: Some(lipschitz),
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Field::Affine { constant, coeffs } => {
                constant + coeffs.iter().zip(u).map(|(a, x)| a * x).sum::<f64>()
            }
            Field::Custom { eval, .. } => eval(u),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Field::Affine { .. })
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Affine { constant, coeffs } => f
                .debug_struct("Affine")
                .field("constant", constant)
                .field("coeffs", coeffs)
                .finish(),
            Field::Custom {
                inf, sup, lipschitz, ..
            } => f
                .debug_struct("Custom")
                .field("inf", inf)
                .field("sup", sup)
                .field("lipschitz", lipschitz)
                .finish_non_exhaustive(),
        }
    }
}

/// The d characteristic fields of a diagonal system. Immutable once built.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    fields: Vec<Field>,
}

impl FieldSpec {
    /// Builds a spec, checking that affine rows have length d.
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(domain("a field spec needs at least one type"));
        }
        let d = fields.len();
        for field in &fields {
            if let Field::Affine { constant, coeffs } = field {
                if coeffs.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: coeffs.len(),
                    });
                }
                if !constant.is_finite() || coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(domain("affine coefficients must be finite"));
                }
            }
        }
        Ok(FieldSpec { fields })
    }

    /// Affine family λ^γ(u) = constants[γ] + Σ_{γ'} matrix[γ][γ'] u^{γ'}.
    pub fn affine(constants: Vec<f64>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if constants.len() != matrix.len() {
            return Err(Error::DimensionMismatch {
                expected: constants.len(),
                found: matrix.len(),
            });
        }
        Self::new(
            constants
                .into_iter()
                .zip(matrix)
                .map(|(c, row)| Field::affine(c, row))
                .collect(),
        )
    }

    /// Scalar affine field λ(u) = a + b·u.
    pub fn scalar_affine(a: f64, b: f64) -> Self {
        FieldSpec {
            fields: vec![Field::affine(a, vec![b])],
        }
    }

    pub fn d(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, gamma: usize) -> &Field {
        &self.fields[gamma]
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn is_affine(&self) -> bool {
        self.fields.iter().all(Field::is_affine)
    }

    /// Evaluates λ^γ at a point of [0,1]^d.
    pub fn eval(&self, gamma: usize, u: &[f64]) -> f64 {
        self.fields[gamma].eval(u)
    }

    /// Coefficient ∂_{γ}λ^γ for affine fields, `None` otherwise.
    pub fn own_coefficient(&self, gamma: usize) -> Option<f64> {
        match &self.fields[gamma] {
            Field::Affine { coeffs, .. } => Some(coeffs[gamma]),
            Field::Custom { .. } => None,
        }
    }

    /// Average of λ^γ in its own coordinate over [a, b], the other
    /// coordinates being taken from `point` (its entry `gamma` is ignored).
    /// Returns the point value when a = b.
    pub fn avg_own_coordinate(&self, gamma: usize, point: &[f64], a: f64, b: f64) -> Result<f64> {
        let d = self.d();
        if gamma >= d {
            return Err(domain(format!("type index {gamma} out of range for d = {d}")));
        }
        if point.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: point.len(),
            });
        }
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(domain(format!("need 0 <= a <= b <= 1, got a = {a}, b = {b}")));
        }
        for (g, &v) in point.iter().enumerate() {
            if g != gamma && !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("frozen coordinate {g} = {v} outside [0, 1]")));
            }
        }
        Ok(self.avg_own_unchecked(gamma, point, a, b))
    }

    pub(crate) fn avg_own_unchecked(&self, gamma: usize, point: &[f64], a: f64, b: f64) -> f64 {
        match &self.fields[gamma] {
            Field::Affine { constant, coeffs } => {
                let frozen: f64 = coeffs
                    .iter()
                    .zip(point)
                    .enumerate()
                    .filter(|(g, _)| *g != gamma)
                    .map(|(_, (c, u))| c * u)
                    .sum();
                constant + frozen + coeffs[gamma] * 0.5 * (a + b)
            }
            Field::Custom { eval, .. } => {
                let mut buf = point.to_vec();
                if a == b {
                    buf[gamma] = a;
                    return eval(&buf);
                }
                mean_gl16(a, b, |w| {
                    buf[gamma] = w;
                    eval(&buf)
                })
            }
        }
    }

    /// Computes and validates the constants of the spec.
    pub fn constants(&self) -> Result<FieldConstants> {
        validate_constants(self)
    }
}

/// Constants attached to a [`FieldSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConstants {
    /// inf over the cube of each λ^γ.
    pub inf: Vec<f64>,
    /// sup over the cube of each λ^γ.
    pub sup: Vec<f64>,
    /// Lipschitz constant L for the ℓ¹ norm on [0,1]^d.
    pub lipschitz: f64,
    /// Hyperbolicity gap min_γ (inf λ^γ − sup λ^{γ+1}); +∞ when d = 1.
    pub ush_gap: f64,
}

impl FieldConstants {
    pub fn d(&self) -> usize {
        self.inf.len()
    }

    /// sup over the cube of |λ^γ|.
    pub fn sup_abs(&self, gamma: usize) -> f64 {
        self.inf[gamma].abs().max(self.sup[gamma].abs())
    }

    /// The bound constant L_{C,p}; `p = f64::INFINITY` gives the max norm.
    pub fn bound(&self, p: f64) -> f64 {
        let d = self.d();
        if p.is_infinite() {
            (0..d).map(|g| self.sup_abs(g)).fold(0.0, f64::max)
        } else {
            (0..d).map(|g| self.sup_abs(g).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Computes inf/sup, Lipschitz constant and hyperbolicity gap of `spec`.
///
/// Affine fields are handled in closed form. Black-box fields use their
/// declared constants, which are cross-checked on [`SOBOL_CHECK_POINTS`]
/// scrambled Sobol points (plus the cube corners for d ≤ 10).
pub fn validate_constants(spec: &FieldSpec) -> Result<FieldConstants> {
    let d = spec.d();
    let mut inf = Vec::with_capacity(d);
    let mut sup = Vec::with_capacity(d);
    let mut lipschitz: f64 = 0.0;
    for (gamma, field) in spec.fields().iter().enumerate() {
        match field {
            Field::Affine { constant, coeffs } => {
                inf.push(constant + coeffs.iter().map(|a| a.min(0.0)).sum::<f64>());
                sup.push(constant + coeffs.iter().map(|a| a.max(0.0)).sum::<f64>());
                // row-wise max-abs: |λ(u) − λ(v)| ≤ max|a|·|u − v|_1
                lipschitz = lipschitz.max(coeffs.iter().fold(0.0, |m, a| m.max(a.abs())));
            }
            Field::Custom {
                eval,
                inf: lo,
                sup: hi,
                lipschitz: lip,
            } => {
                let lo = lo.ok_or(Error::MissingBounds {
                    field: gamma,
                    what: "infimum",
                })?;
                let hi = hi.ok_or(Error::MissingBounds {
                    field: gamma,
                    what: "supremum",
                })?;
                let lip = lip.ok_or(Error::MissingBounds {
                    field: gamma,
                    what: "Lipschitz constant",
                })?;
                if !(lo.is_finite() && hi.is_finite() && lip.is_finite()) || lo > hi || lip < 0.0 {
                    return Err(Error::BoundsViolation {
                        field: gamma,
                        detail: format!("inconsistent declaration inf={lo} sup={hi} L={lip}"),
                    });
                }
                cross_check(gamma, eval, d, lo, hi, lip)?;
                inf.push(lo);
                sup.push(hi);
                lipschitz = lipschitz.max(lip);
            }
        }
    }
    let mut ush_gap = f64::INFINITY;
    for gamma in 0..d.saturating_sub(1) {
        let gap = inf[gamma] - sup[gamma + 1];
        if !(gap > 0.0) {
            return Err(Error::UshViolation {
                upper: gamma,
                lower: gamma + 1,
                gap,
            });
        }
        ush_gap = ush_gap.min(gap);
    }
    Ok(FieldConstants {
        inf,
        sup,
        lipschitz,
        ush_gap,
    })
}

fn cross_check(gamma: usize, eval: &FieldFn, d: usize, lo: f64, hi: f64, lip: f64) -> Result<()> {
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let check_value = |u: &[f64]| -> Result<f64> {
        let v = eval(u);
        if !v.is_finite() || v < lo - tol || v > hi + tol {
            return Err(Error::BoundsViolation {
                field: gamma,
                detail: format!("value {v} at {u:?} outside declared [{lo}, {hi}]"),
            });
        }
        Ok(v)
    };
    let mut prev: Option<(Vec<f64>, f64)> = None;
    let mut u = vec![0.0; d];
    for i in 0..SOBOL_CHECK_POINTS {
        for (g, x) in u.iter_mut().enumerate() {
            *x = f64::from(sobol_burley::sample(i, g as u32, gamma as u32));
        }
        let v = check_value(&u)?;
        if let Some((pu, pv)) = &prev {
            let dist: f64 = pu.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
            if (v - pv).abs() > lip * dist + tol {
                return Err(Error::BoundsViolation {
                    field: gamma,
                    detail: format!("Lipschitz constant {lip} violated between {pu:?} and {u:?}"),
                });
            }
        }
        prev = Some((u.clone(), v));
    }
    if d <= 10 {
        for mask in 0u32..(1 << d) {
            for (g, x) in u.iter_mut().enumerate() {
                *x = f64::from((mask >> g) & 1);
            }
            check_value(&u)?;
        }
    }
    Ok(())
}
