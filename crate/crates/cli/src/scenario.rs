//! Scenario files: flat TOML keys, validated in full before anything runs.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use mspd_core::{Configuration, FieldSpec, MeasureVector, ProbMeasure1D};
use serde::Deserialize;

/// Raw file contents. Every key is optional here; each subcommand asks for
/// what it needs through the accessors on [`Scenario`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    /// Builtin scalar field: "burgers" (λ = u) or "compressive" (λ = 1 − u).
    pub field: Option<String>,
    /// Affine field λ^γ(u) = constants[γ] + Σ matrix[γ][j] u^j.
    pub constants: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Explicit configuration, one row of positions per type.
    pub positions: Option<Vec<Vec<f64>>>,
    /// Second configuration for the pairwise stability check.
    pub compare_positions: Option<Vec<Vec<f64>>>,
    /// One measure record per type, e.g. "segment 0 1 1" or "atom 0.2 0.5; atom 1 0.5".
    pub measures: Option<Vec<String>>,
    pub n: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub horizon: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub ps: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
    pub width: Option<f64>,
    /// Riemann problem: one-based type, jump location and the two states.
    pub gamma: Option<usize>,
    pub xi: Option<f64>,
    pub u_minus: Option<Vec<f64>>,
    pub u_plus: Option<Vec<f64>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub n: Option<usize>,
}

pub struct Scenario {
    raw: RawScenario,
    pub spec: Option<FieldSpec>,
    pub positions: Option<Configuration>,
    pub compare: Option<Configuration>,
    pub measures: Option<MeasureVector>,
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, overrides).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut raw: RawScenario = toml::from_str(text)?;
        if overrides.seed.is_some() {
            raw.seed = overrides.seed;
        }
        if overrides.trials.is_some() {
            raw.trials = overrides.trials;
        }
        if overrides.times.is_some() {
            raw.times = overrides.times.clone();
        }
        if overrides.n.is_some() {
            raw.n = overrides.n;
        }
        let spec = build_field(&raw)?;
        let d = spec.as_ref().map(FieldSpec::d);
        let positions = raw
            .positions
            .clone()
            .map(|rows| configuration("positions", rows, d))
            .transpose()?;
        let compare = raw
            .compare_positions
            .clone()
            .map(|rows| configuration("compare_positions", rows, d))
            .transpose()?;
        if let (Some(x), Some(y)) = (&positions, &compare) {
            ensure!(
                x.n() == y.n(),
                "positions and compare_positions have different n ({} vs {})",
                x.n(),
                y.n()
            );
        }
        let measures = raw.measures.as_ref().map(|m| measure_vector(m, d)).transpose()?;
        if let Some(times) = &raw.times {
            ensure!(!times.is_empty(), "times is empty");
            ensure!(
                times.iter().all(|t| t.is_finite() && *t >= 0.0),
                "times must be finite and >= 0"
            );
            ensure!(
                times.windows(2).all(|w| w[0] <= w[1]),
                "times must be nondecreasing"
            );
        }
        if let Some(h) = raw.horizon {
            ensure!(
                h.is_finite() && h >= 0.0,
                "horizon must be finite and >= 0, got {h}"
            );
        }
        for (key, v) in [
            ("n", raw.n),
            ("trials", raw.trials),
            ("grid_points", raw.grid_points),
            ("points", raw.points),
        ] {
            if v == Some(0) {
                bail!("{key} must be positive");
            }
        }
        if let Some(ns) = &raw.ns {
            ensure!(
                !ns.is_empty() && ns.iter().all(|&n| n > 0),
                "ns must be a nonempty list of positive integers"
            );
        }
        if let Some(ps) = &raw.ps {
            ensure!(
                !ps.is_empty() && ps.iter().all(|&p| p >= 1.0),
                "ps must be a nonempty list of exponents >= 1"
            );
        }
        if let Some(w) = raw.width {
            ensure!(w.is_finite() && w > 0.0, "width must be positive");
        }
        Ok(Scenario {
            raw,
            spec,
            positions,
            compare,
            measures,
        })
    }

    pub fn raw(&self) -> &RawScenario {
        &self.raw
    }

    pub fn spec(&self) -> Result<&FieldSpec> {
        self.spec
            .as_ref()
            .context("no field given: set `field` or `constants` and `matrix`")
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed.unwrap_or(0)
    }

    pub fn trials(&self) -> usize {
        self.raw.trials.unwrap_or(100)
    }

    /// Explicit positions, or the discretised measures with `n` particles.
    pub fn initial_configuration(&self) -> Result<Configuration> {
        match (&self.positions, &self.measures) {
            (Some(x), _) => Ok(x.clone()),
            (None, Some(m)) => Ok(mspd_core::discretise(m, self.n()?)?),
            (None, None) => bail!("no initial data: set `positions` or `measures`"),
        }
    }

    pub fn measures(&self) -> Result<&MeasureVector> {
        self.measures
            .as_ref()
            .context("`measures` is required for this command")
    }

    pub fn n(&self) -> Result<usize> {
        self.raw.n.context("`n` is required for this command")
    }

    /// Requested output times, or just the horizon.
    pub fn times(&self) -> Result<Vec<f64>> {
        match (&self.raw.times, self.raw.horizon) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some(h)) => Ok(vec![h]),
            (None, None) => bail!("set `times` or `horizon`"),
        }
    }

    pub fn horizon(&self) -> Result<f64> {
        let last = self.raw.times.as_ref().and_then(|t| t.last().copied());
        match (self.raw.horizon, last) {
            (Some(h), Some(l)) => Ok(h.max(l)),
            (Some(h), None) => Ok(h),
            (None, Some(l)) => Ok(l),
            (None, None) => bail!("set `times` or `horizon`"),
        }
    }
}

fn build_field(raw: &RawScenario) -> Result<Option<FieldSpec>> {
    match (&raw.field, &raw.constants, &raw.matrix) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            bail!("give either `field` or `constants`/`matrix`, not both")
        }
        (Some(name), None, None) => Ok(Some(match name.as_str() {
            "burgers" => FieldSpec::scalar_affine(0.0, 1.0),
            "compressive" => FieldSpec::scalar_affine(1.0, -1.0),
            other => bail!("unknown builtin field {other:?} (expected \"burgers\" or \"compressive\")"),
        })),
        (None, Some(c), Some(m)) => {
            let d = c.len();
            ensure!(d > 0, "constants is empty");
            ensure!(
                m.len() == d,
                "matrix has {} rows but constants has {d} entries",
                m.len()
            );
            for (i, row) in m.iter().enumerate() {
                ensure!(
                    row.len() == d,
                    "matrix row {} has {} entries, expected {d}",
                    i + 1,
                    row.len()
                );
            }
            Ok(Some(FieldSpec::affine(c.clone(), m.clone())?))
        }
        (None, Some(_), None) => bail!("`constants` given without `matrix`"),
        (None, None, Some(_)) => bail!("`matrix` given without `constants`"),
        (None, None, None) => Ok(None),
    }
}

fn configuration(key: &str, rows: Vec<Vec<f64>>, d: Option<usize>) -> Result<Configuration> {
    if let Some(d) = d {
        ensure!(
            rows.len() == d,
            "{key} has {} rows but the field has d = {d}",
            rows.len()
        );
    }
    Configuration::new(rows).with_context(|| format!("invalid {key}"))
}

fn measure_vector(records: &[String], d: Option<usize>) -> Result<MeasureVector> {
    if let Some(d) = d {
        ensure!(
            records.len() == d,
            "measures has {} entries but the field has d = {d}",
            records.len()
        );
    }
    let ms = records
        .iter()
        .enumerate()
        .map(|(g, s)| {
            s.parse::<ProbMeasure1D>()
                .with_context(|| format!("measure {}", g + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasureVector::new(ms)?)
}
