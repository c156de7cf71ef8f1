use serde::{Deserialize, Serialize};

use crate::cone::{Cone, ConeSpec};
use crate::error::{Error, Result};
use crate::geometry::{GEProblem, PolynomialMap, Term};
use crate::linalg::{vector, Vector};
use crate::settings::Settings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePoint {
    pub xbar: Vec<f64>,
    pub ybar: Vec<f64>,
}

/// A problem file: `0 ∈ f(x, y) + N_Γ(y)`, `Γ = {y : g(y) ∈ Θ}`, with `f` a map of `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dims: Dims,
    pub cone: ConeSpec,
    pub g: Vec<Vec<Term>>,
    pub f: Vec<Vec<Term>>,
    pub reference: ReferencePoint,
    #[serde(default)]
    pub options: Settings,
    /// Extra points of Θ at which the cone itself is examined.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cone_probe: Vec<Vec<f64>>,
}

impl ProblemFile {
    /// Parse JSON, reporting the field path and position of the first error.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        file.options.validate().map_err(|e| Error::Parse { path: "options".into(), message: e.to_string() })?;
        Ok(file)
    }

    fn field<T>(path: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
    }

    fn expect_len(path: &str, got: usize, expected: usize) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::Parse { path: path.into(), message: format!("expected {expected} entries, got {got}") })
        }
    }

    pub fn problem(&self) -> Result<GEProblem> {
        let Dims { n, m, l } = self.dims;
        if m == 0 || l == 0 {
            return Err(Error::Parse { path: "dims".into(), message: "m and l must be positive".into() });
        }
        let theta = Self::field("cone", Cone::try_from(self.cone.clone()))?;
        Self::expect_len("cone.dim", theta.dim(), l)?;
        Self::expect_len("g", self.g.len(), l)?;
        Self::expect_len("f", self.f.len(), m)?;
        Self::expect_len("reference.xbar", self.reference.xbar.len(), n)?;
        Self::expect_len("reference.ybar", self.reference.ybar.len(), m)?;
        for (i, p) in self.cone_probe.iter().enumerate() {
            Self::expect_len(&format!("coneProbe[{i}]"), p.len(), l)?;
        }
        let g = Self::field("g", PolynomialMap::new(m, self.g.clone()))?;
        let f = Self::field("f", PolynomialMap::new(n + m, self.f.clone()))?;
        GEProblem::new(f, g, theta, vector(&self.reference.xbar), vector(&self.reference.ybar))
    }

    pub fn cone_probe_points(&self) -> Vec<Vector> {
        self.cone_probe.iter().map(|p| vector(p)).collect()
    }
}
