use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// Run-time knobs shared by the analysis stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Settings {
    pub seed: u64,
    pub tol_kkt: f64,
    pub tol_membership: f64,
    pub face_cap: usize,
    /// Radius of the ball around `ȳ` in which projections onto Γ are trusted;
    /// `None` means `0.5 (1 + |ȳ|)`.
    pub trust_radius: Option<f64>,
    pub radii: Vec<f64>,
    pub directions: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 0,
            tol_kkt: tol::KKT,
            tol_membership: tol::MEMBERSHIP,
            face_cap: tol::FACE_CAP,
            trust_radius: None,
            radii: vec![1e-2, 1e-3, 1e-4],
            directions: 32,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tolKkt", self.tol_kkt), ("tolMembership", self.tol_membership)] {
            if !(1e-14..=1e-2).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} = {v:e} is outside [1e-14, 1e-2]")));
            }
        }
        if self.face_cap == 0 {
            return Err(Error::InvalidInput("faceCap must be positive".into()));
        }
        if let Some(r) = self.trust_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidInput("trustRadius must be positive".into()));
            }
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidInput("radii must be a nonempty list of positive numbers".into()));
        }
        if self.directions == 0 {
            return Err(Error::InvalidInput("directions must be positive".into()));
        }
        Ok(())
    }
}
