use crate::activation::ActivationProfile;
use crate::error::{Error, Result};

/// One asymptotic problem instance.
///
/// `psi1 = N/d` and `psi2 = n/d` are the feature and sample ratios,
/// `f1_sq` the squared norm of the linear target and `tau_sq` the label
/// noise variance.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub psi1: f64,
    pub psi2: f64,
    pub f1_sq: f64,
    pub tau_sq: f64,
    pub profile: ActivationProfile,
}

impl ModelParams {
    pub fn new(
        psi1: f64,
        psi2: f64,
        f1_sq: f64,
        tau_sq: f64,
        profile: ActivationProfile,
    ) -> Result<Self> {
        let p = Self {
            psi1,
            psi2,
            f1_sq,
            tau_sq,
            profile,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !positive(self.psi1) || !positive(self.psi2) {
            return Err(Error::InvalidParams(format!(
                "psi1 and psi2 must be positive, got ({}, {})",
                self.psi1, self.psi2
            )));
        }
        if !nonneg(self.f1_sq) || !nonneg(self.tau_sq) {
            return Err(Error::InvalidParams(format!(
                "f1_sq and tau_sq must be non-negative, got ({}, {})",
                self.f1_sq, self.tau_sq
            )));
        }
        let zeta = self.zeta();
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "zeta = {zeta} must be finite and positive"
            )));
        }
        Ok(())
    }

    pub fn mu1_sq(&self) -> f64 {
        self.profile.mu1_sq()
    }

    pub fn mustar_sq(&self) -> f64 {
        self.profile.mustar_sq
    }

    pub fn zeta(&self) -> f64 {
        self.profile.zeta()
    }

    /// Same model at other aspect ratios.
    pub fn with_psi(&self, psi1: f64, psi2: f64) -> Self {
        Self {
            psi1,
            psi2,
            ..*self
        }
    }

    pub fn with_noise(&self, tau_sq: f64) -> Self {
        Self { tau_sq, ..*self }
    }

    pub fn is_overparameterized(&self) -> bool {
        self.psi1 > self.psi2
    }
}
