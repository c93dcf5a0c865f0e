//! Scalar kernel of the two-phase model: parameters, the ε-dependent double
//! well, the phase threshold, the antiderivative `H` used in the lower-bound
//! argument, and the optimal one-dimensional transition profile.
//!
//! Phases are encoded as `0` (the thicker lipid, well bottom `1/λ`) and `1`
//! (well bottom `1`). With `s = c√ε` the phase weights are `a(0) = λ = 1/(1-s)`
//! and `a(1) = 1`.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Phase label, `0` or `1`.
pub type Phase = u8;

/// Profile evaluation returns the far-field constants beyond this many
/// multiples of ε.
pub const PROFILE_CLAMP: f64 = 60.0;

/// Model constants `c`, `σ`, `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    c: f64,
    sigma: f64,
    eps: f64,
}

/// Constants derived from [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// λ_ε = 1/(1 - c√ε).
    pub lambda: f64,
    /// a_ε(0) = λ_ε.
    pub a0: f64,
    /// a_ε(1) = 1.
    pub a1: f64,
    /// Phase threshold a* = 2/(λ + 1).
    pub a_star: f64,
}

impl ModelParams {
    /// Parameters with the default gradient weight σ = 1.
    pub fn new(c: f64, eps: f64) -> Result<Self> {
        Self::with_sigma(c, 1.0, eps)
    }

    pub fn with_sigma(c: f64, sigma: f64, eps: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Parameter(format!("c must be finite and >= 0, got {c}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be > 0, got {sigma}")));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Parameter(format!("eps must be > 0, got {eps}")));
        }
        if c * eps.sqrt() >= 1.0 {
            return Err(Error::Parameter(format!(
                "c*sqrt(eps) = {} must be < 1",
                c * eps.sqrt()
            )));
        }
        Ok(Self { c, sigma, eps })
    }

    /// Same `c` and `σ` at a different ε.
    pub fn at_eps(&self, eps: f64) -> Result<Self> {
        Self::with_sigma(self.c, self.sigma, eps)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// s = c√ε, the relative well separation.
    fn s(&self) -> f64 {
        self.c * self.eps.sqrt()
    }

    pub fn derived(&self) -> DerivedConstants {
        derive_constants(self)
    }

    pub fn lambda(&self) -> f64 {
        1.0 / (1.0 - self.s())
    }

    /// a* = 2/(λ+1), the value where both wells cost the same.
    pub fn a_star(&self) -> f64 {
        2.0 / (self.lambda() + 1.0)
    }

    /// Phase weight a_ε(χ).
    pub fn a(&self, chi: Phase) -> f64 {
        if chi == 0 {
            self.lambda()
        } else {
            1.0
        }
    }

    /// Line-tension coefficient c²/√8 of the sharp-interface limit.
    pub fn line_tension(&self) -> f64 {
        self.c * self.c / 8f64.sqrt()
    }

    /// Energy of one optimal 1D transition, c²/(√2(2 - c√ε)).
    pub fn transition_energy(&self) -> f64 {
        self.c * self.c / (SQRT_2 * (2.0 - self.s()))
    }

    /// Well term ε⁻²(1 - a_ε(χ)M)².
    pub fn well_potential(&self, m: f64, chi: Phase) -> f64 {
        let d = 1.0 - self.a(chi) * m;
        d * d / (self.eps * self.eps)
    }

    /// Derivative of [`well_potential`](Self::well_potential) in `m`.
    pub fn well_slope(&self, m: f64, chi: Phase) -> f64 {
        let a = self.a(chi);
        -2.0 * a * (1.0 - a * m) / (self.eps * self.eps)
    }

    /// Optimal phase for mass `m`: `1` iff `m > a*`. At `m == a*` exactly the
    /// strict inequality assigns phase `0`.
    pub fn threshold_phase(&self, m: f64) -> Phase {
        threshold_phase(m, &self.derived())
    }

    /// Antiderivative `H` of `(√2/ε)|1 - a(χ̄(t))t|`, normalised by
    /// `H(1/λ) = 0`. Continuous and nondecreasing on ℝ.
    pub fn antiderivative_h(&self, t: f64) -> f64 {
        let lambda = self.lambda();
        let a_star = self.a_star();
        let k0 = 1.0 / (SQRT_2 * lambda * self.eps);
        let k1 = 1.0 / (SQRT_2 * self.eps);
        let h1 = self.transition_energy();
        let inv_lambda = 1.0 - self.s();
        if t < inv_lambda {
            -k0 * (1.0 - lambda * t).powi(2)
        } else if t <= a_star {
            k0 * (1.0 - lambda * t).powi(2)
        } else if t <= 1.0 {
            h1 - k1 * (1.0 - t).powi(2)
        } else {
            h1 + k1 * (t - 1.0).powi(2)
        }
    }

    /// Optimal transition profile `q(r)` and its slope `q'(r)`.
    ///
    /// `q` increases from `1/λ` (r → -∞) to `1` (r → +∞) with `q(0) = a*`;
    /// beyond `|r| > 60ε` the far-field constants (and zero slope) are
    /// returned.
    pub fn optimal_profile(&self, r: f64) -> (f64, f64) {
        let eps = self.eps;
        let s = self.s();
        let amp = s / (2.0 - s);
        let slope0 = SQRT_2 * amp / eps;
        if r > PROFILE_CLAMP * eps {
            return (1.0, 0.0);
        }
        if r < -PROFILE_CLAMP * eps {
            return (1.0 - s, 0.0);
        }
        if r >= 0.0 {
            let e = (-SQRT_2 * r / eps).exp();
            (1.0 - amp * e, slope0 * e)
        } else {
            let e = (SQRT_2 * r / (eps * (1.0 - s))).exp();
            ((1.0 - s) + (1.0 - s) * amp * e, slope0 * e)
        }
    }

    /// Left and right branch values `(q, q')` at `r = 0`.
    pub fn profile_branches_at_zero(&self) -> ((f64, f64), (f64, f64)) {
        let eps = self.eps;
        let s = self.s();
        let amp = s / (2.0 - s);
        let slope0 = SQRT_2 * amp / eps;
        (((1.0 - s) + (1.0 - s) * amp, slope0), (1.0 - amp, slope0))
    }

    /// Signed well deviation `1 - a(χ̄(q(r)))·q(r)` along the profile,
    /// evaluated without cancellation and without far-field clamping.
    /// Positive for `r > 0`, negative for `r <= 0`.
    pub fn profile_deficit(&self, r: f64) -> f64 {
        let eps = self.eps;
        let s = self.s();
        let amp = s / (2.0 - s);
        if r > 0.0 {
            amp * (-SQRT_2 * r / eps).exp()
        } else {
            -amp * (SQRT_2 * r / (eps * (1.0 - s))).exp()
        }
    }

    /// `(√2/ε)|1 - a(χ̄(q))q| - q'`, which vanishes along the optimal profile.
    pub fn equipartition_residual(&self, r: f64) -> f64 {
        let (q, dq) = self.optimal_profile(r);
        let chi = self.threshold_phase(q);
        SQRT_2 / self.eps * (1.0 - self.a(chi) * q).abs() - dq
    }
}

/// λ, a(0), a(1) and a* for the given parameters.
pub fn derive_constants(params: &ModelParams) -> DerivedConstants {
    let lambda = params.lambda();
    DerivedConstants {
        lambda,
        a0: lambda,
        a1: 1.0,
        a_star: 2.0 / (lambda + 1.0),
    }
}

/// `1` iff `m > a*` (strict).
pub fn threshold_phase(m: f64, derived: &DerivedConstants) -> Phase {
    Phase::from(m > derived.a_star)
}
