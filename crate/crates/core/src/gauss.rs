//! Gaussian special functions and the closed-form meeting probability of a
//! maximal coupling of two isotropic normals, with its elementary bounds.
//!
//! Everything here is built on a double-precision `erfc` (the `libm` port of
//! the fdlibm routine, < 1 ulp). The χ²₁ tail is only ever computed through
//! the identity `P(χ²₁ ≥ a) = 2 (1 − Φ(√a))`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Mean and standard deviation of a univariate normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub sd: f64,
}

impl NormalParams {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(domain(format!(
                "invalid normal parameters mean={mean}, sd={sd}"
            )));
        }
        Ok(NormalParams { mean, sd })
    }

    pub fn standard() -> Self {
        NormalParams { mean: 0.0, sd: 1.0 }
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }
}

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

// low-order part of 1/√2 beyond FRAC_1_SQRT_2
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;

/// `erfc(z / √2)`, correcting to first order for the rounding of `z / √2`,
/// which erfc amplifies by roughly `z²` in the tail.
fn erfc_of_scaled(z: f64) -> f64 {
    let x = z * FRAC_1_SQRT_2;
    let dx = z.mul_add(FRAC_1_SQRT_2, -x) + z * FRAC_1_SQRT_2_LO;
    libm::erfc(x) - dx * std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp()
}

/// `Φ(z)`, accurate in relative terms throughout the lower tail.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc_of_scaled(-z)
}

/// `1 − Φ(z)`, accurate in relative terms throughout the upper tail.
pub fn std_normal_ccdf(z: f64) -> f64 {
    0.5 * erfc_of_scaled(z)
}

/// `P(a < Z < b)` for a standard normal `Z`, choosing the form that avoids
/// cancellation.
pub fn std_normal_interval(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        std_normal_ccdf(a) - std_normal_ccdf(b)
    } else if b <= 0.0 {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        0.5 * (libm::erf(b * FRAC_1_SQRT_2) - libm::erf(a * FRAC_1_SQRT_2))
    }
}

pub fn normal_pdf(x: f64, p: NormalParams) -> f64 {
    std_normal_pdf(p.z(x)) / p.sd
}

pub fn normal_log_pdf(x: f64, p: NormalParams) -> f64 {
    let z = p.z(x);
    -0.5 * z * z - p.sd.ln() - LN_SQRT_2PI
}

pub fn normal_cdf(x: f64, p: NormalParams) -> f64 {
    std_normal_cdf(p.z(x))
}

pub fn normal_ccdf(x: f64, p: NormalParams) -> f64 {
    std_normal_ccdf(p.z(x))
}

/// Standard normal quantile: rational first guess followed by two Halley
/// corrections against [`std_normal_cdf`].
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(domain(format!("quantile argument {u} outside (0, 1)")));
    }
    if u > 0.5 {
        // 1 − u is exact for u in (0.5, 1).
        return Ok(-lower_quantile(1.0 - u));
    }
    Ok(lower_quantile(u))
}

pub fn normal_quantile(u: f64, p: NormalParams) -> Result<f64> {
    Ok(p.mean + p.sd * std_normal_quantile(u)?)
}

fn lower_quantile(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u <= 0.5);
    let mut x = acklam_guess(u);
    for _ in 0..2 {
        let err = std_normal_cdf(x) - u;
        let t = err / std_normal_pdf(x);
        if !t.is_finite() {
            break;
        }
        x -= t / (1.0 + 0.5 * x * t);
    }
    x
}

// Relative error about 1e-9 before refinement.
fn acklam_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239e0,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838e0,
        -2.549732539343734e0,
        4.374664141464968e0,
        2.938163982698783e0,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996e0,
        3.754408661907416e0,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `P(χ²₁ ≥ a) = 2 (1 − Φ(√a))`.
pub fn chi2_1_ccdf(a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(domain(format!("chi-square argument {a} is negative")));
    }
    Ok(libm::erfc((0.5 * a).sqrt()))
}

fn check_r_sd(r: f64, sd: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(domain(format!("separation r={r} must be nonnegative")));
    }
    if !(sd > 0.0) {
        return Err(domain(format!("proposal sd={sd} must be positive")));
    }
    Ok(())
}

/// Probability that any maximal coupling of `N(x, sd² I)` and `N(y, sd² I)`
/// proposes `x' = y'` when `‖y − x‖ = r`: `P(χ²₁ ≥ r² / 4sd²)`, evaluated as
/// `2 P(N(0,1) ≥ r / 2sd)`.
pub fn meeting_probability(r: f64, sd: f64) -> Result<f64> {
    check_r_sd(r, sd)?;
    Ok(2.0 * std_normal_ccdf(r / (2.0 * sd)))
}

/// `1 − √(2/π) r / (2 sd)`; may be negative.
pub fn meeting_prob_lower_bound(r: f64, sd: f64) -> Result<f64> {
    check_r_sd(r, sd)?;
    Ok(1.0 - (2.0 / PI).sqrt() * r / (2.0 * sd))
}

/// Markov bound `4 sd² / r²` (infinite at `r = 0`).
pub fn meeting_prob_upper_markov(r: f64, sd: f64) -> Result<f64> {
    check_r_sd(r, sd)?;
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ratio = 2.0 * sd / r;
    Ok(ratio * ratio)
}

/// Chernoff bound `(1 − 2s)^{-1/2} exp(−s r² / 4sd²)` for `s ∈ (0, 1/2)`.
pub fn meeting_prob_upper_chernoff(r: f64, sd: f64, s: f64) -> Result<f64> {
    check_r_sd(r, sd)?;
    if !(s > 0.0 && s < 0.5) {
        return Err(domain(format!("Chernoff parameter s={s} outside (0, 1/2)")));
    }
    let a = r / (2.0 * sd);
    Ok((-s * a * a).exp() / (1.0 - 2.0 * s).sqrt())
}

/// Chernoff bound at its minimizing `s = (1 − 4sd²/r²) / 2`. When
/// `r ≤ 2 sd` the infimum over `s` is the trivial value 1.
pub fn meeting_prob_upper_chernoff_best(r: f64, sd: f64) -> Result<f64> {
    check_r_sd(r, sd)?;
    let a = (r / (2.0 * sd)).powi(2);
    if a <= 1.0 {
        return Ok(1.0);
    }
    meeting_prob_upper_chernoff(r, sd, 0.5 * (1.0 - 1.0 / a))
}
