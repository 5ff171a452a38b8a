//! Statistical oracles: Kolmogorov–Smirnov tests, binomial checks, numerical
//! integration of the maximal-coupling component densities, and reference
//! draws by plain rejection sampling.
//!
//! Nothing here calls into the proposal samplers; the oracles are built from
//! the Gaussian primitives in [`crate::gauss`] alone.

pub mod suite;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Error, Result};
use crate::gauss::{normal_log_pdf, normal_pdf, std_normal_quantile, NormalParams};

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let c = PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * c).exp()
            })
            .sum();
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

fn stephens(n_eff: f64, d: f64) -> f64 {
    let s = n_eff.sqrt();
    (s + 0.12 + 0.11 / s) * d
}

/// One-sample KS statistic and asymptotic p-value. `cdf` is evaluated at the
/// sorted samples in ascending order, which lets cumulative oracles reuse
/// their previous work.
pub fn ks_statistic<F: FnMut(f64) -> f64>(samples: &[f64], mut cdf: F) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(domain("KS statistic needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok((d, kolmogorov_sf(stephens(n, d))))
}

/// Two-sample KS statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("two-sample KS needs nonempty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok((d, kolmogorov_sf(stephens(n * m / (n + m), d))))
}

/// Standardized deviation of an observed frequency from `p`.
pub fn binomial_z(hits: usize, n: usize, p: f64) -> f64 {
    let rate = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    if se == 0.0 {
        if rate == p {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (rate - p) / se
    }
}

/// Two-sided normal critical value for family-wise level `alpha` over
/// `n_tests` tests.
pub fn bonferroni_z(alpha: f64, n_tests: usize) -> f64 {
    let tail = alpha / (2.0 * n_tests.max(1) as f64);
    -std_normal_quantile(tail).expect("tail probability in (0, 1)")
}

const MAX_DEPTH: u32 = 60;
// Forced subdivisions, so a narrow peak cannot hide between the first
// sample points of a long interval.
const MIN_DEPTH: u32 = 6;

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let l = 0.5 * (a + c);
    let r = 0.5 * (c + b);
    let fl = f(l);
    let fr = f(r);
    let left = (c - a) / 6.0 * (fa + 4.0 * fl + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fr + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fl, left, 0.5 * tol, depth + 1)
        + simpson_step(f, c, b, fc, fb, fr, right, 0.5 * tol, depth + 1)
}

/// Which component of a maximal coupling of `N(x1, sd²)` and `N(y1, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualSide {
    /// Overlap `min(q_x, q_y)`: the law of the common value on a meet.
    Meet,
    /// `(q_x − q_y)⁺`: the law of `x'` given no meet.
    XResidual,
    /// `(q_y − q_x)⁺`.
    YResidual,
}

/// Unnormalized component density at `z`.
pub fn residual_density(z: f64, x1: f64, y1: f64, sd: f64, side: ResidualSide) -> f64 {
    let qx = normal_pdf(z, NormalParams { mean: x1, sd });
    let qy = normal_pdf(z, NormalParams { mean: y1, sd });
    match side {
        ResidualSide::Meet => qx.min(qy),
        ResidualSide::XResidual => (qx - qy).max(0.0),
        ResidualSide::YResidual => (qy - qx).max(0.0),
    }
}

/// Normalized component law, integrated numerically.
#[derive(Debug, Clone)]
pub struct ResidualOracle {
    pub x1: f64,
    pub y1: f64,
    pub sd: f64,
    pub side: ResidualSide,
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
    /// Total unnormalized mass.
    pub mass: f64,
}

impl ResidualOracle {
    pub fn new(x1: f64, y1: f64, sd: f64, side: ResidualSide) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(domain(format!("sd must be positive, got {sd}")));
        }
        if x1 == y1 && side != ResidualSide::Meet {
            return Err(domain("residual has zero mass when x1 == y1"));
        }
        let lo = x1.min(y1) - 40.0 * sd;
        let hi = x1.max(y1) + 40.0 * sd;
        let mut breaks = vec![x1.min(y1), 0.5 * (x1 + y1), x1.max(y1)];
        breaks.dedup();
        let mut oracle = ResidualOracle {
            x1,
            y1,
            sd,
            side,
            lo,
            hi,
            breaks,
            mass: 1.0,
        };
        let rough = oracle.integrate_unnormalized(lo, hi, 1e-8);
        oracle.mass = oracle.integrate_unnormalized(lo, hi, 1e-11 * rough);
        Ok(oracle)
    }

    pub fn density(&self, z: f64) -> f64 {
        residual_density(z, self.x1, self.y1, self.sd, self.side)
    }

    fn integrate_unnormalized(&self, a: f64, b: f64, tol: f64) -> f64 {
        let f = |z: f64| self.density(z);
        let mut knots = vec![a];
        knots.extend(self.breaks.iter().copied().filter(|&k| k > a && k < b));
        knots.push(b);
        knots
            .windows(2)
            .map(|w| integrate(&f, w[0], w[1], tol))
            .sum()
    }

    /// Mass of `(−∞, v]`, normalized.
    pub fn cdf(&self, v: f64) -> f64 {
        if v <= self.lo {
            return 0.0;
        }
        let v = v.min(self.hi);
        (self.integrate_unnormalized(self.lo, v, 1e-12 * self.mass) / self.mass).clamp(0.0, 1.0)
    }

    /// A CDF that integrates incrementally between successive (ascending)
    /// arguments. Falls back to a fresh integral on a descending call.
    pub fn cumulative(&self) -> impl FnMut(f64) -> f64 {
        self.clone().into_cumulative()
    }

    pub fn into_cumulative(self) -> impl FnMut(f64) -> f64 {
        let mut last = self.lo;
        let mut acc = 0.0;
        move |v: f64| {
            if v <= self.lo {
                return 0.0;
            }
            let v = v.min(self.hi);
            if v < last {
                last = self.lo;
                acc = 0.0;
            }
            acc += self.integrate_unnormalized(last, v, 1e-13 * self.mass);
            last = v;
            (acc / self.mass).clamp(0.0, 1.0)
        }
    }
}

/// Incremental CDF of a component law; see [`ResidualOracle::cumulative`].
///
/// # Panics
/// If the oracle cannot be built (non-positive `sd`, or an empty residual).
pub fn residual_cdf(x1: f64, y1: f64, sd: f64, side: ResidualSide) -> impl FnMut(f64) -> f64 {
    ResidualOracle::new(x1, y1, sd, side)
        .expect("valid residual oracle")
        .into_cumulative()
}

/// Exact draw from a normalized component by rejection from the matching
/// normal.
pub fn rejection_residual_sampler<R: Rng + ?Sized>(
    x1: f64,
    y1: f64,
    sd: f64,
    side: ResidualSide,
    cap: u64,
    rng: &mut R,
) -> Result<f64> {
    if !(sd > 0.0) {
        return Err(domain(format!("sd must be positive, got {sd}")));
    }
    if x1 == y1 && side != ResidualSide::Meet {
        return Err(domain("residual has zero mass when x1 == y1"));
    }
    let (from, other) = match side {
        ResidualSide::Meet | ResidualSide::XResidual => (x1, y1),
        ResidualSide::YResidual => (y1, x1),
    };
    let proposal = Normal::new(from, sd).map_err(|e| domain(e.to_string()))?;
    let pf = NormalParams { mean: from, sd };
    let po = NormalParams { mean: other, sd };
    for _ in 0..cap {
        let z = proposal.sample(rng);
        let ratio = (normal_log_pdf(z, po) - normal_log_pdf(z, pf)).exp();
        let accept_prob = match side {
            ResidualSide::Meet => ratio.min(1.0),
            _ => (1.0 - ratio).max(0.0),
        };
        let w: f64 = rng.random();
        if w < accept_prob {
            return Ok(z);
        }
    }
    Err(Error::RejectionCapExceeded { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{meeting_probability, std_normal_cdf};
    use crate::seeding::stream_rng;

    #[test]
    fn ks_on_exact_quantiles() {
        let n = 1000;
        let samples: Vec<f64> = (1..=n)
            .map(|i| std_normal_quantile(i as f64 / (n + 1) as f64).unwrap())
            .collect();
        let (d, p) = ks_statistic(&samples, std_normal_cdf).unwrap();
        assert!(d <= 1.0 / (n + 1) as f64 + 1.0 / n as f64);
        assert!(p > 0.99);
    }

    #[test]
    fn ks_constant_samples() {
        let samples = vec![0.3; 50];
        let (d, p) = ks_statistic(&samples, std_normal_cdf).unwrap();
        let f = std_normal_cdf(0.3);
        assert!((d - f.max(1.0 - f)).abs() < 1e-12);
        assert!(p < 1e-6);
        assert!(ks_statistic(&[], std_normal_cdf).is_err());
    }

    #[test]
    fn ks_p_values_are_calibrated() {
        let mut rng = stream_rng(99);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let reps = 200;
        let n = 10_000;
        let rejections = (0..reps)
            .filter(|_| {
                let s: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                ks_statistic(&s, std_normal_cdf).unwrap().1 < 0.01
            })
            .count();
        let se = (0.01f64 * 0.99 / reps as f64).sqrt();
        assert!(
            (rejections as f64 / reps as f64 - 0.01).abs() <= 3.0 * se,
            "{rejections}"
        );
    }

    #[test]
    fn kolmogorov_tail_branches_agree() {
        // The two series meet continuously at the switch point.
        let a = kolmogorov_sf(1.18 - 1e-9);
        let b = kolmogorov_sf(1.18 + 1e-9);
        assert!((a - b).abs() < 1e-8);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn two_sample_ks() {
        let mut rng = stream_rng(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
        assert!(ks_two_sample(&a, &b).unwrap().1 > 0.001);
        let c: Vec<f64> = b.iter().map(|v| v + 0.2).collect();
        assert!(ks_two_sample(&a, &c).unwrap().1 < 1e-6);
    }

    #[test]
    fn bonferroni_threshold() {
        assert!((bonferroni_z(0.05, 1) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(bonferroni_z(0.001, 100) > 4.0);
    }

    #[test]
    fn meet_mass_matches_closed_form() {
        for &(x1, y1, sd) in &[
            (0.0, 2.0, 1.0),
            (1.0, -0.5, 0.3),
            (0.0, 0.1, 2.0),
            (0.0, 8.0, 1.0),
        ] {
            let o = ResidualOracle::new(x1, y1, sd, ResidualSide::Meet).unwrap();
            let exact = meeting_probability((y1 - x1).abs(), sd).unwrap();
            assert!((o.mass - exact).abs() < 1e-8, "{} vs {exact}", o.mass);
            let ox = ResidualOracle::new(x1, y1, sd, ResidualSide::XResidual).unwrap();
            assert!((ox.mass - (1.0 - exact)).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_support_and_identity() {
        let (x1, y1, sd) = (0.0, 1.0, 0.7);
        for k in 0..200 {
            let z = -4.0 + 0.05 * k as f64;
            let xr = residual_density(z, x1, y1, sd, ResidualSide::XResidual);
            if z >= 0.5 {
                assert_eq!(xr, 0.0);
            }
            let total = xr + residual_density(z, x1, y1, sd, ResidualSide::Meet);
            let qx = normal_pdf(z, NormalParams { mean: x1, sd });
            assert!((total - qx).abs() < 1e-12);
        }
    }

    #[test]
    fn rejection_sampler_matches_quadrature() {
        let mut rng = stream_rng(6);
        let (x1, y1, sd) = (0.0, 1.5, 1.0);
        for side in [
            ResidualSide::Meet,
            ResidualSide::XResidual,
            ResidualSide::YResidual,
        ] {
            let draws: Vec<f64> = (0..100_000)
                .map(|_| rejection_residual_sampler(x1, y1, sd, side, 10_000, &mut rng).unwrap())
                .collect();
            match side {
                ResidualSide::XResidual => assert!(draws.iter().all(|&z| z < 0.75)),
                ResidualSide::YResidual => assert!(draws.iter().all(|&z| z > 0.75)),
                ResidualSide::Meet => {}
            }
            let oracle = ResidualOracle::new(x1, y1, sd, side).unwrap();
            let (_, p) = ks_statistic(&draws, oracle.cumulative()).unwrap();
            assert!(p > 0.001, "{side:?}: p={p}");
        }
        assert!(
            rejection_residual_sampler(1.0, 1.0, 1.0, ResidualSide::XResidual, 10, &mut rng)
                .is_err()
        );
        assert!(ResidualOracle::new(1.0, 1.0, 1.0, ResidualSide::YResidual).is_err());
    }

    #[test]
    fn cumulative_matches_direct_cdf() {
        let o = ResidualOracle::new(0.0, 1.0, 1.0, ResidualSide::Meet).unwrap();
        let mut cum = o.cumulative();
        for k in 0..60 {
            let v = -3.0 + 0.1 * k as f64;
            assert!((cum(v) - o.cdf(v)).abs() < 1e-10);
        }
        assert!((cum(-1.0) - o.cdf(-1.0)).abs() < 1e-10);
        assert!((o.cdf(100.0) - 1.0).abs() < 1e-10);
    }
}
