//! Worked families: a ground state mixed with Gibbs noise, and uniform
//! distributions over flat and semicircle spectra.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::entropy::{expected_work_content, smoothed_renyi0, Certificate};
use crate::error::{param, Error, Result};
use crate::fluctuation::yield_fluctuation_sigma;
use crate::numeric::log_sum_exp;
use crate::thermo::{gibbs, log_gibbs, log_partition, Bath, Distribution, EnergyLevels};

/// Explicit products stop at this many outcomes.
pub const EXPLICIT_PRODUCT_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedExact {
    pub a: f64,
    pub sigma: f64,
    /// `kT ln2 · D₀^ε(q‖G(h^m))`.
    pub aeps: f64,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedFamily {
    pub m: usize,
    /// `-(1-ν) m kT ln2 log2 G_s(h)`.
    pub a_leading: f64,
    /// `-m kT ln2 sqrt(ν(1-ν)) log2 G_s(h)`.
    pub sigma_leading: f64,
    /// `-m kT ln2 log2 G_s(h)`, the ν = ε form.
    pub aeps_leading: f64,
    /// `G_x(h^m) = G_s(h)^m`; the leading forms need it to vanish.
    pub gibbs_weight: f64,
    pub exact: Option<MixedExact>,
}

impl MixedFamily {
    /// `exact / leading` for A, σ and A^ε.
    pub fn ratios(&self) -> Option<[f64; 3]> {
        self.exact.as_ref().map(|e| [e.a / self.a_leading, e.sigma / self.sigma_leading, e.aeps / self.aeps_leading])
    }
}

/// Levels of `m` non-interacting copies, outcome index in base `d`, first copy most significant.
pub fn product_levels(h: &EnergyLevels, m: usize) -> Result<EnergyLevels> {
    let d = h.len();
    let total = checked_power(d, m)?;
    let mut out = vec![0.0; total];
    for (idx, e) in out.iter_mut().enumerate() {
        let mut k = idx;
        for _ in 0..m {
            *e += h.levels()[k % d];
            k /= d;
        }
    }
    EnergyLevels::new(out)
}

fn checked_power(d: usize, m: usize) -> Result<usize> {
    match d.checked_pow(m as u32) {
        Some(t) if t <= EXPLICIT_PRODUCT_CAP => Ok(t),
        _ => Err(Error::SizeCap(format!("{d}^{m} outcomes exceed the explicit product cap {EXPLICIT_PRODUCT_CAP}"))),
    }
}

/// `(1-ν) δ_x + ν G(h)` with x the state `s` on every copy.
pub fn mixed_state(h: &EnergyLevels, bath: &Bath, nu: f64, x: usize) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&nu) {
        return param(format!("mixing weight must lie in [0,1], got {nu}"));
    }
    if x >= h.len() {
        return Err(Error::IndexOutOfRange { index: x, n: h.len() });
    }
    let g = gibbs(h, bath);
    let mut p: Vec<f64> = g.probs().iter().map(|w| nu * w).collect();
    p[x] += 1.0 - nu;
    Distribution::new(p)
}

/// Leading-order values for `m` copies, plus exact values on the explicit product when it fits.
#[allow(clippy::too_many_arguments)]
pub fn mixed_family_quantities(
    h_base: &EnergyLevels,
    bath: &Bath,
    nu: f64,
    s: usize,
    m: usize,
    eps: f64,
) -> Result<MixedFamily> {
    let d = h_base.len();
    if s >= d {
        return Err(Error::IndexOutOfRange { index: s, n: d });
    }
    if m == 0 {
        return param("copy count m must be at least 1");
    }
    let log2_gs = log_gibbs(h_base, bath)[s] / LN_2;
    let unit = bath.kt() * LN_2 * m as f64;
    let a_leading = -(1.0 - nu) * unit * log2_gs;
    let sigma_leading = -unit * (nu * (1.0 - nu)).sqrt() * log2_gs;
    let aeps_leading = -unit * log2_gs;
    let gibbs_weight = (m as f64 * log2_gs * LN_2).exp();

    let exact = match checked_power(d, m) {
        Ok(total) => {
            let hm = product_levels(h_base, m)?;
            let x = (0..m).fold(0usize, |acc, _| acc * d + s);
            debug_assert!(x < total);
            let q = mixed_state(&hm, bath, nu, x)?;
            let (d0, sol) = smoothed_renyi0(&q, &gibbs(&hm, bath), eps)?;
            Some(MixedExact {
                a: expected_work_content(&q, &hm, bath)?,
                sigma: yield_fluctuation_sigma(&q, &hm, bath)?,
                aeps: bath.kt() * LN_2 * d0,
                certificate: sol.certificate,
            })
        }
        Err(_) => None,
    };
    Ok(MixedFamily { m, a_leading, sigma_leading, aeps_leading, gibbs_weight, exact })
}

/// Values for a uniform distribution over a discretized spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumValues {
    pub n: usize,
    /// `A = kT ln mean(e^{-βh})` for uniform q.
    pub a: f64,
    /// Standard deviation of the yield, the level spread.
    pub sigma: f64,
    /// `kT ln2 · D₀^ε(U‖G(h))` by removing the lowest levels.
    pub aeps: f64,
    /// Levels removed, the largest `S < εn`.
    pub removed: usize,
}

/// Closed-form removal for a uniform q: drop the `S` lowest levels, `S` the largest integer below `εn`.
pub fn uniform_spectrum_values(levels: &EnergyLevels, bath: &Bath, eps: f64) -> Result<SpectrumValues> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("epsilon must lie in (0,1), got {eps}"));
    }
    let n = levels.len();
    let u = Distribution::uniform(n)?;
    let mut sorted = levels.levels().to_vec();
    sorted.sort_by(f64::total_cmp);
    let removed = ((eps * n as f64).ceil() as usize).saturating_sub(1);
    let beta = bath.beta();
    let log_z = log_partition(levels, bath);
    let log_kept = log_sum_exp(sorted[removed..].iter().map(|e| -beta * e));
    Ok(SpectrumValues {
        n,
        a: expected_work_content(&u, levels, bath)?,
        sigma: yield_fluctuation_sigma(&u, levels, bath)?,
        aeps: bath.kt() * (log_z - log_kept),
        removed,
    })
}

/// Midpoint quantiles `x_k = F⁻¹((k-½)/n)`.
pub fn quantile_levels(n: usize, inverse_cdf: impl Fn(f64) -> f64) -> Result<EnergyLevels> {
    if n < 2 {
        return param(format!("spectral sample count must be at least 2, got {n}"));
    }
    EnergyLevels::new((1..=n).map(|k| inverse_cdf((k as f64 - 0.5) / n as f64)).collect())
}

pub fn flat_levels(a: f64, n: usize) -> Result<EnergyLevels> {
    if !(a > 0.0 && a.is_finite()) {
        return param(format!("flat half-width must be positive, got {a}"));
    }
    quantile_levels(n, |p| a * (2.0 * p - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatSpectrum {
    pub half_width: f64,
    pub values: SpectrumValues,
    /// `A/a`.
    pub a_ratio: f64,
    /// `σ/(a/√3)`.
    pub sigma_ratio: f64,
    /// `A^ε/(2εa)`.
    pub aeps_ratio: f64,
}

pub fn flat_spectrum_quantities(a: f64, bath: &Bath, eps: f64, n: usize) -> Result<FlatSpectrum> {
    let values = uniform_spectrum_values(&flat_levels(a, n)?, bath, eps)?;
    Ok(FlatSpectrum {
        half_width: a,
        a_ratio: values.a / a,
        sigma_ratio: values.sigma / (a / 3f64.sqrt()),
        aeps_ratio: values.aeps / (2.0 * eps * a),
        values,
    })
}

/// Unit semicircle distribution function on `[-1, 1]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -1.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI
}

/// Inverse of [`semicircle_cdf`] by bisection to machine resolution.
pub fn semicircle_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if semicircle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn semicircle_levels(radius: f64, n: usize) -> Result<EnergyLevels> {
    if !(radius > 0.0 && radius.is_finite()) {
        return param(format!("semicircle radius must be positive, got {radius}"));
    }
    quantile_levels(n, |p| radius * semicircle_quantile(p))
}

/// `c(ε) = 1 + F⁻¹(ε)` for the unit semicircle.
pub fn wigner_c(eps: f64) -> f64 {
    1.0 + semicircle_quantile(eps)
}

/// `((3πε/(4√2))^{2/3}, (3πε/4)^{2/3})`.
pub fn wigner_c_bounds(eps: f64) -> (f64, f64) {
    let lo = (3.0 * PI * eps / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0);
    let hi = (3.0 * PI * eps / 4.0).powf(2.0 / 3.0);
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerSpectrum {
    pub radius: f64,
    pub values: SpectrumValues,
    /// `A/R`.
    pub a_ratio: f64,
    /// `σ/R`, 1/2 in the continuum.
    pub sigma_over_r: f64,
    /// `A^ε/(c(ε) R)`.
    pub aeps_ratio: f64,
    pub c_eps: f64,
    pub c_bounds: (f64, f64),
}

pub fn wigner_quantities(radius: f64, bath: &Bath, eps: f64, n: usize) -> Result<WignerSpectrum> {
    if !(eps > 0.0 && eps < 0.5) {
        return param(format!("the semicircle case needs epsilon in (0, 1/2), got {eps}"));
    }
    let values = uniform_spectrum_values(&semicircle_levels(radius, n)?, bath, eps)?;
    let c_eps = wigner_c(eps);
    Ok(WignerSpectrum {
        radius,
        a_ratio: values.a / radius,
        sigma_over_r: values.sigma / radius,
        aeps_ratio: values.aeps / (c_eps * radius),
        c_eps,
        c_bounds: wigner_c_bounds(eps),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::eps_free_energy;
    use crate::thermo::free_energy;
    use approx::assert_relative_eq;

    #[test]
    fn product_levels_add() {
        let h = EnergyLevels::new(vec![0.0, 1.0, 5.0]).unwrap();
        let p = product_levels(&h, 2).unwrap();
        assert_eq!(p.levels(), &[0.0, 1.0, 5.0, 1.0, 2.0, 6.0, 5.0, 6.0, 10.0]);
        assert!(product_levels(&EnergyLevels::degenerate(2, 0.0).unwrap(), 17).is_err());
    }

    #[test]
    fn mixed_point_mass_has_no_spread() {
        let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
        let r = mixed_family_quantities(&h, &Bath::default(), 0.0, 1, 3, 0.1).unwrap();
        assert_eq!(r.sigma_leading, 0.0);
        assert!(r.exact.unwrap().sigma.abs() < 1e-12);
    }

    #[test]
    fn mixed_family_aeps_exact() {
        // q(x) = 0.9 + 0.1/2^m already exceeds 1-ε, so Λ = {x} and D₀^ε = m bits
        let h = EnergyLevels::new(vec![0.0, 0.0]).unwrap();
        let r = mixed_family_quantities(&h, &Bath::default(), 0.1, 1, 6, 0.1).unwrap();
        assert_relative_eq!(r.exact.as_ref().unwrap().aeps, 6.0 * LN_2, epsilon = 1e-12);
        assert_relative_eq!(r.aeps_leading, 6.0 * LN_2, epsilon = 1e-12);
        assert_relative_eq!(r.gibbs_weight, 1.0 / 64.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_removal_matches_solver() {
        let b = Bath::with_beta(0.7).unwrap();
        let levels = flat_levels(3.0, 40).unwrap();
        let u = Distribution::uniform(40).unwrap();
        // away from integer εn, where the strict inequality is decided by rounding
        for eps in [0.07, 0.13, 0.31] {
            let v = uniform_spectrum_values(&levels, &b, eps).unwrap();
            let (fe, _) = eps_free_energy(&u, &levels, &b, eps).unwrap();
            assert_relative_eq!(v.aeps, fe - free_energy(&levels, &b), epsilon = 1e-10);
        }
    }

    #[test]
    fn semicircle_inverse() {
        assert_eq!(semicircle_cdf(0.0), 0.5);
        for p in [0.01, 0.2, 0.5, 0.77] {
            assert!((semicircle_cdf(semicircle_quantile(p)) - p).abs() < 1e-14);
        }
        assert!((wigner_c(0.5 - 1e-12) - 1.0).abs() < 1e-9);
        let (lo, hi) = wigner_c_bounds(0.01);
        let c = wigner_c(0.01);
        assert!(lo <= c && c <= hi, "{lo} {c} {hi}");
    }

    #[test]
    fn flat_sigma_ratio() {
        let r = flat_spectrum_quantities(50.0, &Bath::default(), 0.05, 10_000).unwrap();
        assert!((r.sigma_ratio - 1.0).abs() < 1e-3);
    }
}
