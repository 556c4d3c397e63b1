//! The Wachter law: limit of the empirical measure of squared sample
//! canonical correlations of independent panels with `S/K -> tau_K`,
//! `S/M -> tau_M`.

use nalgebra::ComplexField;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;
use crate::spectrum::Spectrum;

/// Aspect ratios `(tau_K, tau_M)` with support endpoints precomputed.
///
/// Both ratios must exceed one and `1/tau_K + 1/tau_M < 1`. The usual
/// orientation is `tau_K >= tau_M` (K <= M). The reverse orientation is
/// accepted: the support and the spike formulas are symmetric, and the
/// density then integrates to `tau_K / tau_M`, the rest of the mass being
/// an atom at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct WachterParams<T: Real = f64> {
    tau_k: T,
    tau_m: T,
    lambda_minus: T,
    lambda_plus: T,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    tau_k: f64,
    tau_m: f64,
}

impl<T: Real> TryFrom<RawParams> for WachterParams<T> {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        Self::new(T::lit(r.tau_k), T::lit(r.tau_m))
    }
}

impl<T: Real> From<WachterParams<T>> for RawParams {
    fn from(p: WachterParams<T>) -> Self {
        RawParams { tau_k: p.tau_k.as_f64(), tau_m: p.tau_m.as_f64() }
    }
}

impl<T: Real> WachterParams<T> {
    pub fn new(tau_k: T, tau_m: T) -> Result<Self> {
        let one = T::one();
        if !(tau_k.is_finite() && tau_m.is_finite()) || !(tau_k > one && tau_m > one) {
            return Err(Error::InvalidParams(format!(
                "tau_K = {}, tau_M = {} must both exceed 1",
                tau_k.as_f64(),
                tau_m.as_f64()
            )));
        }
        let (ik, im) = (one / tau_k, one / tau_m);
        if !(ik + im < one) {
            return Err(Error::InvalidParams(format!(
                "1/tau_K + 1/tau_M = {} must be below 1",
                (ik + im).as_f64()
            )));
        }
        let a = (im * (one - ik)).sqrt();
        let b = (ik * (one - im)).sqrt();
        Ok(Self { tau_k, tau_m, lambda_minus: (a - b) * (a - b), lambda_plus: (a + b) * (a + b) })
    }

    /// Ratios `(S/K, S/M)` from panel sizes.
    pub fn from_dims(k: usize, m: usize, s: usize) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::InvalidParams("K and M must be positive".into()));
        }
        let s = T::from_count(s);
        Self::new(s / T::from_count(k), s / T::from_count(m))
    }

    pub fn tau_k(&self) -> T {
        self.tau_k
    }

    pub fn tau_m(&self) -> T {
        self.tau_m
    }

    /// Parameters with the two ratios exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tau_k: self.tau_m,
            tau_m: self.tau_k,
            lambda_minus: self.lambda_minus,
            lambda_plus: self.lambda_plus,
        }
    }

    pub fn support(&self) -> (T, T) {
        (self.lambda_minus, self.lambda_plus)
    }

    pub fn lambda_minus(&self) -> T {
        self.lambda_minus
    }

    pub fn lambda_plus(&self) -> T {
        self.lambda_plus
    }

    /// Total mass of the absolutely continuous part.
    pub fn continuous_mass(&self) -> T {
        (self.tau_k / self.tau_m).min(T::one())
    }

    pub fn pdf(&self, x: T) -> T {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return T::zero();
        }
        let two_pi = T::two_pi();
        self.tau_k / two_pi * ((x - lo) * (hi - x)).sqrt() / (x * (T::one() - x))
    }

    /// Square-root edge coefficient at `lambda_+`.
    pub fn c_plus(&self) -> T {
        let (lo, hi) = self.support();
        self.tau_k / T::lit(2.0) * (hi - lo).sqrt() / (hi * (T::one() - hi))
    }

    /// Edge coefficients `(c_-, c_+)`, with `pdf(x) ≈ (c/π)·sqrt|x - λ|` near each edge.
    pub fn edge_constants(&self) -> Result<(T, T)> {
        let (lo, hi) = self.support();
        if !(lo > T::zero()) {
            return Err(Error::DegenerateLowerEdge);
        }
        let c_minus = self.tau_k / T::lit(2.0) * (hi - lo).sqrt() / (lo * (T::one() - lo));
        Ok((c_minus, self.c_plus()))
    }

    /// Stieltjes transform `G(z) = ∫ ω(dx) / (z - x)` off the support.
    ///
    /// The square root `sqrt((z - λ-)(z - λ+))` is taken as the product of
    /// principal roots of the two factors, which is analytic off
    /// `[λ-, λ+]` and behaves like `z` at infinity.
    pub fn stieltjes(&self, z: Complex<T>) -> Result<Complex<T>> {
        let (lo, hi) = self.support();
        let zero = T::zero();
        if z.im == zero && z.re >= lo && z.re <= hi {
            return Err(Error::PoleOrBranchCut(format!("z = {} lies on the support", z.re.as_f64())));
        }
        let one = Complex::new(T::one(), zero);
        if z == Complex::new(zero, zero) || z == one {
            return Err(Error::PoleOrBranchCut(format!("z = {} is a removable pole of the closed form", z.re.as_f64())));
        }
        let (ik, im) = (T::one() / self.tau_k, T::one() / self.tau_m);
        let root = ComplexField::sqrt(z - Complex::new(lo, zero)) * ComplexField::sqrt(z - Complex::new(hi, zero));
        let num = Complex::new(im + ik, zero) - z + root;
        let den = z * (z - one) * Complex::new(T::lit(2.0) * ik, zero);
        Ok(num / den + one / z)
    }

    /// Residual of the quadratic equation satisfied by the Stieltjes transform.
    pub fn quadratic_residual(&self, z: Complex<T>, g: Complex<T>) -> Complex<T> {
        let (ik, im) = (T::one() / self.tau_k, T::one() / self.tau_m);
        let one = Complex::new(T::one(), T::zero());
        let c = |x: T| Complex::new(x, T::zero());
        let a0 = one / (z * (z - one)) * c((ik - T::one()) / ik);
        let a1 = one / z * c((im - ik) / ik) + one / (z - one) * c((T::one() - ik - im) / ik);
        a0 + a1 * g + g * g
    }
}

impl WachterParams<f64> {
    /// `∫ f dω` over the support after the substitution
    /// `x = λ- + (λ+ - λ-) sin²θ`, which removes the square-root edges.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
        quad::integrate(|t| self.theta_integrand(t) * f(self.x_of_theta(t)), 0.0, std::f64::consts::FRAC_PI_2, tol)
    }

    fn x_of_theta(&self, t: f64) -> f64 {
        let s = t.sin();
        self.lambda_minus + (self.lambda_plus - self.lambda_minus) * s * s
    }

    fn theta_of_x(&self, x: f64) -> f64 {
        let w = ((x - self.lambda_minus) / (self.lambda_plus - self.lambda_minus)).clamp(0.0, 1.0);
        w.sqrt().asin()
    }

    /// Density in the θ variable: `ω(x(θ)) dx/dθ`.
    fn theta_integrand(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        let x = self.x_of_theta(t);
        let w = self.lambda_plus - self.lambda_minus;
        self.tau_k / std::f64::consts::PI * w * w * s * s * c * c / (x * (1.0 - x))
    }
}

pub fn support<T: Real>(params: &WachterParams<T>) -> (T, T) {
    params.support()
}

pub fn pdf<T: Real>(x: T, params: &WachterParams<T>) -> T {
    params.pdf(x)
}

pub fn edge_constants<T: Real>(params: &WachterParams<T>) -> Result<(T, T)> {
    params.edge_constants()
}

pub fn stieltjes<T: Real>(z: Complex<T>, params: &WachterParams<T>) -> Result<Complex<T>> {
    params.stieltjes(z)
}

const GRID: usize = 4096;

/// Cumulative distribution function of the Wachter law with a precomputed grid.
///
/// The CDF is tabulated in the θ variable at 4096 nodes; an evaluation adds
/// one Kronrod rule over the partial cell, so values are accurate to
/// quadrature precision and monotone.
#[derive(Debug, Clone)]
pub struct WachterCdf {
    params: WachterParams<f64>,
    atom: f64,
    cum: Vec<f64>,
}

impl WachterCdf {
    pub fn new(params: WachterParams<f64>) -> Self {
        let h = std::f64::consts::FRAC_PI_2 / GRID as f64;
        let atom = 1.0 - params.continuous_mass();
        let f = |t: f64| params.theta_integrand(t);
        let mut cum = Vec::with_capacity(GRID + 1);
        let mut acc = atom;
        cum.push(acc);
        for i in 0..GRID {
            acc += quad::gk15(&f, i as f64 * h, (i + 1) as f64 * h).0;
            cum.push(acc);
        }
        Self { params, atom, cum }
    }

    pub fn params(&self) -> &WachterParams<f64> {
        &self.params
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.params.support();
        if x < 0.0 {
            return 0.0;
        }
        if x <= lo {
            return self.atom;
        }
        if x >= hi {
            return 1.0;
        }
        let t = self.params.theta_of_x(x);
        let h = std::f64::consts::FRAC_PI_2 / GRID as f64;
        let i = ((t / h) as usize).min(GRID - 1);
        let f = |s: f64| self.params.theta_integrand(s);
        let v = self.cum[i] + quad::gk15(&f, i as f64 * h, t).0;
        v.clamp(self.atom, 1.0)
    }

    /// Smallest `x` with `cdf(x) >= p`, by bisection to `1e-13`.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.params.support();
        if p <= self.atom {
            return if self.atom > 0.0 { 0.0 } else { lo };
        }
        if p >= 1.0 {
            return hi;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Kolmogorov-Smirnov distance between the empirical measure and the law.
    pub fn ks_distance(&self, spec: &Spectrum) -> Result<f64> {
        if spec.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        let mut d: f64 = 0.0;
        let n = spec.len() as f64;
        let mut i = 0usize;
        let vals: Vec<f64> = spec.values.iter().rev().copied().collect();
        while i < vals.len() {
            // Group ties so the empirical CDF is evaluated once per jump.
            let x = vals[i];
            let mut j = i;
            while j < vals.len() && vals[j] == x {
                j += 1;
            }
            let f = self.cdf(x);
            d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
            i = j;
        }
        Ok(d)
    }
}

pub fn cdf(x: f64, params: &WachterParams<f64>) -> f64 {
    WachterCdf::new(*params).cdf(x)
}

pub fn ks_distance(spec: &Spectrum, params: &WachterParams<f64>) -> Result<f64> {
    WachterCdf::new(*params).ks_distance(spec)
}
