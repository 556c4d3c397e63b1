//! Signal-plus-noise CCA: where a planted correlation `ρ²` sends the top
//! sample squared correlation, how to invert that map, and the predicted
//! angles between sample and population canonical variables.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cca::{sample_cca, DataPanel, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::rng::{gaussian_matrix, Rng};
use crate::scalar::Real;
use crate::spectrum::{Spectrum, SpectrumMeta};
use crate::wachter::WachterParams;

/// Default number of edge fluctuation units above `λ+` required to call a signal.
pub const DEFAULT_EDGE_BUFFER: f64 = 2.0;

/// Smallest detectable `ρ²`: `1 / sqrt((τ_M - 1)(τ_K - 1))`.
pub fn detection_threshold<T: Real>(params: &WachterParams<T>) -> T {
    let one = T::one();
    one / ((params.tau_m() - one) * (params.tau_k() - one)).sqrt()
}

fn check_supercritical<T: Real>(rho2: T, params: &WachterParams<T>) -> Result<()> {
    let crit = detection_threshold(params);
    if !(rho2 <= T::one()) {
        return Err(Error::ParameterRange(format!("rho^2 = {} exceeds 1", rho2.as_f64())));
    }
    if !(rho2 > crit) {
        return Err(Error::Subcritical { rho2: rho2.as_f64(), threshold: crit.as_f64() });
    }
    Ok(())
}

/// Limit location `z_ρ` of the top squared sample correlation.
pub fn z_from_rho2<T: Real>(rho2: T, params: &WachterParams<T>) -> Result<T> {
    check_supercritical(rho2, params)?;
    let one = T::one();
    let (tk, tm) = (params.tau_k(), params.tau_m());
    Ok(((tk - one) * rho2 + one) * ((tm - one) * rho2 + one) / (rho2 * tk * tm))
}

/// Inverse of [`z_from_rho2`] on `z > λ+`.
pub fn rho2_from_z<T: Real>(z: T, params: &WachterParams<T>) -> Result<T> {
    let (lo, hi) = params.support();
    if !(z > hi) {
        return Err(Error::BelowEdge { z: z.as_f64(), edge: hi.as_f64() });
    }
    let one = T::one();
    let (ik, im) = (one / params.tau_k(), one / params.tau_m());
    let two = T::lit(2.0);
    let rho2 = (z - im - ik + two * im * ik + ((z - lo) * (z - hi)).sqrt()) / (two * (one - im) * (one - ik));
    if rho2 > one + T::lit(1e-12) {
        return Err(Error::AboveOne { rho2: rho2.as_f64() });
    }
    Ok(rho2.min(one))
}

/// Limiting `sin²` of the angles between sample and population canonical
/// variables on the U side and the V side.
pub fn predicted_angles<T: Real>(rho2: T, params: &WachterParams<T>) -> Result<(T, T)> {
    check_supercritical(rho2, params)?;
    let one = T::one();
    let (a, b) = (params.tau_k() - one, params.tau_m() - one);
    let den = b * a * rho2 - one;
    let s_u = (one - rho2) * a / den * (b * rho2 + one) / (a * rho2 + one);
    let s_v = (one - rho2) * b / den * (a * rho2 + one) / (b * rho2 + one);
    Ok((s_u, s_v))
}

/// `|F(z) - ρ²|` where `F(z) = ρ²` is the limiting one-spike equation
/// written through the Stieltjes transform of the Wachter law.
pub fn limit_equation_residual<T: Real>(z: T, rho2: T, params: &WachterParams<T>) -> Result<T> {
    let hi = params.lambda_plus();
    if !(z > hi) {
        return Err(Error::BelowEdge { z: z.as_f64(), edge: hi.as_f64() });
    }
    let g = params.stieltjes(Complex::new(z, T::zero()))?.re;
    let one = T::one();
    let two = T::lit(2.0);
    let (ik, im) = (one / params.tau_k(), one / params.tau_m());
    let a = one - two * ik - (im - ik) / z - (one - z) * ik * g;
    let b = one - ik - im - (one - z) * ik * g;
    let c = one - im - z * ik - z * (one - z) * ik * g;
    Ok((z * a * b / (c * c) - rho2).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub lambda_observed: f64,
    /// `None` when the observed value implies `ρ² > 1`.
    pub rho2_hat: Option<f64>,
    pub s_u_hat: Option<f64>,
    pub s_v_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    pub n_signals: usize,
    pub signals: Vec<SignalRecord>,
    pub edge_used: f64,
    pub threshold_used: f64,
}

/// Counts spectrum values above `λ+ + buffer · K^{-2/3} c+^{-2/3}` and inverts each.
///
/// `K` is read from the spectrum metadata, falling back to its length.
pub fn estimate_signals(spec: &Spectrum, params: &WachterParams<f64>, edge_buffer: f64) -> SpikeReport {
    let k = match spec.meta {
        SpectrumMeta::Cca { k, m, .. } => k.min(m),
        SpectrumMeta::Coint { k, .. } | SpectrumMeta::Manova { k, .. } => k,
        SpectrumMeta::Unknown => spec.len(),
    }
    .max(1) as f64;
    let edge = params.lambda_plus();
    let threshold = edge + edge_buffer * k.powf(-2.0 / 3.0) * params.c_plus().powf(-2.0 / 3.0);
    let signals: Vec<SignalRecord> = spec
        .values
        .iter()
        .take_while(|&&x| x > threshold)
        .map(|&x| {
            let rho2 = rho2_from_z(x, params).ok();
            let angles = rho2.and_then(|r| predicted_angles(r, params).ok());
            SignalRecord {
                lambda_observed: x,
                rho2_hat: rho2,
                s_u_hat: angles.map(|a| a.0),
                s_v_hat: angles.map(|a| a.1),
            }
        })
        .collect();
    SpikeReport { n_signals: signals.len(), signals, edge_used: edge, threshold_used: threshold }
}

/// Exact finite-size equation for the squared canonical correlations of
/// `span(u*, Ũ)` and `span(v*, Ṽ)` in terms of the canonical data of `(Ũ, Ṽ)`.
///
/// `Ũ` has `K - 1` rows and `Ṽ` has `M - 1` rows with `K <= M`.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    c: Vec<f64>,
    /// `⟨u*, ũ_i⟩`, `⟨v*, ũ_i⟩` for `i < K - 1`.
    p: Vec<f64>,
    q: Vec<f64>,
    /// `⟨u*, ṽ_j⟩`, `⟨v*, ṽ_j⟩` for `j < M - 1`.
    r: Vec<f64>,
    s: Vec<f64>,
    uv: f64,
    uu: f64,
    vv: f64,
}

impl MasterEquation {
    pub fn new(tilde_u: &DataPanel<f64>, tilde_v: &DataPanel<f64>, u_star: &DVector<f64>, v_star: &DVector<f64>) -> Result<Self> {
        let n = tilde_u.cols();
        if u_star.len() != n || v_star.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "u*, v* have lengths {}, {}; panels have {n} columns",
                u_star.len(),
                v_star.len()
            )));
        }
        if tilde_u.rows() > tilde_v.rows() {
            return Err(Error::InvalidDimensions("the reduced U panel must not have more rows than V".into()));
        }
        let sys = sample_cca(tilde_u, tilde_v, DEFAULT_TOL)?;
        let us: Vec<DVector<f64>> = sys.alphas.iter().map(|a| tilde_u.combine(a)).collect::<Result<_>>()?;
        let vs: Vec<DVector<f64>> = sys.betas.iter().map(|b| tilde_v.combine(b)).collect::<Result<_>>()?;
        let mut c = vec![0.0; vs.len()];
        for (ci, &c2) in c.iter_mut().zip(&sys.correlations_sq) {
            *ci = c2.sqrt();
        }
        Ok(Self {
            c,
            p: us.iter().map(|x| u_star.dot(x)).collect(),
            q: us.iter().map(|x| v_star.dot(x)).collect(),
            r: vs.iter().map(|x| u_star.dot(x)).collect(),
            s: vs.iter().map(|x| v_star.dot(x)).collect(),
            uv: u_star.dot(v_star),
            uu: u_star.norm_squared(),
            vv: v_star.norm_squared(),
        })
    }

    /// Canonical correlations of the reduced system, padded with zeros to `M - 1`.
    pub fn reduced_correlations(&self) -> &[f64] {
        &self.c
    }

    /// Both sides of the equation at `z`.
    pub fn sides(&self, z: f64) -> Result<(f64, f64)> {
        for &c in &self.c {
            if (z - c * c).abs() <= 1e-12 {
                return Err(Error::PoleHit { z });
            }
        }
        let k1 = self.p.len();
        let d = |j: usize| z - self.c[j] * self.c[j];
        let mut inner = self.uv;
        let mut ru = -self.uu;
        let mut rv = -self.vv;
        for j in 0..self.r.len() {
            let cq = if j < k1 { self.c[j] * self.q[j] } else { 0.0 };
            let cp = if j < k1 { self.c[j] * self.p[j] } else { 0.0 };
            inner += self.r[j] * (cq - z * self.s[j]) / d(j);
            ru += (self.r[j] * self.r[j] - 2.0 * cp * self.r[j]) / d(j);
            rv += z * self.s[j] * self.s[j] / d(j);
        }
        for i in 0..k1 {
            inner -= z * self.p[i] * (self.q[i] - self.c[i] * self.s[i]) / d(i);
            ru += z * self.p[i] * self.p[i] / d(i);
            rv += (self.q[i] * self.q[i] - 2.0 * self.c[i] * self.q[i] * self.s[i]) / d(i);
        }
        Ok((inner * inner, z * ru * rv))
    }

    pub fn residual(&self, z: f64) -> Result<f64> {
        let (l, r) = self.sides(z)?;
        Ok((l - r).abs())
    }
}

/// `|LHS - RHS|` of the master equation at a canonical triplet `(z, α̂, β̂)`.
///
/// Only `z` enters the equation; `α̂` and `β̂` are checked for dimension.
pub fn master_equation_residual(
    tilde_u: &DataPanel<f64>,
    tilde_v: &DataPanel<f64>,
    u_star: &DVector<f64>,
    v_star: &DVector<f64>,
    z: f64,
    alpha_hat: &DVector<f64>,
    beta_hat: &DVector<f64>,
) -> Result<f64> {
    if alpha_hat.len() != tilde_u.rows() + 1 || beta_hat.len() != tilde_v.rows() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "alpha_hat has length {}, beta_hat {}; expected {} and {}",
            alpha_hat.len(),
            beta_hat.len(),
            tilde_u.rows() + 1,
            tilde_v.rows() + 1
        )));
    }
    MasterEquation::new(tilde_u, tilde_v, u_star, v_star)?.residual(z)
}

/// Panels with identity within-group covariances and cross-covariance
/// `diag(r_1, r_2, ...)`: row i of V is `r_i u_i + sqrt(1 - r_i²) w_i`.
pub fn spiked_panels_rng(rng: &mut Rng, k: usize, m: usize, s: usize, r: &[f64]) -> Result<(DataPanel<f64>, DataPanel<f64>)> {
    if r.len() > k.min(m) {
        return Err(Error::DimensionMismatch(format!("{} spikes for K={k}, M={m}", r.len())));
    }
    if r.iter().any(|x| !(x.abs() <= 1.0)) {
        return Err(Error::ParameterRange("planted correlations must lie in [-1, 1]".into()));
    }
    let u = gaussian_matrix(rng, k, s);
    let mut v: DMatrix<f64> = gaussian_matrix(rng, m, s);
    for (i, &ri) in r.iter().enumerate() {
        let noise = v.row(i).into_owned();
        v.set_row(i, &(u.row(i) * ri + noise * (1.0 - ri * ri).sqrt()));
    }
    Ok((DataPanel::from_matrix(u)?, DataPanel::from_matrix(v)?))
}
