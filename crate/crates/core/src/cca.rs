//! Sample and population canonical correlation analysis.
//!
//! The main route whitens both panels with the symmetric inverse square
//! root of their Gram matrices and takes a singular value decomposition of
//! the whitened cross-Gram. Two slower routes (products of projectors and
//! greedy sequential maximization) exist as cross-checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{complete_basis, sign_normalize, sym_eigen_desc, sym_inv_sqrt};
use crate::rng::Seed;
use crate::scalar::Real;
use crate::spectrum::{Spectrum, SpectrumMeta};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Gap below which neighbouring squared correlations count as one cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Rows are variables, columns are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPanel<T: Real> {
    data: DMatrix<T>,
}

impl<T: Real> DataPanel<T> {
    pub fn from_matrix(data: DMatrix<T>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidDimensions(format!(
                "panel must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                if !data[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds a panel from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} panel",
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.data
    }

    /// The observation-space vector `Uᵀ a`.
    pub fn combine(&self, a: &DVector<T>) -> Result<DVector<T>> {
        if a.len() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector of length {} for a panel with {} rows",
                a.len(),
                self.rows()
            )));
        }
        Ok(self.data.tr_mul(a))
    }
}

/// Canonical correlations with full canonical bases.
///
/// `alphas` holds K vectors and `betas` holds M vectors. The first
/// `min(K, M)` of each are paired with `correlations_sq`; the rest complete
/// the bases and have correlation zero with every vector on the other side.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem<T: Real> {
    pub correlations_sq: Vec<T>,
    pub alphas: Vec<DVector<T>>,
    pub betas: Vec<DVector<T>>,
    /// `true` where a value lies within [`CLUSTER_GAP`] of a neighbour, so
    /// its vectors are only defined up to rotation inside the cluster.
    pub degenerate: Vec<bool>,
}

impl<T: Real> CanonicalSystem<T> {
    pub fn spectrum(&self, meta: SpectrumMeta) -> Result<Spectrum> {
        Spectrum::new(self.correlations_sq.iter().map(|c| c.as_f64()).collect(), meta)
    }

    pub fn len(&self) -> usize {
        self.correlations_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correlations_sq.is_empty()
    }
}

/// Population covariances of the two groups and their cross-covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTriple<T: Real> {
    pub luu: DMatrix<T>,
    pub lvv: DMatrix<T>,
    pub luv: DMatrix<T>,
}

impl<T: Real> CovarianceTriple<T> {
    pub fn new(luu: DMatrix<T>, lvv: DMatrix<T>, luv: DMatrix<T>) -> Result<Self> {
        let (k, m) = (luu.nrows(), lvv.nrows());
        if !luu.is_square() || !lvv.is_square() || luv.shape() != (k, m) {
            return Err(Error::DimensionMismatch(format!(
                "Luu {:?}, Lvv {:?}, Luv {:?}",
                luu.shape(),
                lvv.shape(),
                luv.shape()
            )));
        }
        for a in [&luu, &lvv] {
            let scale = a.amax();
            if (a - a.transpose()).amax() > T::lit(1e-10) * scale {
                return Err(Error::SingularCovariance("matrix is not symmetric".into()));
            }
        }
        Ok(Self { luu, lvv, luv })
    }
}

fn check_pair<T: Real>(u: &DataPanel<T>, v: &DataPanel<T>) -> Result<()> {
    if u.cols() != v.cols() {
        return Err(Error::DimensionMismatch(format!(
            "U has {} observations, V has {}",
            u.cols(),
            v.cols()
        )));
    }
    if u.rows() + v.rows() > u.cols() {
        return Err(Error::TooFewObservations { needed: u.rows() + v.rows(), available: u.cols() });
    }
    Ok(())
}

fn whitener<T: Real>(gram: &DMatrix<T>, tol: T) -> Result<DMatrix<T>> {
    sym_inv_sqrt(gram, tol).map(|r| r.inv_sqrt).map_err(|(lo, hi)| Error::RankDeficient {
        ratio: if hi > T::zero() { (lo / hi).as_f64() } else { 0.0 },
        tol: tol.as_f64(),
    })
}

fn clip_unit<T: Real>(x: T, tol: T) -> Result<T> {
    if x < -tol || x > T::one() + tol {
        return Err(Error::CorrelationOutOfRange { value: x.as_f64() });
    }
    Ok(x.clamp(T::zero(), T::one()))
}

fn largest_index<T: Real>(v: &DVector<T>) -> usize {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

fn cluster_flags<T: Real>(c: &[T]) -> Vec<bool> {
    let gap = T::lit(CLUSTER_GAP);
    (0..c.len())
        .map(|i| {
            (i > 0 && (c[i - 1] - c[i]).abs() < gap) || (i + 1 < c.len() && (c[i] - c[i + 1]).abs() < gap)
        })
        .collect()
}

/// Canonical structure of a whitened cross matrix `C = Wu X Wv`.
///
/// Returns squared correlations with coefficient vectors mapped back through
/// the whitening matrices.
fn package<T: Real>(c: DMatrix<T>, wu: &DMatrix<T>, wv: &DMatrix<T>, tol: T) -> Result<CanonicalSystem<T>> {
    let (k, m) = c.shape();
    let n = k.min(m);
    let svd = c.svd(true, true);
    let left = svd.u.expect("requested U");
    let right = svd.v_t.expect("requested V^T").transpose();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());

    let mut a_cols = Vec::with_capacity(n);
    let mut b_cols = Vec::with_capacity(n);
    let mut corr = Vec::with_capacity(n);
    for &i in &order {
        let s = svd.singular_values[i];
        corr.push(clip_unit(s * s, tol)?);
        a_cols.push(left.column(i).into_owned());
        b_cols.push(right.column(i).into_owned());
    }
    let a_full = complete_basis(&DMatrix::from_columns(&a_cols));
    let b_full = complete_basis(&DMatrix::from_columns(&b_cols));

    let mut alphas: Vec<DVector<T>> = a_full.column_iter().map(|c| wu * c).collect();
    let mut betas: Vec<DVector<T>> = b_full.column_iter().map(|c| wv * c).collect();
    for j in 0..alphas.len() {
        let before = alphas[j][largest_index(&alphas[j])];
        sign_normalize(&mut alphas[j]);
        if j < n && before < T::zero() && corr[j] > tol {
            betas[j].neg_mut();
        }
    }
    for (j, b) in betas.iter_mut().enumerate() {
        if j >= n || corr[j] <= tol {
            sign_normalize(b);
        }
    }
    let degenerate = cluster_flags(&corr);
    Ok(CanonicalSystem { correlations_sq: corr, alphas, betas, degenerate })
}

/// Sample canonical correlations and vectors of two panels.
///
/// `tol` is relative: Gram matrices whose eigenvalue ratio is not above it
/// are rejected, and squared correlations within `tol` outside `[0, 1]`
/// are clipped. Use [`DEFAULT_TOL`] for `f64`; `f32` needs about `1e-5`.
pub fn sample_cca<T: Real>(u: &DataPanel<T>, v: &DataPanel<T>, tol: T) -> Result<CanonicalSystem<T>> {
    check_pair(u, v)?;
    let (um, vm) = (u.matrix(), v.matrix());
    let wu = whitener(&(um * um.transpose()), tol)?;
    let wv = whitener(&(vm * vm.transpose()), tol)?;
    let c = &wu * (um * vm.transpose()) * &wv;
    package(c, &wu, &wv, tol)
}

/// Squared sample canonical correlations only, descending.
///
/// Uses Cholesky whitening and a symmetric eigenvalue problem of size
/// `min(K, M)`; this is the routine used inside Monte Carlo loops.
pub fn squared_correlations<T: Real>(u: &DataPanel<T>, v: &DataPanel<T>, tol: T) -> Result<Vec<T>> {
    check_pair(u, v)?;
    squared_correlations_raw(u.matrix(), v.matrix(), tol)
}

pub(crate) fn squared_correlations_raw<T: Real>(um: &DMatrix<T>, vm: &DMatrix<T>, tol: T) -> Result<Vec<T>> {
    let chol = |g: DMatrix<T>| {
        let scale = g.diagonal().max();
        g.cholesky().ok_or(Error::RankDeficient { ratio: 0.0, tol: tol.as_f64() }).and_then(|c| {
            let d = c.l_dirty().diagonal();
            let lo = d.min();
            if !(lo * lo > tol * scale) {
                Err(Error::RankDeficient { ratio: (lo * lo / scale).as_f64(), tol: tol.as_f64() })
            } else {
                Ok(c)
            }
        })
    };
    let cu = chol(um * um.transpose())?;
    let cv = chol(vm * vm.transpose())?;
    // C = Lu⁻¹ U Vᵀ Lv⁻ᵀ, so C Cᵀ has the squared correlations as eigenvalues.
    let mut x = um * vm.transpose();
    cu.l().solve_lower_triangular_mut(&mut x);
    let mut xt = x.transpose();
    cv.l().solve_lower_triangular_mut(&mut xt);
    let gram = if um.nrows() <= vm.nrows() { xt.tr_mul(&xt) } else { &xt * xt.transpose() };
    let mut vals: Vec<T> = gram.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    vals.into_iter().map(|x| clip_unit(x, tol.max(T::lit(1e-8)))).collect()
}

/// f64 convenience wrapper returning a [`Spectrum`].
pub fn sample_spectrum(u: &DataPanel<f64>, v: &DataPanel<f64>) -> Result<Spectrum> {
    let vals = squared_correlations(u, v, DEFAULT_TOL)?;
    Spectrum::new(vals, SpectrumMeta::Cca { k: u.rows(), m: v.rows(), s: u.cols() })
}

fn orthogonal_projector(p: &DataPanel<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let m = p.matrix();
    let gram = m * m.transpose();
    let (vals, _) = sym_eigen_desc(&gram);
    let (hi, lo) = (vals[0], vals[vals.len() - 1]);
    if !(lo > tol * hi) {
        return Err(Error::RankDeficient { ratio: lo / hi, tol });
    }
    let sol = gram.lu().solve(m).ok_or(Error::RankDeficient { ratio: 0.0, tol })?;
    Ok(m.tr_mul(&sol))
}

/// Squared correlations as the leading eigenvalues of `P_U P_V`.
///
/// Builds the S x S orthogonal projectors explicitly, so it is meant for
/// small S. The eigenvalues are taken from the symmetric `P_U P_V P_U`,
/// which has the same spectrum.
pub fn sample_cca_projector_oracle(u: &DataPanel<f64>, v: &DataPanel<f64>) -> Result<Spectrum> {
    check_pair(u, v)?;
    let pu = orthogonal_projector(u, DEFAULT_TOL)?;
    let pv = orthogonal_projector(v, DEFAULT_TOL)?;
    let mut prod = &pu * &pv * &pu;
    prod = (&prod + prod.transpose()) * 0.5;
    let (vals, _) = sym_eigen_desc(&prod);
    let n = u.rows().min(v.rows());
    let vals = vals.iter().take(n).map(|&x| clip_unit(x, 1e-8)).collect::<Result<Vec<_>>>()?;
    Spectrum::new(vals, SpectrumMeta::Cca { k: u.rows(), m: v.rows(), s: u.cols() })
}

/// Orthonormal basis of the row space, as rows, by modified Gram-Schmidt.
fn row_basis(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(m.nrows());
    let scale = m.amax();
    for i in 0..m.nrows() {
        let mut r: DVector<f64> = m.row(i).transpose();
        for _ in 0..2 {
            for q in &rows {
                let p = q.dot(&r);
                r.axpy(-p, q, 1.0);
            }
        }
        let n = r.norm();
        if !(n > 1e-10 * scale * (m.ncols() as f64).sqrt()) {
            return Err(Error::RankDeficient { ratio: 0.0, tol: DEFAULT_TOL });
        }
        rows.push(r / n);
    }
    Ok(DMatrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>()))
}

fn project_out(x: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = b.dot(x);
            x.axpy(-p, b, 1.0);
        }
    }
}

/// Greedy maximization of `<u, v>` by alternating projected ascent.
///
/// At step i the pair `(u_i, v_i)` maximizes the inner product over unit
/// vectors of the two row spaces orthogonal to the earlier choices. Each step
/// runs `restarts` random starting points and keeps the best. Intended for
/// K, M <= 3.
pub fn sequential_maximization_oracle(
    u: &DataPanel<f64>,
    v: &DataPanel<f64>,
    restarts: usize,
) -> Result<CanonicalSystem<f64>> {
    check_pair(u, v)?;
    let (k, m) = (u.rows(), v.rows());
    if k > 3 || m > 3 {
        return Err(Error::InvalidDimensions(format!("oracle supports K, M <= 3, got K={k}, M={m}")));
    }
    if restarts < 16 {
        return Err(Error::ParameterRange(format!("restarts must be >= 16, got {restarts}")));
    }
    let qu = row_basis(u.matrix())?;
    let qv = row_basis(v.matrix())?;
    let c = &qu * qv.transpose();
    let mut rng = Seed::with_stream(0x5eed, 0xcca).rng();

    let n = k.min(m);
    let mut chosen_a: Vec<DVector<f64>> = Vec::new();
    let mut chosen_b: Vec<DVector<f64>> = Vec::new();
    let mut corr = Vec::new();
    for _ in 0..n {
        let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
        let mut converged_any = false;
        for _ in 0..restarts {
            let mut b = DVector::from_fn(m, |_, _| rng.random::<f64>() - 0.5);
            project_out(&mut b, &chosen_b);
            if b.norm() < 1e-12 {
                continue;
            }
            b /= b.norm();
            let mut a = DVector::zeros(k);
            let mut value = f64::NEG_INFINITY;
            let mut ok = false;
            for _ in 0..50_000 {
                let mut a_new = &c * &b;
                project_out(&mut a_new, &chosen_a);
                let na = a_new.norm();
                if na < 1e-14 {
                    // Cross matrix vanishes on the feasible set: any pair is optimal.
                    a = DVector::from_fn(k, |_, _| rng.random::<f64>() - 0.5);
                    project_out(&mut a, &chosen_a);
                    a /= a.norm();
                    value = 0.0;
                    ok = true;
                    break;
                }
                a_new /= na;
                let mut b_new = c.tr_mul(&a_new);
                project_out(&mut b_new, &chosen_b);
                let nb = b_new.norm();
                b_new /= nb;
                let new_value = a_new.dot(&(&c * &b_new));
                let step = (&a_new - &a).norm() + (&b_new - &b).norm();
                let dv = (new_value - value).abs();
                a = a_new;
                b = b_new;
                value = new_value;
                if step < 1e-12 || dv < 1e-16 {
                    ok = true;
                    break;
                }
            }
            if ok {
                converged_any = true;
                if best.as_ref().is_none_or(|(bv, _, _)| value > *bv) {
                    best = Some((value, a, b));
                }
            }
        }
        let (value, a, b) = match (converged_any, best) {
            (true, Some(x)) => x,
            _ => return Err(Error::NotConverged("no restart reached a stationary point".into())),
        };
        corr.push(clip_unit(value * value, 1e-8)?);
        chosen_a.push(a);
        chosen_b.push(b);
    }

    let to_alpha = |panel: &DataPanel<f64>, q: &DMatrix<f64>, coef: &DVector<f64>| -> Result<DVector<f64>> {
        let x = q.tr_mul(coef);
        let um = panel.matrix();
        let gram = um * um.transpose();
        gram.lu().solve(&(um * x)).ok_or(Error::RankDeficient { ratio: 0.0, tol: DEFAULT_TOL })
    };
    let a_full = complete_basis(&DMatrix::from_columns(&chosen_a));
    let b_full = complete_basis(&DMatrix::from_columns(&chosen_b));
    let alphas = a_full.column_iter().map(|c| to_alpha(u, &qu, &c.into_owned())).collect::<Result<_>>()?;
    let betas = b_full.column_iter().map(|c| to_alpha(v, &qv, &c.into_owned())).collect::<Result<_>>()?;
    let degenerate = cluster_flags(&corr);
    Ok(CanonicalSystem { correlations_sq: corr, alphas, betas, degenerate })
}

/// Population canonical correlations of a covariance triple.
///
/// The alphas are normalized to unit variance, `αᵀ Luu α = 1`.
pub fn population_cca<T: Real>(cov: &CovarianceTriple<T>) -> Result<CanonicalSystem<T>> {
    let tol = T::lit(1e-12);
    let wu = sym_inv_sqrt(&cov.luu, tol)
        .map_err(|_| Error::SingularCovariance("Luu".into()))?
        .inv_sqrt;
    let wv = sym_inv_sqrt(&cov.lvv, tol)
        .map_err(|_| Error::SingularCovariance("Lvv".into()))?
        .inv_sqrt;
    let c = &wu * &cov.luv * &wv;
    package(c, &wu, &wv, T::lit(1e-8))
}

/// `sin²` of the angle between `Uᵀ a_ref` and `Uᵀ a_hat`.
pub fn alignment_angle<T: Real>(u: &DataPanel<T>, a_ref: &DVector<T>, a_hat: &DVector<T>) -> Result<T> {
    let x = u.combine(a_ref)?;
    let y = u.combine(a_hat)?;
    let (nx, ny) = (x.norm_squared(), y.norm_squared());
    if nx == T::zero() || ny == T::zero() {
        return Err(Error::ZeroImage);
    }
    let d = x.dot(&y);
    Ok((T::one() - d * d / (nx * ny)).clamp(T::zero(), T::one()))
}
