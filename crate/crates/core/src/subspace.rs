//! Linear projections: PCA, LDA, and the mean-difference-deflated DRCA and
//! LDSP transforms.
//!
//! Data matrices are `n x D` with one sample per row. A fitted
//! [`LinearProjection`] holds a `D x k` matrix whose columns are projection
//! directions plus one centering vector per domain.
//!
//! DRCA and LDSP share one recipe:
//!
//! 1. `d = mean(source) - mean(target)`;
//! 2. `Q` = orthonormal basis of the complement of `d` (identity if `d ~ 0`);
//! 3. `M = Qᵀ A Q` with `A = Σs + λ Σt` (DRCA) or
//!    `A = Σs + λ Σt - κ Sw + μ Sb` (LDSP, scatter from labeled source);
//! 4. take the top-k eigenvectors `V` of `M` by signed eigenvalue;
//! 5. `matrix = Q V`.
//!
//! Every column is then orthonormal and orthogonal to `d`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Pca,
    Lda,
    Drca,
    Ldsp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProjection {
    /// D x k, columns are directions.
    pub matrix: DMatrix<f64>,
    pub source_center: DVector<f64>,
    pub target_center: DVector<f64>,
    pub kind: ProjectionKind,
    /// `source_center - target_center` when deflation was applied.
    pub mean_difference: Option<DVector<f64>>,
    /// Eigenvalues belonging to the returned columns, descending.
    pub eigenvalues: Vec<f64>,
}

impl LinearProjection {
    pub fn input_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn components(&self) -> usize {
        self.matrix.ncols()
    }

    /// `k x k` identity, taken as a projection with zero centers.
    pub fn identity(dim: usize) -> Self {
        LinearProjection {
            matrix: DMatrix::identity(dim, dim),
            source_center: DVector::zeros(dim),
            target_center: DVector::zeros(dim),
            kind: ProjectionKind::Pca,
            mean_difference: None,
            eigenvalues: vec![1.0; dim],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrcaConfig {
    /// Weight of the target covariance relative to the source covariance.
    pub lambda: f64,
    pub k: usize,
}

impl Default for DrcaConfig {
    fn default() -> Self {
        DrcaConfig { lambda: 0.1, k: 127 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdspConfig {
    pub lambda: f64,
    /// Within-class scatter weight (penalized).
    pub kappa: f64,
    /// Between-class scatter weight (rewarded).
    pub mu: f64,
    pub k: usize,
}

impl Default for LdspConfig {
    fn default() -> Self {
        LdspConfig {
            lambda: 0.1,
            kappa: 10.0,
            mu: 100.0,
            k: 127,
        }
    }
}

impl LdspConfig {
    pub fn as_drca(&self) -> DrcaConfig {
        DrcaConfig {
            lambda: self.lambda,
            k: self.k,
        }
    }
}

fn check_weight(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

impl DrcaConfig {
    pub fn validate(&self) -> Result<()> {
        check_weight("lambda", self.lambda)?;
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        Ok(())
    }
}

impl LdspConfig {
    pub fn validate(&self) -> Result<()> {
        self.as_drca().validate()?;
        check_weight("kappa", self.kappa)?;
        check_weight("mu", self.mu)
    }
}

/// Column means of an `n x D` matrix.
pub fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

fn centered(x: &DMatrix<f64>, center: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        row -= center.transpose();
    }
    out
}

/// Population covariance `(1/n) Σ (x - x̄)(x - x̄)ᵀ`.
pub fn covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() == 0 {
        return Err(Error::Empty("covariance input"));
    }
    let xc = centered(x, &column_mean(x));
    let mut cov = xc.tr_mul(&xc) / x.nrows() as f64;
    symmetrize(&mut cov);
    Ok(cov)
}

fn group_rows(labels: &[u8]) -> BTreeMap<u8, Vec<usize>> {
    let mut groups: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups
}

/// Within- and between-class scatter, both normalized by the total count so
/// that `Sw + Sb` equals [`covariance`].
pub fn scatter_matrices(x: &DMatrix<f64>, labels: &[u8]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if x.nrows() == 0 {
        return Err(Error::Empty("scatter input"));
    }
    if labels.len() != x.nrows() {
        return Err(Error::Dimension {
            what: "labels",
            expected: x.nrows(),
            got: labels.len(),
        });
    }
    let n = x.nrows() as f64;
    let dim = x.ncols();
    let overall = column_mean(x);
    let mut sw = DMatrix::zeros(dim, dim);
    let mut sb = DMatrix::zeros(dim, dim);
    for rows in group_rows(labels).values() {
        let xc = x.select_rows(rows);
        let mean_c = column_mean(&xc);
        let dev = centered(&xc, &mean_c);
        sw += dev.tr_mul(&dev);
        let diff = &mean_c - &overall;
        sb += (&diff * diff.transpose()) * (rows.len() as f64);
    }
    sw /= n;
    sb /= n;
    symmetrize(&mut sw);
    symmetrize(&mut sb);
    Ok((sw, sb))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Flip `v` so its largest-magnitude entry (first on ties) is positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Eigen-decomposition of a symmetric matrix, sorted by descending eigenvalue
/// (ties keep solver index order), columns sign-normalized.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigen-decomposition input"));
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        canonical_sign(&mut v);
        vectors.set_column(dst, &v);
    }
    Ok((values, vectors))
}

/// Orthonormal `D x (D-1)` basis of the complement of `d`, via the
/// Householder reflection that sends `d` onto its dominant axis.
pub fn complement_basis(d: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = d.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Numerical("complement of a zero direction".into()));
    }
    let dim = d.len();
    let unit = d / norm;
    let pivot = unit.iamax();
    let mut u = unit.clone();
    u[pivot] += unit[pivot].signum();
    let h = DMatrix::identity(dim, dim) - (&u * u.transpose()) * (2.0 / u.norm_squared());
    let keep: Vec<usize> = (0..dim).filter(|&j| j != pivot).collect();
    Ok(h.select_columns(&keep))
}

fn check_rows(what: &'static str, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Empty(what));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

pub fn pca_fit(x: &DMatrix<f64>, k: usize) -> Result<LinearProjection> {
    check_rows("pca input", x)?;
    let dim = x.ncols();
    if k == 0 || k > dim {
        return Err(Error::Config(format!("pca components must be in 1..={dim}, got {k}")));
    }
    let cov = covariance(x)?;
    let (values, vectors) = sorted_symmetric_eigen(&cov)?;
    let center = column_mean(x);
    Ok(LinearProjection {
        matrix: vectors.columns(0, k).into_owned(),
        source_center: center.clone(),
        target_center: center,
        kind: ProjectionKind::Pca,
        mean_difference: None,
        eigenvalues: values[..k].to_vec(),
    })
}

/// Fisher discriminant directions solving `Sb v = η (Sw + εI) v`, with
/// `ε = 1e-6 · tr(Sw) / D`. Columns have unit length but are not mutually
/// orthogonal in general.
pub fn lda_fit(x: &DMatrix<f64>, labels: &[u8], k: usize) -> Result<LinearProjection> {
    check_rows("lda input", x)?;
    let dim = x.ncols();
    let n_classes = group_rows(labels).len();
    if n_classes < 2 {
        return Err(Error::SingleClass(n_classes));
    }
    let bound = dim.min(n_classes - 1);
    if k == 0 || k > bound {
        return Err(Error::Config(format!(
            "lda components must be in 1..={bound}, got {k}"
        )));
    }
    let (sw, sb) = scatter_matrices(x, labels)?;
    let mut ridge = 1e-6 * sw.trace() / dim as f64;
    if ridge <= 0.0 {
        ridge = 1e-12;
    }
    let reg = &sw + DMatrix::identity(dim, dim) * ridge;
    let chol = reg
        .cholesky()
        .ok_or_else(|| Error::Numerical("within-class scatter not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ Sb L⁻ᵀ
    let left = l
        .solve_lower_triangular(&sb)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let (values, w) = sorted_symmetric_eigen(&c)?;
    let lt = l.transpose();
    let mut matrix = DMatrix::zeros(dim, k);
    for j in 0..k {
        let mut v = lt
            .solve_upper_triangular(&w.column(j).into_owned())
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        canonical_sign(&mut v);
        matrix.set_column(j, &v);
    }
    let center = column_mean(x);
    Ok(LinearProjection {
        matrix,
        source_center: center.clone(),
        target_center: center,
        kind: ProjectionKind::Lda,
        mean_difference: None,
        eigenvalues: values[..k].to_vec(),
    })
}

/// Mean differences at or below `1e-12 · √D` count as aligned domains.
pub fn deflation_threshold(dim: usize) -> f64 {
    1e-12 * (dim as f64).sqrt()
}

fn deflated_fit(
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    inner: DMatrix<f64>,
    k: usize,
    kind: ProjectionKind,
) -> Result<LinearProjection> {
    let dim = source.ncols();
    let source_center = column_mean(source);
    let target_center = column_mean(target);
    let d = &source_center - &target_center;
    let deflate = d.norm() > deflation_threshold(dim);
    let max_k = if deflate { dim - 1 } else { dim };
    if k == 0 || k > max_k {
        return Err(Error::Config(format!(
            "components must be in 1..={max_k}{}, got {k}",
            if deflate { " with mean-difference deflation" } else { "" }
        )));
    }
    let (values, matrix) = if deflate {
        let q = complement_basis(&d)?;
        let m = q.tr_mul(&inner) * &q;
        let (values, v) = sorted_symmetric_eigen(&m)?;
        (values, q * v.columns(0, k))
    } else {
        let (values, v) = sorted_symmetric_eigen(&inner)?;
        (values, v.columns(0, k).into_owned())
    };
    Ok(LinearProjection {
        matrix,
        source_center,
        target_center,
        kind,
        mean_difference: deflate.then_some(d),
        eigenvalues: values[..k].to_vec(),
    })
}

fn check_domains(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<()> {
    check_rows("source domain", source)?;
    check_rows("target domain", target)?;
    if source.ncols() != target.ncols() {
        return Err(Error::Dimension {
            what: "target domain",
            expected: source.ncols(),
            got: target.ncols(),
        });
    }
    Ok(())
}

pub fn drca_fit(
    source: &DMatrix<f64>,
    target: &DMatrix<f64>,
    config: &DrcaConfig,
) -> Result<LinearProjection> {
    config.validate()?;
    check_domains(source, target)?;
    let inner = covariance(source)? + covariance(target)? * config.lambda;
    deflated_fit(source, target, inner, config.k, ProjectionKind::Drca)
}

pub fn ldsp_fit(
    source: &DMatrix<f64>,
    source_labels: &[u8],
    target: &DMatrix<f64>,
    config: &LdspConfig,
) -> Result<LinearProjection> {
    config.validate()?;
    check_domains(source, target)?;
    let n_classes = group_rows(source_labels).len();
    if n_classes < 2 {
        return Err(Error::SingleClass(n_classes));
    }
    let (sw, sb) = scatter_matrices(source, source_labels)?;
    // The indefinite combination is intended: eigenvectors are ranked by
    // signed eigenvalue.
    let inner = covariance(source)? + covariance(target)? * config.lambda - sw * config.kappa
        + sb * config.mu;
    deflated_fit(source, target, inner, config.k, ProjectionKind::Ldsp)
}

/// `(X - center_domain) · matrix`.
pub fn project(p: &LinearProjection, x: &DMatrix<f64>, domain: Domain) -> Result<DMatrix<f64>> {
    if x.ncols() != p.input_dim() {
        return Err(Error::Dimension {
            what: "projection input",
            expected: p.input_dim(),
            got: x.ncols(),
        });
    }
    let center = match domain {
        Domain::Source => &p.source_center,
        Domain::Target => &p.target_center,
    };
    Ok(centered(x, center) * &p.matrix)
}

/// `‖VᵀV - I‖_F`.
pub fn orthonormality_error(matrix: &DMatrix<f64>) -> f64 {
    let k = matrix.ncols();
    (matrix.tr_mul(matrix) - DMatrix::identity(k, k)).norm()
}

/// Frobenius distance between the orthogonal projectors onto two column spaces.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * a.transpose() - b * b.transpose()).norm()
}

/// `vᵀ Sb v / vᵀ Sw v`.
pub fn fisher_ratio(v: &DVector<f64>, sw: &DMatrix<f64>, sb: &DMatrix<f64>) -> f64 {
    let num = (v.transpose() * sb * v)[(0, 0)];
    let den = (v.transpose() * sw * v)[(0, 0)];
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
    }

    /// Double-loop covariance, independent of the matrix-product route.
    fn brute_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, d) = x.shape();
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for j in 0..d {
                mean[j] += x[(i, j)];
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut c = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for i in 0..n {
                    s += (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]);
                }
                c[(a, b)] = s / n as f64;
            }
        }
        c
    }

    #[test]
    fn covariance_single_sample_is_zero() {
        let c = covariance(&DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(c, DMatrix::zeros(3, 3));
        assert!(covariance(&DMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn covariance_two_points() {
        let c = covariance(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0])).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn covariance_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 5, 3);
        let diff = (covariance(&x).unwrap() - brute_covariance(&x)).amax();
        assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn scatter_degenerate_cases() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let (sw, sb) = scatter_matrices(&x, &[1, 2]).unwrap();
        assert_eq!(sw, DMatrix::zeros(2, 2));
        assert!(sb.amax() > 0.0);
        let (_, sb) = scatter_matrices(&x, &[4, 4]).unwrap();
        assert_eq!(sb, DMatrix::zeros(2, 2));
    }

    #[test]
    fn pca_collinear_points() {
        let x = DMatrix::from_row_slice(3, 2, &[-1.0, -1.0, 0.0, 0.0, 2.0, 2.0]);
        let p = pca_fit(&x, 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((p.matrix[(0, 0)] - h).abs() < 1e-12);
        assert!((p.matrix[(1, 0)] - h).abs() < 1e-12);
        assert!(pca_fit(&x, 3).is_err());
    }

    #[test]
    fn pca_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 40, 6);
        let cov = covariance(&x).unwrap();
        let p = pca_fit(&x, 6).unwrap();
        for (j, &eta) in p.eigenvalues.iter().enumerate() {
            let v = p.matrix.column(j);
            let r = (&cov * v - v * eta).norm();
            assert!(r <= 1e-8 * cov.norm());
        }
        assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn lda_single_class_is_an_error() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(lda_fit(&x, &[2, 2, 2], 1), Err(Error::SingleClass(1))));
        assert!(lda_fit(&x, &[1, 2, 2], 2).is_err());
    }

    #[test]
    fn lda_recovers_displacement_axis() {
        // Mirror every point about axis 1 so the within-class scatter carries
        // no cross term; the optimum is then exactly axis 1.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..50 {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample::<f64, _>(StandardNormal) * 2.0;
            for (shift, label) in [(0.0, 1u8), (4.0, 2u8)] {
                rows.extend_from_slice(&[a + shift, b, a + shift, -b]);
                labels.extend([label, label]);
            }
        }
        let x = DMatrix::from_row_slice(labels.len(), 2, &rows);
        let p = lda_fit(&x, &labels, 1).unwrap();
        let angle = p.matrix[(1, 0)].atan2(p.matrix[(0, 0)]).abs();
        assert!(angle < 1e-3, "{angle}");

        // brute-force scan of the Fisher criterion over directions
        let (sw, sb) = scatter_matrices(&x, &labels).unwrap();
        let reg = &sw + DMatrix::identity(2, 2) * (1e-6 * sw.trace() / 2.0);
        let steps = 31_416;
        let best = (0..steps)
            .map(|i| std::f64::consts::PI * i as f64 / steps as f64)
            .max_by(|a, b| {
                let r = |t: f64| fisher_ratio(&DVector::from_vec(vec![t.cos(), t.sin()]), &reg, &sb);
                r(*a).total_cmp(&r(*b))
            })
            .unwrap();
        let dist = best.min(std::f64::consts::PI - best);
        assert!(dist < 1e-3, "{best}");
    }

    #[test]
    fn complement_basis_is_orthonormal_and_orthogonal() {
        let d = DVector::from_vec(vec![0.3, -2.0, 0.7, 1.1]);
        let q = complement_basis(&d).unwrap();
        assert_eq!(q.shape(), (4, 3));
        assert!(orthonormality_error(&q) < 1e-12);
        assert!((q.transpose() * &d).norm() < 1e-12 * d.norm());
        assert!(complement_basis(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn drca_without_mean_difference_is_scaled_pca() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 30, 5);
        let cfg = DrcaConfig { lambda: 0.1, k: 3 };
        let p = drca_fit(&x, &x, &cfg).unwrap();
        assert!(p.mean_difference.is_none());
        let pca = pca_fit(&x, 3).unwrap();
        assert!(subspace_distance(&p.matrix, &pca.matrix) < 1e-8);
        for (a, b) in p.eigenvalues.iter().zip(&pca.eigenvalues) {
            assert!((a - 1.1 * b).abs() < 1e-10);
        }
        // k = D allowed without deflation
        assert!(drca_fit(&x, &x, &DrcaConfig { lambda: 0.1, k: 5 }).is_ok());
    }

    #[test]
    fn drca_excludes_translation_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut source = random_matrix(&mut rng, 60, 4);
        for i in 30..60 {
            source[(i, 1)] += 3.0;
        }
        let mut target = source.clone();
        target.column_mut(0).add_scalar_mut(5.0);
        let p = drca_fit(&source, &target, &DrcaConfig { lambda: 0.1, k: 3 }).unwrap();
        for j in 0..3 {
            assert!(p.matrix[(0, j)].abs() <= 1e-6);
        }
        assert!(drca_fit(&source, &target, &DrcaConfig { lambda: 0.1, k: 4 }).is_err());
    }

    #[test]
    fn full_complement_is_independent_of_weights() {
        // with k = D - 1 the columns span the whole complement of d, so the
        // covariance and scatter weights only rotate the basis
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_matrix(&mut rng, 40, 5);
        let t = random_matrix(&mut rng, 30, 5).add_scalar(0.4);
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8 + 1).collect();
        let a = drca_fit(&s, &t, &DrcaConfig { lambda: 0.1, k: 4 }).unwrap();
        let b = ldsp_fit(&s, &labels, &t, &LdspConfig { lambda: 3.0, kappa: 10.0, mu: 100.0, k: 4 })
            .unwrap();
        assert!(subspace_distance(&a.matrix, &b.matrix) < 1e-10);
        let c = drca_fit(&s, &t, &DrcaConfig { lambda: 0.1, k: 2 }).unwrap();
        let d = ldsp_fit(&s, &labels, &t, &LdspConfig { lambda: 3.0, kappa: 10.0, mu: 100.0, k: 2 })
            .unwrap();
        assert!(subspace_distance(&c.matrix, &d.matrix) > 1e-3);
    }

    #[test]
    fn drca_rejects_bad_inputs() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert!(drca_fit(&x, &y, &DrcaConfig { lambda: 0.1, k: 1 }).is_err());
        assert!(drca_fit(&x, &DMatrix::zeros(0, 2), &DrcaConfig { lambda: 0.1, k: 1 }).is_err());
        assert!(drca_fit(&x, &x, &DrcaConfig { lambda: -1.0, k: 1 }).is_err());
    }

    #[test]
    fn ldsp_zero_weights_matches_drca() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let source = random_matrix(&mut rng, 40, 6);
        let labels: Vec<u8> = (0..40).map(|i| (i % 3) as u8 + 1).collect();
        let target = random_matrix(&mut rng, 25, 6).add_scalar(0.7);
        let drca = drca_fit(&source, &target, &DrcaConfig { lambda: 0.1, k: 4 }).unwrap();
        let ldsp = ldsp_fit(
            &source,
            &labels,
            &target,
            &LdspConfig { lambda: 0.1, kappa: 0.0, mu: 0.0, k: 4 },
        )
        .unwrap();
        assert!(subspace_distance(&drca.matrix, &ldsp.matrix) < 1e-8);
        assert!(matches!(
            ldsp_fit(&source, &[1; 40], &target, &LdspConfig::default()),
            Err(Error::SingleClass(1))
        ));
    }

    #[test]
    fn ldsp_top_direction_is_more_discriminative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (n, d) = (90, 5);
        let mut source = random_matrix(&mut rng, n, d);
        let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8 + 1).collect();
        // large nuisance variance on axis 0, modest class separation on axis 2
        for i in 0..n {
            source[(i, 0)] *= 6.0;
            source[(i, 2)] += 1.2 * labels[i] as f64;
        }
        let mut target = random_matrix(&mut rng, 70, d);
        target.column_mut(0).scale_mut(6.0);
        target.column_mut(3).add_scalar_mut(2.0);
        let drca = drca_fit(&source, &target, &DrcaConfig { lambda: 0.1, k: 2 }).unwrap();
        let ldsp = ldsp_fit(
            &source,
            &labels,
            &target,
            &LdspConfig { lambda: 0.1, kappa: 10.0, mu: 100.0, k: 2 },
        )
        .unwrap();
        let (sw, sb) = scatter_matrices(&source, &labels).unwrap();
        let r_drca = fisher_ratio(&drca.matrix.column(0).into_owned(), &sw, &sb);
        let r_ldsp = fisher_ratio(&ldsp.matrix.column(0).into_owned(), &sw, &sb);
        assert!(r_ldsp > r_drca, "ldsp {r_ldsp} vs drca {r_drca}");
    }

    #[test]
    fn projection_centering_and_identity() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, -1.0, 0.0]);
        let id = LinearProjection::identity(2);
        assert_eq!(project(&id, &x, Domain::Source).unwrap(), x);

        let p = pca_fit(&x, 2).unwrap();
        let mean = column_mean(&x).transpose();
        let z = project(&p, &DMatrix::from_row_slice(1, 2, mean.as_slice()), Domain::Source)
            .unwrap();
        assert!(z.norm() < 1e-12);
        assert!(project(&p, &DMatrix::zeros(1, 3), Domain::Source).is_err());
    }

    #[test]
    fn fits_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_matrix(&mut rng, 30, 5);
        let t = random_matrix(&mut rng, 30, 5).add_scalar(0.3);
        let labels: Vec<u8> = (0..30).map(|i| (i % 2) as u8 + 1).collect();
        let cfg = LdspConfig { k: 4, ..Default::default() };
        assert_eq!(
            ldsp_fit(&s, &labels, &t, &cfg).unwrap(),
            ldsp_fit(&s, &labels, &t, &cfg).unwrap()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn projection_contracts_rows(seed in any::<u64>(), k in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_matrix(&mut rng, 20, 6);
                let t = random_matrix(&mut rng, 15, 6).add_scalar(1.0);
                let p = drca_fit(&s, &t, &DrcaConfig { lambda: 0.5, k }).unwrap();
                let z = project(&p, &t, Domain::Target).unwrap();
                for i in 0..t.nrows() {
                    let c = t.row(i) - p.target_center.transpose();
                    prop_assert!(z.row(i).norm() <= c.norm() * (1.0 + 1e-12));
                }
            }

            #[test]
            fn scatter_sums_to_covariance(seed in any::<u64>(), n in 2usize..30, d in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = random_matrix(&mut rng, n, d);
                let labels: Vec<u8> = (0..n).map(|_| rng.random_range(1..=4)).collect();
                let (sw, sb) = scatter_matrices(&x, &labels).unwrap();
                let cov = brute_covariance(&x);
                prop_assert!((sw + sb - &cov).norm() <= 1e-12 * (1.0 + cov.norm()));
            }
        }
    }
}
