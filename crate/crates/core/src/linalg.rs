//! Dense linear-algebra helpers shared by every layer: inner products given by
//! SPD Gram matrices, tolerance-controlled ranges and null spaces, principal
//! angles and the deterministic basis convention used in reports.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// An inner product `<x, y> = x^T G y` with `G` symmetric positive definite.
///
/// The Cholesky factor `G = L L^T` is computed once; `G^{-1}` is only ever
/// applied through it.
#[derive(Clone, Debug)]
pub struct InnerProduct {
    gram: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl InnerProduct {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::Mismatch("Gram matrix is not square".into()));
        }
        if gram.nrows() == 0 {
            return Ok(Self { gram, chol: None });
        }
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::Solver("Gram matrix is not positive definite".into()))?;
        Ok(Self {
            gram,
            chol: Some(chol),
        })
    }

    /// Euclidean inner product on `n` coordinates.
    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn dot(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.dot(x, x).max(0.0).sqrt()
    }

    /// `G^{-1} b`, column by column.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.chol {
            Some(c) => c.solve(b),
            None => b.clone(),
        }
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            Some(c) => c.solve(b),
            None => b.clone(),
        }
    }

    /// `L^T b`: maps coordinates to a frame where this inner product is Euclidean.
    pub fn whiten(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.chol {
            Some(c) => c.l().transpose() * b,
            None => b.clone(),
        }
    }

    /// `L^{-T} y`, the inverse of [`whiten`](Self::whiten).
    pub fn unwhiten(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.chol {
            Some(c) => c
                .l()
                .tr_solve_lower_triangular(y)
                .expect("Cholesky factor is nonsingular"),
            None => y.clone(),
        }
    }

    /// `G`-orthonormal basis of the column span of `generators`.
    pub fn orthonormal_range(&self, generators: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
        let y = self.whiten(generators);
        self.unwhiten(&range(&y, tol))
    }

    /// `G`-orthonormal basis of `ker C`.
    pub fn orthonormal_null_space(&self, constraints: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
        let n = self.dim();
        if constraints.nrows() == 0 {
            return self.unwhiten(&DMatrix::identity(n, n));
        }
        let eye = DMatrix::identity(n, n);
        let c_frame = constraints * self.unwhiten(&eye);
        self.unwhiten(&null_space(&c_frame, tol))
    }

    /// Orthogonal projection onto the span of the `G`-orthonormal columns of `basis`.
    pub fn project(&self, basis: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
        if basis.ncols() == 0 {
            return DVector::zeros(x.len());
        }
        basis * (basis.transpose() * (&self.gram * x))
    }

    /// Projector matrix `B B^T G` for a `G`-orthonormal basis `B`.
    pub fn projector(&self, basis: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        if basis.ncols() == 0 {
            return DMatrix::zeros(n, n);
        }
        basis * (basis.transpose() * &self.gram)
    }

    /// Largest deviation of `B^T G B` from the identity.
    pub fn orthonormality_defect(&self, basis: &DMatrix<f64>) -> f64 {
        if basis.ncols() == 0 {
            return 0.0;
        }
        let g = basis.transpose() * &self.gram * basis;
        let k = g.nrows();
        (g - DMatrix::<f64>::identity(k, k)).amax()
    }

    /// Cosines of the principal angles between two `G`-orthonormal bases,
    /// sorted descending.
    pub fn principal_cosines(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        if a.ncols() == 0 || b.ncols() == 0 {
            return Vec::new();
        }
        let cross = a.transpose() * &self.gram * b;
        let mut s: Vec<f64> = singular_values(&cross)
            .into_iter()
            .map(|c| c.min(1.0))
            .collect();
        s.sort_by(|x, y| y.partial_cmp(x).unwrap());
        s
    }

    /// Largest principal angle between two subspaces of equal dimension;
    /// `PI/2` when the dimensions differ.
    pub fn subspace_distance(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        if a.ncols() != b.ncols() {
            return std::f64::consts::FRAC_PI_2;
        }
        if a.ncols() == 0 {
            return 0.0;
        }
        // measured via sines, which stay accurate near zero where acos does not
        self.containment_angle(a, b).max(self.containment_angle(b, a))
    }

    /// Largest principal angle from `sub` into `sup`: zero iff `sub ⊆ sup`.
    pub fn containment_angle(&self, sub: &DMatrix<f64>, sup: &DMatrix<f64>) -> f64 {
        if sub.ncols() == 0 {
            return 0.0;
        }
        if sup.ncols() == 0 {
            return std::f64::consts::FRAC_PI_2;
        }
        let proj = sup * (sup.transpose() * &self.gram * sub);
        let diff = sub - proj;
        let g = diff.transpose() * &self.gram * &diff;
        max_eigenvalue_sym(&g).max(0.0).sqrt().min(1.0).asin()
    }

    /// Smallest principal angle between two subspaces (zero iff they intersect).
    pub fn min_angle(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let cos = self.principal_cosines(a, b);
        match cos.first() {
            Some(c) => c.clamp(-1.0, 1.0).acos(),
            None => std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Singular values of `a` (any shape).
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

fn max_eigenvalue_sym(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return 0.0;
    }
    let sym = (g + g.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

/// Numerical rank: singular values above `tol * sigma_max`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Euclidean-orthonormal basis of the column span of `a`.
pub fn range(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let m = a.nrows();
    if m == 0 || a.ncols() == 0 {
        return DMatrix::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(m, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    DMatrix::from_fn(m, keep.len(), |r, c| u[(r, keep[c])])
}

/// Euclidean-orthonormal basis of `ker a`.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to at least square so the SVD yields a full right basis
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= tol * smax || smax == 0.0).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| vt[(keep[c], r)])
}

/// Applies the reporting convention to a basis: each column is flipped so its
/// largest-magnitude coefficient is positive, and columns are ordered by the
/// index of that coefficient.
pub fn canonicalize_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let mut cols: Vec<(usize, DVector<f64>)> = basis
        .column_iter()
        .map(|c| {
            let col: DVector<f64> = c.into_owned();
            let (imax, _) = col
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 + 1e-12 { (i, v.abs()) } else { acc });
            let col = if col.len() > 0 && col[imax] < 0.0 { -col } else { col };
            (imax, col)
        })
        .collect();
    cols.sort_by_key(|(i, _)| *i);
    let n = basis.nrows();
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, (_, c)) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// `[a | b]`.
pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// `[a ; b]`.
pub fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Frobenius-relative asymmetry `||A - A^T|| / ||A||`.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).norm() / n
}

/// Selects the listed rows of `a`.
pub fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |r, c| a[(rows[r], c)])
}

/// Selects the listed columns of `a`.
pub fn select_cols(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-10);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).amax() < 1e-12);
    }

    #[test]
    fn weighted_range_is_orthonormal() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let ip = InnerProduct::new(g).unwrap();
        let gen = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b = ip.orthonormal_range(&gen, 1e-10);
        assert_eq!(b.ncols(), 1);
        assert!(ip.orthonormality_defect(&b) < 1e-12);
    }

    #[test]
    fn weighted_null_space_satisfies_constraint() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 3.0]);
        let ip = InnerProduct::new(g).unwrap();
        let c = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 2.0]);
        let b = ip.orthonormal_null_space(&c, 1e-10);
        assert_eq!(b.ncols(), 2);
        assert!((&c * &b).amax() < 1e-12);
        assert!(ip.orthonormality_defect(&b) < 1e-12);
    }

    #[test]
    fn angles_between_lines() {
        let ip = InnerProduct::identity(2);
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!((ip.subspace_distance(&a, &b) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(ip.subspace_distance(&a, &a) < 1e-12);
        assert!(ip.containment_angle(&a, &hstack(&a, &b)) < 1e-12);
    }

    #[test]
    fn canonical_sign_and_order() {
        let b = DMatrix::from_row_slice(3, 2, &[0.0, -0.1, -1.0, 0.0, 0.0, 0.9]);
        let c = canonicalize_basis(&b);
        assert_eq!(c[(1, 0)], 1.0);
        assert!(c[(2, 1)] > 0.0);
    }
}
