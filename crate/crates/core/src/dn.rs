//! Yang-Mills Dirichlet problem for 1-cochains and the Dirichlet-to-Neumann
//! operator as a boundary Schur complement.
//!
//! The stiffness form is `K = d1^T M2 d1 + w · P`, where `P` penalizes the
//! codifferential tested against trace-zero 0-cochains (Coulomb gauge). For
//! fixed boundary data the penalty can always be driven to zero by an interior
//! gauge transformation, so the Schur complement does not depend on `w`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde_json::{json, Value};

use crate::dec::DecOperators;
use crate::error::{Error, Result};
use crate::hodge::{coclosed_projector_unchecked, harmonic_dirichlet, Subspace, SubspaceTag};
use crate::linalg::{null_space, range, relative_asymmetry, select_cols, select_rows, InnerProduct};
use crate::mesh::{collar, SimplicialComplex};

/// Sign in the general-degree identification of Dirichlet and Neumann spaces,
/// `(-1)^{k(1+k)}`. It equals one for every `k`; for 1-forms the map is the
/// identity on coefficients.
pub fn j_sign(k: usize) -> f64 {
    if (k * (1 + k)) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign `(-1)^n` relating the Neumann trace to the boundary Hodge star of `⋆dφ`.
pub fn neumann_sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Interior-eliminated stiffness data for 1-cochains on a region.
#[derive(Clone, Debug)]
pub struct Stiffness {
    pub k: DMatrix<f64>,
    /// Interior edge indices (the unknowns).
    pub free: Vec<usize>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    pub weight: f64,
}

/// `d1^T M2 d1`.
pub fn curvature_form(ops: &DecOperators) -> DMatrix<f64> {
    let d1 = ops.d_ref(1);
    d1.transpose() * ops.mass(2).gram() * d1
}

impl Stiffness {
    /// Assembles `K` and factors the interior block on `free`, regularized on
    /// the harmonic Dirichlet fields (its exact null space).
    pub fn new(ops: &DecOperators, free: Vec<usize>, weight: f64, tol: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("penalty weight must be positive, got {weight}")));
        }
        if ops.dim() < 2 {
            return Err(Error::InvalidParameter("the Yang-Mills problem needs dimension >= 2".into()));
        }
        let m1 = ops.mass(1).gram();
        let iv = ops.interior(0);
        let mut k = curvature_form(ops);
        if !iv.is_empty() {
            let d0i = select_cols(ops.d_ref(0), &iv);
            let m0ii = InnerProduct::new(select_cols(&select_rows(ops.mass(0).gram(), &iv), &iv))?;
            let b = m1 * d0i;
            let pen = &b * m0ii.solve(&b.transpose());
            k += pen * weight;
        }
        let k = (&k + k.transpose()) * 0.5;
        let kff = select_cols(&select_rows(&k, &free), &free);
        let hd = harmonic_dirichlet(ops, 1, tol)?;
        let mut reg = kff.clone();
        if hd.dim() > 0 {
            // scale the regularization like K so conditioning is not spoiled
            let g = select_rows(&(m1 * &hd.basis), &free);
            let s = kff.amax().max(f64::MIN_POSITIVE) / g.amax().powi(2).max(f64::MIN_POSITIVE);
            reg += &g * g.transpose() * s;
        }
        let chol = Cholesky::new(reg).ok_or_else(|| {
            Error::Solver(format!(
                "interior block is singular on {} ({} unknowns, {} harmonic Dirichlet fields)",
                ops.complex().id(),
                free.len(),
                hd.dim()
            ))
        })?;
        Ok(Self { k, free, chol, weight })
    }

    /// Schur complement `E^T K E - E^T K F (K_FF + R)^{-1} F^T K E` for the
    /// prescribed-data columns `e` (edges by data).
    pub fn schur(&self, e: &DMatrix<f64>) -> DMatrix<f64> {
        let ke = &self.k * e;
        let fke = select_rows(&ke, &self.free);
        let x = self.chol.solve(&fke);
        let s = e.transpose() * &ke - fke.transpose() * x;
        (&s + s.transpose()) * 0.5
    }

    /// Minimizing extension of prescribed data `e * data`.
    pub fn extend(&self, e: &DMatrix<f64>, data: &DVector<f64>) -> DVector<f64> {
        let mut phi = e * data;
        let kphi = &self.k * &phi;
        let rhs = DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| -kphi[i]));
        let u = self.chol.solve(&rhs);
        for (j, &i) in self.free.iter().enumerate() {
            phi[i] += u[j];
        }
        phi
    }

    /// `||F^T K φ|| / (||K|| ||φ||)`.
    pub fn stationarity_residual(&self, phi: &DVector<f64>) -> f64 {
        let kphi = &self.k * phi;
        let r = DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| kphi[i]));
        let scale = self.k.norm() * phi.norm();
        if scale == 0.0 {
            return r.norm();
        }
        r.norm() / scale
    }
}

fn boundary_edges(ops: &DecOperators) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let t = ops.trace(1)?.clone();
    let free = ops.interior(1);
    Ok((t.transpose(), free))
}

/// Solves the gauge-fixed Yang-Mills Dirichlet problem for boundary data `phi_d`.
pub fn solve_ym_dirichlet(ops: &DecOperators, phi_d: &DVector<f64>, weight: f64, tol: f64) -> Result<DVector<f64>> {
    let (e, free) = boundary_edges(ops)?;
    if phi_d.len() != e.ncols() {
        return Err(Error::Mismatch(format!(
            "Dirichlet datum has length {}, expected {}",
            phi_d.len(),
            e.ncols()
        )));
    }
    let st = Stiffness::new(ops, free, weight, tol)?;
    Ok(st.extend(&e, phi_d))
}

/// Weak Neumann trace `M_∂^{-1} T (d1^T M2 d1 φ)`.
///
/// For a solution of the Dirichlet problem, testing against any extension of
/// boundary data gives the same result, since the interior rows vanish.
pub fn neumann_trace(ops: &DecOperators, phi: &DVector<f64>) -> Result<DVector<f64>> {
    let b = ops.boundary().ok_or(Error::EmptyBoundary)?;
    if phi.len() != ops.count(1) {
        return Err(Error::Mismatch(format!("1-cochain has length {}, expected {}", phi.len(), ops.count(1))));
    }
    let d1 = ops.d_ref(1);
    let a = d1.transpose() * (ops.mass(2).gram() * (d1 * phi));
    Ok(b.ops.mass(1).solve_vec(&(&b.trace[1] * a)))
}

/// Dirichlet-to-Neumann operator of a region or hypersurface.
#[derive(Clone, Debug)]
pub struct DnOperator {
    pub boundary_id: String,
    /// Boundary energy form `S = M_∂ Λ`.
    pub s: DMatrix<f64>,
    /// `Λ = M_∂^{-1} S`.
    pub lambda: DMatrix<f64>,
    /// `M_∂`-orthonormal basis of the coclosed boundary 1-cochains.
    pub coclosed: DMatrix<f64>,
    /// `Q^T S Q` in the coclosed basis.
    pub lambda_red: DMatrix<f64>,
    pub kernel: Subspace,
    pub range: Subspace,
    pub weight: f64,
    /// Scale of `E^T K E`, used as an absolute floor for relative comparisons.
    pub scale: f64,
    pub boundary_mass: InnerProduct,
}

impl DnOperator {
    fn from_schur(
        boundary: &DecOperators,
        s: DMatrix<f64>,
        scale: f64,
        weight: f64,
        tol: f64,
    ) -> Self {
        let mb = boundary.mass(1).clone();
        let lambda = mb.solve(&s);
        let q = coclosed_projector_unchecked(boundary, 1, tol).subspace.basis;
        let red = q.transpose() * &s * &q;
        let red = (&red + red.transpose()) * 0.5;
        let (kernel, range) = kernel_range(boundary.complex().id(), &red, &q, scale, tol);
        Self {
            boundary_id: boundary.complex().id().to_string(),
            s,
            lambda,
            coclosed: q,
            lambda_red: red,
            kernel,
            range,
            weight,
            scale,
            boundary_mass: mb,
        }
    }

    pub fn coclosed_dim(&self) -> usize {
        self.coclosed.ncols()
    }

    /// `||S - S^T|| / ||S||`.
    pub fn asymmetry(&self) -> f64 {
        relative_asymmetry(&self.s)
    }

    /// `min eig(S) / max |eig(S)|`; nonnegative up to round-off for a PSD form.
    pub fn min_eigen_ratio(&self) -> f64 {
        let e = self.s.clone().symmetric_eigenvalues();
        let max = e.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        e.min() / max
    }

    /// Eigenvalues of `Λ_red`, ascending.
    pub fn reduced_spectrum(&self) -> Vec<f64> {
        if self.lambda_red.nrows() == 0 {
            return Vec::new();
        }
        let mut e: Vec<f64> = self.lambda_red.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    /// Eigenvalues of `Λ` (generalized problem `S x = μ M_∂ x`), ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let eye = DMatrix::identity(self.s.nrows(), self.s.nrows());
        let linv = self.boundary_mass.unwhiten(&eye);
        let a = linv.transpose() * &self.s * &linv;
        let a = (&a + a.transpose()) * 0.5;
        let mut e: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    /// `Λ_red` applied to a coclosed boundary cochain given in coordinates of
    /// [`coclosed`](Self::coclosed).
    pub fn apply_reduced(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.lambda_red * c
    }

    pub fn to_json(&self) -> Value {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
        json!({
            "boundary": self.boundary_id,
            "weight": self.weight,
            "lambda": rows(&self.lambda),
            "lambda_reduced": rows(&self.lambda_red),
            "coclosed_basis": crate::hodge::Subspace::new(&self.boundary_id, 1, SubspaceTag::KerCoclosed, self.coclosed.clone()).to_json(),
            "kernel": self.kernel.to_json(),
            "range": self.range.to_json(),
        })
    }
}

fn kernel_range(id: &str, red: &DMatrix<f64>, q: &DMatrix<f64>, scale: f64, tol: f64) -> (Subspace, Subspace) {
    let n = red.nrows();
    // an identically vanishing operator has no range, whatever its round-off
    let (ker, ran) = if red.amax() <= tol * scale {
        (DMatrix::identity(n, n), DMatrix::zeros(n, 0))
    } else {
        (null_space(red, tol), range(red, tol))
    };
    (
        Subspace::new(id, 1, SubspaceTag::KerLambda, q * ker),
        Subspace::new(id, 1, SubspaceTag::RanLambda, q * ran),
    )
}

/// Assembles the Dirichlet-to-Neumann operator of a region with boundary.
pub fn assemble_dn(ops: &DecOperators, weight: f64, tol: f64) -> Result<DnOperator> {
    let (e, free) = boundary_edges(ops)?;
    let st = Stiffness::new(ops, free, weight, tol)?;
    let s = st.schur(&e);
    let scale = (e.transpose() * &st.k * &e).norm();
    Ok(DnOperator::from_schur(ops.boundary_ops()?, s, scale, weight, tol))
}

/// Kernel and range of `Λ_red` recomputed at tolerance `tol`.
pub fn dn_kernel_range(dn: &DnOperator, tol: f64) -> (Subspace, Subspace) {
    kernel_range(&dn.boundary_id, &dn.lambda_red, &dn.coclosed, dn.scale, tol)
}

/// Dirichlet-to-Neumann operator of a closed hypersurface, through the collar
/// `Σ × [0, eps]` with the same data imposed on both ends.
///
/// Bottom and top edges over the same edge of `Σ` share one unknown, so the
/// datum on the top is the one transported along the collar.
pub fn dn_hypersurface(
    sigma: &SimplicialComplex,
    eps: f64,
    layers: usize,
    weight: f64,
    tol: f64,
) -> Result<DnOperator> {
    let c = collar(sigma, layers, eps)?;
    let ops = DecOperators::build(&c)?;
    let sops = DecOperators::build(sigma)?;
    let nv = sigma.vertices().len();
    let shift = layers * nv;
    let mut e = DMatrix::zeros(ops.count(1), sigma.count(1));
    for (j, edge) in sigma.simplices(1).iter().enumerate() {
        let bottom = c.index_of(1, edge).expect("bottom edge");
        let top: Vec<usize> = edge.iter().map(|v| v + shift).collect();
        let top = c.index_of(1, &top).expect("top edge");
        // collar edges of degree below the top are oriented by their sorted
        // tuple, like the edges of Σ when Σ has dimension >= 2; a 1-dimensional
        // Σ carries its orientation in the edge sign
        let s = sigma.sign(1, j) as f64;
        e[(bottom, j)] = s;
        e[(top, j)] = s;
    }
    let st = Stiffness::new(&ops, ops.interior(1), weight, tol)?;
    let s = st.schur(&e);
    let scale = (e.transpose() * &st.k * &e).norm();
    Ok(DnOperator::from_schur(&sops, s, scale, weight, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_annulus, gen_circle, gen_disk};

    #[test]
    fn j_is_identity_for_one_forms() {
        assert_eq!(j_sign(1), 1.0);
        assert_eq!(neumann_sign(2), 1.0);
    }

    #[test]
    fn disk_dn_is_definite_on_coclosed_data() {
        let ops = DecOperators::build(&gen_disk(16).unwrap()).unwrap();
        let dn = assemble_dn(&ops, 1.0, 1e-10).unwrap();
        assert_eq!(dn.lambda.nrows(), 16);
        assert_eq!(dn.coclosed_dim(), 1);
        assert_eq!(dn.kernel.dim(), 0);
        assert!(dn.lambda_red[(0, 0)] > 0.0);
        assert!(dn.asymmetry() < 1e-10);
    }

    #[test]
    fn annulus_kernel_is_one_dimensional() {
        let ops = DecOperators::build(&gen_annulus(16, 1.0, 2.0).unwrap()).unwrap();
        let dn = assemble_dn(&ops, 1.0, 1e-10).unwrap();
        assert_eq!(dn.coclosed_dim(), 2);
        assert_eq!(dn.kernel.dim(), 1);
        assert_eq!(dn.range.dim(), 1);
    }

    #[test]
    fn solution_neumann_data_matches_operator() {
        let ops = DecOperators::build(&gen_disk(12).unwrap()).unwrap();
        let dn = assemble_dn(&ops, 1.0, 1e-10).unwrap();
        let phi_d = DVector::from_fn(12, |i, _| (i as f64 * 0.7).cos());
        let phi = solve_ym_dirichlet(&ops, &phi_d, 1.0, 1e-10).unwrap();
        let n = neumann_trace(&ops, &phi).unwrap();
        assert!((n - &dn.lambda * phi_d).amax() < 1e-9);
    }

    #[test]
    fn circle_hypersurface_operator_vanishes() {
        let dn = dn_hypersurface(&gen_circle(16).unwrap(), 0.5, 4, 1.0, 1e-10).unwrap();
        assert_eq!(dn.lambda_red.shape(), (1, 1));
        assert!(dn.lambda_red.amax() < 1e-10 * dn.scale);
    }
}
