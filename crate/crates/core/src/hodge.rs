//! Harmonic fields with and without boundary conditions, the splitting of
//! cochains on regions with boundary into exact-Dirichlet, harmonic and
//! coexact parts, and the Hodge decomposition on closed complexes.
//!
//! Boundary conditions on the normal component are imposed variationally:
//! "coclosed" always means orthogonal to the image of `d` on a test space, so
//! no normal-trace operator is ever assembled.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dec::{Cochain, DecOperators};
use crate::error::{Error, Result};
use crate::linalg::{canonicalize_basis, null_space, select_cols, select_rows, InnerProduct};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubspaceTag {
    /// Closed and coclosed against trace-zero test cochains.
    H,
    /// Closed and orthogonal to all exact cochains.
    HN,
    /// Harmonic fields of the trace-zero subcomplex.
    HD,
    /// `d` of trace-zero cochains.
    ExactD,
    /// Complement of `ExactD ⊕ H`.
    CoexactN,
    /// `H ∩ ran d`.
    HarmonicExact,
    /// `ker δ` on a closed complex.
    KerCoclosed,
    Exact,
    Coexact,
    LSigma,
    LMBoundary,
    LMTilde,
    KerLambda,
    RanLambda,
    Gauge,
    Degeneracy,
    Complement,
}

/// A subspace of `k`-cochains (or of pairs of them) with a basis that is
/// orthonormal in the relevant mass inner product.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub complex: String,
    pub degree: usize,
    pub tag: SubspaceTag,
    /// One basis vector per column.
    pub basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(complex: &str, degree: usize, tag: SubspaceTag, basis: DMatrix<f64>) -> Self {
        Self {
            complex: complex.to_string(),
            degree,
            tag,
            basis: canonicalize_basis(&basis),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn cochains(&self) -> Vec<Cochain> {
        self.basis
            .column_iter()
            .map(|c| Cochain::new(&self.complex, self.degree, &c.into_owned()))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "complex": self.complex,
            "degree": self.degree,
            "tag": self.tag,
            "dimension": self.dim(),
            "basis": self.cochains(),
        })
    }
}

/// Basis of the part of `span(basis)` orthogonal to `span(against)`; both
/// inputs orthonormal in `ip`, and so is the output.
pub fn orthogonal_part(ip: &InnerProduct, basis: &DMatrix<f64>, against: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if basis.ncols() == 0 || against.ncols() == 0 {
        return basis.clone();
    }
    let c = against.transpose() * ip.gram() * basis;
    basis * null_space(&c, tol)
}

fn exact_basis(ops: &DecOperators, k: usize, cols: Option<&[usize]>, tol: f64) -> DMatrix<f64> {
    let n = ops.count(k);
    if k == 0 {
        return DMatrix::zeros(n, 0);
    }
    let d = ops.d_ref(k - 1);
    let gen = match cols {
        Some(c) => select_cols(d, c),
        None => d.clone(),
    };
    ops.mass(k).orthonormal_range(&gen, tol)
}

fn closed_basis(ops: &DecOperators, k: usize, tol: f64) -> DMatrix<f64> {
    let n = ops.count(k);
    if k >= ops.dim() {
        return ops.mass(k).unwhiten(&DMatrix::identity(n, n));
    }
    ops.mass(k).orthonormal_null_space(ops.d_ref(k), tol)
}

/// `d` applied to trace-zero `(k-1)`-cochains.
pub fn exact_dirichlet(ops: &DecOperators, k: usize, tol: f64) -> Subspace {
    let interior = if k > 0 { ops.interior(k - 1) } else { Vec::new() };
    let b = exact_basis(ops, k, Some(&interior), tol);
    Subspace::new(ops.complex().id(), k, SubspaceTag::ExactD, b)
}

/// All exact `k`-cochains.
pub fn exact(ops: &DecOperators, k: usize, tol: f64) -> Subspace {
    Subspace::new(ops.complex().id(), k, SubspaceTag::Exact, exact_basis(ops, k, None, tol))
}

/// Harmonic fields: closed, and orthogonal to `d` of every trace-zero
/// `(k-1)`-cochain.
pub fn harmonic_fields(ops: &DecOperators, k: usize, tol: f64) -> Subspace {
    let z = closed_basis(ops, k, tol);
    let e = exact_dirichlet(ops, k, tol).basis;
    let h = orthogonal_part(ops.mass(k), &z, &e, tol);
    Subspace::new(ops.complex().id(), k, SubspaceTag::H, h)
}

/// Harmonic Neumann fields: closed and orthogonal to all exact cochains.
pub fn harmonic_neumann(ops: &DecOperators, k: usize, tol: f64) -> Subspace {
    let z = closed_basis(ops, k, tol);
    let e = exact_basis(ops, k, None, tol);
    let h = orthogonal_part(ops.mass(k), &z, &e, tol);
    Subspace::new(ops.complex().id(), k, SubspaceTag::HN, h)
}

/// Harmonic Dirichlet fields: the harmonic space of the trace-zero subcomplex,
/// extended by zero.
pub fn harmonic_dirichlet(ops: &DecOperators, k: usize, tol: f64) -> Result<Subspace> {
    let n = ops.count(k);
    let zk = ops.interior(k);
    let id = ops.complex().id();
    if zk.is_empty() {
        return Ok(Subspace::new(id, k, SubspaceTag::HD, DMatrix::zeros(n, 0)));
    }
    let gram = select_cols(&select_rows(ops.mass(k).gram(), &zk), &zk);
    let ip = InnerProduct::new(gram)?;
    let closed = if k < ops.dim() {
        ip.orthonormal_null_space(&select_cols(ops.d_ref(k), &zk), tol)
    } else {
        ip.unwhiten(&DMatrix::identity(zk.len(), zk.len()))
    };
    let exact = if k > 0 {
        let zkm = ops.interior(k - 1);
        let d = select_cols(&select_rows(ops.d_ref(k - 1), &zk), &zkm);
        ip.orthonormal_range(&d, tol)
    } else {
        DMatrix::zeros(zk.len(), 0)
    };
    let local = orthogonal_part(&ip, &closed, &exact, tol);
    let mut full = DMatrix::zeros(n, local.ncols());
    for (r, &i) in zk.iter().enumerate() {
        for c in 0..local.ncols() {
            full[(i, c)] = local[(r, c)];
        }
    }
    Ok(Subspace::new(id, k, SubspaceTag::HD, full))
}

/// `H ∩ ran d`: the part of the harmonic fields orthogonal to `HN`.
pub fn harmonic_exact(ops: &DecOperators, k: usize, tol: f64) -> Subspace {
    let h = harmonic_fields(ops, k, tol).basis;
    let hn = harmonic_neumann(ops, k, tol).basis;
    let he = orthogonal_part(ops.mass(k), &h, &hn, tol);
    Subspace::new(ops.complex().id(), k, SubspaceTag::HarmonicExact, he)
}

/// The four components of a `k`-cochain; they sum to the input and are
/// pairwise orthogonal.
#[derive(Clone, Debug)]
pub struct HmfSplit {
    pub e_d: Cochain,
    pub h_n: Cochain,
    pub h_e: Cochain,
    pub c_n: Cochain,
}

impl HmfSplit {
    pub fn parts(&self) -> [DVector<f64>; 4] {
        [self.e_d.vector(), self.h_n.vector(), self.h_e.vector(), self.c_n.vector()]
    }

    /// `||ω - Σ parts|| / ||ω||` in the mass norm.
    pub fn reconstruction_residual(&self, ip: &InnerProduct, omega: &DVector<f64>) -> f64 {
        let sum = self.parts().iter().fold(DVector::zeros(omega.len()), |a, p| a + p);
        let nrm = ip.norm(omega);
        if nrm == 0.0 {
            return ip.norm(&sum);
        }
        ip.norm(&(omega - sum)) / nrm
    }

    /// Largest `|⟨a, b⟩| / ||ω||²` over distinct component pairs.
    pub fn orthogonality_defect(&self, ip: &InnerProduct, omega: &DVector<f64>) -> f64 {
        let p = self.parts();
        let scale = ip.dot(omega, omega).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                worst = worst.max(ip.dot(&p[i], &p[j]).abs() / scale);
            }
        }
        worst
    }
}

/// Precomputed bases for repeated splittings in one degree.
#[derive(Clone, Debug)]
pub struct HmfBases {
    pub degree: usize,
    pub complex: String,
    pub exact_dirichlet: Subspace,
    pub harmonic: Subspace,
    pub harmonic_neumann: Subspace,
    pub harmonic_exact: Subspace,
    ip: InnerProduct,
}

impl HmfBases {
    pub fn new(ops: &DecOperators, k: usize, tol: f64) -> Self {
        let harmonic = harmonic_fields(ops, k, tol);
        let harmonic_neumann = harmonic_neumann(ops, k, tol);
        let he = orthogonal_part(ops.mass(k), &harmonic.basis, &harmonic_neumann.basis, tol);
        Self {
            degree: k,
            complex: ops.complex().id().to_string(),
            exact_dirichlet: exact_dirichlet(ops, k, tol),
            harmonic_exact: Subspace::new(ops.complex().id(), k, SubspaceTag::HarmonicExact, he),
            harmonic,
            harmonic_neumann,
            ip: ops.mass(k).clone(),
        }
    }

    pub fn split(&self, omega: &DVector<f64>) -> Result<HmfSplit> {
        if omega.len() != self.ip.dim() {
            return Err(Error::Mismatch(format!(
                "cochain has length {}, expected {}",
                omega.len(),
                self.ip.dim()
            )));
        }
        let e_d = self.ip.project(&self.exact_dirichlet.basis, omega);
        let h = self.ip.project(&self.harmonic.basis, omega);
        let h_n = self.ip.project(&self.harmonic_neumann.basis, omega);
        let h_e = &h - &h_n;
        let c_n = omega - &e_d - &h;
        let wrap = |v: &DVector<f64>| Cochain::new(&self.complex, self.degree, v);
        Ok(HmfSplit {
            e_d: wrap(&e_d),
            h_n: wrap(&h_n),
            h_e: wrap(&h_e),
            c_n: wrap(&c_n),
        })
    }
}

/// Splits `ω` into exact-Dirichlet, harmonic Neumann, harmonic exact and
/// coexact-Neumann parts.
pub fn hmf_decompose(ops: &DecOperators, k: usize, omega: &DVector<f64>, tol: f64) -> Result<HmfSplit> {
    HmfBases::new(ops, k, tol).split(omega)
}

/// Exact, harmonic and coexact parts of `φ` on a closed complex.
pub fn hodge_decompose_closed(
    ops: &DecOperators,
    k: usize,
    phi: &DVector<f64>,
    tol: f64,
) -> Result<(Cochain, Cochain, Cochain)> {
    if ops.has_boundary() {
        return Err(Error::InvalidParameter(format!("{} has boundary", ops.complex().id())));
    }
    if phi.len() != ops.count(k) {
        return Err(Error::Mismatch(format!("cochain has length {}, expected {}", phi.len(), ops.count(k))));
    }
    let ip = ops.mass(k);
    let ex = ip.project(&exact_basis(ops, k, None, tol), phi);
    let h = ip.project(&harmonic_neumann(ops, k, tol).basis, phi);
    let co = phi - &ex - &h;
    let id = ops.complex().id();
    Ok((Cochain::new(id, k, &ex), Cochain::new(id, k, &h), Cochain::new(id, k, &co)))
}

/// Orthogonal projector onto `ker δ_k` of a closed complex.
#[derive(Clone, Debug)]
pub struct CoclosedProjector {
    pub subspace: Subspace,
    /// `P = B B^T M`.
    pub matrix: DMatrix<f64>,
}

impl CoclosedProjector {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub fn rank(&self) -> usize {
        self.subspace.dim()
    }
}

/// `ker δ_k` as the orthogonal complement of the exact cochains.
pub fn coclosed_projector(ops: &DecOperators, k: usize, tol: f64) -> Result<CoclosedProjector> {
    if ops.has_boundary() {
        return Err(Error::InvalidParameter(format!("{} has boundary", ops.complex().id())));
    }
    Ok(coclosed_projector_unchecked(ops, k, tol))
}

pub(crate) fn coclosed_projector_unchecked(ops: &DecOperators, k: usize, tol: f64) -> CoclosedProjector {
    let ip = ops.mass(k);
    let b = if k == 0 {
        ip.unwhiten(&DMatrix::identity(ops.count(0), ops.count(0)))
    } else {
        ip.orthonormal_null_space(&(ops.d_ref(k - 1).transpose() * ip.gram()), tol)
    };
    let subspace = Subspace::new(ops.complex().id(), k, SubspaceTag::KerCoclosed, b);
    let matrix = ip.projector(&subspace.basis);
    CoclosedProjector { subspace, matrix }
}
