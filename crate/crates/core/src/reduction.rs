//! Presymplectic boundary data, gauge reduction, Lagrangian tests, the complex
//! structure `J`, the Hermitian form and the gluing codimension.
//!
//! Reduced spaces are represented in "coclosed coordinates": a pair `(cD, cN)`
//! stands for the boundary data `(Q cD, Q cN)`, where `Q` is an orthonormal
//! basis of the coclosed boundary 1-cochains. In these coordinates
//! `ω = ½ [[0, I], [-I, 0]]`, `g = I` and `J(cD, cN) = (-cN, cD)`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dec::{bracket, BoundaryDatum, DecOperators};
use crate::error::{Error, Result};
use crate::hodge::{coclosed_projector_unchecked, exact, harmonic_neumann, Subspace, SubspaceTag};
use crate::linalg::{hstack, null_space, range, singular_values, vstack, InnerProduct};
use crate::mesh::{glue, GluingMap, SimplicialComplex};

/// `ω̃` on pairs of boundary 1-cochains of a closed complex `Σ`.
#[derive(Clone, Debug)]
pub struct SymplecticModel {
    pub boundary_id: String,
    pub mass: InnerProduct,
    /// Orthonormal basis of `ker δ_1(Σ)`.
    pub coclosed: DMatrix<f64>,
    /// Orthonormal basis of the exact 1-cochains `d_0 f`.
    pub exact: DMatrix<f64>,
    /// `½ [[0, M], [-M, 0]]` on `(φD, φN)` stacked.
    pub omega: DMatrix<f64>,
    sigma: DecOperators,
}

impl SymplecticModel {
    pub fn edges(&self) -> usize {
        self.mass.dim()
    }

    /// `½([a, b] - [b, a])`.
    pub fn omega_tilde(&self, a: &BoundaryDatum, b: &BoundaryDatum) -> Result<f64> {
        Ok(0.5 * (bracket(&self.sigma, a, b)? - bracket(&self.sigma, b, a)?))
    }

    pub fn omega_pairs(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.omega * b)[(0, 0)]
    }

    /// Inner product `g` on stacked pairs: `diag(M, M)`.
    pub fn pair_inner_product(&self) -> InnerProduct {
        let n = self.edges();
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(self.mass.gram());
        g.view_mut((n, n), (n, n)).copy_from(self.mass.gram());
        InnerProduct::new(g).expect("block diagonal of an SPD matrix")
    }

    /// All Dirichlet data times coclosed Neumann data, as a stacked basis.
    pub fn model_basis(&self) -> DMatrix<f64> {
        let n = self.edges();
        let q = self.coclosed.ncols();
        let mut b = DMatrix::zeros(2 * n, n + q);
        b.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        b.view_mut((n, n), (n, q)).copy_from(&self.coclosed);
        b
    }

    /// Stacked pairs `(x, 0)` for the columns `x` of `dirichlet`.
    pub fn dirichlet_pairs(&self, dirichlet: &DMatrix<f64>) -> DMatrix<f64> {
        vstack(dirichlet, &DMatrix::zeros(self.edges(), dirichlet.ncols()))
    }

    /// Stacked pairs `(0, y)`.
    pub fn neumann_pairs(&self, neumann: &DMatrix<f64>) -> DMatrix<f64> {
        vstack(&DMatrix::zeros(self.edges(), neumann.ncols()), neumann)
    }
}

/// Builds `ω̃` on the boundary data of the closed complex behind `sigma`.
pub fn build_symplectic(sigma: &DecOperators, tol: f64) -> Result<SymplecticModel> {
    if sigma.has_boundary() {
        return Err(Error::InvalidParameter(format!("{} has boundary", sigma.complex().id())));
    }
    let mass = sigma.mass(1).clone();
    let n = mass.dim();
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    let half = mass.gram() * 0.5;
    omega.view_mut((0, n), (n, n)).copy_from(&half);
    omega.view_mut((n, 0), (n, n)).copy_from(&(-&half));
    Ok(SymplecticModel {
        boundary_id: sigma.complex().id().to_string(),
        coclosed: coclosed_projector_unchecked(sigma, 1, tol).subspace.basis,
        exact: exact(sigma, 1, tol).basis,
        mass,
        omega,
        sigma: sigma.clone(),
    })
}

/// Null directions of `ω̃` inside `span(space)`, orthonormal in `ip`.
pub fn symplectic_complement(space: &DMatrix<f64>, omega: &DMatrix<f64>, ip: &InnerProduct, tol: f64) -> DMatrix<f64> {
    if space.ncols() == 0 {
        return space.clone();
    }
    let w = space.transpose() * omega * space;
    let n = null_space(&w, tol);
    ip.orthonormal_range(&(space * n), tol)
}

/// Kernel of `ω̃` on (all Dirichlet) × (coclosed Neumann).
pub fn degeneracy_kernel(model: &SymplecticModel, tol: f64) -> Subspace {
    let ip = model.pair_inner_product();
    let k = symplectic_complement(&model.model_basis(), &model.omega, &ip, tol);
    Subspace::new(&model.boundary_id, 1, SubspaceTag::Degeneracy, k)
}

/// Gauge directions `(d_0 f, 0)`, orthonormal in the pair inner product.
pub fn gauge_directions(model: &SymplecticModel) -> Subspace {
    Subspace::new(&model.boundary_id, 1, SubspaceTag::Gauge, model.dirichlet_pairs(&model.exact))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ReducedOrigin {
    /// The full reduced space of a hypersurface (or of `∂M`).
    LSigma,
    /// Topologically admissible boundary data of a region.
    LMBoundary,
}

/// A subspace of reduced boundary data with its forms, in coclosed coordinates.
#[derive(Clone, Debug)]
pub struct ReducedSpace {
    pub origin: ReducedOrigin,
    pub boundary_id: String,
    /// Coclosed basis `Q` defining the coordinates.
    pub coclosed: DMatrix<f64>,
    /// Orthonormal columns in `R^{2q}`.
    pub basis: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

/// `½ [[0, I], [-I, 0]]` on `R^{2q}`.
pub fn omega_coords(q: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * q, 2 * q);
    for i in 0..q {
        w[(i, q + i)] = 0.5;
        w[(q + i, i)] = -0.5;
    }
    w
}

/// `J(cD, cN) = (-cN, cD)` on `R^{2q}`.
pub fn j_coords(q: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * q, 2 * q);
    for i in 0..q {
        j[(i, q + i)] = -1.0;
        j[(q + i, i)] = 1.0;
    }
    j
}

impl ReducedSpace {
    fn new(origin: ReducedOrigin, boundary_id: &str, coclosed: DMatrix<f64>, basis: DMatrix<f64>) -> Self {
        let q = coclosed.ncols();
        let omega = basis.transpose() * omega_coords(q) * &basis;
        let j = basis.transpose() * j_coords(q) * &basis;
        let g = basis.transpose() * &basis;
        Self {
            origin,
            boundary_id: boundary_id.to_string(),
            coclosed,
            basis,
            omega,
            j,
            g,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Dimension `q` of the coclosed boundary 1-cochains.
    pub fn coclosed_dim(&self) -> usize {
        self.coclosed.ncols()
    }

    /// Smallest singular value of `ω` on the basis; zero for the empty space.
    pub fn omega_min_singular(&self) -> f64 {
        singular_values(&self.omega).into_iter().fold(f64::INFINITY, f64::min).min(f64::MAX)
    }

    /// Boundary data `(Q cD, Q cN)` of basis vector `i`.
    pub fn datum(&self, i: usize) -> BoundaryDatum {
        let q = self.coclosed_dim();
        let c = self.basis.column(i);
        BoundaryDatum::new(&self.coclosed * c.rows(0, q), &self.coclosed * c.rows(q, q))
    }

    /// `{a, b} = g(a, b) + 2i ω(a, b)` on basis coordinates.
    pub fn hermitian(&self, a: &DVector<f64>, b: &DVector<f64>) -> Complex<f64> {
        let g = (a.transpose() * &self.g * b)[(0, 0)];
        let w = (a.transpose() * &self.omega * b)[(0, 0)];
        Complex::new(g, 2.0 * w)
    }

    pub fn omega_at(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.omega * b)[(0, 0)]
    }

    pub fn g_at(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.g * b)[(0, 0)]
    }
}

/// Full reduced space `(ker δ_1)^2` of a closed hypersurface.
pub fn reduce_hypersurface(sigma: &DecOperators, tol: f64) -> Result<ReducedSpace> {
    if sigma.has_boundary() {
        return Err(Error::InvalidParameter(format!("{} has boundary", sigma.complex().id())));
    }
    let q = coclosed_projector_unchecked(sigma, 1, tol).subspace.basis;
    let basis = DMatrix::identity(2 * q.ncols(), 2 * q.ncols());
    Ok(ReducedSpace::new(ReducedOrigin::LSigma, sigma.complex().id(), q, basis))
}

/// Admissible boundary data of a region and the spaces derived from it.
#[derive(Clone, Debug)]
pub struct Admissible {
    /// Coclosed projection of the traces of harmonic Neumann fields, as an
    /// orthonormal basis in coclosed coordinates (`q × r`).
    pub k: DMatrix<f64>,
    /// `K × K` with its forms.
    pub reduced: ReducedSpace,
    /// Traces of harmonic Neumann fields and exact boundary data as Dirichlet
    /// parts, `K` as Neumann part: stacked boundary pairs before the gauge
    /// projection.
    pub pre_projection: DMatrix<f64>,
}

/// Topologically admissible reduced boundary data `K × j(K)` of a region,
/// with `j` the identity on 1-cochains.
pub fn admissible_space(ops: &DecOperators, tol: f64) -> Result<Admissible> {
    let Some(b) = ops.boundary() else {
        let empty = ReducedSpace::new(
            ReducedOrigin::LMBoundary,
            &format!("{}.boundary", ops.complex().id()),
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, 0),
        );
        return Ok(Admissible {
            k: DMatrix::zeros(0, 0),
            reduced: empty,
            pre_projection: DMatrix::zeros(0, 0),
        });
    };
    let sigma = &b.ops;
    let model = build_symplectic(sigma, tol)?;
    let q = &model.coclosed;
    let hn = harmonic_neumann(ops, 1, tol);
    let traces = &b.trace[1] * &hn.basis;
    let coords = q.transpose() * model.mass.gram() * &traces;
    let k = range(&coords, tol);
    let r = k.ncols();
    let mut basis = DMatrix::zeros(2 * q.ncols(), 2 * r);
    basis.view_mut((0, 0), (q.ncols(), r)).copy_from(&k);
    basis.view_mut((q.ncols(), r), (q.ncols(), r)).copy_from(&k);
    let reduced = ReducedSpace::new(ReducedOrigin::LMBoundary, sigma.complex().id(), q.clone(), basis);
    let dir = hstack(&traces, &model.exact);
    let pre = hstack(&model.dirichlet_pairs(&dir), &model.neumann_pairs(&(q * &k)));
    let pre = model.pair_inner_product().orthonormal_range(&pre, tol);
    Ok(Admissible {
        k,
        reduced,
        pre_projection: pre,
    })
}

/// `dim (ker δ_1(∂M))^2 - dim L_{M,∂M}`; zero for a closed region.
pub fn codimension(ops: &DecOperators, tol: f64) -> Result<usize> {
    let a = admissible_space(ops, tol)?;
    Ok(2 * a.reduced.coclosed_dim() - a.reduced.dim())
}

/// Graph `{(c, Λ_red c) : c ∈ K}` in coclosed coordinates, orthonormal.
pub fn lagrangian_graph(k: &DMatrix<f64>, lambda_red: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    range(&vstack(k, &(lambda_red * k)), tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct LagrangianReport {
    pub dim: usize,
    pub ambient_dim: usize,
    pub containment_angle: f64,
    pub isotropy_defect: f64,
    pub isotropic: bool,
    pub coisotropic: bool,
    pub lagrangian: bool,
    pub graph: Option<bool>,
    pub graph_residual: Option<f64>,
}

/// Isotropy, coisotropy and graph tests for `sub` (coclosed coordinates,
/// orthonormal columns) inside `amb`.
pub fn lagrangian_check(
    sub: &DMatrix<f64>,
    amb: &ReducedSpace,
    lambda_red: Option<&DMatrix<f64>>,
    tol: f64,
    angle: f64,
) -> Result<LagrangianReport> {
    let q = amb.coclosed_dim();
    if sub.nrows() != 2 * q {
        return Err(Error::Mismatch(format!("pairs have {} coordinates, expected {}", sub.nrows(), 2 * q)));
    }
    let eu = InnerProduct::identity(2 * q);
    let containment_angle = eu.containment_angle(sub, &amb.basis);
    if containment_angle > angle {
        return Err(Error::Mismatch(format!(
            "subspace is not contained in the ambient space (angle {containment_angle:e})"
        )));
    }
    let w = omega_coords(q);
    let isotropy_defect = if sub.ncols() == 0 {
        0.0
    } else {
        (sub.transpose() * &w * sub).amax()
    };
    let isotropic = isotropy_defect <= tol;
    let comp = {
        let cross = sub.transpose() * &w * &amb.basis;
        if sub.ncols() == 0 {
            amb.basis.clone()
        } else {
            &amb.basis * null_space(&cross, tol)
        }
    };
    let coisotropic = eu.containment_angle(&comp, sub) <= angle;
    let (graph, graph_residual) = match lambda_red {
        None => (None, None),
        Some(l) => {
            let d = sub.rows(0, q).into_owned();
            let n = sub.rows(q, q).into_owned();
            let injective = crate::linalg::rank(&d, tol) == sub.ncols() || sub.ncols() == 0;
            let res = if sub.ncols() == 0 { 0.0 } else { (n - l * &d).amax() };
            (Some(injective && res <= tol.max(1e-8)), Some(res))
        }
    };
    Ok(LagrangianReport {
        dim: sub.ncols(),
        ambient_dim: amb.dim(),
        containment_angle,
        isotropy_defect,
        isotropic,
        coisotropic,
        lagrangian: isotropic && coisotropic,
        graph,
        graph_residual,
    })
}

/// Numerical certificate for a complex structure on a reduced space.
#[derive(Clone, Debug, Serialize)]
pub struct JCertificate {
    /// `max |J² + I|`.
    pub j_squared_defect: f64,
    /// `max |J_amb B - B J|`: `J` preserves the space.
    pub invariance_defect: f64,
    /// Extremes of `2ω(v, Jv) / g(v, v)` over all `v` (eigenvalues).
    pub taming_min: f64,
    pub taming_max: f64,
    /// Extremes over the random samples.
    pub sample_min: f64,
    pub sample_max: f64,
    /// `max |{Ja, b} + i{a, b}|` and `max |{a, Jb} - i{a, b}|` over sample pairs.
    pub sesquilinearity_defect: f64,
    pub samples: usize,
}

/// `J` on `amb` with its certificate; `samples` random vectors from `seed`.
pub fn complex_structure(amb: &ReducedSpace, samples: usize, seed: u64) -> Result<(DMatrix<f64>, JCertificate)> {
    let m = amb.dim();
    if m > 0 && amb.omega_min_singular() <= 1e-12 {
        return Err(Error::DegenerateForm(amb.omega_min_singular()));
    }
    let q = amb.coclosed_dim();
    let j = amb.j.clone();
    let eye = DMatrix::<f64>::identity(m, m);
    let j_squared_defect = if m == 0 { 0.0 } else { (&j * &j + &eye).amax() };
    let invariance_defect = if m == 0 {
        0.0
    } else {
        (j_coords(q) * &amb.basis - &amb.basis * &j).amax()
    };
    let (taming_min, taming_max) = if m == 0 {
        (1.0, 1.0)
    } else {
        let t = &amb.omega * &j * 2.0;
        let t = (&t + t.transpose()) * 0.5;
        // g is the identity on an orthonormal basis
        let e = t.symmetric_eigenvalues();
        (e.min(), e.max())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample_min = f64::INFINITY;
    let mut sample_max = f64::NEG_INFINITY;
    let mut sesq: f64 = 0.0;
    if m > 0 {
        for _ in 0..samples {
            let v = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let u = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let ratio = 2.0 * amb.omega_at(&v, &(&j * &v)) / amb.g_at(&v, &v);
            sample_min = sample_min.min(ratio);
            sample_max = sample_max.max(ratio);
            let h = amb.hermitian(&v, &u);
            let i = Complex::new(0.0, 1.0);
            sesq = sesq
                .max((amb.hermitian(&(&j * &v), &u) + i * h).norm())
                .max((amb.hermitian(&v, &(&j * &u)) - i * h).norm());
        }
    } else {
        sample_min = 1.0;
        sample_max = 1.0;
    }
    Ok((
        j,
        JCertificate {
            j_squared_defect,
            invariance_defect,
            taming_min,
            taming_max,
            sample_min,
            sample_max,
            sesquilinearity_defect: sesq,
            samples,
        },
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingComparison {
    pub codim_before: usize,
    pub codim_after: usize,
    pub pass: bool,
}

/// Codimensions of the admissible data before and after gluing.
pub fn gluing_compare(m: &SimplicialComplex, g: &GluingMap, tol: f64) -> Result<(SimplicialComplex, GluingComparison)> {
    let glued = glue(m, g)?;
    let before = codimension(&DecOperators::build(m)?, tol)?;
    let after = codimension(&DecOperators::build(&glued)?, tol)?;
    Ok((
        glued,
        GluingComparison {
            codim_before: before,
            codim_after: after,
            pass: after <= before,
        },
    ))
}
