//! Numerical verification of the structural identities on a mesh, and the
//! built-in suite of meshes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Tolerances;
use crate::dec::{BoundaryDatum, DecOperators};
use crate::dn::{assemble_dn, dn_hypersurface, neumann_trace, solve_ym_dirichlet, DnOperator};
use crate::error::Result;
use crate::hodge::{
    exact, harmonic_dirichlet, harmonic_fields, harmonic_neumann, HmfBases,
};
use crate::linalg::{hstack, InnerProduct};
use crate::mesh::{
    annulus_gluing_map, collar, collar_gluing_map, gen_annulus, gen_circle, gen_disk, glue, SimplicialComplex,
};
use crate::reduction::{
    admissible_space, build_symplectic, complex_structure, degeneracy_kernel, gauge_directions, gluing_compare,
    j_coords, lagrangian_check, lagrangian_graph, reduce_hypersurface, symplectic_complement, ReducedSpace,
};
use crate::topology::{betti_numbers, relative_betti_numbers};

/// One verified claim.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    /// Plain statement of the identity being checked.
    #[serde(rename = "paper_ref")]
    pub claim: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub mesh: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(mesh: &str) -> Self {
        Self {
            mesh: mesh.to_string(),
            checks: Vec::new(),
        }
    }

    /// Passes when `value <= tolerance`.
    pub fn at_most(&mut self, name: &str, claim: &str, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            claim: claim.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(&mut self, name: &str, claim: &str, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            claim: claim.into(),
            value,
            tolerance,
            pass: value >= tolerance,
        });
    }

    /// Exact integer agreement; the value is the absolute difference.
    pub fn equal(&mut self, name: &str, claim: &str, got: usize, expected: usize) {
        self.at_most(name, claim, (got as f64 - expected as f64).abs(), 0.0);
    }

    pub fn holds(&mut self, name: &str, claim: &str, ok: bool) {
        self.at_most(name, claim, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn extend(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
    }
}

/// Settings shared by all checks.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub tol: Tolerances,
    pub weight: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            weight: 1.0,
            samples: 100,
            seed: 7,
        }
    }
}

/// Known topological values a case is expected to reproduce.
#[derive(Clone, Copy, Debug, Default)]
pub struct Expected {
    pub b1: Option<usize>,
    pub rel_b1: Option<usize>,
    pub codim: Option<usize>,
    pub ker_lambda: Option<usize>,
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

const ROUNDOFF: f64 = 1e-12;
const DEGENERACY_ANGLE: f64 = 1e-8;

fn complex_checks(r: &mut Report, ops: &DecOperators, opts: &VerifyOptions, rng: &mut ChaCha8Rng) {
    let n = ops.dim();
    let dd = (0..n.saturating_sub(1)).map(|k| ops.dd_defect(k)).max().unwrap_or(0);
    r.at_most("dd_zero", "the coboundary squares to zero (integer arithmetic)", dd as f64, 0.0);
    if ops.has_boundary() {
        let tc = (0..n.saturating_sub(1))
            .map(|k| ops.trace_commutation_defect(k).unwrap_or(i64::MAX))
            .max()
            .unwrap_or(0);
        r.at_most("trace_commutes_with_d", "restriction to the boundary commutes with d (integer arithmetic)", tc as f64, 0.0);
    }
    let mut adj: f64 = 0.0;
    let mut dd_star: f64 = 0.0;
    for k in 0..n {
        for _ in 0..5 {
            let a = random_vec(rng, ops.count(k));
            let b = random_vec(rng, ops.count(k + 1));
            adj = adj.max(ops.adjointness_defect(k, &a, &b));
        }
        if k + 2 <= n {
            let x = random_vec(rng, ops.count(k + 2));
            let y = ops.codiff(k + 1, &ops.codiff(k + 2, &x));
            let scale = ops.codiff(k + 2, &x).amax().max(f64::MIN_POSITIVE);
            dd_star = dd_star.max(y.amax() / scale);
        }
    }
    r.at_most("adjointness", "the codifferential is the mass-matrix adjoint of d", adj, ROUNDOFF);
    if n >= 2 {
        r.at_most("codiff_squares_to_zero", "the codifferential squares to zero", dd_star, 1e-10);
    }
    let min_mass = (0..=n)
        .map(|k| {
            let e = ops.mass(k).gram().clone().symmetric_eigenvalues();
            e.min() / e.max()
        })
        .fold(f64::INFINITY, f64::min);
    r.holds("mass_spd", "Whitney mass matrices are symmetric positive definite", min_mass > 0.0);
    let _ = opts;
}

fn harmonic_checks(r: &mut Report, ops: &DecOperators, exp: &Expected, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<()> {
    let tol = opts.tol.rank;
    let cx = ops.complex();
    let betti = betti_numbers(cx)?;
    let rel = relative_betti_numbers(cx)?;
    let hn = harmonic_neumann(ops, 1, tol);
    let hd = harmonic_dirichlet(ops, 1, tol)?;
    let h = harmonic_fields(ops, 1, tol);
    r.equal("dim_hN_eq_b1", "harmonic Neumann fields have the dimension of absolute cohomology", hn.dim(), betti[1]);
    r.equal("dim_hD_eq_rel_b1", "harmonic Dirichlet fields have the dimension of relative cohomology", hd.dim(), rel[1]);
    if let Some(b) = exp.b1 {
        r.equal("b1_expected", "first Betti number of the mesh topology", betti[1], b);
    }
    if let Some(b) = exp.rel_b1 {
        r.equal("rel_b1_expected", "first relative Betti number of the mesh topology", rel[1], b);
    }
    let ip = ops.mass(1);
    r.at_most("hN_in_h", "harmonic Neumann fields are harmonic fields", ip.containment_angle(&hn.basis, &h.basis), opts.tol.residual);
    r.at_most("hD_in_h", "harmonic Dirichlet fields are harmonic fields", ip.containment_angle(&hd.basis, &h.basis), opts.tol.residual);

    let bases = HmfBases::new(ops, 1, tol);
    let mut res: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for _ in 0..opts.samples {
        let w = random_vec(rng, ops.count(1));
        let s = bases.split(&w)?;
        res = res.max(s.reconstruction_residual(ip, &w));
        orth = orth.max(s.orthogonality_defect(ip, &w));
    }
    r.at_most("hmf_reconstruction", "the four-part splitting of 1-cochains reproduces the input", res, opts.tol.residual);
    r.at_most("hmf_orthogonality", "the four parts of the splitting are mutually orthogonal", orth, opts.tol.residual);
    if !ops.has_boundary() {
        let ex = exact(ops, 1, tol).dim();
        let coex = if ops.dim() >= 2 {
            crate::linalg::rank(ops.d_ref(1), tol)
        } else {
            0
        };
        r.equal(
            "hodge_dimension_identity",
            "exact, harmonic and coexact parts span the cochains of a closed complex",
            ex + h.dim() + coex,
            ops.count(1),
        );
    }
    Ok(())
}

fn dn_checks(r: &mut Report, ops: &DecOperators, dn: &DnOperator, exp: &Expected, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<()> {
    let tol = opts.tol.rank;
    let b = ops.boundary().expect("region with boundary");
    let m = &b.ops;
    r.at_most("dn_symmetric", "the boundary energy form is symmetric", dn.asymmetry(), 1e-10);
    r.at_most("dn_psd", "the boundary energy form is positive semidefinite", (-dn.min_eigen_ratio()).max(0.0), 1e-10);

    // closed fields: exact cochains and harmonic Neumann fields
    let closed = hstack(ops.d_ref(0), &harmonic_neumann(ops, 1, tol).basis);
    let tr = &b.trace[1] * &closed;
    let lam_norm = dn.lambda.norm().max(f64::MIN_POSITIVE);
    let mut ann: f64 = 0.0;
    for c in tr.column_iter() {
        let c = c.into_owned();
        let nrm = c.norm();
        if nrm > 0.0 {
            ann = ann.max((&dn.lambda * &c).norm() / (lam_norm * nrm));
        }
    }
    r.at_most("dn_kills_closed_traces", "traces of closed fields carry zero Neumann data", ann, opts.tol.residual);

    let mut wdiff: f64 = 0.0;
    for w in [0.1, 10.0] {
        let other = assemble_dn(ops, w, tol)?;
        wdiff = wdiff.max((&other.lambda - &dn.lambda).norm() / lam_norm);
    }
    r.at_most("dn_weight_independent", "the operator does not depend on the gauge penalty weight", wdiff, 1e-9);

    let adm = admissible_space(ops, tol)?;
    let kq = &dn.coclosed * &adm.k;
    let angle = m.mass(1).subspace_distance(&dn.kernel.basis, &kq);
    r.at_most("kernel_law", "the reduced kernel is the coclosed part of traces of closed fields", angle, opts.tol.angle);
    r.equal("kernel_rank_nullity", "kernel and range dimensions add up to the coclosed dimension", dn.kernel.dim() + dn.range.dim(), dn.coclosed_dim());
    if let Some(k) = exp.ker_lambda {
        r.equal("kernel_dim_expected", "dimension of the reduced kernel", dn.kernel.dim(), k);
    }

    let mut flux: f64 = 0.0;
    let mut energy: f64 = 0.0;
    let mut recip: f64 = 0.0;
    let mut stat: f64 = 0.0;
    let d0b = m.d_ref(0);
    let mb = m.mass(1);
    for _ in 0..10 {
        let x = random_vec(rng, dn.lambda.nrows());
        let y = random_vec(rng, dn.lambda.nrows());
        let phi = solve_ym_dirichlet(ops, &x, opts.weight, tol)?;
        let st = crate::dn::Stiffness::new(ops, ops.interior(1), opts.weight, tol)?;
        stat = stat.max(st.stationarity_residual(&phi));
        let nt = neumann_trace(ops, &phi)?;
        let f = d0b.transpose() * mb.gram() * &nt;
        flux = flux.max(f.amax() / (mb.gram() * &nt).amax().max(f64::MIN_POSITIVE).max(dn.scale * 1e-3));
        let d1p = ops.d_ref(1) * &phi;
        let e_curv = ops.mass(2).dot(&d1p, &d1p);
        let e_dn = mb.dot(&x, &(&dn.lambda * &x));
        energy = energy.max((e_curv - e_dn).abs() / e_curv.abs().max(f64::MIN_POSITIVE));
        let a = mb.dot(&x, &(&dn.lambda * &y));
        let bb = mb.dot(&y, &(&dn.lambda * &x));
        recip = recip.max((a - bb).abs() / (a.abs() + bb.abs()).max(f64::MIN_POSITIVE));
    }
    r.at_most("ym_stationarity", "solutions satisfy the interior equations", stat, 1e-9);
    r.at_most("flux_law", "Neumann data of solutions are orthogonal to exact boundary data", flux, opts.tol.residual);
    r.at_most("energy_identity", "boundary pairing of the operator equals the curvature energy", energy, opts.tol.residual);
    r.at_most("reciprocity", "the operator is reciprocal", recip, 1e-10);
    Ok(())
}

fn symplectic_checks(r: &mut Report, sigma: &DecOperators, opts: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<ReducedSpace> {
    let tol = opts.tol.rank;
    let model = build_symplectic(sigma, tol)?;
    let anti = (&model.omega + model.omega.transpose()).amax();
    r.at_most("omega_antisymmetric", "the presymplectic form is antisymmetric", anti, 0.0);
    let ker = degeneracy_kernel(&model, tol);
    let gauge = gauge_directions(&model);
    let ip = model.pair_inner_product();
    r.at_most(
        "degeneracy_kernel",
        "the degeneracy kernel is exact Dirichlet data with zero Neumann data",
        ip.subspace_distance(&ker.basis, &gauge.basis),
        DEGENERACY_ANGLE,
    );
    r.equal(
        "degeneracy_kernel_dim",
        "the degeneracy kernel has the dimension of exact Dirichlet data",
        ker.dim(),
        gauge.dim(),
    );
    let q = model.coclosed.ncols();
    r.equal(
        "reduced_dimension",
        "the reduced space has twice the dimension of coclosed 1-cochains",
        model.model_basis().ncols() - ker.dim(),
        2 * q,
    );
    let mut inv: f64 = 0.0;
    for _ in 0..10 {
        let a = BoundaryDatum::new(random_vec(rng, model.edges()), random_vec(rng, model.edges()));
        let bn = &model.coclosed * random_vec(rng, q);
        let b = BoundaryDatum::new(random_vec(rng, model.edges()), bn);
        let f = random_vec(rng, sigma.count(0));
        let shifted = BoundaryDatum::new(&a.phi_d + sigma.d_ref(0) * f, a.phi_n.clone());
        let w0 = model.omega_tilde(&a, &b)?;
        let w1 = model.omega_tilde(&shifted, &b)?;
        inv = inv.max((w0 - w1).abs() / w0.abs().max(1.0));
    }
    r.at_most("gauge_invariance", "gauge shifts of Dirichlet data do not change the form against coclosed Neumann data", inv, 1e-10);
    let l = reduce_hypersurface(sigma, tol)?;
    j_checks(r, "L_sigma", &l, opts)?;
    Ok(l)
}

fn j_checks(r: &mut Report, prefix: &str, l: &ReducedSpace, opts: &VerifyOptions) -> Result<()> {
    let smin = if l.dim() == 0 { f64::INFINITY } else { l.omega_min_singular() };
    r.holds(&format!("{prefix}.omega_nondegenerate"), "the reduced form is nondegenerate", smin > opts.tol.rank);
    let (_, cert) = complex_structure(l, opts.samples, opts.seed)?;
    r.at_most(&format!("{prefix}.j_squared"), "J squares to minus the identity", cert.j_squared_defect, ROUNDOFF);
    r.at_most(&format!("{prefix}.j_invariant"), "J preserves the space", cert.invariance_defect, ROUNDOFF);
    let tame = (cert.taming_min - 1.0).abs().max((cert.taming_max - 1.0).abs());
    let sample = (cert.sample_min - 1.0).abs().max((cert.sample_max - 1.0).abs());
    r.at_most(&format!("{prefix}.taming"), "g(v, v) = 2 omega(v, Jv) for all v", tame.max(sample), 1e-10);
    r.at_most(&format!("{prefix}.hermitian"), "{Ja, b} = -i{a, b} and {a, Jb} = i{a, b}", cert.sesquilinearity_defect, 1e-10);
    Ok(())
}

fn admissible_checks(r: &mut Report, ops: &DecOperators, dn: &DnOperator, exp: &Expected, opts: &VerifyOptions) -> Result<()> {
    let tol = opts.tol.rank;
    let adm = admissible_space(ops, tol)?;
    let l = &adm.reduced;
    j_checks(r, "L_M", l, opts)?;
    let graph = lagrangian_graph(&adm.k, &dn.lambda_red, tol);
    let rep = lagrangian_check(&graph, l, Some(&dn.lambda_red), 1e-10, opts.tol.angle)?;
    r.holds("dynamics_isotropic", "solution data form an isotropic subspace", rep.isotropic);
    r.holds("dynamics_lagrangian", "solution data form a Lagrangian subspace of the admissible data", rep.lagrangian);
    r.holds("dynamics_graph", "solution data are the graph of the reduced operator", rep.graph == Some(true));
    r.equal("dynamics_half_dimension", "solution data have half the admissible dimension", 2 * graph.ncols(), l.dim());
    let jg = j_coords(l.coclosed_dim()) * &graph;
    let sum = hstack(&graph, &jg);
    let eu = InnerProduct::identity(2 * l.coclosed_dim());
    r.equal("direct_sum_dimension", "solution data and their J-image span the admissible data", crate::linalg::rank(&sum, tol), l.dim());
    if graph.ncols() > 0 {
        r.at_least(
            "direct_sum_angle",
            "solution data and their J-image intersect trivially",
            eu.min_angle(&graph, &jg),
            opts.tol.angle,
        );
    }
    let model = build_symplectic(ops.boundary_ops()?, tol)?;
    let comp = symplectic_complement(&adm.pre_projection, &model.omega, &model.pair_inner_product(), tol);
    let gauge = gauge_directions(&model);
    r.at_most(
        "complement_is_gauge",
        "before the gauge projection the symplectic complement is the exact Dirichlet data",
        model.pair_inner_product().subspace_distance(&comp, &gauge.basis),
        DEGENERACY_ANGLE,
    );
    let codim = 2 * l.coclosed_dim() - l.dim();
    if let Some(c) = exp.codim {
        r.equal("codimension", "codimension of the admissible boundary data", codim, c);
    }
    Ok(())
}

/// All checks that apply to a region (with or without boundary).
pub fn verify_region(name: &str, m: &SimplicialComplex, exp: &Expected, opts: &VerifyOptions) -> Result<Report> {
    let mut r = Report::new(name);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let ops = DecOperators::build(m)?;
    complex_checks(&mut r, &ops, opts, &mut rng);
    harmonic_checks(&mut r, &ops, exp, opts, &mut rng)?;
    if ops.has_boundary() {
        let dn = assemble_dn(&ops, opts.weight, opts.tol.rank)?;
        dn_checks(&mut r, &ops, &dn, exp, opts, &mut rng)?;
        let mut sub = Report::new(name);
        symplectic_checks(&mut sub, ops.boundary_ops()?, opts, &mut rng)?;
        r.extend("boundary.", sub);
        admissible_checks(&mut r, &ops, &dn, exp, opts)?;
    } else if let Some(c) = exp.codim {
        r.equal("codimension", "codimension of the admissible boundary data", crate::reduction::codimension(&ops, opts.tol.rank)?, c);
    }
    Ok(r)
}

/// Relative difference of reduced hypersurface operators between two collars,
/// with an absolute floor at `floor_rel` times the operator scale.
pub fn hypersurface_stability(
    sigma: &SimplicialComplex,
    (eps_a, layers_a): (f64, usize),
    (eps_b, layers_b): (f64, usize),
    opts: &VerifyOptions,
) -> Result<(f64, DMatrix<f64>, DMatrix<f64>)> {
    let a = dn_hypersurface(sigma, eps_a, layers_a, opts.weight, opts.tol.rank)?;
    let b = dn_hypersurface(sigma, eps_b, layers_b, opts.weight, opts.tol.rank)?;
    let floor = opts.tol.rank * a.scale.max(b.scale);
    let denom = a.lambda_red.amax().max(b.lambda_red.amax()).max(floor);
    let diff = (&a.lambda_red - &b.lambda_red).amax() / denom;
    Ok((diff, a.lambda_red, b.lambda_red))
}

/// A named mesh of the built-in suite with its expected values.
pub struct SuiteCase {
    pub name: String,
    pub mesh: SimplicialComplex,
    pub expected: Expected,
    kind: CaseKind,
}

enum CaseKind {
    Plain,
    Annulus,
    CircleCollar { base: SimplicialComplex },
}

/// The default suite: disk, annulus, collar over a circle, torus glued from
/// the annulus.
pub fn default_suite() -> Result<Vec<SuiteCase>> {
    let disk = gen_disk(16)?;
    let annulus = gen_annulus(16, 1.0, 2.0)?;
    let circle = gen_circle(16)?;
    let col = collar(&circle, 4, 1.0)?;
    let torus = glue(&annulus, &annulus_gluing_map(&annulus)?)?.with_id("torus16");
    Ok(vec![
        SuiteCase {
            name: "disk16".into(),
            mesh: disk,
            expected: Expected { b1: Some(0), rel_b1: Some(0), codim: Some(2), ker_lambda: Some(0) },
            kind: CaseKind::Plain,
        },
        SuiteCase {
            name: "annulus16".into(),
            mesh: annulus,
            expected: Expected { b1: Some(1), rel_b1: Some(1), codim: Some(2), ker_lambda: Some(1) },
            kind: CaseKind::Annulus,
        },
        SuiteCase {
            name: "circle16-collar".into(),
            mesh: col,
            expected: Expected { b1: Some(1), rel_b1: Some(1), codim: Some(2), ker_lambda: Some(1) },
            kind: CaseKind::CircleCollar { base: circle },
        },
        SuiteCase {
            name: "torus16".into(),
            mesh: torus,
            expected: Expected { b1: Some(2), rel_b1: Some(2), codim: Some(0), ker_lambda: None },
            kind: CaseKind::Plain,
        },
    ])
}

/// Runs every check for one suite case.
pub fn verify_case(case: &SuiteCase, opts: &VerifyOptions) -> Result<Report> {
    let mut r = verify_region(&case.name, &case.mesh, &case.expected, opts)?;
    let tol = opts.tol.rank;
    match &case.kind {
        CaseKind::Plain => {}
        CaseKind::Annulus => {
            let (_, cmp) = gluing_compare(&case.mesh, &annulus_gluing_map(&case.mesh)?, tol)?;
            r.holds("gluing_monotone", "gluing does not increase the codimension", cmp.pass);
        }
        CaseKind::CircleCollar { base } => {
            let (_, cmp) = gluing_compare(&case.mesh, &collar_gluing_map(&case.mesh)?, tol)?;
            r.holds("gluing_monotone", "gluing does not increase the codimension", cmp.pass);
            let sops = DecOperators::build(base)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
            let mut sub = Report::new(&case.name);
            symplectic_checks(&mut sub, &sops, opts, &mut rng)?;
            r.extend("sigma.", sub);
            let (diff, _, _) = hypersurface_stability(base, (1.0, 4), (0.5, 2), opts)?;
            r.at_most(
                "hypersurface_eps_stability",
                "the hypersurface operator does not depend on the collar width",
                diff,
                1e-2,
            );
        }
    }
    Ok(r)
}

/// Runs the suite with one thread per case; reports come back in suite order.
pub fn run_suite(cases: &[SuiteCase], opts: &VerifyOptions) -> Vec<Result<Report>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cases.iter().map(|c| s.spawn(move || verify_case(c, opts))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(crate::Error::Solver("verification thread panicked".into()))))
            .collect()
    })
}
