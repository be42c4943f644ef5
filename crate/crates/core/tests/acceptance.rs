//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero on failure.

use std::collections::{BTreeSet, HashMap};
use std::process::ExitCode;

use gaugebc::dec::DecOperators;
use gaugebc::dn::assemble_dn;
use gaugebc::hodge::{harmonic_dirichlet, harmonic_neumann, HmfBases};
use gaugebc::linalg::InnerProduct;
use gaugebc::mesh::{annulus_gluing_map, collar_gluing_map};
use gaugebc::reduction::{
    admissible_space, build_symplectic, codimension, complex_structure, degeneracy_kernel, gluing_compare, j_coords,
    lagrangian_check, lagrangian_graph, reduce_hypersurface,
};
use gaugebc::verify::hypersurface_stability;
use gaugebc::verify::VerifyOptions;
use gaugebc::{collar, gen_annulus, gen_circle, gen_disk, glue, SimplicialComplex};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU: f64 = 1e-10;
const P: i64 = 2_147_483_647;

// ---- independent oracles -------------------------------------------------

fn pow_mod(mut b: i64, mut e: i64) -> i64 {
    let mut r = 1i64;
    b = b.rem_euclid(P);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    r
}

/// Rank over GF(p) of a dense integer matrix.
fn rank_mod_p(mut a: Vec<Vec<i64>>) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| a[i][c].rem_euclid(P) != 0) else {
            continue;
        };
        a.swap(r, p);
        let inv = pow_mod(a[r][c], P - 2);
        for i in 0..rows {
            if i != r && a[i][c].rem_euclid(P) != 0 {
                let f = a[i][c].rem_euclid(P) * inv % P;
                for j in 0..cols {
                    a[i][j] = (a[i][j] - f * a[r][j].rem_euclid(P)).rem_euclid(P);
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Simplicial boundary matrix C_k -> C_{k-1}, restricted to kept simplices.
fn boundary_matrix(cx: &SimplicialComplex, k: usize, keep: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<i64>> {
    let lower: Vec<usize> = (0..cx.count(k - 1)).filter(|&i| keep(k - 1, i)).collect();
    let upper: Vec<usize> = (0..cx.count(k)).filter(|&i| keep(k, i)).collect();
    let pos: HashMap<usize, usize> = lower.iter().enumerate().map(|(a, &b)| (b, a)).collect();
    let mut m = vec![vec![0i64; upper.len()]; lower.len()];
    for (c, &u) in upper.iter().enumerate() {
        let s = &cx.simplices(k)[u];
        for i in 0..s.len() {
            let mut f = s.clone();
            f.remove(i);
            let fi = cx.index_of(k - 1, &f).expect("face present");
            if let Some(&r) = pos.get(&fi) {
                m[r][c] = if i % 2 == 0 { 1 } else { -1 };
            }
        }
    }
    m
}

fn betti_oracle(cx: &SimplicialComplex, relative: bool) -> Vec<usize> {
    let n = cx.dim();
    // boundary simplices: faces of top-dimensional facets with a single coface
    let mut cofaces: HashMap<Vec<usize>, usize> = HashMap::new();
    for s in cx.simplices(n) {
        for i in 0..s.len() {
            let mut f = s.clone();
            f.remove(i);
            *cofaces.entry(f).or_default() += 1;
        }
    }
    let mut on_boundary: BTreeSet<(usize, usize)> = BTreeSet::new();
    if relative {
        for (f, c) in &cofaces {
            if *c != 1 {
                continue;
            }
            for mask in 1u32..(1 << f.len()) {
                let sub: Vec<usize> = (0..f.len()).filter(|i| mask >> i & 1 == 1).map(|i| f[i]).collect();
                on_boundary.insert((sub.len() - 1, cx.index_of(sub.len() - 1, &sub).unwrap()));
            }
        }
    }
    let keep = |k: usize, i: usize| !on_boundary.contains(&(k, i));
    let count = |k: usize| (0..cx.count(k)).filter(|&i| keep(k, i)).count();
    let ranks: Vec<usize> = (0..=n + 1)
        .map(|k| if k == 0 || k > n { 0 } else { rank_mod_p(boundary_matrix(cx, k, &keep)) })
        .collect();
    (0..=n).map(|k| count(k) - ranks[k] - ranks[k + 1]).collect()
}

/// Dense SVD null space, own implementation of the threshold.
fn svd_null(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= TAU * smax.max(f64::MIN_POSITIVE))
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn euclid_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    InnerProduct::identity(a.nrows()).subspace_distance(a, b)
}

// ---- suite ---------------------------------------------------------------

struct Suite {
    disk: SimplicialComplex,
    annulus: SimplicialComplex,
    circle: SimplicialComplex,
    col: SimplicialComplex,
    torus: SimplicialComplex,
}

fn suite() -> Suite {
    let annulus = gen_annulus(16, 1.0, 2.0).unwrap();
    let torus = glue(&annulus, &annulus_gluing_map(&annulus).unwrap()).unwrap();
    let circle = gen_circle(16).unwrap();
    Suite {
        disk: gen_disk(16).unwrap(),
        col: collar(&circle, 4, 1.0).unwrap(),
        annulus,
        circle,
        torus,
    }
}

struct Line {
    ok: bool,
    detail: String,
}

fn line(ok: bool, detail: String) -> Line {
    Line { ok, detail }
}

fn c1(s: &Suite) -> Line {
    let mut worst_dd = 0.0f64;
    let mut worst_tr = 0i64;
    for m in [&s.disk, &s.annulus, &s.col, &s.torus, &s.circle] {
        let ops = DecOperators::build(m).unwrap();
        for k in 0..ops.dim().saturating_sub(1) {
            worst_dd = worst_dd.max((ops.d_ref(k + 1) * ops.d_ref(k)).amax());
            if ops.has_boundary() {
                worst_tr = worst_tr.max(ops.trace_commutation_defect(k).unwrap());
            }
        }
    }
    line(worst_dd == 0.0 && worst_tr == 0, format!("max|d1 d0| = {worst_dd}, trace commutation defect = {worst_tr}"))
}

fn c2(s: &Suite) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, m, want) in [("disk", &s.disk, (0, 0)), ("annulus", &s.annulus, (1, 1)), ("torus", &s.torus, (2, 2))] {
        let ops = DecOperators::build(m).unwrap();
        let hn = harmonic_neumann(&ops, 1, TAU).dim();
        let hd = harmonic_dirichlet(&ops, 1, TAU).unwrap().dim();
        let b = betti_oracle(m, false)[1];
        let rb = betti_oracle(m, true)[1];
        ok &= hn == b && hd == rb && (b, rb) == want;
        parts.push(format!("{name} ({hn},{hd}) vs oracle ({b},{rb})"));
    }
    line(ok, parts.join(", "))
}

fn c3(s: &Suite) -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut res, mut orth) = (0.0f64, 0.0f64);
    for m in [&s.disk, &s.annulus, &s.col, &s.torus] {
        let ops = DecOperators::build(m).unwrap();
        let bases = HmfBases::new(&ops, 1, TAU);
        for _ in 0..100 {
            let w = DVector::from_fn(ops.count(1), |_, _| rng.gen_range(-1.0..1.0));
            let sp = bases.split(&w).unwrap();
            res = res.max(sp.reconstruction_residual(ops.mass(1), &w));
            orth = orth.max(sp.orthogonality_defect(ops.mass(1), &w));
        }
    }
    line(res <= 1e-8 && orth <= 1e-8, format!("reconstruction {res:.2e}, orthogonality {orth:.2e} (<= 1e-8)"))
}

fn c4(s: &Suite) -> Line {
    let (mut asym, mut neg, mut ann, mut wdiff) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for m in [&s.disk, &s.annulus, &s.col] {
        let ops = DecOperators::build(m).unwrap();
        let dn = assemble_dn(&ops, 1.0, TAU).unwrap();
        let sn = dn.s.norm();
        asym = asym.max((&dn.s - dn.s.transpose()).norm() / sn);
        let ev = dn.s.clone().symmetric_eigenvalues();
        neg = neg.max(-ev.min() / sn);
        // closed extensions: d0 f and the harmonic Neumann fields, built from an own null space
        let d1 = ops.d(1);
        let cons = {
            let m1d0 = ops.mass(1).gram() * ops.d_ref(0);
            let mut c = DMatrix::zeros(d1.nrows() + m1d0.ncols(), d1.ncols());
            c.view_mut((0, 0), (d1.nrows(), d1.ncols())).copy_from(&d1);
            c.view_mut((d1.nrows(), 0), (m1d0.ncols(), d1.ncols())).copy_from(&m1d0.transpose());
            c
        };
        let hn = svd_null(&cons);
        let t = ops.trace(1).unwrap();
        let ln = dn.lambda.norm();
        for col in ops.d_ref(0).column_iter().chain(hn.column_iter()) {
            let tr = t * col;
            if tr.norm() > 0.0 {
                ann = ann.max((&dn.lambda * &tr).norm() / (ln * tr.norm()));
            }
        }
        for w in [0.1, 10.0] {
            let o = assemble_dn(&ops, w, TAU).unwrap();
            wdiff = wdiff.max((&o.lambda - &dn.lambda).norm() / ln);
        }
    }
    let ok = asym <= 1e-10 && neg <= 1e-10 && ann <= 1e-8 && wdiff <= 1e-9;
    line(ok, format!("asymmetry {asym:.1e}, -min eig/|S| {neg:.1e}, closed-trace residual {ann:.1e}, weight spread {wdiff:.1e}"))
}

fn c5(s: &Suite) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, m, want) in [("disk", &s.disk, 0), ("annulus", &s.annulus, 1)] {
        let ops = DecOperators::build(m).unwrap();
        let dn = assemble_dn(&ops, 1.0, TAU).unwrap();
        let mb = ops.boundary_ops().unwrap().mass(1).gram().clone();
        // zero-energy coclosed traces: coclosed parts of traces of closed, harmonic fields
        let d1 = ops.d(1);
        let m1d0 = ops.mass(1).gram() * ops.d_ref(0);
        let mut cons = DMatrix::zeros(d1.nrows() + m1d0.ncols(), d1.ncols());
        cons.view_mut((0, 0), (d1.nrows(), d1.ncols())).copy_from(&d1);
        cons.view_mut((d1.nrows(), 0), (m1d0.ncols(), d1.ncols())).copy_from(&m1d0.transpose());
        let hn = svd_null(&cons);
        let coords = dn.coclosed.transpose() * &mb * (ops.trace(1).unwrap() * hn);
        let zero_energy = if coords.ncols() == 0 {
            coords
        } else {
            let svd = coords.clone().svd(true, false);
            let u = svd.u.unwrap();
            let smax = svd.singular_values.max();
            let cols: Vec<_> = (0..svd.singular_values.len())
                .filter(|&i| svd.singular_values[i] > TAU * smax)
                .map(|i| u.column(i).into_owned())
                .collect();
            if cols.is_empty() { DMatrix::zeros(coords.nrows(), 0) } else { DMatrix::from_columns(&cols) }
        };
        let ker = svd_null(&dn.lambda_red);
        let ang = euclid_angle(&ker, &zero_energy);
        ok &= ang <= 1e-6 && ker.ncols() == want;
        parts.push(format!("{name} dim {} angle {ang:.1e}", ker.ncols()));
    }
    line(ok, parts.join(", "))
}

fn c6(s: &Suite) -> Line {
    let ops = DecOperators::build(&s.circle).unwrap();
    let model = build_symplectic(&ops, TAU).unwrap();
    let anti = (&model.omega + model.omega.transpose()).amax();
    let ker = degeneracy_kernel(&model, TAU);
    // exact x {0}, from the coboundary directly
    let exact = model.dirichlet_pairs(ops.d_ref(0));
    let ip = model.pair_inner_product();
    let exact = ip.orthonormal_range(&exact, TAU);
    let ang = ip.subspace_distance(&ker.basis, &exact);
    let l = reduce_hypersurface(&ops, TAU).unwrap();
    // dim ker delta_1 on the circle: 1-cochains orthogonal to exact ones
    let kd = svd_null(&(ops.d_ref(0).transpose() * ops.mass(1).gram())).ncols();
    let ok = anti == 0.0 && ang <= 1e-8 && ker.dim() == 15 && l.dim() == 2 * kd;
    line(ok, format!("antisymmetry {anti}, kernel dim {} angle {ang:.1e}, dim L = {} = 2*{kd}", ker.dim(), l.dim()))
}

fn c7(s: &Suite) -> Line {
    let mut spaces = Vec::new();
    let cops = DecOperators::build(&s.circle).unwrap();
    spaces.push(("circle L_sigma", reduce_hypersurface(&cops, TAU).unwrap()));
    for (name, m) in [("disk", &s.disk), ("annulus", &s.annulus)] {
        let ops = DecOperators::build(m).unwrap();
        spaces.push((name, reduce_hypersurface(ops.boundary_ops().unwrap(), TAU).unwrap()));
        if name == "annulus" {
            spaces.push(("annulus L_M", admissible_space(&ops, TAU).unwrap().reduced));
        }
    }
    let (mut j2, mut tame) = (0.0f64, 0.0f64);
    for (i, (_, sp)) in spaces.iter().enumerate() {
        let j = j_coords(sp.coclosed_dim());
        let jj = &j * &j + DMatrix::identity(j.nrows(), j.nrows());
        j2 = j2.max(jj.amax());
        let mut rng = ChaCha8Rng::seed_from_u64(70 + i as u64);
        for _ in 0..100 {
            // ambient coordinates: omega = 1/2 [[0, I], [-I, 0]], g = I
            let q = sp.coclosed_dim();
            let v = &sp.basis * DVector::from_fn(sp.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let jv = &j * &v;
            let w = 0.5 * (v.rows(0, q).dot(&jv.rows(q, q)) - v.rows(q, q).dot(&jv.rows(0, q)));
            let r = 2.0 * w / v.norm_squared();
            tame = tame.max((r - 1.0).abs());
        }
        let (_, cert) = complex_structure(sp, 100, 7).unwrap();
        j2 = j2.max(cert.j_squared_defect);
    }
    line(j2 <= 1e-12 && tame <= 1e-10, format!("|J^2+I| {j2:.1e}, taming deviation {tame:.1e} over {} spaces", spaces.len()))
}

fn c8(s: &Suite) -> Line {
    let ops = DecOperators::build(&s.annulus).unwrap();
    let dn = assemble_dn(&ops, 1.0, TAU).unwrap();
    let adm = admissible_space(&ops, TAU).unwrap();
    let graph = lagrangian_graph(&adm.k, &dn.lambda_red, TAU);
    let rep = lagrangian_check(&graph, &adm.reduced, Some(&dn.lambda_red), 1e-10, 1e-6).unwrap();
    let j = j_coords(adm.reduced.coclosed_dim());
    let jg = &j * &graph;
    let mut sum = DMatrix::zeros(graph.nrows(), 2 * graph.ncols());
    sum.view_mut((0, 0), graph.shape()).copy_from(&graph);
    sum.view_mut((0, graph.ncols()), jg.shape()).copy_from(&jg);
    let sv = sum.clone().svd(false, false).singular_values;
    let rank = sv.iter().filter(|&&x| x > TAU * sv.max()).count();
    let within = InnerProduct::identity(sum.nrows()).containment_angle(&sum, &adm.reduced.basis);
    let q = adm.reduced.coclosed_dim();
    let mut omega = DMatrix::zeros(2 * q, 2 * q);
    for i in 0..q {
        omega[(i, q + i)] = 0.5;
        omega[(q + i, i)] = -0.5;
    }
    let iso = (graph.transpose() * &omega * &graph).amax();
    let ok = iso <= 1e-10
        && graph.ncols() == 1
        && 2 * graph.ncols() == adm.reduced.dim()
        && rank == adm.reduced.dim()
        && within <= 1e-6
        && rep.lagrangian;
    line(ok, format!("isotropy {iso:.1e}, dim {} = dim L / 2 = {}/2, rank(L~ + J L~) = {rank}", graph.ncols(), adm.reduced.dim()))
}

fn c9(s: &Suite) -> Line {
    let cd = |m: &SimplicialComplex| codimension(&DecOperators::build(m).unwrap(), TAU).unwrap();
    let (d, a, t) = (cd(&s.disk), cd(&s.annulus), cd(&s.torus));
    let (_, g1) = gluing_compare(&s.annulus, &annulus_gluing_map(&s.annulus).unwrap(), TAU).unwrap();
    let (_, g2) = gluing_compare(&s.col, &collar_gluing_map(&s.col).unwrap(), TAU).unwrap();
    let ok = (d, a, t) == (2, 2, 0) && g1.codim_after <= g1.codim_before && g2.codim_after <= g2.codim_before;
    line(
        ok,
        format!(
            "codim disk {d}, annulus {a}, torus {t}; annulus->torus {}->{}, collar->torus {}->{}",
            g1.codim_before, g1.codim_after, g2.codim_before, g2.codim_after
        ),
    )
}

fn c10(s: &Suite) -> Line {
    let (diff, a, b) = hypersurface_stability(&s.circle, (1.0, 4), (0.5, 2), &VerifyOptions::default()).unwrap();
    line(diff <= 1e-2, format!("relative difference {diff:.2e} (|L_a| {:.1e}, |L_b| {:.1e})", a.amax(), b.amax()))
}

fn main() -> ExitCode {
    let s = suite();
    let criteria: [(&str, fn(&Suite) -> Line); 10] = [
        ("exactness", c1),
        ("betti agreement", c2),
        ("HMF decomposition", c3),
        ("DN structure", c4),
        ("kernel law", c5),
        ("symplectic layer", c6),
        ("complex structure", c7),
        ("Lagrangian graph", c8),
        ("gluing codimension", c9),
        ("hypersurface eps-stability", c10),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let l = f(&s);
        all &= l.ok;
        println!("criterion {:>2} {:<27} {}  {}", i + 1, name, if l.ok { "PASS" } else { "FAIL" }, l.detail);
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
