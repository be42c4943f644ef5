//! Cochain complex and metric operators: coboundaries, Whitney mass matrices,
//! codifferentials, Dirichlet traces and the boundary bracket.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::InnerProduct;
use crate::mesh::{boundary_complex, SimplicialComplex};

/// Real coefficients on the oriented `k`-simplices of a named complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cochain {
    pub complex: String,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn new(complex: &str, degree: usize, values: &DVector<f64>) -> Self {
        Self {
            complex: complex.to_string(),
            degree,
            values: values.iter().copied().collect(),
        }
    }

    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Dirichlet and Neumann data on the same boundary complex.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryDatum {
    pub phi_d: DVector<f64>,
    pub phi_n: DVector<f64>,
}

impl BoundaryDatum {
    pub fn new(phi_d: DVector<f64>, phi_n: DVector<f64>) -> Self {
        Self { phi_d, phi_n }
    }
}

/// Signed incidence entry `(row, col, ±1)`.
pub type Incidence = Vec<(usize, usize, i64)>;

/// Boundary part of [`DecOperators`].
#[derive(Clone, Debug)]
pub struct BoundaryOps {
    pub ops: Box<DecOperators>,
    /// `trace[k]`: boundary `k`-simplices by parent `k`-simplices, one ±1 per row.
    pub trace: Vec<DMatrix<f64>>,
    pub trace_incidence: Vec<Incidence>,
    pub index_maps: Vec<Vec<usize>>,
}

/// All operators of a complex, built once and read-only afterwards.
#[derive(Clone, Debug)]
pub struct DecOperators {
    complex: SimplicialComplex,
    incidence: Vec<Incidence>,
    d: Vec<DMatrix<f64>>,
    mass: Vec<InnerProduct>,
    boundary: Option<BoundaryOps>,
    boundary_mask: Vec<Vec<bool>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(n: usize, need: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == need {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, need, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Local Whitney mass matrices of one simplex, for every degree `k <= n`.
///
/// Entry `(f, g)` of degree `k` is `∫ W_f · W_g`, faces listed as lexicographic
/// subsets of local vertices `0..=n`. Uses
/// `W_f = k! Σ_i (-1)^i λ_{f_i} dλ_{f \ f_i}` and
/// `⟨dλ_a, dλ_b⟩ = det[∇λ_{a_p} · ∇λ_{b_q}]`.
pub fn local_mass(points: &[&[f64]]) -> Result<Vec<DMatrix<f64>>> {
    let n = points.len() - 1;
    let ambient = points[0].len();
    let e = DMatrix::from_fn(ambient, n, |r, c| points[c + 1][r] - points[0][r]);
    let g = e.transpose() * &e;
    let det = g.determinant();
    let vol = det.max(0.0).sqrt() / factorial(n);
    let ginv = g.clone().try_inverse().filter(|_| det > 0.0).ok_or_else(|| Error::Degenerate {
        simplex: Vec::new(),
        volume: vol,
    })?;
    // gradients of barycentric coordinates, lambda_0 eliminated
    let mut b = DMatrix::zeros(n + 1, n + 1);
    for i in 1..=n {
        for j in 1..=n {
            b[(i, j)] = ginv[(i - 1, j - 1)];
        }
    }
    for j in 1..=n {
        let s: f64 = (1..=n).map(|i| ginv[(i - 1, j - 1)]).sum();
        b[(0, j)] = -s;
        b[(j, 0)] = -s;
    }
    b[(0, 0)] = ginv.sum();
    let lam = |p: usize, q: usize| {
        let f = if p == q { 2.0 } else { 1.0 };
        vol * f / (((n + 1) * (n + 2)) as f64)
    };
    let wedge = |a: &[usize], c: &[usize]| -> f64 {
        if a.is_empty() {
            return 1.0;
        }
        DMatrix::from_fn(a.len(), c.len(), |p, q| b[(a[p], c[q])]).determinant()
    };
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let faces = k_subsets(n + 1, k + 1);
        let kf = factorial(k).powi(2);
        let m = faces.len();
        let mut mk = DMatrix::zeros(m, m);
        for x in 0..m {
            for y in x..m {
                let (f, h) = (&faces[x], &faces[y]);
                let mut acc = 0.0;
                for i in 0..=k {
                    let mut fi = f.clone();
                    fi.remove(i);
                    for j in 0..=k {
                        let mut hj = h.clone();
                        hj.remove(j);
                        let sgn = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sgn * lam(f[i], h[j]) * wedge(&fi, &hj);
                    }
                }
                mk[(x, y)] = kf * acc;
                mk[(y, x)] = kf * acc;
            }
        }
        out.push(mk);
    }
    Ok(out)
}

impl DecOperators {
    pub fn build(complex: &SimplicialComplex) -> Result<Self> {
        let n = complex.dim();
        let mut incidence = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        for k in 0..n {
            let mut inc = Vec::new();
            for (r, s) in complex.simplices(k + 1).iter().enumerate() {
                let sr = complex.sign(k + 1, r) as i64;
                for i in 0..s.len() {
                    let mut f = s.clone();
                    f.remove(i);
                    let c = complex.index_of(k, &f).expect("face exists");
                    let alt = if i % 2 == 0 { 1 } else { -1 };
                    inc.push((r, c, sr * complex.sign(k, c) as i64 * alt));
                }
            }
            let mut dm = DMatrix::zeros(complex.count(k + 1), complex.count(k));
            for &(r, c, v) in &inc {
                dm[(r, c)] = v as f64;
            }
            incidence.push(inc);
            d.push(dm);
        }

        let mut gram: Vec<DMatrix<f64>> = (0..=n)
            .map(|k| DMatrix::zeros(complex.count(k), complex.count(k)))
            .collect();
        let local_faces: Vec<Vec<Vec<usize>>> = (0..=n).map(|k| k_subsets(n + 1, k + 1)).collect();
        for cell in complex.simplices(n) {
            let pts: Vec<&[f64]> = cell.iter().map(|&v| complex.vertices()[v].as_slice()).collect();
            let local = local_mass(&pts).map_err(|e| match e {
                Error::Degenerate { volume, .. } => Error::Degenerate {
                    simplex: cell.clone(),
                    volume,
                },
                e => e,
            })?;
            for k in 0..=n {
                // top cells carry a sign, but it enters squared
                let global: Vec<usize> = local_faces[k]
                    .iter()
                    .map(|f| {
                        let s: Vec<usize> = f.iter().map(|&i| cell[i]).collect();
                        complex.index_of(k, &s).expect("face exists")
                    })
                    .collect();
                for (x, &gx) in global.iter().enumerate() {
                    for (y, &gy) in global.iter().enumerate() {
                        gram[k][(gx, gy)] += local[k][(x, y)];
                    }
                }
            }
        }
        let mass = gram
            .into_iter()
            .map(|g| {
                let sym = (&g + g.transpose()) * 0.5;
                InnerProduct::new(sym)
            })
            .collect::<Result<Vec<_>>>()?;

        let bc = boundary_complex(complex)?;
        let boundary = match bc.complex {
            None => None,
            Some(bcx) => {
                let bops = DecOperators::build(&bcx)?;
                let mut trace = Vec::new();
                let mut trace_incidence = Vec::new();
                for k in 0..n {
                    let mut t = DMatrix::zeros(bcx.count(k), complex.count(k));
                    let mut inc = Vec::new();
                    for (i, &p) in bc.index_maps[k].iter().enumerate() {
                        let s = bcx.sign(k, i) as i64 * complex.sign(k, p) as i64;
                        t[(i, p)] = s as f64;
                        inc.push((i, p, s));
                    }
                    trace.push(t);
                    trace_incidence.push(inc);
                }
                Some(BoundaryOps {
                    ops: Box::new(bops),
                    trace,
                    trace_incidence,
                    index_maps: bc.index_maps,
                })
            }
        };
        let boundary_mask = complex.boundary_mask();
        Ok(Self {
            complex: complex.clone(),
            incidence,
            d,
            mass,
            boundary,
            boundary_mask,
        })
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn dim(&self) -> usize {
        self.complex.dim()
    }

    pub fn count(&self, k: usize) -> usize {
        self.complex.count(k)
    }

    /// `d_k`; a zero map for `k >= n`.
    pub fn d(&self, k: usize) -> DMatrix<f64> {
        match self.d.get(k) {
            Some(m) => m.clone(),
            None => DMatrix::zeros(0, self.count(k)),
        }
    }

    pub fn d_ref(&self, k: usize) -> &DMatrix<f64> {
        &self.d[k]
    }

    pub fn incidence(&self, k: usize) -> &Incidence {
        &self.incidence[k]
    }

    pub fn mass(&self, k: usize) -> &InnerProduct {
        &self.mass[k]
    }

    /// `δ_k x = M_{k-1}^{-1} d_{k-1}^T M_k x`; zero for `k = 0`.
    pub fn codiff(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        if k == 0 {
            return DVector::zeros(0);
        }
        let y = self.d[k - 1].transpose() * (self.mass[k].gram() * x);
        self.mass[k - 1].solve_vec(&y)
    }

    pub fn boundary(&self) -> Option<&BoundaryOps> {
        self.boundary.as_ref()
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.is_some()
    }

    /// Flags for `k`-simplices lying in the boundary.
    pub fn boundary_mask(&self, k: usize) -> &[bool] {
        &self.boundary_mask[k]
    }

    /// Indices of `k`-simplices not contained in the boundary.
    pub fn interior(&self, k: usize) -> Vec<usize> {
        (0..self.count(k)).filter(|&i| !self.boundary_mask[k][i]).collect()
    }

    /// Trace `T_k`; errors on a closed complex.
    pub fn trace(&self, k: usize) -> Result<&DMatrix<f64>> {
        let b = self.boundary.as_ref().ok_or(Error::EmptyBoundary)?;
        b.trace.get(k).ok_or_else(|| Error::InvalidParameter(format!("no trace in degree {k}")))
    }

    /// Operators of `∂M`.
    pub fn boundary_ops(&self) -> Result<&DecOperators> {
        Ok(&self.boundary.as_ref().ok_or(Error::EmptyBoundary)?.ops)
    }

    /// `max |d_{k+1} d_k|` over integer entries.
    pub fn dd_defect(&self, k: usize) -> i64 {
        if k + 1 >= self.incidence.len() {
            return 0;
        }
        let mut acc = vec![vec![0i64; self.count(k)]; self.count(k + 2)];
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.count(k + 1)];
        for &(r, c, v) in &self.incidence[k] {
            by_row[r].push((c, v));
        }
        for &(r, m, v) in &self.incidence[k + 1] {
            for &(c, w) in &by_row[m] {
                acc[r][c] += v * w;
            }
        }
        acc.iter().flatten().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// `max |T_{k+1} d_k - d_k^∂ T_k|` over integer entries.
    pub fn trace_commutation_defect(&self, k: usize) -> Result<i64> {
        let b = self.boundary.as_ref().ok_or(Error::EmptyBoundary)?;
        if k + 1 >= b.trace_incidence.len() {
            return Ok(0);
        }
        let rows = b.ops.count(k + 1);
        let cols = self.count(k);
        let mut acc = vec![vec![0i64; cols]; rows];
        // T_{k+1} d_k
        let mut d_rows: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.count(k + 1)];
        for &(r, c, v) in &self.incidence[k] {
            d_rows[r].push((c, v));
        }
        for &(i, p, s) in &b.trace_incidence[k + 1] {
            for &(c, v) in &d_rows[p] {
                acc[i][c] += s * v;
            }
        }
        // - d^∂_k T_k
        let mut t_rows: Vec<Vec<(usize, i64)>> = vec![Vec::new(); b.ops.count(k)];
        for &(i, p, s) in &b.trace_incidence[k] {
            t_rows[i].push((p, s));
        }
        for &(r, m, v) in &b.ops.incidence[k] {
            for &(c, s) in &t_rows[m] {
                acc[r][c] -= v * s;
            }
        }
        Ok(acc.iter().flatten().map(|x| x.abs()).max().unwrap_or(0))
    }

    /// Largest relative violation of `⟨d a, b⟩_{M_{k+1}} = ⟨a, δ b⟩_{M_k}` on the given pair.
    pub fn adjointness_defect(&self, k: usize, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let lhs = self.mass[k + 1].dot(&(&self.d[k] * a), b);
        let rhs = self.mass[k].dot(a, &self.codiff(k + 1, b));
        let scale = self.mass[k + 1].norm(&(&self.d[k] * a)) * self.mass[k + 1].norm(b);
        if scale == 0.0 {
            return (lhs - rhs).abs();
        }
        (lhs - rhs).abs() / scale
    }
}

/// `[a, b]_Σ = ⟨a.phi_d, b.phi_n⟩_{M_1(Σ)}`.
pub fn bracket(sigma: &DecOperators, a: &BoundaryDatum, b: &BoundaryDatum) -> Result<f64> {
    let n = sigma.count(1);
    if [a.phi_d.len(), a.phi_n.len(), b.phi_d.len(), b.phi_n.len()].iter().any(|&l| l != n) {
        return Err(Error::Mismatch(format!(
            "boundary data do not live on {} ({} edges)",
            sigma.complex().id(),
            n
        )));
    }
    Ok(sigma.mass(1).dot(&a.phi_d, &b.phi_n))
}

/// Extends a boundary `k`-cochain to `M`: equal on boundary simplices, zero
/// elsewhere. The support lies in the first layer of cells touching `∂M`.
pub fn extend_collar(ops: &DecOperators, k: usize, phi: &DVector<f64>) -> Result<DVector<f64>> {
    let t = ops.trace(k)?;
    if phi.len() != t.nrows() {
        return Err(Error::Mismatch(format!(
            "boundary {k}-cochain has length {}, expected {}",
            phi.len(),
            t.nrows()
        )));
    }
    Ok(t.transpose() * phi)
}
