//! Oriented simplicial complexes with metric data: validation, JSON IO,
//! generators, boundary extraction, product collars and gluing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the Riemannian metric of a complex comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSource {
    Embedded,
    ProductCollar,
}

/// Layer structure of a collar complex `Σ × [0, ε]`.
///
/// Vertex `v + l * base_vertex_count` is the copy of base vertex `v` at height
/// `l * eps / layers`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarInfo {
    pub layers: usize,
    pub eps: f64,
    pub base_vertex_count: usize,
}

/// A labeled boundary component: indices into the sorted list of `(n-1)`-simplices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub label: String,
    pub facets: Vec<usize>,
}

/// Vertex identification between two boundary components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingMap {
    pub source_component: String,
    pub target_component: String,
    /// `(source vertex, target vertex)` pairs.
    pub vertex_bijection: Vec<(usize, usize)>,
}

/// An oriented simplicial complex of dimension `dim` embedded in some `R^D`,
/// `D >= dim`.
///
/// Every `k`-simplex is stored as its sorted vertex tuple. Simplices of degree
/// below `dim` are oriented by that order; top simplices carry an explicit sign
/// relative to it, and those signs form a coherent orientation.
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    id: String,
    dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<Vec<usize>>>,
    lookup: Vec<HashMap<Vec<usize>, usize>>,
    top_signs: Vec<i8>,
    facet_cofaces: Vec<Vec<usize>>,
    boundary_components: Vec<BoundaryComponent>,
    metric_source: MetricSource,
    collar: Option<CollarInfo>,
    cell_groups: Vec<BoundaryComponent>,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_labels: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default = "default_metric")]
    metric_source: MetricSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collar: Option<CollarInfo>,
}

fn default_metric() -> MetricSource {
    MetricSource::Embedded
}

/// Sign of the permutation sorting `tuple`, with the sorted tuple.
fn sort_with_parity(tuple: &[usize]) -> (Vec<usize>, i8) {
    let mut v = tuple.to_vec();
    let mut sign = 1i8;
    // insertion sort counts transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (v, sign)
}

fn faces_of(simplex: &[usize]) -> impl Iterator<Item = (usize, Vec<usize>)> + '_ {
    (0..simplex.len()).map(move |i| {
        let mut f = simplex.to_vec();
        f.remove(i);
        (i, f)
    })
}

/// All sub-tuples of `simplex` with `k + 1` vertices, in lexicographic order.
fn subsets(simplex: &[usize], k: usize, out: &mut BTreeSet<Vec<usize>>) {
    fn rec(s: &[usize], need: usize, start: usize, cur: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        if cur.len() == need {
            out.insert(cur.clone());
            return;
        }
        for i in start..s.len() {
            cur.push(s[i]);
            rec(s, need, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(simplex, k + 1, 0, &mut Vec::new(), out);
}

/// `sqrt(det G)/n!` for the edge-vector Gram matrix `G` of a simplex.
pub fn simplex_volume(points: &[&[f64]]) -> f64 {
    let n = points.len() - 1;
    if n == 0 {
        return 1.0;
    }
    let p0 = points[0];
    let g = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        points[i + 1]
            .iter()
            .zip(points[j + 1])
            .zip(p0)
            .map(|((a, b), o)| (a - o) * (b - o))
            .sum::<f64>()
    });
    let det = g.determinant().max(0.0);
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    det.sqrt() / fact
}

impl SimplicialComplex {
    /// Builds and validates a complex from oriented top cells.
    ///
    /// `labels` partitions boundary facets (indices into the sorted facet list);
    /// `None` labels connected components `Sigma1, Sigma2, ...`.
    pub fn from_cells(
        id: impl Into<String>,
        dim: usize,
        vertices: Vec<Vec<f64>>,
        cells: &[Vec<usize>],
        labels: Option<BTreeMap<String, Vec<usize>>>,
        metric_source: MetricSource,
        collar: Option<CollarInfo>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Parse(format!("unsupported dimension {dim}")));
        }
        if vertices.is_empty() {
            return Err(Error::Parse("empty vertex list".into()));
        }
        if cells.is_empty() {
            return Err(Error::Parse("empty simplex list".into()));
        }
        let ambient = vertices[0].len();
        if ambient < dim || vertices.iter().any(|v| v.len() != ambient) {
            return Err(Error::Parse("inconsistent vertex coordinate length".into()));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite vertex coordinate".into()));
        }

        let mut top: Vec<(Vec<usize>, i8)> = Vec::with_capacity(cells.len());
        for c in cells {
            if c.len() != dim + 1 {
                return Err(Error::NonManifold(format!(
                    "cell {c:?} has {} vertices, expected {}",
                    c.len(),
                    dim + 1
                )));
            }
            if let Some(&v) = c.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Parse(format!("cell {c:?} references missing vertex {v}")));
            }
            let (sorted, sign) = sort_with_parity(c);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parse(format!("cell {c:?} repeats a vertex")));
            }
            top.push((sorted, sign));
        }
        top.sort();
        if let Some(w) = top.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::NonManifold(format!("duplicate cell {:?}", w[0].0)));
        }

        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); dim + 1];
        for (c, _) in &top {
            for k in 0..dim {
                subsets(c, k, &mut sets[k]);
            }
            sets[dim].insert(c.clone());
        }
        if sets[0].len() != vertices.len() {
            return Err(Error::Parse("mesh has vertices not used by any cell".into()));
        }
        let simplices: Vec<Vec<Vec<usize>>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let lookup: Vec<HashMap<Vec<usize>, usize>> = simplices
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        let top_signs: Vec<i8> = top.iter().map(|(_, s)| *s).collect();

        for (c, _) in &top {
            let pts: Vec<&[f64]> = c.iter().map(|&v| vertices[v].as_slice()).collect();
            let vol = simplex_volume(&pts);
            let scale = pts
                .iter()
                .skip(1)
                .map(|p| p.iter().zip(pts[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            if !(vol > 1e-12 * scale.powi(dim as i32)) {
                return Err(Error::Degenerate {
                    simplex: c.clone(),
                    volume: vol,
                });
            }
        }

        // facet incidence and orientation coherence
        let mut facet_cofaces = vec![Vec::new(); simplices[dim - 1].len()];
        let mut induced: Vec<Vec<i8>> = vec![Vec::new(); simplices[dim - 1].len()];
        for (ci, (c, s)) in top.iter().enumerate() {
            for (i, f) in faces_of(c) {
                let fi = lookup[dim - 1][&f];
                facet_cofaces[fi].push(ci);
                induced[fi].push(if i % 2 == 0 { *s } else { -*s });
            }
        }
        for (fi, cof) in facet_cofaces.iter().enumerate() {
            match cof.len() {
                1 => {}
                2 => {
                    if induced[fi][0] == induced[fi][1] {
                        return Err(Error::Orientation(format!(
                            "cells {:?} and {:?} induce the same orientation on {:?}",
                            top[cof[0]].0, top[cof[1]].0, simplices[dim - 1][fi]
                        )));
                    }
                }
                m => {
                    return Err(Error::NonManifold(format!(
                        "facet {:?} is shared by {m} cells",
                        simplices[dim - 1][fi]
                    )))
                }
            }
        }

        let mut cx = SimplicialComplex {
            id: id.into(),
            dim,
            vertices,
            simplices,
            lookup,
            top_signs,
            facet_cofaces,
            boundary_components: Vec::new(),
            metric_source,
            collar,
            cell_groups: Vec::new(),
        };
        cx.check_boundary_closed()?;
        cx.boundary_components = match labels {
            Some(l) => cx.validate_labels(l)?,
            None => cx.detect_components(),
        };
        Ok(cx)
    }

    fn check_boundary_closed(&self) -> Result<()> {
        if self.dim < 2 {
            return Ok(());
        }
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for fi in self.boundary_facets() {
            for (_, r) in faces_of(&self.simplices[self.dim - 1][fi]) {
                *count.entry(r).or_default() += 1;
            }
        }
        if let Some((r, c)) = count.iter().filter(|(_, &c)| c != 2).min() {
            return Err(Error::NonManifold(format!(
                "boundary is not closed: ridge {r:?} lies on {c} boundary facets"
            )));
        }
        Ok(())
    }

    fn facet_adjacency(&self, facets: &[usize]) -> HashMap<Vec<usize>, Vec<usize>> {
        let mut by_ridge: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for &fi in facets {
            let f = &self.simplices[self.dim - 1][fi];
            if self.dim == 1 {
                continue;
            }
            for (_, r) in faces_of(f) {
                by_ridge.entry(r).or_default().push(fi);
            }
        }
        by_ridge
    }

    fn components_of(&self, facets: &[usize]) -> Vec<Vec<usize>> {
        let by_ridge = self.facet_adjacency(facets);
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut out = Vec::new();
        for &start in facets {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(fi) = stack.pop() {
                if self.dim == 1 {
                    break;
                }
                for (_, r) in faces_of(&self.simplices[self.dim - 1][fi]) {
                    for &nb in &by_ridge[&r] {
                        if seen.insert(nb) {
                            comp.push(nb);
                            stack.push(nb);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort();
        out
    }

    fn detect_components(&self) -> Vec<BoundaryComponent> {
        let facets = self.boundary_facets();
        self.components_of(&facets)
            .into_iter()
            .enumerate()
            .map(|(i, facets)| BoundaryComponent {
                label: format!("Sigma{}", i + 1),
                facets,
            })
            .collect()
    }

    fn validate_labels(&self, labels: BTreeMap<String, Vec<usize>>) -> Result<Vec<BoundaryComponent>> {
        let boundary: BTreeSet<usize> = self.boundary_facets().into_iter().collect();
        let mut covered: BTreeSet<usize> = BTreeSet::new();
        let mut out = Vec::new();
        for (label, mut facets) in labels {
            facets.sort_unstable();
            for &f in &facets {
                if !boundary.contains(&f) {
                    return Err(Error::Parse(format!(
                        "component {label} lists facet {f}, which is not a boundary facet"
                    )));
                }
                if !covered.insert(f) {
                    return Err(Error::Parse(format!("facet {f} is listed in two components")));
                }
            }
            // a component must be a union of closed pieces
            let by_ridge = self.facet_adjacency(&facets);
            if by_ridge.values().any(|v| v.len() != 2) {
                return Err(Error::NonManifold(format!("component {label} is not closed")));
            }
            out.push(BoundaryComponent { label, facets });
        }
        if covered != boundary {
            return Err(Error::Parse("boundary labels do not cover the boundary".into()));
        }
        Ok(out)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    /// Sorted vertex tuples of all `k`-simplices, lexicographically ordered.
    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        &self.simplices[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    pub fn index_of(&self, k: usize, simplex: &[usize]) -> Option<usize> {
        self.lookup.get(k)?.get(simplex).copied()
    }

    /// Orientation sign of simplex `i` of degree `k` relative to its sorted tuple.
    pub fn sign(&self, k: usize, i: usize) -> i8 {
        if k == self.dim {
            self.top_signs[i]
        } else {
            1
        }
    }

    pub fn metric_source(&self) -> MetricSource {
        self.metric_source
    }

    pub fn collar_info(&self) -> Option<&CollarInfo> {
        self.collar.as_ref()
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|k| if k % 2 == 0 { self.count(k) as i64 } else { -(self.count(k) as i64) })
            .sum()
    }

    /// Indices of `(n-1)`-simplices incident to exactly one top cell.
    pub fn boundary_facets(&self) -> Vec<usize> {
        (0..self.facet_cofaces.len())
            .filter(|&i| self.facet_cofaces[i].len() == 1)
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.facet_cofaces.iter().all(|c| c.len() == 2)
    }

    pub fn boundary_components(&self) -> &[BoundaryComponent] {
        &self.boundary_components
    }

    pub fn component(&self, label: &str) -> Option<&BoundaryComponent> {
        self.boundary_components.iter().find(|c| c.label == label)
    }

    /// Orientation induced on boundary facet `fi` by its unique cell, relative
    /// to the facet's sorted tuple.
    pub fn induced_sign(&self, fi: usize) -> i8 {
        let ci = self.facet_cofaces[fi][0];
        let cell = &self.simplices[self.dim][ci];
        let facet = &self.simplices[self.dim - 1][fi];
        let i = cell.iter().position(|v| !facet.contains(v)).expect("facet of cell");
        let s = self.top_signs[ci];
        if i % 2 == 0 {
            s
        } else {
            -s
        }
    }

    /// Per-degree flags marking simplices contained in the boundary.
    pub fn boundary_mask(&self) -> Vec<Vec<bool>> {
        let mut mask: Vec<Vec<bool>> = (0..=self.dim).map(|k| vec![false; self.count(k)]).collect();
        for fi in self.boundary_facets() {
            let mut sub = BTreeSet::new();
            let f = &self.simplices[self.dim - 1][fi];
            for k in 0..self.dim {
                sub.clear();
                subsets(f, k, &mut sub);
                for s in &sub {
                    mask[k][self.lookup[k][s]] = true;
                }
            }
        }
        mask
    }

    /// Vertices lying on the named boundary component, sorted.
    pub fn component_vertices(&self, label: &str) -> Option<Vec<usize>> {
        let comp = self.component(label)?;
        let set: BTreeSet<usize> = comp
            .facets
            .iter()
            .flat_map(|&f| self.simplices[self.dim - 1][f].iter().copied())
            .collect();
        Some(set.into_iter().collect())
    }

    // ---- IO ----

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: MeshFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        SimplicialComplex::from_cells(
            file.id.unwrap_or_else(|| "mesh".into()),
            file.dim,
            file.vertices,
            &file.cells,
            file.boundary_labels,
            file.metric_source,
            file.collar,
        )
    }

    /// Serializes in the mesh JSON format. Cells are written in oriented order.
    pub fn to_json(&self) -> String {
        let cells: Vec<Vec<usize>> = self.simplices[self.dim]
            .iter()
            .zip(&self.top_signs)
            .map(|(c, &s)| {
                let mut c = c.clone();
                if s < 0 {
                    c.swap(0, 1);
                }
                c
            })
            .collect();
        let labels = if self.boundary_components.is_empty() {
            None
        } else {
            Some(
                self.boundary_components
                    .iter()
                    .map(|c| (c.label.clone(), c.facets.clone()))
                    .collect(),
            )
        };
        let file = MeshFile {
            dim: self.dim,
            vertices: self.vertices.clone(),
            cells,
            boundary_labels: labels,
            metric_source: self.metric_source,
            id: Some(self.id.clone()),
            collar: self.collar.clone(),
        };
        serde_json::to_string_pretty(&file).expect("mesh serializes")
    }
}

/// Parses and validates mesh JSON content.
pub fn load_mesh(bytes: &[u8]) -> Result<SimplicialComplex> {
    SimplicialComplex::from_json(bytes)
}

fn ring(m: usize, r: f64, phase: f64) -> impl Iterator<Item = Vec<f64>> {
    (0..m).map(move |i| {
        let t = 2.0 * PI * i as f64 / m as f64 + phase;
        vec![r * t.cos(), r * t.sin()]
    })
}

/// Orders a planar triangle counter-clockwise.
fn ccw(v: &[Vec<f64>], mut t: [usize; 3]) -> Vec<usize> {
    let (a, b, c) = (&v[t[0]], &v[t[1]], &v[t[2]]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if det < 0.0 {
        t.swap(1, 2);
    }
    t.to_vec()
}

/// Triangulated unit disk with `m` boundary edges.
pub fn gen_disk(m: usize) -> Result<SimplicialComplex> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!("disk needs m >= 3, got {m}")));
    }
    let rings = (m / 6).max(2);
    let mut v = vec![vec![0.0, 0.0]];
    for j in 1..=rings {
        v.extend(ring(m, j as f64 / rings as f64, 0.0));
    }
    let at = |j: usize, i: usize| 1 + (j - 1) * m + i % m;
    let mut cells = Vec::new();
    for i in 0..m {
        cells.push(ccw(&v, [0, at(1, i), at(1, i + 1)]));
    }
    for j in 1..rings {
        for i in 0..m {
            cells.push(ccw(&v, [at(j, i), at(j + 1, i), at(j + 1, i + 1)]));
            cells.push(ccw(&v, [at(j, i), at(j + 1, i + 1), at(j, i + 1)]));
        }
    }
    SimplicialComplex::from_cells(format!("disk{m}"), 2, v, &cells, None, MetricSource::Embedded, None)
}

/// Triangulated planar annulus with `m` edges on each boundary circle.
/// The inner circle is labeled `Sigma1`, the outer `Sigma2`.
pub fn gen_annulus(m: usize, r_in: f64, r_out: f64) -> Result<SimplicialComplex> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!("annulus needs m >= 3, got {m}")));
    }
    if !(r_in > 0.0 && r_out > r_in && r_out.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "annulus needs 0 < r_in < r_out, got {r_in}, {r_out}"
        )));
    }
    // at least three layers, so the two circles can be glued simplicially
    let layers = (m / 4).max(3);
    let mut v = Vec::new();
    for j in 0..=layers {
        v.extend(ring(m, r_in + (r_out - r_in) * j as f64 / layers as f64, 0.0));
    }
    let at = |j: usize, i: usize| j * m + i % m;
    let mut cells = Vec::new();
    for j in 0..layers {
        for i in 0..m {
            cells.push(ccw(&v, [at(j, i), at(j + 1, i), at(j + 1, i + 1)]));
            cells.push(ccw(&v, [at(j, i), at(j + 1, i + 1), at(j, i + 1)]));
        }
    }
    let mut cx = SimplicialComplex::from_cells(
        format!("annulus{m}"),
        2,
        v,
        &cells,
        None,
        MetricSource::Embedded,
        None,
    )?;
    // label by radius rather than by discovery order
    let inner: BTreeSet<usize> = (0..m).collect();
    let mut labels = BTreeMap::new();
    for comp in &cx.boundary_components {
        let first = cx.simplices[1][comp.facets[0]][0];
        let label = if inner.contains(&first) { "Sigma1" } else { "Sigma2" };
        labels.insert(label.to_string(), comp.facets.clone());
    }
    cx.boundary_components = cx.validate_labels(labels)?;
    Ok(cx)
}

/// Regular `m`-gon on the unit circle as a closed 1-complex.
pub fn gen_circle(m: usize) -> Result<SimplicialComplex> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!("circle needs m >= 3, got {m}")));
    }
    let v: Vec<Vec<f64>> = ring(m, 1.0, 0.0).collect();
    let cells: Vec<Vec<usize>> = (0..m).map(|i| vec![i, (i + 1) % m]).collect();
    SimplicialComplex::from_cells(format!("circle{m}"), 1, v, &cells, None, MetricSource::Embedded, None)
}

/// Closed triangulated 2-sphere: the boundary of the standard tetrahedron.
pub fn gen_tetra_sphere() -> Result<SimplicialComplex> {
    let v = vec![
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    // outward-oriented faces
    let cells = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
    SimplicialComplex::from_cells("sphere4", 2, v, &cells, None, MetricSource::Embedded, None)
}

/// Prism complex `Σ × [0, eps]` with `layers` layers and product metric.
///
/// The bottom boundary is labeled `Sigma` and carries the orientation of `Σ`;
/// the top is labeled `Sigma'`.
pub fn collar(sigma: &SimplicialComplex, layers: usize, eps: f64) -> Result<SimplicialComplex> {
    if !sigma.is_closed() {
        return Err(Error::NotClosed(format!("collar base {} has boundary", sigma.id)));
    }
    if layers == 0 {
        return Err(Error::InvalidParameter("collar needs at least one layer".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("collar width must be positive, got {eps}")));
    }
    let d = sigma.dim;
    let n = d + 1;
    if n > 3 {
        return Err(Error::InvalidParameter("collar would exceed dimension 3".into()));
    }
    let nv = sigma.vertices.len();
    let mut v = Vec::with_capacity(nv * (layers + 1));
    for l in 0..=layers {
        let tau = eps * l as f64 / layers as f64;
        for p in &sigma.vertices {
            let mut q = p.clone();
            q.push(tau);
            v.push(q);
        }
    }
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut cells = Vec::new();
    for (ci, base) in sigma.simplices[d].iter().enumerate() {
        let s = sigma.top_signs[ci] as f64;
        for l in 0..layers {
            // staircase: simplex j keeps base[0..=j] at level l, base[j..] at l+1
            for j in 0..=d {
                let mut local: Vec<(usize, usize)> = (0..=j).map(|i| (i, 0)).collect();
                local.extend((j..=d).map(|i| (i, 1)));
                // local coordinates: base vertex i -> e_i (e_0 = origin), level -> tau
                let coord = |&(i, h): &(usize, usize)| {
                    let mut c = vec![0.0; n];
                    if i > 0 {
                        c[i - 1] = 1.0;
                    }
                    c[d] = h as f64;
                    c
                };
                let o = coord(&local[0]);
                let m = nalgebra::DMatrix::from_fn(n, n, |r, c| coord(&local[c + 1])[r] - o[r]);
                let mut cell: Vec<usize> = local.iter().map(|&(i, h)| base[i] + (l + h) * nv).collect();
                if m.determinant() * s * parity < 0.0 {
                    cell.swap(0, 1);
                }
                cells.push(cell);
            }
        }
    }
    let collar_info = CollarInfo {
        layers,
        eps,
        base_vertex_count: nv,
    };
    let mut cx = SimplicialComplex::from_cells(
        format!("collar({},{layers},{eps})", sigma.id),
        n,
        v,
        &cells,
        None,
        MetricSource::ProductCollar,
        Some(collar_info),
    )?;
    let mut labels: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for fi in cx.boundary_facets() {
        let bottom = cx.simplices[d][fi].iter().all(|&x| x < nv);
        labels
            .entry(if bottom { "Sigma" } else { "Sigma'" }.to_string())
            .or_default()
            .push(fi);
    }
    cx.boundary_components = cx.validate_labels(labels)?;
    Ok(cx)
}

/// The identification of the bottom of a collar with its top.
pub fn collar_gluing_map(c: &SimplicialComplex) -> Result<GluingMap> {
    let info = c
        .collar
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a collar", c.id)))?;
    let shift = info.layers * info.base_vertex_count;
    Ok(GluingMap {
        source_component: "Sigma".into(),
        target_component: "Sigma'".into(),
        vertex_bijection: (0..info.base_vertex_count).map(|v| (v, v + shift)).collect(),
    })
}

/// Boundary complex together with, per degree, the map from its simplices to
/// simplices of the parent complex.
#[derive(Clone, Debug)]
pub struct BoundaryComplex {
    pub complex: Option<SimplicialComplex>,
    /// `index_maps[k][i]` is the parent index of boundary `k`-simplex `i`.
    pub index_maps: Vec<Vec<usize>>,
    /// Parent vertex of each boundary vertex.
    pub vertex_map: Vec<usize>,
}

/// Extracts `∂M` with induced orientation and inherited coordinates.
///
/// Returns `complex: None` for a closed complex.
pub fn boundary_complex(m: &SimplicialComplex) -> Result<BoundaryComplex> {
    let facets = m.boundary_facets();
    if facets.is_empty() || m.dim == 1 {
        return Ok(BoundaryComplex {
            complex: None,
            index_maps: Vec::new(),
            vertex_map: Vec::new(),
        });
    }
    let d = m.dim - 1;
    let verts: BTreeSet<usize> = facets.iter().flat_map(|&f| m.simplices[d][f].iter().copied()).collect();
    let vertex_map: Vec<usize> = verts.into_iter().collect();
    let renum: HashMap<usize, usize> = vertex_map.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let coords: Vec<Vec<f64>> = vertex_map.iter().map(|&v| m.vertices[v].clone()).collect();
    let cells: Vec<Vec<usize>> = facets
        .iter()
        .map(|&fi| {
            let mut c: Vec<usize> = m.simplices[d][fi].iter().map(|v| renum[v]).collect();
            if m.induced_sign(fi) < 0 {
                c.swap(0, 1);
            }
            c
        })
        .collect();
    // renumbering is monotone, so sorted tuples stay sorted
    let facet_pos: HashMap<usize, Vec<usize>> = facets
        .iter()
        .map(|&fi| (fi, m.simplices[d][fi].iter().map(|v| renum[v]).collect()))
        .collect();
    let mut labels: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut bc = SimplicialComplex::from_cells(
        format!("{}.boundary", m.id),
        d,
        coords,
        &cells,
        None,
        m.metric_source,
        None,
    )?;
    let index_maps: Vec<Vec<usize>> = (0..=d)
        .map(|k| {
            bc.simplices[k]
                .iter()
                .map(|s| {
                    let parent: Vec<usize> = s.iter().map(|&v| vertex_map[v]).collect();
                    m.lookup[k][&parent]
                })
                .collect()
        })
        .collect();
    for comp in &m.boundary_components {
        for &fi in &comp.facets {
            let local = bc.lookup[d][&facet_pos[&fi]];
            labels.entry(comp.label.clone()).or_default().push(local);
        }
    }
    bc.cell_groups = labels
        .into_iter()
        .map(|(label, mut facets)| {
            facets.sort_unstable();
            BoundaryComponent { label, facets }
        })
        .collect();
    Ok(BoundaryComplex {
        complex: Some(bc),
        index_maps,
        vertex_map,
    })
}

impl SimplicialComplex {
    /// For a complex built by [`boundary_complex`], the labeled groups of top
    /// cells, one per boundary component of the parent. Empty otherwise.
    pub fn cell_groups(&self) -> &[BoundaryComponent] {
        &self.cell_groups
    }
}

/// Identifies the two boundary components named by `g`.
///
/// Target vertices are replaced by their source partners; coordinates are
/// taken from the source side.
pub fn glue(m: &SimplicialComplex, g: &GluingMap) -> Result<SimplicialComplex> {
    if g.source_component == g.target_component {
        return Err(Error::Glue("source and target components coincide".into()));
    }
    let src = m
        .component(&g.source_component)
        .ok_or_else(|| Error::Glue(format!("no component {}", g.source_component)))?;
    let tgt = m
        .component(&g.target_component)
        .ok_or_else(|| Error::Glue(format!("no component {}", g.target_component)))?;
    let sv: BTreeSet<usize> = m.component_vertices(&src.label).unwrap().into_iter().collect();
    let tv: BTreeSet<usize> = m.component_vertices(&tgt.label).unwrap().into_iter().collect();
    if !sv.is_disjoint(&tv) {
        return Err(Error::Glue("components share vertices".into()));
    }
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    for &(s, t) in &g.vertex_bijection {
        if !sv.contains(&s) || !tv.contains(&t) {
            return Err(Error::Glue(format!("pair ({s}, {t}) is not source -> target")));
        }
        if fwd.insert(s, t).is_some() || back.insert(t, s).is_some() {
            return Err(Error::Glue("vertex map is not injective".into()));
        }
    }
    if fwd.len() != sv.len() || back.len() != tv.len() {
        return Err(Error::Glue("vertex map is not a bijection between the components".into()));
    }
    let d = m.dim - 1;
    let tgt_set: BTreeSet<usize> = tgt.facets.iter().copied().collect();
    for &fi in &src.facets {
        let image: Vec<usize> = m.simplices[d][fi].iter().map(|v| fwd[v]).collect();
        let (sorted, perm) = sort_with_parity(&image);
        let ti = m
            .index_of(d, &sorted)
            .filter(|t| tgt_set.contains(t))
            .ok_or_else(|| Error::Glue(format!("image of facet {:?} is not a target facet", m.simplices[d][fi])))?;
        if m.induced_sign(fi) * perm != -m.induced_sign(ti) {
            return Err(Error::Glue("vertex map does not reverse the induced orientation".into()));
        }
    }
    if src.facets.len() != tgt.facets.len() {
        return Err(Error::Glue("components have different facet counts".into()));
    }

    // drop target vertices, renumber the rest
    let mut renum = vec![usize::MAX; m.vertices.len()];
    let mut coords = Vec::new();
    for v in 0..m.vertices.len() {
        if !tv.contains(&v) {
            renum[v] = coords.len();
            coords.push(m.vertices[v].clone());
        }
    }
    for &t in &tv {
        renum[t] = renum[back[&t]];
    }
    let cells: Vec<Vec<usize>> = m.simplices[m.dim]
        .iter()
        .zip(&m.top_signs)
        .map(|(c, &s)| {
            let mut c: Vec<usize> = c.iter().map(|&v| renum[v]).collect();
            if s < 0 {
                c.swap(0, 1);
            }
            c
        })
        .collect();
    let mut glued = SimplicialComplex::from_cells(
        format!("{}/glued", m.id),
        m.dim,
        coords,
        &cells,
        None,
        m.metric_source,
        None,
    )
    .map_err(|e| Error::Glue(format!("glued complex is invalid: {e}")))?;

    let mut labels = BTreeMap::new();
    for comp in &m.boundary_components {
        if comp.label == src.label || comp.label == tgt.label {
            continue;
        }
        let facets = comp
            .facets
            .iter()
            .map(|&fi| {
                let t: Vec<usize> = m.simplices[d][fi].iter().map(|&v| renum[v]).collect();
                let (sorted, _) = sort_with_parity(&t);
                glued.lookup[d][&sorted]
            })
            .collect();
        labels.insert(comp.label.clone(), facets);
    }
    glued.boundary_components = glued.validate_labels(labels)?;
    Ok(glued)
}

/// The map identifying the inner circle of [`gen_annulus`] with the outer one
/// at equal angle.
pub fn annulus_gluing_map(a: &SimplicialComplex) -> Result<GluingMap> {
    let inner = a
        .component_vertices("Sigma1")
        .ok_or_else(|| Error::Glue("annulus has no Sigma1".into()))?;
    let outer = a
        .component_vertices("Sigma2")
        .ok_or_else(|| Error::Glue("annulus has no Sigma2".into()))?;
    if inner.len() != outer.len() {
        return Err(Error::Glue("circles have different vertex counts".into()));
    }
    Ok(GluingMap {
        source_component: "Sigma1".into(),
        target_component: "Sigma2".into(),
        vertex_bijection: inner.into_iter().zip(outer).collect(),
    })
}
