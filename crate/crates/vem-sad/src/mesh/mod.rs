//! Conforming 2D polygonal meshes.
//!
//! Elements are stored as counter-clockwise vertex loops. Every edge carries
//! a canonical direction (the traversal of the first element that introduced
//! it), so the canonical edge normal is the outward normal of that element
//! and, on the boundary, of the domain. Meshes are immutable once built.

mod generate;
mod io;
mod voronoi;

pub use generate::{
    generate_annulus_mesh, generate_crossed_mesh, generate_nonconvex_mesh, generate_square_mesh,
    generate_voronoi_mesh, BoundaryPartition, Rect,
};
pub use io::{load_mesh, save_mesh};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::polybasis::ElementFrame;

/// Boundary edge label. `Dirichlet`/`Neumann` are the generic tags of the
/// rectangle families; annulus meshes use `Inner`/`Outer` and the solver maps
/// tags to boundary roles per field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    #[serde(rename = "D")]
    Dirichlet,
    #[serde(rename = "N")]
    Neumann,
    #[serde(rename = "inner")]
    Inner,
    #[serde(rename = "outer")]
    Outer,
}

/// An undirected mesh edge with its canonical direction and incidence.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints in canonical order (a, b): the first incident element
    /// traverses a -> b in its CCW loop.
    pub vertices: [usize; 2],
    /// Incident elements: `[forward, backward]`. Boundary edges have only
    /// the forward entry.
    pub elements: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements[1].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Vector2<f64>>,
    elements: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// Per element, per loop position: (edge index, traversed forward?).
    element_edges: Vec<Vec<(usize, bool)>>,
    /// Tag per edge; `Some` exactly on boundary edges.
    tags: Vec<Option<BoundaryTag>>,
    areas: Vec<f64>,
    centroids: Vec<Vector2<f64>>,
    diameters: Vec<f64>,
    h: f64,
    /// Elements whose input loop was clockwise and got reversed.
    reoriented: Vec<usize>,
}

impl PolygonalMesh {
    /// Builds a mesh from raw vertex/element lists and explicit boundary
    /// tags, checking orientation, simplicity and conformity.
    pub fn build(
        vertices: Vec<Vector2<f64>>,
        elements: Vec<Vec<usize>>,
        boundary_tags: &[([usize; 2], BoundaryTag)],
    ) -> Result<Self> {
        let mut mesh = Self::assemble(vertices, elements)?;
        let mut tag_map: BTreeMap<(usize, usize), BoundaryTag> = BTreeMap::new();
        for &([i, j], tag) in boundary_tags {
            let key = (i.min(j), i.max(j));
            if tag_map.insert(key, tag).is_some() {
                return Err(Error::MeshFormat(format!(
                    "boundary edge ({i}, {j}) tagged more than once"
                )));
            }
        }
        for (e, edge) in mesh.edges.iter().enumerate() {
            let key = (
                edge.vertices[0].min(edge.vertices[1]),
                edge.vertices[0].max(edge.vertices[1]),
            );
            match (edge.is_boundary(), tag_map.remove(&key)) {
                (true, Some(t)) => mesh.tags[e] = Some(t),
                (true, None) => {
                    return Err(Error::MeshFormat(format!(
                        "untagged boundary edge ({}, {})",
                        edge.vertices[0], edge.vertices[1]
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::MeshFormat(format!(
                        "tag given for interior edge ({}, {})",
                        edge.vertices[0], edge.vertices[1]
                    )))
                }
                (false, None) => {}
            }
        }
        if let Some(((i, j), _)) = tag_map.into_iter().next() {
            return Err(Error::MeshFormat(format!(
                "tagged pair ({i}, {j}) is not a mesh edge"
            )));
        }
        Ok(mesh)
    }

    /// Builds a mesh tagging each boundary edge through `tagger`, which
    /// receives the edge endpoints (canonical order).
    pub fn build_with_tagger(
        vertices: Vec<Vector2<f64>>,
        elements: Vec<Vec<usize>>,
        tagger: &dyn Fn(Vector2<f64>, Vector2<f64>) -> BoundaryTag,
    ) -> Result<Self> {
        let mut mesh = Self::assemble(vertices, elements)?;
        for e in 0..mesh.edges.len() {
            if mesh.edges[e].is_boundary() {
                let [a, b] = mesh.edges[e].vertices;
                mesh.tags[e] = Some(tagger(mesh.vertices[a], mesh.vertices[b]));
            }
        }
        Ok(mesh)
    }

    fn assemble(vertices: Vec<Vector2<f64>>, mut elements: Vec<Vec<usize>>) -> Result<Self> {
        let nv = vertices.len();
        for v in &vertices {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(Error::Mesh("non-finite vertex coordinate".into()));
            }
        }
        let mut reoriented = Vec::new();
        for (ei, loop_) in elements.iter_mut().enumerate() {
            if loop_.len() < 3 {
                return Err(Error::Mesh(format!("element {ei} has fewer than 3 vertices")));
            }
            for &v in loop_.iter() {
                if v >= nv {
                    return Err(Error::Mesh(format!(
                        "element {ei} references missing vertex {v}"
                    )));
                }
            }
            let mut sorted = loop_.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != loop_.len() {
                return Err(Error::Mesh(format!("element {ei} repeats a vertex")));
            }
            let pts: Vec<Vector2<f64>> = loop_.iter().map(|&v| vertices[v]).collect();
            let area = crate::quadrature::signed_area(&pts);
            if area == 0.0 {
                return Err(Error::Mesh(format!("element {ei} has zero area")));
            }
            if area < 0.0 {
                loop_.reverse();
                reoriented.push(ei);
            }
            let pts: Vec<Vector2<f64>> = loop_.iter().map(|&v| vertices[v]).collect();
            if !is_simple_polygon(&pts) {
                return Err(Error::Mesh(format!("element {ei} is self-intersecting")));
            }
        }

        // Edge table with deterministic canonical orientation: first toucher
        // wins, elements visited in order.
        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        for (ei, loop_) in elements.iter().enumerate() {
            let m = loop_.len();
            let mut locals = Vec::with_capacity(m);
            for i in 0..m {
                let a = loop_[i];
                let b = loop_[(i + 1) % m];
                let key = (a.min(b), a.max(b));
                match edge_ids.get(&key) {
                    None => {
                        let id = edges.len();
                        edge_ids.insert(key, id);
                        edges.push(Edge {
                            vertices: [a, b],
                            elements: [Some(ei), None],
                        });
                        locals.push((id, true));
                    }
                    Some(&id) => {
                        let edge = &mut edges[id];
                        if edge.elements[1].is_some() {
                            return Err(Error::Mesh(format!(
                                "edge ({}, {}) shared by more than 2 elements",
                                key.0, key.1
                            )));
                        }
                        let forward = edge.vertices[0] == a;
                        if forward {
                            return Err(Error::Mesh(format!(
                                "edge ({a}, {b}) traversed twice in the same direction; \
                                 inconsistent element orientation"
                            )));
                        }
                        edge.elements[1] = Some(ei);
                        locals.push((id, false));
                    }
                }
            }
            element_edges.push(locals);
        }

        let mut areas = Vec::with_capacity(elements.len());
        let mut centroids = Vec::with_capacity(elements.len());
        let mut diameters = Vec::with_capacity(elements.len());
        for loop_ in &elements {
            let pts: Vec<Vector2<f64>> = loop_.iter().map(|&v| vertices[v]).collect();
            areas.push(crate::quadrature::signed_area(&pts));
            centroids.push(crate::quadrature::polygon_centroid(&pts)?);
            let mut d = 0.0f64;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    d = d.max((pts[i] - pts[j]).norm());
                }
            }
            diameters.push(d);
        }
        let h = diameters.iter().cloned().fold(0.0, f64::max);
        let tags = vec![None; edges.len()];
        Ok(Self {
            vertices,
            elements,
            edges,
            element_edges,
            tags,
            areas,
            centroids,
            diameters,
            h,
            reoriented,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: usize) -> Vector2<f64> {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    pub fn element_vertices(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn element_points(&self, e: usize) -> Vec<Vector2<f64>> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn element_edges(&self, e: usize) -> &[(usize, bool)] {
        &self.element_edges[e]
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_points(&self, e: usize) -> (Vector2<f64>, Vector2<f64>) {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a], self.vertices[b])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.edge_points(e);
        (b - a).norm()
    }

    /// Unit normal in the canonical direction: outward for the forward
    /// incident element (and for the domain, on boundary edges).
    pub fn edge_normal(&self, e: usize) -> Vector2<f64> {
        let (a, b) = self.edge_points(e);
        let t = (b - a).normalize();
        Vector2::new(t.y, -t.x)
    }

    pub fn tag(&self, e: usize) -> Option<BoundaryTag> {
        self.tags[e]
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, BoundaryTag)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.is_boundary().then(|| (i, self.tags[i].unwrap())))
    }

    pub fn area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn centroid(&self, e: usize) -> Vector2<f64> {
        self.centroids[e]
    }

    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    /// Global mesh size h = max element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn frame(&self, e: usize) -> ElementFrame {
        ElementFrame {
            center: self.centroids[e],
            h: self.diameters[e],
        }
    }

    /// Elements whose input loops were clockwise and were reversed on build.
    pub fn reoriented_elements(&self) -> &[usize] {
        &self.reoriented
    }

    /// Returns a copy of the mesh with boundary tags reassigned through
    /// `tagger` (edge endpoints in canonical order).
    pub fn retag_boundary(
        &self,
        tagger: &dyn Fn(Vector2<f64>, Vector2<f64>) -> BoundaryTag,
    ) -> Self {
        let mut out = self.clone();
        for e in 0..out.edges.len() {
            if out.edges[e].is_boundary() {
                let (a, b) = out.edge_points(e);
                out.tags[e] = Some(tagger(a, b));
            }
        }
        out
    }
}

fn is_simple_polygon(pts: &[Vector2<f64>]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a1, a2) = (pts[i], pts[(i + 1) % n]);
        for j in i + 1..n {
            // Skip adjacent edges (they share a vertex).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (pts[j], pts[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(
    a1: Vector2<f64>,
    a2: Vector2<f64>,
    b1: Vector2<f64>,
    b2: Vector2<f64>,
) -> bool {
    let d = |p: Vector2<f64>, q: Vector2<f64>, r: Vector2<f64>| {
        (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    };
    let d1 = d(b1, b2, a1);
    let d2 = d(b1, b2, a2);
    let d3 = d(a1, a2, b1);
    let d4 = d(a1, a2, b2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Per-element regularity diagnostics.
#[derive(Debug, Clone)]
pub struct ElementRegularity {
    pub element: usize,
    /// min_e h_e / h_E over the element's edges.
    pub min_edge_ratio: f64,
    /// Whether the centroid sees every boundary edge (exact star-shapedness
    /// test for convex elements, a proxy otherwise).
    pub star_from_centroid: bool,
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub rho: f64,
    pub per_element: Vec<ElementRegularity>,
    pub worst_edge_ratio: f64,
    pub n_short_edge_violations: usize,
    pub n_non_star: usize,
}

impl RegularityReport {
    pub fn passes(&self) -> bool {
        self.n_short_edge_violations == 0 && self.n_non_star == 0
    }
}

/// Checks h_e >= rho h_E on every edge and the centroid-visibility proxy for
/// star-shapedness. Advisory: the report never aborts a computation.
pub fn validate_regularity(mesh: &PolygonalMesh, rho: f64) -> RegularityReport {
    let mut per_element = Vec::with_capacity(mesh.n_elements());
    let mut worst = f64::INFINITY;
    let mut short = 0;
    let mut non_star = 0;
    for e in 0..mesh.n_elements() {
        let h_e = mesh.diameter(e);
        let mut ratio = f64::INFINITY;
        for &(edge, _) in mesh.element_edges(e) {
            ratio = ratio.min(mesh.edge_length(edge) / h_e);
        }
        let pts = mesh.element_points(e);
        let c = mesh.centroid(e);
        let star = centroid_sees_all_edges(&pts, c);
        if ratio < rho {
            short += 1;
        }
        if !star {
            non_star += 1;
        }
        worst = worst.min(ratio);
        per_element.push(ElementRegularity {
            element: e,
            min_edge_ratio: ratio,
            star_from_centroid: star,
        });
    }
    RegularityReport {
        rho,
        per_element,
        worst_edge_ratio: worst,
        n_short_edge_violations: short,
        n_non_star: non_star,
    }
}

fn centroid_sees_all_edges(pts: &[Vector2<f64>], c: Vector2<f64>) -> bool {
    let n = pts.len();
    let scale = pts.iter().map(|p| (p - c).norm()).fold(0.0f64, f64::max);
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if cross < -1e-12 * scale * scale {
            return false;
        }
    }
    true
}
