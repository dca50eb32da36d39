//! Deterministic mesh families: structured squares, crossed triangles,
//! zig-zag hexagons, clipped Voronoi tessellations and Voronoi annuli.

use nalgebra::Vector2;

use super::voronoi::{annulus_cells, rectangle_cells, weld_cells};
use super::{BoundaryTag, PolygonalMesh};
use crate::error::{Error, Result};

/// Axis-aligned rectangle (x0, y0) - (x1, y1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        assert!(x0 < x1 && y0 < y1);
        Self { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn corners(&self) -> Vec<Vector2<f64>> {
        vec![
            Vector2::new(self.x0, self.y0),
            Vector2::new(self.x1, self.y0),
            Vector2::new(self.x1, self.y1),
            Vector2::new(self.x0, self.y1),
        ]
    }

    pub fn contains(&self, p: Vector2<f64>) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Splits the boundary of a rectangle-family mesh into Dirichlet and Neumann
/// parts through a midpoint predicate.
pub struct BoundaryPartition {
    dirichlet: Box<dyn Fn(Vector2<f64>) -> bool>,
}

impl BoundaryPartition {
    pub fn all_dirichlet() -> Self {
        Self {
            dirichlet: Box::new(|_| true),
        }
    }

    /// Dirichlet on the left and bottom sides of `rect`, Neumann elsewhere.
    pub fn left_bottom(rect: Rect) -> Self {
        let tol_x = 1e-10 * rect.width().max(1.0);
        let tol_y = 1e-10 * rect.height().max(1.0);
        Self {
            dirichlet: Box::new(move |m| (m.x - rect.x0).abs() < tol_x || (m.y - rect.y0).abs() < tol_y),
        }
    }

    pub fn dirichlet_where(pred: impl Fn(Vector2<f64>) -> bool + 'static) -> Self {
        Self {
            dirichlet: Box::new(pred),
        }
    }

    pub fn tag(&self, a: Vector2<f64>, b: Vector2<f64>) -> BoundaryTag {
        if (self.dirichlet)(0.5 * (a + b)) {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    }
}

fn finish_rect_mesh(
    vertices: Vec<Vector2<f64>>,
    elements: Vec<Vec<usize>>,
    partition: &BoundaryPartition,
) -> Result<PolygonalMesh> {
    let mesh =
        PolygonalMesh::build_with_tagger(vertices, elements, &|a, b| partition.tag(a, b))?;
    if !mesh
        .boundary_edges()
        .any(|(_, t)| t == BoundaryTag::Dirichlet)
    {
        return Err(Error::Mesh("boundary partition has no Dirichlet edge".into()));
    }
    Ok(mesh)
}

/// n x n grid of congruent squares over `domain`.
pub fn generate_square_mesh(
    n: usize,
    domain: Rect,
    partition: &BoundaryPartition,
) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::Mesh("square mesh needs n >= 1".into()));
    }
    let (dx, dy) = (domain.width() / n as f64, domain.height() / n as f64);
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vector2::new(
                domain.x0 + i as f64 * dx,
                domain.y0 + j as f64 * dy,
            ));
        }
    }
    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    finish_rect_mesh(vertices, elements, partition)
}

/// n x n cells, each split into 4 triangles through the cell centre.
pub fn generate_crossed_mesh(
    n: usize,
    domain: Rect,
    partition: &BoundaryPartition,
) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::Mesh("crossed mesh needs n >= 1".into()));
    }
    let (dx, dy) = (domain.width() / n as f64, domain.height() / n as f64);
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vector2::new(
                domain.x0 + i as f64 * dx,
                domain.y0 + j as f64 * dy,
            ));
        }
    }
    let grid = (n + 1) * (n + 1);
    let cid = |i: usize, j: usize| grid + j * n + i;
    for j in 0..n {
        for i in 0..n {
            vertices.push(Vector2::new(
                domain.x0 + (i as f64 + 0.5) * dx,
                domain.y0 + (j as f64 + 0.5) * dy,
            ));
        }
    }
    let mut elements = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = cid(i, j);
            let (sw, se, ne, nw) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            elements.push(vec![sw, se, c]);
            elements.push(vec![se, ne, c]);
            elements.push(vec![ne, nw, c]);
            elements.push(vec![nw, sw, c]);
        }
    }
    finish_rect_mesh(vertices, elements, partition)
}

/// n x n cells, each split into two non-convex hexagons by a three-segment
/// zig-zag cut between the midpoints of the bottom and top cell edges.
pub fn generate_nonconvex_mesh(
    n: usize,
    domain: Rect,
    partition: &BoundaryPartition,
) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::Mesh("non-convex mesh needs n >= 1".into()));
    }
    let (dx, dy) = (domain.width() / n as f64, domain.height() / n as f64);
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vector2::new(
                domain.x0 + i as f64 * dx,
                domain.y0 + j as f64 * dy,
            ));
        }
    }
    let grid = (n + 1) * (n + 1);
    // Midpoints of all horizontal grid edges (shared between stacked cells).
    let mid = |i: usize, j: usize| grid + j * n + i;
    for j in 0..=n {
        for i in 0..n {
            vertices.push(Vector2::new(
                domain.x0 + (i as f64 + 0.5) * dx,
                domain.y0 + j as f64 * dy,
            ));
        }
    }
    // Two interior zig points per cell.
    let zig_base = grid + (n + 1) * n;
    let zig = |i: usize, j: usize, k: usize| zig_base + 2 * (j * n + i) + k;
    for j in 0..n {
        for i in 0..n {
            let (x0, y0) = (domain.x0 + i as f64 * dx, domain.y0 + j as f64 * dy);
            vertices.push(Vector2::new(x0 + 0.75 * dx, y0 + dy / 3.0));
            vertices.push(Vector2::new(x0 + 0.25 * dx, y0 + 2.0 * dy / 3.0));
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (sw, se, ne, nw) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let (mb, mt) = (mid(i, j), mid(i, j + 1));
            let (z1, z2) = (zig(i, j, 0), zig(i, j, 1));
            elements.push(vec![sw, mb, z1, z2, mt, nw]);
            elements.push(vec![mb, se, ne, mt, z2, z1]);
        }
    }
    finish_rect_mesh(vertices, elements, partition)
}

/// Clipped Voronoi tessellation of `domain` from `n_seeds` uniformly sampled
/// sites, with optional Lloyd relaxation and interior-vertex perturbation.
///
/// The result is reproducible from `rng_seed`. `perturbation` is the maximal
/// vertex displacement as a fraction of the shortest incident edge and must
/// lie in [0, 0.5).
pub fn generate_voronoi_mesh(
    n_seeds: usize,
    domain: Rect,
    rng_seed: u64,
    lloyd_iterations: usize,
    perturbation: f64,
) -> Result<PolygonalMesh> {
    if n_seeds == 0 {
        return Err(Error::Mesh("voronoi mesh needs at least one seed".into()));
    }
    if !(0.0..0.5).contains(&perturbation) {
        return Err(Error::Mesh(format!(
            "perturbation {perturbation} outside [0, 0.5)"
        )));
    }
    let cells = rectangle_cells(n_seeds, domain, rng_seed, lloyd_iterations)?;
    let (vertices, elements) = weld_cells(&cells, domain.width().max(domain.height()))?;
    let (vertices, elements) = if perturbation > 0.0 {
        super::voronoi::perturb_interior_vertices(vertices, elements, perturbation, rng_seed)?
    } else {
        (vertices, elements)
    };
    let partition = BoundaryPartition::all_dirichlet();
    let tol_x = 1e-8 * domain.width();
    let tol_y = 1e-8 * domain.height();
    let mesh = PolygonalMesh::build_with_tagger(vertices, elements, &|a, b| {
        let m = 0.5 * (a + b);
        let on_rect = (m.x - domain.x0).abs() < tol_x
            || (m.x - domain.x1).abs() < tol_x
            || (m.y - domain.y0).abs() < tol_y
            || (m.y - domain.y1).abs() < tol_y;
        debug_assert!(on_rect, "boundary edge off the rectangle: {m:?}");
        partition.tag(a, b)
    })?;
    Ok(mesh)
}

/// Voronoi mesh of the annulus rho_i < |x| < rho_o centred at the origin.
/// Inner and outer boundary edges carry the `Inner`/`Outer` tags.
pub fn generate_annulus_mesh(
    rho_i: f64,
    rho_o: f64,
    n_seeds: usize,
    rng_seed: u64,
) -> Result<PolygonalMesh> {
    if !(rho_i > 0.0 && rho_i < rho_o) {
        return Err(Error::Mesh(format!(
            "annulus radii must satisfy 0 < rho_i < rho_o, got ({rho_i}, {rho_o})"
        )));
    }
    if n_seeds == 0 {
        return Err(Error::Mesh("annulus mesh needs at least one seed".into()));
    }
    let cells = annulus_cells(rho_i, rho_o, n_seeds, rng_seed)?;
    let (vertices, elements) = weld_cells(&cells, 2.0 * rho_o)?;
    let r_mid = 0.5 * (rho_i + rho_o);
    PolygonalMesh::build_with_tagger(vertices, elements, &|a, b| {
        let m = 0.5 * (a + b);
        if m.norm() < r_mid {
            BoundaryTag::Inner
        } else {
            BoundaryTag::Outer
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryTag;
    use approx::assert_relative_eq;

    #[test]
    fn voronoi_single_seed_is_the_square() {
        let mesh = generate_voronoi_mesh(1, Rect::unit(), 7, 0, 0.0).unwrap();
        assert_eq!(mesh.n_elements(), 1);
        assert_eq!(mesh.n_vertices(), 4);
        assert_relative_eq!(mesh.total_area(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn voronoi_is_deterministic() {
        let a = generate_voronoi_mesh(100, Rect::unit(), 42, 2, 0.0).unwrap();
        let b = generate_voronoi_mesh(100, Rect::unit(), 42, 2, 0.0).unwrap();
        assert_eq!(a.n_vertices(), b.n_vertices());
        assert_eq!(a.n_elements(), b.n_elements());
        for (p, q) in a.vertices().iter().zip(b.vertices()) {
            assert_eq!(p, q);
        }
        for e in 0..a.n_elements() {
            assert_eq!(a.element_vertices(e), b.element_vertices(e));
        }
    }

    #[test]
    fn voronoi_partitions_the_domain() {
        for seed in [1u64, 9, 1234] {
            let mesh = generate_voronoi_mesh(60, Rect::unit(), seed, 1, 0.0).unwrap();
            assert_relative_eq!(mesh.total_area(), 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn perturbed_voronoi_keeps_connectivity_and_area() {
        let base = generate_voronoi_mesh(80, Rect::unit(), 5, 2, 0.0).unwrap();
        let pert = generate_voronoi_mesh(80, Rect::unit(), 5, 2, 0.2).unwrap();
        assert_eq!(base.n_vertices(), pert.n_vertices());
        assert_eq!(base.n_edges(), pert.n_edges());
        assert_eq!(base.n_elements(), pert.n_elements());
        assert_relative_eq!(pert.total_area(), 1.0, max_relative = 1e-10);
        let moved = base
            .vertices()
            .iter()
            .zip(pert.vertices())
            .filter(|(p, q)| (*p - *q).norm() > 1e-12)
            .count();
        assert!(moved > 0, "perturbation moved no vertex");
    }

    #[test]
    fn annulus_area_and_tags() {
        let mesh = generate_annulus_mesh(1.0, 5.0, 400, 3).unwrap();
        let exact = std::f64::consts::PI * (25.0 - 1.0);
        assert_relative_eq!(mesh.total_area(), exact, max_relative = 0.01);
        let mut inner = 0;
        let mut outer = 0;
        for (_, tag) in mesh.boundary_edges() {
            match tag {
                BoundaryTag::Inner => inner += 1,
                BoundaryTag::Outer => outer += 1,
                other => panic!("unexpected tag {other:?}"),
            }
        }
        assert!(inner >= 3, "inner boundary edges: {inner}");
        assert!(outer >= 3, "outer boundary edges: {outer}");
    }

    #[test]
    fn annulus_area_value() {
        // rho_i = 1, rho_o = 5 -> area = 24 pi = 75.398.
        let mesh = generate_annulus_mesh(1.0, 5.0, 600, 11).unwrap();
        assert_relative_eq!(mesh.total_area(), 75.398, max_relative = 0.01);
    }
}
