//! Clipped Voronoi cells by incremental half-plane clipping, Lloyd
//! relaxation, and vertex welding into a conforming mesh.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use super::generate::Rect;
use crate::error::{Error, Result};
use crate::quadrature::{polygon_centroid, signed_area};

type Cell = Vec<Vector2<f64>>;

/// Keeps the part of `poly` with (p - origin) . normal >= 0
/// (Sutherland-Hodgman against one half-plane; preserves CCW order).
fn clip_halfplane(poly: &Cell, origin: Vector2<f64>, normal: Vector2<f64>) -> Cell {
    let mut out = Cell::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let da = (a - origin).dot(&normal);
        let db = (b - origin).dot(&normal);
        if da >= 0.0 {
            out.push(a);
            if db < 0.0 {
                out.push(a + (b - a) * (da / (da - db)));
            }
        } else if db >= 0.0 {
            out.push(a + (b - a) * (da / (da - db)));
        }
    }
    out
}

/// Voronoi cell of `seeds[i]` clipped to `start`, considering `sites` as the
/// full generating set. Sites are visited by increasing distance with an
/// early exit once no further bisector can reach the current cell.
fn voronoi_cell(seed: Vector2<f64>, sites: &[Vector2<f64>], start: &Cell) -> Cell {
    let mut order: Vec<(f64, usize)> = sites
        .iter()
        .enumerate()
        .filter_map(|(j, &t)| {
            let d2 = (t - seed).norm_squared();
            (d2 > 0.0).then_some((d2, j))
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut cell = start.clone();
    for (d2, j) in order {
        if cell.len() < 3 {
            break;
        }
        let reach2 = cell
            .iter()
            .map(|v| (v - seed).norm_squared())
            .fold(0.0f64, f64::max);
        if d2 * 0.25 > reach2 {
            break;
        }
        let t = sites[j];
        let mid = 0.5 * (seed + t);
        let normal = seed - t;
        cell = clip_halfplane(&cell, mid, normal);
    }
    cell
}

fn sample_in_rect(rng: &mut ChaCha8Rng, rect: Rect) -> Vector2<f64> {
    Vector2::new(
        rect.x0 + rng.gen::<f64>() * rect.width(),
        rect.y0 + rng.gen::<f64>() * rect.height(),
    )
}

fn check_separation(seeds: &[Vector2<f64>], scale: f64) -> Result<()> {
    let tol2 = (1e-9 * scale).powi(2);
    for i in 0..seeds.len() {
        for j in i + 1..seeds.len() {
            if (seeds[i] - seeds[j]).norm_squared() < tol2 {
                return Err(Error::Mesh(format!(
                    "degenerate seed configuration: sites {i} and {j} coincide at \
                     ({:.12}, {:.12})",
                    seeds[i].x, seeds[i].y
                )));
            }
        }
    }
    Ok(())
}

/// Voronoi cells of random seeds in a rectangle, after `lloyd` centroidal
/// relaxation sweeps.
pub fn rectangle_cells(
    n_seeds: usize,
    domain: Rect,
    rng_seed: u64,
    lloyd: usize,
) -> Result<Vec<Cell>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds: Vec<Vector2<f64>> = (0..n_seeds).map(|_| sample_in_rect(&mut rng, domain)).collect();
    check_separation(&seeds, domain.width().max(domain.height()))?;
    let start = domain.corners();
    let mut cells = Vec::new();
    for sweep in 0..=lloyd {
        cells = seeds
            .iter()
            .map(|&s| voronoi_cell(s, &seeds, &start))
            .collect::<Vec<_>>();
        for (i, c) in cells.iter().enumerate() {
            if c.len() < 3 {
                return Err(Error::Mesh(format!("voronoi cell {i} collapsed")));
            }
        }
        if sweep < lloyd {
            for (s, c) in seeds.iter_mut().zip(&cells) {
                *s = polygon_centroid(c)?;
            }
        }
    }
    Ok(cells)
}

/// Voronoi cells covering the annulus rho_i < |x| < rho_o. Boundary edges
/// arise as bisectors between each seed and its circle-inverted mirror images,
/// so cells stay convex and the union approximates the annulus polygonally.
pub fn annulus_cells(
    rho_i: f64,
    rho_o: f64,
    n_seeds: usize,
    rng_seed: u64,
) -> Result<Vec<Cell>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let bbox = Rect::new(-rho_o, rho_o, -rho_o, rho_o);
    let mut seeds = Vec::with_capacity(n_seeds);
    let mut guard = 0usize;
    while seeds.len() < n_seeds {
        let p = sample_in_rect(&mut rng, bbox);
        let r = p.norm();
        if r > rho_i && r < rho_o {
            seeds.push(p);
        }
        guard += 1;
        if guard > 1000 * (n_seeds + 10) {
            return Err(Error::Mesh("annulus seed sampling did not terminate".into()));
        }
    }
    check_separation(&seeds, rho_o)?;

    let margin = 1.25 * rho_o;
    let start = Rect::new(-margin, margin, -margin, margin).corners();
    let mirrors = |seeds: &[Vector2<f64>]| -> Vec<Vector2<f64>> {
        let mut sites = seeds.to_vec();
        for &s in seeds {
            let r2 = s.norm_squared();
            sites.push(s * (rho_i * rho_i / r2));
            sites.push(s * (rho_o * rho_o / r2));
        }
        sites
    };

    // A few fixed relaxation sweeps for cell quality; seeds are pulled back
    // into the annulus if a centroid drifts across a circle.
    let mut cells: Vec<Cell> = Vec::new();
    for sweep in 0..=3 {
        let sites = mirrors(&seeds);
        cells = seeds
            .iter()
            .map(|&s| voronoi_cell(s, &sites, &start))
            .collect();
        for (i, c) in cells.iter().enumerate() {
            if c.len() < 3 {
                return Err(Error::Mesh(format!("annulus voronoi cell {i} collapsed")));
            }
        }
        if sweep < 3 {
            for (s, c) in seeds.iter_mut().zip(&cells) {
                let mut c = polygon_centroid(c)?;
                let r = c.norm();
                let lo = rho_i * 1.001;
                let hi = rho_o * 0.999;
                if r < lo {
                    c *= lo / r;
                } else if r > hi {
                    c *= hi / r;
                }
                *s = c;
            }
        }
    }
    Ok(cells)
}

/// Merges per-cell float vertices into a shared vertex list, matching points
/// that agree within 1e-9 of the domain scale.
pub fn weld_cells(cells: &[Cell], scale: f64) -> Result<(Vec<Vector2<f64>>, Vec<Vec<usize>>)> {
    let tol = 1e-9 * scale;
    let mut vertices: Vec<Vector2<f64>> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Vector2<f64>| ((p.x / tol).round() as i64, (p.y / tol).round() as i64);

    let mut find_or_insert = |p: Vector2<f64>, vertices: &mut Vec<Vector2<f64>>| -> usize {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = buckets.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if (vertices[id] - p).norm() <= tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = vertices.len();
        vertices.push(p);
        buckets.entry((kx, ky)).or_default().push(id);
        id
    };

    let mut elements = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let mut loop_: Vec<usize> = cell
            .iter()
            .map(|&p| find_or_insert(p, &mut vertices))
            .collect();
        loop_.dedup();
        while loop_.len() > 1 && loop_.first() == loop_.last() {
            loop_.pop();
        }
        if loop_.len() < 3 {
            return Err(Error::Mesh(format!(
                "voronoi cell {ci} degenerated to fewer than 3 distinct vertices"
            )));
        }
        elements.push(loop_);
    }
    Ok((vertices, elements))
}

/// Displaces interior vertices by a random offset of at most
/// `fraction` times the shortest incident edge, keeping every incident
/// element a valid positively-oriented polygon.
pub fn perturb_interior_vertices(
    mut vertices: Vec<Vector2<f64>>,
    elements: Vec<Vec<usize>>,
    fraction: f64,
    rng_seed: u64,
) -> Result<(Vec<Vector2<f64>>, Vec<Vec<usize>>)> {
    let nv = vertices.len();
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for loop_ in &elements {
        let m = loop_.len();
        for i in 0..m {
            let (a, b) = (loop_[i], loop_[(i + 1) % m]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut on_boundary = vec![false; nv];
    for (&(a, b), &c) in &edge_count {
        if c == 1 {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
    }
    let mut min_incident = vec![f64::INFINITY; nv];
    for (&(a, b), _) in &edge_count {
        let len = (vertices[a] - vertices[b]).norm();
        min_incident[a] = min_incident[a].min(len);
        min_incident[b] = min_incident[b].min(len);
    }
    let mut incident_elems: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (ei, loop_) in elements.iter().enumerate() {
        for &v in loop_ {
            incident_elems[v].push(ei);
        }
    }

    // Offset keeps vertex streams independent of the base sampling.
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    for v in 0..nv {
        if on_boundary[v] || !min_incident[v].is_finite() {
            continue;
        }
        let angle = rng.gen::<f64>() * std::f64::consts::TAU;
        let radius = rng.gen::<f64>();
        let mut step = fraction * min_incident[v] * radius;
        let dir = Vector2::new(angle.cos(), angle.sin());
        let original = vertices[v];
        let mut ok = false;
        for _ in 0..6 {
            vertices[v] = original + dir * step;
            if incident_elems[v].iter().all(|&ei| {
                let pts: Vec<Vector2<f64>> =
                    elements[ei].iter().map(|&u| vertices[u]).collect();
                signed_area(&pts) > 0.0
            }) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if !ok {
            vertices[v] = original;
        }
    }
    Ok((vertices, elements))
}
