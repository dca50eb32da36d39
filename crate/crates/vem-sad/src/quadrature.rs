//! Numerical integration on edges and simple polygons.
//!
//! Polygon rules are built by triangulating the element (fan from the
//! centroid when the centroid sees the whole boundary, ear clipping
//! otherwise) and placing a tensorized Gauss rule on each triangle through
//! the Duffy transform. The rule of requested degree `d` integrates every
//! bivariate polynomial of total degree <= d exactly, up to rounding.

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Exact for polynomials of degree 2n-1. Nodes are computed by Newton
/// iteration on the Legendre polynomial, which is deterministic and accurate
/// to machine precision for the sizes used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of the `p`-point Gauss-Lobatto rule on [-1, 1].
///
/// For p >= 2 the nodes include both endpoints and the rule is exact for
/// polynomials of degree 2p-3. The degenerate p = 1 case is taken as the
/// midpoint rule, which is the convention used for the lowest-order edge
/// degrees of freedom.
pub fn gauss_lobatto(p: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1);
    match p {
        1 => (vec![0.0], vec![2.0]),
        2 => (vec![-1.0, 1.0], vec![1.0, 1.0]),
        _ => {
            let n = p - 1;
            let mut nodes = vec![0.0; p];
            let mut weights = vec![0.0; p];
            nodes[0] = -1.0;
            nodes[p - 1] = 1.0;
            // Interior nodes are the roots of P'_{p-1}; seeded from the
            // Chebyshev-Gauss-Lobatto points.
            for i in 1..p - 1 {
                let mut x = (std::f64::consts::PI * i as f64 / n as f64).cos();
                for _ in 0..100 {
                    let (pn, dp) = legendre_with_deriv(n, x);
                    // Newton on P'_n using P''_n from the Legendre ODE:
                    // (1-x^2) P'' = 2x P' - n(n+1) P.
                    let d2 = (2.0 * x * dp - (n * (n + 1)) as f64 * pn) / (1.0 - x * x);
                    let dx = dp / d2;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        break;
                    }
                }
                nodes[p - 1 - i] = x;
            }
            for i in 0..p {
                let (pn, _) = legendre_with_deriv(n, nodes[i]);
                weights[i] = 2.0 / ((n * (n + 1)) as f64 * pn * pn);
            }
            (nodes, weights)
        }
    }
}

/// Quadrature points and weights on the straight segment [a, b].
///
/// Nodes are ordered from `a` to `b`; weights sum to |b - a|.
pub fn edge_gauss(a: Vector2<f64>, b: Vector2<f64>, n: usize) -> (Vec<Vector2<f64>>, Vec<f64>) {
    let (t, w) = gauss_legendre(n);
    map_reference_rule(a, b, &t, &w)
}

/// Gauss-Lobatto points and weights mapped onto the segment [a, b].
///
/// p = 1 gives the midpoint, p = 2 the endpoints, p = 3 endpoints plus
/// midpoint with reference weights {1/3, 4/3, 1/3}.
pub fn edge_gauss_lobatto(
    a: Vector2<f64>,
    b: Vector2<f64>,
    p: usize,
) -> (Vec<Vector2<f64>>, Vec<f64>) {
    let (t, w) = gauss_lobatto(p);
    map_reference_rule(a, b, &t, &w)
}

fn map_reference_rule(
    a: Vector2<f64>,
    b: Vector2<f64>,
    t: &[f64],
    w: &[f64],
) -> (Vec<Vector2<f64>>, Vec<f64>) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let scale = 0.5 * (b - a).norm();
    let pts = t.iter().map(|&s| mid + half * s).collect();
    let ws = w.iter().map(|&wi| wi * scale).collect();
    (pts, ws)
}

/// A quadrature rule over a polygonal element.
#[derive(Debug, Clone)]
pub struct PolygonQuadrature {
    pub points: Vec<Vector2<f64>>,
    pub weights: Vec<f64>,
    /// Polynomial total degree integrated exactly.
    pub degree: usize,
}

impl PolygonQuadrature {
    pub fn integrate(&self, f: impl Fn(Vector2<f64>) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Builds a rule of exactness degree `d` on the simple polygon `vertices`
/// (counter-clockwise).
pub fn polygon_quadrature(vertices: &[Vector2<f64>], d: usize) -> Result<PolygonQuadrature> {
    let tris = triangulate(vertices)?;
    let (tn, tw) = duffy_rule(d);
    let mut points = Vec::with_capacity(tris.len() * tn.len());
    let mut weights = Vec::with_capacity(tris.len() * tn.len());
    for [p0, p1, p2] in tris {
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let det = e1.x * e2.y - e1.y * e2.x;
        for (uv, &w) in tn.iter().zip(&tw) {
            points.push(p0 + e1 * uv.x + e2 * uv.y);
            weights.push(w * det);
        }
    }
    Ok(PolygonQuadrature {
        points,
        weights,
        degree: d,
    })
}

/// Tensorized Gauss rule on the reference triangle {u >= 0, v >= 0, u+v <= 1}
/// via the Duffy substitution x = u, y = (1-u) v. Exact for total degree d.
fn duffy_rule(d: usize) -> (Vec<Vector2<f64>>, Vec<f64>) {
    let n = (d + 3) / 2;
    let (t, w) = gauss_legendre(n);
    // Map [-1,1] -> [0,1].
    let s: Vec<f64> = t.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    let ws: Vec<f64> = w.iter().map(|&x| 0.5 * x).collect();
    let mut pts = Vec::with_capacity(n * n);
    let mut wts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = s[i];
            let v = s[j];
            pts.push(Vector2::new(u, (1.0 - u) * v));
            wts.push(ws[i] * ws[j] * (1.0 - u));
        }
    }
    (pts, wts)
}

/// Splits a simple polygon into triangles.
///
/// Fast path: fan from the centroid, valid whenever the centroid lies in the
/// polygon's kernel (always true for convex elements). Otherwise falls back
/// to ear clipping, which handles any simple polygon.
pub fn triangulate(vertices: &[Vector2<f64>]) -> Result<Vec<[Vector2<f64>; 3]>> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Geometry(format!("polygon with {n} vertices")));
    }
    let c = polygon_centroid(vertices)?;
    if centroid_in_kernel(vertices, c) {
        let mut tris = Vec::with_capacity(n);
        for i in 0..n {
            tris.push([c, vertices[i], vertices[(i + 1) % n]]);
        }
        return Ok(tris);
    }
    ear_clip(vertices)
}

/// Signed area of a polygon loop (positive for counter-clockwise).
pub fn signed_area(vertices: &[Vector2<f64>]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(vertices: &[Vector2<f64>]) -> Result<Vector2<f64>> {
    let a = signed_area(vertices);
    if a.abs() < f64::EPSILON {
        return Err(Error::Geometry("zero-area polygon".into()));
    }
    let n = vertices.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let cross = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    Ok(Vector2::new(cx / (6.0 * a), cy / (6.0 * a)))
}

/// True if `c` lies weakly to the left of every directed edge of the CCW
/// polygon, i.e. the fan from `c` covers the polygon without folds.
fn centroid_in_kernel(vertices: &[Vector2<f64>], c: Vector2<f64>) -> bool {
    let n = vertices.len();
    let scale = vertices
        .iter()
        .map(|v| (v - c).norm())
        .fold(0.0f64, f64::max);
    let tol = -1e-12 * scale * scale;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if cross < tol {
            return false;
        }
    }
    true
}

fn ear_clip(vertices: &[Vector2<f64>]) -> Result<Vec<[Vector2<f64>; 3]>> {
    let mut idx: Vec<usize> = (0..vertices.len()).collect();
    let mut tris = Vec::with_capacity(vertices.len() - 2);
    let mut guard = 0usize;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for i in 0..m {
            let ia = idx[(i + m - 1) % m];
            let ib = idx[i];
            let ic = idx[(i + 1) % m];
            if is_ear(vertices, &idx, ia, ib, ic) {
                tris.push([vertices[ia], vertices[ib], vertices[ic]]);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::Geometry(
                "ear clipping failed; polygon is degenerate or self-intersecting".into(),
            ));
        }
        guard += 1;
        if guard > vertices.len() * vertices.len() {
            return Err(Error::Geometry("ear clipping did not terminate".into()));
        }
    }
    tris.push([vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]]);
    Ok(tris)
}

fn is_ear(vertices: &[Vector2<f64>], active: &[usize], ia: usize, ib: usize, ic: usize) -> bool {
    let a = vertices[ia];
    let b = vertices[ib];
    let c = vertices[ic];
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if cross <= 0.0 {
        return false;
    }
    for &j in active {
        if j == ia || j == ib || j == ic {
            continue;
        }
        if point_in_triangle(vertices[j], a, b, c) {
            return false;
        }
    }
    true
}

fn point_in_triangle(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> bool {
    let s0 = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let s1 = (c.x - b.x) * (p.y - b.y) - (c.y - b.y) * (p.x - b.x);
    let s2 = (a.x - c.x) * (p.y - c.y) - (a.y - c.y) * (p.x - c.x);
    s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0
}

/// Exact monomial moment ∫_E x^a y^b over a CCW polygon, evaluated through
/// the divergence theorem with 1D Gauss rules on the edges. Serves as an
/// independent oracle for the 2D rules above.
pub fn moment_by_divergence_theorem(vertices: &[Vector2<f64>], a: u32, b: u32) -> f64 {
    // ∫ x^a y^b = 1/(a+1) ∮ x^(a+1) y^b n_x ds
    let n = vertices.len();
    let deg1d = (a + b + 1) as usize;
    let npts = deg1d / 2 + 1;
    let mut total = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        let len = (q - p).norm();
        if len == 0.0 {
            continue;
        }
        let nx = (q.y - p.y) / len;
        let (pts, ws) = edge_gauss(p, q, npts);
        for (pt, w) in pts.iter().zip(&ws) {
            total += w * nx * pt.x.powi(a as i32 + 1) * pt.y.powi(b as i32);
        }
    }
    total / (a as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Vec<Vector2<f64>> {
        vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            for d in 0..=(2 * n - 1) {
                let num: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(d as i32)).sum();
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert_relative_eq!(num, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gauss_lobatto_small_orders() {
        let (x, w) = gauss_lobatto(1);
        assert_eq!(x, vec![0.0]);
        assert_eq!(w, vec![2.0]);

        let (x, w) = gauss_lobatto(2);
        assert_eq!(x, vec![-1.0, 1.0]);
        assert_eq!(w, vec![1.0, 1.0]);

        let (x, w) = gauss_lobatto(3);
        assert_relative_eq!(x[0], -1.0);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(x[2], 1.0);
        assert_relative_eq!(w[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(w[1], 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(w[2], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_lobatto_exactness() {
        // p-point rule is exact to degree 2p-3.
        for p in 2..=7 {
            let (x, w) = gauss_lobatto(p);
            for d in 0..=(2 * p - 3) {
                let num: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(d as i32)).sum();
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert_relative_eq!(num, exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lobatto_p3_integrates_cubics_on_edge() {
        let a = Vector2::new(0.2, -0.5);
        let b = Vector2::new(1.4, 0.9);
        let (pts, ws) = edge_gauss_lobatto(a, b, 3);
        // f(x, y) = (x + 2y)^3 along the segment is a cubic in arclength.
        let f = |p: Vector2<f64>| (p.x + 2.0 * p.y).powi(3);
        let num: f64 = pts.iter().zip(&ws).map(|(&p, &w)| w * f(p)).sum();
        let (gp, gw) = edge_gauss(a, b, 5);
        let exact: f64 = gp.iter().zip(&gw).map(|(&p, &w)| w * f(p)).sum();
        assert_relative_eq!(num, exact, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn edge_weights_sum_to_length() {
        let a = Vector2::new(0.0, 0.0);
        let b = Vector2::new(3.0, 4.0);
        let (_, w) = edge_gauss_lobatto(a, b, 2);
        assert_relative_eq!(w.iter().sum::<f64>(), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn polygon_rule_area_and_monomials() {
        let sq = unit_square();
        let q = polygon_quadrature(&sq, 6).unwrap();
        assert_relative_eq!(q.total_weight(), 1.0, epsilon = 1e-13);
        // ∫ x^2 y^2 over the unit square = 1/9.
        let v = q.integrate(|p| p.x * p.x * p.y * p.y);
        assert_relative_eq!(v, 1.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn polygon_rule_matches_divergence_moments() {
        // Irregular convex pentagon.
        let poly = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.2, -0.1),
            Vector2::new(1.5, 0.8),
            Vector2::new(0.6, 1.4),
            Vector2::new(-0.3, 0.7),
        ];
        let d = 6;
        let q = polygon_quadrature(&poly, d).unwrap();
        for a in 0..=d as u32 {
            for b in 0..=(d as u32 - a) {
                let num = q.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                let exact = moment_by_divergence_theorem(&poly, a, b);
                assert_relative_eq!(num, exact, epsilon = 1e-12, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn nonconvex_polygon_uses_ear_clipping() {
        // L-shape whose centroid does not see every edge.
        let poly = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(2.0, 0.0),
            Vector2::new(2.0, 0.5),
            Vector2::new(0.5, 0.5),
            Vector2::new(0.5, 2.0),
            Vector2::new(0.0, 2.0),
        ];
        let q = polygon_quadrature(&poly, 4).unwrap();
        assert_relative_eq!(q.total_weight(), 1.75, epsilon = 1e-12);
        let num = q.integrate(|p| p.x * p.y);
        let exact = moment_by_divergence_theorem(&poly, 1, 1);
        assert_relative_eq!(num, exact, epsilon = 1e-12);
    }

    #[test]
    fn centroid_of_square() {
        let c = polygon_centroid(&unit_square()).unwrap();
        assert_relative_eq!(c.x, 0.5);
        assert_relative_eq!(c.y, 0.5);
    }
}
