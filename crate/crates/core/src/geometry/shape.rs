use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;

/// A point of R^d stored with unused trailing coordinates set to zero (d <= 3).
pub type Point = [f64; 3];

const GEO_TOL: f64 = 1e-12;

/// Boundary description for shapes given by a membership predicate rather than a vertex list.
///
/// Implementors supply the boundary parametrization used for the boundary partition and for
/// exact boundary integrals, since neither can be recovered from the predicate alone.
pub trait ImplicitShape: Send + Sync {
    fn dim(&self) -> usize;
    fn contains(&self, p: &Point) -> bool;
    fn boundary_distance(&self, p: &Point) -> f64;
    fn bounding_box(&self) -> (Point, Point);
    fn volume(&self) -> f64;
    fn surface_measure(&self) -> f64;
    /// Splits the boundary into pieces of measure close to `target`.
    fn boundary_pieces(&self, target: f64) -> Vec<BoundaryPiece>;
    fn integrate_boundary(&self, f: &dyn Fn(&Point) -> f64) -> f64;
    fn name(&self) -> String;
}

/// Open disk in the plane.
#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl ImplicitShape for Disk {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, p: &Point) -> bool {
        let r = (p[0] - self.center[0]).hypot(p[1] - self.center[1]);
        r < self.radius - GEO_TOL
    }

    fn boundary_distance(&self, p: &Point) -> f64 {
        ((p[0] - self.center[0]).hypot(p[1] - self.center[1]) - self.radius).abs()
    }

    fn bounding_box(&self) -> (Point, Point) {
        let [cx, cy] = self.center;
        let r = self.radius;
        ([cx - r, cy - r, 0.0], [cx + r, cy + r, 0.0])
    }

    fn volume(&self) -> f64 {
        PI * self.radius * self.radius
    }

    fn surface_measure(&self) -> f64 {
        2.0 * PI * self.radius
    }

    fn boundary_pieces(&self, target: f64) -> Vec<BoundaryPiece> {
        let count = (self.surface_measure() / target).ceil().max(1.0) as usize;
        let dphi = 2.0 * PI / count as f64;
        (0..count)
            .map(|k| BoundaryPiece::Arc {
                center: self.center,
                radius: self.radius,
                start: k as f64 * dphi,
                end: (k + 1) as f64 * dphi,
            })
            .collect()
    }

    fn integrate_boundary(&self, f: &dyn Fn(&Point) -> f64) -> f64 {
        // Periodic trapezoid rule: spectrally accurate for smooth integrands.
        let n = 4096;
        let dphi = 2.0 * PI / n as f64;
        let sum: f64 = (0..n)
            .map(|k| {
                let phi = k as f64 * dphi;
                let p = [
                    self.center[0] + self.radius * phi.cos(),
                    self.center[1] + self.radius * phi.sin(),
                    0.0,
                ];
                f(&p)
            })
            .sum();
        sum * dphi * self.radius
    }

    fn name(&self) -> String {
        format!("disk(r={})", self.radius)
    }
}

/// Geometric shape of the domain.
#[derive(Clone)]
pub enum Shape {
    /// Axis-aligned open box, per-axis intervals `(lo[i], hi[i])`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Simple closed polygon in the plane; the closing edge is implicit.
    Polygon { vertices: Vec<[f64; 2]> },
    Implicit(Arc<dyn ImplicitShape>),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Box { lo, hi } => f.debug_struct("Box").field("lo", lo).field("hi", hi).finish(),
            Shape::Polygon { vertices } => f.debug_struct("Polygon").field("vertices", vertices).finish(),
            Shape::Implicit(s) => write!(f, "Implicit({})", s.name()),
        }
    }
}

/// One cell of a boundary partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPiece {
    Segment { a: [f64; 2], b: [f64; 2] },
    Arc { center: [f64; 2], radius: f64, start: f64, end: f64 },
    /// Axis-aligned patch of a box face; one axis is degenerate (`lo == hi`).
    Patch { lo: Point, hi: Point, dim: usize },
}

impl BoundaryPiece {
    pub fn measure(&self) -> f64 {
        match *self {
            BoundaryPiece::Segment { a, b } => (b[0] - a[0]).hypot(b[1] - a[1]),
            BoundaryPiece::Arc { radius, start, end, .. } => radius * (end - start),
            BoundaryPiece::Patch { lo, hi, dim } => {
                (0..dim).map(|i| hi[i] - lo[i]).filter(|w| *w > 0.0).product()
            }
        }
    }

    pub fn midpoint(&self) -> Point {
        match *self {
            BoundaryPiece::Segment { a, b } => [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, 0.0],
            BoundaryPiece::Arc { center, radius, start, end } => {
                let phi = (start + end) / 2.0;
                [center[0] + radius * phi.cos(), center[1] + radius * phi.sin(), 0.0]
            }
            BoundaryPiece::Patch { lo, hi, .. } => {
                [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, (lo[2] + hi[2]) / 2.0]
            }
        }
    }

    /// Euclidean distance from `p` to the closed piece.
    pub fn distance(&self, p: &Point) -> f64 {
        match *self {
            BoundaryPiece::Segment { a, b } => point_segment_distance([p[0], p[1]], a, b),
            BoundaryPiece::Arc { center, radius, start, end } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let mut phi = dy.atan2(dx);
                while phi < start {
                    phi += 2.0 * PI;
                }
                if phi <= end {
                    (dx.hypot(dy) - radius).abs()
                } else {
                    let ea = [center[0] + radius * start.cos(), center[1] + radius * start.sin()];
                    let eb = [center[0] + radius * end.cos(), center[1] + radius * end.sin()];
                    (p[0] - ea[0]).hypot(p[1] - ea[1]).min((p[0] - eb[0]).hypot(p[1] - eb[1]))
                }
            }
            BoundaryPiece::Patch { lo, hi, dim } => (0..dim)
                .map(|i| {
                    let c = p[i].clamp(lo[i], hi[i]);
                    (p[i] - c) * (p[i] - c)
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Geometric description of a bounded Lipschitz domain containing the origin.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    dim: usize,
    shape: Shape,
    lipschitz_constant: f64,
}

impl DomainSpec {
    pub fn new(shape: Shape, lipschitz_constant: f64) -> Result<Self> {
        let dim = match &shape {
            Shape::Box { lo, hi } => {
                if lo.len() != hi.len() || !(2..=3).contains(&lo.len()) {
                    return Err(Error::InvalidDomain(
                        "box needs matching lo/hi of dimension 2 or 3".into(),
                    ));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::InvalidDomain("box needs lo < hi on every axis".into()));
                }
                lo.len()
            }
            Shape::Polygon { vertices } => {
                validate_polygon(vertices)?;
                2
            }
            Shape::Implicit(s) => s.dim(),
        };
        if !(lipschitz_constant >= 1.0) {
            return Err(Error::InvalidDomain(format!(
                "Lipschitz constant must be >= 1, got {lipschitz_constant}"
            )));
        }
        let spec = DomainSpec { dim, shape, lipschitz_constant };
        if !spec.contains(&[0.0; 3]) {
            return Err(Error::InvalidDomain("origin must lie strictly inside the domain".into()));
        }
        Ok(spec)
    }

    /// The open square `(-1/2, 1/2)^2` with `M = 1`.
    pub fn unit_square() -> Self {
        Self::new(Shape::Box { lo: vec![-0.5, -0.5], hi: vec![0.5, 0.5] }, 1.0)
            .expect("unit square is a valid domain")
    }

    pub fn unit_cube() -> Self {
        Self::new(Shape::Box { lo: vec![-0.5; 3], hi: vec![0.5; 3] }, 1.0)
            .expect("unit cube is a valid domain")
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(Shape::Implicit(Arc::new(Disk { center: [0.0, 0.0], radius })), 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz_constant
    }

    /// Cross-edge and cell-assignment radius `eps * (1 + M^2)^{1/2}`.
    pub fn transport_radius(&self, eps: f64) -> f64 {
        eps * (1.0 + self.lipschitz_constant * self.lipschitz_constant).sqrt()
    }

    /// Membership in the open domain.
    pub fn contains(&self, p: &Point) -> bool {
        match &self.shape {
            Shape::Box { lo, hi } => {
                (0..lo.len()).all(|i| p[i] > lo[i] + GEO_TOL && p[i] < hi[i] - GEO_TOL)
            }
            Shape::Polygon { vertices } => {
                let q = [p[0], p[1]];
                polygon_boundary_distance(vertices, q) > GEO_TOL && point_in_polygon(vertices, q)
            }
            Shape::Implicit(s) => s.contains(p),
        }
    }

    /// Whether the closed segment `[a, b]` lies inside the open domain.
    pub fn segment_inside(&self, a: &Point, b: &Point) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        match &self.shape {
            Shape::Box { .. } => true,
            Shape::Polygon { vertices } => {
                let (p, q) = ([a[0], a[1]], [b[0], b[1]]);
                let n = vertices.len();
                (0..n).all(|i| !segments_intersect(p, q, vertices[i], vertices[(i + 1) % n]))
            }
            Shape::Implicit(s) => (1..=8).all(|k| {
                let t = k as f64 / 9.0;
                let m = [
                    a[0] + t * (b[0] - a[0]),
                    a[1] + t * (b[1] - a[1]),
                    a[2] + t * (b[2] - a[2]),
                ];
                s.contains(&m)
            }),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Box { lo, hi } => {
                let mut l = [0.0; 3];
                let mut h = [0.0; 3];
                l[..lo.len()].copy_from_slice(lo);
                h[..hi.len()].copy_from_slice(hi);
                (l, h)
            }
            Shape::Polygon { vertices } => {
                let mut l = [f64::INFINITY, f64::INFINITY, 0.0];
                let mut h = [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0];
                for v in vertices {
                    for i in 0..2 {
                        l[i] = l[i].min(v[i]);
                        h[i] = h[i].max(v[i]);
                    }
                }
                (l, h)
            }
            Shape::Implicit(s) => s.bounding_box(),
        }
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            Shape::Polygon { vertices } => shoelace(vertices).abs(),
            Shape::Implicit(s) => s.volume(),
        }
    }

    /// Total surface measure of the boundary.
    pub fn surface_measure(&self) -> f64 {
        match &self.shape {
            Shape::Box { .. } => self.box_faces().iter().map(|(_, _, area)| area).sum(),
            Shape::Polygon { vertices } => polygon_edges(vertices)
                .map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1]))
                .sum(),
            Shape::Implicit(s) => s.surface_measure(),
        }
    }

    /// Boundary integral of `f` against surface measure, by high-order quadrature.
    pub fn integrate_boundary(&self, f: &dyn Fn(&Point) -> f64) -> f64 {
        let (nodes, weights) = gauss_legendre(16);
        match &self.shape {
            Shape::Polygon { vertices } => polygon_edges(vertices)
                .map(|(a, b)| {
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let s: f64 = nodes
                        .iter()
                        .zip(&weights)
                        .map(|(x, w)| {
                            let t = 0.5 * (x + 1.0);
                            w * f(&[a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0])
                        })
                        .sum();
                    0.5 * len * s
                })
                .sum(),
            Shape::Box { .. } => {
                // Tensor Gauss-Legendre on each face; exact for the polynomial test family.
                self.box_faces()
                    .iter()
                    .map(|(lo, hi, area)| {
                        let free: Vec<usize> = (0..self.dim).filter(|&i| hi[i] > lo[i]).collect();
                        let mut total = 0.0;
                        let mut idx = vec![0usize; free.len()];
                        loop {
                            let mut p = *lo;
                            let mut w = 1.0;
                            for (k, &axis) in free.iter().enumerate() {
                                let t = 0.5 * (nodes[idx[k]] + 1.0);
                                p[axis] = lo[axis] + t * (hi[axis] - lo[axis]);
                                w *= 0.5 * weights[idx[k]];
                            }
                            total += w * f(&p);
                            let mut k = 0;
                            while k < idx.len() {
                                idx[k] += 1;
                                if idx[k] < nodes.len() {
                                    break;
                                }
                                idx[k] = 0;
                                k += 1;
                            }
                            if k == idx.len() {
                                break;
                            }
                        }
                        total * area
                    })
                    .sum()
            }
            Shape::Implicit(s) => s.integrate_boundary(f),
        }
    }

    /// Faces of a box shape as degenerate axis-aligned boxes with their areas.
    fn box_faces(&self) -> Vec<(Point, Point, f64)> {
        let Shape::Box { lo, hi } = &self.shape else {
            return Vec::new();
        };
        let d = lo.len();
        let mut faces = Vec::with_capacity(2 * d);
        for axis in 0..d {
            for side in [lo[axis], hi[axis]] {
                let mut l = [0.0; 3];
                let mut h = [0.0; 3];
                l[..d].copy_from_slice(lo);
                h[..d].copy_from_slice(hi);
                l[axis] = side;
                h[axis] = side;
                let area: f64 = (0..d).filter(|&i| i != axis).map(|i| hi[i] - lo[i]).product();
                faces.push((l, h, area));
            }
        }
        faces
    }

    /// Boundary cells of measure close to `target` (the partition before site assignment).
    pub fn boundary_pieces(&self, target: f64) -> Vec<BoundaryPiece> {
        match &self.shape {
            Shape::Polygon { vertices } => {
                let mut pieces = Vec::new();
                for (a, b) in polygon_edges(vertices) {
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let count = (len / target - 1e-9).ceil().max(1.0) as usize;
                    for k in 0..count {
                        let t0 = k as f64 / count as f64;
                        let t1 = (k + 1) as f64 / count as f64;
                        pieces.push(BoundaryPiece::Segment {
                            a: [a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1])],
                            b: [a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1])],
                        });
                    }
                }
                pieces
            }
            Shape::Box { .. } => {
                // Each free axis of a face is cut into pieces no longer than target^{1/(d-1)}.
                let side = target.powf(1.0 / (self.dim as f64 - 1.0));
                let mut pieces = Vec::new();
                for (lo, hi, _) in self.box_faces() {
                    let free: Vec<usize> = (0..self.dim).filter(|&i| hi[i] > lo[i]).collect();
                    let counts: Vec<usize> = free
                        .iter()
                        .map(|&i| ((hi[i] - lo[i]) / side - 1e-9).ceil().max(1.0) as usize)
                        .collect();
                    let mut idx = vec![0usize; free.len()];
                    loop {
                        let mut l = lo;
                        let mut h = hi;
                        for (k, &axis) in free.iter().enumerate() {
                            let w = (hi[axis] - lo[axis]) / counts[k] as f64;
                            l[axis] = lo[axis] + idx[k] as f64 * w;
                            h[axis] = lo[axis] + (idx[k] + 1) as f64 * w;
                        }
                        pieces.push(BoundaryPiece::Patch { lo: l, hi: h, dim: self.dim });
                        let mut k = 0;
                        while k < idx.len() {
                            idx[k] += 1;
                            if idx[k] < counts[k] {
                                break;
                            }
                            idx[k] = 0;
                            k += 1;
                        }
                        if k == idx.len() {
                            break;
                        }
                    }
                }
                pieces
            }
            Shape::Implicit(s) => s.boundary_pieces(target),
        }
    }
}

fn validate_polygon(vertices: &[[f64; 2]]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
    }
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if (a[0] - b[0]).hypot(a[1] - b[1]) <= GEO_TOL {
            return Err(Error::InvalidDomain(format!("polygon edge {i} is degenerate")));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidDomain(format!(
                    "polygon is not simple: edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

fn polygon_edges(vertices: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| (vertices[i], vertices[(i + 1) % n]))
}

fn shoelace(vertices: &[[f64; 2]]) -> f64 {
    polygon_edges(vertices).map(|(a, b)| a[0] * b[1] - b[0] * a[1]).sum::<f64>() / 2.0
}

fn point_in_polygon(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(vertices) {
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_boundary_distance(vertices: &[[f64; 2]], p: [f64; 2]) -> f64 {
    polygon_edges(vertices)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) - GEO_TOL
        && p[0] <= a[0].max(b[0]) + GEO_TOL
        && p[1] >= a[1].min(b[1]) - GEO_TOL
        && p[1] <= a[1].max(b[1]) + GEO_TOL
}

/// Closed-segment intersection test; touching counts as intersecting.
pub(crate) fn segments_intersect(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let d1 = orient(a, b, p);
    let d2 = orient(a, b, q);
    let d3 = orient(p, q, a);
    let d4 = orient(p, q, b);
    let s = |v: f64| if v > GEO_TOL { 1 } else if v < -GEO_TOL { -1 } else { 0 };
    let (s1, s2, s3, s4) = (s(d1), s(d2), s(d3), s(d4));
    if s1 * s2 < 0 && s3 * s4 < 0 {
        return true;
    }
    (s1 == 0 && on_segment(a, b, p))
        || (s2 == 0 && on_segment(a, b, q))
        || (s3 == 0 && on_segment(p, q, a))
        || (s4 == 0 && on_segment(p, q, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_membership_is_open() {
        let d = DomainSpec::unit_square();
        assert!(d.contains(&[0.0, 0.0, 0.0]));
        assert!(d.contains(&[0.49, -0.49, 0.0]));
        assert!(!d.contains(&[0.5, 0.0, 0.0]));
        assert!(!d.contains(&[0.25, 0.5, 0.0]));
    }

    #[test]
    fn origin_outside_is_rejected() {
        let shape = Shape::Box { lo: vec![0.1, -1.0], hi: vec![1.0, 1.0] };
        assert!(matches!(DomainSpec::new(shape, 1.0), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn small_lipschitz_constant_is_rejected() {
        let shape = Shape::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        assert!(DomainSpec::new(shape, 0.5).is_err());
    }

    #[test]
    fn self_intersecting_polygon_is_rejected() {
        let bowtie = vec![[-1.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]];
        assert!(DomainSpec::new(Shape::Polygon { vertices: bowtie }, 1.0).is_err());
    }

    #[test]
    fn nonconvex_polygon_blocks_segments_across_the_notch() {
        // L-shape with the notch in the upper-right quadrant.
        let l = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.2], [0.2, 0.2], [0.2, 1.0], [-1.0, 1.0]];
        let d = DomainSpec::new(Shape::Polygon { vertices: l }, 2.0).unwrap();
        assert!(d.segment_inside(&[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0]));
        assert!(!d.segment_inside(&[0.6, 0.1, 0.0], &[0.6, 0.3, 0.0]));
        assert!((d.volume() - (4.0 - 0.64)).abs() < 1e-12);
        assert!((d.surface_measure() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_integrals_match_closed_forms() {
        let d = DomainSpec::unit_square();
        assert!((d.integrate_boundary(&|_| 1.0) - 4.0).abs() < 1e-13);
        assert!(d.integrate_boundary(&|p| p[0]).abs() < 1e-13);
        // x^2 over the square's boundary: two sides at x = +-1/2 give 1/4 each, two sides give 1/12 each.
        let x2 = d.integrate_boundary(&|p| p[0] * p[0]);
        assert!((x2 - (0.5 + 1.0 / 6.0)).abs() < 1e-13);
        let disk = DomainSpec::disk(0.4).unwrap();
        assert!((disk.integrate_boundary(&|_| 1.0) - 2.0 * PI * 0.4).abs() < 1e-12);
        let cube = DomainSpec::unit_cube();
        assert!((cube.integrate_boundary(&|_| 1.0) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn piece_distances() {
        let seg = BoundaryPiece::Segment { a: [0.0, 0.5], b: [0.25, 0.5] };
        assert!((seg.distance(&[0.0, 0.25, 0.0]) - 0.25).abs() < 1e-15);
        assert!((seg.distance(&[-0.25, 0.25, 0.0]) - 0.125f64.sqrt()).abs() < 1e-15);
        let arc = BoundaryPiece::Arc { center: [0.0, 0.0], radius: 1.0, start: 0.0, end: PI / 2.0 };
        assert!((arc.distance(&[0.5, 0.5, 0.0]) - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((arc.measure() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn square_partition_has_sixteen_quarter_cells() {
        let pieces = DomainSpec::unit_square().boundary_pieces(0.25);
        assert_eq!(pieces.len(), 16);
        assert!(pieces.iter().all(|p| (p.measure() - 0.25).abs() < 1e-15));
    }
}
