use std::collections::{HashMap, VecDeque};

use super::shape::{DomainSpec, Point};
use crate::error::{Error, Result};

/// Integer coordinates of a point of `eps Z^d`, unused axes zero.
pub type GridIndex = [i64; 3];

/// Sites and nearest-neighbour structure of the origin component, before boundary weights.
#[derive(Debug, Clone)]
pub struct SiteLattice {
    pub eps: f64,
    pub dim: usize,
    /// Lexicographically sorted grid indices.
    pub grid: Vec<GridIndex>,
    pub points: Vec<Point>,
    pub neighbors: Vec<Vec<usize>>,
    /// Sites with fewer than `2d` in-domain neighbours.
    pub inner_boundary: Vec<usize>,
    /// Grid points of the open domain that are not connected to the origin.
    pub dropped_sites: usize,
}

impl SiteLattice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degree(&self, x: usize) -> usize {
        self.neighbors[x].len()
    }

    pub fn is_inner_boundary(&self, x: usize) -> bool {
        self.degree(x) < 2 * self.dim
    }

    /// Number of connected components found by BFS over the adjacency (1 for a valid lattice).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &self.neighbors[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }
}

pub fn grid_point(eps: f64, g: &GridIndex) -> Point {
    [g[0] as f64 * eps, g[1] as f64 * eps, g[2] as f64 * eps]
}

pub(crate) fn unit_steps(dim: usize) -> Vec<GridIndex> {
    let mut steps = Vec::with_capacity(2 * dim);
    for axis in 0..dim {
        for s in [-1i64, 1] {
            let mut e = [0i64; 3];
            e[axis] = s;
            steps.push(e);
        }
    }
    steps
}

fn add(a: &GridIndex, b: &GridIndex) -> GridIndex {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Connected component of the origin in `Omega ∩ eps Z^d`, where `x ~ y` iff `|x - y| = eps`
/// and the closed segment `[x, y]` lies in the open domain.
pub fn build_lattice(domain: &DomainSpec, eps: f64) -> Result<SiteLattice> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    let dim = domain.dim();
    let origin = [0i64; 3];
    if !domain.contains(&grid_point(eps, &origin)) {
        return Err(Error::InvalidDomain("origin must lie strictly inside the domain".into()));
    }
    let steps = unit_steps(dim);
    let mut found: HashMap<GridIndex, ()> = HashMap::from([(origin, ())]);
    let mut order = vec![origin];
    let mut queue = VecDeque::from([origin]);
    while let Some(g) = queue.pop_front() {
        let p = grid_point(eps, &g);
        for s in &steps {
            let h = add(&g, s);
            if found.contains_key(&h) {
                continue;
            }
            if domain.segment_inside(&p, &grid_point(eps, &h)) {
                found.insert(h, ());
                order.push(h);
                queue.push_back(h);
            }
        }
    }
    order.sort_unstable();
    let index: HashMap<GridIndex, usize> = order.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let points: Vec<Point> = order.iter().map(|g| grid_point(eps, g)).collect();
    let neighbors: Vec<Vec<usize>> = order
        .iter()
        .zip(&points)
        .map(|(g, p)| {
            steps
                .iter()
                .filter_map(|s| {
                    let h = add(g, s);
                    let j = *index.get(&h)?;
                    domain.segment_inside(p, &points[j]).then_some(j)
                })
                .collect()
        })
        .collect();
    let inner_boundary = (0..order.len()).filter(|&x| neighbors[x].len() < 2 * dim).collect();
    let dropped_sites = count_domain_points(domain, eps) - order.len();
    Ok(SiteLattice { eps, dim, grid: order, points, neighbors, inner_boundary, dropped_sites })
}

fn count_domain_points(domain: &DomainSpec, eps: f64) -> usize {
    let dim = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let range = |i: usize| {
        if i < dim {
            ((lo[i] / eps).floor() as i64, (hi[i] / eps).ceil() as i64)
        } else {
            (0, 0)
        }
    };
    let (r0, r1, r2) = (range(0), range(1), range(2));
    let mut count = 0;
    for a in r0.0..=r0.1 {
        for b in r1.0..=r1.1 {
            for c in r2.0..=r2.1 {
                if domain.contains(&grid_point(eps, &[a, b, c])) {
                    count += 1;
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    #[test]
    fn square_quarter_spacing_has_nine_sites() {
        let l = build_lattice(&DomainSpec::unit_square(), 0.25).unwrap();
        assert_eq!(l.len(), 9);
        assert_eq!(l.inner_boundary.len(), 8);
        let center = l.points.iter().position(|p| p[0] == 0.0 && p[1] == 0.0).unwrap();
        assert_eq!(l.degree(center), 4);
        assert!(!l.inner_boundary.contains(&center));
        assert_eq!(l.dropped_sites, 0);
        assert_eq!(l.component_count(), 1);
    }

    #[test]
    fn square_half_spacing_keeps_only_origin() {
        let l = build_lattice(&DomainSpec::unit_square(), 0.5).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.inner_boundary, vec![0]);
    }

    #[test]
    fn small_disks() {
        // Radius 0.3 excludes the diagonal points at distance 0.354.
        let l = build_lattice(&DomainSpec::disk(0.3).unwrap(), 0.25).unwrap();
        assert_eq!(l.len(), 5);
        assert_eq!(l.inner_boundary.len(), 4);
        // Radius 0.4 keeps them, and every segment to them stays inside.
        let l = build_lattice(&DomainSpec::disk(0.4).unwrap(), 0.25).unwrap();
        assert_eq!(l.len(), 9);
        assert_eq!(l.inner_boundary.len(), 8);
    }

    #[test]
    fn dumbbell_neck_disconnects_at_coarse_spacing() {
        // Two squares joined by a neck that misses every lattice line.
        let v = vec![
            [-0.3, -0.3], [0.3, -0.3], [0.3, 0.05], [0.9, 0.05], [0.9, -0.3], [1.5, -0.3],
            [1.5, 0.3], [0.9, 0.3], [0.9, 0.12], [0.3, 0.12], [0.3, 0.3], [-0.3, 0.3],
        ];
        let d = DomainSpec::new(Shape::Polygon { vertices: v }, 2.0).unwrap();
        let l = build_lattice(&d, 0.25).unwrap();
        assert!(l.dropped_sites > 0);
        assert!(l.points.iter().all(|p| p[0] < 0.3));
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(build_lattice(&DomainSpec::unit_square(), 1.0).is_err());
        assert!(build_lattice(&DomainSpec::unit_square(), 0.0).is_err());
    }
}
