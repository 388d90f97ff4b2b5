use std::collections::HashMap;

use super::lattice::{grid_point, GridIndex, SiteLattice};
use super::shape::{BoundaryPiece, DomainSpec, Point};
use crate::error::{Error, Result};

/// Relative slack on distance comparisons so that points at exactly the transport radius count.
const RADIUS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BoundaryCell {
    pub piece: BoundaryPiece,
    pub measure: f64,
    /// Inner-boundary sites (lattice indices) within the transport radius of the cell.
    pub sites: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BoundaryPartition {
    pub cells: Vec<BoundaryCell>,
    pub eps: f64,
    pub dim: usize,
}

impl BoundaryPartition {
    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Extremes of `measure / eps^(d-1)` over the cells.
    pub fn ellipticity_range(&self) -> (f64, f64) {
        let unit = self.eps.powi(self.dim as i32 - 1);
        self.cells.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
            let r = c.measure / unit;
            (lo.min(r), hi.max(r))
        })
    }

    /// Largest distance from an assigned site to its cell.
    pub fn max_assignment_distance(&self, lattice: &SiteLattice) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.sites.iter().map(move |&x| c.piece.distance(&lattice.points[x])))
            .fold(0.0, f64::max)
    }
}

/// Cuts the boundary into cells of measure about `eps^(d-1)` and assigns each cell to the
/// inner-boundary sites within distance `eps (1 + M^2)^{1/2}`.
pub fn build_boundary_partition(domain: &DomainSpec, lattice: &SiteLattice) -> Result<BoundaryPartition> {
    let eps = lattice.eps;
    let dim = domain.dim();
    let radius = domain.transport_radius(eps) * (1.0 + RADIUS_SLACK);
    let pieces = domain.boundary_pieces(eps.powi(dim as i32 - 1));
    let mut cells = Vec::with_capacity(pieces.len());
    for (k, piece) in pieces.into_iter().enumerate() {
        let sites: Vec<usize> = lattice
            .inner_boundary
            .iter()
            .copied()
            .filter(|&x| piece.distance(&lattice.points[x]) <= radius)
            .collect();
        if sites.is_empty() {
            let m = piece.midpoint();
            return Err(Error::Construction(format!(
                "boundary cell {k} near ({:.4}, {:.4}, {:.4}) has no inner-boundary site within {:.4}; eps = {eps} is too coarse",
                m[0], m[1], m[2], radius
            )));
        }
        cells.push(BoundaryCell { measure: piece.measure(), piece, sites });
    }
    Ok(BoundaryPartition { cells, eps, dim })
}

/// `alpha(x) = sum over cells A assigned to x of |A| / (#sites(A) eps^(d-1))`; zero off the boundary.
pub fn assign_boundary_weights(lattice: &SiteLattice, partition: &BoundaryPartition) -> Vec<f64> {
    let unit = lattice.eps.powi(lattice.dim as i32 - 1);
    let mut alpha = vec![0.0; lattice.len()];
    for cell in &partition.cells {
        let share = cell.measure / (cell.sites.len() as f64 * unit);
        for &x in &cell.sites {
            alpha[x] += share;
        }
    }
    alpha
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEdge {
    /// Inner-boundary site.
    pub x: usize,
    /// Index into the outer sites.
    pub z: usize,
    pub alpha_xz: f64,
}

#[derive(Debug, Clone)]
pub struct OuterBoundary {
    pub grid: Vec<GridIndex>,
    pub points: Vec<Point>,
    pub edges: Vec<CrossEdge>,
    /// Inner-boundary sites whose search radius had to be doubled.
    pub widened: Vec<usize>,
}

/// Exterior lattice points (not in the open domain) within the transport radius of each
/// inner-boundary site, with the uniform kernel `q(x, .)` so that `alpha_xz = alpha(x) / #candidates`.
pub fn build_outer_boundary(domain: &DomainSpec, lattice: &SiteLattice, alpha: &[f64]) -> Result<OuterBoundary> {
    let eps = lattice.eps;
    let base = domain.transport_radius(eps);
    let mut per_site: Vec<(usize, Vec<GridIndex>)> = Vec::with_capacity(lattice.inner_boundary.len());
    let mut widened = Vec::new();
    for &x in &lattice.inner_boundary {
        let mut cands = exterior_candidates(domain, lattice, x, base);
        if cands.is_empty() {
            cands = exterior_candidates(domain, lattice, x, 2.0 * base);
            if cands.is_empty() {
                let p = lattice.points[x];
                return Err(Error::Construction(format!(
                    "inner-boundary site {x} at ({:.4}, {:.4}, {:.4}) has no exterior lattice point within {:.4}",
                    p[0], p[1], p[2], 2.0 * base
                )));
            }
            widened.push(x);
        }
        per_site.push((x, cands));
    }
    let mut grid: Vec<GridIndex> = per_site.iter().flat_map(|(_, c)| c.iter().copied()).collect();
    grid.sort_unstable();
    grid.dedup();
    let index: HashMap<GridIndex, usize> = grid.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let mut edges = Vec::new();
    for (x, cands) in &per_site {
        let w = alpha[*x] / cands.len() as f64;
        for g in cands {
            edges.push(CrossEdge { x: *x, z: index[g], alpha_xz: w });
        }
    }
    let points = grid.iter().map(|g| grid_point(eps, g)).collect();
    Ok(OuterBoundary { grid, points, edges, widened })
}

fn exterior_candidates(domain: &DomainSpec, lattice: &SiteLattice, x: usize, radius: f64) -> Vec<GridIndex> {
    let eps = lattice.eps;
    let g = lattice.grid[x];
    let p = lattice.points[x];
    let reach = (radius / eps).floor() as i64 + 1;
    let span = |axis: usize| if axis < lattice.dim { -reach..=reach } else { 0..=0 };
    let limit = radius * (1.0 + RADIUS_SLACK);
    let mut out = Vec::new();
    for a in span(0) {
        for b in span(1) {
            for c in span(2) {
                let h = [g[0] + a, g[1] + b, g[2] + c];
                let q = grid_point(eps, &h);
                let dist = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2)).sqrt();
                if dist <= limit && !domain.contains(&q) {
                    out.push(h);
                }
            }
        }
    }
    out.sort_unstable();
    out
}
