//! Discrete domains: sites of `eps Z^d` inside a bounded domain, boundary cells and weights,
//! exterior reservoir sites and the cross edges joining them to the lattice.

mod boundary;
mod lattice;
mod shape;

use std::io::Write;

use serde::Serialize;

pub use boundary::{
    assign_boundary_weights, build_boundary_partition, build_outer_boundary, BoundaryCell, BoundaryPartition,
    CrossEdge, OuterBoundary,
};
pub use lattice::{build_lattice, grid_point, GridIndex, SiteLattice};
pub use shape::{BoundaryPiece, Disk, DomainSpec, ImplicitShape, Point, Shape};

use crate::error::Result;

/// Construction diagnostics kept alongside the lattice.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LatticeMeta {
    pub sites: usize,
    pub inner_boundary: usize,
    pub outer_sites: usize,
    pub cross_edges: usize,
    /// Points of the open domain on the grid outside the origin component.
    pub dropped_sites: usize,
    /// Smallest `C` with `1/C <= alpha(x) <= C` on the inner boundary.
    pub ellipticity: f64,
    pub cell_ratio_min: f64,
    pub cell_ratio_max: f64,
    pub max_cross_edge_length: f64,
    pub warnings: Vec<String>,
}

impl LatticeMeta {
    /// Coarse lattices: disconnected remainder or fewer than three sites per axis.
    pub fn degenerate(&self) -> bool {
        self.dropped_sites > 0 || self.inner_boundary == self.sites
    }
}

/// Fully weighted lattice approximation of a domain.
#[derive(Debug, Clone)]
pub struct LatticeApprox {
    pub domain: DomainSpec,
    pub eps: f64,
    pub dim: usize,
    pub sites: SiteLattice,
    pub partition: BoundaryPartition,
    /// `alpha(x)` per site; zero off the inner boundary.
    pub alpha: Vec<f64>,
    pub outer: OuterBoundary,
    /// Cross-edge indices per site.
    pub cross_by_site: Vec<Vec<usize>>,
    pub meta: LatticeMeta,
}

impl LatticeApprox {
    pub fn build(domain: &DomainSpec, eps: f64) -> Result<Self> {
        let sites = build_lattice(domain, eps)?;
        let partition = build_boundary_partition(domain, &sites)?;
        let alpha = assign_boundary_weights(&sites, &partition);
        let outer = build_outer_boundary(domain, &sites, &alpha)?;
        let mut cross_by_site = vec![Vec::new(); sites.len()];
        for (k, e) in outer.edges.iter().enumerate() {
            cross_by_site[e.x].push(k);
        }
        let ellipticity = sites
            .inner_boundary
            .iter()
            .map(|&x| alpha[x].max(1.0 / alpha[x]))
            .fold(1.0, f64::max);
        let max_cross_edge_length = outer
            .edges
            .iter()
            .map(|e| dist(&sites.points[e.x], &outer.points[e.z]))
            .fold(0.0, f64::max);
        let (cell_ratio_min, cell_ratio_max) = partition.ellipticity_range();
        let mut warnings = Vec::new();
        if sites.dropped_sites > 0 {
            warnings.push(format!(
                "{} grid points of the domain are disconnected from the origin and were dropped",
                sites.dropped_sites
            ));
        }
        for &x in &outer.widened {
            warnings.push(format!("outer search radius doubled at site {x}"));
        }
        let meta = LatticeMeta {
            sites: sites.len(),
            inner_boundary: sites.inner_boundary.len(),
            outer_sites: outer.points.len(),
            cross_edges: outer.edges.len(),
            dropped_sites: sites.dropped_sites,
            ellipticity,
            cell_ratio_min,
            cell_ratio_max,
            max_cross_edge_length,
            warnings,
        };
        Ok(LatticeApprox {
            domain: domain.clone(),
            eps,
            dim: domain.dim(),
            sites,
            partition,
            alpha,
            outer,
            cross_by_site,
            meta,
        })
    }

    /// Number of lattice sites `#Omega_eps`.
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    /// Number of exterior sites.
    pub fn m(&self) -> usize {
        self.outer.points.len()
    }

    pub fn point(&self, x: usize) -> &Point {
        &self.sites.points[x]
    }

    pub fn outer_point(&self, z: usize) -> &Point {
        &self.outer.points[z]
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.sites.neighbors[x]
    }

    pub fn inner_boundary(&self) -> &[usize] {
        &self.sites.inner_boundary
    }

    pub fn is_inner_boundary(&self, x: usize) -> bool {
        self.sites.is_inner_boundary(x)
    }

    pub fn cross_edges(&self) -> &[CrossEdge] {
        &self.outer.edges
    }

    pub fn cross_edges_at(&self, x: usize) -> impl Iterator<Item = &CrossEdge> {
        self.cross_by_site[x].iter().map(move |&k| &self.outer.edges[k])
    }

    pub fn site_index(&self, p: &Point) -> Option<usize> {
        let g = self.to_grid(p);
        self.sites.grid.binary_search(&g).ok()
    }

    pub fn outer_index(&self, p: &Point) -> Option<usize> {
        let g = self.to_grid(p);
        self.outer.grid.binary_search(&g).ok()
    }

    fn to_grid(&self, p: &Point) -> GridIndex {
        let r = |v: f64| (v / self.eps).round() as i64;
        [r(p[0]), r(p[1]), r(p[2])]
    }

    /// Site mass `eps^d` of the volume measure.
    pub fn site_volume(&self) -> f64 {
        self.eps.powi(self.dim as i32)
    }

    /// `mu_eps(Omega_eps)`.
    pub fn total_volume(&self) -> f64 {
        self.n() as f64 * self.site_volume()
    }

    /// Surface mass `eps^(d-1) alpha(x)` per site.
    pub fn surface_mass(&self) -> Vec<f64> {
        let unit = self.eps.powi(self.dim as i32 - 1);
        self.alpha.iter().map(|a| unit * a).collect()
    }

    /// `<sigma_eps, f>` for a function given on the sites.
    pub fn surface_pairing(&self, f: &[f64]) -> f64 {
        let unit = self.eps.powi(self.dim as i32 - 1);
        self.sites.inner_boundary.iter().map(|&x| unit * self.alpha[x] * f[x]).sum()
    }

    /// `<mu_eps, f>` for a function given on the sites.
    pub fn volume_pairing(&self, f: &[f64]) -> f64 {
        self.site_volume() * f.iter().sum::<f64>()
    }

    /// Evaluates `f` at every site.
    pub fn sample<F: Fn(&Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.sites.points.iter().map(f).collect()
    }

    /// Evaluates `f` at every exterior site.
    pub fn sample_outer<F: Fn(&Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.outer.points.iter().map(f).collect()
    }

    /// Site rows: `index, x1..xd, degree, is_inner_boundary, alpha`.
    pub fn write_sites_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["index".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        header.extend(["degree", "is_inner_boundary", "alpha"].map(String::from));
        out.write_record(&header).map_err(csv_err)?;
        for x in 0..self.n() {
            let mut row = vec![x.to_string()];
            row.extend(self.point(x)[..self.dim].iter().map(|c| c.to_string()));
            row.push(self.sites.degree(x).to_string());
            row.push((self.is_inner_boundary(x) as u8).to_string());
            row.push(self.alpha[x].to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Cross-edge rows: `x_index, z1..zd, alpha_xz`.
    pub fn write_cross_edges_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["x_index".to_string()];
        header.extend((1..=self.dim).map(|i| format!("z{i}")));
        header.push("alpha_xz".into());
        out.write_record(&header).map_err(csv_err)?;
        for e in self.cross_edges() {
            let mut row = vec![e.x.to_string()];
            row.extend(self.outer_point(e.z)[..self.dim].iter().map(|c| c.to_string()));
            row.push(e.alpha_xz.to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
