use crate::error::{Error, Result};
use crate::quadrature;
use crate::model::{unit_ball_volume, unit_sphere_area};

pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stretching {
    Uniform,
    /// Successive cell widths shrink by `ratio` towards the origin.
    Geometric(f64),
}

/// Cell-centred finite-volume grid on [0, R] for radial functions in R^n.
///
/// Faces are indexed `0..=cells` with `faces[0] = 0` and `faces[cells] = R`;
/// cell `i` spans `[faces[i], faces[i+1]]`. Volumes and face areas are the
/// exact shell volumes and sphere areas, so conservative divergences
/// telescope exactly.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    n: usize,
    radius: f64,
    faces: Vec<f64>,
    centers: Vec<f64>,
    volumes: Vec<f64>,
    areas: Vec<f64>,
    // area / centre spacing at interior faces, zero on the boundary faces
    conductance: Vec<f64>,
    s_nodes: Vec<f64>,
    s_widths: Vec<f64>,
}

// b^n − a^n without cancellation for nearby a, b.
fn pow_diff(a: f64, b: f64, n: usize) -> f64 {
    let mut sum = 0.0;
    for j in 0..n {
        sum += b.powi(j as i32) * a.powi((n - 1 - j) as i32);
    }
    (b - a) * sum
}

pub fn build_grid(n: usize, radius: f64, cells: usize, stretching: Stretching) -> Result<RadialGrid> {
    if n < 1 {
        return Err(Error::arg("n", "dimension must be positive"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::arg("radius", format!("must be positive, got {radius}")));
    }
    if cells < MIN_CELLS {
        return Err(Error::arg(
            "cell_count",
            format!("need at least {MIN_CELLS} cells, got {cells}"),
        ));
    }
    let widths: Vec<f64> = match stretching {
        Stretching::Uniform => vec![radius / cells as f64; cells],
        Stretching::Geometric(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::arg("ratio", format!("must lie in (0, 1], got {q}")));
            }
            if q == 1.0 {
                vec![radius / cells as f64; cells]
            } else {
                let outer = radius * (1.0 - q) / (1.0 - q.powi(cells as i32));
                (0..cells).map(|j| outer * q.powi((cells - 1 - j) as i32)).collect()
            }
        }
    };
    let mut faces = Vec::with_capacity(cells + 1);
    faces.push(0.0);
    let uniform = matches!(stretching, Stretching::Uniform) || stretching == Stretching::Geometric(1.0);
    if uniform {
        for i in 1..cells {
            faces.push(radius * i as f64 / cells as f64);
        }
    } else {
        let mut r = 0.0;
        for w in &widths[..cells - 1] {
            r += w;
            faces.push(r);
        }
    }
    faces.push(radius);
    Ok(RadialGrid::from_faces(n, faces))
}

impl RadialGrid {
    fn from_faces(n: usize, faces: Vec<f64>) -> Self {
        let cells = faces.len() - 1;
        let radius = faces[cells];
        let sigma = unit_sphere_area(n);
        let centers: Vec<f64> = faces.windows(2).map(|f| 0.5 * (f[0] + f[1])).collect();
        let s_widths: Vec<f64> = faces.windows(2).map(|f| pow_diff(f[0], f[1], n)).collect();
        let volumes: Vec<f64> = s_widths.iter().map(|h| sigma * h / n as f64).collect();
        let areas: Vec<f64> = faces.iter().map(|r| sigma * r.powi(n as i32 - 1)).collect();
        let mut conductance = vec![0.0; cells + 1];
        for f in 1..cells {
            conductance[f] = areas[f] / (centers[f] - centers[f - 1]);
        }
        let s_nodes: Vec<f64> = faces.iter().map(|r| r.powi(n as i32)).collect();
        RadialGrid {
            n,
            radius,
            faces,
            centers,
            volumes,
            areas,
            conductance,
            s_nodes,
            s_widths,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.areas
    }

    /// Face area over the distance between the adjacent centres; zero at r = 0 and r = R.
    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// Nodes `s = r^n` of the mass variable, one per face.
    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    /// `s_{i+1} − s_i` for each cell.
    pub fn s_widths(&self) -> &[f64] {
        &self.s_widths
    }

    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.n)
    }

    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.n) * self.radius.powi(self.n as i32)
    }

    /// Smallest cell width.
    pub fn min_width(&self) -> f64 {
        self.faces
            .windows(2)
            .map(|f| f[1] - f[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Volume-weighted sum ∫ f dx.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.cells());
        values.iter().zip(&self.volumes).map(|(v, w)| v * w).sum()
    }

    /// ∫ g(f) dx for a pointwise map `g`.
    pub fn integrate_map(&self, values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        values.iter().zip(&self.volumes).map(|(v, w)| g(*v) * w).sum()
    }

    /// Cell averages `(1/|cell|) ∫_cell f dx`, so that the discrete mass of
    /// the result equals the exact mass of `f`.
    pub fn cell_averages(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let sigma = self.sphere_area();
        let n1 = self.n as i32 - 1;
        let g = |r: f64| r.powi(n1) * f(r);
        self.faces
            .windows(2)
            .zip(&self.volumes)
            .map(|(w, vol)| {
                let est = quadrature::integrate(&g, w[0], w[1], 0.0, 1e-12, 200)?;
                Ok(sigma * est.value / vol)
            })
            .collect()
    }

    /// Evaluate a radial function at the cell centres.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.centers.iter().map(|&r| f(r)).collect()
    }
}
