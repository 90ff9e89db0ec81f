use crate::error::{Result, RomError};

/// Boundary segments of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Bottom,
    Top,
    Left,
    /// `x₁ = 1`, `x₂ ∈ [0, ½]`.
    RightLower,
    /// `x₁ = 1`, `x₂ ∈ [½, 1]`.
    RightUpper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Structured triangulation of `[0,1]²` with `n_sub` cells per side and alternating
/// cell diagonals. Subdomains are the four quadrants:
///
/// ```text
///  +----+----+
///  | D3 | D4 |
///  +----+----+
///  | D1 | D2 |
///  +----+----+
/// ```
#[derive(Debug, Clone)]
pub struct Mesh {
    pub n_sub: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Subdomain id in `1..=4` for every triangle.
    pub subdomain: Vec<u8>,
    pub boundary: Vec<BoundaryEdge>,
}

impl Mesh {
    pub fn unit_square(n_sub: usize) -> Result<Self> {
        if n_sub < 2 || !n_sub.is_multiple_of(2) {
            return Err(RomError::InvalidResolution(n_sub));
        }
        let n = n_sub;
        let h = 1.0 / n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;

        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        let mut subdomain = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                let tris = if (i + j) % 2 == 0 {
                    [[v00, v10, v11], [v00, v11, v01]]
                } else {
                    [[v00, v10, v01], [v10, v11, v01]]
                };
                let right = 2 * i >= n;
                let upper = 2 * j >= n;
                let id = 1 + right as u8 + 2 * upper as u8;
                for t in tris {
                    triangles.push(t);
                    subdomain.push(id);
                }
            }
        }

        let mut boundary = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary.push(BoundaryEdge { vertices: [vid(i, 0), vid(i + 1, 0)], tag: BoundaryTag::Bottom });
            boundary.push(BoundaryEdge { vertices: [vid(i, n), vid(i + 1, n)], tag: BoundaryTag::Top });
        }
        for j in 0..n {
            let tag = if 2 * j < n { BoundaryTag::RightLower } else { BoundaryTag::RightUpper };
            boundary.push(BoundaryEdge { vertices: [vid(n, j), vid(n, j + 1)], tag });
            boundary.push(BoundaryEdge { vertices: [vid(0, j), vid(0, j + 1)], tag: BoundaryTag::Left });
        }

        Ok(Self { n_sub, vertices, triangles, subdomain, boundary })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_coords(t);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p, q, r] = self.triangle_coords(t);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    /// Vertices on `x₂ = 0` or `x₂ = 1`.
    pub fn is_clamped(&self, v: usize) -> bool {
        let y = self.vertices[v][1];
        y == 0.0 || y == 1.0
    }
}
