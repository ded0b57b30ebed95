//! Conforming triangulations of the reservoir (with an embedded fracture
//! segment on the x-axis and a point well at its left tip) and of the thin
//! fracture slab used by the reduction checks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer shape of the reservoir; both are centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
}

impl Shape {
    pub fn describe(&self) -> String {
        match self {
            Shape::Rectangle { width, height } => format!("rectangle({width}x{height})"),
            Shape::Disk { radius } => format!("disk(r={radius})"),
        }
    }
}

/// Geometry and meshing controls of a reservoir run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: Shape,
    pub fracture_length: f64,
    pub aperture: f64,
    /// Well position; the fracture runs from here in +x along y = 0.
    #[serde(default)]
    pub well: [f64; 2],
    /// Largest element size.
    pub resolution: f64,
    /// Geometric growth ratio of element sizes away from the fracture and
    /// well. 1.0 gives a uniform mesh.
    #[serde(default = "default_grading")]
    pub grading: f64,
    /// Element size next to the fracture; defaults to `resolution / 4` for
    /// graded meshes and `resolution` for uniform ones.
    #[serde(default)]
    pub fine_size: Option<f64>,
}

fn default_grading() -> f64 {
    1.3
}

impl DomainSpec {
    pub fn new(shape: Shape, fracture_length: f64, aperture: f64, resolution: f64) -> Self {
        DomainSpec {
            shape,
            fracture_length,
            aperture,
            well: [0.0, 0.0],
            resolution,
            grading: 1.3,
            fine_size: None,
        }
    }

    pub fn uniform(mut self) -> Self {
        self.grading = 1.0;
        self.fine_size = None;
        self
    }

    pub fn fine(&self) -> f64 {
        match self.fine_size {
            Some(f) => f,
            None if self.grading > 1.0 => self.resolution / 4.0,
            None => self.resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{name} must be positive, got {v}")))
            }
        };
        match self.shape {
            Shape::Rectangle { width, height } => {
                pos("width", width)?;
                pos("height", height)?;
            }
            Shape::Disk { radius } => pos("radius", radius)?,
        }
        pos("fracture_length", self.fracture_length)?;
        pos("resolution", self.resolution)?;
        pos("fine_size", self.fine())?;
        if !(self.aperture.is_finite() && self.aperture >= 0.0) {
            return Err(Error::Geometry(format!(
                "aperture must be non-negative, got {}",
                self.aperture
            )));
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return Err(Error::Geometry(format!("grading must be ≥ 1, got {}", self.grading)));
        }
        if self.fine() > self.fracture_length * (1.0 + 1e-12) {
            return Err(Error::Geometry(format!(
                "element size {} too coarse to resolve fracture length {}",
                self.fine(),
                self.fracture_length
            )));
        }
        self.check_fracture_inside(self.fracture_length)
    }

    /// The well must be strictly interior; the fracture tip may touch the
    /// outer boundary but not leave the domain.
    fn check_fracture_inside(&self, length: f64) -> Result<()> {
        let [wx, wy] = self.well;
        if wy != 0.0 {
            return Err(Error::Geometry("the fracture lies on y = 0; well.y must be 0".into()));
        }
        let tip = wx + length;
        let eps = 1e-12;
        let ok = match self.shape {
            Shape::Rectangle { width, height } => {
                let (hw, hh) = (0.5 * width, 0.5 * height);
                wx > -hw && wx < hw && hh > 0.0 && tip <= hw * (1.0 + eps)
            }
            Shape::Disk { radius } => {
                if wx != 0.0 {
                    return Err(Error::Geometry("disk meshes place the well at the centre".into()));
                }
                tip <= radius * (1.0 + eps)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "fracture [{wx}, {tip}] x {{0}} is not inside {}",
                self.shape.describe()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Outer,
    /// Upper face of the fracture.
    FracturePlus,
    /// Lower face of the fracture.
    FractureMinus,
    Well,
    FractureOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshKind {
    Reservoir,
    Slab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub kind: MeshKind,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Fracture edges ordered from the well to the tip.
    pub fracture_edges: Vec<[usize; 2]>,
    pub well_node: usize,
    pub boundary_edges: Vec<(BoundaryTag, [usize; 2])>,
    /// Fracture thickness `h` entering the line terms.
    pub aperture: f64,
    /// Nodes on y = 0 to the right of the well, sorted by x.
    axis_nodes: Vec<usize>,
}

impl Mesh {
    /// Mesh from raw nodes and counter-clockwise triangles, without boundary
    /// tags; node 0 is the well.
    pub fn from_parts(kind: MeshKind, nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Mesh {
        Mesh {
            kind,
            nodes,
            triangles,
            fracture_edges: Vec::new(),
            well_node: 0,
            boundary_edges: Vec::new(),
            aperture: 0.0,
            axis_nodes: Vec::new(),
        }
    }

    /// Sets the fracture chain explicitly (edges ordered from the well).
    pub fn with_fracture_edges(mut self, edges: Vec<[usize; 2]>, aperture: f64) -> Mesh {
        self.boundary_edges
            .retain(|(t, _)| !matches!(t, BoundaryTag::FracturePlus | BoundaryTag::FractureMinus));
        for &e in &edges {
            self.boundary_edges.push((BoundaryTag::FracturePlus, e));
            self.boundary_edges.push((BoundaryTag::FractureMinus, e));
        }
        if let Some(first) = edges.first() {
            self.well_node = first[0];
        }
        self.fracture_edges = edges;
        self.aperture = aperture;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.tri_area(t)).sum()
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        let (p, q) = (self.nodes[e[0]], self.nodes[e[1]]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn fracture_length(&self) -> f64 {
        self.fracture_edges.iter().map(|&e| self.edge_length(e)).sum()
    }

    pub fn edges_with(&self, tag: BoundaryTag) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.boundary_edges
            .iter()
            .filter(move |(t, _)| *t == tag)
            .map(|(_, e)| *e)
    }

    /// Nodes pinned to zero pressure: the well node of a reservoir mesh or all
    /// nodes on the well face of a slab.
    pub fn well_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges_with(BoundaryTag::Well).flatten().collect();
        if v.is_empty() {
            v.push(self.well_node);
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn with_aperture(&self, h: f64) -> Mesh {
        let mut m = self.clone();
        m.aperture = h;
        m
    }

    /// Re-tags the fracture to run from the well to `well.x + length` along
    /// existing axis nodes. The tip must coincide with a mesh node.
    pub fn with_fracture_length(&self, length: f64) -> Result<Mesh> {
        if self.kind != MeshKind::Reservoir {
            return Err(Error::Geometry("only reservoir meshes carry a fracture".into()));
        }
        let x0 = self.nodes[self.well_node][0];
        let tip = x0 + length;
        let tol = 1e-9 * length.abs().max(1.0);
        let mut chain = vec![self.well_node];
        for &n in &self.axis_nodes {
            let x = self.nodes[n][0];
            if x > x0 + tol && x <= tip + tol {
                chain.push(n);
            }
        }
        let last = *chain.last().unwrap();
        if chain.len() < 2 || (self.nodes[last][0] - tip).abs() > tol {
            return Err(Error::Geometry(format!(
                "no mesh node at fracture tip x = {tip}; build the mesh with this length as a station"
            )));
        }
        let edges: Vec<[usize; 2]> = chain.windows(2).map(|w| [w[0], w[1]]).collect();
        let mut m = self.clone();
        m.boundary_edges
            .retain(|(t, _)| !matches!(t, BoundaryTag::FracturePlus | BoundaryTag::FractureMinus));
        for &e in &edges {
            m.boundary_edges.push((BoundaryTag::FracturePlus, e));
            m.boundary_edges.push((BoundaryTag::FractureMinus, e));
        }
        m.fracture_edges = edges;
        Ok(m)
    }
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Cell count for `x` nominal cells, rounded up to a power of two so that
/// halving the resolution at least doubles every segment.
fn dyadic_count(x: f64) -> usize {
    if x <= 1.0 {
        1
    } else {
        ((x - 1e-9).ceil() as usize).next_power_of_two()
    }
}

/// Points partitioning `[a, b]`. Towards each flagged end the target size
/// starts at `fine` and grows geometrically by `ratio` up to `coarse`; points
/// equidistribute that size function.
fn graded_points(a: f64, b: f64, fine_a: bool, fine_b: bool, fine: f64, coarse: f64, ratio: f64) -> Vec<f64> {
    let len = b - a;
    if len <= 0.0 {
        return vec![a];
    }
    let graded = ratio > 1.0 && fine < coarse && (fine_a || fine_b);
    if !graded {
        let size = if fine_a || fine_b { fine.min(coarse) } else { coarse };
        let n = dyadic_count(len / size);
        return (0..=n)
            .map(|i| if i == n { b } else { a + len * i as f64 / n as f64 })
            .collect();
    }
    let n = 2 * dyadic_count(len / coarse);
    let size = |x: f64| {
        let d = match (fine_a, fine_b) {
            (true, true) => (x - a).min(b - x),
            (true, false) => x - a,
            _ => b - x,
        };
        (fine + (ratio - 1.0) * d).min(coarse)
    };
    // cumulative integral of 1/size on a fine sampling, inverted linearly
    let m = 64 * n;
    let xs: Vec<f64> = (0..=m).map(|k| a + len * k as f64 / m as f64).collect();
    let mut cum = vec![0.0; m + 1];
    for k in 0..m {
        cum[k + 1] = cum[k] + 0.5 * (xs[k + 1] - xs[k]) * (1.0 / size(xs[k]) + 1.0 / size(xs[k + 1]));
    }
    let total = cum[m];
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(a);
    let mut k = 0;
    for i in 1..n {
        let target = total * i as f64 / n as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let t = (target - cum[k]) / (cum[k + 1] - cum[k]);
        pts.push(xs[k] + t * (xs[k + 1] - xs[k]));
    }
    pts.push(b);
    pts
}

/// Concatenates graded partitions over consecutive breakpoints.
fn graded_axis(breaks: &[f64], fine_at: &dyn Fn(f64) -> bool, fine: f64, coarse: f64, ratio: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let seg = graded_points(w[0], w[1], fine_at(w[0]), fine_at(w[1]), fine, coarse, ratio);
        out.extend_from_slice(&seg[1..]);
    }
    out
}

fn sorted_unique(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().is_none_or(|&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

/// Builds the reservoir mesh for `spec.fracture_length`.
pub fn build_reservoir_mesh(spec: &DomainSpec) -> Result<Mesh> {
    build_reservoir_family(spec, &[])
}

/// Builds a reservoir mesh whose fracture axis also has nodes at
/// `well.x + L` for every `L` in `stations`, so that
/// [`Mesh::with_fracture_length`] can re-tag the same mesh for each length.
pub fn build_reservoir_family(spec: &DomainSpec, stations: &[f64]) -> Result<Mesh> {
    spec.validate()?;
    for &l in stations {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Geometry(format!("station length must be positive, got {l}")));
        }
        spec.check_fracture_inside(l)?;
        if spec.fine() > l * (1.0 + 1e-12) {
            return Err(Error::Geometry(format!(
                "element size {} too coarse to resolve fracture length {l}",
                spec.fine()
            )));
        }
    }
    let mut lengths: Vec<f64> = stations.to_vec();
    lengths.push(spec.fracture_length);
    let mesh = match spec.shape {
        Shape::Rectangle { width, height } => rectangle_mesh(spec, width, height, &lengths),
        Shape::Disk { radius } => disk_mesh(spec, radius, &lengths),
    }?;
    mesh.with_fracture_length(spec.fracture_length)
}

fn rectangle_mesh(spec: &DomainSpec, width: f64, height: f64, lengths: &[f64]) -> Result<Mesh> {
    let (hw, hh) = (0.5 * width, 0.5 * height);
    let wx = spec.well[0];
    let tol = 1e-12 * width.max(height);
    let mut xb = vec![-hw, hw, wx];
    xb.extend(lengths.iter().map(|l| (wx + l).min(hw)));
    let xb = sorted_unique(xb, tol);
    let features: Vec<f64> = xb.iter().copied().filter(|&x| x > -hw + tol && x < hw - tol).collect();
    let is_feature = |x: f64| features.iter().any(|&f| (f - x).abs() <= tol);
    let fine = spec.fine();
    let xs = graded_axis(&xb, &is_feature, fine, spec.resolution, spec.grading);
    let ys = graded_axis(&[-hh, 0.0, hh], &|y: f64| y.abs() <= tol, fine, spec.resolution, spec.grading);

    let nx = xs.len();
    let ny = ys.len();
    let id = |i: usize, j: usize| j * nx + i;
    let mut nodes = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            nodes.push([x, y]);
        }
    }
    let triangles = split_grid(nx, ny, &id);
    let mut boundary_edges = Vec::new();
    for i in 0..nx - 1 {
        boundary_edges.push((BoundaryTag::Outer, [id(i, 0), id(i + 1, 0)]));
        boundary_edges.push((BoundaryTag::Outer, [id(i + 1, ny - 1), id(i, ny - 1)]));
    }
    for j in 0..ny - 1 {
        boundary_edges.push((BoundaryTag::Outer, [id(nx - 1, j), id(nx - 1, j + 1)]));
        boundary_edges.push((BoundaryTag::Outer, [id(0, j + 1), id(0, j)]));
    }
    let j0 = ys.iter().position(|&y| y.abs() <= tol).unwrap();
    let i0 = xs.iter().position(|&x| (x - wx).abs() <= tol).unwrap();
    let axis_nodes = (i0 + 1..nx).map(|i| id(i, j0)).collect();
    let well_node = id(i0, j0);
    // snap the well exactly onto the requested position
    nodes[well_node] = [wx, 0.0];
    Ok(Mesh {
        kind: MeshKind::Reservoir,
        nodes,
        triangles,
        fracture_edges: Vec::new(),
        well_node,
        boundary_edges,
        aperture: spec.aperture,
        axis_nodes,
    })
}

/// Splits each cell of an `nx` x `ny` node grid along its (i,j)-(i+1,j+1)
/// diagonal into two counter-clockwise triangles.
fn split_grid(nx: usize, ny: usize, id: &dyn Fn(usize, usize) -> usize) -> Vec<[usize; 3]> {
    let mut tris = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    tris
}

/// Number of vertices of the inscribed boundary polygon of a disk.
pub fn disk_polygon_vertices(radius: f64, resolution: f64) -> usize {
    ((2.0 * PI * radius / resolution) - 1e-9).ceil().max(3.0) as usize
}

/// Area of the regular inscribed polygon with `n` vertices.
pub fn inscribed_polygon_area(radius: f64, n: usize) -> f64 {
    0.5 * n as f64 * radius * radius * (2.0 * PI / n as f64).sin()
}

const MIN_RING_VERTICES: usize = 8;

fn disk_mesh(spec: &DomainSpec, radius: f64, lengths: &[f64]) -> Result<Mesh> {
    let tol = 1e-12 * radius;
    let mut rb = vec![0.0, radius];
    rb.extend(lengths.iter().map(|&l| l.min(radius)));
    let rb = sorted_unique(rb, tol);
    let is_feature = |r: f64| r < radius - tol;
    let fine = spec.fine();
    let radii = graded_axis(&rb, &is_feature, fine, spec.resolution, spec.grading);
    let n_outer = disk_polygon_vertices(radius, spec.resolution);
    if n_outer < MIN_RING_VERTICES {
        return Err(Error::Geometry(format!(
            "resolution {} too coarse for a disk of radius {radius}",
            spec.resolution
        )));
    }
    let nr = radii.len();
    let mut counts = Vec::with_capacity(nr);
    for k in 1..nr {
        let n = if k == nr - 1 {
            n_outer
        } else {
            let local = 0.5 * (radii[k + 1] - radii[k - 1]);
            let n = (2.0 * PI * radii[k] / local.min(spec.resolution)).ceil() as usize;
            n.clamp(MIN_RING_VERTICES, n_outer)
        };
        counts.push(n);
    }
    // keep every ring strictly inside the next polygon
    for k in 0..counts.len() - 1 {
        let (r_in, r_out) = (radii[k + 1], radii[k + 2]);
        if r_in >= r_out * (PI / counts[k + 1] as f64).cos() {
            return Err(Error::Geometry(format!(
                "ring at r = {r_in} crosses the polygon at r = {r_out}; refine the mesh"
            )));
        }
    }

    let mut nodes = vec![[0.0, 0.0]];
    let mut ring_start = Vec::with_capacity(counts.len());
    for (k, &n) in counts.iter().enumerate() {
        ring_start.push(nodes.len());
        let r = radii[k + 1];
        for i in 0..n {
            let th = 2.0 * PI * i as f64 / n as f64;
            nodes.push(if i == 0 { [r, 0.0] } else { [r * th.cos(), r * th.sin()] });
        }
    }
    let mut triangles = Vec::new();
    let n0 = counts[0];
    for i in 0..n0 {
        triangles.push([0, ring_start[0] + i, ring_start[0] + (i + 1) % n0]);
    }
    for k in 0..counts.len() - 1 {
        stitch_rings(ring_start[k], counts[k], ring_start[k + 1], counts[k + 1], &mut triangles);
    }
    let last = counts.len() - 1;
    let (s, n) = (ring_start[last], counts[last]);
    let boundary_edges = (0..n)
        .map(|i| (BoundaryTag::Outer, [s + i, s + (i + 1) % n]))
        .collect();
    let axis_nodes = ring_start.clone();
    Ok(Mesh {
        kind: MeshKind::Reservoir,
        nodes,
        triangles,
        fracture_edges: Vec::new(),
        well_node: 0,
        boundary_edges,
        aperture: spec.aperture,
        axis_nodes,
    })
}

/// Triangulates the annulus between two concentric rings that both start
/// at angle zero by merging their vertices in angular order.
fn stitch_rings(a0: usize, na: usize, b0: usize, nb: usize, tris: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        // compare (i+1)/na against (j+1)/nb exactly
        let advance_inner = j == nb || (i < na && (i + 1) * nb < (j + 1) * na);
        let a = a0 + i % na;
        let b = b0 + j % nb;
        if advance_inner {
            tris.push([a, b, a0 + (i + 1) % na]);
            i += 1;
        } else {
            tris.push([a, b, b0 + (j + 1) % nb]);
            j += 1;
        }
    }
}

/// Structured `nx` x `ny` cell mesh of `[0, L] x [-h/2, h/2]`.
pub fn build_fracture_slab_mesh(length: f64, h: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(length.is_finite() && length > 0.0 && h.is_finite() && h > 0.0) {
        return Err(Error::Geometry(format!("slab needs L > 0 and h > 0, got L={length}, h={h}")));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::Geometry(format!("slab needs nx, ny ≥ 2, got {nx}x{ny}")));
    }
    let (px, py) = (nx + 1, ny + 1);
    let id = |i: usize, j: usize| j * px + i;
    let mut nodes = Vec::with_capacity(px * py);
    for j in 0..py {
        let y = if j == ny { 0.5 * h } else { -0.5 * h + h * j as f64 / ny as f64 };
        for i in 0..px {
            let x = if i == nx { length } else { length * i as f64 / nx as f64 };
            nodes.push([x, y]);
        }
    }
    let triangles = split_grid(px, py, &id);
    let mut boundary_edges = Vec::new();
    for i in 0..nx {
        boundary_edges.push((BoundaryTag::FractureMinus, [id(i, 0), id(i + 1, 0)]));
        boundary_edges.push((BoundaryTag::FracturePlus, [id(i + 1, ny), id(i, ny)]));
    }
    for j in 0..ny {
        boundary_edges.push((BoundaryTag::FractureOut, [id(nx, j), id(nx, j + 1)]));
        boundary_edges.push((BoundaryTag::Well, [id(0, j + 1), id(0, j)]));
    }
    Ok(Mesh {
        kind: MeshKind::Slab,
        nodes,
        triangles,
        fracture_edges: Vec::new(),
        well_node: id(0, ny / 2),
        boundary_edges,
        aperture: h,
        axis_nodes: Vec::new(),
    })
}

/// Cell aspect ratio `dx / dy = L ny / (h nx)` of a structured slab mesh.
pub fn slab_aspect_ratio(length: f64, h: f64, nx: usize, ny: usize) -> f64 {
    length * ny as f64 / (h * nx as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    pub min_area: f64,
    pub max_aspect_ratio: f64,
    pub valid: bool,
    pub problems: Vec<String>,
}

/// Angle and area statistics; a mesh is invalid if any triangle has
/// non-positive area or an angle below one degree.
pub fn mesh_quality_report(m: &Mesh) -> QualityReport {
    let mut r = QualityReport {
        min_angle_deg: 180.0,
        max_angle_deg: 0.0,
        min_area: f64::INFINITY,
        max_aspect_ratio: 0.0,
        valid: true,
        problems: Vec::new(),
    };
    for (t, tri) in m.triangles.iter().enumerate() {
        let p: Vec<[f64; 2]> = tri.iter().map(|&i| m.nodes[i]).collect();
        let area = signed_area(p[0], p[1], p[2]);
        r.min_area = r.min_area.min(area);
        if area <= 0.0 {
            r.valid = false;
            r.problems.push(format!("triangle {t} has non-positive area {area:e}"));
            continue;
        }
        let len = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]).hypot(b[1] - a[1]);
        let e = [len(p[1], p[2]), len(p[2], p[0]), len(p[0], p[1])];
        let longest = e.iter().cloned().fold(0.0, f64::max);
        for k in 0..3 {
            let (a, b, c) = (e[k], e[(k + 1) % 3], e[(k + 2) % 3]);
            let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
            let ang = cos.acos().to_degrees();
            r.min_angle_deg = r.min_angle_deg.min(ang);
            r.max_angle_deg = r.max_angle_deg.max(ang);
        }
        // longest edge over shortest altitude
        let aspect = longest * longest / (2.0 * area);
        r.max_aspect_ratio = r.max_aspect_ratio.max(aspect);
    }
    if r.min_angle_deg < 1.0 {
        r.valid = false;
        r.problems.push(format!("minimum angle {:.3} deg below 1 deg", r.min_angle_deg));
    }
    r
}
