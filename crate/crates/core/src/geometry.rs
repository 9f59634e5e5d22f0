//! Hyperboloid embedding of the tiling and its disk projections.
//!
//! Points live on the sheet `x² + y² − z² = −1, z > 0`. Isometries act on
//! column vectors. A tile frame carries the fundamental square, centred on
//! the apex `(0, 0, 1)`, onto the tile.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tiling::{cross, tile_distance, tiles_within_with_distance, EdgeIndex, TileAddress};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub const APEX: HPoint = HPoint { x: 0.0, y: 0.0, z: 1.0 };

    /// Lift a planar position back onto the sheet.
    pub fn on_sheet(x: f64, y: f64) -> HPoint {
        HPoint { x, y, z: (1.0 + x * x + y * y).sqrt() }
    }

    pub fn renormalized(self) -> HPoint {
        HPoint::on_sheet(self.x, self.y)
    }

    pub fn minkowski(self, o: HPoint) -> f64 {
        self.x * o.x + self.y * o.y - self.z * o.z
    }

    pub fn distance(self, o: HPoint) -> f64 {
        // 2 asinh(|p - q| / 2) keeps precision for nearby points
        let d = HPoint { x: self.x - o.x, y: self.y - o.y, z: self.z - o.z };
        let chord = d.minkowski(d).max(0.0).sqrt();
        2.0 * (chord / 2.0).asinh()
    }

    fn scale(self, k: f64) -> HPoint {
        HPoint { x: self.x * k, y: self.y * k, z: self.z * k }
    }

    fn add(self, o: HPoint) -> HPoint {
        HPoint { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub u: f64,
    pub v: f64,
}

impl DiskPoint {
    pub fn norm(self) -> f64 {
        self.u.hypot(self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    pub m: [[f64; 3]; 3],
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    pub fn rotation(theta: f64) -> Isometry {
        let (s, c) = theta.sin_cos();
        Isometry { m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// Translation by hyperbolic distance `d` along the x axis.
    pub fn translation_x(d: f64) -> Isometry {
        let (s, c) = (d.sinh(), d.cosh());
        Isometry { m: [[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]] }
    }

    pub fn apply(&self, p: HPoint) -> HPoint {
        let m = &self.m;
        HPoint {
            x: m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            y: m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            z: m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        }
    }

    /// Inverse via `J mᵀ J`.
    pub fn inverse(&self) -> Isometry {
        let j = [1.0, 1.0, -1.0];
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = j[r] * self.m[c][r] * j[c];
            }
        }
        Isometry { m: out }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `mᵀ J m − J`.
    pub fn form_defect(&self) -> f64 {
        let j = [1.0, 1.0, -1.0];
        let mut worst: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| self.m[k][r] * j[k] * self.m[k][c]).sum();
                let target = if r == c { j[r] } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, o: &Isometry) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((self.m[r][c] - o.m[r][c]).abs());
            }
        }
        worst
    }

    pub fn pow(&self, n: u32) -> Isometry {
        (0..n).fold(Isometry::IDENTITY, |acc, _| acc * *self)
    }
}

impl Mul for Isometry {
    type Output = Isometry;

    fn mul(self, o: Isometry) -> Isometry {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[r][k] * o.m[k][c]).sum();
            }
        }
        Isometry { m: out }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TilingConstants {
    pub inradius: f64,
    pub circumradius: f64,
    pub step_translation: Isometry,
    pub quarter_turn: Isometry,
}

pub fn tiling_constants() -> TilingConstants {
    let inradius = ((PI / 5.0).cos() / FRAC_PI_4.sin()).acosh();
    let circumradius = (1.0 / FRAC_PI_4.tan() / (PI / 5.0).tan()).acosh();
    TilingConstants {
        inradius,
        circumradius,
        step_translation: Isometry::translation_x(2.0 * inradius),
        quarter_turn: Isometry::rotation(FRAC_PI_2),
    }
}

/// Rotation by 2π/5 about the corner shared by the fundamental square and its
/// neighbour across the edge on the positive x axis.
pub fn vertex_rotation() -> Isometry {
    let k = tiling_constants();
    k.step_translation * k.quarter_turn
}

/// Direction of edge `e` in a tile's own frame. The origin's edge 0 points up;
/// other tiles keep their parent (edge 0) below.
pub fn edge_angle(is_origin: bool, e: EdgeIndex) -> f64 {
    let base = if is_origin { FRAC_PI_2 } else { -FRAC_PI_2 };
    base + FRAC_PI_2 * (e % 4) as f64
}

/// Map from the frame of the tile entered to the frame of the tile left, when
/// crossing edge `e` and arriving through edge `k`.
pub fn crossing(from_origin: bool, e: EdgeIndex, to_origin: bool, k: EdgeIndex) -> Isometry {
    let step = tiling_constants().step_translation;
    Isometry::rotation(edge_angle(from_origin, e)) * step * Isometry::rotation(PI - edge_angle(to_origin, k))
}

pub fn tile_frame(addr: &TileAddress) -> Isometry {
    let mut frame = Isometry::IDENTITY;
    let mut cur = TileAddress::Origin;
    let edges: Vec<EdgeIndex> = match addr {
        TileAddress::Origin => Vec::new(),
        TileAddress::Path { branch, steps } => std::iter::once(branch.edge())
            .chain(steps.iter().map(|s| s.edge()))
            .collect(),
    };
    for e in edges {
        let (next, k) = cross(&cur, e);
        frame = frame * crossing(cur.is_origin(), e, next.is_origin(), k);
        cur = next;
    }
    frame
}

pub fn tile_center(addr: &TileAddress) -> HPoint {
    tile_frame(addr).apply(HPoint::APEX).renormalized()
}

/// Frames of every tile within `radius` of `center`, relative to `center`'s
/// own frame. Built by breadth-first development, so precision does not
/// depend on how deep `center` sits.
pub fn develop(center: &TileAddress, radius: u32) -> Vec<(TileAddress, Isometry)> {
    use std::collections::HashMap;
    let order = tiles_within_with_distance(center, radius);
    let mut frames: HashMap<TileAddress, Isometry> = HashMap::new();
    frames.insert(center.clone(), Isometry::IDENTITY);
    let mut layer = vec![center.clone()];
    for _ in 0..radius {
        let mut next_layer = Vec::new();
        for t in &layer {
            let f = frames[t];
            for e in 0..4 {
                let (n, k) = cross(t, e);
                if frames.contains_key(&n) {
                    continue;
                }
                frames.insert(n.clone(), f * crossing(t.is_origin(), e, n.is_origin(), k));
                next_layer.push(n);
            }
        }
        layer = next_layer;
    }
    order.into_iter().map(|(t, _)| {
        let f = frames[&t];
        (t, f)
    }).collect()
}

pub fn to_poincare(p: HPoint) -> DiskPoint {
    DiskPoint { u: p.x / (1.0 + p.z), v: p.y / (1.0 + p.z) }
}

pub fn to_klein(p: HPoint) -> DiskPoint {
    DiskPoint { u: p.x / p.z, v: p.y / p.z }
}

/// Corners of the fundamental square, counterclockwise from the first quadrant.
pub fn fundamental_corners() -> [HPoint; 4] {
    let r = tiling_constants().circumradius;
    std::array::from_fn(|j| {
        let a = FRAC_PI_4 + FRAC_PI_2 * j as f64;
        HPoint { x: r.sinh() * a.cos(), y: r.sinh() * a.sin(), z: r.cosh() }
    })
}

/// Point at fraction `t` along the geodesic from `p` to `q`.
pub fn geodesic_point(p: HPoint, q: HPoint, t: f64) -> HPoint {
    let d = p.distance(q);
    if d < 1e-12 {
        return p;
    }
    let s = d.sinh();
    p.scale(((1.0 - t) * d).sinh() / s).add(q.scale((t * d).sinh() / s)).renormalized()
}

/// Boundary of a square under `frame`, corners first on each edge.
pub fn polygon_points(frame: &Isometry, samples_per_edge: usize) -> Vec<HPoint> {
    let corners = fundamental_corners().map(|c| frame.apply(c).renormalized());
    let n = samples_per_edge.max(1);
    let mut out = Vec::with_capacity(4 * n);
    for j in 0..4 {
        let (p, q) = (corners[j], corners[(j + 1) % 4]);
        for i in 0..n {
            out.push(geodesic_point(p, q, i as f64 / n as f64));
        }
    }
    out
}

pub fn tile_polygon(addr: &TileAddress, samples_per_edge: usize) -> Vec<DiskPoint> {
    polygon_points(&tile_frame(addr), samples_per_edge).into_iter().map(to_poincare).collect()
}

/// Interior angle at corner `p` between the geodesics towards `a` and `b`.
pub fn corner_angle(p: HPoint, a: HPoint, b: HPoint) -> f64 {
    // tangent at p towards q is q + <p,q> p
    let ta = a.add(p.scale(p.minkowski(a)));
    let tb = b.add(p.scale(p.minkowski(b)));
    let cos = ta.minkowski(tb) / (ta.minkowski(ta).sqrt() * tb.minkowski(tb).sqrt());
    cos.clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("direction from a tile to itself is undefined")]
    SameTile,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Frame of `to` relative to `from`'s own frame, composed along a shortest
/// tile path so the error grows with the distance between the two tiles
/// rather than with their depth.
pub fn relative_frame(from: &TileAddress, to: &TileAddress) -> Isometry {
    let mut frame = Isometry::IDENTITY;
    let mut cur = from.clone();
    let mut d = tile_distance(&cur, to);
    while d > 0 {
        let (e, next, k) = (0..4u8)
            .map(|e| {
                let (n, k) = cross(&cur, e);
                (e, n, k)
            })
            .find(|(_, n, _)| tile_distance(n, to) < d)
            .expect("some neighbour is closer");
        frame = frame * crossing(cur.is_origin(), e, next.is_origin(), k);
        cur = next;
        d -= 1;
    }
    frame
}

/// Angle at the centre of `from` between the faced edge and the geodesic to
/// the centre of `to`, counterclockwise positive, in (-π, π].
pub fn direction_angle(from: &TileAddress, from_facing: EdgeIndex, to: &TileAddress) -> Result<f64, GeometryError> {
    if from == to {
        return Err(GeometryError::SameTile);
    }
    let p = relative_frame(from, to).apply(HPoint::APEX);
    Ok(wrap_angle(p.y.atan2(p.x) - edge_angle(from.is_origin(), from_facing)))
}

/// Unit disk to a 1000×1000 viewport, y pointing down.
pub fn to_viewport(p: DiskPoint) -> (f64, f64) {
    (500.0 + 500.0 * p.u, 500.0 - 500.0 * p.v)
}

pub struct SvgPolygon<'a> {
    pub points: &'a [DiskPoint],
    pub fill: String,
    pub label: Option<String>,
}

/// SVG document with the unit disk mapped onto a 1000×1000 viewport.
pub fn svg_document(polygons: &[SvgPolygon<'_>], polyline: Option<&[DiskPoint]>, arrow: Option<f64>) -> String {
    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"1000\" viewBox=\"0 0 1000 1000\">\n");
    s.push_str("<circle cx=\"500\" cy=\"500\" r=\"500\" fill=\"#202020\"/>\n");
    for poly in polygons {
        let pts: Vec<String> = poly
            .points
            .iter()
            .map(|&p| {
                let (x, y) = to_viewport(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = write!(s, "<polygon points=\"{}\" fill=\"{}\" stroke=\"#000\" stroke-width=\"1\"", pts.join(" "), poly.fill);
        match &poly.label {
            Some(l) => {
                let _ = writeln!(s, "><title>{l}</title></polygon>");
            }
            None => s.push_str("/>\n"),
        }
    }
    if let Some(line) = polyline {
        let pts: Vec<String> = line
            .iter()
            .map(|&p| {
                let (x, y) = to_viewport(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"4\"/>", pts.join(" "));
    }
    if let Some(a) = arrow {
        // angle is measured from straight up
        let (sn, cs) = (a + FRAC_PI_2).sin_cos();
        let tip = to_viewport(DiskPoint { u: 0.12 * cs, v: 0.12 * sn });
        let _ = writeln!(s, "<line x1=\"500\" y1=\"500\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ffff00\" stroke-width=\"6\"/>", tip.0, tip.1);
    }
    s.push_str("</svg>\n");
    s
}
