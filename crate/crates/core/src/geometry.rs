//! Scene geometry: polygonal obstacles, piecewise-linear cracks, support
//! functions, direction regularity, and convex-hull assembly from sampled
//! support values.

use serde::{Deserialize, Serialize};

use crate::vec2::*;
use crate::{Error, Result};

/// An observation/probe direction on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// Angle in radians.
    pub theta: f64,
}

impl Direction {
    pub fn new(theta: f64) -> Self {
        Direction { theta }
    }

    pub fn from_vector(v: [f64; 2]) -> Result<Self> {
        let n = norm(v);
        if n < 1e-300 {
            return Err(Error::invalid("direction vector must be nonzero"));
        }
        Ok(Direction {
            theta: v[1].atan2(v[0]),
        })
    }

    /// Unit vector (cos theta, sin theta).
    #[inline]
    pub fn unit(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }

    /// The rotated vector omega_perp = (omega_2, -omega_1).
    #[inline]
    pub fn perp(&self) -> [f64; 2] {
        let u = self.unit();
        [u[1], -u[0]]
    }

    /// The point identified with the complex number omega_1 + i omega_2.
    #[inline]
    pub fn as_complex(&self) -> num_complex::Complex64 {
        let u = self.unit();
        num_complex::Complex64::new(u[0], u[1])
    }
}

/// Disjoint union of simple polygons strictly inside the disc of radius
/// `radius`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonalObstacle {
    /// Vertex loops, normalized to counterclockwise orientation.
    pub components: Vec<Vec<[f64; 2]>>,
    /// Radius of the enclosing disc centered at the origin.
    pub radius: f64,
}

/// Finitely many disjoint piecewise-linear arcs (open vertex chains) strictly
/// inside the disc of radius `radius`.
///
/// The existence of a simple polygon whose boundary contains each arc is an
/// input-side contract; when a witness polygon is supplied we check arc
/// vertices against it, otherwise the caller asserts the assumption.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrackSet {
    /// Open vertex chains (each with at least 2 vertices).
    pub arcs: Vec<Vec<[f64; 2]>>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<[f64; 2]>>>,
}

/// A scene file: either an obstacle or a crack set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub version: u32,
    #[serde(rename = "type")]
    pub kind: String,
    pub components: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "R")]
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub enum Scene {
    Obstacle(PolygonalObstacle),
    Crack(CrackSet),
}

impl Scene {
    pub fn from_json(text: &str, path: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            detail: e.to_string(),
        })?;
        if file.version != 1 {
            return Err(Error::Parse {
                path: path.to_string(),
                detail: format!("unsupported scene version {}", file.version),
            });
        }
        match file.kind.as_str() {
            "obstacle" => Ok(Scene::Obstacle(PolygonalObstacle::new(
                file.components,
                file.radius,
            )?)),
            "crack" => Ok(Scene::Crack(CrackSet::new(file.components, file.radius)?)),
            other => Err(Error::Parse {
                path: path.to_string(),
                detail: format!("unknown scene type {other:?}"),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, components, radius) = match self {
            Scene::Obstacle(o) => ("obstacle", o.components.clone(), o.radius),
            Scene::Crack(c) => ("crack", c.arcs.clone(), c.radius),
        };
        serde_json::to_string_pretty(&SceneFile {
            version: 1,
            kind: kind.to_string(),
            components,
            radius,
        })
        .expect("scene serialization cannot fail")
    }

    pub fn radius(&self) -> f64 {
        match self {
            Scene::Obstacle(o) => o.radius,
            Scene::Crack(c) => c.radius,
        }
    }

    pub fn vertices(&self) -> Vec<[f64; 2]> {
        match self {
            Scene::Obstacle(o) => o.components.iter().flatten().copied().collect(),
            Scene::Crack(c) => c.arcs.iter().flatten().copied().collect(),
        }
    }
}

fn polygon_is_simple(loop_: &[[f64; 2]]) -> bool {
    let n = loop_.len();
    for i in 0..n {
        let (a1, a2) = (loop_[i], loop_[(i + 1) % n]);
        for j in (i + 1)..n {
            // skip adjacent edges (they share a vertex)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (loop_[j], loop_[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

pub fn polygon_signed_area(loop_: &[[f64; 2]]) -> f64 {
    let n = loop_.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = loop_[i];
        let b = loop_[(i + 1) % n];
        acc += cross(a, b);
    }
    0.5 * acc
}

fn min_loop_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    let na = a.len();
    let nb = b.len();
    for i in 0..na {
        let (p1, p2) = (a[i], a[(i + 1) % na]);
        for j in 0..nb {
            let (q1, q2) = (b[j], b[(j + 1) % nb]);
            if segments_intersect(p1, p2, q1, q2) {
                return 0.0;
            }
            best = best
                .min(dist_point_segment(q1, p1, p2))
                .min(dist_point_segment(p1, q1, q2));
        }
    }
    best
}

fn point_in_polygon(p: [f64; 2], loop_: &[[f64; 2]]) -> bool {
    let n = loop_.len();
    let mut inside = false;
    for i in 0..n {
        let a = loop_[i];
        let b = loop_[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let t = (p[1] - a[1]) / (b[1] - a[1]);
            if p[0] < a[0] + t * (b[0] - a[0]) {
                inside = !inside;
            }
        }
    }
    inside
}

impl PolygonalObstacle {
    pub fn new(components: Vec<Vec<[f64; 2]>>, radius: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("obstacle needs at least one component"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("enclosing radius must be positive"));
        }
        let mut comps = components;
        for (i, c) in comps.iter_mut().enumerate() {
            if c.len() < 3 {
                return Err(Error::invalid(format!(
                    "component {i} has fewer than 3 vertices"
                )));
            }
            if !polygon_is_simple(c) {
                return Err(Error::invalid(format!("component {i} self-intersects")));
            }
            if polygon_signed_area(c).abs() < 1e-14 {
                return Err(Error::invalid(format!("component {i} is degenerate")));
            }
            if polygon_signed_area(c) < 0.0 {
                c.reverse();
            }
            for v in c.iter() {
                if norm(*v) >= radius {
                    return Err(Error::invalid(format!(
                        "vertex ({}, {}) is not strictly inside the disc of radius {radius}",
                        v[0], v[1]
                    )));
                }
            }
        }
        for i in 0..comps.len() {
            for j in (i + 1)..comps.len() {
                if min_loop_distance(&comps[i], &comps[j]) <= 0.0
                    || point_in_polygon(comps[i][0], &comps[j])
                    || point_in_polygon(comps[j][0], &comps[i])
                {
                    return Err(Error::invalid(format!(
                        "components {i} and {j} are not disjoint"
                    )));
                }
            }
        }
        Ok(PolygonalObstacle {
            components: comps,
            radius,
        })
    }

    /// Axis-aligned square [-a, a]^2, mostly for tests and examples.
    pub fn square(a: f64, radius: f64) -> Result<Self> {
        PolygonalObstacle::new(
            vec![vec![[-a, -a], [a, -a], [a, a], [-a, a]]],
            radius,
        )
    }

    /// Regular n-gon inscribed in the circle of radius `a`.
    pub fn regular_polygon(n: usize, a: f64, radius: f64) -> Result<Self> {
        let verts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = 2.0 * core::f64::consts::PI * (i as f64) / (n as f64);
                [a * t.cos(), a * t.sin()]
            })
            .collect();
        PolygonalObstacle::new(vec![verts], radius)
    }

    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        PolygonalObstacle {
            components: self
                .components
                .iter()
                .map(|lp| lp.iter().map(|&p| rot(p)).collect())
                .collect(),
            radius: self.radius,
        }
    }

    pub fn translated(&self, b: [f64; 2]) -> Result<Self> {
        PolygonalObstacle::new(
            self.components
                .iter()
                .map(|lp| lp.iter().map(|&p| add(p, b)).collect())
                .collect(),
            self.radius,
        )
    }
}

impl CrackSet {
    pub fn new(arcs: Vec<Vec<[f64; 2]>>, radius: f64) -> Result<Self> {
        Self::with_witness(arcs, radius, None)
    }

    pub fn with_witness(
        arcs: Vec<Vec<[f64; 2]>>,
        radius: f64,
        witness: Option<Vec<Vec<[f64; 2]>>>,
    ) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::invalid("crack set needs at least one arc"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("enclosing radius must be positive"));
        }
        for (i, arc) in arcs.iter().enumerate() {
            if arc.len() < 2 {
                return Err(Error::invalid(format!(
                    "arc {i} needs at least two vertices"
                )));
            }
            for v in arc {
                if norm(*v) >= radius {
                    return Err(Error::invalid(format!(
                        "vertex ({}, {}) is not strictly inside the disc of radius {radius}",
                        v[0], v[1]
                    )));
                }
            }
            for w in 0..arc.len() - 1 {
                if dist(arc[w], arc[w + 1]) < 1e-12 {
                    return Err(Error::invalid(format!("arc {i} has a zero-length piece")));
                }
            }
        }
        // arcs pairwise disjoint
        for i in 0..arcs.len() {
            for j in (i + 1)..arcs.len() {
                for a in 0..arcs[i].len() - 1 {
                    for b in 0..arcs[j].len() - 1 {
                        if segments_intersect(
                            arcs[i][a],
                            arcs[i][a + 1],
                            arcs[j][b],
                            arcs[j][b + 1],
                        ) {
                            return Err(Error::invalid(format!(
                                "arcs {i} and {j} intersect"
                            )));
                        }
                    }
                }
            }
        }
        if let Some(w) = &witness {
            for (i, arc) in arcs.iter().enumerate() {
                let on_some = w.iter().any(|poly| {
                    arc.iter().all(|&v| {
                        let n = poly.len();
                        (0..n).any(|e| {
                            dist_point_segment(v, poly[e], poly[(e + 1) % n]) < 1e-10
                        })
                    })
                });
                if !on_some {
                    return Err(Error::invalid(format!(
                        "arc {i} does not lie on the boundary of any witness polygon"
                    )));
                }
            }
        }
        Ok(CrackSet {
            arcs,
            radius,
            witness,
        })
    }
}

/// h(omega) = sup over the shape of x . omega. Piecewise-linear shapes attain
/// the sup at a vertex.
pub fn support_function(scene: &Scene, omega: Direction) -> Result<f64> {
    let u = omega.unit();
    let mut best = f64::NEG_INFINITY;
    for v in scene.vertices() {
        best = best.max(dot(v, u));
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::invalid("empty shape has no support function"));
    }
    Ok(best)
}

fn scene_diameter(scene: &Scene) -> f64 {
    let verts = scene.vertices();
    let mut d = 0.0_f64;
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            d = d.max(dist(verts[i], verts[j]));
        }
    }
    d
}

/// A direction is regular when the supporting line meets the shape in exactly
/// one point: one vertex attains the max (within `tol * diameter`) and no
/// incident edge is perpendicular to omega.
pub fn is_regular_direction(scene: &Scene, omega: Direction, tol: f64) -> Result<bool> {
    let u = omega.unit();
    let h = support_function(scene, omega)?;
    let diam = scene_diameter(scene).max(1e-300);
    let eps = tol * diam;

    // Collect (vertex, incident edge directions) and count attaining vertices.
    let mut attaining = 0usize;
    let mut edges_at_max: Vec<[f64; 2]> = Vec::new();
    let mut visit = |chain: &[[f64; 2]], closed: bool| {
        let n = chain.len();
        for i in 0..n {
            if h - dot(chain[i], u) <= eps {
                attaining += 1;
                let prev = if i > 0 {
                    Some(chain[i - 1])
                } else if closed {
                    Some(chain[n - 1])
                } else {
                    None
                };
                let next = if i + 1 < n {
                    Some(chain[i + 1])
                } else if closed {
                    Some(chain[0])
                } else {
                    None
                };
                for nb in [prev, next].into_iter().flatten() {
                    edges_at_max.push(sub(nb, chain[i]));
                }
            }
        }
    };
    match scene {
        Scene::Obstacle(o) => {
            for c in &o.components {
                visit(c, true);
            }
        }
        Scene::Crack(c) => {
            for a in &c.arcs {
                visit(a, false);
            }
        }
    }
    if attaining != 1 {
        return Ok(false);
    }
    // An incident edge perpendicular to omega would make the whole edge attain.
    for e in edges_at_max {
        let len = norm(e);
        if len > 0.0 && dot(e, u).abs() <= tol * len.max(diam) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default attainment tolerance for [`is_regular_direction`].
pub const REGULARITY_TOL: f64 = 1e-9;

/// Intersection of the half-planes { x . omega_i <= h_i }, clipped against a
/// bounding box of side 4 max(R, 1). Returns the vertex loop in
/// counterclockwise order.
pub fn hull_from_support(samples: &[(Direction, f64)]) -> Result<Vec<[f64; 2]>> {
    if samples.len() < 3 {
        return Err(Error::invalid(
            "hull_from_support needs at least 3 directions",
        ));
    }
    // Directions should span the circle; otherwise the "hull" is unbounded.
    let mut thetas: Vec<f64> = samples
        .iter()
        .map(|(d, _)| d.theta.rem_euclid(2.0 * core::f64::consts::PI))
        .collect();
    thetas.sort_by(f64::total_cmp);
    let mut max_gap = 2.0 * core::f64::consts::PI + thetas[0] - thetas[thetas.len() - 1];
    for w in thetas.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    if max_gap >= core::f64::consts::PI {
        return Err(Error::invalid(
            "directions must span the circle (largest angular gap >= pi)",
        ));
    }

    let r = samples
        .iter()
        .map(|(_, h)| h.abs())
        .fold(1.0_f64, f64::max);
    let half = 2.0 * r;
    let mut poly: Vec<[f64; 2]> = vec![
        [-half, -half],
        [half, -half],
        [half, half],
        [-half, half],
    ];
    for (idx, (dir, h)) in samples.iter().enumerate() {
        if !h.is_finite() {
            return Err(Error::invalid(format!(
                "support sample {idx} is not finite"
            )));
        }
        poly = clip_halfplane(&poly, dir.unit(), *h);
        if poly.len() < 3 || polygon_signed_area(&poly).abs() < 1e-12 * r * r {
            return Err(Error::InfeasibleHull {
                constraint: idx,
                theta: dir.theta,
                h: *h,
            });
        }
    }
    Ok(simplify_loop(poly, 1e-12 * r))
}

/// Drop near-duplicate vertices and collinear triples left over by clipping.
fn simplify_loop(poly: Vec<[f64; 2]>, tol: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().map(|&q| dist(p, q) > tol).unwrap_or(true) {
            out.push(p);
        }
    }
    while out.len() > 1 && dist(out[0], out[out.len() - 1]) <= tol {
        out.pop();
    }
    let mut i = 0;
    while out.len() > 3 && i < out.len() {
        let n = out.len();
        let a = out[(i + n - 1) % n];
        let b = out[i];
        let c = out[(i + 1) % n];
        if cross(sub(b, a), sub(c, a)).abs() <= tol * dist(a, c).max(1.0) {
            out.remove(i);
        } else {
            i += 1;
        }
    }
    out
}

/// Sutherland-Hodgman clip of a convex polygon by { x . n <= c }.
fn clip_halfplane(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let fa = dot(a, n) - c;
        let fb = dot(b, n) - c;
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(add(a, scale(sub(b, a), t)));
        }
    }
    out
}

/// Hausdorff distance between two convex polygons (vertex loops).
pub fn hausdorff_convex(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let one_sided = |p: &[[f64; 2]], q: &[[f64; 2]]| {
        let nq = q.len();
        p.iter()
            .map(|&v| {
                if point_in_polygon(v, q) {
                    0.0
                } else {
                    (0..nq)
                        .map(|i| dist_point_segment(v, q[i], q[(i + 1) % nq]))
                        .fold(f64::INFINITY, f64::min)
                }
            })
            .fold(0.0_f64, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
