//! Panel discretization of polygon boundaries: per-edge panels graded toward
//! corners, Gauss-Legendre nodes per panel.

use crate::geometry::PolygonalObstacle;
use crate::vec2::*;
use crate::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by upward recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            pp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Barycentric interpolation weights for a node set.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for q in 0..n {
        for r in 0..n {
            if r != q {
                w[q] /= nodes[q] - nodes[r];
            }
        }
    }
    w
}

/// Evaluate the Lagrange basis at `u` for nodes with barycentric weights.
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], u: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    for q in 0..n {
        if (u - nodes[q]).abs() < 1e-14 {
            out[q] = 1.0;
            return out;
        }
    }
    let mut denom = 0.0;
    for q in 0..n {
        let term = bary[q] / (u - nodes[q]);
        out[q] = term;
        denom += term;
    }
    for v in out.iter_mut() {
        *v /= denom;
    }
    out
}

/// Graded breakpoint map on [0, 1]: s^p / (s^p + (1-s)^p); clusters toward
/// both ends with exponent p.
fn grading_map(s: f64, p: f64) -> f64 {
    let a = s.powf(p);
    let b = (1.0 - s).powf(p);
    a / (a + b)
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy)]
pub struct DiscParams {
    /// None = choose per edge from length, wavelength and corner sharpness.
    pub panels_per_edge: Option<usize>,
    pub grading_exponent: f64,
    pub nodes_per_panel: usize,
    /// Panels per wavelength along long edges (auto mode).
    pub panels_per_wavelength: f64,
    /// Minimum panels on an edge adjacent to a sharp corner (auto mode).
    pub sharp_corner_panels: usize,
}

impl Default for DiscParams {
    fn default() -> Self {
        DiscParams {
            panels_per_edge: None,
            grading_exponent: 3.0,
            nodes_per_panel: 10,
            panels_per_wavelength: 6.0,
            sharp_corner_panels: 14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    /// Parameter range within the edge, in [0, 1].
    pub t0: f64,
    pub t1: f64,
    pub first_node: usize,
    pub n_nodes: usize,
    /// Chord midpoint and half-length for distance queries.
    pub mid: [f64; 2],
    pub half_len: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeDisc {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Outward unit normal (components are CCW loops).
    pub normal: [f64; 2],
    pub length: f64,
    pub component: usize,
    pub panels: Vec<Panel>,
}

impl EdgeDisc {
    #[inline]
    pub fn point(&self, t: f64) -> [f64; 2] {
        add(self.a, scale(sub(self.b, self.a), t))
    }
}

/// Realized boundary discretization: panels, nodes, weights, normals.
#[derive(Debug, Clone)]
pub struct BoundaryDiscretization {
    pub edges: Vec<EdgeDisc>,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub node_edge: Vec<usize>,
    pub params: DiscParams,
    /// Reference Gauss-Legendre rule shared by all panels.
    pub gl_nodes: Vec<f64>,
    pub gl_weights: Vec<f64>,
    pub gl_bary: Vec<f64>,
}

impl BoundaryDiscretization {
    pub fn build(scene: &PolygonalObstacle, params: DiscParams) -> Result<Self> {
        Self::build_for_k(scene, params, 1.0)
    }

    pub fn build_for_k(
        scene: &PolygonalObstacle,
        params: DiscParams,
        k: f64,
    ) -> Result<Self> {
        if params.nodes_per_panel < 2 || params.nodes_per_panel > 32 {
            return Err(Error::invalid("nodes_per_panel out of range 2..=32"));
        }
        let (gl_nodes, gl_weights) = gauss_legendre(params.nodes_per_panel);
        let gl_bary = barycentric_weights(&gl_nodes);
        let mut disc = BoundaryDiscretization {
            edges: Vec::new(),
            nodes: Vec::new(),
            weights: Vec::new(),
            normals: Vec::new(),
            node_edge: Vec::new(),
            params,
            gl_nodes,
            gl_weights,
            gl_bary,
        };
        let wavelength = core::f64::consts::TAU / k;
        for (ci, loop_) in scene.components.iter().enumerate() {
            let n = loop_.len();
            for i in 0..n {
                let a = loop_[i];
                let b = loop_[(i + 1) % n];
                let e = sub(b, a);
                let len = norm(e);
                // outward normal of a CCW loop
                let normal = [e[1] / len, -e[0] / len];

                let n_panels = match params.panels_per_edge {
                    Some(p) => p.max(1),
                    None => {
                        let base = (len / wavelength * params.panels_per_wavelength).ceil()
                            as usize;
                        let sharp = |j: usize, l: usize| {
                            let prev = loop_[(j + n - 1) % n];
                            let cur = loop_[j];
                            let next = loop_[l];
                            let e1 = sub(cur, prev);
                            let e2 = sub(next, cur);
                            let c = dot(e1, e2) / (norm(e1) * norm(e2));
                            c.clamp(-1.0, 1.0).acos() > 20.0_f64.to_radians()
                        };
                        let corner_min = if sharp(i, (i + 1) % n) || sharp((i + 1) % n, (i + 2) % n)
                        {
                            params.sharp_corner_panels
                        } else {
                            2
                        };
                        base.max(corner_min).max(2)
                    }
                };

                let mut edge = EdgeDisc {
                    a,
                    b,
                    normal,
                    length: len,
                    component: ci,
                    panels: Vec::with_capacity(n_panels),
                };
                for pidx in 0..n_panels {
                    let t0 = grading_map(pidx as f64 / n_panels as f64, params.grading_exponent);
                    let t1 = grading_map(
                        (pidx + 1) as f64 / n_panels as f64,
                        params.grading_exponent,
                    );
                    let first_node = disc.nodes.len();
                    for (q, &u) in disc.gl_nodes.iter().enumerate() {
                        let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * u;
                        let x = edge.point(t);
                        disc.nodes.push(x);
                        disc.weights.push(0.5 * (t1 - t0) * disc.gl_weights[q] * len);
                        disc.normals.push(normal);
                        disc.node_edge.push(disc.edges.len());
                    }
                    let mid = edge.point(0.5 * (t0 + t1));
                    edge.panels.push(Panel {
                        t0,
                        t1,
                        first_node,
                        n_nodes: params.nodes_per_panel,
                        mid,
                        half_len: 0.5 * (t1 - t0) * len,
                    });
                }
                disc.edges.push(edge);
            }
        }
        Ok(disc)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Total boundary length recovered by the weights (sanity metric).
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}
