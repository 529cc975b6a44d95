//! Limited-aperture reconstruction: the Herglotz operator on a sub-arc, its
//! Tikhonov minimum-norm inverse with the Morozov discrepancy rule, and the
//! resulting indicator.
//!
//! With data on an arc Gamma, densities live on -Gamma:
//!   (H g)(y) = int_{-Gamma} e^{i k y.phi} g(phi) dsigma(phi),  y in B_R,
//! and the minimum-norm density with discrepancy delta is
//!   g = (alpha I + H*H)^{-1} H* v,  ||H g - v||_{H^1(B_R)} = delta,
//! where v is the probe wave and alpha comes from a monotone bisection.
//! The pairing int_Gamma F(phi) g(-phi) dsigma then behaves like the
//! full-aperture indicator as tau grows, provided the origin lies inside the
//! scatterer.
//!
//! Discretely, H^1(B_R) is realized by value and gradient samples on a polar
//! grid (Gauss radially, uniform angularly); with u = sqrt(w) g and rows
//! scaled by sqrt(W_q), the normal equations reduce to the Hermitian system
//! (alpha I + Hhat^H Hhat).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::enclosure::{IndicatorMode, IndicatorRecord, IndicatorTrace};
use crate::farfield::{Aperture, FarFieldDataset};
use crate::geometry::Direction;
use crate::herglotz::CgoWave;
use crate::{Error, Result};

const TAU_2PI: f64 = core::f64::consts::TAU;

/// Grid resolution knobs for the operator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ApertureGrid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for ApertureGrid {
    fn default() -> Self {
        ApertureGrid {
            radial: 24,
            angular: 64,
        }
    }
}

/// Discretized Herglotz operator for one aperture.
pub struct ApertureOperator {
    pub aperture: Aperture,
    pub k: f64,
    pub radius: f64,
    /// Density nodes on -Gamma (reflected data grid) and their arc weights.
    pub density_angles: Vec<f64>,
    pub density_weights: Vec<f64>,
    /// Collocation points and area weights of the polar grid on B_R.
    grid: Vec<([f64; 2], f64)>,
    /// Row-scaled sampling matrix: (3 n_q) x n_g, acting on u = sqrt(w) g.
    /// Retained for adjoint-consistency checks; the solve path works off the
    /// SVD factors.
    #[allow(dead_code)]
    hhat: DMatrix<Complex64>,
    /// Thin SVD of hhat; working through the factors instead of the Gram
    /// keeps the full f64 singular-value range usable (the normal equations
    /// would square the conditioning and halve the reachable discrepancy
    /// range).
    svd_u: DMatrix<Complex64>,
    svd_sigma: Vec<f64>,
    svd_v: DMatrix<Complex64>,
    /// Extremes of the Gram spectrum (squared singular values).
    pub gram_min_eig: f64,
    pub gram_max_eig: f64,
}

fn arc_of(aperture: Aperture) -> (f64, f64) {
    match aperture {
        Aperture::Full => (0.0, TAU_2PI),
        Aperture::Arc { theta1, theta2 } => (theta1, theta2),
    }
}

impl ApertureOperator {
    /// Assemble for a given aperture with n_density nodes on -Gamma.
    ///
    /// `for_dataset` is the usual entry point; it aligns the density nodes
    /// with the reflected data grid so the indicator pairing needs no
    /// interpolation.
    pub fn assemble(
        aperture: Aperture,
        k: f64,
        radius: f64,
        n_density: usize,
        grid: ApertureGrid,
    ) -> Result<Self> {
        if !(k > 0.0 && radius > 0.0) {
            return Err(Error::invalid("aperture operator needs k > 0 and R > 0"));
        }
        let (t1, t2) = arc_of(aperture);
        if !(t2 - t1 > 1e-6) {
            return Err(Error::invalid("aperture arc is degenerate (length < 1e-6)"));
        }
        if n_density < 4 {
            return Err(Error::invalid("need at least 4 density nodes"));
        }
        // density nodes on -Gamma: reflect the aperture grid by pi
        let full = aperture.is_full();
        let (angles, weights): (Vec<f64>, Vec<f64>) = if full {
            let h = TAU_2PI / n_density as f64;
            (
                (0..n_density)
                    .map(|j| t1 + h * j as f64 + core::f64::consts::PI)
                    .collect(),
                vec![h; n_density],
            )
        } else {
            let h = (t2 - t1) / (n_density - 1) as f64;
            let mut w = vec![h; n_density];
            w[0] = 0.5 * h;
            w[n_density - 1] = 0.5 * h;
            (
                (0..n_density)
                    .map(|j| t1 + h * j as f64 + core::f64::consts::PI)
                    .collect(),
                w,
            )
        };

        // polar collocation grid: Gauss nodes radially (area weight r dr),
        // uniform angularly
        let (gl_nodes, gl_weights) = crate::forward::panels::gauss_legendre(grid.radial);
        let mut pts = Vec::with_capacity(grid.radial * grid.angular);
        for (i, &u) in gl_nodes.iter().enumerate() {
            let r = 0.5 * radius * (u + 1.0);
            let wr = 0.5 * radius * gl_weights[i];
            for a in 0..grid.angular {
                let th = TAU_2PI * (a as f64) / (grid.angular as f64);
                let w_area = wr * r * (TAU_2PI / grid.angular as f64);
                pts.push(([r * th.cos(), r * th.sin()], w_area));
            }
        }

        let n_g = n_density;
        let n_rows = 3 * pts.len();
        let mut hhat = DMatrix::<Complex64>::zeros(n_rows, n_g);
        for (j, (&phi_th, &wj)) in angles.iter().zip(&weights).enumerate() {
            let phi = [phi_th.cos(), phi_th.sin()];
            let sw = wj.sqrt();
            for (q, &(y, w_area)) in pts.iter().enumerate() {
                let e = (Complex64::i() * k * (y[0] * phi[0] + y[1] * phi[1])).exp();
                let sq = w_area.sqrt();
                hhat[(3 * q, j)] = sw * sq * e;
                hhat[(3 * q + 1, j)] = sw * sq * Complex64::i() * k * phi[0] * e;
                hhat[(3 * q + 2, j)] = sw * sq * Complex64::i() * k * phi[1] * e;
            }
        }
        let svd = hhat.clone().svd(true, true);
        let svd_u = svd.u.expect("svd with u");
        let svd_v = svd.v_t.expect("svd with v_t").adjoint();
        let svd_sigma: Vec<f64> = svd.singular_values.iter().cloned().collect();
        let smin = svd_sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = svd_sigma.iter().cloned().fold(0.0_f64, f64::max);
        Ok(ApertureOperator {
            aperture,
            k,
            radius,
            density_angles: angles,
            density_weights: weights,
            grid: pts,
            hhat,
            svd_u,
            svd_sigma,
            svd_v,
            gram_min_eig: smin * smin,
            gram_max_eig: smax * smax,
        })
    }

    /// Operator aligned with a dataset's grid (density nodes = reflected
    /// sample angles, trapezoid weights).
    pub fn for_dataset(
        ds: &FarFieldDataset,
        radius: f64,
        grid: ApertureGrid,
    ) -> Result<Self> {
        Self::assemble(ds.aperture, ds.k, radius, ds.n, grid)
    }

    /// Stacked, weight-scaled target vector of a probe field.
    fn target_vector(&self, probe: &impl crate::farfield::ProbeField) -> DVector<Complex64> {
        let mut v = DVector::zeros(3 * self.grid.len());
        for (q, &(y, w_area)) in self.grid.iter().enumerate() {
            let (val, grad) = probe.eval_with_grad(y);
            let sq = w_area.sqrt();
            v[3 * q] = sq * val;
            v[3 * q + 1] = sq * grad[0];
            v[3 * q + 2] = sq * grad[1];
        }
        v
    }

    /// Discrete H^1(B_R) norm of a probe field.
    pub fn h1_norm(&self, probe: &impl crate::farfield::ProbeField) -> f64 {
        self.target_vector(probe).norm()
    }

    /// Herglotz image of a density sample vector at a point (value, gradient).
    pub fn apply_density(
        &self,
        g: &[Complex64],
        y: [f64; 2],
    ) -> (Complex64, [Complex64; 2]) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut g1 = Complex64::new(0.0, 0.0);
        let mut g2 = Complex64::new(0.0, 0.0);
        for ((&th, &w), &gj) in self
            .density_angles
            .iter()
            .zip(&self.density_weights)
            .zip(g)
        {
            let phi = [th.cos(), th.sin()];
            let e = (Complex64::i() * self.k * (y[0] * phi[0] + y[1] * phi[1])).exp() * w * gj;
            v += e;
            g1 += Complex64::i() * self.k * phi[0] * e;
            g2 += Complex64::i() * self.k * phi[1] * e;
        }
        (v, [g1, g2])
    }

    /// Discrepancy ||H g_alpha - v||_{H^1} for the Tikhonov solution at
    /// alpha, from the SVD: with c = U^H vhat,
    ///   disc^2 = sum_i (alpha/(sigma_i^2+alpha))^2 |c_i|^2 + ||vhat_perp||^2.
    fn discrepancy(&self, alpha: f64, c: &DVector<Complex64>, v_norm2: f64) -> f64 {
        let mut in_range = 0.0;
        let mut c_norm2 = 0.0;
        for (ci, &s) in c.iter().zip(&self.svd_sigma) {
            let f = alpha / (s * s + alpha);
            in_range += f * f * ci.norm_sqr();
            c_norm2 += ci.norm_sqr();
        }
        let perp = (v_norm2 - c_norm2).max(0.0);
        (in_range + perp).sqrt()
    }

    /// Tikhonov coefficient vector u_alpha = V diag(sigma/(sigma^2+alpha)) c.
    fn tikhonov_solution(&self, alpha: f64, c: &DVector<Complex64>) -> DVector<Complex64> {
        let scaled = DVector::from_fn(c.len(), |i, _| {
            let s = self.svd_sigma[i];
            c[i] * (s / (s * s + alpha))
        });
        &self.svd_v * scaled
    }
}

/// How delta is specified.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum DeltaSpec {
    Absolute(f64),
    /// delta = fraction * ||v||_{H^1}; keeps the Morozov problem well posed
    /// as the probe norm grows like e^{tau R}. This tau-scaling is a
    /// documented deviation from the fixed-delta theory and is recorded in
    /// the output metadata.
    RelativeToProbe(f64),
}

impl Default for DeltaSpec {
    fn default() -> Self {
        DeltaSpec::RelativeToProbe(1e-3)
    }
}

/// Minimum-norm density with discrepancy delta.
#[derive(Debug, Clone, Serialize)]
pub struct MinNormDensity {
    /// Samples on -Gamma, aligned with the operator's density nodes.
    pub g: Vec<Complex64>,
    pub alpha: f64,
    pub achieved: f64,
    pub delta: f64,
    pub tau: f64,
    pub omega: Direction,
    pub k: f64,
    /// Set when delta >= ||v||: g = 0 suffices and alpha is +infinity.
    pub trivial: bool,
    /// L2(-Gamma) norm of the density.
    pub g_norm: f64,
    pub probe_h1_norm: f64,
}

/// Morozov bisection tolerance: |achieved - delta| <= this times delta.
pub const MOROZOV_REL_TOL: f64 = 1e-8;

/// Solve the discrepancy equation by bisection on log alpha, using the
/// monotone growth of the discrepancy in alpha.
pub fn min_norm_density(
    op: &ApertureOperator,
    tau: f64,
    omega: Direction,
    delta_spec: DeltaSpec,
) -> Result<MinNormDensity> {
    let probe = CgoWave::new(tau, op.k, omega);
    let vhat = op.target_vector(&probe);
    let v_norm = vhat.norm();
    let delta = match delta_spec {
        DeltaSpec::Absolute(d) => d,
        DeltaSpec::RelativeToProbe(f) => f * v_norm,
    };
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    if delta >= v_norm {
        return Ok(MinNormDensity {
            g: vec![Complex64::new(0.0, 0.0); op.density_angles.len()],
            alpha: f64::INFINITY,
            achieved: v_norm,
            delta,
            tau,
            omega,
            k: op.k,
            trivial: true,
            g_norm: 0.0,
            probe_h1_norm: v_norm,
        });
    }
    let c = op.svd_u.adjoint() * &vhat;
    let v_norm2 = v_norm * v_norm;
    let scale = op.gram_max_eig.max(1e-300);
    // 14 decades of usable singular values on either side of the bisection:
    // alpha filters modes with sigma^2 < alpha, and the SVD route keeps
    // sigma accurate down to the f64 floor ~ 1e-14 sigma_max, i.e. alpha
    // down to 1e-28 gram_max.
    let mut lo = -28.0_f64;
    let mut hi = 2.0_f64;
    let d_lo = op.discrepancy(10f64.powf(lo) * scale, &c, v_norm2);
    if d_lo > delta * (1.0 + MOROZOV_REL_TOL) {
        return Err(Error::numerical(format!(
            "discrepancy floor {d_lo:.3e} exceeds delta {delta:.3e}: the discrete operator cannot reach the target (aperture too small or grid too coarse)"
        )));
    }
    let mut d_hi;
    loop {
        d_hi = op.discrepancy(10f64.powf(hi) * scale, &c, v_norm2);
        if d_hi >= delta || hi > 8.0 {
            break;
        }
        hi += 2.0;
    }
    if d_hi < delta {
        return Err(Error::numerical(format!(
            "discrepancy stays below delta even at alpha = 1e{hi:.0} x scale; bracket failure (d_hi = {d_hi:.3e}, delta = {delta:.3e})"
        )));
    }
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d_mid = op.discrepancy(10f64.powf(mid) * scale, &c, v_norm2);
        if (d_mid - delta).abs() <= MOROZOV_REL_TOL * delta {
            best = Some((10f64.powf(mid) * scale, d_mid));
            break;
        }
        if d_mid > delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (alpha, achieved) = best.ok_or_else(|| {
        Error::numerical(format!(
            "Morozov bisection failed to reach |achieved - delta| <= {MOROZOV_REL_TOL:.1e} delta"
        ))
    })?;
    let u = op.tikhonov_solution(alpha, &c);
    // back to density samples: g = u / sqrt(w)
    let g: Vec<Complex64> = u
        .iter()
        .zip(&op.density_weights)
        .map(|(ui, w)| ui / w.sqrt())
        .collect();
    let g_norm = u.norm();
    Ok(MinNormDensity {
        g,
        alpha,
        achieved,
        delta,
        tau,
        omega,
        k: op.k,
        trivial: false,
        g_norm,
        probe_h1_norm: v_norm,
    })
}

/// The limited-aperture pairing int_Gamma F(phi) g_{tau,delta}(-phi) dsigma,
/// computed index-aligned on the dataset grid.
pub fn limited_indicator(
    ds: &FarFieldDataset,
    op: &ApertureOperator,
    mnd: &MinNormDensity,
) -> Result<Complex64> {
    if ds.aperture != op.aperture {
        return Err(Error::invalid(
            "dataset aperture does not match the operator aperture",
        ));
    }
    if (ds.k - op.k).abs() > 1e-12 {
        return Err(Error::invalid("dataset and operator disagree on k"));
    }
    if ds.n != mnd.g.len() {
        return Err(Error::invalid(
            "density sample count does not match the dataset grid",
        ));
    }
    let weights = ds.weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..ds.n {
        acc += weights[j] * ds.value(j) * mnd.g[j];
    }
    Ok(acc)
}

/// Boundary mismatch of the Tikhonov fit: discrete L2(dB_R) norms of
/// (Hg - v) and its normal derivative, the measurable proxy for the trace
/// bound ||Hg - v|| + ||dnu(Hg - v)|| <= C delta.
pub fn boundary_mismatch(
    op: &ApertureOperator,
    mnd: &MinNormDensity,
    n_samples: usize,
) -> (f64, f64) {
    let probe = CgoWave::new(mnd.tau, op.k, mnd.omega);
    let mut val2 = 0.0;
    let mut der2 = 0.0;
    let w = TAU_2PI * op.radius / n_samples as f64;
    for j in 0..n_samples {
        let th = TAU_2PI * (j as f64) / n_samples as f64;
        let nu = [th.cos(), th.sin()];
        let y = [op.radius * nu[0], op.radius * nu[1]];
        let (hv, hg) = op.apply_density(&mnd.g, y);
        let (pv, pg) = probe.eval_with_grad(y);
        let dv = (hg[0] - pg[0]) * nu[0] + (hg[1] - pg[1]) * nu[1];
        val2 += (hv - pv).norm_sqr() * w;
        der2 += dv.norm_sqr() * w;
    }
    (val2.sqrt(), der2.sqrt())
}

/// Support estimation over a tau ladder: Morozov solve and pairing per tau,
/// then the shared extrapolation machinery.
pub fn limited_support_estimate(
    ds: &FarFieldDataset,
    op: &ApertureOperator,
    omega: Direction,
    taus: &[f64],
    delta_spec: DeltaSpec,
) -> Result<(crate::enclosure::SupportEstimate, IndicatorTrace, Vec<MinNormDensity>)> {
    if taus.len() < 5 {
        return Err(Error::invalid(
            "the tau ladder needs at least 5 values for estimation",
        ));
    }
    let data_scale = (0..ds.n).map(|j| ds.value(j).norm()).fold(0.0, f64::max);
    // honest per-sample accuracy: synthesis residual when recorded, else
    // the f64 storage floor
    let value_accuracy = ds
        .meta
        .as_ref()
        .and_then(|m| m.value_accuracy)
        .unwrap_or(16.0 * f64::EPSILON * data_scale);
    let mut records = Vec::with_capacity(taus.len());
    let mut densities = Vec::with_capacity(taus.len());
    for (idx, &tau) in taus.iter().enumerate() {
        let mnd = min_norm_density(op, tau, omega, delta_spec)?;
        let val = limited_indicator(ds, op, &mnd)?.norm();
        // data-noise channel: |sum w F g| error ~ eps_F sum w |g|
        let g_l1: f64 = mnd
            .g
            .iter()
            .zip(&op.density_weights)
            .map(|(g, w)| g.norm() * w)
            .sum();
        let nb = value_accuracy * g_l1;
        let above = val > 1e-300;
        records.push(IndicatorRecord {
            n: idx + 1,
            tau,
            abs_indicator: val,
            log_abs_over_tau: if above { val.ln() / tau } else { f64::NAN },
            noise_bound: nb,
            usable: above && nb <= 0.05 * val,
        });
        densities.push(mnd);
    }
    let trace = IndicatorTrace {
        omega,
        mode: IndicatorMode::FarFieldSingle { d: ds.d },
        records,
    };
    let est = crate::enclosure::estimate_support(&trace)?;
    Ok((est, trace, densities))
}
