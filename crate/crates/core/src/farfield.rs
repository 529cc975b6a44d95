//! Far-field datasets, Fourier spectra, and the far-field/near-field pairing
//! that links them: for any radiating field,
//!
//!   int_Gamma F(-phi) g(phi) dsigma
//!     = -(e^{i pi/4} / sqrt(8 pi k)) int_{|x|=R} (du/dnu v_g - dv_g/dnu u) ds,
//!
//! with v_g the Herglotz wave of g. The left side is evaluated spectrally
//! (exact Fourier pairing), the right side by the periodic trapezoid rule.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::herglotz::DensityCoeffs;
use crate::specfun::bessel_j_seq;
use crate::{Error, Result};

const TAU_2PI: f64 = core::f64::consts::TAU;

/// Observation aperture: the whole circle or a closed arc [theta1, theta2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Aperture {
    Full,
    Arc { theta1: f64, theta2: f64 },
}

impl Aperture {
    pub fn is_full(&self) -> bool {
        matches!(self, Aperture::Full)
    }
}

/// Provenance carried alongside the samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    /// Set when the scene is known to contain the origin (limited-aperture
    /// theory assumes it).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_inside: Option<bool>,
    /// Synthesis-side estimate of the absolute accuracy of the sampled
    /// values (solver residual scale); consumers use it to bound how far
    /// amplified-density pairings can be trusted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_accuracy: Option<f64>,
}

/// Stored Fourier coefficients G_m = int F(-phi) phi^m dsigma, m in
/// [-m_max, m_max]. Synthesized datasets carry them to per-mode relative
/// accuracy; sampled values alone bottom out at the f64 trapezoid floor,
/// which caps how far the high-order densities can be paired.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumData {
    pub m_max: usize,
    /// Coefficients as [re, im], index m + m_max.
    pub values: Vec<[f64; 2]>,
}

/// Sampled far-field pattern F(phi_j; d, k) on a uniform angular grid.
///
/// Full aperture: theta_j = 2 pi j / n. Arc: n points including both
/// endpoints. The (-phi) reindexing needed by the pairing is an exact index
/// rotation on the full grid (n even), never an interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarFieldDataset {
    pub version: u32,
    pub k: f64,
    pub d: [f64; 2],
    pub aperture: Aperture,
    pub n: usize,
    /// Complex samples as [re, im] pairs.
    pub values: Vec<[f64; 2]>,
    /// Optional exact Fourier coefficients of F(-phi) (synthesis side).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<SpectrumData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<DatasetMeta>,
}

impl FarFieldDataset {
    pub fn new(
        k: f64,
        d: [f64; 2],
        aperture: Aperture,
        values: Vec<Complex64>,
        meta: Option<DatasetMeta>,
    ) -> Result<Self> {
        let ds = FarFieldDataset {
            version: 1,
            k,
            d,
            aperture,
            n: values.len(),
            values: values.iter().map(|z| [z.re, z.im]).collect(),
            coefficients: None,
            meta,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::invalid(format!(
                "unsupported dataset version {}",
                self.version
            )));
        }
        if self.n < 4 || self.values.len() != self.n {
            return Err(Error::invalid(
                "dataset needs n >= 4 samples and matching values length",
            ));
        }
        if !(self.k > 0.0) {
            return Err(Error::invalid("dataset k must be positive"));
        }
        let dn = self.d[0].hypot(self.d[1]);
        if (dn - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("incident direction d must be unit length"));
        }
        if let Aperture::Arc { theta1, theta2 } = self.aperture {
            if !(theta2 > theta1) || theta2 - theta1 > TAU_2PI + 1e-12 {
                return Err(Error::invalid("arc aperture needs theta1 < theta2 <= theta1 + 2 pi"));
            }
        }
        if self.values.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::invalid("dataset values must be finite"));
        }
        Ok(())
    }

    /// Sample angles, strictly increasing; uniform spacing by construction.
    pub fn angles(&self) -> Vec<f64> {
        match self.aperture {
            Aperture::Full => (0..self.n)
                .map(|j| TAU_2PI * (j as f64) / (self.n as f64))
                .collect(),
            Aperture::Arc { theta1, theta2 } => {
                let h = (theta2 - theta1) / ((self.n - 1) as f64);
                (0..self.n).map(|j| theta1 + h * (j as f64)).collect()
            }
        }
    }

    #[inline]
    pub fn value(&self, j: usize) -> Complex64 {
        Complex64::new(self.values[j][0], self.values[j][1])
    }

    /// Trapezoid weights for integration over the aperture.
    pub fn weights(&self) -> Vec<f64> {
        match self.aperture {
            Aperture::Full => vec![TAU_2PI / self.n as f64; self.n],
            Aperture::Arc { theta1, theta2 } => {
                let h = (theta2 - theta1) / ((self.n - 1) as f64);
                let mut w = vec![h; self.n];
                w[0] = 0.5 * h;
                w[self.n - 1] = 0.5 * h;
                w
            }
        }
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("dataset serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Spectrum up to m_max, preferring stored exact coefficients over the
    /// trapezoid extraction from samples.
    pub fn spectrum(&self, m_max: usize) -> Result<FourierSpectrum> {
        if let Some(sd) = &self.coefficients {
            if sd.m_max >= m_max {
                let shift = (sd.m_max - m_max) as usize;
                let coeffs: Vec<Complex64> = (0..=2 * m_max)
                    .map(|i| {
                        let v = sd.values[i + shift];
                        Complex64::new(v[0], v[1])
                    })
                    .collect();
                return Ok(FourierSpectrum {
                    m_max,
                    k: self.k,
                    coeffs,
                });
            }
        }
        fourier_spectrum(self, m_max)
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        let ds: FarFieldDataset = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            detail: e.to_string(),
        })?;
        ds.validate().map_err(|e| Error::Parse {
            path: path.to_string(),
            detail: e.to_string(),
        })?;
        Ok(ds)
    }
}

/// Fourier coefficients G_m = int_{S^1} F(-phi) phi^m dsigma(phi), |m| <= m_max.
#[derive(Debug, Clone)]
pub struct FourierSpectrum {
    pub m_max: usize,
    pub k: f64,
    /// coeffs[m + m_max] holds G_m.
    coeffs: Vec<Complex64>,
}

impl FourierSpectrum {
    pub(crate) fn new_raw(m_max: usize, k: f64, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * m_max + 1);
        FourierSpectrum { m_max, k, coeffs }
    }

    #[inline]
    pub fn coeff(&self, m: i32) -> Complex64 {
        self.coeffs[(m + self.m_max as i32) as usize]
    }

    /// Median magnitude of the top-quarter modes; a robust stand-in for the
    /// per-mode noise floor of sampled data (0 for analytic spectra).
    pub fn noise_floor(&self) -> f64 {
        let m0 = (3 * self.m_max) / 4;
        let mut mags: Vec<f64> = (m0..=self.m_max)
            .flat_map(|m| {
                [
                    self.coeff(m as i32).norm(),
                    self.coeff(-(m as i32)).norm(),
                ]
            })
            .collect();
        mags.sort_by(f64::total_cmp);
        mags[mags.len() / 2]
    }

    /// Exact spectrum of the synthetic point-source pattern F(-phi) =
    /// e^{i k y0 . phi}: G_m = 2 pi i^{|m|} J_{|m|}(k |y0|) e^{i m arg(y0)}.
    pub fn point_source(k: f64, y0: [f64; 2], m_max: usize) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::invalid("point_source requires k > 0"));
        }
        let r = y0[0].hypot(y0[1]);
        let theta0 = y0[1].atan2(y0[0]);
        let seq = bessel_j_seq(m_max, k * r)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
        for m in -(m_max as i32)..=(m_max as i32) {
            let am = m.unsigned_abs() as usize;
            let val = TAU_2PI
                * Complex64::i().powu(am as u32)
                * seq.j(am)
                * Complex64::from_polar(1.0, m as f64 * theta0);
            coeffs[(m + m_max as i32) as usize] = val;
        }
        Ok(FourierSpectrum { m_max, k, coeffs })
    }
}

/// Spectrally-accurate trapezoid extraction of the Fourier coefficients of
/// F(-phi) from a full-aperture dataset.
pub fn fourier_spectrum(ds: &FarFieldDataset, m_max: usize) -> Result<FourierSpectrum> {
    if !ds.aperture.is_full() {
        return Err(Error::invalid(
            "fourier_spectrum needs a full aperture; route arcs through the aperture module",
        ));
    }
    if ds.n < 4 * (m_max + 1) {
        return Err(Error::invalid(format!(
            "n = {} undersamples m_max = {} (need n >= 4 (m_max+1))",
            ds.n, m_max
        )));
    }
    if ds.n % 2 != 0 {
        return Err(Error::invalid(
            "full-aperture grid must have even n so that -phi is an exact index rotation",
        ));
    }
    let n = ds.n;
    let half = n / 2;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
    let w = TAU_2PI / n as f64;
    for (idx, m) in (-(m_max as i32)..=(m_max as i32)).enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let theta = TAU_2PI * (j as f64) / (n as f64);
            // F(-phi_j) sits at index j + n/2 mod n on the phi grid
            let fm = ds.value((j + half) % n);
            acc += fm * Complex64::from_polar(1.0, m as f64 * theta);
        }
        coeffs[idx] = acc * w;
    }
    Ok(FourierSpectrum {
        m_max,
        k: ds.k,
        coeffs,
    })
}

/// Exact Fourier pairing sum_{|m| <= N} c_m G_m = int F(-phi) g_N(phi) dsigma.
pub fn pair_with_density(spec: &FourierSpectrum, dc: &DensityCoeffs) -> Result<Complex64> {
    pair_with_density_detailed(spec, dc).map(|(v, _)| v)
}

/// Pairing value together with the sum of term magnitudes; the latter sets
/// the f64 cancellation floor of the sum (the terms peak near e^{tau r_max}
/// while the value can sit at e^{tau h}).
pub fn pair_with_density_detailed(
    spec: &FourierSpectrum,
    dc: &DensityCoeffs,
) -> Result<(Complex64, f64)> {
    if spec.m_max < dc.n_max {
        return Err(Error::invalid(format!(
            "spectrum m_max = {} < density order N = {}",
            spec.m_max, dc.n_max
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for m in -(dc.n_max as i32)..=(dc.n_max as i32) {
        let term = dc.coeff(m) * spec.coeff(m);
        acc += term;
        mag += term.norm();
    }
    Ok((acc, mag))
}

/// |sum_{|m|<=N} c_m eps_m| bound for per-mode noise of size `floor`; the
/// (q/k)^N growth of |c_{-m}| makes this the dominant error channel on
/// sampled data.
pub fn pairing_noise_bound(dc: &DensityCoeffs, floor: f64) -> f64 {
    let mut acc = 0.0;
    for m in -(dc.n_max as i32)..=(dc.n_max as i32) {
        acc += dc.coeff(m).norm();
    }
    acc * floor
}

/// Total-field Cauchy data (u, du/dnu) sampled at n uniform points on the
/// circle |x| = R, nu the outward radial normal.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub radius: f64,
    pub k: f64,
    pub d: [f64; 2],
    pub u: Vec<Complex64>,
    pub du: Vec<Complex64>,
}

impl CauchyData {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn point(&self, j: usize) -> [f64; 2] {
        let th = TAU_2PI * (j as f64) / (self.n() as f64);
        [self.radius * th.cos(), self.radius * th.sin()]
    }

    /// CSV with columns theta, Re u, Im u, Re du, Im du.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::from("theta,re_u,im_u,re_du,im_du\n");
        for j in 0..self.n() {
            let th = TAU_2PI * (j as f64) / (self.n() as f64);
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                th, self.u[j].re, self.u[j].im, self.du[j].re, self.du[j].im
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// A probe field with an analytic gradient, pluggable into the near-field
/// pairing.
pub trait ProbeField {
    fn eval_with_grad(&self, y: [f64; 2]) -> (Complex64, [Complex64; 2]);
}

impl ProbeField for crate::herglotz::CgoWave {
    fn eval_with_grad(&self, y: [f64; 2]) -> (Complex64, [Complex64; 2]) {
        crate::herglotz::CgoWave::eval_with_grad(self, y)
    }
}

/// Herglotz wave of a density, viewed as a probe field.
pub struct HerglotzProbe<'a>(pub &'a DensityCoeffs);

impl ProbeField for HerglotzProbe<'_> {
    fn eval_with_grad(&self, y: [f64; 2]) -> (Complex64, [Complex64; 2]) {
        crate::herglotz::herglotz_wave(self.0, y)
    }
}

/// Trapezoid value of the Wronskian-type boundary integral
/// int_{|x|=R} (du/dnu v - dv/dnu u) ds with v the supplied probe field.
pub fn nearfield_pairing(cauchy: &CauchyData, probe: &impl ProbeField) -> Complex64 {
    let n = cauchy.n();
    debug_assert!(n >= 128, "pairing wants >= 128 boundary samples");
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let x = cauchy.point(j);
        let nu = [x[0] / cauchy.radius, x[1] / cauchy.radius];
        let (v, g) = probe.eval_with_grad(x);
        let dv = g[0] * nu[0] + g[1] * nu[1];
        acc += cauchy.du[j] * v - dv * cauchy.u[j];
    }
    acc * (TAU_2PI * cauchy.radius / n as f64)
}

/// The constant -e^{i pi/4} / sqrt(8 pi k) connecting the two pairing routes.
pub fn pairing_constant(k: f64) -> Complex64 {
    -Complex64::from_polar(
        1.0 / (8.0 * core::f64::consts::PI * k).sqrt(),
        core::f64::consts::FRAC_PI_4,
    )
}

/// CSV export of a spectrum: columns m, Re, Im.
pub fn spectrum_to_csv(spec: &FourierSpectrum) -> String {
    let mut out = String::from("m,re,im\n");
    for m in -(spec.m_max as i32)..=(spec.m_max as i32) {
        let c = spec.coeff(m);
        out.push_str(&format!("{},{:.17e},{:.17e}\n", m, c.re, c.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Direction;
    use crate::herglotz::{density_coeffs, residue_closed_form, CgoWave};

    fn synthetic_dataset(k: f64, n: usize, f_of_minus_phi: impl Fn(f64) -> Complex64) -> FarFieldDataset {
        // values on the phi grid; F(-phi) at angle theta means F at theta+pi
        let values: Vec<Complex64> = (0..n)
            .map(|j| {
                let theta = TAU_2PI * (j as f64) / (n as f64);
                // the stored value at angle theta is F(theta); our closure
                // defines F(-phi), i.e. F at angle theta = closure(theta - pi)
                f_of_minus_phi(theta - core::f64::consts::PI)
            })
            .collect();
        FarFieldDataset::new(k, [1.0, 0.0], Aperture::Full, values, None).unwrap()
    }

    #[test]
    fn spectrum_of_unit_harmonic() {
        // F(-phi) = phi (value e^{i theta} at the angle theta of -phi):
        // G_m = 2 pi delta_{m,-1}
        let ds = synthetic_dataset(1.0, 128, |th| Complex64::from_polar(1.0, th));
        let spec = fourier_spectrum(&ds, 8).unwrap();
        for m in -8..=8i32 {
            let expect = if m == -1 {
                Complex64::new(TAU_2PI, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!(
                (spec.coeff(m) - expect).norm() < 1e-12,
                "m={m}: {:?}",
                spec.coeff(m)
            );
        }
    }

    #[test]
    fn spectrum_of_point_source_matches_closed_form() {
        let k = 1.0;
        let y0 = [0.3, 0.4];
        let ds = synthetic_dataset(k, 256, |th| {
            let phi = [th.cos(), th.sin()];
            (Complex64::i() * k * (y0[0] * phi[0] + y0[1] * phi[1])).exp()
        });
        let spec = fourier_spectrum(&ds, 20).unwrap();
        let exact = FourierSpectrum::point_source(k, y0, 20).unwrap();
        for m in -20..=20i32 {
            let e = exact.coeff(m);
            // the absolute term is the trapezoid's f64 rounding floor; exact
            // coefficients below it are invisible to sampled data
            assert!(
                (spec.coeff(m) - e).norm() < 1e-12 * e.norm() + 1e-13,
                "m={m}: grid {:?} vs exact {:?}",
                spec.coeff(m),
                e
            );
        }
        // cross-validate the closed form itself against the residue series
        for m in -6..=6i32 {
            let xi = [Complex64::new(0.0, k * y0[0]), Complex64::new(0.0, k * y0[1])];
            let res = residue_closed_form(m, xi) * TAU_2PI;
            assert!((res - exact.coeff(m)).norm() < 1e-13 * res.norm().max(1e-10));
        }
    }

    #[test]
    fn spectrum_converges_spectrally_in_n() {
        let k = 1.0;
        let y0 = [0.5, -0.2];
        let f = |th: f64| {
            let phi = [th.cos(), th.sin()];
            (Complex64::i() * k * (y0[0] * phi[0] + y0[1] * phi[1])).exp()
        };
        let s1 = fourier_spectrum(&synthetic_dataset(k, 128, f), 12).unwrap();
        let s2 = fourier_spectrum(&synthetic_dataset(k, 256, f), 12).unwrap();
        for m in -12..=12i32 {
            assert!((s1.coeff(m) - s2.coeff(m)).norm() < 1e-12);
        }
    }

    #[test]
    fn spectrum_guards() {
        let ds = synthetic_dataset(1.0, 64, |_| Complex64::new(1.0, 0.0));
        assert!(fourier_spectrum(&ds, 20).is_err()); // n too small
        let arc = FarFieldDataset::new(
            1.0,
            [1.0, 0.0],
            Aperture::Arc {
                theta1: 0.0,
                theta2: 1.0,
            },
            vec![Complex64::new(0.0, 0.0); 16],
            None,
        )
        .unwrap();
        assert!(fourier_spectrum(&arc, 2).is_err()); // aperture not full
    }

    #[test]
    fn pairing_single_coefficient_and_quadrature_oracle() {
        let k = 1.0;
        let y0 = [0.3, 0.4];
        let spec = FourierSpectrum::point_source(k, y0, 24).unwrap();
        let omega = Direction::new(0.9);
        let dc = density_coeffs(1, 1.2, k, omega).unwrap();
        // N = 1 pairing equals c_{-1}G_{-1} + c_0 G_0 + c_1 G_1
        let byhand = dc.coeff(-1) * spec.coeff(-1)
            + dc.coeff(0) * spec.coeff(0)
            + dc.coeff(1) * spec.coeff(1);
        let paired = pair_with_density(&spec, &dc).unwrap();
        assert!((byhand - paired).norm() < 1e-15);

        // direct high-resolution quadrature of int F(-phi) g_N dsigma
        let dc8 = density_coeffs(8, 1.2, k, omega).unwrap();
        let paired8 = pair_with_density(&spec, &dc8).unwrap();
        let nq = 4096;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..nq {
            let th = TAU_2PI * (j as f64) / (nq as f64);
            let phi = [th.cos(), th.sin()];
            let fm = (Complex64::i() * k * (y0[0] * phi[0] + y0[1] * phi[1])).exp();
            acc += fm * dc8.eval(Complex64::from_polar(1.0, th));
        }
        acc *= TAU_2PI / nq as f64;
        assert!(
            (acc - paired8).norm() < 1e-10 * paired8.norm().max(1.0),
            "quad {acc} vs paired {paired8}"
        );
        // insufficient m_max is refused
        let dc99 = density_coeffs(30, 1.2, k, omega).unwrap();
        assert!(pair_with_density(&spec, &dc99).is_err());
    }

    #[test]
    fn point_source_pairing_approximates_cgo_value() {
        // pairing = v_{g_N}(y0) -> cgo(y0) within the certificate bound at |y0|
        let k = 1.0;
        let y0 = [0.3, 0.4];
        let spec = FourierSpectrum::point_source(k, y0, 70).unwrap();
        let omega = Direction::new(0.0);
        let sched = crate::herglotz::ScheduleParams::new(0.5, 1.0).unwrap();
        for n in [20usize, 40, 60] {
            let tau = sched.tau(n).unwrap();
            let dc = density_coeffs(n, tau, k, omega).unwrap();
            let paired = pair_with_density(&spec, &dc).unwrap();
            let cgo = CgoWave::new(tau, k, omega).eval(y0);
            let cert =
                crate::herglotz::truncation_certificate(n, tau, k, y0[0].hypot(y0[1])).unwrap();
            assert!(
                (paired - cgo).norm() <= (cert.bound_s + cert.bound_r) * 1.01 + 1e-12,
                "N={n}: |diff|={:.3e} bound={:.3e}",
                (paired - cgo).norm(),
                cert.bound_s + cert.bound_r
            );
        }
    }

    #[test]
    fn nearfield_pairing_vanishes_without_scatterer() {
        // u = incident plane wave solves Helmholtz inside B_R: Green kills it.
        let k = 1.0;
        let r = 1.5;
        let n = 256;
        let d = [0.6, 0.8];
        let mut u = Vec::new();
        let mut du = Vec::new();
        for j in 0..n {
            let th = TAU_2PI * (j as f64) / (n as f64);
            let x = [r * th.cos(), r * th.sin()];
            let nu = [th.cos(), th.sin()];
            let inc = (Complex64::i() * k * (x[0] * d[0] + x[1] * d[1])).exp();
            u.push(inc);
            du.push(Complex64::i() * k * (d[0] * nu[0] + d[1] * nu[1]) * inc);
        }
        let cauchy = CauchyData {
            radius: r,
            k,
            d,
            u,
            du,
        };
        let probe = CgoWave::new(1.3, k, Direction::new(0.4));
        let v = nearfield_pairing(&cauchy, &probe);
        assert!(v.norm() < 1e-10, "pairing {v}");
    }

    #[test]
    fn dataset_round_trip_and_parse_errors() {
        let dir = std::env::temp_dir().join("enclosure_core_ffds_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ds.json");
        let ds = synthetic_dataset(1.0, 64, |th| Complex64::new(th.cos(), th.sin() * 0.5));
        ds.write_json(&path).unwrap();
        let back = FarFieldDataset::read_json(&path).unwrap();
        assert_eq!(ds.n, back.n);
        for j in 0..ds.n {
            assert_eq!(ds.values[j], back.values[j]); // bitwise
        }
        // missing k
        let bad = r#"{"version":1,"d":[1,0],"aperture":{"type":"full"},"n":4,"values":[[0,0],[0,0],[0,0],[0,0]]}"#;
        let err = FarFieldDataset::from_json(bad, "mem").unwrap_err();
        assert!(format!("{err}").contains('k'), "{err}");
        // arc aperture persists exactly
        let arc = FarFieldDataset::new(
            2.0,
            [0.0, 1.0],
            Aperture::Arc {
                theta1: 0.25,
                theta2: 2.75,
            },
            vec![Complex64::new(1.0, -1.0); 9],
            Some(DatasetMeta {
                scene_hash: Some("abc".into()),
                solver: None,
                origin_inside: Some(true),
                value_accuracy: None,
            }),
        )
        .unwrap();
        let path2 = dir.join("arc.json");
        arc.write_json(&path2).unwrap();
        let back2 = FarFieldDataset::read_json(&path2).unwrap();
        assert_eq!(back2.aperture, arc.aperture);
        assert_eq!(back2.meta, arc.meta);
    }
}
