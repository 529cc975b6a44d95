//! Helmholtz layer-potential kernels built on the outgoing fundamental
//! solution Phi(x, y) = (i/4) H_0^(1)(k |x - y|).

use num_complex::Complex64;

use crate::specfun::hankel1_01;
use crate::vec2::*;

#[inline]
fn h01(k: f64, r: f64) -> (Complex64, Complex64) {
    hankel1_01(k * r).expect("kernel evaluated at coincident points")
}

/// Phi(x, y).
pub fn phi(k: f64, x: [f64; 2], y: [f64; 2]) -> Complex64 {
    let r = dist(x, y);
    let (h0, _) = h01(k, r);
    Complex64::new(0.0, 0.25) * h0
}

/// grad_x Phi(x, y) = -(ik/4) H_1(kr) (x-y)/r.
pub fn grad_x_phi(k: f64, x: [f64; 2], y: [f64; 2]) -> [Complex64; 2] {
    let rv = sub(x, y);
    let r = norm(rv);
    let (_, h1) = h01(k, r);
    let c = -Complex64::new(0.0, 0.25 * k) * h1 / r;
    [c * rv[0], c * rv[1]]
}

/// dPhi/dnu(x) = grad_x Phi . n_x; vanishes identically for x, y on a common
/// straight edge with n_x the edge normal.
pub fn kprime(k: f64, x: [f64; 2], y: [f64; 2], nx: [f64; 2]) -> Complex64 {
    let rv = sub(x, y);
    let r = norm(rv);
    let (_, h1) = h01(k, r);
    -Complex64::new(0.0, 0.25 * k) * h1 * (rv[0] * nx[0] + rv[1] * nx[1]) / r
}

/// dPhi/dnu(y) = grad_y Phi . n_y = (ik/4) H_1(kr) ((x-y).n_y)/r.
pub fn dphi_dny(k: f64, x: [f64; 2], y: [f64; 2], ny: [f64; 2]) -> Complex64 {
    let rv = sub(x, y);
    let r = norm(rv);
    let (_, h1) = h01(k, r);
    Complex64::new(0.0, 0.25 * k) * h1 * (rv[0] * ny[0] + rv[1] * ny[1]) / r
}

/// grad_x of dPhi/dnu(y); the double-layer gradient for Cauchy data.
pub fn grad_x_dphi_dny(k: f64, x: [f64; 2], y: [f64; 2], ny: [f64; 2]) -> [Complex64; 2] {
    let rv = sub(x, y);
    let r = norm(rv);
    let s = rv[0] * ny[0] + rv[1] * ny[1];
    let (h0, h1) = h01(k, r);
    // d/dr of H1(kr) = k H0(kr) - H1(kr)/r
    let c = Complex64::new(0.0, 0.25 * k);
    let radial = (k * h0 - 2.0 * h1 / r) * s / (r * r);
    let lateral = h1 / r;
    [
        c * (radial * rv[0] + lateral * ny[0]),
        c * (radial * rv[1] + lateral * ny[1]),
    ]
}

/// Far-field kernel of a unit monopole at y: the coefficient of
/// e^{ikr}/sqrt(r) is C e^{-ik phi.y} with C = e^{i pi/4}/sqrt(8 pi k).
pub fn farfield_constant(k: f64) -> Complex64 {
    Complex64::from_polar(
        1.0 / (8.0 * core::f64::consts::PI * k).sqrt(),
        core::f64::consts::FRAC_PI_4,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_solves_helmholtz_away_from_source() {
        let k = 1.3;
        let y = [0.2, -0.1];
        let h = 1e-4;
        for &x in &[[1.0, 0.5], [-0.7, 0.9]] {
            let f = |p: [f64; 2]| phi(k, p, y);
            let lap = (f([x[0] + h, x[1]]) + f([x[0] - h, x[1]]) + f([x[0], x[1] + h])
                + f([x[0], x[1] - h])
                - 4.0 * f(x))
                / (h * h);
            let res = (lap + k * k * f(x)).norm();
            assert!(res < 1e-6, "residual {res}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let k = 0.9;
        let y = [0.3, 0.4];
        let ny = [0.6, 0.8];
        let x = [1.1, -0.7];
        let h = 1e-6;
        let g = grad_x_phi(k, x, y);
        let fdx = (phi(k, [x[0] + h, x[1]], y) - phi(k, [x[0] - h, x[1]], y)) / (2.0 * h);
        let fdy = (phi(k, [x[0], x[1] + h], y) - phi(k, [x[0], x[1] - h], y)) / (2.0 * h);
        assert!((g[0] - fdx).norm() < 1e-8);
        assert!((g[1] - fdy).norm() < 1e-8);

        let gd = grad_x_dphi_dny(k, x, y, ny);
        let fdx =
            (dphi_dny(k, [x[0] + h, x[1]], y, ny) - dphi_dny(k, [x[0] - h, x[1]], y, ny))
                / (2.0 * h);
        let fdy =
            (dphi_dny(k, [x[0], x[1] + h], y, ny) - dphi_dny(k, [x[0], x[1] - h], y, ny))
                / (2.0 * h);
        assert!((gd[0] - fdx).norm() < 1e-7, "{:?} vs {fdx}", gd[0]);
        assert!((gd[1] - fdy).norm() < 1e-7);
    }

    #[test]
    fn kprime_vanishes_on_common_line() {
        let k = 1.0;
        let x = [0.3, 0.0];
        let y = [0.9, 0.0];
        let nx = [0.0, 1.0];
        assert!(kprime(k, x, y, nx).norm() < 1e-16);
    }

    #[test]
    fn farfield_of_monopole_matches_hankel_asymptotics() {
        // (i/4) H0(k|x|) ~ C e^{ikr}/sqrt(r) for a source at the origin
        let k = 1.0;
        let r = 4000.0;
        let val = phi(k, [r, 0.0], [0.0, 0.0]);
        let pred = farfield_constant(k) * Complex64::from_polar(1.0, k * r) / r.sqrt();
        assert!(
            (val - pred).norm() < 2e-4 * pred.norm(),
            "val {val} pred {pred}"
        );
    }
}
