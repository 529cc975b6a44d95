//! Integer-order Bessel functions J_m, Y_m and the Hankel function H_m^(1)
//! on the real half-line.
//!
//! J sequences come from Miller's backward recurrence normalized with
//! J_0 + 2*sum J_{2n} = 1, with a direct power-series path deep in the
//! evanescent regime (x much smaller than the order) where the series has no
//! cancellation. Y_0, Y_1 use the ascending series for x < 2 and the
//! Numerical-Recipes-style complex continued fraction (CF2) above, then the
//! upward recurrence which is stable for Y.

use num_complex::Complex64;

use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// J_0..J_{order_max} at a fixed argument.
#[derive(Debug, Clone)]
pub struct BesselSeq {
    pub order_max: usize,
    pub argument: f64,
    values: Vec<f64>,
}

impl BesselSeq {
    /// J_m for 0 <= m <= order_max.
    #[inline]
    pub fn j(&self, m: usize) -> f64 {
        self.values[m]
    }

    /// J_m for any integer order via J_{-m} = (-1)^m J_m.
    #[inline]
    pub fn j_signed(&self, m: i32) -> f64 {
        let a = m.unsigned_abs() as usize;
        let v = self.values[a];
        if m < 0 && a % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// J_m'(x) = (J_{m-1} - J_{m+1}) / 2. Requires m + 1 <= order_max.
    pub fn j_deriv(&self, m: usize) -> f64 {
        if m == 0 {
            -self.values[1]
        } else {
            0.5 * (self.values[m - 1] - self.values[m + 1])
        }
    }
}

/// J_0..J_{m_max} by backward recurrence (power series deep below turn-over).
pub fn bessel_j_seq(m_max: usize, x: f64) -> Result<BesselSeq> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!(
            "bessel_j_seq requires x >= 0, got {x}"
        )));
    }
    let mut values = vec![0.0; m_max + 1];
    if x == 0.0 {
        values[0] = 1.0;
        return Ok(BesselSeq {
            order_max: m_max,
            argument: x,
            values,
        });
    }
    if x < 1e-8 {
        for (m, v) in values.iter_mut().enumerate() {
            *v = j_series(m, x);
        }
        return Ok(BesselSeq {
            order_max: m_max,
            argument: x,
            values,
        });
    }

    // Miller: start above both the requested order and the turn-over point.
    // The x^(1/3) term widens the buffer through the Airy transition zone,
    // where J_m only starts to decay in m; without it large arguments (x of a
    // few hundred) lose ~3 digits.
    let m_start = m_max + 20 + (x + 13.0 * x.cbrt()).ceil() as usize;
    let mut p_next = 0.0_f64; // p_{m+1}
    let mut p = 1e-300_f64; // p_m, arbitrary seed
    let mut sum = 0.0_f64; // accumulates p_0 + 2 sum p_{2n}
    for m in (0..=m_start).rev() {
        let p_prev = (2.0 * (m + 1) as f64 / x) * p - p_next;
        p_next = p;
        p = p_prev;
        // p now holds the unnormalized J_m
        if m % 2 == 0 {
            sum += if m == 0 { p } else { 2.0 * p };
        }
        if m <= m_max {
            values[m] = p;
        }
        if p.abs() > 1e250 {
            let s = 1e-250;
            p *= s;
            p_next *= s;
            sum *= s;
            for v in values.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
    // Deep evanescent orders can lose relative accuracy to the rescaling;
    // the cancellation-free series is exact there.
    for (m, v) in values.iter_mut().enumerate() {
        if (m as f64) > 1.5 * x + 25.0 {
            *v = j_series(m, x);
        }
    }
    Ok(BesselSeq {
        order_max: m_max,
        argument: x,
        values,
    })
}

/// J_m(x) for any integer order, x >= 0.
pub fn bessel_j(m: i32, x: f64) -> Result<f64> {
    let a = m.unsigned_abs() as usize;
    let seq = bessel_j_seq(a, x)?;
    Ok(seq.j_signed(m))
}

/// Defining power series; cancellation-free for x^2/4 < m+1, used as the
/// small-x / large-order path and as a test oracle elsewhere.
fn j_series(m: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    // (x/2)^m / m! in log space to dodge under/overflow of the parts.
    let half = 0.5 * x;
    let log_lead = (m as f64) * half.ln() - ln_factorial(m);
    if log_lead < -745.0 {
        return 0.0;
    }
    let lead = log_lead.exp();
    let q = half * half;
    let mut term = 1.0_f64;
    let mut acc = 1.0_f64;
    for n in 1..200 {
        term *= -q / ((n * (n + m)) as f64);
        acc += term;
        if term.abs() < 1e-18 * acc.abs().max(1e-30) {
            break;
        }
    }
    lead * acc
}

/// Y_0 and Y_1 via ascending series; accurate for x <= ~2.
fn bessel_y01_series(x: f64) -> (f64, f64) {
    let seq = bessel_j_seq(1, x).expect("x validated by caller");
    let (j0, j1) = (seq.j(0), seq.j(1));
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let q = 0.25 * x * x;

    // Y0 = (2/pi) [ lg*J0 + sum_{n>=1} (-1)^{n+1} H_n q^n / (n!)^2 ]
    let mut sum0 = 0.0;
    let mut term = 1.0_f64; // q^n / (n!)^2
    let mut h = 0.0_f64;
    for n in 1..60 {
        term *= q / ((n * n) as f64);
        h += 1.0 / n as f64;
        let contrib = if n % 2 == 1 { term * h } else { -term * h };
        sum0 += contrib;
        if term * h < 1e-19 {
            break;
        }
    }
    let y0 = core::f64::consts::FRAC_2_PI * (lg * j0 + sum0);

    // Y1 = (2/pi) lg*J1 - 2/(pi x) - (1/pi) sum_{j>=0} (-1)^j (H_j + H_{j+1})
    //      (x/2)^{2j+1} / (j! (j+1)!)
    let mut sum1 = 0.0;
    let half = 0.5 * x;
    let mut t = half; // (x/2)^{2j+1} / (j!(j+1)!)
    let mut hj = 0.0_f64;
    let mut hj1 = 1.0_f64;
    for j in 0..60 {
        let contrib = if j % 2 == 0 {
            t * (hj + hj1)
        } else {
            -t * (hj + hj1)
        };
        sum1 += contrib;
        if t * (hj + hj1) < 1e-19 {
            break;
        }
        let jj = (j + 1) as f64;
        t *= q / (jj * (jj + 1.0));
        hj += 1.0 / jj;
        hj1 += 1.0 / (jj + 1.0);
    }
    let y1 = core::f64::consts::FRAC_2_PI * lg * j1
        - core::f64::consts::FRAC_2_PI / x
        - sum1 / core::f64::consts::PI;
    (y0, y1)
}

/// Y_0 and Y_1 via the CF2 continued fraction; accurate for x >= ~2.
fn bessel_y01_cf2(x: f64) -> (f64, f64) {
    let seq = bessel_j_seq(1, x).expect("x validated by caller");
    let (j0, j1) = (seq.j(0), seq.j(1));

    // Complex Lentz evaluation of
    //   (J0' + i Y0') / (J0 + i Y0) = -1/(2x) + i + (i/x) CF.
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-290;
    let xi = 1.0 / x;
    let mut a = 0.25_f64;
    let mut p = -0.5 * xi;
    let mut q = 1.0_f64;
    let br = 2.0 * x;
    let mut bi = 2.0_f64;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let dlr = cr * dr - ci * di;
    let dli = cr * di + ci * dr;
    let temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..10_000 {
        a += (2 * (i - 1)) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di = -di / den;
        let dlr = cr * dr - ci * di;
        let dli = cr * di + ci * dr;
        let temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }
    // With f = J0'/J0 = -J1/J0:  Y0 = J0 (p - f)/q = (p J0 + J1)/q,
    // Y0' = p Y0 + q J0, Y1 = -Y0'.
    let y0 = (p * j0 + j1) / q;
    let y1 = -(p * y0 + q * j0);
    (y0, y1)
}

/// Y_0..Y_{m_max} by upward recurrence from (Y_0, Y_1).
pub fn bessel_y_seq(m_max: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!(
            "bessel_y_seq requires x > 0, got {x}"
        )));
    }
    let (y0, y1) = if x < 2.0 {
        bessel_y01_series(x)
    } else {
        bessel_y01_cf2(x)
    };
    let mut values = vec![0.0; m_max + 1];
    values[0] = y0;
    if m_max >= 1 {
        values[1] = y1;
    }
    for m in 1..m_max {
        let next = (2.0 * m as f64 / x) * values[m] - values[m - 1];
        values[m + 1] = if next.is_finite() { next } else { f64::MIN };
    }
    Ok(values)
}

/// H_m^(1)(x) = J_m(x) + i Y_m(x) for m >= 0, x > 0.
pub fn hankel1(m: usize, x: f64) -> Result<Complex64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!("hankel1 requires x > 0, got {x}")));
    }
    let j = bessel_j_seq(m, x)?;
    let y = bessel_y_seq(m, x)?;
    Ok(Complex64::new(j.j(m), y[m]))
}

/// d/dx H_m^(1)(x), via H' = (H_{m-1} - H_{m+1})/2 (and H_0' = -H_1).
pub fn hankel1_deriv(m: usize, x: f64) -> Result<Complex64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!(
            "hankel1_deriv requires x > 0, got {x}"
        )));
    }
    let j = bessel_j_seq(m + 1, x)?;
    let y = bessel_y_seq(m + 1, x)?;
    if m == 0 {
        Ok(-Complex64::new(j.j(1), y[1]))
    } else {
        let hm1 = Complex64::new(j.j(m - 1), y[m - 1]);
        let hp1 = Complex64::new(j.j(m + 1), y[m + 1]);
        Ok(0.5 * (hm1 - hp1))
    }
}

/// H_0^(1) and H_1^(1) in one shot; the forward-solver kernels want the pair.
pub fn hankel1_01(x: f64) -> Result<(Complex64, Complex64)> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!(
            "hankel1_01 requires x > 0, got {x}"
        )));
    }
    let j = bessel_j_seq(1, x)?;
    let (y0, y1) = if x < 2.0 {
        bessel_y01_series(x)
    } else {
        bessel_y01_cf2(x)
    };
    Ok((
        Complex64::new(j.j(0), y0),
        Complex64::new(j.j(1), y1),
    ))
}

/// ln(n!) by direct summation (exact to f64 rounding for the n we use).
pub fn ln_factorial(n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 2..=n {
        acc += (i as f64).ln();
    }
    acc
}
