//! Exponentially scaled modified spherical Bessel functions of the first
//! kind, ie_l(x) = exp(-x) i_l(x).
//!
//! The free radial density matrix needs the whole vector l = 0..l_max at
//! arguments ranging from 0 up to ~1e6, where the unscaled i_l overflow.
//! The scaled functions satisfy the same three-term recurrence
//!     ie_{l-1} - ie_{l+1} = (2l+1)/x * ie_l
//! and the sum rule sum_l (2l+1) ie_l(x) = 1.

/// ie_0(x) = exp(-x) sinh(x)/x, stable for all x >= 0.
pub fn ie0(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-2.0 * x).exp_m1() / (2.0 * x)
    }
}

/// Fill `out[l]` with ie_l(x) for l = 0..out.len()-1.
pub fn ie_vector(x: f64, out: &mut [f64]) {
    let l_max = out.len() - 1;
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    assert!(x > 0.0, "argument must be non-negative");
    if x < 0.5 {
        series(x, out);
        return;
    }

    // Seed the downward recurrence with the true ratio i_{l_max+1}/i_{l_max}
    // from the continued fraction R_l = 1 / ((2l+1)/x + R_{l+1}), so the
    // recursion stays on the physical solution in every regime.
    let r_top = ratio_cf(l_max + 1, x);
    let mut p_hi = r_top; // proportional to i_{l_max+1}
    let mut p = 1.0; // proportional to i_{l_max}
    out[l_max] = p;
    for l in (1..=l_max).rev() {
        let p_lo = p_hi + (2 * l + 1) as f64 / x * p;
        p_hi = p;
        p = p_lo;
        out[l - 1] = p;
        if p > 1e250 {
            for v in out[l - 1..].iter_mut() {
                *v *= 1e-250;
            }
            p *= 1e-250;
            p_hi *= 1e-250;
        }
    }
    let scale = ie0(x) / out[0];
    for v in out.iter_mut() {
        *v *= scale;
    }
}

/// Continued fraction for i_l(x)/i_{l-1}(x).
fn ratio_cf(l: usize, x: f64) -> f64 {
    let mut depth = 64usize;
    let mut prev = f64::NAN;
    loop {
        let top = l + depth;
        // Asymptotic tail value for large order.
        let mut r = x / (2 * top + 1) as f64;
        for j in (l..top).rev() {
            r = 1.0 / ((2 * j + 1) as f64 / x + r);
        }
        if (r - prev).abs() <= 1e-16 * r.abs() || depth > 1 << 20 {
            return r;
        }
        prev = r;
        depth *= 2;
    }
}

/// Power series, adequate for x < 0.5 at any order.
fn series(x: f64, out: &mut [f64]) {
    let scale = (-x).exp();
    let half_x2 = 0.5 * x * x;
    let mut prefactor = 1.0; // x^l / (2l+1)!!
    for (l, slot) in out.iter_mut().enumerate() {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= half_x2 / (k as f64 * (2 * l + 2 * k + 1) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        *slot = scale * prefactor * sum;
        prefactor *= x / (2 * l + 3) as f64;
    }
}
