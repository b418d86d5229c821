//! Adaptive Gauss-Kronrod (7/15) quadrature for positive integrands supplied
//! through their logarithm.
//!
//! Every integral in the crate is taken over a log-transformed variable, so the
//! integrands are smooth bumps on the real line with at least exponentially
//! decaying tails. [`locate_mass`] finds the bump and trims the tails, and
//! [`integrate_log`] integrates `exp(phi - peak)` over what remains.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Log-integrand drop below the peak at which tails are cut off.
/// exp(-80) is ~1.8e-35, far below any tolerance used in the crate.
const TAIL_DROP: f64 = 80.0;

const MAX_EXPANSION_STEPS: usize = 400;

/// One closed sub-interval of an integration range.
pub(crate) type Segment = (f64, f64);

/// Location of the bulk of `exp(phi)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Mass {
    pub peak: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LogIntegral {
    pub log_value: f64,
    pub rel_error: f64,
    pub shift: f64,
    pub segments: Vec<Segment>,
}

fn gk15<F: Fn(f64) -> f64>(phi: &F, shift: f64, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = (phi(center) - shift).exp();
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = (phi(center - dx) - shift).exp() + (phi(center + dx) - shift).exp();
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// Globally adaptive bisection on the piece with the largest error estimate.
/// Returns `(value, error, segments)`.
fn adaptive<F: Fn(f64) -> f64>(
    phi: &F,
    shift: f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<(f64, f64, Vec<Segment>)> {
    let (value, error) = gk15(phi, shift, lo, hi);
    let mut pieces = vec![Piece {
        lo,
        hi,
        value,
        error,
    }];
    let mut total = value;
    let mut total_err = error;

    while total_err > (rel_tol * total.abs()).max(abs_tol) {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::NumericDomain(
                "non-finite value inside quadrature".into(),
            ));
        }
        if pieces.len() >= max_subdivisions {
            return Err(Error::NoConvergence {
                log_estimate: shift + total.ln(),
                rel_error: total_err / total.abs(),
                subdivisions: pieces.len(),
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one piece");
        let Piece { lo, hi, value, error } = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::NoConvergence {
                log_estimate: shift + total.ln(),
                rel_error: total_err / total.abs(),
                subdivisions: pieces.len() + 1,
            });
        }
        let (v1, e1) = gk15(phi, shift, lo, mid);
        let (v2, e2) = gk15(phi, shift, mid, hi);
        total += v1 + v2 - value;
        total_err += e1 + e2 - error;
        pieces.push(Piece {
            lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        pieces.push(Piece {
            lo: mid,
            hi,
            value: v2,
            error: e2,
        });
    }

    // Re-sum to shed the drift of the running totals.
    let total: f64 = pieces.iter().map(|p| p.value).sum();
    let total_err: f64 = pieces.iter().map(|p| p.error).sum();
    let mut segments: Vec<Segment> = pieces.iter().map(|p| (p.lo, p.hi)).collect();
    segments.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((total, total_err, segments))
}

fn golden_max<F: Fn(f64) -> f64>(phi: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + c.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = phi(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Finds the mode of `phi` on `[lo, hi]` (either end may be infinite) by
/// climbing from `anchor`, then walks outward until `phi` has dropped
/// `TAIL_DROP` below the running maximum.
pub(crate) fn locate_mass<F: Fn(f64) -> f64>(
    phi: &F,
    lo: f64,
    hi: f64,
    anchor: f64,
) -> Result<Mass> {
    let clamp = |u: f64| u.max(lo).min(hi);
    let mut x = clamp(anchor);
    let mut fx = phi(x);
    if fx.is_nan() {
        return Err(Error::NumericDomain(format!("log-integrand is NaN at {x}")));
    }

    let h0 = 0.25;
    let right = phi(clamp(x + h0));
    let left = phi(clamp(x - h0));
    let dir = if right > fx {
        1.0
    } else if left > fx {
        -1.0
    } else {
        0.0
    };

    let (mode, peak) = if dir == 0.0 {
        let (a, b) = (clamp(x - h0), clamp(x + h0));
        let (m, fm) = golden_max(phi, a, b);
        if fm >= fx {
            (m, fm)
        } else {
            (x, fx)
        }
    } else {
        let mut h = h0;
        let mut prev = x;
        let mut far = None;
        for _ in 0..MAX_EXPANSION_STEPS {
            let nx = clamp(x + dir * h);
            if nx == x {
                break;
            }
            let fnx = phi(nx);
            if fnx > fx {
                prev = x;
                x = nx;
                fx = fnx;
                h *= 2.0;
            } else {
                far = Some(nx);
                break;
            }
        }
        match far {
            Some(far) => {
                let (a, b) = if prev < far { (prev, far) } else { (far, prev) };
                let (m, fm) = golden_max(phi, a, b);
                if fm >= fx {
                    (m, fm)
                } else {
                    (x, fx)
                }
            }
            // Climbed onto a finite endpoint.
            None => (x, fx),
        }
    };
    if !peak.is_finite() {
        return Err(Error::NumericDomain(format!(
            "log-integrand peak is not finite ({peak}) near {mode}"
        )));
    }

    // Curvature-based step for the tail walk.
    let d = 1e-4 * (1.0 + mode.abs());
    let curv = (phi(clamp(mode + d)) - 2.0 * peak + phi(clamp(mode - d))) / (d * d);
    let width = if curv.is_finite() && curv < 0.0 {
        (1.0 / (-curv).sqrt()).clamp(1e-8, 1e3)
    } else {
        1.0
    };

    let mut peak = peak;
    let mut mode = mode;
    let mut bounds = (lo, hi);
    for _pass in 0..4 {
        let start_peak = peak;
        let mut ends = [lo, hi];
        for (k, sign) in [-1.0f64, 1.0].into_iter().enumerate() {
            let limit = if sign < 0.0 { lo } else { hi };
            let mut u = mode;
            let mut step = width;
            let mut done = false;
            for _ in 0..MAX_EXPANSION_STEPS {
                u += sign * step;
                if (sign < 0.0 && u <= limit) || (sign > 0.0 && u >= limit) {
                    u = limit;
                    done = true;
                    break;
                }
                let v = phi(u);
                if v > peak {
                    peak = v;
                    mode = u;
                }
                if v < peak - TAIL_DROP {
                    done = true;
                    break;
                }
                step *= 1.6;
            }
            if !done {
                return Err(Error::Domain(
                    "integrand does not decay fast enough to be integrated".into(),
                ));
            }
            ends[k] = u;
        }
        bounds = (ends[0], ends[1]);
        if peak == start_peak {
            break;
        }
    }

    Ok(Mass {
        peak,
        lo: bounds.0,
        hi: bounds.1,
    })
}

/// `log ∫_lo^hi exp(phi(u)) du` with relative error `rel_tol`.
pub(crate) fn integrate_log<F: Fn(f64) -> f64>(
    phi: &F,
    lo: f64,
    hi: f64,
    anchor: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<LogIntegral> {
    let mass = locate_mass(phi, lo, hi, anchor)?;
    if mass.hi <= mass.lo {
        return Ok(LogIntegral {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
            shift: mass.peak,
            segments: Vec::new(),
        });
    }
    let (value, error, segments) = adaptive(
        phi,
        mass.peak,
        mass.lo,
        mass.hi,
        rel_tol,
        0.0,
        max_subdivisions,
    )?;
    Ok(LogIntegral {
        log_value: mass.peak + value.ln(),
        rel_error: if value > 0.0 { error / value } else { 0.0 },
        shift: mass.peak,
        segments,
    })
}

/// Re-evaluates an integral on a partition produced by [`integrate_log`] for
/// a neighbouring integrand. Keeping the partition fixed makes the
/// discretisation error a smooth function of the integrand's parameters,
/// which finite-difference stencils rely on.
pub(crate) fn integrate_log_fixed<F: Fn(f64) -> f64>(
    phi: &F,
    shift: f64,
    segments: &[Segment],
) -> f64 {
    let total: f64 = segments
        .iter()
        .map(|&(lo, hi)| gk15(phi, shift, lo, hi).0)
        .sum();
    shift + total.ln()
}

/// Plain `∫_lo^hi exp(phi(u)) du` for integrands of moderate size, with an
/// absolute error floor. Used for short CDF increments.
pub(crate) fn integrate_exp<F: Fn(f64) -> f64>(
    phi: &F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    adaptive(phi, 0.0, lo, hi, rel_tol, abs_tol, max_subdivisions).map(|r| r.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        // ∫ exp(-u²/2) du = √(2π)
        let phi = |u: f64| -0.5 * u * u;
        let r = integrate_log(&phi, f64::NEG_INFINITY, f64::INFINITY, 3.0, 1e-12, 1000).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt().ln();
        assert!((r.log_value - exact).abs() < 1e-13, "{}", r.log_value - exact);
    }

    #[test]
    fn narrow_peak_far_from_anchor() {
        // exp(-(u-40)²·10⁴/2), integral √(2π)/100
        let phi = |u: f64| -0.5 * 1e4 * (u - 40.0) * (u - 40.0);
        let r = integrate_log(&phi, f64::NEG_INFINITY, f64::INFINITY, 0.0, 1e-12, 1000).unwrap();
        let exact = ((2.0 * std::f64::consts::PI).sqrt() / 100.0).ln();
        assert!((r.log_value - exact).abs() < 1e-12);
    }

    #[test]
    fn slow_exponential_tail() {
        // ∫_{-∞}^0 exp(0.01 u) du = 100
        let phi = |u: f64| 0.01 * u;
        let r = integrate_log(&phi, f64::NEG_INFINITY, 0.0, -1.0, 1e-12, 1000).unwrap();
        assert!((r.log_value - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn huge_log_values_do_not_overflow() {
        // ∫ exp(5000 - u²/2) du
        let phi = |u: f64| 5000.0 - 0.5 * u * u;
        let r = integrate_log(&phi, f64::NEG_INFINITY, f64::INFINITY, 0.5, 1e-12, 1000).unwrap();
        let exact = 5000.0 + (2.0 * std::f64::consts::PI).sqrt().ln();
        assert!((r.log_value - exact).abs() < 1e-10);
    }

    #[test]
    fn too_few_subdivisions_reports_estimate() {
        let phi = |u: f64| -(u.abs()).sqrt() * 30.0;
        let err = integrate_log(&phi, -50.0, 50.0, 0.0, 1e-14, 16).unwrap_err();
        match err {
            Error::NoConvergence {
                log_estimate,
                rel_error,
                subdivisions,
            } => {
                assert!(log_estimate.is_finite());
                assert!(rel_error > 1e-14);
                assert_eq!(subdivisions, 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixed_partition_reproduces_adaptive_value() {
        let phi = |u: f64| 2.0 * u - u.exp();
        let r = integrate_log(&phi, f64::NEG_INFINITY, f64::INFINITY, 0.0, 1e-12, 1000).unwrap();
        let again = integrate_log_fixed(&phi, r.shift, &r.segments);
        assert!((again - r.log_value).abs() < 1e-15);
        // ∫ exp(2u - e^u) du = Γ(2) = 1
        assert!(r.log_value.abs() < 1e-12);
    }
}
