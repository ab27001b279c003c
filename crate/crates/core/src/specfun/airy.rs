//! Airy function of the first kind, `Ai(x)` and `Ai'(x)`, for real `x`.
//!
//! Three regimes:
//!
//! * `-4.8 <= x <= 2`: Maclaurin series `Ai = c1 f(x) - c2 g(x)`. On the
//!   positive side the two terms cancel like `e^{-2 zeta}`, hence the earlier
//!   switch there.
//! * otherwise up to `|x| < 10`: Taylor continuation of the Airy ODE `y'' = x y` from a
//!   table of nodes spaced 0.25 apart. The tables are seeded from the
//!   asymptotic expansions at `|x| = 10.5`; the negative side is stepped
//!   towards the origin (oscillatory, stable in both directions) and the
//!   positive side is stepped downwards (Ai is the dominant solution in that
//!   direction).
//! * `|x| >= 10`: asymptotic expansions (exponential for `x > 0`,
//!   modulus/phase for `x < 0`).
//!
//! Because the continuation tables never touch the Maclaurin series, the
//! agreement of the two at the switch point is an independent check.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

/// `Ai(0) = 3^{-2/3} / Gamma(2/3)`.
pub const AI_ZERO: f64 = 0.355_028_053_887_817_2;
/// `Ai'(0) = -3^{-1/3} / Gamma(1/3)`.
pub const AI_PRIME_ZERO: f64 = -0.258_819_403_792_806_8;

/// Switch between the Maclaurin series and the continuation tables, `x < 0`.
pub const SERIES_LIMIT: f64 = 4.8;
/// Same switch for `x > 0`.
pub const SERIES_LIMIT_POSITIVE: f64 = 2.0;
/// Switch between the continuation tables and the asymptotic expansions.
pub const ASYMPTOTIC_LIMIT: f64 = 10.0;
/// Beyond this the value underflows (`Ai(104) ~ 1e-307`).
pub const UNDERFLOW_LIMIT: f64 = 104.0;

const ANCHOR: f64 = 10.5;
const NODE_STEP: f64 = 0.25;
/// Innermost table node, by side.
const TABLE_INNER: f64 = 4.5;
const TABLE_INNER_POSITIVE: f64 = 1.75;

fn table_inner(sign: f64) -> f64 {
    if sign < 0.0 {
        TABLE_INNER
    } else {
        TABLE_INNER_POSITIVE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub ai: f64,
    pub ai_prime: f64,
    /// Set when `x > 104`; both values are then returned as zero.
    pub underflow: bool,
}

pub fn airy_ai(x: f64) -> f64 {
    airy(x).ai
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy(x).ai_prime
}

/// Evaluates `Ai(x)` and `Ai'(x)` together.
pub fn airy(x: f64) -> AiryValue {
    if x > UNDERFLOW_LIMIT {
        return AiryValue { ai: 0.0, ai_prime: 0.0, underflow: true };
    }
    let in_series = if x < 0.0 { -x <= SERIES_LIMIT } else { x <= SERIES_LIMIT_POSITIVE };
    let (ai, ai_prime) = if in_series {
        maclaurin(x)
    } else if x.abs() < ASYMPTOTIC_LIMIT {
        continued(x)
    } else {
        asymptotic(x)
    };
    AiryValue { ai, ai_prime, underflow: false }
}

/// Maclaurin series, accurate for moderate `|x|`.
pub fn maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let c1 = AI_ZERO;
    let c2 = -AI_PRIME_ZERO;

    // f = sum t_k, g = sum u_k, with f' and g' carried alongside.
    let (mut f, mut t) = (1.0, 1.0);
    let (mut g, mut u) = (x, x);
    let (mut fp, mut tp) = (x * x / 2.0, x * x / 2.0);
    let (mut gp, mut up) = (1.0, 1.0);
    for k in 1..120 {
        let kf = k as f64;
        t *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        u *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tp *= x3 / ((3.0 * kf) * (3.0 * kf + 2.0));
        up *= x3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        f += t;
        g += u;
        fp += tp;
        gp += up;
        let small = |term: f64, sum: f64| term.abs() <= 1e-18 * sum.abs().max(1e-300);
        if k > 2 && small(t, f) && small(u, g) && small(tp, fp) && small(up, gp) {
            break;
        }
    }
    (c1 * f - c2 * g, c1 * fp - c2 * gp)
}

/// Coefficients `u_k` of the Airy asymptotic expansions.
fn u_coefficients() -> &'static [f64] {
    static U: OnceLock<Vec<f64>> = OnceLock::new();
    U.get_or_init(|| {
        let mut u = vec![1.0];
        for k in 1..60 {
            let kf = k as f64;
            let prev = u[k - 1];
            u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf));
        }
        u
    })
}

fn v_coefficient(k: usize) -> f64 {
    let u = u_coefficients();
    if k == 0 {
        1.0
    } else {
        let kf = k as f64;
        -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k]
    }
}

/// Sums `sum_k sign_k c_k / zeta^k` over `k = start, start + 2, ...` with
/// alternating signs, stopping at the smallest term.
fn alternating_tail(coef: impl Fn(usize) -> f64, zeta: f64, start: usize, stride: usize) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = start;
    while k < 58 {
        let term = coef(k) / zeta.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        sum += sign * term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        prev = term.abs();
        sign = -sign;
        k += stride;
    }
    sum
}

/// Large-`|x|` asymptotic expansions.
pub fn asymptotic(x: f64) -> (f64, f64) {
    let u = u_coefficients();
    if x > 0.0 {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let s_u = alternating_tail(|k| u[k], zeta, 0, 1);
        let s_v = alternating_tail(v_coefficient, zeta, 0, 1);
        let e = (-zeta).exp() / (2.0 * PI.sqrt());
        let q = x.powf(0.25);
        (e / q * s_u, -q * e * s_v)
    } else {
        let y = -x;
        let zeta = 2.0 / 3.0 * y.powf(1.5);
        let ue = alternating_tail(|k| u[k], zeta, 0, 2);
        let uo = alternating_tail(|k| u[k], zeta, 1, 2);
        let ve = alternating_tail(v_coefficient, zeta, 0, 2);
        let vo = alternating_tail(v_coefficient, zeta, 1, 2);
        let (s, c) = (zeta - FRAC_PI_4).sin_cos();
        let q = y.powf(0.25);
        let norm = 1.0 / PI.sqrt();
        let ai = norm / q * (c * ue + s * uo);
        let aip = norm * q * (s * ve - c * vo);
        (ai, aip)
    }
}

/// Taylor step of `y'' = x y` from `(x0, y0, y0')` by displacement `d`.
fn taylor_step(x0: f64, y0: f64, yp0: f64, d: f64) -> (f64, f64) {
    // b_n = a_n d^n; b_{n+2} = (x0 d^2 b_n + d^3 b_{n-1}) / ((n+1)(n+2)).
    let mut b = [0.0_f64; 64];
    b[0] = y0;
    b[1] = yp0 * d;
    b[2] = x0 * d * d * y0 / 2.0;
    let mut y = b[0] + b[1] + b[2];
    let mut yp = b[1] + 2.0 * b[2];
    for n in 1..61 {
        let next = (x0 * d * d * b[n] + d * d * d * b[n - 1]) / (((n + 1) * (n + 2)) as f64);
        b[n + 2] = next;
        y += next;
        yp += (n + 2) as f64 * next;
        if n > 6 && next.abs() < 1e-20 * y.abs().max(1e-300) && b[n + 1].abs() < 1e-20 * y.abs().max(1e-300) {
            break;
        }
    }
    (y, if d != 0.0 { yp / d } else { yp0 })
}

struct Table {
    /// Node abscissae in increasing `|x|` order away from the origin.
    nodes: Vec<(f64, f64, f64)>,
}

fn build_table(sign: f64) -> Table {
    let anchor = sign * ANCHOR;
    let (mut y, mut yp) = asymptotic(anchor);
    let steps = ((ANCHOR - table_inner(sign)) / NODE_STEP).round() as usize;
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push((anchor, y, yp));
    let mut x = anchor;
    for _ in 0..steps {
        let d = -sign * NODE_STEP;
        let (ny, nyp) = taylor_step(x, y, yp, d);
        x += d;
        y = ny;
        yp = nyp;
        nodes.push((x, y, yp));
    }
    nodes.reverse();
    Table { nodes }
}

fn table(sign: f64) -> &'static Table {
    static NEG: OnceLock<Table> = OnceLock::new();
    static POS: OnceLock<Table> = OnceLock::new();
    if sign < 0.0 {
        NEG.get_or_init(|| build_table(-1.0))
    } else {
        POS.get_or_init(|| build_table(1.0))
    }
}

/// ODE continuation from the tabulated nodes; valid for `4.5 <= -x <= 10.5`
/// and `1.75 <= x <= 10.5`.
pub fn continued(x: f64) -> (f64, f64) {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let t = table(sign);
    let offset = (x.abs() - table_inner(sign)) / NODE_STEP;
    let idx = (offset.round().max(0.0) as usize).min(t.nodes.len() - 1);
    let (x0, y0, yp0) = t.nodes[idx];
    taylor_step(x0, y0, yp0, x - x0)
}
