//! Log-gamma and ratios of gamma functions for positive real arguments.
//!
//! Arguments are shifted up to at least `SHIFT` with the recurrence and then
//! evaluated with the Stirling series. Ratios Γ(a)/Γ(b) with large a and b are
//! formed from the Stirling expansions directly so the leading `x ln x` terms
//! cancel analytically instead of numerically.

use std::f64::consts::PI;

const SHIFT: f64 = 10.0;

/// B_{2k} / (2k (2k-1)) for k = 1..7.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

/// Σ_k B_{2k} / (2k(2k-1) x^{2k-1}), for x >= SHIFT.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * r + c;
    }
    acc / x
}

/// Shift x up to at least SHIFT; returns (x + k, ln(x (x+1) ... (x+k-1))).
fn shift(mut x: f64) -> (f64, f64) {
    let mut prod = 1.0;
    let mut log = 0.0;
    while x < SHIFT {
        prod *= x;
        x += 1.0;
        if prod > 1e280 {
            log += prod.ln();
            prod = 1.0;
        }
    }
    (x, log + prod.ln())
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let (y, correction) = shift(x);
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + stirling_tail(y) - correction
}

/// ln(Γ(a) / Γ(b)) for a, b > 0, accurate when both are large and close in
/// relative terms.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    let (x, ca) = shift(a);
    let (y, cb) = shift(b);
    // (x - 1/2) ln x - (y - 1/2) ln y - (x - y), with h = x - y
    let h = x - y;
    let lead = (y - 0.5) * (h / y).ln_1p() + h * x.ln() - h;
    lead + stirling_tail(x) - stirling_tail(y) - ca + cb
}
