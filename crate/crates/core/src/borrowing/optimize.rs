//! Derivative-free maximizers on the unit interval and the unit box.

/// Equispaced points for the coarse scan, including both endpoints.
pub const SCAN_POINTS: usize = 101;
/// Width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-6;
/// Objective values closer than this count as tied; ties go to the smaller argument.
pub const TIE_TOL: f64 = 1e-12;
/// Coordinate ascent stops once no coordinate moves more than this in a sweep.
pub const SWEEP_TOL: f64 = 1e-4;
pub const MAX_SWEEPS: usize = 100;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[inline]
fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Picks the better of two `(x, f(x))` candidates, smaller `x` on ties.
#[inline]
fn better(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    if (a.1 - b.1).abs() <= TIE_TOL {
        if a.0 <= b.0 {
            a
        } else {
            b
        }
    } else if a.1 > b.1 {
        a
    } else {
        b
    }
}

fn golden_section<F: FnMut(f64) -> f64>(f: &mut F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = finite_or_neg_inf(f(c));
    let mut fd = finite_or_neg_inf(f(d));
    while hi - lo > GOLDEN_TOL {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = finite_or_neg_inf(f(c));
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = finite_or_neg_inf(f(d));
        }
    }
    let x = 0.5 * (lo + hi);
    (x, finite_or_neg_inf(f(x)))
}

/// Maximizes `f` over [0, 1]: a 101-point scan, then golden-section search
/// on the two grid cells around the best scan point.
///
/// Returns `(argmax, max)`.
pub fn maximize_unit_interval<F: FnMut(f64) -> f64>(mut f: F) -> (f64, f64) {
    let step = 1.0 / (SCAN_POINTS - 1) as f64;
    let mut best_k = 0;
    let mut best_v = finite_or_neg_inf(f(0.0));
    for k in 1..SCAN_POINTS {
        let v = finite_or_neg_inf(f(k as f64 * step));
        if v > best_v + TIE_TOL {
            best_k = k;
            best_v = v;
        }
    }
    let grid_best = (best_k as f64 * step, best_v);
    let lo = best_k.saturating_sub(1) as f64 * step;
    let hi = ((best_k + 1).min(SCAN_POINTS - 1)) as f64 * step;
    let refined = golden_section(&mut f, lo, hi);
    better(grid_best, refined)
}

/// Cyclic coordinate ascent over `[0, 1]^dim`, starting from the origin and
/// visiting coordinates in ascending order. A coordinate only moves when the
/// objective improves (or ties at a smaller value).
pub fn coordinate_ascent<F: FnMut(&[f64]) -> f64>(dim: usize, mut f: F) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    if dim == 0 {
        return x;
    }
    let mut current = finite_or_neg_inf(f(&x));
    let mut scratch = x.clone();
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..dim {
            scratch.copy_from_slice(&x);
            let (cand, value) = maximize_unit_interval(|t| {
                scratch[j] = t;
                f(&scratch)
            });
            let (chosen, chosen_value) = better((x[j], current), (cand, value));
            max_change = max_change.max((chosen - x[j]).abs());
            x[j] = chosen;
            current = chosen_value;
        }
        if max_change < SWEEP_TOL {
            break;
        }
    }
    x
}
