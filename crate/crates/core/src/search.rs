//! One-dimensional maximization helpers: grid scan plus golden-section
//! refinement inside the bracket around the best grid point.

/// Golden-section maximization on [a, b]; returns (argmax, value).
/// Assumes unimodality inside the bracket; callers guard with a grid scan.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    debug_assert!(b >= a);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    if fm >= f1 && fm >= f2 {
        (mid, fm)
    } else if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bracket [points[i-1], points[i+1]] (clamped to the ends) around index i.
pub(crate) fn bracket_around(points: &[f64], i: usize) -> (f64, f64) {
    let lo = if i == 0 { points[0] } else { points[i - 1] };
    let hi = if i + 1 >= points.len() {
        points[points.len() - 1]
    } else {
        points[i + 1]
    };
    (lo, hi)
}

/// Index of the largest value; ties resolved toward the smaller index.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}
