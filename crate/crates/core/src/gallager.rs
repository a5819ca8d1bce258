//! Gallager source and channel functions, including their restriction to
//! probability classes of source blocks.

use crate::composition::{check_cap, for_each_composition, ln_factorials, ln_multinomial};
use crate::error::{Error, Result};
use crate::logdomain::log_sum_exp;
use crate::prob::{ChannelSpec, InputDistribution, SourceSpec};

/// Default spacing of the rho grid on [0, 1].
pub const DEFAULT_RHO_STEP: f64 = 1e-3;
/// Spacing used when resampling around hull vertices and argmax switches.
pub const REFINE_RHO_STEP: f64 = 1e-5;
/// Log-domain tolerance deciding ties in the class membership test.
pub const CLASS_TIE_EPS: f64 = 1e-12;

/// One of the two probability classes a block partition produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassIndex {
    /// Blocks with probability below the threshold.
    One,
    /// Blocks at or above the threshold.
    Two,
}

impl ClassIndex {
    pub fn other(self) -> ClassIndex {
        match self {
            ClassIndex::One => ClassIndex::Two,
            ClassIndex::Two => ClassIndex::One,
        }
    }
}

/// Ordered sample points for sweeps over rho.
///
/// Always covers [0, 1] with both endpoints present; may extend beyond 1
/// for sphere-packing style suprema.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoGrid {
    points: Vec<f64>,
    step: f64,
}

impl RhoGrid {
    /// Uniform grid on [0, 1] with the given step.
    pub fn uniform(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho grid step must lie in (0, 1], got {step}"
            )));
        }
        let n = (1.0 / step).ceil() as usize;
        let mut points: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        points.push(1.0);
        if points[n - 1] > 1.0 - 1e-12 {
            points.remove(n - 1);
        }
        Ok(RhoGrid { points, step })
    }

    /// Uniform grid on [0, 1] plus a geometric tail up to `cap`.
    pub fn extended(step: f64, cap: f64, factor: f64) -> Result<Self> {
        if !(cap > 1.0) || !(factor > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "extension needs cap > 1 and factor > 1, got cap {cap}, factor {factor}"
            )));
        }
        let mut grid = RhoGrid::uniform(step)?;
        let mut rho = 1.0;
        loop {
            rho *= factor;
            if rho >= cap {
                grid.points.push(cap);
                break;
            }
            grid.points.push(rho);
        }
        Ok(grid)
    }

    pub fn default_unit() -> Self {
        RhoGrid::uniform(DEFAULT_RHO_STEP).expect("default step is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

/// Gallager source function Es(rho, p) in nats, zero at rho = 0.
pub fn source_function(rho: f64, source: &SourceSpec) -> f64 {
    assert!(rho >= 0.0, "rho must be nonnegative, got {rho}");
    if rho == 0.0 {
        return 0.0;
    }
    let s = 1.0 / (1.0 + rho);
    let terms: Vec<f64> = source
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| s * p.ln())
        .collect();
    (1.0 + rho) * log_sum_exp(&terms)
}

/// Analytic derivative of Es with respect to rho.
#[cfg(test)]
pub(crate) fn source_function_slope(rho: f64, source: &SourceSpec) -> f64 {
    let s = 1.0 / (1.0 + rho);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for &p in source.probs().iter().filter(|&&p| p > 0.0) {
        let ps = p.powf(s);
        sum += ps;
        weighted += ps * p.ln();
    }
    sum.ln() - weighted / (sum * (1.0 + rho))
}

/// Gallager channel function E0(rho, W, Q) in nats, zero at rho = 0.
pub fn channel_function(rho: f64, w: &ChannelSpec, q: &InputDistribution) -> Result<f64> {
    assert!(rho >= 0.0, "rho must be nonnegative, got {rho}");
    if q.len() != w.num_inputs() {
        return Err(Error::DimensionMismatch {
            expected: w.num_inputs(),
            got: q.len(),
        });
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let s = 1.0 / (1.0 + rho);
    let mut total = 0.0;
    for y in 0..w.num_outputs() {
        let mut inner = 0.0;
        for (x, &qx) in q.probs().iter().enumerate() {
            if qx > 0.0 {
                inner += qx * w.row(x)[y].powf(s);
            }
        }
        if inner > 0.0 {
            total += inner.powf(1.0 + rho);
        }
    }
    Ok(-total.ln())
}

pub(crate) fn ln_threshold(k: usize, gamma: f64) -> f64 {
    if gamma == 0.0 {
        f64::NEG_INFINITY
    } else {
        k as f64 * gamma.ln()
    }
}

pub(crate) fn classify(ln_prob: f64, ln_thresh: f64) -> ClassIndex {
    // gamma = 0 empties class one: nothing sits strictly below -inf.
    if ln_thresh == f64::NEG_INFINITY {
        return ClassIndex::Two;
    }
    if ln_prob == f64::NEG_INFINITY {
        return ClassIndex::One;
    }
    if (ln_prob - ln_thresh).abs() <= CLASS_TIE_EPS || ln_prob > ln_thresh {
        ClassIndex::Two
    } else {
        ClassIndex::One
    }
}

/// Per-composition data grouped by class: (ln multinomial count, ln block
/// probability of one sequence of that type).
#[derive(Debug, Clone)]
pub(crate) struct ClassTable {
    pub class1: Vec<(f64, f64)>,
    pub class2: Vec<(f64, f64)>,
}

impl ClassTable {
    pub fn build(source: &SourceSpec, k: usize, gamma: f64) -> Result<Self> {
        assert!(k >= 1, "block length must be positive");
        assert!(
            (0.0..=1.0).contains(&gamma),
            "gamma must lie in [0, 1], got {gamma}"
        );
        let m = source.alphabet_size();
        check_cap(k, m)?;
        let ln_fact = ln_factorials(k);
        let ln_p: Vec<f64> = source.probs().iter().map(|&p| p.ln()).collect();
        let ln_thresh = ln_threshold(k, gamma);
        let mut class1 = Vec::new();
        let mut class2 = Vec::new();
        for_each_composition(k, m, |counts| {
            let mut ln_prob = 0.0;
            for (a, &c) in counts.iter().enumerate() {
                if c > 0 {
                    ln_prob += c as f64 * ln_p[a];
                }
            }
            let entry = (ln_multinomial(&ln_fact, k, counts), ln_prob);
            match classify(ln_prob, ln_thresh) {
                ClassIndex::One => class1.push(entry),
                ClassIndex::Two => class2.push(entry),
            }
        });
        Ok(ClassTable { class1, class2 })
    }

    fn entries(&self, class: ClassIndex) -> &[(f64, f64)] {
        match class {
            ClassIndex::One => &self.class1,
            ClassIndex::Two => &self.class2,
        }
    }

    pub fn is_empty(&self, class: ClassIndex) -> bool {
        // Zero-probability types occupy a class without contributing mass.
        self.entries(class)
            .iter()
            .all(|&(_, ln_prob)| ln_prob == f64::NEG_INFINITY)
    }

    /// Class-restricted source function at blocklength k, in nats per block.
    pub fn value(&self, rho: f64, class: ClassIndex) -> f64 {
        assert!(rho >= 0.0, "rho must be nonnegative, got {rho}");
        let s = 1.0 / (1.0 + rho);
        let terms: Vec<f64> = self
            .entries(class)
            .iter()
            .filter(|&&(_, ln_prob)| ln_prob != f64::NEG_INFINITY)
            .map(|&(ln_multi, ln_prob)| ln_multi + s * ln_prob)
            .collect();
        let lse = log_sum_exp(&terms);
        if lse == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (1.0 + rho) * lse
        }
    }
}

/// Source function restricted to one class of the threshold partition of
/// length-k blocks: blocks of probability below gamma^k fall in class one,
/// the rest in class two. Exact via composition enumeration; an empty class
/// yields negative infinity.
pub fn class_source_function(
    rho: f64,
    source: &SourceSpec,
    k: usize,
    gamma: f64,
    class: ClassIndex,
) -> Result<f64> {
    Ok(ClassTable::build(source, k, gamma)?.value(rho, class))
}

/// Piecewise upper bound on the normalized class source function: the plain
/// source function on one side of rho0 and its tangent-like linearization
/// r(rho, rho0, gamma') on the other.
pub fn class_source_bound(
    rho: f64,
    rho0: f64,
    gamma_prime: f64,
    source: &SourceSpec,
    class: ClassIndex,
) -> Result<f64> {
    assert!(rho >= 0.0, "rho must be nonnegative, got {rho}");
    assert!(rho0 >= 0.0, "rho0 must be nonnegative, got {rho0}");
    if !(gamma_prime > 0.0) {
        return Err(Error::GammaNonpositive { value: gamma_prime });
    }
    let use_plain = match class {
        ClassIndex::One => rho > rho0,
        ClassIndex::Two => rho < rho0,
    };
    if use_plain {
        Ok(source_function(rho, source))
    } else {
        let es0 = source_function(rho0, source);
        Ok(es0 + (es0 - gamma_prime.ln()) * (rho - rho0) / (1.0 + rho0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(p: &[f64]) -> SourceSpec {
        SourceSpec::new(p).unwrap()
    }

    #[test]
    fn grid_covers_unit_interval() {
        let g = RhoGrid::default_unit();
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(*g.points().last().unwrap(), 1.0);
        assert_eq!(g.points().len(), 1001);
        assert!(g.points().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn extended_grid_reaches_cap() {
        let g = RhoGrid::extended(1e-2, 1e3, 1.05).unwrap();
        assert_eq!(*g.points().last().unwrap(), 1e3);
        assert!(g.points().contains(&1.0));
        assert!(g.points().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bad_grid_parameters_rejected() {
        assert!(RhoGrid::uniform(0.0).is_err());
        assert!(RhoGrid::extended(1e-2, 0.5, 1.05).is_err());
        assert!(RhoGrid::extended(1e-2, 10.0, 1.0).is_err());
    }

    #[test]
    fn source_function_zero_at_origin() {
        assert_eq!(source_function(0.0, &src(&[0.9, 0.1])), 0.0);
    }

    #[test]
    fn source_function_matches_closed_form() {
        // (1 + rho) ln(0.9^(2/3) + 0.1^(2/3)) at rho = 0.5
        let v = source_function(0.5, &src(&[0.9, 0.1]));
        assert!((v - 0.20652648815971486).abs() < 1e-14);
        let v = source_function(1.0, &src(&[0.972, 0.028]));
        assert!((v - 0.28513792638261426).abs() < 1e-14);
    }

    #[test]
    fn source_function_slope_at_zero_is_entropy() {
        for p in [vec![0.9, 0.1], vec![0.5, 0.3, 0.2], vec![0.972, 0.028]] {
            let s = src(&p);
            let h = 1e-6;
            let fd = (source_function(h, &s) - source_function(0.0, &s)) / h;
            assert!((fd - s.entropy()).abs() < 1e-5, "source {p:?}");
            assert!((source_function_slope(0.0, &s) - s.entropy()).abs() < 1e-12);
        }
    }

    #[test]
    fn source_function_convex_and_nondecreasing() {
        let s = src(&[0.6, 0.25, 0.15]);
        let vals: Vec<f64> = (0..=40).map(|i| source_function(i as f64 * 0.05, &s)).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        for w in vals.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-10);
        }
    }

    #[test]
    fn analytic_slope_matches_finite_difference() {
        let s = src(&[0.7, 0.2, 0.1]);
        for rho in [0.2, 0.8, 2.0, 10.0] {
            let h = 1e-6;
            let fd = (source_function(rho + h, &s) - source_function(rho - h, &s)) / (2.0 * h);
            assert!((source_function_slope(rho, &s) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn channel_function_zero_at_origin() {
        let w = ChannelSpec::bsc(0.1).unwrap();
        assert_eq!(channel_function(0.0, &w, &InputDistribution::uniform(2)).unwrap(), 0.0);
    }

    #[test]
    fn channel_function_matches_bsc_closed_form() {
        let q = InputDistribution::uniform(2);
        for (rho, d, expect) in [(1.0, 0.1, 0.2231435513142097), (0.5, 0.2, 0.0683873068297054)] {
            let w = ChannelSpec::bsc(d).unwrap();
            let v = channel_function(rho, &w, &q).unwrap();
            assert!((v - expect).abs() < 1e-12, "rho {rho} d {d}");
        }
        // closed form across a grid
        let d: f64 = 0.07;
        let w = ChannelSpec::bsc(d).unwrap();
        for i in 1..=20 {
            let rho = i as f64 * 0.1;
            let s = 1.0 / (1.0 + rho);
            let expect =
                rho * std::f64::consts::LN_2 - (1.0 + rho) * (d.powf(s) + (1.0 - d).powf(s)).ln();
            let v = channel_function(rho, &w, &q).unwrap();
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_function_slope_at_zero_is_mutual_information() {
        let w = ChannelSpec::example_6x4(0.065, 0.01).unwrap();
        for q in [
            InputDistribution::uniform(6),
            InputDistribution::new(&[0.25, 0.25, 0.25, 0.25, 0.0, 0.0]).unwrap(),
            InputDistribution::new(&[0.0, 0.0, 0.0, 0.0, 0.5, 0.5]).unwrap(),
        ] {
            let h = 1e-6;
            let fd = channel_function(h, &w, &q).unwrap() / h;
            let mi = w.mutual_information(&q).unwrap();
            assert!((fd - mi).abs() < 1e-5);
        }
    }

    #[test]
    fn channel_function_concave_in_rho() {
        let w = ChannelSpec::example_6x4(0.065, 0.01).unwrap();
        let q = InputDistribution::uniform(6);
        let vals: Vec<f64> = (0..=40)
            .map(|i| channel_function(i as f64 * 0.05, &w, &q).unwrap())
            .collect();
        for win in vals.windows(3) {
            assert!(win[2] - 2.0 * win[1] + win[0] <= 1e-10);
        }
    }

    #[test]
    fn channel_function_dimension_checked() {
        let w = ChannelSpec::bsc(0.1).unwrap();
        let q = InputDistribution::uniform(3);
        assert!(matches!(
            channel_function(0.5, &w, &q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn class_function_frozen_brute_force_values() {
        // k = 3, p = [0.7, 0.3], gamma = 0.5, rho = 0.5 over all 8 sequences:
        // class one collects the three 0.063 types and 0.027.
        let s = src(&[0.7, 0.3]);
        let v1 = class_source_function(0.5, &s, 3, 0.5, ClassIndex::One).unwrap();
        let v2 = class_source_function(0.5, &s, 3, 0.5, ClassIndex::Two).unwrap();
        assert!((v1 - (-0.8564291330122602)).abs() < 1e-12);
        assert!((v2 - 0.42280005927488784).abs() < 1e-12);
    }

    /// Direct sequence enumeration, kept independent of the composition path.
    fn brute_class_sum(p: &[f64], k: usize, gamma: f64, rho: f64, class: ClassIndex) -> f64 {
        let m = p.len();
        let s = 1.0 / (1.0 + rho);
        let mut total = 0.0;
        for idx in 0..m.pow(k as u32) {
            let mut rest = idx;
            let mut prob = 1.0;
            for _ in 0..k {
                prob *= p[rest % m];
                rest /= m;
            }
            if prob == 0.0 {
                continue;
            }
            let in_two = if gamma == 0.0 {
                true
            } else {
                let diff = prob.ln() - k as f64 * gamma.ln();
                diff.abs() <= CLASS_TIE_EPS || diff > 0.0
            };
            if (class == ClassIndex::Two) == in_two {
                total += prob.powf(s);
            }
        }
        total
    }

    #[test]
    fn class_function_matches_direct_enumeration() {
        let cases = [
            (vec![0.7, 0.3], 4, 0.4),
            (vec![0.5, 0.3, 0.2], 5, 0.55),
            (vec![0.9, 0.1], 6, 0.8),
            (vec![0.6, 0.4, 0.0], 5, 0.5),
        ];
        for (p, k, gamma) in cases {
            let sspec = src(&p);
            for rho in [0.1, 0.5, 1.0] {
                for class in [ClassIndex::One, ClassIndex::Two] {
                    let got = class_source_function(rho, &sspec, k, gamma, class).unwrap();
                    let brute = brute_class_sum(&p, k, gamma, rho, class);
                    if brute == 0.0 {
                        assert_eq!(got, f64::NEG_INFINITY);
                    } else {
                        let expect = (1.0 + rho) * brute.ln();
                        assert!(
                            (got - expect).abs() < 1e-10,
                            "p {p:?} k {k} gamma {gamma} rho {rho} class {class:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_one_puts_everything_in_class_one() {
        let s = src(&[0.7, 0.3]);
        let k = 5;
        for rho in [0.2, 0.7] {
            let v1 = class_source_function(rho, &s, k, 1.0, ClassIndex::One).unwrap();
            assert!((v1 - k as f64 * source_function(rho, &s)).abs() < 1e-10);
            let v2 = class_source_function(rho, &s, k, 1.0, ClassIndex::Two).unwrap();
            assert_eq!(v2, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn gamma_zero_puts_everything_in_class_two() {
        let s = src(&[0.7, 0.3]);
        let k = 5;
        for rho in [0.2, 0.7] {
            let v2 = class_source_function(rho, &s, k, 0.0, ClassIndex::Two).unwrap();
            assert!((v2 - k as f64 * source_function(rho, &s)).abs() < 1e-10);
            let v1 = class_source_function(rho, &s, k, 0.0, ClassIndex::One).unwrap();
            assert_eq!(v1, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn exact_threshold_ties_go_to_class_two() {
        // Uniform binary source at gamma = 0.5: every block probability equals
        // the threshold exactly, so class one must come out empty.
        let s = src(&[0.5, 0.5]);
        let v1 = class_source_function(0.5, &s, 8, 0.5, ClassIndex::One).unwrap();
        let v2 = class_source_function(0.5, &s, 8, 0.5, ClassIndex::Two).unwrap();
        assert_eq!(v1, f64::NEG_INFINITY);
        assert!((v2 - 8.0 * source_function(0.5, &s)).abs() < 1e-10);
    }

    #[test]
    fn partition_identity_holds() {
        // exp(Es1/(1+rho)) + exp(Es2/(1+rho)) = exp(k Es/(1+rho))
        let cases = [
            (vec![0.7, 0.3], 12, 0.5),
            (vec![0.972, 0.028], 30, 0.9),
            (vec![0.5, 0.3, 0.2], 18, 0.45),
        ];
        for (p, k, gamma) in cases {
            let s = src(&p);
            for rho in [0.05, 0.3, 0.8, 1.0] {
                let inv = 1.0 / (1.0 + rho);
                let v1 = class_source_function(rho, &s, k, gamma, ClassIndex::One).unwrap();
                let v2 = class_source_function(rho, &s, k, gamma, ClassIndex::Two).unwrap();
                let combined = crate::logdomain::log_add(v1 * inv, v2 * inv);
                let whole = k as f64 * source_function(rho, &s) * inv;
                assert!(
                    (combined - whole).abs() < 1e-10,
                    "p {p:?} k {k} gamma {gamma} rho {rho}"
                );
            }
        }
    }

    #[test]
    fn enumeration_cap_propagates() {
        let s = src(&[0.2; 5]);
        assert!(matches!(
            class_source_function(0.5, &s, 500, 0.5, ClassIndex::One),
            Err(Error::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn bound_rejects_nonpositive_gamma() {
        let s = src(&[0.9, 0.1]);
        assert!(matches!(
            class_source_bound(0.5, 0.4, 0.0, &s, ClassIndex::One),
            Err(Error::GammaNonpositive { .. })
        ));
        assert!(matches!(
            class_source_bound(0.5, 0.4, -2.0, &s, ClassIndex::Two),
            Err(Error::GammaNonpositive { .. })
        ));
    }

    #[test]
    fn bound_pieces_meet_at_rho0() {
        let s = src(&[0.9, 0.1]);
        let rho0 = 0.4;
        let es0 = source_function(rho0, &s);
        for class in [ClassIndex::One, ClassIndex::Two] {
            let v = class_source_bound(rho0, rho0, 0.7, &s, class).unwrap();
            assert!((v - es0).abs() < 1e-14);
        }
    }

    #[test]
    fn bound_linear_piece_matches_closed_form() {
        // r(rho, rho0, 1) = Es(rho0) (1 + rho) / (1 + rho0)
        let s = src(&[0.9, 0.1]);
        let v = class_source_bound(0.7, 0.4, 1.0, &s, ClassIndex::Two).unwrap();
        assert!((v - 0.19353037690313227).abs() < 1e-14);
        // class two below rho0 takes the plain source function
        let v = class_source_bound(0.2, 0.4, 1.0, &s, ClassIndex::Two).unwrap();
        assert!((v - source_function(0.2, &s)).abs() < 1e-14);
        // class one below rho0 takes the linear piece
        let v = class_source_bound(0.2, 0.4, 1.0, &s, ClassIndex::One).unwrap();
        let expect = source_function(0.4, &s) * 1.2 / 1.4;
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn bound_dominates_normalized_class_function() {
        // Randomized check of the domination property with gamma = min(1, gamma').
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..60 {
            let p: Vec<f64> = if trial % 2 == 0 {
                let a = rng.random_range(0.05..0.95);
                vec![a, 1.0 - a]
            } else {
                let a: f64 = rng.random_range(0.05..0.8);
                let b = rng.random_range(0.05..(0.95 - a));
                vec![a, b, 1.0 - a - b]
            };
            let s = src(&p);
            let k = rng.random_range(2..=30);
            let gamma_prime: f64 = rng.random_range(0.05..1.7);
            let gamma = gamma_prime.min(1.0);
            let table = ClassTable::build(&s, k, gamma).unwrap();
            for &rho0 in &[0.1, 0.45, 0.9] {
                for i in 0..=10 {
                    let rho = i as f64 * 0.1;
                    for class in [ClassIndex::One, ClassIndex::Two] {
                        let exact = table.value(rho, class) / k as f64;
                        let bound =
                            class_source_bound(rho, rho0, gamma_prime, &s, class).unwrap();
                        assert!(
                            exact <= bound + 1e-12,
                            "p {p:?} k {k} g' {gamma_prime} rho {rho} rho0 {rho0} {class:?}: {exact} > {bound}"
                        );
                    }
                }
            }
        }
    }
}
