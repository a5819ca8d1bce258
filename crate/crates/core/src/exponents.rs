//! Asymptotic exponents: source reliability, channel random-coding and
//! sphere-packing exponents, and the joint source-channel exponents in both
//! their single-distribution and concave-hull forms, together with the
//! two-class construction that attains the hull form.

use crate::error::{Error, Result};
use crate::gallager::{source_function, RhoGrid};
use crate::hull::{maximize_e0, DistributionSet, E0Table, HullCurve};
use crate::prob::{ChannelSpec, InputDistribution, SourceSpec};
use crate::search::{argmax, bracket_around, golden_max};

/// Search cap for the source-reliability supremum over rho.
pub const RHO_CAP_SOURCE: f64 = 1e4;
/// Search cap for the sphere-packing supremum over rho.
pub const RHO_CAP_CHANNEL: f64 = 1e3;
/// Final bracket width of one-dimensional rho refinements.
pub const RHO_REFINE_TOL: f64 = 1e-7;
/// Final bracket width of rate minimizations.
pub const RATE_REFINE_TOL: f64 = 1e-6;
/// Tolerance of the sphere-packing tightness test, in nats.
pub const TIGHTNESS_TOL: f64 = 1e-6;
/// Supporting pairs closer than this in rho collapse to one distribution.
pub const PAIR_COLLAPSE_WIDTH: f64 = 1e-2;

/// Geometric spacing of grid points past rho = 1 in extended sweeps.
pub const EXTENSION_FACTOR: f64 = 1.05;

/// Source letters per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionRate(f64);

impl TransmissionRate {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transmission rate must be positive and finite, got {t}"
            )));
        }
        Ok(TransmissionRate(t))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Two supporting distributions with their rho locations and mixing weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPair {
    pub rho1: f64,
    pub rho2: f64,
    /// Weight on rho1; rho0 = lambda rho1 + (1-lambda) rho2.
    pub lambda: f64,
    pub q1: InputDistribution,
    pub q2: InputDistribution,
    /// Channel-function values at the two supports.
    pub value1: f64,
    pub value2: f64,
}

/// An exponent value together with the arguments that achieve it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentResult {
    /// Nats per channel use; +inf only with the `infinite` flag set.
    pub value: f64,
    pub infinite: bool,
    pub rho_star: Option<f64>,
    pub q_star: Option<InputDistribution>,
    pub pair: Option<SupportPair>,
    pub rate_star: Option<f64>,
    pub gamma0: Option<f64>,
    /// Clipped threshold min(1, gamma0).
    pub gamma: Option<f64>,
    /// Whether the sphere-packing bound coincides with the achievable value.
    pub tight: Option<bool>,
    /// Whether a two-class construction collapsed to a single distribution.
    pub degenerate: Option<bool>,
}

impl ExponentResult {
    fn finite(value: f64) -> Self {
        ExponentResult {
            value,
            infinite: false,
            rho_star: None,
            q_star: None,
            pair: None,
            rate_star: None,
            gamma0: None,
            gamma: None,
            tight: None,
            degenerate: None,
        }
    }

    fn unbounded() -> Self {
        ExponentResult {
            value: f64::INFINITY,
            infinite: true,
            ..ExponentResult::finite(0.0)
        }
    }
}

fn unit_table(w: &ChannelSpec, set: &DistributionSet) -> Result<E0Table> {
    E0Table::build(w, set, &RhoGrid::default_unit())
}

fn extended_table(w: &ChannelSpec, set: &DistributionSet) -> Result<E0Table> {
    let grid = RhoGrid::extended(
        crate::gallager::DEFAULT_RHO_STEP,
        RHO_CAP_CHANNEL,
        EXTENSION_FACTOR,
    )?;
    E0Table::build(w, set, &grid)
}

/// Reliability of a source at coding rate `rate` (nats per source letter):
/// sup over rho >= 0 of rho rate - Es(rho, p). Infinite above the rate of the
/// support; the supremum at rate exactly log(support) is finite, approached
/// as rho grows.
pub fn source_reliability(rate: f64, source: &SourceSpec) -> ExponentResult {
    assert!(rate >= 0.0, "rate must be nonnegative, got {rate}");
    let h = source.entropy();
    if rate <= h {
        return ExponentResult {
            rho_star: Some(0.0),
            ..ExponentResult::finite(0.0)
        };
    }
    let ln_support = (source.support_size() as f64).ln();
    if rate > ln_support {
        return ExponentResult::unbounded();
    }
    // Concave objective, so a single golden-section pass is exact.
    let (rho, value) = golden_max(
        |rho| rho * rate - source_function(rho, source),
        0.0,
        RHO_CAP_SOURCE,
        RHO_REFINE_TOL,
    );
    ExponentResult {
        rho_star: Some(rho),
        ..ExponentResult::finite(value.max(0.0))
    }
}

/// Channel random-coding exponent at `rate`, maximized over the table's
/// distribution set with rho restricted to [0, 1].
pub fn random_coding_exponent_with(table: &E0Table, rate: f64) -> Result<ExponentResult> {
    assert!(rate >= 0.0, "rate must be nonnegative, got {rate}");
    rho_sweep(table, 1.0, |rho, e0| e0 - rho * rate)
}

pub fn random_coding_exponent(rate: f64, w: &ChannelSpec) -> Result<ExponentResult> {
    random_coding_exponent_with(&unit_table(w, &DistributionSet::AllSimplex)?, rate)
}

/// Sphere-packing exponent at `rate`: rho unbounded above, capped at
/// [`RHO_CAP_CHANNEL`]. An ascent that is still strictly positive at the cap
/// means the exponent is infinite (rate below the zero-error floor).
pub fn sphere_packing_exponent_with(table: &E0Table, rate: f64) -> Result<ExponentResult> {
    assert!(rate >= 0.0, "rate must be nonnegative, got {rate}");
    let samples = table.samples();
    let n = samples.len();
    let last_obj = samples[n - 1].value - samples[n - 1].rho * rate;
    let prev_obj = samples[n - 2].value - samples[n - 2].rho * rate;
    let best = argmax(samples.iter().map(|s| s.value - s.rho * rate));
    if best == n - 1 && last_obj > prev_obj + 1e-12 {
        return Ok(ExponentResult::unbounded());
    }
    rho_sweep(table, f64::INFINITY, |rho, e0| e0 - rho * rate)
}

pub fn sphere_packing_exponent(rate: f64, w: &ChannelSpec) -> Result<ExponentResult> {
    sphere_packing_exponent_with(&extended_table(w, &DistributionSet::AllSimplex)?, rate)
}

/// Slope of the maximized channel function at rho = 1, by central difference.
/// Below this rate the random-coding exponent loses to sphere packing.
pub fn critical_rate(w: &ChannelSpec) -> Result<f64> {
    let set = DistributionSet::AllSimplex;
    let h = 1e-5;
    let up = maximize_e0(1.0 + h, w, &set)?.value;
    let down = maximize_e0(1.0 - h, w, &set)?.value;
    Ok((up - down) / (2.0 * h))
}

/// Single-ensemble joint source-channel exponent:
/// max over rho in [0, 1] of E0(rho, W, set) - t Es(rho, p).
pub fn gallager_jscc_exponent_with(
    table: &E0Table,
    source: &SourceSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    rho_sweep(table, 1.0, |rho, e0| e0 - t.get() * source_function(rho, source))
}

pub fn gallager_jscc_exponent(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
    set: &DistributionSet,
) -> Result<ExponentResult> {
    gallager_jscc_exponent_with(&unit_table(w, set)?, source, t)
}

/// Hull-form joint source-channel exponent:
/// max over rho in [0, 1] of hull(rho) - t Es(rho, p), with the supporting
/// pair at the argmax.
pub fn csiszar_jscc_exponent_dual_with(
    hull: &HullCurve,
    source: &SourceSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    let objective = |rho: f64| hull.evaluate(rho).value - t.get() * source_function(rho, source);
    // Hull concave, source function convex: the objective is concave.
    let step = crate::gallager::DEFAULT_RHO_STEP;
    let n = (1.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
    let best = argmax(grid.iter().map(|&rho| objective(rho)));
    let (lo, hi) = bracket_around(&grid, best);
    let (rho0, refined) = golden_max(objective, lo, hi, RHO_REFINE_TOL);
    let (rho0, value) = if refined >= objective(grid[best]) {
        (rho0, refined)
    } else {
        (grid[best], objective(grid[best]))
    };
    let hp = hull.evaluate(rho0);
    let left = &hull.vertices()[hp.left];
    let right = &hull.vertices()[hp.right];
    Ok(ExponentResult {
        rho_star: Some(rho0),
        pair: Some(SupportPair {
            rho1: hp.rho1,
            rho2: hp.rho2,
            lambda: hp.lambda,
            q1: left.q.clone(),
            q2: right.q.clone(),
            value1: left.value,
            value2: right.value,
        }),
        ..ExponentResult::finite(value.max(0.0))
    })
}

pub fn csiszar_jscc_exponent_dual(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
    set: &DistributionSet,
) -> Result<ExponentResult> {
    csiszar_jscc_exponent_dual_with(&unit_table(w, set)?.hull()?, source, t)
}

/// Rate-domain joint source-channel exponent:
/// min over R in [t H(V), t log m+] of t e(R/t, p) + Er(R, W).
pub fn csiszar_jscc_exponent_primal_with(
    table: &E0Table,
    source: &SourceSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    minimize_over_rate(source, t, |rate| {
        Ok(random_coding_exponent_with(table, rate)?.value)
    })
}

pub fn csiszar_jscc_exponent_primal(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    csiszar_jscc_exponent_primal_with(&unit_table(w, &DistributionSet::AllSimplex)?, source, t)
}

/// Converse counterpart of the rate-domain form, with Esp in place of Er.
/// Flags whether the bound is tight at the minimizing rate, i.e. whether
/// Esp and Er coincide there.
pub fn jscc_sphere_packing_exponent_with(
    table: &E0Table,
    source: &SourceSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    let mut result = minimize_over_rate(source, t, |rate| {
        let esp = sphere_packing_exponent_with(table, rate)?;
        Ok(esp.value)
    })?;
    if result.infinite {
        return Ok(result);
    }
    let rate_star = result.rate_star.expect("finite minimization reports its rate");
    let esp = sphere_packing_exponent_with(table, rate_star)?;
    let er = random_coding_exponent_with(table, rate_star)?;
    result.tight = Some(!esp.infinite && (esp.value - er.value).abs() <= TIGHTNESS_TOL);
    Ok(result)
}

pub fn jscc_sphere_packing_exponent(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    jscc_sphere_packing_exponent_with(
        &extended_table(w, &DistributionSet::AllSimplex)?,
        source,
        t,
    )
}

/// Exponent of the two-class construction over the pair {q1, q2}: the hull
/// form on the two-member set, plus the construction parameters (supporting
/// rho pair and equalizing threshold).
pub fn two_class_exponent(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
    q1: &InputDistribution,
    q2: &InputDistribution,
) -> Result<ExponentResult> {
    let set = DistributionSet::explicit(vec![q1.clone(), q2.clone()])?;
    let hull = unit_table(w, &set)?.hull()?;
    let mut result = csiszar_jscc_exponent_dual_with(&hull, source, t)?;
    attach_construction(&mut result, source, t);
    Ok(result)
}

/// Fills in gamma0/gamma for a dual-form result, collapsing narrow supports
/// to the single-distribution construction.
fn attach_construction(result: &mut ExponentResult, source: &SourceSpec, t: TransmissionRate) {
    let pair = result.pair.take().expect("dual form reports a support pair");
    let rho0 = result.rho_star.expect("dual form reports its argmax");
    if pair.rho2 - pair.rho1 <= PAIR_COLLAPSE_WIDTH {
        let q = if pair.lambda >= 0.5 { pair.q1 } else { pair.q2 };
        result.q_star = Some(q);
        result.degenerate = Some(true);
        result.gamma0 = None;
        result.gamma = Some(0.0);
        return;
    }
    let gamma0 = solve_threshold(
        source,
        t,
        rho0,
        pair.rho1,
        pair.rho2,
        pair.value1,
        pair.value2,
    )
    .expect("support width exceeds the degeneracy threshold");
    result.gamma0 = Some(gamma0);
    result.gamma = Some(gamma0.min(1.0));
    result.degenerate = Some(false);
    result.pair = Some(pair);
}

/// Threshold gamma0 whose two-class partition equalizes the per-class
/// exponents of the construction with supports rho1 < rho2 around rho0.
pub fn solve_threshold(
    source: &SourceSpec,
    t: TransmissionRate,
    rho0: f64,
    rho1: f64,
    rho2: f64,
    e0_at_rho1: f64,
    e0_at_rho2: f64,
) -> Result<f64> {
    if (rho2 - rho1).abs() < 1e-9 {
        return Err(Error::DegeneratePair { rho1, rho2 });
    }
    let sigma = (e0_at_rho2 - e0_at_rho1) / (rho2 - rho1);
    let ln_gamma0 = source_function(rho0, source) - (1.0 + rho0) * sigma / t.get();
    Ok(ln_gamma0.exp())
}

/// Finds the supporting pair of the full-simplex hull at the dual argmax and
/// evaluates the two-class construction on it.
pub fn best_pair_search_with(
    hull: &HullCurve,
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
) -> Result<ExponentResult> {
    let dual = csiszar_jscc_exponent_dual_with(hull, source, t)?;
    let pair = dual.pair.as_ref().expect("dual form reports a support pair");
    if pair.rho2 - pair.rho1 <= PAIR_COLLAPSE_WIDTH {
        let rho0 = dual.rho_star.expect("dual form reports its argmax");
        let q = if pair.lambda >= 0.5 {
            pair.q1.clone()
        } else {
            pair.q2.clone()
        };
        return Ok(ExponentResult {
            rho_star: Some(rho0),
            q_star: Some(q),
            degenerate: Some(true),
            gamma: Some(0.0),
            ..ExponentResult::finite(dual.value)
        });
    }
    two_class_exponent(source, w, t, &pair.q1, &pair.q2)
}

pub fn best_pair_search(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
    grid: &RhoGrid,
) -> Result<ExponentResult> {
    let hull = E0Table::build(w, &DistributionSet::AllSimplex, grid)?.hull()?;
    best_pair_search_with(&hull, source, w, t)
}

/// Upper bound on what any ensemble over the given set can achieve: the same
/// hull form as the dual exponent, exposed under its own name so reports can
/// state the ceiling explicitly.
pub fn ensemble_ceiling(
    source: &SourceSpec,
    w: &ChannelSpec,
    t: TransmissionRate,
    set: &DistributionSet,
) -> Result<ExponentResult> {
    csiszar_jscc_exponent_dual(source, w, t, set)
}

/// Grid argmax of `objective(rho, e0max(rho))` over table samples with
/// rho <= rho_cap, refined by golden section with fresh solves.
fn rho_sweep<F>(table: &E0Table, rho_cap: f64, objective: F) -> Result<ExponentResult>
where
    F: Fn(f64, f64) -> f64,
{
    let samples: Vec<&crate::hull::E0Sample> = table
        .samples()
        .iter()
        .filter(|s| s.rho <= rho_cap)
        .collect();
    let rhos: Vec<f64> = samples.iter().map(|s| s.rho).collect();
    let best = argmax(samples.iter().map(|s| objective(s.rho, s.value)));
    let (lo, hi) = bracket_around(&rhos, best);
    let mut failure = None;
    let (rho_refined, value_refined) = golden_max(
        |rho| match table.solve(rho) {
            Ok(sol) => objective(rho, sol.value),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        RHO_REFINE_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let grid_value = objective(samples[best].rho, samples[best].value);
    let (rho_star, value, q_star) = if value_refined > grid_value {
        let q = table.solve(rho_refined)?.q;
        (rho_refined, value_refined, q)
    } else {
        (samples[best].rho, grid_value, samples[best].q.clone())
    };
    Ok(ExponentResult {
        rho_star: Some(rho_star),
        q_star: Some(q_star),
        ..ExponentResult::finite(value.max(0.0))
    })
}

/// Golden-section minimization of `objective(R)` over [t H, t log m+].
fn minimize_over_rate<F>(
    source: &SourceSpec,
    t: TransmissionRate,
    objective: F,
) -> Result<ExponentResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let lo = t.get() * source.entropy();
    let hi = t.get() * (source.support_size() as f64).ln();
    let total = |rate: f64| -> Result<f64> {
        let e = source_reliability(rate / t.get(), source);
        Ok(t.get() * e.value + objective(rate)?)
    };
    let mut failure = None;
    let (rate_star, neg_value) = golden_max(
        |rate| match total(rate) {
            Ok(v) => -v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        RATE_REFINE_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let value = -neg_value;
    if value.is_infinite() {
        let mut r = ExponentResult::unbounded();
        r.rate_star = Some(rate_star);
        return Ok(r);
    }
    Ok(ExponentResult {
        rate_star: Some(rate_star),
        ..ExponentResult::finite(value.max(0.0))
    })
}
