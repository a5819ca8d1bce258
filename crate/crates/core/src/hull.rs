//! Maximization of the channel function over input distributions and the
//! upper concave envelope of the maximized curve in rho.
//!
//! For the full simplex the inner maximization is an alternating
//! multiplicative update (Blahut/Arimoto family): maximizing E0 for fixed
//! rho > 0 is equivalent to minimizing the convex functional
//! G(Q) = sum_y (sum_x Q(x) W(y|x)^(1/(1+rho)))^(1+rho), so a KKT point is a
//! global optimum and can be certified.

use crate::error::{Error, Result};
use crate::gallager::{channel_function, RhoGrid, REFINE_RHO_STEP};
use crate::prob::{ChannelSpec, InputDistribution};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Successive-value stopping tolerance for the inner optimizer, in nats.
pub const E0_VALUE_TOL: f64 = 1e-11;
/// Multiplicative tolerance of the KKT certificate on active letters.
pub const KKT_REL_TOL: f64 = 1e-7;
/// Iteration cap for both optimizers.
pub const MAX_ITERATIONS: usize = 100_000;
/// Required agreement between restarts of the simplex optimizer. The KKT
/// certificate only resolves the optimum value to about its own band, so
/// restarts may legitimately spread that far on flat objectives.
pub const RESTART_AGREEMENT: f64 = 1e-7;
/// Convergence tolerance of the capacity iteration, in nats.
pub const CAPACITY_TOL: f64 = 1e-10;

const RANDOM_RESTARTS: usize = 8;
const ACTIVE_MASS_EPS: f64 = 1e-9;
const SUPPORT_JUMP: f64 = 0.02;
const REFINE_WINDOW: f64 = 2e-3;
/// Widest move, in ln-units of the iterate, the escalating tilt may propose.
/// 64 spans the simplex from any start the seeded restarts can draw.
const SPAN_CAP: f64 = 64.0;
/// Absolute ceiling on the tilt exponent when the gradient gap is ~0.
const BETA_CAP: f64 = 1e18;

/// Feasible set of input distributions for the channel-function maximization.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSet {
    /// Every distribution on the channel input alphabet.
    AllSimplex,
    /// An explicit finite collection.
    Explicit(Vec<InputDistribution>),
}

impl DistributionSet {
    pub fn explicit(members: Vec<InputDistribution>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter(
                "explicit distribution set must be non-empty".into(),
            ));
        }
        let len = members[0].len();
        if members.iter().any(|q| q.len() != len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: members.iter().map(|q| q.len()).find(|&l| l != len).unwrap(),
            });
        }
        Ok(DistributionSet::Explicit(members))
    }
}

/// A solved point of the maximized channel function.
#[derive(Debug, Clone, PartialEq)]
pub struct E0Sample {
    pub rho: f64,
    pub value: f64,
    pub q: InputDistribution,
}

/// max over the set of E0(rho, W, Q), with the achieving distribution.
pub fn maximize_e0(rho: f64, w: &ChannelSpec, set: &DistributionSet) -> Result<E0Sample> {
    assert!(rho >= 0.0, "rho must be nonnegative, got {rho}");
    match set {
        DistributionSet::Explicit(members) => {
            let mut best: Option<(f64, &InputDistribution)> = None;
            for q in members {
                let value = channel_function(rho, w, q)?;
                best = Some(match best {
                    None => (value, q),
                    Some((bv, bq)) => {
                        if value > bv || (value == bv && lex_less(q.probs(), bq.probs())) {
                            (value, q)
                        } else {
                            (bv, bq)
                        }
                    }
                });
            }
            let (value, q) = best.expect("set is non-empty");
            Ok(E0Sample {
                rho,
                value,
                q: q.clone(),
            })
        }
        DistributionSet::AllSimplex => {
            let nx = w.num_inputs();
            if rho == 0.0 {
                return Ok(E0Sample {
                    rho,
                    value: 0.0,
                    q: InputDistribution::uniform(nx),
                });
            }
            // Deterministic restarts: uniform plus seeded random interior points.
            let mut starts = vec![vec![1.0 / nx as f64; nx]];
            let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15 ^ rho.to_bits());
            for _ in 0..RANDOM_RESTARTS {
                let mut q: Vec<f64> = (0..nx)
                    .map(|_| -rng.random_range(1e-12..1.0f64).ln())
                    .collect();
                let sum: f64 = q.iter().sum();
                q.iter_mut().for_each(|v| *v /= sum);
                starts.push(q);
            }
            // G is convex, so one certified run already names the optimum;
            // the rest cross-check it. A start that exhausts its iteration
            // budget is only fatal when no start certifies.
            let mut runs: Vec<(f64, Vec<f64>)> = Vec::new();
            let mut first_err: Option<Error> = None;
            for start in &starts {
                match arimoto_e0(rho, w, start) {
                    Ok(run) => runs.push(run),
                    Err(e) => first_err = first_err.or(Some(e)),
                }
            }
            if runs.is_empty() {
                return Err(first_err.expect("at least one start was attempted"));
            }
            let lo = runs.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
            let hi = runs.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > RESTART_AGREEMENT {
                return Err(Error::NoConvergence {
                    iterations: MAX_ITERATIONS,
                    context: format!(
                        "restarts disagree by {:.3e} at rho {rho} (numerics bug)",
                        hi - lo
                    ),
                });
            }
            let best = runs
                .into_iter()
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("at least one start");
            Ok(E0Sample {
                rho,
                value: best.0,
                q: InputDistribution::new(&best.1).expect("normalized iterate"),
            })
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// State of one iterate: G = sum_y alpha_y^(1+rho) is the convex objective
/// being minimized, D_x its per-letter gradient up to the factor 1 + rho.
/// Both are held in log scale; D_x = q_x^rho on a noiseless channel, so at
/// large rho the linear values underflow while the iterate is still moving.
struct Iterate {
    q: Vec<f64>,
    ln_g: f64,
    ln_d: Vec<f64>,
    ln_d_min: f64,
}

fn evaluate_iterate(ln_a: &[Vec<f64>], rho: f64, ln_q: &[f64]) -> Iterate {
    let nx = ln_a.len();
    let ny = ln_a[0].len();
    let q: Vec<f64> = ln_q.iter().map(|&l| l.exp()).collect();
    let mut buf = vec![0.0; nx];
    let ln_alpha: Vec<f64> = (0..ny)
        .map(|y| {
            for x in 0..nx {
                buf[x] = ln_q[x] + ln_a[x][y];
            }
            crate::logdomain::log_sum_exp(&buf)
        })
        .collect();
    let scaled: Vec<f64> = ln_alpha.iter().map(|&l| (1.0 + rho) * l).collect();
    let ln_g = crate::logdomain::log_sum_exp(&scaled);
    let mut ybuf = vec![0.0; ny];
    let ln_d: Vec<f64> = (0..nx)
        .map(|x| {
            for y in 0..ny {
                ybuf[y] = ln_a[x][y] + rho * ln_alpha[y];
            }
            crate::logdomain::log_sum_exp(&ybuf)
        })
        .collect();
    let ln_d_min = ln_d.iter().copied().fold(f64::INFINITY, f64::min);
    Iterate {
        q,
        ln_g,
        ln_d,
        ln_d_min,
    }
}

/// Tilts mass toward letters of small gradient. beta = 1 is the exact
/// alternating-minimization step and never increases G. Dropped letters stay
/// dropped, and the gap is measured from the in-support minimum so their
/// ln D of -infinity cannot poison the step.
fn tilt_step(ln_q: &[f64], cur: &Iterate, rho: f64, beta: f64) -> Vec<f64> {
    let ref_d = ln_q
        .iter()
        .zip(&cur.ln_d)
        .filter(|(&l, _)| l > f64::NEG_INFINITY)
        .map(|(_, &ld)| ld)
        .fold(f64::INFINITY, f64::min);
    let mut next: Vec<f64> = ln_q
        .iter()
        .zip(&cur.ln_d)
        .map(|(&l, &ld)| {
            if l > f64::NEG_INFINITY {
                l - beta * (ld - ref_d) / rho
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let norm = crate::logdomain::log_sum_exp(&next);
    next.iter_mut().for_each(|l| *l -= norm);
    next
}

/// Candidate supports formed by dropping the j highest-gradient letters for
/// every prefix j, restricted to letters violating the KKT band. Trying all
/// prefixes sidesteps any guess about where the gradient gap between the
/// true support and the rest lies; the value test picks the right one.
fn prune_candidates(ln_q: &[f64], cur: &Iterate) -> Vec<Vec<f64>> {
    let band = KKT_REL_TOL.ln_1p();
    let mut order: Vec<usize> = (0..ln_q.len())
        .filter(|&x| ln_q[x] > f64::NEG_INFINITY)
        .filter(|&x| cur.ln_d[x] > cur.ln_d_min + band)
        .collect();
    order.sort_by(|&a, &b| cur.ln_d[b].total_cmp(&cur.ln_d[a]));
    let alive = ln_q.iter().filter(|&&l| l > f64::NEG_INFINITY).count();
    let mut out = Vec::new();
    let mut next = ln_q.to_vec();
    for (j, &x) in order.iter().enumerate() {
        if alive - (j + 1) == 0 {
            break;
        }
        next[x] = f64::NEG_INFINITY;
        let mut cand = next.clone();
        let norm = crate::logdomain::log_sum_exp(&cand);
        if norm == f64::NEG_INFINITY {
            break;
        }
        cand.iter_mut().for_each(|l| *l -= norm);
        out.push(cand);
    }
    out
}

/// Candidates that re-inject mass into dropped letters whose gradient fell
/// strictly below the active support's level, which certifies the current
/// support is wrong. Injection at an equal share matters: a token mass
/// would need an exponential growth phase far longer than any polish burst,
/// so its candidate would never look better and the letter would stay lost.
fn resurrect_candidates(ln_q: &[f64], cur: &Iterate) -> Vec<Vec<f64>> {
    let ln_active_min = cur
        .q
        .iter()
        .zip(&cur.ln_d)
        .filter(|(&qx, _)| qx > ACTIVE_MASS_EPS)
        .map(|(_, &ld)| ld)
        .fold(f64::INFINITY, f64::min);
    let band = (-KKT_REL_TOL).ln_1p();
    let mut lost: Vec<usize> = (0..ln_q.len())
        .filter(|&x| cur.q[x] <= ACTIVE_MASS_EPS)
        .filter(|&x| cur.ln_d[x] < ln_active_min + band)
        .collect();
    if lost.is_empty() {
        return Vec::new();
    }
    lost.sort_by(|&a, &b| cur.ln_d[a].total_cmp(&cur.ln_d[b]));
    let alive = cur.q.iter().filter(|&&qx| qx > ACTIVE_MASS_EPS).count();
    let inject = |letters: &[usize], mass: f64| {
        let mut next = ln_q.to_vec();
        for &x in letters {
            next[x] = mass.ln();
        }
        let norm = crate::logdomain::log_sum_exp(&next);
        next.iter_mut().for_each(|l| *l -= norm);
        next
    };
    let best = lost[0];
    let mut out = vec![
        inject(&[best], 1.0 / (alive + 1) as f64),
        inject(&[best], 1e-3),
    ];
    if lost.len() > 1 {
        out.push(inject(&lost, 1.0 / (alive + lost.len()) as f64));
    }
    out
}

/// Runs a short burst of monotone tilt steps so a support move can be judged
/// by the value it reaches after re-equalizing, not by its raw first step.
fn polish(ln_a: &[Vec<f64>], rho: f64, mut ln_q: Vec<f64>, steps: usize) -> (Iterate, Vec<f64>) {
    let mut cur = evaluate_iterate(ln_a, rho, &ln_q);
    for _ in 0..steps {
        let mut best: Option<(Iterate, Vec<f64>)> = None;
        for beta in [1.0, rho, 4.0 * rho] {
            if beta >= 1.0 {
                let cand = tilt_step(&ln_q, &cur, rho, beta);
                let ev = evaluate_iterate(ln_a, rho, &cand);
                let bar = best.as_ref().map_or(cur.ln_g, |(b, _)| b.ln_g);
                if ev.ln_g < bar {
                    best = Some((ev, cand));
                }
            }
        }
        match best {
            Some((ev, cand)) => {
                let gain = cur.ln_g - ev.ln_g;
                ln_q = cand;
                cur = ev;
                if gain < 1e-15 {
                    break;
                }
            }
            None => break,
        }
    }
    (cur, ln_q)
}

/// Solves the face-restricted problem from uniform on every support and
/// returns the best endpoint. The true support always has an interior face
/// optimum, reached geometrically by plain tilts, so this escapes stalls
/// where the wrong-face gradients are too degenerate to say which letters
/// to swap. Exponential in the alphabet, so reserved for small ones.
fn best_face_by_enumeration(
    ln_a: &[Vec<f64>],
    rho: f64,
    nx: usize,
) -> Option<(Iterate, Vec<f64>)> {
    if nx > 12 {
        return None;
    }
    let mut best: Option<(Iterate, Vec<f64>)> = None;
    for mask in 1usize..(1 << nx) {
        let size = mask.count_ones() as f64;
        let ln_q: Vec<f64> = (0..nx)
            .map(|x| {
                if mask & (1 << x) != 0 {
                    -size.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let (ev, polished) = polish(ln_a, rho, ln_q, 2000);
        if best.as_ref().map_or(true, |(b, _)| ev.ln_g < b.ln_g) {
            best = Some((ev, polished));
        }
    }
    best
}

/// Multiplicative ascent for fixed rho > 0, certified by the KKT condition:
/// at an optimum D_x = sum_y W(y|x)^s alpha_y^rho is minimal exactly on the
/// support of Q. The plain step is the exact alternating-minimization update
/// and never increases G, but it can crawl: letters outside the true support
/// drain at rate gap/rho near a support switch, and equalization moves at
/// 1/rho for large rho. Escalating tilts handle the latter. For the former,
/// prune and resurrect candidates jump between supports; each is polished
/// before the value test because dropping mass m costs O(m^2) until the
/// survivors re-equalize, which would mask a genuine O(m gap) gain. Every
/// accepted move strictly decreases G, so descent is never lost and failed
/// attempts only cost time, rationed by exponential backoff. Near a switch
/// a strictly improving prune can still land on the wrong face, where the
/// gradients no longer say which letters to swap; once the backoff maxes
/// out, one exhaustive face enumeration settles the support.
fn arimoto_e0(rho: f64, w: &ChannelSpec, start: &[f64]) -> Result<(f64, Vec<f64>)> {
    let nx = w.num_inputs();
    let s = 1.0 / (1.0 + rho);
    let ln_a: Vec<Vec<f64>> = (0..nx)
        .map(|x| w.row(x).iter().map(|&p| s * p.ln()).collect())
        .collect();
    let kkt_band = KKT_REL_TOL.ln_1p();
    let mut ln_q: Vec<f64> = start.iter().map(|&p| p.ln()).collect();
    let norm = crate::logdomain::log_sum_exp(&ln_q);
    ln_q.iter_mut().for_each(|l| *l -= norm);
    let mut cur = evaluate_iterate(&ln_a, rho, &ln_q);
    let mut prev = f64::NEG_INFINITY;
    let mut hold_until = 0usize;
    let mut hold_len = 32usize;
    let mut enum_spent = false;
    for iter in 0..MAX_ITERATIONS {
        let e0 = -cur.ln_g;
        if iter > 0 && (e0 - prev).abs() < E0_VALUE_TOL {
            let kkt_ok = (0..nx)
                .filter(|&x| cur.q[x] > ACTIVE_MASS_EPS)
                .all(|x| cur.ln_d[x] <= cur.ln_d_min + kkt_band);
            if kkt_ok {
                let total: f64 = cur.q.iter().sum();
                let q: Vec<f64> = cur.q.iter().map(|&v| v / total).collect();
                return Ok((e0, q));
            }
        }
        prev = e0;
        let consider = |best: &mut Option<(Iterate, Vec<f64>)>, ev: Iterate, cand: Vec<f64>| {
            let bar = best.as_ref().map_or(cur.ln_g, |(b, _)| b.ln_g);
            if ev.ln_g < bar {
                *best = Some((ev, cand));
            }
        };
        let mut tilt: Option<(Iterate, Vec<f64>)> = None;
        {
            let cand = tilt_step(&ln_q, &cur, rho, 1.0);
            let ev = evaluate_iterate(&ln_a, rho, &cand);
            consider(&mut tilt, ev, cand);
        }
        let stalled = tilt
            .as_ref()
            .map_or(true, |(b, _)| cur.ln_g - b.ln_g <= 1e-10);
        let mut support: Option<(Iterate, Vec<f64>)> = None;
        if (stalled || iter % 32 == 31) && iter >= hold_until {
            let mut raw: Vec<Vec<f64>> = Vec::new();
            if cur.ln_d_min > f64::NEG_INFINITY {
                raw.extend(prune_candidates(&ln_q, &cur));
            }
            raw.extend(resurrect_candidates(&ln_q, &cur));
            for cand in raw {
                let (ev, polished) = polish(&ln_a, rho, cand, 48);
                consider(&mut support, ev, polished);
            }
            if support.is_none()
                && stalled
                && !enum_spent
                && (hold_len >= 2048 || iter >= 20_000)
            {
                enum_spent = true;
                if let Some((ev, cand)) = best_face_by_enumeration(&ln_a, rho, nx) {
                    consider(&mut support, ev, cand);
                }
            }
            if support.is_some() {
                hold_len = 32;
            } else {
                hold_until = iter + hold_len;
                hold_len = (hold_len * 2).min(8192);
            }
        }
        if support.is_none() && (stalled || iter % 32 == 31) {
            // Escalating tilts: the plain step crawls at gap/rho ln-units per
            // iteration, so a far corner start cannot cross the simplex
            // within the iteration budget. Geometric betas propose moves up
            // to a span that covers the whole simplex; strict descent
            // rejects the overshoots.
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for x in 0..nx {
                if ln_q[x] > f64::NEG_INFINITY {
                    lo = lo.min(cur.ln_d[x]);
                    hi = hi.max(cur.ln_d[x]);
                }
            }
            let active_gap = (hi - lo).max(0.0);
            let mut beta = 4.0;
            loop {
                let cand = tilt_step(&ln_q, &cur, rho, beta);
                let ev = evaluate_iterate(&ln_a, rho, &cand);
                consider(&mut tilt, ev, cand);
                if beta * active_gap / rho > SPAN_CAP || beta > BETA_CAP {
                    break;
                }
                beta *= 4.0;
            }
        }
        if let Some((ev, cand)) = support.or(tilt) {
            ln_q = cand;
            cur = ev;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        context: format!("channel-function maximization at rho {rho}"),
    })
}

/// Channel capacity in nats via the classic alternating iteration, certified
/// by the max-divergence upper bound.
pub fn capacity(w: &ChannelSpec) -> Result<f64> {
    let nx = w.num_inputs();
    let ny = w.num_outputs();
    let mut q = vec![1.0 / nx as f64; nx];
    let mut alpha = vec![0.0; ny];
    let mut dkl = vec![0.0; nx];
    for _ in 0..MAX_ITERATIONS {
        alpha.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            for y in 0..ny {
                alpha[y] += q[x] * w.row(x)[y];
            }
        }
        for x in 0..nx {
            dkl[x] = w.row(x)
                .iter()
                .zip(&alpha)
                .filter(|(&wy, _)| wy > 0.0)
                .map(|(&wy, &al)| wy * (wy / al).ln())
                .sum();
        }
        let upper = dkl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = q.iter().zip(&dkl).map(|(&qx, &d)| qx * d.exp()).collect();
        let z: f64 = weights.iter().sum();
        let lower = z.ln();
        if upper - lower < CAPACITY_TOL {
            return Ok((0.5 * (upper + lower)).max(0.0));
        }
        q = weights.iter().map(|&v| v / z).collect();
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        context: "capacity iteration".into(),
    })
}

/// A point query against the hull: value and the supporting vertex pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPoint {
    pub value: f64,
    /// Weight on the left supporting vertex; rho = lambda rho1 + (1-lambda) rho2.
    pub lambda: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub left: usize,
    pub right: usize,
}

/// Upper concave envelope of solved channel-function samples.
#[derive(Debug, Clone)]
pub struct HullCurve {
    vertices: Vec<E0Sample>,
}

impl HullCurve {
    /// Builds the envelope; samples must be sorted by rho.
    fn from_samples(samples: &[E0Sample]) -> Self {
        let mut vertices: Vec<E0Sample> = Vec::new();
        for p in samples {
            if let Some(last) = vertices.last() {
                if p.rho - last.rho < 1e-15 {
                    continue;
                }
            }
            while vertices.len() >= 2 {
                let a = &vertices[vertices.len() - 2];
                let b = &vertices[vertices.len() - 1];
                // Drop b unless it rises strictly above chord a->p.
                let keep = (b.value - a.value) * (p.rho - b.rho)
                    > (p.value - b.value) * (b.rho - a.rho);
                if keep {
                    break;
                }
                vertices.pop();
            }
            vertices.push(p.clone());
        }
        // A trailing non-vertex can survive the scan; sweep once from the right.
        while vertices.len() >= 3 {
            let n = vertices.len();
            let (a, b, c) = (&vertices[n - 3], &vertices[n - 2], &vertices[n - 1]);
            let keep = (b.value - a.value) * (c.rho - b.rho)
                > (c.value - b.value) * (b.rho - a.rho);
            if keep {
                break;
            }
            vertices.remove(n - 2);
        }
        HullCurve { vertices }
    }

    pub fn vertices(&self) -> &[E0Sample] {
        &self.vertices
    }

    pub fn min_rho(&self) -> f64 {
        self.vertices[0].rho
    }

    pub fn max_rho(&self) -> f64 {
        self.vertices[self.vertices.len() - 1].rho
    }

    /// Hull value and supporting pair at `rho` (clamped to the covered range).
    pub fn evaluate(&self, rho: f64) -> HullPoint {
        let rho = rho.clamp(self.min_rho(), self.max_rho());
        let idx = self
            .vertices
            .partition_point(|v| v.rho <= rho)
            .saturating_sub(1);
        let v = &self.vertices[idx];
        if rho == v.rho || idx + 1 == self.vertices.len() {
            return HullPoint {
                value: v.value,
                lambda: 1.0,
                rho1: v.rho,
                rho2: v.rho,
                left: idx,
                right: idx,
            };
        }
        let nxt = &self.vertices[idx + 1];
        let lambda = (nxt.rho - rho) / (nxt.rho - v.rho);
        HullPoint {
            value: lambda * v.value + (1.0 - lambda) * nxt.value,
            lambda,
            rho1: v.rho,
            rho2: nxt.rho,
            left: idx,
            right: idx + 1,
        }
    }
}

/// Solved channel-function samples over a rho grid for one channel and set.
#[derive(Debug, Clone)]
pub struct E0Table {
    channel: ChannelSpec,
    set: DistributionSet,
    samples: Vec<E0Sample>,
}

impl E0Table {
    pub fn build(w: &ChannelSpec, set: &DistributionSet, grid: &RhoGrid) -> Result<Self> {
        check_set_dims(w, set)?;
        let samples: Vec<E0Sample> = grid
            .points()
            .par_iter()
            .map(|&rho| maximize_e0(rho, w, set))
            .collect::<Result<_>>()?;
        Ok(E0Table {
            channel: w.clone(),
            set: set.clone(),
            samples,
        })
    }

    pub fn samples(&self) -> &[E0Sample] {
        &self.samples
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    pub fn set(&self) -> &DistributionSet {
        &self.set
    }

    /// Fresh solve away from the stored grid.
    pub fn solve(&self, rho: f64) -> Result<E0Sample> {
        maximize_e0(rho, &self.channel, &self.set)
    }

    /// Grid locations where the achieving distribution jumps, refined by
    /// bisecting the crossing of the two adjacent branches. The sample at
    /// rho = 0 is excluded: every distribution maximizes there, so a jump
    /// away from its conventional representative is not a switch.
    pub fn switch_points(&self) -> Result<Vec<f64>> {
        let mut switches = Vec::new();
        for pair in self.samples.windows(2) {
            if pair[0].rho == 0.0 {
                continue;
            }
            let jump = pair[0]
                .q
                .probs()
                .iter()
                .zip(pair[1].q.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if jump > SUPPORT_JUMP {
                switches.push(self.refine_switch(&pair[0], &pair[1])?);
            }
        }
        Ok(switches)
    }

    fn refine_switch(&self, left: &E0Sample, right: &E0Sample) -> Result<f64> {
        let gap = |rho: f64| -> Result<f64> {
            Ok(channel_function(rho, &self.channel, &left.q)?
                - channel_function(rho, &self.channel, &right.q)?)
        };
        let (mut lo, mut hi) = (left.rho, right.rho);
        let (glo, ghi) = (gap(lo)?, gap(hi)?);
        if glo <= 0.0 || ghi >= 0.0 {
            // Branch values do not straddle; report the midpoint of the cell.
            return Ok(0.5 * (lo + hi));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if gap(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Upper concave envelope with a local resampling pass at the bridge
    /// endpoints and argmax switches.
    pub fn hull(&self) -> Result<HullCurve> {
        let coarse = HullCurve::from_samples(&self.samples);
        let mut centers: Vec<f64> = Vec::new();
        // Bridge endpoints: vertices adjacent to a segment that strictly
        // exceeds some interior sample.
        let mut below = vec![false; coarse.vertices.len()];
        for sample in &self.samples {
            let hp = coarse.evaluate(sample.rho);
            if hp.left != hp.right && hp.value > sample.value + 1e-12 {
                below[hp.left] = true;
                below[hp.right] = true;
            }
        }
        for (i, flag) in below.iter().enumerate() {
            if *flag {
                centers.push(coarse.vertices[i].rho);
            }
        }
        centers.extend(self.switch_points()?);
        if centers.is_empty() {
            return Ok(coarse);
        }
        let lo_cap = self.samples[0].rho;
        let hi_cap = self.samples[self.samples.len() - 1].rho;
        let mut extra_rhos: Vec<f64> = Vec::new();
        for c in centers {
            let steps = (2.0 * REFINE_WINDOW / REFINE_RHO_STEP).round() as usize;
            for i in 0..=steps {
                let rho = (c - REFINE_WINDOW + i as f64 * REFINE_RHO_STEP).clamp(lo_cap, hi_cap);
                extra_rhos.push(rho);
            }
        }
        extra_rhos.sort_by(f64::total_cmp);
        extra_rhos.dedup();
        let extra: Vec<E0Sample> = extra_rhos
            .par_iter()
            .map(|&rho| self.solve(rho))
            .collect::<Result<_>>()?;
        let mut merged: Vec<E0Sample> = self.samples.iter().cloned().chain(extra).collect();
        merged.sort_by(|a, b| a.rho.total_cmp(&b.rho));
        Ok(HullCurve::from_samples(&merged))
    }
}

fn check_set_dims(w: &ChannelSpec, set: &DistributionSet) -> Result<()> {
    if let DistributionSet::Explicit(members) = set {
        for q in members {
            if q.len() != w.num_inputs() {
                return Err(Error::DimensionMismatch {
                    expected: w.num_inputs(),
                    got: q.len(),
                });
            }
        }
    }
    Ok(())
}

/// Envelope of the maximized channel function over the grid, refined around
/// bridge endpoints and argmax switches.
pub fn concave_hull(w: &ChannelSpec, set: &DistributionSet, grid: &RhoGrid) -> Result<HullCurve> {
    E0Table::build(w, set, grid)?.hull()
}
