//! Exact and simulated error probabilities of the random-code ensemble that
//! the finite-length bound describes: codewords drawn independently, each
//! message's distribution chosen by its partition class, maximum a posteriori
//! decoding with ties counted as errors.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finite_length::PartitionSpec;
use crate::gallager::{classify, ln_threshold, ClassIndex};
use crate::prob::{ChannelSpec, SourceSpec};

/// Largest codebook enumeration, counted in codebooks.
pub const ENUMERATION_CAP: u128 = 1 << 24;

/// Largest message set either estimator will materialize.
const MESSAGE_CAP: u128 = 1 << 22;

/// Two-sided 95% normal quantile for the Wilson interval.
const WILSON_Z: f64 = 1.959963984540054;

/// Slack when comparing log-domain scores; scores that tie mathematically
/// must compare as ties despite rounding.
const LOG_TIE_EPS: f64 = 1e-9;

/// Decoder convention: a competitor score equal to the true message's score
/// counts as a decoding error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    TiesAsErrors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub estimate: f64,
    /// Wilson 95% half-width; zero for exact evaluations.
    pub half_width: f64,
    pub trials: u64,
    pub exact: bool,
    pub tie_policy: TiePolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactEnsemble {
    pub average: ErrorEstimate,
    /// Smallest error probability among codebooks of positive probability.
    pub best_codebook_error: f64,
}

/// Least-squares fit of -ln(estimate) against blocklength.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

struct MessageSet {
    count: usize,
    /// Probability of each length-k block, multiplied in position order.
    probs: Vec<f64>,
    class: Vec<ClassIndex>,
}

fn pow_saturating(mut base: u128, mut exp: u128) -> u128 {
    let mut acc: u128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc.saturating_mul(base);
        }
        exp >>= 1;
        if exp > 0 {
            base = base.saturating_mul(base);
        }
    }
    acc
}

/// Enumerates V^k blocks in lexicographic order, the first position most
/// significant. Class membership reuses the bound's classification rule.
fn enumerate_messages(source: &SourceSpec, partition: &PartitionSpec) -> Result<MessageSet> {
    let v = source.alphabet_size();
    let k = partition.k();
    let count = pow_saturating(v as u128, k as u128);
    if count > MESSAGE_CAP {
        return Err(Error::EnumerationCapExceeded {
            size: count,
            cap: MESSAGE_CAP,
        });
    }
    let count = count as usize;
    let p = source.probs();
    let ln_p: Vec<f64> = p.iter().map(|&x| x.ln()).collect();
    let ln_thresh = ln_threshold(k, partition.gamma());
    let mut probs = Vec::with_capacity(count);
    let mut class = Vec::with_capacity(count);
    let mut digits = vec![0usize; k];
    let mut counts = vec![0usize; v];
    loop {
        let mut pr = 1.0;
        for &a in &digits {
            pr *= p[a];
        }
        probs.push(pr);
        counts.iter_mut().for_each(|c| *c = 0);
        for &a in &digits {
            counts[a] += 1;
        }
        let mut ln_prob = 0.0;
        for (a, &c) in counts.iter().enumerate() {
            if c > 0 {
                ln_prob += c as f64 * ln_p[a];
            }
        }
        class.push(classify(ln_prob, ln_thresh));
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(MessageSet { count, probs, class });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < v {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn validate_partition_channel(partition: &PartitionSpec, w: &ChannelSpec) -> Result<()> {
    if partition.q(ClassIndex::One).len() != w.num_inputs() {
        return Err(Error::DimensionMismatch {
            expected: w.num_inputs(),
            got: partition.q(ClassIndex::One).len(),
        });
    }
    Ok(())
}

/// Enumerates A^n tuples in lexicographic order, last position fastest.
fn tuples(alphabet: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        out.push(cur.clone());
        let mut pos = n;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < alphabet {
                break;
            }
            cur[pos] = 0;
        }
    }
}

/// Averages the exact ties-as-errors decoding error over every codebook, and
/// tracks the best codebook, by literal enumeration. Scores compare in log
/// domain within [`LOG_TIE_EPS`], matching both samplers.
pub fn exact_ensemble_error(
    source: &SourceSpec,
    w: &ChannelSpec,
    partition: &PartitionSpec,
    n: usize,
) -> Result<ExactEnsemble> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength n must be positive".into()));
    }
    validate_partition_channel(partition, w)?;
    let msgs = enumerate_messages(source, partition)?;
    let m = msgs.count;
    let x = w.num_inputs();
    let total = pow_saturating(x as u128, n as u128 * m as u128);
    if total > ENUMERATION_CAP {
        return Err(Error::EnumerationCapExceeded {
            size: total,
            cap: ENUMERATION_CAP,
        });
    }
    let words = tuples(x, n);
    let outs = tuples(w.num_outputs(), n);
    // W^n(y|x) folded in position order; shared by every score below.
    let cprob: Vec<Vec<f64>> = words
        .iter()
        .map(|word| {
            outs.iter()
                .map(|out| {
                    let mut pr = 1.0;
                    for j in 0..n {
                        pr *= w.row(word[j])[out[j]];
                    }
                    pr
                })
                .collect()
        })
        .collect();
    // Scores compare in log domain within LOG_TIE_EPS, like the samplers, so
    // mathematically tied products count as ties regardless of rounding.
    let ln_cprob: Vec<Vec<f64>> = cprob
        .iter()
        .map(|row| row.iter().map(|&v| v.ln()).collect())
        .collect();
    let ln_msg: Vec<f64> = msgs.probs.iter().map(|&v| v.ln()).collect();
    // Per-class codeword probabilities, folded in position order.
    let qprob: [Vec<f64>; 2] = [ClassIndex::One, ClassIndex::Two].map(|c| {
        let q = partition.q(c).probs();
        words
            .iter()
            .map(|word| {
                let mut pr = 1.0;
                for &letter in word {
                    pr *= q[letter];
                }
                pr
            })
            .collect()
    });
    let class_of: Vec<usize> = msgs
        .class
        .iter()
        .map(|&c| match c {
            ClassIndex::One => 0,
            ClassIndex::Two => 1,
        })
        .collect();
    let mut avg = 0.0;
    let mut best = f64::INFINITY;
    let mut cb = vec![0usize; m];
    let word_count = words.len();
    loop {
        let mut pcb = 1.0;
        for i in 0..m {
            pcb *= qprob[class_of[i]][cb[i]];
        }
        if pcb != 0.0 {
            let mut err = 0.0;
            for i in 0..m {
                if msgs.probs[i] == 0.0 {
                    continue;
                }
                let row = &cprob[cb[i]];
                let ln_row = &ln_cprob[cb[i]];
                for yi in 0..outs.len() {
                    let py = row[yi];
                    if py == 0.0 {
                        continue;
                    }
                    let ln_si = ln_msg[i] + ln_row[yi];
                    let mut lose = false;
                    for j in 0..m {
                        if j == i {
                            continue;
                        }
                        let ln_sj = ln_msg[j] + ln_cprob[cb[j]][yi];
                        if ln_sj >= ln_si - LOG_TIE_EPS {
                            lose = true;
                            break;
                        }
                    }
                    if lose {
                        err += msgs.probs[i] * py;
                    }
                }
            }
            avg += pcb * err;
            if err < best {
                best = err;
            }
        }
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(ExactEnsemble {
                    average: ErrorEstimate {
                        estimate: avg,
                        half_width: 0.0,
                        trials: 0,
                        exact: true,
                        tie_policy: TiePolicy::TiesAsErrors,
                    },
                    best_codebook_error: best,
                });
            }
            pos -= 1;
            cb[pos] += 1;
            if cb[pos] < word_count {
                break;
            }
            cb[pos] = 0;
        }
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(trial);
    rng
}

fn draw_letter(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (idx, &pr) in probs.iter().enumerate() {
        acc += pr;
        if u < acc {
            return idx;
        }
    }
    probs.len() - 1
}

fn wilson_half_width(errors: u64, trials: u64) -> f64 {
    let nt = trials as f64;
    let phat = errors as f64 / nt;
    let z2 = WILSON_Z * WILSON_Z;
    (WILSON_Z / (1.0 + z2 / nt)) * (phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)).sqrt()
}

/// Term count * ln_p that stays zero when the count is zero, so impossible
/// letters never poison a score with 0 * -inf.
fn count_term(count: u32, ln_p: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * ln_p
    }
}

struct BitpackedParams {
    k: usize,
    n: usize,
    p_one: f64,
    crossover: f64,
    /// Log probability of a block with the given count of ones.
    msg_part: Vec<f64>,
    /// Log channel factor at the given Hamming distance.
    chan_part: Vec<f64>,
}

/// The packed simulator applies when everything is binary, the channel is
/// symmetric, and every non-empty class draws codewords uniformly; then a
/// competitor's distance to the received word is a plain popcount of fresh
/// uniform bits.
fn bitpacked_params(
    source: &SourceSpec,
    w: &ChannelSpec,
    partition: &PartitionSpec,
    msgs: &MessageSet,
    n: usize,
) -> Option<BitpackedParams> {
    if source.alphabet_size() != 2 || w.num_inputs() != 2 || w.num_outputs() != 2 {
        return None;
    }
    if n > 64 {
        return None;
    }
    if w.row(0)[0] != w.row(1)[1] || w.row(0)[1] != w.row(1)[0] {
        return None;
    }
    for class in [ClassIndex::One, ClassIndex::Two] {
        let used = msgs.class.iter().any(|&c| c == class);
        if used && partition.q(class).probs() != [0.5, 0.5] {
            return None;
        }
    }
    let k = partition.k();
    let p = source.probs();
    let (ln_p0, ln_p1) = (p[0].ln(), p[1].ln());
    let (ln_w00, ln_w01) = (w.row(0)[0].ln(), w.row(0)[1].ln());
    let msg_part = (0..=k as u32)
        .map(|b| count_term(b, ln_p1) + count_term(k as u32 - b, ln_p0))
        .collect();
    let chan_part = (0..=n as u32)
        .map(|d| count_term(d, ln_w01) + count_term(n as u32 - d, ln_w00))
        .collect();
    Some(BitpackedParams {
        k,
        n,
        p_one: p[1],
        crossover: w.row(0)[1],
        msg_part,
        chan_part,
    })
}

fn bitpacked_trial(params: &BitpackedParams, seed: u64, trial: u64) -> bool {
    let mut rng = trial_rng(seed, trial);
    let k = params.k;
    let n = params.n;
    let mut ones = 0u32;
    let mut sent = 0usize;
    for _ in 0..k {
        let bit = rng.random::<f64>() < params.p_one;
        sent = (sent << 1) | bit as usize;
        ones += bit as u32;
    }
    let mut dist = 0u32;
    for _ in 0..n {
        dist += (rng.random::<f64>() < params.crossover) as u32;
    }
    let threshold = params.msg_part[ones as usize] + params.chan_part[dist as usize] - LOG_TIE_EPS;
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let per_word = 64 / n;
    let mut buf = 0u64;
    let mut left = 0usize;
    for cand in 0..(1usize << k) {
        if cand == sent {
            continue;
        }
        if left == 0 {
            buf = rng.random::<u64>();
            left = per_word;
        }
        let d = (buf & mask).count_ones();
        buf >>= n;
        left -= 1;
        let score = params.msg_part[cand.count_ones() as usize] + params.chan_part[d as usize];
        if score >= threshold {
            return true;
        }
    }
    false
}

struct GenericParams<'a> {
    msgs: &'a MessageSet,
    source: &'a SourceSpec,
    w: &'a ChannelSpec,
    partition: &'a PartitionSpec,
    n: usize,
    /// ln W(y|x), indexed [x][y]; scores add these so ties compare within
    /// LOG_TIE_EPS like everywhere else.
    ln_w: Vec<Vec<f64>>,
    ln_msg: Vec<f64>,
}

impl<'a> GenericParams<'a> {
    fn new(
        msgs: &'a MessageSet,
        source: &'a SourceSpec,
        w: &'a ChannelSpec,
        partition: &'a PartitionSpec,
        n: usize,
    ) -> Self {
        GenericParams {
            msgs,
            source,
            w,
            partition,
            n,
            ln_w: w
                .rows()
                .iter()
                .map(|row| row.iter().map(|&v| v.ln()).collect())
                .collect(),
            ln_msg: msgs.probs.iter().map(|&v| v.ln()).collect(),
        }
    }
}

fn generic_trial(params: &GenericParams, seed: u64, trial: u64) -> bool {
    let mut rng = trial_rng(seed, trial);
    let m = params.msgs.count;
    let n = params.n;
    let k = params.partition.k();
    let v = params.source.alphabet_size();
    let mut codebook = vec![0usize; m * n];
    for i in 0..m {
        let q = params.partition.q(params.msgs.class[i]).probs();
        for j in 0..n {
            codebook[i * n + j] = draw_letter(&mut rng, q);
        }
    }
    let mut sent = 0usize;
    for _ in 0..k {
        sent = sent * v + draw_letter(&mut rng, params.source.probs());
    }
    let mut received = vec![0usize; n];
    for j in 0..n {
        received[j] = draw_letter(&mut rng, params.w.row(codebook[sent * n + j]));
    }
    let mut ln_py = 0.0;
    for j in 0..n {
        ln_py += params.ln_w[codebook[sent * n + j]][received[j]];
    }
    let threshold = params.ln_msg[sent] + ln_py - LOG_TIE_EPS;
    for i in 0..m {
        if i == sent {
            continue;
        }
        let mut ln_pc = 0.0;
        for j in 0..n {
            ln_pc += params.ln_w[codebook[i * n + j]][received[j]];
        }
        if params.ln_msg[i] + ln_pc >= threshold {
            return true;
        }
    }
    false
}

/// Simulates the ensemble: each trial draws a fresh codebook, a source block,
/// and a channel output, then decodes. Deterministic for a given seed; trial
/// indices key independent generator streams, so the count is independent of
/// thread scheduling.
pub fn monte_carlo_error(
    source: &SourceSpec,
    w: &ChannelSpec,
    partition: &PartitionSpec,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength n must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trial count must be positive".into()));
    }
    validate_partition_channel(partition, w)?;
    let msgs = enumerate_messages(source, partition)?;
    let errors: u64 = if let Some(params) = bitpacked_params(source, w, partition, &msgs, n) {
        (0..trials)
            .into_par_iter()
            .map(|t| bitpacked_trial(&params, seed, t) as u64)
            .sum()
    } else {
        let params = GenericParams::new(&msgs, source, w, partition, n);
        (0..trials)
            .into_par_iter()
            .map(|t| generic_trial(&params, seed, t) as u64)
            .sum()
    };
    Ok(ErrorEstimate {
        estimate: errors as f64 / trials as f64,
        half_width: wilson_half_width(errors, trials),
        trials,
        exact: false,
        tie_policy: TiePolicy::TiesAsErrors,
    })
}

/// Fits -ln(estimate) against n by least squares. The slope estimates the
/// achieved error exponent; stderr is the usual regression standard error.
pub fn empirical_exponent(points: &[(usize, ErrorEstimate)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateSeries {
            reason: format!("need at least 3 blocklengths, got {}", points.len()),
        });
    }
    for (n, est) in points {
        if !(est.estimate > 0.0) {
            return Err(Error::DegenerateSeries {
                reason: format!("estimate at n = {n} is not positive"),
            });
        }
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| -e.estimate.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let ss_xx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if ss_xx == 0.0 {
        return Err(Error::DegenerateSeries {
            reason: "all blocklengths are equal".into(),
        });
    }
    let ss_xy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = ss_xy / ss_xx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (ss_res.max(0.0) / (m - 2.0) / ss_xx).sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
    })
}
