//! Finite-blocklength upper bound on the ensemble error probability for a
//! two-class threshold partition of the source block space, with
//! class-dependent codeword distributions.

use crate::error::{Error, Result};
use crate::gallager::{channel_function, ClassIndex, ClassTable, DEFAULT_RHO_STEP};
use crate::logdomain::{log_sum_exp, LogValue};
use crate::prob::{ChannelSpec, InputDistribution, SourceSpec};
use crate::search::{argmax, bracket_around, golden_max};

/// Final bracket width of the per-class rho refinement.
const RHO_TOL: f64 = 1e-7;

/// Threshold partition of length-k source blocks: blocks with probability
/// below gamma^k form class one and draw codewords from q1, the rest form
/// class two and draw from q2.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    k: usize,
    gamma: f64,
    q1: InputDistribution,
    q2: InputDistribution,
}

impl PartitionSpec {
    pub fn new(k: usize, gamma: f64, q1: InputDistribution, q2: InputDistribution) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("blocklength k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        if q1.len() != q2.len() {
            return Err(Error::DimensionMismatch {
                expected: q1.len(),
                got: q2.len(),
            });
        }
        Ok(PartitionSpec { k, gamma, q1, q2 })
    }

    /// Single-class partition: every block in class two under one distribution.
    pub fn single_class(k: usize, q: InputDistribution) -> Result<Self> {
        PartitionSpec::new(k, 0.0, q.clone(), q)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn q(&self, class: ClassIndex) -> &InputDistribution {
        match class {
            ClassIndex::One => &self.q1,
            ClassIndex::Two => &self.q2,
        }
    }
}

/// One class's contribution to the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTerm {
    pub class: ClassIndex,
    pub rho_star: f64,
    /// max over rho of n E0(rho, W, Qi) - Es_i(rho, P^k), in nats per block.
    pub exponent: f64,
    /// ln of the class probability mass.
    pub ln_mass: f64,
}

/// Evaluated bound for one (k, n) point.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBound {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    /// ln of the raw bound; the canonical output, safe far below underflow.
    pub log_total: f64,
    /// (3 N - 1) / 2 where N counts the non-empty classes.
    pub prefactor: f64,
    pub nonempty_classes: usize,
    pub declared_classes: usize,
    pub terms: Vec<ClassTerm>,
}

impl FiniteBound {
    /// Raw bound value; can overflow to inf for loose small-n bounds.
    pub fn raw_total(&self) -> f64 {
        self.log_total.exp()
    }

    /// Bound clamped into [0, 1] for display; probabilities cannot exceed 1.
    pub fn display_total(&self) -> f64 {
        self.raw_total().min(1.0)
    }
}

/// Upper bound on the ensemble-average error probability at channel
/// blocklength n: prefactor times the sum over non-empty classes of
/// exp(-max_rho {n E0(rho, W, Qi) - Es_i(rho, P^k)}).
pub fn random_coding_bound(
    source: &SourceSpec,
    w: &ChannelSpec,
    partition: &PartitionSpec,
    n: usize,
) -> Result<FiniteBound> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength n must be positive".into()));
    }
    let table = ClassTable::build(source, partition.k, partition.gamma)?;
    let mut terms = Vec::new();
    for class in [ClassIndex::One, ClassIndex::Two] {
        if table.is_empty(class) {
            continue;
        }
        let q = partition.q(class);
        let objective = |rho: f64| -> Result<f64> {
            Ok(n as f64 * channel_function(rho, w, q)? - table.value(rho, class))
        };
        // E0 concave and the class source function convex in rho, so the
        // objective is concave; the grid pass just seeds the bracket.
        let grid: Vec<f64> = {
            let steps = (1.0 / DEFAULT_RHO_STEP).round() as usize;
            (0..=steps).map(|i| (i as f64 * DEFAULT_RHO_STEP).min(1.0)).collect()
        };
        let mut values = Vec::with_capacity(grid.len());
        for &rho in &grid {
            values.push(objective(rho)?);
        }
        let best = argmax(values.iter().copied());
        let (lo, hi) = bracket_around(&grid, best);
        let mut failure = None;
        let (rho_star, refined) = golden_max(
            |rho| match objective(rho) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            RHO_TOL,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let (rho_star, exponent) = if refined >= values[best] {
            (rho_star, refined)
        } else {
            (grid[best], values[best])
        };
        terms.push(ClassTerm {
            class,
            rho_star,
            exponent,
            ln_mass: table.value(0.0, class),
        });
    }
    let nonempty = terms.len();
    let prefactor = (3.0 * nonempty as f64 - 1.0) / 2.0;
    let log_sum = log_sum_exp(&terms.iter().map(|t| -t.exponent).collect::<Vec<_>>());
    Ok(FiniteBound {
        n,
        k: partition.k,
        gamma: partition.gamma,
        log_total: prefactor.ln() + log_sum,
        prefactor,
        nonempty_classes: nonempty,
        declared_classes: 2,
        terms,
    })
}

/// Exact class sizes and masses of the threshold partition, with the
/// composition-level detail used to materialize it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionClass {
    /// Letter counts of the type.
    pub counts: Vec<usize>,
    pub class: ClassIndex,
    /// Number of sequences of this type (saturating).
    pub sequences: u128,
    /// ln probability of any single sequence of this type.
    pub ln_seq_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSummary {
    pub k: usize,
    pub gamma: f64,
    /// Sequence counts per class (saturating in u128).
    pub class_sizes: [u128; 2],
    /// Class probability masses, stored log-domain.
    pub class_mass: [LogValue; 2],
    pub compositions: Vec<CompositionClass>,
}

pub fn realize_partition(source: &SourceSpec, k: usize, gamma: f64) -> Result<PartitionSummary> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let m = source.alphabet_size();
    crate::composition::check_cap(k, m)?;
    let ln_fact = crate::composition::ln_factorials(k);
    let ln_p: Vec<f64> = source.probs().iter().map(|&p| p.ln()).collect();
    let ln_thresh = crate::gallager::ln_threshold(k, gamma);
    let mut sizes = [0u128; 2];
    let mut masses = [Vec::new(), Vec::new()];
    let mut compositions = Vec::new();
    crate::composition::for_each_composition(k, m, |counts| {
        let mut ln_prob = 0.0;
        for (a, &c) in counts.iter().enumerate() {
            if c > 0 {
                ln_prob += c as f64 * ln_p[a];
            }
        }
        let class = crate::gallager::classify(ln_prob, ln_thresh);
        let idx = match class {
            ClassIndex::One => 0,
            ClassIndex::Two => 1,
        };
        let sequences = sequences_of_type(counts);
        sizes[idx] = sizes[idx].saturating_add(sequences);
        let ln_multi = crate::composition::ln_multinomial(&ln_fact, k, counts);
        masses[idx].push(ln_multi + ln_prob);
        compositions.push(CompositionClass {
            counts: counts.to_vec(),
            class,
            sequences,
            ln_seq_prob: ln_prob,
        });
    });
    Ok(PartitionSummary {
        k,
        gamma,
        class_sizes: sizes,
        class_mass: [
            LogValue::from_ln(log_sum_exp(&masses[0])),
            LogValue::from_ln(log_sum_exp(&masses[1])),
        ],
        compositions,
    })
}

/// Multinomial coefficient k! / prod counts!, saturating at u128::MAX.
fn sequences_of_type(counts: &[usize]) -> u128 {
    let mut total: u128 = 1;
    let mut placed = 0usize;
    for &c in counts {
        for i in 0..c {
            placed += 1;
            total = total.saturating_mul(placed as u128) / (i as u128 + 1);
        }
    }
    total
}
