//! Probability primitives: validated source, channel and input distributions.

use crate::error::{Error, Result};

/// Accepted deviation of raw entries from a unit sum before normalization.
pub const SUM_TOLERANCE: f64 = 1e-6;

fn validate_probs(raw: &[f64]) -> Result<Vec<f64>> {
    for (index, &value) in raw.iter().enumerate() {
        if value < 0.0 || value.is_nan() {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::NotNormalizable { sum });
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::SumOutOfTolerance {
            sum,
            tolerance: SUM_TOLERANCE,
        });
    }
    Ok(raw.iter().map(|&p| p / sum).collect())
}

fn entropy_nats(probs: &[f64]) -> f64 {
    // 0 * ln 0 = 0 by continuity.
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Memoryless source distribution over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    probs: Vec<f64>,
}

impl SourceSpec {
    /// Validates and normalizes raw probabilities.
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::AlphabetTooSmall {
                min: 2,
                got: raw.len(),
            });
        }
        Ok(SourceSpec {
            probs: validate_probs(raw)?,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    /// Number of letters with strictly positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Entropy in nats per source symbol.
    pub fn entropy(&self) -> f64 {
        entropy_nats(&self.probs)
    }
}

/// Distribution on channel inputs used to draw random codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::AlphabetTooSmall { min: 1, got: 0 });
        }
        Ok(InputDistribution {
            probs: validate_probs(raw)?,
        })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        InputDistribution {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Discrete memoryless channel as a row-stochastic matrix.
///
/// Row x holds the output law W(. | x); rows are normalized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    rows: Vec<Vec<f64>>,
    num_outputs: usize,
}

impl ChannelSpec {
    pub fn new(raw_rows: &[Vec<f64>]) -> Result<Self> {
        if raw_rows.is_empty() {
            return Err(Error::AlphabetTooSmall { min: 1, got: 0 });
        }
        let num_outputs = raw_rows[0].len();
        if num_outputs == 0 {
            return Err(Error::AlphabetTooSmall { min: 1, got: 0 });
        }
        let mut rows = Vec::with_capacity(raw_rows.len());
        for (row, raw) in raw_rows.iter().enumerate() {
            if raw.len() != num_outputs {
                return Err(Error::DimensionMismatch {
                    expected: num_outputs,
                    got: raw.len(),
                });
            }
            let normalized = validate_probs(raw).map_err(|source| Error::ChannelRow {
                row,
                source: Box::new(source),
            })?;
            rows.push(normalized);
        }
        Ok(ChannelSpec { rows, num_outputs })
    }

    /// Binary symmetric channel with crossover probability `delta`.
    pub fn bsc(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "BSC crossover must lie in [0, 1], got {delta}"
            )));
        }
        ChannelSpec::new(&[vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
    }

    /// Six-input four-output composite: a symmetric quaternary channel
    /// (crossover `xi1`) stacked on a binary-input channel whose two inputs
    /// map onto output pairs {1,2} and {3,4} (crossover `xi2`).
    pub fn example_6x4(xi1: f64, xi2: f64) -> Result<Self> {
        if !(0.0..=1.0 / 3.0).contains(&xi1) {
            return Err(Error::InvalidParameter(format!(
                "xi1 must lie in [0, 1/3], got {xi1}"
            )));
        }
        if !(0.0..=0.5).contains(&xi2) {
            return Err(Error::InvalidParameter(format!(
                "xi2 must lie in [0, 1/2], got {xi2}"
            )));
        }
        let d = 1.0 - 3.0 * xi1;
        let h = 0.5 - xi2;
        ChannelSpec::new(&[
            vec![d, xi1, xi1, xi1],
            vec![xi1, d, xi1, xi1],
            vec![xi1, xi1, d, xi1],
            vec![xi1, xi1, xi1, d],
            vec![h, h, xi2, xi2],
            vec![xi2, xi2, h, h],
        ])
    }

    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Mutual information I(Q; W) in nats per channel use.
    pub fn mutual_information(&self, q: &InputDistribution) -> Result<f64> {
        if q.len() != self.num_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_inputs(),
                got: q.len(),
            });
        }
        let mut marginal = vec![0.0; self.num_outputs];
        for (x, row) in self.rows.iter().enumerate() {
            let qx = q.probs()[x];
            for (y, &w) in row.iter().enumerate() {
                marginal[y] += qx * w;
            }
        }
        let mut info = 0.0;
        for (x, row) in self.rows.iter().enumerate() {
            let qx = q.probs()[x];
            if qx == 0.0 {
                continue;
            }
            for (y, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    info += qx * w * (w / marginal[y]).ln();
                }
            }
        }
        Ok(info.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nats_to_bits;
    use proptest::prelude::*;

    #[test]
    fn negative_entry_rejected() {
        assert!(matches!(
            SourceSpec::new(&[0.5, -0.1, 0.6]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
    }

    #[test]
    fn all_zero_rejected() {
        assert!(matches!(
            SourceSpec::new(&[0.0, 0.0]),
            Err(Error::NotNormalizable { .. })
        ));
    }

    #[test]
    fn off_sum_rejected() {
        assert!(matches!(
            SourceSpec::new(&[0.6, 0.5]),
            Err(Error::SumOutOfTolerance { .. })
        ));
    }

    #[test]
    fn tiny_alphabet_rejected() {
        assert!(matches!(
            SourceSpec::new(&[1.0]),
            Err(Error::AlphabetTooSmall { .. })
        ));
    }

    #[test]
    fn near_unit_sum_normalizes_exactly() {
        let s = SourceSpec::new(&[0.5000004, 0.5000003]).unwrap();
        let sum: f64 = s.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_deterministic_source_is_zero() {
        let s = SourceSpec::new(&[1.0, 0.0]).unwrap();
        assert_eq!(s.entropy(), 0.0);
        assert_eq!(s.support_size(), 1);
    }

    #[test]
    fn entropy_of_reference_source() {
        // Known value for the p = [0.972, 0.028] source: 0.1843 bits.
        let s = SourceSpec::new(&[0.972, 0.028]).unwrap();
        assert!((nats_to_bits(s.entropy()) - 0.1843).abs() < 5e-5);
    }

    #[test]
    fn channel_rows_validated_with_row_context() {
        let bad = ChannelSpec::new(&[vec![0.5, 0.5], vec![0.4, 0.5]]);
        match bad {
            Err(Error::ChannelRow { row: 1, source }) => {
                assert!(matches!(*source, Error::SumOutOfTolerance { .. }));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_channel_rejected() {
        assert!(matches!(
            ChannelSpec::new(&[vec![0.5, 0.5], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mutual_information_dimension_checked() {
        let w = ChannelSpec::bsc(0.1).unwrap();
        let q = InputDistribution::new(&[0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            w.mutual_information(&q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mutual_information_of_bsc_matches_closed_form() {
        // I(uniform; BSC(d)) = ln 2 - H2(d).
        let d: f64 = 0.1;
        let w = ChannelSpec::bsc(d).unwrap();
        let q = InputDistribution::uniform(2);
        let h2 = -d * d.ln() - (1.0 - d) * (1.0 - d).ln();
        let expected = std::f64::consts::LN_2 - h2;
        assert!((w.mutual_information(&q).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn useless_channel_has_zero_information() {
        let w = ChannelSpec::new(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let q = InputDistribution::new(&[0.6, 0.4]).unwrap();
        assert_eq!(w.mutual_information(&q).unwrap(), 0.0);
    }

    #[test]
    fn example_6x4_rows_match_construction() {
        let w = ChannelSpec::example_6x4(0.065, 0.01).unwrap();
        assert_eq!(w.num_inputs(), 6);
        assert_eq!(w.num_outputs(), 4);
        assert!((w.row(0)[0] - 0.805).abs() < 1e-15);
        assert!((w.row(3)[3] - 0.805).abs() < 1e-15);
        assert!((w.row(4)[0] - 0.49).abs() < 1e-15);
        assert!((w.row(4)[2] - 0.01).abs() < 1e-15);
        assert!((w.row(5)[3] - 0.49).abs() < 1e-15);
    }

    #[test]
    fn example_6x4_rejects_out_of_range_parameters() {
        assert!(ChannelSpec::example_6x4(0.34, 0.01).is_err());
        assert!(ChannelSpec::example_6x4(0.065, 0.51).is_err());
        assert!(ChannelSpec::example_6x4(-0.001, 0.01).is_err());
    }

    fn arbitrary_probs(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1e-6f64..1.0, len).prop_map(|raw| {
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|&x| x / sum).collect()
        })
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_log_alphabet(raw in (2usize..8).prop_flat_map(arbitrary_probs)) {
            let s = SourceSpec::new(&raw).unwrap();
            let h = s.entropy();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (s.alphabet_size() as f64).ln() + 1e-12);
        }

        #[test]
        fn mutual_information_within_bounds(
            rows in (2usize..5, 2usize..5).prop_flat_map(|(nx, ny)| {
                proptest::collection::vec(arbitrary_probs(ny), nx)
            }),
            qraw in (2usize..5).prop_flat_map(arbitrary_probs),
        ) {
            let w = ChannelSpec::new(&rows).unwrap();
            if qraw.len() == w.num_inputs() {
                let q = InputDistribution::new(&qraw).unwrap();
                let i = w.mutual_information(&q).unwrap();
                let cap = (w.num_inputs() as f64).ln().min((w.num_outputs() as f64).ln());
                prop_assert!(i >= 0.0);
                prop_assert!(i <= cap + 1e-12);
            }
        }
    }
}
