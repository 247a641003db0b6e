//! Hand-crafted per-address features: the non-embedding baseline.
//!
//! Eight statistics per address, computed over every raw record the address
//! participates in (either side): four temporal (max/min interval between
//! consecutive transactions, total time span, trading frequency) and four
//! monetary (max/min/total/mean amount).

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::txgraph::TxRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Time,
    Amount,
    #[default]
    Both,
}

impl FeatureMode {
    pub fn dimension(&self) -> usize {
        match self {
            FeatureMode::Time | FeatureMode::Amount => 4,
            FeatureMode::Both => 8,
        }
    }

    pub fn column_names(&self) -> Vec<&'static str> {
        let time = ["max_interval", "min_interval", "total_time_span", "trading_frequency"];
        let amount = ["max_amount", "min_amount", "total_amount", "mean_amount"];
        match self {
            FeatureMode::Time => time.to_vec(),
            FeatureMode::Amount => amount.to_vec(),
            FeatureMode::Both => time.iter().chain(amount.iter()).copied().collect(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureMode::Time => "time",
            FeatureMode::Amount => "amount",
            FeatureMode::Both => "both",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<FeatureMode> {
        match s {
            "time" => Ok(FeatureMode::Time),
            "amount" => Ok(FeatureMode::Amount),
            "both" => Ok(FeatureMode::Both),
            other => Err(Error::InvalidConfig(format!("unknown feature mode `{other}`"))),
        }
    }
}

/// `time`: [max_interval, min_interval, total_time_span, trading_frequency];
/// `amount`: [max_amount, min_amount, total_amount, mean_amount].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AddressFeatures {
    pub time: [f64; 4],
    pub amount: [f64; 4],
}

impl AddressFeatures {
    pub fn vector(&self, mode: FeatureMode) -> Vec<f64> {
        match mode {
            FeatureMode::Time => self.time.to_vec(),
            FeatureMode::Amount => self.amount.to_vec(),
            FeatureMode::Both => self.time.iter().chain(self.amount.iter()).copied().collect(),
        }
    }
}

/// Features over all records where `address` is sender or receiver.
///
/// Records are put in a canonical order (timestamp, then the full record as
/// a tie-break) before the pass, so shuffled input gives bitwise-identical
/// output. Conventions for degenerate cases: a single transaction has no
/// intervals (0) and zero span; the frequency denominator is floored at one
/// second, so span 0 gives frequency = count.
pub fn extract_features(records: &[TxRecord], address: &str) -> Result<AddressFeatures> {
    let mut mine: Vec<&TxRecord> = records
        .iter()
        .filter(|r| r.from == address || r.to == address)
        .collect();
    if mine.is_empty() {
        return Err(Error::UnknownAddress(address.to_string()));
    }
    mine.sort_by(|a, b| {
        (a.timestamp, &a.from, &a.to, a.amount.to_bits()).cmp(&(
            b.timestamp,
            &b.from,
            &b.to,
            b.amount.to_bits(),
        ))
    });

    let count = mine.len() as f64;
    let mut max_interval = 0.0f64;
    let mut min_interval = 0.0f64;
    if mine.len() > 1 {
        min_interval = f64::INFINITY;
        for pair in mine.windows(2) {
            let dt = (pair[1].timestamp - pair[0].timestamp) as f64;
            max_interval = max_interval.max(dt);
            min_interval = min_interval.min(dt);
        }
    }
    let span = (mine.last().unwrap().timestamp - mine[0].timestamp) as f64;
    let frequency = count / span.max(1.0);

    let mut max_amount = f64::NEG_INFINITY;
    let mut min_amount = f64::INFINITY;
    let mut total = 0.0;
    for r in &mine {
        max_amount = max_amount.max(r.amount);
        min_amount = min_amount.min(r.amount);
        total += r.amount;
    }

    Ok(AddressFeatures {
        time: [max_interval, min_interval, span, frequency],
        amount: [max_amount, min_amount, total, total / count],
    })
}

/// Feature rows for a list of addresses, in order.
pub fn extract_matrix(
    records: &[TxRecord],
    addresses: &[String],
    mode: FeatureMode,
) -> Result<Vec<Vec<f64>>> {
    addresses
        .iter()
        .map(|a| Ok(extract_features(records, a)?.vector(mode)))
        .collect()
}

/// Per-column zero mean, unit variance (population formula). Zero-variance
/// columns map to all zeros, as does a single-row input.
pub fn standardize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((s, &v), &m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut var {
        *s /= n;
    }
    let sd: Vec<f64> = var.iter().map(|&v| v.sqrt()).collect();
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((&v, &m), &s)| if s > 0.0 { (v - m) / s } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Feature CSV: `address` plus one named column per feature.
pub fn save_features(
    addresses: &[String],
    rows: &[Vec<f64>],
    mode: FeatureMode,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "address,{}", mode.column_names().join(",")).map_err(|e| Error::io(path, e))?;
    for (a, r) in addresses.iter().zip(rows) {
        let vals: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{a},{}", vals.join(",")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(from: &str, to: &str, amount: f64, ts: u64) -> TxRecord {
        TxRecord::new(from, to, amount, ts)
    }

    #[test]
    fn hand_computed_three_transactions() {
        let records = vec![
            rec("u", "x", 1.0, 10),
            rec("y", "u", 2.0, 20),
            rec("u", "z", 3.0, 40),
        ];
        let f = extract_features(&records, "u").unwrap();
        assert_eq!(f.time, [20.0, 10.0, 30.0, 0.1]);
        assert_eq!(f.amount, [3.0, 1.0, 6.0, 2.0]);
    }

    #[test]
    fn single_transaction_conventions() {
        let records = vec![rec("u", "x", 5.0, 100)];
        let f = extract_features(&records, "u").unwrap();
        assert_eq!(f.time, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(f.amount, [5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn simultaneous_transactions() {
        let records = vec![rec("u", "x", 2.0, 50), rec("y", "u", 2.0, 50)];
        let f = extract_features(&records, "u").unwrap();
        assert_eq!(f.time, [0.0, 0.0, 0.0, 2.0]);
        assert_eq!(f.amount, [2.0, 2.0, 4.0, 2.0]);
    }

    #[test]
    fn unknown_address_rejected() {
        let records = vec![rec("a", "b", 1.0, 1)];
        assert!(matches!(
            extract_features(&records, "zzz"),
            Err(Error::UnknownAddress(_))
        ));
    }

    #[test]
    fn mode_selects_dimensions() {
        let records = vec![rec("u", "x", 1.0, 10), rec("u", "y", 2.0, 30)];
        let f = extract_features(&records, "u").unwrap();
        assert_eq!(f.vector(FeatureMode::Time).len(), 4);
        assert_eq!(f.vector(FeatureMode::Amount).len(), 4);
        let both = f.vector(FeatureMode::Both);
        assert_eq!(both.len(), 8);
        assert_eq!(&both[..4], &f.time);
        assert_eq!(&both[4..], &f.amount);
    }

    #[test]
    fn standardize_constant_column_is_zero() {
        let rows = vec![vec![7.0, 1.0], vec![7.0, 2.0], vec![7.0, 3.0]];
        let z = standardize(&rows);
        assert!(z.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn standardize_two_point_symmetry() {
        let rows = vec![vec![0.0], vec![2.0]];
        let z = standardize(&rows);
        assert_eq!(z, vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn standardize_three_point_population_formula() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let z = standardize(&rows);
        assert!((z[0][0] + 1.22474).abs() < 1e-4);
        assert!(z[1][0].abs() < 1e-12);
        assert!((z[2][0] - 1.22474).abs() < 1e-4);
    }

    #[test]
    fn feature_csv_has_named_header() {
        let records = vec![rec("u", "x", 1.0, 10), rec("u", "y", 2.0, 30)];
        let addrs = vec!["u".to_string()];
        let rows = extract_matrix(&records, &addrs, FeatureMode::Both).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_features(&addrs, &rows, FeatureMode::Both, f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "address,max_interval,min_interval,total_time_span,trading_frequency,\
             max_amount,min_amount,total_amount,mean_amount"
        );
        assert!(lines.next().unwrap().starts_with("u,"));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_records() -> impl Strategy<Value = Vec<TxRecord>> {
            proptest::collection::vec(
                (0usize..6, 0usize..6, 0.001f64..1000.0, 0u64..100_000),
                1..30,
            )
            .prop_map(|raw| {
                raw.into_iter()
                    .map(|(f, t, a, ts)| rec(&format!("n{f}"), &format!("n{t}"), a, ts))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn amount_scaling_equivariance(records in arb_records(), c in 0.01f64..100.0) {
                let scaled: Vec<TxRecord> = records
                    .iter()
                    .map(|r| rec(&r.from, &r.to, r.amount * c, r.timestamp))
                    .collect();
                let f0 = extract_features(&records, "n0");
                if let Ok(f0) = f0 {
                    let f1 = extract_features(&scaled, "n0").unwrap();
                    prop_assert_eq!(f1.time, f0.time);
                    for (a1, a0) in f1.amount.iter().zip(&f0.amount) {
                        prop_assert!((a1 - a0 * c).abs() <= 1e-9 * a1.abs().max(1.0));
                    }
                }
            }

            #[test]
            fn timestamp_shift_invariance(records in arb_records(), shift in 0u64..1_000_000) {
                let shifted: Vec<TxRecord> = records
                    .iter()
                    .map(|r| rec(&r.from, &r.to, r.amount, r.timestamp + shift))
                    .collect();
                if let Ok(f0) = extract_features(&records, "n0") {
                    let f1 = extract_features(&shifted, "n0").unwrap();
                    prop_assert_eq!(f1.time, f0.time);
                    prop_assert_eq!(f1.amount, f0.amount);
                }
            }

            #[test]
            fn record_order_independence(records in arb_records(), seed in 0u64..1000) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut shuffled = records.clone();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                shuffled.shuffle(&mut rng);
                if let Ok(f0) = extract_features(&records, "n0") {
                    let f1 = extract_features(&shuffled, "n0").unwrap();
                    prop_assert_eq!(f0, f1);
                }
            }
        }
    }
}
