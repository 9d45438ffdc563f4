//! Circuit sweep rows and paired reduction statistics.

use std::collections::BTreeMap;
use std::path::Path;

use qsl_circuits::{Algorithm, Encoding, GateSet, Platform};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One compiled circuit of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub platform: Platform,
    pub model: Encoding,
    pub gateset: GateSet,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub instance: usize,
    pub depth: usize,
    pub weighted_time: f64,
    pub runtime_ns: f64,
    pub single_qubit: usize,
    pub two_qubit: usize,
    pub three_qubit: usize,
    pub four_qubit: usize,
    pub multi_qubit: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "SGS->QGS")]
    GateSet,
    #[serde(rename = "SGM->PM")]
    Model,
}

/// Mean percentage reduction from setting A to setting B over paired rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub comparison: Comparison,
    pub algorithm: Algorithm,
    pub platform: Platform,
    /// The setting held fixed: model name for gate-set comparisons, gate set
    /// for model comparisons.
    pub within: String,
    pub pairs: usize,
    pub weighted_time_pct: f64,
    pub two_qubit_pct: f64,
    pub multi_qubit_pct: f64,
}

fn pct(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 {
        return if b == 0.0 {
            Ok(0.0)
        } else {
            Err(CliError::Runtime("reduction from a zero baseline is undefined".into()))
        };
    }
    Ok(100.0 * (a - b) / a)
}

type Key = (Algorithm, Platform, Encoding, GateSet);

fn model_name(m: Encoding) -> &'static str {
    match m {
        Encoding::Sgm => "SGM",
        Encoding::Pm => "PM",
    }
}

fn reduce(
    comparison: Comparison,
    within: String,
    a: &BTreeMap<(usize, usize), &SweepRow>,
    b: &BTreeMap<(usize, usize), &SweepRow>,
) -> Result<ReductionRow> {
    if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
        return Err(CliError::Validation(format!(
            "unpaired instances in {within} comparison"
        )));
    }
    let first = a.values().next().expect("non-empty group");
    let mut sums = [0.0; 3];
    for (key, ra) in a {
        let rb = b[key];
        sums[0] += pct(ra.weighted_time, rb.weighted_time)?;
        sums[1] += pct(ra.two_qubit as f64, rb.two_qubit as f64)?;
        sums[2] += pct(ra.multi_qubit as f64, rb.multi_qubit as f64)?;
    }
    let n = a.len() as f64;
    Ok(ReductionRow {
        comparison,
        algorithm: first.algorithm,
        platform: first.platform,
        within,
        pairs: a.len(),
        weighted_time_pct: sums[0] / n,
        two_qubit_pct: sums[1] / n,
        multi_qubit_pct: sums[2] / n,
    })
}

/// Average reductions SGS->QGS (per model) and SGM->PM (per gate set) over
/// instances of all sizes. Comparisons whose two settings are not both
/// present are skipped; partially paired settings are an error.
pub fn report_reduction_stats(rows: &[SweepRow]) -> Result<Vec<ReductionRow>> {
    let mut groups: BTreeMap<Key, BTreeMap<(usize, usize), &SweepRow>> = BTreeMap::new();
    for r in rows {
        let slot = groups.entry((r.algorithm, r.platform, r.model, r.gateset)).or_default();
        if slot.insert((r.n, r.instance), r).is_some() {
            return Err(CliError::Validation(format!(
                "duplicate sweep row for N = {}, instance {}",
                r.n, r.instance
            )));
        }
    }
    let mut out = Vec::new();
    for (&(alg, platform, model, gs), a) in &groups {
        if gs == GateSet::Sgs {
            if let Some(b) = groups.get(&(alg, platform, model, GateSet::Qgs)) {
                out.push(reduce(Comparison::GateSet, model_name(model).to_string(), a, b)?);
            }
        }
        if model == Encoding::Sgm {
            if let Some(b) = groups.get(&(alg, platform, Encoding::Pm, gs)) {
                out.push(reduce(Comparison::Model, gs.to_string(), a, b)?);
            }
        }
    }
    Ok(out)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| CliError::Validation(format!("malformed sweep file {}: {e}", path.display())))
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(gs: GateSet, n: usize, wt: f64, two: usize) -> SweepRow {
        SweepRow {
            algorithm: Algorithm::Qaoa,
            platform: Platform::Atoms,
            model: Encoding::Sgm,
            gateset: gs,
            n,
            k: n,
            instance: 0,
            depth: 3,
            weighted_time: wt,
            runtime_ns: wt * 1e5,
            single_qubit: 4,
            two_qubit: two,
            three_qubit: 0,
            four_qubit: 0,
            multi_qubit: two,
        }
    }

    #[test]
    fn identical_pairs_give_zero() {
        let rows = vec![row(GateSet::Sgs, 9, 0.2, 30), row(GateSet::Qgs, 9, 0.2, 30)];
        let r = report_reduction_stats(&rows).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].weighted_time_pct, r[0].two_qubit_pct), (0.0, 0.0));
    }

    #[test]
    fn halved_times_give_fifty_percent() {
        let rows = vec![
            row(GateSet::Sgs, 9, 0.2, 30),
            row(GateSet::Qgs, 9, 0.1, 30),
            row(GateSet::Sgs, 16, 0.8, 60),
            row(GateSet::Qgs, 16, 0.4, 60),
        ];
        let r = report_reduction_stats(&rows).unwrap();
        assert!((r[0].weighted_time_pct - 50.0).abs() < 1e-12);
        assert_eq!(r[0].pairs, 2);
    }

    #[test]
    fn unpaired_rejected() {
        let rows = vec![
            row(GateSet::Sgs, 9, 0.2, 30),
            row(GateSet::Sgs, 16, 0.2, 30),
            row(GateSet::Qgs, 9, 0.2, 30),
        ];
        assert!(matches!(report_reduction_stats(&rows), Err(CliError::Validation(_))));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(GateSet::Sgs, 9, 0.25, 30)];
        let bytes = csv_bytes(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("algorithm,platform,model,gateset,N,K,"));
        let dir = std::env::temp_dir().join(format!("qsl-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("sweep.csv");
        std::fs::write(&p, bytes).unwrap();
        assert_eq!(read_sweep_csv(&p).unwrap(), rows);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
