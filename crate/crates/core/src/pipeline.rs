//! Transaction ledger → daily attributed graphs → feature table.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betti::{BettiFunction, Grid, WeightFunction};
use crate::depth::{rolling_depth, IntervalMode};
use crate::error::{Error, Result};
use crate::filtration::lower_star;
use crate::graph::AttributedGraph;
use crate::persistence::{compute_persistence, InfinitePolicy, PersistenceOptions};
use crate::stats::average_local_clustering;

/// First line of every feature CSV.
pub const FEATURE_SCHEMA: &str = "#graphvab-features v1";

pub const FEATURE_COLUMNS: [&str; 11] = [
    "day",
    "price",
    "price_normalized",
    "return",
    "shock",
    "shock_ahead",
    "nodes",
    "edges",
    "avg_clustering",
    "rd_beta0",
    "rd_beta1",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TransactionRecord {
    pub day: NaiveDate,
    pub from: String,
    pub to: String,
    pub amount: f64,
}

fn parse_error(line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_day(field: &str, line: u64) -> Result<NaiveDate> {
    field
        .parse::<NaiveDate>()
        .map_err(|_| parse_error(line, format!("`{field}` is not an ISO-8601 day")))
}

fn parse_positive(field: &str, line: u64, what: &str) -> Result<f64> {
    let x: f64 = field
        .parse()
        .map_err(|_| parse_error(line, format!("{what} `{field}` is not a number")))?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(parse_error(line, format!("{what} must be positive, got {field}")));
    }
    Ok(x)
}

fn headed_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader)
}

/// Reads `day,from,to,amount` rows.
pub fn read_ledger<R: Read>(reader: R) -> Result<Vec<TransactionRecord>> {
    let mut out = Vec::new();
    for record in headed_reader(reader).records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(parse_error(line, format!("expected 4 fields, found {}", record.len())));
        }
        let (from, to) = (record[1].to_string(), record[2].to_string());
        if from.is_empty() || to.is_empty() {
            return Err(parse_error(line, "empty address"));
        }
        out.push(TransactionRecord {
            day: parse_day(&record[0], line)?,
            from,
            to,
            amount: parse_positive(&record[3], line, "amount")?,
        });
    }
    Ok(out)
}

/// Reads `day,open` rows into a day-sorted map.
pub fn read_prices<R: Read>(reader: R) -> Result<BTreeMap<NaiveDate, f64>> {
    let mut out = BTreeMap::new();
    for record in headed_reader(reader).records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_error(line, format!("expected 2 fields, found {}", record.len())));
        }
        let day = parse_day(&record[0], line)?;
        if out.insert(day, parse_positive(&record[1], line, "price")?).is_some() {
            return Err(parse_error(line, format!("duplicate day {day}")));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmountTransform {
    #[default]
    Log1p,
    Raw,
}

impl AmountTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            AmountTransform::Log1p => x.ln_1p(),
            AmountTransform::Raw => x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Days with fewer transactions are dropped.
    pub min_transactions: usize,
    /// Nodes kept per day, by transaction count.
    pub top_m: usize,
    pub transform: AmountTransform,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            min_transactions: 5,
            top_m: 150,
            transform: AmountTransform::Log1p,
        }
    }
}

/// Per-node attribute (mean sent plus mean received) and transaction count.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeActivity {
    pub attribute: f64,
    pub transactions: usize,
}

pub fn node_attributes(records: &[TransactionRecord], transform: AmountTransform) -> BTreeMap<String, NodeActivity> {
    #[derive(Default)]
    struct Acc {
        sent: f64,
        n_sent: usize,
        received: f64,
        n_received: usize,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in records.iter().filter(|r| r.from != r.to) {
        let x = transform.apply(r.amount);
        let s = acc.entry(&r.from).or_default();
        s.sent += x;
        s.n_sent += 1;
        let t = acc.entry(&r.to).or_default();
        t.received += x;
        t.n_received += 1;
    }
    let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
    acc.into_iter()
        .map(|(label, a)| {
            (
                label.to_string(),
                NodeActivity {
                    attribute: mean(a.sent, a.n_sent) + mean(a.received, a.n_received),
                    transactions: a.n_sent + a.n_received,
                },
            )
        })
        .collect()
}

/// Builds the trimmed, normalized graph of one day's transactions; `None`
/// when the day is below the activity floor.
pub fn daily_graph(records: &[TransactionRecord], cfg: &IngestConfig) -> Result<Option<AttributedGraph>> {
    let transfers: Vec<&TransactionRecord> = records.iter().filter(|r| r.from != r.to).collect();
    if transfers.len() < cfg.min_transactions || transfers.is_empty() {
        return Ok(None);
    }
    let nodes = node_attributes(records, cfg.transform);
    let g = AttributedGraph::build(
        transfers.iter().map(|r| (r.from.clone(), r.to.clone())),
        nodes.iter().map(|(l, a)| (l.clone(), a.attribute)),
    )?;
    let activity: Vec<f64> = g.labels().iter().map(|l| nodes[l].transactions as f64).collect();
    let g = if g.node_count() > cfg.top_m {
        g.trim_top_active(&activity, cfg.top_m)?
    } else {
        g
    };
    Ok(Some(g.normalize_attributes()))
}

/// Groups the ledger by day and builds each day's graph.
pub fn ingest_transactions(
    records: &[TransactionRecord],
    cfg: &IngestConfig,
) -> Result<BTreeMap<NaiveDate, AttributedGraph>> {
    if cfg.top_m == 0 {
        return Err(Error::invalid("top_m must be at least 1"));
    }
    let mut by_day: BTreeMap<NaiveDate, Vec<TransactionRecord>> = BTreeMap::new();
    for r in records {
        by_day.entry(r.day).or_default().push(r.clone());
    }
    let built = by_day
        .into_par_iter()
        .map(|(day, recs)| Ok((day, daily_graph(&recs, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(built
        .into_iter()
        .filter_map(|(day, g)| {
            if g.is_none() {
                log::info!("dropping {day}: below the activity floor");
            }
            g.map(|g| (day, g))
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnomalyLabel {
    pub ret: Option<f64>,
    pub shock: Option<u8>,
}

/// Returns `R_t = (P_t − P_{t−1}) / P_{t−1}` and `Y_t = 1{|R_t| ≥ δ}`; the
/// first day has neither.
pub fn label_anomalies(prices: &[f64], delta: f64) -> Result<Vec<AnomalyLabel>> {
    if prices.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::invalid("prices must be positive"));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::invalid("delta must be positive"));
    }
    let mut out = Vec::with_capacity(prices.len());
    for (t, &p) in prices.iter().enumerate() {
        if t == 0 {
            out.push(AnomalyLabel { ret: None, shock: None });
            continue;
        }
        let r = (p - prices[t - 1]) / prices[t - 1];
        out.push(AnomalyLabel {
            ret: Some(r),
            shock: Some(u8::from(r.abs() >= delta)),
        });
    }
    Ok(out)
}

/// 1 when a shock occurs within the next `h` days; the last `h` days are
/// undefined.
pub fn horizon_label(labels: &[Option<u8>], h: usize) -> Result<Vec<Option<u8>>> {
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    Ok((0..labels.len())
        .map(|t| {
            if t + h >= labels.len() {
                return None;
            }
            let ahead = &labels[t + 1..=t + h];
            if ahead.contains(&Some(1)) {
                Some(1)
            } else if ahead.iter().all(Option::is_some) {
                Some(0)
            } else {
                None
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub delta: f64,
    pub horizon: usize,
    /// Rolling depth window.
    pub window: usize,
    /// Grid size on `[0, 1]`.
    pub d: usize,
    pub mode: IntervalMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            horizon: 4,
            window: 7,
            d: 100,
            mode: IntervalMode::Closed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DailyFeatureRow {
    pub day: NaiveDate,
    pub price: f64,
    pub price_normalized: f64,
    pub ret: Option<f64>,
    pub shock: Option<u8>,
    pub shock_ahead: Option<u8>,
    pub nodes: usize,
    pub edges: usize,
    pub avg_clustering: Option<f64>,
    pub rd_beta0: Option<f64>,
    pub rd_beta1: Option<f64>,
}

/// Averaged Betti vectors of dimensions 0 and 1 for a graph with
/// attributes in `[0, 1]`.
pub fn daily_vabs(g: &AttributedGraph, grid: &Grid) -> Result<[Vec<f64>; 2]> {
    let pd = compute_persistence(&lower_star(g), PersistenceOptions::default())?
        .resolve_infinite(InfinitePolicy::Replace(1.0))?;
    let vab = |dim| -> Result<Vec<f64>> {
        let bf = BettiFunction::from_diagram(&pd.of_dimension(dim), &WeightFunction::Constant)?;
        Ok(bf.vectorize_averaged(grid).values)
    };
    Ok([vab(0)?, vab(1)?])
}

/// One row per graph day. Price fields come from the full price series, so
/// returns and shocks refer to the previous priced day.
pub fn feature_table(
    graphs: &BTreeMap<NaiveDate, AttributedGraph>,
    prices: &BTreeMap<NaiveDate, f64>,
    cfg: &FeatureConfig,
) -> Result<Vec<DailyFeatureRow>> {
    if let Some(day) = graphs.keys().find(|d| !prices.contains_key(d)) {
        return Err(Error::invalid(format!("no price for {day}")));
    }
    let price_days: Vec<NaiveDate> = prices.keys().copied().collect();
    let price_values: Vec<f64> = prices.values().copied().collect();
    let labels = label_anomalies(&price_values, cfg.delta)?;
    let shocks: Vec<Option<u8>> = labels.iter().map(|l| l.shock).collect();
    let ahead = horizon_label(&shocks, cfg.horizon)?;
    let max_price = price_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let position: HashMap<NaiveDate, usize> = price_days.iter().enumerate().map(|(i, d)| (*d, i)).collect();

    let grid = Grid::uniform(0.0, 1.0, cfg.d)?;
    let days: Vec<(&NaiveDate, &AttributedGraph)> = graphs.iter().collect();
    let vabs = days
        .par_iter()
        .map(|(_, g)| daily_vabs(g, &grid))
        .collect::<Result<Vec<_>>>()?;

    let depth = |dim: usize| -> Result<Vec<Option<f64>>> {
        if vabs.len() < cfg.window {
            if cfg.window < 2 {
                return Err(Error::invalid("window size must be at least 2"));
            }
            return Ok(vec![None; vabs.len()]);
        }
        let series: Vec<Vec<f64>> = vabs.iter().map(|v| v[dim].clone()).collect();
        rolling_depth(&series, cfg.window, cfg.mode)
    };
    let (rd0, rd1) = (depth(0)?, depth(1)?);

    Ok(days
        .iter()
        .enumerate()
        .map(|(i, (day, g))| {
            let p = position[day];
            DailyFeatureRow {
                day: **day,
                price: price_values[p],
                price_normalized: price_values[p] / max_price,
                ret: labels[p].ret,
                shock: labels[p].shock,
                shock_ahead: ahead[p],
                nodes: g.node_count(),
                edges: g.edge_count(),
                avg_clustering: average_local_clustering(g),
                rd_beta0: rd0[i],
                rd_beta1: rd1[i],
            }
        })
        .collect())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the schema line, the header and one row per day.
pub fn write_feature_csv<W: Write>(rows: &[DailyFeatureRow], mut writer: W) -> Result<()> {
    writeln!(writer, "{FEATURE_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FEATURE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.day.to_string(),
            r.price.to_string(),
            r.price_normalized.to_string(),
            opt(r.ret),
            opt(r.shock),
            opt(r.shock_ahead),
            r.nodes.to_string(),
            r.edges.to_string(),
            opt(r.avg_clustering),
            opt(r.rd_beta0),
            opt(r.rd_beta1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn tx(d: &str, from: &str, to: &str, amount: f64) -> TransactionRecord {
        TransactionRecord {
            day: day(d),
            from: from.into(),
            to: to.into(),
            amount,
        }
    }

    #[test]
    fn raw_node_attribute() {
        let recs = [
            tx("2018-01-01", "A", "B", 10.0),
            tx("2018-01-01", "B", "A", 10.0),
            tx("2018-01-01", "A", "C", 20.0),
        ];
        let nodes = node_attributes(&recs, AmountTransform::Raw);
        assert_eq!(nodes["A"].attribute, 25.0);
        assert_eq!(nodes["A"].transactions, 3);
        assert_eq!(nodes["C"].attribute, 20.0);
        let logged = node_attributes(&recs, AmountTransform::Log1p);
        let expected = (11f64.ln() + 21f64.ln()) / 2.0 + 11f64.ln();
        assert!((logged["A"].attribute - expected).abs() < 1e-12);
    }

    #[test]
    fn ledger_parsing() {
        assert!(read_ledger("day,from,to,amount\n".as_bytes()).unwrap().is_empty());
        let recs = read_ledger("day,from,to,amount\n2018-01-02,a,b,1.5\n".as_bytes()).unwrap();
        assert_eq!(recs, [tx("2018-01-02", "a", "b", 1.5)]);
        for (bad, line) in [
            ("day,from,to,amount\n2018-01-02,a,b,1\n2018-13-01,a,b,1\n", 3),
            ("day,from,to,amount\n2018-01-02,a,b,0\n", 2),
            ("day,from,to,amount\n2018-01-02,a,b,-3\n", 2),
            ("day,from,to,amount\n2018-01-02,a,b,x\n", 2),
        ] {
            match read_ledger(bad.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
        assert!(read_ledger("day,from,to,amount\n2018-01-02,a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn price_parsing() {
        let p = read_prices("day,open\n2018-01-02,5\n2018-01-01,4\n".as_bytes()).unwrap();
        assert_eq!(p.keys().next(), Some(&day("2018-01-01")));
        assert!(read_prices("day,open\n2018-01-02,0\n".as_bytes()).is_err());
        assert!(read_prices("day,open\n2018-01-02,1\n2018-01-02,2\n".as_bytes()).is_err());
    }

    #[test]
    fn activity_floor_and_self_transfers() {
        let cfg = IngestConfig::default();
        assert!(ingest_transactions(&[], &cfg).unwrap().is_empty());
        let one = [tx("2018-01-01", "a", "b", 1.0)];
        assert!(ingest_transactions(&one, &cfg).unwrap().is_empty());

        let mut recs: Vec<_> = (0..4).map(|i| tx("2018-01-01", "a", &format!("n{i}"), 1.0)).collect();
        recs.push(tx("2018-01-01", "a", "a", 5.0));
        assert!(ingest_transactions(&recs, &cfg).unwrap().is_empty());
        recs.push(tx("2018-01-01", "n0", "n1", 2.0));
        let graphs = ingest_transactions(&recs, &cfg).unwrap();
        let g = &graphs[&day("2018-01-01")];
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 5);
        let a = g.attributes();
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn trimming_keeps_most_active() {
        let mut recs: Vec<_> = (0..6).map(|i| tx("2018-01-01", "hub", &format!("leaf{i}"), 1.0)).collect();
        recs.push(tx("2018-01-01", "leaf0", "leaf1", 1.0));
        let cfg = IngestConfig { top_m: 3, ..Default::default() };
        let g = &ingest_transactions(&recs, &cfg).unwrap()[&day("2018-01-01")];
        assert_eq!(g.labels(), ["hub", "leaf0", "leaf1"]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn anomaly_labels() {
        let l = label_anomalies(&[100.0, 106.0], 0.05).unwrap();
        assert_eq!(l[0], AnomalyLabel { ret: None, shock: None });
        assert!((l[1].ret.unwrap() - 0.06).abs() < 1e-15);
        assert_eq!(l[1].shock, Some(1));
        let l = label_anomalies(&[100.0, 100.0], 0.05).unwrap();
        assert_eq!(l[1], AnomalyLabel { ret: Some(0.0), shock: Some(0) });
        assert!(label_anomalies(&[100.0, 0.0], 0.05).is_err());
    }

    #[test]
    fn horizon_labels() {
        let y = [Some(0), Some(0), Some(1), Some(0)];
        assert_eq!(horizon_label(&y, 2).unwrap(), [Some(1), Some(1), None, None]);
        assert_eq!(horizon_label(&y, 1).unwrap(), [Some(0), Some(1), Some(0), None]);
        assert_eq!(horizon_label(&[Some(0); 5], 3).unwrap(), [Some(0), Some(0), None, None, None]);
        assert!(horizon_label(&y, 0).is_err());
    }

    fn cycle_day(d: &str, n: usize, spokes: bool) -> Vec<TransactionRecord> {
        let mut out: Vec<_> = (0..n)
            .map(|i| tx(d, &format!("v{i}"), &format!("v{}", (i + 1) % n), (i + 1) as f64))
            .collect();
        if spokes {
            out.push(tx(d, "v0", "v2", 50.0));
        }
        out
    }

    #[test]
    fn feature_rows() {
        let mut recs = Vec::new();
        let mut prices = BTreeMap::new();
        for k in 1..=9 {
            let d = format!("2018-01-{k:02}");
            recs.extend(cycle_day(&d, 5 + k % 3, k % 2 == 0));
            prices.insert(day(&d), 100.0 + k as f64);
        }
        let graphs = ingest_transactions(&recs, &IngestConfig::default()).unwrap();
        let rows = feature_table(&graphs, &prices, &FeatureConfig::default()).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows[..6].iter().all(|r| r.rd_beta0.is_none() && r.rd_beta1.is_none()));
        for r in &rows[6..] {
            assert!((0.0..=1.0).contains(&r.rd_beta0.unwrap()));
            assert!((0.0..=1.0).contains(&r.rd_beta1.unwrap()));
        }
        assert_eq!(rows[8].price_normalized, 1.0);
        assert!(rows[..8].iter().all(|r| r.price_normalized < 1.0));
        assert_eq!(rows[0].ret, None);

        let mut buf = Vec::new();
        write_feature_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(FEATURE_SCHEMA));
        assert_eq!(lines.next().unwrap(), FEATURE_COLUMNS.join(","));
        assert_eq!(lines.count(), 9);

        prices.remove(&day("2018-01-03"));
        assert!(feature_table(&graphs, &prices, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn forest_days_have_zero_dim1_vabs() {
        let recs: Vec<_> = (0..6).map(|i| tx("2018-01-01", "root", &format!("c{i}"), i as f64 + 1.0)).collect();
        let g = &ingest_transactions(&recs, &IngestConfig::default()).unwrap()[&day("2018-01-01")];
        let [_, v1] = daily_vabs(g, &Grid::uniform(0.0, 1.0, 100).unwrap()).unwrap();
        assert_eq!(v1.len(), 99);
        assert!(v1.iter().all(|&x| x == 0.0));
    }
}
