//! Dataset statistics: correlations with effectiveness, annotator
//! agreement, flow entropy and extreme-video group distributions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data_model::{CleanVideoRecord, RawVideoRecord};
use crate::error::{Error, Result};
use crate::features::{Block, VideoFeatures};
use crate::text_features::action_reason_lengths;

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    if !r.is_finite() {
        return Err(Error::NonFinite("pearson correlation".into()));
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// Population standard deviation over mean, in percent.
pub fn coefficient_of_variation(ratings: &[u8]) -> Result<f64> {
    if ratings.is_empty() {
        return Err(Error::invalid("no ratings"));
    }
    let n = ratings.len() as f64;
    let mean = ratings.iter().map(|&r| f64::from(r)).sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::invalid("ratings must have a positive mean"));
    }
    let var = ratings.iter().map(|&r| (f64::from(r) - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean * 100.0)
}

pub const RELIABILITY_THRESHOLDS: [f64; 3] = [30.0, 40.0, 50.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    /// `(video_id, c_v in percent)` in input order.
    pub per_video: Vec<(String, f64)>,
    pub thresholds: Vec<f64>,
    /// Videos with `c_v <= threshold`, per threshold.
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
}

pub fn reliability_report(records: &[RawVideoRecord]) -> Result<ReliabilityReport> {
    let per_video = records
        .iter()
        .map(|r| Ok((r.video_id.clone(), coefficient_of_variation(&r.effectiveness_ratings())?)))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = RELIABILITY_THRESHOLDS
        .iter()
        .map(|&t| per_video.iter().filter(|(_, cv)| *cv <= t).count())
        .collect();
    let fractions = counts
        .iter()
        .map(|&c| if records.is_empty() { 0.0 } else { c as f64 / records.len() as f64 })
        .collect();
    Ok(ReliabilityReport {
        per_video,
        thresholds: RELIABILITY_THRESHOLDS.to_vec(),
        counts,
        fractions,
    })
}

/// Shannon entropy in nats of a probability vector.
pub fn flow_entropy(hist: &[f64]) -> Result<f64> {
    if hist.is_empty() || hist.iter().any(|&p| p.is_nan() || p < 0.0 || !p.is_finite()) {
        return Err(Error::invalid("flow histogram must be non-negative and finite"));
    }
    let total: f64 = hist.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("flow histogram sums to {total}, not 1")));
    }
    Ok(-hist.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Topic,
    Sentiment,
}

impl GroupBy {
    pub fn name(self) -> &'static str {
        match self {
            GroupBy::Topic => "topic",
            GroupBy::Sentiment => "sentiment",
        }
    }

    fn of(self, r: &CleanVideoRecord) -> u8 {
        match self {
            GroupBy::Topic => r.topic,
            GroupBy::Sentiment => r.sentiment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupShare {
    pub group: u8,
    pub full_share: f64,
    pub extreme_count: usize,
    pub extreme_share: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremesReport {
    pub group_by: GroupBy,
    pub k: usize,
    /// The `k` highest mean-rated videos, one row per group present in the corpus.
    pub top: Vec<GroupShare>,
    pub bottom: Vec<GroupShare>,
}

fn shares(full: &BTreeMap<u8, usize>, n: usize, extreme: &[&CleanVideoRecord], by: GroupBy) -> Vec<GroupShare> {
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for r in extreme {
        *counts.entry(by.of(r)).or_default() += 1;
    }
    full.iter()
        .map(|(&group, &c)| {
            let full_share = c as f64 / n as f64;
            let extreme_count = counts.get(&group).copied().unwrap_or(0);
            let extreme_share = extreme_count as f64 / extreme.len() as f64;
            GroupShare {
                group,
                full_share,
                extreme_count,
                extreme_share,
                lift: extreme_share / full_share,
            }
        })
        .collect()
}

/// Group the `k` best and `k` worst videos by mean rating (ties by id) and
/// compare each group's share there with its share of the whole corpus.
pub fn extremes_distribution(records: &[RawVideoRecord], k: usize, by: GroupBy) -> Result<ExtremesReport> {
    let n = records.len();
    if k == 0 || 2 * k > n {
        return Err(Error::invalid(format!("need 1 <= k <= N/2, got k = {k} with N = {n}")));
    }
    let mut ranked: Vec<(f64, CleanVideoRecord)> = records
        .iter()
        .map(|r| Ok((r.mean_effectiveness(), CleanVideoRecord::from_raw(r)?)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.video_id.cmp(&b.1.video_id)));
    let mut full: BTreeMap<u8, usize> = BTreeMap::new();
    for (_, r) in &ranked {
        *full.entry(by.of(r)).or_default() += 1;
    }
    let top: Vec<&CleanVideoRecord> = ranked[..k].iter().map(|(_, r)| r).collect();

    let mut ascending = ranked.clone();
    ascending.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.video_id.cmp(&b.1.video_id)));
    let bottom: Vec<&CleanVideoRecord> = ascending[..k].iter().map(|(_, r)| r).collect();
    Ok(ExtremesReport {
        group_by: by,
        k,
        top: shares(&full, n, &top, by),
        bottom: shares(&full, n, &bottom, by),
    })
}

pub const CORRELATION_FEATURES: [&str; 11] = [
    "duration",
    "exciting",
    "language",
    "funny",
    "climax_count",
    "unique_annotated_sentiments",
    "shot_boundaries",
    "flow_entropy",
    "avg_action_length",
    "audio_loudness",
    "avg_reason_length",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub feature: String,
    /// `None` when either variable is constant over the available videos.
    pub pearson_r: Option<f64>,
    pub n: usize,
}

/// Per-video values for [`CORRELATION_FEATURES`]; `None` when the value
/// needs a missing feature file or statement.
pub fn correlation_values(raw: &RawVideoRecord, features: Option<&VideoFeatures>) -> Result<[Option<f64>; 11]> {
    let clean = CleanVideoRecord::from_raw(raw)?;
    let sentiments: BTreeSet<u8> = raw.ratings.iter().map(|r| r.sentiment).collect();
    let lengths: Vec<(usize, usize)> = raw.statements.iter().map(|s| action_reason_lengths(s)).collect();
    let mean_of = |f: fn(&(usize, usize)) -> usize| {
        (!lengths.is_empty()).then(|| lengths.iter().map(f).sum::<usize>() as f64 / lengths.len() as f64)
    };
    let from_block = |b: Block| features.and_then(|f| f.scalar(b));
    let entropy = match features.and_then(|f| f.blocks.get(&Block::FlowHist)) {
        Some(h) => Some(flow_entropy(h)?),
        None => None,
    };
    Ok([
        Some(clean.duration_seconds),
        Some(f64::from(clean.exciting)),
        Some(f64::from(clean.language)),
        Some(f64::from(clean.funny)),
        from_block(Block::ClimaxCount),
        Some(sentiments.len() as f64),
        from_block(Block::ShotBoundaries),
        entropy,
        mean_of(|l| l.0),
        from_block(Block::AudioLoudness),
        mean_of(|l| l.1),
    ])
}

/// Correlate every feature with the aggregated effectiveness label over
/// the videos where that feature is available.
pub fn correlation_report(records: &[RawVideoRecord], features: &HashMap<String, VideoFeatures>) -> Result<Vec<CorrelationRow>> {
    let mut columns: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); CORRELATION_FEATURES.len()];
    for raw in records {
        let target = f64::from(CleanVideoRecord::from_raw(raw)?.effectiveness);
        let values = correlation_values(raw, features.get(&raw.video_id))?;
        for (col, v) in columns.iter_mut().zip(values) {
            if let Some(v) = v {
                col.0.push(v);
                col.1.push(target);
            }
        }
    }
    Ok(CORRELATION_FEATURES
        .iter()
        .zip(columns)
        .map(|(name, (x, y))| CorrelationRow {
            feature: (*name).to_string(),
            pearson_r: pearson(&x, &y).ok(),
            n: x.len(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::AnnotationSet;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn raw(id: &str, eff: [u8; 5], topic: u8, sentiment: u8) -> RawVideoRecord {
        RawVideoRecord {
            video_id: id.into(),
            ratings: eff
                .iter()
                .map(|&e| AnnotationSet {
                    effectiveness: e,
                    topic,
                    sentiment,
                    exciting: 0,
                    funny: 0,
                    language: 1,
                })
                .collect(),
            duration_seconds: 10.0,
            assets: Default::default(),
            statements: Vec::new(),
        }
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!(close(pearson(&x, &x).unwrap(), 1.0, 1e-15));
        assert!(close(pearson(&x, &[-1.0, -2.0, -3.0]).unwrap(), -1.0, 1e-15));
        // Centred: dx = (-1, 0, 1), dy = (-7/3, -1/3, 8/3); r = 5 / sqrt(2 * 38/3).
        let expected = 5.0 / (2.0f64 * 38.0 / 3.0).sqrt();
        let r = pearson(&x, &[2.0, 4.0, 7.0]).unwrap();
        assert!(close(r, expected, 1e-14));
        assert!(close(r, 0.99339, 1e-5));
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn cv_examples() {
        assert_eq!(coefficient_of_variation(&[4, 4, 4, 4, 4]).unwrap(), 0.0);
        let cv = coefficient_of_variation(&[5, 3, 3, 4, 5]).unwrap();
        assert!(close(cv, 0.8f64.sqrt() / 4.0 * 100.0, 1e-12));
        assert!(close(cv, 22.36, 0.01));
        assert!(close(coefficient_of_variation(&[2, 4]).unwrap(), 100.0 / 3.0, 1e-12));
    }

    #[test]
    fn reliability_examples() {
        let unanimous: Vec<RawVideoRecord> = (0..4).map(|i| raw(&format!("u{i}"), [3; 5], 0, 0)).collect();
        assert_eq!(reliability_report(&unanimous).unwrap().fractions, [1.0, 1.0, 1.0]);

        let spread = raw("s", [5, 3, 3, 4, 5], 0, 0);
        let one = reliability_report(std::slice::from_ref(&spread)).unwrap();
        assert_eq!(one.counts, [1, 1, 1]);
        let two = reliability_report(&[spread, raw("t", [4; 5], 0, 0)]).unwrap();
        assert_eq!(two.fractions, [1.0, 1.0, 1.0]);

        // c_v = 44.5%: only under the 50% threshold.
        let wide = raw("w", [1, 1, 3, 3, 3], 0, 0);
        assert_eq!(reliability_report(&[wide]).unwrap().counts, [0, 0, 1]);
    }

    #[test]
    fn entropy_examples() {
        let mut one_hot = vec![0.0; 30];
        one_hot[4] = 1.0;
        assert_eq!(flow_entropy(&one_hot).unwrap(), 0.0);
        assert!(close(flow_entropy(&[1.0 / 30.0; 30]).unwrap(), 30f64.ln(), 1e-12));
        assert!(close(flow_entropy(&[0.5, 0.5]).unwrap(), 2f64.ln(), 1e-15));
        assert!(flow_entropy(&[0.5, 0.6]).is_err());
        assert!(flow_entropy(&[-0.5, 1.5]).is_err());
    }

    #[test]
    fn extremes_examples() {
        // Topic 7 fills 1 of 20 videos overall and 1 of the top 10.
        let mut records: Vec<RawVideoRecord> = (0..19).map(|i| raw(&format!("v{i:02}"), [3; 5], (i % 2) as u8, 0)).collect();
        records.push(raw("top", [5; 5], 7, 0));
        let report = extremes_distribution(&records, 10, GroupBy::Topic).unwrap();
        let t7 = report.top.iter().find(|g| g.group == 7).unwrap();
        assert!(close(t7.full_share, 0.05, 1e-15));
        assert!(close(t7.extreme_share, 0.1, 1e-15));
        assert!(close(t7.lift, 2.0, 1e-12));
        assert_eq!(report.bottom.iter().find(|g| g.group == 7).unwrap().lift, 0.0);

        let single: Vec<RawVideoRecord> = (0..6).map(|i| raw(&format!("s{i}"), [i % 5 + 1; 5], 3, 2)).collect();
        let report = extremes_distribution(&single, 3, GroupBy::Sentiment).unwrap();
        assert_eq!(report.top.len(), 1);
        assert_eq!(report.top[0].lift, 1.0);
        assert!(extremes_distribution(&single, 4, GroupBy::Topic).is_err());
    }

    #[test]
    fn correlation_rows() {
        let records: Vec<RawVideoRecord> = (1..=5u8)
            .map(|e| {
                let mut r = raw(&format!("d{e}"), [e; 5], 0, 0);
                r.duration_seconds = f64::from(e);
                r.statements = vec![format!("buy {} because it is good", "now ".repeat(usize::from(e)))];
                r
            })
            .collect();
        let rows = correlation_report(&records, &HashMap::new()).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].feature, "duration");
        assert!(close(rows[0].pearson_r.unwrap(), 1.0, 1e-12));
        assert_eq!(rows[0].n, 5);
        // Constant exciting flag: undefined.
        assert_eq!(rows[1].pearson_r, None);
        // No feature files: feature-derived rows are empty.
        assert_eq!(rows[4].n, 0);
        assert!(close(rows[8].pearson_r.unwrap(), 1.0, 1e-12));
        assert_eq!(rows[10].pearson_r, None);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            a in 0.1f64..10.0, b in -50.0f64..50.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(r) = pearson(&x, &y) {
                prop_assert!(r.abs() <= 1.0);
                let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                prop_assert!((pearson(&xs, &y).unwrap() - r).abs() < 1e-9);
                let neg: Vec<f64> = y.iter().map(|v| -a * v).collect();
                prop_assert!((pearson(&x, &neg).unwrap() + r).abs() < 1e-9);
            }
        }

        #[test]
        fn entropy_bounded_and_permutation_invariant(
            raw in proptest::collection::vec(0.0f64..1.0, 30),
            rot in 0usize..30,
        ) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let h = flow_entropy(&p).unwrap();
            prop_assert!(h <= 30f64.ln() + 1e-12);
            let mut q = p.clone();
            q.rotate_left(rot);
            q.reverse();
            prop_assert!((flow_entropy(&q).unwrap() - h).abs() < 1e-12);
        }

        #[test]
        fn reliability_fractions_monotone(ratings in proptest::collection::vec(proptest::array::uniform5(1u8..=5), 1..30)) {
            let records: Vec<RawVideoRecord> = ratings.iter().enumerate().map(|(i, r)| raw(&i.to_string(), *r, 0, 0)).collect();
            let report = reliability_report(&records).unwrap();
            prop_assert!(report.fractions.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn weighted_lifts_average_to_one(
            labels in proptest::collection::vec((1u8..=5, 0u8..6), 4..40),
            kf in 0.0f64..1.0,
        ) {
            let records: Vec<RawVideoRecord> = labels
                .iter()
                .enumerate()
                .map(|(i, &(e, t))| raw(&format!("{i:03}"), [e; 5], t, 0))
                .collect();
            let k = 1 + (kf * (records.len() / 2 - 1) as f64) as usize;
            let report = extremes_distribution(&records, k, GroupBy::Topic).unwrap();
            for side in [&report.top, &report.bottom] {
                let s: f64 = side.iter().map(|g| g.full_share * g.lift).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
