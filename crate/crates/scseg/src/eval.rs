//! Precision/recall evaluation of predicted masks against ground truth.
//!
//! Foreground is the positive class. Undefined ratios (zero denominators)
//! are reported as `None` and excluded from macro averages.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::SegmentationMask;

/// Pixel confusion counts plus the derived precision/recall for one mask
/// pair or one pooled corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
    /// TP / (TP + FP); `None` when nothing was predicted foreground.
    pub precision: Option<f64>,
    /// TP / (TP + FN); `None` when the ground truth has no foreground.
    pub recall: Option<f64>,
}

impl EvalReport {
    fn from_counts(true_pos: u64, false_pos: u64, false_neg: u64, true_neg: u64) -> Self {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        Self {
            true_pos,
            false_pos,
            false_neg,
            true_neg,
            precision: ratio(true_pos, true_pos + false_pos),
            recall: ratio(true_pos, true_pos + false_neg),
        }
    }
}

/// Compares a predicted mask against ground truth pixel by pixel.
pub fn evaluate(pred: &SegmentationMask, gt: &SegmentationMask) -> Result<EvalReport> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::dims(
            "evaluate mask pair",
            gt.width() * gt.height(),
            pred.width() * pred.height(),
        ));
    }
    let mut counts = [0u64; 4];
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        let idx = match (p, g) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        counts[idx] += 1;
    }
    Ok(EvalReport::from_counts(counts[0], counts[1], counts[2], counts[3]))
}

/// One prediction/ground-truth pair of a corpus.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub name: String,
    pub pred: SegmentationMask,
    pub gt: SegmentationMask,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageEval {
    pub name: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// Corpus-level evaluation: pooled (micro) counts as the headline numbers,
/// plus the per-image macro averages over defined ratios.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusReport {
    pub micro: EvalReport,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub per_image: Vec<ImageEval>,
}

/// Evaluates every pair, pooling pixel counts for the micro average and
/// averaging the defined per-image ratios for the macro numbers. Any
/// dimension mismatch aborts, naming the offending pair.
pub fn evaluate_corpus(items: &[CorpusItem]) -> Result<CorpusReport> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("evaluate_corpus needs at least one pair".into()));
    }
    let mut pooled = [0u64; 4];
    let mut per_image = Vec::with_capacity(items.len());
    for item in items {
        let report = evaluate(&item.pred, &item.gt).map_err(|e| match e {
            Error::DimensionMismatch { expected, actual, .. } => Error::DimensionMismatch {
                context: format!("corpus pair '{}'", item.name),
                expected,
                actual,
            },
            other => other,
        })?;
        pooled[0] += report.true_pos;
        pooled[1] += report.false_pos;
        pooled[2] += report.false_neg;
        pooled[3] += report.true_neg;
        per_image.push(ImageEval { name: item.name.clone(), report });
    }

    let mean_defined = |values: Vec<Option<f64>>| {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let macro_precision = mean_defined(per_image.iter().map(|i| i.report.precision).collect());
    let macro_recall = mean_defined(per_image.iter().map(|i| i.report.recall).collect());

    Ok(CorpusReport {
        micro: EvalReport::from_counts(pooled[0], pooled[1], pooled[2], pooled[3]),
        macro_precision,
        macro_recall,
        per_image,
    })
}
