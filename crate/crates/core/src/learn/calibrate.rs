use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{predict_probability, train_model, Label, LabeledSample, LearnError, Model, ModelConfig};
use crate::features::FeatureVector;

pub const VALIDATION_FRACTION: f64 = 0.2;

/// Threshold above every probability: the gate never accepts.
pub const ALL_TO_CHECKER: f64 = 1.0 + f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationStatus {
    /// Some threshold at or below 1 meets the budget.
    Calibrated,
    /// Only `ALL_TO_CHECKER` meets the budget.
    Infeasible,
    /// The validation split holds no Incorrect sample.
    DegenerateValidation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub model: Model,
    pub thresh: f64,
    pub calibration_fpr: f64,
    pub status: CalibrationStatus,
    pub validation_correct: usize,
    pub validation_incorrect: usize,
}

impl CalibratedModel {
    /// True when the gate lets `features` skip the checker.
    pub fn accepts(&self, features: &FeatureVector) -> Result<bool, LearnError> {
        Ok(predict_probability(&self.model, features)? >= self.thresh)
    }
}

/// Per-class shuffle; each class with n >= 2 members contributes
/// round(fraction * n) validation samples, clamped to [1, n - 1]. Both
/// index lists come back ascending.
pub(crate) fn split_indices(
    correct: &[bool],
    fraction: f64,
    rng: &mut impl Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..correct.len()).filter(|&i| correct[i] == class).collect();
        idx.shuffle(rng);
        let n = idx.len();
        let m = if n >= 2 {
            ((fraction * n as f64).round() as usize).clamp(1, n - 1)
        } else {
            0
        };
        val.extend_from_slice(&idx[..m]);
        train.extend_from_slice(&idx[m..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn stratified_split(labels: &[Label], rng_seed: u64) -> (Vec<usize>, Vec<usize>) {
    let correct: Vec<bool> = labels.iter().map(|l| l.is_correct()).collect();
    split_indices(&correct, VALIDATION_FRACTION, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

/// Least candidate threshold whose false-positive rate is strictly below
/// `max_fpr`. Candidates are 0, every validation probability, and
/// `ALL_TO_CHECKER`. Returns (thresh, fpr at thresh, status).
pub fn pick_threshold(validation: &[(f64, Label)], max_fpr: f64) -> (f64, f64, CalibrationStatus) {
    let negatives: Vec<f64> = validation
        .iter()
        .filter(|(_, l)| !l.is_correct())
        .map(|&(p, _)| p)
        .collect();
    if negatives.is_empty() {
        return (ALL_TO_CHECKER, 0.0, CalibrationStatus::DegenerateValidation);
    }
    let mut candidates: Vec<f64> = std::iter::once(0.0)
        .chain(validation.iter().map(|&(p, _)| p))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for t in candidates {
        let fp = negatives.iter().filter(|&&p| p >= t).count();
        let fpr = fp as f64 / negatives.len() as f64;
        if fpr < max_fpr {
            return (t, fpr, CalibrationStatus::Calibrated);
        }
    }
    (ALL_TO_CHECKER, 0.0, CalibrationStatus::Infeasible)
}

/// Trains on a stratified 80% of `correct ++ incorrect` and picks the
/// threshold on the remaining 20%.
pub fn train_and_get_thresh(
    config: &ModelConfig,
    max_fpr: f64,
    correct: &[LabeledSample],
    incorrect: &[LabeledSample],
    rng_seed: u64,
) -> Result<CalibratedModel, LearnError> {
    if !(max_fpr > 0.0 && max_fpr < 1.0) {
        return Err(LearnError::InvalidFpr(max_fpr));
    }
    if correct.is_empty() || incorrect.is_empty() {
        return Err(LearnError::InsufficientData(format!(
            "calibration needs both classes, got {} correct and {} incorrect",
            correct.len(),
            incorrect.len()
        )));
    }
    let data: Vec<LabeledSample> = correct.iter().chain(incorrect).cloned().collect();
    let is_correct: Vec<bool> = data.iter().map(|s| s.label.is_correct()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (train_idx, val_idx) = split_indices(&is_correct, VALIDATION_FRACTION, &mut rng);
    let train: Vec<LabeledSample> = train_idx.iter().map(|&i| data[i].clone()).collect();
    let model = train_model(config, &train, rng.gen())?;
    let validation = val_idx
        .iter()
        .map(|&i| Ok((predict_probability(&model, &data[i].features)?, data[i].label)))
        .collect::<Result<Vec<_>, LearnError>>()?;
    let (thresh, calibration_fpr, status) = pick_threshold(&validation, max_fpr);
    if status == CalibrationStatus::DegenerateValidation {
        log::warn!("validation split has no incorrect samples; routing everything to the checker");
    }
    let validation_incorrect = validation.iter().filter(|(_, l)| !l.is_correct()).count();
    Ok(CalibratedModel {
        model,
        thresh,
        calibration_fpr,
        status,
        validation_correct: validation.len() - validation_incorrect,
        validation_incorrect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::fixtures::separable;
    use Label::{Correct as C, Incorrect as I};

    #[test]
    fn hand_enumerated_threshold() {
        let v = [(0.2, I), (0.4, I), (0.8, C), (0.9, C)];
        // t:   0    0.2  0.4  0.8  0.9
        // FPR: 1    1    1/2  0    0
        assert_eq!(pick_threshold(&v, 0.3), (0.8, 0.0, CalibrationStatus::Calibrated));
        assert_eq!(pick_threshold(&v, 0.6), (0.4, 0.5, CalibrationStatus::Calibrated));
        assert_eq!(pick_threshold(&v, 0.5).0, 0.8);
    }

    #[test]
    fn confident_negatives_are_infeasible() {
        // FPR(0.99) = 1 is not below 0.3; only the sentinel qualifies.
        let v = [(0.99, I), (0.99, I), (0.5, C)];
        assert_eq!(
            pick_threshold(&v, 0.3),
            (ALL_TO_CHECKER, 0.0, CalibrationStatus::Infeasible)
        );
    }

    #[test]
    fn near_one_budget_never_picks_zero() {
        // Ten validation scores; FPR(0) = 1 is never below F.
        let v: Vec<(f64, Label)> = (0..10)
            .map(|i| (i as f64 / 10.0, if i < 5 { I } else { C }))
            .collect();
        let (t, fpr, _) = pick_threshold(&v, 0.999);
        assert_eq!(t, 0.1);
        assert_eq!(fpr, 0.8);
        let (t, _, _) = pick_threshold(&v, 1.0 - 1e-9);
        assert_eq!(t, 0.1);
    }

    #[test]
    fn no_negatives_is_degenerate() {
        let v = [(0.3, C), (0.6, C)];
        assert_eq!(
            pick_threshold(&v, 0.3),
            (ALL_TO_CHECKER, 0.0, CalibrationStatus::DegenerateValidation)
        );
        assert!(ALL_TO_CHECKER > 1.0);
    }

    #[test]
    fn split_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels: Vec<bool> = (0..23).map(|i| i < 13).collect();
        let (train, val) = split_indices(&labels, 0.2, &mut rng);
        // round(2.6) = 3 correct, round(2.0) = 2 incorrect.
        assert_eq!(val.len(), 5);
        assert_eq!(val.iter().filter(|&&i| labels[i]).count(), 3);
        assert_eq!(train.len() + val.len(), 23);
        let (_, val) = split_indices(&[true, false, false], 0.2, &mut rng);
        assert_eq!(val.len(), 1);
        assert!(val[0] == 1 || val[0] == 2);
    }

    #[test]
    fn calibrated_model_is_sound_and_monotone() {
        let data = separable(40);
        let (c, i): (Vec<_>, Vec<_>) = data.into_iter().partition(|s| s.label.is_correct());
        let mut last = f64::INFINITY;
        for f in [0.05, 0.1, 0.3, 0.5, 0.9] {
            let m = train_and_get_thresh(&ModelConfig::knn(), f, &c, &i, 4).unwrap();
            assert!(m.thresh > 1.0 || m.calibration_fpr < f);
            assert!(m.thresh <= last);
            last = m.thresh;
            assert_eq!(m.validation_correct + m.validation_incorrect, 8);
        }
    }

    #[test]
    fn invalid_inputs() {
        let data = separable(10);
        let (c, i): (Vec<_>, Vec<_>) = data.into_iter().partition(|s| s.label.is_correct());
        for f in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                train_and_get_thresh(&ModelConfig::gbt(), f, &c, &i, 0),
                Err(LearnError::InvalidFpr(_))
            ));
        }
        assert!(matches!(
            train_and_get_thresh(&ModelConfig::gbt(), 0.3, &c, &[], 0),
            Err(LearnError::InsufficientData(_))
        ));
    }
}
