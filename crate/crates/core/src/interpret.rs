//! Semantic-interpretation tracking: per-chunk yes/no probabilities for the
//! probe questions and end-of-sentence answer accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, YesNo};
use crate::corpus::{GardenPathItem, Variant, VerbClass};
use crate::error::{Error, Result};
use crate::stats::{paired_t, welch_t, StatsResult};
use crate::N_CHUNKS;

/// Which probe question a trajectory tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Question {
    /// Probe (1), consistent with the misinterpretation.
    Misinterpretation,
    /// Probe (2), consistent with the correct reading.
    Correct,
}

impl Question {
    pub fn as_str(self) -> &'static str {
        match self {
            Question::Misinterpretation => "misinterpretation",
            Question::Correct => "correct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub item_id: String,
    pub variant: Variant,
    pub prefix_index: usize,
    pub p_yes: f64,
    pub p_no: f64,
    /// `p_yes / (p_yes + p_no)`; `None` when both are zero.
    pub p_yes_normalized: Option<f64>,
}

impl TrajectoryPoint {
    pub fn new(item_id: impl Into<String>, variant: Variant, prefix_index: usize, p: YesNo) -> Self {
        let total = p.p_yes + p.p_no;
        TrajectoryPoint {
            item_id: item_id.into(),
            variant,
            prefix_index,
            p_yes: p.p_yes,
            p_no: p.p_no,
            p_yes_normalized: (total > 0.0).then(|| p.p_yes / total),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.p_yes_normalized.is_none()
    }
}

/// Five points, one per prefix, for one item and variant.
///
/// `bundles` may arrive in any order; they must all belong to the same item
/// and variant and carry answer probabilities.
pub fn trajectory(bundles: &[&Bundle], question: Question) -> Result<Vec<TrajectoryPoint>> {
    let first = bundles
        .first()
        .ok_or_else(|| Error::Analysis("trajectory needs at least one bundle".into()))?;
    let (item_id, variant) = (first.manifest.item_id.clone(), first.manifest.variant);
    let mut by_prefix: [Option<&Bundle>; N_CHUNKS] = Default::default();
    for b in bundles {
        let m = &b.manifest;
        if m.item_id != item_id || m.variant != variant {
            return Err(Error::Analysis(format!(
                "trajectory mixes ({item_id}, {variant}) with ({}, {})",
                m.item_id, m.variant
            )));
        }
        by_prefix[m.prefix_index - 1] = Some(b);
    }
    by_prefix
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let b = b.ok_or_else(|| {
                Error::Analysis(format!("missing prefix {} for ({item_id}, {variant})", k + 1))
            })?;
            let answer = b.answer()?;
            let p = match question {
                Question::Misinterpretation => answer.misinterpretation(),
                Question::Correct => answer.q_correct.ok_or_else(|| {
                    Error::Analysis(format!(
                        "no probe (2) probabilities for ({item_id}, {variant}) prefix {}",
                        k + 1
                    ))
                })?,
            };
            Ok(TrajectoryPoint::new(item_id.clone(), variant, k + 1, p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalAnswer {
    RejectsMisinterpretation,
    EndorsesMisinterpretation,
}

/// Rejection iff the normalized yes-probability is strictly below 0.5.
pub fn final_answer(point: &TrajectoryPoint) -> Result<FinalAnswer> {
    let p = point.p_yes_normalized.ok_or_else(|| {
        Error::Analysis(format!(
            "degenerate answer probabilities for ({}, {})",
            point.item_id, point.variant
        ))
    })?;
    Ok(if p < 0.5 {
        FinalAnswer::RejectsMisinterpretation
    } else {
        FinalAnswer::EndorsesMisinterpretation
    })
}

/// Mean normalized probability per chunk with degenerate points excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPoint {
    pub prefix_index: usize,
    pub mean_p_yes: f64,
    pub mean_p_no: f64,
    pub mean_p_yes_normalized: Option<f64>,
    pub n: usize,
    pub excluded: usize,
}

/// Equal-weight mean over items of each chunk's probabilities.
pub fn mean_trajectory(trajectories: &[Vec<TrajectoryPoint>]) -> Vec<MeanPoint> {
    (1..=N_CHUNKS)
        .map(|k| {
            let points: Vec<&TrajectoryPoint> = trajectories
                .iter()
                .flatten()
                .filter(|p| p.prefix_index == k)
                .collect();
            let valid: Vec<&&TrajectoryPoint> = points.iter().filter(|p| !p.is_degenerate()).collect();
            let n = valid.len();
            let avg = |f: &dyn Fn(&TrajectoryPoint) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    valid.iter().map(|p| f(p)).sum::<f64>() / n as f64
                }
            };
            MeanPoint {
                prefix_index: k,
                mean_p_yes: avg(&|p| p.p_yes),
                mean_p_no: avg(&|p| p.p_no),
                mean_p_yes_normalized: (n > 0).then(|| avg(&|p| p.p_yes_normalized.unwrap())),
                n,
                excluded: points.len() - n,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub n_items: usize,
    pub n_rejecting: usize,
    pub accuracy: f64,
}

impl ClassAccuracy {
    fn new(n_items: usize, n_rejecting: usize) -> Self {
        ClassAccuracy {
            n_items,
            n_rejecting,
            accuracy: if n_items == 0 {
                0.0
            } else {
                n_rejecting as f64 / n_items as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub model_id: String,
    pub variant: Variant,
    pub n_items: usize,
    pub n_rejecting: usize,
    /// Fraction of items whose final answer rejects probe (1).
    pub accuracy: f64,
    pub ot: ClassAccuracy,
    pub rat: ClassAccuracy,
    /// Items with degenerate final probabilities, left out of every count.
    pub excluded: usize,
}

/// Human question-answering and paraphrase baselines, percent rejecting probe (1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanBaseline {
    pub study: &'static str,
    pub task: &'static str,
    pub comma_absent: f64,
    pub comma_present: f64,
}

pub const HUMAN_BASELINES: [HumanBaseline; 2] = [
    HumanBaseline {
        study: "Humans (question answering)",
        task: "question answering",
        comma_absent: 35.40,
        comma_present: 73.40,
    },
    HumanBaseline {
        study: "Humans (paraphrase)",
        task: "paraphrase",
        comma_absent: 21.00,
        comma_present: 62.00,
    },
];

/// Accuracy over items using each item's prefix-5 point.
pub fn accuracy_summary(
    model_id: &str,
    variant: Variant,
    corpus: &[GardenPathItem],
    trajectories: &[Vec<TrajectoryPoint>],
) -> Result<AccuracySummary> {
    if corpus.is_empty() {
        return Err(Error::Analysis("empty corpus".into()));
    }
    let class_of: BTreeMap<&str, VerbClass> = corpus.iter().map(|i| (i.id(), i.verb_class())).collect();
    let mut counts: BTreeMap<VerbClass, (usize, usize)> = BTreeMap::new();
    let mut excluded = 0;
    let mut seen = std::collections::BTreeSet::new();
    for traj in trajectories {
        let last = traj
            .iter()
            .find(|p| p.prefix_index == N_CHUNKS)
            .ok_or_else(|| Error::Analysis("trajectory without a final point".into()))?;
        if last.variant != variant {
            return Err(Error::Analysis(format!(
                "trajectory for {} has variant {}, expected {variant}",
                last.item_id, last.variant
            )));
        }
        if !seen.insert(last.item_id.clone()) {
            return Err(Error::Analysis(format!("two final answers for item {}", last.item_id)));
        }
        let class = *class_of
            .get(last.item_id.as_str())
            .ok_or_else(|| Error::Analysis(format!("item {} not in corpus", last.item_id)))?;
        if last.is_degenerate() {
            excluded += 1;
            continue;
        }
        let entry = counts.entry(class).or_default();
        entry.0 += 1;
        if final_answer(last)? == FinalAnswer::RejectsMisinterpretation {
            entry.1 += 1;
        }
    }
    let get = |c| counts.get(&c).copied().unwrap_or((0, 0));
    let (ot, rat) = (get(VerbClass::Ot), get(VerbClass::Rat));
    let total = ClassAccuracy::new(ot.0 + rat.0, ot.1 + rat.1);
    Ok(AccuracySummary {
        model_id: model_id.into(),
        variant,
        n_items: total.n_items,
        n_rejecting: total.n_rejecting,
        accuracy: total.accuracy,
        ot: ClassAccuracy::new(ot.0, ot.1),
        rat: ClassAccuracy::new(rat.0, rat.1),
        excluded,
    })
}

/// Per-item final answers for both variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairedAnswers {
    pub comma_absent: FinalAnswer,
    pub comma_present: FinalAnswer,
}

fn indicator(a: FinalAnswer) -> f64 {
    match a {
        FinalAnswer::RejectsMisinterpretation => 1.0,
        FinalAnswer::EndorsesMisinterpretation => 0.0,
    }
}

/// Paired t-test on 0/1 rejection outcomes, comma-present minus comma-absent.
pub fn comma_effect_test(pairs: &[PairedAnswers]) -> Result<StatsResult> {
    let present: Vec<f64> = pairs.iter().map(|p| indicator(p.comma_present)).collect();
    let absent: Vec<f64> = pairs.iter().map(|p| indicator(p.comma_absent)).collect();
    let mut r = paired_t(&present, &absent)?;
    r.test_name = "comma_effect_paired_t".into();
    Ok(r)
}

/// Welch's test on the same outcomes treated as independent samples.
pub fn comma_effect_welch(pairs: &[PairedAnswers]) -> Result<StatsResult> {
    let present: Vec<f64> = pairs.iter().map(|p| indicator(p.comma_present)).collect();
    let absent: Vec<f64> = pairs.iter().map(|p| indicator(p.comma_absent)).collect();
    let mut r = welch_t(&present, &absent)?;
    r.test_name = "comma_effect_welch_t".into();
    Ok(r)
}

/// Pairs final answers by item; items missing either variant are skipped.
pub fn pair_final_answers(absent: &[Vec<TrajectoryPoint>], present: &[Vec<TrajectoryPoint>]) -> Result<Vec<(String, PairedAnswers)>> {
    let finals = |set: &[Vec<TrajectoryPoint>]| -> Result<BTreeMap<String, FinalAnswer>> {
        let mut out = BTreeMap::new();
        for traj in set {
            if let Some(last) = traj.iter().find(|p| p.prefix_index == N_CHUNKS) {
                if !last.is_degenerate() {
                    out.insert(last.item_id.clone(), final_answer(last)?);
                }
            }
        }
        Ok(out)
    };
    let a = finals(absent)?;
    let p = finals(present)?;
    Ok(a.into_iter()
        .filter_map(|(id, comma_absent)| {
            p.get(&id).map(|&comma_present| {
                (
                    id,
                    PairedAnswers {
                        comma_absent,
                        comma_present,
                    },
                )
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus_str;
    use crate::stats::StatsError;

    fn point(p_yes: f64, p_no: f64) -> TrajectoryPoint {
        TrajectoryPoint::new("i", Variant::CommaAbsent, 5, YesNo { p_yes, p_no })
    }

    #[test]
    fn normalization() {
        assert!((point(0.6, 0.2).p_yes_normalized.unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(point(0.5, 0.5).p_yes_normalized, Some(0.5));
        assert!(point(0.0, 0.0).is_degenerate());
        assert!(final_answer(&point(0.0, 0.0)).is_err());
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(final_answer(&point(0.49, 0.51)).unwrap(), FinalAnswer::RejectsMisinterpretation);
        assert_eq!(final_answer(&point(0.51, 0.49)).unwrap(), FinalAnswer::EndorsesMisinterpretation);
        assert_eq!(final_answer(&point(0.5, 0.5)).unwrap(), FinalAnswer::EndorsesMisinterpretation);
    }

    #[test]
    fn human_baselines() {
        assert_eq!(
            (HUMAN_BASELINES[0].comma_absent, HUMAN_BASELINES[0].comma_present),
            (35.40, 73.40)
        );
        assert_eq!(
            (HUMAN_BASELINES[1].comma_absent, HUMAN_BASELINES[1].comma_present),
            (21.00, 62.00)
        );
    }

    fn corpus(n: usize) -> Vec<GardenPathItem> {
        let text: String = (0..n)
            .map(|i| {
                let class = if i % 2 == 0 { "OT" } else { "RAT" };
                format!(
                    r#"{{"id":"it{i:02}","verb_class":"{class}","chunks":["While the man hunted","the deer","that was brown","ran","away."],"q_mis":"q1","q_correct":"q2","roles":{{"verb1":3,"np_head":5,"verb2":9}}}}"#
                ) + "\n"
            })
            .collect();
        parse_corpus_str(&text).unwrap()
    }

    fn final_only(id: &str, variant: Variant, p_yes: f64) -> Vec<TrajectoryPoint> {
        vec![TrajectoryPoint::new(id, variant, 5, YesNo { p_yes, p_no: 1.0 - p_yes })]
    }

    #[test]
    fn four_of_twenty_four() {
        let items = corpus(24);
        let trajs: Vec<_> = items
            .iter()
            .enumerate()
            .map(|(i, it)| final_only(it.id(), Variant::CommaAbsent, if i < 4 { 0.2 } else { 0.8 }))
            .collect();
        let s = accuracy_summary("m", Variant::CommaAbsent, &items, &trajs).unwrap();
        assert_eq!(s.n_items, 24);
        assert_eq!(s.n_rejecting, 4);
        assert!((100.0 * s.accuracy - 16.67).abs() < 0.005);
        assert_eq!(s.ot.n_items + s.rat.n_items, 24);
        assert_eq!(s.ot.n_rejecting, 2);
        assert!(accuracy_summary("m", Variant::CommaAbsent, &[], &trajs).is_err());
    }

    #[test]
    fn degenerate_final_points_are_tallied() {
        let items = corpus(3);
        let trajs = vec![
            final_only("it00", Variant::CommaAbsent, 0.2),
            vec![TrajectoryPoint::new("it01", Variant::CommaAbsent, 5, YesNo { p_yes: 0.0, p_no: 0.0 })],
            final_only("it02", Variant::CommaAbsent, 0.9),
        ];
        let s = accuracy_summary("m", Variant::CommaAbsent, &items, &trajs).unwrap();
        assert_eq!((s.n_items, s.excluded, s.n_rejecting), (2, 1, 1));
        let means = mean_trajectory(&trajs);
        assert_eq!(means[4].n, 2);
        assert_eq!(means[4].excluded, 1);
        assert!((means[4].mean_p_yes_normalized.unwrap() - 0.55).abs() < 1e-12);
    }

    #[test]
    fn comma_effect() {
        use FinalAnswer::*;
        let same = vec![
            PairedAnswers {
                comma_absent: EndorsesMisinterpretation,
                comma_present: EndorsesMisinterpretation,
            };
            4
        ];
        assert!(matches!(
            comma_effect_test(&same).unwrap_err(),
            Error::Stats(StatsError::Degenerate)
        ));
        let mut mixed = vec![
            PairedAnswers {
                comma_absent: EndorsesMisinterpretation,
                comma_present: RejectsMisinterpretation,
            };
            3
        ];
        mixed.push(PairedAnswers {
            comma_absent: RejectsMisinterpretation,
            comma_present: RejectsMisinterpretation,
        });
        let r = comma_effect_test(&mixed).unwrap();
        assert_eq!(r.direction, crate::stats::Direction::Positive);
        // d = [1,1,1,0]: mean .75, sd .5, t = 3
        assert!((r.t - 3.0).abs() < 1e-12);
        assert_eq!(r.df, 3.0);
        assert!(comma_effect_test(&mixed[..1]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn normalization_scale_invariant(p_yes in 0.0f64..1.0, p_no in 0.0f64..1.0, c in 0.01f64..100.0) {
            proptest::prop_assume!(p_yes + p_no > 0.0);
            let a = point(p_yes, p_no);
            let b = point(p_yes * c, p_no * c);
            let (na, nb) = (a.p_yes_normalized.unwrap(), b.p_yes_normalized.unwrap());
            proptest::prop_assert!((na - nb).abs() < 1e-12);
            // avoid asserting equality of answers on the knife edge
            if (na - 0.5).abs() > 1e-9 {
                proptest::prop_assert_eq!(final_answer(&a).unwrap(), final_answer(&b).unwrap());
            }
        }

        #[test]
        fn summary_permutation_invariant_and_weighted(
            probs in proptest::collection::vec(0.0f64..1.0, 1..30),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let items = corpus(probs.len());
            let mut trajs: Vec<_> = items.iter().zip(&probs).map(|(it, &p)| final_only(it.id(), Variant::CommaPresent, p)).collect();
            let a = accuracy_summary("m", Variant::CommaPresent, &items, &trajs).unwrap();
            trajs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = accuracy_summary("m", Variant::CommaPresent, &items, &trajs).unwrap();
            proptest::prop_assert_eq!(&a, &b);
            let weighted = (a.ot.accuracy * a.ot.n_items as f64 + a.rat.accuracy * a.rat.n_items as f64) / a.n_items as f64;
            proptest::prop_assert!((weighted - a.accuracy).abs() < 1e-12);
        }
    }
}
