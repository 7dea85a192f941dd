use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::MetricError;
use crate::stats::mean;

/// Distance cut-off separating "interaction" (below) from "no interaction".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionThreshold {
    pub object_category: String,
    pub threshold: f64,
    /// Mean per-class accuracy on the fitting data.
    pub mpca: f64,
    pub n_labeled: usize,
    pub n_yes: usize,
    pub n_no: usize,
    pub yes_mean: f64,
    pub no_mean: f64,
}

/// `(tp * n_no + tn * n_yes)`, proportional to MPCA for fixed class sizes.
fn score(tp: usize, tn: usize, n_yes: usize, n_no: usize) -> u128 {
    tp as u128 * n_no as u128 + tn as u128 * n_yes as u128
}

fn sweep(distances: &[f64], labels: &[bool]) -> (f64, usize, usize) {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let n_yes = labels.iter().filter(|&&l| l).count();
    let n_no = labels.len() - n_yes;
    // Threshold at the minimum: nothing is below it, so everything is "no".
    let mut best = (distances[order[0]], 0, n_no);
    let (mut tp, mut tn) = (0, n_no);
    let mut i = 0;
    while i < order.len() {
        let v = distances[order[i]];
        while i < order.len() && distances[order[i]] == v {
            if labels[order[i]] {
                tp += 1;
            } else {
                tn -= 1;
            }
            i += 1;
        }
        if i == order.len() {
            break;
        }
        let t = (v + distances[order[i]]) / 2.0;
        if score(tp, tn, n_yes, n_no) > score(best.1, best.2, n_yes, n_no) {
            best = (t, tp, tn);
        }
    }
    best
}

fn check(distances: &[f64], labels: &[bool]) -> Result<(), MetricError> {
    if distances.len() != labels.len() {
        return Err(MetricError::InsufficientSamples("distances and labels differ in length".into()));
    }
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(MetricError::InsufficientSamples("non-finite distance".into()));
    }
    if !labels.contains(&true) || !labels.contains(&false) {
        return Err(MetricError::InsufficientSamples("both yes and no labels are required".into()));
    }
    Ok(())
}

/// Exhaustive sweep over the minimum and all midpoints between adjacent
/// distinct distances, maximizing mean per-class accuracy with "yes" strictly
/// below the threshold. Ties go to the smallest threshold.
pub fn fit_interaction_threshold(
    category: &str,
    distances: &[f64],
    labels: &[bool],
) -> Result<InteractionThreshold, MetricError> {
    check(distances, labels)?;
    let (threshold, tp, tn) = sweep(distances, labels);
    let n_yes = labels.iter().filter(|&&l| l).count();
    let n_no = labels.len() - n_yes;
    let pick = |want: bool| -> Vec<f64> {
        distances.iter().zip(labels).filter(|(_, &l)| l == want).map(|(d, _)| *d).collect()
    };
    Ok(InteractionThreshold {
        object_category: category.into(),
        threshold,
        mpca: (tp as f64 / n_yes as f64 + tn as f64 / n_no as f64) / 2.0,
        n_labeled: labels.len(),
        n_yes,
        n_no,
        yes_mean: mean(&pick(true)),
        no_mean: mean(&pick(false)),
    })
}

/// Held-out MPCA averaged over `folds` stratified folds.
pub fn cross_validated_mpca(distances: &[f64], labels: &[bool], folds: usize, seed: u64) -> Result<f64, MetricError> {
    check(distances, labels)?;
    let mut fold_of = vec![0; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for want in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == want).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold_of[i] = k % folds.max(1);
        }
    }
    let mut scores = Vec::new();
    for f in 0..folds.max(1) {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] != f);
        let td: Vec<f64> = train.iter().map(|&i| distances[i]).collect();
        let tl: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        if check(&td, &tl).is_err() {
            continue;
        }
        let (t, _, _) = sweep(&td, &tl);
        let (mut tp, mut py, mut tn, mut pn) = (0.0, 0.0, 0.0, 0.0);
        for &i in &test {
            if labels[i] {
                py += 1.0;
                tp += f64::from(u8::from(distances[i] < t));
            } else {
                pn += 1.0;
                tn += f64::from(u8::from(distances[i] >= t));
            }
        }
        if py > 0.0 && pn > 0.0 {
            scores.push((tp / py + tn / pn) / 2.0);
        }
    }
    if scores.is_empty() {
        return Err(MetricError::InsufficientSamples("no fold holds both labels".into()));
    }
    Ok(mean(&scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Tries every observed distance, every midpoint and both infinities.
    fn oracle(d: &[f64], l: &[bool]) -> f64 {
        let mut cands = vec![f64::NEG_INFINITY, f64::INFINITY];
        for &a in d {
            cands.push(a);
            for &b in d {
                cands.push((a + b) / 2.0);
            }
        }
        let ny = l.iter().filter(|&&x| x).count() as f64;
        let nn = l.len() as f64 - ny;
        cands
            .into_iter()
            .map(|t| {
                let tp = d.iter().zip(l).filter(|(&x, &y)| y && x < t).count() as f64;
                let tn = d.iter().zip(l).filter(|(&x, &y)| !y && x >= t).count() as f64;
                (tp / ny + tn / nn) / 2.0
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn separated_labels() {
        let t = fit_interaction_threshold("g", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[true, true, true, false, false, false]).unwrap();
        assert_eq!(t.threshold, 3.5);
        assert_eq!(t.mpca, 1.0);
        assert!(t.yes_mean < t.no_mean);
    }

    #[test]
    fn single_label_rejected() {
        assert!(fit_interaction_threshold("g", &[1.0, 2.0], &[true, true]).is_err());
    }

    #[test]
    fn interleaved_labels_floor_at_half() {
        let d: Vec<f64> = (0..20).map(f64::from).collect();
        let l: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        assert!(fit_interaction_threshold("g", &d, &l).unwrap().mpca >= 0.5);
    }

    #[test]
    fn cross_validation_on_separable_data() {
        let d: Vec<f64> = (0..40).map(|i| f64::from(i) + if i < 20 { 0.0 } else { 10.0 }).collect();
        let l: Vec<bool> = (0..40).map(|i| i < 20).collect();
        assert_eq!(cross_validated_mpca(&d, &l, 5, 1).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_oracle(pts in proptest::collection::vec((0u8..30, any::<bool>()), 2..60)) {
            let d: Vec<f64> = pts.iter().map(|p| f64::from(p.0) / 3.0).collect();
            let l: Vec<bool> = pts.iter().map(|p| p.1).collect();
            prop_assume!(l.contains(&true) && l.contains(&false));
            let fit = fit_interaction_threshold("g", &d, &l).unwrap();
            prop_assert!((fit.mpca - oracle(&d, &l)).abs() < 1e-12);
            prop_assert!(fit.mpca >= 0.5);
        }

        #[test]
        fn separable_sets_reach_one(yes in proptest::collection::vec(0.0..1.0f64, 1..30), no in proptest::collection::vec(1.5..3.0f64, 1..30)) {
            let d: Vec<f64> = yes.iter().chain(&no).copied().collect();
            let l: Vec<bool> = yes.iter().map(|_| true).chain(no.iter().map(|_| false)).collect();
            prop_assert_eq!(fit_interaction_threshold("g", &d, &l).unwrap().mpca, 1.0);
        }
    }
}
