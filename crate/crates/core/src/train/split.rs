use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn by_class(labels: &[usize]) -> Vec<Vec<usize>> {
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups
}

/// Seeded per-class subsample keeping `round(fraction · n_k)` items of each
/// class (at least one for non-empty classes). Returned indices are sorted.
pub fn stratified_subsample(labels: &[usize], fraction: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    for mut group in by_class(labels) {
        if group.is_empty() {
            continue;
        }
        let keep = ((fraction * group.len() as f64).round() as usize).clamp(1, group.len());
        group.shuffle(&mut rng);
        picked.extend_from_slice(&group[..keep]);
    }
    picked.sort_unstable();
    picked
}

/// Seeded stratified split into `(train, validation)` index lists, putting
/// `round(val_fraction · n_k)` items of each class into validation. Classes
/// with two or more items always contribute at least one validation item and
/// keep at least one training item.
pub fn stratified_split(
    labels: &[usize],
    val_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for mut group in by_class(labels) {
        let n = group.len();
        let n_val = if n < 2 {
            0
        } else {
            ((val_fraction * n as f64).round() as usize).clamp(1, n - 1)
        };
        group.shuffle(&mut rng);
        val.extend_from_slice(&group[..n_val]);
        train.extend_from_slice(&group[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn ten_percent_of_two_balanced_classes() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let picked = stratified_subsample(&labels, 0.1, 3);
        assert_eq!(picked.len(), 10);
        assert_eq!(picked.iter().filter(|&&i| labels[i] == 0).count(), 5);
        assert_eq!(stratified_subsample(&labels, 1.0, 3).len(), 100);
    }

    #[test]
    fn split_is_disjoint_and_covering() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let (t, v) = stratified_split(&labels, 0.2, 1);
        assert_eq!(t.len(), 24);
        assert_eq!(v.len(), 6);
        let mut all = [t, v].concat();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn proportions_within_one(counts in prop::collection::vec(1usize..40, 1..5), fraction in 0.05f64..=1.0, seed in any::<u64>()) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
            let picked = stratified_subsample(&labels, fraction, seed);
            for (k, &n) in counts.iter().enumerate() {
                let got = picked.iter().filter(|&&i| labels[i] == k).count() as f64;
                prop_assert!((got - fraction * n as f64).abs() <= 1.0);
            }
        }
    }
}
