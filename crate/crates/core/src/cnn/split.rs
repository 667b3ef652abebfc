use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CnnError;

/// Train/validation/test partition of labelled items.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<(T, usize)>,
    pub val: Vec<(T, usize)>,
    pub test: Vec<(T, usize)>,
    pub num_classes: usize,
    pub seed: u64,
}

impl<T> DatasetSplit<T> {
    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> DatasetSplit<U> {
        let mut conv = |v: Vec<(T, usize)>| v.into_iter().map(|(x, l)| (f(x), l)).collect();
        DatasetSplit {
            train: conv(self.train),
            val: conv(self.val),
            test: conv(self.test),
            num_classes: self.num_classes,
            seed: self.seed,
        }
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Per-class counts: floors of 70/10/20 percent, leftovers dealt out
/// train, val, test in turn.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let mut counts = [7 * n / 10, n / 10, 2 * n / 10];
    let mut left = n - counts.iter().sum::<usize>();
    let mut k = 0;
    while left > 0 {
        counts[k % 3] += 1;
        left -= 1;
        k += 1;
    }
    (counts[0], counts[1], counts[2])
}

/// Stratified seeded 7:1:2 split. Classes are `0..=max label`; any class in
/// that range without samples is an error.
pub fn split_7_1_2<T>(samples: Vec<(T, usize)>, seed: u64) -> Result<DatasetSplit<T>, CnnError> {
    let num_classes = samples
        .iter()
        .map(|(_, l)| l + 1)
        .max()
        .ok_or_else(|| CnnError::Data("no samples to split".into()))?;
    let mut by_class: Vec<Vec<T>> = (0..num_classes).map(|_| Vec::new()).collect();
    for (item, label) in samples {
        by_class[label].push(item);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(CnnError::Data(format!("class {empty} has no samples")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DatasetSplit {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        num_classes,
        seed,
    };
    for (label, mut items) in by_class.into_iter().enumerate() {
        if items.len() < 10 {
            log::warn!(
                "class {label} has only {} samples; splits will be very small",
                items.len()
            );
        }
        items.shuffle(&mut rng);
        let (n_train, n_val, _) = split_counts(items.len());
        let mut rest = items.into_iter().map(|x| (x, label));
        split.train.extend(rest.by_ref().take(n_train));
        split.val.extend(rest.by_ref().take(n_val));
        split.test.extend(rest);
    }
    Ok(split)
}
