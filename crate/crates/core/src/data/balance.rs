use rand::seq::index;

use super::Dataset;
use crate::rng;

/// Random undersampling: every class keeps a uniform random subset of size
/// equal to the smallest non-empty class. Retained rows keep their original order.
pub fn undersample(ds: &Dataset, seed: u64) -> Dataset {
    let groups = ds.indices_by_class();
    let Some(target) = groups.iter().map(Vec::len).filter(|&m| m > 0).min() else {
        return ds.clone();
    };
    let mut keep = Vec::with_capacity(target * groups.len());
    for (c, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let mut rng = rng::substream(seed, "undersample", c as u64);
        keep.extend(
            index::sample(&mut rng, group.len(), target)
                .into_iter()
                .map(|j| group[j]),
        );
    }
    keep.sort_unstable();
    ds.subset(&keep)
}
