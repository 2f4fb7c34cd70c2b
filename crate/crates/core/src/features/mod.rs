//! Image preprocessing, global average pooling, and the baseline histogram extractor.

mod fmap;
mod histogram;
mod image;
mod pool;

use std::path::Path;

pub use self::fmap::{
    decode_feature_maps, encode_feature_maps, read_feature_map_file, write_feature_map_file,
    FeatureMapFile,
};
pub use self::histogram::{baseline_histogram_features, HISTOGRAM_BINS};
pub use self::image::{load_image, preprocess_image, Image, DEFAULT_SIDE};
pub use self::pool::{gap, FeatureMap};

use crate::data::{Dataset, Manifest};
use crate::error::Result;
use crate::par;

/// Load, preprocess and describe one image file with the baseline extractor.
pub fn extract_image_file(path: &Path, side: usize) -> Result<Vec<f32>> {
    let raw = load_image(path)?;
    let img = preprocess_image(&raw, side)?;
    Ok(baseline_histogram_features(&img))
}

/// Baseline features for every manifest entry, in manifest order.
///
/// Images are processed in parallel when the `rayon` feature is enabled; the
/// output order never depends on scheduling.
pub fn extract_manifest(manifest: &Manifest, side: usize) -> Result<Dataset> {
    let rows = par::map_indices(manifest.entries.len(), |i| {
        extract_image_file(&manifest.entries[i].path, side)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Dataset::from_rows(&rows, manifest.labels(), manifest.class_names.clone())
}
