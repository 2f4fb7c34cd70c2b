//! The FMAP binary feature-map format: FVEC's header and trailer around an
//! `n x h x w x d` float payload in (sample, row, col, channel) order.

use std::fs;
use std::path::Path;

use super::FeatureMap;
use crate::data::fvec::{put_header, put_labels_and_classes, u32_checked, ByteReader, FLAG_LABELS};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FMAP";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapFile {
    pub maps: Vec<FeatureMap>,
    pub labels: Option<Vec<usize>>,
    pub class_names: Vec<String>,
}

pub fn encode_feature_maps(file: &FeatureMapFile) -> Result<Vec<u8>> {
    let (h, w, d) = file.maps.first().map_or((0, 0, 0), |m| (m.h, m.w, m.d));
    if file.maps.iter().any(|m| (m.h, m.w, m.d) != (h, w, d)) {
        return Err(Error::invalid("feature maps must share one shape"));
    }
    if let Some(labels) = &file.labels {
        if labels.len() != file.maps.len() {
            return Err(Error::invalid("label count differs from map count"));
        }
    }
    let mut out = Vec::new();
    put_header(&mut out, MAGIC, file.labels.is_some());
    for v in [file.maps.len(), h, w, d] {
        out.extend_from_slice(&u32_checked(v, "dimension")?.to_le_bytes());
    }
    for m in &file.maps {
        for v in &m.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    put_labels_and_classes(&mut out, file.labels.as_deref(), &file.class_names)?;
    Ok(out)
}

pub fn decode_feature_maps(buf: &[u8]) -> Result<FeatureMapFile> {
    let mut r = ByteReader::new(buf);
    let flags = r.header(MAGIC)?;
    let n = r.u32("map count")? as usize;
    let h = r.u32("height")? as usize;
    let w = r.u32("width")? as usize;
    let d = r.u32("depth")? as usize;
    if n > 0 && (h == 0 || w == 0 || d == 0) {
        return Err(Error::format(12, "map dimensions must be at least 1"));
    }
    let per = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(d))
        .ok_or_else(|| Error::format(12, "map size overflows"))?;
    let total = per
        .checked_mul(n)
        .ok_or_else(|| Error::format(8, "payload size overflows"))?;
    let payload = r.f32_block(total, "map payload")?;
    let (labels, class_names) = r.labels_and_classes(n, flags & FLAG_LABELS != 0)?;
    let maps = payload
        .chunks_exact(per.max(1))
        .take(n)
        .map(|chunk| FeatureMap {
            h,
            w,
            d,
            values: chunk.to_vec(),
        })
        .collect();
    Ok(FeatureMapFile {
        maps,
        labels,
        class_names,
    })
}

pub fn read_feature_map_file(path: impl AsRef<Path>) -> Result<FeatureMapFile> {
    decode_feature_maps(&fs::read(path)?)
}

pub fn write_feature_map_file(file: &FeatureMapFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_feature_maps(file)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn single_one_by_one_map() {
        let file = FeatureMapFile {
            maps: vec![FeatureMap::new(1, 1, 3, vec![1.0, 2.0, 3.0]).unwrap()],
            labels: None,
            class_names: vec![],
        };
        let bytes = encode_feature_maps(&file).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 16 + 12 + 4);
        let back = decode_feature_maps(&bytes).unwrap();
        assert_eq!(back.maps.len(), 1);
        assert_eq!(back.maps[0].values, vec![1.0, 2.0, 3.0]);
        assert_eq!((back.maps[0].h, back.maps[0].w, back.maps[0].d), (1, 1, 3));
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let file = FeatureMapFile {
            maps: vec![FeatureMap::new(2, 2, 2, vec![0.5; 8]).unwrap(); 2],
            labels: Some(vec![0, 1]),
            class_names: vec!["a".into(), "b".into()],
        };
        let bytes = encode_feature_maps(&file).unwrap();
        // declare three maps while only two are present
        let mut bad = bytes.clone();
        bad[8] = 3;
        assert!(matches!(
            decode_feature_maps(&bad),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            decode_feature_maps(&bytes[..40]),
            Err(Error::Format { offset: 24, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip(n in 0usize..4, h in 1usize..4, w in 1usize..4, d in 1usize..5, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::rng::from_seed(seed);
            let maps: Vec<FeatureMap> = (0..n)
                .map(|_| FeatureMap::new(h, w, d, (0..h * w * d).map(|_| rng.gen_range(-5.0f32..5.0)).collect()).unwrap())
                .collect();
            let file = FeatureMapFile { labels: Some(vec![0; n]), maps, class_names: vec!["only".into()] };
            let back = decode_feature_maps(&encode_feature_maps(&file).unwrap()).unwrap();
            prop_assert_eq!(back, file);
        }
    }
}
