//! The FVEC binary feature-file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "FVEC" | version u8 = 1 | flags u8 (bit0: labels) | reserved u16 = 0
//! n u32 | d u32 | n*d f32 row-major | [n u32 labels] | K u32 | K * (len u16, utf-8)
//! ```

use std::fs;
use std::path::Path;

use super::{check_class_names, Dataset};
use crate::error::{Error, Result};

pub(crate) const VERSION: u8 = 1;
pub(crate) const FLAG_LABELS: u8 = 1;
const MAGIC: &[u8; 4] = b"FVEC";

/// Contents of a feature file. Unlike [`Dataset`], labels are optional.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub n: usize,
    pub d: usize,
    pub features: Vec<f32>,
    pub labels: Option<Vec<usize>>,
    pub class_names: Vec<String>,
}

impl FeatureTable {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn into_dataset(self) -> Result<Dataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::invalid("feature file carries no labels"))?;
        Dataset::new(self.features, self.d, labels, self.class_names)
    }
}

impl From<&Dataset> for FeatureTable {
    fn from(ds: &Dataset) -> Self {
        FeatureTable {
            n: ds.n(),
            d: ds.d(),
            features: ds.features().to_vec(),
            labels: Some(ds.labels().to_vec()),
            class_names: ds.class_names().to_vec(),
        }
    }
}

/// Cursor over a byte buffer that reports the offset of every failure.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.offset(),
                format!(
                    "truncated {what}: need {len} bytes, {} remain",
                    self.buf.len() - self.pos
                ),
            )),
        }
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn f32_block(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        let bytes = count
            .checked_mul(4)
            .ok_or_else(|| Error::format(self.offset(), format!("{what} size overflows")))?;
        let start = self.offset();
        let raw = self.take(bytes, what)?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(
                start + 4 * i as u64,
                format!("non-finite value in {what}"),
            ));
        }
        Ok(values)
    }

    /// Magic, version, flags and reserved word. Returns the flags byte.
    pub(crate) fn header(&mut self, magic: &[u8; 4]) -> Result<u8> {
        let found = self.take(4, "magic")?;
        if found != magic {
            return Err(Error::format(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(found),
                    String::from_utf8_lossy(magic)
                ),
            ));
        }
        let version = self.u8("version")?;
        if version != VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let flags = self.u8("flags")?;
        if flags & !FLAG_LABELS != 0 {
            return Err(Error::format(5, format!("unknown flag bits {flags:#04x}")));
        }
        if self.u16("reserved")? != 0 {
            return Err(Error::format(6, "reserved field is not zero"));
        }
        Ok(flags)
    }

    /// Optional label block followed by the class table, then end of input.
    pub(crate) fn labels_and_classes(
        &mut self,
        n: usize,
        has_labels: bool,
    ) -> Result<(Option<Vec<usize>>, Vec<String>)> {
        let labels = if has_labels {
            let start = self.offset();
            let raw: Vec<u32> = (0..n)
                .map(|_| self.u32("label block"))
                .collect::<Result<_>>()?;
            Some((start, raw))
        } else {
            None
        };
        let k = self.u32("class count")? as usize;
        let mut names = Vec::with_capacity(k.min(1 << 16));
        for _ in 0..k {
            let at = self.offset();
            let len = self.u16("class name length")? as usize;
            let bytes = self.take(len, "class name")?;
            let name = std::str::from_utf8(bytes)
                .map_err(|_| Error::format(at + 2, "class name is not UTF-8"))?;
            names.push(name.to_owned());
        }
        check_class_names(&names).map_err(|e| Error::format(self.offset(), e.to_string()))?;
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.offset(),
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        let labels = match labels {
            None => None,
            Some((start, raw)) => {
                if let Some(i) = raw.iter().position(|&y| y as usize >= k) {
                    return Err(Error::format(
                        start + 4 * i as u64,
                        format!("label {} out of range for {k} classes", raw[i]),
                    ));
                }
                Some(raw.into_iter().map(|y| y as usize).collect())
            }
        };
        Ok((labels, names))
    }
}

pub(crate) fn put_header(out: &mut Vec<u8>, magic: &[u8; 4], labelled: bool) {
    out.extend_from_slice(magic);
    out.push(VERSION);
    out.push(if labelled { FLAG_LABELS } else { 0 });
    out.extend_from_slice(&0u16.to_le_bytes());
}

pub(crate) fn put_labels_and_classes(
    out: &mut Vec<u8>,
    labels: Option<&[usize]>,
    class_names: &[String],
) -> Result<()> {
    if let Some(labels) = labels {
        for &y in labels {
            out.extend_from_slice(&u32_checked(y, "label")?.to_le_bytes());
        }
    }
    out.extend_from_slice(&u32_checked(class_names.len(), "class count")?.to_le_bytes());
    for name in class_names {
        let len = u16::try_from(name.len())
            .map_err(|_| Error::invalid(format!("class name {name:?} exceeds 65535 bytes")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    Ok(())
}

pub(crate) fn u32_checked(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit in u32")))
}

pub fn encode_feature_table(table: &FeatureTable) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + table.features.len() * 4 + table.n * 4);
    put_header(&mut out, MAGIC, table.labels.is_some());
    out.extend_from_slice(&u32_checked(table.n, "sample count")?.to_le_bytes());
    out.extend_from_slice(&u32_checked(table.d, "dimension")?.to_le_bytes());
    for v in &table.features {
        out.extend_from_slice(&v.to_le_bytes());
    }
    put_labels_and_classes(&mut out, table.labels.as_deref(), &table.class_names)?;
    Ok(out)
}

pub fn decode_feature_table(buf: &[u8]) -> Result<FeatureTable> {
    let mut r = ByteReader::new(buf);
    let flags = r.header(MAGIC)?;
    let n = r.u32("sample count")? as usize;
    let d = r.u32("dimension")? as usize;
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::format(8, "n*d overflows"))?;
    let features = r.f32_block(count, "feature payload")?;
    let (labels, class_names) = r.labels_and_classes(n, flags & FLAG_LABELS != 0)?;
    Ok(FeatureTable {
        n,
        d,
        features,
        labels,
        class_names,
    })
}

pub fn read_feature_table(path: impl AsRef<Path>) -> Result<FeatureTable> {
    decode_feature_table(&fs::read(path)?)
}

pub fn write_feature_table(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_feature_table(table)?)?;
    Ok(())
}

/// Read a labelled FVEC file into a validated [`Dataset`].
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Dataset> {
    read_feature_table(path)?.into_dataset()
}

pub fn write_feature_file(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_feature_table(&FeatureTable::from(ds), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_sample() -> Dataset {
        Dataset::new(vec![1.5, -2.0], 2, vec![0], vec!["guava_health".into()]).unwrap()
    }

    #[test]
    fn byte_layout_matches_hand_computed() {
        let mut expected = Vec::new();
        expected.extend_from_slice(b"FVEC");
        expected.extend_from_slice(&[1, 1, 0, 0]);
        expected.extend_from_slice(&[1, 0, 0, 0]); // n
        expected.extend_from_slice(&[2, 0, 0, 0]); // d
        expected.extend_from_slice(&[0x00, 0x00, 0xc0, 0x3f]); // 1.5
        expected.extend_from_slice(&[0x00, 0x00, 0x00, 0xc0]); // -2.0
        expected.extend_from_slice(&[0, 0, 0, 0]); // label 0
        expected.extend_from_slice(&[1, 0, 0, 0]); // K
        expected.extend_from_slice(&[12, 0]);
        expected.extend_from_slice(b"guava_health");
        assert_eq!(expected.len(), 46);

        let bytes = encode_feature_table(&FeatureTable::from(&one_sample())).unwrap();
        assert_eq!(bytes, expected);
        let back = decode_feature_table(&bytes)
            .unwrap()
            .into_dataset()
            .unwrap();
        assert_eq!(back, one_sample());
    }

    #[test]
    fn empty_file_with_declared_dimension() {
        let table = FeatureTable {
            n: 0,
            d: 4,
            features: vec![],
            labels: Some(vec![]),
            class_names: vec!["a".into()],
        };
        let ds = decode_feature_table(&encode_feature_table(&table).unwrap())
            .unwrap()
            .into_dataset()
            .unwrap();
        assert_eq!(ds.n(), 0);
        assert_eq!(ds.d(), 4);
    }

    #[test]
    fn label_equal_to_k_is_rejected_with_offset() {
        let mut bytes = encode_feature_table(&FeatureTable::from(&one_sample())).unwrap();
        // label block starts after 16 header bytes + 8 payload bytes
        bytes[24] = 1;
        match decode_feature_table(&bytes) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, 24);
                assert!(message.contains("out of range"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_version_and_truncation() {
        let good = encode_feature_table(&FeatureTable::from(&one_sample())).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_feature_table(&bad),
            Err(Error::Format { offset: 0, .. })
        ));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(
            decode_feature_table(&bad),
            Err(Error::Format { offset: 4, .. })
        ));

        let truncated = &good[..20];
        assert!(matches!(
            decode_feature_table(truncated),
            Err(Error::Format { offset: 16, .. })
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(decode_feature_table(&trailing).is_err());
    }

    #[test]
    fn unlabelled_table_round_trips_but_is_not_a_dataset() {
        let table = FeatureTable {
            n: 1,
            d: 1,
            features: vec![3.0],
            labels: None,
            class_names: vec!["x".into()],
        };
        let bytes = encode_feature_table(&table).unwrap();
        assert_eq!(bytes[5], 0);
        let back = decode_feature_table(&bytes).unwrap();
        assert_eq!(back, table);
        assert!(back.into_dataset().is_err());
    }

    #[test]
    fn write_is_deterministic_and_missing_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.fvec");
        let b = dir.path().join("b.fvec");
        write_feature_file(&one_sample(), &a).unwrap();
        let ds = read_feature_file(&a).unwrap();
        write_feature_file(&ds, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

        let err = write_feature_file(&ds, dir.path().join("nope/x.fvec")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
