//! Binary model container.
//!
//! ```text
//! magic    8 bytes  "OFXMODEL"
//! version  u32 LE
//! hlen     u32 LE   length of the JSON header
//! header   hlen bytes of JSON (variant, scalar, featurizer, metadata, shapes)
//! payload  little-endian parameters, layout depends on the variant
//! sha256   32 bytes over everything above
//! ```
//!
//! Linear payload: bias, nnz (u64), then nnz × (bucket u32, weight).
//! Embedding-bag payload: output (2 × embed_dim), bias (2), n_rows (u64),
//! n_rows × bucket u32, then the n_rows × embed_dim table.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ClassifierModel, EmbedBagModel, EmbedBagParams, LinearMarginModel, TrainingMetadata, Variant};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textpipe::FeaturizerConfig;
use crate::write_atomic;

const MAGIC: &[u8; 8] = b"OFXMODEL";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Serialize, Deserialize)]
struct Header {
    variant: String,
    scalar: String,
    featurizer: FeaturizerConfig,
    metadata: TrainingMetadata,
    #[serde(default)]
    embed_dim: usize,
    #[serde(default)]
    init_seed: u64,
}

fn encode<T: Scalar>(model: &ClassifierModel<T>) -> Vec<u8> {
    let (embed_dim, init_seed) = match model {
        ClassifierModel::EmbedBag(m) => (m.params.embed_dim, m.params.init_seed),
        ClassifierModel::LinearMargin(_) => (0, 0),
    };
    let header = Header {
        variant: model.variant().tag().to_string(),
        scalar: T::NAME.to_string(),
        featurizer: *model.featurizer(),
        metadata: model.metadata().clone(),
        embed_dim,
        init_seed,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    match model {
        ClassifierModel::LinearMargin(m) => {
            m.bias.write_le(&mut out);
            let nz: Vec<(usize, T)> = m
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != T::zero())
                .map(|(i, w)| (i, *w))
                .collect();
            out.extend_from_slice(&(nz.len() as u64).to_le_bytes());
            for (i, w) in nz {
                out.extend_from_slice(&(i as u32).to_le_bytes());
                w.write_le(&mut out);
            }
        }
        ClassifierModel::EmbedBag(m) => {
            let p = &m.params;
            p.output.iter().for_each(|v| v.write_le(&mut out));
            p.bias.iter().for_each(|v| v.write_le(&mut out));
            out.extend_from_slice(&(p.rows.len() as u64).to_le_bytes());
            for r in &p.rows {
                out.extend_from_slice(&r.to_le_bytes());
            }
            p.table.iter().for_each(|v| v.write_le(&mut out));
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::CorruptModel("unexpected end of payload".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn scalar<T: Scalar>(&mut self) -> Result<T> {
        Ok(T::read_le(self.take(T::WIDTH)?))
    }

    fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        (0..n).map(|_| self.scalar()).collect()
    }

    fn count(&mut self, item_width: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.saturating_mul(item_width) > self.buf.len() - self.pos {
            return Err(Error::CorruptModel(format!("implausible element count {n}")));
        }
        Ok(n)
    }
}

fn decode<T: Scalar>(bytes: &[u8]) -> Result<ClassifierModel<T>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 8 + DIGEST_LEN {
        return Err(Error::ChecksumMismatch);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::ChecksumMismatch);
    }
    let mut r = Reader { buf: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let hlen = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(hlen)?)
        .map_err(|e| Error::CorruptModel(format!("header: {e}")))?;
    if header.scalar != T::NAME {
        return Err(Error::ScalarMismatch {
            expected: T::NAME,
            found: header.scalar,
        });
    }
    header.featurizer.validate()?;
    let model = match header.variant.as_str() {
        "LINEAR_MARGIN" => {
            let bias = r.scalar::<T>()?;
            let nnz = r.count(4 + T::WIDTH)?;
            let mut weights = vec![T::zero(); header.featurizer.dim];
            for _ in 0..nnz {
                let i = r.u32()? as usize;
                let w = r.scalar::<T>()?;
                *weights
                    .get_mut(i)
                    .ok_or_else(|| Error::CorruptModel(format!("weight index {i} out of range")))? = w;
            }
            ClassifierModel::LinearMargin(LinearMarginModel {
                featurizer: header.featurizer,
                weights,
                bias,
                metadata: header.metadata,
            })
        }
        "EMBED_BAG" => {
            let ed = header.embed_dim;
            if ed == 0 {
                return Err(Error::CorruptModel("embed_dim is zero".into()));
            }
            let output = r.scalars::<T>(2 * ed)?;
            let bias = [r.scalar::<T>()?, r.scalar::<T>()?];
            let n_rows = r.count(4 + ed * T::WIDTH)?;
            let rows = (0..n_rows).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::CorruptModel("embedding rows not sorted".into()));
            }
            let table = r.scalars::<T>(n_rows * ed)?;
            ClassifierModel::EmbedBag(EmbedBagModel {
                featurizer: header.featurizer,
                params: EmbedBagParams {
                    dim: header.featurizer.dim,
                    embed_dim: ed,
                    init_seed: header.init_seed,
                    rows,
                    table,
                    output,
                    bias,
                },
                metadata: header.metadata,
            })
        }
        other => return Err(Error::CorruptModel(format!("unknown variant {other:?}"))),
    };
    if r.pos != body.len() {
        return Err(Error::CorruptModel("trailing bytes after payload".into()));
    }
    Ok(model)
}

pub fn save_model<T: Scalar>(model: &ClassifierModel<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode(model))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<ClassifierModel<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Like [`load_model`], but fails with a variant error unless the file holds `expected`.
pub fn load_model_expecting<T: Scalar>(
    path: impl AsRef<Path>,
    expected: Variant,
) -> Result<ClassifierModel<T>> {
    let model = load_model(path)?;
    if model.variant() != expected {
        return Err(Error::VariantMismatch {
            expected: expected.tag(),
            found: model.variant().tag().to_string(),
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train_embed_bag, train_linear_margin, EmbedBagConfig, SvmConfig};
    use crate::corpus::{Label, LabeledExample};

    fn data() -> Vec<LabeledExample> {
        (0..40)
            .map(|i| {
                let label = if i % 4 == 0 { Label::Off } else { Label::Not };
                let word = if label.is_off() { "خنزير" } else { "صباح" };
                LabeledExample::seed(&format!("{word} {i} كلام"), label)
            })
            .collect()
    }

    fn featurizer() -> FeaturizerConfig {
        FeaturizerConfig {
            dim: 1 << 14,
            ..Default::default()
        }
    }

    fn models() -> Vec<ClassifierModel<f64>> {
        let svm = SvmConfig {
            featurizer: featurizer(),
            ..Default::default()
        };
        let eb = EmbedBagConfig {
            epochs: 5,
            embed_dim: 6,
            featurizer: featurizer(),
            ..Default::default()
        };
        vec![
            train_linear_margin(&data(), &svm).unwrap(),
            train_embed_bag(&data(), &eb).unwrap(),
        ]
    }

    fn probe_texts() -> Vec<String> {
        (0..100).map(|i| format!("نص {i} خنزير {}", i * 7)).collect()
    }

    #[test]
    fn roundtrip_predictions_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (k, m) in models().into_iter().enumerate() {
            let p = dir.path().join(format!("m{k}.bin"));
            save_model(&m, &p).unwrap();
            let back = load_model::<f64>(&p).unwrap();
            assert_eq!(back, m);
            for t in probe_texts() {
                assert_eq!(m.predict(&t).score.to_bits(), back.predict(&t).score.to_bits());
            }
        }
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&models()[0], &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_model::<f64>(&p), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let mut bytes = encode(&models()[1]);
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(decode::<f64>(&bytes), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn variant_tag_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&models()[0], &p).unwrap();
        assert!(matches!(
            load_model_expecting::<f64>(&p, Variant::EmbedBag),
            Err(Error::VariantMismatch { expected: "EMBED_BAG", .. })
        ));
        assert!(load_model_expecting::<f64>(&p, Variant::LinearMargin).is_ok());
    }

    #[test]
    fn version_and_scalar_checked() {
        let mut bytes = encode(&models()[0]);
        bytes[8..12].copy_from_slice(&7u32.to_le_bytes());
        let n = bytes.len() - DIGEST_LEN;
        let digest = Sha256::digest(&bytes[..n]);
        bytes[n..].copy_from_slice(&digest);
        assert!(matches!(
            decode::<f64>(&bytes),
            Err(Error::VersionMismatch { found: 7, .. })
        ));
        let bytes = encode(&models()[0]);
        assert!(matches!(decode::<f32>(&bytes), Err(Error::ScalarMismatch { .. })));
        assert!(matches!(decode::<f64>(b"nope"), Err(Error::BadMagic)));
    }

    #[test]
    fn identical_models_identical_bytes() {
        let a = models();
        let b = models();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(encode(x), encode(y));
        }
    }
}
