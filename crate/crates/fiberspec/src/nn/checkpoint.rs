use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use super::layer::LayerSpec;
use super::network::Network;
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"FSPEC1\n";

/// CRC-64/XZ (reflected, poly 0x42F0E1EBA9EA3693, init and xorout all-ones).
pub fn crc64(data: &[u8]) -> u64 {
    static TABLE: OnceLock<[u64; 256]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u64; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut c = i as u64;
            for _ in 0..8 {
                c = if c & 1 == 1 {
                    (c >> 1) ^ 0xC96C_5795_D787_0F42
                } else {
                    c >> 1
                };
            }
            *slot = c;
        }
        t
    });
    let mut c = u64::MAX;
    for &b in data {
        c = table[((c ^ b as u64) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ u64::MAX
}

/// Serializes architecture, metadata, and every state tensor (weights and
/// batchnorm running statistics). Layout: magic, plain-text block of
/// `layer`/`meta` lines closed by `end`, then named little-endian f32
/// tensors, then a CRC-64 of all preceding bytes.
pub fn save_network(
    net: &Network<f32>,
    meta: &BTreeMap<String, String>,
    path: &Path,
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    for spec in net.specs() {
        buf.extend_from_slice(spec.config_line().as_bytes());
        buf.push(b'\n');
    }
    for (k, v) in meta {
        if k.contains([' ', '=', '\n']) || v.contains('\n') {
            return Err(Error::Validation(format!(
                "meta key {k:?} or its value cannot be encoded on one line"
            )));
        }
        buf.extend_from_slice(format!("meta {k}={v}\n").as_bytes());
    }
    buf.extend_from_slice(b"end\n");

    let names = net.state_names();
    let tensors = net.state_tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in names.iter().zip(&tensors) {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(t.shape().len() as u8);
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc64(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path, buf)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.at + n > self.buf.len() {
            return Err(Error::TruncatedPayload(format!(
                "{what}: needed {n} bytes at offset {}, file has {}",
                self.at,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
}

/// Reads a checkpoint back into a network plus its metadata. Save, load,
/// predict is bit-identical to predicting before the save.
pub fn load_network(path: &Path) -> Result<(Network<f32>, BTreeMap<String, String>)> {
    let buf = std::fs::read(path)?;
    if buf.len() < MAGIC.len() + 8 {
        return Err(Error::TruncatedPayload(format!(
            "checkpoint is {} bytes, smaller than magic plus checksum",
            buf.len()
        )));
    }
    if &buf[..MAGIC.len()] != MAGIC {
        return Err(Error::HeaderMismatch(
            "missing FSPEC1 checkpoint magic".into(),
        ));
    }
    let (payload, tail) = buf.split_at(buf.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = crc64(payload);
    if stored != computed {
        return Err(Error::Validation(format!(
            "checkpoint CRC mismatch: stored {stored:016x}, computed {computed:016x}"
        )));
    }

    // text block: find the `end` line, keeping everything byte-addressed
    let text_start = MAGIC.len();
    let mut specs = Vec::new();
    let mut meta = BTreeMap::new();
    let mut at = text_start;
    loop {
        let rest = &payload[at..];
        let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| {
            Error::TruncatedPayload("text block not terminated by an end line".into())
        })?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::BadUtf8("checkpoint text block".into()))?;
        at += nl + 1;
        if line == "end" {
            break;
        } else if let Some(kv) = line.strip_prefix("meta ") {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::HeaderMismatch(format!("malformed meta line {line:?}"))
            })?;
            meta.insert(k.to_string(), v.to_string());
        } else {
            specs.push(LayerSpec::parse_config_line(line)?);
        }
    }

    let mut net: Network<f32> = Network::new(
        specs
            .iter()
            .map(|s| s.build_zeroed())
            .collect::<Result<Vec<_>>>()?,
    );
    let names = net.state_names();
    let mut cur = Cursor { buf: payload, at };
    let n_tensors = cur.u32("tensor count")? as usize;
    if n_tensors != names.len() {
        return Err(Error::HeaderMismatch(format!(
            "architecture expects {} state tensors, file stores {n_tensors}",
            names.len()
        )));
    }
    let mut filled = vec![false; names.len()];
    for _ in 0..n_tensors {
        let name_len = cur.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "tensor name")?)
            .map_err(|_| Error::BadUtf8("tensor name".into()))?
            .to_string();
        let ndim = cur.u8("tensor rank")? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(cur.u32("tensor dimension")? as usize);
        }
        let count: usize = shape.iter().product();
        let raw = cur.take(count * 4, "tensor data")?;
        let idx = names.iter().position(|n| *n == name).ok_or_else(|| {
            Error::HeaderMismatch(format!("tensor {name:?} does not belong to this architecture"))
        })?;
        if filled[idx] {
            return Err(Error::HeaderMismatch(format!("tensor {name:?} stored twice")));
        }
        let mut tensors = net.state_tensors_mut();
        let dst = &mut tensors[idx];
        if dst.shape() != shape.as_slice() {
            return Err(Error::shape(
                format!("checkpoint tensor {name}"),
                format!("{:?}", dst.shape()),
                format!("{shape:?}"),
            ));
        }
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            dst.data_mut()[i] = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        filled[idx] = true;
    }
    if cur.at != payload.len() {
        return Err(Error::TruncatedPayload(format!(
            "{} unexpected trailing bytes after the last tensor",
            payload.len() - cur.at
        )));
    }
    Ok((net, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::fit::{seeded_rng, INIT_STREAM};
    use crate::nn::tensor::Tensor;

    #[test]
    fn crc64_check_vector() {
        assert_eq!(crc64(b"123456789"), 0x995D_C9BB_DF19_39FA);
        assert_eq!(crc64(b""), 0);
    }

    fn mixed_net(seed: u64) -> Network<f32> {
        let specs = vec![
            LayerSpec::Conv1d {
                in_channels: 1,
                out_channels: 3,
                kernel: 5,
                stride: 1,
                padding: 0,
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_features: 3 * 16,
                out_features: 10,
            },
            LayerSpec::BatchNorm1d {
                features: 10,
                eps: 1e-5,
                momentum: 0.1,
            },
            LayerSpec::Dropout { rate: 0.5 },
            LayerSpec::Relu,
            LayerSpec::Dense {
                in_features: 10,
                out_features: 4,
            },
            LayerSpec::Softmax,
        ];
        let mut rng = seeded_rng(seed, INIT_STREAM);
        Network::build(&specs, &mut rng).unwrap()
    }

    fn probe() -> Tensor<f32> {
        Tensor::new(vec![2, 1, 20], (0..40).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap()
    }

    #[test]
    fn save_load_predict_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fspec");
        let mut net = mixed_net(17);
        // move the batchnorm buffers off their initial values
        let mut rng = seeded_rng(99, 3);
        net.forward_train(&probe(), &mut rng).unwrap();

        let mut meta = BTreeMap::new();
        meta.insert("labels".to_string(), "A,B,C,D".to_string());
        meta.insert("init".to_string(), "kaiming_uniform".to_string());
        meta.insert("threshold".to_string(), format!("{}", 0.012345678912345678f64));
        save_network(&net, &meta, &path).unwrap();

        let (loaded, meta_back) = load_network(&path).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(loaded.specs(), net.specs());
        let a = net.forward_eval(&probe()).unwrap();
        let b = loaded.forward_eval(&probe()).unwrap();
        assert_eq!(a.data(), b.data());
        let t: f64 = meta_back["threshold"].parse().unwrap();
        assert_eq!(t, 0.012345678912345678);
    }

    #[test]
    fn save_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.fspec");
        let p2 = dir.path().join("b.fspec");
        let net = mixed_net(4);
        save_network(&net, &BTreeMap::new(), &p1).unwrap();
        save_network(&net, &BTreeMap::new(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn corrupted_byte_fails_the_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fspec");
        save_network(&mixed_net(5), &BTreeMap::new(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        let err = load_network(&path).unwrap_err();
        assert!(err.to_string().contains("CRC"), "{err}");
    }

    #[test]
    fn truncation_and_bad_magic_are_distinguished() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fspec");
        save_network(&mixed_net(6), &BTreeMap::new(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..10]).unwrap();
        assert!(matches!(
            load_network(&path),
            Err(Error::TruncatedPayload(_))
        ));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(load_network(&path), Err(Error::HeaderMismatch(_))));
    }
}
