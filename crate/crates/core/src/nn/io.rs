//! TKAE model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "TKAE"            magic
//! u32 version       currently 1
//! u32 side          input/output side length
//! u32 bottleneck    layer index of the bottleneck code
//! u32 n_layers
//! n_layers records:
//!   u8 kind         0 conv, 1 maxpool2, 2 conv_transpose, 3 batchnorm, 4 relu, 5 sigmoid
//!   conv:           u32 kh, kw, in_c, out_c
//!   conv_transpose: u32 kh, kw, in_c, out_c, stride
//!   batchnorm:      u32 c, f64 eps, f64 momentum
//! f32 data: per layer, each parameter array then each running-stat array
//!   conv / conv_transpose: kernel (kh, kw, in_c, out_c order), bias
//!   batchnorm:             gamma, beta, running mean, running variance
//! ```

use std::path::Path;

use crate::error::{Error, Result};

use super::layers::{Activation, LayerSpec};
use super::model::{Layer, Model};

pub const MAGIC: &[u8; 4] = b"TKAE";
pub const VERSION: u32 = 1;

pub fn encode_model(model: &Model<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for v in [VERSION, model.side as u32, model.bottleneck as u32, model.layers.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let u32s = |out: &mut Vec<u8>, vals: &[usize]| {
        for &v in vals {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    };
    for l in &model.layers {
        match l.spec {
            LayerSpec::Conv { kh, kw, in_c, out_c } => {
                out.push(0);
                u32s(&mut out, &[kh, kw, in_c, out_c]);
            }
            LayerSpec::MaxPool2 => out.push(1),
            LayerSpec::ConvTranspose {
                kh,
                kw,
                in_c,
                out_c,
                stride,
            } => {
                out.push(2);
                u32s(&mut out, &[kh, kw, in_c, out_c, stride]);
            }
            LayerSpec::BatchNorm { c, eps, momentum } => {
                out.push(3);
                u32s(&mut out, &[c]);
                out.extend_from_slice(&eps.to_le_bytes());
                out.extend_from_slice(&momentum.to_le_bytes());
            }
            LayerSpec::Activation(Activation::Relu) => out.push(4),
            LayerSpec::Activation(Activation::Sigmoid) => out.push(5),
        }
    }
    for l in &model.layers {
        for v in l.params.iter().chain(&l.running).flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::BadModel(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn size(&mut self) -> Result<usize> {
        let v = self.u32()? as usize;
        if v > 1 << 16 {
            return Err(Error::BadModel(format!("implausible dimension {v}")));
        }
        Ok(v)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::BadModel("overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Model<f32>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::BadModel("missing TKAE magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let side = r.size()?;
    let bottleneck = r.u32()? as usize;
    let n = r.size()?;
    let mut specs = Vec::with_capacity(n);
    for _ in 0..n {
        let spec = match r.u8()? {
            0 => LayerSpec::Conv {
                kh: r.size()?,
                kw: r.size()?,
                in_c: r.size()?,
                out_c: r.size()?,
            },
            1 => LayerSpec::MaxPool2,
            2 => LayerSpec::ConvTranspose {
                kh: r.size()?,
                kw: r.size()?,
                in_c: r.size()?,
                out_c: r.size()?,
                stride: r.size()?,
            },
            3 => LayerSpec::BatchNorm {
                c: r.size()?,
                eps: r.f64()?,
                momentum: r.f64()?,
            },
            4 => LayerSpec::Activation(Activation::Relu),
            5 => LayerSpec::Activation(Activation::Sigmoid),
            k => return Err(Error::BadModel(format!("unknown layer kind {k}"))),
        };
        specs.push(spec);
    }
    let mut layers = Vec::with_capacity(n);
    for spec in specs {
        let params = spec
            .param_lens()
            .into_iter()
            .map(|len| r.f32s(len))
            .collect::<Result<Vec<_>>>()?;
        let running = match spec {
            LayerSpec::BatchNorm { c, .. } => vec![r.f32s(c)?, r.f32s(c)?],
            _ => vec![],
        };
        layers.push(Layer { spec, params, running });
    }
    if r.pos != bytes.len() {
        return Err(Error::BadModel(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let model = Model {
        side,
        layers,
        bottleneck,
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &Model<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = Model::<f32>::autoencoder(64, 4).unwrap();
        m.layers[13].running[0][2] = 0.375;
        let bytes = encode_model(&m);
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(encode_model(&back), bytes);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tkae");
        save_model(&m, &p).unwrap();
        assert_eq!(load_model(&p).unwrap(), m);
    }

    #[test]
    fn header_errors() {
        let bytes = encode_model(&Model::<f32>::autoencoder(16, 4).unwrap());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_model(&bad), Err(Error::BadModel(_))));
        let mut v = bytes.clone();
        v[4..8].copy_from_slice(&255u32.to_le_bytes());
        let err = decode_model(&v).unwrap_err();
        assert!(err.to_string().contains("unsupported version"));
        assert!(decode_model(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        assert!(load_model("/nonexistent/m.tkae").is_err());
    }
}
