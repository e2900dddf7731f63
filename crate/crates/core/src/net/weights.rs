//! Weight file format, little-endian throughout:
//!
//! ```text
//! "CNW1"
//! u32 tensor count
//! per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 dims, f32 payload
//! u32 CRC32 (IEEE) of every byte between the magic and the checksum
//! ```

use std::path::Path;

use super::network::{Arch, NetKind, NetworkDef};
use super::NetError;

const MAGIC: &[u8; 4] = b"CNW1";

/// Every layer name either network can contain.
const KNOWN_LAYERS: &[&str] = &[
    "conv1a", "conv1b", "conv2a", "conv2b", "conv3a", "conv3b", "conv4a", "conv4b", "convPa", "convPb", "convCa",
    "convCb", "bottleneck", "logits",
];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

pub fn encode_weights(net: &NetworkDef<f32>) -> Vec<u8> {
    let layout = net.tensor_layout();
    let mut body = Vec::new();
    body.extend_from_slice(&(layout.len() as u32).to_le_bytes());
    let tensors = net.layers().filter(|l| l.spec.has_params()).flat_map(|l| [&l.weight, &l.bias]);
    for ((name, dims), data) in layout.iter().zip(tensors) {
        body.extend_from_slice(&(name.len() as u16).to_le_bytes());
        body.extend_from_slice(name.as_bytes());
        body.push(dims.len() as u8);
        for &d in dims {
            body.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in data {
            body.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(NetError::UnexpectedEof)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NetError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, NetError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<Vec<NamedTensor>, NetError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(NetError::BadMagic);
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| NetError::Format("tensor name is not UTF-8".into()))?
            .to_owned();
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let n: usize = dims.iter().product();
        let payload = r.take(n.checked_mul(4).ok_or(NetError::UnexpectedEof)?)?;
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        tensors.push(NamedTensor { name, dims, data });
    }
    let body_end = r.pos;
    let stored = r.u32()?;
    if crc32fast::hash(&bytes[4..body_end]) != stored {
        return Err(NetError::ChecksumMismatch);
    }
    if r.pos != bytes.len() {
        return Err(NetError::Format(format!("{} trailing bytes after checksum", bytes.len() - r.pos)));
    }
    Ok(tensors)
}

/// Copy tensors into an existing network definition. Names outside the
/// known layer vocabulary are rejected as unknown; tensors that belong to a
/// different architecture, or have different dimensions, are a shape
/// mismatch.
pub fn load_into(net: &mut NetworkDef<f32>, tensors: &[NamedTensor]) -> Result<(), NetError> {
    let layout = net.tensor_layout();
    for t in tensors {
        let layer = t.name.rsplit_once('.').map(|(l, _)| l).unwrap_or(&t.name);
        if !KNOWN_LAYERS.contains(&layer) || !(t.name.ends_with(".weight") || t.name.ends_with(".bias")) {
            return Err(NetError::UnknownLayer(t.name.clone()));
        }
        match layout.iter().find(|(n, _)| *n == t.name) {
            None => {
                return Err(NetError::ShapeMismatch(format!("{} does not exist in this network", t.name)));
            }
            Some((_, dims)) if *dims != t.dims => {
                return Err(NetError::ShapeMismatch(format!("{}: file has {:?}, network expects {:?}", t.name, t.dims, dims)));
            }
            Some(_) => {}
        }
    }
    for (name, _) in &layout {
        if !tensors.iter().any(|t| &t.name == name) {
            return Err(NetError::ShapeMismatch(format!("{name} missing from weight file")));
        }
    }
    for layer in net.layers_mut().filter(|l| l.spec.has_params()) {
        let find = |suffix: &str| {
            let name = format!("{}.{suffix}", layer.spec.name);
            tensors.iter().find(|t| t.name == name).map(|t| t.data.clone()).expect("presence checked")
        };
        layer.weight = find("weight");
        layer.bias = find("bias");
    }
    Ok(())
}

/// Rebuild the architecture from the tensor dimensions.
pub fn infer_network(tensors: &[NamedTensor]) -> Result<NetworkDef<f32>, NetError> {
    let out_ch = |name: &str| -> Result<usize, NetError> {
        tensors
            .iter()
            .find(|t| t.name == name)
            .and_then(|t| t.dims.last().copied())
            .ok_or_else(|| NetError::ShapeMismatch(format!("{name} missing from weight file")))
    };
    let kind = if tensors.iter().any(|t| t.name == "logits.weight") { NetKind::RefineNet } else { NetKind::CharucoNet };
    let head = match kind {
        NetKind::CharucoNet => out_ch("convPa.weight")?,
        // RefineNet has no head convolution; keep the conventional width.
        NetKind::RefineNet => 2 * out_ch("conv4a.weight")?,
    };
    let arch = Arch {
        conv1: out_ch("conv1a.weight")?,
        conv2: out_ch("conv2a.weight")?,
        conv3: out_ch("conv3a.weight")?,
        conv4: out_ch("conv4a.weight")?,
        head,
    };
    let mut net = match kind {
        NetKind::CharucoNet => NetworkDef::charuconet(arch),
        NetKind::RefineNet => NetworkDef::refinenet(arch),
    };
    load_into(&mut net, tensors)?;
    Ok(net)
}

pub fn save_weights(net: &NetworkDef<f32>, path: impl AsRef<Path>) -> Result<(), NetError> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(net)).map_err(|source| NetError::Io { path: path.display().to_string(), source })
}

pub fn read_weight_file(path: impl AsRef<Path>) -> Result<Vec<NamedTensor>, NetError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| NetError::Io { path: path.display().to_string(), source })?;
    decode_weights(&bytes)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<NetworkDef<f32>, NetError> {
    infer_network(&read_weight_file(path)?)
}
