//! Network file format.
//!
//! A JSON body followed by a checksum trailer line:
//!
//! ```text
//! {"format":"fingerloc-network","version":1,"input_shape":[13],
//!  "layers":[{"kind":"dense","inputs":13,"outputs":50},...],
//!  "params":["<base64 of little-endian f64>",...]}
//! sha256:<hex digest of every byte before this line>
//! ```

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{LayerSpec, Network, NnError};
use crate::digest::sha256_hex;

pub const FORMAT_NAME: &str = "fingerloc-network";
pub const FORMAT_VERSION: u32 = 1;
const TRAILER_PREFIX: &str = "sha256:";

#[derive(Serialize, Deserialize)]
struct Body {
    format: String,
    version: u32,
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    params: Vec<String>,
}

fn encode_f64s(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_f64s(text: &str) -> Result<Vec<f64>, NnError> {
    let bytes =
        STANDARD.decode(text).map_err(|e| NnError::Serialization(format!("bad base64 parameter block: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(NnError::Serialization("parameter block is not a whole number of f64s".into()));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

pub fn save_network(network: &Network) -> Vec<u8> {
    let body = Body {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        input_shape: network.input_shape().to_vec(),
        layers: network.specs(),
        params: network.params().iter().map(|p| encode_f64s(p)).collect(),
    };
    let mut out = serde_json::to_vec(&body).expect("network body serializes");
    out.push(b'\n');
    let trailer = format!("{TRAILER_PREFIX}{}\n", sha256_hex(&out));
    out.extend_from_slice(trailer.as_bytes());
    out
}

pub fn load_network(bytes: &[u8]) -> Result<Network, NnError> {
    let err = |m: &str| NnError::Serialization(m.to_string());
    let text = std::str::from_utf8(bytes).map_err(|_| err("network file is not UTF-8"))?;
    let without_nl = text.strip_suffix('\n').ok_or_else(|| err("truncated network file"))?;
    let split = without_nl.rfind('\n').ok_or_else(|| err("missing checksum trailer"))?;
    let (body, trailer) = (&text[..=split], &without_nl[split + 1..]);
    let digest = trailer.strip_prefix(TRAILER_PREFIX).ok_or_else(|| err("missing checksum trailer"))?;
    if digest != sha256_hex(body.as_bytes()) {
        return Err(err("checksum mismatch"));
    }
    let body: Body = serde_json::from_str(body).map_err(|e| NnError::Serialization(e.to_string()))?;
    if body.format != FORMAT_NAME {
        return Err(NnError::Serialization(format!("unknown format {:?}", body.format)));
    }
    if body.version != FORMAT_VERSION {
        return Err(NnError::Serialization(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            body.version
        )));
    }
    let params = body.params.iter().map(|p| decode_f64s(p)).collect::<Result<Vec<_>, _>>()?;
    Network::from_parts(body.input_shape, body.layers, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;
    use crate::seed;
    use rand::Rng as _;

    fn net() -> Network {
        let specs = [
            LayerSpec::Conv2d { in_channels: 1, out_channels: 2, kernel: [3, 3] },
            LayerSpec::Relu,
            LayerSpec::MaxPool2d { window: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: 8, outputs: 2 },
            LayerSpec::Sigmoid,
        ];
        Network::build(vec![1, 6, 6], &specs, &mut seed::rng(5)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let original = net();
        let loaded = load_network(&save_network(&original)).unwrap();
        assert_eq!(loaded, original);
        let mut rng = seed::rng(1);
        for _ in 0..100 {
            let x = Tensor::new(vec![1, 6, 6], (0..36).map(|_| rng.random::<f64>()).collect()).unwrap();
            assert_eq!(original.forward(&x).unwrap(), loaded.forward(&x).unwrap());
        }
    }

    #[test]
    fn empty_network_round_trips() {
        let empty = Network::empty(vec![13]);
        assert_eq!(load_network(&save_network(&empty)).unwrap(), empty);
    }

    #[test]
    fn truncation_and_tampering_fail() {
        let bytes = save_network(&net());
        assert!(load_network(&bytes[..bytes.len() - 10]).is_err());
        assert!(load_network(&bytes[..bytes.len() / 2]).is_err());
        let mut tampered = bytes.clone();
        let pos = tampered.iter().position(|&b| b == b'1').unwrap();
        tampered[pos] = b'2';
        assert!(matches!(load_network(&tampered), Err(NnError::Serialization(_))));
    }

    #[test]
    fn version_mismatch_fails() {
        let bytes = save_network(&Network::empty(vec![2]));
        let text = String::from_utf8(bytes).unwrap();
        let body = text.lines().next().unwrap().replace("\"version\":1", "\"version\":2");
        let forged = format!("{body}\n{TRAILER_PREFIX}{}\n", sha256_hex(format!("{body}\n").as_bytes()));
        let e = load_network(forged.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("version"), "{e}");
    }
}
