//! Line-delimited JSON protocol spoken with external embedding processes.
//!
//! The child writes one handshake line on startup:
//!
//! ```text
//! {"protocol": 1, "dim": D}
//! ```
//!
//! then answers each request line
//!
//! ```text
//! {"id": 7, "height": 112, "width": 112, "channels": 3, "pixels": "<base64>"}
//! ```
//!
//! with either `{"id": 7, "embedding": "<base64>"}` or
//! `{"id": 7, "error": "<message>"}`. Pixel and embedding payloads are
//! 32-bit little-endian floats, base64 (standard alphabet, padded); pixels are
//! row-major `height × width × channels` in the `[-1, 1]` convention.
//! Responses may arrive in any order; ids pair them with requests.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::SpatialImage;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: u32,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: String,
}

impl Request {
    pub fn for_image(id: u64, image: &SpatialImage) -> Self {
        Request {
            id,
            height: image.height(),
            width: image.width(),
            channels: image.channels(),
            pixels: STANDARD.encode(image.to_f32_le_bytes()),
        }
    }

    pub fn decode_pixels(&self) -> Result<Vec<f32>> {
        let values = decode_f32s(&self.pixels)?;
        let expected = self.height * self.width * self.channels;
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "request {} carries {} pixels, header says {expected}",
                self.id,
                values.len()
            )));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Embedding { id: u64, embedding: String },
    Error { id: u64, error: String },
}

impl Response {
    pub fn id(&self) -> u64 {
        match self {
            Response::Embedding { id, .. } | Response::Error { id, .. } => *id,
        }
    }

    pub fn embedding(id: u64, values: &[f32]) -> Self {
        Response::Embedding {
            id,
            embedding: encode_f32s(values),
        }
    }
}

pub fn encode_f32s(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_f32s(payload: &str) -> Result<Vec<f32>> {
    let bytes = STANDARD
        .decode(payload)
        .map_err(|e| Error::BackendIo(format!("bad base64 payload: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::BackendIo(format!(
            "payload of {} bytes is not a whole number of f32 values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_layout_is_row_major_hwc() {
        let img = SpatialImage::from_fn(2, 3, 3, |r, c, ch| (r * 100 + c * 10 + ch) as f64 / 1000.0).unwrap();
        let req = Request::for_image(9, &img);
        let line = serde_json::to_string(&req).unwrap();
        assert!(line.starts_with(r#"{"id":9,"height":2,"width":3,"channels":3,"pixels":""#));
        let px = req.decode_pixels().unwrap();
        assert_eq!(px.len(), 18);
        assert_eq!(px[0], 0.0);
        assert_eq!(px[1], 0.001f32);
        assert_eq!(px[3], 0.010f32);
        assert_eq!(px[9], 0.100f32);
    }

    #[test]
    fn payload_bytes_are_little_endian() {
        // 1.0f32 = 0x3F800000, little-endian 00 00 80 3F.
        assert_eq!(encode_f32s(&[1.0]), STANDARD.encode([0x00, 0x00, 0x80, 0x3F]));
        assert!(decode_f32s(&STANDARD.encode([1, 2, 3])).is_err());
    }

    #[test]
    fn responses_parse_by_shape() {
        let ok: Response = serde_json::from_str(r#"{"id":3,"embedding":"AACAPw=="}"#).unwrap();
        assert_eq!(ok.id(), 3);
        assert_eq!(ok, Response::embedding(3, &[1.0]));
        let err: Response = serde_json::from_str(r#"{"id":4,"error":"boom"}"#).unwrap();
        assert_eq!(err, Response::Error { id: 4, error: "boom".into() });
        let hs: Handshake = serde_json::from_str(r#"{"protocol":1,"dim":512}"#).unwrap();
        assert_eq!(hs, Handshake { protocol: 1, dim: 512 });
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn f32_payload_round_trips_bit_exactly(values in prop::collection::vec(any::<f32>(), 0..64)) {
            let back = decode_f32s(&encode_f32s(&values)).unwrap();
            prop_assert_eq!(
                back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
