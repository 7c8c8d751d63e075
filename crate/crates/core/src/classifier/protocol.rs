//! Newline-delimited JSON wire format for out-of-process classifiers.
//!
//! Request: `{"id": u64, "shape": [H, W, C], "data_b64": "..."}` where the
//! payload is little-endian f32 pixels, row-major HWC.
//! Response: `{"id": u64, "label": u32, "confidences": [f32, ...]}`.
//! Exactly one response per request; responses may come back in any order.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagery::Shape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub shape: [usize; 3],
    pub data_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub label: u32,
    pub confidences: Vec<f32>,
}

pub fn encode_pixels(data: &[f32]) -> String {
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_pixels(b64: &str) -> Result<Vec<f32>> {
    let bytes = STANDARD
        .decode(b64)
        .map_err(|e| Error::Protocol(format!("bad base64 payload: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Protocol(format!("payload of {} bytes is not f32-aligned", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

impl Request {
    pub fn new(id: u64, shape: Shape, data: &[f32]) -> Self {
        Request {
            id,
            shape: [shape.height, shape.width, shape.channels],
            data_b64: encode_pixels(data),
        }
    }

    /// Decodes the payload and checks it against the declared shape.
    pub fn pixels(&self) -> Result<(Shape, Vec<f32>)> {
        let [h, w, c] = self.shape;
        let shape = Shape::new(h, w, c).map_err(|e| Error::Protocol(e.to_string()))?;
        let data = decode_pixels(&self.data_b64)?;
        if data.len() != shape.len() {
            return Err(Error::Protocol(format!(
                "payload has {} values, shape {shape} needs {}",
                data.len(),
                shape.len()
            )));
        }
        Ok((shape, data))
    }
}

/// Writes `requests`, then reads exactly as many responses and returns them
/// in request order. The two directions run on separate threads so a peer
/// that answers eagerly cannot deadlock on full pipes.
pub fn exchange<R, W>(reader: &mut R, writer: &mut W, requests: &[Request]) -> Result<Vec<Response>>
where
    R: BufRead + Send,
    W: Write + Send,
{
    let ids: HashMap<u64, usize> = requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    if ids.len() != requests.len() {
        return Err(Error::Input("duplicate request ids in one exchange".into()));
    }
    std::thread::scope(|scope| {
        let sender = scope.spawn(move || -> Result<()> {
            for r in requests {
                serde_json::to_writer(&mut *writer, r)?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
            Ok(())
        });

        let mut slots: Vec<Option<Response>> = vec![None; requests.len()];
        let mut line = String::new();
        let mut received = 0;
        let read_result = (|| -> Result<()> {
            while received < requests.len() {
                line.clear();
                if reader.read_line(&mut line)? == 0 {
                    return Err(Error::Backend(format!(
                        "classifier process closed its output after {received} of {} responses",
                        requests.len()
                    )));
                }
                if line.trim().is_empty() {
                    continue;
                }
                let resp: Response = serde_json::from_str(line.trim())
                    .map_err(|e| Error::Protocol(format!("unparseable response {:?}: {e}", line.trim())))?;
                let slot = *ids
                    .get(&resp.id)
                    .ok_or_else(|| Error::Protocol(format!("response for unknown id {}", resp.id)))?;
                if slots[slot].is_some() {
                    return Err(Error::Protocol(format!("duplicate response for id {}", resp.id)));
                }
                slots[slot] = Some(resp);
                received += 1;
            }
            Ok(())
        })();

        let send_result = sender
            .join()
            .unwrap_or_else(|_| Err(Error::Backend("request writer panicked".into())));
        // a dead peer shows up on both sides; the read error carries more context
        read_result?;
        send_result.map_err(|e| Error::Backend(format!("writing requests failed: {e}")))?;
        Ok(slots.into_iter().map(|s| s.expect("every slot filled")).collect())
    })
}

/// Server side of the protocol: answers each request line with `handler`
/// until the input closes.
pub fn serve<R, W, F>(reader: R, mut writer: W, handler: F) -> Result<()>
where
    R: BufRead,
    W: Write,
    F: Fn(Shape, &[f32]) -> Result<(u32, Vec<f32>)>,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("unparseable request: {e}")))?;
        let (shape, data) = req.pixels()?;
        let (label, confidences) = handler(shape, &data)?;
        serde_json::to_writer(&mut writer, &Response { id: req.id, label, confidences })?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}
