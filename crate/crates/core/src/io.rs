// SPDX-License-Identifier: Apache-2.0

//! Segment file formats and atomic file output.
//!
//! `ESEG v1` (all integers and floats little-endian):
//!
//! ```text
//! "ESEG" | version u16 = 1 | K u32 | L u32 | sample_rate f32 | label u8
//!        | patient_id_len u32 | patient_id UTF-8 | K*L f32, row-major
//! ```
//!
//! The CSV variant has one header line `# rate=<Hz> label=<name> patient=<id>`
//! followed by one comma-separated row per channel.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::{EegSegment, Label};
use crate::error::{Error, Result};

pub const ESEG_MAGIC: &[u8; 4] = b"ESEG";
pub const ESEG_VERSION: u16 = 1;

pub fn encode_eseg(segment: &EegSegment) -> Vec<u8> {
    let pid = segment.patient_id.as_bytes();
    let mut out = Vec::with_capacity(23 + pid.len() + 4 * segment.data().len());
    out.extend_from_slice(ESEG_MAGIC);
    out.extend_from_slice(&ESEG_VERSION.to_le_bytes());
    out.extend_from_slice(&(segment.channels() as u32).to_le_bytes());
    out.extend_from_slice(&(segment.len() as u32).to_le_bytes());
    out.extend_from_slice(&segment.sample_rate.to_le_bytes());
    out.push(segment.label.code());
    out.extend_from_slice(&(pid.len() as u32).to_le_bytes());
    out.extend_from_slice(pid);
    for v in segment.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Little-endian cursor over a byte slice, shared by the binary formats.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Self {
            bytes,
            pos: 0,
            format,
        }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.format, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::format(self.format, "string is not UTF-8"))
    }

    pub(crate) fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::format(self.format, "value count overflows"))?,
        )?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::format(self.format, "value count overflows"))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(
                self.format,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

pub(crate) fn put_string(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn decode_eseg(bytes: &[u8]) -> Result<EegSegment> {
    let mut r = Reader::new(bytes, "ESEG");
    if r.take(4)? != ESEG_MAGIC {
        return Err(Error::format("ESEG", "bad magic"));
    }
    let version = r.u16()?;
    if version != ESEG_VERSION {
        return Err(Error::format("ESEG", format!("unsupported version {version}")));
    }
    let k = r.u32()? as usize;
    let l = r.u32()? as usize;
    let rate = r.f32()?;
    let code = r.u8()?;
    let label =
        Label::from_code(code).ok_or_else(|| Error::format("ESEG", format!("unknown label code {code}")))?;
    let patient = r.string()?;
    let data = r.f32s(
        k.checked_mul(l)
            .ok_or_else(|| Error::format("ESEG", "shape overflows"))?,
    )?;
    r.finish()?;
    EegSegment::new(data, k, l, rate, label, patient)
}

pub fn encode_csv(segment: &EegSegment) -> String {
    let mut out = format!(
        "# rate={} label={} patient={}\n",
        segment.sample_rate,
        segment.label.name(),
        segment.patient_id
    );
    for row in segment.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<EegSegment> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|h| h.strip_prefix('#'))
        .ok_or_else(|| Error::format("CSV segment", "missing '# rate=... label=... patient=...' header"))?
        .trim();
    // patient is last and may contain spaces
    let (head, patient) = header
        .split_once("patient=")
        .ok_or_else(|| Error::format("CSV segment", "header lacks patient="))?;
    let mut rate = None;
    let mut label = None;
    for token in head.split_whitespace() {
        match token.split_once('=') {
            Some(("rate", v)) => {
                rate = Some(
                    v.parse::<f32>()
                        .map_err(|_| Error::format("CSV segment", format!("bad rate '{v}'")))?,
                )
            }
            Some(("label", v)) => {
                label = Some(
                    Label::from_name(v)
                        .ok_or_else(|| Error::format("CSV segment", format!("unknown label '{v}'")))?,
                )
            }
            _ => {
                return Err(Error::format(
                    "CSV segment",
                    format!("unexpected header token '{token}'"),
                ))
            }
        }
    }
    let rate = rate.ok_or_else(|| Error::format("CSV segment", "header lacks rate="))?;
    let label = label.ok_or_else(|| Error::format("CSV segment", "header lacks label="))?;

    let mut data = Vec::new();
    let mut channels = 0;
    let mut length = None;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let row: Vec<f32> = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f32>()
                    .map_err(|_| Error::format("CSV segment", format!("bad value '{v}'")))
            })
            .collect::<Result<_>>()?;
        match length {
            None => length = Some(row.len()),
            Some(l) if l != row.len() => {
                return Err(Error::format("CSV segment", "rows have different lengths"))
            }
            _ => {}
        }
        data.extend(row);
        channels += 1;
    }
    EegSegment::new(data, channels, length.unwrap_or(0), rate, label, patient.trim())
}

/// Reads a segment file, choosing the format from the extension
/// (`.csv` for CSV, anything else ESEG).
pub fn read_segment(path: &Path) -> Result<EegSegment> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        decode_csv(&text)
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_eseg(&bytes)
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> EegSegment {
        EegSegment::new(
            vec![0.0, 0.25, 0.5, 1.0, -2.5, 3.125],
            2,
            3,
            128.0,
            Label::Abnormal,
            "patient 7",
        )
        .unwrap()
    }

    #[test]
    fn eseg_header_layout() {
        let bytes = encode_eseg(&sample());
        assert_eq!(&bytes[..4], b"ESEG");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[14..18].try_into().unwrap()), 128.0);
        assert_eq!(bytes[18], 1);
        assert_eq!(u32::from_le_bytes(bytes[19..23].try_into().unwrap()), 9);
        assert_eq!(&bytes[23..32], b"patient 7");
        assert_eq!(bytes.len(), 32 + 6 * 4);
    }

    #[test]
    fn eseg_rejects_corruption() {
        let mut bytes = encode_eseg(&sample());
        assert!(decode_eseg(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(decode_eseg(&bytes).is_err());
        let mut bad = encode_eseg(&sample());
        bad[0] = b'X';
        assert!(decode_eseg(&bad).is_err());
        let mut bad = encode_eseg(&sample());
        bad[18] = 9;
        assert!(decode_eseg(&bad).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = sample();
        let text = encode_csv(&s);
        assert!(text.starts_with("# rate=128 label=abnormal patient=patient 7\n"));
        assert_eq!(decode_csv(&text).unwrap(), s);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let text = "# rate=10 label=normal patient=a\n1,2,3\n4,5\n";
        assert!(decode_csv(text).is_err());
        assert!(decode_csv("1,2\n").is_err());
    }

    proptest! {
        #[test]
        fn eseg_round_trip(
            k in 1usize..5,
            l in 1usize..20,
            seed in any::<u64>(),
            pid in "[a-zA-Z0-9 _-]{0,12}",
            code in 0u8..4,
        ) {
            let mut r = crate::rng::RandomSource::new(seed);
            let data: Vec<f32> = (0..k * l).map(|_| r.normal() as f32).collect();
            let s = EegSegment::new(data, k, l, 256.0, Label::from_code(code).unwrap(), pid).unwrap();
            prop_assert_eq!(decode_eseg(&encode_eseg(&s)).unwrap(), s);
        }
    }
}
