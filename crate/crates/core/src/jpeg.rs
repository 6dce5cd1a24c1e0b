//! Minimal JPEG marker handling: comment segments and frame dimensions.

const SOI: [u8; 2] = [0xFF, 0xD8];
const COM: u8 = 0xFE;
const SOS: u8 = 0xDA;
const MAX_SEGMENT_BODY: usize = 0xFFFF - 2;

pub fn is_jpeg(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && bytes[..2] == SOI && bytes[bytes.len() - 2..] == [0xFF, 0xD9]
}

/// Inserts one COM segment per body directly after SOI.
///
/// Panics if a body exceeds the 65533-byte segment limit.
pub fn insert_comments(jpeg: &[u8], bodies: &[Vec<u8>]) -> Vec<u8> {
    assert!(jpeg.starts_with(&SOI), "not a JPEG stream");
    let extra: usize = bodies.iter().map(|b| b.len() + 4).sum();
    let mut out = Vec::with_capacity(jpeg.len() + extra);
    out.extend_from_slice(&SOI);
    for body in bodies {
        assert!(body.len() <= MAX_SEGMENT_BODY, "comment segment too large");
        out.extend_from_slice(&[0xFF, COM]);
        out.extend_from_slice(&((body.len() + 2) as u16).to_be_bytes());
        out.extend_from_slice(body);
    }
    out.extend_from_slice(&jpeg[2..]);
    out
}

/// Marker segments before the scan data, as `(marker, body)`.
fn segments(jpeg: &[u8]) -> impl Iterator<Item = (u8, &[u8])> {
    let mut pos = if jpeg.starts_with(&SOI) { 2 } else { jpeg.len() };
    std::iter::from_fn(move || {
        while pos + 4 <= jpeg.len() {
            if jpeg[pos] != 0xFF {
                return None;
            }
            let marker = jpeg[pos + 1];
            if marker == 0xFF {
                pos += 1;
                continue;
            }
            if marker == SOS {
                return None;
            }
            let len = u16::from_be_bytes([jpeg[pos + 2], jpeg[pos + 3]]) as usize;
            if len < 2 || pos + 2 + len > jpeg.len() {
                return None;
            }
            let body = &jpeg[pos + 4..pos + 2 + len];
            pos += 2 + len;
            return Some((marker, body));
        }
        None
    })
}

pub fn comments(jpeg: &[u8]) -> Vec<&[u8]> {
    segments(jpeg)
        .filter(|(m, _)| *m == COM)
        .map(|(_, b)| b)
        .collect()
}

/// Width and height from the first start-of-frame segment.
pub fn dimensions(jpeg: &[u8]) -> Option<(u32, u32)> {
    segments(jpeg).find_map(|(marker, body)| {
        let is_sof = matches!(marker, 0xC0..=0xCF) && !matches!(marker, 0xC4 | 0xC8 | 0xCC);
        (is_sof && body.len() >= 5).then(|| {
            let h = u16::from_be_bytes([body[1], body[2]]) as u32;
            let w = u16::from_be_bytes([body[3], body[4]]) as u32;
            (w, h)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_jpeg() -> Vec<u8> {
        let img = image::RgbImage::from_pixel(24, 16, image::Rgb([10, 20, 30]));
        let mut out = Vec::new();
        image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, 80)
            .encode_image(&img)
            .unwrap();
        out
    }

    #[test]
    fn comments_round_trip_and_dimensions() {
        let base = tiny_jpeg();
        assert!(is_jpeg(&base));
        assert_eq!(dimensions(&base), Some((24, 16)));
        let with = insert_comments(&base, &[b"alpha".to_vec(), b"beta".to_vec()]);
        assert!(is_jpeg(&with));
        assert_eq!(comments(&with), vec![&b"alpha"[..], &b"beta"[..]]);
        assert_eq!(dimensions(&with), Some((24, 16)));
        let decoded = image::load_from_memory(&with).unwrap();
        assert_eq!((decoded.width(), decoded.height()), (24, 16));
    }

    #[test]
    fn garbage_has_no_segments() {
        assert!(comments(b"not a jpeg").is_empty());
        assert_eq!(dimensions(&[0xFF, 0xD8, 0xFF]), None);
    }
}
