//! 8-bit binary PGM (P5) export and import. The top image row is the grid's
//! highest row so images appear with +y up.

use super::{GridGeometry, MapError, OccupancyGrid};

/// Encodes values in `[0, 1]` as `round(255·v)`.
pub fn encode_pgm(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in (0..height).rev() {
        for col in 0..width {
            let v = values[row * width + col].clamp(0.0, 1.0);
            out.push((255.0 * v).round() as u8);
        }
    }
    out
}

pub fn grid_to_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    encode_pgm(grid.geometry.width, grid.geometry.height, &grid.cells)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], MapError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(MapError::Pgm("truncated header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_num(tok: &[u8]) -> Result<usize, MapError> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| MapError::Pgm(format!("bad number {:?}", String::from_utf8_lossy(tok))))
}

/// Decodes a P5 image into `(width, height, values in [0, 1])`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), MapError> {
    let mut pos = 0;
    if next_token(bytes, &mut pos)? != b"P5" {
        return Err(MapError::Pgm("not a P5 image".into()));
    }
    let width = parse_num(next_token(bytes, &mut pos)?)?;
    let height = parse_num(next_token(bytes, &mut pos)?)?;
    let maxval = parse_num(next_token(bytes, &mut pos)?)?;
    if maxval == 0 || maxval > 255 {
        return Err(MapError::Pgm(format!("unsupported maxval {maxval}")));
    }
    pos += 1;
    let data = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| MapError::Pgm("truncated pixel data".into()))?;
    let mut values = vec![0.0; width * height];
    for (k, b) in data.iter().enumerate() {
        let (img_row, col) = (k / width, k % width);
        let row = height - 1 - img_row;
        values[row * width + col] = *b as f64 / maxval as f64;
    }
    Ok((width, height, values))
}

/// Reads a PGM fixture into a grid at the given placement.
pub fn grid_from_pgm(
    bytes: &[u8],
    resolution: f64,
    origin: crate::geometry::Pose2D,
) -> Result<OccupancyGrid, MapError> {
    let (width, height, cells) = decode_pgm(bytes)?;
    Ok(OccupancyGrid {
        geometry: GridGeometry {
            width,
            height,
            resolution,
            origin,
        },
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;

    #[test]
    fn binary_grid_round_trips() {
        let geo = GridGeometry::centered(7, 0.1);
        let mut g = OccupancyGrid::new(geo);
        g.cells[3] = 1.0;
        g.cells[40] = 1.0;
        let bytes = grid_to_pgm(&g);
        assert!(bytes.starts_with(b"P5\n7 7\n255\n"));
        let back = grid_from_pgm(&bytes, 0.1, geo.origin).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn header_comments_and_errors() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x00\xff";
        let (w, h, v) = decode_pgm(bytes).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(v, vec![0.0, 1.0]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\x00").is_err());
        assert!(grid_from_pgm(b"", 0.1, Pose2D::default()).is_err());
    }
}
