//! Map export: 8-bit binary PGM (0 occupied, 255 free, 128 unknown, first
//! row is the top of the map) plus a JSON sidecar with the metadata needed
//! to turn pixels back into world coordinates.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

use super::geometry::MapCorners;
use super::grid::{CellClass, OccupancyGrid};

pub const PGM_OCCUPIED: u8 = 0;
pub const PGM_FREE: u8 = 255;
pub const PGM_UNKNOWN: u8 = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub image: String,
    pub resolution: f64,
    /// World coordinates of the center of cell (0, 0).
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    pub corners: Option<MapCorners>,
    /// Weighted wall rotation in radians.
    pub rotation: Option<f64>,
    /// World rectangle the map was surveyed in: `[x_min, x_max, y_min, y_max]`.
    pub world_bounds: Option<[f64; 4]>,
}

pub fn encode_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.reserve(grid.width * grid.height);
    for row in 0..grid.height {
        let iy = grid.height - 1 - row;
        for ix in 0..grid.width {
            out.push(match grid.class(ix, iy) {
                CellClass::Occupied => PGM_OCCUPIED,
                CellClass::Free => PGM_FREE,
                CellClass::Unknown => PGM_UNKNOWN,
            });
        }
    }
    out
}

/// Rebuild a grid from PGM bytes. Occupied and free pixels become
/// saturated log-odds; anything else is unknown.
pub fn decode_pgm(bytes: &[u8], resolution: f64, origin: Vec2) -> Result<OccupancyGrid> {
    let bad = |reason: &str| Error::Parse {
        what: "pgm",
        reason: reason.to_string(),
    };
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ascii"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit maps are supported"));
    }
    pos += 1; // single whitespace after maxval
    let data = bytes.get(pos..pos + w * h).ok_or_else(|| bad("pixel data truncated"))?;
    let mut grid = OccupancyGrid::new(resolution, origin, w, h)?;
    let (lo, hi) = (grid.params.min, grid.params.max);
    for row in 0..h {
        let iy = h - 1 - row;
        for ix in 0..w {
            let v = match data[row * w + ix] {
                PGM_OCCUPIED => hi,
                PGM_FREE => lo,
                _ => 0.0,
            };
            grid.set(ix, iy, v);
        }
    }
    Ok(grid)
}

pub fn save_map(grid: &OccupancyGrid, pgm_path: &Path, sidecar: &MapSidecar) -> Result<()> {
    let mut f = std::fs::File::create(pgm_path).map_err(|e| Error::io(pgm_path, e))?;
    f.write_all(&encode_pgm(grid)).map_err(|e| Error::io(pgm_path, e))?;
    let json_path = pgm_path.with_extension("json");
    std::fs::write(&json_path, serde_json::to_string_pretty(sidecar)?).map_err(|e| Error::io(&json_path, e))
}

/// Load `map.pgm` and its `map.json` sidecar.
pub fn load_map(pgm_path: &Path) -> Result<(OccupancyGrid, MapSidecar)> {
    let json_path = pgm_path.with_extension("json");
    let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: MapSidecar = serde_json::from_str(&text)?;
    let bytes = std::fs::read(pgm_path).map_err(|e| Error::io(pgm_path, e))?;
    let grid = decode_pgm(&bytes, sidecar.resolution, sidecar.origin)?;
    if (grid.width, grid.height) != (sidecar.width, sidecar.height) {
        return Err(Error::Parse {
            what: "map sidecar",
            reason: "dimensions disagree with the image".into(),
        });
    }
    Ok((grid, sidecar))
}
