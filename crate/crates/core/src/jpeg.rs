//! Baseline-JPEG luminance path up to quantization: level shift, 8x8 DCT-II,
//! quality-scaled quantization. No entropy coding.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::GrayImage;

pub const BLOCK: usize = 8;

/// ITU-T T.81 Table K.1, row-major.
pub const BASE_LUMINANCE_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JpegError {
    #[error("quality factor {0} outside 1..=100")]
    QfOutOfRange(u32),
}

/// 8x8 quantizer divisors, row-major, each in `1..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantTable(pub [u16; 64]);

impl QuantTable {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.0[row * BLOCK + col]
    }
}

/// Luminance table for a quality factor, using the libjpeg scaling rule.
pub fn quant_table_for_qf(qf: u32) -> Result<QuantTable, JpegError> {
    if !(1..=100).contains(&qf) {
        return Err(JpegError::QfOutOfRange(qf));
    }
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut table = [0u16; 64];
    for (out, &base) in table.iter_mut().zip(BASE_LUMINANCE_TABLE.iter()) {
        let v = (u32::from(base) * scale + 50) / 100;
        *out = v.clamp(1, 255) as u16;
    }
    Ok(QuantTable(table))
}

/// Real DCT coefficients of one block, row-major; index 0 is DC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffBlock(pub [f64; 64]);

impl CoeffBlock {
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.0[u * BLOCK + v]
    }
}

/// `basis[u][x] = C(u)/2 * cos((2x+1)uπ/16)`, so the 2-D transform is
/// `basis · f · basisᵀ`.
fn dct_basis() -> &'static [[f64; BLOCK]; BLOCK] {
    use std::sync::OnceLock;
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; BLOCK]; BLOCK];
        for (u, row) in b.iter_mut().enumerate() {
            let cu = if u == 0 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            };
            for (x, val) in row.iter_mut().enumerate() {
                let angle = ((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0;
                *val = 0.5 * cu * angle.cos();
            }
        }
        b
    })
}

/// Orthonormal 2-D DCT-II of a level-shifted block (row-major, `f[x*8+y]`).
///
/// `F(u,v) = ¼ C(u) C(v) Σx Σy f(x,y) cos((2x+1)uπ/16) cos((2y+1)vπ/16)`,
/// evaluated separably.
pub fn forward_dct_block(block: &[f64; 64]) -> CoeffBlock {
    let basis = dct_basis();
    // rows first: tmp[x][v] = Σy f[x][y] basis[v][y]
    let mut tmp = [0.0f64; 64];
    for x in 0..BLOCK {
        for v in 0..BLOCK {
            let mut acc = 0.0;
            for y in 0..BLOCK {
                acc += block[x * BLOCK + y] * basis[v][y];
            }
            tmp[x * BLOCK + v] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            let mut acc = 0.0;
            for x in 0..BLOCK {
                acc += basis[u][x] * tmp[x * BLOCK + v];
            }
            out[u * BLOCK + v] = acc;
        }
    }
    CoeffBlock(out)
}

/// Nonzero quantized AC coefficients of one image at one quality factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientStream {
    pub values: Vec<i32>,
    pub qf: u32,
    pub n_blocks: usize,
}

impl CoefficientStream {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Debug dump, one integer per line.
    pub fn write_text<W: Write>(&self, mut sink: W) -> io::Result<()> {
        for v in &self.values {
            writeln!(sink, "{v}")?;
        }
        sink.flush()
    }
}

/// Level-shifted 8x8 tile at block coordinates `(bx, by)`, with edge
/// replication past the right and bottom borders.
fn load_tile(image: &GrayImage, bx: usize, by: usize) -> [f64; 64] {
    let mut tile = [0.0; 64];
    let (w, h) = (image.width(), image.height());
    for r in 0..BLOCK {
        let y = (by * BLOCK + r).min(h - 1);
        for c in 0..BLOCK {
            let x = (bx * BLOCK + c).min(w - 1);
            tile[r * BLOCK + c] = f64::from(image.get(x, y)) - 128.0;
        }
    }
    tile
}

/// All quantized blocks (DC included, zeros kept) in raster-block order.
///
/// Values are rounded half away from zero.
pub fn quantized_blocks(image: &GrayImage, qf: u32) -> Result<Vec<[i32; 64]>, JpegError> {
    let table = quant_table_for_qf(qf)?;
    let bw = image.width().div_ceil(BLOCK);
    let bh = image.height().div_ceil(BLOCK);
    let mut blocks = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let coeffs = forward_dct_block(&load_tile(image, bx, by));
            let mut q = [0i32; 64];
            for (i, out) in q.iter_mut().enumerate() {
                *out = (coeffs.0[i] / f64::from(table.0[i])).round() as i32;
            }
            blocks.push(q);
        }
    }
    Ok(blocks)
}

/// Quantizes the image at `qf` and keeps the nonzero AC coefficients, block
/// by block, each block in row-major order.
pub fn extract_coefficients(image: &GrayImage, qf: u32) -> Result<CoefficientStream, JpegError> {
    let blocks = quantized_blocks(image, qf)?;
    let values = blocks
        .iter()
        .flat_map(|b| b[1..].iter().copied().filter(|&c| c != 0))
        .collect();
    Ok(CoefficientStream {
        values,
        qf,
        n_blocks: blocks.len(),
    })
}
