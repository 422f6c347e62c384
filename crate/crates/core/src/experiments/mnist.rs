//! MNIST in the IDX container, downsampled to 7×7 by averaging 4×4 blocks.

use crate::error::{Error, Result};
use crate::kernels::Sample;
use rand::Rng;
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const BLOCK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Format {
            offset: offset as u64,
            message: "unexpected end of file in header".into(),
        })
}

fn check_magic(bytes: &[u8], want: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != want {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic number {magic:#010x}, expected {want:#010x}"),
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    if bytes.len() < start + len {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            message: format!("truncated data: expected {len} bytes from offset {start}"),
        });
    }
    Ok(&bytes[start..start + len])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let pixels = payload(bytes, 16, count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

/// Averages disjoint `4×4` blocks and scales to `[0, 1]`.
pub fn downsample(image: &[u8], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows % BLOCK != 0 || cols % BLOCK != 0 || image.len() != rows * cols {
        return Err(Error::domain(format!(
            "image of {rows}×{cols} cannot be split into {BLOCK}×{BLOCK} blocks"
        )));
    }
    let (r, c) = (rows / BLOCK, cols / BLOCK);
    let mut out = vec![0.0; r * c];
    for i in 0..rows {
        for j in 0..cols {
            out[(i / BLOCK) * c + j / BLOCK] += image[i * cols + j] as f64;
        }
    }
    let scale = 255.0 * (BLOCK * BLOCK) as f64;
    out.iter_mut().for_each(|v| *v /= scale);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistPool {
    pub points: Sample,
    pub labels: Vec<u8>,
    odd: Vec<usize>,
}

impl MnistPool {
    pub fn new(points: Sample, labels: Vec<u8>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch(points.len(), labels.len()));
        }
        let odd = (0..labels.len()).filter(|&i| labels[i] % 2 == 1).collect();
        Ok(MnistPool {
            points,
            labels,
            odd,
        })
    }

    pub fn from_idx(images: &[u8], labels: &[u8]) -> Result<Self> {
        let img = parse_idx_images(images)?;
        let lab = parse_idx_labels(labels)?;
        if img.count != lab.len() {
            return Err(Error::DimensionMismatch(img.count, lab.len()));
        }
        let size = img.rows * img.cols;
        let mut data = Vec::with_capacity(img.count * size / (BLOCK * BLOCK));
        for k in 0..img.count {
            data.extend(downsample(&img.pixels[k * size..(k + 1) * size], img.rows, img.cols)?);
        }
        let dim = size / (BLOCK * BLOCK);
        MnistPool::new(Sample::new(dim.max(1), data)?, lab)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_counts(&self) -> [usize; 10] {
        let mut c = [0; 10];
        for &l in &self.labels {
            if (l as usize) < 10 {
                c[l as usize] += 1;
            }
        }
        c
    }

    pub(crate) fn check_usable(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::domain("MNIST pool is empty"));
        }
        if self.odd.is_empty() {
            return Err(Error::domain("MNIST pool has no odd digits"));
        }
        Ok(())
    }

    /// `2n` draws with replacement from all digits and `2n` from the odd
    /// digits (all digits in null mode).
    pub fn draw_pair<R: Rng + ?Sized>(
        &self,
        n: usize,
        null_mode: bool,
        rng: &mut R,
    ) -> Result<(Sample, Sample)> {
        let (x, y, _) = gen_mnist_pair(self, n, null_mode, rng)?;
        Ok((x, y))
    }

    fn draw<R: Rng + ?Sized>(&self, m: usize, odd_only: bool, rng: &mut R) -> Result<(Sample, Vec<u8>)> {
        self.check_usable()?;
        let idx: Vec<usize> = if odd_only {
            (0..m).map(|_| self.odd[rng.random_range(0..self.odd.len())]).collect()
        } else {
            (0..m).map(|_| rng.random_range(0..self.len())).collect()
        };
        self.gather(&idx)
    }

    fn gather(&self, idx: &[usize]) -> Result<(Sample, Vec<u8>)> {
        let dim = self.points.dim();
        let mut data = Vec::with_capacity(idx.len() * dim);
        for &i in idx {
            data.extend_from_slice(self.points.point(i));
        }
        Ok((
            Sample::new(dim, data)?,
            idx.iter().map(|&i| self.labels[i]).collect(),
        ))
    }
}

pub fn load_mnist_downsampled(images_path: &Path, labels_path: &Path) -> Result<MnistPool> {
    let read = |p: &Path| {
        std::fs::read(p).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        })
    };
    MnistPool::from_idx(&read(images_path)?, &read(labels_path)?)
}

/// Like [`MnistPool::draw_pair`] but also returns the labels of `Y`.
pub fn gen_mnist_pair<R: Rng + ?Sized>(
    pool: &MnistPool,
    n: usize,
    null_mode: bool,
    rng: &mut R,
) -> Result<(Sample, Sample, Vec<u8>)> {
    let (x, _) = pool.draw(2 * n, false, rng)?;
    let (y, labels) = pool.draw(2 * n, !null_mode, rng)?;
    Ok((x, y, labels))
}
