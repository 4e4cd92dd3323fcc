//! Deterministic toy data sources: 2-D Gaussian mixtures for mode-collapse
//! study, and small grayscale images parsed from IDX containers and rescaled
//! into the [−1, 1] training domain.
//!
//! Sampling is counter-based: sample `i` depends only on the seed and `i`,
//! never on batch partitioning.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds::mix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("grid mixture needs a square mode count, got {0}")]
    NonSquareGrid(usize),
    #[error("invalid mixture spec: {0}")]
    BadSpec(String),
    #[error("idx io: {0}")]
    Io(#[from] std::io::Error),
    #[error("idx parse at byte {offset}: {detail}")]
    BadIdx { offset: usize, detail: String },
    #[error("target {th}x{tw} does not divide source {sh}x{sw} for block-mean pooling")]
    NonDivisible {
        th: usize,
        tw: usize,
        sh: usize,
        sw: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureKind {
    Ring,
    Grid,
    SwissRoll,
}

/// A 2-D Gaussian mixture with explicit mode centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub kind: MixtureKind,
    pub n_modes: usize,
    /// Ring radius, grid half-width, or swiss-roll scale.
    pub extent: f64,
    /// Per-component isotropic standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl MixtureSpec {
    /// The default toy benchmark: 8 modes on a ring with σ = 0.02·radius,
    /// small enough that vanilla GANs visibly drop modes. The radius sits
    /// inside the tanh-bounded generator range with headroom.
    pub fn ring8(seed: u64) -> Self {
        MixtureSpec {
            kind: MixtureKind::Ring,
            n_modes: 8,
            extent: 0.8,
            sigma: 0.016,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_modes < 1 {
            return Err(DataError::BadSpec("n_modes must be >= 1".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(DataError::BadSpec(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.kind == MixtureKind::Grid {
            let side = (self.n_modes as f64).sqrt().round() as usize;
            if side * side != self.n_modes {
                return Err(DataError::NonSquareGrid(self.n_modes));
            }
        }
        Ok(())
    }

    pub fn mode_centers(&self) -> Vec<[f64; 2]> {
        match self.kind {
            MixtureKind::Ring => (0..self.n_modes)
                .map(|k| {
                    let angle = 2.0 * PI * k as f64 / self.n_modes as f64;
                    [self.extent * angle.cos(), self.extent * angle.sin()]
                })
                .collect(),
            MixtureKind::Grid => {
                let side = (self.n_modes as f64).sqrt().round() as usize;
                let mut centers = Vec::with_capacity(self.n_modes);
                for r in 0..side {
                    for c in 0..side {
                        let coord = |i: usize| {
                            if side == 1 {
                                0.0
                            } else {
                                -self.extent + 2.0 * self.extent * i as f64 / (side - 1) as f64
                            }
                        };
                        centers.push([coord(c), coord(r)]);
                    }
                }
                centers
            }
            MixtureKind::SwissRoll => {
                // Mode centers along the spiral t·(cos t, sin t)/t_max, t in
                // [1.5π, 4.5π], scaled to the configured extent.
                let t0 = 1.5 * PI;
                let t1 = 4.5 * PI;
                (0..self.n_modes)
                    .map(|k| {
                        let frac = if self.n_modes == 1 {
                            0.0
                        } else {
                            k as f64 / (self.n_modes - 1) as f64
                        };
                        let t = t0 + (t1 - t0) * frac;
                        let scale = self.extent / t1;
                        [scale * t * t.cos(), scale * t * t.sin()]
                    })
                    .collect()
            }
        }
    }

    /// Mean per-dimension standard deviation of the mixture, from the mode
    /// centers plus the component σ. Used to express ε in data units.
    pub fn per_dim_std(&self) -> f64 {
        let centers = self.mode_centers();
        let n = centers.len() as f64;
        let mut std_sum = 0.0;
        for d in 0..2 {
            let mean: f64 = centers.iter().map(|c| c[d]).sum::<f64>() / n;
            let var: f64 =
                centers.iter().map(|c| (c[d] - mean).powi(2)).sum::<f64>() / n + self.sigma.powi(2);
            std_sum += var.sqrt();
        }
        std_sum / 2.0
    }
}

fn mixture_point(spec: &MixtureSpec, centers: &[[f64; 2]], seed: u64, index: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, index));
    let mode = rng.random_range(0..centers.len());
    let gx: f64 = rng.sample(rand_distr::StandardNormal);
    let gy: f64 = rng.sample(rand_distr::StandardNormal);
    [
        centers[mode][0] + spec.sigma * gx,
        centers[mode][1] + spec.sigma * gy,
    ]
}

/// Draw `n` points (flat `[n, 2]` row-major). Mode choice is uniform, then
/// an isotropic Gaussian around the chosen center. Sample `i` depends only
/// on `(seed, i)`.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Vec<f64>, DataError> {
    spec.validate()?;
    let centers = spec.mode_centers();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let p = mixture_point(spec, &centers, seed, i as u64);
        out.push(p[0]);
        out.push(p[1]);
    }
    Ok(out)
}

/// A source of training rows, addressable by absolute sample index.
pub trait DataSource {
    fn data_dim(&self) -> usize;
    fn sample_row(&self, index: u64, out: &mut [f64]);
    /// Domain box the data lives in, when one exists (images: [−1, 1]).
    fn domain(&self) -> Option<(f64, f64)>;
    /// The underlying mixture, when mode metrics apply.
    fn mixture_spec(&self) -> Option<&MixtureSpec> {
        None
    }

    fn sample_batch(&self, start: u64, m: usize) -> Vec<f64> {
        let d = self.data_dim();
        let mut out = vec![0.0; m * d];
        for i in 0..m {
            self.sample_row(start + i as u64, &mut out[i * d..(i + 1) * d]);
        }
        out
    }
}

impl DataSource for MixtureSpec {
    fn data_dim(&self) -> usize {
        2
    }

    fn sample_row(&self, index: u64, out: &mut [f64]) {
        let centers = self.mode_centers();
        let p = mixture_point(self, &centers, self.seed, index);
        out[0] = p[0];
        out[1] = p[1];
    }

    fn domain(&self) -> Option<(f64, f64)> {
        None
    }

    fn mixture_spec(&self) -> Option<&MixtureSpec> {
        Some(self)
    }
}

// ── IDX image container ──────────────────────────────────────────────

/// IDX magic for an unsigned-byte rank-3 tensor.
pub const IDX_MAGIC_U8_3D: u32 = 0x0000_0803;

/// Raw uint8 images as stored in an IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawIdx {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

/// Parse an IDX file: big-endian magic 0x00000803, big-endian u32 dims
/// `[n, rows, cols]`, then the row-major byte payload. The byte count must
/// match exactly.
pub fn load_idx(path: &Path) -> Result<RawIdx, DataError> {
    let buf = fs::read(path)?;
    parse_idx(&buf)
}

pub fn parse_idx(buf: &[u8]) -> Result<RawIdx, DataError> {
    let be_u32 = |off: usize, what: &str| -> Result<u32, DataError> {
        if off + 4 > buf.len() {
            return Err(DataError::BadIdx {
                offset: off,
                detail: format!("truncated while reading {what}"),
            });
        }
        Ok(u32::from_be_bytes(buf[off..off + 4].try_into().unwrap()))
    };
    let magic = be_u32(0, "magic")?;
    if magic != IDX_MAGIC_U8_3D {
        return Err(DataError::BadIdx {
            offset: 0,
            detail: format!("bad magic {magic:#010x}, expected {IDX_MAGIC_U8_3D:#010x} (unsigned byte, 3-D)"),
        });
    }
    let n = be_u32(4, "image count")? as usize;
    let rows = be_u32(8, "row count")? as usize;
    let cols = be_u32(12, "col count")? as usize;
    let expected = 16 + n * rows * cols;
    if buf.len() != expected {
        return Err(DataError::BadIdx {
            offset: buf.len().min(expected),
            detail: format!(
                "payload length mismatch: expected {expected} bytes total, file has {}",
                buf.len()
            ),
        });
    }
    Ok(RawIdx {
        n,
        rows,
        cols,
        pixels: buf[16..].to_vec(),
    })
}

/// Write images back out in the same container (fixtures and examples).
pub fn write_idx(path: &Path, images: &RawIdx) -> Result<(), DataError> {
    let mut buf = Vec::with_capacity(16 + images.pixels.len());
    buf.extend_from_slice(&IDX_MAGIC_U8_3D.to_be_bytes());
    buf.extend_from_slice(&(images.n as u32).to_be_bytes());
    buf.extend_from_slice(&(images.rows as u32).to_be_bytes());
    buf.extend_from_slice(&(images.cols as u32).to_be_bytes());
    buf.extend_from_slice(&images.pixels);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Images rescaled into [−1, 1], flattened row-major per image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub n: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl ImageSet {
    pub fn image(&self, i: usize) -> &[f64] {
        let d = self.height * self.width;
        &self.pixels[i * d..(i + 1) * d]
    }
}

/// Block-mean pool each image down to `target_h × target_w` (targets must
/// divide the source dims), then map p ∈ [0, 255] to 2p/255 − 1.
pub fn rescale_and_downsample(
    raw: &RawIdx,
    target_h: usize,
    target_w: usize,
) -> Result<ImageSet, DataError> {
    if target_h == 0
        || target_w == 0
        || raw.rows % target_h != 0
        || raw.cols % target_w != 0
    {
        return Err(DataError::NonDivisible {
            th: target_h,
            tw: target_w,
            sh: raw.rows,
            sw: raw.cols,
        });
    }
    let bh = raw.rows / target_h;
    let bw = raw.cols / target_w;
    let block = (bh * bw) as f64;
    let mut pixels = Vec::with_capacity(raw.n * target_h * target_w);
    for img in 0..raw.n {
        let base = img * raw.rows * raw.cols;
        for tr in 0..target_h {
            for tc in 0..target_w {
                let mut acc = 0.0;
                for r in 0..bh {
                    for c in 0..bw {
                        let row = tr * bh + r;
                        let col = tc * bw + c;
                        acc += raw.pixels[base + row * raw.cols + col] as f64;
                    }
                }
                let mean = acc / block;
                pixels.push(2.0 * mean / 255.0 - 1.0);
            }
        }
    }
    Ok(ImageSet {
        n: raw.n,
        height: target_h,
        width: target_w,
        pixels,
    })
}

/// An [`ImageSet`] made sampleable: row `i` picks a deterministic image.
#[derive(Debug, Clone)]
pub struct ImageSource {
    pub set: ImageSet,
    pub seed: u64,
}

impl DataSource for ImageSource {
    fn data_dim(&self) -> usize {
        self.set.height * self.set.width
    }

    fn sample_row(&self, index: u64, out: &mut [f64]) {
        let pick = (mix(self.seed, index) % self.set.n as u64) as usize;
        out.copy_from_slice(self.set.image(pick));
    }

    fn domain(&self) -> Option<(f64, f64)> {
        Some((-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_degenerate_sigma_hits_centers() {
        let spec = MixtureSpec {
            kind: MixtureKind::Ring,
            n_modes: 8,
            extent: 2.0,
            sigma: 1e-9,
            seed: 1,
        };
        let pts = sample_mixture(&spec, 200, 3).unwrap();
        let centers = spec.mode_centers();
        for p in pts.chunks_exact(2) {
            let near = centers
                .iter()
                .map(|c| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 1e-6, "point {p:?} is {near} from nearest center");
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let spec = MixtureSpec::ring8(5);
        let a = sample_mixture(&spec, 64, 9).unwrap();
        let b = sample_mixture(&spec, 64, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_mixture(&spec, 64, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_is_partition_independent() {
        let spec = MixtureSpec::ring8(5);
        let all = spec.sample_batch(0, 32);
        let first = spec.sample_batch(0, 10);
        let rest = spec.sample_batch(10, 22);
        assert_eq!(&all[..20], &first[..]);
        assert_eq!(&all[20..], &rest[..]);
    }

    #[test]
    fn grid_requires_square_mode_count() {
        let spec = MixtureSpec {
            kind: MixtureKind::Grid,
            n_modes: 7,
            extent: 1.0,
            sigma: 0.1,
            seed: 0,
        };
        assert!(matches!(
            sample_mixture(&spec, 4, 0),
            Err(DataError::NonSquareGrid(7))
        ));
    }

    #[test]
    fn grid_centers_form_lattice() {
        let spec = MixtureSpec {
            kind: MixtureKind::Grid,
            n_modes: 9,
            extent: 1.0,
            sigma: 0.1,
            seed: 0,
        };
        let centers = spec.mode_centers();
        assert_eq!(centers.len(), 9);
        assert_eq!(centers[0], [-1.0, -1.0]);
        assert_eq!(centers[4], [0.0, 0.0]);
        assert_eq!(centers[8], [1.0, 1.0]);
    }

    #[test]
    fn idx_roundtrip_exact() {
        let raw = RawIdx {
            n: 2,
            rows: 2,
            cols: 2,
            pixels: vec![0, 64, 128, 255, 1, 2, 3, 4],
        };
        let dir = std::env::temp_dir().join("asgan_idx_test");
        let path = dir.join("t.idx");
        write_idx(&path, &raw).unwrap();
        let back = load_idx(&path).unwrap();
        assert_eq!(raw, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn idx_wrong_magic_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        buf.extend_from_slice(&1u32.to_be_bytes());
        buf.extend_from_slice(&1u32.to_be_bytes());
        buf.extend_from_slice(&1u32.to_be_bytes());
        buf.push(7);
        let err = parse_idx(&buf).unwrap_err();
        assert!(err.to_string().contains("0x00000801"));
    }

    #[test]
    fn idx_truncation_rejected_with_lengths() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&IDX_MAGIC_U8_3D.to_be_bytes());
        buf.extend_from_slice(&2u32.to_be_bytes());
        buf.extend_from_slice(&2u32.to_be_bytes());
        buf.extend_from_slice(&2u32.to_be_bytes());
        buf.extend_from_slice(&[1, 2, 3]); // needs 8
        let err = parse_idx(&buf).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("24") && msg.contains("19"), "got: {msg}");
    }

    #[test]
    fn rescale_endpoints_and_constant() {
        let raw = RawIdx {
            n: 1,
            rows: 2,
            cols: 2,
            pixels: vec![0, 255, 127, 128],
        };
        let set = rescale_and_downsample(&raw, 2, 2).unwrap();
        assert_eq!(set.pixels[0], -1.0);
        assert_eq!(set.pixels[1], 1.0);
        // 127.5-equivalent block under 2x2 pooling
        let pooled = rescale_and_downsample(&raw, 1, 1).unwrap();
        assert!(pooled.pixels[0].abs() < 0.01);

        let constant = RawIdx {
            n: 1,
            rows: 4,
            cols: 4,
            pixels: vec![100; 16],
        };
        let down = rescale_and_downsample(&constant, 2, 2).unwrap();
        let expect = 2.0 * 100.0 / 255.0 - 1.0;
        for &p in &down.pixels {
            assert_eq!(p, expect);
        }
    }

    #[test]
    fn rescale_non_divisible_rejected() {
        let raw = RawIdx {
            n: 1,
            rows: 4,
            cols: 4,
            pixels: vec![0; 16],
        };
        assert!(matches!(
            rescale_and_downsample(&raw, 3, 2),
            Err(DataError::NonDivisible { .. })
        ));
    }

    #[test]
    fn image_source_rows_in_domain() {
        let raw = RawIdx {
            n: 3,
            rows: 2,
            cols: 2,
            pixels: (0..12).map(|i| (i * 20) as u8).collect(),
        };
        let set = rescale_and_downsample(&raw, 2, 2).unwrap();
        let src = ImageSource { set, seed: 4 };
        let batch = src.sample_batch(0, 5);
        for &v in &batch {
            assert!((-1.0..=1.0).contains(&v));
        }
        assert_eq!(src.sample_batch(0, 5), batch);
    }
}
