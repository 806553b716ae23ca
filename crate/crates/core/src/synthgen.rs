//! Synthetic three-source scene with a "U" and an "M" target.
//!
//! * source 1 responds `+1` on the U and `-1` everywhere else;
//! * source 2 responds `-1` on the M and `+1` everywhere else;
//! * source 3 responds `-1` on either letter and `+1` on background.
//!
//! Noise-free pixels therefore read `(+1, +1, -1)` on the U, `(-1, -1, -1)`
//! on the M and `(-1, +1, +1)` on background. The raw sources are blurred,
//! perturbed with Gaussian noise and clamped back into `[-1, 1]`.
//!
//! Both letters sit in a box one fifth of the image wide and tall, vertically
//! centred, the U over columns `[0.2, 0.4)` and the M over `[0.6, 0.8)` of the
//! width. Strokes are 6% of the shorter side. Bags are square tiles; a tile
//! is positive iff it contains at least one letter pixel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::mil::{load_bags, BagLabel, BagSet, InstanceTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("image must be at least 10x10 pixels, got {0}x{1}")]
    Size(usize, usize),
    #[error("tile size must be positive")]
    ZeroTile,
    #[error("tile size {tile} does not divide {width}x{height}")]
    TileMismatch { tile: usize, width: usize, height: usize },
    #[error("{0} must be finite and nonnegative")]
    Sigma(&'static str),
    #[error("mask has {found} pixels, expected {expected}")]
    MaskSize { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Bag tile edge in pixels.
    pub tile: usize,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec { width: 100, height: 100, tile: 10, blur_sigma: 0.5, noise_sigma: 0.02, seed: 0 }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.width < 10 || self.height < 10 {
            return Err(SpecError::Size(self.width, self.height));
        }
        check_tiling(self.width, self.height, self.tile)?;
        if !(self.blur_sigma.is_finite() && self.blur_sigma >= 0.0) {
            return Err(SpecError::Sigma("blur_sigma"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SpecError::Sigma("noise_sigma"));
        }
        Ok(())
    }
}

fn check_tiling(width: usize, height: usize, tile: usize) -> Result<(), SpecError> {
    if tile == 0 {
        return Err(SpecError::ZeroTile);
    }
    if !width.is_multiple_of(tile) || !height.is_multiple_of(tile) {
        return Err(SpecError::TileMismatch { tile, width, height });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SceneData {
    pub width: usize,
    pub height: usize,
    pub sources: [Grid; 3],
    pub u_mask: Vec<bool>,
    pub m_mask: Vec<bool>,
    /// `+1` on either letter, `-1` elsewhere.
    pub gt_bipolar: Grid,
    /// `+1` on the U, `-1` on the M, `0` elsewhere.
    pub gt_neutral: Grid,
    pub bags: BagSet,
}

impl SceneData {
    /// Union of both letter masks.
    pub fn target_mask(&self) -> Vec<bool> {
        self.u_mask.iter().zip(&self.m_mask).map(|(u, m)| *u || *m).collect()
    }

    /// One instance per pixel, id = row-major pixel index.
    pub fn instance_table(&self) -> InstanceTable {
        let n = self.width * self.height;
        let mut data = Vec::with_capacity(3 * n);
        for i in 0..n {
            data.extend(self.sources.iter().map(|s| s.data()[i]));
        }
        InstanceTable::new(pixel_ids(n), 3, data).expect("generated sources are in range")
    }
}

pub fn pixel_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Letter boxes and stroke width for an image size.
struct Layout {
    top: usize,
    box_h: usize,
    box_w: usize,
    u_left: usize,
    m_left: usize,
    stroke: usize,
}

impl Layout {
    fn new(width: usize, height: usize) -> Self {
        let stroke = ((0.06 * width.min(height) as f64).round() as usize).max(1);
        Layout {
            top: (height as f64 * 0.4).round() as usize,
            box_h: (height as f64 * 0.2).round() as usize,
            box_w: (width as f64 * 0.2).round() as usize,
            u_left: (width as f64 * 0.2).round() as usize,
            m_left: (width as f64 * 0.6).round() as usize,
            stroke,
        }
    }
}

fn u_glyph(u: usize, v: usize, w: usize, h: usize, s: usize) -> bool {
    u < s || u + s >= w || v + s >= h
}

fn m_glyph(u: usize, v: usize, w: usize, h: usize, s: usize) -> bool {
    if u < s || u + s >= w {
        return true;
    }
    // two arms meeting at the horizontal centre, 60% of the way down
    let depth = 0.6 * h as f64;
    let (x, y) = (u as f64 + 0.5, v as f64 + 0.5);
    if y > depth + s as f64 / 2.0 {
        return false;
    }
    let reach = y * (w as f64 / 2.0) / depth;
    let half = s as f64 / 2.0;
    (x - reach).abs() < half || ((w as f64 - x) - reach).abs() < half
}

fn letter_masks(width: usize, height: usize) -> (Vec<bool>, Vec<bool>) {
    let l = Layout::new(width, height);
    let mut u_mask = vec![false; width * height];
    let mut m_mask = vec![false; width * height];
    for v in 0..l.box_h {
        for u in 0..l.box_w {
            let r = l.top + v;
            if u_glyph(u, v, l.box_w, l.box_h, l.stroke) {
                u_mask[r * width + l.u_left + u] = true;
            }
            if m_glyph(u, v, l.box_w, l.box_h, l.stroke) {
                m_mask[r * width + l.m_left + u] = true;
            }
        }
    }
    (u_mask, m_mask)
}

/// Renders the scene and its square-tile bags.
pub fn generate(spec: &SceneSpec) -> Result<SceneData, SpecError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let (u_mask, m_mask) = letter_masks(w, h);
    let pick = |mask: &[bool], on: f64, off: f64| {
        Grid::new(h, w, mask.iter().map(|&b| if b { on } else { off }).collect()).expect("shape")
    };
    let target: Vec<bool> = u_mask.iter().zip(&m_mask).map(|(u, m)| *u || *m).collect();

    let raw = [pick(&u_mask, 1.0, -1.0), pick(&m_mask, -1.0, 1.0), pick(&target, -1.0, 1.0)];

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("validated sigma"));
    let sources = raw.map(|grid| {
        let blurred = grid.gaussian_blur(spec.blur_sigma);
        let mut out = blurred.clone();
        for r in 0..h {
            for c in 0..w {
                let mut v = blurred.get(r, c);
                if let Some(n) = &noise {
                    v += n.sample(&mut rng);
                }
                out.set(r, c, v.clamp(-1.0, 1.0));
            }
        }
        out
    });

    let gt_bipolar = pick(&target, 1.0, -1.0);
    let gt_neutral = Grid::new(
        h,
        w,
        u_mask
            .iter()
            .zip(&m_mask)
            .map(|(&u, &m)| {
                if u {
                    1.0
                } else if m {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
    )
    .expect("shape");
    let bags = grid_bags(&target, w, h, spec.tile)?;

    Ok(SceneData { width: w, height: h, sources, u_mask, m_mask, gt_bipolar, gt_neutral, bags })
}

/// Tiles the image into `tile x tile` bags, labeled positive iff the tile
/// contains a masked pixel. Bag ids are row-major tile indices and instance
/// ids are row-major pixel indices.
pub fn grid_bags(mask: &[bool], width: usize, height: usize, tile: usize) -> Result<BagSet, SpecError> {
    check_tiling(width, height, tile)?;
    if mask.len() != width * height {
        return Err(SpecError::MaskSize { expected: width * height, found: mask.len() });
    }
    let tiles_x = width / tile;
    let tile_of = |i: usize| (i / width / tile) * tiles_x + (i % width) / tile;
    let n_tiles = tiles_x * (height / tile);

    let mut positive = vec![false; n_tiles];
    let mut assignment = Vec::with_capacity(mask.len());
    for (i, &on) in mask.iter().enumerate() {
        let t = tile_of(i);
        positive[t] |= on;
        assignment.push((i.to_string(), t.to_string()));
    }
    let labels: Vec<(String, BagLabel)> = positive
        .iter()
        .enumerate()
        .map(|(t, &p)| (t.to_string(), if p { BagLabel::Positive } else { BagLabel::Negative }))
        .collect();
    Ok(load_bags(&assignment, &labels).expect("every tile is non-empty and labeled"))
}

/// Axis-aligned pixel rectangle, half-open: rows `[top, bottom)`, columns
/// `[left, right)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

/// Marks every pixel covered by any rectangle; feed to [`grid_bags`] to get
/// positive tiles wherever a box intersects.
pub fn mask_from_rects(width: usize, height: usize, rects: &[Rect]) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    for r in rects {
        for row in r.top.min(height)..r.bottom.min(height) {
            for col in r.left.min(width)..r.right.min(width) {
                mask[row * width + col] = true;
            }
        }
    }
    mask
}
