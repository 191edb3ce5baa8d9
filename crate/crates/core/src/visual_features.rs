//! Frame-derived features: colour statistics, centred-crop intensity,
//! hard-cut counting and a temporal optical-flow histogram.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FLOW_BINS: usize = 30;
pub const DEFAULT_FRAME_RATE: f64 = 24.0;

/// A packed 8-bit RGB frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, rgb: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("frame has zero area"));
        }
        if rgb.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: width * height * 3,
                got: rgb.len(),
            });
        }
        Ok(Frame { width, height, rgb })
    }

    pub fn solid(width: usize, height: usize, color: [u8; 3]) -> Self {
        let rgb = color.iter().copied().cycle().take(width * height * 3).collect();
        Frame { width, height, rgb }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.rgb[i..i + 3].copy_from_slice(&color);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.rgb.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Integer Rec.601 luma plane used for block matching.
    fn luma_plane(&self) -> Vec<u8> {
        self.pixels()
            .map(|[r, g, b]| {
                ((299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b) + 500) / 1000) as u8
            })
            .collect()
    }
}

pub fn luma(rgb: [u8; 3]) -> f64 {
    0.299 * f64::from(rgb[0]) + 0.587 * f64::from(rgb[1]) + 0.114 * f64::from(rgb[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    pub frame_rate: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        Self::with_frame_rate(frames, DEFAULT_FRAME_RATE)
    }

    pub fn with_frame_rate(frames: Vec<Frame>, frame_rate: f64) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::invalid("frame sequence is empty"))?;
        let (w, h) = (first.width, first.height);
        if let Some(bad) = frames.iter().position(|f| f.width != w || f.height != h) {
            return Err(Error::invalid(format!(
                "frame {bad} is {}x{}, expected {w}x{h}",
                frames[bad].width, frames[bad].height
            )));
        }
        Ok(FrameSequence { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn total_pixels(&self) -> usize {
        self.frames.iter().map(Frame::pixel_count).sum()
    }
}

/// Load every `.ppm`/`.png` file in `dir`, ordered by the number embedded
/// in the file name (`frame_0007.ppm` sorts before `frame_0010.ppm`).
pub fn load_frames(dir: &Path, frame_rate: f64) -> Result<FrameSequence> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("ppm" | "png")) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let digits: String = stem.chars().filter(char::is_ascii_digit).collect();
        let index = digits.parse().map_err(|_| {
            Error::invalid(format!("{}: frame file name has no index", path.display()))
        })?;
        files.push((index, path));
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!("{}: no frames found", dir.display())));
    }
    let frames = files
        .iter()
        .map(|(_, path)| {
            let img = image::open(path)
                .map_err(|source| Error::Image {
                    path: path.clone(),
                    source,
                })?
                .into_rgb8();
            Frame::new(img.width() as usize, img.height() as usize, img.into_raw())
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::with_frame_rate(frames, frame_rate)
}

/// Write a frame as binary PPM (P6).
pub fn write_ppm(path: &Path, frame: &Frame) -> Result<()> {
    let mut bytes = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    bytes.extend_from_slice(&frame.rgb);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Per-channel mean over every pixel of every frame.
pub fn average_hue(seq: &FrameSequence) -> Result<[f64; 3]> {
    if seq.is_empty() {
        return Err(Error::invalid("frame sequence is empty"));
    }
    let mut sums = [0u64; 3];
    for frame in seq.frames() {
        for p in frame.pixels() {
            for c in 0..3 {
                sums[c] += u64::from(p[c]);
            }
        }
    }
    let n = seq.total_pixels() as f64;
    Ok(sums.map(|s| s as f64 / n))
}

/// Per-channel lower median over every pixel of every frame.
pub fn median_hue(seq: &FrameSequence) -> Result<[f64; 3]> {
    if seq.is_empty() {
        return Err(Error::invalid("frame sequence is empty"));
    }
    let mut hist = [[0u64; 256]; 3];
    for frame in seq.frames() {
        for p in frame.pixels() {
            for c in 0..3 {
                hist[c][usize::from(p[c])] += 1;
            }
        }
    }
    let rank = (seq.total_pixels() as u64 - 1) / 2;
    Ok(hist.map(|h| lower_median_from_histogram(&h, rank)))
}

fn lower_median_from_histogram(hist: &[u64; 256], rank: u64) -> f64 {
    let mut seen = 0;
    for (value, &count) in hist.iter().enumerate() {
        seen += count;
        if seen > rank {
            return value as f64;
        }
    }
    255.0
}

/// Mean Rec.601 luma over a centred window covering `crop_fraction` of the
/// width and of the height of each frame.
pub fn average_intensity(seq: &FrameSequence, crop_fraction: f64) -> Result<f64> {
    if seq.is_empty() {
        return Err(Error::invalid("frame sequence is empty"));
    }
    if !(crop_fraction > 0.0 && crop_fraction <= 1.0) {
        return Err(Error::invalid(format!("crop fraction {crop_fraction} outside (0, 1]")));
    }
    let (w, h) = (seq.frames[0].width, seq.frames[0].height);
    let cw = (crop_fraction * w as f64).round() as usize;
    let ch = (crop_fraction * h as f64).round() as usize;
    if cw == 0 || ch == 0 {
        return Err(Error::invalid(format!(
            "crop {crop_fraction} of {w}x{h} has no pixels"
        )));
    }
    let (x0, y0) = ((w - cw) / 2, (h - ch) / 2);
    let mut sum = 0.0;
    for frame in seq.frames() {
        for y in y0..y0 + ch {
            for x in x0..x0 + cw {
                sum += luma(frame.pixel(x, y));
            }
        }
    }
    Ok(sum / (cw * ch * seq.len()) as f64)
}

/// Joint 8x8x8 RGB histogram, L1-normalised.
pub fn color_histogram(frame: &Frame) -> Vec<f64> {
    let mut hist = vec![0u32; 512];
    for [r, g, b] in frame.pixels() {
        hist[usize::from(r >> 5) * 64 + usize::from(g >> 5) * 8 + usize::from(b >> 5)] += 1;
    }
    let n = frame.pixel_count() as f64;
    hist.into_iter().map(|c| f64::from(c) / n).collect()
}

/// Count hard cuts: consecutive frames whose histogram L1 distance is
/// strictly above `threshold`.
pub fn shot_boundaries(seq: &FrameSequence, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 2.0) {
        return Err(Error::invalid(format!("shot threshold {threshold} outside (0, 2]")));
    }
    let hists: Vec<Vec<f64>> = seq.frames().iter().map(color_histogram).collect();
    Ok(hists
        .windows(2)
        .filter(|pair| {
            let d: f64 = pair[0].iter().zip(&pair[1]).map(|(a, b)| (a - b).abs()).sum();
            d > threshold
        })
        .count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    pub block_size: usize,
    pub search_radius: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            block_size: 16,
            search_radius: 8,
        }
    }
}

struct BlockMatcher {
    width: usize,
    height: usize,
    block: usize,
    /// Displacements ordered by (squared length, dy, dx); the first
    /// candidate with minimal SAD wins.
    candidates: Vec<(isize, isize)>,
}

impl BlockMatcher {
    fn new(width: usize, height: usize, params: FlowParams) -> Self {
        let r = params.search_radius as isize;
        let mut candidates: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .collect();
        candidates.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
        BlockMatcher {
            width,
            height,
            block: params.block_size.max(1),
            candidates,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn sad(&self, src: &[u8], dst: &[u8], x: usize, y: usize, bw: usize, bh: usize, dx: isize, dy: isize) -> u32 {
        let mut total = 0u32;
        for row in 0..bh {
            let s = (y + row) * self.width + x;
            let d = ((y + row) as isize + dy) as usize * self.width + (x as isize + dx) as usize;
            total += src[s..s + bw]
                .iter()
                .zip(&dst[d..d + bw])
                .map(|(&a, &b)| u32::from(a.abs_diff(b)))
                .sum::<u32>();
        }
        total
    }

    /// Mean best-match displacement length of `src` blocks searched in `dst`.
    fn mean_motion(&self, src: &[u8], dst: &[u8]) -> f64 {
        let mut total = 0.0;
        let mut blocks = 0usize;
        for y in (0..self.height).step_by(self.block) {
            let bh = self.block.min(self.height - y);
            for x in (0..self.width).step_by(self.block) {
                let bw = self.block.min(self.width - x);
                blocks += 1;
                let mut best: Option<(u32, isize, isize)> = None;
                for &(dx, dy) in &self.candidates {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0
                        || ny < 0
                        || nx as usize + bw > self.width
                        || ny as usize + bh > self.height
                    {
                        continue;
                    }
                    let cost = self.sad(src, dst, x, y, bw, bh, dx, dy);
                    if best.is_none_or(|(b, _, _)| cost < b) {
                        best = Some((cost, dx, dy));
                        if cost == 0 {
                            break;
                        }
                    }
                }
                if let Some((_, dx, dy)) = best {
                    total += ((dx * dx + dy * dy) as f64).sqrt();
                }
            }
        }
        total / blocks as f64
    }
}

/// Motion magnitude of every consecutive frame pair. Each pair is matched
/// in both directions and the two means averaged, so the value of a pair
/// does not depend on playback direction.
pub fn pair_motion(seq: &FrameSequence, params: FlowParams) -> Result<Vec<f64>> {
    if seq.len() < 2 {
        return Err(Error::invalid("optical flow needs at least two frames"));
    }
    let matcher = BlockMatcher::new(seq.frames[0].width, seq.frames[0].height, params);
    let planes: Vec<Vec<u8>> = seq.frames().par_iter().map(Frame::luma_plane).collect();
    Ok(planes
        .par_windows(2)
        .map(|pair| 0.5 * (matcher.mean_motion(&pair[0], &pair[1]) + matcher.mean_motion(&pair[1], &pair[0])))
        .collect())
}

/// Partition per-pair motion into [`FLOW_BINS`] contiguous bins (the first
/// `P mod 30` bins take one extra pair), sum each bin and L1-normalise.
/// All-zero motion yields the uniform histogram.
pub fn bin_flow(pair_magnitudes: &[f64]) -> Vec<f64> {
    let p = pair_magnitudes.len();
    let (base, extra) = (p / FLOW_BINS, p % FLOW_BINS);
    let mut bins = Vec::with_capacity(FLOW_BINS);
    let mut start = 0;
    for b in 0..FLOW_BINS {
        let len = base + usize::from(b < extra);
        bins.push(pair_magnitudes[start..start + len].iter().sum::<f64>());
        start += len;
    }
    let total: f64 = bins.iter().sum();
    if total == 0.0 {
        return vec![1.0 / FLOW_BINS as f64; FLOW_BINS];
    }
    bins.iter().map(|b| b / total).collect()
}

pub fn optical_flow_hist(seq: &FrameSequence, params: FlowParams) -> Result<Vec<f64>> {
    Ok(bin_flow(&pair_motion(seq, params)?))
}

pub fn average_memorability(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("no memorability scores"));
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::invalid(format!("memorability score {bad} outside [0, 1]")));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// One float per line; blank lines are skipped.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| Error::Record {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisualParams {
    pub flow: FlowParams,
    pub shot_threshold: f64,
}

impl Default for VisualParams {
    fn default() -> Self {
        VisualParams {
            flow: FlowParams::default(),
            shot_threshold: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualFeatureBlock {
    pub avg_hue: [f64; 3],
    pub median_hue: [f64; 3],
    pub avg_intensity: f64,
    pub avg_intensity_mid30: f64,
    pub avg_intensity_mid60: f64,
    pub shot_boundary_count: usize,
    pub flow_hist: Vec<f64>,
}

impl VisualFeatureBlock {
    /// Stand-in when a video has no frames: zero statistics and the
    /// uniform (zero-motion) flow histogram.
    pub fn zero() -> Self {
        VisualFeatureBlock {
            avg_hue: [0.0; 3],
            median_hue: [0.0; 3],
            avg_intensity: 0.0,
            avg_intensity_mid30: 0.0,
            avg_intensity_mid60: 0.0,
            shot_boundary_count: 0,
            flow_hist: vec![1.0 / FLOW_BINS as f64; FLOW_BINS],
        }
    }
}

pub fn visual_block(seq: &FrameSequence, params: &VisualParams) -> Result<VisualFeatureBlock> {
    Ok(VisualFeatureBlock {
        avg_hue: average_hue(seq)?,
        median_hue: median_hue(seq)?,
        avg_intensity: average_intensity(seq, 1.0)?,
        avg_intensity_mid30: average_intensity(seq, 0.3)?,
        avg_intensity_mid60: average_intensity(seq, 0.6)?,
        shot_boundary_count: shot_boundaries(seq, params.shot_threshold)?,
        flow_hist: optical_flow_hist(seq, params.flow)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RED: [u8; 3] = [255, 0, 0];
    const BLUE: [u8; 3] = [0, 0, 255];

    fn seq(frames: Vec<Frame>) -> FrameSequence {
        FrameSequence::new(frames).unwrap()
    }

    /// Frame whose pixels take `values` on every channel, in row order.
    fn gray_row(values: &[u8]) -> Frame {
        let rgb = values.iter().flat_map(|&v| [v, v, v]).collect();
        Frame::new(values.len(), 1, rgb).unwrap()
    }

    fn center_square(w: usize, h: usize, fraction: f64) -> Frame {
        let mut f = Frame::solid(w, h, [0, 0, 0]);
        let (cw, ch) = ((fraction * w as f64).round() as usize, (fraction * h as f64).round() as usize);
        let (x0, y0) = ((w - cw) / 2, (h - ch) / 2);
        for y in y0..y0 + ch {
            for x in x0..x0 + cw {
                f.set_pixel(x, y, [255, 255, 255]);
            }
        }
        f
    }

    /// Textured background with a bright 8x8 square at `(x, y)`.
    pub(crate) fn square_at(x: usize, y: usize) -> Frame {
        let (w, h) = (64, 48);
        let mut f = Frame::solid(w, h, [40, 40, 40]);
        for yy in 0..h {
            for xx in 0..w {
                let v = ((xx * 7 + yy * 13) % 31) as u8 + 20;
                f.set_pixel(xx, yy, [v, v, v]);
            }
        }
        for yy in y..y + 8 {
            for xx in x..x + 8 {
                f.set_pixel(xx, yy, [250, 240, 230]);
            }
        }
        f
    }

    #[test]
    fn hue_examples() {
        assert_eq!(average_hue(&seq(vec![Frame::solid(4, 3, RED)])).unwrap(), [255.0, 0.0, 0.0]);
        let half = gray_row(&[0, 255, 0, 255]);
        assert_eq!(average_hue(&seq(vec![half])).unwrap(), [127.5; 3]);
        let two = seq(vec![Frame::solid(2, 2, [10, 20, 30]), Frame::solid(2, 2, [30, 20, 10])]);
        assert_eq!(average_hue(&two).unwrap(), [20.0, 20.0, 20.0]);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_hue(&seq(vec![Frame::solid(3, 3, [9, 8, 7])])).unwrap(), [9.0, 8.0, 7.0]);
        assert_eq!(median_hue(&seq(vec![gray_row(&[0, 0, 255])])).unwrap(), [0.0; 3]);
        assert_eq!(median_hue(&seq(vec![gray_row(&[255, 0, 200, 100])])).unwrap(), [100.0; 3]);
    }

    #[test]
    fn intensity_examples() {
        let white = seq(vec![Frame::solid(10, 10, [255, 255, 255])]);
        for crop in [1.0, 0.6, 0.3] {
            assert!((average_intensity(&white, crop).unwrap() - 255.0).abs() < 1e-9);
        }
        let fixture = seq(vec![center_square(100, 50, 0.3)]);
        assert!((average_intensity(&fixture, 0.3).unwrap() - 255.0).abs() < 1e-9);
        let expected = 255.0 * (30.0 * 15.0) / (100.0 * 50.0);
        assert!((average_intensity(&fixture, 1.0).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 22.95).abs() < 1e-12);
    }

    #[test]
    fn intensity_rejects_empty_crop() {
        let tiny = seq(vec![Frame::solid(1, 1, RED)]);
        assert!(average_intensity(&tiny, 0.3).is_err());
        assert!(average_intensity(&tiny, 0.0).is_err());
    }

    #[test]
    fn constant_gray_intensity_is_the_constant() {
        let s = seq(vec![Frame::solid(20, 20, [77, 77, 77]); 3]);
        for crop in [1.0, 0.6, 0.3] {
            assert!((average_intensity(&s, crop).unwrap() - 77.0).abs() < 1e-9);
        }
    }

    fn alternating(frames: usize, run: usize) -> FrameSequence {
        seq((0..frames)
            .map(|i| Frame::solid(16, 16, if (i / run).is_multiple_of(2) { RED } else { BLUE }))
            .collect())
    }

    #[test]
    fn shot_boundary_examples() {
        assert_eq!(shot_boundaries(&seq(vec![Frame::solid(8, 8, RED); 10]), 0.4).unwrap(), 0);
        assert_eq!(shot_boundaries(&alternating(100, 10), 0.4).unwrap(), 9);
        assert_eq!(shot_boundaries(&alternating(100, 10), 2.0).unwrap(), 0);
        assert_eq!(shot_boundaries(&seq(vec![Frame::solid(8, 8, RED)]), 0.4).unwrap(), 0);
        assert!(shot_boundaries(&alternating(4, 1), 0.0).is_err());
    }

    #[test]
    fn static_video_has_uniform_flow() {
        let h = optical_flow_hist(&seq(vec![square_at(10, 10); 12]), FlowParams::default()).unwrap();
        assert!(h.iter().all(|&v| (v - 1.0 / 30.0).abs() < 1e-15));
    }

    #[test]
    fn early_motion_lands_in_first_bins() {
        // 61 frames -> 60 pairs -> 2 pairs per bin; motion in the first 6 pairs.
        let mut frames = Vec::new();
        for i in 0..61 {
            let x = 8 + 3 * i.min(6);
            frames.push(square_at(x, 20));
        }
        let h = optical_flow_hist(&seq(frames), FlowParams::default()).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(h[..3].iter().sum::<f64>() > 0.99);
    }

    #[test]
    fn flow_needs_two_frames() {
        assert!(optical_flow_hist(&seq(vec![square_at(0, 0)]), FlowParams::default()).is_err());
    }

    #[test]
    fn short_videos_leave_trailing_bins_empty() {
        let h = bin_flow(&[1.0, 3.0]);
        assert_eq!(h[0], 0.25);
        assert_eq!(h[1], 0.75);
        assert!(h[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn memorability_examples() {
        assert_eq!(average_memorability(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(average_memorability(&[0.0, 1.0]).unwrap(), 0.5);
        assert!((average_memorability(&[0.2, 0.4, 0.9]).unwrap() - 0.5).abs() < 1e-12);
        assert!(average_memorability(&[]).is_err());
        assert!(average_memorability(&[0.3, 1.2]).is_err());
    }

    #[test]
    fn mismatched_frames_rejected() {
        assert!(FrameSequence::new(vec![Frame::solid(2, 2, RED), Frame::solid(3, 2, RED)]).is_err());
        assert!(FrameSequence::new(vec![]).is_err());
    }

    #[test]
    fn ppm_round_trip_through_loader() {
        let dir = tempfile::tempdir().unwrap();
        let frames = [square_at(0, 0), square_at(4, 4), square_at(8, 8)];
        // Write out of lexical order to check numeric sorting.
        for (i, name) in ["frame_2.ppm", "frame_10.ppm", "frame_11.ppm"].iter().enumerate() {
            write_ppm(&dir.path().join(name), &frames[i]).unwrap();
        }
        let loaded = load_frames(dir.path(), 24.0).unwrap();
        assert_eq!(loaded.frames(), &frames);
    }

    fn random_video() -> impl Strategy<Value = FrameSequence> {
        // 31 frames -> 30 pairs, one per bin.
        proptest::collection::vec((0usize..56, 0usize..40), 31)
            .prop_map(|pos| seq(pos.into_iter().map(|(x, y)| square_at(x, y)).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn flow_sums_to_one_and_reverses(video in random_video()) {
            let params = FlowParams { block_size: 16, search_radius: 4 };
            let fwd = pair_motion(&video, params).unwrap();
            let mut rev_frames = video.frames().to_vec();
            rev_frames.reverse();
            let bwd = pair_motion(&seq(rev_frames), params).unwrap();
            let mut bwd_rev = bwd.clone();
            bwd_rev.reverse();
            prop_assert_eq!(&fwd, &bwd_rev);
            let h = bin_flow(&fwd);
            prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let mut h_rev = bin_flow(&bwd);
            h_rev.reverse();
            // Same terms, different summation order.
            for (a, b) in h.iter().zip(&h_rev) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn shot_count_non_increasing_in_threshold(runs in proptest::collection::vec(1usize..6, 2..10)) {
            let colors = [RED, BLUE, [0, 255, 0], [128, 128, 128]];
            let frames: Vec<Frame> = runs
                .iter()
                .enumerate()
                .flat_map(|(i, &r)| std::iter::repeat_n(Frame::solid(8, 8, colors[i % 4]), r))
                .collect();
            let s = seq(frames);
            let mut last = usize::MAX;
            for k in 1..=20 {
                let c = shot_boundaries(&s, k as f64 * 0.1).unwrap();
                prop_assert!(c <= last);
                last = c;
            }
        }
    }
}
