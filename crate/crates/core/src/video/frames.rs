//! Frame sources: a PNG sequence with a manifest, or a raw RGB stream.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::VideoError;

/// One RGB frame, pixels packed row-major as `r, g, b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub frames: Vec<Frame>,
    pub source: String,
}

pub const RAW_MAGIC: &str = "LUMARAW1";
pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub max_frames: usize,
    pub max_width: u32,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            max_frames: 100,
            max_width: 160,
        }
    }
}

/// Indices `floor(i * n / m)` for `i < m`, or all of `0..n` when `n <= m`.
pub fn subsample_indices(n: usize, m: usize) -> Vec<usize> {
    if n <= m {
        (0..n).collect()
    } else {
        (0..m).map(|i| i * n / m).collect()
    }
}

/// Area-averaging box downscale to `new_w × new_h`.
pub fn box_downscale(frame: &Frame, new_w: u32, new_h: u32) -> Frame {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let (nw, nh) = (new_w as usize, new_h as usize);
    // source coverage of output cell `o` along an axis of length `n -> m`
    let spans = |n: usize, m: usize| -> Vec<Vec<(usize, f64)>> {
        let scale = n as f64 / m as f64;
        (0..m)
            .map(|o| {
                let lo = o as f64 * scale;
                let hi = (o + 1) as f64 * scale;
                let mut cover = Vec::new();
                let mut i = lo.floor() as usize;
                while (i as f64) < hi && i < n {
                    let a = lo.max(i as f64);
                    let b = hi.min((i + 1) as f64);
                    if b > a {
                        cover.push((i, b - a));
                    }
                    i += 1;
                }
                cover
            })
            .collect()
    };
    let xs = spans(w, nw);
    let ys = spans(h, nh);
    let mut pixels = Vec::with_capacity(nw * nh * 3);
    for ycov in &ys {
        for xcov in &xs {
            let mut acc = [0.0f64; 3];
            let mut area = 0.0;
            for &(y, wy) in ycov {
                for &(x, wx) in xcov {
                    let p = (y * w + x) * 3;
                    let wgt = wx * wy;
                    for c in 0..3 {
                        acc[c] += wgt * frame.pixels[p + c] as f64;
                    }
                    area += wgt;
                }
            }
            for a in acc {
                pixels.push((a / area + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Frame {
        t: frame.t,
        width: new_w,
        height: new_h,
        pixels,
    }
}

/// Aspect-preserving size no wider than `max_width`.
pub fn fit_width(width: u32, height: u32, max_width: u32) -> (u32, u32) {
    if width <= max_width || max_width == 0 {
        return (width, height);
    }
    let h = (height as f64 * max_width as f64 / width as f64).round().max(1.0) as u32;
    (max_width, h)
}

fn parse_manifest(path: &Path) -> Result<(f64, u64), VideoError> {
    let text = std::fs::read_to_string(path).map_err(|e| VideoError::Manifest(format!("{}: {e}", path.display())))?;
    let mut fps = None;
    let mut start_number = 0u64;
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| VideoError::Manifest(format!("expected key=value, got `{line}`")))?;
        match key.trim() {
            "fps" => {
                fps = Some(
                    value
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|f| f.is_finite() && *f > 0.0)
                        .ok_or_else(|| VideoError::Manifest(format!("bad fps `{value}`")))?,
                )
            }
            "start_number" => {
                start_number = value
                    .trim()
                    .parse()
                    .map_err(|_| VideoError::Manifest(format!("bad start_number `{value}`")))?
            }
            _ => {}
        }
    }
    let fps = fps.ok_or_else(|| VideoError::Manifest("missing fps".into()))?;
    Ok((fps, start_number))
}

/// Numbered frame files with their timestamps, sorted by number.
fn list_sequence(dir: &Path) -> Result<Vec<(f64, PathBuf)>, VideoError> {
    let (fps, start_number) = parse_manifest(&dir.join(MANIFEST))?;
    let entries = std::fs::read_dir(dir).map_err(|e| VideoError::Io(format!("{}: {e}", dir.display())))?;
    let mut numbered = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| VideoError::Io(e.to_string()))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(num) = name
            .strip_prefix("frame_")
            .and_then(|s| s.strip_suffix(".png"))
            .filter(|s| s.len() == 6)
            .and_then(|s| s.parse::<u64>().ok())
        else {
            continue;
        };
        if num < start_number {
            continue;
        }
        numbered.push((num, entry.path()));
    }
    numbered.sort();
    Ok(numbered
        .into_iter()
        .map(|(n, p)| ((n - start_number) as f64 / fps, p))
        .collect())
}

fn decode_png(path: &Path, t: f64) -> Result<Frame, VideoError> {
    let img = image::open(path)
        .map_err(|e| VideoError::UnreadableImage {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .to_rgb8();
    Ok(Frame {
        t,
        width: img.width(),
        height: img.height(),
        pixels: img.into_raw(),
    })
}

/// Reads a `LUMARAW1 <w> <h> <fps>` header.
pub fn read_raw_header<R: BufRead>(reader: &mut R) -> Result<(u32, u32, f64), VideoError> {
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| VideoError::Io(e.to_string()))?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    let bad = || VideoError::Format(format!("bad raw stream header `{}`", line.trim_end()));
    if parts.len() != 4 || parts[0] != RAW_MAGIC {
        return Err(bad());
    }
    let w: u32 = parts[1].parse().map_err(|_| bad())?;
    let h: u32 = parts[2].parse().map_err(|_| bad())?;
    let fps: f64 = parts[3].parse().map_err(|_| bad())?;
    if w == 0 || h == 0 || !(fps.is_finite() && fps > 0.0) {
        return Err(bad());
    }
    Ok((w, h, fps))
}

/// Frames of a raw stream with `keep(t)`; others are skipped unread.
fn read_raw(path: &Path, keep: impl Fn(f64) -> bool) -> Result<Vec<Frame>, VideoError> {
    let file = File::open(path).map_err(|e| VideoError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let (w, h, fps) = read_raw_header(&mut reader)?;
    let size = w as usize * h as usize * 3;
    let mut frames = Vec::new();
    let mut buf = vec![0u8; size];
    for k in 0.. {
        let mut filled = 0;
        while filled < size {
            let n = reader
                .read(&mut buf[filled..])
                .map_err(|e| VideoError::Io(e.to_string()))?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        if filled == 0 {
            break;
        }
        if filled < size {
            return Err(VideoError::Format(format!(
                "raw stream ends inside frame {k} ({filled} of {size} bytes)"
            )));
        }
        let t = k as f64 / fps;
        if keep(t) {
            frames.push(Frame {
                t,
                width: w,
                height: h,
                pixels: buf.clone(),
            });
        }
    }
    Ok(frames)
}

/// Loads the frames with `start <= t < end`, subsamples them uniformly to at
/// most `max_frames` and downscales each to at most `max_width`.
pub fn ingest_frames(path: &Path, start: f64, end: f64, cfg: &FrameConfig) -> Result<FrameSet, VideoError> {
    let inside = |t: f64| t >= start && t < end;
    let max_frames = cfg.max_frames.max(1);
    let frames = if path.is_dir() {
        let listed: Vec<_> = list_sequence(path)?.into_iter().filter(|(t, _)| inside(*t)).collect();
        let picked: Vec<_> = subsample_indices(listed.len(), max_frames)
            .into_iter()
            .map(|i| listed[i].clone())
            .collect();
        picked
            .par_iter()
            .map(|(t, p)| decode_png(p, *t))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let all = read_raw(path, inside)?;
        subsample_indices(all.len(), max_frames)
            .into_iter()
            .map(|i| all[i].clone())
            .collect()
    };
    if frames.is_empty() {
        return Err(VideoError::NoFramesInSegment { start, end });
    }
    let (w0, h0) = (frames[0].width, frames[0].height);
    if let Some(f) = frames.iter().find(|f| f.width != w0 || f.height != h0) {
        return Err(VideoError::Format(format!(
            "frame at {:.6} s is {}x{}, expected {w0}x{h0}",
            f.t, f.width, f.height
        )));
    }
    let (nw, nh) = fit_width(w0, h0, cfg.max_width);
    let frames = if (nw, nh) == (w0, h0) {
        frames
    } else {
        frames.par_iter().map(|f| box_downscale(f, nw, nh)).collect()
    };
    Ok(FrameSet {
        frames,
        source: path.display().to_string(),
    })
}

/// Writes frames as a raw stream (used for tests and fixtures).
pub fn write_raw_stream(path: &Path, frames: &[Frame], fps: f64) -> Result<(), VideoError> {
    use std::io::Write;
    let first = frames
        .first()
        .ok_or_else(|| VideoError::Format("no frames to write".into()))?;
    let mut out = Vec::new();
    out.extend_from_slice(format!("{RAW_MAGIC} {} {} {fps}\n", first.width, first.height).as_bytes());
    for f in frames {
        out.extend_from_slice(&f.pixels);
    }
    File::create(path)
        .and_then(|mut file| file.write_all(&out))
        .map_err(|e| VideoError::Io(format!("{}: {e}", path.display())))
}

/// Writes frames as `frame_%06d.png` plus a manifest.
pub fn write_png_sequence(dir: &Path, frames: &[Frame], fps: f64) -> Result<(), VideoError> {
    std::fs::create_dir_all(dir).map_err(|e| VideoError::Io(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST), format!("fps={fps}\n")).map_err(|e| VideoError::Io(e.to_string()))?;
    for (i, f) in frames.iter().enumerate() {
        let img = image::RgbImage::from_raw(f.width, f.height, f.pixels.clone())
            .ok_or_else(|| VideoError::Format("pixel buffer size mismatch".into()))?;
        img.save(dir.join(format!("frame_{i:06}.png")))
            .map_err(|e| VideoError::Io(e.to_string()))?;
    }
    Ok(())
}
