//! File formats: WAV and CSV recordings, frequency-series CSV, anchor
//! bundles, and GeoJSON region export.
//!
//! All writers go through [`atomic_write`]: content is staged in a
//! sibling temporary file and renamed into place, so readers never see a
//! torn artifact and reruns replace outputs atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AnchorSite, EnfSignal, FeasibleRegion, Point, RawRecording};

/// Column headers the readers insist on, and the writers emit.
const ENF_HEADER: &str = "t_seconds,freq_hz";
const RECORDING_HEADER: &str = "t_seconds,amplitude";

/// Write `bytes` to `path` atomically (temp file + rename in the target
/// directory). The destination is either the old content or the new,
/// never a mixture.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Recordings: 16-bit mono PCM WAV, or two-column CSV.
// ---------------------------------------------------------------------------

/// Read a recording, dispatching on the file extension (`.wav` or `.csv`).
pub fn read_recording(path: &Path) -> Result<RawRecording> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("wav") => read_wav(path),
        Some("csv") => read_recording_csv(path),
        other => Err(Error::Format(format!(
            "cannot tell the recording format of {} (extension {:?}); expected .wav or .csv",
            path.display(),
            other.unwrap_or("none")
        ))),
    }
}

/// Read a 16-bit mono PCM WAV file. Samples are scaled to `[-1, 1)`;
/// the start time is 0 (WAV carries no epoch).
pub fn read_wav(path: &Path) -> Result<RawRecording> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Format(format!(
            "{}: expected mono, got {} channels",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Format(format!(
            "{}: expected 16-bit integer PCM, got {}-bit {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples: Vec<f64> = reader
        .samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<_, _>>()?;
    RawRecording::new(samples, f64::from(spec.sample_rate), 0.0)
}

/// Write a recording as 16-bit mono PCM WAV. Samples are clamped to
/// `[-1, 1]` and quantized; the sample rate must be a whole number of
/// hertz (WAV cannot represent fractional rates).
pub fn write_wav(path: &Path, rec: &RawRecording) -> Result<()> {
    let fs = rec.sample_rate();
    if fs.fract() != 0.0 || fs > f64::from(u32::MAX) {
        return Err(Error::Config(format!(
            "WAV needs an integral sample rate in hertz, got {fs}"
        )));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: fs as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut buf: Vec<u8> = Vec::with_capacity(44 + 2 * rec.samples().len());
    {
        let mut writer = hound::WavWriter::new(std::io::Cursor::new(&mut buf), spec)?;
        for &v in rec.samples() {
            // Same 1/32768 scale as the reader, so a round trip costs at
            // most half a quantization step.
            let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(q)?;
        }
        writer.finalize()?;
    }
    atomic_write(path, &buf)
}

/// Read a `t_seconds,amplitude` CSV recording. Timestamps must be
/// uniformly spaced; the sample rate is inferred from them.
pub fn read_recording_csv(path: &Path) -> Result<RawRecording> {
    let text = fs::read_to_string(path)?;
    let (times, samples) = parse_two_columns(&text, RECORDING_HEADER, path)?;
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: need at least 2 samples to infer the sample rate",
            path.display()
        )));
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Format(format!(
            "{}: timestamps must be increasing and uniform",
            path.display()
        )));
    }
    for (i, &t) in times.iter().enumerate() {
        let expect = times[0] + i as f64 * dt;
        if (t - expect).abs() > 1e-6_f64.max(1e-9 * t.abs()) {
            return Err(Error::Format(format!(
                "{}: non-uniform sample spacing at row {} (t = {t}, expected {expect})",
                path.display(),
                i + 2
            )));
        }
    }
    RawRecording::new(samples, 1.0 / dt, times[0])
}

/// Write a recording as `t_seconds,amplitude` CSV (9 decimal places:
/// finer than 16-bit quantization, compact enough to diff).
pub fn write_recording_csv(path: &Path, rec: &RawRecording) -> Result<()> {
    let fs = rec.sample_rate();
    let mut out = String::with_capacity(32 * rec.samples().len() + 32);
    out.push_str(RECORDING_HEADER);
    out.push('\n');
    for (i, &v) in rec.samples().iter().enumerate() {
        let t = rec.start_time() + i as f64 / fs;
        writeln!(out, "{t:.9},{v:.9}").expect("string write cannot fail");
    }
    atomic_write(path, out.as_bytes())
}

// ---------------------------------------------------------------------------
// Frequency series CSV.
// ---------------------------------------------------------------------------

/// Write a frequency series as `t_seconds,freq_hz` CSV, one row per
/// frame, six decimal places.
pub fn write_enf_csv(path: &Path, enf: &EnfSignal) -> Result<()> {
    let mut out = String::with_capacity(24 * enf.len() + 24);
    out.push_str(ENF_HEADER);
    out.push('\n');
    for (i, &f) in enf.values().iter().enumerate() {
        writeln!(out, "{:.6},{f:.6}", enf.frame_time(i)).expect("string write cannot fail");
    }
    atomic_write(path, out.as_bytes())
}

/// Read a `t_seconds,freq_hz` CSV. The frame period comes from the
/// timestamps (which must be uniform) and the nominal frequency from
/// whichever of 50/60 Hz the values are near.
pub fn read_enf_csv(path: &Path) -> Result<EnfSignal> {
    let text = fs::read_to_string(path)?;
    let (times, values) = parse_two_columns(&text, ENF_HEADER, path)?;
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: need at least 2 frames to infer the frame period",
            path.display()
        )));
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Format(format!(
            "{}: frame times must be increasing and uniform",
            path.display()
        )));
    }
    for (i, &t) in times.iter().enumerate() {
        let expect = times[0] + i as f64 * dt;
        if (t - expect).abs() > 1e-5_f64.max(1e-9 * t.abs()) {
            return Err(Error::Format(format!(
                "{}: non-uniform frame times at row {} (t = {t}, expected {expect})",
                path.display(),
                i + 2
            )));
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let nominal = if (mean - 50.0).abs() <= (mean - 60.0).abs() { 50.0 } else { 60.0 };
    EnfSignal::new(values, dt, times[0], nominal)
}

/// Parse a two-column numeric CSV with an exact expected header. Values
/// we write never need quoting, so a plain comma split is the format.
fn parse_two_columns(text: &str, header: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => {
            return Err(Error::Format(format!(
                "{}: expected header {header:?}, got {:?}",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    let mut col_a = Vec::new();
    let mut col_b = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| {
            Error::Format(format!(
                "{}: row {} has no comma: {line:?}",
                path.display(),
                lineno + 2
            ))
        })?;
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "{}: row {} has a non-numeric field {s:?}",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        col_a.push(parse(a)?);
        col_b.push(parse(b)?);
    }
    Ok((col_a, col_b))
}

// ---------------------------------------------------------------------------
// Anchor bundles: a JSON index plus one frequency CSV per site.
// ---------------------------------------------------------------------------

/// One entry in an anchor index file. `enf_csv` is relative to the index
/// file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorEntry {
    pub name: String,
    pub x_miles: f64,
    pub y_miles: f64,
    pub enf_csv: PathBuf,
}

/// Write an anchor bundle: `<name>.csv` per site next to the index, and
/// the JSON index itself at `index_path`.
pub fn write_anchor_bundle(index_path: &Path, anchors: &[AnchorSite]) -> Result<()> {
    let dir = index_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let mut entries = Vec::with_capacity(anchors.len());
    for a in anchors {
        let file = PathBuf::from(format!("{}.csv", a.name));
        write_enf_csv(&dir.join(&file), &a.enf)?;
        entries.push(AnchorEntry {
            name: a.name.clone(),
            x_miles: a.position.x,
            y_miles: a.position.y,
            enf_csv: file,
        });
    }
    let json = serde_json::to_string_pretty(&entries)?;
    atomic_write(index_path, json.as_bytes())
}

/// Read an anchor bundle back: the index plus every referenced series.
pub fn read_anchor_bundle(index_path: &Path) -> Result<Vec<AnchorSite>> {
    let text = fs::read_to_string(index_path)?;
    let entries: Vec<AnchorEntry> = serde_json::from_str(&text)?;
    if entries.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{}: anchor index is empty",
            index_path.display()
        )));
    }
    let dir = index_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    entries
        .into_iter()
        .map(|e| {
            let enf = read_enf_csv(&dir.join(&e.enf_csv))?;
            AnchorSite::new(e.name, Point::new(e.x_miles, e.y_miles), enf)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// GeoJSON export.
// ---------------------------------------------------------------------------

/// Export a feasible region as a GeoJSON `Feature` whose geometry is a
/// `MultiPolygon`: one rectangle per horizontal run of feasible cells.
/// Coordinates are the planar mile frame of the domain (stated in the
/// feature properties), not geographic degrees.
pub fn write_region_geojson(path: &Path, region: &FeasibleRegion) -> Result<()> {
    let d = region.domain();
    let (x_min, _) = d.x_range();
    let (y_min, _) = d.y_range();
    let (nx, ny, cell) = (d.nx(), d.ny(), d.cell_size());
    let mut polys: Vec<serde_json::Value> = Vec::new();
    for row in 0..ny {
        let y0 = y_min + row as f64 * cell;
        let y1 = y0 + cell;
        let mut col = 0;
        while col < nx {
            if !region.mask()[row * nx + col] {
                col += 1;
                continue;
            }
            let run_start = col;
            while col < nx && region.mask()[row * nx + col] {
                col += 1;
            }
            let x0 = x_min + run_start as f64 * cell;
            let x1 = x_min + col as f64 * cell;
            // One closed counter-clockwise ring per run.
            polys.push(serde_json::json!([[
                [x0, y0],
                [x1, y0],
                [x1, y1],
                [x0, y1],
                [x0, y0]
            ]]));
        }
    }
    let feature = serde_json::json!({
        "type": "Feature",
        "properties": {
            "coordinate_frame": "planar-miles",
            "cell_size_miles": cell,
            "area_fraction": region.area_fraction(),
        },
        "geometry": { "type": "MultiPolygon", "coordinates": polys },
    });
    atomic_write(path, serde_json::to_string_pretty(&feature)?.as_bytes())
}
