//! Landmark recordings: parsing, serialization, eligibility checks and rater consensus.
//!
//! Two on-disk layouts are supported:
//!
//! * `landmark-json`: one object per recording,
//!   `{"fps", "patient_id", "video_id", "med_state", "rater_scores", "frames": [{"i", "pts", "conf"?}]}`.
//! * `landmark-csv`: `frame,x0,y0,...,x20,y20` (optionally followed by `conf`) plus a JSON
//!   sidecar carrying the remaining recording fields.
//!
//! A frame whose points are absent (`null`, `[]`, empty CSV cells) or all exactly zero is
//! kept as a *missing* frame; signal building interpolates short gaps.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_LANDMARKS: usize = 21;
pub const WRIST: usize = 0;
pub const THUMB_TIP: usize = 4;
pub const INDEX_MCP: usize = 5;
pub const INDEX_TIP: usize = 8;

/// Default minimum recording length in seconds.
pub const MIN_DURATION_S: f64 = 8.0;
/// Longest tolerated run of missing landmarks, in seconds.
pub const MAX_GAP_S: f64 = 1.0;

/// Pixel coordinates `(x, y)`.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub index: usize,
    /// `None` when detection failed for this frame.
    pub points: Option<[Point; NUM_LANDMARKS]>,
    pub confidence: Option<f64>,
}

impl LandmarkFrame {
    pub fn new(index: usize, points: [Point; NUM_LANDMARKS], confidence: Option<f64>) -> Result<Self> {
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Schema {
                frame: index,
                message: "non-finite coordinate".into(),
            });
        }
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Schema {
                    frame: index,
                    message: format!("confidence {c} outside [0, 1]"),
                });
            }
        }
        let all_zero = points.iter().all(|p| p[0] == 0.0 && p[1] == 0.0);
        Ok(Self {
            index,
            points: if all_zero { None } else { Some(points) },
            confidence,
        })
    }

    pub fn missing(index: usize) -> Self {
        Self {
            index,
            points: None,
            confidence: None,
        }
    }

    pub fn is_missing(&self) -> bool {
        self.points.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MedState {
    On,
    Off,
    #[default]
    Unknown,
}

impl MedState {
    pub fn as_str(self) -> &'static str {
        match self {
            MedState::On => "on",
            MedState::Off => "off",
            MedState::Unknown => "unknown",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "on" => Some(MedState::On),
            "off" => Some(MedState::Off),
            "unknown" | "" => Some(MedState::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub frames: Vec<LandmarkFrame>,
    pub fps: f64,
    pub patient_id: String,
    pub video_id: String,
    pub med_state: MedState,
    pub rater_scores: Vec<u8>,
}

impl Recording {
    /// Builds a recording, checking the structural invariants.
    ///
    /// Frame ordering is not enforced here; [`validate_recording`] reports it.
    pub fn new(
        frames: Vec<LandmarkFrame>,
        fps: f64,
        patient_id: impl Into<String>,
        video_id: impl Into<String>,
        med_state: MedState,
        rater_scores: Vec<u8>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidRecording("recording has no frames".into()));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidRecording(format!("fps must be positive, got {fps}")));
        }
        if let Some(bad) = rater_scores.iter().find(|&&s| s > 4) {
            return Err(Error::InvalidRecording(format!("rater score {bad} outside 0..=4")));
        }
        Ok(Self {
            frames,
            fps,
            patient_id: patient_id.into(),
            video_id: video_id.into(),
            med_state,
            rater_scores,
        })
    }

    pub fn first_index(&self) -> usize {
        self.frames.first().map_or(0, |f| f.index)
    }

    pub fn last_index(&self) -> usize {
        self.frames.last().map_or(0, |f| f.index)
    }

    /// `(last index - first index + 1) / fps`.
    pub fn duration_s(&self) -> f64 {
        let first = self.first_index();
        let last = self.last_index().max(first);
        (last - first + 1) as f64 / self.fps
    }

    /// Runs of missing frames over the index span, as `(first missing index, length)`.
    /// Index holes count as missing frames.
    pub fn missing_runs(&self) -> Vec<(usize, usize)> {
        let first = self.first_index();
        let last = self.last_index().max(first);
        let mut valid: Vec<usize> = self
            .frames
            .iter()
            .filter(|f| !f.is_missing())
            .map(|f| f.index)
            .collect();
        valid.sort_unstable();
        valid.dedup();
        if valid.is_empty() {
            return vec![(first, last - first + 1)];
        }
        let mut runs = Vec::new();
        if valid[0] > first {
            runs.push((first, valid[0] - first));
        }
        for w in valid.windows(2) {
            if w[1] > w[0] + 1 {
                runs.push((w[0] + 1, w[1] - w[0] - 1));
            }
        }
        let end = *valid.last().unwrap();
        if last > end {
            runs.push((end + 1, last - end));
        }
        runs
    }

    /// Consensus label of the rater scores, if any.
    pub fn label(&self) -> Result<u8> {
        consensus_label(&self.rater_scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    TooShort,
    MissingLandmarks,
    NonmonotonicFrames,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::TooShort => "too_short",
            RejectReason::MissingLandmarks => "missing_landmarks",
            RejectReason::NonmonotonicFrames => "nonmonotonic_frames",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub eligible: bool,
    pub duration_s: f64,
    pub reasons: Vec<RejectReason>,
}

/// Checks a recording against the exclusion rules: minimum duration, missing-landmark
/// gaps longer than [`MAX_GAP_S`], and strictly increasing frame indices.
pub fn validate_recording(r: &Recording, min_duration_s: f64) -> ValidationReport {
    let duration_s = r.duration_s();
    let mut reasons = Vec::new();
    if duration_s < min_duration_s {
        reasons.push(RejectReason::TooShort);
    }
    let longest_gap = r.missing_runs().iter().map(|&(_, n)| n).max().unwrap_or(0);
    if longest_gap as f64 / r.fps > MAX_GAP_S {
        reasons.push(RejectReason::MissingLandmarks);
    }
    if r.frames.windows(2).any(|w| w[1].index <= w[0].index) {
        reasons.push(RejectReason::NonmonotonicFrames);
    }
    ValidationReport {
        eligible: reasons.is_empty(),
        duration_s,
        reasons,
    }
}

/// Median of the rater scores. An even number of raters with a half-integer median
/// is resolved by rounding half to even.
pub fn consensus_label(scores: &[u8]) -> Result<u8> {
    if scores.is_empty() {
        return Err(Error::NoLabel);
    }
    let mut s = scores.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 {
        return Ok(s[n / 2]);
    }
    let sum = u16::from(s[n / 2 - 1]) + u16::from(s[n / 2]);
    if sum.is_multiple_of(2) {
        return Ok((sum / 2) as u8);
    }
    let lower = (sum / 2) as u8;
    Ok(if lower.is_multiple_of(2) { lower } else { lower + 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkFormat {
    Json,
    Csv,
}

impl LandmarkFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(LandmarkFormat::Json),
            "csv" => Some(LandmarkFormat::Csv),
            _ => None,
        }
    }
}

/// Parses a recording. `sidecar` carries the metadata JSON required by the CSV layout.
pub fn parse_recording(raw: &[u8], format: LandmarkFormat, sidecar: Option<&[u8]>) -> Result<Recording> {
    match format {
        LandmarkFormat::Json => parse_json(raw),
        LandmarkFormat::Csv => {
            let meta = sidecar.ok_or_else(|| Error::parse("sidecar", "landmark-csv needs a metadata sidecar"))?;
            parse_csv(raw, meta)
        }
    }
}

/// Path of the metadata sidecar for a landmark CSV file (`name.csv` -> `name.meta.json`).
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Reads a recording from disk, choosing the layout by file extension.
pub fn read_recording(path: &Path) -> Result<Recording> {
    let format = LandmarkFormat::from_path(path)
        .ok_or_else(|| Error::parse(path.display().to_string(), "unknown landmark file extension"))?;
    let raw = std::fs::read(path)?;
    match format {
        LandmarkFormat::Json => parse_json(&raw),
        LandmarkFormat::Csv => {
            let meta = std::fs::read(sidecar_path(path))?;
            parse_csv(&raw, &meta)
        }
    }
}

#[derive(Deserialize)]
struct RawMeta {
    fps: f64,
    patient_id: String,
    video_id: String,
    #[serde(default)]
    med_state: Option<String>,
    #[serde(default)]
    rater_scores: Vec<i64>,
}

#[derive(Deserialize)]
struct RawJsonRecording {
    #[serde(flatten)]
    meta: RawMeta,
    frames: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
struct RawFrame {
    i: i64,
    #[serde(default)]
    pts: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    conf: Option<f64>,
}

fn build_recording(meta: RawMeta, mut frames: Vec<LandmarkFrame>) -> Result<Recording> {
    let med_state = match meta.med_state.as_deref() {
        None => MedState::Unknown,
        Some(s) => MedState::parse(s).ok_or_else(|| Error::parse("med_state", format!("unknown state `{s}`")))?,
    };
    let rater_scores = meta
        .rater_scores
        .iter()
        .map(|&s| {
            u8::try_from(s)
                .ok()
                .filter(|&v| v <= 4)
                .ok_or_else(|| Error::parse("rater_scores", format!("score {s} outside 0..=4")))
        })
        .collect::<Result<Vec<_>>>()?;
    frames.sort_by_key(|f| f.index);
    Recording::new(
        frames,
        meta.fps,
        meta.patient_id,
        meta.video_id,
        med_state,
        rater_scores,
    )
}

fn frame_index(i: i64, record: &str) -> Result<usize> {
    usize::try_from(i).map_err(|_| Error::parse(record, format!("negative frame index {i}")))
}

fn parse_json(raw: &[u8]) -> Result<Recording> {
    let rec: RawJsonRecording = serde_json::from_slice(raw).map_err(|e| Error::parse("recording", e))?;
    let mut frames = Vec::with_capacity(rec.frames.len());
    for (pos, value) in rec.frames.into_iter().enumerate() {
        let record = format!("frames[{pos}]");
        let f: RawFrame = serde_json::from_value(value).map_err(|e| Error::parse(record.as_str(), e))?;
        let index = frame_index(f.i, &record)?;
        let pts = f.pts.unwrap_or_default();
        if pts.is_empty() {
            frames.push(LandmarkFrame {
                index,
                points: None,
                confidence: f.conf,
            });
            continue;
        }
        if pts.len() != NUM_LANDMARKS {
            return Err(Error::Schema {
                frame: index,
                message: format!("expected {NUM_LANDMARKS} points, found {}", pts.len()),
            });
        }
        let mut points = [[0.0; 2]; NUM_LANDMARKS];
        for (k, p) in pts.iter().enumerate() {
            if p.len() != 2 {
                return Err(Error::Schema {
                    frame: index,
                    message: format!("point {k} has {} coordinates", p.len()),
                });
            }
            points[k] = [p[0], p[1]];
        }
        frames.push(LandmarkFrame::new(index, points, f.conf)?);
    }
    build_recording(rec.meta, frames)
}

fn parse_csv(raw: &[u8], sidecar: &[u8]) -> Result<Recording> {
    let meta: RawMeta = serde_json::from_slice(sidecar).map_err(|e| Error::parse("sidecar", e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw);
    let headers = reader.headers().map_err(|e| Error::parse("header", e))?.clone();
    let expected = csv_header(false);
    let has_conf = match headers.len() {
        n if n == expected.len() => false,
        n if n == expected.len() + 1 && &headers[n - 1] == "conf" => true,
        n => {
            return Err(Error::parse(
                "header",
                format!("expected {} columns, found {n}", expected.len()),
            ))
        }
    };
    if headers.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(Error::parse("header", "columns must be frame,x0,y0,...,x20,y20"));
    }
    let mut frames = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let record = format!("row {}", row + 1);
        let rec = rec.map_err(|e| Error::parse(record.as_str(), e))?;
        let index: usize = rec[0]
            .trim()
            .parse()
            .map_err(|e| Error::parse(record.as_str(), format!("frame index: {e}")))?;
        let confidence = if has_conf && !rec[1 + 2 * NUM_LANDMARKS].trim().is_empty() {
            Some(
                rec[1 + 2 * NUM_LANDMARKS]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(record.as_str(), format!("conf: {e}")))?,
            )
        } else {
            None
        };
        let cells: Vec<&str> = (1..=2 * NUM_LANDMARKS).map(|c| rec[c].trim()).collect();
        let blank = cells.iter().filter(|c| c.is_empty()).count();
        if blank == cells.len() {
            frames.push(LandmarkFrame {
                index,
                points: None,
                confidence,
            });
            continue;
        }
        if blank > 0 {
            let present = (cells.len() - blank) / 2;
            return Err(Error::Schema {
                frame: index,
                message: format!("expected {NUM_LANDMARKS} points, found {present}"),
            });
        }
        let mut points = [[0.0; 2]; NUM_LANDMARKS];
        for (k, p) in points.iter_mut().enumerate() {
            for (d, v) in p.iter_mut().enumerate() {
                *v = cells[2 * k + d]
                    .parse()
                    .map_err(|e| Error::parse(record.as_str(), format!("point {k}: {e}")))?;
            }
        }
        frames.push(LandmarkFrame::new(index, points, confidence)?);
    }
    build_recording(meta, frames)
}

fn csv_header(with_conf: bool) -> Vec<String> {
    let mut h = vec!["frame".to_string()];
    for k in 0..NUM_LANDMARKS {
        h.push(format!("x{k}"));
        h.push(format!("y{k}"));
    }
    if with_conf {
        h.push("conf".into());
    }
    h
}

#[derive(Serialize)]
struct MetaOut<'a> {
    fps: f64,
    patient_id: &'a str,
    video_id: &'a str,
    med_state: &'static str,
    rater_scores: &'a [u8],
}

#[derive(Serialize)]
struct FrameOut<'a> {
    i: usize,
    pts: Option<&'a [Point; NUM_LANDMARKS]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conf: Option<f64>,
}

#[derive(Serialize)]
struct RecordingOut<'a> {
    #[serde(flatten)]
    meta: MetaOut<'a>,
    frames: Vec<FrameOut<'a>>,
}

fn meta_out(r: &Recording) -> MetaOut<'_> {
    MetaOut {
        fps: r.fps,
        patient_id: &r.patient_id,
        video_id: &r.video_id,
        med_state: r.med_state.as_str(),
        rater_scores: &r.rater_scores,
    }
}

/// Serializes to the `landmark-json` layout.
pub fn to_json(r: &Recording) -> String {
    let out = RecordingOut {
        meta: meta_out(r),
        frames: r
            .frames
            .iter()
            .map(|f| FrameOut {
                i: f.index,
                pts: f.points.as_ref(),
                conf: f.confidence,
            })
            .collect(),
    };
    serde_json::to_string(&out).expect("recording serializes")
}

/// Serializes to the `landmark-csv` layout, returning `(csv, sidecar json)`.
pub fn to_csv(r: &Recording) -> (String, String) {
    let with_conf = r.frames.iter().any(|f| f.confidence.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(with_conf)).expect("in-memory write");
    for f in &r.frames {
        let mut row = Vec::with_capacity(2 + 2 * NUM_LANDMARKS);
        row.push(f.index.to_string());
        match &f.points {
            Some(pts) => row.extend(pts.iter().flat_map(|p| [p[0].to_string(), p[1].to_string()])),
            None => row.extend(std::iter::repeat_n(String::new(), 2 * NUM_LANDMARKS)),
        }
        if with_conf {
            row.push(f.confidence.map(|c| c.to_string()).unwrap_or_default());
        }
        w.write_record(&row).expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("flush")).expect("utf8");
    let meta = serde_json::to_string(&meta_out(r)).expect("metadata serializes");
    (csv, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand(offset: f64) -> [Point; NUM_LANDMARKS] {
        let mut pts = [[0.0; 2]; NUM_LANDMARKS];
        for (k, p) in pts.iter_mut().enumerate() {
            *p = [10.0 + k as f64 + offset, 20.0 + 2.0 * k as f64];
        }
        pts
    }

    fn recording(n: usize, fps: f64) -> Recording {
        let frames = (0..n)
            .map(|i| LandmarkFrame::new(i, hand(i as f64 * 0.1), None).unwrap())
            .collect();
        Recording::new(frames, fps, "p1", "v1", MedState::Off, vec![2]).unwrap()
    }

    #[test]
    fn single_frame_json() {
        let pts: Vec<String> = (0..21).map(|k| format!("[{k}.5,{}]", k + 1)).collect();
        let raw = format!(
            r#"{{"fps":25,"patient_id":"p","video_id":"v","med_state":"on","rater_scores":[1],"frames":[{{"i":0,"pts":[{}]}}]}}"#,
            pts.join(",")
        );
        let r = parse_recording(raw.as_bytes(), LandmarkFormat::Json, None).unwrap();
        assert_eq!(r.frames.len(), 1);
        assert!((r.duration_s() - 0.04).abs() < 1e-12);
        assert_eq!(r.med_state, MedState::On);
    }

    #[test]
    fn twenty_points_is_schema_error() {
        let pts: Vec<String> = (0..20).map(|k| format!("[{k},1]")).collect();
        let raw = format!(
            r#"{{"fps":25,"patient_id":"p","video_id":"v","frames":[{{"i":0,"pts":[[1,1],{}]}},{{"i":1,"pts":[{}]}}]}}"#,
            pts.join(","),
            pts.join(",")
        );
        match parse_recording(raw.as_bytes(), LandmarkFormat::Json, None) {
            Err(Error::Schema { frame, .. }) => assert_eq!(frame, 1),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_frame_names_record() {
        let raw = br#"{"fps":25,"patient_id":"p","video_id":"v","frames":[{"i":0,"pts":null},{"i":"x"}]}"#;
        match parse_recording(raw, LandmarkFormat::Json, None) {
            Err(Error::Parse { record, .. }) => assert_eq!(record, "frames[1]"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_row_with_missing_point() {
        let r = recording(2, 25.0);
        let (csv, meta) = to_csv(&r);
        let mut lines: Vec<String> = csv.lines().map(str::to_string).collect();
        // blank out the last point of the second frame
        let mut cells: Vec<&str> = lines[2].split(',').collect();
        let n = cells.len();
        cells[n - 1] = "";
        cells[n - 2] = "";
        lines[2] = cells.join(",");
        let broken = lines.join("\n");
        match parse_recording(broken.as_bytes(), LandmarkFormat::Csv, Some(meta.as_bytes())) {
            Err(Error::Schema { frame, message }) => {
                assert_eq!(frame, 1);
                assert!(message.contains("20"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_both_formats() {
        let mut r = recording(30, 30.0);
        r.frames[4] = LandmarkFrame::missing(4);
        r.frames[7].confidence = Some(0.75);
        r.rater_scores = vec![1, 3, 2];
        let json = to_json(&r);
        assert_eq!(parse_recording(json.as_bytes(), LandmarkFormat::Json, None).unwrap(), r);
        let (csv, meta) = to_csv(&r);
        assert_eq!(
            parse_recording(csv.as_bytes(), LandmarkFormat::Csv, Some(meta.as_bytes())).unwrap(),
            r
        );
    }

    #[test]
    fn all_zero_points_are_missing() {
        let f = LandmarkFrame::new(3, [[0.0; 2]; NUM_LANDMARKS], None).unwrap();
        assert!(f.is_missing());
    }

    #[test]
    fn validate_duration_rules() {
        let ok = validate_recording(&recording(250, 25.0), MIN_DURATION_S);
        assert!(ok.eligible);
        assert!((ok.duration_s - 10.0).abs() < 1e-12);
        let short = validate_recording(&recording(150, 25.0), MIN_DURATION_S);
        assert!((short.duration_s - 6.0).abs() < 1e-12);
        assert_eq!(short.reasons, vec![RejectReason::TooShort]);
        assert!(!short.eligible);
    }

    #[test]
    fn long_gap_is_rejected_short_gap_is_not() {
        let mut r = recording(250, 25.0);
        for f in &mut r.frames[100..125] {
            f.points = None;
        }
        // 25 frames at 25 fps is exactly 1 s: tolerated
        assert!(validate_recording(&r, MIN_DURATION_S).eligible);
        r.frames[125].points = None;
        let rep = validate_recording(&r, MIN_DURATION_S);
        assert_eq!(rep.reasons, vec![RejectReason::MissingLandmarks]);

        // index holes count as missing frames too
        let mut holes = recording(250, 25.0);
        holes.frames.drain(50..80);
        assert_eq!(holes.missing_runs(), vec![(50, 30)]);
        assert!(!validate_recording(&holes, MIN_DURATION_S).eligible);
    }

    #[test]
    fn nonmonotonic_frames_reported() {
        let mut r = recording(250, 25.0);
        r.frames[10].index = 9;
        let rep = validate_recording(&r, MIN_DURATION_S);
        assert!(rep.reasons.contains(&RejectReason::NonmonotonicFrames));
    }

    #[test]
    fn consensus_examples() {
        assert_eq!(consensus_label(&[3]).unwrap(), 3);
        assert_eq!(consensus_label(&[2, 3, 3]).unwrap(), 3);
        assert_eq!(consensus_label(&[2, 3]).unwrap(), 2);
        assert!(matches!(consensus_label(&[]), Err(Error::NoLabel)));
    }

    #[test]
    fn two_rater_pairs_round_half_even() {
        // oracle: exact median as a rational, then banker's rounding
        for a in 0..=4u8 {
            for b in 0..=4u8 {
                let twice = u32::from(a) + u32::from(b);
                let expected = if twice % 2 == 0 {
                    twice / 2
                } else {
                    let lo = twice / 2;
                    if lo % 2 == 0 {
                        lo
                    } else {
                        lo + 1
                    }
                };
                assert_eq!(u32::from(consensus_label(&[a, b]).unwrap()), expected, "{a},{b}");
            }
        }
    }
}
