//! CSV layouts for every table the pipeline writes, with matching readers.
//!
//! Floats are written in shortest round-trip form, so reading a written file
//! reproduces the values exactly.

use csv::StringRecord;

use crate::classify::{Prediction, TrainingTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::NUM_CLASSES;
use crate::pca::{FeatureTable, RowKey};
use crate::scalar::Scalar;
use crate::signal::{speed_signal, CycleSeries, TapSignal};

fn write_csv<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|s| s.as_ref()))
        .expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn read_csv(name: &str, text: &str) -> Result<(StringRecord, Vec<StringRecord>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::parse(name, e))?.clone();
    let rows = r
        .records()
        .enumerate()
        .map(|(i, rec)| rec.map_err(|e| Error::parse(format!("{name} row {}", i + 1), e)))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

fn expect_header(name: &str, got: &StringRecord, want: &[&str]) -> Result<()> {
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::parse(
            name,
            format!(
                "expected header `{}`, got `{}`",
                want.join(","),
                got.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn field<'a>(name: &str, row: usize, rec: &'a StringRecord, col: usize) -> Result<&'a str> {
    rec.get(col)
        .ok_or_else(|| Error::parse(format!("{name} row {row}"), format!("missing column {col}")))
}

fn num<V: std::str::FromStr>(name: &str, row: usize, rec: &StringRecord, col: usize) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    let s = field(name, row, rec, col)?;
    s.parse()
        .map_err(|e| Error::parse(format!("{name} row {row}"), format!("column {col} `{s}`: {e}")))
}

fn opt_num<V: std::str::FromStr>(name: &str, row: usize, rec: &StringRecord, col: usize) -> Result<Option<V>>
where
    V::Err: std::fmt::Display,
{
    if field(name, row, rec, col)?.is_empty() {
        Ok(None)
    } else {
        num(name, row, rec, col).map(Some)
    }
}

fn fmt<T: Scalar>(v: T) -> String {
    v.as_f64().to_string()
}

fn fmt_opt<T: Scalar>(v: Option<T>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Feature rows keyed by video and patient, with an optional severity label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile<T> {
    pub table: FeatureTable<T>,
    pub labels: Vec<Option<u8>>,
}

impl<T: Scalar> FeatureFile<T> {
    /// All rows must be labelled.
    pub fn into_training(self) -> Result<TrainingTable<T>> {
        let labels = self
            .labels
            .iter()
            .zip(&self.table.keys)
            .map(|(l, k)| l.ok_or_else(|| Error::InvalidInput(format!("row `{}` has no label", k.video_id))))
            .collect::<Result<Vec<u8>>>()?;
        TrainingTable::new(self.table, labels)
    }

    pub fn from_training(t: &TrainingTable<T>) -> Self {
        Self {
            table: t.features.clone(),
            labels: t.labels.iter().map(|&l| Some(l)).collect(),
        }
    }
}

const FEATURE_KEYS: [&str; 3] = ["video_id", "patient_id", "label"];

/// `video_id,patient_id,label,<feature columns>`; an empty label means unlabelled.
pub fn write_features<T: Scalar>(f: &FeatureFile<T>) -> String {
    let header: Vec<&str> = FEATURE_KEYS
        .iter()
        .copied()
        .chain(f.table.columns.iter().map(String::as_str))
        .collect();
    write_csv(
        &header,
        (0..f.table.n_rows()).map(|r| {
            let k = &f.table.keys[r];
            let mut row = vec![
                k.video_id.clone(),
                k.patient_id.clone(),
                f.labels[r].map(|l| l.to_string()).unwrap_or_default(),
            ];
            row.extend(f.table.data.row(r).iter().map(|&v| fmt(v)));
            row
        }),
    )
}

pub fn read_features<T: Scalar>(text: &str) -> Result<FeatureFile<T>> {
    let name = "features";
    let (header, rows) = read_csv(name, text)?;
    if header.len() <= FEATURE_KEYS.len() || header.iter().take(3).ne(FEATURE_KEYS) {
        return Err(Error::parse(
            name,
            format!("header must start with `{}`", FEATURE_KEYS.join(",")),
        ));
    }
    let columns: Vec<String> = header.iter().skip(3).map(String::from).collect();
    let mut keys = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * columns.len());
    for (i, rec) in rows.iter().enumerate() {
        let row = i + 1;
        if rec.len() != header.len() {
            return Err(Error::parse(
                format!("{name} row {row}"),
                format!("{} fields, expected {}", rec.len(), header.len()),
            ));
        }
        keys.push(RowKey::new(field(name, row, rec, 0)?, field(name, row, rec, 1)?));
        labels.push(opt_num::<u8>(name, row, rec, 2)?);
        for c in 3..header.len() {
            data.push(T::lit(num::<f64>(name, row, rec, c)?));
        }
    }
    let table = FeatureTable::new(columns.clone(), keys, Matrix::from_vec(rows.len(), columns.len(), data))?;
    Ok(FeatureFile { table, labels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow<T> {
    pub video_id: String,
    pub truth: u8,
    pub prediction: Prediction<T>,
}

const PREDICTION_HEADER: [&str; 8] = ["video_id", "true", "pred", "p0", "p1", "p2", "p3", "p4"];

pub fn write_predictions<T: Scalar>(rows: &[PredictionRow<T>]) -> String {
    write_csv(
        &PREDICTION_HEADER,
        rows.iter().map(|r| {
            let mut out = vec![r.video_id.clone(), r.truth.to_string(), r.prediction.label.to_string()];
            out.extend(r.prediction.probs.iter().map(|&p| fmt(p)));
            out
        }),
    )
}

pub fn read_predictions<T: Scalar>(text: &str) -> Result<Vec<PredictionRow<T>>> {
    let name = "predictions";
    let (header, rows) = read_csv(name, text)?;
    expect_header(name, &header, &PREDICTION_HEADER)?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let mut probs = [T::zero(); NUM_CLASSES];
            for (k, p) in probs.iter_mut().enumerate() {
                *p = T::lit(num::<f64>(name, row, rec, 3 + k)?);
            }
            Ok(PredictionRow {
                video_id: field(name, row, rec, 0)?.to_string(),
                truth: num(name, row, rec, 1)?,
                prediction: Prediction {
                    probs,
                    label: num(name, row, rec, 2)?,
                },
            })
        })
        .collect()
}

/// One metric value, optionally with a confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub model: String,
    pub metric: String,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
}

const METRIC_HEADER: [&str; 5] = ["model", "metric", "value", "ci_low", "ci_high"];

pub fn write_metrics(rows: &[MetricRow]) -> String {
    write_csv(
        &METRIC_HEADER,
        rows.iter().map(|r| {
            vec![
                r.model.clone(),
                r.metric.clone(),
                fmt(r.value),
                fmt_opt(r.ci.map(|c| c.0)),
                fmt_opt(r.ci.map(|c| c.1)),
            ]
        }),
    )
}

pub fn read_metrics(text: &str) -> Result<Vec<MetricRow>> {
    let name = "metrics";
    let (header, rows) = read_csv(name, text)?;
    expect_header(name, &header, &METRIC_HEADER)?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let lo = opt_num::<f64>(name, row, rec, 3)?;
            let hi = opt_num::<f64>(name, row, rec, 4)?;
            Ok(MetricRow {
                model: field(name, row, rec, 0)?.to_string(),
                metric: field(name, row, rec, 1)?.to_string(),
                value: num(name, row, rec, 2)?,
                ci: lo.zip(hi),
            })
        })
        .collect()
}

/// A matrix with a label per row and named columns, e.g. loadings
/// (`feature,PC1,...`) or explained variance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledMatrix<T> {
    pub corner: String,
    pub row_labels: Vec<String>,
    pub columns: Vec<String>,
    pub data: Matrix<T>,
}

pub fn write_matrix<T: Scalar>(m: &LabelledMatrix<T>) -> String {
    let header: Vec<&str> = std::iter::once(m.corner.as_str())
        .chain(m.columns.iter().map(String::as_str))
        .collect();
    write_csv(
        &header,
        m.row_labels.iter().enumerate().map(|(r, label)| {
            std::iter::once(label.clone())
                .chain(m.data.row(r).iter().map(|&v| fmt(v)))
                .collect()
        }),
    )
}

pub fn read_matrix<T: Scalar>(text: &str) -> Result<LabelledMatrix<T>> {
    let name = "matrix";
    let (header, rows) = read_csv(name, text)?;
    if header.is_empty() {
        return Err(Error::parse(name, "empty header"));
    }
    let columns: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut row_labels = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in rows.iter().enumerate() {
        if rec.len() != header.len() {
            return Err(Error::parse(format!("{name} row {}", i + 1), "ragged row"));
        }
        row_labels.push(field(name, i + 1, rec, 0)?.to_string());
        for c in 1..header.len() {
            data.push(T::lit(num::<f64>(name, i + 1, rec, c)?));
        }
    }
    Ok(LabelledMatrix {
        corner: header[0].to_string(),
        data: Matrix::from_vec(row_labels.len(), columns.len(), data),
        row_labels,
        columns,
    })
}

/// Per-frame signal values; `speed` is the forward difference and is empty on the
/// last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRow {
    pub frame: usize,
    pub time_s: f64,
    pub value: f64,
    pub speed: Option<f64>,
    pub interpolated: bool,
}

const SIGNAL_HEADER: [&str; 5] = ["frame", "time_s", "value", "speed", "interpolated"];

pub fn signal_rows<T: Scalar>(s: &TapSignal<T>, first_frame: usize) -> Vec<SignalRow> {
    let speed = speed_signal(s);
    (0..s.len())
        .map(|i| SignalRow {
            frame: first_frame + i,
            time_s: s.time(i).as_f64(),
            value: s.samples[i].as_f64(),
            speed: speed.samples.get(i).map(|v| v.as_f64()),
            interpolated: s.interpolated[i],
        })
        .collect()
}

pub fn write_signal(rows: &[SignalRow]) -> String {
    write_csv(
        &SIGNAL_HEADER,
        rows.iter().map(|r| {
            vec![
                r.frame.to_string(),
                fmt(r.time_s),
                fmt(r.value),
                fmt_opt(r.speed),
                u8::from(r.interpolated).to_string(),
            ]
        }),
    )
}

pub fn read_signal(text: &str) -> Result<Vec<SignalRow>> {
    let name = "signal";
    let (header, rows) = read_csv(name, text)?;
    expect_header(name, &header, &SIGNAL_HEADER)?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            Ok(SignalRow {
                frame: num(name, row, rec, 0)?,
                time_s: num(name, row, rec, 1)?,
                value: num(name, row, rec, 2)?,
                speed: opt_num(name, row, rec, 3)?,
                interpolated: num::<u8>(name, row, rec, 4)? != 0,
            })
        })
        .collect()
}

/// One detected peak. The first peak may lack a preceding trough and hence an
/// amplitude; the last peak has no interval or per-cycle speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRow {
    pub peak_frame: usize,
    pub peak_time_s: f64,
    pub amplitude: Option<f64>,
    pub interval_s: Option<f64>,
    pub avg_speed: Option<f64>,
    pub max_speed: Option<f64>,
}

const CYCLE_HEADER: [&str; 6] = ["peak_frame", "peak_time_s", "amplitude", "interval_s", "cas", "cms"];

pub fn cycle_rows<T: Scalar>(c: &CycleSeries<T>, first_frame: usize) -> Vec<CycleRow> {
    let n = c.peak_indices.len();
    let skip = n - c.amplitudes.len();
    (0..n)
        .map(|j| CycleRow {
            peak_frame: first_frame + c.peak_indices[j],
            peak_time_s: c.peak_times[j].as_f64(),
            amplitude: j.checked_sub(skip).map(|a| c.amplitudes[a].as_f64()),
            interval_s: c.intervals.get(j).map(|v| v.as_f64()),
            avg_speed: c.cycle_avg_speed.get(j).map(|v| v.as_f64()),
            max_speed: c.cycle_max_speed.get(j).map(|v| v.as_f64()),
        })
        .collect()
}

pub fn write_cycles(rows: &[CycleRow]) -> String {
    write_csv(
        &CYCLE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.peak_frame.to_string(),
                fmt(r.peak_time_s),
                fmt_opt(r.amplitude),
                fmt_opt(r.interval_s),
                fmt_opt(r.avg_speed),
                fmt_opt(r.max_speed),
            ]
        }),
    )
}

pub fn read_cycles(text: &str) -> Result<Vec<CycleRow>> {
    let name = "cycles";
    let (header, rows) = read_csv(name, text)?;
    expect_header(name, &header, &CYCLE_HEADER)?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            Ok(CycleRow {
                peak_frame: num(name, row, rec, 0)?,
                peak_time_s: num(name, row, rec, 1)?,
                amplitude: opt_num(name, row, rec, 2)?,
                interval_s: opt_num(name, row, rec, 3)?,
                avg_speed: opt_num(name, row, rec, 4)?,
                max_speed: opt_num(name, row, rec, 5)?,
            })
        })
        .collect()
}

/// Two-column text table, e.g. `video_id,reason` for rejected recordings.
pub fn write_pairs(header: [&str; 2], rows: &[(String, String)]) -> String {
    write_csv(&header, rows.iter().map(|(a, b)| vec![a.clone(), b.clone()]))
}

pub fn read_pairs(text: &str, header: [&str; 2]) -> Result<Vec<(String, String)>> {
    let name = header[0];
    let (got, rows) = read_csv(name, text)?;
    expect_header(name, &got, &header)?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok((
                field(name, i + 1, rec, 0)?.to_string(),
                field(name, i + 1, rec, 1)?.to_string(),
            ))
        })
        .collect()
}
