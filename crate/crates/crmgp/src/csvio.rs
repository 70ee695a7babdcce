//! CSV formats. Every file starts with a `#` comment line carrying the config
//! hash and dataset seed; readers skip `#` lines.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crmgp_core::metrics::EvalReport;
use crmgp_core::points::PointSet;
use crmgp_core::windfield::{Dataset, Split};

use crate::error::{Result, RunError};
use crate::netsim::{RunLedger, TraceRow};

/// Provenance written as the first line of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header_line(&self) -> String {
        format!("# crmgp config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

/// Builds a CSV body in memory and writes it in one go.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        writer.write_record(header).expect("write to memory");
        CsvTable { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("write to memory");
    }

    pub fn into_bytes(self, provenance: &Provenance) -> Vec<u8> {
        let body = self.writer.into_inner().expect("flush to memory");
        let mut out = provenance.header_line().into_bytes();
        out.extend(body);
        out
    }
}

pub fn float(v: f64) -> String {
    format!("{v}")
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(RunError::io(&tmp))?;
        f.write_all(bytes).map_err(RunError::io(&tmp))?;
        f.sync_all().map_err(RunError::io(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(RunError::io(path))
}

pub const METRICS_HEADER: [&str; 6] = ["model", "nlpd_u", "nlpd_v", "ci_u", "ci_v", "rmse"];

fn report_fields(r: &EvalReport) -> [String; 5] {
    [
        float(r.nlpd_per_output[0]),
        float(r.nlpd_per_output[1]),
        float(r.ci95_coverage_per_output[0]),
        float(r.ci95_coverage_per_output[1]),
        float(r.rmse),
    ]
}

pub fn metrics_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a EvalReport)>) -> CsvTable {
    let mut t = CsvTable::new(&METRICS_HEADER);
    for (name, r) in rows {
        let f = report_fields(r);
        t.row(std::iter::once(name.to_string()).chain(f));
    }
    t
}

pub fn node_metrics_table(reports: &[EvalReport]) -> CsvTable {
    let mut t = CsvTable::new(&["node", "nlpd_u", "nlpd_v", "ci_u", "ci_v", "rmse"]);
    for (i, r) in reports.iter().enumerate() {
        t.row(std::iter::once(i.to_string()).chain(report_fields(r)));
    }
    t
}

/// `x, y, U, V` per grid cell, point-major values.
pub fn field_grid_table(points: &PointSet, values: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["x", "y", "U", "V"]);
    for (i, p) in points.iter().enumerate() {
        t.row([float(p[0]), float(p[1]), float(values[2 * i]), float(values[2 * i + 1])]);
    }
    t
}

pub fn error_grid_table(points: &PointSet, err: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["x", "y", "err"]);
    for (p, e) in points.iter().zip(err) {
        t.row([float(p[0]), float(p[1]), float(*e)]);
    }
    t
}

pub fn trace_table(trace: &[TraceRow]) -> CsvTable {
    let mut t = CsvTable::new(&["step", "round", "disagreement"]);
    for r in trace {
        t.row([r.step.to_string(), r.round.to_string(), float(r.disagreement)]);
    }
    t
}

pub fn ledger_table(ledger: &RunLedger) -> CsvTable {
    let mut t = CsvTable::new(&["step", "node", "flops_est", "bytes_sent", "rounds", "wall_ns"]);
    for r in &ledger.rows {
        t.row([
            r.step.to_string(),
            r.node.to_string(),
            r.flops_est.to_string(),
            r.bytes_sent.to_string(),
            r.rounds.to_string(),
            r.wall_ns.to_string(),
        ]);
    }
    t
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Test => "test",
    }
}

/// `x1, x2, u, v, split, agent`; `agent` is blank for unassigned data.
pub fn dataset_table(data: &Dataset) -> CsvTable {
    let mut t = CsvTable::new(&["x1", "x2", "u", "v", "split", "agent"]);
    for i in 0..data.len() {
        let p = data.inputs.point(i);
        let y = data.output(i);
        t.row([
            float(p[0]),
            float(p[1]),
            float(y[0]),
            float(y[1]),
            split_name(data.split[i]).to_string(),
            data.agent[i].map(|a| a.to_string()).unwrap_or_default(),
        ]);
    }
    t
}

/// Reads a dataset written by [`dataset_table`]. The noise-free field is not
/// stored, so `truth` comes back empty.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(RunError::io(path))?;
    parse_dataset(&text).map_err(|message| RunError::Format { path: path.to_path_buf(), message })
}

pub fn parse_dataset(text: &str) -> std::result::Result<Dataset, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != ["x1", "x2", "u", "v", "split", "agent"] {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut coords = Vec::new();
    let mut outputs = Vec::new();
    let mut split = Vec::new();
    let mut agent = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let num = |k: usize| -> std::result::Result<f64, String> {
            record[k].parse::<f64>().map_err(|e| format!("record {line}, column {k}: {e}"))
        };
        coords.extend([num(0)?, num(1)?]);
        outputs.extend([num(2)?, num(3)?]);
        split.push(match &record[4] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(format!("record {line}: unknown split `{other}`")),
        });
        agent.push(match &record[5] {
            "" => None,
            a => Some(a.parse::<usize>().map_err(|e| format!("record {line}, agent: {e}"))?),
        });
    }
    let inputs = PointSet::new(2, coords).map_err(|e| e.to_string())?;
    Ok(Dataset { inputs, outputs, truth: Vec::new(), split, agent })
}
