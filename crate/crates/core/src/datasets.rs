//! Persistence: labeled datasets (JSONL), policy checkpoints (JSON), and
//! reward traces (CSV).
//!
//! Dataset files are self-describing: line 1 is a JSON header carrying the
//! format version, the grid values (meters/radians), and the feature
//! dimension; every following line is one JSON record. Checkpoints are a
//! single JSON object `{"header": {format_version, architecture, grid,
//! seed}, "params": [..]}` with parameters stored as f64. Numbers are
//! serialized as shortest round-trip decimals, so all round-trips are
//! lossless at double precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ActionIndex, AxisGrid, GridSpec};
use crate::policy::{PolicyArchitecture, PolicyParams};
use crate::scalar::Real;

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Training phase a trace row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Online,
    OfflineScene,
    OfflineReplay,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Online => "online",
            Phase::OfflineScene => "offline_scene",
            Phase::OfflineReplay => "offline_replay",
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "online" => Ok(Phase::Online),
            "offline_scene" => Ok(Phase::OfflineScene),
            "offline_replay" => Ok(Phase::OfflineReplay),
            other => Err(Error::InvalidConfig(format!("unknown phase: {other}"))),
        }
    }
}

/// Grid values as stored in file headers (meters/radians, f64).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFileSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yaw: Vec<f64>,
}

impl GridFileSpec {
    pub fn from_grid<T: Real>(grid: &GridSpec<T>) -> Self {
        let to_f64 = |axis: &AxisGrid<T>| axis.values().iter().map(|v| v.to_f64_lossy()).collect();
        Self {
            x: to_f64(&grid.x),
            y: to_f64(&grid.y),
            yaw: to_f64(&grid.yaw),
        }
    }

    pub fn to_grid<T: Real>(&self) -> Result<GridSpec<T>> {
        let from_f64 = |values: &[f64]| AxisGrid::from_values(values.iter().map(|&v| T::of(v)).collect());
        Ok(GridSpec::new(
            from_f64(&self.x)?,
            from_f64(&self.y)?,
            from_f64(&self.yaw)?,
        ))
    }

    pub fn head_sizes(&self) -> [usize; 3] {
        [self.x.len(), self.y.len(), self.yaw.len()]
    }

    fn shape_string(&self) -> String {
        format!("grid ({}, {}, {})", self.x.len(), self.y.len(), self.yaw.len())
    }

    pub fn ensure_matches(&self, expected: &GridFileSpec) -> Result<()> {
        if self != expected {
            return Err(Error::GridMismatch {
                found: self.shape_string(),
                expected: expected.shape_string(),
            });
        }
        Ok(())
    }

    fn contains(&self, index: [usize; 3]) -> bool {
        index[0] < self.x.len() && index[1] < self.y.len() && index[2] < self.yaw.len()
    }
}

/// Header line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub grid: GridFileSpec,
    pub feature_dim: usize,
}

impl DatasetHeader {
    pub fn new<T: Real>(grid: &GridSpec<T>, feature_dim: usize) -> Self {
        Self {
            format_version: DATASET_FORMAT_VERSION,
            grid: GridFileSpec::from_grid(grid),
            feature_dim,
        }
    }
}

/// One persisted labeled step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub scene_id: u64,
    pub step: u64,
    pub est_pose: [f64; 3],
    pub feature: Vec<f64>,
    pub action: [usize; 3],
    pub reward: f64,
    pub label: [usize; 3],
}

impl DatasetRecord {
    pub fn action_index(&self) -> ActionIndex {
        ActionIndex::new(self.action[0], self.action[1], self.action[2])
    }

    pub fn label_index(&self) -> ActionIndex {
        ActionIndex::new(self.label[0], self.label[1], self.label[2])
    }
}

fn validate_record(record: &DatasetRecord, header: &DatasetHeader, line: usize) -> Result<()> {
    if record.feature.len() != header.feature_dim {
        return Err(Error::Malformed {
            line,
            msg: format!(
                "feature has {} entries, header says {}",
                record.feature.len(),
                header.feature_dim
            ),
        });
    }
    for (name, index) in [("action", record.action), ("label", record.label)] {
        if !header.grid.contains(index) {
            return Err(Error::Malformed {
                line,
                msg: format!("{name} {index:?} outside header grids"),
            });
        }
    }
    Ok(())
}

/// Incremental dataset writer. Each `append_scene` call lands as one flushed
/// write, so a reader polling the file sees whole scenes only.
pub struct DatasetWriter {
    out: BufWriter<File>,
    header: DatasetHeader,
    lines_written: usize,
}

impl DatasetWriter {
    pub fn create(path: &Path, header: DatasetHeader) -> Result<Self> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        let line = serde_json::to_string(&header)
            .map_err(|e| Error::InvalidConfig(format!("header serialization: {e}")))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(Self {
            out,
            header,
            lines_written: 1,
        })
    }

    /// Appends all records of one scene atomically; empty input is a no-op.
    /// Validation happens before anything is written, so a rejected scene
    /// leaves the file untouched.
    pub fn append_scene(&mut self, records: &[DatasetRecord]) -> Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        for (i, record) in records.iter().enumerate() {
            validate_record(record, &self.header, self.lines_written + 1 + i)?;
        }
        let mut buf = String::new();
        for record in records {
            buf.push_str(&serde_json::to_string(record).map_err(|e| Error::InvalidConfig(e.to_string()))?);
            buf.push('\n');
        }
        self.out.write_all(buf.as_bytes())?;
        self.out.flush()?;
        self.lines_written += records.len();
        Ok(())
    }
}

/// Writes a whole dataset in one go.
pub fn write_dataset(path: &Path, header: DatasetHeader, records: &[DatasetRecord]) -> Result<()> {
    let mut writer = DatasetWriter::create(path, header)?;
    writer.append_scene(records)
}

/// Reads a dataset file back, validating the header and every record.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or(Error::Malformed {
            line: 1,
            msg: "missing header".into(),
        })??;
    let header: DatasetHeader = serde_json::from_str(&header_line).map_err(|e| Error::Malformed {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: header.format_version,
            supported: DATASET_FORMAT_VERSION,
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: line_no,
            msg: e.to_string(),
        })?;
        validate_record(&record, &header, line_no)?;
        records.push(record);
    }
    Ok((header, records))
}

/// Checkpoint header: everything needed to validate a parameter vector
/// against a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub architecture: PolicyArchitecture,
    pub grid: GridFileSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new<T: Real>(params: &PolicyParams<T>, grid: &GridSpec<T>, seed: u64) -> Self {
        Self {
            header: CheckpointHeader {
                format_version: CHECKPOINT_FORMAT_VERSION,
                architecture: params.arch().clone(),
                grid: GridFileSpec::from_grid(grid),
                seed,
            },
            params: params.values().iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    pub fn to_policy_params<T: Real>(&self) -> Result<PolicyParams<T>> {
        PolicyParams::from_values(
            self.header.architecture.clone(),
            self.params.iter().map(|&v| T::of(v)).collect(),
        )
    }

    /// Validates this checkpoint against a run's grid and architecture.
    pub fn ensure_compatible(&self, grid: &GridFileSpec, arch: &PolicyArchitecture) -> Result<()> {
        self.header.grid.ensure_matches(grid)?;
        if self.header.architecture != *arch {
            return Err(Error::ArchMismatch(format!(
                "checkpoint {:?}, run {:?}",
                self.header.architecture, arch
            )));
        }
        Ok(())
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer(&mut out, checkpoint).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path)?;
    let checkpoint: Checkpoint = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Malformed {
        line: e.line(),
        msg: e.to_string(),
    })?;
    if checkpoint.header.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: checkpoint.header.format_version,
            supported: CHECKPOINT_FORMAT_VERSION,
        });
    }
    let expected = checkpoint.header.architecture.param_count();
    if checkpoint.params.len() != expected {
        return Err(Error::ArchMismatch(format!(
            "checkpoint has {} parameters, architecture expects {expected}",
            checkpoint.params.len()
        )));
    }
    Ok(checkpoint)
}

/// One row of a reward-trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub scene_id: u64,
    pub reward: f64,
    pub ema_reward: f64,
    pub phase: Phase,
}

const TRACE_COLUMNS: &str = "step,scene_id,reward,ema_reward,phase";

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{TRACE_COLUMNS}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.step,
            row.scene_id,
            row.reward,
            row.ema_reward,
            row.phase.as_str()
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let file = File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line_no == 1 {
            if line != TRACE_COLUMNS {
                return Err(Error::Malformed {
                    line: 1,
                    msg: format!("expected columns {TRACE_COLUMNS:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Malformed {
                line: line_no,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_err = |msg: String| Error::Malformed { line: line_no, msg };
        rows.push(TraceRow {
            step: fields[0].parse().map_err(|e| parse_err(format!("step: {e}")))?,
            scene_id: fields[1].parse().map_err(|e| parse_err(format!("scene_id: {e}")))?,
            reward: fields[2].parse().map_err(|e| parse_err(format!("reward: {e}")))?,
            ema_reward: fields[3].parse().map_err(|e| parse_err(format!("ema_reward: {e}")))?,
            phase: fields[4].parse()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;
    use std::io::Read;

    fn grid() -> GridSpec<f64> {
        GridSpec::new(
            AxisGrid::symmetric(0.010, 0.002).unwrap(),
            AxisGrid::symmetric(0.010, 0.002).unwrap(),
            AxisGrid::symmetric(4f64.to_radians(), 1f64.to_radians()).unwrap(),
        )
    }

    fn record(scene_id: u64, step: u64) -> DatasetRecord {
        DatasetRecord {
            scene_id,
            step,
            est_pose: [0.0031, -0.0072, 0.01234567890123],
            feature: (0..16).map(|i| (i as f64) * 0.1 - 0.8 + 1e-13).collect(),
            action: [3, 7, 2],
            reward: 0.9934567890123456,
            label: [4, 6, 5],
        }
    }

    #[test]
    fn empty_dataset_round_trip() {
        let dir = tempdir();
        let path = dir.join("empty.jsonl");
        let header = DatasetHeader::new(&grid(), 16);
        write_dataset(&path, header.clone(), &[]).unwrap();
        let (h, records) = read_dataset(&path).unwrap();
        assert_eq!(h, header);
        assert!(records.is_empty());
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let dir = tempdir();
        let path = dir.join("data.jsonl");
        let header = DatasetHeader::new(&grid(), 16);
        let records: Vec<DatasetRecord> = (0..300).map(|i| record(i / 5, i)).collect();
        write_dataset(&path, header.clone(), &records).unwrap();
        let (h, back) = read_dataset(&path).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, records);
    }

    #[test]
    fn corrupted_line_is_reported_with_its_number() {
        let dir = tempdir();
        let path = dir.join("bad.jsonl");
        let header = DatasetHeader::new(&grid(), 16);
        let records: Vec<DatasetRecord> = (0..10).map(|i| record(0, i)).collect();
        write_dataset(&path, header, &records).unwrap();

        let mut contents = String::new();
        File::open(&path).unwrap().read_to_string(&mut contents).unwrap();
        let mut lines: Vec<&str> = contents.lines().collect();
        lines[6] = "{not json";
        std::fs::write(&path, lines.join("\n")).unwrap();

        match read_dataset(&path) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected malformed at line 7, got {other:?}"),
        }
    }

    #[test]
    fn dataset_version_bump_is_rejected() {
        let dir = tempdir();
        let path = dir.join("vers.jsonl");
        let mut header = DatasetHeader::new(&grid(), 16);
        header.format_version = 2;
        let line = serde_json::to_string(&header).unwrap();
        std::fs::write(&path, format!("{line}\n")).unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(Error::UnsupportedVersion { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn record_outside_grid_is_rejected_on_read() {
        let dir = tempdir();
        let path = dir.join("oob.jsonl");
        let header = DatasetHeader::new(&grid(), 16);
        let mut bad = record(0, 0);
        bad.label = [11, 0, 0];
        let header_line = serde_json::to_string(&header).unwrap();
        let record_line = serde_json::to_string(&bad).unwrap();
        std::fs::write(&path, format!("{header_line}\n{record_line}\n")).unwrap();
        match read_dataset(&path) {
            Err(Error::Malformed { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("label"));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn appends_land_as_whole_scenes() {
        let dir = tempdir();
        let path = dir.join("scenes.jsonl");
        let header = DatasetHeader::new(&grid(), 16);
        let mut writer = DatasetWriter::create(&path, header).unwrap();
        let mut seen = vec![read_dataset(&path).unwrap().1.len()];
        for s in 0..3 {
            let scene: Vec<DatasetRecord> = (0..5).map(|i| record(s, s * 5 + i)).collect();
            writer.append_scene(&scene).unwrap();
            seen.push(read_dataset(&path).unwrap().1.len());
        }
        assert_eq!(seen, vec![0, 5, 10, 15]);

        // Order is preserved and prior records untouched.
        let (_, records) = read_dataset(&path).unwrap();
        let steps: Vec<u64> = records.iter().map(|r| r.step).collect();
        assert_eq!(steps, (0..15).collect::<Vec<_>>());
    }

    #[test]
    fn appending_empty_scene_is_a_no_op() {
        let dir = tempdir();
        let path = dir.join("noop.jsonl");
        let header = DatasetHeader::new(&grid(), 16);
        let mut writer = DatasetWriter::create(&path, header).unwrap();
        writer.append_scene(&[]).unwrap();
        let (_, records) = read_dataset(&path).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn checkpoint_round_trip_preserves_parameters() {
        let dir = tempdir();
        let path = dir.join("ckpt.json");
        let arch = PolicyArchitecture {
            input_dim: 7,
            hidden_dims: vec![5],
            head_sizes: [11, 11, 9],
            activation: crate::policy::Activation::Tanh,
        };
        let values: Vec<f64> = (0..arch.param_count())
            .map(|i| (i as f64 * 0.73).sin() * 0.05)
            .collect();
        let params = PolicyParams::from_values(arch, values.clone()).unwrap();
        let ckpt = Checkpoint::new(&params, &grid(), 42);
        write_checkpoint(&path, &ckpt).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
        let restored: PolicyParams<f64> = back.to_policy_params().unwrap();
        assert_eq!(restored.values(), values.as_slice());
    }

    #[test]
    fn checkpoint_grid_mismatch_is_explicit() {
        let arch = PolicyArchitecture {
            input_dim: 4,
            hidden_dims: vec![],
            head_sizes: [11, 11, 9],
            activation: crate::policy::Activation::Tanh,
        };
        let params = PolicyParams::from_values(arch.clone(), vec![0.0; arch.param_count()]).unwrap();
        let ckpt = Checkpoint::new(&params, &grid(), 0);

        let smaller = GridSpec::new(
            AxisGrid::<f64>::symmetric(0.010, 0.002).unwrap(),
            AxisGrid::symmetric(0.010, 0.002).unwrap(),
            AxisGrid::symmetric(3f64.to_radians(), 1f64.to_radians()).unwrap(),
        );
        let expected = GridFileSpec::from_grid(&smaller);
        assert!(matches!(
            ckpt.ensure_compatible(&expected, &arch),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn checkpoint_version_bump_is_rejected() {
        let dir = tempdir();
        let path = dir.join("vers.json");
        let arch = PolicyArchitecture {
            input_dim: 4,
            hidden_dims: vec![],
            head_sizes: [2, 2, 2],
            activation: crate::policy::Activation::Tanh,
        };
        let params = PolicyParams::from_values(arch, vec![0.0; 30]).unwrap();
        let mut ckpt = Checkpoint::new(&params, &grid(), 0);
        ckpt.header.format_version = 9;
        write_checkpoint(&path, &ckpt).unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(Error::UnsupportedVersion { found: 9, supported: 1 })
        ));
    }

    #[test]
    fn truncated_checkpoint_is_malformed() {
        let dir = tempdir();
        let path = dir.join("trunc.json");
        std::fs::write(&path, "{\"header\": {\"format_version\": 1").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Malformed { .. })));
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempdir();
        let path = dir.join("trace.csv");
        let rows = vec![
            TraceRow { step: 1, scene_id: 0, reward: 0.987654321, ema_reward: 0.987654321, phase: Phase::Online },
            TraceRow { step: 2, scene_id: 0, reward: 0.99, ema_reward: 0.9878888888888889, phase: Phase::Online },
        ];
        write_trace(&path, &rows).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, rows);
    }

    fn tempdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "rmrl-datasets-test-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }
}
