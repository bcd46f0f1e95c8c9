//! Run logs and their CSV representation.

use std::fs::File;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRow {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
    pub vx_ref: f64,
    pub vy_ref: f64,
    pub wz_ref: f64,
    pub vx_ref_mod: f64,
    pub vy_ref_mod: f64,
    pub wz_ref_mod: f64,
}

/// One robot tick. `fx_bar`/`fy_bar` is the force actually exerted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRow {
    pub time: f64,
    pub fx_cmd: f64,
    pub fy_cmd: f64,
    pub fx_bar: f64,
    pub fy_bar: f64,
    pub dfx: f64,
    pub dfy: f64,
    pub fmax_x: f64,
    pub fmax_y: f64,
    pub saturated: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRow {
    pub tick: usize,
    pub sender: String,
    pub payload_x: f64,
    pub payload_y: f64,
    pub payload_wz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub time: f64,
    pub robot_id: String,
    pub gain_name: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub time: f64,
    pub robot_id: String,
    pub joint: usize,
    pub q: f64,
    pub qd: f64,
    pub tau: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeRow {
    pub time: f64,
    pub robot_id: String,
    pub vertex: usize,
    pub fx: f64,
    pub fy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLogs {
    pub object: Vec<ObjectRow>,
    /// `(robot id, rows)` in scenario order.
    pub robots: Vec<(String, Vec<RobotRow>)>,
    pub bus: Vec<BusRow>,
    pub gains: Vec<GainRow>,
    pub joints: Vec<JointRow>,
    pub polytopes: Vec<PolytopeRow>,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), SimError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, SimError> {
    let file = File::open(path).map_err(|e| SimError::Logs(format!("{}: {e}", path.display())))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.map_err(|e| SimError::Logs(format!("{}: {e}", path.display())))?);
    }
    Ok(out)
}

const OBJECT_HEADER: [&str; 13] = [
    "time",
    "x",
    "y",
    "theta",
    "vx",
    "vy",
    "wz",
    "vx_ref",
    "vy_ref",
    "wz_ref",
    "vx_ref_mod",
    "vy_ref_mod",
    "wz_ref_mod",
];
const ROBOT_HEADER: [&str; 10] = [
    "time",
    "fx_cmd",
    "fy_cmd",
    "fx_bar",
    "fy_bar",
    "dfx",
    "dfy",
    "fmax_x",
    "fmax_y",
    "saturated",
];
const BUS_HEADER: [&str; 5] = ["tick", "sender", "payload_x", "payload_y", "payload_wz"];
const GAIN_HEADER: [&str; 6] = ["time", "robot_id", "gain_name", "row", "col", "value"];
const JOINT_HEADER: [&str; 7] = ["time", "robot_id", "joint", "q", "qd", "tau", "tau_max"];
const POLYTOPE_HEADER: [&str; 5] = ["time", "robot_id", "vertex", "fx", "fy"];

impl RunLogs {
    /// Writes every log into `dir`, which must exist.
    pub fn write(&self, dir: &Path) -> Result<(), SimError> {
        write_rows(&dir.join("object.csv"), &self.object, &OBJECT_HEADER)?;
        for (id, rows) in &self.robots {
            write_rows(&dir.join(format!("robot_{id}.csv")), rows, &ROBOT_HEADER)?;
        }
        write_rows(&dir.join("bus.csv"), &self.bus, &BUS_HEADER)?;
        write_rows(&dir.join("gains.csv"), &self.gains, &GAIN_HEADER)?;
        if !self.joints.is_empty() {
            write_rows(&dir.join("joints.csv"), &self.joints, &JOINT_HEADER)?;
        }
        if !self.polytopes.is_empty() {
            write_rows(&dir.join("polytopes.csv"), &self.polytopes, &POLYTOPE_HEADER)?;
        }
        Ok(())
    }

    /// Reads the logs `metrics_report` needs: object, robots and bus.
    pub fn read(dir: &Path) -> Result<Self, SimError> {
        let object = read_rows(&dir.join("object.csv"))?;
        let mut robot_files: Vec<(String, std::path::PathBuf)> = std::fs::read_dir(dir)
            .map_err(|e| SimError::Logs(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                let id = name.strip_prefix("robot_")?.strip_suffix(".csv")?.to_string();
                Some((id, e.path()))
            })
            .collect();
        robot_files.sort();
        let mut robots = Vec::new();
        for (id, path) in robot_files {
            robots.push((id, read_rows(&path)?));
        }
        let bus = read_rows(&dir.join("bus.csv"))?;
        Ok(Self {
            object,
            robots,
            bus,
            ..Default::default()
        })
    }
}
