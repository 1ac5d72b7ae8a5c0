//! Trace records and their CSV form.

use std::io::{Read, Write};

use crate::dynamics::{MotorThrusts, VehicleState};
use crate::error::{Error, Result};

pub const TRACE_COLUMNS: [&str; 25] = [
    "t",
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "vz",
    "psi",
    "omega_z",
    "sz",
    "svx",
    "svy",
    "somega_z",
    "m1",
    "m2",
    "m3",
    "m4",
    "q1",
    "q2",
    "az_cmd",
    "tau_cmd",
    "ax_cmd",
    "ay_cmd",
    "fault_status",
    "battery_mah",
];

/// One tick. Thrusts are the commanded ones; `sz` is the estimated height
/// above ground, `svx`/`svy` the estimated world-frame velocity and
/// `somega_z` the gyro.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub state: VehicleState,
    pub sz: f64,
    pub svx: f64,
    pub svy: f64,
    pub somega_z: f64,
    pub thrusts: MotorThrusts,
    pub az_cmd: f64,
    pub tau_cmd: f64,
    pub ax_cmd: f64,
    pub ay_cmd: f64,
    pub fault_status: String,
    pub battery_mah: f64,
}

impl TraceRecord {
    pub fn numeric_fields(&self) -> [(&'static str, f64); 24] {
        let s = &self.state;
        let m = &self.thrusts;
        [
            ("t", self.t),
            ("x", s.x),
            ("y", s.y),
            ("z", s.z),
            ("vx", s.v_x),
            ("vy", s.v_y),
            ("vz", s.v_z),
            ("psi", s.psi),
            ("omega_z", s.omega_z),
            ("sz", self.sz),
            ("svx", self.svx),
            ("svy", self.svy),
            ("somega_z", self.somega_z),
            ("m1", m.m1),
            ("m2", m.m2),
            ("m3", m.m3),
            ("m4", m.m4),
            ("q1", m.q1()),
            ("q2", m.q2()),
            ("az_cmd", self.az_cmd),
            ("tau_cmd", self.tau_cmd),
            ("ax_cmd", self.ax_cmd),
            ("ay_cmd", self.ay_cmd),
            ("battery_mah", self.battery_mah),
        ]
    }

    /// Blow-up guard: first field whose magnitude exceeds `limit` or is not finite.
    pub fn check_bounds(&self, limit: f64) -> Option<(&'static str, f64)> {
        self.numeric_fields()
            .into_iter()
            .find(|(_, v)| !v.is_finite() || v.abs() > limit)
    }
}

pub fn write_trace<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    let mut row: Vec<String> = Vec::with_capacity(TRACE_COLUMNS.len());
    for r in records {
        row.clear();
        let f = r.numeric_fields();
        // fields before the status column, then the status, then battery
        row.extend(f[..23].iter().map(|(_, v)| v.to_string()));
        row.push(r.fault_status.clone());
        row.push(f[23].1.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_string(records: &[TraceRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Reads a trace, checking the header, the row shape, the numbers and that
/// time strictly increases. Errors carry the 1-based file line.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "trace header mismatch: expected `{}`",
                TRACE_COLUMNS.join(",")
            ),
        });
    }
    let mut out: Vec<TraceRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: `{raw}` is not a number", TRACE_COLUMNS[i]),
            })
        };
        let status = rec.get(23).unwrap_or("").to_string();
        crate::fault::FaultStatus::parse_label(&status).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let r = TraceRecord {
            t: num(0)?,
            state: VehicleState {
                x: num(1)?,
                y: num(2)?,
                z: num(3)?,
                v_x: num(4)?,
                v_y: num(5)?,
                v_z: num(6)?,
                psi: num(7)?,
                omega_z: num(8)?,
            },
            sz: num(9)?,
            svx: num(10)?,
            svy: num(11)?,
            somega_z: num(12)?,
            thrusts: MotorThrusts::from_array([num(13)?, num(14)?, num(15)?, num(16)?]),
            az_cmd: num(19)?,
            tau_cmd: num(20)?,
            ax_cmd: num(21)?,
            ay_cmd: num(22)?,
            fault_status: status,
            battery_mah: num(24)?,
        };
        if let Some(prev) = out.last() {
            if !(r.t > prev.t) {
                return Err(Error::Parse {
                    line,
                    message: format!("time does not increase ({} after {})", r.t, prev.t),
                });
            }
        }
        out.push(r);
    }
    Ok(out)
}
