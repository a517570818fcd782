use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cpg::NUM_LEGS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    /// s since the start of the evaluation.
    pub time: f64,
    /// World body position, m.
    pub position: [f64; 3],
    /// Angle between world up and body up, rad.
    pub up_angle: f64,
    /// `[leg * 3 + joint]`, rad.
    pub joint_angles: [f64; 3 * NUM_LEGS],
    /// Contact force magnitude per foot, N.
    pub grf: [f64; NUM_LEGS],
    /// Vertical (normal) contact force per foot, N.
    pub grf_vertical: [f64; NUM_LEGS],
    /// Unbounded joint-0 phase per leg, rad.
    pub phases: [f64; NUM_LEGS],
}

/// Uniformly sampled record of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTrace {
    pub samples: Vec<TraceSample>,
    /// Requested evaluation length, s.
    pub duration: f64,
    pub sample_period: f64,
    pub p_start: [f64; 3],
    pub p_end: [f64; 3],
    /// The run terminated early because the body fell.
    pub fell: bool,
}

const MAGIC: &[u8; 4] = b"GTRC";
const VERSION: u32 = 1;
const SAMPLE_WIDTH: usize = 1 + 3 + 1 + 3 * NUM_LEGS + 3 * NUM_LEGS;

impl EvalTrace {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }

    pub fn max_up_angle(&self) -> f64 {
        self.samples.iter().map(|s| s.up_angle.abs()).fold(0.0, f64::max)
    }

    /// Column order of [`EvalTrace::write_csv`].
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = ["time", "x", "y", "z", "up_angle"].map(String::from).to_vec();
        h.extend((0..NUM_LEGS).map(|l| format!("phase_{l}")));
        h.extend((0..NUM_LEGS).map(|l| format!("grf_{l}")));
        h.extend((0..NUM_LEGS).map(|l| format!("grf_z_{l}")));
        for l in 0..NUM_LEGS {
            h.extend((0..3).map(|j| format!("q_{l}_{j}")));
        }
        h
    }

    fn row(s: &TraceSample) -> Vec<f64> {
        let mut r = vec![s.time, s.position[0], s.position[1], s.position[2], s.up_angle];
        r.extend(s.phases);
        r.extend(s.grf);
        r.extend(s.grf_vertical);
        r.extend(s.joint_angles);
        r
    }

    /// One row per sample; columns as in [`EvalTrace::csv_header`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header())?;
        for s in &self.samples {
            w.write_record(Self::row(s).iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Compact little-endian log: magic `GTRC`, u32 version, u8 fall flag,
    /// f64 duration, f64 sample period, 3 f64 start, 3 f64 end, u64 sample
    /// count, then per sample the CSV columns as f64.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&[u8::from(self.fell)])?;
        let header = [self.duration, self.sample_period]
            .into_iter()
            .chain(self.p_start)
            .chain(self.p_end);
        for v in header {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for s in &self.samples {
            for v in Self::row(s) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let bad = |m: &str| Error::InvalidTrace(m.to_string());
        let io = |e| Error::io("<binary trace>", e);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf).map_err(io)?;
        if u32::from_le_bytes(u32buf) != VERSION {
            return Err(bad("unsupported version"));
        }
        let mut flag = [0u8; 1];
        input.read_exact(&mut flag).map_err(io)?;
        let mut f64s = |n: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n);
            let mut b = [0u8; 8];
            for _ in 0..n {
                input.read_exact(&mut b).map_err(io)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let h = f64s(8)?;
        let mut count = [0u8; 8];
        input.read_exact(&mut count).map_err(io)?;
        let n = u64::from_le_bytes(count) as usize;
        let mut samples = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            let mut r = [0.0; SAMPLE_WIDTH];
            for v in r.iter_mut() {
                input.read_exact(&mut b).map_err(io)?;
                *v = f64::from_le_bytes(b);
            }
            let take = |from: usize| -> [f64; NUM_LEGS] { std::array::from_fn(|i| r[from + i]) };
            samples.push(TraceSample {
                time: r[0],
                position: [r[1], r[2], r[3]],
                up_angle: r[4],
                phases: take(5),
                grf: take(9),
                grf_vertical: take(13),
                joint_angles: std::array::from_fn(|i| r[17 + i]),
            });
        }
        Ok(EvalTrace {
            samples,
            duration: h[0],
            sample_period: h[1],
            p_start: [h[2], h[3], h[4]],
            p_end: [h[5], h[6], h[7]],
            fell: flag[0] != 0,
        })
    }
}
