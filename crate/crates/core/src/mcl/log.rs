//! Sensor logs: time-ordered odometry and scan frames plus checkpoints,
//! stored as JSON Lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, MapError};
use crate::geometry::Pose2D;

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFrame {
    pub timestamp: f64,
    pub bearings: Vec<f64>,
    /// Values at or beyond the log's `max_range` mean "no return".
    pub ranges: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdomFrame {
    pub timestamp: f64,
    pub pose: Pose2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub id: u32,
    pub timestamp: f64,
    pub ground_truth_pose: Pose2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    Odom(OdomFrame),
    Scan(ScanFrame),
}

impl Frame {
    pub fn timestamp(&self) -> f64 {
        match self {
            Frame::Odom(o) => o.timestamp,
            Frame::Scan(s) => s.timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLog {
    /// Sensor pose in the robot frame.
    pub mount: Pose2D,
    pub max_range: f64,
    pub frames: Vec<Frame>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header {
        version: u32,
        max_range: f64,
        mount: Pose2D,
    },
    Odom {
        t: f64,
        x: f64,
        y: f64,
        theta: f64,
    },
    Scan {
        t: f64,
        bearings: Vec<f64>,
        ranges: Vec<f64>,
    },
    Checkpoint {
        t: f64,
        id: u32,
        x: f64,
        y: f64,
        theta: f64,
    },
}

fn invalid(msg: impl Into<String>) -> EvalError {
    EvalError::InvalidInput(msg.into())
}

impl SensorLog {
    pub fn scans(&self) -> impl Iterator<Item = &ScanFrame> {
        self.frames.iter().filter_map(|f| match f {
            Frame::Scan(s) => Some(s),
            Frame::Odom(_) => None,
        })
    }

    pub fn odometry(&self) -> Vec<OdomFrame> {
        self.frames
            .iter()
            .filter_map(|f| match f {
                Frame::Odom(o) => Some(*o),
                Frame::Scan(_) => None,
            })
            .collect()
    }

    /// Time span covered by the frames.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.frames.first()?.timestamp(), self.frames.last()?.timestamp()))
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(invalid("max_range must be positive"));
        }
        let mut last_t = f64::NEG_INFINITY;
        let mut last_odom = f64::NEG_INFINITY;
        let mut seen_odom = false;
        for (i, f) in self.frames.iter().enumerate() {
            let t = f.timestamp();
            if !t.is_finite() || t < last_t {
                return Err(invalid(format!("frame {i} breaks time order at t = {t}")));
            }
            last_t = t;
            match f {
                Frame::Odom(o) => {
                    if o.timestamp <= last_odom {
                        return Err(invalid(format!(
                            "odometry timestamps not strictly increasing at t = {t}"
                        )));
                    }
                    last_odom = o.timestamp;
                    seen_odom = true;
                }
                Frame::Scan(s) => {
                    if !seen_odom {
                        return Err(invalid("scan frame before any odometry frame"));
                    }
                    if s.bearings.len() != s.ranges.len() {
                        return Err(invalid(format!(
                            "scan at t = {t}: bearings and ranges differ in length"
                        )));
                    }
                    if s.ranges.iter().any(|r| r.is_nan() || *r < 0.0) {
                        return Err(invalid(format!("scan at t = {t}: negative or NaN range")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |r: &Record| {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        };
        push(&Record::Header {
            version: LOG_FORMAT_VERSION,
            max_range: self.max_range,
            mount: self.mount,
        });
        let mut cps = self.checkpoints.iter().peekable();
        for f in &self.frames {
            while let Some(c) = cps.next_if(|c| c.timestamp < f.timestamp()) {
                push(&checkpoint_record(c));
            }
            push(&match f {
                Frame::Odom(o) => Record::Odom {
                    t: o.timestamp,
                    x: o.pose.x,
                    y: o.pose.y,
                    theta: o.pose.theta,
                },
                Frame::Scan(s) => Record::Scan {
                    t: s.timestamp,
                    bearings: s.bearings.clone(),
                    ranges: s.ranges.clone(),
                },
            });
        }
        for c in cps {
            push(&checkpoint_record(c));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (mount, max_range) = match lines.next() {
            Some((_, l)) => match serde_json::from_str(l) {
                Ok(Record::Header {
                    version,
                    max_range,
                    mount,
                }) => {
                    if version != LOG_FORMAT_VERSION {
                        return Err(invalid(format!("unsupported log version {version}")));
                    }
                    (mount, max_range)
                }
                Ok(_) => return Err(invalid("first line must be the header")),
                Err(e) => return Err(invalid(format!("line 1: {e}"))),
            },
            None => return Err(invalid("empty sensor log")),
        };
        let mut log = SensorLog {
            mount,
            max_range,
            frames: Vec::new(),
            checkpoints: Vec::new(),
        };
        for (n, l) in lines {
            let rec: Record = serde_json::from_str(l).map_err(|e| invalid(format!("line {}: {e}", n + 1)))?;
            match rec {
                Record::Header { .. } => return Err(invalid(format!("line {}: repeated header", n + 1))),
                Record::Odom { t, x, y, theta } => log.frames.push(Frame::Odom(OdomFrame {
                    timestamp: t,
                    pose: Pose2D::new(x, y, theta),
                })),
                Record::Scan { t, bearings, ranges } => log.frames.push(Frame::Scan(ScanFrame {
                    timestamp: t,
                    bearings,
                    ranges,
                })),
                Record::Checkpoint { t, id, x, y, theta } => log.checkpoints.push(Checkpoint {
                    id,
                    timestamp: t,
                    ground_truth_pose: Pose2D::new(x, y, theta),
                }),
            }
        }
        log.validate()?;
        Ok(log)
    }

    pub fn save(&self, path: &Path) -> Result<(), MapError> {
        let io = |source| MapError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let io = |source| MapError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut text = String::new();
        for line in BufReader::new(File::open(path).map_err(io)?).lines() {
            text.push_str(&line.map_err(io)?);
            text.push('\n');
        }
        Self::from_jsonl(&text)
    }
}

fn checkpoint_record(c: &Checkpoint) -> Record {
    Record::Checkpoint {
        t: c.timestamp,
        id: c.id,
        x: c.ground_truth_pose.x,
        y: c.ground_truth_pose.y,
        theta: c.ground_truth_pose.theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SensorLog {
        SensorLog {
            mount: Pose2D::new(0.1, 0.0, 0.0),
            max_range: 20.0,
            frames: vec![
                Frame::Odom(OdomFrame {
                    timestamp: 0.0,
                    pose: Pose2D::new(0.0, 0.0, 0.0),
                }),
                Frame::Scan(ScanFrame {
                    timestamp: 0.0,
                    bearings: vec![-0.5, 0.0, 0.5],
                    ranges: vec![1.25, 20.0, 3.0 / 7.0],
                }),
                Frame::Odom(OdomFrame {
                    timestamp: 0.25,
                    pose: Pose2D::new(0.25, 0.0, 0.1),
                }),
            ],
            checkpoints: vec![Checkpoint {
                id: 1,
                timestamp: 0.1,
                ground_truth_pose: Pose2D::new(0.1, 0.0, 0.0),
            }],
        }
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let log = sample();
        let text = log.to_jsonl();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().next().unwrap().contains("\"type\":\"header\""));
        assert_eq!(SensorLog::from_jsonl(&text).unwrap(), log);
    }

    #[test]
    fn rejects_bad_logs() {
        let mut log = sample();
        log.frames.swap(0, 1);
        assert!(log.validate().is_err());
        let mut log = sample();
        if let Frame::Scan(s) = &mut log.frames[1] {
            s.ranges.pop();
        }
        assert!(log.validate().is_err());
        assert!(SensorLog::from_jsonl("").is_err());
        assert!(SensorLog::from_jsonl("{\"type\":\"odom\",\"t\":0,\"x\":0,\"y\":0,\"theta\":0}").is_err());
    }
}
