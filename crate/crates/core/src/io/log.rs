use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::scenario::{InfraSite, ScenarioConfig, V2xSlots};
use crate::sim::{frame_time, AgentMeta, CollisionRecord, Frame, ScenarioLog, Termination};

pub const LOG_FORMAT: &str = "crashcast-log/1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    config: ScenarioConfig,
    map_digest: String,
    agents: Vec<AgentMeta>,
    infrastructure: InfraSite,
    v2x: V2xSlots,
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    termination: Termination,
    collision: Option<CollisionRecord>,
}

/// Writes a log as JSON lines: header, one line per frame, then the
/// termination record. Floats use shortest round-trip formatting.
pub fn write_log<W: Write>(log: &ScenarioLog, mut w: W) -> Result<(), IoError> {
    let header = Header {
        format: LOG_FORMAT.to_string(),
        config: log.config.clone(),
        map_digest: log.map_digest.clone(),
        agents: log.agents.clone(),
        infrastructure: log.infrastructure,
        v2x: log.v2x,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for f in &log.frames {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut w, &Trailer { termination: log.termination, collision: log.collision })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn log_to_string(log: &ScenarioLog) -> String {
    let mut buf = Vec::new();
    write_log(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

/// Reads a log written by [`write_log`]. Errors carry the 1-based line.
pub fn read_log<R: BufRead>(r: R) -> Result<ScenarioLog, IoError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header: Header = serde_json::from_str(&first?).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format != LOG_FORMAT {
        return Err(parse_err(1, format!("unsupported format {:?}", header.format)));
    }
    let mut frames: Vec<Frame> = Vec::new();
    let mut trailer: Option<Trailer> = None;
    let mut last_line = 1;
    for (n, line) in lines {
        let line = line?;
        last_line = n;
        if trailer.is_some() {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(n, "content after termination record"));
        }
        let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| parse_err(n, e.to_string()))?;
        if v.get("termination").is_some() {
            trailer = Some(serde_json::from_value(v).map_err(|e| parse_err(n, e.to_string()))?);
            continue;
        }
        let f: Frame = serde_json::from_value(v).map_err(|e| parse_err(n, e.to_string()))?;
        let k = frames.len();
        if (f.t - frame_time(k)).abs() > 1e-6 {
            return Err(parse_err(n, format!("frame {k} has time {} (expected {})", f.t, frame_time(k))));
        }
        if f.agents.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(parse_err(n, "agents not sorted by unique id"));
        }
        if let Some(a) = f.agents.iter().find(|a| !header.agents.iter().any(|m| m.id == a.id)) {
            return Err(parse_err(n, format!("agent {} missing from header", a.id)));
        }
        frames.push(f);
    }
    let trailer = trailer.ok_or_else(|| parse_err(last_line + 1, "missing termination record (truncated file?)"))?;
    if frames.is_empty() {
        return Err(parse_err(2, "log has no frames"));
    }
    Ok(ScenarioLog {
        config: header.config,
        map_digest: header.map_digest,
        agents: header.agents,
        infrastructure: header.infrastructure,
        v2x: header.v2x,
        frames,
        collision: trailer.collision,
        termination: trailer.termination,
    })
}

pub fn parse_log(text: &str) -> Result<ScenarioLog, IoError> {
    read_log(text.as_bytes())
}
