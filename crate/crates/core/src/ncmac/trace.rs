//! JSON-lines export of shim transitions.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::packet::{GenerationId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShimAction {
    Transmit,
    Enqueued,
    Rewritten,
    BroadcastCoded,
    EvictUncoded,
    Forwarded,
    SendOverwrite,
    Decoded,
    PassThrough,
    Dropped,
    ChannelLoss,
    CatchUp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_us: u64,
    pub node: NodeId,
    pub action: ShimAction,
    pub generation: GenerationId,
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[TraceRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}
