use std::str::FromStr;

use crate::{Error, Result};

/// One `<clock> <reg> <value>` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub clock: u64,
    pub register: String,
    pub value: u64,
}

/// Register writes keyed by clock, sorted and stable within a clock.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegisterScript {
    pub entries: Vec<ScriptEntry>,
}

impl RegisterScript {
    /// Writes scheduled before clock `clock` is stepped.
    pub fn at(&self, clock: u64) -> impl Iterator<Item = &ScriptEntry> {
        let start = self.entries.partition_point(|e| e.clock < clock);
        self.entries[start..].iter().take_while(move |e| e.clock == clock)
    }

    pub fn last_clock(&self) -> Option<u64> {
        self.entries.last().map(|e| e.clock)
    }
}

impl FromStr for RegisterScript {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| Error::Parse { line: idx + 1, reason: reason.to_string() };
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 3 {
                return Err(err("expected `<clock> <reg> <value>`"));
            }
            let clock = tok[0].parse().map_err(|_| err("bad clock"))?;
            let value = tok[2].parse().map_err(|_| err("bad value"))?;
            entries.push(ScriptEntry { clock, register: tok[1].to_string(), value });
        }
        entries.sort_by_key(|e| e.clock);
        Ok(RegisterScript { entries })
    }
}
