use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// Text capture of node traffic, one line per event:
/// `<elapsed_us> <port> <in|out> <payload>`.
pub struct Transcript {
    start: Instant,
    out: Mutex<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for Transcript {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transcript").finish_non_exhaustive()
    }
}

impl Transcript {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self::new(Box::new(BufWriter::new(File::create(path)?))))
    }

    pub fn new(out: Box<dyn Write + Send>) -> Self {
        Transcript { start: Instant::now(), out: Mutex::new(out) }
    }

    pub fn record(&self, port: u16, dir: Direction, payload: &str) {
        let us = self.start.elapsed().as_micros();
        let dir = match dir {
            Direction::In => "in",
            Direction::Out => "out",
        };
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        // a broken transcript must not take the node down
        let _ = writeln!(out, "{us} {port} {dir} {}", payload.trim_end()).and_then(|_| out.flush());
    }
}
