use std::collections::VecDeque;

use crate::dsp::IqBlock;

/// Default FIFO depth in entries (one `IqBlock` per entry).
pub const FIFO_DEPTH: usize = 1 << 15;

/// An AXI-stream FIFO of `IqBlock` entries with `tlast` marks.
///
/// A push on a full FIFO or a pop on an empty one is counted as a fault and
/// otherwise ignored, as the hardware would lose the beat.
#[derive(Debug, Clone)]
pub struct AxiFifo {
    entries: VecDeque<(IqBlock, bool)>,
    depth: usize,
    written: u64,
    read: u64,
    overflows: u64,
    underflows: u64,
}

impl AxiFifo {
    pub fn new(depth: usize) -> Self {
        AxiFifo {
            entries: VecDeque::with_capacity(depth.min(FIFO_DEPTH)),
            depth,
            written: 0,
            read: 0,
            overflows: 0,
            underflows: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn occupancy(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.depth
    }

    /// Entries written minus entries read since the last flush.
    pub fn read_counter(&self) -> u64 {
        self.written - self.read
    }

    pub fn overflows(&self) -> u64 {
        self.overflows
    }

    pub fn underflows(&self) -> u64 {
        self.underflows
    }

    /// Returns `false` on overflow.
    pub fn push(&mut self, block: IqBlock, last: bool) -> bool {
        if self.is_full() {
            self.overflows += 1;
            return false;
        }
        self.entries.push_back((block, last));
        self.written += 1;
        true
    }

    pub fn pop(&mut self) -> Option<(IqBlock, bool)> {
        match self.entries.pop_front() {
            Some(e) => {
                self.read += 1;
                Some(e)
            }
            None => {
                self.underflows += 1;
                None
            }
        }
    }

    /// Positions (from the head) of entries flagged as transfer-final.
    pub fn last_marks(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, (_, last))| last.then_some(i))
            .collect()
    }

    pub fn flush(&mut self) {
        self.entries.clear();
        self.written = 0;
        self.read = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faults() {
        let mut f = AxiFifo::new(2);
        assert!(f.pop().is_none());
        assert_eq!(f.underflows(), 1);
        assert!(f.push(IqBlock::ZERO, false));
        assert!(f.push(IqBlock::ZERO, true));
        assert!(!f.push(IqBlock::ZERO, false));
        assert_eq!(f.overflows(), 1);
        assert_eq!(f.occupancy(), 2);
        assert_eq!(f.last_marks(), vec![1]);
        f.pop();
        assert_eq!(f.read_counter(), 1);
        f.flush();
        assert!(f.is_empty());
        assert_eq!(f.read_counter(), 0);
    }
}
