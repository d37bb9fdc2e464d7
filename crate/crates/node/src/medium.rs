//! Two radios sharing one sample clock through a pair of one-way links.
//!
//! The clock only advances while there is something to do: a transmission
//! in flight or a capture in progress. A transmitting or capturing command
//! runs the medium until both radios are quiet again.

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use mmsdr_core::channel::{default_codebook, AwvCodebook, ChannelScene, Link, LinkSettings};
use mmsdr_core::dsp::{IqBlock, IqSample};
use mmsdr_core::plsim::{PlConfig, PlSim, TxHandle};

use crate::evk::EvkState;

/// Codebook design frequency of the radios.
pub const CODEBOOK_DESIGN_HZ: f64 = 60.48e9;
/// Idle clocks inserted before each transmission so consecutive frames
/// never share a correlation window.
pub const PRE_GAP_CLOCKS: usize = 64;
/// Quiet clocks required before a burst is considered finished.
pub const SETTLE_CLOCKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A = 0,
    B = 1,
}

impl Side {
    pub fn peer(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    fn idx(self) -> usize {
        self as usize
    }
}

#[derive(Debug)]
pub struct Radio {
    pub pl: PlSim,
    pub evk: EvkState,
}

#[derive(Debug)]
pub struct MediumState {
    pub radios: [Radio; 2],
    /// `links[s]` carries the DAC output of side `s` to its peer.
    links: [Link; 2],
    in_flight: [IqBlock; 2],
    codebook: AwvCodebook,
    clock: u64,
}

impl MediumState {
    pub fn radio(&self, side: Side) -> &Radio {
        &self.radios[side.idx()]
    }

    pub fn radio_mut(&mut self, side: Side) -> &mut Radio {
        &mut self.radios[side.idx()]
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn codebook(&self) -> &AwvCodebook {
        &self.codebook
    }

    fn retune(&mut self) -> mmsdr_core::Result<()> {
        for s in [Side::A, Side::B] {
            let tx = &self.radios[s.idx()].evk;
            let rx = &self.radios[s.peer().idx()].evk;
            let settings = LinkSettings {
                tx_awv: self.codebook.get(tx.beam_index_tx as usize)?,
                rx_awv: self.codebook.get(rx.beam_index_rx as usize)?,
                tx_carrier_hz: tx.carrier_hz,
                rx_carrier_hz: rx.carrier_hz,
                tx_gain_db: tx.gain_tx.gain_db(),
                rx_gain_db: rx.gain_rx.gain_db(),
            };
            self.links[s.idx()].retune(&settings)?;
        }
        Ok(())
    }

    fn step(&mut self) {
        let mut adc = [IqBlock::ZERO; 2];
        for s in [Side::A, Side::B] {
            let tx = s.peer().idx();
            if self.radios[s.idx()].evk.mode.rx_en {
                adc[s.idx()] = self.links[tx].push_block(&self.in_flight[tx]);
            }
        }
        for (i, radio) in self.radios.iter_mut().enumerate() {
            let dac = radio.pl.clock_step(&adc[i]);
            self.in_flight[i] = if radio.evk.mode.tx_en { dac } else { IqBlock::ZERO };
        }
        self.clock += 1;
    }

    fn busy(&self) -> bool {
        self.radios.iter().any(|r| r.pl.tx_active() || r.pl.capture_active())
            || self.in_flight.iter().any(|b| !b.is_zero())
    }

    /// Steps until both radios have been quiet for [`SETTLE_CLOCKS`].
    pub fn run_until_quiet(&mut self) -> mmsdr_core::Result<()> {
        self.retune()?;
        let mut quiet = 0;
        while quiet < SETTLE_CLOCKS {
            self.step();
            quiet = if self.busy() { 0 } else { quiet + 1 };
        }
        Ok(())
    }

    /// Idle pre-gap, then transmits `iq` from `side` and runs to quiet.
    pub fn transmit(&mut self, side: Side, iq: &[IqSample]) -> mmsdr_core::Result<TxHandle> {
        self.retune()?;
        for _ in 0..PRE_GAP_CLOCKS {
            self.step();
        }
        let h = self.radios[side.idx()].pl.tx_submit(iq)?;
        self.run_until_quiet()?;
        Ok(h)
    }
}

/// Shared by the two node services.
#[derive(Debug)]
pub struct Medium {
    state: Mutex<MediumState>,
    changed: Condvar,
    scene: ChannelScene,
}

impl Medium {
    pub fn new(scene: ChannelScene, pl: PlConfig) -> mmsdr_core::Result<Arc<Medium>> {
        let codebook = default_codebook(CODEBOOK_DESIGN_HZ)?;
        let boresight = codebook.get(32)?.clone();
        let mut back = scene.clone();
        back.seed = scene.seed.wrapping_add(1);
        let state = MediumState {
            radios: [
                Radio { pl: PlSim::new(pl.clone())?, evk: EvkState::default() },
                Radio { pl: PlSim::new(pl)?, evk: EvkState::default() },
            ],
            links: [Link::new(&scene, &boresight, &boresight)?, Link::new(&back, &boresight, &boresight)?],
            in_flight: [IqBlock::ZERO; 2],
            codebook,
            clock: 0,
        };
        Ok(Arc::new(Medium { state: Mutex::new(state), changed: Condvar::new(), scene }))
    }

    pub fn scene(&self) -> &ChannelScene {
        &self.scene
    }

    pub fn lock(&self) -> MutexGuard<'_, MediumState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Wakes threads blocked in [`Medium::wait_until`].
    pub fn notify(&self) {
        self.changed.notify_all();
    }

    /// Waits until `ready` holds or `timeout` passes. Returns the guard and
    /// whether `ready` held.
    pub fn wait_until(
        &self,
        timeout: Duration,
        mut ready: impl FnMut(&MediumState) -> bool,
    ) -> (MutexGuard<'_, MediumState>, bool) {
        let deadline = Instant::now() + timeout;
        let mut guard = self.lock();
        loop {
            if ready(&guard) {
                return (guard, true);
            }
            let now = Instant::now();
            if now >= deadline {
                return (guard, false);
            }
            guard = self
                .changed
                .wait_timeout(guard, deadline - now)
                .map(|(g, _)| g)
                .unwrap_or_else(|e| e.into_inner().0);
        }
    }
}
