use serde::Serialize;

use super::censoring::CensoringScheme;
use super::clock::{level_bounds, ClockField, ClockMode, Ring};
use crate::config::{Configuration, HeightFunction};
use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;
use crate::rng::StreamRng;

/// One trajectory: occupancy of sites 1..N and the height function scaled by N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member {
    occ: Vec<u8>,
    scaled: Vec<i64>,
}

impl Member {
    fn new(cfg: &Configuration) -> Self {
        Self {
            occ: cfg.occupancy().into_iter().map(u8::from).collect(),
            scaled: HeightFunction::of(cfg).scaled().to_vec(),
        }
    }

    pub fn occupied(&self, x: usize) -> bool {
        self.occ[x - 1] == 1
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    /// N·h(x).
    pub fn scaled_height(&self, x: usize) -> i64 {
        self.scaled[x]
    }

    pub fn scaled_heights(&self) -> &[i64] {
        &self.scaled
    }

    pub fn config(&self) -> Configuration {
        Configuration::from_occupancy(&self.occ.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }
}

/// One row of the optional event log.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub x: usize,
    pub dir: char,
    pub applied: bool,
    pub member_states_hash: String,
}

/// Trajectories driven by one clock field.
#[derive(Clone, Debug)]
pub struct CoupledEnsemble {
    n: usize,
    k: usize,
    members: Vec<Member>,
    clocks: ClockField,
    time: f64,
    rings: u64,
    flips: u64,
    censoring: CensoringScheme,
    log: Option<Vec<EventRecord>>,
    pairs: Vec<(usize, usize, usize)>,
    audit_every: Option<u64>,
}

/// Largest ensemble size; flipped members are reported as a bit mask.
pub const MAX_MEMBERS: usize = 64;

/// Outcome of one ring.
#[derive(Clone, Copy, Debug)]
pub struct RingOutcome {
    pub ring: Ring,
    /// Bit i is set when member i flipped.
    pub flipped: u64,
}

impl RingOutcome {
    pub fn any_flip(&self) -> bool {
        self.flipped != 0
    }

    pub fn flipped(&self, member: usize) -> bool {
        self.flipped >> member & 1 == 1
    }
}

impl CoupledEnsemble {
    pub fn new(p: &ConductanceProfile, starts: &[Configuration], mode: ClockMode, rng: StreamRng) -> Result<Self> {
        let first = starts.first().ok_or_else(|| Error::param("an ensemble needs at least one member"))?;
        let (n, k) = (first.n(), first.k());
        if starts.len() > MAX_MEMBERS {
            return Err(Error::param(format!("an ensemble holds at most {MAX_MEMBERS} members")));
        }
        if n != p.n_sites() || starts.iter().any(|c| c.n() != n || c.k() != k) {
            return Err(Error::param("all members must share (N, k) with the profile"));
        }
        Ok(Self {
            n,
            k,
            members: starts.iter().map(Member::new).collect(),
            clocks: ClockField::new(p, k, mode, rng),
            time: 0.0,
            rings: 0,
            flips: 0,
            censoring: CensoringScheme::empty(),
            log: None,
            pairs: Vec::new(),
            audit_every: None,
        })
    }

    pub fn with_censoring(mut self, scheme: CensoringScheme) -> Self {
        self.censoring = scheme;
        self
    }

    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    /// Recompute heights from scratch every `every` rings and compare.
    pub fn with_audit(mut self, every: u64) -> Self {
        self.audit_every = Some(every);
        self
    }

    /// Track the number of sites where members `a` and `b` differ; returns a handle.
    pub fn track_pair(&mut self, a: usize, b: usize) -> usize {
        let d = self.members[a].occ.iter().zip(&self.members[b].occ).filter(|(u, v)| u != v).count();
        self.pairs.push((a, b, d));
        self.pairs.len() - 1
    }

    pub fn mismatch(&self, handle: usize) -> usize {
        self.pairs[handle].2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn rings(&self) -> u64 {
        self.rings
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Member {
        &self.members[i]
    }

    pub fn event_log(&self) -> Option<&[EventRecord]> {
        self.log.as_deref()
    }

    pub fn clock_mode(&self) -> ClockMode {
        self.clocks.mode()
    }

    pub fn clock_streams(&self) -> usize {
        self.clocks.stream_count()
    }

    /// Whether member `m` flips on `ring`, and its center level.
    #[inline]
    fn admissible(&self, m: &Member, ring: &Ring) -> bool {
        let x = ring.x;
        let (a, b) = (m.occ[x - 1], m.occ[x]);
        let shape_ok = if ring.up { a == 0 && b == 1 } else { a == 1 && b == 0 };
        if !shape_ok {
            return false;
        }
        if ring.level.is_none() && self.censoring.intervals().is_empty() {
            return true;
        }
        let count = ((m.scaled[x] + (self.k * x) as i64) / self.n as i64) as usize;
        let (lo, _) = level_bounds(self.n, self.k, x);
        let level = if ring.up { count - lo } else { count - 1 - lo };
        if let Some(l) = ring.level {
            if l != level {
                return false;
            }
        }
        !self.censoring.is_blocked(ring.t, x, level)
    }

    fn flip(&mut self, i: usize, x: usize, up: bool) {
        let n = self.n as i64;
        for pi in 0..self.pairs.len() {
            let (a, b, _) = self.pairs[pi];
            if a == i || b == i {
                let before = (self.members[a].occ[x - 1] != self.members[b].occ[x - 1]) as usize
                    + (self.members[a].occ[x] != self.members[b].occ[x]) as usize;
                self.pairs[pi].2 -= before;
            }
        }
        let m = &mut self.members[i];
        m.occ.swap(x - 1, x);
        m.scaled[x] += if up { n } else { -n };
        for pi in 0..self.pairs.len() {
            let (a, b, _) = self.pairs[pi];
            if a == i || b == i {
                let after = (self.members[a].occ[x - 1] != self.members[b].occ[x - 1]) as usize
                    + (self.members[a].occ[x] != self.members[b].occ[x]) as usize;
                self.pairs[pi].2 += after;
            }
        }
    }

    /// Process the next ring if it happens no later than `horizon`. Otherwise
    /// advance the cursor to `horizon` and return `None`.
    pub fn step(&mut self, horizon: f64) -> Result<Option<RingOutcome>> {
        if self.clocks.peek_time() > horizon {
            self.time = self.time.max(horizon);
            return Ok(None);
        }
        let Some(ring) = self.clocks.next_ring() else {
            return Ok(None);
        };
        self.time = ring.t;
        self.rings += 1;
        let mut flipped = 0u64;
        for i in 0..self.members.len() {
            if self.admissible(&self.members[i], &ring) {
                flipped |= 1 << i;
            }
        }
        for i in 0..self.members.len() {
            if flipped >> i & 1 == 1 {
                self.flip(i, ring.x, ring.up);
            }
        }
        self.flips += flipped.count_ones() as u64;
        if self.log.is_some() {
            let hash = self.state_hash();
            let rec = EventRecord {
                t: ring.t,
                x: ring.x,
                dir: if ring.up { 'U' } else { 'D' },
                applied: flipped != 0,
                member_states_hash: format!("{hash:016x}"),
            };
            self.log.get_or_insert_with(Vec::new).push(rec);
        }
        if let Some(every) = self.audit_every {
            if self.rings.is_multiple_of(every) {
                self.audit()?;
            }
        }
        Ok(Some(RingOutcome { ring, flipped }))
    }

    /// Run all rings up to `horizon`.
    pub fn evolve(&mut self, horizon: f64) -> Result<()> {
        while self.step(horizon)?.is_some() {}
        Ok(())
    }

    /// Compare incremental heights with a fresh computation.
    pub fn audit(&self) -> Result<()> {
        for (i, m) in self.members.iter().enumerate() {
            let fresh = HeightFunction::of(&m.config());
            if fresh.scaled() != m.scaled.as_slice() {
                return Err(Error::invariant("incremental height", format!("member {i} drifted at t = {}", self.time)));
            }
        }
        Ok(())
    }

    /// FNV-1a over all member occupancies.
    pub fn state_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for m in &self.members {
            for &b in &m.occ {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= 0xff;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// True if member `a` lies below member `b` in the height order.
    pub fn ordered(&self, a: usize, b: usize) -> bool {
        self.members[a].scaled.iter().zip(&self.members[b].scaled).all(|(u, v)| u <= v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Extremal;
    use crate::dynamics::CensoringScheme;
    use crate::rng::{stream, Purpose};

    fn extremes(n: usize, k: usize) -> Vec<Configuration> {
        vec![Configuration::extremal(n, k, Extremal::Max).unwrap(), Configuration::extremal(n, k, Extremal::Min).unwrap()]
    }

    #[test]
    fn order_preserved_and_coalescence_sticks() {
        let p = ConductanceProfile::from_resistances(vec![0.5, 1.5, 1.0, 2.0, 0.7, 1.1, 0.9]).unwrap();
        for mode in [ClockMode::PerColumn, ClockMode::Literal] {
            let mut e = CoupledEnsemble::new(&p, &extremes(8, 4), mode, stream(11, Purpose::Clock, 0)).unwrap().with_audit(1);
            let h = e.track_pair(0, 1);
            let mut merged = false;
            while e.step(500.0).unwrap().is_some() {
                assert!(e.ordered(1, 0));
                if merged {
                    assert_eq!(e.mismatch(h), 0);
                }
                merged |= e.mismatch(h) == 0;
            }
            assert!(merged, "{mode:?}");
        }
    }

    #[test]
    fn censoring_all_freezes_and_empty_is_identical() {
        let p = ConductanceProfile::homogeneous(6).unwrap();
        let starts = extremes(6, 3);
        let mut frozen = CoupledEnsemble::new(&p, &starts, ClockMode::PerColumn, stream(2, Purpose::Clock, 0))
            .unwrap()
            .with_censoring(CensoringScheme::block_everything(6, 10.0));
        frozen.evolve(10.0).unwrap();
        assert_eq!(frozen.member(0).config(), starts[0]);
        assert_eq!(frozen.member(1).config(), starts[1]);

        let mut a = CoupledEnsemble::new(&p, &starts, ClockMode::PerColumn, stream(2, Purpose::Clock, 0)).unwrap().with_event_log();
        let mut b = CoupledEnsemble::new(&p, &starts, ClockMode::PerColumn, stream(2, Purpose::Clock, 0))
            .unwrap()
            .with_censoring(CensoringScheme::empty())
            .with_event_log();
        a.evolve(10.0).unwrap();
        b.evolve(10.0).unwrap();
        assert_eq!(a.event_log(), b.event_log());
    }
}
