use rand::Rng;

use crate::config::Configuration;
use crate::profile::ConductanceProfile;

/// A single exclusion trajectory advanced in stages.
///
/// Each edge rings at rate c(x,x+1) and swaps the contents of its two sites.
/// Restarting the exponential clock at every stage boundary is exact by the
/// memoryless property.
#[derive(Clone, Debug)]
pub struct MarkovPath {
    occ: Vec<u8>,
    cumulative: Vec<f64>,
    total: f64,
    t: f64,
}

impl MarkovPath {
    pub fn new(p: &ConductanceProfile, cfg: &Configuration) -> Self {
        let cumulative: Vec<f64> = p
            .rates()
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        let total = cumulative.last().copied().unwrap_or(0.0);
        Self { occ: cfg.occupancy().into_iter().map(u8::from).collect(), cumulative, total, t: 0.0 }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// ξ(x) for x in 1..=N.
    pub fn occupied(&self, x: usize) -> bool {
        self.occ[x - 1] == 1
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    pub fn config(&self) -> Configuration {
        Configuration::from_occupancy(&self.occ.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    /// Run until `horizon`, calling `on_jump(t, x)` after every swap across
    /// edge (x, x+1) that moves a particle.
    pub fn advance<R: Rng + ?Sized, F: FnMut(f64, usize, &[u8])>(&mut self, horizon: f64, rng: &mut R, mut on_jump: F) {
        if self.total <= 0.0 {
            self.t = self.t.max(horizon);
            return;
        }
        loop {
            let u: f64 = rng.random();
            let t = self.t - (1.0 - u).ln() / self.total;
            if t > horizon {
                self.t = horizon;
                return;
            }
            self.t = t;
            let target = rng.random::<f64>() * self.total;
            let e = self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1);
            if self.occ[e] != self.occ[e + 1] {
                self.occ.swap(e, e + 1);
                on_jump(t, e + 1, &self.occ);
            }
        }
    }
}

/// Run the exclusion process from `cfg` for `horizon` units of time.
pub fn step_markov<R: Rng + ?Sized>(p: &ConductanceProfile, cfg: &Configuration, horizon: f64, rng: &mut R) -> Configuration {
    let mut path = MarkovPath::new(p, cfg);
    path.advance(horizon, rng, |_, _, _| {});
    path.config()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn zero_horizon_and_conservation() {
        let p = ConductanceProfile::homogeneous(7).unwrap();
        let c = Configuration::parse("1101000").unwrap();
        let mut rng = stream(1, Purpose::Markov, 0);
        assert_eq!(step_markov(&p, &c, 0.0, &mut rng), c);
        let later = step_markov(&p, &c, 30.0, &mut rng);
        assert_eq!(later.k(), 3);
    }

    #[test]
    fn single_edge_flips() {
        let p = ConductanceProfile::homogeneous(2).unwrap();
        let c = Configuration::parse("10").unwrap();
        // Long enough for at least one ring with overwhelming probability;
        // the state alternates, so it is either state with probability 1/2.
        let mut ones = 0;
        for i in 0..2000 {
            let mut rng = stream(5, Purpose::Markov, i);
            if step_markov(&p, &c, 20.0, &mut rng).get(1) {
                ones += 1;
            }
        }
        assert!((ones as f64 / 2000.0 - 0.5).abs() < 0.05);
    }
}
