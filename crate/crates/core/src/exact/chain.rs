use super::sparse::SparseGenerator;
use crate::config::{binomial, colex_rank, enumerate_masks, BinomialTable, Configuration};
use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;

pub const DEFAULT_STATE_BUDGET: usize = 200_000;

/// The k-particle generator on Ω_{N,k}, states in colex order.
#[derive(Clone, Debug)]
pub struct ChainMatrix {
    n: usize,
    k: usize,
    states: Vec<u64>,
    table: BinomialTable,
    q: SparseGenerator,
    lambda: f64,
}

pub fn build_chain(p: &ConductanceProfile, k: usize) -> Result<ChainMatrix> {
    build_chain_with_budget(p, k, DEFAULT_STATE_BUDGET)
}

pub fn build_chain_with_budget(p: &ConductanceProfile, k: usize, budget: usize) -> Result<ChainMatrix> {
    ChainMatrix::from_rates(p.n_sites(), k, p.rates(), budget)
}

impl ChainMatrix {
    /// Generator for raw edge rates; a zero rate disables that edge.
    pub fn from_rates(n: usize, k: usize, rates: &[f64], budget: usize) -> Result<Self> {
        if k > n {
            return Err(Error::param(format!("k = {k} exceeds N = {n}")));
        }
        let count = binomial(n, k);
        if count > budget as u128 || n > 64 {
            return Err(Error::Capacity { states: count, budget });
        }
        let states = enumerate_masks(n, k);
        let table = BinomialTable::new(n);
        let rows = states
            .iter()
            .map(|&m| {
                (0..n - 1)
                    .filter(|&e| rates[e] > 0.0 && ((m >> e) & 1) != ((m >> (e + 1)) & 1))
                    .map(|e| (colex_rank(m ^ (0b11 << e), &table), rates[e]))
                    .collect()
            })
            .collect();
        let q = SparseGenerator::from_rows(rows);
        let lambda = q.uniformization_rate();
        Ok(Self { n, k, states, table, q, lambda })
    }

    /// Same state space with some edges (1-based) switched off.
    pub fn with_blocked_edges(p: &ConductanceProfile, k: usize, blocked: &[usize]) -> Result<Self> {
        let mut rates = p.rates().to_vec();
        for &x in blocked {
            if x >= 1 && x <= rates.len() {
                rates[x - 1] = 0.0;
            }
        }
        Self::from_rates(p.n_sites(), k, &rates, DEFAULT_STATE_BUDGET)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn generator(&self) -> &SparseGenerator {
        &self.q
    }

    /// Uniformization constant Λ = max exit rate.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mask(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn state(&self, i: usize) -> Configuration {
        Configuration::from_mask(self.n, self.states[i])
    }

    pub fn index_of(&self, cfg: &Configuration) -> Result<usize> {
        if cfg.n() != self.n || cfg.k() != self.k {
            return Err(Error::param("configuration does not belong to this chain"));
        }
        Ok(colex_rank(cfg.mask(), &self.table))
    }

    pub fn point_mass(&self, cfg: &Configuration) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.len()];
        v[self.index_of(cfg)?] = 1.0;
        Ok(v)
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    /// Evaluate a function of the configuration on every state.
    pub fn tabulate<F: Fn(&Configuration) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.state(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_shape() {
        let p = ConductanceProfile::from_rates(vec![3.0]).unwrap();
        let c = build_chain(&p, 1).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.generator().diag(), &[-3.0, -3.0]);
        assert_eq!(c.generator().row(0).collect::<Vec<_>>(), vec![(1, 3.0)]);
        let h = |n| ConductanceProfile::homogeneous(n).unwrap();
        assert_eq!(build_chain(&h(4), 2).unwrap().len(), 6);
        assert_eq!(build_chain(&h(12), 6).unwrap().len(), 924);
    }

    #[test]
    fn capacity_error_names_count() {
        let p = ConductanceProfile::homogeneous(30).unwrap();
        match build_chain(&p, 15) {
            Err(Error::Capacity { states, .. }) => assert_eq!(states, 155_117_520),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn symmetric_generator() {
        let p = ConductanceProfile::from_resistances(vec![0.5, 2.0, 1.0, 1.5, 0.7]).unwrap();
        let c = build_chain(&p, 3).unwrap();
        assert_eq!(c.generator().asymmetry(), 0.0);
        c.generator().check_generator(1e-12 * c.lambda()).unwrap();
        let ones = vec![1.0; c.len()];
        assert!(c.generator().apply(&ones).iter().all(|v| v.abs() < 1e-12 * c.lambda()));
    }
}
