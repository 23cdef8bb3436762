//! Conductance profiles on the segment 1..N and the standing assumptions.
//!
//! Edge `x` (1-based) joins sites `x` and `x+1`. Internally edge `x` lives at
//! index `x-1`. Resistances are canonical; rates are their reciprocals.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct ConductanceProfile {
    n_sites: usize,
    rates: Vec<f64>,
    resistances: Vec<f64>,
}

impl ConductanceProfile {
    /// Build from resistances r(x,x+1), x = 1..N−1.
    pub fn from_resistances(resistances: Vec<f64>) -> Result<Self> {
        if resistances.is_empty() {
            return Err(Error::param("a profile needs at least two sites"));
        }
        for (i, &r) in resistances.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidProfile { index: i + 1, value: r });
            }
        }
        let rates = resistances.iter().map(|r| 1.0 / r).collect();
        Ok(Self { n_sites: resistances.len() + 1, rates, resistances })
    }

    /// Build from rates c(x,x+1), x = 1..N−1.
    pub fn from_rates(rates: Vec<f64>) -> Result<Self> {
        for (i, &c) in rates.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidProfile { index: i + 1, value: c });
            }
        }
        let mut p = Self::from_resistances(rates.iter().map(|c| 1.0 / c).collect())?;
        p.rates = rates;
        Ok(p)
    }

    pub fn homogeneous(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::param("n_sites must be at least 2"));
        }
        Self::from_resistances(vec![1.0; n_sites - 1])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of edges, N−1.
    pub fn n_edges(&self) -> usize {
        self.n_sites - 1
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn resistances(&self) -> &[f64] {
        &self.resistances
    }

    /// c(x,x+1) for 1-based edge x.
    pub fn rate(&self, x: usize) -> f64 {
        self.rates[x - 1]
    }

    /// r(x,x+1) for 1-based edge x.
    pub fn resistance(&self, x: usize) -> f64 {
        self.resistances[x - 1]
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Embed into the segment −m..N+m with unit conductances outside 1..N.
    pub fn extended(&self, m: usize) -> Self {
        let mut r = vec![1.0; m + 1];
        r.extend_from_slice(&self.resistances);
        r.extend(std::iter::repeat_n(1.0, m));
        Self::from_resistances(r).expect("extension of a valid profile is valid")
    }

    /// Same resistances in a random order.
    pub fn shuffled(&self, seed: u64) -> Self {
        use rand::seq::SliceRandom;
        let mut r = self.resistances.clone();
        r.shuffle(&mut rng::stream(seed, Purpose::Profile, u64::MAX));
        Self::from_resistances(r).expect("permutation of a valid profile is valid")
    }

    pub fn to_file(&self) -> ProfileFile {
        ProfileFile { n_sites: self.n_sites, resistances: self.resistances.clone() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ProfileFile = serde_json::from_str(&text)?;
        file.into_profile()
    }
}

/// On-disk form: resistances are canonical.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProfileFile {
    pub n_sites: usize,
    pub resistances: Vec<f64>,
}

impl ProfileFile {
    pub fn into_profile(self) -> Result<ConductanceProfile> {
        if self.resistances.len() + 1 != self.n_sites {
            return Err(Error::param(format!(
                "n_sites = {} needs {} resistances, found {}",
                self.n_sites,
                self.n_sites.saturating_sub(1),
                self.resistances.len()
            )));
        }
        ConductanceProfile::from_resistances(self.resistances)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    Homogeneous,
    IidUniform { a: f64, b: f64 },
    IidDiscrete { values: Vec<f64>, probs: Vec<f64> },
    /// Explicit rates c(x,x+1).
    Explicit { rates: Vec<f64> },
    OneSlowBond { position: usize, resistance: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProfileSpec {
    #[serde(flatten)]
    pub kind: ProfileKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalize: bool,
}

impl ProfileSpec {
    pub fn new(kind: ProfileKind, seed: u64) -> Self {
        Self { kind, seed, normalize: false }
    }

    pub fn homogeneous() -> Self {
        Self::new(ProfileKind::Homogeneous, 0)
    }

    pub fn iid_uniform(a: f64, b: f64, seed: u64) -> Self {
        Self::new(ProfileKind::IidUniform { a, b }, seed)
    }

    pub fn normalized(mut self) -> Self {
        self.normalize = true;
        self
    }

    /// Parse the short command-line form: `homogeneous`, `iid-uniform:a,b`,
    /// `iid-discrete:v1/p1,v2/p2`, `explicit:c1,c2,...`, `one-slow-bond:pos,r`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let (name, args) = text.split_once(':').unwrap_or((text, ""));
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::param(format!("bad number `{t}`"))))
                .collect()
        };
        let kind = match name {
            "homogeneous" => ProfileKind::Homogeneous,
            "iid-uniform" => {
                let v = if args.is_empty() { vec![0.5, 1.5] } else { nums(args)? };
                if v.len() != 2 {
                    return Err(Error::param("iid-uniform takes a,b"));
                }
                ProfileKind::IidUniform { a: v[0], b: v[1] }
            }
            "iid-discrete" => {
                let mut values = Vec::new();
                let mut probs = Vec::new();
                for pair in args.split(',') {
                    let (v, p) = pair
                        .split_once('/')
                        .ok_or_else(|| Error::param("iid-discrete takes value/prob pairs"))?;
                    values.push(v.trim().parse().map_err(|_| Error::param("bad value"))?);
                    probs.push(p.trim().parse().map_err(|_| Error::param("bad probability"))?);
                }
                ProfileKind::IidDiscrete { values, probs }
            }
            "explicit" => ProfileKind::Explicit { rates: nums(args)? },
            "one-slow-bond" => {
                let v = nums(args)?;
                if v.len() != 2 || v[0] < 1.0 || v[0].fract() != 0.0 {
                    return Err(Error::param("one-slow-bond takes position,resistance"));
                }
                ProfileKind::OneSlowBond { position: v[0] as usize, resistance: v[1] }
            }
            other => return Err(Error::param(format!("unknown profile kind `{other}`"))),
        };
        Ok(Self::new(kind, seed))
    }
}

/// Deterministic profile for `(spec, seed, n_sites)`.
pub fn build_profile(spec: &ProfileSpec, n_sites: usize) -> Result<ConductanceProfile> {
    if n_sites < 2 {
        return Err(Error::param("n_sites must be at least 2"));
    }
    let edges = n_sites - 1;
    let r: Vec<f64> = match &spec.kind {
        ProfileKind::Homogeneous => vec![1.0; edges],
        ProfileKind::IidUniform { a, b } => {
            if !(a.is_finite() && b.is_finite() && *a > 0.0 && b >= a) {
                return Err(Error::param(format!("iid-uniform needs 0 < a <= b, got ({a}, {b})")));
            }
            (0..edges)
                .map(|x| {
                    let u: f64 = rng::stream(spec.seed, Purpose::Profile, x as u64).random();
                    a + (b - a) * u
                })
                .collect()
        }
        ProfileKind::IidDiscrete { values, probs } => {
            if values.is_empty() || values.len() != probs.len() {
                return Err(Error::param("iid-discrete needs matching non-empty values and probs"));
            }
            if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) || probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::param("iid-discrete needs positive values and non-negative probs"));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::param(format!("probabilities sum to {total}, not 1")));
            }
            (0..edges)
                .map(|x| {
                    let u: f64 = rng::stream(spec.seed, Purpose::Profile, x as u64).random();
                    let mut acc = 0.0;
                    for (v, p) in values.iter().zip(probs) {
                        acc += p;
                        if u < acc {
                            return *v;
                        }
                    }
                    *values.last().unwrap()
                })
                .collect()
        }
        ProfileKind::Explicit { rates } => {
            if rates.len() != edges {
                return Err(Error::param(format!("explicit list has {} rates, N = {n_sites} needs {edges}", rates.len())));
            }
            return ConductanceProfile::from_rates(rates.clone()).and_then(|p| {
                if spec.normalize {
                    normalize(p.resistances.clone())
                } else {
                    Ok(p)
                }
            });
        }
        ProfileKind::OneSlowBond { position, resistance } => {
            if *position < 1 || *position > edges {
                return Err(Error::param(format!("slow bond position {position} outside 1..{edges}")));
            }
            let mut r = vec![1.0; edges];
            r[position - 1] = *resistance;
            r
        }
    };
    if spec.normalize {
        return normalize(r);
    }
    ConductanceProfile::from_resistances(r)
}

fn normalize(r: Vec<f64>) -> Result<ConductanceProfile> {
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    ConductanceProfile::from_resistances(r.into_iter().map(|v| v / mean).collect())
}

/// Constants the assumptions leave abstract.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub c_p: f64,
    pub upsilon: f64,
    /// Lower bound to compare the minimal resistance against; `None` uses (log N)^{-1/2}.
    pub upsilon_bar: Option<f64>,
    pub c_rho: f64,
    pub rho: f64,
}

impl Default for AssumptionParams {
    fn default() -> Self {
        Self { c_p: 1.0, upsilon: 0.5, upsilon_bar: None, c_rho: 1.0, rho: 0.5 }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AssumptionReport {
    pub lln_discrepancy: f64,
    pub max_resistance: f64,
    pub min_resistance: f64,
    pub upsilon_margin: f64,
    pub upsilon_bar: f64,
    pub upsilon_bar_reference: f64,
    pub k_range_ok: bool,
}

/// Finite-N values of the standing assumptions. No verdict beyond `k_range_ok`.
pub fn check_assumptions(p: &ConductanceProfile, k: usize, params: &AssumptionParams) -> Result<AssumptionReport> {
    let n = p.n_sites();
    if k < 1 || k > n - 1 {
        return Err(Error::param(format!("k = {k} outside 1..{}", n - 1)));
    }
    let mut partial = 0.0;
    let mut sup: f64 = 0.0;
    for (i, r) in p.resistances().iter().enumerate() {
        partial += r;
        sup = sup.max((partial - (i + 1) as f64).abs());
    }
    let max_resistance = p.resistances().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_resistance = p.resistances().iter().copied().fold(f64::INFINITY, f64::min);
    let log_n = (n as f64).ln();
    let upsilon_margin = max_resistance / (params.c_p * log_n.powf(params.upsilon).exp());
    let upsilon_bar_reference = params.upsilon_bar.unwrap_or_else(|| log_n.powf(-0.5));
    let kf = k as f64;
    Ok(AssumptionReport {
        lln_discrepancy: sup / n as f64,
        max_resistance,
        min_resistance,
        upsilon_margin,
        upsilon_bar: min_resistance,
        upsilon_bar_reference,
        k_range_ok: params.c_rho * (n as f64).powf(params.rho) <= kf && kf <= n as f64 / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_rates_are_one() {
        let p = build_profile(&ProfileSpec::homogeneous(), 5).unwrap();
        assert_eq!(p.rates(), &[1.0; 4]);
    }

    #[test]
    fn explicit_list_is_rates() {
        let spec = ProfileSpec::new(ProfileKind::Explicit { rates: vec![2.0, 0.5, 1.0] }, 0);
        let p = build_profile(&spec, 4).unwrap();
        assert_eq!(p.resistances(), &[0.5, 2.0, 1.0]);
    }

    #[test]
    fn explicit_rejects_nonpositive_with_index() {
        let spec = ProfileSpec::new(ProfileKind::Explicit { rates: vec![1.0, -1.0, 1.0] }, 0);
        match build_profile(&spec, 4) {
            Err(Error::InvalidProfile { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_distribution_rejected() {
        assert!(build_profile(&ProfileSpec::iid_uniform(-1.0, 1.0, 1), 5).is_err());
        let spec = ProfileSpec::new(ProfileKind::IidDiscrete { values: vec![1.0, 2.0], probs: vec![0.5, 0.6] }, 0);
        assert!(build_profile(&spec, 5).is_err());
    }

    #[test]
    fn lln_of_large_uniform_profile_is_small() {
        let p = build_profile(&ProfileSpec::iid_uniform(0.5, 1.5, 2024), 10_000).unwrap();
        let rep = check_assumptions(&p, 5000, &AssumptionParams::default()).unwrap();
        assert!(rep.lln_discrepancy < 0.05, "{}", rep.lln_discrepancy);
    }

    #[test]
    fn lln_homogeneous_and_constant_two() {
        let p = ConductanceProfile::homogeneous(100).unwrap();
        let rep = check_assumptions(&p, 50, &AssumptionParams::default()).unwrap();
        assert_eq!(rep.lln_discrepancy, 0.0);
        assert_eq!((rep.min_resistance, rep.max_resistance), (1.0, 1.0));

        let p = ConductanceProfile::from_resistances(vec![2.0; 10]).unwrap();
        let rep = check_assumptions(&p, 3, &AssumptionParams::default()).unwrap();
        assert!((rep.lln_discrepancy - 10.0 / 11.0).abs() < 1e-15);
        assert!(check_assumptions(&p, 11, &AssumptionParams::default()).is_err());
    }

    #[test]
    fn normalize_gives_unit_mean() {
        let p = build_profile(&ProfileSpec::iid_uniform(0.5, 2.0, 3).normalized(), 50).unwrap();
        let mean = p.resistances().iter().sum::<f64>() / 49.0;
        assert!((mean - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extension_adds_unit_edges() {
        let p = ConductanceProfile::from_resistances(vec![2.0, 3.0]).unwrap();
        let e = p.extended(2);
        assert_eq!(e.n_sites(), 3 + 2 * 2 + 1);
        assert_eq!(e.resistances(), &[1.0, 1.0, 1.0, 2.0, 3.0, 1.0, 1.0]);
    }

    #[test]
    fn profile_file_roundtrip() {
        let p = build_profile(&ProfileSpec::iid_uniform(0.5, 1.5, 9), 7).unwrap();
        let text = serde_json::to_string(&p.to_file()).unwrap();
        let back: ProfileFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_profile().unwrap(), p);
    }

    #[test]
    fn parse_short_forms() {
        assert_eq!(ProfileSpec::parse("iid-uniform:0.5,1.5", 3).unwrap(), ProfileSpec::iid_uniform(0.5, 1.5, 3));
        assert!(ProfileSpec::parse("nonsense", 0).is_err());
        let s = ProfileSpec::parse("one-slow-bond:3,10", 0).unwrap();
        assert_eq!(build_profile(&s, 5).unwrap().resistance(3), 10.0);
    }
}
