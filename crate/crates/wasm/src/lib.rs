//! Browser bindings for three demo operations: the one-particle spectrum,
//! coupled maximal and minimal height paths, and the exact TV curve of a
//! small system. Results cross the boundary as JSON strings.

use std::f64::consts::PI;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sepmix_core::config::Extremal;
use sepmix_core::dynamics::{ClockMode, CoupledEnsemble};
use sepmix_core::exact::{build_chain_with_budget, mix_exact, Starts, DEFAULT_TOL};
use sepmix_core::profile::build_profile;
use sepmix_core::rng::{stream, Purpose};
use sepmix_core::spectral::{solve_neumann, spectral_gap, Normalization};
use sepmix_core::{Configuration, ConductanceProfile, ProfileSpec, Result};

/// Exact chains above this many states are refused to keep the page responsive.
pub const DEMO_STATE_BUDGET: usize = 20_000;

fn profile(kind: &str, seed: u64, n: usize) -> Result<ConductanceProfile> {
    build_profile(&ProfileSpec::parse(kind, seed)?, n)
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    r.and_then(|v| Ok(serde_json::to_string(&v)?)).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[derive(Serialize)]
pub struct SpectrumView {
    pub resistances: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// N²λ_i/π², which tends to i² for nice environments.
    pub scaled: Vec<f64>,
    /// g_i(x) for x = 1..N with g_i(1) = 1.
    pub functions: Vec<Vec<f64>>,
    /// cos(iπ(x−½)/N), the homogeneous shape.
    pub references: Vec<Vec<f64>>,
}

pub fn spectrum_view(kind: &str, seed: u64, n: usize, count: usize) -> Result<SpectrumView> {
    let p = profile(kind, seed, n)?;
    let sys = solve_neumann(&p, count.clamp(1, n - 1), Normalization::FirstSite)?;
    let idx: Vec<usize> = (sys.first_index..sys.first_index + sys.len()).filter(|&i| i >= 1).collect();
    let scale = (n * n) as f64 / (PI * PI);
    Ok(SpectrumView {
        resistances: p.resistances().to_vec(),
        eigenvalues: idx.iter().map(|&i| sys.eigenvalue(i)).collect(),
        scaled: idx.iter().map(|&i| scale * sys.eigenvalue(i)).collect(),
        functions: idx.iter().map(|&i| sys.eigenfunction(i).to_vec()).collect(),
        references: idx
            .iter()
            .map(|&i| (1..=n).map(|x| (i as f64 * PI * (x as f64 - 0.5) / n as f64).cos()).collect())
            .collect(),
    })
}

#[wasm_bindgen]
pub fn spectrum(kind: &str, seed: u64, n: usize, count: usize) -> std::result::Result<String, JsValue> {
    to_js(spectrum_view(kind, seed, n, count))
}

#[derive(Serialize)]
pub struct MixingView {
    pub states: usize,
    pub gap: f64,
    pub times: Vec<f64>,
    pub d: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tmix: f64,
    pub tmix_lower: f64,
    pub tmix_upper: f64,
}

pub fn mixing_view(kind: &str, seed: u64, n: usize, k: usize, eps: f64) -> Result<MixingView> {
    let p = profile(kind, seed, n)?;
    let chain = build_chain_with_budget(&p, k, DEMO_STATE_BUDGET)?;
    let starts = if chain.len() <= 500 { Starts::All } else { Starts::ExtremalOnly };
    let m = mix_exact(&chain, &[eps], starts, 120, DEFAULT_TOL)?;
    let states = chain.len();
    let decay: Vec<f64> = m.curve.times.iter().map(|t| (-m.gap * t).exp()).collect();
    let (_, tmix, lo, hi) = m.mixing[0];
    Ok(MixingView {
        states,
        gap: m.gap,
        lower: decay.iter().map(|e| 0.5 * e).collect(),
        upper: decay.iter().map(|e| (0.5 * states as f64 * e).min(1.0)).collect(),
        times: m.curve.times,
        d: m.curve.d,
        tmix,
        tmix_lower: lo,
        tmix_upper: hi,
    })
}

#[wasm_bindgen]
pub fn mixing(kind: &str, seed: u64, n: usize, k: usize, eps: f64) -> std::result::Result<String, JsValue> {
    to_js(mixing_view(kind, seed, n, k, eps))
}

#[derive(Serialize)]
pub struct Frame {
    pub t: f64,
    /// Heights scaled by N, x = 0..N.
    pub top: Vec<i64>,
    pub bottom: Vec<i64>,
    pub coalesced: bool,
    pub rings: u64,
}

/// Maximal and minimal paths driven by one clock field.
#[wasm_bindgen]
pub struct Coupling {
    ensemble: CoupledEnsemble,
    pair: usize,
    /// 1/λ_1, the natural time unit.
    relaxation: f64,
}

impl Coupling {
    pub fn create(kind: &str, seed: u64, n: usize, k: usize) -> Result<Coupling> {
        let p = profile(kind, seed, n)?;
        let starts = [Configuration::extremal(n, k, Extremal::Max)?, Configuration::extremal(n, k, Extremal::Min)?];
        let mut ensemble = CoupledEnsemble::new(&p, &starts, ClockMode::PerColumn, stream(seed, Purpose::Clock, 0))?;
        let pair = ensemble.track_pair(0, 1);
        Ok(Coupling { ensemble, pair, relaxation: 1.0 / spectral_gap(&p)? })
    }

    pub fn frame(&self) -> Frame {
        Frame {
            t: self.ensemble.time(),
            top: self.ensemble.member(0).scaled_heights().to_vec(),
            bottom: self.ensemble.member(1).scaled_heights().to_vec(),
            coalesced: self.ensemble.mismatch(self.pair) == 0,
            rings: self.ensemble.rings(),
        }
    }

    /// Run for `units` relaxation times.
    pub fn advance(&mut self, units: f64) -> Result<Frame> {
        let horizon = self.ensemble.time() + units * self.relaxation;
        self.ensemble.evolve(horizon)?;
        Ok(self.frame())
    }
}

#[wasm_bindgen]
impl Coupling {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, seed: u64, n: usize, k: usize) -> std::result::Result<Coupling, JsValue> {
        Self::create(kind, seed, n, k).map_err(|e| JsValue::from_str(&e.to_string()))
    }

    #[wasm_bindgen(js_name = relaxationTime)]
    pub fn relaxation_time(&self) -> f64 {
        self.relaxation
    }

    pub fn step(&mut self, units: f64) -> std::result::Result<String, JsValue> {
        to_js(self.advance(units))
    }

    pub fn current(&self) -> std::result::Result<String, JsValue> {
        to_js(Ok(self.frame()))
    }
}
