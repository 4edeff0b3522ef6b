//! Run configuration, read from JSON. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{PeriodicOrbit, Sft, SftModel};
use crate::torus::{Torus, TorusModel, TorusPoint};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Enlargement of the torus Markov boxes; `None` picks the default.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub suites: Suites,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A torus point with rational coordinates `(xn/xd, yn/yd)`.
pub type RationalPoint = [[i64; 2]; 2];

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Adjacency matrix and the cyclic words of `P` and `Q`.
    Sft { adjacency: Vec<Vec<u8>>, p: Vec<u8>, q: Vec<u8> },
    /// Integer matrix and seeds of the orbits `P` and `Q`.
    Torus { matrix: [[i64; 2]; 2], p_seed: RationalPoint, q_seed: RationalPoint },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    /// Complexity cap of the homoclinic enumeration.
    pub homoclinic: usize,
    /// Sample levels filled eagerly from the enumeration.
    pub eager_level: u32,
    /// Deepest cover level touched by `covers`, `pou` and `sample`.
    pub max_level: u32,
    /// Basis points in the windows of the isometry checks.
    pub window: usize,
    /// Random test points per level.
    pub test_points: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { homoclinic: 12, eager_level: 3, max_level: 10, window: 10_000, test_points: 1000 }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Suites {
    pub quasi_invariance: QuasiInvariance,
    pub t_blocks: TBlocks,
    pub groupoid_lemmas: GroupoidLemmas,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuasiInvariance {
    pub n_max: u32,
    pub j: Vec<u32>,
    /// Columns of `W_n` evaluated.
    pub points: usize,
    /// Largest `n` for the column-wise scalar identities.
    pub gram_max: u32,
}

impl Default for QuasiInvariance {
    fn default() -> Self {
        QuasiInvariance { n_max: 32, j: vec![1, 2], points: 3, gram_max: 3 }
    }
}

/// Parameters shared by the `T_n` suites.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TBlocks {
    pub i: i64,
    pub k: i64,
    pub l: i64,
    pub n_min: i64,
    pub n_max: i64,
    /// Smallest `n` for the block-orthogonality and norm suites.
    pub n_min_positive: i64,
    /// Partners within `λ^partner ε_X`.
    pub partner: i64,
    /// Leaf radius of the partner search.
    pub search: i64,
    /// Index of the pair among the enumerated ones.
    pub pair: usize,
    pub n0_max: i64,
    /// Per-`(m, r)` block norms in the convergence suite.
    pub blocks: bool,
}

impl Default for TBlocks {
    fn default() -> Self {
        TBlocks { i: 0, k: 0, l: 0, n_min: -12, n_max: 10, n_min_positive: 0, partner: -4, search: 2, pair: 0, n0_max: 10, blocks: true }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GroupoidLemmas {
    pub pairs: usize,
    pub partner: i64,
    pub search: i64,
    pub n_max: i64,
}

impl Default for GroupoidLemmas {
    fn default() -> Self {
        GroupoidLemmas { pairs: 20, partner: 2, search: 2, n_max: 24 }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::Config(format!("delta must be positive, got {d}")));
            }
        }
        let q = &self.suites.quasi_invariance;
        if q.j.is_empty() || q.j.contains(&0) {
            return Err(Error::Config("quasi_invariance.j must list positive shifts".into()));
        }
        if q.points == 0 {
            return Err(Error::Config("quasi_invariance.points must be positive".into()));
        }
        let t = &self.suites.t_blocks;
        if t.n_min > t.n_max {
            return Err(Error::Config("t_blocks.n_min exceeds t_blocks.n_max".into()));
        }
        if let ModelSpec::Torus { p_seed, q_seed, .. } = &self.model {
            if p_seed.iter().chain(q_seed).any(|c| c[1] <= 0) {
                return Err(Error::Config("torus seed denominators must be positive".into()));
            }
        }
        Ok(())
    }

    /// The golden mean shift with `P = orbit(0^∞)`, `Q = orbit((01)^∞)`.
    pub fn golden_sft() -> Self {
        RunConfig {
            model: ModelSpec::Sft { adjacency: vec![vec![1, 1], vec![1, 0]], p: vec![0], q: vec![0, 1] },
            delta: None,
            caps: Caps::default(),
            suites: Suites::default(),
            seed: 0,
            out_dir: default_out_dir(),
        }
    }

    /// A toral automorphism with `P = {0}` and `Q = orbit((1/3, 1/3))`.
    pub fn torus(matrix: [[i64; 2]; 2]) -> Self {
        let mut cfg = Self::golden_sft();
        cfg.model = ModelSpec::Torus { matrix, p_seed: [[0, 1], [0, 1]], q_seed: [[1, 3], [1, 3]] };
        cfg.caps = Caps { homoclinic: 30, eager_level: 1, max_level: 8, ..Caps::default() };
        cfg.suites.t_blocks.search = 6;
        cfg
    }

    /// The cat map `[[2,1],[1,1]]`; its sample is filled lazily from level 1.
    pub fn cat() -> Self {
        let mut cfg = Self::torus([[2, 1], [1, 1]]);
        cfg.caps.eager_level = 0;
        cfg
    }
}

/// A system built from a [`ModelSpec`].
pub enum System {
    Sft(Sft),
    Torus(Torus),
}

impl System {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        match &cfg.model {
            ModelSpec::Sft { adjacency, p, q } => {
                let m = SftModel::new(adjacency)?;
                let p = PeriodicOrbit::new(&m, p.clone())?;
                let q = PeriodicOrbit::new(&m, q.clone())?;
                Ok(System::Sft(Sft::new(m, p, q)?))
            }
            ModelSpec::Torus { matrix, p_seed, q_seed } => {
                let m = TorusModel::new(*matrix)?;
                let pt = |s: &RationalPoint| TorusPoint::rational(s[0][0], s[0][1], s[1][0], s[1][1]);
                Ok(System::Torus(Torus::new(m, pt(p_seed), pt(q_seed), cfg.delta)?))
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            System::Sft(_) => "sft",
            System::Torus(_) => "torus",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"model": {"kind": "sft", "adjacency": [[1,1],[1,0]], "p": [0], "q": [0,1]}, "sed": 3}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))));
        let bad = r#"{"model": {"kind": "sft", "adjacency": [[1,1],[1,0]], "p": [0], "q": [0,1], "r": 1}}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))));
        let bad = r#"{"model": {"kind": "sft", "adjacency": [[1,1],[1,0]], "p": [0], "q": [0,1]}, "caps": {"windoe": 3}}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))));
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let ok = r#"{"model": {"kind": "torus", "matrix": [[2,1],[1,1]], "p_seed": [[0,1],[0,1]], "q_seed": [[1,3],[1,3]]}}"#;
        let cfg = RunConfig::from_json(ok).unwrap();
        assert_eq!(cfg.caps, Caps::default());
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn presets_round_trip() {
        for cfg in [RunConfig::golden_sft(), RunConfig::torus([[1, 1], [1, 0]]), RunConfig::cat()] {
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        }
    }
}
