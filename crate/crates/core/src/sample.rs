//! Aperiodic samples: one homoclinic point per cover element, with pairwise
//! disjoint orbits.
//!
//! Cells up to `eager_level` are filled in lexicographic `(n, word)` order by
//! the first enumerated homoclinic point inside the cell whose orbit is still
//! unused. Finer cells are filled on request from coded candidates
//! `Q^∞ · bridge · word · bridge · P^∞`, taking the first one with a fresh
//! orbit. Requests are memoized, so the sample is a deterministic function of
//! the configuration and the order of requests.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{Cell, CoveredSystem};
use crate::points::coded_homoclinic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// Index in the homoclinic enumeration.
    Enumerated(usize),
    /// Bridge choices of the coded candidate.
    Coded(usize, usize),
}

#[derive(Clone, Debug)]
pub struct Choice<P> {
    pub point: P,
    pub provenance: Provenance,
    pub orbit_key: P,
}

#[derive(Debug)]
struct State<P> {
    chosen: BTreeMap<Cell, Choice<P>>,
    orbits: BTreeMap<P, Cell>,
}

#[derive(Debug)]
pub struct AperiodicSample<S: CoveredSystem> {
    eager_level: u32,
    cap: usize,
    state: Mutex<State<S::Point>>,
}

/// Bridge choices tried for a coded candidate, in order.
const CODED_PICKS: usize = 12;

fn picks() -> impl Iterator<Item = (usize, usize)> {
    (0..2 * CODED_PICKS).flat_map(|s| (0..=s).map(move |i| (i, s - i))).filter(|&(i, j)| i < CODED_PICKS && j < CODED_PICKS)
}

impl<S: CoveredSystem> AperiodicSample<S> {
    /// Fills every cell of levels `0..=eager_level` from the homoclinic
    /// enumeration with complexity cap `cap`.
    pub fn build(sys: &S, eager_level: u32, cap: usize) -> Result<Self> {
        let pts = sys.enumerate_homoclinic(cap);
        if pts.is_empty() {
            return Err(Error::CellExhausted(Cell::whole_space().label()));
        }
        let keys: Vec<Option<S::Point>> = pts.iter().map(|x| sys.orbit_normal_form(x).map(|(k, _)| k)).collect();
        let mut state = State { chosen: BTreeMap::new(), orbits: BTreeMap::new() };
        for level in 0..=eager_level {
            let mut candidates: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
            for (i, x) in pts.iter().enumerate() {
                for h in sys.cells_at(x, level) {
                    candidates.entry(h.cell).or_default().push(i);
                }
            }
            for cell in sys.coding().cells(level) {
                let found = candidates.get(&cell).and_then(|list| {
                    list.iter().copied().find(|&i| keys[i].as_ref().is_some_and(|k| !state.orbits.contains_key(k)))
                });
                let Some(i) = found else {
                    return Err(Error::CellExhausted(cell.label()));
                };
                let key = keys[i].clone().unwrap();
                state.orbits.insert(key.clone(), cell.clone());
                state.chosen.insert(cell, Choice { point: pts[i].clone(), provenance: Provenance::Enumerated(i), orbit_key: key });
            }
        }
        Ok(AperiodicSample { eager_level, cap, state: Mutex::new(state) })
    }

    pub fn eager_level(&self) -> u32 {
        self.eager_level
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `g_{n,k}` for a cell, choosing it on first request beyond the eager
    /// levels.
    pub fn get(&self, sys: &S, cell: &Cell) -> Result<S::Point> {
        let mut st = self.state.lock().unwrap();
        if let Some(c) = st.chosen.get(cell) {
            return Ok(c.point.clone());
        }
        if cell.level <= self.eager_level || !sys.coding().word_is_admissible(&cell.word) {
            return Err(Error::InvalidArgument(format!("{} is not a cell", cell.label())));
        }
        for pick in picks() {
            let Some(x) = coded_homoclinic(sys, &cell.word, pick) else {
                continue;
            };
            let Some((key, _)) = sys.orbit_normal_form(&x) else {
                continue;
            };
            if st.orbits.contains_key(&key) {
                continue;
            }
            st.orbits.insert(key.clone(), cell.clone());
            st.chosen.insert(cell.clone(), Choice { point: x.clone(), provenance: Provenance::Coded(pick.0, pick.1), orbit_key: key });
            return Ok(x);
        }
        Err(Error::CellExhausted(cell.label()))
    }

    /// Fills every cell of the levels above the eager ones up to
    /// `max_level`, in lexicographic order.
    pub fn fill_to(&self, sys: &S, max_level: u32) -> Result<()> {
        for level in self.eager_level + 1..=max_level {
            for cell in sys.coding().cells(level) {
                self.get(sys, &cell)?;
            }
        }
        Ok(())
    }

    /// Resolves a batch of cells in sorted order.
    pub fn prepare<'c>(&self, sys: &S, cells: impl IntoIterator<Item = &'c Cell>) -> Result<()> {
        let set: BTreeSet<&Cell> = cells.into_iter().collect();
        for c in set {
            self.get(sys, c)?;
        }
        Ok(())
    }

    /// All chosen cells and points, sorted by cell.
    pub fn entries(&self) -> Vec<(Cell, Choice<S::Point>)> {
        self.state.lock().unwrap().chosen.iter().map(|(c, x)| (c.clone(), x.clone())).collect()
    }

    /// Checks every invariant of the chosen points exactly.
    pub fn certify(&self, sys: &S) -> Certificate {
        let entries = self.entries();
        let mut cert = Certificate { points: entries.len(), ..Default::default() };
        let distinct: BTreeSet<&S::Point> = entries.iter().map(|(_, c)| &c.point).collect();
        cert.injective = distinct.len() == entries.len();
        let mut keys = BTreeSet::new();
        cert.orbit_disjoint = true;
        cert.in_cells = true;
        cert.aperiodic = true;
        for (cell, c) in &entries {
            match sys.orbit_normal_form(&c.point) {
                Some((k, _)) => {
                    if k != c.orbit_key || !keys.insert(k) {
                        cert.orbit_disjoint = false;
                    }
                }
                None => cert.aperiodic = false,
            }
            if !sys.is_homoclinic(&c.point) {
                cert.aperiodic = false;
            }
            if !sys.cells_at(&c.point, cell.level).iter().any(|h| &h.cell == cell) {
                cert.in_cells = false;
            }
        }
        cert
    }

    /// Cell label → point, in cell order.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .entries()
            .into_iter()
            .map(|(cell, c)| {
                let v = serde_json::json!({
                    "point": format!("{:?}", c.point),
                    "provenance": c.provenance,
                });
                (cell.label(), v)
            })
            .collect();
        serde_json::Value::Object(map)
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Certificate {
    pub points: usize,
    pub injective: bool,
    pub orbit_disjoint: bool,
    pub in_cells: bool,
    pub aperiodic: bool,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.injective && self.orbit_disjoint && self.in_cells && self.aperiodic
    }
}
