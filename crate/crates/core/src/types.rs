//! Domain types shared by every pipeline stage.
//!
//! A [`Dataset`] is a list of instruction windows. Each window carries the
//! E-PTI (events per thousand instructions) of the catalog events and the IPC
//! measured under every prefetcher system configuration ([`Psc`]) in the
//! catalog. Class index `c` everywhere in this crate means position `c` of the
//! [`PscCatalog`].

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Instructions per window unless a dataset says otherwise.
pub const DEFAULT_WINDOW_INSTRUCTIONS: u64 = 1_000_000;

/// Memory levels a prefetcher can be attached to, outermost last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemoryLevel {
    L1I,
    L1D,
    L2,
    Llc,
}

impl MemoryLevel {
    pub const ALL: [MemoryLevel; 4] = [
        MemoryLevel::L1I,
        MemoryLevel::L1D,
        MemoryLevel::L2,
        MemoryLevel::Llc,
    ];

    /// Prefetchers available at this level; `no` disables prefetching.
    pub fn menu(self) -> &'static [&'static str] {
        match self {
            MemoryLevel::L1I => &["nl", "no"],
            MemoryLevel::L1D => &["bingo", "ipcp", "mlop", "nl", "no"],
            MemoryLevel::L2 => &["ip_stride", "ipcp", "kpcp", "spp", "nl", "no"],
            MemoryLevel::Llc => &["nl", "no"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MemoryLevel::L1I => "L1I$",
            MemoryLevel::L1D => "L1D$",
            MemoryLevel::L2 => "L2$",
            MemoryLevel::Llc => "LL$",
        }
    }
}

/// A prefetcher system configuration: one prefetcher (or `no`) per memory
/// level. Its id is the four names joined by `-`, e.g. `nl-mlop-kpcp-nl`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Psc {
    levels: [String; 4],
}

impl Psc {
    pub fn new(levels: [&str; 4]) -> Result<Self> {
        for (level, name) in MemoryLevel::ALL.iter().zip(levels.iter()) {
            if !level.menu().contains(name) {
                return Err(Error::InvalidInput(format!(
                    "prefetcher `{name}` is not available at {}",
                    level.name()
                )));
            }
        }
        Ok(Psc {
            levels: levels.map(str::to_owned),
        })
    }

    pub fn levels(&self) -> &[String; 4] {
        &self.levels
    }

    pub fn id(&self) -> String {
        self.levels.join("-")
    }

    /// Every configuration of the per-level menus, in menu order
    /// (L1I major, LL$ minor).
    pub fn full_space() -> Vec<Psc> {
        let [l1i, l1d, l2, llc] = MemoryLevel::ALL.map(MemoryLevel::menu);
        let mut out = Vec::with_capacity(l1i.len() * l1d.len() * l2.len() * llc.len());
        for a in l1i {
            for b in l1d {
                for c in l2 {
                    for d in llc {
                        out.push(Psc::new([a, b, c, d]).expect("menu entries are valid"));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Psc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Psc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        let levels: [&str; 4] = parts.try_into().map_err(|p: Vec<&str>| {
            Error::InvalidInput(format!(
                "PSC id `{s}` has {} levels, expected 4",
                p.len()
            ))
        })?;
        Psc::new(levels)
    }
}

impl Serialize for Psc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl<'de> Deserialize<'de> for Psc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered set of candidate configurations; class index = position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Psc>", into = "Vec<Psc>")]
pub struct PscCatalog {
    entries: Vec<Psc>,
}

impl PscCatalog {
    pub fn new(entries: Vec<Psc>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &entries {
            if !seen.insert(p.id()) {
                return Err(Error::InvalidInput(format!("duplicate PSC `{p}` in catalog")));
            }
        }
        Ok(PscCatalog { entries })
    }

    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let entries = ids
            .iter()
            .map(|s| s.as_ref().parse())
            .collect::<Result<Vec<Psc>>>()?;
        Self::new(entries)
    }

    /// The ten configurations shipped with the reference model.
    pub fn reference() -> Self {
        Self::from_ids(&REFERENCE_PSCS).expect("reference catalog is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Psc] {
        &self.entries
    }

    pub fn get(&self, class: usize) -> Option<&Psc> {
        self.entries.get(class)
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(Psc::id).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.id() == id)
    }
}

impl TryFrom<Vec<Psc>> for PscCatalog {
    type Error = Error;

    fn try_from(v: Vec<Psc>) -> Result<Self> {
        PscCatalog::new(v)
    }
}

impl From<PscCatalog> for Vec<Psc> {
    fn from(c: PscCatalog) -> Self {
        c.entries
    }
}

/// Class order of [`PscCatalog::reference`].
pub const REFERENCE_PSCS: [&str; 10] = [
    "nl-mlop-kpcp-nl",
    "nl-bingo-spp-nl",
    "nl-bingo-kpcp-nl",
    "no-mlop-kpcp-nl",
    "nl-mlop-spp-nl",
    "no-bingo-kpcp-nl",
    "no-bingo-spp-nl",
    "no-bingo-kpcp-no",
    "nl-bingo-ipcp-no",
    "no-bingo-ipcp-no",
];

/// The six hardware-invariant events used by the reference model.
pub const REFERENCE_EVENTS: [&str; 6] = [
    "RQ_ROW_BUFFER_HIT",
    "LL$_LOAD_HIT",
    "BRANCH_DIRECT_JUMP",
    "L1I$_LOAD_MISS",
    "L2$_PAGES_PREFETCHED",
    "BRANCH_CONDITIONAL",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventId {
    pub index: usize,
    pub name: String,
}

/// Named hardware events; an event's index is its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct EventCatalog {
    names: Vec<String>,
}

impl EventCatalog {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate event `{n}` in catalog")));
            }
        }
        Ok(EventCatalog { names })
    }

    pub fn reference() -> Self {
        Self::new(REFERENCE_EVENTS.iter().map(|s| s.to_string()).collect())
            .expect("reference events are unique")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, index: usize) -> Option<EventId> {
        self.names.get(index).map(|name| EventId {
            index,
            name: name.clone(),
        })
    }

    pub fn ids(&self) -> Vec<EventId> {
        (0..self.len()).filter_map(|i| self.id(i)).collect()
    }

    pub fn lookup(&self, name: &str) -> Option<EventId> {
        self.names.iter().position(|n| n == name).and_then(|i| self.id(i))
    }
}

impl TryFrom<Vec<String>> for EventCatalog {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        EventCatalog::new(v)
    }
}

impl From<EventCatalog> for Vec<String> {
    fn from(c: EventCatalog) -> Self {
        c.names
    }
}

/// Events per thousand instructions, one value per catalog event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EptiVector(Vec<f64>);

impl EptiVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "E-PTI value {v} at position {i} is not a finite non-negative number"
            )));
        }
        Ok(EptiVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Keeps only `features`, in that order.
    pub fn project(&self, features: &[usize]) -> EptiVector {
        EptiVector(features.iter().map(|&f| self.0[f]).collect())
    }
}

impl TryFrom<Vec<f64>> for EptiVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        EptiVector::new(v)
    }
}

impl From<EptiVector> for Vec<f64> {
    fn from(v: EptiVector) -> Self {
        v.0
    }
}

/// Converts raw event counts of one window to E-PTI.
pub fn compute_epti(event_counts: &[u64], instruction_count: u64) -> Result<EptiVector> {
    if instruction_count < 1000 {
        return Err(Error::InvalidWindow(format!(
            "window of {instruction_count} instructions is shorter than one thousand"
        )));
    }
    let thousands = instruction_count as f64 / 1000.0;
    Ok(EptiVector(
        event_counts.iter().map(|&c| c as f64 / thousands).collect(),
    ))
}

/// Number of distinct configuration histories an offline dataset would need
/// to enumerate: `n_app * n_psc^n_windows`.
pub fn scenario_count(n_app: u64, n_psc: u64, n_windows: u32) -> Result<BigUint> {
    if n_app == 0 || n_psc == 0 || n_windows == 0 {
        return Err(Error::InvalidInput(
            "scenario_count arguments must all be at least 1".into(),
        ));
    }
    Ok(BigUint::from(n_app) * BigUint::from(n_psc).pow(n_windows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub trace_id: String,
    pub window_index: u64,
    pub epti: EptiVector,
    /// IPC per class, aligned with the dataset's [`PscCatalog`].
    pub ipc: Vec<f64>,
}

impl WindowRecord {
    pub fn best_ipc(&self) -> f64 {
        self.ipc.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest class index achieving the best IPC.
    pub fn best_class(&self) -> usize {
        let best = self.best_ipc();
        self.ipc.iter().position(|&v| v == best).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub events: EventCatalog,
    pub pscs: PscCatalog,
    pub windows: Vec<WindowRecord>,
    pub window_size_instructions: u64,
}

impl Dataset {
    pub fn new(
        events: EventCatalog,
        pscs: PscCatalog,
        windows: Vec<WindowRecord>,
        window_size_instructions: u64,
    ) -> Result<Self> {
        let ds = Dataset {
            events,
            pscs,
            windows,
            window_size_instructions,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for w in &self.windows {
            if w.epti.len() != self.events.len() {
                return Err(Error::Data(format!(
                    "window {}#{} has {} E-PTI values for {} events",
                    w.trace_id,
                    w.window_index,
                    w.epti.len(),
                    self.events.len()
                )));
            }
            if w.ipc.len() != self.pscs.len() {
                return Err(Error::Data(format!(
                    "window {}#{} has {} IPC values for {} PSCs",
                    w.trace_id,
                    w.window_index,
                    w.ipc.len(),
                    self.pscs.len()
                )));
            }
            if let Some(v) = w.ipc.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::Data(format!(
                    "window {}#{} has non-positive IPC {v}",
                    w.trace_id, w.window_index
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Same catalogs, windows taken at `indices` in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            events: self.events.clone(),
            pscs: self.pscs.clone(),
            windows: indices.iter().map(|&i| self.windows[i].clone()).collect(),
            window_size_instructions: self.window_size_instructions,
        }
    }

    /// Restricts the event catalog (and every window's E-PTI) to `features`.
    pub fn project(&self, features: &[EventId]) -> Result<Dataset> {
        let mut idx = Vec::with_capacity(features.len());
        for f in features {
            match self.events.lookup(&f.name) {
                Some(e) => idx.push(e.index),
                None => {
                    return Err(Error::InvalidInput(format!(
                        "event `{}` is not in the dataset catalog",
                        f.name
                    )))
                }
            }
        }
        let names = idx.iter().map(|&i| self.events.names()[i].clone()).collect();
        Ok(Dataset {
            events: EventCatalog::new(names)?,
            pscs: self.pscs.clone(),
            windows: self
                .windows
                .iter()
                .map(|w| WindowRecord {
                    trace_id: w.trace_id.clone(),
                    window_index: w.window_index,
                    epti: w.epti.project(&idx),
                    ipc: w.ipc.clone(),
                })
                .collect(),
            window_size_instructions: self.window_size_instructions,
        })
    }

    /// Keeps only the IPC columns of `pscs`, in that catalog's order.
    pub fn select_pscs(&self, pscs: &PscCatalog) -> Result<Dataset> {
        let idx = pscs
            .ids()
            .iter()
            .map(|id| {
                self.pscs
                    .index_of(id)
                    .ok_or_else(|| Error::Data(format!("PSC `{id}` has no IPC column in the dataset")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            events: self.events.clone(),
            pscs: pscs.clone(),
            windows: self
                .windows
                .iter()
                .map(|w| WindowRecord {
                    ipc: idx.iter().map(|&i| w.ipc[i]).collect(),
                    ..w.clone()
                })
                .collect(),
            window_size_instructions: self.window_size_instructions,
        })
    }

    /// Maximal runs of consecutive windows sharing a trace id.
    pub fn trace_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.windows.len() {
            if i == self.windows.len() || self.windows[i].trace_id != self.windows[start].trace_id
            {
                if start < i {
                    out.push(start..i);
                }
                start = i;
            }
        }
        out
    }

    /// Largest observed E-PTI per event (0 for an empty dataset).
    pub fn feature_max(&self) -> Vec<f64> {
        let mut max = vec![0.0_f64; self.events.len()];
        for w in &self.windows {
            for (m, &v) in max.iter_mut().zip(w.epti.values()) {
                *m = m.max(v);
            }
        }
        max
    }
}
