//! Fixed-point Node MEM image of a suite.
//!
//! Every tree node becomes one 44-bit entry, packed most-significant-first as
//! `hpc_id:3 | threshold:16 | lnv:12 | rnv:12 | type:1`. Internal nodes hold
//! absolute child indices in `lnv`/`rnv`; leaves hold a 12-bit probability
//! code in `lnv`. Trees are laid out class-major, tree-major, pre-order, and a
//! root index table (13-bit slots: valid bit plus 12-bit root) locates them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cart::{Node, Tree};
use crate::error::{Error, Result};
use crate::train::{Forest, HyperParams, Suite};
use crate::types::{Dataset, EventCatalog, PscCatalog};

pub const NODE_MEM_CAPACITY: usize = 2250;
pub const MAX_FEATURES: usize = 8;
pub const PROBABILITY_MAX: u16 = 4095;
pub const THRESHOLD_MAX: u16 = u16::MAX;
pub const ENTRY_BITS: usize = 44;
/// Bytes per entry in the file format: 44 bits plus 4 zero pad bits.
pub const ENTRY_BYTES: usize = 6;
pub const RIT_SLOTS_PER_CLASS: usize = 5;
pub const FORMAT_VERSION: u8 = 1;
pub const MAGIC: [u8; 4] = *b"SUIT";
pub const IMAGE_FILE: &str = "model.nodemem";
pub const META_FILE: &str = "model.meta.json";

const HEADER_BYTES: usize = 4 + 1 + 2 + 2;
const LINK_MASK: u16 = 0x0FFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeMemEntry {
    pub hpc_id: u8,
    pub threshold: u16,
    pub lnv: u16,
    pub rnv: u16,
    pub leaf: bool,
}

impl NodeMemEntry {
    pub fn internal(hpc_id: u8, threshold: u16, left: u16, right: u16) -> Self {
        NodeMemEntry {
            hpc_id,
            threshold,
            lnv: left,
            rnv: right,
            leaf: false,
        }
    }

    pub fn leaf(probability_code: u16) -> Self {
        NodeMemEntry {
            hpc_id: 0,
            threshold: 0,
            lnv: probability_code,
            rnv: 0,
            leaf: true,
        }
    }

    /// The entry as the low 44 bits of a `u64`.
    pub fn pack(&self) -> u64 {
        (u64::from(self.hpc_id & 0x7) << 41)
            | (u64::from(self.threshold) << 25)
            | (u64::from(self.lnv & LINK_MASK) << 13)
            | (u64::from(self.rnv & LINK_MASK) << 1)
            | u64::from(self.leaf)
    }

    /// Inverse of [`pack`](Self::pack); any bit above bit 43 is rejected.
    pub fn unpack(bits: u64, index: usize) -> Result<Self> {
        if bits >> ENTRY_BITS != 0 {
            return Err(Error::Corruption {
                index,
                reason: format!("entry {bits:#x} does not fit in 44 bits"),
            });
        }
        Ok(NodeMemEntry {
            hpc_id: ((bits >> 41) & 0x7) as u8,
            threshold: ((bits >> 25) & 0xFFFF) as u16,
            lnv: ((bits >> 13) & 0xFFF) as u16,
            rnv: ((bits >> 1) & 0xFFF) as u16,
            leaf: bits & 1 == 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMemImage {
    entries: Vec<NodeMemEntry>,
}

impl NodeMemImage {
    /// Wraps raw entries after checking capacity and field widths. Link
    /// structure is checked by [`decode_image`] and by traversal.
    pub fn new(entries: Vec<NodeMemEntry>) -> Result<Self> {
        if entries.len() > NODE_MEM_CAPACITY {
            return Err(Error::Capacity {
                nodes: entries.len(),
                capacity: NODE_MEM_CAPACITY,
            });
        }
        for (i, e) in entries.iter().enumerate() {
            if e.hpc_id > 7 || e.lnv > LINK_MASK || e.rnv > LINK_MASK {
                return Err(Error::Corruption {
                    index: i,
                    reason: "field value exceeds its bit width".into(),
                });
            }
        }
        Ok(NodeMemImage { entries })
    }

    pub fn entries(&self) -> &[NodeMemEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<NodeMemEntry> {
        self.entries.get(index).copied().ok_or_else(|| Error::Corruption {
            index,
            reason: format!("index outside the {}-entry image", self.entries.len()),
        })
    }

    /// Size of the image with entries packed back to back.
    pub fn logical_bytes(&self) -> usize {
        logical_bytes(self.entries.len())
    }

    /// Size of the entry section in the file format.
    pub fn padded_bytes(&self) -> usize {
        self.entries.len() * ENTRY_BYTES
    }

    /// Entries as one contiguous big-endian bit string, zero-filled to a byte.
    pub fn pack_dense(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.logical_bytes()];
        let mut bit = 0usize;
        for e in &self.entries {
            let v = e.pack();
            for k in (0..ENTRY_BITS).rev() {
                if (v >> k) & 1 == 1 {
                    out[bit / 8] |= 0x80 >> (bit % 8);
                }
                bit += 1;
            }
        }
        out
    }

    pub fn unpack_dense(bytes: &[u8], count: usize) -> Result<Self> {
        if bytes.len() != logical_bytes(count) {
            return Err(Error::Corruption {
                index: 0,
                reason: format!(
                    "dense image of {count} entries needs {} bytes, got {}",
                    logical_bytes(count),
                    bytes.len()
                ),
            });
        }
        let mut entries = Vec::with_capacity(count);
        let mut bit = 0usize;
        for i in 0..count {
            let mut v = 0u64;
            for _ in 0..ENTRY_BITS {
                v = (v << 1) | u64::from((bytes[bit / 8] >> (7 - bit % 8)) & 1);
                bit += 1;
            }
            entries.push(NodeMemEntry::unpack(v, i)?);
        }
        NodeMemImage::new(entries)
    }
}

/// `ceil(nodes * 44 / 8)`
pub fn logical_bytes(nodes: usize) -> usize {
    (nodes * ENTRY_BITS).div_ceil(8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RitEntry {
    pub valid: bool,
    pub root: u16,
}

impl RitEntry {
    /// 13-bit slot value: valid bit above a 12-bit root index. Invalid slots
    /// always pack to zero.
    pub fn pack(&self) -> u16 {
        if self.valid {
            0x1000 | (self.root & LINK_MASK)
        } else {
            0
        }
    }

    pub fn unpack(bits: u16, slot: usize) -> Result<Self> {
        if bits >> 13 != 0 || (bits & 0x1000 == 0 && bits != 0) {
            return Err(Error::Corruption {
                index: slot,
                reason: format!("root index slot {slot} holds malformed value {bits:#06x}"),
            });
        }
        Ok(RitEntry {
            valid: bits & 0x1000 != 0,
            root: bits & LINK_MASK,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootIndexTable {
    pub slots_per_class: usize,
    pub entries: Vec<RitEntry>,
}

impl RootIndexTable {
    pub fn n_classes(&self) -> usize {
        self.entries.len().checked_div(self.slots_per_class).unwrap_or(0)
    }

    pub fn class_slots(&self, class: usize) -> &[RitEntry] {
        &self.entries[class * self.slots_per_class..(class + 1) * self.slots_per_class]
    }

    pub fn valid_count(&self) -> usize {
        self.entries.iter().filter(|e| e.valid).count()
    }
}

/// Sidecar describing how E-PTI values map onto the 16-bit codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantMeta {
    pub format_version: u8,
    pub features: EventCatalog,
    /// E-PTI units per threshold code unit, one per feature.
    pub scales: Vec<f64>,
    pub probability_denominator: u16,
    pub pscs: PscCatalog,
    pub hyperparams: HyperParams,
    pub seed: u64,
}

impl QuantMeta {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        if self.probability_denominator != PROBABILITY_MAX {
            return Err(Error::Data(format!(
                "probability denominator must be {PROBABILITY_MAX}, found {}",
                self.probability_denominator
            )));
        }
        if self.scales.len() != self.features.len() {
            return Err(Error::Data(format!(
                "{} scales for {} features",
                self.scales.len(),
                self.features.len()
            )));
        }
        if let Some(s) = self.scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Data(format!("feature scale {s} is not positive")));
        }
        Ok(())
    }

    /// Per-feature 16-bit codes for an E-PTI vector.
    pub fn quantize_epti(&self, epti: &[f64]) -> Vec<u16> {
        epti.iter()
            .zip(&self.scales)
            .map(|(&v, &s)| quantize_threshold(v, s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledModel {
    pub image: NodeMemImage,
    pub rit: RootIndexTable,
    pub meta: QuantMeta,
}

/// `round(value / scale)`, saturating at 65535.
pub fn quantize_threshold(value: f64, scale: f64) -> u16 {
    let q = (value / scale).round();
    if q >= f64::from(THRESHOLD_MAX) {
        THRESHOLD_MAX
    } else if q > 0.0 {
        q as u16
    } else {
        0
    }
}

/// `round(p * 4095)`
pub fn encode_probability(p: f64) -> u16 {
    (p.clamp(0.0, 1.0) * f64::from(PROBABILITY_MAX)).round() as u16
}

pub fn decode_probability(code: u16) -> f64 {
    f64::from(code) / f64::from(PROBABILITY_MAX)
}

/// `max / 65535` per feature; a feature never seen above zero gets the scale
/// of a unit maximum.
pub fn scales_from_max(max: &[f64]) -> Vec<f64> {
    max.iter()
        .map(|&m| if m > 0.0 { m / f64::from(THRESHOLD_MAX) } else { 1.0 / f64::from(THRESHOLD_MAX) })
        .collect()
}

/// Compiles `suite` with scales taken from the training windows.
pub fn compile_suite(suite: &Suite, train: &Dataset) -> Result<CompiledModel> {
    if train.events.names() != suite.features.names() {
        return Err(Error::InvalidInput(
            "training dataset features differ from the suite's feature catalog".into(),
        ));
    }
    compile_with_scales(suite, scales_from_max(&train.feature_max()))
}

pub fn compile_with_scales(suite: &Suite, scales: Vec<f64>) -> Result<CompiledModel> {
    let nodes = suite.node_count();
    if nodes > NODE_MEM_CAPACITY {
        return Err(Error::Capacity {
            nodes,
            capacity: NODE_MEM_CAPACITY,
        });
    }
    if suite.features.len() > MAX_FEATURES {
        return Err(Error::Width {
            features: suite.features.len(),
            max: MAX_FEATURES,
        });
    }
    if suite.forests.len() != suite.pscs.len() {
        return Err(Error::InvalidInput(format!(
            "suite has {} forests for {} PSCs",
            suite.forests.len(),
            suite.pscs.len()
        )));
    }
    let meta = QuantMeta {
        format_version: FORMAT_VERSION,
        features: suite.features.clone(),
        scales,
        probability_denominator: PROBABILITY_MAX,
        pscs: suite.pscs.clone(),
        hyperparams: suite.hyperparams,
        seed: suite.seed,
    };
    meta.validate()?;

    let slots_per_class = RIT_SLOTS_PER_CLASS.max(suite.hyperparams.n_estimators);
    let mut entries = Vec::with_capacity(nodes);
    let mut rit = vec![RitEntry::default(); slots_per_class * suite.forests.len()];
    for (c, forest) in suite.forests.iter().enumerate() {
        if forest.trees.len() > slots_per_class {
            return Err(Error::InvalidInput(format!(
                "forest {c} has {} trees but only {slots_per_class} root slots",
                forest.trees.len()
            )));
        }
        for (t, tree) in forest.trees.iter().enumerate() {
            let base = entries.len();
            rit[c * slots_per_class + t] = RitEntry {
                valid: true,
                root: base as u16,
            };
            for node in tree.nodes() {
                entries.push(match *node {
                    Node::Leaf { probability } => NodeMemEntry::leaf(encode_probability(probability)),
                    Node::Split { feature, threshold, left, right } => {
                        if feature >= suite.features.len() {
                            return Err(Error::InvalidInput(format!(
                                "split on feature {feature} outside the catalog"
                            )));
                        }
                        NodeMemEntry::internal(
                            feature as u8,
                            quantize_threshold(threshold.max(0.0), meta.scales[feature]),
                            (base + left) as u16,
                            (base + right) as u16,
                        )
                    }
                });
            }
        }
    }
    Ok(CompiledModel {
        image: NodeMemImage::new(entries)?,
        rit: RootIndexTable {
            slots_per_class,
            entries: rit,
        },
        meta,
    })
}

/// Rebuilds the suite the image encodes, with thresholds `code * scale` and
/// probabilities `code / 4095`.
pub fn decode_image(image: &NodeMemImage, rit: &RootIndexTable, meta: &QuantMeta) -> Result<Suite> {
    meta.validate()?;
    if rit.slots_per_class == 0 || rit.entries.len() != rit.slots_per_class * meta.pscs.len() {
        return Err(Error::Corruption {
            index: 0,
            reason: format!(
                "root index table has {} slots for {} classes",
                rit.entries.len(),
                meta.pscs.len()
            ),
        });
    }
    let n = image.len();
    let mut seen = vec![false; n];
    let mut forests = Vec::with_capacity(meta.pscs.len());
    for class in 0..meta.pscs.len() {
        let mut trees = Vec::new();
        for slot in rit.class_slots(class).iter().filter(|s| s.valid) {
            trees.push(decode_tree(image, usize::from(slot.root), meta, &mut seen)?);
        }
        forests.push(Forest {
            class_index: class,
            trees,
        });
    }
    Ok(Suite {
        pscs: meta.pscs.clone(),
        features: meta.features.clone(),
        hyperparams: meta.hyperparams,
        seed: meta.seed,
        forests,
    })
}

fn decode_tree(
    image: &NodeMemImage,
    root: usize,
    meta: &QuantMeta,
    seen: &mut [bool],
) -> Result<Tree> {
    let corrupt = |index: usize, reason: String| Error::Corruption { index, reason };
    let mut nodes: Vec<Node> = Vec::new();
    // (absolute index, local index of the parent slot to patch, is_left)
    let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(root, None)];
    while let Some((abs, parent)) = stack.pop() {
        let entry = image.get(abs)?;
        if seen[abs] {
            return Err(corrupt(abs, "node is reachable more than once".into()));
        }
        seen[abs] = true;
        let local = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                *(if is_left { left } else { right }) = local;
            }
        }
        if entry.leaf {
            if entry.rnv != 0 || entry.hpc_id != 0 || entry.threshold != 0 {
                return Err(corrupt(abs, "leaf has nonzero fields besides its probability".into()));
            }
            nodes.push(Node::Leaf {
                probability: decode_probability(entry.lnv),
            });
        } else {
            let feature = usize::from(entry.hpc_id);
            if feature >= meta.features.len() {
                return Err(corrupt(abs, format!("HPC ID {feature} has no feature")));
            }
            let (l, r) = (usize::from(entry.lnv), usize::from(entry.rnv));
            for link in [l, r] {
                if link <= abs {
                    return Err(corrupt(abs, format!("link to {link} does not point forward")));
                }
                if link >= image.len() {
                    return Err(corrupt(abs, format!("link to {link} is outside the image")));
                }
            }
            nodes.push(Node::Split {
                feature,
                threshold: f64::from(entry.threshold) * meta.scales[feature],
                left: 0,
                right: 0,
            });
            stack.push((r, Some((local, false))));
            stack.push((l, Some((local, true))));
        }
    }
    Tree::from_nodes(nodes).map_err(|e| corrupt(root, e.to_string()))
}

/// File form of the image and root table, see [`MAGIC`].
pub fn to_bytes(image: &NodeMemImage, rit: &RootIndexTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + 2 * rit.entries.len() + image.padded_bytes());
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(image.len() as u16).to_be_bytes());
    out.extend_from_slice(&(rit.entries.len() as u16).to_be_bytes());
    for e in &rit.entries {
        out.extend_from_slice(&e.pack().to_be_bytes());
    }
    for e in image.entries() {
        out.extend_from_slice(&(e.pack() << 4).to_be_bytes()[2..]);
    }
    out
}

pub fn from_bytes(bytes: &[u8], slots_per_class: usize) -> Result<(NodeMemImage, RootIndexTable)> {
    let bad = |reason: String| Error::Corruption { index: 0, reason };
    if bytes.len() < HEADER_BYTES || bytes[..4] != MAGIC {
        return Err(bad("missing SUIT header".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(bad(format!("unsupported image version {}", bytes[4])));
    }
    let nodes = usize::from(u16::from_be_bytes([bytes[5], bytes[6]]));
    let slots = usize::from(u16::from_be_bytes([bytes[7], bytes[8]]));
    let expected = HEADER_BYTES + 2 * slots + ENTRY_BYTES * nodes;
    if bytes.len() != expected {
        return Err(bad(format!("image should be {expected} bytes, found {}", bytes.len())));
    }
    let mut at = HEADER_BYTES;
    let mut rit = Vec::with_capacity(slots);
    for s in 0..slots {
        rit.push(RitEntry::unpack(u16::from_be_bytes([bytes[at], bytes[at + 1]]), s)?);
        at += 2;
    }
    let mut entries = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let mut word = [0u8; 8];
        word[2..].copy_from_slice(&bytes[at..at + ENTRY_BYTES]);
        let raw = u64::from_be_bytes(word);
        if raw & 0xF != 0 {
            return Err(Error::Corruption {
                index: i,
                reason: "pad bits are not zero".into(),
            });
        }
        entries.push(NodeMemEntry::unpack(raw >> 4, i)?);
        at += ENTRY_BYTES;
    }
    Ok((
        NodeMemImage::new(entries)?,
        RootIndexTable {
            slots_per_class,
            entries: rit,
        },
    ))
}

/// Writes `model.nodemem` and `model.meta.json` into `dir`.
pub fn write_bundle(dir: &Path, model: &CompiledModel) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let image_path = dir.join(IMAGE_FILE);
    fs::write(&image_path, to_bytes(&model.image, &model.rit)).map_err(|e| Error::io(&image_path, e))?;
    let meta_path = dir.join(META_FILE);
    let mut json = serde_json::to_string_pretty(&model.meta)?;
    json.push('\n');
    fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

/// Reads a bundle and checks that it decodes.
pub fn read_bundle(dir: &Path) -> Result<CompiledModel> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: QuantMeta = serde_json::from_str(&text)?;
    meta.validate()?;
    let image_path = dir.join(IMAGE_FILE);
    let bytes = fs::read(&image_path).map_err(|e| Error::io(&image_path, e))?;
    let slots = bytes
        .get(7..9)
        .map_or(0, |b| usize::from(u16::from_be_bytes([b[0], b[1]])));
    if meta.pscs.is_empty() || slots % meta.pscs.len() != 0 {
        return Err(Error::Corruption {
            index: 0,
            reason: format!("{slots} root slots cannot be shared by {} classes", meta.pscs.len()),
        });
    }
    let (image, rit) = from_bytes(&bytes, slots / meta.pscs.len())?;
    decode_image(&image, &rit, &meta)?;
    Ok(CompiledModel { image, rit, meta })
}
