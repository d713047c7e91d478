//! Binary tensor container and JSON grouping configuration.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"FRNT" | u32 version = 1 | u64 manifest length | manifest (UTF-8 JSON) | payload
//! ```
//!
//! The manifest is `{"tensors":[{name,dtype,shape,offset,nbytes},...],"meta":{...}}`
//! with tensors sorted by name and `meta` omitted when absent. Offsets are
//! relative to the start of the payload; payloads are row-major IEEE-754 values
//! concatenated in manifest order with no padding.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dct::Spectrum;
use crate::error::{Error, Result};
use crate::learngene::{
    build_mask, FrequencyRatio, GeneBlock, Learngene, WeightGroupSpec, FORMAT_VERSION,
};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"FRNT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub const GENE_PREFIX: &str = "gene/";
pub const PASSTHROUGH_PREFIX: &str = "passthrough/";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub dtype: DType,
    pub tensor: Tensor,
}

/// Named tensors plus an optional JSON metadata record.
///
/// `f32` entries hold their values already rounded to `f32` (nearest-even),
/// so what is in memory is exactly what gets written.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    entries: BTreeMap<String, Entry>,
    meta: Option<Value>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    dtype: DType,
    shape: Vec<usize>,
    offset: u64,
    nbytes: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    tensors: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Value>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, dtype: DType, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        let tensor = match dtype {
            DType::F64 => tensor,
            DType::F32 => {
                if let Some(i) = tensor.data().iter().position(|v| (*v as f32).is_infinite()) {
                    return Err(Error::InvalidArgument(format!(
                        "`{name}` element {i} overflows f32"
                    )));
                }
                tensor.map(|v| v as f32 as f64)?
            }
        };
        self.entries.insert(name, Entry { dtype, tensor });
        Ok(())
    }

    pub fn insert_f64(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        self.insert(name, DType::F64, tensor)
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|e| &e.tensor)
    }

    pub fn entries(&self) -> &BTreeMap<String, Entry> {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn meta(&self) -> Option<&Value> {
        self.meta.as_ref()
    }

    pub fn set_meta(&mut self, meta: Option<Value>) {
        self.meta = meta;
    }

    pub fn tensors(&self) -> BTreeMap<String, Tensor> {
        self.entries
            .iter()
            .map(|(k, e)| (k.clone(), e.tensor.clone()))
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0u64;
        let tensors = self
            .entries
            .iter()
            .map(|(name, e)| {
                let nbytes = (e.tensor.len() * e.dtype.size()) as u64;
                let entry = ManifestEntry {
                    name: name.clone(),
                    dtype: e.dtype,
                    shape: e.tensor.shape().to_vec(),
                    offset,
                    nbytes,
                };
                offset += nbytes;
                entry
            })
            .collect();
        let manifest = serde_json::to_vec(&Manifest {
            tensors,
            meta: self.meta.clone(),
        })
        .map_err(|e| Error::CorruptManifest(e.to_string()))?;

        let mut out = Vec::with_capacity(HEADER_LEN + manifest.len() + offset as usize);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        for e in self.entries.values() {
            match e.dtype {
                DType::F64 => {
                    for v in e.tensor.data() {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
                DType::F32 => {
                    for v in e.tensor.data() {
                        out.extend_from_slice(&(*v as f32).to_le_bytes());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::CorruptManifest("file shorter than header".into()));
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::CorruptManifest("file shorter than header".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let available = (bytes.len() - HEADER_LEN) as u64;
        if manifest_len > available {
            return Err(Error::CorruptManifest(format!(
                "manifest length {manifest_len} exceeds remaining {available} bytes"
            )));
        }
        let manifest_end = HEADER_LEN + manifest_len as usize;
        let manifest: Manifest = serde_json::from_slice(&bytes[HEADER_LEN..manifest_end])
            .map_err(|e| Error::CorruptManifest(e.to_string()))?;
        let payload = &bytes[manifest_end..];

        let mut container = Container {
            entries: BTreeMap::new(),
            meta: manifest.meta,
        };
        let mut expected_offset = 0u64;
        let mut previous: Option<&str> = None;
        for m in &manifest.tensors {
            if previous.is_some_and(|p| p >= m.name.as_str()) {
                return Err(Error::CorruptManifest(format!(
                    "tensor names not strictly sorted at `{}`",
                    m.name
                )));
            }
            previous = Some(&m.name);
            let count: usize = m.shape.iter().product();
            if m.nbytes != (count * m.dtype.size()) as u64 {
                return Err(Error::CorruptManifest(format!(
                    "`{}` declares {} bytes for {count} elements",
                    m.name, m.nbytes
                )));
            }
            if m.offset != expected_offset {
                return Err(Error::CorruptManifest(format!(
                    "`{}` starts at {} but previous payload ends at {expected_offset}",
                    m.name, m.offset
                )));
            }
            let end = m.offset.checked_add(m.nbytes);
            let body = match end {
                Some(end) if end <= payload.len() as u64 => &payload[m.offset as usize..end as usize],
                _ => return Err(Error::TruncatedPayload(m.name.clone())),
            };
            expected_offset += m.nbytes;
            let data: Vec<f64> = match m.dtype {
                DType::F64 => body
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
                DType::F32 => body
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect(),
            };
            let tensor = Tensor::new(m.shape.clone(), data)?;
            container.entries.insert(
                m.name.clone(),
                Entry {
                    dtype: m.dtype,
                    tensor,
                },
            );
        }
        if expected_offset != payload.len() as u64 {
            return Err(Error::CorruptManifest(format!(
                "{} trailing payload bytes",
                payload.len() as u64 - expected_offset
            )));
        }
        Ok(container)
    }
}

pub fn write_container(path: impl AsRef<Path>, container: &Container) -> Result<()> {
    fs::write(path, container.to_bytes()?)?;
    Ok(())
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Container> {
    Container::from_bytes(&fs::read(path)?)
}

/// How tensors outside every weight group are carried through.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassthroughPolicy {
    #[default]
    Omit,
    CopyIfShapeMatches,
    ZeroFill,
}

/// One weight group in a [`GroupingConfig`].
///
/// Either `layer_pattern` (containing `{L}`) with `layer_count`, or an explicit
/// `members` list. Pattern groups and multi-member lists stack along a layer
/// axis unless `stack` says otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<bool>,
    /// Per-group frequency ratio overriding the global one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl GroupDef {
    pub fn stacks(&self) -> bool {
        self.stack.unwrap_or_else(|| {
            self.layer_pattern.is_some() || self.members.as_ref().is_some_and(|m| m.len() > 1)
        })
    }

    /// Expanded member names; `layers` replaces `layer_count` for pattern groups.
    pub fn member_names(&self, layers: Option<usize>) -> Result<Vec<String>> {
        match (&self.layer_pattern, &self.members) {
            (Some(pattern), None) => {
                let count = layers.or(self.layer_count).ok_or_else(|| {
                    Error::Config(format!("group `{}` needs layer_count", self.name))
                })?;
                if count == 0 {
                    return Err(Error::Config(format!("group `{}` has zero layers", self.name)));
                }
                Ok((0..count).map(|l| pattern.replace("{L}", &l.to_string())).collect())
            }
            (None, Some(members)) => Ok(members.clone()),
            _ => Err(Error::Config(format!(
                "group `{}` needs exactly one of layer_pattern or members",
                self.name
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingConfig {
    pub groups: Vec<GroupDef>,
    #[serde(default)]
    pub passthrough_policy: PassthroughPolicy,
}

impl GroupingConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for g in &self.groups {
            if !names.insert(g.name.as_str()) {
                return Err(Error::Config(format!("duplicate group `{}`", g.name)));
            }
            if let Some(p) = &g.layer_pattern {
                if !p.contains("{L}") {
                    return Err(Error::Config(format!(
                        "layer_pattern of `{}` lacks the {{L}} placeholder",
                        g.name
                    )));
                }
            }
            let members = g.member_names(None)?;
            if !g.stacks() && members.len() != 1 {
                return Err(Error::Config(format!(
                    "unstacked group `{}` must have exactly one member",
                    g.name
                )));
            }
            if let Some(r) = g.ratio {
                FrequencyRatio::new(r)?;
            }
        }
        Ok(())
    }

    pub fn group(&self, name: &str) -> Option<&GroupDef> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn ratio_overrides(&self) -> Result<BTreeMap<String, FrequencyRatio>> {
        self.groups
            .iter()
            .filter_map(|g| g.ratio.map(|r| (g.name.clone(), r)))
            .map(|(n, r)| Ok((n, FrequencyRatio::new(r)?)))
            .collect()
    }
}

/// Expands every group against `container`, in declaration order.
pub fn resolve_groups(
    cfg: &GroupingConfig,
    container: &Container,
) -> Result<Vec<(WeightGroupSpec, BTreeMap<String, Tensor>)>> {
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    let mut out = Vec::with_capacity(cfg.groups.len());
    for g in &cfg.groups {
        let names = g.member_names(None)?;
        let mut members = BTreeMap::new();
        for name in &names {
            let tensor = container.tensor(name).ok_or_else(|| Error::UnresolvedName {
                group: g.name.clone(),
                name: name.clone(),
            })?;
            if let Some(first) = owner.insert(name.clone(), g.name.clone()) {
                return Err(Error::Overlap {
                    name: name.clone(),
                    first,
                    second: g.name.clone(),
                });
            }
            members.insert(name.clone(), tensor.clone());
        }
        let member_rank = members[&names[0]].rank();
        let spec = if g.stacks() {
            WeightGroupSpec::stacked(&g.name, names, member_rank + 1)?
        } else {
            WeightGroupSpec::single(&g.name, names[0].clone(), member_rank)?
        };
        out.push((spec, members));
    }
    Ok(out)
}

/// Names of every tensor claimed by some group.
pub fn grouped_names(cfg: &GroupingConfig) -> Result<BTreeSet<String>> {
    let mut all = BTreeSet::new();
    for g in &cfg.groups {
        all.extend(g.member_names(None)?);
    }
    Ok(all)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupMeta {
    rank: usize,
    ratio: f64,
    source_dims: Vec<usize>,
    stacked: bool,
    members: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneMeta {
    kind: String,
    format_version: u32,
    ratio: f64,
    groups: BTreeMap<String, GroupMeta>,
}

const GENE_KIND: &str = "learngene";

impl Learngene {
    /// Stores blocks as `gene/<group>` f64 tensors with metadata under `meta`.
    pub fn to_container(&self) -> Result<Container> {
        let mut c = Container::new();
        let mut groups = BTreeMap::new();
        for (name, b) in &self.blocks {
            c.insert_f64(format!("{GENE_PREFIX}{name}"), b.block.as_tensor().clone())?;
            groups.insert(
                name.clone(),
                GroupMeta {
                    rank: b.rank(),
                    ratio: b.ratio.get(),
                    source_dims: b.source_dims.clone(),
                    stacked: b.stacked,
                    members: b.member_names.clone(),
                },
            );
        }
        let meta = GeneMeta {
            kind: GENE_KIND.into(),
            format_version: self.format_version,
            ratio: self.ratio.get(),
            groups,
        };
        c.set_meta(Some(
            serde_json::to_value(meta).map_err(|e| Error::CorruptManifest(e.to_string()))?,
        ));
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let meta = c
            .meta()
            .ok_or_else(|| Error::CorruptManifest("learngene container has no meta".into()))?;
        let meta: GeneMeta = serde_json::from_value(meta.clone())
            .map_err(|e| Error::CorruptManifest(format!("learngene meta: {e}")))?;
        if meta.kind != GENE_KIND {
            return Err(Error::CorruptManifest(format!("meta kind `{}`", meta.kind)));
        }
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(meta.format_version));
        }
        let mut blocks = BTreeMap::new();
        for (name, g) in meta.groups {
            let key = format!("{GENE_PREFIX}{name}");
            let tensor = c.tensor(&key).ok_or_else(|| Error::MissingTensor(key.clone()))?;
            let ratio = FrequencyRatio::new(g.ratio)?;
            let keep = build_mask(&g.source_dims, ratio).keep;
            if tensor.shape() != keep.as_slice() || g.rank != keep.len() {
                return Err(Error::CorruptManifest(format!(
                    "block `{name}` has shape {:?}, expected {keep:?}",
                    tensor.shape()
                )));
            }
            blocks.insert(
                name,
                GeneBlock {
                    block: Spectrum::new(tensor.clone()),
                    source_dims: g.source_dims,
                    ratio,
                    member_names: g.members,
                    stacked: g.stacked,
                },
            );
        }
        Ok(Learngene {
            blocks,
            ratio: FrequencyRatio::new(meta.ratio)?,
            format_version: meta.format_version,
        })
    }
}
