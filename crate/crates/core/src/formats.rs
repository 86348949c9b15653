//! JSON wire formats for operators, states, sequences, measures and
//! extension requests, plus the CSV export of trace profiles.
//!
//! Complex numbers are `[re, im]` pairs; block entries are row-major.
//! Unknown fields are rejected everywhere.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{Block, BlockOperatorMatrix, Classification, DensityError, StateHandle};
use crate::fock::{FockContext, FockError, FockOperator};
use crate::measures::{Atom, CircleMeasure, MeasureError};
use crate::product_states::{SequenceError, UnitVectorSequence};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("block ({i}, {j}) has {found} entries, expected {expected}")]
    EntryCount { i: usize, j: usize, found: usize, expected: usize },

    #[error("block ({i}, {j}) appears twice")]
    DuplicateBlock { i: usize, j: usize },

    #[error("entry is not finite")]
    NonFinite,

    #[error(transparent)]
    Fock(#[from] FockError),

    #[error(transparent)]
    Density(#[from] DensityError),

    #[error(transparent)]
    Sequence(#[from] SequenceError),

    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub type Complex = [f64; 2];

fn to_pair(z: C64) -> Complex {
    [z.re, z.im]
}

fn from_pair(p: &Complex) -> Result<C64, FormatError> {
    if p[0].is_finite() && p[1].is_finite() {
        Ok(C64::new(p[0], p[1]))
    } else {
        Err(FormatError::NonFinite)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockJson {
    pub i: usize,
    pub j: usize,
    pub entries: Vec<Complex>,
}

/// `{n, K, blocks}`: the shared layout of operators and density matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub n: usize,
    #[serde(rename = "K")]
    pub depth: usize,
    pub blocks: Vec<BlockJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateMetadata {
    pub exact_horizon: usize,
    pub classification: Classification,
    pub trace_profile: Vec<f64>,
}

/// A density matrix plus optional metadata. Metadata is recomputed on load;
/// only `exact_horizon` is read back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub n: usize,
    #[serde(rename = "K")]
    pub depth: usize,
    pub blocks: Vec<BlockJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<StateMetadata>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceJson {
    pub n: usize,
    #[serde(default)]
    pub prefix: Vec<Vec<Complex>>,
    pub cycle: Vec<Vec<Complex>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    #[serde(default)]
    pub haar_weight: f64,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

fn dense_to_json(i: usize, j: usize, m: &DMatrix<C64>) -> BlockJson {
    let mut entries = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            entries.push(to_pair(m[(r, c)]));
        }
    }
    BlockJson { i, j, entries }
}

type LevelBlocks = Vec<((usize, usize), DMatrix<C64>)>;

fn blocks_from_json(ctx: FockContext, blocks: &[BlockJson]) -> Result<LevelBlocks, FormatError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(blocks.len());
    for b in blocks {
        if !seen.insert((b.i, b.j)) {
            return Err(FormatError::DuplicateBlock { i: b.i, j: b.j });
        }
        for level in [b.i, b.j] {
            if level > ctx.depth() {
                return Err(FockError::LevelOutOfRange { level, depth: ctx.depth() }.into());
            }
        }
        let (rows, cols) = (ctx.level_dim(b.i), ctx.level_dim(b.j));
        if b.entries.len() != rows * cols {
            return Err(FormatError::EntryCount { i: b.i, j: b.j, found: b.entries.len(), expected: rows * cols });
        }
        let values = b.entries.iter().map(from_pair).collect::<Result<Vec<_>, _>>()?;
        out.push(((b.i, b.j), DMatrix::from_row_slice(rows, cols, &values)));
    }
    Ok(out)
}

impl OperatorJson {
    pub fn from_operator(op: &FockOperator) -> Self {
        let ctx = op.ctx();
        let blocks = op.blocks().map(|(&(i, j), m)| dense_to_json(i, j, m)).collect();
        Self { n: ctx.n(), depth: ctx.depth(), blocks }
    }

    pub fn from_matrix(m: &BlockOperatorMatrix) -> Self {
        let ctx = m.ctx();
        let blocks = m.blocks().map(|(&(i, j), b)| dense_to_json(i, j, &b.to_dense())).collect();
        Self { n: ctx.n(), depth: ctx.depth(), blocks }
    }

    pub fn to_operator(&self) -> Result<FockOperator, FormatError> {
        let ctx = FockContext::new(self.n, self.depth)?;
        Ok(FockOperator::from_blocks(ctx, blocks_from_json(ctx, &self.blocks)?)?)
    }

    pub fn to_matrix(&self) -> Result<BlockOperatorMatrix, FormatError> {
        let ctx = FockContext::new(self.n, self.depth)?;
        let blocks = blocks_from_json(ctx, &self.blocks)?.into_iter().map(|(k, m)| (k, Block::Dense(m)));
        Ok(BlockOperatorMatrix::from_blocks(ctx, blocks.collect::<Vec<_>>())?)
    }
}

impl StateJson {
    pub fn from_state(state: &StateHandle, classification: Classification) -> Self {
        let op = OperatorJson::from_matrix(state.omega());
        Self {
            n: op.n,
            depth: op.depth,
            blocks: op.blocks,
            metadata: Some(StateMetadata {
                exact_horizon: state.exact_horizon(),
                classification,
                trace_profile: state.trace_profile().to_vec(),
            }),
        }
    }

    pub fn to_state(&self) -> Result<StateHandle, FormatError> {
        let op = OperatorJson { n: self.n, depth: self.depth, blocks: self.blocks.clone() };
        let m = op.to_matrix()?;
        let horizon = self.metadata.as_ref().map_or(self.depth, |md| md.exact_horizon);
        Ok(StateHandle::with_horizon(m, horizon)?)
    }

    pub fn parse(text: &str) -> Result<StateHandle, FormatError> {
        serde_json::from_str::<Self>(text)?.to_state()
    }
}

fn vector_from_json(v: &[Complex]) -> Result<DVector<C64>, FormatError> {
    let values = v.iter().map(from_pair).collect::<Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(values))
}

fn vector_to_json(v: &DVector<C64>) -> Vec<Complex> {
    v.iter().map(|z| to_pair(*z)).collect()
}

impl SequenceJson {
    pub fn from_sequence(seq: &UnitVectorSequence) -> Self {
        Self {
            n: seq.n(),
            prefix: seq.prefix().iter().map(vector_to_json).collect(),
            cycle: seq.cycle().iter().map(vector_to_json).collect(),
        }
    }

    pub fn to_sequence(&self) -> Result<UnitVectorSequence, FormatError> {
        let prefix = self.prefix.iter().map(|v| vector_from_json(v)).collect::<Result<Vec<_>, _>>()?;
        let cycle = self.cycle.iter().map(|v| vector_from_json(v)).collect::<Result<Vec<_>, _>>()?;
        Ok(UnitVectorSequence::new(self.n, prefix, cycle)?)
    }
}

impl MeasureJson {
    pub fn from_measure(m: &CircleMeasure) -> Self {
        Self { haar_weight: m.haar_weight(), atoms: m.atoms().to_vec() }
    }

    pub fn to_measure(&self) -> Result<CircleMeasure, FormatError> {
        Ok(CircleMeasure::new(self.haar_weight, self.atoms.iter().copied())?)
    }
}

/// `k,omega_Ek` rows, one per level.
pub fn trace_profile_csv(profile: &[f64]) -> String {
    let mut out = String::from("k,omega_Ek\n");
    for (k, t) in profile.iter().enumerate() {
        writeln!(out, "{k},{t}").expect("writing to a string");
    }
    out
}
