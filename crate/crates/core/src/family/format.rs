//! JSON model format: complex numbers as `[re, im]`, matrices row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::sequence::ProjectionSequence;
use crate::family::step::{Jump, StepSpectralFamily, Support};
use crate::operator::{Operator, C64};

pub const SCHEMA_VERSION: u32 = 1;

pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn operator_to_data(op: &Operator) -> MatrixData {
    op.rows()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn operator_from_data(data: &MatrixData) -> Result<Operator> {
    let rows: Vec<Vec<C64>> = data
        .iter()
        .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    Operator::from_rows(&rows)
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn check_schema(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {found} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpData {
    pub lambda: f64,
    pub delta: MatrixData,
}

/// A step spectral family on disk. `support` ends are `null` when infinite;
/// a missing support spans the first and last jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[Option<f64>; 2]>,
    pub jumps: Vec<JumpData>,
}

impl FamilyFile {
    pub fn from_family(f: &StepSpectralFamily) -> Self {
        let s = f.support();
        let end = |x: f64| x.is_finite().then_some(x);
        Self {
            schema_version: SCHEMA_VERSION,
            support: Some([end(s.lo), end(s.hi)]),
            jumps: f
                .jumps()
                .iter()
                .map(|j| JumpData {
                    lambda: j.lambda,
                    delta: operator_to_data(&j.delta),
                })
                .collect(),
        }
    }

    pub fn to_family(&self) -> Result<StepSpectralFamily> {
        check_schema(self.schema_version)?;
        let jumps = self
            .jumps
            .iter()
            .map(|j| Ok(Jump::new(j.lambda, operator_from_data(&j.delta)?)))
            .collect::<Result<Vec<_>>>()?;
        match self.support {
            Some([lo, hi]) => {
                let support = Support::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))?;
                StepSpectralFamily::new(support, jumps)
            }
            None => StepSpectralFamily::from_jumps(jumps),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A projection sequence on disk: `projections[k]` is `P_{k−N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub radius: i64,
    pub projections: Vec<MatrixData>,
}

impl SequenceFile {
    pub fn from_sequence(p: &ProjectionSequence) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            radius: p.radius(),
            projections: p.iter().map(|(_, op)| operator_to_data(op)).collect(),
        }
    }

    pub fn to_sequence(&self) -> Result<ProjectionSequence> {
        check_schema(self.schema_version)?;
        let ops = self
            .projections
            .iter()
            .map(operator_from_data)
            .collect::<Result<Vec<_>>>()?;
        ProjectionSequence::new(self.radius, ops)
    }
}
