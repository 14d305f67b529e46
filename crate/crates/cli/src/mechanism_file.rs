//! JSON mechanism files.
//!
//! `agents[i].tables[t][(y · peer + a) · peer^{T-1} + b]` is agent `i`'s
//! payment on task `t` for own report `y`, same-task peer report `a` and
//! other-task history `b`.

use std::fs;
use std::path::Path;

use peerpred_core::mechanisms::AgentScoring;
use peerpred_core::{Mechanism, PaymentRule};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::SCHEMA_VERSION;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismFile {
    pub schema_version: u32,
    pub task_count: usize,
    pub agents: Vec<AgentTables>,
    /// Synthesis margin, statistic and LP statistics when produced by `synthesize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentTables {
    pub own: usize,
    pub peer: usize,
    pub tables: Vec<Vec<f64>>,
}

impl MechanismFile {
    pub fn from_mechanism(mech: &Mechanism, certificate: Option<Value>) -> Self {
        let agents = mech
            .agents()
            .iter()
            .map(|a| AgentTables { own: a.own_count(), peer: a.peer_count(), tables: a.tables().to_vec() })
            .collect();
        Self { schema_version: SCHEMA_VERSION, task_count: mech.task_count(), agents, certificate }
    }

    pub fn to_mechanism(&self) -> Result<Mechanism, CliError> {
        let agents = self
            .agents
            .iter()
            .map(|a| AgentScoring::new(a.own, a.peer, a.tables.clone()))
            .collect::<peerpred_core::Result<Vec<_>>>()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let mech = Mechanism::new(agents).map_err(|e| CliError::Validation(e.to_string()))?;
        if mech.task_count() != self.task_count {
            return Err(CliError::Validation(format!(
                "tables cover {} tasks, file declares {}",
                mech.task_count(),
                self.task_count
            )));
        }
        Ok(mech)
    }
}

pub fn read_mechanism(path: &Path) -> Result<MechanismFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file: MechanismFile = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Parse(format!("unsupported schema_version {}", file.schema_version)));
    }
    Ok(file)
}
