use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::tensor::MixedRadix;

/// A map from other-task peer report tuples to a finite range, one table per agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Statistic {
    pub name: String,
    /// `tables[i][b]` is the value of history index `b` for agent `i`.
    pub tables: Vec<Vec<usize>>,
    pub ranges: Vec<usize>,
}

impl Statistic {
    /// Checks totality against peer report counts and the task count.
    pub fn new(
        name: impl Into<String>,
        tables: Vec<Vec<usize>>,
        peer_counts: &[usize],
        task_count: usize,
    ) -> Result<Self> {
        if tables.len() != peer_counts.len() || task_count == 0 {
            return Err(Error::Shape("one statistic table per agent is required".into()));
        }
        let mut ranges = Vec::with_capacity(tables.len());
        for (i, (table, peer)) in tables.iter().zip(peer_counts).enumerate() {
            let hist = peer.pow(task_count as u32 - 1);
            if table.len() != hist {
                return Err(Error::Shape(format!(
                    "statistic for agent {i} covers {} of {hist} histories",
                    table.len()
                )));
            }
            let range = table.iter().max().map_or(0, |m| m + 1);
            if (0..range).any(|v| !table.contains(&v)) {
                return Err(Error::Validation(format!("statistic for agent {i} skips values below {range}")));
            }
            ranges.push(range);
        }
        Ok(Self { name: name.into(), tables, ranges })
    }

    fn build(
        name: &str,
        instance: &ProblemInstance<impl crate::scalar::Scalar>,
        f: impl Fn(&[usize]) -> Vec<usize>,
    ) -> Self {
        let peers: Vec<usize> = (0..instance.agent_count()).map(|i| instance.peer_report_count(i)).collect();
        let tables = peers
            .iter()
            .map(|p| {
                let radix = MixedRadix::uniform(*p, instance.task_count() - 1);
                let keys: Vec<Vec<usize>> = (0..radix.len()).map(|b| f(&radix.decode(b))).collect();
                intern(&keys)
            })
            .collect();
        Self::new(name, tables, &peers, instance.task_count()).expect("tables are total by construction")
    }

    /// The full other-task tuple.
    pub fn identity(instance: &ProblemInstance<impl crate::scalar::Scalar>) -> Self {
        Self::build("identity", instance, |t| t.to_vec())
    }

    pub fn constant(instance: &ProblemInstance<impl crate::scalar::Scalar>) -> Self {
        Self::build("constant", instance, |_| Vec::new())
    }

    /// The unordered multiset of other-task peer reports.
    pub fn histogram(instance: &ProblemInstance<impl crate::scalar::Scalar>) -> Self {
        Self::build("histogram", instance, |t| {
            let mut v = t.to_vec();
            v.sort_unstable();
            v
        })
    }

    pub fn value(&self, agent: usize, history: usize) -> usize {
        self.tables[agent][history]
    }
}

/// Ids by first appearance.
fn intern(keys: &[Vec<usize>]) -> Vec<usize> {
    let mut seen: Vec<&Vec<usize>> = Vec::new();
    keys.iter()
        .map(|k| match seen.iter().position(|s| *s == k) {
            Some(p) => p,
            None => {
                seen.push(k);
                seen.len() - 1
            }
        })
        .collect()
}
