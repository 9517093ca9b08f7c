use std::path::Path;

use super::exec::{run_ground_truth, run_with_coin};
use super::{parse_machine, MachineError, MachineRun, OMachine};
use crate::oracle::{CoinOracle, OracleSet};

/// An enumeration of machines, ordered shortlex by canonical form so that
/// indices do not depend on file names or formatting.
#[derive(Debug, Clone, Default)]
pub struct MachineCatalog {
    entries: Vec<(String, OMachine)>,
}

impl MachineCatalog {
    /// `(name, machine)` pairs; names are labels only and do not affect order.
    pub fn from_machines(machines: impl IntoIterator<Item = (String, OMachine)>) -> Self {
        let mut entries: Vec<(String, OMachine, String)> = machines
            .into_iter()
            .map(|(name, m)| {
                let c = m.canonical();
                (name, m, c)
            })
            .collect();
        entries.sort_by(|a, b| (a.2.len(), &a.2, &a.0).cmp(&(b.2.len(), &b.2, &b.0)));
        MachineCatalog { entries: entries.into_iter().map(|(name, m, _)| (name, m)).collect() }
    }

    /// Every `*.om` file in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, MachineError> {
        let dir = dir.as_ref();
        let read = std::fs::read_dir(dir).map_err(|e| MachineError::Catalog(format!("{}: {e}", dir.display())))?;
        let mut machines = Vec::new();
        for entry in read {
            let path = entry.map_err(|e| MachineError::Catalog(e.to_string()))?.path();
            if path.extension().is_none_or(|ext| ext != "om") {
                continue;
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|e| MachineError::Catalog(format!("{}: {e}", path.display())))?;
            let machine =
                parse_machine(&text).map_err(|e| MachineError::Catalog(format!("{}: {e}", path.display())))?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            machines.push((name, machine));
        }
        Ok(Self::from_machines(machines))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&OMachine, MachineError> {
        self.entries.get(index).map(|(_, m)| m).ok_or(MachineError::IndexOutOfRange { index, len: self.entries.len() })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// Runs machine `index` of the catalog on `input` with a coin-backed oracle.
pub fn universal_run(
    catalog: &MachineCatalog,
    index: usize,
    input: u64,
    oracle: &CoinOracle,
    step_budget: u64,
) -> Result<MachineRun, MachineError> {
    run_with_coin(catalog.get(index)?, oracle, input, step_budget)
}

/// The same dispatch against the set itself.
pub fn universal_run_ground_truth(
    catalog: &MachineCatalog,
    index: usize,
    input: u64,
    set: &OracleSet,
    step_budget: u64,
) -> Result<MachineRun, MachineError> {
    run_ground_truth(catalog.get(index)?, set, input, step_budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::DEFAULT_STEP_BUDGET;

    fn fixtures() -> MachineCatalog {
        MachineCatalog::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/machines")).unwrap()
    }

    #[test]
    fn fixture_catalog_order() {
        let catalog = fixtures();
        assert_eq!(catalog.names(), vec!["halt.om", "member.om"]);
        assert!(matches!(catalog.get(2), Err(MachineError::IndexOutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn order_ignores_input_order_and_names() {
        let catalog = fixtures();
        let reversed = MachineCatalog::from_machines(vec![
            ("b".to_string(), catalog.get(1).unwrap().clone()),
            ("a".to_string(), catalog.get(0).unwrap().clone()),
        ]);
        assert_eq!(reversed.get(0).unwrap(), catalog.get(0).unwrap());
        assert_eq!(reversed.get(1).unwrap(), catalog.get(1).unwrap());
    }

    #[test]
    fn ground_truth_dispatch() {
        let catalog = fixtures();
        let evens = OracleSet::evens();
        for m in 1..=5 {
            let halt = universal_run_ground_truth(&catalog, 0, m, &evens, DEFAULT_STEP_BUDGET).unwrap();
            assert_eq!(halt.halted_output(), Some(0));
            assert!(halt.queries.is_empty());
            let member = universal_run_ground_truth(&catalog, 1, m, &evens, DEFAULT_STEP_BUDGET).unwrap();
            assert_eq!(member.halted_output(), Some(u64::from(m % 2 == 0)));
        }
    }
}
