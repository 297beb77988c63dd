use serde::{Deserialize, Serialize};

use crate::data::{Domain, Table};
use crate::{Error, Result};

pub const BASELINE_SET: &str = "baseline";

const COMBINATIONS: [(&str, &[Domain]); 7] = [
    ("patient", &[Domain::Patient]),
    ("clinical", &[Domain::Clinical]),
    ("system", &[Domain::System]),
    ("patient+clinical", &[Domain::Patient, Domain::Clinical]),
    ("patient+system", &[Domain::Patient, Domain::System]),
    ("clinical+system", &[Domain::Clinical, Domain::System]),
    ("all", &[Domain::Patient, Domain::Clinical, Domain::System]),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSet {
    pub name: String,
    pub domains: Vec<Domain>,
    /// Table columns, in table order.
    pub columns: Vec<String>,
}

/// Columns whose domain tag is in `domains`.
pub fn variable_set(table: &Table, name: &str, domains: &[Domain]) -> Result<VariableSet> {
    for d in domains {
        if *d == Domain::Outcome {
            return Err(Error::InvalidArgument(
                "the outcome is not a predictor domain".into(),
            ));
        }
        if !table.specs().iter().any(|s| s.domain == *d) {
            return Err(Error::EmptyDomain(d.as_str().into()));
        }
    }
    Ok(VariableSet {
        name: name.into(),
        domains: domains.to_vec(),
        columns: table
            .specs()
            .iter()
            .filter(|s| domains.contains(&s.domain))
            .map(|s| s.name.clone())
            .collect(),
    })
}

/// The seven non-empty domain combinations, followed by a `baseline` set
/// built from an explicit column list when one is given.
pub fn build_variable_sets<S: AsRef<str>>(
    table: &Table,
    baseline: &[S],
) -> Result<Vec<VariableSet>> {
    let mut sets = COMBINATIONS
        .iter()
        .map(|(name, domains)| variable_set(table, name, domains))
        .collect::<Result<Vec<_>>>()?;
    if !baseline.is_empty() {
        let mut domains = Vec::new();
        let mut columns = Vec::new();
        for name in baseline {
            let col = table.require_column(name.as_ref())?;
            let spec = table.spec(col);
            if spec.domain == Domain::Outcome {
                return Err(Error::InvalidArgument(format!(
                    "baseline lists the outcome `{}`",
                    spec.name
                )));
            }
            if !domains.contains(&spec.domain) {
                domains.push(spec.domain);
            }
            columns.push(col);
        }
        domains.sort();
        columns.sort_unstable();
        columns.dedup();
        sets.push(VariableSet {
            name: BASELINE_SET.into(),
            domains,
            columns: columns
                .into_iter()
                .map(|c| table.spec(c).name.clone())
                .collect(),
        });
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, ColumnValues};

    fn table(counts: (usize, usize, usize)) -> Table {
        let mut specs = Vec::new();
        for (d, k) in [
            (Domain::Patient, counts.0),
            (Domain::Clinical, counts.1),
            (Domain::System, counts.2),
        ] {
            for i in 0..k {
                specs.push(ColumnSpec::continuous(format!("{}_{i}", d.as_str()), d));
            }
        }
        specs.push(ColumnSpec::continuous("los", Domain::Outcome));
        let values = specs
            .iter()
            .map(|_| ColumnValues::Continuous(vec![0.0]))
            .collect();
        Table::new(specs, values).unwrap()
    }

    #[test]
    fn set_sizes() {
        let sets = build_variable_sets(&table((7, 25, 57)), &["patient_0", "system_3"]).unwrap();
        let size = |n: &str| sets.iter().find(|s| s.name == n).unwrap().columns.len();
        assert_eq!(sets.len(), 8);
        assert_eq!(size("all"), 89);
        assert_eq!(size("patient"), 7);
        assert_eq!(size("clinical+system"), 82);
        assert_eq!(size(BASELINE_SET), 2);
        let sets = build_variable_sets::<&str>(&table((7, 20, 56)), &[]).unwrap();
        assert_eq!(sets.len(), 7);
        assert_eq!(sets[6].columns.len(), 83);
    }

    #[test]
    fn empty_domain_errors() {
        let r = build_variable_sets::<&str>(&table((3, 0, 2)), &[]);
        assert!(matches!(r, Err(Error::EmptyDomain(d)) if d == "clinical"));
        assert!(variable_set(&table((3, 0, 2)), "p", &[Domain::Patient]).is_ok());
        assert!(build_variable_sets(&table((1, 1, 1)), &["nope"]).is_err());
    }
}
