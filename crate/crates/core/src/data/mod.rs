//! Tabular data: schema, the in-memory [`Table`], CSV/JSON ingestion, one-hot
//! encoding, outcome dichotomization and stratified splitting.

mod encode;
mod io;
mod outcome;
mod split;
mod table;

pub use encode::{encode_features, one_hot_encode, EncodedMatrix, EncodingMode};
pub use io::{load_csv, read_csv, read_schema, write_csv, write_schema};
pub(crate) use outcome::percentile_sorted;
pub use outcome::{dichotomize_outcome, percentile, Outcome, OutcomeSpec};
pub(crate) use split::complement;
pub use split::{stratified_kfold, stratified_sample, stratified_split, SplitIndices};
pub use table::{ColumnKind, ColumnSpec, ColumnValues, Domain, Table, MISSING_CATEGORY};

/// Binary labels: 1 = prolonged stay (positive class), 0 = otherwise.
pub type Labels = [u8];

pub(crate) fn class_counts(labels: &Labels) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    (labels.len() - pos, pos)
}

pub(crate) fn require_both_classes(labels: &Labels) -> crate::Result<()> {
    let (neg, pos) = class_counts(labels);
    if neg == 0 || pos == 0 {
        return Err(crate::Error::SingleClass);
    }
    Ok(())
}
