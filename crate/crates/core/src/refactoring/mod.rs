mod rm;
mod taxonomy;

pub use rm::{
    frequency_table, join_to_commits, parse_rm_json, parse_rm_str, read_instances_ndjson, to_rm_json,
    write_instances_ndjson, FrequencyTable, IngestError, JoinReport, Location, RefactoringInstance, RmParse,
};
pub use taxonomy::{RefactoringGroup, RefactoringType, TypeInfo};
