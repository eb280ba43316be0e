//! Dataset I/O: JSONL streams, validation, partitioned layout and page
//! sequence assembly.

mod assemble;
mod jsonl;
mod partition;
mod validate;

pub use assemble::{
    assemble_document_sequence, group_documents, AssembleError, BOD, BOP, EOD, EOP,
};
pub use jsonl::{
    decode_line, read_entries, write_entries, DecodeError, DecodeErrorKind, EntryReader,
    WriteError,
};
pub use partition::{
    load_manifest, partition_dataset, read_partitioned, PartInfo, PartitionError,
    PartitionManifest, PartitionOptions, MANIFEST_FILE,
};
pub use validate::{
    validate_entry, validate_line, DatasetValidator, Severity, ValidationOptions,
    ValidationReport, Violation, ViolationCode,
};
