//! File formats: project YAML, preset JSON, WAV, node-graph JSON and the
//! packed dataset container.

mod graph_export;
mod packed;
mod preset_json;
mod wav;
mod yaml;

pub use graph_export::{export_node_graph, import_node_graph};
pub use packed::{write_packed, PackedReader, PackedRecord, PACKED_MAGIC, PACKED_VERSION};
pub use preset_json::{emit_preset_json, expand_elisions, parse_preset_json};
pub use wav::{read_wav, write_wav};
pub use yaml::{emit_project_yaml, parse_project_yaml, parse_project_yaml_with_warnings};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("SCHEMA_ERROR at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("BAD_RIFF: {0}")]
    BadRiff(String),
    #[error("UNSUPPORTED_ENCODING: {0}")]
    UnsupportedEncoding(String),
    #[error("CHECKSUM_MISMATCH: record `{0}` is corrupted")]
    ChecksumMismatch(String),
    #[error("packed container: {0}")]
    Container(String),
    #[error("no record `{0}` in the container")]
    MissingRecord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IoError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
