//! Privacy-decision records, schemas and canonical CSV I/O.

mod choice;
mod csv_io;
mod record;
mod schema;

pub use choice::{decode_choice, encode_choice, PrivacyChoice, NUM_CLASSES};
pub use csv_io::{format_number, load_dataset, read_dataset, save_dataset, to_csv_bytes, write_dataset};
pub use record::{LabeledDataset, PrivacyRecord, Value};
pub use schema::{Feature, FeatureKind, FeatureSchema, RESERVED_COLUMNS};
