//! Scene input/output: 3DGS PLY, camera rigs, the compact `.rgs` container and byte accounting.

pub mod cameras;
pub mod compact;
pub mod memory;
pub mod ply;

pub use cameras::{parse_colmap, parse_rig_json, read_cameras, rig_to_json};
pub use compact::{decode_compact, encode_compact, parse_compact, CompactRecord, CompactScene};
pub use memory::{memory_report_bands, memory_report_compact, memory_report_scene, MemoryReport};
pub use ply::{encode_ply, parse_ply, read_3dgs_ply, write_3dgs_ply, WriteReport};
