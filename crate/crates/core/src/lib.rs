pub mod ldp;
pub mod primitives;
pub mod relations;
pub mod protocol;
pub mod shuffler;
pub mod harness;
