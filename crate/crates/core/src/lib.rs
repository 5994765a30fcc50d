//! Core of the tracebench toolkit: a small Python-subset interpreter that
//! emits action-state traces, plus benchmark generators, source transforms
//! and a byte-level BPE tokenizer.

pub mod benchgen;
pub mod minipy;
pub mod toklab;
pub mod tracer;
pub mod transforms;
pub mod value;

pub use value::Value;
