//! Evaluation harness for LLM-based post-OCR correction.
//!
//! Modules map onto the stages of a correction study: corpus ingestion and
//! sampling ([`corpus`]), prompt composition ([`prompt_builder`]), model
//! dispatch ([`llm_client`]), scoring ([`text_metrics`], [`entity_metrics`],
//! [`ner`]) and the experiment runners ([`experiments`]).

pub mod corpus;
pub mod entity_metrics;
pub mod experiments;
mod http;
pub mod ner;
pub mod prompt_builder;
pub mod text_metrics;
pub mod llm_client;
