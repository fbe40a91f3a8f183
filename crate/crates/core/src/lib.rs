pub mod agreement;
pub mod autocoder;
pub mod campaigns;
pub mod cli;
pub mod codebook;
pub mod corpus;
pub mod guidance;
pub mod jsonl;
pub mod reports;
pub mod service;
pub mod text;
