#![allow(dead_code)]
pub mod fd;
pub mod stats_oracle;
