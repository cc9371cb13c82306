//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod dual;
pub mod jets;
pub mod patch;
pub mod section;
