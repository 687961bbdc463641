//! Manifest loading, subcommands and the self-test harness behind the `popp` binary.

pub mod commands;
pub mod json;
pub mod manifest;
pub mod selftest;
