#![no_std]
//! Fault-tolerant multirotor toolkit core.

extern crate alloc;

pub mod actuation;
pub mod control;
pub mod fdi;
pub mod maneuverability;
pub mod planner;
pub mod vehicle;
