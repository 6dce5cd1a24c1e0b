pub mod detection;
pub mod geometry;
pub mod jpeg;
pub mod kinematics;
pub mod command;
pub mod protocol;
pub mod agent;
pub mod sim;
pub mod server;
pub mod harness;
