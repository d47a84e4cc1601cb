pub mod agent;
pub mod cost;
pub mod fuzzy;
pub mod model;
pub mod mpc;
pub mod optim;
pub mod sim;
