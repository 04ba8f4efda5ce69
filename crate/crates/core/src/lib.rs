pub mod agent;
pub mod bundled;
pub mod filter;
pub mod pipeline;
pub mod seed;
pub mod service;
pub mod session;
pub mod sim;
pub mod transform;
pub mod tsal;
