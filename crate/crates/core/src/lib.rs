//! Link-level models and the power-allocation optimizer for a rate-splitting
//! uplink bistatic OFDM ISAC system.

pub mod channel;
pub mod receiver;
pub mod sensing;
pub mod optimizer;
