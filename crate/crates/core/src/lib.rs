pub mod ansatz;
pub mod campaign;
pub mod config;
pub mod discriminator;
pub mod generator;
pub mod metrics;
pub mod optim;
pub mod prompts;
pub mod proposer;
pub mod report;
pub mod sim;
pub mod storage;
pub mod target;
pub mod train;
