pub mod eval_offline;
pub mod eval_online;
pub mod hrc_sim;
pub mod report;
pub mod streams;
pub mod synth_dataset;
pub mod train;
