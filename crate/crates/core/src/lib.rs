pub mod cli;
pub mod error;
pub mod flow;
pub mod format;
pub mod interp;
pub mod losses;
pub mod metrics;
pub mod phantom;
pub mod volume;
pub mod warp;
