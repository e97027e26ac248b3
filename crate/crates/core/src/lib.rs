pub mod dynamics;
pub mod control;
pub mod path;
pub mod perception;
pub mod rewards;
pub mod environment;
pub mod exec;
pub mod ppo;
pub mod eval;
