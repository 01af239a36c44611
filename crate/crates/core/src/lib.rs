//! Interactive exploration of the behaviours that satisfy or falsify a
//! state/event LTL property over a typed labelled Kripke structure.

pub mod checker;
pub mod cli;
pub mod egs;
pub mod encode;
pub mod explorer;
pub mod lks;
pub mod models;
pub mod seltl;
pub mod service;
