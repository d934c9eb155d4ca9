//! Two-hop IAB (integrated access and backhaul) mmWave network simulator.
//!
//! The crate models a finite-disk deployment of macro base stations (MBSs,
//! the IAB donors), small base stations (SBSs, the IAB nodes) and user
//! equipments (UEs) as finite homogeneous Poisson point processes, with
//! germ-grain wall blockage and tree-line foliage. On top of the channel,
//! association and bandwidth-partition model it provides:
//!
//! * service coverage probability evaluation ([`network`]),
//! * genetic-algorithm deployment optimizers for non-IAB backhaul link
//!   placement and SBS locations, plus exhaustive / greedy / tabu
//!   baselines ([`optimize`]),
//! * temporal-blockage re-association ("routing") metrics, a bit-exact
//!   BAP header codec and a table-driven forwarding simulator
//!   ([`routing`]).
//!
//! All randomness flows through explicit seeds (see [`rng`]); identical
//! seeds reproduce identical results bit for bit, serial or parallel.

pub mod channel;
pub mod geometry;
pub mod network;
pub mod optimize;
pub mod rng;
pub mod routing;
