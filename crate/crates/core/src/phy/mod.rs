//! OFDM physical layer with decode-and-forward joint modulation.
//!
//! The relay decodes both sources, concatenates their bits per cell and
//! sends one symbol from a larger PSK constellation. Each sink knows its
//! own bits and demaps over the matching subset of points only.

pub mod channel;
pub mod constellation;
pub mod demap;
pub mod estimate;
pub mod exchange;
pub mod interleave;
pub mod labeling;
pub mod ldpc;
pub mod ofdm;

pub use channel::{apply_channel, LinkChannel};
pub use constellation::{dfjm_compose, gray, Constellation};
pub use demap::{brute_force_demap_word, subset_demap, subset_demap_word, SideInfo, SoftDemapper};
pub use estimate::{equalize, estimate_channel, evm, ChannelEstimate};
pub use exchange::{constellation_dump, run_phy_exchange, IqDump, PhyMetrics, Setup};
pub use interleave::Interleaver;
pub use labeling::{exhaustive_search, score, search_optimal_labeling, LabelingScore, Objective, SearchResult};
pub use ldpc::{Decoded, LdpcCode};
pub use ofdm::{build_frame, extract_data, ofdm_demodulate, ofdm_modulate, CellKind, GridPlan, Modem, OfdmGrid};
