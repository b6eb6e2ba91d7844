//! Q-network with hand-written backpropagation, experience replay and
//! checkpoint files.

mod checkpoint;
mod network;
mod replay;

pub use checkpoint::{checkpoint_text, load_checkpoint, parse_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use network::{Gradient, Layer, Optimizer, QNet};
pub use replay::ReplayBuffer;

/// Hidden layer widths of the action-value network.
pub const HIDDEN_LAYERS: [usize; 2] = [64, 64];

/// Layer widths `[input, 64, 64, n_actions]`.
pub fn layer_dims(input_dim: usize, n_actions: usize) -> Vec<usize> {
    let mut d = vec![input_dim];
    d.extend(HIDDEN_LAYERS);
    d.push(n_actions);
    d
}

/// One replayed transition. `state` and `next_state` are network inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}
