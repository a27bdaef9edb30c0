use crate::error::ModelError;
use serde::{Deserialize, Serialize};

fn default_embed_lr_mult() -> f64 {
    1.0
}

/// Shapes, rates, and optimizer settings for the recurrent model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub enc_hidden_per_dir: usize,
    pub enc_layers: usize,
    pub dec_hidden: usize,
    pub attn_dim: usize,
    pub dropout_rate: f64,
    pub teacher_forcing_rate: f64,
    pub learning_rate: f64,
    /// Learning-rate multiplier for the two embedding tables. Tokens that
    /// occur in very few samples receive correspondingly few Adam updates
    /// per epoch, so a larger step compensates without destabilizing the
    /// densely-updated recurrent weights.
    #[serde(default = "default_embed_lr_mult")]
    pub embed_lr_mult: f64,
    pub grad_clip_l2: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Small configuration sized for desktop-CPU runs.
    pub fn desk_default() -> Self {
        ModelConfig {
            embed_dim: 64,
            enc_hidden_per_dir: 32,
            enc_layers: 2,
            dec_hidden: 64,
            attn_dim: 16,
            dropout_rate: 0.1,
            teacher_forcing_rate: 0.5,
            learning_rate: 1.5e-3,
            embed_lr_mult: 1.0,
            grad_clip_l2: 5.0,
            batch_size: 128,
            max_epochs: 64,
            seed: 0,
        }
    }

    /// The published recurrent configuration: embeddings of 512, two
    /// encoder layers of 256 per direction, a 512 decoder, batch 128,
    /// learning rate 1e-4, clip 5.0, teacher forcing 0.5, dropout 0.5.
    pub fn paper_scale() -> Self {
        ModelConfig {
            embed_dim: 512,
            enc_hidden_per_dir: 256,
            enc_layers: 2,
            dec_hidden: 512,
            attn_dim: 128,
            dropout_rate: 0.5,
            teacher_forcing_rate: 0.5,
            learning_rate: 1e-4,
            embed_lr_mult: 1.0,
            grad_clip_l2: 5.0,
            batch_size: 128,
            max_epochs: 640,
            seed: 0,
        }
    }

    /// Tiny shapes for gradient checking.
    pub fn tiny() -> Self {
        ModelConfig {
            embed_dim: 6,
            enc_hidden_per_dir: 4,
            enc_layers: 2,
            dec_hidden: 8,
            attn_dim: 5,
            dropout_rate: 0.0,
            teacher_forcing_rate: 1.0,
            learning_rate: 1e-3,
            embed_lr_mult: 1.0,
            grad_clip_l2: 5.0,
            batch_size: 4,
            max_epochs: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dec_hidden != 2 * self.enc_hidden_per_dir {
            return Err(ModelError::InvalidConfig(format!(
                "dec_hidden ({}) must equal 2 * enc_hidden_per_dir ({})",
                self.dec_hidden, self.enc_hidden_per_dir
            )));
        }
        for (name, r) in [
            ("dropout_rate", self.dropout_rate),
            ("teacher_forcing_rate", self.teacher_forcing_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(ModelError::InvalidConfig(format!("{name} out of [0,1]: {r}")));
            }
        }
        if self.embed_dim == 0 || self.enc_layers == 0 || self.attn_dim == 0 || self.batch_size == 0
        {
            return Err(ModelError::InvalidConfig("zero-sized dimension".into()));
        }
        Ok(())
    }
}
