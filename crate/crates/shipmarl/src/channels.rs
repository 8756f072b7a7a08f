//! Communication channel models.
//!
//! Messages are short real-valued (or binary) vectors exchanged between
//! agents once per control step. Four channel laws are supported:
//! lossless, blocked (receiver always sees zeros), the binary symmetric
//! channel (independent bit flips with probability `p_e`) and additive
//! white Gaussian noise (per-element `N(0, sigma2)`).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("BSC requires binary symbols, found {0}")]
    NonBinarySymbol(f64),
    #[error("temperature must be > 0, got {0}")]
    BadTemperature(f64),
    #[error("gumbel binarization needs two logits per bit, got {0} logits")]
    OddLogits(usize),
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
}

/// A length-`k` communication vector. Real-valued for AWGN/lossless
/// links, {0,1} symbols for the BSC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message(pub Vec<f64>);

impl Message {
    pub fn zeros(k: usize) -> Self {
        Message(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `sum(m_j^2) / k`.
    pub fn mean_power(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().map(|v| v * v).sum::<f64>() / self.0.len() as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelKind {
    Lossless,
    Blocked,
    Bsc { p_e: f64 },
    Awgn { sigma2: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    #[serde(flatten)]
    pub kind: ChannelKind,
    #[serde(default)]
    pub normalize_power: bool,
}

impl ChannelConfig {
    pub fn lossless() -> Self {
        Self {
            kind: ChannelKind::Lossless,
            normalize_power: false,
        }
    }

    pub fn blocked() -> Self {
        Self {
            kind: ChannelKind::Blocked,
            normalize_power: false,
        }
    }

    pub fn bsc(p_e: f64) -> Self {
        Self {
            kind: ChannelKind::Bsc { p_e },
            normalize_power: false,
        }
    }

    pub fn awgn(sigma2: f64) -> Self {
        Self {
            kind: ChannelKind::Awgn { sigma2 },
            normalize_power: true,
        }
    }

    /// Discrete (bit) messages are only meaningful on the BSC.
    pub fn wants_binary(&self) -> bool {
        matches!(self.kind, ChannelKind::Bsc { .. })
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        match self.kind {
            ChannelKind::Bsc { p_e } if !(0.0..=1.0).contains(&p_e) => Err(
                ChannelError::InvalidConfig(format!("p_e must be in [0,1], got {p_e}")),
            ),
            ChannelKind::Awgn { sigma2 } if sigma2 < 0.0 || !sigma2.is_finite() => Err(
                ChannelError::InvalidConfig(format!("sigma2 must be >= 0, got {sigma2}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Rescales a message to mean power 1: `m_j' = sqrt(k) * m_j / ||m||`.
///
/// The all-zero message has no defined direction and is passed through
/// with a warning.
pub fn normalize_power(message: &Message) -> Message {
    let norm = message.norm();
    if norm == 0.0 {
        log::warn!("normalize_power: all-zero message passed through unchanged");
        return message.clone();
    }
    let k = message.len() as f64;
    Message(message.0.iter().map(|&v| k.sqrt() * v / norm).collect())
}

/// Pushes a message through the configured channel.
pub fn transmit<R: Rng>(
    message: &Message,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<Message, ChannelError> {
    cfg.validate()?;
    match cfg.kind {
        ChannelKind::Lossless => Ok(message.clone()),
        ChannelKind::Blocked => Ok(Message::zeros(message.len())),
        ChannelKind::Bsc { p_e } => {
            if let Some(&bad) = message.0.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(ChannelError::NonBinarySymbol(bad));
            }
            Ok(Message(
                message
                    .0
                    .iter()
                    .map(|&bit| {
                        if rng.random::<f64>() < p_e {
                            1.0 - bit
                        } else {
                            bit
                        }
                    })
                    .collect(),
            ))
        }
        ChannelKind::Awgn { sigma2 } => {
            let sent = if cfg.normalize_power {
                normalize_power(message)
            } else {
                message.clone()
            };
            if sigma2 == 0.0 {
                return Ok(sent);
            }
            let noise = Normal::new(0.0, sigma2.sqrt())
                .map_err(|e| ChannelError::InvalidConfig(e.to_string()))?;
            Ok(Message(
                sent.0.iter().map(|&v| v + noise.sample(rng)).collect(),
            ))
        }
    }
}

/// `sigma2 = 10^(-snr_db / 10)` for a unit-power signal.
pub fn snr_db_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn sigma2_to_snr_db(sigma2: f64) -> f64 {
    -10.0 * sigma2.log10()
}

/// Gumbel-Softmax primitives shared with the neural message heads.
pub mod gumbel {
    use rand::Rng;

    /// One standard Gumbel draw, `-ln(-ln(u))`.
    pub fn sample<R: Rng>(rng: &mut R) -> f64 {
        // Open interval keeps both logs finite.
        let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        -(-u.ln()).ln()
    }

    /// Relaxed probability of bit = 1 for a two-way Gumbel-Softmax with
    /// logits `(z0, z1)` and noise `(g0, g1)`.
    pub fn relaxed_bit(z0: f64, z1: f64, g0: f64, g1: f64, temperature: f64) -> f64 {
        let d = ((z1 + g1) - (z0 + g0)) / temperature;
        1.0 / (1.0 + (-d).exp())
    }
}

/// Result of [`binarize`]: the transmitted bit values plus the relaxed
/// two-way softmax per bit (kept around so callers can route gradients
/// through the discretization).
#[derive(Clone, Debug)]
pub struct GumbelSample {
    pub message: Message,
    pub relaxed: Vec<[f64; 2]>,
}

/// Samples one bit per logit pair with the Gumbel-Softmax trick.
///
/// `logits` holds two unconstrained values per bit. With `hard` the
/// message contains exact {0,1} symbols (straight-through); otherwise it
/// carries the relaxed probability of bit = 1.
pub fn binarize<R: Rng>(
    logits: &[f64],
    temperature: f64,
    hard: bool,
    rng: &mut R,
) -> Result<GumbelSample, ChannelError> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(ChannelError::BadTemperature(temperature));
    }
    if logits.len() % 2 != 0 {
        return Err(ChannelError::OddLogits(logits.len()));
    }
    let bits = logits.len() / 2;
    let mut values = Vec::with_capacity(bits);
    let mut relaxed = Vec::with_capacity(bits);
    for i in 0..bits {
        let g0 = gumbel::sample(rng);
        let g1 = gumbel::sample(rng);
        let p1 = gumbel::relaxed_bit(logits[2 * i], logits[2 * i + 1], g0, g1, temperature);
        relaxed.push([1.0 - p1, p1]);
        values.push(if hard { f64::from(p1 > 0.5) } else { p1 });
    }
    Ok(GumbelSample {
        message: Message(values),
        relaxed,
    })
}
