use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate schedule driven once per validation epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scheduler {
    /// Multiplies the rate by `factor` once `patience` consecutive epochs
    /// fail to strictly improve on the best loss, then resets the count.
    Plateau {
        factor: f64,
        patience: usize,
        lr: f64,
        best: f64,
        bad_epochs: usize,
    },
    /// `min + (base - min) * (1 + cos(pi * epoch / period)) / 2`: base rate
    /// at epoch 0, minimum at epoch `period`.
    Cosine { period: usize, base: f64, min: f64, lr: f64 },
}

impl Scheduler {
    pub fn plateau(lr: f64, factor: f64, patience: usize) -> Result<Self> {
        if !(factor > 0.0 && factor < 1.0) || !(lr >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "plateau needs factor in (0, 1) and lr >= 0, got {factor}, {lr}"
            )));
        }
        Ok(Scheduler::Plateau {
            factor,
            patience,
            lr,
            best: f64::INFINITY,
            bad_epochs: 0,
        })
    }

    pub fn cosine(base: f64, min: f64, period: usize) -> Result<Self> {
        if period == 0 || !(base >= min) || !(min >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cosine needs period >= 1 and base >= min >= 0, got {period}, {base}, {min}"
            )));
        }
        Ok(Scheduler::Cosine {
            period,
            base,
            min,
            lr: base,
        })
    }

    pub fn lr(&self) -> f64 {
        match self {
            Scheduler::Plateau { lr, .. } | Scheduler::Cosine { lr, .. } => *lr,
        }
    }

    /// Records the validation loss of the epoch just finished and returns
    /// the rate for `epoch`, the next one.
    pub fn step(&mut self, epoch: usize, val_loss: f64) -> f64 {
        match self {
            Scheduler::Plateau {
                factor,
                patience,
                lr,
                best,
                bad_epochs,
            } => {
                if val_loss < *best {
                    *best = val_loss;
                    *bad_epochs = 0;
                } else {
                    *bad_epochs += 1;
                    if *bad_epochs >= (*patience).max(1) {
                        *lr *= *factor;
                        *bad_epochs = 0;
                    }
                }
                *lr
            }
            Scheduler::Cosine { period, base, min, lr } => {
                let phase = std::f64::consts::PI * epoch as f64 / *period as f64;
                *lr = *min + (*base - *min) * (1.0 + phase.cos()) / 2.0;
                *lr
            }
        }
    }
}

/// Stops after `patience` consecutive epochs without a strict improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub patience: usize,
    pub best: f64,
    pub bad_epochs: usize,
    pub stopped: bool,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Result<Self> {
        if patience == 0 {
            return Err(Error::InvalidConfig("early-stop patience must be >= 1".into()));
        }
        Ok(Self {
            patience,
            best: f64::INFINITY,
            bad_epochs: 0,
            stopped: false,
        })
    }

    /// Returns `true` once training should stop. A loss equal to the best
    /// so far counts as no improvement.
    pub fn update(&mut self, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
        }
        self.stopped |= self.bad_epochs >= self.patience;
        self.stopped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_drops_after_patience() {
        let mut s = Scheduler::plateau(1.0, 0.1, 3).unwrap();
        let rates: Vec<f64> = [1.0, 0.9, 0.91, 0.92, 0.93]
            .iter()
            .enumerate()
            .map(|(e, &l)| s.step(e + 1, l))
            .collect();
        assert_eq!(&rates[..4], &[1.0; 4]);
        assert!((rates[4] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn plateau_steady_improvement_keeps_rate() {
        let mut s = Scheduler::plateau(0.5, 0.3, 2).unwrap();
        for e in 0..20 {
            assert_eq!(s.step(e + 1, 10.0 - e as f64), 0.5);
        }
    }

    #[test]
    fn cosine_landmarks() {
        let mut s = Scheduler::cosine(1.0, 0.2, 50).unwrap();
        assert_eq!(s.lr(), 1.0);
        assert_eq!(s.step(0, 0.0), 1.0);
        assert!((s.step(25, 0.0) - 0.6).abs() < 1e-15);
        assert!((s.step(50, 0.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn early_stop_cases() {
        let mut e = EarlyStop::new(5).unwrap();
        assert!((0..50).all(|i| !e.update(100.0 - i as f64)));
        let mut e = EarlyStop::new(2).unwrap();
        assert!(!e.update(1.0));
        assert!(!e.update(1.1));
        assert!(e.update(1.2));
        let mut e = EarlyStop::new(1).unwrap();
        e.update(1.0);
        assert!(e.update(1.0));
    }
}
