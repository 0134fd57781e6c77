use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transition {
    None,
    Activated,
    Deactivated,
}

/// Threshold switch with a hold-down on release: the controller turns on the
/// first cycle `k ≥ ratio·k̄` and turns off only after `hold_down` consecutive
/// cycles below the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activation<T> {
    pub ratio: T,
    pub hold_down: u32,
    pub active: bool,
    below: u32,
}

impl<T: Scalar> Activation<T> {
    pub fn new(ratio: T, hold_down: u32) -> Self {
        Self {
            ratio,
            hold_down,
            active: false,
            below: 0,
        }
    }

    pub fn threshold(&self, kbar: T) -> T {
        self.ratio * kbar
    }

    pub fn update(&mut self, k: T, kbar: T) -> Transition {
        let above = k >= self.threshold(kbar);
        if !self.active {
            if above {
                self.active = true;
                self.below = 0;
                return Transition::Activated;
            }
            return Transition::None;
        }
        if above {
            self.below = 0;
            return Transition::None;
        }
        self.below += 1;
        if self.below >= self.hold_down.max(1) {
            self.active = false;
            self.below = 0;
            Transition::Deactivated
        } else {
            Transition::None
        }
    }
}
