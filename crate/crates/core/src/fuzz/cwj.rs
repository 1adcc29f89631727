use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MutationStrategy {
    #[default]
    Slight,
    Heavy,
}

impl MutationStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            MutationStrategy::Slight => "slight",
            MutationStrategy::Heavy => "heavy",
        }
    }
}

impl fmt::Display for MutationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Crash-window scheduler state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CwjState {
    pub cw: u32,
    /// Consecutive generations without a new block or a new crash.
    pub zeta: u32,
    pub ms: MutationStrategy,
    pub ini_cw: u32,
    pub min_cw: u32,
    pub max_cw: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("crash window bounds need 1 <= min ({min}) <= ini ({ini}) <= max ({max})")]
pub struct CwjError {
    pub ini: u32,
    pub min: u32,
    pub max: u32,
}

impl CwjState {
    pub fn new(ini_cw: u32, min_cw: u32, max_cw: u32) -> Result<Self, CwjError> {
        if min_cw == 0 || min_cw > ini_cw || ini_cw > max_cw {
            return Err(CwjError { ini: ini_cw, min: min_cw, max: max_cw });
        }
        Ok(Self { cw: ini_cw, zeta: 0, ms: MutationStrategy::Slight, ini_cw, min_cw, max_cw })
    }
}

/// One generation of the crash-window schedule.
///
/// While stuck, `zeta` counts up; once it exceeds the window the strategy
/// turns heavy and the window halves (bounded by `min_cw`). Any progress
/// resets `zeta`, returns to slight mutation and doubles the window (bounded
/// by `max_cw`). `text_mode` swaps halving and doubling.
pub fn cwj_step(state: &CwjState, found_crash: bool, found_new_block: bool, text_mode: bool) -> CwjState {
    let mut s = *state;
    let halve = |s: &mut CwjState| {
        if s.cw >= s.min_cw * 2 {
            s.cw /= 2;
        }
    };
    let double = |s: &mut CwjState| {
        if s.cw <= s.max_cw / 2 {
            s.cw *= 2;
        }
    };
    if !found_crash && !found_new_block {
        s.zeta += 1;
        if s.zeta > s.cw {
            s.ms = MutationStrategy::Heavy;
            if text_mode {
                double(&mut s);
            } else {
                halve(&mut s);
            }
        }
    } else {
        s.zeta = 0;
        s.ms = MutationStrategy::Slight;
        if text_mode {
            halve(&mut s);
        } else {
            double(&mut s);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use MutationStrategy::{Heavy, Slight};

    fn trace(flags: &[bool]) -> alloc::vec::Vec<(u32, u32, MutationStrategy)> {
        let mut s = CwjState::new(4, 2, 16).unwrap();
        flags
            .iter()
            .map(|&progress| {
                s = cwj_step(&s, false, progress, false);
                (s.zeta, s.cw, s.ms)
            })
            .collect()
    }

    #[test]
    fn five_stuck() {
        assert_eq!(
            trace(&[false; 5]),
            [(1, 4, Slight), (2, 4, Slight), (3, 4, Slight), (4, 4, Slight), (5, 2, Heavy)]
        );
    }

    #[test]
    fn at_min_window_stays() {
        let mut s = CwjState::new(2, 2, 16).unwrap();
        for _ in 0..3 {
            s = cwj_step(&s, false, false, false);
        }
        assert_eq!((s.zeta, s.cw, s.ms), (3, 2, Heavy));
    }

    #[test]
    fn crash_counts_as_progress() {
        let s = CwjState { zeta: 9, ms: Heavy, ..CwjState::new(4, 2, 16).unwrap() };
        let s = cwj_step(&s, true, false, false);
        assert_eq!((s.zeta, s.cw, s.ms), (0, 8, Slight));
    }

    #[test]
    fn text_mode_swaps_direction() {
        let mut s = CwjState::new(4, 2, 16).unwrap();
        for _ in 0..5 {
            s = cwj_step(&s, false, false, true);
        }
        assert_eq!((s.cw, s.ms), (8, Heavy));
        s = cwj_step(&s, false, true, true);
        assert_eq!((s.cw, s.ms, s.zeta), (4, Slight, 0));
    }

    #[test]
    fn bounds_checked() {
        assert!(CwjState::new(4, 0, 16).is_err());
        assert!(CwjState::new(1, 2, 16).is_err());
        assert!(CwjState::new(32, 2, 16).is_err());
    }
}
