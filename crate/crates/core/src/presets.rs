//! Parameter sets and initial conditions of the eight reference figures.

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, SysState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Figure {
    One,
    Two,
    Three,
    Four,
    Five,
    Six,
    Seven,
    Eight,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Figure::One,
        Figure::Two,
        Figure::Three,
        Figure::Four,
        Figure::Five,
        Figure::Six,
        Figure::Seven,
        Figure::Eight,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    /// Accepts `figure-4`, `figure4`, `fig-4` or `4`.
    pub fn from_name(name: &str) -> Option<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let digits = lower
            .strip_prefix("figure")
            .or_else(|| lower.strip_prefix("fig"))
            .unwrap_or(&lower)
            .trim_start_matches(['-', '_', ' ']);
        Self::from_number(digits.parse().ok()?)
    }

    pub fn name(self) -> String {
        format!("figure-{}", self.number())
    }

    pub fn params(self) -> ModelParams {
        match self {
            Figure::One => ModelParams {
                a: 2.0,
                e: 0.6,
                d: 0.07,
                q: 0.6,
                m: 0.5,
                m1: 0.4,
                m2: 0.4,
                p: 0.8,
                c: 0.6,
                rho: 1.0,
                delta: 0.0,
            },
            Figure::Two => ModelParams {
                a: 2.0,
                e: 0.6,
                d: 0.07,
                q: 0.8,
                m: 0.6,
                m1: 0.4,
                m2: 0.4,
                p: 1.0,
                c: 0.6,
                rho: 1.0,
                delta: 0.0,
            },
            // m is swept in this figure; 0.4 is one of the plotted values.
            Figure::Three => Figure::Four.params().with_m(0.4),
            Figure::Four => ModelParams {
                a: 1.2,
                e: 0.6,
                d: 0.07,
                q: 0.6,
                m: 0.5,
                m1: 0.4,
                m2: 0.4,
                p: 6.0,
                c: 3.0,
                rho: 1.0,
                delta: 0.0,
            },
            Figure::Five => Figure::Four.params().with_m(0.385),
            // Base of the (c, d) plane; c and d are swept.
            Figure::Six | Figure::Seven => ModelParams {
                a: 1.4,
                e: 0.6,
                d: 0.18,
                q: 0.6,
                m: 0.5,
                m1: 0.4,
                m2: 0.4,
                p: 6.0,
                c: 4.0,
                rho: 1.0,
                delta: 0.0,
            },
            Figure::Eight => Figure::Seven.params().with_cost_and_death(4.6, 0.3),
        }
    }

    /// Labelled initial conditions drawn in the figure, if any.
    pub fn initial_conditions(self) -> Vec<(&'static str, SysState)> {
        let s = SysState::new;
        match self {
            Figure::One => vec![
                ("P0", s(0.7, 0.6, 0.7)),
                ("P1", s(0.5, 0.4, 0.3)),
                ("P2", s(0.3, 0.1, 0.1)),
                ("P3", s(0.99, 0.01, 0.01)),
            ],
            Figure::Two => vec![
                ("P0", s(0.7, 0.6, 0.7)),
                ("P1", s(0.5, 0.4, 0.3)),
                ("P2", s(0.3, 0.1, 0.1)),
                ("P3", s(0.01, 0.01, 0.01)),
                ("Q0", s(0.1, 0.1, 0.1)),
                ("Q1", s(0.01, 0.01, 0.01)),
                ("Q2", s(0.001, 0.001, 0.001)),
            ],
            Figure::Four => vec![
                ("P0", s(0.3, 0.2, 0.2)),
                ("P1", s(0.6, 0.4, 0.2)),
                ("P2", s(0.01, 0.01, 0.01)),
                ("P3", s(0.99, 0.01, 0.01)),
            ],
            Figure::Three | Figure::Five => vec![("P0", s(0.3, 0.2, 0.2))],
            Figure::Six | Figure::Seven | Figure::Eight => Vec::new(),
        }
    }

    /// Figure-1 panel (b) initials; not part of the main reproduction set.
    pub fn secondary_initial_conditions(self) -> Vec<(&'static str, SysState)> {
        match self {
            Figure::One => vec![
                ("Q0", SysState::new(0.99, 0.01, 0.01)),
                ("Q1", SysState::new(0.99, 0.001, 0.001)),
                ("Q2", SysState::new(0.999, 0.0001, 0.0001)),
            ],
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for fig in Figure::ALL {
            assert_eq!(Figure::from_name(&fig.name()), Some(fig));
        }
        assert_eq!(Figure::from_name("fig4"), Some(Figure::Four));
        assert_eq!(Figure::from_name("4"), Some(Figure::Four));
        assert_eq!(Figure::from_name("figure-9"), None);
        assert_eq!(Figure::from_name("figure-0"), None);
    }

    #[test]
    fn presets_are_valid() {
        for fig in Figure::ALL {
            fig.params().validate().unwrap();
        }
    }

    #[test]
    fn figure_four_values() {
        let p = Figure::Four.params();
        assert_eq!((p.a, p.c, p.d, p.e, p.q), (1.2, 3.0, 0.07, 0.6, 0.6));
        assert_eq!((p.m1, p.m2, p.m, p.p, p.rho), (0.4, 0.4, 0.5, 6.0, 1.0));
    }
}
