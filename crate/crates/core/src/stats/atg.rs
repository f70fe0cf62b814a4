use std::collections::BTreeMap;

use super::TickRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn other(self) -> Self {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }
}

/// How a game ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtgOutcome {
    /// The other clock ticked twice in a row.
    Winner(Player),
    /// Two ticks at exactly the same time.
    Draw,
    /// Both streams ran out without a violation.
    NoViolation,
}

impl AtgOutcome {
    pub fn label(self) -> &'static str {
        match self {
            AtgOutcome::Winner(Player::A) => "a",
            AtgOutcome::Winner(Player::B) => "b",
            AtgOutcome::Draw => "draw",
            AtgOutcome::NoViolation => "none",
        }
    }
}

/// One refereeing of a game under a fixed opening player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtgPlay {
    /// Ticks in the alternating prefix.
    pub alternations: usize,
    /// Ticks consumed, including a violating one.
    pub length: usize,
    pub outcome: AtgOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtgGame {
    pub game_id: u64,
    pub a_first: AtgPlay,
    pub b_first: AtgPlay,
}

impl AtgGame {
    /// The play opened by whichever clock ticks first. Its length is the
    /// larger of the two conventions.
    pub fn natural(&self) -> AtgPlay {
        if self.a_first.length >= self.b_first.length {
            self.a_first
        } else {
            self.b_first
        }
    }

    pub fn length(&self) -> usize {
        self.natural().length
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtgSummary {
    pub games: Vec<AtgGame>,
}

impl AtgSummary {
    pub fn mean_length(&self) -> f64 {
        if self.games.is_empty() {
            return 0.0;
        }
        self.games.iter().map(|g| g.length() as f64).sum::<f64>() / self.games.len() as f64
    }

    /// `counts[n]` games of length `n`.
    pub fn length_histogram(&self) -> Vec<usize> {
        let max = self.games.iter().map(AtgGame::length).max().unwrap_or(0);
        let mut counts = vec![0; max + 1];
        for g in &self.games {
            counts[g.length()] += 1;
        }
        counts
    }
}

/// Plays the alternate-ticks game on merged tick streams, starting with
/// `first`.
pub fn play(a: &[f64], b: &[f64], first: Player) -> AtgPlay {
    let (mut i, mut j) = (0, 0);
    let mut expected = first;
    let mut count = 0;
    loop {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                return AtgPlay {
                    alternations: count,
                    length: count,
                    outcome: AtgOutcome::Draw,
                }
            }
            (Some(x), Some(y)) => {
                if x < y {
                    Player::A
                } else {
                    Player::B
                }
            }
            (Some(_), None) => Player::A,
            (None, Some(_)) => Player::B,
            (None, None) => {
                return AtgPlay {
                    alternations: count,
                    length: count,
                    outcome: AtgOutcome::NoViolation,
                }
            }
        };
        if next != expected {
            return AtgPlay {
                alternations: count,
                length: count + 1,
                outcome: AtgOutcome::Winner(next.other()),
            };
        }
        match next {
            Player::A => i += 1,
            Player::B => j += 1,
        }
        count += 1;
        expected = expected.other();
    }
}

/// Referees one game per trajectory id present in both `a` and `b`.
pub fn atg_referee(a: &[TickRecord], b: &[TickRecord]) -> Result<AtgSummary> {
    let index = |recs: &[TickRecord], name: &str| -> Result<BTreeMap<u64, usize>> {
        let mut map = BTreeMap::new();
        for (pos, r) in recs.iter().enumerate() {
            if map.insert(r.trajectory_id, pos).is_some() {
                return Err(Error::Pairing(format!("id {} repeated in clock {name}", r.trajectory_id)));
            }
        }
        Ok(map)
    };
    let ia = index(a, "a")?;
    let ib = index(b, "b")?;
    let only_a: Vec<u64> = ia.keys().filter(|k| !ib.contains_key(k)).copied().collect();
    let only_b: Vec<u64> = ib.keys().filter(|k| !ia.contains_key(k)).copied().collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(Error::Pairing(format!("only in a: {only_a:?}; only in b: {only_b:?}")));
    }
    let games = ia
        .iter()
        .map(|(&id, &pa)| {
            let ta = &a[pa].tick_times;
            let tb = &b[ib[&id]].tick_times;
            AtgGame {
                game_id: id,
                a_first: play(ta, tb, Player::A),
                b_first: play(ta, tb, Player::B),
            }
        })
        .collect();
    Ok(AtgSummary { games })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, t: &[f64]) -> TickRecord {
        TickRecord {
            trajectory_id: id,
            tick_times: t.to_vec(),
            truncated: true,
        }
    }

    #[test]
    fn perfect_alternation() {
        let s = atg_referee(&[rec(0, &[1., 3., 5.])], &[rec(0, &[2., 4., 6.])]).unwrap();
        let g = s.games[0];
        assert_eq!(g.length(), 6);
        assert_eq!(g.natural().outcome, AtgOutcome::NoViolation);
        assert_eq!(g.b_first.length, 1);
    }

    #[test]
    fn double_tick_violates() {
        let s = atg_referee(&[rec(0, &[1., 2.])], &[rec(0, &[3.])]).unwrap();
        let p = s.games[0].natural();
        assert_eq!(p.alternations, 1);
        assert_eq!(p.length, 2);
        assert_eq!(p.outcome, AtgOutcome::Winner(Player::B));
    }

    #[test]
    fn equal_times_draw() {
        let p = play(&[1.0, 2.0], &[1.5, 2.0], Player::A);
        assert_eq!(p.outcome, AtgOutcome::Draw);
        assert_eq!(p.length, 2);
        assert_eq!(p.alternations, 2);
    }

    #[test]
    fn unpaired_ids_fail() {
        assert!(matches!(
            atg_referee(&[rec(0, &[1.0])], &[rec(1, &[1.0])]),
            Err(Error::Pairing(_))
        ));
        assert!(matches!(
            atg_referee(&[rec(0, &[1.0]), rec(0, &[2.0])], &[rec(0, &[1.0])]),
            Err(Error::Pairing(_))
        ));
    }
}
