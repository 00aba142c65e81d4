//! Trustworthiness broadcast: countdown counters, iteration-mark vectors,
//! legitimate-player lists and ranks.
//!
//! When a player's trusted set changes it arms a countdown equal to the
//! total player count; counters and mark vectors propagate by max over
//! trusted in-neighbors within the same iteration's exchange. While a
//! player's counter is nonzero the seeking state is re-initialized, so all
//! legitimate players release simultaneously once the countdown drains. The
//! mark vector ages out players whose iteration count lags by the player
//! count, which yields the legitimate list and each player's rank in it.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

/// Broadcast-visible state of one player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastState {
    /// Remaining re-initialization iterations.
    pub iota: u32,
    /// Latest known iteration count per player, fixed length `n_total`.
    pub marks: Vec<u64>,
    /// Current view of the legitimate players, ascending ids.
    pub legit_list: Vec<usize>,
    /// 1-based position of the owner inside `legit_list`.
    pub own_rank: usize,
}

impl BroadcastState {
    /// Initial state: zero counter, zero marks, everyone assumed present.
    pub fn initial(own: usize, n_total: usize) -> Self {
        BroadcastState {
            iota: 0,
            marks: alloc::vec![0; n_total],
            legit_list: (0..n_total).collect(),
            own_rank: own + 1,
        }
    }
}

/// What travels in one broadcast exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastMessage {
    pub marks: Vec<u64>,
    pub iota: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BroadcastError {
    SelfMissingFromList { player: usize, k: u64 },
}

impl fmt::Display for BroadcastError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BroadcastError::SelfMissingFromList { player, k } => {
                write!(f, "player {player} dropped out of its own legitimate list at iteration {k}")
            }
        }
    }
}

impl core::error::Error for BroadcastError {}

/// 1-based position of `own` in an ascending list of ids.
pub fn recompute_rank(legit_list: &[usize], own: usize) -> Result<usize, BroadcastError> {
    legit_list
        .iter()
        .position(|&j| j == own)
        .map(|p| p + 1)
        .ok_or(BroadcastError::SelfMissingFromList { player: own, k: 0 })
}

/// One synchronous broadcast exchange at iteration `k`.
///
/// Per honest player: arm the counter when the trusted set changed, stamp the
/// own mark with `k`, exchange, then take elementwise maxima of marks and the
/// maximum counter over trusted in-neighbors, and recompute the list (ids
/// whose mark lags the own mark by less than the player count) and the rank.
/// Entries of `overrides` replace the outgoing message of that node
/// (adversarial content); `None` means the node broadcasts honestly.
///
/// Counter decrement and state resets belong to the caller's update phase.
pub fn broadcast_step(
    states: &mut [BroadcastState],
    trusted: &[BTreeSet<usize>],
    k: u64,
    changed: &[bool],
    overrides: &[Option<BroadcastMessage>],
) -> Result<(), BroadcastError> {
    let n = states.len();
    for i in 0..n {
        if overrides[i].is_some() {
            continue;
        }
        if changed[i] {
            states[i].iota = n as u32;
        }
        states[i].marks[i] = k;
    }
    let outgoing: Vec<BroadcastMessage> = (0..n)
        .map(|i| match &overrides[i] {
            Some(m) => m.clone(),
            None => BroadcastMessage { marks: states[i].marks.clone(), iota: states[i].iota },
        })
        .collect();
    for i in 0..n {
        if overrides[i].is_some() {
            continue;
        }
        let mut marks = states[i].marks.clone();
        let mut iota = states[i].iota;
        for &j in &trusted[i] {
            let msg = &outgoing[j];
            iota = iota.max(msg.iota);
            for (m, &incoming) in marks.iter_mut().zip(&msg.marks) {
                *m = (*m).max(incoming);
            }
        }
        let own_mark = marks[i];
        let list: Vec<usize> = (0..n)
            .filter(|&j| own_mark.saturating_sub(marks[j]) <= n as u64 - 1)
            .collect();
        let rank = recompute_rank(&list, i)
            .map_err(|_| BroadcastError::SelfMissingFromList { player: i, k })?;
        let st = &mut states[i];
        st.marks = marks;
        st.iota = iota;
        st.legit_list = list;
        st.own_rank = rank;
    }
    Ok(())
}

/// Countdown-and-reset bookkeeping for the caller's update phase: returns
/// true (and decrements) when the player must re-initialize this iteration.
pub fn consume_reset(state: &mut BroadcastState) -> bool {
    if state.iota != 0 {
        state.iota -= 1;
        true
    } else {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rank_examples() {
        assert_eq!(recompute_rank(&[1, 2, 3, 5], 5).unwrap(), 4);
        assert_eq!(recompute_rank(&[7], 7).unwrap(), 1);
        assert!(recompute_rank(&[1, 2, 3, 5], 4).is_err());
    }

    /// Five nodes, 0-based: legit 0,1,2,4 on the cycle 0→1→2→4→0, malicious
    /// node 3 feeding node 0.
    fn five_node_trusted(drop_3_from_0: bool) -> Vec<BTreeSet<usize>> {
        let mut t = vec![
            BTreeSet::from([0, 4, 3]),
            BTreeSet::from([1, 0]),
            BTreeSet::from([2, 1]),
            BTreeSet::from([3]),
            BTreeSet::from([4, 2]),
        ];
        if drop_3_from_0 {
            t[0].remove(&3);
        }
        t
    }

    fn stale_adversary(n: usize) -> BroadcastMessage {
        BroadcastMessage { marks: vec![0; n], iota: 0 }
    }

    #[test]
    fn counter_wave_matches_published_schedule() {
        // the classification change at t_f arms node 0; the countdown then
        // reaches each legit node one hop per iteration and every counter
        // drains at exactly t_f + 5
        let n = 5usize;
        let t_f: u64 = 4;
        let horizon = t_f + 8;
        let mut states: Vec<BroadcastState> =
            (0..n).map(|i| BroadcastState::initial(i, n)).collect();
        let mut resets: Vec<Vec<bool>> = Vec::new();
        let mut iota_log: Vec<Vec<u32>> = Vec::new();
        for k in 1..=horizon {
            let changed = vec![k == t_f, false, false, false, false];
            let trusted = five_node_trusted(k >= t_f);
            let overrides = vec![None, None, None, Some(stale_adversary(n)), None];
            broadcast_step(&mut states, &trusted, k, &changed, &overrides).unwrap();
            iota_log.push(states.iter().map(|s| s.iota).collect());
            let mut r = vec![false; n];
            for (i, st) in states.iter_mut().enumerate() {
                if i != 3 {
                    r[i] = consume_reset(st);
                }
            }
            resets.push(r);
        }
        let iota_at = |k: u64, i: usize| iota_log[(k - 1) as usize][i];
        let np = n as u32;
        // stage sets: {0}, {0,1}, {0,1,2}, {0,1,2,4}
        assert_eq!(iota_at(t_f, 0), np);
        assert_eq!(iota_at(t_f, 2), 0);
        for i in [0usize, 1] {
            assert_eq!(iota_at(t_f + 1, i), np - 1, "node {i}");
        }
        for i in [0usize, 1, 2] {
            assert_eq!(iota_at(t_f + 2, i), np - 2, "node {i}");
        }
        for i in [0usize, 1, 2, 4] {
            assert_eq!(iota_at(t_f + 3, i), np - 3, "node {i}");
            assert_eq!(iota_at(t_f + 4, i), np - 4, "node {i}");
        }
        // simultaneous release at t_f + n and quiet afterwards
        for k in (t_f + n as u64)..=horizon {
            for i in [0usize, 1, 2, 4] {
                assert_eq!(iota_at(k, i), 0, "node {i} at {k}");
            }
        }
        // resets happen exactly while the counter is armed
        for i in [0usize, 1, 2, 4] {
            for k in (t_f + 5)..=horizon {
                assert!(!resets[(k - 1) as usize][i]);
            }
        }
        assert!(resets[(t_f - 1) as usize][0], "origin resets at t_f");
    }

    #[test]
    fn no_changes_means_no_counters_and_stable_marks() {
        let n = 5usize;
        let mut states: Vec<BroadcastState> =
            (0..n).map(|i| BroadcastState::initial(i, n)).collect();
        for k in 1..=12u64 {
            let trusted = five_node_trusted(false);
            let overrides = vec![None, None, None, Some(stale_adversary(n)), None];
            broadcast_step(&mut states, &trusted, k, &vec![false; n], &overrides).unwrap();
            for i in [0usize, 1, 2, 4] {
                assert_eq!(states[i].iota, 0);
                assert!(!consume_reset(&mut states[i]));
            }
            // legit marks stay within n−1 of each other
            let legit_marks: Vec<u64> = [0usize, 1, 2, 4].iter().map(|&i| states[i].marks[i]).collect();
            let lo = *legit_marks.iter().min().unwrap();
            let hi = *legit_marks.iter().max().unwrap();
            assert!(hi - lo <= n as u64 - 1);
        }
    }

    #[test]
    fn stale_malicious_node_ages_out_of_lists() {
        // node 3 never refreshes its own mark, so every legit node drops it
        // once the gap reaches the player count; afterwards lists agree on
        // the legitimate set and ranks form a bijection
        let n = 5usize;
        let mut states: Vec<BroadcastState> =
            (0..n).map(|i| BroadcastState::initial(i, n)).collect();
        let t_f: u64 = 3;
        let horizon = t_f + 2 * n as u64;
        for k in 1..=horizon {
            let changed = vec![k == t_f, false, false, false, false];
            let trusted = five_node_trusted(k >= t_f);
            let overrides = vec![None, None, None, Some(stale_adversary(n)), None];
            broadcast_step(&mut states, &trusted, k, &changed, &overrides).unwrap();
            for i in [0usize, 1, 2, 4] {
                consume_reset(&mut states[i]);
            }
        }
        for i in [0usize, 1, 2, 4] {
            assert!(states[i].marks[3] < t_f, "mark of the silent node stays stale");
            assert_eq!(states[i].legit_list, vec![0, 1, 2, 4], "node {i}");
        }
        let ranks: Vec<usize> = [0usize, 1, 2, 4].iter().map(|&i| states[i].own_rank).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
    }
}
