//! Functional BFS: a queue oracle, the three-bitmap push/pull iteration
//! kernels and the hybrid mode scheduler.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bitmap::Bitmap;
use crate::graph::Graph;
use crate::{Level, VertexId, UNREACHED};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BfsError {
    #[error("root {root} out of range for {num_vertices} vertices")]
    RootOutOfRange { root: VertexId, num_vertices: usize },
    #[error("invalid mode policy: {0}")]
    Policy(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Push,
    Pull,
}

/// How the scheduler picks push or pull for each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModePolicy {
    /// Frontier-density switching. Push turns into pull once the frontier's
    /// outgoing edges exceed `push_to_pull_threshold * |E|`; pull turns back
    /// into push once the frontier holds fewer than
    /// `pull_to_push_threshold * |V|` vertices. The first iteration is push.
    Adaptive {
        push_to_pull_threshold: f64,
        pull_to_push_threshold: f64,
    },
    /// Pull for iterations `pull_from..pull_until`, push otherwise.
    FixedSchedule { pull_from: u32, pull_until: u32 },
}

impl Default for ModePolicy {
    fn default() -> Self {
        Self::hybrid()
    }
}

impl ModePolicy {
    pub const DEFAULT_ALPHA: f64 = 0.05;
    pub const DEFAULT_BETA: f64 = 0.02;

    pub fn hybrid() -> Self {
        Self::Adaptive {
            push_to_pull_threshold: Self::DEFAULT_ALPHA,
            pull_to_push_threshold: Self::DEFAULT_BETA,
        }
    }

    pub fn push_only() -> Self {
        Self::FixedSchedule {
            pull_from: u32::MAX,
            pull_until: u32::MAX,
        }
    }

    pub fn pull_only() -> Self {
        Self::FixedSchedule {
            pull_from: 0,
            pull_until: u32::MAX,
        }
    }

    pub fn validate(&self) -> Result<(), BfsError> {
        match *self {
            Self::Adaptive {
                push_to_pull_threshold: a,
                pull_to_push_threshold: b,
            } => {
                if !(a > 0.0 && a < 1.0) {
                    return Err(BfsError::Policy("push_to_pull_threshold must be in (0, 1)"));
                }
                if !(b > 0.0 && b < 1.0) {
                    return Err(BfsError::Policy("pull_to_push_threshold must be in (0, 1)"));
                }
                Ok(())
            }
            Self::FixedSchedule { pull_from, pull_until } if pull_from > pull_until => {
                Err(BfsError::Policy("pull_from must not exceed pull_until"))
            }
            Self::FixedSchedule { .. } => Ok(()),
        }
    }
}

/// Counters for one level-synchronous iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStats {
    pub mode: Mode,
    /// Frontier size in push mode, unvisited count in pull mode.
    pub active_or_unvisited_count: u64,
    pub edges_examined: u64,
    pub vertices_activated: u64,
    pub offset_words_read: u64,
}

impl IterationStats {
    pub fn empty(mode: Mode) -> Self {
        Self {
            mode,
            active_or_unvisited_count: 0,
            edges_examined: 0,
            vertices_activated: 0,
            offset_words_read: 0,
        }
    }
}

/// Working set of the three-bitmap algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsState {
    pub level: Vec<Level>,
    pub current_frontier: Bitmap,
    pub next_frontier: Bitmap,
    pub visited_map: Bitmap,
    pub bfs_level: Level,
}

impl BfsState {
    pub fn new(num_vertices: usize, root: VertexId) -> Result<Self, BfsError> {
        if root as usize >= num_vertices {
            return Err(BfsError::RootOutOfRange { root, num_vertices });
        }
        let mut s = Self {
            level: vec![UNREACHED; num_vertices],
            current_frontier: Bitmap::new(num_vertices),
            next_frontier: Bitmap::new(num_vertices),
            visited_map: Bitmap::new(num_vertices),
            bfs_level: 0,
        };
        s.level[root as usize] = 0;
        s.current_frontier.set(root as usize);
        s.visited_map.set(root as usize);
        Ok(s)
    }

    #[inline]
    pub fn activate(&mut self, v: usize) {
        self.next_frontier.set(v);
        self.visited_map.set(v);
        self.level[v] = self.bfs_level + 1;
    }

    /// Swap frontiers, clear the new next frontier, bump the level.
    pub fn advance(&mut self) {
        core::mem::swap(&mut self.current_frontier, &mut self.next_frontier);
        self.next_frontier.clear_all();
        self.bfs_level += 1;
    }

    pub fn frontier_out_edges(&self, g: &Graph) -> u64 {
        self.current_frontier.iter_ones().map(|v| g.out_degree(v as VertexId) as u64).sum()
    }
}

/// Every active vertex writes its unvisited children.
pub fn push_iteration(g: &Graph, s: &mut BfsState) -> IterationStats {
    let mut st = IterationStats::empty(Mode::Push);
    let BfsState {
        level,
        current_frontier,
        next_frontier,
        visited_map,
        bfs_level,
    } = s;
    for u in current_frontier.iter_ones() {
        st.active_or_unvisited_count += 1;
        st.offset_words_read += 1;
        for &v in g.out_neighbors(u as VertexId) {
            st.edges_examined += 1;
            let v = v as usize;
            if !visited_map.get(v) {
                next_frontier.set(v);
                visited_map.set(v);
                level[v] = *bfs_level + 1;
                st.vertices_activated += 1;
            }
        }
    }
    st
}

/// Every unvisited vertex looks for an active parent, stopping at the first.
pub fn pull_iteration(g: &Graph, s: &mut BfsState) -> IterationStats {
    pull_iteration_with(g, s, true)
}

/// Pull iteration; with `early_exit == false` every parent is scanned.
pub fn pull_iteration_with(g: &Graph, s: &mut BfsState, early_exit: bool) -> IterationStats {
    let mut st = IterationStats::empty(Mode::Pull);
    for i in 0..g.num_vertices() {
        if s.visited_map.get(i) {
            continue;
        }
        st.active_or_unvisited_count += 1;
        st.offset_words_read += 1;
        let mut found = false;
        for &u in g.in_neighbors(i as VertexId) {
            st.edges_examined += 1;
            if s.current_frontier.get(u as usize) {
                found = true;
                if early_exit {
                    break;
                }
            }
        }
        if found {
            s.activate(i);
            st.vertices_activated += 1;
        }
    }
    st
}

/// Mode for the iteration about to run. `prev` is the previous iteration's
/// stats (`None` before the first one).
pub fn decide_mode(policy: &ModePolicy, prev: Option<&IterationStats>, g: &Graph, s: &BfsState) -> Mode {
    match *policy {
        ModePolicy::FixedSchedule { pull_from, pull_until } => {
            if (pull_from..pull_until).contains(&s.bfs_level) {
                Mode::Pull
            } else {
                Mode::Push
            }
        }
        ModePolicy::Adaptive {
            push_to_pull_threshold,
            pull_to_push_threshold,
        } => match prev.map(|p| p.mode) {
            None => Mode::Push,
            Some(Mode::Push) => {
                let frontier_edges = s.frontier_out_edges(g) as f64;
                if frontier_edges > push_to_pull_threshold * g.num_edges() as f64 {
                    Mode::Pull
                } else {
                    Mode::Push
                }
            }
            Some(Mode::Pull) => {
                let frontier = s.current_frontier.count_ones() as f64;
                if frontier < pull_to_push_threshold * g.num_vertices() as f64 {
                    Mode::Push
                } else {
                    Mode::Pull
                }
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsRun {
    pub levels: Vec<Level>,
    pub iterations: Vec<IterationStats>,
}

impl BfsRun {
    pub fn total_edges_examined(&self) -> u64 {
        self.iterations.iter().map(|i| i.edges_examined).sum()
    }

    pub fn modes(&self) -> Vec<Mode> {
        self.iterations.iter().map(|i| i.mode).collect()
    }
}

pub fn run_bfs(g: &Graph, root: VertexId, policy: &ModePolicy) -> Result<BfsRun, BfsError> {
    policy.validate()?;
    let mut s = BfsState::new(g.num_vertices(), root)?;
    let mut iterations: Vec<IterationStats> = Vec::new();
    while s.current_frontier.any() {
        let stats = match decide_mode(policy, iterations.last(), g, &s) {
            Mode::Push => push_iteration(g, &mut s),
            Mode::Pull => pull_iteration(g, &mut s),
        };
        s.advance();
        iterations.push(stats);
    }
    Ok(BfsRun {
        levels: s.level,
        iterations,
    })
}

/// Plain queue BFS over outgoing edges.
pub fn bfs_oracle(g: &Graph, root: VertexId) -> Result<Vec<Level>, BfsError> {
    let n = g.num_vertices();
    if root as usize >= n {
        return Err(BfsError::RootOutOfRange { root, num_vertices: n });
    }
    let mut level = vec![UNREACHED; n];
    let mut queue = VecDeque::new();
    level[root as usize] = 0;
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        let next = level[u as usize] + 1;
        for &v in g.out_neighbors(u) {
            if level[v as usize] == UNREACHED {
                level[v as usize] = next;
                queue.push_back(v);
            }
        }
    }
    Ok(level)
}

/// Traversed edges for the throughput metric: the summed out-degree of every
/// visited vertex, each edge counted once.
pub fn traversed_edges(g: &Graph, levels: &[Level]) -> u64 {
    levels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != UNREACHED)
        .map(|(v, _)| g.out_degree(v as VertexId) as u64)
        .sum()
}
