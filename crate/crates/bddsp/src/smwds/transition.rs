use crate::model::{State, Step, TransitionFunction};

/// Dominating-set transition over the surviving vertices of one scenario.
///
/// Recourse variable `k` is the `k`-th survivor in ascending id order. The state is
/// the bitset of survivors still waiting to be dominated. A survivor whose closed
/// neighbourhood has been fully decided without dominating it is a violation: a
/// soft one (link `k` of the survivor) in capacity mode, a hard one otherwise.
#[derive(Clone, Debug)]
pub struct DominationTransition {
    words: usize,
    /// Closed neighbourhood of each survivor, as a bitset over survivors.
    closed: Vec<State>,
    /// Survivors whose closed neighbourhood ends at layer `k`.
    closes_at: Vec<State>,
    soft: bool,
}

fn set(bits: &mut State, i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

impl DominationTransition {
    /// `neighbours[k]` lists the survivor indices adjacent to survivor `k`.
    pub fn new(neighbours: &[Vec<usize>], soft: bool) -> Self {
        let n = neighbours.len();
        let words = n.div_ceil(64).max(1);
        let mut closed = vec![vec![0u64; words]; n];
        let mut closes_at = vec![vec![0u64; words]; n];
        for (k, nb) in neighbours.iter().enumerate() {
            set(&mut closed[k], k);
            let mut last = k;
            for &u in nb {
                set(&mut closed[k], u);
                last = last.max(u);
            }
            set(&mut closes_at[last], k);
        }
        DominationTransition {
            words,
            closed,
            closes_at,
            soft,
        }
    }
}

impl TransitionFunction for DominationTransition {
    fn initial_state(&self) -> State {
        let mut s = vec![0u64; self.words];
        for k in 0..self.closed.len() {
            set(&mut s, k);
        }
        s
    }

    fn step(&self, state: &State, var: usize, bit: bool) -> Step {
        let mut next = state.clone();
        if bit {
            for (w, c) in next.iter_mut().zip(&self.closed[var]) {
                *w &= !c;
            }
        }
        let mut links = Vec::new();
        for (i, (w, c)) in next.iter_mut().zip(&self.closes_at[var]).enumerate() {
            let mut lost = *w & c;
            if lost == 0 {
                continue;
            }
            if !self.soft {
                return Step::InfeasibleHard;
            }
            *w &= !lost;
            while lost != 0 {
                links.push(i * 64 + lost.trailing_zeros() as usize);
                lost &= lost - 1;
            }
        }
        if links.is_empty() {
            Step::Feasible(next)
        } else {
            Step::InfeasibleSoft { links, state: next }
        }
    }

    fn is_accepting(&self, state: &State) -> bool {
        state.iter().all(|&w| w == 0)
    }
}
