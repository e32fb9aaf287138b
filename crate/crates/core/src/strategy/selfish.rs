//! The selfish-mining state machine at the level of abstract lead states.

/// Lead of the private branch over the public chain, or the contest that
/// follows publishing a single-block lead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelfishState {
    Lead(u32),
    Contest,
}

impl SelfishState {
    /// Lead encoded as an integer, with the contest state as -1.
    pub fn as_lead(self) -> i64 {
        match self {
            SelfishState::Lead(n) => i64::from(n),
            SelfishState::Contest => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelfishEvent {
    /// The selfish pool found a block.
    MyBlock,
    /// Someone else extended the public chain by one block.
    OtherPublicBlock,
}

/// One step of the selfish Markov chain. Returns the next state and the
/// number of the pool's blocks published in response.
pub fn selfish_transition(state: SelfishState, event: SelfishEvent) -> (SelfishState, u32) {
    use SelfishEvent::*;
    use SelfishState::*;
    match (state, event) {
        // mining on its own tied tip and publishing it wins the contest
        (Contest, MyBlock) => (Lead(0), 1),
        (Contest, OtherPublicBlock) => (Lead(0), 0),
        (Lead(n), MyBlock) => (Lead(n + 1), 0),
        (Lead(0), OtherPublicBlock) => (Lead(0), 0),
        (Lead(1), OtherPublicBlock) => (Contest, 1),
        (Lead(2), OtherPublicBlock) => (Lead(0), 2),
        (Lead(n), OtherPublicBlock) => (Lead(n - 1), 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SelfishEvent::*;
    use SelfishState::*;

    #[test]
    fn transitions_follow_markov_chain() {
        assert_eq!(selfish_transition(Lead(0), MyBlock), (Lead(1), 0));
        assert_eq!(selfish_transition(Lead(1), OtherPublicBlock), (Contest, 1));
        assert_eq!(selfish_transition(Lead(2), OtherPublicBlock), (Lead(0), 2));
        assert_eq!(selfish_transition(Lead(3), OtherPublicBlock), (Lead(2), 1));
        assert_eq!(selfish_transition(Lead(7), MyBlock), (Lead(8), 0));
        assert_eq!(selfish_transition(Contest, MyBlock), (Lead(0), 1));
        assert_eq!(selfish_transition(Contest, OtherPublicBlock), (Lead(0), 0));
        assert_eq!(Contest.as_lead(), -1);
    }

    #[test]
    fn never_publishes_more_than_lead() {
        for n in 0..50 {
            for event in [MyBlock, OtherPublicBlock] {
                let (_, published) = selfish_transition(Lead(n), event);
                assert!(published <= n);
            }
        }
    }
}
