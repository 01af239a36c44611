use crate::lks::{Lasso, StateId, TypedLks};
use crate::seltl::{eval_lasso, BoundFormula};

use super::{CheckError, CheckResult, Stats};

pub const DEFAULT_ORACLE_CAP: u64 = 5_000_000;

/// Enumerates every lasso of length at most `bound`, in the same order as
/// [`super::find_counterexample`], and returns the first one that `phi`
/// rejects. Gives up after `cap` lassos.
pub fn oracle_find(
    lks: &TypedLks,
    phi: &BoundFormula,
    bound: usize,
    cap: u64,
) -> Result<CheckResult, CheckError> {
    if bound == 0 {
        return Err(CheckError::ZeroBound);
    }
    let mut e = Enum {
        lks,
        phi,
        cap,
        seen: 0,
        pi: Lasso {
            states: Vec::new(),
            events: Vec::new(),
            loop_start: 0,
        },
    };
    for len in 1..=bound {
        for &s in lks.initial() {
            if e.walk(len, s, None)? {
                let stats = Stats {
                    query_ms: 0.0,
                    states_visited: e.seen,
                };
                return Ok(CheckResult::CounterExample(e.pi, stats));
            }
        }
    }
    Ok(CheckResult::Valid(bound))
}

struct Enum<'a> {
    lks: &'a TypedLks,
    phi: &'a BoundFormula,
    cap: u64,
    seen: u64,
    pi: Lasso,
}

impl Enum<'_> {
    /// Extends the partial lasso with `s`; `rem` positions remain including
    /// this one. `loop_at` is the loop-start state once the loop has begun.
    fn walk(
        &mut self,
        rem: usize,
        s: StateId,
        loop_at: Option<StateId>,
    ) -> Result<bool, CheckError> {
        if loop_at.is_none() && rem > 1 && self.extend(rem, s, None)? {
            return Ok(true);
        }
        let loop_at = match loop_at {
            Some(l) => l,
            None => {
                self.pi.loop_start = self.pi.states.len();
                s
            }
        };
        self.extend(rem, s, Some(loop_at))
    }

    fn extend(
        &mut self,
        rem: usize,
        s: StateId,
        loop_at: Option<StateId>,
    ) -> Result<bool, CheckError> {
        self.pi.states.push(s);
        for edge in self.lks.edges(s) {
            for &e in &edge.events {
                self.pi.events.push(e);
                let done = match loop_at {
                    Some(l) if rem == 1 => edge.target == l && self.refutes()?,
                    _ => self.walk(rem - 1, edge.target, loop_at)?,
                };
                if done {
                    return Ok(true);
                }
                self.pi.events.pop();
            }
        }
        self.pi.states.pop();
        Ok(false)
    }

    fn refutes(&mut self) -> Result<bool, CheckError> {
        self.seen += 1;
        if self.seen > self.cap {
            return Err(CheckError::CapExceeded(self.cap));
        }
        Ok(!eval_lasso(self.phi, self.lks, &self.pi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lks::tests::toggle;
    use crate::seltl::{bind, parse_formula};

    #[test]
    fn enumeration_counts() {
        // Lassos of TOGGLE up to length 2: s0 Set[A|B] s1 back to s0 (2),
        // and s0 Set[A|B] (s1 Stay)^ω (2).
        let lks = toggle();
        let f = bind(&parse_formula("true").unwrap(), &lks).unwrap();
        assert_eq!(
            oracle_find(&lks, &f, 2, 100).unwrap(),
            CheckResult::Valid(2)
        );
        assert_eq!(oracle_find(&lks, &f, 2, 3), Err(CheckError::CapExceeded(3)));
    }

    #[test]
    fn toggle_examples() {
        let lks = toggle();
        let g = bind(&parse_formula("G !p").unwrap(), &lks).unwrap();
        let r = oracle_find(&lks, &g, 4, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(
            r.counterexample().unwrap().display(&lks).to_string(),
            "s0·Set[A]·(s1·Stay[])^ω"
        );
        let f = bind(&parse_formula("F p").unwrap(), &lks).unwrap();
        assert_eq!(
            oracle_find(&lks, &f, 6, DEFAULT_ORACLE_CAP).unwrap(),
            CheckResult::Valid(6)
        );
    }
}
