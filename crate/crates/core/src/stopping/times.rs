use crate::error::{Error, Result};
use crate::lattice::{NodeId, RecombiningLattice};

/// Base-2 logarithm of the largest number of rules
/// [`enumerate_stopping_times`] will produce.
pub const ENUMERATION_CAP_LOG2: usize = 20;

/// Markovian stopping rule: stop at the first node on the path whose flag is
/// set. Terminal nodes are always flagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeStoppingTime {
    flags: Vec<Vec<bool>>,
}

impl LatticeStoppingTime {
    pub fn from_flags(lat: &RecombiningLattice, mut flags: Vec<Vec<bool>>) -> Result<Self> {
        let n = lat.n_steps();
        if flags.len() != n + 1 || (0..=n).any(|i| flags[i].len() != lat.width(i)) {
            return Err(Error::Shape(
                "stopping flags do not match the lattice".into(),
            ));
        }
        flags[n].iter_mut().for_each(|f| *f = true);
        Ok(LatticeStoppingTime { flags })
    }

    /// Stop at every node of step `k`.
    pub fn at_step(lat: &RecombiningLattice, k: usize) -> Result<Self> {
        if k > lat.n_steps() {
            return Err(Error::invalid(
                "step",
                format!("{k} exceeds the lattice horizon"),
            ));
        }
        let flags = (0..=lat.n_steps())
            .map(|i| vec![i == k; lat.width(i)])
            .collect();
        Self::from_flags(lat, flags)
    }

    pub fn at_root(lat: &RecombiningLattice) -> Self {
        Self::at_step(lat, 0).expect("step 0 exists")
    }

    pub fn terminal(lat: &RecombiningLattice) -> Self {
        Self::at_step(lat, lat.n_steps()).expect("terminal step exists")
    }

    pub fn flags(&self) -> &[Vec<bool>] {
        &self.flags
    }

    pub fn stops_at(&self, step: usize, index: usize) -> bool {
        self.flags[step][index]
    }

    /// Nodes where the rule stops for paths started at `start`. Every path
    /// from a start node reaches one of them.
    pub fn hit_nodes_from(&self, lat: &RecombiningLattice, start: &[NodeId]) -> Vec<NodeId> {
        let n = lat.n_steps();
        let mut live: Vec<Vec<bool>> = (0..=n).map(|i| vec![false; lat.width(i)]).collect();
        for s in start {
            live[s.step][s.index] = true;
        }
        let mut hits = Vec::new();
        for i in 0..=n {
            for j in 0..lat.width(i) {
                if !live[i][j] {
                    continue;
                }
                if self.flags[i][j] {
                    hits.push(NodeId { step: i, index: j });
                } else {
                    for (c, p, _) in lat.children(i, j) {
                        if p > 0.0 {
                            live[i + 1][c] = true;
                        }
                    }
                }
            }
        }
        hits
    }

    /// Nodes where the rule stops for paths started at the root.
    pub fn hit_nodes(&self, lat: &RecombiningLattice) -> Vec<NodeId> {
        self.hit_nodes_from(lat, &[NodeId { step: 0, index: 0 }])
    }
}

/// All Markovian stopping rules on a small lattice: every subset of the
/// non-terminal nodes as stopping region.
pub fn enumerate_stopping_times(lat: &RecombiningLattice) -> Result<Vec<LatticeStoppingTime>> {
    let n = lat.n_steps();
    let interior: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..lat.width(i)).map(move |j| (i, j)))
        .collect();
    if interior.len() > ENUMERATION_CAP_LOG2 {
        return Err(Error::EnumerationTooLarge {
            interior_nodes: interior.len(),
            cap: ENUMERATION_CAP_LOG2,
        });
    }
    let base: Vec<Vec<bool>> = (0..=n).map(|i| vec![false; lat.width(i)]).collect();
    (0..1u64 << interior.len())
        .map(|mask| {
            let mut flags = base.clone();
            for (b, &(i, j)) in interior.iter().enumerate() {
                flags[i][j] = mask >> b & 1 == 1;
            }
            LatticeStoppingTime::from_flags(lat, flags)
        })
        .collect()
}
