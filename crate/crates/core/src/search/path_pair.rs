use crate::coverage::CoverageSet;
use crate::graph::{EdgeId, EdgeRef, EdgeStatus, VertexId};
use thiserror::Error;

/// Index of a path pair in the search arena.
pub type NodeId = usize;

/// Absolute slack applied toward acceptance in boundedness tests.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathPairError {
    #[error("edge {edge} does not leave vertex {vertex}")]
    BadEdge { edge: EdgeId, vertex: VertexId },
    #[error("cannot subsume a pair ending at {got} into one ending at {expected}")]
    VertexMismatch { expected: VertexId, got: VertexId },
}

/// Trivial pairs have never subsumed another pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    T,
    NT,
}

/// A subsumed pair, kept as its predecessor and incoming edge.
///
/// `pred == None` stands for the root pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hidden {
    pub pred: Option<NodeId>,
    pub edge: Option<EdgeId>,
}

impl Hidden {
    pub const ROOT: Hidden = Hidden {
        pred: None,
        edge: None,
    };
}

/// Search node: an achievable path (AP) kept as a predecessor link plus its
/// coverage and length, and a potentially achievable path (PAP) kept only as
/// coverage and length bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub end: VertexId,
    pub pred: Option<NodeId>,
    pub edge: Option<EdgeId>,
    pub ap_cov: CoverageSet,
    pub ap_len: f64,
    pub pap_cov: CoverageSet,
    pub pap_len: f64,
    pub kind: Kind,
    pub edge_validated: bool,
    pub subsumed: Vec<Hidden>,
}

impl PathPair {
    /// The pair whose AP and PAP are both the single start vertex.
    pub fn root(start: VertexId, coverage: &CoverageSet) -> Self {
        PathPair {
            end: start,
            pred: None,
            edge: None,
            ap_cov: coverage.clone(),
            ap_len: 0.0,
            pap_cov: coverage.clone(),
            pap_len: 0.0,
            kind: Kind::T,
            edge_validated: true,
            subsumed: Vec::new(),
        }
    }

    pub fn is_root(&self) -> bool {
        self.pred.is_none()
    }

    pub fn hidden(&self) -> Hidden {
        Hidden {
            pred: self.pred,
            edge: self.edge,
        }
    }

    pub fn is_bounded(&self, eps: f64, p: f64) -> bool {
        is_bounded(
            self.ap_len,
            self.ap_cov.count(),
            self.pap_len,
            self.pap_cov.count(),
            eps,
            p,
        )
    }

    /// PAP bounds no worse than `other`'s PAP.
    pub fn pap_dominates(&self, other: &PathPair) -> bool {
        self.pap_len <= other.pap_len && self.pap_cov.is_superset(&other.pap_cov)
    }

    /// AP no worse than `other`'s PAP, so `other` can never lead to a better plan.
    pub fn ap_dominates_pap(&self, other: &PathPair) -> bool {
        self.ap_len <= other.pap_len && self.ap_cov.is_superset(&other.pap_cov)
    }
}

/// `ap_len ≤ (1+ε)·pap_len` and `|ap_cov| ≥ p·|pap_cov|`, each with [`BOUND_SLACK`].
pub fn is_bounded(
    ap_len: f64,
    ap_count: usize,
    pap_len: f64,
    pap_count: usize,
    eps: f64,
    p: f64,
) -> bool {
    ap_len <= (1.0 + eps) * pap_len + BOUND_SLACK
        && ap_count as f64 + BOUND_SLACK >= p * pap_count as f64
}

/// `pp_u + e`, with `pp_u` stored at arena index `u_node`.
pub fn extend(
    pp_u: &PathPair,
    u_node: NodeId,
    e: EdgeRef,
    coverage_v: &CoverageSet,
    status: EdgeStatus,
) -> Result<PathPair, PathPairError> {
    if e.from != pp_u.end {
        return Err(PathPairError::BadEdge {
            edge: e.id,
            vertex: pp_u.end,
        });
    }
    Ok(PathPair {
        end: e.to,
        pred: Some(u_node),
        edge: Some(e.id),
        ap_cov: pp_u.ap_cov.union(coverage_v),
        ap_len: pp_u.ap_len + e.length,
        pap_cov: pp_u.pap_cov.union(coverage_v),
        pap_len: pp_u.pap_len + e.length,
        kind: Kind::T,
        edge_validated: status == EdgeStatus::Valid,
        subsumed: Vec::new(),
    })
}

/// `pp_1 ⊕ pp_2`: keeps `pp_1`'s AP and merges the PAP bounds.
///
/// `pp_2` is recorded in the subsumed list unless `pp_1`'s AP already
/// dominates `pp_2`'s PAP; `pp_2`'s own entries are always inherited.
pub fn subsume(pp_1: &PathPair, pp_2: &PathPair) -> Result<PathPair, PathPairError> {
    if pp_1.end != pp_2.end {
        return Err(PathPairError::VertexMismatch {
            expected: pp_1.end,
            got: pp_2.end,
        });
    }
    let mut subsumed = Vec::with_capacity(pp_1.subsumed.len() + pp_2.subsumed.len() + 1);
    subsumed.extend_from_slice(&pp_1.subsumed);
    if !pp_1.ap_dominates_pap(pp_2) {
        subsumed.push(pp_2.hidden());
    }
    subsumed.extend_from_slice(&pp_2.subsumed);
    Ok(PathPair {
        end: pp_1.end,
        pred: pp_1.pred,
        edge: pp_1.edge,
        ap_cov: pp_1.ap_cov.clone(),
        ap_len: pp_1.ap_len,
        pap_cov: pp_1.pap_cov.union(&pp_2.pap_cov),
        pap_len: pp_1.pap_len.min(pp_2.pap_len),
        kind: Kind::NT,
        edge_validated: pp_1.edge_validated,
        subsumed,
    })
}

/// Bounds of `pp_1 ⊕ pp_2` without building it.
pub fn subsume_is_bounded(pp_1: &PathPair, pp_2: &PathPair, eps: f64, p: f64) -> bool {
    let pap_count = pp_1.pap_cov.union_count(&pp_2.pap_cov);
    is_bounded(
        pp_1.ap_len,
        pp_1.ap_cov.count(),
        pp_1.pap_len.min(pp_2.pap_len),
        pap_count,
        eps,
        p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: usize = 8;

    fn cov(ix: &[usize]) -> CoverageSet {
        CoverageSet::from_indices(W, ix.iter().copied())
    }

    fn pair(ap_len: f64, ap: &[usize], pap_len: f64, pap: &[usize]) -> PathPair {
        PathPair {
            end: 0,
            pred: Some(0),
            edge: Some(0),
            ap_cov: cov(ap),
            ap_len,
            pap_cov: cov(pap),
            pap_len,
            kind: Kind::T,
            edge_validated: false,
            subsumed: vec![],
        }
    }

    fn edge(from: VertexId, to: VertexId, length: f64) -> EdgeRef {
        EdgeRef {
            id: 3,
            from,
            to,
            length,
        }
    }

    #[test]
    fn boundedness_examples() {
        let a = [0, 1, 2, 3, 4, 5, 6, 7];
        let wide = CoverageSet::from_indices(10, 0..10);
        let mut pp = pair(10.0, &a, 9.5, &a);
        pp.ap_cov = CoverageSet::from_indices(10, 0..9);
        pp.pap_cov = wide.clone();
        assert!(pp.is_bounded(0.1, 0.85));
        pp.ap_cov = CoverageSet::from_indices(10, 0..7);
        assert!(!pp.is_bounded(0.1, 0.85));
        let root = PathPair::root(0, &cov(&[1, 2]));
        for (eps, p) in [(0.0, 1.0), (5.0, 0.0), (0.0, 0.5)] {
            assert!(root.is_bounded(eps, p));
        }
    }

    #[test]
    fn extend_examples() {
        let u = pair(2.0, &[0], 1.5, &[0, 1]);
        let v = extend(&u, 7, edge(0, 1, 1.0), &cov(&[2]), EdgeStatus::Unknown).unwrap();
        assert_eq!((v.ap_len, v.ap_cov.clone()), (3.0, cov(&[0, 2])));
        assert_eq!((v.pap_len, v.pap_cov.clone()), (2.5, cov(&[0, 1, 2])));
        assert_eq!(
            (v.pred, v.end, v.kind, v.edge_validated),
            (Some(7), 1, Kind::T, false)
        );

        let w = extend(&u, 7, edge(0, 1, 0.5), &cov(&[]), EdgeStatus::Valid).unwrap();
        assert_eq!(
            (w.ap_cov.clone(), w.pap_cov.clone()),
            (u.ap_cov.clone(), u.pap_cov.clone())
        );
        assert_eq!((w.ap_len, w.pap_len), (2.5, 2.0));
        assert!(w.edge_validated);

        assert_eq!(
            extend(&u, 7, edge(4, 1, 1.0), &cov(&[]), EdgeStatus::Unknown),
            Err(PathPairError::BadEdge { edge: 3, vertex: 0 })
        );
    }

    #[test]
    fn subsume_examples() {
        // a,b,c,d = 0,1,2,3
        let p1 = pair(8.0, &[0, 1, 2], 8.0, &[0, 1, 2]);
        let p2 = pair(9.0, &[2, 3], 9.0, &[2, 3]);
        let r = subsume(&p1, &p2).unwrap();
        assert_eq!((r.pap_len, r.pap_cov.clone()), (8.0, cov(&[0, 1, 2, 3])));
        assert_eq!(
            (r.ap_len, r.ap_cov.clone(), r.kind),
            (8.0, cov(&[0, 1, 2]), Kind::NT)
        );

        let p1 = pair(5.0, &[0, 1], 5.0, &[0, 1]);
        let p2 = pair(6.0, &[0], 6.0, &[0]);
        assert!(subsume(&p1, &p2).unwrap().subsumed.is_empty());

        let mut p2 = pair(6.0, &[3], 6.0, &[3]);
        p2.pred = Some(42);
        p2.edge = Some(9);
        let inherited = [
            Hidden {
                pred: Some(1),
                edge: Some(1),
            },
            Hidden::ROOT,
        ];
        p2.subsumed = inherited.to_vec();
        let r = subsume(&p1, &p2).unwrap();
        assert_eq!(
            r.subsumed,
            vec![
                Hidden {
                    pred: Some(42),
                    edge: Some(9)
                },
                inherited[0],
                inherited[1]
            ]
        );

        // Dropped pp_2 still passes its entries on.
        let mut p2 = pair(6.0, &[0], 6.0, &[0]);
        p2.subsumed = inherited.to_vec();
        assert_eq!(subsume(&p1, &p2).unwrap().subsumed, inherited.to_vec());

        let mut other = p2.clone();
        other.end = 5;
        assert_eq!(
            subsume(&p1, &other),
            Err(PathPairError::VertexMismatch {
                expected: 0,
                got: 5
            })
        );
    }

    fn arb_bounded(eps: f64, p: f64) -> impl Strategy<Value = PathPair> {
        (
            proptest::collection::vec(0usize..W, 0..W),
            proptest::collection::vec(0usize..W, 0..W),
            0.0..20.0f64,
            0.0..1.0f64,
        )
            .prop_filter_map("bounded", move |(ap, extra, pap_len, stretch)| {
                let ap_cov = cov(&ap);
                let pap_cov = ap_cov.union(&cov(&extra));
                let ap_len = pap_len * (1.0 + eps * stretch);
                let pp = PathPair {
                    ap_cov,
                    pap_cov,
                    ap_len,
                    pap_len,
                    ..pair(0.0, &[], 0.0, &[])
                };
                pp.is_bounded(eps, p).then_some(pp)
            })
    }

    proptest! {
        #[test]
        fn extension_preserves_boundedness(
            pp in arb_bounded(0.5, 0.7),
            sv in proptest::collection::vec(0usize..W, 0..W),
            len in 0.001..10.0f64,
        ) {
            let e = extend(&pp, 0, edge(0, 1, len), &cov(&sv), EdgeStatus::Unknown).unwrap();
            prop_assert!(e.is_bounded(0.5, 0.7));
            prop_assert!(e.pap_len <= e.ap_len);
            prop_assert!(e.pap_cov.is_superset(&e.ap_cov));
        }

        #[test]
        fn subsume_bound_matches_built_pair(
            a in arb_bounded(0.3, 0.8),
            b in arb_bounded(0.3, 0.8),
        ) {
            let r = subsume(&a, &b).unwrap();
            prop_assert_eq!(subsume_is_bounded(&a, &b, 0.3, 0.8), r.is_bounded(0.3, 0.8));
            prop_assert!(r.pap_len <= r.ap_len);
            prop_assert!(r.pap_cov.is_superset(&r.ap_cov));
        }
    }
}
