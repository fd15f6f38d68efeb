//! Consistency checks over the search lists, used by tests and debug runs.

use super::engine::{Place, Search};
use super::path_pair::{Hidden, BOUND_SLACK};
use crate::coverage::CoverageSet;
use crate::graph::{EdgeId, EdgeStatus, SearchGraph, VertexId};
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Interns AP edge sequences so equal APs compare equal across arena slots.
#[derive(Default)]
struct Signatures {
    ids: HashMap<(u32, EdgeId), u32>,
}

impl Signatures {
    fn child(&mut self, parent: u32, edge: EdgeId) -> u32 {
        let next = self.ids.len() as u32 + 1;
        *self.ids.entry((parent, edge)).or_insert(next)
    }
}

impl Search {
    /// Boundedness and pair invariants of every OPEN and CLOSED pair, and no
    /// CLOSED pair whose PAP is dominated by one closed before it at the same vertex.
    pub fn audit_lists(&self, eps: f64, p: f64) -> AuditReport {
        let mut report = AuditReport::default();
        for (id, slot) in self.nodes.iter().enumerate() {
            if slot.place == Place::Detached {
                continue;
            }
            report.checked += 1;
            let pp = &slot.pp;
            if !pp.is_bounded(eps, p) {
                report.violations.push(format!(
                    "{:?} pair {id} at {} unbounded: AP ({}, {}) PAP ({}, {})",
                    slot.place,
                    pp.end,
                    pp.ap_len,
                    pp.ap_cov.count(),
                    pp.pap_len,
                    pp.pap_cov.count()
                ));
            }
            if pp.pap_len > pp.ap_len + BOUND_SLACK || !pp.pap_cov.is_superset(&pp.ap_cov) {
                report
                    .violations
                    .push(format!("pair {id}: PAP does not bound AP"));
            }
            if pp.kind == super::Kind::NT && !pp.edge_validated {
                report
                    .violations
                    .push(format!("pair {id}: NT with unvalidated edge"));
            }
            if pp.kind == super::Kind::T && !pp.subsumed.is_empty() {
                report
                    .violations
                    .push(format!("pair {id}: T with subsumed entries"));
            }
            if slot.place == Place::Closed && !pp.edge_validated {
                report
                    .violations
                    .push(format!("closed pair {id} has an unvalidated edge"));
            }
        }
        for bucket in &self.closed_at {
            for &a in bucket {
                for &b in bucket {
                    let (x, y) = (&self.nodes[a], &self.nodes[b]);
                    if x.closed_seq < y.closed_seq && x.pp.pap_dominates(&y.pp) {
                        report.violations.push(format!(
                            "closed pair {b} is dominated by earlier closed pair {a} at {}",
                            x.pp.end
                        ));
                    }
                }
            }
        }
        report
    }

    pub(super) fn check_lists(&mut self, eps: f64, p: f64) {
        let report = self.audit_lists(eps, p);
        self.violations.extend(report.violations);
    }

    /// Every pair created since the lists were seeded must still be
    /// represented: it is CLOSED, or it or one of its AP prefixes is in OPEN
    /// or in a subsumed list, crosses a colliding edge, or has its PAP
    /// dominated by the AP of a represented pair at the same vertex.
    ///
    /// Requires a search built with `debug` on.
    pub fn audit_accounting<G: SearchGraph>(&self, g: &G) -> AuditReport {
        let mut report = AuditReport::default();
        if !self.config().debug {
            report
                .violations
                .push("accounting audit needs debug mode".into());
            return report;
        }
        let mut sigs = Signatures::default();
        let mut node_sig = Vec::with_capacity(self.nodes.len());
        for slot in &self.nodes {
            let s = match (slot.pp.pred, slot.pp.edge) {
                (Some(u), Some(e)) => sigs.child(node_sig[u], e),
                _ => 0,
            };
            node_sig.push(s);
        }

        let mut represented: HashSet<u32> = HashSet::new();
        let mut closed: HashSet<u32> = HashSet::new();
        let mut dominators: HashMap<VertexId, Vec<(f64, CoverageSet)>> = HashMap::new();
        for (id, slot) in self.nodes.iter().enumerate() {
            if slot.place == Place::Detached {
                continue;
            }
            let pp = &slot.pp;
            if slot.place == Place::Open {
                represented.insert(node_sig[id]);
            } else {
                closed.insert(node_sig[id]);
            }
            dominators
                .entry(pp.end)
                .or_default()
                .push((pp.ap_len, pp.ap_cov.clone()));
            for &h in &pp.subsumed {
                let (s, ap) = self.materialize(g, &mut sigs, &node_sig, h, pp.end);
                represented.insert(s);
                dominators.entry(pp.end).or_default().push(ap);
            }
        }

        let dominated = |end: VertexId, pap_len: f64, pap_cov: &CoverageSet| {
            dominators.get(&end).is_some_and(|ds| {
                ds.iter()
                    .any(|(len, cov)| *len <= pap_len + BOUND_SLACK && cov.is_superset(pap_cov))
            })
        };
        let invalid =
            |e: Option<EdgeId>| e.is_some_and(|e| g.edge_status(e) == EdgeStatus::Invalid);

        struct Pending {
            record: usize,
            sig: u32,
            /// Signatures whose representation would cover this record.
            via_closed: Vec<u32>,
        }
        let mut accounted: HashSet<u32> = HashSet::new();
        let mut pending = Vec::new();
        for (ix, rec) in self.created.iter().enumerate() {
            report.checked += 1;
            let sig = match (rec.pred, rec.edge) {
                (Some(u), Some(e)) => sigs.child(node_sig[u], e),
                _ => 0,
            };
            if closed.contains(&sig)
                || represented.contains(&sig)
                || invalid(rec.edge)
                || dominated(rec.end, rec.pap_len, &rec.pap_cov)
            {
                accounted.insert(sig);
                continue;
            }
            let mut via_closed = Vec::new();
            let mut below = sig;
            let mut cur = rec.pred;
            let mut ok = false;
            while let Some(y) = cur {
                let pp = &self.nodes[y].pp;
                let s = node_sig[y];
                if represented.contains(&s)
                    || invalid(pp.edge)
                    || dominated(pp.end, pp.pap_len, &pp.pap_cov)
                {
                    ok = true;
                    break;
                }
                if closed.contains(&s) {
                    via_closed.push(below);
                }
                below = s;
                cur = pp.pred;
            }
            if ok {
                accounted.insert(sig);
            } else {
                pending.push(Pending {
                    record: ix,
                    sig,
                    via_closed,
                });
            }
        }
        loop {
            let before = pending.len();
            pending.retain(|p| {
                if p.via_closed.iter().any(|s| accounted.contains(s)) {
                    accounted.insert(p.sig);
                    false
                } else {
                    true
                }
            });
            if pending.len() == before {
                break;
            }
        }
        for p in pending {
            let rec = &self.created[p.record];
            report.violations.push(format!(
                "created pair #{} at {} (PAP {}, {}) is no longer represented",
                p.record,
                rec.end,
                rec.pap_len,
                rec.pap_cov.count()
            ));
        }
        report
    }

    fn materialize<G: SearchGraph>(
        &self,
        g: &G,
        sigs: &mut Signatures,
        node_sig: &[u32],
        h: Hidden,
        end: VertexId,
    ) -> (u32, (f64, CoverageSet)) {
        match (h.pred, h.edge) {
            (Some(u), Some(e)) => {
                let pred = &self.nodes[u].pp;
                let len = g.edge_from(e, pred.end).map_or(f64::INFINITY, |r| r.length);
                (
                    sigs.child(node_sig[u], e),
                    (pred.ap_len + len, pred.ap_cov.union(g.vertex_coverage(end))),
                )
            }
            _ => {
                let start = self.start.expect("initialized");
                (0, (0.0, g.vertex_coverage(start).clone()))
            }
        }
    }
}
