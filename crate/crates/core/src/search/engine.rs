use super::path_pair::{extend, subsume, subsume_is_bounded, Hidden, Kind, NodeId, PathPair};
use super::KeyOrder;
use crate::coverage::CoverageSet;
use crate::graph::{EdgeId, EdgeRef, EdgeStatus, SearchGraph, VertexId};
use log::trace;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub key: KeyOrder,
    /// Defer edge checks to pop time and to T-node subsumption. When off,
    /// every edge is checked before the pair crossing it is created.
    pub lazy: bool,
    /// Record invariant violations and every created pair for auditing.
    pub debug: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            key: KeyOrder::LengthFirst,
            lazy: true,
            debug: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    Open,
    Closed,
    /// Removed from both lists; the slot is kept so successors can trace back.
    Detached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Reusable,
    Boundary,
    NonReusable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    /// Recorded in a CLOSED pair whose PAP dominates it.
    DominatedByClosed(NodeId),
    /// Merged into an OPEN pair.
    SubsumedIntoOpen(NodeId),
    /// Inserted into OPEN, possibly after absorbing OPEN pairs.
    Inserted(NodeId),
    /// Its incoming edge turned out to be in collision.
    Discarded,
}

/// What one pop of OPEN did.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Empty,
    DroppedInvalid(NodeId),
    Goal(NodeId),
    Folded(NodeId),
    Expanded(NodeId),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub episodes: u64,
    pub pops: u64,
    pub expansions: u64,
    pub created: u64,
    pub dominated_by_closed: u64,
    pub subsumed_into_open: u64,
    pub absorbed: u64,
    pub dropped_invalid: u64,
    pub discarded_invalid: u64,
    pub released: u64,
    /// Node creations, pops and dominance comparisons.
    pub ops: u64,
}

/// A walk from the start vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub length: f64,
    pub coverage: CoverageSet,
}

#[derive(Debug, Clone)]
pub(super) struct Slot {
    pub(super) pp: PathPair,
    pub(super) place: Place,
    version: u32,
    /// Order in which the pair entered CLOSED.
    pub(super) closed_seq: u64,
}

/// A pair as it was created, kept in debug mode for the accounting audit.
#[derive(Debug, Clone)]
pub(super) struct Created {
    pub(super) pred: Option<NodeId>,
    pub(super) edge: Option<EdgeId>,
    pub(super) end: VertexId,
    pub(super) pap_cov: CoverageSet,
    pub(super) pap_len: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct HeapEntry {
    primary: f64,
    secondary: f64,
    id: NodeId,
    version: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.secondary.total_cmp(&other.secondary))
            .then(self.id.cmp(&other.id))
            .then(self.version.cmp(&other.version))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum ReleaseItem {
    Node(NodeId),
    Hidden(Hidden, VertexId),
}

#[derive(Debug, Clone, Default)]
pub struct Search {
    config: SearchConfig,
    pub(super) nodes: Vec<Slot>,
    heap: BinaryHeap<Reverse<HeapEntry>>,
    pub(super) open_at: Vec<Vec<NodeId>>,
    pub(super) closed_at: Vec<Vec<NodeId>>,
    open_len: usize,
    closed_len: usize,
    close_counter: u64,
    best: Option<NodeId>,
    pub(super) start: Option<VertexId>,
    watermark: usize,
    stats: SearchStats,
    memo: Vec<Option<NodeClass>>,
    memo_params: Option<(f64, f64)>,
    pub(super) created: Vec<Created>,
    pub(super) violations: Vec<String>,
    scratch: Vec<EdgeRef>,
}

impl Search {
    pub fn new(config: SearchConfig) -> Self {
        Search {
            config,
            ..Default::default()
        }
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// Forgets all lists; the next episode starts from the root pair.
    pub fn reset(&mut self) {
        let config = self.config;
        let stats = self.stats;
        *self = Search::new(config);
        self.stats = stats;
    }

    pub fn is_initialized(&self) -> bool {
        self.start.is_some()
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &PathPair {
        &self.nodes[id].pp
    }

    pub fn place(&self, id: NodeId) -> Place {
        self.nodes[id].place
    }

    pub fn open_len(&self) -> usize {
        self.open_len
    }

    pub fn closed_len(&self) -> usize {
        self.closed_len
    }

    /// Ids of OPEN pairs, ascending.
    pub fn open_ids(&self) -> Vec<NodeId> {
        self.ids_in(Place::Open)
    }

    /// Ids of CLOSED pairs, ascending.
    pub fn closed_ids(&self) -> Vec<NodeId> {
        self.ids_in(Place::Closed)
    }

    fn ids_in(&self, place: Place) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].place == place)
            .collect()
    }

    /// The pair that produced the last returned plan.
    pub fn best(&self) -> Option<NodeId> {
        self.best
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn take_violations(&mut self) -> Vec<String> {
        std::mem::take(&mut self.violations)
    }

    /// The AP of `id`, traced back to the root.
    pub fn plan_of(&self, id: NodeId) -> Plan {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let pp = &self.nodes[c].pp;
            vertices.push(pp.end);
            if let Some(e) = pp.edge {
                edges.push(e);
            }
            cur = pp.pred;
        }
        vertices.reverse();
        edges.reverse();
        let pp = &self.nodes[id].pp;
        Plan {
            vertices,
            edges,
            length: pp.ap_len,
            coverage: pp.ap_cov.clone(),
        }
    }

    fn ensure_vertices(&mut self, n: usize) {
        if self.open_at.len() < n {
            self.open_at.resize_with(n, Vec::new);
            self.closed_at.resize_with(n, Vec::new);
        }
    }

    fn entry(&self, id: NodeId) -> HeapEntry {
        let slot = &self.nodes[id];
        let len = slot.pp.pap_len;
        let count = -(slot.pp.pap_cov.count() as f64);
        let (primary, secondary) = match self.config.key {
            KeyOrder::LengthFirst => (len, count),
            KeyOrder::CoverageFirst => (count, len),
        };
        HeapEntry {
            primary,
            secondary,
            id,
            version: slot.version,
        }
    }

    fn record_created(&mut self, pp: &PathPair) {
        self.stats.created += 1;
        self.stats.ops += 1;
        if self.config.debug {
            self.created.push(Created {
                pred: pp.pred,
                edge: pp.edge,
                end: pp.end,
                pap_cov: pp.pap_cov.clone(),
                pap_len: pp.pap_len,
            });
            self.check_pair(pp, "created");
        }
    }

    pub(super) fn check_pair(&mut self, pp: &PathPair, what: &str) {
        if pp.pap_len > pp.ap_len + super::BOUND_SLACK {
            self.violations.push(format!(
                "{what} pair at {}: PAP length {} above AP length {}",
                pp.end, pp.pap_len, pp.ap_len
            ));
        }
        if !pp.pap_cov.is_superset(&pp.ap_cov) {
            self.violations.push(format!(
                "{what} pair at {}: PAP coverage misses AP coverage",
                pp.end
            ));
        }
        if pp.kind == Kind::NT && !pp.edge_validated {
            self.violations.push(format!(
                "{what} pair at {}: NT with unvalidated edge",
                pp.end
            ));
        }
        if pp.kind == Kind::T && !pp.subsumed.is_empty() {
            self.violations.push(format!(
                "{what} pair at {}: T with subsumed entries",
                pp.end
            ));
        }
    }

    fn insert_open(&mut self, pp: PathPair) -> NodeId {
        let id = self.nodes.len();
        let end = pp.end;
        self.nodes.push(Slot {
            pp,
            place: Place::Open,
            version: 0,
            closed_seq: 0,
        });
        self.open_at[end].push(id);
        self.open_len += 1;
        let entry = self.entry(id);
        self.heap.push(Reverse(entry));
        id
    }

    fn reopen(&mut self, id: NodeId) {
        let slot = &mut self.nodes[id];
        slot.place = Place::Open;
        slot.version += 1;
        let end = slot.pp.end;
        self.open_at[end].push(id);
        self.open_len += 1;
        let entry = self.entry(id);
        self.heap.push(Reverse(entry));
    }

    fn detach_open_at(&mut self, v: VertexId, index: usize) -> NodeId {
        let id = self.open_at[v].remove(index);
        let slot = &mut self.nodes[id];
        slot.place = Place::Detached;
        slot.version += 1;
        self.open_len -= 1;
        id
    }

    fn detach(&mut self, id: NodeId) {
        let v = self.nodes[id].pp.end;
        match self.nodes[id].place {
            Place::Open => {
                let i = self.open_at[v]
                    .iter()
                    .position(|&x| x == id)
                    .expect("open bucket entry");
                self.detach_open_at(v, i);
            }
            Place::Closed => {
                let i = self.closed_at[v]
                    .iter()
                    .position(|&x| x == id)
                    .expect("closed bucket entry");
                self.closed_at[v].remove(i);
                self.nodes[id].place = Place::Detached;
                self.closed_len -= 1;
            }
            Place::Detached => {}
        }
    }

    fn close(&mut self, id: NodeId) {
        let v = self.nodes[id].pp.end;
        self.nodes[id].place = Place::Closed;
        self.close_counter += 1;
        self.nodes[id].closed_seq = self.close_counter;
        self.closed_at[v].push(id);
        self.closed_len += 1;
    }

    fn validate_pair<G: SearchGraph>(g: &mut G, pp: &mut PathPair) -> bool {
        if pp.edge_validated {
            return true;
        }
        let e = pp
            .edge
            .expect("only the root lacks an incoming edge, and it is validated");
        let ok = g.validate_edge(e) == EdgeStatus::Valid;
        pp.edge_validated = ok;
        ok
    }

    /// Status to give a pair crossing `e`; `None` if `e` is known or found to collide.
    fn crossing_status<G: SearchGraph>(&self, g: &mut G, e: EdgeId) -> Option<EdgeStatus> {
        let status = if self.config.lazy {
            g.edge_status(e)
        } else {
            g.validate_edge(e)
        };
        (status != EdgeStatus::Invalid).then_some(status)
    }

    fn extend_node<G: SearchGraph>(
        &mut self,
        g: &mut G,
        u: NodeId,
        e: EdgeRef,
    ) -> Option<PathPair> {
        let status = self.crossing_status(g, e.id)?;
        let pp = extend(&self.nodes[u].pp, u, e, g.vertex_coverage(e.to), status)
            .expect("edge leaves the pair's end");
        self.record_created(&pp);
        Some(pp)
    }

    fn fresh_root<G: SearchGraph>(&mut self, g: &G) -> PathPair {
        let start = self.start.expect("initialized");
        let pp = PathPair::root(start, g.vertex_coverage(start));
        self.record_created(&pp);
        pp
    }

    /// Applies the three dominance rules to a newly generated pair.
    pub fn add_new_node<G: SearchGraph>(
        &mut self,
        g: &mut G,
        pp: PathPair,
        eps: f64,
        p: f64,
    ) -> AddOutcome {
        let v = pp.end;
        self.ensure_vertices(g.num_vertices().max(v + 1));
        self.stats.ops += 1;

        // (i) a CLOSED pair whose PAP dominates.
        let mut dominator = None;
        for &c in &self.closed_at[v] {
            self.stats.ops += 1;
            if self.nodes[c].pp.pap_dominates(&pp) {
                dominator = Some(c);
                break;
            }
        }
        if let Some(c) = dominator {
            let merged = subsume(&self.nodes[c].pp, &pp).expect("same end vertex");
            self.nodes[c].pp = merged;
            self.stats.dominated_by_closed += 1;
            if self.config.debug {
                let pp = self.nodes[c].pp.clone();
                self.check_pair(&pp, "closed dominator");
            }
            return AddOutcome::DominatedByClosed(c);
        }

        // (ii) an OPEN pair that can subsume it within bounds.
        let mut i = 0;
        while i < self.open_at[v].len() {
            let o = self.open_at[v][i];
            self.stats.ops += 1;
            if !subsume_is_bounded(&self.nodes[o].pp, &pp, eps, p) {
                i += 1;
                continue;
            }
            if !Self::validate_pair(g, &mut self.nodes[o].pp) {
                self.detach_open_at(v, i);
                self.stats.dropped_invalid += 1;
                continue;
            }
            let merged = subsume(&self.nodes[o].pp, &pp).expect("same end vertex");
            let slot = &mut self.nodes[o];
            slot.pp = merged;
            slot.version += 1;
            let entry = self.entry(o);
            self.heap.push(Reverse(entry));
            self.stats.subsumed_into_open += 1;
            if self.config.debug {
                let pp = self.nodes[o].pp.clone();
                self.check_pair(&pp, "open subsumer");
            }
            return AddOutcome::SubsumedIntoOpen(o);
        }

        // (iii) it may subsume OPEN pairs before being inserted.
        let mut pp = pp;
        let mut i = 0;
        while i < self.open_at[v].len() {
            let o = self.open_at[v][i];
            self.stats.ops += 1;
            if !subsume_is_bounded(&pp, &self.nodes[o].pp, eps, p) {
                i += 1;
                continue;
            }
            if !Self::validate_pair(g, &mut pp) {
                self.stats.discarded_invalid += 1;
                return AddOutcome::Discarded;
            }
            pp = subsume(&pp, &self.nodes[o].pp).expect("same end vertex");
            self.detach_open_at(v, i);
            self.stats.absorbed += 1;
        }
        if self.config.debug {
            self.check_pair(&pp, "inserted");
            if !pp.is_bounded(eps, p) {
                self.violations
                    .push(format!("inserted unbounded pair at {v}"));
            }
        }
        AddOutcome::Inserted(self.insert_open(pp))
    }

    /// Pops one pair from OPEN and processes it.
    pub fn step<G: SearchGraph>(&mut self, g: &mut G, eps: f64, p: f64) -> Step {
        self.ensure_vertices(g.num_vertices());
        let id = loop {
            match self.heap.pop() {
                None => return Step::Empty,
                Some(Reverse(entry)) => {
                    let slot = &self.nodes[entry.id];
                    if slot.place == Place::Open && slot.version == entry.version {
                        break entry.id;
                    }
                }
            }
        };
        self.detach(id);
        self.stats.pops += 1;
        self.stats.ops += 1;
        let u = self.nodes[id].pp.end;

        if !Self::validate_pair(g, &mut self.nodes[id].pp) {
            self.stats.dropped_invalid += 1;
            self.trace_pop(id, "invalid");
            return Step::DroppedInvalid(id);
        }

        if self.nodes[id].pp.pap_cov.count() == g.total_coverage().count() {
            // Kept in OPEN so a later episode can resume from it.
            self.reopen(id);
            self.best = Some(id);
            self.trace_pop(id, "goal");
            return Step::Goal(id);
        }

        let mut dominator = None;
        for &c in &self.closed_at[u] {
            self.stats.ops += 1;
            if self.nodes[c].pp.pap_dominates(&self.nodes[id].pp) {
                dominator = Some(c);
                break;
            }
        }
        if let Some(c) = dominator {
            let merged = subsume(&self.nodes[c].pp, &self.nodes[id].pp).expect("same end vertex");
            self.nodes[c].pp = merged;
            self.stats.dominated_by_closed += 1;
            self.trace_pop(id, "folded");
            return Step::Folded(id);
        }

        self.trace_pop(id, "expand");
        self.stats.expansions += 1;
        let mut nbrs = std::mem::take(&mut self.scratch);
        nbrs.clear();
        g.neighbors_into(u, &mut nbrs);
        for &e in &nbrs {
            if let Some(child) = self.extend_node(g, id, e) {
                self.add_new_node(g, child, eps, p);
            }
        }
        self.scratch = nbrs;
        self.close(id);
        Step::Expanded(id)
    }

    fn trace_pop(&self, id: NodeId, action: &str) {
        let pp = &self.nodes[id].pp;
        trace!(
            target: "iris::search",
            "pop node={id} v={} cov={} len={} action={action}",
            pp.end,
            pp.pap_cov.count(),
            pp.pap_len
        );
    }

    /// Pops until a pair whose PAP covers everything the graph can see, or
    /// until OPEN is empty.
    pub fn near_optimal_search<G: SearchGraph>(
        &mut self,
        g: &mut G,
        eps: f64,
        p: f64,
    ) -> Option<Plan> {
        self.stats.episodes += 1;
        let found = loop {
            match self.step(g, eps, p) {
                Step::Empty => break None,
                Step::Goal(id) => break Some(id),
                _ => {}
            }
        };
        if self.config.debug {
            self.check_lists(eps, p);
        }
        found.map(|id| self.plan_of(id))
    }

    /// Prepares the lists for an episode with bounds `(eps, p)`.
    ///
    /// The first call seeds OPEN with the root pair. Later calls keep
    /// reusable pairs, release the rest, and extend CLOSED pairs to vertices
    /// added since the previous call.
    pub fn initialize_lists<G: SearchGraph>(
        &mut self,
        g: &mut G,
        start: VertexId,
        eps: f64,
        p: f64,
    ) {
        self.ensure_vertices(g.num_vertices());
        if self.start != Some(start) {
            self.reset();
            self.ensure_vertices(g.num_vertices());
            self.start = Some(start);
            let root = self.fresh_root(g);
            self.insert_open(root);
            self.watermark = g.num_vertices();
            return;
        }

        self.memo.clear();
        self.memo_params = Some((eps, p));
        let mut release = Vec::new();
        for id in 0..self.nodes.len() {
            if self.nodes[id].place == Place::Detached {
                continue;
            }
            self.stats.ops += 1;
            if self.classify(id, eps, p) != NodeClass::Reusable {
                release.push(id);
            }
        }
        for &id in &release {
            self.detach(id);
        }
        self.stats.released += release.len() as u64;
        let mut stack: Vec<ReleaseItem> =
            release.into_iter().rev().map(ReleaseItem::Node).collect();
        while let Some(item) = stack.pop() {
            self.release_one(g, item, eps, p, &mut stack);
        }

        // Extend CLOSED pairs across edges that reach vertices added since
        // the previous episode, found from the new vertices' side.
        let mut nbrs = std::mem::take(&mut self.scratch);
        let (watermark, n) = (self.watermark, g.num_vertices());
        let mut crossings = Vec::new();
        for w in watermark..n {
            nbrs.clear();
            g.neighbors_into(w, &mut nbrs);
            crossings.extend(
                nbrs.iter()
                    .filter(|e| e.to < watermark)
                    .map(|e| (e.to, e.id)),
            );
        }
        crossings.sort_unstable();
        for (u, e) in crossings {
            let Some(edge) = g.edge_from(e, u) else {
                continue;
            };
            let closed: Vec<NodeId> = self.closed_at[u].clone();
            for c in closed {
                if self.nodes[c].place != Place::Closed {
                    continue;
                }
                self.stats.ops += 1;
                if let Some(child) = self.extend_node(g, c, edge) {
                    self.add_new_node(g, child, eps, p);
                }
            }
        }
        self.scratch = nbrs;
        self.watermark = g.num_vertices();
        if self.config.debug {
            self.check_lists(eps, p);
        }
    }

    fn release_one<G: SearchGraph>(
        &mut self,
        g: &mut G,
        item: ReleaseItem,
        eps: f64,
        p: f64,
        stack: &mut Vec<ReleaseItem>,
    ) {
        match item {
            ReleaseItem::Node(id) => {
                let class = self.classify(id, eps, p);
                match class {
                    NodeClass::Reusable => {
                        let pp = self.nodes[id].pp.clone();
                        self.add_new_node(g, pp, eps, p);
                        return;
                    }
                    NodeClass::Boundary => {
                        if let Some(rebuilt) =
                            self.rebuild(g, self.nodes[id].pp.hidden(), self.nodes[id].pp.end)
                        {
                            self.add_new_node(g, rebuilt, eps, p);
                        }
                    }
                    NodeClass::NonReusable => {}
                }
                let end = self.nodes[id].pp.end;
                for &h in self.nodes[id].pp.subsumed.iter().rev() {
                    stack.push(ReleaseItem::Hidden(h, end));
                }
            }
            ReleaseItem::Hidden(h, end) => {
                if self.hidden_class(h, eps, p) == NodeClass::NonReusable {
                    return;
                }
                if let Some(pp) = self.rebuild(g, h, end) {
                    self.add_new_node(g, pp, eps, p);
                }
            }
        }
    }

    /// Reconstructs a pair from its predecessor and incoming edge; `None` if
    /// that edge is known to collide.
    fn rebuild<G: SearchGraph>(&mut self, g: &mut G, h: Hidden, end: VertexId) -> Option<PathPair> {
        match (h.pred, h.edge) {
            (Some(u), Some(e)) => {
                let from = self.nodes[u].pp.end;
                let e = g
                    .edge_from(e, from)
                    .expect("stored edge leaves its predecessor");
                debug_assert_eq!(e.to, end);
                self.extend_node(g, u, e)
            }
            _ => Some(self.fresh_root(g)),
        }
    }

    fn memo_for(&mut self, eps: f64, p: f64) {
        if self.memo_params != Some((eps, p)) {
            self.memo.clear();
            self.memo_params = Some((eps, p));
        }
        if self.memo.len() < self.nodes.len() {
            self.memo.resize(self.nodes.len(), None);
        }
    }

    /// Reusable, boundary or non-reusable under `(eps, p)`, by walking the AP chain.
    pub fn classify(&mut self, id: NodeId, eps: f64, p: f64) -> NodeClass {
        self.memo_for(eps, p);
        let mut chain = Vec::new();
        let mut cur = Some(id);
        let mut above = None;
        while let Some(c) = cur {
            if let Some(k) = self.memo[c] {
                above = Some(k);
                break;
            }
            chain.push(c);
            cur = self.nodes[c].pp.pred;
        }
        for &c in chain.iter().rev() {
            let k = match above {
                None | Some(NodeClass::Reusable) => {
                    if self.nodes[c].pp.is_bounded(eps, p) {
                        NodeClass::Reusable
                    } else {
                        NodeClass::Boundary
                    }
                }
                Some(_) => NodeClass::NonReusable,
            };
            self.memo[c] = Some(k);
            above = Some(k);
        }
        above.expect("chain is non-empty")
    }

    fn hidden_class(&mut self, h: Hidden, eps: f64, p: f64) -> NodeClass {
        match h.pred {
            None => NodeClass::Reusable,
            Some(u) => match self.classify(u, eps, p) {
                // Extending a bounded pair keeps it bounded.
                NodeClass::Reusable => NodeClass::Reusable,
                _ => NodeClass::NonReusable,
            },
        }
    }

    /// Initializes the lists and runs one episode.
    pub fn run<G: SearchGraph>(
        &mut self,
        g: &mut G,
        start: VertexId,
        eps: f64,
        p: f64,
    ) -> Option<Plan> {
        let before = self.stats;
        let t0 = std::time::Instant::now();
        self.initialize_lists(g, start, eps, p);
        let t1 = std::time::Instant::now();
        let plan = self.near_optimal_search(g, eps, p);
        log::debug!(
            target: "iris::search",
            "episode init={:?} search={:?} released={} pops={} created={} open={} closed={}",
            t1 - t0,
            t1.elapsed(),
            self.stats.released - before.released,
            self.stats.pops - before.pops,
            self.stats.created - before.created,
            self.open_len(),
            self.closed_len()
        );
        plan
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ExplicitGraph;

    fn cov(w: usize, ix: &[usize]) -> CoverageSet {
        CoverageSet::from_indices(w, ix.iter().copied())
    }

    /// a(∅) b({0}) c({1}), a−b 1, a−c 2, b−c 1.
    fn triangle() -> ExplicitGraph {
        let mut g = ExplicitGraph::new(2, 0);
        g.add_vertex(cov(2, &[]));
        g.add_vertex(cov(2, &[0]));
        g.add_vertex(cov(2, &[1]));
        g.add_edge(0, 1, 1.0, true).unwrap();
        g.add_edge(0, 2, 2.0, true).unwrap();
        g.add_edge(1, 2, 1.0, true).unwrap();
        g
    }

    fn debug() -> SearchConfig {
        SearchConfig {
            debug: true,
            ..Default::default()
        }
    }

    #[test]
    fn goal_at_root() {
        let mut g = ExplicitGraph::new(2, 0);
        g.add_vertex(cov(2, &[0, 1]));
        let mut s = Search::new(debug());
        let plan = s.run(&mut g, 0, 0.0, 1.0).unwrap();
        assert_eq!(plan.vertices, vec![0]);
        assert_eq!(plan.length, 0.0);
        assert!(s.violations().is_empty());
    }

    #[test]
    fn triangle_exact() {
        let mut g = triangle();
        let mut s = Search::new(debug());
        let plan = s.run(&mut g, 0, 0.0, 1.0).unwrap();
        assert_eq!(plan.vertices, vec![0, 1, 2]);
        assert_eq!(plan.length, 2.0);
        assert!(s.violations().is_empty(), "{:?}", s.violations());
        assert_eq!(s.place(s.best().unwrap()), Place::Open);
    }

    #[test]
    fn coverage_first_key_loses_length_bound() {
        // a−b(1) b:{0}; b−d(1) d:{1}; a−c(5) c:{0,1}.
        let mut g = ExplicitGraph::new(2, 0);
        g.add_vertex(cov(2, &[]));
        g.add_vertex(cov(2, &[0]));
        g.add_vertex(cov(2, &[0, 1]));
        g.add_vertex(cov(2, &[1]));
        g.add_edge(0, 1, 1.0, true).unwrap();
        g.add_edge(1, 3, 1.0, true).unwrap();
        g.add_edge(0, 2, 5.0, true).unwrap();
        let mut length_first = Search::new(SearchConfig::default());
        assert_eq!(
            length_first
                .run(&mut g.clone(), 0, 0.0, 1.0)
                .unwrap()
                .length,
            2.0
        );
        let mut coverage_first = Search::new(SearchConfig {
            key: KeyOrder::CoverageFirst,
            ..Default::default()
        });
        assert_eq!(coverage_first.run(&mut g, 0, 0.0, 1.0).unwrap().length, 5.0);
    }

    #[test]
    fn empty_lists_insert_into_open() {
        let mut g = triangle();
        let mut s = Search::new(debug());
        s.initialize_lists(&mut g, 0, 0.0, 1.0);
        let root = s.open_ids()[0];
        let e = g.edge_from(0, 0).unwrap();
        let pp = extend(s.node(root), root, e, &cov(2, &[0]), EdgeStatus::Unknown).unwrap();
        assert!(matches!(
            s.add_new_node(&mut g, pp, 0.0, 1.0),
            AddOutcome::Inserted(_)
        ));
        assert_eq!(s.open_len(), 2);
    }

    #[test]
    fn closed_dominator_absorbs_new_pair() {
        // a({0}) − b(∅): walking a, b, a gains nothing over the closed root.
        let mut g = ExplicitGraph::new(2, 0);
        g.add_vertex(cov(2, &[0]));
        g.add_vertex(cov(2, &[]));
        g.add_vertex(cov(2, &[1]));
        let ab = g.add_edge(0, 1, 1.0, true).unwrap();
        g.add_edge(1, 2, 1.0, true).unwrap();
        let mut s = Search::new(debug());
        s.initialize_lists(&mut g, 0, 0.0, 1.0);
        assert!(matches!(s.step(&mut g, 0.0, 1.0), Step::Expanded(0)));
        let open_before = s.open_ids();
        let at_b = open_before[0];
        let pp = extend(
            s.node(at_b),
            at_b,
            g.edge_from(ab, 1).unwrap(),
            &cov(2, &[0]),
            EdgeStatus::Valid,
        )
        .unwrap();
        assert_eq!(
            s.add_new_node(&mut g, pp, 0.0, 1.0),
            AddOutcome::DominatedByClosed(0)
        );
        assert_eq!(s.open_ids(), open_before);
        assert!(s.node(0).subsumed.len() <= 1);
        assert_eq!(s.node(0).kind, Kind::NT);
        assert!(s.violations().is_empty(), "{:?}", s.violations());
    }

    #[test]
    fn invalid_t_edge_discards_subsumer() {
        // a(∅) −1− b({0}) valid, a −0.5− c(∅) blocked, c −0.1− b valid.
        let mut g = ExplicitGraph::new(1, 0);
        g.add_vertex(cov(1, &[]));
        g.add_vertex(cov(1, &[0]));
        g.add_vertex(cov(1, &[]));
        g.add_edge(0, 1, 1.0, true).unwrap();
        let ac = g.add_edge(0, 2, 0.5, false).unwrap();
        g.add_edge(2, 1, 0.1, true).unwrap();
        let mut s = Search::new(debug());
        s.initialize_lists(&mut g, 0, 0.0, 1.0);
        s.step(&mut g, 0.0, 1.0);
        let at_c: Vec<_> = s
            .open_ids()
            .into_iter()
            .filter(|&i| s.node(i).end == 2)
            .collect();
        assert_eq!(at_c.len(), 1);
        // A shorter T pair over the blocked edge would subsume the open pair at c.
        let mut shorter = extend(
            s.node(0),
            0,
            g.edge_from(ac, 0).unwrap(),
            &cov(1, &[]),
            EdgeStatus::Unknown,
        )
        .unwrap();
        shorter.ap_len = 0.4;
        shorter.pap_len = 0.4;
        let before = s.open_ids();
        assert_eq!(
            s.add_new_node(&mut g, shorter, 0.0, 1.0),
            AddOutcome::Discarded
        );
        assert_eq!(s.open_ids(), before);
        let plan = s.near_optimal_search(&mut g, 0.0, 1.0).unwrap();
        assert_eq!(
            plan.vertices,
            crate::oracle::optimal_inspection_plan(&g).unwrap().vertices
        );
        assert!(s.violations().is_empty(), "{:?}", s.violations());
    }

    #[test]
    fn validate_on_pop() {
        let mut g = ExplicitGraph::new(1, 0);
        g.add_vertex(cov(1, &[]));
        g.add_vertex(cov(1, &[0]));
        g.add_vertex(cov(1, &[]));
        g.add_edge(0, 1, 1.0, false).unwrap();
        g.add_edge(0, 2, 1.0, true).unwrap();
        g.add_edge(2, 1, 1.0, true).unwrap();
        let mut s = Search::new(debug());
        let plan = s.run(&mut g, 0, 0.0, 1.0).unwrap();
        assert_eq!(plan.vertices, vec![0, 2, 1]);
        assert!(s.stats().dropped_invalid >= 1);
        // Root pops validate nothing; blocked edge checked once.
        assert_eq!(g.validations(), 3);
    }

    #[test]
    fn classification_chains() {
        let mut g = ExplicitGraph::new(4, 0);
        for c in [vec![], vec![0], vec![1], vec![2]] {
            g.add_vertex(cov(4, &c));
        }
        for (u, v) in [(0, 1), (1, 2), (2, 3)] {
            g.add_edge(u, v, 1.0, true).unwrap();
        }
        let mut s = Search::new(debug());
        s.initialize_lists(&mut g, 0, 0.0, 1.0);
        assert_eq!(s.classify(0, 0.0, 1.0), NodeClass::Reusable);
        let mut ids = vec![0];
        for _ in 0..3 {
            s.step(&mut g, 0.0, 1.0);
            ids.push(*s.open_ids().iter().max().unwrap());
        }
        // Loosen the middle and the leaf by hand.
        let full = cov(4, &[0, 1, 2, 3]);
        s.nodes[ids[3]].pp.pap_cov = full.clone();
        assert_eq!(s.classify(ids[3], 0.0, 1.0), NodeClass::Boundary);
        s.nodes[ids[3]].pp.pap_cov = s.nodes[ids[3]].pp.ap_cov.clone();
        s.nodes[ids[2]].pp.pap_cov = full;
        assert_eq!(s.classify(ids[3], 0.0, 0.99), NodeClass::NonReusable);
        assert_eq!(s.classify(ids[2], 0.0, 0.99), NodeClass::Boundary);
        assert_eq!(s.classify(0, 0.0, 0.99), NodeClass::Reusable);
    }
}
