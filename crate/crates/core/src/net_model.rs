//! Two-region, two-layer mobility graph and the evolving rail layout.
//!
//! Every site of a network file becomes an alternative-layer node; sites
//! flagged as stations additionally get a rail node, joined to the
//! alternative node by a transfer edge in each direction. Candidate rail
//! edges mirror road links one-to-one.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::netfile::{LinkSpec, NetworkSpec, SiteSpec};
use crate::params::ServiceParams;

const SIOUX_FALLS: &str = include_str!("../data/sioux_falls.net");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    One,
    Two,
}

impl Region {
    pub const BOTH: [Region; 2] = [Region::One, Region::Two];

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Region::One),
            2 => Some(Region::Two),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Region::One => 1,
            Region::Two => 2,
        }
    }

    pub fn index(self) -> usize {
        self.number() as usize - 1
    }

    pub fn other(self) -> Self {
        match self {
            Region::One => Region::Two,
            Region::Two => Region::One,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "region {}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLayer {
    Rail,
    Alt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLayer {
    Rail,
    Alt,
    Transfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    Within(Region),
    Crossing,
}

impl RegionClass {
    pub fn of(tail: Region, head: Region) -> Self {
        if tail == head {
            RegionClass::Within(tail)
        } else {
            RegionClass::Crossing
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Site number from the network file, shared by co-located nodes.
    pub site: u32,
    pub region: Region,
    pub layer: NodeLayer,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    pub layer: EdgeLayer,
    pub class: RegionClass,
    /// km; zero on transfer edges.
    pub length: f64,
    /// pax/day, road edges only (0 elsewhere).
    pub road_capacity: u32,
    /// Link id from the network file; `None` for transfer edges.
    pub link: Option<u32>,
}

/// Per-edge label: availability, capacity, length and travel time.
///
/// Travel time is always `length / layer speed`, so it carries no
/// information beyond the length; it is kept for completeness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLabel {
    pub available: bool,
    pub capacity: u32,
    pub length: f64,
    pub travel_time: f64,
}

#[derive(Debug, Clone)]
pub struct MobilityGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    alt_by_site: BTreeMap<u32, NodeId>,
    rail_by_site: BTreeMap<u32, NodeId>,
    rail_edges: Vec<EdgeId>,
    alt_edges: Vec<EdgeId>,
}

impl MobilityGraph {
    /// Builds the graph from parsed records. Fails with every record-level
    /// violation at once; graph-level invariants are left to
    /// [`check_invariants`](Self::check_invariants).
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        let violations = spec.violations();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        let mut g = MobilityGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            out_edges: Vec::new(),
            alt_by_site: BTreeMap::new(),
            rail_by_site: BTreeMap::new(),
            rail_edges: Vec::new(),
            alt_edges: Vec::new(),
        };
        for s in &spec.sites {
            let id = g.push_node(s, NodeLayer::Alt);
            g.alt_by_site.insert(s.id, id);
        }
        for s in spec.sites.iter().filter(|s| s.rail) {
            let id = g.push_node(s, NodeLayer::Rail);
            g.rail_by_site.insert(s.id, id);
        }
        for l in &spec.links {
            let (t, h) = (g.alt_by_site[&l.tail], g.alt_by_site[&l.head]);
            let id = g.push_edge(t, h, EdgeLayer::Alt, l.length_km, l.road_capacity, Some(l.id));
            g.alt_edges.push(id);
        }
        for l in spec.links.iter().filter(|l| l.rail) {
            let (t, h) = (g.rail_by_site[&l.tail], g.rail_by_site[&l.head]);
            let id = g.push_edge(t, h, EdgeLayer::Rail, l.length_km, 0, Some(l.id));
            g.rail_edges.push(id);
        }
        let stations: Vec<(NodeId, NodeId)> = g
            .rail_by_site
            .iter()
            .map(|(site, &rail)| (g.alt_by_site[site], rail))
            .collect();
        for (alt, rail) in stations {
            g.push_edge(alt, rail, EdgeLayer::Transfer, 0.0, 0, None);
            g.push_edge(rail, alt, EdgeLayer::Transfer, 0.0, 0, None);
        }
        Ok(g)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_spec(&NetworkSpec::parse(text)?)
    }

    fn push_node(&mut self, s: &SiteSpec, layer: NodeLayer) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            id,
            site: s.id,
            // checked by `violations`
            region: Region::from_number(s.region).expect("validated region"),
            layer,
            x: s.x,
            y: s.y,
        });
        self.out_edges.push(Vec::new());
        id
    }

    fn push_edge(
        &mut self,
        tail: NodeId,
        head: NodeId,
        layer: EdgeLayer,
        length: f64,
        road_capacity: u32,
        link: Option<u32>,
    ) -> EdgeId {
        let id = EdgeId(self.edges.len());
        let class = RegionClass::of(self.nodes[tail.0].region, self.nodes[head.0].region);
        self.edges.push(Edge { id, tail, head, layer, class, length, road_capacity, link });
        self.out_edges[tail.0].push(id);
        id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.0]
    }

    pub fn rail_edges(&self) -> &[EdgeId] {
        &self.rail_edges
    }

    pub fn alt_edges(&self) -> &[EdgeId] {
        &self.alt_edges
    }

    pub fn transfer_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.layer == EdgeLayer::Transfer)
    }

    pub fn is_rail(&self, e: EdgeId) -> bool {
        self.edges.get(e.0).is_some_and(|e| e.layer == EdgeLayer::Rail)
    }

    /// Rail edges of the given class, in id order.
    pub fn rail_edges_in(&self, class: RegionClass) -> Vec<EdgeId> {
        self.rail_edges
            .iter()
            .copied()
            .filter(|&e| self.edges[e.0].class == class)
            .collect()
    }

    /// Site numbers of all alternative-layer nodes, ascending.
    pub fn sites(&self) -> impl Iterator<Item = u32> + '_ {
        self.alt_by_site.keys().copied()
    }

    pub fn alt_node(&self, site: u32) -> Option<NodeId> {
        self.alt_by_site.get(&site).copied()
    }

    pub fn rail_node(&self, site: u32) -> Option<NodeId> {
        self.rail_by_site.get(&site).copied()
    }

    pub fn site_region(&self, site: u32) -> Option<Region> {
        self.alt_node(site).map(|n| self.nodes[n.0].region)
    }

    /// Fraction of an edge's metrics attributed to `region`: 1 for edges
    /// inside it, 0.5 for crossing edges, 0 otherwise.
    pub fn region_share(&self, e: EdgeId, region: Region) -> f64 {
        match self.edges[e.0].class {
            RegionClass::Within(r) if r == region => 1.0,
            RegionClass::Within(_) => 0.0,
            RegionClass::Crossing => 0.5,
        }
    }

    pub fn label(&self, e: EdgeId, state: &NetworkState, params: &ServiceParams) -> EdgeLabel {
        let edge = &self.edges[e.0];
        match edge.layer {
            EdgeLayer::Rail => EdgeLabel {
                available: state.is_connected(e),
                capacity: state.capacity(e),
                length: edge.length,
                travel_time: edge.length / params.rail_speed,
            },
            EdgeLayer::Alt => EdgeLabel {
                available: true,
                capacity: edge.road_capacity,
                length: edge.length,
                travel_time: edge.length / params.alt_speed,
            },
            EdgeLayer::Transfer => EdgeLabel {
                available: true,
                capacity: 0,
                length: 0.0,
                travel_time: 0.0,
            },
        }
    }

    /// Human-readable list of violated graph invariants; empty when valid.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.edges {
            let (t, h) = (self.node(e.tail), self.node(e.head));
            if RegionClass::of(t.region, h.region) != e.class {
                out.push(format!("partition: edge {} has inconsistent region class", e.id));
            }
        }
        for (&site, &rail) in &self.rail_by_site {
            let alt = self.alt_by_site[&site];
            let count = |from: NodeId, to: NodeId| {
                self.out_edges(from)
                    .iter()
                    .filter(|&&e| {
                        let edge = self.edge(e);
                        edge.layer == EdgeLayer::Transfer && edge.head == to
                    })
                    .count()
            };
            if count(alt, rail) != 1 || count(rail, alt) != 1 {
                out.push(format!("transfer: station {site} lacks a transfer edge pair"));
            }
        }
        let alt_nodes: Vec<NodeId> = self.alt_by_site.values().copied().collect();
        if let Some(&root) = alt_nodes.first() {
            let forward = self.alt_reach(root, false);
            let backward = self.alt_reach(root, true);
            let stranded: Vec<u32> = alt_nodes
                .iter()
                .filter(|n| !(forward[n.0] && backward[n.0]))
                .map(|n| self.node(*n).site)
                .collect();
            if !stranded.is_empty() {
                out.push(format!(
                    "connectivity: alternative layer is not strongly connected (nodes {stranded:?})"
                ));
            }
        }
        out
    }

    fn alt_reach(&self, root: NodeId, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([root]);
        seen[root.0] = true;
        while let Some(n) = queue.pop_front() {
            for &e in &self.alt_edges {
                let edge = &self.edges[e.0];
                let (from, to) = if reverse { (edge.head, edge.tail) } else { (edge.tail, edge.head) };
                if from == n && !seen[to.0] {
                    seen[to.0] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Records that reproduce this graph through [`from_spec`](Self::from_spec).
    pub fn to_spec(&self) -> NetworkSpec {
        let sites = self
            .alt_by_site
            .iter()
            .map(|(&site, &n)| {
                let node = self.node(n);
                SiteSpec {
                    id: site,
                    region: node.region.number(),
                    rail: self.rail_by_site.contains_key(&site),
                    x: node.x,
                    y: node.y,
                }
            })
            .collect();
        let rail_links: std::collections::BTreeSet<u32> =
            self.rail_edges.iter().filter_map(|&e| self.edge(e).link).collect();
        let links = self
            .alt_edges
            .iter()
            .map(|&e| {
                let edge = self.edge(e);
                let link = edge.link.expect("alt edges carry link ids");
                LinkSpec {
                    id: link,
                    tail: self.node(edge.tail).site,
                    head: self.node(edge.head).site,
                    length_km: edge.length,
                    rail: rail_links.contains(&link),
                    road_capacity: edge.road_capacity,
                }
            })
            .collect();
        NetworkSpec { sites, links }
    }
}

/// The bundled Sioux Falls network: sites 1-11 in region 1, 12-24 in region 2.
pub fn build_sioux_falls() -> MobilityGraph {
    MobilityGraph::parse(SIOUX_FALLS).expect("bundled Sioux Falls file is valid")
}

/// Text of the bundled Sioux Falls network file.
pub fn sioux_falls_file() -> &'static str {
    SIOUX_FALLS
}

/// One authority's (or the coalition's) decision for a single year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct EdgeAction {
    pub build: bool,
    pub upgrade: u32,
}

/// Yearly build/upgrade decisions keyed by rail edge. Entries with neither a
/// build nor an upgrade are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct DesignAction {
    steps: BTreeMap<EdgeId, EdgeAction>,
}

impl DesignAction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn set(&mut self, edge: EdgeId, build: bool, upgrade: u32) {
        if build || upgrade > 0 {
            self.steps.insert(edge, EdgeAction { build, upgrade });
        } else {
            self.steps.remove(&edge);
        }
    }

    pub fn with(mut self, edge: EdgeId, build: bool, upgrade: u32) -> Self {
        self.set(edge, build, upgrade);
        self
    }

    pub fn get(&self, edge: EdgeId) -> EdgeAction {
        self.steps.get(&edge).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, EdgeAction)> + '_ {
        self.steps.iter().map(|(&e, &a)| (e, a))
    }

    /// Sum of two actions: builds OR together, upgrades add.
    pub fn merged(&self, other: &DesignAction) -> DesignAction {
        let mut out = self.clone();
        for (e, a) in other.iter() {
            let cur = out.get(e);
            out.set(e, cur.build || a.build, cur.upgrade + a.upgrade);
        }
        out
    }

    /// Entries restricted to the given edges.
    pub fn restricted(&self, keep: impl Fn(EdgeId) -> bool) -> DesignAction {
        DesignAction {
            steps: self.steps.iter().filter(|(e, _)| keep(**e)).map(|(&e, &a)| (e, a)).collect(),
        }
    }
}

/// Rail layout in a given year: connectivity and cumulative frequency per
/// rail edge. Indexed by [`EdgeId`]; non-rail entries stay zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    pub year: u32,
    connected: Vec<bool>,
    frequency: Vec<u32>,
    seat_capacity: u32,
    max_frequency: u32,
}

impl NetworkState {
    /// Year-0 layout with no rail service.
    pub fn empty(graph: &MobilityGraph, params: &ServiceParams) -> Self {
        Self {
            year: 0,
            connected: vec![false; graph.edge_count()],
            frequency: vec![0; graph.edge_count()],
            seat_capacity: params.seat_capacity,
            max_frequency: params.max_frequency,
        }
    }

    pub fn is_connected(&self, e: EdgeId) -> bool {
        self.connected.get(e.0).copied().unwrap_or(false)
    }

    pub fn frequency(&self, e: EdgeId) -> u32 {
        self.frequency.get(e.0).copied().unwrap_or(0)
    }

    /// Seats per day: seat capacity times cumulative frequency.
    pub fn capacity(&self, e: EdgeId) -> u32 {
        self.seat_capacity * self.frequency(e)
    }

    pub fn max_frequency(&self) -> u32 {
        self.max_frequency
    }

    pub fn connected_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.connected.iter().enumerate().filter(|(_, c)| **c).map(|(i, _)| EdgeId(i))
    }

    /// Validates `action` against this layout without applying it.
    pub fn check_action(&self, graph: &MobilityGraph, action: &DesignAction) -> Result<()> {
        for (e, step) in action.iter() {
            if !graph.is_rail(e) {
                return Err(Error::UnknownEdge(e));
            }
            let connected = self.connected[e.0];
            if step.build && connected {
                return Err(Error::RebuildExisting(e));
            }
            if step.upgrade > 0 && !(connected || step.build) {
                return Err(Error::BigMViolation(e));
            }
            let requested = self.frequency[e.0] + step.upgrade;
            if requested > self.max_frequency {
                return Err(Error::FrequencyOverflow { edge: e, requested, cap: self.max_frequency });
            }
        }
        Ok(())
    }

    /// Next year's layout: connectivity and frequency add, capacity follows.
    pub fn apply_action(&self, graph: &MobilityGraph, action: &DesignAction) -> Result<Self> {
        self.check_action(graph, action)?;
        let mut next = self.clone();
        next.year += 1;
        for (e, step) in action.iter() {
            next.connected[e.0] |= step.build;
            next.frequency[e.0] += step.upgrade;
        }
        Ok(next)
    }

    /// Applies an already-validated action in place, keeping the year.
    pub(crate) fn overlay(&mut self, action: &DesignAction) {
        for (e, step) in action.iter() {
            self.connected[e.0] |= step.build;
            self.frequency[e.0] += step.upgrade;
        }
    }

    /// True when every connection and frequency of `other` is present here.
    pub fn contains(&self, other: &NetworkState) -> bool {
        self.connected.iter().zip(&other.connected).all(|(a, b)| *a || !*b)
            && self.frequency.iter().zip(&other.frequency).all(|(a, b)| a >= b)
    }

    /// Same rail layout, ignoring the year.
    pub fn same_layout(&self, other: &NetworkState) -> bool {
        self.connected == other.connected && self.frequency == other.frequency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf() -> (MobilityGraph, ServiceParams) {
        (build_sioux_falls(), ServiceParams::default())
    }

    #[test]
    fn sioux_falls_counts() {
        let (g, _) = sf();
        let count = |layer| g.edges().iter().filter(|e| e.layer == layer).count();
        assert_eq!(g.nodes().iter().filter(|n| n.layer == NodeLayer::Alt).count(), 24);
        assert_eq!(g.nodes().iter().filter(|n| n.layer == NodeLayer::Rail).count(), 24);
        assert_eq!(count(EdgeLayer::Alt), 76);
        assert_eq!(count(EdgeLayer::Rail), 76);
        assert_eq!(count(EdgeLayer::Transfer), 48);
    }

    #[test]
    fn sioux_falls_partition() {
        let (g, _) = sf();
        for site in g.sites() {
            let expected = if site <= 11 { Region::One } else { Region::Two };
            assert_eq!(g.site_region(site), Some(expected), "site {site}");
        }
        assert!(g.check_invariants().is_empty(), "{:?}", g.check_invariants());
        let r1 = g.rail_edges_in(RegionClass::Within(Region::One)).len();
        let r2 = g.rail_edges_in(RegionClass::Within(Region::Two)).len();
        let cross = g.rail_edges_in(RegionClass::Crossing).len();
        assert_eq!((r1, r2, cross), (26, 34, 16));
    }

    #[test]
    fn sioux_falls_travel_times_follow_speed() {
        let (g, p) = sf();
        let state = NetworkState::empty(&g, &p);
        for e in g.rail_edges().iter().chain(g.alt_edges()) {
            let label = g.label(*e, &state, &p);
            let speed = if g.is_rail(*e) { p.rail_speed } else { p.alt_speed };
            assert_eq!(label.travel_time, label.length / speed);
        }
    }

    #[test]
    fn build_with_frequency_sets_capacity() {
        let (g, p) = sf();
        let e = g.rail_edges()[0];
        let s0 = NetworkState::empty(&g, &p);
        let s1 = s0.apply_action(&g, &DesignAction::new().with(e, true, 2)).unwrap();
        assert!(s1.is_connected(e));
        assert_eq!(s1.frequency(e), 2);
        assert_eq!(s1.capacity(e), 1000);
        assert_eq!(s1.year, 1);
        let label = g.label(e, &s1, &p);
        assert!(label.available && label.capacity == 1000);
    }

    #[test]
    fn empty_action_only_advances_year() {
        let (g, p) = sf();
        let s0 = NetworkState::empty(&g, &p);
        let s1 = s0.apply_action(&g, &DesignAction::new()).unwrap();
        assert_eq!(s1.year, 1);
        assert!(s1.same_layout(&s0));
    }

    #[test]
    fn action_errors() {
        let (g, p) = sf();
        let e = g.rail_edges()[0];
        let s0 = NetworkState::empty(&g, &p);
        assert!(matches!(
            s0.apply_action(&g, &DesignAction::new().with(e, false, 1)),
            Err(Error::BigMViolation(_))
        ));
        assert!(matches!(
            s0.apply_action(&g, &DesignAction::new().with(e, true, 16)),
            Err(Error::FrequencyOverflow { requested: 16, cap: 15, .. })
        ));
        let s1 = s0.apply_action(&g, &DesignAction::new().with(e, true, 15)).unwrap();
        assert!(matches!(
            s1.apply_action(&g, &DesignAction::new().with(e, true, 0)),
            Err(Error::RebuildExisting(_))
        ));
        assert!(matches!(
            s1.apply_action(&g, &DesignAction::new().with(e, false, 1)),
            Err(Error::FrequencyOverflow { .. })
        ));
        let alt = g.alt_edges()[0];
        assert!(matches!(
            s0.apply_action(&g, &DesignAction::new().with(alt, true, 0)),
            Err(Error::UnknownEdge(_))
        ));
    }

    #[test]
    fn frequency_without_connection_never_survives() {
        let (g, p) = sf();
        let mut s = NetworkState::empty(&g, &p);
        let rails = g.rail_edges().to_vec();
        for (i, &e) in rails.iter().enumerate().take(20) {
            let a = DesignAction::new().with(e, i % 2 == 0, if i % 2 == 0 { 3 } else { 0 });
            s = s.apply_action(&g, &a).unwrap();
        }
        for &e in &rails {
            assert!(s.frequency(e) == 0 || s.is_connected(e));
        }
    }

    #[test]
    fn spec_round_trip() {
        let (g, _) = sf();
        let spec = g.to_spec();
        let again = MobilityGraph::from_spec(&NetworkSpec::parse(&spec.to_file_string()).unwrap())
            .unwrap();
        assert_eq!(again.to_spec(), spec);
        assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn disconnected_alt_layer_is_reported() {
        let text = "[nodes]\n1 1 1 0 0\n2 1 1 1 0\n[edges]\n1 1 2 1 1\n";
        let g = MobilityGraph::parse(text).unwrap();
        let v = g.check_invariants();
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("connectivity"));
    }
}
