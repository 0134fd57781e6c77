//! Grid network construction and the protected region.
//!
//! The grid is `rows × cols` signalized intersections joined by one-way
//! streets. Street directions alternate, with the outer ring forced into a
//! single clockwise loop so that every intersection can reach every other.
//! Each block face may be split into several equal links by unsignalized
//! midblock nodes (`segments_per_block`).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ZoneId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z{}", self.0)
    }
}

/// Per-link traffic parameters shared by every link the grid builder creates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub lanes: u32,
    /// Jam density per lane.
    pub jam_density_veh_per_km: f64,
    pub free_flow_speed_kmh: f64,
    pub speed_at_capacity_kmh: f64,
    /// Saturation flow per lane.
    pub saturation_flow_veh_per_h: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            lanes: 1,
            jam_density_veh_per_km: 160.0,
            free_flow_speed_kmh: 50.0,
            speed_at_capacity_kmh: 40.0,
            saturation_flow_veh_per_h: 1800.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if self.lanes < 1 {
            return Err(Error::param("lanes", "must be at least 1"));
        }
        if !(self.jam_density_veh_per_km > 0.0) {
            return Err(Error::param("jam_density_veh_per_km", "must be positive"));
        }
        if !(self.speed_at_capacity_kmh > 0.0) {
            return Err(Error::param("speed_at_capacity_kmh", "must be positive"));
        }
        if !(self.speed_at_capacity_kmh < self.free_flow_speed_kmh) {
            return Err(Error::param(
                "speed_at_capacity_kmh",
                "must be below free_flow_speed_kmh",
            ));
        }
        if !(self.saturation_flow_veh_per_h > 0.0) {
            return Err(Error::param(
                "saturation_flow_veh_per_h",
                "must be positive",
            ));
        }
        if self.saturation_flow_veh_per_h / self.speed_at_capacity_kmh
            >= self.jam_density_veh_per_km
        {
            return Err(Error::param(
                "saturation_flow_veh_per_h",
                "critical density would reach jam density",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub upstream_node: NodeId,
    pub downstream_node: NodeId,
    pub length_m: f64,
    pub lanes: u32,
    pub jam_density_veh_per_km: f64,
    pub free_flow_speed_kmh: f64,
    pub speed_at_capacity_kmh: f64,
    pub saturation_flow_veh_per_h: f64,
}

impl Link {
    pub fn length_km(&self) -> f64 {
        self.length_m / 1000.0
    }

    /// Jam storage in whole vehicles, `k_j · nl · l`.
    pub fn storage(&self) -> usize {
        (self.jam_density_veh_per_km * self.lanes as f64 * self.length_km() + 1e-9).floor() as usize
    }

    pub fn free_flow_time_s(&self) -> f64 {
        self.length_m / (self.free_flow_speed_kmh / 3.6)
    }

    /// Saturation flow across all lanes, veh/h.
    pub fn capacity_veh_h(&self) -> f64 {
        self.saturation_flow_veh_per_h * self.lanes as f64
    }

    /// Density at capacity across all lanes, veh/km.
    pub fn critical_density(&self) -> f64 {
        self.capacity_veh_h() / self.speed_at_capacity_kmh
    }

    /// Jam density across all lanes, veh/km.
    pub fn jam_density_total(&self) -> f64 {
        self.jam_density_veh_per_km * self.lanes as f64
    }

    /// Link fundamental diagram: speed falls linearly from `u_f` to `u_c` on
    /// the uncongested branch, flow falls linearly to zero at jam on the
    /// congested branch. Never exceeds `capacity_veh_h`.
    pub fn fd_flow(&self, density: f64) -> f64 {
        let kc = self.critical_density();
        let kj = self.jam_density_total();
        let cap = self.capacity_veh_h();
        let k = density.clamp(0.0, kj);
        let q = if k <= kc {
            let speed = self.free_flow_speed_kmh
                - (self.free_flow_speed_kmh - self.speed_at_capacity_kmh) * k / kc;
            k * speed
        } else {
            cap * (kj - k) / (kj - kc)
        };
        q.min(cap)
    }

    pub fn from_params(
        id: LinkId,
        upstream_node: NodeId,
        downstream_node: NodeId,
        length_m: f64,
        p: &LinkParams,
    ) -> Self {
        Self {
            id,
            upstream_node,
            downstream_node,
            length_m,
            lanes: p.lanes,
            jam_density_veh_per_km: p.jam_density_veh_per_km,
            free_flow_speed_kmh: p.free_flow_speed_kmh,
            speed_at_capacity_kmh: p.speed_at_capacity_kmh,
            saturation_flow_veh_per_h: p.saturation_flow_veh_per_h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Signalized,
    Midblock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Row coordinate in midblock units (intersection row × segments).
    pub row_pos: u32,
    pub col_pos: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<ZoneId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub node: NodeId,
}

/// Grid dimensions and link defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: u32,
    pub cols: u32,
    #[serde(default = "one")]
    pub segments_per_block: u32,
    pub link_length_m: f64,
    #[serde(default)]
    pub link: LinkParams,
}

fn one() -> u32 {
    1
}

impl GridSpec {
    /// 6 × 6 signalized intersections, blocks split into two 150 m links.
    pub fn standard() -> Self {
        Self {
            rows: 6,
            cols: 6,
            segments_per_block: 2,
            link_length_m: 150.0,
            link: LinkParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub rows: u32,
    pub cols: u32,
    pub segments_per_block: u32,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub zones: Vec<Zone>,
    /// Outgoing links per node, indexed by node id.
    pub out_links: Vec<Vec<LinkId>>,
    /// Incoming links per node, indexed by node id.
    pub in_links: Vec<Vec<LinkId>>,
}

/// Builds a one-way grid of `spec.rows × spec.cols` signalized intersections.
pub fn build_grid(spec: &GridSpec) -> Result<Network> {
    if spec.rows < 2 {
        return Err(Error::param(
            "rows",
            format!("need at least 2, got {}", spec.rows),
        ));
    }
    if spec.cols < 2 {
        return Err(Error::param(
            "cols",
            format!("need at least 2, got {}", spec.cols),
        ));
    }
    if spec.segments_per_block < 1 {
        return Err(Error::param("segments_per_block", "must be at least 1"));
    }
    if !(spec.link_length_m > 0.0) || !spec.link_length_m.is_finite() {
        return Err(Error::param("link_length_m", "must be positive and finite"));
    }
    spec.link.validate()?;

    let (rows, cols, seg) = (spec.rows, spec.cols, spec.segments_per_block);
    let mut nodes = Vec::new();
    // Position → node lookup on the refined lattice.
    let prow = (rows - 1) * seg + 1;
    let pcol = (cols - 1) * seg + 1;
    let mut at = vec![None::<NodeId>; (prow * pcol) as usize];
    let mut push_node = |nodes: &mut Vec<Node>, r: u32, c: u32, kind: NodeKind| {
        let id = NodeId(nodes.len() as u32);
        nodes.push(Node {
            id,
            kind,
            row_pos: r,
            col_pos: c,
            zone: None,
        });
        at[(r * pcol + c) as usize] = Some(id);
    };
    for r in 0..rows {
        for c in 0..cols {
            push_node(&mut nodes, r * seg, c * seg, NodeKind::Signalized);
        }
    }
    for r in 0..rows {
        for c in 0..cols - 1 {
            for j in 1..seg {
                push_node(&mut nodes, r * seg, c * seg + j, NodeKind::Midblock);
            }
        }
    }
    for c in 0..cols {
        for r in 0..rows - 1 {
            for j in 1..seg {
                push_node(&mut nodes, r * seg + j, c * seg, NodeKind::Midblock);
            }
        }
    }
    let node_at = |r: u32, c: u32| at[(r * pcol + c) as usize].expect("lattice node");

    let mut links = Vec::new();
    let add_link = |links: &mut Vec<Link>, from: NodeId, to: NodeId| {
        let id = LinkId(links.len() as u32);
        links.push(Link::from_params(
            id,
            from,
            to,
            spec.link_length_m,
            &spec.link,
        ));
    };
    for r in 0..rows {
        let east = row_is_eastbound(r, rows);
        let pr = r * seg;
        let steps: Vec<u32> = (0..pcol - 1).collect();
        if east {
            for &c in &steps {
                add_link(&mut links, node_at(pr, c), node_at(pr, c + 1));
            }
        } else {
            for &c in steps.iter().rev() {
                add_link(&mut links, node_at(pr, c + 1), node_at(pr, c));
            }
        }
    }
    for c in 0..cols {
        let north = col_is_northbound(c, cols);
        let pc = c * seg;
        let steps: Vec<u32> = (0..prow - 1).collect();
        if north {
            for &r in steps.iter().rev() {
                add_link(&mut links, node_at(r + 1, pc), node_at(r, pc));
            }
        } else {
            for &r in &steps {
                add_link(&mut links, node_at(r, pc), node_at(r + 1, pc));
            }
        }
    }

    let mut zones = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                let node = NodeId(r * cols + c);
                let id = ZoneId(zones.len() as u32);
                nodes[node.index()].zone = Some(id);
                zones.push(Zone { id, node });
            }
        }
    }

    let mut net = Network::from_parts(nodes, links, zones)?;
    net.rows = rows;
    net.cols = cols;
    net.segments_per_block = seg;
    Ok(net)
}

// Outer ring runs clockwise: top row east, right column south, bottom row
// west, left column north. Interior streets alternate.
fn row_is_eastbound(r: u32, rows: u32) -> bool {
    r == 0 || (r != rows - 1 && r % 2 == 0)
}

fn col_is_northbound(c: u32, cols: u32) -> bool {
    c == 0 || (c != cols - 1 && c % 2 == 0)
}

impl Network {
    /// Assembles an arbitrary network. Ids must equal positions; grid
    /// dimensions are left at zero.
    pub fn from_parts(nodes: Vec<Node>, links: Vec<Link>, zones: Vec<Zone>) -> Result<Network> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(Error::param(
                    "nodes",
                    format!("node {} stored at position {i}", n.id),
                ));
            }
        }
        for (i, l) in links.iter().enumerate() {
            if l.id.index() != i {
                return Err(Error::param(
                    "links",
                    format!("link {} stored at position {i}", l.id),
                ));
            }
            if l.upstream_node.index() >= nodes.len() || l.downstream_node.index() >= nodes.len() {
                return Err(Error::param(
                    "links",
                    format!("link {} references a missing node", l.id),
                ));
            }
            if !(l.length_m > 0.0) || l.lanes == 0 || !(l.saturation_flow_veh_per_h > 0.0) {
                return Err(Error::param(
                    "links",
                    format!("link {} has non-positive geometry", l.id),
                ));
            }
        }
        for (i, z) in zones.iter().enumerate() {
            if z.id.index() != i || z.node.index() >= nodes.len() {
                return Err(Error::param("zones", format!("zone {} is malformed", z.id)));
            }
        }
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        for l in &links {
            out_links[l.upstream_node.index()].push(l.id);
            in_links[l.downstream_node.index()].push(l.id);
        }
        Ok(Network {
            rows: 0,
            cols: 0,
            segments_per_block: 1,
            nodes,
            links,
            zones,
            out_links,
            in_links,
        })
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn signalized_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Signalized)
    }

    pub fn signal_count(&self) -> usize {
        self.signalized_nodes().count()
    }

    /// Links a vehicle on `link` may turn into.
    pub fn successors(&self, link: LinkId) -> &[LinkId] {
        &self.out_links[self.link(link).downstream_node.index()]
    }

    pub fn zone_node(&self, zone: ZoneId) -> NodeId {
        self.zones[zone.index()].node
    }

    /// True if every node can reach every other node.
    pub fn is_strongly_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; self.nodes.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(n) = queue.pop_front() {
                let adj = if forward {
                    &self.out_links[n]
                } else {
                    &self.in_links[n]
                };
                for &l in adj {
                    let link = self.link(l);
                    let m = if forward {
                        link.downstream_node
                    } else {
                        link.upstream_node
                    }
                    .index();
                    if !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Protected-region rectangle in intersection indices (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBounds {
    pub row_min: u32,
    pub row_max: u32,
    pub col_min: u32,
    pub col_max: u32,
}

impl RegionBounds {
    /// Central 4 × 4 intersections of the 6 × 6 replica grid.
    pub fn standard() -> Self {
        Self {
            row_min: 1,
            row_max: 4,
            col_min: 1,
            col_max: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectedRegion {
    pub bounds: RegionBounds,
    pub monitored_links: Vec<LinkId>,
    pub entry_links: Vec<LinkId>,
    pub exit_links: Vec<LinkId>,
    pub total_length_m: f64,
    /// Origin zones located inside the region; their injections are the
    /// disturbance flow.
    #[serde(default)]
    pub interior_zones: Vec<ZoneId>,
}

impl ProtectedRegion {
    pub fn total_length_km(&self) -> f64 {
        self.total_length_m / 1000.0
    }

    pub fn contains_link(&self, id: LinkId) -> bool {
        self.monitored_links.binary_search(&id).is_ok()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Selects every link with both endpoints inside `bounds`.
pub fn define_protected_region(network: &Network, bounds: RegionBounds) -> Result<ProtectedRegion> {
    let RegionBounds {
        row_min,
        row_max,
        col_min,
        col_max,
    } = bounds;
    if row_min > row_max || col_min > col_max {
        return Err(Error::InvalidRegion(format!("inverted bounds {bounds:?}")));
    }
    if row_min == 0 || col_min == 0 || row_max >= network.rows - 1 || col_max >= network.cols - 1 {
        return Err(Error::InvalidRegion(format!(
            "bounds {bounds:?} must lie strictly inside the {}x{} grid",
            network.rows, network.cols
        )));
    }
    let s = network.segments_per_block;
    let inside = |n: NodeId| {
        let node = network.node(n);
        (row_min * s..=row_max * s).contains(&node.row_pos)
            && (col_min * s..=col_max * s).contains(&node.col_pos)
    };

    let mut monitored = Vec::new();
    let mut entries = Vec::new();
    let mut exits = Vec::new();
    for link in &network.links {
        match (inside(link.upstream_node), inside(link.downstream_node)) {
            (true, true) => monitored.push(link.id),
            (false, true) => entries.push(link.id),
            (true, false) => exits.push(link.id),
            (false, false) => {}
        }
    }
    if monitored.is_empty() {
        return Err(Error::InvalidRegion("region contains no links".into()));
    }
    if entries.is_empty() {
        return Err(Error::InvalidRegion("region has no entry links".into()));
    }
    let total_length_m = monitored.iter().map(|&l| network.link(l).length_m).sum();
    let interior_zones = network
        .zones
        .iter()
        .filter(|z| inside(z.node))
        .map(|z| z.id)
        .collect();
    Ok(ProtectedRegion {
        bounds,
        monitored_links: monitored,
        entry_links: entries,
        exit_links: exits,
        total_length_m,
        interior_zones,
    })
}

/// Distinct nodes touched by the region's monitored links.
pub fn region_nodes(network: &Network, region: &ProtectedRegion) -> BTreeSet<NodeId> {
    region
        .monitored_links
        .iter()
        .flat_map(|&l| {
            let link = network.link(l);
            [link.upstream_node, link.downstream_node]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: u32, cols: u32, seg: u32) -> Network {
        build_grid(&GridSpec {
            rows,
            cols,
            segments_per_block: seg,
            link_length_m: 150.0,
            link: LinkParams::default(),
        })
        .unwrap()
    }

    #[test]
    fn smallest_grid() {
        let net = grid(2, 2, 1);
        assert_eq!(net.signal_count(), 4);
        assert_eq!(net.links.len(), 4);
        assert!(net.links.iter().all(|l| l.length_m == 150.0));
        assert!(net.is_strongly_connected());
    }

    #[test]
    fn replica_grid_has_36_signals() {
        let net = build_grid(&GridSpec::standard()).unwrap();
        assert_eq!(net.signal_count(), 36);
        assert!(net.is_strongly_connected());
        assert_eq!(net.zones.len(), 20);
    }

    #[test]
    fn bad_dimensions_name_the_parameter() {
        let mut spec = GridSpec::standard();
        spec.rows = 1;
        match build_grid(&spec) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "rows"),
            other => panic!("unexpected {other:?}"),
        }
        let mut spec = GridSpec::standard();
        spec.link_length_m = 0.0;
        match build_grid(&spec) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "link_length_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn odd_grids_stay_strongly_connected() {
        for rows in 2..7 {
            for cols in 2..7 {
                for seg in 1..3 {
                    assert!(
                        grid(rows, cols, seg).is_strongly_connected(),
                        "{rows}x{cols}/{seg}"
                    );
                }
            }
        }
    }

    #[test]
    fn replica_region() {
        let net = build_grid(&GridSpec::standard()).unwrap();
        let region = define_protected_region(&net, RegionBounds::standard()).unwrap();
        assert_eq!(region.monitored_links.len(), 48);
        assert_eq!(region.entry_links.len(), 8);
        assert_eq!(region.exit_links.len(), 8);
        assert_eq!(region.total_length_m, 7200.0);
        assert!(region.interior_zones.is_empty());
    }

    #[test]
    fn single_block_region() {
        let net = grid(4, 4, 1);
        let b = RegionBounds {
            row_min: 1,
            row_max: 2,
            col_min: 1,
            col_max: 2,
        };
        let region = define_protected_region(&net, b).unwrap();
        assert_eq!(region.monitored_links.len(), 4);
        // Every street crossing the block boundary contributes one entry or exit.
        assert_eq!(region.entry_links.len() + region.exit_links.len(), 8);
        for &l in &region.entry_links {
            let link = net.link(l);
            let inner = net.node(link.downstream_node);
            assert!((1..=2).contains(&inner.row_pos) && (1..=2).contains(&inner.col_pos));
        }
    }

    #[test]
    fn region_touching_boundary_is_rejected() {
        let net = grid(6, 6, 1);
        let whole = RegionBounds {
            row_min: 0,
            row_max: 5,
            col_min: 0,
            col_max: 5,
        };
        assert!(matches!(
            define_protected_region(&net, whole),
            Err(Error::InvalidRegion(_))
        ));
        let point = RegionBounds {
            row_min: 2,
            row_max: 2,
            col_min: 2,
            col_max: 2,
        };
        assert!(define_protected_region(&net, point).is_err());
    }

    #[test]
    fn fd_never_exceeds_saturation_capacity() {
        let net = grid(2, 2, 1);
        let link = &net.links[0];
        let mut k = 0.0;
        while k <= link.jam_density_total() {
            assert!(link.fd_flow(k) <= link.capacity_veh_h() + 1e-9);
            k += 0.5;
        }
        assert_eq!(link.fd_flow(link.jam_density_total()), 0.0);
        assert_eq!(link.storage(), 24);
    }

    #[test]
    fn network_document_round_trips() {
        let net = grid(3, 3, 2);
        let text = net.to_toml().unwrap();
        let back: Network = toml::from_str(&text).unwrap();
        assert_eq!(back, net);
    }
}
