//! Backhaul Adaptation Protocol (BAP) header codec and a table-driven
//! forwarding simulator.
//!
//! The BAP header is 3 octets: a 1-bit flag, 3 reserved bits, a 10-bit
//! destination BAP address and a 10-bit path ID.
//!
//! # Wire layout (most-significant bit first)
//!
//! ```text
//! Octet 0: [ flag | reserved(3) | address bits 9..6 ]
//! Octet 1: [ address bits 5..0  | path_id bits 9..8 ]
//! Octet 2: [ path_id bits 7..0 ]
//! ```
//!
//! Forwarding looks up (destination address, path ID) in the routing
//! table of each traversed node until the node owning the address is
//! reached, which strips the header.

use serde::Deserialize;
use std::collections::HashMap;
use thiserror::Error;

pub const BAP_HEADER_LEN: usize = 3;
pub const MAX_BAP_ADDRESS: u16 = 0x3FF;
pub const MAX_PATH_ID: u16 = 0x3FF;

#[derive(Debug, Error, PartialEq)]
pub enum BapError {
    #[error("field {field} value {value} exceeds {max}")]
    FieldRange {
        field: &'static str,
        value: u16,
        max: u16,
    },
    #[error("BAP header must be exactly {BAP_HEADER_LEN} octets, got {0}")]
    WrongLength(usize),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("node {node:?} routes (address {address}, path {path}) to itself")]
    SelfRoute {
        node: String,
        address: u16,
        path: u16,
    },
    #[error("node {node:?} routes (address {address}, path {path}) over a link that does not exist to {next:?}")]
    MissingLink {
        node: String,
        next: String,
        address: u16,
        path: u16,
    },
    #[error("routing tables loop for (address {address}, path {path}) starting at {node:?}")]
    TableLoop {
        node: String,
        address: u16,
        path: u16,
    },
    #[error("no route at {node:?} for (address {address}, path {path}); packet dropped")]
    NoRoute {
        node: String,
        address: u16,
        path: u16,
    },
    #[error("forwarding exceeded {0} hops; routing loop")]
    ForwardingLoop(usize),
    #[error("failed to parse topology: {0}")]
    Parse(String),
}

/// Decoded BAP header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BapHeader {
    pub flag: bool,
    /// 3 bits, carried verbatim.
    pub reserved: u8,
    pub bap_address: u16,
    pub path_id: u16,
}

impl BapHeader {
    pub fn new(flag: bool, bap_address: u16, path_id: u16) -> Result<Self, BapError> {
        let h = BapHeader {
            flag,
            reserved: 0,
            bap_address,
            path_id,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), BapError> {
        if self.reserved > 0x7 {
            return Err(BapError::FieldRange {
                field: "reserved",
                value: self.reserved as u16,
                max: 0x7,
            });
        }
        if self.bap_address > MAX_BAP_ADDRESS {
            return Err(BapError::FieldRange {
                field: "bap_address",
                value: self.bap_address,
                max: MAX_BAP_ADDRESS,
            });
        }
        if self.path_id > MAX_PATH_ID {
            return Err(BapError::FieldRange {
                field: "path_id",
                value: self.path_id,
                max: MAX_PATH_ID,
            });
        }
        Ok(())
    }
}

/// Encodes a header into its 3-octet wire form.
pub fn bap_encode(header: &BapHeader) -> Result<[u8; BAP_HEADER_LEN], BapError> {
    header.validate()?;
    let a = header.bap_address;
    let p = header.path_id;
    Ok([
        ((header.flag as u8) << 7) | (header.reserved << 4) | ((a >> 6) as u8 & 0x0F),
        (((a & 0x3F) as u8) << 2) | ((p >> 8) as u8 & 0x03),
        (p & 0xFF) as u8,
    ])
}

/// Decodes a 3-octet wire header; the exact inverse of [`bap_encode`].
pub fn bap_decode(octets: &[u8]) -> Result<BapHeader, BapError> {
    if octets.len() != BAP_HEADER_LEN {
        return Err(BapError::WrongLength(octets.len()));
    }
    Ok(BapHeader {
        flag: octets[0] & 0x80 != 0,
        reserved: (octets[0] >> 4) & 0x07,
        bap_address: (((octets[0] & 0x0F) as u16) << 6) | ((octets[1] >> 2) as u16),
        path_id: (((octets[1] & 0x03) as u16) << 8) | octets[2] as u16,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeCfg {
    id: String,
    bap_address: u16,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkCfg {
    from: String,
    to: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteCfg {
    node: String,
    dest: u16,
    path: u16,
    next: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyCfg {
    #[serde(default)]
    nodes: Vec<NodeCfg>,
    #[serde(default)]
    links: Vec<LinkCfg>,
    #[serde(default)]
    routes: Vec<RouteCfg>,
}

/// An IAB topology with per-node BAP routing tables, validated so that
/// forwarding can never revisit a node.
#[derive(Debug, Clone)]
pub struct Topology {
    ids: Vec<String>,
    address_of: Vec<u16>,
    /// Directed adjacency, by node index.
    links: Vec<Vec<usize>>,
    /// Per node: (address, path) -> next hop index.
    tables: Vec<HashMap<(u16, u16), usize>>,
}

impl Topology {
    /// Builds and validates a topology from node, link and route lists.
    pub fn new(
        nodes: &[(&str, u16)],
        links: &[(&str, &str)],
        routes: &[(&str, u16, u16, &str)],
    ) -> Result<Self, BapError> {
        let mut ids = Vec::new();
        let mut address_of = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for &(id, addr) in nodes {
            if addr > MAX_BAP_ADDRESS {
                return Err(BapError::FieldRange {
                    field: "bap_address",
                    value: addr,
                    max: MAX_BAP_ADDRESS,
                });
            }
            if index.insert(id.to_string(), ids.len()).is_some() {
                return Err(BapError::DuplicateNode(id.to_string()));
            }
            ids.push(id.to_string());
            address_of.push(addr);
        }
        let look = |id: &str| -> Result<usize, BapError> {
            index
                .get(id)
                .copied()
                .ok_or_else(|| BapError::UnknownNode(id.to_string()))
        };
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &(from, to) in links {
            let f = look(from)?;
            let t = look(to)?;
            adjacency[f].push(t);
        }
        let mut tables = vec![HashMap::new(); ids.len()];
        for &(node, dest, path, next) in routes {
            let n = look(node)?;
            let h = look(next)?;
            if n == h {
                return Err(BapError::SelfRoute {
                    node: node.to_string(),
                    address: dest,
                    path,
                });
            }
            if !adjacency[n].contains(&h) {
                return Err(BapError::MissingLink {
                    node: node.to_string(),
                    next: next.to_string(),
                    address: dest,
                    path,
                });
            }
            tables[n].insert((dest, path), h);
        }
        let topo = Topology {
            ids,
            address_of,
            links: adjacency,
            tables,
        };
        topo.check_for_cycles()?;
        Ok(topo)
    }

    /// Parses the structured text form:
    ///
    /// ```toml
    /// [[nodes]]
    /// id = "donor"
    /// bap_address = 0
    ///
    /// [[links]]
    /// from = "donor"
    /// to = "iab2"
    ///
    /// [[routes]]
    /// node = "donor"
    /// dest = 5
    /// path = 1
    /// next = "iab2"
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, BapError> {
        let cfg: TopologyCfg = toml::from_str(text).map_err(|e| BapError::Parse(e.to_string()))?;
        let nodes: Vec<(&str, u16)> = cfg
            .nodes
            .iter()
            .map(|n| (n.id.as_str(), n.bap_address))
            .collect();
        let links: Vec<(&str, &str)> = cfg
            .links
            .iter()
            .map(|l| (l.from.as_str(), l.to.as_str()))
            .collect();
        let routes: Vec<(&str, u16, u16, &str)> = cfg
            .routes
            .iter()
            .map(|r| (r.node.as_str(), r.dest, r.path, r.next.as_str()))
            .collect();
        Topology::new(&nodes, &links, &routes)
    }

    /// Every (address, path) chain must terminate; a cycle would make
    /// forwarding revisit a node.
    fn check_for_cycles(&self) -> Result<(), BapError> {
        let mut keys: Vec<(u16, u16)> = self
            .tables
            .iter()
            .flat_map(|t| t.keys().copied())
            .collect();
        keys.sort_unstable();
        keys.dedup();
        for key in keys {
            for start in 0..self.ids.len() {
                let mut visited = vec![false; self.ids.len()];
                let mut at = start;
                loop {
                    if visited[at] {
                        return Err(BapError::TableLoop {
                            node: self.ids[start].clone(),
                            address: key.0,
                            path: key.1,
                        });
                    }
                    visited[at] = true;
                    if self.address_of[at] == key.0 {
                        break; // delivered
                    }
                    match self.tables[at].get(&key) {
                        Some(&next) => at = next,
                        None => break, // dropped, but not a loop
                    }
                }
            }
        }
        Ok(())
    }

    pub fn node_index(&self, id: &str) -> Result<usize, BapError> {
        self.ids
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| BapError::UnknownNode(id.to_string()))
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn has_link(&self, from: usize, to: usize) -> bool {
        self.links[from].contains(&to)
    }
}

/// Forwards a packet hop by hop from `ingress` until the node whose BAP
/// address matches the header strips it. Returns the traversed node ids
/// in order, ingress first, destination last.
pub fn forward(
    header: &BapHeader,
    topology: &Topology,
    ingress: &str,
) -> Result<Vec<String>, BapError> {
    header.validate()?;
    let mut at = topology.node_index(ingress)?;
    let key = (header.bap_address, header.path_id);
    let mut path = vec![topology.node_id(at).to_string()];
    let max_hops = topology.n_nodes();
    for _ in 0..max_hops {
        if topology.address_of[at] == header.bap_address {
            return Ok(path); // destination strips the header
        }
        match topology.tables[at].get(&key) {
            Some(&next) => {
                at = next;
                path.push(topology.node_id(at).to_string());
            }
            None => {
                return Err(BapError::NoRoute {
                    node: topology.node_id(at).to_string(),
                    address: header.bap_address,
                    path: header.path_id,
                })
            }
        }
    }
    Err(BapError::ForwardingLoop(max_hops))
}

/// The two-path example topology used in the protocol walkthroughs: a
/// donor DU above IAB1/IAB2, joined at IAB4 toward IAB5.
pub fn example_topology() -> Topology {
    Topology::new(
        &[
            ("donor-du", 0),
            ("iab1", 1),
            ("iab2", 2),
            ("iab3", 3),
            ("iab4", 4),
            ("iab5", 5),
        ],
        &[
            ("donor-du", "iab1"),
            ("donor-du", "iab2"),
            ("iab1", "iab3"),
            ("iab2", "iab4"),
            ("iab3", "iab4"),
            ("iab4", "iab5"),
        ],
        &[
            // Path 1: donor -> IAB2 -> IAB4 -> IAB5.
            ("donor-du", 5, 1, "iab2"),
            ("iab2", 5, 1, "iab4"),
            ("iab4", 5, 1, "iab5"),
            // Path 2: donor -> IAB1 -> IAB3 -> IAB4 -> IAB5.
            ("donor-du", 5, 2, "iab1"),
            ("iab1", 5, 2, "iab3"),
            ("iab3", 5, 2, "iab4"),
            ("iab4", 5, 2, "iab5"),
        ],
    )
    .expect("example topology is valid")
}
