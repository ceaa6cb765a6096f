//! Plain-text network file format.
//!
//! ```text
//! # comment
//! [nodes]
//! # id region rail x y
//! 1 1 1 0 0
//! [edges]
//! # id tail head length_km rail [road_capacity]
//! 1 1 2 6 1 25900
//! ```
//!
//! `rail` is a 0/1 flag: on a node it marks a station candidate, on an edge a
//! candidate rail line mirroring the road link.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SiteSpec {
    pub id: u32,
    pub region: u8,
    pub rail: bool,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: u32,
    pub tail: u32,
    pub head: u32,
    pub length_km: f64,
    pub rail: bool,
    /// Road capacity in pax/day; 0 means unknown (only the BPR oracle needs it).
    pub road_capacity: u32,
}

/// Parsed contents of a network file, before any graph invariant is checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkSpec {
    pub sites: Vec<SiteSpec>,
    pub links: Vec<LinkSpec>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Nodes,
    Edges,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing field `{what}`")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn flag(tok: Option<&str>, line: usize, what: &str) -> Result<bool> {
    match tok {
        Some("1") => Ok(true),
        Some("0") => Ok(false),
        Some(t) => Err(parse_err(line, format!("invalid {what} flag `{t}` (expected 0 or 1)"))),
        None => Err(parse_err(line, format!("missing field `{what}`"))),
    }
}

impl NetworkSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = NetworkSpec::default();
        let mut section = Section::None;
        let mut site_lines = BTreeMap::new();
        let mut link_lines = Vec::new();
        let mut link_ids = BTreeSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if content.starts_with('[') {
                section = match content.to_ascii_lowercase().as_str() {
                    "[nodes]" => Section::Nodes,
                    "[edges]" => Section::Edges,
                    other => return Err(parse_err(line, format!("unknown section {other}"))),
                };
                continue;
            }
            let mut toks = content.split_whitespace();
            match section {
                Section::None => return Err(parse_err(line, "data before any section header")),
                Section::Nodes => {
                    let site = SiteSpec {
                        id: field(toks.next(), line, "node id")?,
                        region: field(toks.next(), line, "region")?,
                        rail: flag(toks.next(), line, "rail")?,
                        x: field(toks.next(), line, "x")?,
                        y: field(toks.next(), line, "y")?,
                    };
                    if toks.next().is_some() {
                        return Err(parse_err(line, "trailing fields on node line"));
                    }
                    if site_lines.insert(site.id, line).is_some() {
                        return Err(parse_err(line, format!("duplicate node id {}", site.id)));
                    }
                    spec.sites.push(site);
                }
                Section::Edges => {
                    let id: u32 = field(toks.next(), line, "edge id")?;
                    let named = |e: Error| match e {
                        Error::Parse { line, message } => parse_err(line, format!("edge {id}: {message}")),
                        other => other,
                    };
                    let link = (|| -> Result<LinkSpec> {
                        let link = LinkSpec {
                            id,
                            tail: field(toks.next(), line, "tail")?,
                            head: field(toks.next(), line, "head")?,
                            length_km: field(toks.next(), line, "length")?,
                            rail: flag(toks.next(), line, "rail")?,
                            road_capacity: match toks.next() {
                                Some(t) => field(Some(t), line, "road capacity")?,
                                None => 0,
                            },
                        };
                        if toks.next().is_some() {
                            return Err(parse_err(line, "trailing fields"));
                        }
                        Ok(link)
                    })()
                    .map_err(named)?;
                    if !link_ids.insert(link.id) {
                        return Err(parse_err(line, format!("duplicate edge id {}", link.id)));
                    }
                    link_lines.push(line);
                    spec.links.push(link);
                }
            }
        }

        for (link, &line) in spec.links.iter().zip(&link_lines) {
            for end in [link.tail, link.head] {
                if !site_lines.contains_key(&end) {
                    return Err(parse_err(
                        line,
                        format!("edge {} references missing node {end}", link.id),
                    ));
                }
            }
        }
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from("# netcoop network file\n\n[nodes]\n# id region rail x y\n");
        for s in &self.sites {
            let _ = writeln!(out, "{} {} {} {} {}", s.id, s.region, s.rail as u8, s.x, s.y);
        }
        out.push_str("\n[edges]\n# id tail head length_km rail road_capacity\n");
        for l in &self.links {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                l.id, l.tail, l.head, l.length_km, l.rail as u8, l.road_capacity
            );
        }
        out
    }

    /// Violations detectable on the raw records; graph-level checks live in
    /// [`crate::net_model::MobilityGraph::check_invariants`].
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let rail_sites: BTreeSet<u32> =
            self.sites.iter().filter(|s| s.rail).map(|s| s.id).collect();
        for s in &self.sites {
            if s.region != 1 && s.region != 2 {
                out.push(format!(
                    "partition: node {} has region {} (regions must be 1 or 2)",
                    s.id, s.region
                ));
            }
        }
        for l in &self.links {
            if !(l.length_km.is_finite() && l.length_km > 0.0) {
                out.push(format!("edge {}: length must be positive, got {}", l.id, l.length_km));
            }
            if l.tail == l.head {
                out.push(format!("edge {}: self-loop on node {}", l.id, l.tail));
            }
            if l.rail && !(rail_sites.contains(&l.tail) && rail_sites.contains(&l.head)) {
                out.push(format!(
                    "edge {}: rail candidate between non-station nodes {} -> {}",
                    l.id, l.tail, l.head
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two sites
[nodes]
1 1 1 0 0
2 2 1 1 0
[edges]
10 1 2 3.5 1 1000
11 2 1 3.5 0
";

    #[test]
    fn parses_small_file() {
        let spec = NetworkSpec::parse(SMALL).unwrap();
        assert_eq!(spec.sites.len(), 2);
        assert_eq!(spec.links[0].road_capacity, 1000);
        assert_eq!(spec.links[1].road_capacity, 0);
        assert!(!spec.links[1].rail);
        assert!(spec.violations().is_empty());
    }

    #[test]
    fn dangling_endpoint_names_edge() {
        let text = SMALL.replace("11 2 1 3.5 0", "11 2 7 3.5 0");
        match NetworkSpec::parse(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("edge 11"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let text = SMALL.replace("3.5 1 1000", "abc 1 1000");
        assert!(matches!(NetworkSpec::parse(&text), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn region_three_is_a_violation() {
        let text = SMALL.replace("2 2 1 1 0", "2 3 1 1 0");
        let v = NetworkSpec::parse(&text).unwrap().violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("partition"));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let spec = NetworkSpec::parse(SMALL).unwrap();
        let again = NetworkSpec::parse(&spec.to_file_string()).unwrap();
        assert_eq!(spec, again);
    }
}
