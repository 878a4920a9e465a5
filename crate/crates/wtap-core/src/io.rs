//! Reading and writing instances, solutions and reports.
//!
//! Two instance encodings are supported: a line-oriented text format
//!
//! ```text
//! # comment
//! wtap <nodes> <links>
//! root 0
//! edge 0 1
//! link 0 1 5/2
//! ```
//!
//! (exactly `nodes - 1` edge lines, `links` link lines, an optional root
//! line) and a JSON mirror of the same data. All rationals travel as
//! strings, `"p/q"` or `"p"`, so no precision is lost.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{FractionalSolution, LinkId, WtapInstance};
use crate::rational::{format_rat, parse_rat, Rat};
use crate::rounding::{ApproxReport, RoundingMethod};

#[derive(Debug, Serialize, Deserialize)]
pub struct LinkDoc {
    pub u: u32,
    pub v: u32,
    pub cost: String,
}

/// JSON face of an instance. The node set is implied by the edges (plus the
/// root for the single-node tree).
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub edges: Vec<(u32, u32)>,
    pub links: Vec<LinkDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub root: Option<u32>,
}

impl InstanceDoc {
    pub fn from_instance(inst: &WtapInstance) -> Self {
        Self {
            edges: inst.edges().iter().map(|e| (e.u.0, e.v.0)).collect(),
            links: inst
                .links()
                .iter()
                .map(|l| LinkDoc {
                    u: l.u.0,
                    v: l.v.0,
                    cost: format_rat(&l.cost),
                })
                .collect(),
            root: inst.root().map(|r| r.0),
        }
    }

    pub fn into_instance(self) -> Result<WtapInstance> {
        let links = self
            .links
            .into_iter()
            .map(|l| Ok((l.u, l.v, parse_rat(&l.cost)?)))
            .collect::<Result<Vec<_>>>()?;
        WtapInstance::new(self.edges, links, self.root)
    }
}

pub fn write_text(inst: &WtapInstance) -> String {
    let mut out = format!("wtap {} {}\n", inst.nodes().len(), inst.links().len());
    if let Some(r) = inst.root() {
        out.push_str(&format!("root {r}\n"));
    }
    for e in inst.edges() {
        out.push_str(&format!("edge {} {}\n", e.u, e.v));
    }
    for l in inst.links() {
        out.push_str(&format!("link {} {} {}\n", l.u, l.v, format_rat(&l.cost)));
    }
    out
}

pub fn parse_text(s: &str) -> Result<WtapInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut root: Option<u32> = None;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut links: Vec<(u32, u32, Rat)> = Vec::new();
    let bad = |line: usize, what: &str| -> Error {
        Error::InvalidArgument(format!("line {line}: {what}"))
    };
    for (i, raw) in s.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut parts = text.split_whitespace();
        let word = parts.next().unwrap();
        let mut arg = |what: &str| -> Result<&str> {
            parts.next().ok_or_else(|| bad(line, what))
        };
        let num = |what: &str, s: &str| -> Result<u32> {
            s.parse().map_err(|_| bad(line, what))
        };
        match word {
            "wtap" => {
                if header.is_some() {
                    return Err(bad(line, "duplicate header"));
                }
                let n = num("bad node count", arg("missing node count")?)?;
                let m = num("bad link count", arg("missing link count")?)?;
                header = Some((n as usize, m as usize));
            }
            "root" => {
                if root.is_some() {
                    return Err(bad(line, "duplicate root"));
                }
                root = Some(num("bad root", arg("missing root")?)?);
            }
            "edge" => {
                let u = num("bad endpoint", arg("missing endpoint")?)?;
                let v = num("bad endpoint", arg("missing endpoint")?)?;
                edges.push((u, v));
            }
            "link" => {
                let u = num("bad endpoint", arg("missing endpoint")?)?;
                let v = num("bad endpoint", arg("missing endpoint")?)?;
                let cost = parse_rat(arg("missing cost")?)?;
                links.push((u, v, cost));
            }
            other => return Err(bad(line, &format!("unknown directive '{other}'"))),
        }
        if parts.next().is_some() {
            return Err(bad(line, "trailing tokens"));
        }
    }
    let (n, m) = header.ok_or_else(|| Error::InvalidArgument("missing 'wtap' header".into()))?;
    if links.len() != m {
        return Err(Error::InvalidArgument(format!(
            "header announces {m} links, found {}",
            links.len()
        )));
    }
    let expected_edges = n.saturating_sub(1);
    if edges.len() != expected_edges {
        return Err(Error::InvalidArgument(format!(
            "{n} nodes need {expected_edges} edges, found {}",
            edges.len()
        )));
    }
    let inst = WtapInstance::new(edges, links, root)?;
    if inst.nodes().len() != n {
        return Err(Error::InvalidArgument(format!(
            "header announces {n} nodes, edges span {}",
            inst.nodes().len()
        )));
    }
    Ok(inst)
}

pub fn write_json(inst: &WtapInstance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from_instance(inst))
        .expect("instance documents always serialize")
}

pub fn parse_json(s: &str) -> Result<WtapInstance> {
    let doc: InstanceDoc = serde_json::from_str(s)
        .map_err(|e| Error::InvalidArgument(format!("bad instance json: {e}")))?;
    doc.into_instance()
}

/// An integral solution: chosen link ids plus their total cost.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub links: Vec<u32>,
    pub cost: String,
}

impl SolutionDoc {
    pub fn new(inst: &WtapInstance, links: &BTreeSet<LinkId>) -> Self {
        Self {
            links: links.iter().map(|l| l.0).collect(),
            cost: format_rat(&inst.link_set_cost(links)),
        }
    }

    pub fn link_set(&self) -> BTreeSet<LinkId> {
        self.links.iter().map(|&l| LinkId(l)).collect()
    }
}

pub fn write_solution_json(inst: &WtapInstance, links: &BTreeSet<LinkId>) -> String {
    serde_json::to_string_pretty(&SolutionDoc::new(inst, links))
        .expect("solution documents always serialize")
}

pub fn parse_solution_json(s: &str) -> Result<SolutionDoc> {
    serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("bad solution json: {e}")))
}

/// A fractional point, serialized as a link-id-to-rational map.
pub fn write_point_json(x: &FractionalSolution) -> String {
    let map: BTreeMap<String, String> = x
        .iter()
        .map(|(l, v)| (l.0.to_string(), format_rat(v)))
        .collect();
    serde_json::to_string_pretty(&map).expect("point documents always serialize")
}

pub fn parse_point_json(s: &str) -> Result<FractionalSolution> {
    let map: BTreeMap<String, String> = serde_json::from_str(s)
        .map_err(|e| Error::InvalidArgument(format!("bad point json: {e}")))?;
    let mut x = FractionalSolution::new();
    for (k, v) in map {
        let id: u32 = k
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad link id '{k}'")))?;
        x.set(LinkId(id), parse_rat(&v)?);
    }
    Ok(x)
}

#[derive(Debug, Serialize)]
struct PairDoc {
    nodes: usize,
    method: &'static str,
    cost: String,
    certificate: String,
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    lp_value: String,
    output_cost: String,
    output_links: Vec<u32>,
    ratio_vs_lp: Option<String>,
    heavy_cost: String,
    split_cost: String,
    per_pair: Vec<PairDoc>,
    cuts_added: usize,
    bundles_added: usize,
    restarts: usize,
    timings_ms: BTreeMap<String, u128>,
}

pub fn write_report_json(report: &ApproxReport) -> String {
    let doc = ReportDoc {
        lp_value: format_rat(&report.lp_value),
        output_cost: format_rat(&report.output_cost),
        output_links: report.output_links.iter().map(|l| l.0).collect(),
        ratio_vs_lp: report.ratio_vs_lp.as_ref().map(format_rat),
        heavy_cost: format_rat(&report.heavy_cost),
        split_cost: format_rat(&report.split_cost),
        per_pair: report
            .per_pair
            .iter()
            .map(|p| PairDoc {
                nodes: p.nodes,
                method: match p.method {
                    RoundingMethod::CrossHeavy => "cross-heavy",
                    RoundingMethod::Bundle => "bundle",
                },
                cost: format_rat(&p.cost),
                certificate: format_rat(&p.certificate),
            })
            .collect(),
        cuts_added: report.cuts_added,
        bundles_added: report.bundles_added,
        restarts: report.restarts,
        timings_ms: report.timings_ms.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("report documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn sample() -> WtapInstance {
        WtapInstance::new(
            vec![(0, 1), (1, 2), (1, 3)],
            vec![(0, 2, ratio(5, 2)), (2, 3, rat(1)), (0, 3, rat(4))],
            Some(0),
        )
        .unwrap()
    }

    fn same_instance(a: &WtapInstance, b: &WtapInstance) -> bool {
        a.nodes() == b.nodes()
            && a.edges() == b.edges()
            && a.links() == b.links()
            && a.root() == b.root()
    }

    #[test]
    fn text_round_trip_preserves_everything() {
        let inst = sample();
        let text = write_text(&inst);
        let back = parse_text(&text).unwrap();
        assert!(same_instance(&inst, &back));
    }

    #[test]
    fn text_format_tolerates_comments_and_blank_lines() {
        let text = "# tiny\n\nwtap 2 1 # header\nroot 1\nedge 0 1\nlink 0 1 3/2\n";
        let inst = parse_text(text).unwrap();
        assert_eq!(inst.nodes().len(), 2);
        assert_eq!(inst.links()[0].cost, ratio(3, 2));
        assert_eq!(inst.root().unwrap().0, 1);
    }

    #[test]
    fn text_parser_rejects_malformed_input() {
        for text in [
            "edge 0 1\n",                              // missing header
            "wtap 2 0\nedge 0 1\nedge 1 2\n",          // edge count mismatch
            "wtap 2 1\nedge 0 1\n",                    // link count mismatch
            "wtap 3 0\nedge 0 1\nedge 1 2 9\n",        // trailing tokens
            "wtap 2 1\nedge 0 1\nlink 0 1 1/0\n",      // zero denominator
            "wtap 2 1\nedge 0 1\nlink 0 1\n",          // missing cost
            "wtap 2 0\nedge 0 1\nnonsense 3\n",        // unknown directive
            "wtap 9 0\nedge 0 1\n",                    // node count mismatch
            "wtap 2 0\nwtap 2 0\nedge 0 1\n",          // duplicate header
        ] {
            assert!(parse_text(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let inst = sample();
        let back = parse_json(&write_json(&inst)).unwrap();
        assert!(same_instance(&inst, &back));
    }

    #[test]
    fn single_node_instances_round_trip() {
        let inst = WtapInstance::new(Vec::new(), Vec::new(), Some(3)).unwrap();
        let back = parse_text(&write_text(&inst)).unwrap();
        assert!(same_instance(&inst, &back));
        let back = parse_json(&write_json(&inst)).unwrap();
        assert!(same_instance(&inst, &back));
    }

    #[test]
    fn solution_and_point_round_trip() {
        let inst = sample();
        let chosen = BTreeSet::from([LinkId(0), LinkId(1)]);
        let doc = parse_solution_json(&write_solution_json(&inst, &chosen)).unwrap();
        assert_eq!(doc.link_set(), chosen);
        assert_eq!(parse_rat(&doc.cost).unwrap(), ratio(7, 2));

        let x = FractionalSolution::from_entries([
            (LinkId(0), ratio(1, 2)),
            (LinkId(2), rat(2)),
        ]);
        let back = parse_point_json(&write_point_json(&x)).unwrap();
        assert_eq!(back, x);
    }
}
