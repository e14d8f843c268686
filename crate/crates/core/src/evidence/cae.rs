use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{EvidenceError, HazardGroup};
use crate::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Claim,
    Argument,
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidencePayload {
    pub path: String,
    pub sha256: String,
    pub timestamp: String,
}

impl EvidencePayload {
    /// Hashes the file's bytes. The timestamp is `SOURCE_DATE_EPOCH` when
    /// set, otherwise the file's modification time.
    pub fn from_file(path: &Path) -> Result<Self, EvidenceError> {
        let io = |e: std::io::Error| EvidenceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let bytes = std::fs::read(path).map_err(io)?;
        let when: DateTime<Utc> = match std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse::<i64>().ok())
            .and_then(|secs| DateTime::from_timestamp(secs, 0))
        {
            Some(t) => t,
            None => std::fs::metadata(path).and_then(|m| m.modified()).map_err(io)?.into(),
        };
        Ok(EvidencePayload {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            timestamp: when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaeNode {
    pub id: String,
    pub kind: NodeKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazard_group: Option<HazardGroup>,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidencePayload>,
    /// Payloads replaced by forced re-attachment, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub revisions: Vec<EvidencePayload>,
}

impl CaeNode {
    fn new(id: &str, kind: NodeKind, text: &str, group: Option<HazardGroup>, children: &[&str]) -> Self {
        CaeNode {
            id: id.to_string(),
            kind,
            text: text.to_string(),
            hazard_group: group,
            children: children.iter().map(|c| c.to_string()).collect(),
            evidence: None,
            revisions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaeGraph {
    pub nodes: Vec<CaeNode>,
    pub root: String,
}

/// The fixed top-level safety case for the pond survey robot.
pub fn default_cae_skeleton() -> CaeGraph {
    use HazardGroup::*;
    use NodeKind::*;
    let nodes = vec![
        CaeNode::new(
            "C1",
            Claim,
            "Robot is adequately safe to survey the nuclear waste storage pond",
            None,
            &["C-nuclear", "C-conventional", "C-physical", "C-cyber"],
        ),
        CaeNode::new(
            "C-nuclear",
            Claim,
            "Radiological hazards are reduced as low as reasonably practicable",
            Some(NuclearRadiological),
            &["C-propeller-splash"],
        ),
        CaeNode::new(
            "C-propeller-splash",
            Claim,
            "Propeller splash does not spread contamination (not expanded)",
            Some(NuclearRadiological),
            &[],
        ),
        CaeNode::new(
            "C-conventional",
            Claim,
            "Conventional hazards are adequately controlled",
            Some(Conventional),
            &["C-hydrogen"],
        ),
        CaeNode::new(
            "C-hydrogen",
            Claim,
            "Hydrogen accumulation cannot be ignited by the robot (not expanded)",
            Some(Conventional),
            &[],
        ),
        CaeNode::new(
            "C-physical",
            Claim,
            "Physical hazards to the pond and robot are adequately controlled",
            Some(Physical),
            &["C-collision", "C-irretrievable"],
        ),
        CaeNode::new(
            "C-collision",
            Claim,
            "The robot does not collide with the pond walls, skips or other structures",
            Some(Physical),
            &["A-method1", "A-method2"],
        ),
        CaeNode::new(
            "A-method1",
            Argument,
            "Method 1 (engineered guard): whisker contacts open the safety relay and remove propulsion power",
            Some(Physical),
            &["E-demand-stats"],
        ),
        CaeNode::new(
            "E-demand-stats",
            Evidence,
            "Guard demand statistics from a fault-injection campaign with both software channels failed",
            Some(Physical),
            &[],
        ),
        CaeNode::new(
            "A-method2",
            Argument,
            "Method 2 (verifiable AI): the rules-based safety function is model checked and statistically tested",
            Some(Physical),
            &["E-verify-collision", "E-campaign"],
        ),
        CaeNode::new(
            "E-verify-collision",
            Evidence,
            "Model-checking report for the collision-avoidance properties",
            Some(Physical),
            &[],
        ),
        CaeNode::new(
            "E-campaign",
            Evidence,
            "Monte Carlo campaign report with the collision probability bound",
            Some(Physical),
            &[],
        ),
        CaeNode::new(
            "C-irretrievable",
            Claim,
            "The robot cannot become irretrievable in the pond (not expanded)",
            Some(Physical),
            &[],
        ),
        CaeNode::new(
            "C-cyber",
            Claim,
            "Cyber security threats to the robot are adequately controlled",
            Some(CyberSecurity),
            &[],
        ),
    ];
    CaeGraph {
        nodes,
        root: "C1".to_string(),
    }
}

impl CaeGraph {
    pub fn node(&self, id: &str) -> Option<&CaeNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn node_mut(&mut self, id: &str) -> Option<&mut CaeNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self, EvidenceError> {
        let g: CaeGraph = serde_json::from_str(text).map_err(|e| EvidenceError::InvalidGraph(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph serializes");
        s.push('\n');
        s
    }

    /// Unique ids, resolvable children, a present root, evidence nodes as
    /// leaves, hashed payloads only on evidence nodes, and no cycles.
    pub fn validate(&self) -> Result<(), EvidenceError> {
        let bad = |m: String| Err(EvidenceError::InvalidGraph(m));
        let mut index = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return bad(format!("duplicate node id `{}`", n.id));
            }
        }
        if !index.contains_key(self.root.as_str()) {
            return bad(format!("root `{}` is not a node", self.root));
        }
        for n in &self.nodes {
            for c in &n.children {
                if !index.contains_key(c.as_str()) {
                    return bad(format!("`{}` has unknown child `{c}`", n.id));
                }
            }
            if n.kind == NodeKind::Evidence && !n.children.is_empty() {
                return bad(format!("evidence node `{}` has children", n.id));
            }
            if n.kind != NodeKind::Evidence && (n.evidence.is_some() || !n.revisions.is_empty()) {
                return bad(format!("`{}` carries a payload but is not an evidence node", n.id));
            }
            if let Some(p) = &n.evidence {
                if p.sha256.len() != 64 || !p.sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
                    return bad(format!("`{}` has a malformed payload hash", n.id));
                }
            }
        }
        // iterative three-colour DFS over every node
        let mut colour = vec![0u8; self.nodes.len()];
        for start in 0..self.nodes.len() {
            if colour[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            colour[start] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(child) = self.nodes[v].children.get(*next) {
                    *next += 1;
                    let c = index[child.as_str()];
                    match colour[c] {
                        0 => {
                            colour[c] = 1;
                            stack.push((c, 0));
                        }
                        1 => return bad(format!("cycle through `{}`", self.nodes[c].id)),
                        _ => {}
                    }
                } else {
                    colour[v] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Records `payload` on an evidence node. Re-attaching identical bytes
    /// leaves the node unchanged; a different hash needs `force`, which
    /// moves the old payload into the node's revision list.
    pub fn attach_evidence(
        &mut self,
        node_id: &str,
        payload: EvidencePayload,
        force: bool,
    ) -> Result<(), EvidenceError> {
        let node = self
            .node_mut(node_id)
            .ok_or_else(|| EvidenceError::NodeNotFound(node_id.to_string()))?;
        if node.kind != NodeKind::Evidence {
            return Err(EvidenceError::NotEvidenceNode(node_id.to_string()));
        }
        match node.evidence.take() {
            None => node.evidence = Some(payload),
            Some(old) if old.sha256 == payload.sha256 => node.evidence = Some(old),
            Some(old) if force => {
                node.revisions.push(old);
                node.evidence = Some(payload);
            }
            Some(old) => {
                let err = EvidenceError::HashConflict {
                    node: node_id.to_string(),
                    existing: old.sha256.clone(),
                    new: payload.sha256,
                };
                node.evidence = Some(old);
                return Err(err);
            }
        }
        Ok(())
    }

    pub fn evidence_nodes(&self) -> impl Iterator<Item = &CaeNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Evidence)
    }

    pub fn missing_evidence(&self) -> Vec<&str> {
        self.evidence_nodes()
            .filter(|n| n.evidence.is_none())
            .map(|n| n.id.as_str())
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_evidence().is_empty()
    }

    /// Indented tree from the root; evidence leaves are marked ✔ or ✘.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut seen = HashSet::new();
        self.render_node(&self.root, 0, &mut out, &mut seen);
        out
    }

    fn render_node<'a>(&'a self, id: &'a str, depth: usize, out: &mut String, seen: &mut HashSet<&'a str>) {
        let Some(n) = self.node(id) else { return };
        let mark = match (n.kind, &n.evidence) {
            (NodeKind::Evidence, Some(_)) => "✔ ",
            (NodeKind::Evidence, None) => "✘ ",
            _ => "",
        };
        let kind = match n.kind {
            NodeKind::Claim => "claim",
            NodeKind::Argument => "argument",
            NodeKind::Evidence => "evidence",
        };
        let _ = write!(out, "{}{mark}{} [{kind}] {}", "  ".repeat(depth), n.id, n.text);
        if let Some(p) = &n.evidence {
            let _ = write!(out, " <{} sha256:{}>", p.path, &p.sha256[..12]);
        }
        out.push('\n');
        if !seen.insert(id) {
            return;
        }
        for c in &n.children {
            self.render_node(c, depth + 1, out, seen);
        }
    }
}
