//! Finite extensive-form games with explicitly declared information sets.
//!
//! Games are read from and written to the `qrepath-game v1` JSON format:
//!
//! ```json
//! {
//!   "format": "qrepath-game v1",
//!   "players": ["1", "2"],
//!   "root": {
//!     "player": "1", "infoset": "a",
//!     "actions": [
//!       {"label": "L", "child": {"payoffs": [1, 0]}},
//!       {"label": "R", "child": {"player": "chance", "actions": [
//!         {"label": "x", "prob": 0.5, "child": {"payoffs": [0, 2]}},
//!         {"label": "y", "prob": 0.5, "child": {"payoffs": [2, 0]}}
//!       ]}}
//!     ]
//!   }
//! }
//! ```
//!
//! `"format"` is optional on input. Information set ids are scoped per player and every node of
//! an information set must list the same action labels in the same order. `"prob"` is required on
//! the actions of `"chance"` nodes and rejected everywhere else.
//!
//! Nodes are stored in depth-first preorder with actions in declared order, and information sets
//! are numbered by first appearance in that order. Because of perfect recall this numbering
//! places every information set after all information sets of the same player that precede it
//! in the tree.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Version tag of the game file format.
pub const FORMAT_TAG: &str = "qrepath-game v1";

/// Reserved player name for nature.
pub const CHANCE: &str = "chance";

const CHANCE_SUM_TOL: f64 = 1e-12;

pub type NodeId = usize;

/// The `index`-th information set of `player`, numbered in tree order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InfosetId {
    pub player: usize,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Owner {
    Player(usize),
    Chance,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Decision {
        player: usize,
        infoset: usize,
        children: Vec<NodeId>,
    },
    Chance {
        labels: Vec<String>,
        probs: Vec<f64>,
        children: Vec<NodeId>,
    },
    Terminal {
        payoffs: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    /// Parent node and the index of the action leading here.
    pub parent: Option<(NodeId, usize)>,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Infoset {
    pub name: String,
    pub actions: Vec<String>,
    pub members: Vec<NodeId>,
}

/// One step of a player's record along a history.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RecordEntry {
    pub infoset: InfosetId,
    /// Action index taken there, `None` for the final information set when the history itself
    /// is one of the player's decision nodes.
    pub action: Option<usize>,
}

/// Two histories in one information set whose owner remembers them differently.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RecallViolation {
    pub infoset: InfosetId,
    pub first: Vec<String>,
    pub second: Vec<String>,
}

impl fmt::Display for RecallViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "player {} infoset {}: <{}> and <{}> have different records",
            self.infoset.player,
            self.infoset.index,
            self.first.join(","),
            self.second.join(",")
        )
    }
}

/// An immutable game tree. Construct with [`parse_game`] or [`GameTree::from_value`].
#[derive(Clone, Debug, PartialEq)]
pub struct GameTree {
    players: Vec<String>,
    nodes: Vec<Node>,
    infosets: Vec<Vec<Infoset>>,
}

/// Parse a game from `qrepath-game v1` text. Perfect recall is not checked here; see
/// [`GameTree::check_perfect_recall`].
pub fn parse_game(text: &str) -> Result<GameTree> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = Value::deserialize(&mut de).and_then(|v| de.end().map(|()| v));
    match value {
        Ok(value) => GameTree::from_value(&value),
        Err(e) => Err(Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        }),
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(pos) => msg[..pos].to_string(),
        None => msg.to_string(),
    }
}

/// Render a game in canonical `qrepath-game v1` form.
pub fn serialize_game(game: &GameTree) -> String {
    serde_json::to_string_pretty(&game.to_value()).expect("game values are always serializable")
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::InvalidGame {
        path: path.to_string(),
        message: message.into(),
    }
}

struct Builder<'a> {
    players: &'a [String],
    nodes: Vec<Node>,
    infosets: Vec<Vec<Infoset>>,
    infoset_index: Vec<HashMap<String, usize>>,
}

impl Builder<'_> {
    fn node(&mut self, value: &Value, path: &str, parent: Option<(NodeId, usize)>) -> Result<NodeId> {
        let obj = value
            .as_object()
            .ok_or_else(|| invalid(path, "node must be an object"))?;
        if let Some(payoffs) = obj.get("payoffs") {
            if obj.contains_key("actions") {
                return Err(invalid(path, "node has both \"payoffs\" and \"actions\""));
            }
            let payoffs = payoffs
                .as_array()
                .ok_or_else(|| invalid(path, "\"payoffs\" must be an array"))?
                .iter()
                .map(|p| p.as_f64().filter(|p| p.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| invalid(path, "payoffs must be finite numbers"))?;
            if payoffs.len() != self.players.len() {
                return Err(invalid(
                    path,
                    format!(
                        "payoff arity mismatch: expected {} payoffs, found {}",
                        self.players.len(),
                        payoffs.len()
                    ),
                ));
            }
            self.nodes.push(Node {
                parent,
                kind: NodeKind::Terminal { payoffs },
            });
            return Ok(self.nodes.len() - 1);
        }

        let player = obj
            .get("player")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid(path, "nonterminal node needs a \"player\" string"))?;
        let actions = obj
            .get("actions")
            .and_then(Value::as_array)
            .ok_or_else(|| invalid(path, "nonterminal node needs an \"actions\" array"))?;
        if actions.is_empty() {
            return Err(invalid(path, "nonterminal node has no actions"));
        }
        let is_chance = player == CHANCE;

        let mut labels = Vec::with_capacity(actions.len());
        let mut probs = Vec::with_capacity(actions.len());
        let mut children = Vec::with_capacity(actions.len());
        for (k, action) in actions.iter().enumerate() {
            let apath = format!("{path}.actions[{k}]");
            let aobj = action
                .as_object()
                .ok_or_else(|| invalid(&apath, "action must be an object"))?;
            let label = aobj
                .get("label")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid(&apath, "action needs a \"label\" string"))?;
            if labels.iter().any(|l| l == label) {
                return Err(invalid(&apath, format!("duplicate action label {label:?}")));
            }
            labels.push(label.to_string());
            match (is_chance, aobj.get("prob")) {
                (true, Some(p)) => {
                    let p = p
                        .as_f64()
                        .filter(|p| p.is_finite() && *p >= 0.0)
                        .ok_or_else(|| invalid(&apath, "chance probability must be a nonnegative number"))?;
                    probs.push(p);
                }
                (true, None) => return Err(invalid(&apath, "chance action needs a \"prob\"")),
                (false, Some(_)) => {
                    return Err(invalid(&apath, "\"prob\" is only allowed on chance actions"))
                }
                (false, None) => {}
            }
            children.push(
                aobj.get("child")
                    .ok_or_else(|| invalid(&apath, format!("dangling action {label:?} has no child")))?,
            );
        }

        let kind = if is_chance {
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > CHANCE_SUM_TOL {
                return Err(invalid(path, format!("chance probabilities sum {sum} ≠ 1")));
            }
            NodeKind::Chance {
                labels,
                probs,
                children: Vec::new(),
            }
        } else {
            let p = self
                .players
                .iter()
                .position(|name| name == player)
                .ok_or_else(|| invalid(path, format!("unknown player {player:?}")))?;
            let name = obj
                .get("infoset")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid(path, "decision node needs an \"infoset\" id"))?;
            let id = self.nodes.len();
            let index = match self.infoset_index[p].get(name) {
                Some(&index) => {
                    let known = &mut self.infosets[p][index];
                    if known.actions != labels {
                        return Err(invalid(
                            path,
                            format!(
                                "information set {name:?} of player {player:?} has inconsistent action sets: {:?} vs {:?}",
                                known.actions, labels
                            ),
                        ));
                    }
                    known.members.push(id);
                    index
                }
                None => {
                    let index = self.infosets[p].len();
                    self.infosets[p].push(Infoset {
                        name: name.to_string(),
                        actions: labels,
                        members: vec![id],
                    });
                    self.infoset_index[p].insert(name.to_string(), index);
                    index
                }
            };
            NodeKind::Decision {
                player: p,
                infoset: index,
                children: Vec::new(),
            }
        };

        let id = self.nodes.len();
        self.nodes.push(Node { parent, kind });
        let mut ids = Vec::with_capacity(children.len());
        for (k, child) in children.into_iter().enumerate() {
            ids.push(self.node(child, &format!("{path}.actions[{k}].child"), Some((id, k)))?);
        }
        match &mut self.nodes[id].kind {
            NodeKind::Decision { children, .. } | NodeKind::Chance { children, .. } => *children = ids,
            NodeKind::Terminal { .. } => unreachable!(),
        }
        Ok(id)
    }
}

impl GameTree {
    /// Build a game from an already-parsed JSON value.
    pub fn from_value(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| invalid("$", "top level must be an object"))?;
        if let Some(format) = obj.get("format") {
            if format.as_str() != Some(FORMAT_TAG) {
                return Err(invalid("$.format", format!("unsupported format {format}, expected {FORMAT_TAG:?}")));
            }
        }
        let players = obj
            .get("players")
            .and_then(Value::as_array)
            .ok_or_else(|| invalid("$", "missing \"players\" array"))?
            .iter()
            .map(|p| p.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| invalid("$.players", "player names must be strings"))?;
        if players.is_empty() {
            return Err(invalid("$.players", "at least one player is required"));
        }
        for (k, name) in players.iter().enumerate() {
            if name == CHANCE {
                return Err(invalid("$.players", "\"chance\" is reserved"));
            }
            if players[..k].contains(name) {
                return Err(invalid("$.players", format!("duplicate player {name:?}")));
            }
        }
        let root = obj.get("root").ok_or_else(|| invalid("$", "missing \"root\" node"))?;
        let mut builder = Builder {
            players: &players,
            nodes: Vec::new(),
            infosets: vec![Vec::new(); players.len()],
            infoset_index: vec![HashMap::new(); players.len()],
        };
        builder.node(root, "$.root", None)?;
        let Builder { nodes, infosets, .. } = builder;
        Ok(GameTree {
            players,
            nodes,
            infosets,
        })
    }

    pub fn to_value(&self) -> Value {
        json!({
            "format": FORMAT_TAG,
            "players": self.players,
            "root": self.node_value(self.root()),
        })
    }

    fn node_value(&self, id: NodeId) -> Value {
        let mut obj = Map::new();
        match &self.nodes[id].kind {
            NodeKind::Terminal { payoffs } => {
                obj.insert("payoffs".into(), json!(payoffs));
            }
            NodeKind::Decision {
                player,
                infoset,
                children,
            } => {
                let info = &self.infosets[*player][*infoset];
                obj.insert("player".into(), json!(self.players[*player]));
                obj.insert("infoset".into(), json!(info.name));
                let actions: Vec<Value> = info
                    .actions
                    .iter()
                    .zip(children)
                    .map(|(label, &c)| json!({"label": label, "child": self.node_value(c)}))
                    .collect();
                obj.insert("actions".into(), Value::Array(actions));
            }
            NodeKind::Chance {
                labels,
                probs,
                children,
            } => {
                obj.insert("player".into(), json!(CHANCE));
                let actions: Vec<Value> = labels
                    .iter()
                    .zip(probs)
                    .zip(children)
                    .map(|((label, p), &c)| json!({"label": label, "prob": p, "child": self.node_value(c)}))
                    .collect();
                obj.insert("actions".into(), Value::Array(actions));
            }
        }
        Value::Object(obj)
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn infosets(&self, player: usize) -> &[Infoset] {
        &self.infosets[player]
    }

    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id.player][id.index]
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.iter().map(Vec::len).sum()
    }

    pub fn owner(&self, id: NodeId) -> Option<Owner> {
        match self.nodes[id].kind {
            NodeKind::Decision { player, .. } => Some(Owner::Player(player)),
            NodeKind::Chance { .. } => Some(Owner::Chance),
            NodeKind::Terminal { .. } => None,
        }
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id].kind {
            NodeKind::Decision { children, .. } | NodeKind::Chance { children, .. } => children,
            NodeKind::Terminal { .. } => &[],
        }
    }

    /// Label of action `k` at node `id`.
    pub fn action_label(&self, id: NodeId, k: usize) -> &str {
        match &self.nodes[id].kind {
            NodeKind::Decision { player, infoset, .. } => &self.infosets[*player][*infoset].actions[k],
            NodeKind::Chance { labels, .. } => &labels[k],
            NodeKind::Terminal { .. } => panic!("terminal node {id} has no actions"),
        }
    }

    pub fn terminals(&self) -> impl Iterator<Item = (NodeId, &[f64])> + '_ {
        self.nodes.iter().enumerate().filter_map(|(id, n)| match &n.kind {
            NodeKind::Terminal { payoffs } => Some((id, payoffs.as_slice())),
            _ => None,
        })
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals().count()
    }

    /// Nodes from the root down to `id`, inclusive, paired with the action taken at each
    /// (the last entry has no action).
    fn path(&self, id: NodeId) -> Vec<(NodeId, Option<usize>)> {
        let mut path = vec![(id, None)];
        let mut cur = id;
        while let Some((parent, k)) = self.nodes[cur].parent {
            path.push((parent, Some(k)));
            cur = parent;
        }
        path.reverse();
        path
    }

    /// Action labels from the root to `id`.
    pub fn history(&self, id: NodeId) -> Vec<String> {
        self.path(id)
            .into_iter()
            .filter_map(|(n, k)| k.map(|k| self.action_label(n, k).to_string()))
            .collect()
    }

    /// Resolve a history given as action labels.
    pub fn find<S: AsRef<str>>(&self, history: &[S]) -> Option<NodeId> {
        let mut cur = self.root();
        for label in history {
            let label = label.as_ref();
            let k = (0..self.children(cur).len()).find(|&k| self.action_label(cur, k) == label)?;
            cur = self.children(cur)[k];
        }
        Some(cur)
    }

    /// Player `player`'s record along the history ending at `id`.
    pub fn record(&self, player: usize, id: NodeId) -> Vec<RecordEntry> {
        self.path(id)
            .into_iter()
            .filter_map(|(n, k)| match self.nodes[n].kind {
                NodeKind::Decision {
                    player: p, infoset, ..
                } if p == player => Some(RecordEntry {
                    infoset: InfosetId { player, index: infoset },
                    action: k,
                }),
                _ => None,
            })
            .collect()
    }

    /// Like [`GameTree::record`], addressing the history by its action labels.
    pub fn record_at<S: AsRef<str>>(&self, player: usize, history: &[S]) -> Result<Vec<RecordEntry>> {
        let id = self.find(history).ok_or_else(|| {
            Error::UnknownHistory(history.iter().map(|s| s.as_ref().to_string()).collect())
        })?;
        Ok(self.record(player, id))
    }

    /// All pairs of histories sharing an information set with different records. Each member
    /// is compared against the first member of its information set; the result is sorted.
    pub fn check_perfect_recall(&self) -> Vec<RecallViolation> {
        let mut violations = Vec::new();
        for (player, infosets) in self.infosets.iter().enumerate() {
            for (index, info) in infosets.iter().enumerate() {
                let mut members = info.members.clone();
                members.sort_unstable();
                let first = members[0];
                let reference = self.record(player, first);
                for &other in &members[1..] {
                    if self.record(player, other) != reference {
                        violations.push(RecallViolation {
                            infoset: InfosetId { player, index },
                            first: self.history(first),
                            second: self.history(other),
                        });
                    }
                }
            }
        }
        violations.sort();
        violations
    }

    /// Fail with [`Error::ImperfectRecall`] unless the game has perfect recall.
    pub fn ensure_perfect_recall(&self) -> Result<()> {
        let violations = self.check_perfect_recall();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::ImperfectRecall(violations))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn selten_structure() {
        let g = catalog::selten();
        assert_eq!(g.num_players(), 3);
        assert_eq!(g.infosets(0).len(), 2);
        assert_eq!(g.infosets(1).len(), 1);
        assert_eq!(g.infosets(2).len(), 1);
        assert_eq!(g.infosets(2)[0].members.len(), 2);
        let payoffs: Vec<Vec<f64>> = g.terminals().map(|(_, p)| p.to_vec()).collect();
        assert_eq!(
            payoffs,
            vec![
                vec![1.0, 3.0, 0.0],
                vec![2.0, 0.0, 0.0],
                vec![0.0, 0.0, 5.0],
                vec![4.0, 4.0, 0.0],
                vec![0.0, 0.0, 0.0],
                vec![3.0, 0.0, 3.0],
            ]
        );
        assert!(g.check_perfect_recall().is_empty());
    }

    #[test]
    fn minimal_tree() {
        let g = catalog::one_player(&[1.0, 0.0]);
        assert_eq!(g.nodes().len(), 3);
        assert_eq!(g.num_terminals(), 2);
    }

    #[test]
    fn chance_sum_rejected() {
        let text = r#"{"players": ["a"], "root": {"player": "chance", "actions": [
            {"label": "x", "prob": 0.5, "child": {"payoffs": [1]}},
            {"label": "y", "prob": 0.4, "child": {"payoffs": [0]}}]}}"#;
        let err = parse_game(text).unwrap_err();
        assert!(err.to_string().contains("chance probabilities sum 0.9 ≠ 1"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_game("{\n  \"players\": [\"a\"],\n  \"root\": {\n}").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let dangling = r#"{"players": ["a"], "root": {"player": "a", "infoset": "i",
            "actions": [{"label": "x"}, {"label": "y", "child": {"payoffs": [0]}}]}}"#;
        assert!(parse_game(dangling).unwrap_err().to_string().contains("dangling action"));

        let arity = r#"{"players": ["a", "b"], "root": {"payoffs": [1]}}"#;
        assert!(parse_game(arity).unwrap_err().to_string().contains("payoff arity mismatch"));

        let inconsistent = r#"{"players": ["a", "b"], "root": {"player": "b", "infoset": "r",
            "actions": [
              {"label": "u", "child": {"player": "a", "infoset": "i", "actions": [
                  {"label": "x", "child": {"payoffs": [0, 0]}},
                  {"label": "y", "child": {"payoffs": [0, 0]}}]}},
              {"label": "d", "child": {"player": "a", "infoset": "i", "actions": [
                  {"label": "x", "child": {"payoffs": [0, 0]}},
                  {"label": "z", "child": {"payoffs": [0, 0]}}]}}]}}"#;
        assert!(parse_game(inconsistent)
            .unwrap_err()
            .to_string()
            .contains("inconsistent action sets"));

        let prob_on_player = r#"{"players": ["a"], "root": {"player": "a", "infoset": "i",
            "actions": [{"label": "x", "prob": 1.0, "child": {"payoffs": [0]}}]}}"#;
        assert!(parse_game(prob_on_player).is_err());

        let unknown = r#"{"players": ["a"], "root": {"player": "b", "infoset": "i",
            "actions": [{"label": "x", "child": {"payoffs": [0]}}]}}"#;
        assert!(parse_game(unknown).unwrap_err().to_string().contains("unknown player"));

        let bad_format = r#"{"format": "other", "players": ["a"], "root": {"payoffs": [0]}}"#;
        assert!(parse_game(bad_format).is_err());
    }

    #[test]
    fn records_along_selten() {
        let g = catalog::selten();
        let rec = g.record_at(0, &["L", "R2", "r"]).unwrap();
        assert_eq!(
            rec,
            vec![
                RecordEntry {
                    infoset: InfosetId { player: 0, index: 0 },
                    action: Some(0)
                },
                RecordEntry {
                    infoset: InfosetId { player: 0, index: 1 },
                    action: Some(1)
                },
            ]
        );
        assert!(g.record_at::<&str>(2, &[]).unwrap().is_empty());
        assert!(g.record_at(1, &["R"]).unwrap().is_empty());
        assert!(matches!(g.record_at(0, &["Q"]), Err(Error::UnknownHistory(_))));
    }

    #[test]
    fn record_includes_own_final_infoset() {
        let g = catalog::selten();
        let rec = g.record_at(0, &["L", "R2"]).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec[1].action, None);
    }

    #[test]
    fn forgetting_own_action_is_a_violation() {
        // Player a moves, then moves again without knowing what it did first.
        let text = r#"{"players": ["a"], "root": {"player": "a", "infoset": "first", "actions": [
            {"label": "x", "child": {"player": "a", "infoset": "second", "actions": [
                {"label": "u", "child": {"payoffs": [1]}}, {"label": "v", "child": {"payoffs": [0]}}]}},
            {"label": "y", "child": {"player": "a", "infoset": "second", "actions": [
                {"label": "u", "child": {"payoffs": [0]}}, {"label": "v", "child": {"payoffs": [1]}}]}}]}}"#;
        let g = parse_game(text).unwrap();
        let v = g.check_perfect_recall();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].infoset, InfosetId { player: 0, index: 1 });
        assert_eq!(v[0].first, vec!["x"]);
        assert_eq!(v[0].second, vec!["y"]);
        assert!(matches!(g.ensure_perfect_recall(), Err(Error::ImperfectRecall(_))));
    }

    #[test]
    fn absent_minded_driver_is_a_violation() {
        let text = r#"{"players": ["d"], "root": {"player": "d", "infoset": "road", "actions": [
            {"label": "exit", "child": {"payoffs": [0]}},
            {"label": "go", "child": {"player": "d", "infoset": "road", "actions": [
                {"label": "exit", "child": {"payoffs": [4]}},
                {"label": "go", "child": {"payoffs": [1]}}]}}]}}"#;
        let g = parse_game(text).unwrap();
        let root = g.root();
        let second = g.find(&["go"]).unwrap();
        // Brute-force records: the descendant remembers passing through the same set.
        assert!(g.record(0, root).len() == 1 && g.record(0, second).len() == 2);
        let v = g.check_perfect_recall();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].second, vec!["go"]);
    }

    #[test]
    fn serialize_round_trip_selten() {
        let g = catalog::selten();
        let again = parse_game(&serialize_game(&g)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn chance_round_trip() {
        let g = catalog::chance_split(0.3, &[5.0], &[0.0]);
        let again = parse_game(&serialize_game(&g)).unwrap();
        assert_eq!(g, again);
    }
}
