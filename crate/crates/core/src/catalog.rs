//! Small built-in games used by the CLI, the tests and the examples in the README.

use serde_json::json;

use crate::game::{parse_game, GameTree};

/// Source text of the three-player game with two information sets for player 1 and one
/// information set of player 3 spanning both branches of the root.
pub const SELTEN_JSON: &str = include_str!("../games/selten.json");

pub fn selten() -> GameTree {
    parse_game(SELTEN_JSON).expect("built-in game is valid")
}

/// One player choosing once among actions `a1..ak` with the given payoffs.
pub fn one_player(payoffs: &[f64]) -> GameTree {
    let actions: Vec<_> = payoffs
        .iter()
        .enumerate()
        .map(|(k, p)| json!({"label": format!("a{}", k + 1), "child": {"payoffs": [p]}}))
        .collect();
    GameTree::from_value(&json!({
        "players": ["1"],
        "root": {"player": "1", "infoset": "I", "actions": actions},
    }))
    .expect("built-in game is valid")
}

/// A chance move with probability `p` to a leaf paying `left` and `1 - p` to a leaf paying
/// `right`. The payoff vectors fix the number of players.
pub fn chance_split(p: f64, left: &[f64], right: &[f64]) -> GameTree {
    let players: Vec<String> = (1..=left.len()).map(|k| k.to_string()).collect();
    GameTree::from_value(&json!({
        "players": players,
        "root": {"player": "chance", "actions": [
            {"label": "left", "prob": p, "child": {"payoffs": left}},
            {"label": "right", "prob": 1.0 - p, "child": {"payoffs": right}},
        ]},
    }))
    .expect("built-in game is valid")
}

/// Every payoff of the game replaced by zero.
pub fn zeroed(game: &GameTree) -> GameTree {
    let mut value = game.to_value();
    fn walk(v: &mut serde_json::Value) {
        if let Some(obj) = v.as_object_mut() {
            if let Some(p) = obj.get_mut("payoffs") {
                if let Some(arr) = p.as_array_mut() {
                    for x in arr {
                        *x = json!(0.0);
                    }
                }
            }
            if let Some(actions) = obj.get_mut("actions").and_then(|a| a.as_array_mut()) {
                for a in actions {
                    if let Some(child) = a.get_mut("child") {
                        walk(child);
                    }
                }
            }
        }
    }
    walk(&mut value["root"]);
    GameTree::from_value(&value).expect("zeroing payoffs keeps the game valid")
}
