//! English command grammar. See `docs/grammar.ebnf`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::CommandError;

pub const DEFAULT_DISTANCE_M: f64 = 0.5;
pub const DEFAULT_ANGLE_DEG: f64 = 90.0;
pub const MAX_DISTANCE_M: f64 = 10.0;
pub const MAX_ANGLE_DEG: f64 = 360.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "intent", rename_all = "snake_case")]
pub enum Intent {
    Drive { direction: DriveDirection, distance_m: f64 },
    Turn { direction: TurnDirection, angle_deg: f64 },
    Stop,
    QueryObjects,
    Speak { text: String },
}

/// Canonical command text; parsing it yields the same intent.
impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intent::Drive { direction, distance_m } => {
                let dir = match direction {
                    DriveDirection::Forward => "forward",
                    DriveDirection::Backward => "backward",
                };
                write!(f, "move {dir} {distance_m} meters")
            }
            Intent::Turn { direction, angle_deg } => {
                let dir = match direction {
                    TurnDirection::Left => "left",
                    TurnDirection::Right => "right",
                };
                write!(f, "turn {dir} {angle_deg} degrees")
            }
            Intent::Stop => f.write_str("stop"),
            Intent::QueryObjects => f.write_str("what do you see"),
            Intent::Speak { text } => write!(f, "say {text}"),
        }
    }
}

/// Lower-cases, trims and collapses internal whitespace.
pub fn normalize_transcript(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_intent(text: &str) -> Result<Intent, CommandError> {
    let norm = normalize_transcript(text);
    let unrecognized = || CommandError::UnrecognizedCommand(text.to_string());
    let words: Vec<&str> = norm.split(' ').filter(|w| !w.is_empty()).collect();

    match words.as_slice() {
        ["stop"] => Ok(Intent::Stop),
        ["what", "do", "you", "see"] => Ok(Intent::QueryObjects),
        ["say", _, ..] => Ok(Intent::Speak {
            text: norm["say ".len()..].to_string(),
        }),
        ["move" | "go", dir, rest @ ..] => {
            let direction = match *dir {
                "forward" => DriveDirection::Forward,
                "backward" | "back" => DriveDirection::Backward,
                _ => return Err(unrecognized()),
            };
            let distance_m = match rest {
                [] => DEFAULT_DISTANCE_M,
                [n, "meter" | "meters" | "m"] => parse_number(n).ok_or_else(unrecognized)?,
                _ => return Err(unrecognized()),
            };
            if !(distance_m > 0.0 && distance_m <= MAX_DISTANCE_M) {
                return Err(CommandError::OutOfRange(format!(
                    "distance {distance_m} m must be in (0, {MAX_DISTANCE_M}]"
                )));
            }
            Ok(Intent::Drive { direction, distance_m })
        }
        ["turn", dir, rest @ ..] => {
            let direction = match *dir {
                "left" => TurnDirection::Left,
                "right" => TurnDirection::Right,
                _ => return Err(unrecognized()),
            };
            let angle_deg = match rest {
                [] => DEFAULT_ANGLE_DEG,
                [n, "degree" | "degrees"] => parse_number(n).ok_or_else(unrecognized)?,
                _ => return Err(unrecognized()),
            };
            if !(angle_deg > 0.0 && angle_deg <= MAX_ANGLE_DEG) {
                return Err(CommandError::OutOfRange(format!(
                    "angle {angle_deg} degrees must be in (0, {MAX_ANGLE_DEG}]"
                )));
            }
            Ok(Intent::Turn { direction, angle_deg })
        }
        _ => Err(unrecognized()),
    }
}

/// `digit+ ("." digit+)?`
fn parse_number(tok: &str) -> Option<f64> {
    let (int, frac) = match tok.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (tok, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    tok.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(
            parse_intent("move forward 2 meters").unwrap(),
            Intent::Drive { direction: DriveDirection::Forward, distance_m: 2.0 }
        );
        assert_eq!(
            parse_intent("turn left").unwrap(),
            Intent::Turn { direction: TurnDirection::Left, angle_deg: 90.0 }
        );
        assert!(matches!(
            parse_intent("open the pod bay doors"),
            Err(CommandError::UnrecognizedCommand(_))
        ));
    }

    #[test]
    fn defaults_aliases_and_case() {
        assert_eq!(
            parse_intent("  Go   BACK ").unwrap(),
            Intent::Drive { direction: DriveDirection::Backward, distance_m: 0.5 }
        );
        assert_eq!(parse_intent("Stop").unwrap(), Intent::Stop);
        assert_eq!(parse_intent("what do you see").unwrap(), Intent::QueryObjects);
        assert_eq!(parse_intent("say hello there").unwrap(), Intent::Speak { text: "hello there".into() });
        assert_eq!(
            parse_intent("move forward 1.5 m").unwrap(),
            Intent::Drive { direction: DriveDirection::Forward, distance_m: 1.5 }
        );
    }

    #[test]
    fn grammar_edges() {
        for bad in ["say", "move", "move sideways", "move forward 2", "move forward two meters",
                    "turn left 90", "move forward 1e1 meters", "move forward .5 meters",
                    "move forward inf meters", "turn around", "what do you", "stop now"] {
            assert!(matches!(parse_intent(bad), Err(CommandError::UnrecognizedCommand(_))), "{bad}");
        }
        for bad in ["move forward 11 meters", "move forward 0 meters", "turn right 361 degrees", "turn right 0 degrees"] {
            assert!(matches!(parse_intent(bad), Err(CommandError::OutOfRange(_))), "{bad}");
        }
        assert!(parse_intent("move forward 10 meters").is_ok());
        assert!(parse_intent("turn right 360 degrees").is_ok());
    }

    fn number() -> impl Strategy<Value = String> {
        prop_oneof![
            (0u32..20).prop_map(|n| n.to_string()),
            (0u32..20, 0u32..1000).prop_map(|(i, f)| format!("{i}.{f}")),
            (0u32..400).prop_map(|n| n.to_string()),
        ]
    }

    fn grammar_sentence() -> impl Strategy<Value = String> {
        let drive = (
            prop_oneof![Just("move"), Just("go")],
            prop_oneof![Just("forward"), Just("backward"), Just("back")],
            proptest::option::of((number(), prop_oneof![Just("meter"), Just("meters"), Just("m")])),
        )
            .prop_map(|(v, d, arg)| match arg {
                Some((n, u)) => format!("{v} {d} {n} {u}"),
                None => format!("{v} {d}"),
            });
        let turn = (
            prop_oneof![Just("left"), Just("right")],
            proptest::option::of((number(), prop_oneof![Just("degree"), Just("degrees")])),
        )
            .prop_map(|(d, arg)| match arg {
                Some((n, u)) => format!("turn {d} {n} {u}"),
                None => format!("turn {d}"),
            });
        prop_oneof![
            Just("stop".to_string()),
            Just("what do you see".to_string()),
            "[a-z]{1,8}( [a-z]{1,8}){0,4}".prop_map(|r| format!("say {r}")),
            drive,
            turn,
        ]
    }

    proptest! {
        #[test]
        fn parse_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse_intent(&text);
        }

        #[test]
        fn parse_unparse_is_a_fixed_point(s in grammar_sentence()) {
            match parse_intent(&s) {
                Ok(intent) => {
                    let again = parse_intent(&intent.to_string()).unwrap();
                    prop_assert_eq!(again, intent);
                }
                Err(e) => prop_assert!(matches!(e, CommandError::OutOfRange(_)), "{s}: {e}"),
            }
        }
    }
}
