//! Agent action space and its text encoding.
//!
//! Actions serialize to a single line such as
//! `action_type: 4, click_point: (0.49, 0.40)` or
//! `action_type: 3, typed_text: "hello"`. The two terminal statuses are
//! written as the bare tokens `TASK COMPLETE` and `TASK IMPOSSIBLE`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{format_point, parse_tuple_at, Location, NormPoint};

pub const CLICK: u8 = 4;
pub const TYPE: u8 = 3;
pub const SELECT: u8 = 2;
pub const SWIPE_UP: u8 = 1;
pub const SWIPE_DOWN: u8 = 0;
pub const SWIPE_LEFT: u8 = 8;
pub const SWIPE_RIGHT: u8 = 9;
pub const PRESS_BACK: u8 = 5;
pub const PRESS_HOME: u8 = 6;
pub const PRESS_ENTER: u8 = 7;

const TASK_COMPLETE: &str = "TASK COMPLETE";
const TASK_IMPOSSIBLE: &str = "TASK IMPOSSIBLE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Click { point: NormPoint },
    Type { text: String },
    Select { value: String },
    SwipeUp,
    SwipeDown,
    SwipeLeft,
    SwipeRight,
    PressBack,
    PressHome,
    PressEnter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    TaskComplete,
    TaskImpossible,
}

/// What an agent may emit at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentOutput {
    Action(Action),
    Status(EpisodeStatus),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("unknown action type id {0}")]
    UnknownType(u8),
    #[error("action type {type_id} requires a {field} payload")]
    MissingPayload { type_id: u8, field: &'static str },
    #[error("action type {type_id} does not take a {field} payload")]
    UnexpectedPayload { type_id: u8, field: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse action at byte {offset}: {kind}")]
pub struct ActionParseError {
    pub offset: usize,
    pub kind: ActionParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionParseErrorKind {
    #[error("no action found")]
    NoAction,
    #[error("unknown action type id {0}")]
    UnknownType(u64),
    #[error("click action without a parseable click_point")]
    MissingClickPoint,
    #[error("type action without quoted typed_text")]
    MissingTypedText,
    #[error("select action without quoted value")]
    MissingValue,
}

impl Action {
    pub fn click(point: NormPoint) -> Self {
        Action::Click { point }
    }

    pub fn type_text(text: impl Into<String>) -> Self {
        Action::Type { text: text.into() }
    }

    pub fn select(value: impl Into<String>) -> Self {
        Action::Select {
            value: value.into(),
        }
    }

    /// Builds an action from an id plus optional payloads, checking that
    /// exactly the payload the id demands is present.
    pub fn from_parts(
        type_id: u8,
        click_point: Option<NormPoint>,
        typed_text: Option<String>,
        value: Option<String>,
    ) -> Result<Self, ActionError> {
        let expects = |field: &'static str, present: bool, wanted: bool| match (present, wanted) {
            (false, true) => Err(ActionError::MissingPayload { type_id, field }),
            (true, false) => Err(ActionError::UnexpectedPayload { type_id, field }),
            _ => Ok(()),
        };
        expects("click_point", click_point.is_some(), type_id == CLICK)?;
        expects("typed_text", typed_text.is_some(), type_id == TYPE)?;
        expects("value", value.is_some(), type_id == SELECT)?;
        Ok(match type_id {
            CLICK => Action::Click {
                point: click_point.expect("checked"),
            },
            TYPE => Action::Type {
                text: typed_text.expect("checked"),
            },
            SELECT => Action::Select {
                value: value.expect("checked"),
            },
            SWIPE_UP => Action::SwipeUp,
            SWIPE_DOWN => Action::SwipeDown,
            SWIPE_LEFT => Action::SwipeLeft,
            SWIPE_RIGHT => Action::SwipeRight,
            PRESS_BACK => Action::PressBack,
            PRESS_HOME => Action::PressHome,
            PRESS_ENTER => Action::PressEnter,
            other => return Err(ActionError::UnknownType(other)),
        })
    }

    pub fn type_id(&self) -> u8 {
        match self {
            Action::Click { .. } => CLICK,
            Action::Type { .. } => TYPE,
            Action::Select { .. } => SELECT,
            Action::SwipeUp => SWIPE_UP,
            Action::SwipeDown => SWIPE_DOWN,
            Action::SwipeLeft => SWIPE_LEFT,
            Action::SwipeRight => SWIPE_RIGHT,
            Action::PressBack => PRESS_BACK,
            Action::PressHome => PRESS_HOME,
            Action::PressEnter => PRESS_ENTER,
        }
    }

    pub fn is_click(&self) -> bool {
        matches!(self, Action::Click { .. })
    }

    pub fn click_point(&self) -> Option<NormPoint> {
        match self {
            Action::Click { point } => Some(*point),
            _ => None,
        }
    }

    /// Text payload of type/select actions.
    pub fn text_payload(&self) -> Option<&str> {
        match self {
            Action::Type { text } => Some(text),
            Action::Select { value } => Some(value),
            _ => None,
        }
    }

    /// Operation name plus payload, used for token-level operation scoring.
    /// Clicks carry no payload here: the click target is scored separately.
    pub fn operation_string(&self) -> String {
        match self {
            Action::Click { .. } => "click".to_string(),
            Action::Type { text } => format!("type {text}"),
            Action::Select { value } => format!("select {value}"),
            Action::SwipeUp => "swipe up".to_string(),
            Action::SwipeDown => "swipe down".to_string(),
            Action::SwipeLeft => "swipe left".to_string(),
            Action::SwipeRight => "swipe right".to_string(),
            Action::PressBack => "press back".to_string(),
            Action::PressHome => "press home".to_string(),
            Action::PressEnter => "press enter".to_string(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_action(self))
    }
}

impl EpisodeStatus {
    pub fn token(&self) -> &'static str {
        match self {
            EpisodeStatus::TaskComplete => TASK_COMPLETE,
            EpisodeStatus::TaskImpossible => TASK_IMPOSSIBLE,
        }
    }
}

impl AgentOutput {
    pub fn action(&self) -> Option<&Action> {
        match self {
            AgentOutput::Action(a) => Some(a),
            AgentOutput::Status(_) => None,
        }
    }
}

impl From<Action> for AgentOutput {
    fn from(a: Action) -> Self {
        AgentOutput::Action(a)
    }
}

impl From<EpisodeStatus> for AgentOutput {
    fn from(s: EpisodeStatus) -> Self {
        AgentOutput::Status(s)
    }
}

fn push_quoted(out: &mut String, text: &str) {
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

pub fn encode_action(a: &Action) -> String {
    let mut out = format!("action_type: {}", a.type_id());
    match a {
        Action::Click { point } => {
            out.push_str(", click_point: ");
            out.push_str(format_point(*point).as_str());
        }
        Action::Type { text } => {
            out.push_str(", typed_text: ");
            push_quoted(&mut out, text);
        }
        Action::Select { value } => {
            out.push_str(", value: ");
            push_quoted(&mut out, value);
        }
        _ => {}
    }
    out
}

pub fn encode_output(o: &AgentOutput) -> String {
    match o {
        AgentOutput::Action(a) => encode_action(a),
        AgentOutput::Status(s) => s.token().to_string(),
    }
}

/// Encodes a web-navigation action. Type and select actions also name the
/// element they act on, appended as a trailing `click_point`.
pub fn encode_web_action(a: &Action, element: Option<NormPoint>) -> String {
    let mut out = encode_action(a);
    if let (false, Some(p)) = (a.is_click(), element) {
        out.push_str(", click_point: ");
        out.push_str(format_point(p).as_str());
    }
    out
}

/// Parses the first well-formed action or status in `text`.
pub fn parse_action(text: &str) -> Result<AgentOutput, ActionParseError> {
    parse_action_span(text).map(|(o, _)| o)
}

/// A parsed web-navigation output: the action plus the element it targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WebOutput {
    pub output: AgentOutput,
    pub element_point: Option<NormPoint>,
}

/// Parses a web-navigation output. The element point is the click point for
/// clicks, or a `click_point` directly following a type/select payload.
pub fn parse_web_action(text: &str) -> Result<WebOutput, ActionParseError> {
    let (output, end) = parse_action_span(text)?;
    let element_point = match &output {
        AgentOutput::Action(Action::Click { point }) => Some(*point),
        AgentOutput::Action(_) => {
            let bytes = text.as_bytes();
            let pos = skip_ws(bytes, end);
            if bytes.get(pos) == Some(&b',') {
                keyed_point(text, pos + 1, "click_point").map(|(p, _)| p)
            } else {
                None
            }
        }
        AgentOutput::Status(_) => None,
    };
    Ok(WebOutput {
        output,
        element_point,
    })
}

fn parse_action_span(text: &str) -> Result<(AgentOutput, usize), ActionParseError> {
    let mut candidates: Vec<(usize, Candidate)> = text
        .match_indices("action_type")
        .map(|(i, _)| (i, Candidate::Action))
        .collect();
    for (token, status) in [
        (TASK_COMPLETE, EpisodeStatus::TaskComplete),
        (TASK_IMPOSSIBLE, EpisodeStatus::TaskImpossible),
        ("TASK_COMPLETE", EpisodeStatus::TaskComplete),
        ("TASK_IMPOSSIBLE", EpisodeStatus::TaskImpossible),
    ] {
        candidates.extend(
            text.match_indices(token)
                .map(|(i, _)| (i, Candidate::Status(status, token.len()))),
        );
    }
    candidates.sort_by_key(|(i, _)| *i);

    let mut first_err = None;
    for (offset, cand) in candidates {
        let attempt = match cand {
            Candidate::Status(s, len) => Ok((AgentOutput::Status(s), offset + len)),
            Candidate::Action => parse_action_at(text, offset),
        };
        match attempt {
            Ok(found) => return Ok(found),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(ActionParseError {
        offset: 0,
        kind: ActionParseErrorKind::NoAction,
    }))
}

#[derive(Clone, Copy)]
enum Candidate {
    Action,
    Status(EpisodeStatus, usize),
}

fn parse_action_at(text: &str, offset: usize) -> Result<(AgentOutput, usize), ActionParseError> {
    let bytes = text.as_bytes();
    let err = |at: usize, kind| ActionParseError { offset: at, kind };
    let mut pos = offset + "action_type".len();
    pos = skip_key_tail(bytes, pos).ok_or(err(pos, ActionParseErrorKind::NoAction))?;
    let digits_start = pos;
    while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
        pos += 1;
    }
    if pos == digits_start {
        return Err(err(pos, ActionParseErrorKind::NoAction));
    }
    let id: u64 = text[digits_start..pos]
        .parse()
        .map_err(|_| err(digits_start, ActionParseErrorKind::UnknownType(u64::MAX)))?;
    let after_id = pos;
    let payload_start = {
        let p = skip_ws(bytes, after_id);
        (bytes.get(p) == Some(&b',')).then_some(p + 1)
    };

    let action = match u8::try_from(id) {
        Ok(CLICK) => {
            let (point, end) = payload_start
                .and_then(|p| keyed_point(text, p, "click_point"))
                .ok_or(err(after_id, ActionParseErrorKind::MissingClickPoint))?;
            return Ok((Action::Click { point }.into(), end));
        }
        Ok(TYPE) => {
            let (s, end) = payload_start
                .and_then(|p| keyed_string(text, p, "typed_text"))
                .ok_or(err(after_id, ActionParseErrorKind::MissingTypedText))?;
            return Ok((Action::Type { text: s }.into(), end));
        }
        Ok(SELECT) => {
            let (s, end) = payload_start
                .and_then(|p| keyed_string(text, p, "value"))
                .ok_or(err(after_id, ActionParseErrorKind::MissingValue))?;
            return Ok((Action::Select { value: s }.into(), end));
        }
        Ok(other) => Action::from_parts(other, None, None, None)
            .map_err(|_| err(digits_start, ActionParseErrorKind::UnknownType(id)))?,
        Err(_) => return Err(err(digits_start, ActionParseErrorKind::UnknownType(id))),
    };
    Ok((action.into(), after_id))
}

fn skip_ws(bytes: &[u8], mut pos: usize) -> usize {
    while bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        pos += 1;
    }
    pos
}

/// Skips an optional closing quote, whitespace, a `:` or `=`, and whitespace.
fn skip_key_tail(bytes: &[u8], mut pos: usize) -> Option<usize> {
    if matches!(bytes.get(pos), Some(b'"' | b'\'')) {
        pos += 1;
    }
    pos = skip_ws(bytes, pos);
    if !matches!(bytes.get(pos), Some(b':' | b'=')) {
        return None;
    }
    Some(skip_ws(bytes, pos + 1))
}

/// Matches `ws ["]key["] ws : ws` at `pos`, returning the position after it.
fn expect_key(text: &str, pos: usize, key: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut pos = skip_ws(bytes, pos);
    if matches!(bytes.get(pos), Some(b'"' | b'\'')) {
        pos += 1;
    }
    if !text[pos..].starts_with(key) {
        return None;
    }
    skip_key_tail(bytes, pos + key.len())
}

fn keyed_point(text: &str, pos: usize, key: &str) -> Option<(NormPoint, usize)> {
    let pos = expect_key(text, pos, key)?;
    if text.as_bytes().get(pos) != Some(&b'(') {
        return None;
    }
    match parse_tuple_at(text, pos).ok()? {
        (Location::Point(p), end) => Some((p, end)),
        (Location::BBox(_), _) => None,
    }
}

fn keyed_string(text: &str, pos: usize, key: &str) -> Option<(String, usize)> {
    let pos = expect_key(text, pos, key)?;
    let rest = text.get(pos..)?;
    let mut chars = rest.char_indices();
    if chars.next()?.1 != '"' {
        return None;
    }
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Some((out, pos + i + 1)),
            '\\' => match chars.next() {
                Some((_, e @ ('"' | '\\'))) => out.push(e),
                Some((_, other)) => {
                    out.push('\\');
                    out.push(other);
                }
                None => return None,
            },
            c => out.push(c),
        }
    }
    None
}
