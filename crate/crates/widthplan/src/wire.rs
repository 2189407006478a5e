//! JSON-lines wire format for graphs and Q-values, plus a length-prefixed
//! framing for request/response transport.
//!
//! Record shapes (one JSON object per line, `"v"` is always 1):
//!
//! ```text
//! {"v":1,"kind":"graph","meta":{"instance":..,"encoding":..},"nodes":[[id,kind,label]],"edges":[[label,[ids]]],"candidates":[ids]}
//! {"v":1,"kind":"graph_pair","left":<graph>,"right":<graph>}
//! {"v":1,"kind":"q","values":[..]}
//! {"v":1,"kind":"error","message":..}
//! ```
//!
//! Frames are `<len> <json>\n` where `len` is the byte length of `<json>`.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use widthplan_core::encode::{GraphMeta, GraphNode, GraphPair, HyperEdge, NodeKind, RelGraph};

pub const VERSION: u32 = 1;

/// Upper bound on a single frame, to fail fast on a desynchronized stream.
pub const MAX_FRAME: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Graph(RelGraph),
    GraphPair(GraphPair),
    Q(Vec<f64>),
    Error(String),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Graph(_) => "graph",
            Message::GraphPair(_) => "graph_pair",
            Message::Q(_) => "q",
            Message::Error(_) => "error",
        }
    }

    /// Number of Q-values a scorer must return for this request.
    pub fn expected_values(&self) -> usize {
        match self {
            Message::Graph(g) => g.candidates.len(),
            Message::GraphPair(p) => p.left.candidates.len(),
            _ => 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("malformed record at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl WireError {
    fn at(offset: u64, message: impl Into<String>) -> Self {
        WireError::Malformed {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaWire {
    instance: String,
    encoding: String,
}

#[derive(Serialize, Deserialize)]
struct GraphWire {
    meta: MetaWire,
    nodes: Vec<(u32, String, String)>,
    edges: Vec<(String, Vec<u32>)>,
    candidates: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    Graph(GraphWire),
    GraphPair { left: Box<Envelope>, right: Box<Envelope> },
    Q { values: Vec<f64> },
    Error { message: String },
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    v: u32,
    #[serde(flatten)]
    body: Body,
}

fn graph_to_wire(g: &RelGraph) -> GraphWire {
    GraphWire {
        meta: MetaWire {
            instance: g.meta.instance.clone(),
            encoding: g.meta.encoding.as_str().into(),
        },
        nodes: g
            .nodes
            .iter()
            .map(|n| (n.id, n.kind.as_str().into(), n.label.clone()))
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| (e.label.clone(), e.args.clone()))
            .collect(),
        candidates: g.candidates.clone(),
    }
}

fn graph_from_wire(w: GraphWire) -> Result<RelGraph, String> {
    let encoding = w
        .meta
        .encoding
        .parse()
        .map_err(|_| format!("unknown encoding `{}`", w.meta.encoding))?;
    let nodes = w
        .nodes
        .into_iter()
        .map(|(id, kind, label)| {
            let kind: NodeKind = kind.parse().map_err(|_| format!("unknown node kind `{kind}`"))?;
            Ok(GraphNode { id, kind, label })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let g = RelGraph {
        meta: GraphMeta {
            instance: w.meta.instance,
            encoding,
        },
        nodes,
        edges: w
            .edges
            .into_iter()
            .map(|(label, args)| HyperEdge { label, args })
            .collect(),
        candidates: w.candidates,
    };
    g.validate().map_err(|e| e.to_string())?;
    Ok(g)
}

fn to_envelope(m: &Message) -> Envelope {
    let body = match m {
        Message::Graph(g) => Body::Graph(graph_to_wire(g)),
        Message::GraphPair(p) => Body::GraphPair {
            left: Box::new(to_envelope(&Message::Graph(p.left.clone()))),
            right: Box::new(to_envelope(&Message::Graph(p.right.clone()))),
        },
        Message::Q(values) => Body::Q {
            values: values.clone(),
        },
        Message::Error(message) => Body::Error {
            message: message.clone(),
        },
    };
    Envelope { v: VERSION, body }
}

fn from_envelope(e: Envelope) -> Result<Message, String> {
    if e.v != VERSION {
        return Err(format!("unsupported version {}", e.v));
    }
    Ok(match e.body {
        Body::Graph(g) => Message::Graph(graph_from_wire(g)?),
        Body::GraphPair { left, right } => {
            let half = |e: Envelope| match from_envelope(e)? {
                Message::Graph(g) => Ok(g),
                other => Err(format!("graph_pair half has kind `{}`", other.kind())),
            };
            Message::GraphPair(GraphPair {
                left: half(*left)?,
                right: half(*right)?,
            })
        }
        Body::Q { values } => Message::Q(values),
        Body::Error { message } => Message::Error(message),
    })
}

/// Serializes one record without a trailing newline. Non-finite Q-values
/// become `null`, which a reader rejects.
pub fn to_json(m: &Message) -> String {
    serde_json::to_string(&to_envelope(m)).expect("wire records always serialize")
}

pub fn to_json_pretty(m: &Message) -> String {
    serde_json::to_string_pretty(&to_envelope(m)).expect("wire records always serialize")
}

/// Parses one record; `base` is the byte offset of `text` in its stream.
pub fn from_json_at(text: &str, base: u64) -> Result<Message, WireError> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| {
        let col = line_col_offset(text, e.line(), e.column());
        WireError::at(base + col as u64, e.to_string())
    })?;
    from_envelope(env).map_err(|m| WireError::at(base, m))
}

pub fn from_json(text: &str) -> Result<Message, WireError> {
    from_json_at(text, 0)
}

fn line_col_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Writes `m` as one JSON line.
pub fn write_record<W: Write>(w: &mut W, m: &Message) -> io::Result<()> {
    w.write_all(to_json(m).as_bytes())?;
    w.write_all(b"\n")
}

/// Iterates JSON-lines records, skipping blank lines.
pub struct RecordReader<R> {
    inner: R,
    offset: u64,
    buf: String,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(inner: R) -> Self {
        RecordReader {
            inner,
            offset: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<Message, WireError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            let start = self.offset;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(n) => self.offset += n as u64,
                Err(e) => return Some(Err(e.into())),
            }
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            return Some(from_json_at(line, start));
        }
    }
}

pub fn write_frame<W: Write>(w: &mut W, m: &Message) -> io::Result<()> {
    let json = to_json(m);
    write!(w, "{} ", json.len())?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream.
pub fn read_frame<R: BufRead>(r: &mut R) -> Result<Option<Message>, WireError> {
    let mut header = Vec::new();
    loop {
        let mut byte = [0u8];
        if r.read(&mut byte)? == 0 {
            if header.is_empty() {
                return Ok(None);
            }
            return Err(WireError::at(0, "truncated frame header"));
        }
        match byte[0] {
            b' ' => break,
            b'0'..=b'9' if header.len() < 20 => header.push(byte[0]),
            b'\n' | b'\r' if header.is_empty() => continue,
            other => {
                return Err(WireError::at(
                    header.len() as u64,
                    format!("bad frame header byte {other:#04x}"),
                ))
            }
        }
    }
    let len: usize = std::str::from_utf8(&header)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| WireError::at(0, "empty frame length"))?;
    if len > MAX_FRAME {
        return Err(WireError::at(0, format!("frame of {len} bytes exceeds limit")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let mut nl = [0u8];
    r.read_exact(&mut nl)?;
    if nl[0] != b'\n' {
        return Err(WireError::at(len as u64, "frame not terminated by newline"));
    }
    let text = std::str::from_utf8(&body).map_err(|e| WireError::at(e.valid_up_to() as u64, "invalid utf-8"))?;
    from_json_at(text, header.len() as u64 + 1).map(Some)
}

/// Answers frames on `r`/`w` until end of stream. Handler errors are sent
/// back as `error` records and do not stop the loop.
pub fn serve<R, W, F>(r: &mut R, w: &mut W, mut handler: F) -> Result<(), WireError>
where
    R: BufRead,
    W: Write,
    F: FnMut(Message) -> Result<Vec<f64>, String>,
{
    while let Some(m) = read_frame(r)? {
        let reply = match handler(m) {
            Ok(values) => Message::Q(values),
            Err(e) => Message::Error(e),
        };
        write_frame(w, &reply)?;
    }
    Ok(())
}
