//! Plain-text formats (double precision).
//!
//! * events: CSV `time,user,product`
//! * networks: CSV `src,dst[,first_time]`, `dst` observes `src`
//! * parameters: JSON with a format version, shared `omega`, and one entry
//!   per user holding `mu`, row-major `a` and row-major `b`
//! * mention logs: CSV `time,mentioner,mentioned` with free-form string ids
//!
//! Event and network files may start with `# key=value,...` lines recording
//! the user count and observation window; readers accept files without them.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Event, EventLog, ModelParams, UserParams};
use crate::network::{FirstEdgeTimes, Network};

pub const PARAMS_FORMAT_VERSION: u32 = 1;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => parse_err(line, e.to_string()),
    }
}

/// Splits `# k=v,k=v` preamble lines from the body.
fn read_meta(text: &str) -> Result<BTreeMap<String, String>> {
    let mut meta = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| parse_err(i + 1, format!("expected key=value, got `{kv}`")))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(meta)
}

fn meta_value<V: std::str::FromStr>(
    meta: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<V>> {
    meta.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| parse_err(1, format!("bad value `{v}` for `{key}`")))
        })
        .transpose()
}

struct Rows {
    reader: csv::Reader<std::io::Cursor<String>>,
}

impl Rows {
    fn open(text: String, expected: &[&str], optional_last: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(std::io::Cursor::new(text));
        let header = reader.headers().map_err(csv_err)?.clone();
        let line = header.position().map_or(1, |p| p.line() as usize);
        let fields: Vec<&str> = header.iter().collect();
        let want = &expected[..expected.len() - usize::from(optional_last)];
        if fields != expected && fields != want {
            return Err(parse_err(
                line.max(1),
                format!(
                    "expected header `{}`, got `{}`",
                    expected.join(","),
                    fields.join(",")
                ),
            ));
        }
        Ok(Rows { reader })
    }

    fn for_each(
        mut self,
        mut f: impl FnMut(usize, &csv::StringRecord) -> Result<()>,
    ) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line() as usize);
                    f(line, &record)?;
                }
                Err(e) => return Err(csv_err(e)),
            }
        }
    }
}

fn field<V: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    line: usize,
) -> Result<V> {
    let raw = rec
        .get(i)
        .ok_or_else(|| parse_err(line, format!("missing `{name}`")))?;
    raw.parse()
        .map_err(|_| parse_err(line, format!("bad `{name}` value `{raw}`")))
}

fn read_to_string(mut r: impl Read) -> Result<String> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    Ok(s)
}

/// Contents of an event file before the universe and window are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct EventsFile {
    pub num_users: Option<usize>,
    pub num_products: Option<usize>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub events: Vec<Event<f64>>,
}

impl EventsFile {
    /// Builds the log, preferring explicit arguments over the file preamble
    /// and falling back to `max index + 1` for counts and `0` for the start.
    pub fn into_log(
        self,
        num_users: Option<usize>,
        num_products: Option<usize>,
        start: Option<f64>,
        end: Option<f64>,
    ) -> Result<EventLog<f64>> {
        let users = num_users
            .or(self.num_users)
            .unwrap_or_else(|| self.events.iter().map(|e| e.user + 1).max().unwrap_or(0));
        let products = num_products
            .or(self.num_products)
            .unwrap_or_else(|| self.events.iter().map(|e| e.product + 1).max().unwrap_or(0));
        let start = start.or(self.start).unwrap_or(0.0);
        let end = end
            .or(self.end)
            .ok_or_else(|| Error::Domain("observation window end is not known".into()))?;
        EventLog::new(users, products, start, end, self.events)
    }
}

pub fn read_events(r: impl Read) -> Result<EventsFile> {
    let text = read_to_string(r)?;
    let meta = read_meta(&text)?;
    let mut events = Vec::new();
    Rows::open(text, &["time", "user", "product"], false)?.for_each(|line, rec| {
        let time: f64 = field(rec, 0, "time", line)?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(parse_err(
                line,
                format!("time must be finite and non-negative, got {time}"),
            ));
        }
        events.push(Event::new(
            field(rec, 1, "user", line)?,
            field(rec, 2, "product", line)?,
            time,
        ));
        Ok(())
    })?;
    Ok(EventsFile {
        num_users: meta_value(&meta, "users")?,
        num_products: meta_value(&meta, "products")?,
        start: meta_value(&meta, "start")?,
        end: meta_value(&meta, "end")?,
        events,
    })
}

pub fn write_events(mut w: impl Write, log: &EventLog<f64>) -> Result<()> {
    writeln!(
        w,
        "# users={},products={},start={},end={}",
        log.num_users(),
        log.num_products(),
        log.start(),
        log.end()
    )?;
    writeln!(w, "time,user,product")?;
    for e in log.events() {
        writeln!(w, "{},{},{}", e.time, e.user, e.product)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub num_users: Option<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Present when the file has a `first_time` column.
    pub first_edge_time: Option<FirstEdgeTimes<f64>>,
}

impl NetworkFile {
    pub fn into_network(
        self,
        num_users: Option<usize>,
    ) -> Result<(Network, Option<FirstEdgeTimes<f64>>)> {
        let n = num_users.or(self.num_users).unwrap_or_else(|| {
            self.edges
                .iter()
                .map(|&(s, d)| s.max(d) + 1)
                .max()
                .unwrap_or(0)
        });
        Ok((Network::new(n, self.edges)?, self.first_edge_time))
    }
}

pub fn read_network(r: impl Read) -> Result<NetworkFile> {
    let text = read_to_string(r)?;
    let meta = read_meta(&text)?;
    let mut edges = Vec::new();
    let mut times = FirstEdgeTimes::new();
    let mut with_times = None;
    Rows::open(text, &["src", "dst", "first_time"], true)?.for_each(|line, rec| {
        let src: usize = field(rec, 0, "src", line)?;
        let dst: usize = field(rec, 1, "dst", line)?;
        let timed = rec.len() >= 3 && !rec[2].is_empty();
        if *with_times.get_or_insert(timed) != timed {
            return Err(parse_err(
                line,
                "first_time must be given on every row or none",
            ));
        }
        if timed {
            times.insert((src, dst), field(rec, 2, "first_time", line)?);
        }
        edges.push((src, dst));
        Ok(())
    })?;
    Ok(NetworkFile {
        num_users: meta_value(&meta, "users")?,
        edges,
        first_edge_time: with_times.unwrap_or(false).then_some(times),
    })
}

pub fn write_network(
    mut w: impl Write,
    net: &Network,
    first_edge_time: Option<&FirstEdgeTimes<f64>>,
) -> Result<()> {
    writeln!(w, "# users={}", net.num_users())?;
    match first_edge_time {
        None => {
            writeln!(w, "src,dst")?;
            for &(s, d) in net.edges() {
                writeln!(w, "{s},{d}")?;
            }
        }
        Some(times) => {
            writeln!(w, "src,dst,first_time")?;
            for &(s, d) in net.edges() {
                let t = times.get(&(s, d)).ok_or_else(|| {
                    Error::Shape(format!("edge ({s}, {d}) has no first-edge time"))
                })?;
                writeln!(w, "{s},{d},{t}")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    format_version: u32,
    omega: f64,
    num_products: usize,
    users: Vec<UserDoc>,
}

#[derive(Serialize, Deserialize)]
struct UserDoc {
    user: usize,
    mu: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

pub fn write_params(mut w: impl Write, params: &ModelParams<f64>) -> Result<()> {
    let doc = ParamsDoc {
        format_version: PARAMS_FORMAT_VERSION,
        omega: params.omega().unwrap_or(1.0),
        num_products: params.num_products(),
        users: params
            .users()
            .iter()
            .enumerate()
            .map(|(user, p)| UserDoc {
                user,
                mu: p.mu.clone(),
                a: p.a.clone(),
                b: p.b.clone(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_params(r: impl Read) -> Result<ModelParams<f64>> {
    let doc: ParamsDoc =
        serde_json::from_reader(r).map_err(|e| parse_err(e.line(), e.to_string()))?;
    if doc.format_version != PARAMS_FORMAT_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported format_version {}", doc.format_version),
        ));
    }
    let mut users: Vec<Option<UserParams<f64>>> = vec![None; doc.users.len()];
    for u in doc.users {
        let slot = users
            .get_mut(u.user)
            .ok_or_else(|| parse_err(0, format!("user {} out of range", u.user)))?;
        if slot.is_some() {
            return Err(parse_err(0, format!("user {} listed twice", u.user)));
        }
        if u.mu.len() != doc.num_products {
            return Err(Error::Shape(format!(
                "user {} has {} base rates, expected {}",
                u.user,
                u.mu.len(),
                doc.num_products
            )));
        }
        *slot = Some(UserParams::new(u.mu, u.a, u.b, doc.omega)?);
    }
    ModelParams::new(users.into_iter().map(Option::unwrap).collect())
}

/// One row of a mention log or of a raw event log with string identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub line: usize,
    pub time: f64,
    pub first: String,
    pub second: String,
}

/// Reads a CSV whose header is `time,<first>,<second>` with string ids.
pub fn read_labeled(r: impl Read, first: &str, second: &str) -> Result<Vec<LabeledRecord>> {
    let text = read_to_string(r)?;
    let mut out = Vec::new();
    Rows::open(text, &["time", first, second], false)?.for_each(|line, rec| {
        let time: f64 = field(rec, 0, "time", line)?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(parse_err(
                line,
                format!("time must be finite and non-negative, got {time}"),
            ));
        }
        let get = |i: usize, name: &str| {
            rec.get(i)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .ok_or_else(|| parse_err(line, format!("missing `{name}`")))
        };
        out.push(LabeledRecord {
            line,
            time,
            first: get(1, first)?,
            second: get(2, second)?,
        });
        Ok(())
    })?;
    Ok(out)
}
