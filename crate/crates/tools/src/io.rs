//! File formats: CSV with `#` provenance lines and sorted, pretty JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mfvasicek_core::model::{PathLabel, SamplePath, TimeGrid};
use serde::Serialize;

#[derive(Debug)]
pub enum IoError {
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Malformed input; `line` is 1-based in the file.
    Parse {
        path: String,
        line: Option<u64>,
        message: String,
    },
    Json(serde_json::Error),
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{path}: {source}"),
            Self::Parse {
                path,
                line: Some(l),
                message,
            } => write!(f, "{path}:{l}: {message}"),
            Self::Parse {
                path,
                line: None,
                message,
            } => write!(f, "{path}: {message}"),
            Self::Json(e) => write!(f, "json: {e}"),
        }
    }
}

impl std::error::Error for IoError {}

/// Who wrote a file and with which settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Flag name to value, in a fixed order.
    pub flags: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, flags: Vec<(String, String)>) -> Self {
        Self {
            tool: "mfvasicek".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            flags,
        }
    }

    pub fn csv_header(&self) -> String {
        let mut s = format!("# {} {}\n# command: {}", self.tool, self.version, self.command);
        for (k, v) in &self.flags {
            let _ = write!(s, " --{k} {v}");
        }
        s.push('\n');
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let flags: serde_json::Map<String, serde_json::Value> = self
            .flags
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        serde_json::json!({
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "flags": flags,
        })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// CSV writer for numeric tables; fields are written with the shortest
/// round-trip representation.
pub struct CsvTable {
    buf: String,
}

impl CsvTable {
    pub fn new(prov: &Provenance, header: &[&str]) -> Self {
        let mut buf = prov.csv_header();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self { buf }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: std::fmt::Display,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            let _ = write!(self.buf, "{f}");
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_file(path, &self.buf)
    }
}

/// Empty string for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Pretty JSON with keys sorted at every level.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    // serde_json's default map is ordered by key.
    let v = serde_json::to_value(value).map_err(IoError::Json)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(IoError::Json)?;
    s.push('\n');
    Ok(s)
}

/// Writes `value` with an added top-level `provenance` object.
pub fn save_json<T: Serialize>(path: &Path, prov: &Provenance, value: &T) -> Result<(), IoError> {
    let mut v = serde_json::to_value(value).map_err(IoError::Json)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("provenance".into(), prov.to_json());
    }
    write_file(path, &to_sorted_json(&v)?)
}

/// Reads a `t,x` CSV (extra columns ignored, `#` lines skipped) into an
/// observed process path.
pub fn read_path_csv(path: &Path) -> Result<SamplePath, IoError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: name.clone(),
        source,
    })?;
    parse_path_csv(&text, &name)
}

pub fn parse_path_csv(text: &str, name: &str) -> Result<SamplePath, IoError> {
    let err = |line: Option<u64>, message: String| IoError::Parse {
        path: name.into(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| err(e.position().map(|p| p.line()), e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(err(None, "empty file".into()));
    }
    let col = |n: &str| headers.iter().position(|h| h == n);
    let (Some(it), Some(ix)) = (col("t"), col("x")) else {
        return Err(err(
            None,
            format!(
                "header must contain columns t and x (got {:?})",
                headers.iter().collect::<Vec<_>>()
            ),
        ));
    };
    let mut t = Vec::new();
    let mut x = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        let num = |i: usize, what: &str| -> Result<f64, IoError> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("{what} is not a finite number: {s:?}")))
        };
        let tv = num(it, "t")?;
        if t.is_empty() && tv != 0.0 {
            return Err(err(line, format!("t must start at 0 (got {tv})")));
        }
        if let Some(&prev) = t.last() {
            if tv <= prev {
                return Err(err(line, format!("t must be strictly increasing ({tv} after {prev})")));
            }
        }
        t.push(tv);
        x.push(num(ix, "x")?);
    }
    if t.len() < 2 {
        return Err(err(None, "need at least two observations".into()));
    }
    let grid = TimeGrid::new(t).map_err(|e| err(None, e.to_string()))?;
    SamplePath::new(grid, x, PathLabel::X).map_err(|e| err(None, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance::new("test", vec![("seed".into(), "3".into())])
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&prov(), &["t", "x"]);
        t.row([0.0, 0.0]);
        t.row([0.5, -1.25]);
        let expected = format!(
            "# mfvasicek {}\n# command: test --seed 3\nt,x\n0,0\n0.5,-1.25\n",
            env!("CARGO_PKG_VERSION")
        );
        assert_eq!(t.as_str(), expected);
    }

    #[test]
    fn round_trip_through_text() {
        let mut t = CsvTable::new(&prov(), &["t", "x", "xi"]);
        t.row([0.0, 0.0, 0.0]);
        t.row([0.1, 0.3, 0.2]);
        t.row([0.2, -0.1, 0.1]);
        let p = parse_path_csv(t.as_str(), "mem").unwrap();
        assert_eq!(p.values(), &[0.0, 0.3, -0.1]);
        assert_eq!(p.grid().points(), &[0.0, 0.1, 0.2]);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = parse_path_csv("t,x\n0,0\n1,abc\n", "f").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: Some(3), .. }), "{e}");
        let e = parse_path_csv("t,x\n0,0\n1,1\n0.5,2\n", "f").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: Some(4), .. }), "{e}");
        let e = parse_path_csv("t,x\n1,0\n2,1\n", "f").unwrap_err();
        assert!(matches!(e, IoError::Parse { line: Some(2), .. }), "{e}");
        assert!(parse_path_csv("", "f").is_err());
        assert!(parse_path_csv("a,b\n0,0\n1,1\n", "f").is_err());
        assert!(parse_path_csv("t,x\n0,0\n", "f").is_err());
        assert!(parse_path_csv("t,x\n0,1\n1,1\n", "f").is_err());
    }

    #[test]
    fn json_keys_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let s = to_sorted_json(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }
}
