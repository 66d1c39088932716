//! The document formats: ordered POVMs (also used for collapsed POVMs, with
//! the escape effect as the single terminal `term:1`) and plain matrices.

use std::fmt;
use std::path::Path;

use residua_core::collapse::CollapsedPovm;
use residua_core::linalg::{Effect, Matrix, C64};
use residua_core::povm::{labels_to_strings, Label, OrderedPovm};
use residua_core::Tolerances;
use serde::{Deserialize, Serialize};

use crate::json::to_text;

pub const SCHEMA_VERSION: &str = "1";

/// A parse or validation failure, pointing at a line when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct DocError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for DocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source, line, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for DocError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_tol: Option<f64>,
}

impl TolOverride {
    pub fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            rank_tol: self.rank_tol.unwrap_or(base.rank_tol),
            kernel_tol: self.kernel_tol.unwrap_or(base.kernel_tol),
            conv_tol: self.conv_tol.unwrap_or(base.conv_tol),
            check_tol: self.check_tol.unwrap_or(base.check_tol),
        }
    }
}

/// `[re, im]` entries, row-major.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmDocument {
    pub schema_version: String,
    pub dim: usize,
    pub effects: Vec<MatrixEntries>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolOverride>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub schema_version: String,
    pub rows: usize,
    pub cols: usize,
    pub entries: MatrixEntries,
}

/// Matrix entries as `[re, im]` pairs. Signed zeros are written as `+0` so
/// that equal matrices always produce identical documents.
pub fn entries_of(m: &Matrix) -> MatrixEntries {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re + 0.0, m[(i, j)].im + 0.0]).collect()).collect()
}

fn matrix_of(entries: &MatrixEntries, cols: usize) -> Matrix {
    Matrix::from_fn(entries.len(), cols, |i, j| C64::new(entries[i][j][0], entries[i][j][1]))
}

impl PovmDocument {
    pub fn from_povm(p: &OrderedPovm) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            dim: p.dim(),
            effects: p.effects().iter().map(|e| entries_of(e.matrix())).collect(),
            labels: labels_to_strings(p.labels()),
            tolerances: None,
        }
    }

    /// Coordinates `orig:1..=N`, then the escape effect as `term:1`.
    pub fn from_collapsed(b: &CollapsedPovm) -> Self {
        let mut effects: Vec<MatrixEntries> = b.b().iter().map(|e| entries_of(e.matrix())).collect();
        effects.push(entries_of(b.b_esc().matrix()));
        let mut labels: Vec<String> = (1..=b.len()).map(|k| Label::Original(k).to_string()).collect();
        labels.push(Label::Terminal(1).to_string());
        Self { schema_version: SCHEMA_VERSION.into(), dim: b.dim(), effects, labels, tolerances: None }
    }

    pub fn to_text(&self) -> String {
        to_text(self)
    }

    /// Tolerances in effect for this document: `base` with the document's
    /// overrides applied.
    pub fn tolerances(&self, base: Tolerances) -> Tolerances {
        self.tolerances.map_or(base, |o| o.apply(base))
    }
}

/// A parsed document with enough of its text kept to place later errors.
pub struct Loaded<T> {
    pub doc: T,
    pub source: String,
    text: String,
}

impl<T> Loaded<T> {
    pub fn error(&self, line: Option<usize>, message: impl Into<String>) -> DocError {
        DocError { source: self.source.clone(), line, message: message.into() }
    }

    pub fn key_line(&self, key: &str) -> Option<usize> {
        locate_top_key(&self.text, key)
    }

    pub fn element_line(&self, key: &str, index: usize) -> Option<usize> {
        locate_element(&self.text, key, index)
    }
}

pub fn read_file(path: &Path) -> Result<String, DocError> {
    std::fs::read_to_string(path).map_err(|e| DocError {
        source: path.display().to_string(),
        line: None,
        message: format!("cannot read: {e}"),
    })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> Result<Loaded<T>, DocError> {
    match serde_json::from_str::<T>(text) {
        Ok(doc) => Ok(Loaded { doc, source: source.into(), text: text.into() }),
        Err(e) => Err(DocError {
            source: source.into(),
            line: (e.line() > 0).then_some(e.line()),
            message: format!("{e}"),
        }),
    }
}

impl Loaded<PovmDocument> {
    pub fn parse(text: &str, source: &str) -> Result<Self, DocError> {
        let loaded: Self = parse(text, source)?;
        loaded.check_shape()?;
        Ok(loaded)
    }

    fn check_shape(&self) -> Result<(), DocError> {
        let d = &self.doc;
        if d.schema_version != SCHEMA_VERSION {
            return Err(self.error(
                self.key_line("schema_version"),
                format!("unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})", d.schema_version),
            ));
        }
        if d.dim == 0 {
            return Err(self.error(self.key_line("dim"), "dim must be positive"));
        }
        if d.effects.is_empty() {
            return Err(self.error(self.key_line("effects"), "at least one effect is required"));
        }
        for (k, e) in d.effects.iter().enumerate() {
            check_entries(e, d.dim, d.dim).map_err(|m| self.error(self.element_line("effects", k), format!("effect {k}: {m}")))?;
        }
        if d.labels.len() != d.effects.len() {
            return Err(self.error(
                self.key_line("labels"),
                format!("{} labels for {} effects", d.labels.len(), d.effects.len()),
            ));
        }
        for (k, l) in d.labels.iter().enumerate() {
            l.parse::<Label>().map_err(|e| self.error(self.element_line("labels", k), e.to_string()))?;
        }
        if let Some(t) = d.tolerances {
            t.apply(Tolerances::default())
                .validate()
                .map_err(|e| self.error(self.key_line("tolerances"), e.to_string()))?;
        }
        Ok(())
    }

    fn effects(&self) -> Result<Vec<Effect>, DocError> {
        let d = &self.doc;
        d.effects
            .iter()
            .enumerate()
            .map(|(k, e)| {
                Effect::from_matrix(matrix_of(e, d.dim))
                    .map_err(|err| self.error(self.element_line("effects", k), format!("effect {k}: {err}")))
            })
            .collect()
    }

    fn labels(&self) -> Vec<Label> {
        self.doc.labels.iter().map(|l| l.parse().expect("checked when parsing")).collect()
    }

    pub fn to_povm(&self, tol: &Tolerances) -> Result<OrderedPovm, DocError> {
        OrderedPovm::new(self.effects()?, self.labels(), tol).map_err(|e| self.error(self.key_line("effects"), e.to_string()))
    }

    /// Reads originals followed by exactly one terminal coordinate, the
    /// escape effect.
    pub fn to_collapsed(&self, tol: &Tolerances) -> Result<CollapsedPovm, DocError> {
        let labels = self.labels();
        let n_orig = labels.iter().take_while(|l| matches!(l, Label::Original(_))).count();
        if n_orig == 0 || labels.len() != n_orig + 1 {
            return Err(self.error(
                self.key_line("labels"),
                "a collapsed document lists orig:1..=N followed by a single terminal (the escape effect)",
            ));
        }
        let mut effects = self.effects()?;
        let esc = effects.pop().expect("n_orig + 1 effects");
        CollapsedPovm::new(effects, esc, tol).map_err(|e| self.error(self.key_line("effects"), e.to_string()))
    }
}

impl Loaded<MatrixDocument> {
    pub fn parse(text: &str, source: &str) -> Result<Self, DocError> {
        let loaded: Self = parse(text, source)?;
        let d = &loaded.doc;
        if d.schema_version != SCHEMA_VERSION {
            return Err(loaded.error(loaded.key_line("schema_version"), "unsupported schema_version"));
        }
        check_entries(&d.entries, d.rows, d.cols).map_err(|m| loaded.error(loaded.key_line("entries"), m))?;
        Ok(loaded)
    }

    pub fn matrix(&self) -> Matrix {
        matrix_of(&self.doc.entries, self.doc.cols)
    }
}

impl MatrixDocument {
    pub fn from_matrix(m: &Matrix) -> Self {
        Self { schema_version: SCHEMA_VERSION.into(), rows: m.rows(), cols: m.cols(), entries: entries_of(m) }
    }
}

fn check_entries(e: &MatrixEntries, rows: usize, cols: usize) -> Result<(), String> {
    if e.len() != rows {
        return Err(format!("expected {rows} rows, found {}", e.len()));
    }
    for (i, row) in e.iter().enumerate() {
        if row.len() != cols {
            return Err(format!("row {i}: expected {cols} entries, found {}", row.len()));
        }
        if let Some(j) = row.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(format!("row {i}, column {j}: entry is not finite"));
        }
    }
    Ok(())
}

/// Walks the JSON text, calling `visit(depth, offset, byte)` for every
/// structural byte outside strings, and `key(depth, offset, name)` for
/// every object key.
fn scan(text: &str, mut visit: impl FnMut(usize, usize, u8) -> bool, mut key: impl FnMut(usize, usize, &str) -> bool) {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                let start = i + 1;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b':' && key(depth, start - 1, &text[start..i.min(text.len())]) {
                    return;
                }
            }
            b @ (b'{' | b'[') => {
                depth += 1;
                if visit(depth, i, b) {
                    return;
                }
            }
            b @ (b'}' | b']') => {
                if visit(depth, i, b) {
                    return;
                }
                depth = depth.saturating_sub(1);
            }
            b @ b',' => {
                if visit(depth, i, b) {
                    return;
                }
            }
            _ => {}
        }
        i += 1;
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset].bytes().filter(|&b| b == b'\n').count() + 1
}

fn locate_top_key(text: &str, name: &str) -> Option<usize> {
    let mut found = None;
    scan(text, |_, _, _| false, |depth, at, k| {
        if depth == 1 && k == name {
            found = Some(at);
            return true;
        }
        false
    });
    found.map(|at| line_of(text, at))
}

/// Line where element `index` of the top-level array `name` starts.
fn locate_element(text: &str, name: &str, index: usize) -> Option<usize> {
    let key_at = {
        let mut found = None;
        scan(text, |_, _, _| false, |depth, at, k| {
            if depth == 1 && k == name {
                found = Some(at);
                return true;
            }
            false
        });
        found?
    };
    let rest = &text[key_at..];
    let open = rest.find('[')?;
    let body = &rest[open..];
    // Element 0 starts right after the bracket; element k after the k-th
    // comma at depth 1 of this array.
    let mut start = None;
    let mut commas = 0;
    scan(
        body,
        |depth, at, b| {
            if depth == 1 && b == b'[' && at == 0 && index == 0 {
                start = Some(1);
                return true;
            }
            if depth == 1 && b == b',' {
                commas += 1;
                if commas == index {
                    start = Some(at + 1);
                    return true;
                }
            }
            depth == 1 && b == b']'
        },
        |_, _, _| false,
    );
    let s = start?;
    let skip = body[s..].len() - body[s..].trim_start().len();
    Some(line_of(text, key_at + open + s + skip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use residua_core::fixtures::noncommuting_qubit;

    #[test]
    fn povm_round_trips_bitwise() {
        let doc = PovmDocument::from_povm(&noncommuting_qubit());
        let text = doc.to_text();
        let back = Loaded::<PovmDocument>::parse(&text, "mem").unwrap();
        assert_eq!(back.doc, doc);
        assert_eq!(back.doc.to_text(), text);
        let p = back.to_povm(&Tolerances::default()).unwrap();
        assert_eq!(p, noncommuting_qubit());
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = Loaded::<PovmDocument>::parse("{\n  \"dim\": 2,\n  oops\n}", "x.json").err().unwrap();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().starts_with("x.json:3:"));
    }

    #[test]
    fn shape_errors_point_at_the_effect() {
        let mut doc = PovmDocument::from_povm(&noncommuting_qubit());
        doc.effects[2].pop();
        let text = doc.to_text();
        let err = Loaded::<PovmDocument>::parse(&text, "x").err().unwrap();
        let openings: Vec<usize> = text.lines().enumerate().filter(|(_, l)| *l == "    [").map(|(i, _)| i + 1).collect();
        assert_eq!(err.line, Some(openings[2]), "{err}\n{text}");
    }

    #[test]
    fn label_error_line() {
        let text = "{\n \"schema_version\": \"1\",\n \"dim\": 1,\n \"effects\": [[[[1.0, 0.0]]]],\n \"labels\": [\n  \"first\"\n ]\n}";
        let err = Loaded::<PovmDocument>::parse(text, "x").err().unwrap();
        assert_eq!(err.line, Some(6), "{err}");
    }
}
