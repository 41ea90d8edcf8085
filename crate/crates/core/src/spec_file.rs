//! Loader for the sectioned plain-text metric and embedding files.
//!
//! ```text
//! # Schwarzschild exterior
//! [meta]
//! name = schwarzschild
//! dim = 4
//! signature = 3,1
//!
//! [coords]
//! t r theta phi
//!
//! [params]
//! M = 1
//!
//! [metric]
//! g 0 0 = -(1 - 2*M/r)
//! g 1 1 = 1/(1 - 2*M/r)
//! g 2 2 = r^2
//! g 3 3 = r^2*sin(theta)^2
//!
//! [sample]
//! r = 3 .. 10
//! ```
//!
//! Embedding files replace `[metric]` with `[embedding]` lines `X mu = expr`
//! and add `ambient_signature = p,q` to `[meta]`. Signatures are written as
//! (positive, negative) counts. Unlisted metric entries are zero and the
//! table is closed symmetrically. Sample ranges default to `0.5 .. 1.5`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::constructs::EmbeddingSpec;
use crate::error::{Error, Result};
use crate::expr::{parse, Bindings, CompiledExpr, Expr};
use crate::geometry::{MetricSource, MetricSpec};

pub const DEFAULT_RANGE: (f64, f64) = (0.5, 1.5);

/// A loaded spec file.
#[derive(Debug, Clone)]
pub enum Spec {
    Metric(MetricSpec),
    Embedding(EmbeddingSpec),
}

impl Spec {
    pub fn source(&self) -> &dyn MetricSource {
        match self {
            Spec::Metric(m) => m,
            Spec::Embedding(e) => e,
        }
    }

    pub fn name(&self) -> &str {
        self.source().name()
    }

    pub fn embedding(&self) -> Option<&EmbeddingSpec> {
        match self {
            Spec::Embedding(e) => Some(e),
            Spec::Metric(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Meta,
    Coords,
    Params,
    Metric,
    Embedding,
    Sample,
}

impl Section {
    fn from_name(s: &str) -> Option<Section> {
        Some(match s {
            "meta" => Section::Meta,
            "coords" => Section::Coords,
            "params" => Section::Params,
            "metric" => Section::Metric,
            "embedding" => Section::Embedding,
            "sample" => Section::Sample,
            _ => return None,
        })
    }
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> Error {
        Error::Spec {
            location: format!("{}:{}:{}", self.file, line, col),
            message: message.into(),
        }
    }
}

/// Body of one non-empty line: (line number, column of first char, text).
struct Line<'a> {
    no: usize,
    col: usize,
    text: &'a str,
}

fn split_kv<'a>(ctx: &Ctx, l: &Line<'a>) -> Result<(&'a str, &'a str, usize)> {
    let Some(eq) = l.text.find('=') else {
        return Err(ctx.err(l.no, l.col, "expected `key = value`"));
    };
    let key = l.text[..eq].trim();
    let rest = &l.text[eq + 1..];
    let lead = rest.len() - rest.trim_start().len();
    Ok((key, rest.trim(), l.col + eq + 1 + lead))
}

fn parse_expr(ctx: &Ctx, l: &Line, text: &str, col: usize) -> Result<Expr> {
    parse(text).map_err(|e| match e {
        Error::Parse { offset, message } => ctx.err(l.no, col + offset, message),
        other => other,
    })
}

fn parse_pair(ctx: &Ctx, l: &Line, text: &str, col: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [p, q] => match (p.parse(), q.parse()) {
            (Ok(p), Ok(q)) => Ok((p, q)),
            _ => Err(ctx.err(l.no, col, format!("expected two counts `p,q`, got `{text}`"))),
        },
        _ => Err(ctx.err(l.no, col, format!("expected two counts `p,q`, got `{text}`"))),
    }
}

fn parse_index(ctx: &Ctx, l: &Line, tok: &str, col: usize, n: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(i) if i < n => Ok(i),
        Ok(i) => Err(ctx.err(l.no, col, format!("index {i} out of range for {n} slots"))),
        Err(_) => Err(ctx.err(l.no, col, format!("expected an index, got `{tok}`"))),
    }
}

/// Loads a spec file from disk.
pub fn load_spec(path: &Path) -> Result<Spec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Spec {
        location: path.display().to_string(),
        message: format!("cannot read file: {e}"),
    })?;
    parse_spec(&text, &path.display().to_string())
}

/// Parses spec text; `file` is used in diagnostics only.
pub fn parse_spec(text: &str, file: &str) -> Result<Spec> {
    let ctx = Ctx { file };
    let mut sections: BTreeMap<Section, (usize, Vec<Line>)> = BTreeMap::new();
    let mut current: Option<Section> = None;
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col = body.len() - body.trim_start().len() + 1;
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(ctx.err(no, col, "unterminated section header"));
            };
            let Some(sec) = Section::from_name(name.trim()) else {
                return Err(ctx.err(no, col, format!("unknown section [{}]", name.trim())));
            };
            if sections.contains_key(&sec) {
                return Err(ctx.err(no, col, format!("duplicate section [{}]", name.trim())));
            }
            sections.insert(sec, (no, Vec::new()));
            current = Some(sec);
            continue;
        }
        let Some(sec) = current else {
            return Err(ctx.err(no, col, "content before the first section"));
        };
        sections.get_mut(&sec).expect("inserted").1.push(Line { no, col, text: trimmed });
    }
    let eof = text.lines().count().max(1);
    let missing = |name: &str| ctx.err(eof, 1, format!("missing section [{name}]"));

    // [meta]
    let (_, meta_lines) = sections.get(&Section::Meta).ok_or_else(|| missing("meta"))?;
    let mut meta: BTreeMap<&str, (&str, usize, &Line)> = BTreeMap::new();
    for l in meta_lines {
        let (k, v, col) = split_kv(&ctx, l)?;
        if !matches!(k, "name" | "dim" | "signature" | "ambient_signature") {
            return Err(ctx.err(l.no, l.col, format!("unknown meta key `{k}`")));
        }
        if meta.insert(k, (v, col, l)).is_some() {
            return Err(ctx.err(l.no, l.col, format!("duplicate meta key `{k}`")));
        }
    }
    let name = meta.get("name").map(|m| m.0.to_string()).unwrap_or_else(|| {
        Path::new(file).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "unnamed".into())
    });
    let (dim_text, dim_col, dim_line) = *meta.get("dim").ok_or_else(|| ctx.err(eof, 1, "missing meta key `dim`"))?;
    let dim: usize = dim_text
        .parse()
        .map_err(|_| ctx.err(dim_line.no, dim_col, format!("dim must be an integer, got `{dim_text}`")))?;
    let (sig_text, sig_col, sig_line) = *meta
        .get("signature")
        .ok_or_else(|| ctx.err(eof, 1, "missing meta key `signature`"))?;
    let signature = parse_pair(&ctx, sig_line, sig_text, sig_col)?;
    if signature.0 + signature.1 != dim {
        return Err(ctx.err(sig_line.no, sig_col, format!("signature counts must sum to dim = {dim}")));
    }

    // [coords]
    let (coords_at, coord_lines) = sections.get(&Section::Coords).ok_or_else(|| missing("coords"))?;
    let mut coords: Vec<(&str, usize, usize)> = Vec::new();
    for l in coord_lines {
        let mut offset = 0;
        for tok in l.text.split(|c: char| c.is_whitespace() || c == ',') {
            let at = l.text[offset..].find(tok).map(|p| p + offset).unwrap_or(offset);
            offset = at + tok.len();
            if tok.is_empty() {
                continue;
            }
            let col = l.col + at;
            let valid = tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || tok == "pi" || crate::expr::Func::from_name(tok).is_some() {
                return Err(ctx.err(l.no, col, format!("invalid coordinate name `{tok}`")));
            }
            if coords.iter().any(|c| c.0 == tok) {
                return Err(ctx.err(l.no, col, format!("duplicate coordinate `{tok}`")));
            }
            coords.push((tok, l.no, col));
        }
    }
    if coords.len() != dim {
        return Err(ctx.err(*coords_at, 1, format!("dim = {dim} but {} coordinates are declared", coords.len())));
    }
    let coord_names: Vec<&str> = coords.iter().map(|c| c.0).collect();

    // [params]
    let mut params: Vec<(String, f64)> = Vec::new();
    if let Some((_, lines)) = sections.get(&Section::Params) {
        for l in lines {
            let (k, v, col) = split_kv(&ctx, l)?;
            if coord_names.contains(&k) || params.iter().any(|p| p.0 == k) {
                return Err(ctx.err(l.no, l.col, format!("duplicate name `{k}`")));
            }
            let e = parse_expr(&ctx, l, v, col)?;
            let refs: Vec<(&str, f64)> = params.iter().map(|(n, v)| (n.as_str(), *v)).collect();
            let value = CompiledExpr::compile(&e, &Bindings::new(&[], &refs))
                .and_then(|c| c.eval_real(&[]))
                .map_err(|err| ctx.err(l.no, col, format!("parameter `{k}`: {err}")))?;
            params.push((k.to_string(), value));
        }
    }
    let param_refs: Vec<(&str, f64)> = params.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let bindings = Bindings::new(&coord_names, &param_refs);
    let check_bound = |l: &Line, e: &Expr, col: usize| -> Result<()> {
        CompiledExpr::compile(e, &bindings)
            .map(|_| ())
            .map_err(|err| ctx.err(l.no, col, err.to_string()))
    };

    // [sample]
    let mut ranges = vec![DEFAULT_RANGE; dim];
    if let Some((_, lines)) = sections.get(&Section::Sample) {
        let mut seen = vec![false; dim];
        for l in lines {
            let (k, v, col) = split_kv(&ctx, l)?;
            let Some(idx) = coord_names.iter().position(|c| *c == k) else {
                return Err(ctx.err(l.no, l.col, format!("unknown coordinate `{k}`")));
            };
            if seen[idx] {
                return Err(ctx.err(l.no, l.col, format!("duplicate range for `{k}`")));
            }
            seen[idx] = true;
            let Some(dots) = v.find("..") else {
                return Err(ctx.err(l.no, col, "expected `lo .. hi`"));
            };
            let (lo_t, hi_t) = (&v[..dots], &v[dots + 2..]);
            let eval = |t: &str, c: usize| -> Result<f64> {
                let e = parse_expr(&ctx, l, t.trim(), c)?;
                CompiledExpr::compile(&e, &Bindings::new(&[], &param_refs))
                    .and_then(|c| c.eval_real(&[]))
                    .map_err(|err| ctx.err(l.no, c, err.to_string()))
            };
            let lo = eval(lo_t, col)?;
            let hi = eval(hi_t, col + dots + 2)?;
            if !(lo < hi) {
                return Err(ctx.err(l.no, col, format!("empty range {lo} .. {hi}")));
            }
            ranges[idx] = (lo, hi);
        }
    }

    let has_metric = sections.contains_key(&Section::Metric);
    let has_embedding = sections.contains_key(&Section::Embedding);
    match (has_metric, has_embedding) {
        (true, true) => {
            let at = sections[&Section::Embedding].0;
            Err(ctx.err(at, 1, "a file holds either [metric] or [embedding], not both"))
        }
        (false, false) => Err(missing("metric")),
        (true, false) => {
            if let Some((_, col, l)) = meta.get("ambient_signature") {
                return Err(ctx.err(l.no, *col, "ambient_signature applies to embeddings only"));
            }
            let mut table: BTreeMap<(usize, usize), (Expr, usize, bool)> = BTreeMap::new();
            for l in &sections[&Section::Metric].1 {
                let (lhs, rhs, col) = split_kv(&ctx, l)?;
                let toks: Vec<&str> = lhs.split_whitespace().collect();
                if toks.len() != 3 || toks[0] != "g" {
                    return Err(ctx.err(l.no, l.col, format!("expected `g i j = expr`, got `{lhs}`")));
                }
                let i = parse_index(&ctx, l, toks[1], l.col + lhs.find(toks[1]).unwrap_or(0), dim)?;
                let j = parse_index(&ctx, l, toks[2], l.col + lhs.rfind(toks[2]).unwrap_or(0), dim)?;
                let e = parse_expr(&ctx, l, rhs, col)?;
                check_bound(l, &e, col)?;
                let key = (i.min(j), i.max(j));
                let transposed = i > j;
                if let Some((prev, prev_line, prev_t)) = table.get(&key) {
                    if *prev_t == transposed || i == j {
                        return Err(ctx.err(l.no, l.col, format!("duplicate entry g {i} {j} (first given on line {prev_line})")));
                    }
                    if *prev != e {
                        return Err(ctx.err(
                            l.no,
                            l.col,
                            format!("symmetry conflict: g {i} {j} = {e} but g {j} {i} = {prev} on line {prev_line}"),
                        ));
                    }
                    continue;
                }
                table.insert(key, (e, l.no, transposed));
            }
            let entries = table.into_iter().map(|((i, j), (e, _, _))| (i, j, e)).collect();
            let spec = MetricSpec::new(&name, &coord_names, &param_refs, entries, signature, ranges)?;
            Ok(Spec::Metric(spec))
        }
        (false, true) => {
            let Some((amb_text, amb_col, amb_line)) = meta.get("ambient_signature").copied() else {
                return Err(ctx.err(eof, 1, "missing meta key `ambient_signature`"));
            };
            let ambient = parse_pair(&ctx, amb_line, amb_text, amb_col)?;
            if ambient.0 + ambient.1 != dim + 1 {
                return Err(ctx.err(amb_line.no, amb_col, format!("ambient_signature counts must sum to dim + 1 = {}", dim + 1)));
            }
            let mut maps: Vec<Option<Expr>> = vec![None; dim + 1];
            let at = sections[&Section::Embedding].0;
            for l in &sections[&Section::Embedding].1 {
                let (lhs, rhs, col) = split_kv(&ctx, l)?;
                let toks: Vec<&str> = lhs.split_whitespace().collect();
                if toks.len() != 2 || toks[0] != "X" {
                    return Err(ctx.err(l.no, l.col, format!("expected `X mu = expr`, got `{lhs}`")));
                }
                let mu = parse_index(&ctx, l, toks[1], l.col + lhs.rfind(toks[1]).unwrap_or(0), dim + 1)?;
                if maps[mu].is_some() {
                    return Err(ctx.err(l.no, l.col, format!("duplicate entry X {mu}")));
                }
                let e = parse_expr(&ctx, l, rhs, col)?;
                check_bound(l, &e, col)?;
                maps[mu] = Some(e);
            }
            let maps = maps
                .into_iter()
                .enumerate()
                .map(|(mu, m)| m.ok_or_else(|| ctx.err(at, 1, format!("missing embedding component X {mu}"))))
                .collect::<Result<Vec<_>>>()?;
            let spec = EmbeddingSpec::new(&name, &coord_names, &param_refs, maps, ambient, signature, ranges)?;
            Ok(Spec::Embedding(spec))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHWARZSCHILD: &str = "\
# exterior
[meta]
name = schwarzschild
dim = 4
signature = 3,1

[coords]
t r theta phi

[params]
M = 1
twoM = 2*M

[metric]
g 0 0 = -(1 - twoM/r)
g 1 1 = 1/(1 - 2*M/r)
g 2 2 = r^2
g 3 3 = r^2*sin(theta)^2

[sample]
r = 3 .. 10
theta = 0.4 .. pi - 0.4
";

    fn err_of(text: &str) -> (String, String) {
        match parse_spec(text, "f.spec") {
            Err(Error::Spec { location, message }) => (location, message),
            other => panic!("expected a spec error, got {other:?}"),
        }
    }

    #[test]
    fn loads_schwarzschild() {
        let Spec::Metric(m) = parse_spec(SCHWARZSCHILD, "s.spec").unwrap() else {
            panic!("metric expected")
        };
        assert_eq!(m.coords, ["t", "r", "theta", "phi"]);
        assert_eq!(m.params[1], ("twoM".to_string(), 2.0));
        assert_eq!(m.ranges[1], (3.0, 10.0));
        assert!((m.ranges[2].1 - (std::f64::consts::PI - 0.4)).abs() < 1e-15);
        let g = m.metric_at(&[0.0, 4.0, 1.0, 0.0]).unwrap();
        assert_eq!(g.g.get(&[0, 0]), &-0.5);
    }

    #[test]
    fn missing_section() {
        let text = SCHWARZSCHILD.replace("[coords]\nt r theta phi\n", "");
        let (_, msg) = err_of(&text);
        assert_eq!(msg, "missing section [coords]");
    }

    #[test]
    fn symmetry_conflict_and_duplicates() {
        let base = "[meta]\ndim = 2\nsignature = 2,0\n[coords]\nx r\n[metric]\ng 0 0 = 1\ng 1 1 = 1\n";
        let (loc, msg) = err_of(&format!("{base}g 0 1 = r\ng 1 0 = -r\n"));
        assert_eq!(loc, "f.spec:10:1");
        assert!(msg.contains("symmetry conflict"), "{msg}");
        assert!(parse_spec(&format!("{base}g 0 1 = r\ng 1 0 = r\n"), "f").is_ok());
        let (_, msg) = err_of(&format!("{base}g 0 0 = 2\n"));
        assert!(msg.contains("duplicate entry"), "{msg}");
    }

    #[test]
    fn expression_errors_carry_column() {
        let text = "[meta]\ndim = 2\nsignature = 2,0\n[coords]\nx y\n[metric]\ng 0 0 = 1 + 2*\ng 1 1 = 1\n";
        let (loc, msg) = err_of(text);
        assert_eq!(loc, "f.spec:7:15");
        assert!(msg.contains("expected operand"));
        let text = "[meta]\ndim = 2\nsignature = 2,0\n[coords]\nx y\n[metric]\ng 0 0 = 1 + q\ng 1 1 = 1\n";
        let (loc, msg) = err_of(text);
        assert_eq!(loc, "f.spec:7:9");
        assert!(msg.contains("q"), "{msg}");
    }

    #[test]
    fn dim_mismatch_and_unknown_section() {
        let (_, msg) = err_of("[meta]\ndim = 3\nsignature = 3,0\n[coords]\nx y\n[metric]\ng 0 0 = 1\n");
        assert!(msg.contains("dim = 3"), "{msg}");
        let (loc, msg) = err_of("[meta]\ndim = 2\n[bogus]\n");
        assert_eq!(loc, "f.spec:3:1");
        assert!(msg.contains("unknown section"));
    }

    #[test]
    fn loads_embedding() {
        let text = "\
[meta]
name = sphere
dim = 2
signature = 2,0
ambient_signature = 3,0
[coords]
th, ph
[params]
r = 2
[embedding]
X 0 = r*sin(th)*cos(ph)
X 1 = r*sin(th)*sin(ph)
X 2 = r*cos(th)
";
        let spec = parse_spec(text, "e").unwrap();
        let e = spec.embedding().expect("embedding");
        assert_eq!(e.ambient_signature, (3, 0));
        let (loc, msg) = err_of(&text.replace("X 2 = r*cos(th)\n", ""));
        assert_eq!(loc, "f.spec:10:1");
        assert!(msg.contains("X 2"));
    }
}
