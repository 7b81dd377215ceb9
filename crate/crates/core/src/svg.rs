//! SVG output in the classic potrace layout and a reader for the subset
//! this crate writes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vector::{PathElement, Point, Segment, Subpath, VectorDoc};

/// Size summary of an SVG document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComplexityStats {
    pub path_count: usize,
    pub total_d_chars: usize,
    pub longest_path_chars: usize,
}

/// Formats with six fractional digits, trailing zeros dropped.
pub fn format_number(v: f64) -> String {
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_owned();
    }
    s
}

pub fn emit_svg(doc: &VectorDoc) -> String {
    let (w, h) = (doc.width, doc.height);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" standalone=\"no\"?>\n");
    out.push_str("<!DOCTYPE svg PUBLIC \"-//W3C//DTD SVG 20010904//EN\"\n");
    out.push_str(" \"http://www.w3.org/TR/2001/REC-SVG-20010904/DTD/svg10.dtd\">\n");
    let _ = writeln!(
        out,
        "<svg version=\"1.0\" xmlns=\"http://www.w3.org/2000/svg\"\n width=\"{w:.6}pt\" height=\"{h:.6}pt\" viewBox=\"0 0 {w:.6} {h:.6}\"\n preserveAspectRatio=\"xMidYMid meet\">"
    );
    out.push_str("<metadata>\n");
    let _ = writeln!(out, "Created by tracekit {}", env!("CARGO_PKG_VERSION"));
    out.push_str("</metadata>\n");
    let _ = writeln!(
        out,
        "<g transform=\"translate(0.000000,{h:.6}) scale(1.000000,-1.000000)\"\nfill=\"#000000\" stroke=\"none\">"
    );
    for path in &doc.paths {
        out.push_str("<path d=\"");
        out.push_str(&path_data(path, h));
        out.push_str("\"/>\n");
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// The `d` attribute for one path element, y flipped into the group's
/// upward-pointing frame.
fn path_data(path: &PathElement, height: f64) -> String {
    let mut d = String::new();
    let pt = |d: &mut String, p: Point| {
        d.push_str(&format_number(p.x));
        d.push(' ');
        d.push_str(&format_number(height - p.y));
    };
    for (i, sp) in path.subpaths.iter().enumerate() {
        if i > 0 {
            d.push(' ');
        }
        d.push_str("M ");
        pt(&mut d, sp.start);
        for seg in &sp.segments {
            match *seg {
                Segment::Line(p) => {
                    d.push_str(" L ");
                    pt(&mut d, p);
                }
                Segment::Cubic(a, b, c) => {
                    d.push_str(" C ");
                    pt(&mut d, a);
                    d.push(' ');
                    pt(&mut d, b);
                    d.push(' ');
                    pt(&mut d, c);
                }
            }
        }
        d.push_str(" z");
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Affine([f64; 6]);

impl Affine {
    const IDENTITY: Affine = Affine([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

    fn then(self, inner: Affine) -> Affine {
        let [a, b, c, d, e, f] = self.0;
        let [a2, b2, c2, d2, e2, f2] = inner.0;
        Affine([
            a * a2 + c * b2,
            b * a2 + d * b2,
            a * c2 + c * d2,
            b * c2 + d * d2,
            a * e2 + c * f2 + e,
            b * e2 + d * f2 + f,
        ])
    }

    fn apply(self, p: Point) -> Point {
        let [a, b, c, d, e, f] = self.0;
        Point::new(a * p.x + c * p.y + e, b * p.x + d * p.y + f)
    }
}

fn parse_transform(s: &str) -> Result<Affine> {
    let mut t = Affine::IDENTITY;
    let mut rest = s.trim();
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| Error::MalformedSvg(format!("bad transform '{s}'")))?;
        let close = rest
            .find(')')
            .ok_or_else(|| Error::MalformedSvg(format!("bad transform '{s}'")))?;
        let name = rest[..open].trim();
        let args = tokenize_numbers(&rest[open + 1..close])?;
        let m = match (name, args.as_slice()) {
            ("translate", [x]) => Affine([1.0, 0.0, 0.0, 1.0, *x, 0.0]),
            ("translate", [x, y]) => Affine([1.0, 0.0, 0.0, 1.0, *x, *y]),
            ("scale", [k]) => Affine([*k, 0.0, 0.0, *k, 0.0, 0.0]),
            ("scale", [x, y]) => Affine([*x, 0.0, 0.0, *y, 0.0, 0.0]),
            ("matrix", [a, b, c, d, e, f]) => Affine([*a, *b, *c, *d, *e, *f]),
            _ => return Err(Error::MalformedSvg(format!("unsupported transform '{name}'"))),
        };
        t = t.then(m);
        rest = rest[close + 1..].trim_start_matches([' ', ',', '\t', '\n', '\r']);
    }
    Ok(t)
}

fn tokenize_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::MalformedNumber(t.to_owned())))
        .collect()
}

fn parse_length(s: &str) -> Result<f64> {
    let t = s.trim().trim_end_matches("pt").trim_end_matches("px");
    t.parse().map_err(|_| Error::MalformedNumber(s.to_owned()))
}

/// Reads every `<path>` of an SVG back into a document, applying group
/// and path transforms.
pub fn parse_paths(svg: &str) -> Result<VectorDoc> {
    let tags = scan_tags(svg)?;
    let mut doc = VectorDoc::new(0.0, 0.0);
    let mut stack: Vec<Affine> = vec![Affine::IDENTITY];
    let current = |stack: &[Affine]| *stack.last().expect("transform stack");
    for tag in &tags {
        match (tag.name.as_str(), tag.kind) {
            ("svg", TagKind::Open | TagKind::Empty) => {
                if let Some(w) = tag.attr("width") {
                    doc.width = parse_length(w)?;
                }
                if let Some(h) = tag.attr("height") {
                    doc.height = parse_length(h)?;
                }
            }
            ("g", TagKind::Open) => {
                let t = match tag.attr("transform") {
                    Some(s) => current(&stack).then(parse_transform(s)?),
                    None => current(&stack),
                };
                stack.push(t);
            }
            ("g", TagKind::Close) => {
                stack.pop();
            }
            ("path", TagKind::Open | TagKind::Empty) => {
                let t = match tag.attr("transform") {
                    Some(s) => current(&stack).then(parse_transform(s)?),
                    None => current(&stack),
                };
                let d = tag.attr("d").unwrap_or("");
                doc.paths.push(parse_d(d, t)?);
            }
            _ => {}
        }
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Cmd(char),
    Num(f64),
}

fn tokenize_d(d: &str) -> Result<Vec<Token>> {
    let bytes = d.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() || c == ',' {
            i += 1;
        } else if c.is_ascii_alphabetic() && c != 'e' && c != 'E' {
            out.push(Token::Cmd(c));
            i += 1;
        } else if c.is_ascii_digit() || matches!(c, '+' | '-' | '.') {
            let start = i;
            i += 1;
            let mut seen_dot = c == '.';
            while i < bytes.len() {
                let ch = bytes[i] as char;
                if ch.is_ascii_digit() {
                    i += 1;
                } else if ch == '.' && !seen_dot {
                    seen_dot = true;
                    i += 1;
                } else if ch == 'e' || ch == 'E' {
                    i += 1;
                    if i < bytes.len() && matches!(bytes[i], b'+' | b'-') {
                        i += 1;
                    }
                    seen_dot = true;
                } else {
                    break;
                }
            }
            let text = &d[start..i];
            let v: f64 = text.parse().map_err(|_| Error::MalformedNumber(text.to_owned()))?;
            if !v.is_finite() {
                return Err(Error::MalformedNumber(text.to_owned()));
            }
            out.push(Token::Num(v));
        } else {
            return Err(Error::UnsupportedCommand(c));
        }
    }
    Ok(out)
}

fn parse_d(d: &str, t: Affine) -> Result<PathElement> {
    let tokens = tokenize_d(d)?;
    let mut path = PathElement::default();
    let mut cur: Option<Subpath> = None;
    // Untransformed pen position and subpath start, for relative commands.
    let mut pen = Point::default();
    let mut origin = Point::default();
    let mut i = 0;
    let mut cmd: Option<char> = None;

    let take = |i: &mut usize, n: usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            match tokens.get(*i) {
                Some(Token::Num(x)) => v.push(*x),
                Some(Token::Cmd(c)) => {
                    return Err(Error::MalformedSvg(format!("expected number, found '{c}'")))
                }
                None => return Err(Error::MalformedSvg("path data ends mid-command".into())),
            }
            *i += 1;
        }
        Ok(v)
    };

    while i < tokens.len() {
        let c = match tokens[i] {
            Token::Cmd(c) => {
                i += 1;
                c
            }
            Token::Num(_) => match cmd {
                Some('M') => 'L',
                Some('m') => 'l',
                Some(c) if !matches!(c, 'z' | 'Z') => c,
                _ => return Err(Error::MalformedSvg("number without command".into())),
            },
        };
        let rel = c.is_ascii_lowercase();
        let base = if rel { pen } else { Point::default() };
        match c.to_ascii_uppercase() {
            'M' => {
                let v = take(&mut i, 2)?;
                if let Some(sp) = cur.take() {
                    path.subpaths.push(sp);
                }
                pen = Point::new(base.x + v[0], base.y + v[1]);
                origin = pen;
                cur = Some(Subpath::new(t.apply(pen), Vec::new()));
            }
            'L' | 'H' | 'V' => {
                let p = match c.to_ascii_uppercase() {
                    'L' => {
                        let v = take(&mut i, 2)?;
                        Point::new(base.x + v[0], base.y + v[1])
                    }
                    'H' => Point::new(base.x + take(&mut i, 1)?[0], pen.y),
                    _ => Point::new(pen.x, base.y + take(&mut i, 1)?[0]),
                };
                pen = p;
                open_subpath(&mut cur, t, origin)?.segments.push(Segment::Line(t.apply(p)));
            }
            'C' => {
                let v = take(&mut i, 6)?;
                let a = Point::new(base.x + v[0], base.y + v[1]);
                let b = Point::new(base.x + v[2], base.y + v[3]);
                let e = Point::new(base.x + v[4], base.y + v[5]);
                pen = e;
                open_subpath(&mut cur, t, origin)?
                    .segments
                    .push(Segment::Cubic(t.apply(a), t.apply(b), t.apply(e)));
            }
            'Z' => {
                if let Some(sp) = cur.take() {
                    path.subpaths.push(sp);
                }
                pen = origin;
            }
            _ => return Err(Error::UnsupportedCommand(c)),
        }
        cmd = Some(c);
    }
    if let Some(sp) = cur.take() {
        path.subpaths.push(sp);
    }
    Ok(path)
}

/// Drawing after `z` continues from the closed subpath's start.
fn open_subpath(cur: &mut Option<Subpath>, t: Affine, origin: Point) -> Result<&mut Subpath> {
    Ok(cur.get_or_insert_with(|| Subpath::new(t.apply(origin), Vec::new())))
}

pub fn complexity_stats(svg: &str) -> Result<ComplexityStats> {
    let mut stats = ComplexityStats::default();
    for tag in scan_tags(svg)? {
        if tag.name == "path" && tag.kind != TagKind::Close {
            stats.path_count += 1;
            let len = tag.attr("d").map_or(0, str::len);
            stats.total_d_chars += len;
            stats.longest_path_chars = stats.longest_path_chars.max(len);
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagKind {
    Open,
    Close,
    Empty,
}

#[derive(Debug)]
struct Tag {
    name: String,
    kind: TagKind,
    attrs: Vec<(String, String)>,
}

impl Tag {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Minimal XML tag scanner: elements, attributes, comments, declarations.
/// Checks that tags are terminated and properly nested.
fn scan_tags(text: &str) -> Result<Vec<Tag>> {
    let mut tags = Vec::new();
    let mut open: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(lt) = rest.find('<') {
        rest = &rest[lt..];
        if let Some(body) = rest.strip_prefix("<!--") {
            let end = body
                .find("-->")
                .ok_or_else(|| Error::MalformedSvg("unterminated comment".into()))?;
            rest = &body[end + 3..];
            continue;
        }
        if rest.starts_with("<?") || rest.starts_with("<!") {
            let end = rest
                .find('>')
                .ok_or_else(|| Error::MalformedSvg("unterminated declaration".into()))?;
            rest = &rest[end + 1..];
            continue;
        }
        let (tag, consumed) = scan_one(rest)?;
        rest = &rest[consumed..];
        match tag.kind {
            TagKind::Open => open.push(tag.name.clone()),
            TagKind::Close => match open.pop() {
                Some(name) if name == tag.name => {}
                Some(name) => {
                    return Err(Error::MalformedSvg(format!(
                        "</{}> closes <{name}>",
                        tag.name
                    )))
                }
                None => return Err(Error::MalformedSvg(format!("stray </{}>", tag.name))),
            },
            TagKind::Empty => {}
        }
        tags.push(tag);
    }
    if let Some(name) = open.pop() {
        return Err(Error::MalformedSvg(format!("<{name}> is never closed")));
    }
    Ok(tags)
}

fn scan_one(s: &str) -> Result<(Tag, usize)> {
    let b = s.as_bytes();
    let unterminated = || Error::MalformedSvg("unterminated tag".into());
    let mut i = 1;
    let closing = b.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < b.len() && !b[i].is_ascii_whitespace() && b[i] != b'>' && b[i] != b'/' {
        i += 1;
    }
    let name = s[name_start..i].to_owned();
    if name.is_empty() {
        return Err(Error::MalformedSvg("empty tag name".into()));
    }
    let mut attrs = Vec::new();
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        match b.get(i) {
            None => return Err(unterminated()),
            Some(b'>') => {
                let kind = if closing { TagKind::Close } else { TagKind::Open };
                return Ok((Tag { name, kind, attrs }, i + 1));
            }
            Some(b'/') => {
                if b.get(i + 1) != Some(&b'>') || closing {
                    return Err(Error::MalformedSvg(format!("bad tag <{name}")));
                }
                return Ok((
                    Tag {
                        name,
                        kind: TagKind::Empty,
                        attrs,
                    },
                    i + 2,
                ));
            }
            Some(_) => {
                let key_start = i;
                while i < b.len() && b[i] != b'=' && !b[i].is_ascii_whitespace() && b[i] != b'>' {
                    i += 1;
                }
                let key = s[key_start..i].to_owned();
                while i < b.len() && b[i].is_ascii_whitespace() {
                    i += 1;
                }
                if b.get(i) != Some(&b'=') {
                    return Err(Error::MalformedSvg(format!("attribute '{key}' has no value")));
                }
                i += 1;
                while i < b.len() && b[i].is_ascii_whitespace() {
                    i += 1;
                }
                let quote = *b.get(i).ok_or_else(unterminated)?;
                if quote != b'"' && quote != b'\'' {
                    return Err(Error::MalformedSvg(format!("attribute '{key}' is unquoted")));
                }
                let vstart = i + 1;
                let vlen = s[vstart..]
                    .find(quote as char)
                    .ok_or_else(|| Error::MalformedSvg(format!("attribute '{key}' is unterminated")))?;
                attrs.push((key, s[vstart..vstart + vlen].to_owned()));
                i = vstart + vlen + 1;
            }
        }
    }
}
