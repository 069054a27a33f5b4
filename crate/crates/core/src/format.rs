//! Plain-text persistence of games, policies and abstractions.
//!
//! All three formats are line oriented and whitespace separated. Floats are
//! written in Rust's shortest round-trip notation, so `read(write(x))`
//! reproduces every table bit for bit.
//!
//! `tzmg v1`:
//!
//! ```text
//! tzmg v1 <S> <A1> <A2> <gamma> <r_min> <r_max>
//! label <s> <text>                       (optional, one per state)
//! <s> <a1> <a2> <reward> <term_prob> <k> <s'_1> <p_1> ... <s'_k> <p_k>
//! ```
//!
//! Transition lines come in lexicographic `(s, a1, a2)` order.
//!
//! `qpolicy v1`:
//!
//! ```text
//! qpolicy v1 <S> <A1> <A2> <iter>
//! pi1 <s> <p_1> ... <p_A1>
//! pi2 <s> <p_1> ... <p_A2>
//! v <s> <value>                          (optional)
//! q <s> <q_11> <q_12> ... <q_A1A2>       (optional, row-major)
//! ```
//!
//! `phi v1`:
//!
//! ```text
//! phi v1 criterion=<c> epsilon=<e> k=<k> states=<S> blocks=<m> degenerate=<s,s,...|->
//! <s> <phi(s)> <w(s)>
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use crate::abstraction::{Abstraction, Criterion};
use crate::error::{Error, Result};
use crate::game::{ExplicitGame, PolicyProfile, PolicyTable, QTable, Transition, VTable};

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

struct Tokens<'a> {
    line: usize,
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Tokens { line, iter: text.split_whitespace() }
    }

    fn next_str(&mut self) -> Result<&'a str> {
        self.iter.next().ok_or_else(|| parse_err(self.line, "unexpected end of line"))
    }

    fn next<T: FromStr>(&mut self) -> Result<T> {
        let tok = self.next_str()?;
        tok.parse().map_err(|_| parse_err(self.line, format!("cannot parse {tok:?}")))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let tok = self.next_str()?;
        if tok == word {
            Ok(())
        } else {
            Err(parse_err(self.line, format!("expected {word:?}, found {tok:?}")))
        }
    }

    fn finish(mut self) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some(tok) => Err(parse_err(self.line, format!("trailing token {tok:?}"))),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

pub fn write_game(game: &ExplicitGame) -> String {
    let mut out = String::new();
    let (r_min, r_max) = game.reward_range();
    writeln!(
        out,
        "tzmg v1 {} {} {} {} {} {}",
        game.num_states(),
        game.actions_p1(),
        game.actions_p2(),
        num(game.gamma()),
        num(r_min),
        num(r_max)
    )
    .unwrap();
    if let Some(labels) = game.labels() {
        for (s, label) in labels.iter().enumerate() {
            writeln!(out, "label {s} {label}").unwrap();
        }
    }
    for s in 0..game.num_states() {
        for a1 in 0..game.actions_p1() {
            for a2 in 0..game.actions_p2() {
                let t = game.transition(s, a1, a2);
                write!(out, "{s} {a1} {a2} {} {} {}", num(t.reward), num(t.terminal), t.successors.len()).unwrap();
                for &(next, p) in &t.successors {
                    write!(out, " {next} {}", num(p)).unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn read_game(text: &str) -> Result<ExplicitGame> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut h = Tokens::new(ln, header);
    h.expect("tzmg")?;
    h.expect("v1")?;
    let n: usize = h.next()?;
    let n1: usize = h.next()?;
    let n2: usize = h.next()?;
    let gamma: f64 = h.next()?;
    let r_min: f64 = h.next()?;
    let r_max: f64 = h.next()?;
    h.finish()?;

    let mut labels: Vec<Option<String>> = Vec::new();
    let mut rows = Vec::with_capacity(n * n1 * n2);
    for (ln, line) in lines {
        if let Some(rest) = line.strip_prefix("label ") {
            let rest = rest.trim_start();
            let (idx, label) = rest
                .split_once(char::is_whitespace)
                .ok_or_else(|| parse_err(ln, "label line needs a state and a text"))?;
            let s: usize = idx.parse().map_err(|_| parse_err(ln, "bad label state"))?;
            if s >= n {
                return Err(parse_err(ln, format!("label for state {s} outside 0..{n}")));
            }
            labels.resize(n, None);
            labels[s] = Some(label.trim().to_string());
            continue;
        }
        let mut t = Tokens::new(ln, line);
        let idx = rows.len();
        let expected = (idx / (n1 * n2), (idx / n2) % n1, idx % n2);
        let got: (usize, usize, usize) = (t.next()?, t.next()?, t.next()?);
        if got != expected {
            return Err(parse_err(ln, format!("expected row {expected:?}, found {got:?}")));
        }
        let reward: f64 = t.next()?;
        let terminal: f64 = t.next()?;
        let k: usize = t.next()?;
        let mut successors = Vec::with_capacity(k);
        for _ in 0..k {
            let s2: usize = t.next()?;
            let p: f64 = t.next()?;
            successors.push((s2, p));
        }
        t.finish()?;
        rows.push(Transition { reward, terminal, successors });
    }
    let mut game = ExplicitGame::new(n, n1, n2, gamma, (r_min, r_max), rows)?;
    if !labels.is_empty() {
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(s, l)| l.ok_or_else(|| parse_err(0, format!("state {s} has no label"))))
            .collect::<Result<Vec<_>>>()?;
        game = game.with_labels(labels)?;
    }
    Ok(game)
}

/// Contents of a `qpolicy v1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub iter: u64,
    pub profile: PolicyProfile,
    pub v: Option<VTable>,
    pub q: Option<QTable>,
}

pub fn write_policy(file: &PolicyFile) -> String {
    let profile = &file.profile;
    let (n, n1, n2) = (profile.num_states(), profile.pi1.actions(), profile.pi2.actions());
    let mut out = String::new();
    writeln!(out, "qpolicy v1 {n} {n1} {n2} {}", file.iter).unwrap();
    let row = |out: &mut String, tag: &str, s: usize, xs: &[f64]| {
        write!(out, "{tag} {s}").unwrap();
        for &x in xs {
            write!(out, " {}", num(x)).unwrap();
        }
        out.push('\n');
    };
    for s in 0..n {
        row(&mut out, "pi1", s, profile.pi1.row(s));
        row(&mut out, "pi2", s, profile.pi2.row(s));
        if let Some(v) = &file.v {
            row(&mut out, "v", s, &[v[s]]);
        }
        if let Some(q) = &file.q {
            row(&mut out, "q", s, q.state(s));
        }
    }
    out
}

pub fn read_policy(text: &str) -> Result<PolicyFile> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut h = Tokens::new(ln, header);
    h.expect("qpolicy")?;
    h.expect("v1")?;
    let n: usize = h.next()?;
    let n1: usize = h.next()?;
    let n2: usize = h.next()?;
    let iter: u64 = h.next()?;
    h.finish()?;

    let mut pi1 = vec![Vec::new(); n];
    let mut pi2 = vec![Vec::new(); n];
    let mut v: Vec<Option<f64>> = vec![None; n];
    let mut q: Vec<Option<Vec<f64>>> = vec![None; n];
    for (ln, line) in lines {
        let mut t = Tokens::new(ln, line);
        let tag = t.next_str()?;
        let s: usize = t.next()?;
        if s >= n {
            return Err(parse_err(ln, format!("state {s} outside 0..{n}")));
        }
        let width = match tag {
            "pi1" => n1,
            "pi2" => n2,
            "v" => 1,
            "q" => n1 * n2,
            other => return Err(parse_err(ln, format!("unknown record {other:?}"))),
        };
        let xs = (0..width).map(|_| t.next::<f64>()).collect::<Result<Vec<_>>>()?;
        t.finish()?;
        match tag {
            "pi1" => pi1[s] = xs,
            "pi2" => pi2[s] = xs,
            "v" => v[s] = Some(xs[0]),
            _ => q[s] = Some(xs),
        }
    }
    let profile = PolicyProfile { pi1: PolicyTable::from_rows(n1, &pi1)?, pi2: PolicyTable::from_rows(n2, &pi2)? };
    let v = collect_optional(v, "v")?.map(VTable::from_vec);
    let q = collect_optional(q, "q")?.map(|rows| QTable::from_vec(n, n1, n2, rows.concat()));
    Ok(PolicyFile { iter, profile, v, q })
}

fn collect_optional<T>(items: Vec<Option<T>>, tag: &str) -> Result<Option<Vec<T>>> {
    let present = items.iter().filter(|x| x.is_some()).count();
    if present == 0 {
        return Ok(None);
    }
    if present != items.len() {
        return Err(parse_err(0, format!("{tag} records cover only {present} of {} states", items.len())));
    }
    Ok(Some(items.into_iter().map(Option::unwrap).collect()))
}

pub fn write_abstraction(abs: &Abstraction) -> String {
    let degenerate = if abs.degenerate.is_empty() {
        "-".to_string()
    } else {
        abs.degenerate.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    };
    let mut out = String::new();
    writeln!(
        out,
        "phi v1 criterion={} epsilon={} k={} states={} blocks={} degenerate={degenerate}",
        abs.criterion,
        num(abs.epsilon),
        num(abs.k),
        abs.num_ground(),
        abs.num_abstract()
    )
    .unwrap();
    for s in 0..abs.num_ground() {
        writeln!(out, "{s} {} {}", abs.block_of(s), num(abs.weights()[s])).unwrap();
    }
    out
}

pub fn read_abstraction(text: &str) -> Result<Abstraction> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut h = Tokens::new(ln, header);
    h.expect("phi")?;
    h.expect("v1")?;
    let mut field = |key: &str| -> Result<&str> {
        let tok = h.next_str()?;
        tok.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| parse_err(ln, format!("expected {key}=..., found {tok:?}")))
    };
    let bad = |what: &str| parse_err(ln, format!("bad {what}"));
    let criterion: Criterion = field("criterion")?.parse()?;
    let epsilon: f64 = field("epsilon")?.parse().map_err(|_| bad("epsilon"))?;
    let k: f64 = field("k")?.parse().map_err(|_| bad("k"))?;
    let n: usize = field("states")?.parse().map_err(|_| bad("states"))?;
    let blocks: usize = field("blocks")?.parse().map_err(|_| bad("blocks"))?;
    let degenerate = match field("degenerate")? {
        "-" => Vec::new(),
        list => list
            .split(',')
            .map(|x| x.parse::<usize>().map_err(|_| bad("degenerate list")))
            .collect::<Result<Vec<_>>>()?,
    };
    h.finish()?;

    let mut phi = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (ln, line) in lines {
        let mut t = Tokens::new(ln, line);
        let s: usize = t.next()?;
        if s != phi.len() {
            return Err(parse_err(ln, format!("expected state {}, found {s}", phi.len())));
        }
        phi.push(t.next::<usize>()?);
        weights.push(t.next::<f64>()?);
        t.finish()?;
    }
    if phi.len() != n {
        return Err(parse_err(0, format!("{} states listed, header says {n}", phi.len())));
    }
    let mut abs = Abstraction::from_partition(phi, criterion, epsilon, k)?.with_weights(weights)?;
    if abs.num_abstract() != blocks {
        return Err(parse_err(0, format!("{} blocks found, header says {blocks}", abs.num_abstract())));
    }
    abs.degenerate = degenerate;
    Ok(abs)
}
