//! Versioned text container for trained models.
//!
//! Layout: a version line, mode and iteration, the three symbol lists,
//! then one section per component holding the context schema, bucket
//! weights, and top-level count rows (`C <level> <ctx...> <outcome>
//! <count>`); lower back-off levels are aggregates and are rebuilt on
//! load. Output is fully sorted, so identical models serialize to
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::component::{ComponentModel, CountTables, BUCKET_NAMES, N_BUCKETS};
use crate::error::{Result, SlmError};
use crate::model::{DerivationMode, SlmModel};
use crate::vocab::Vocabulary;

const MAGIC: &str = "SLM-MODEL v1";

pub fn save(model: &SlmModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SlmModel> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn to_string(model: &SlmModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let mode = match model.mode {
        DerivationMode::Normal => "normal",
        DerivationMode::RightBranching => "right-branching",
    };
    let _ = writeln!(out, "MODE {mode}");
    let _ = writeln!(out, "ITER {}", model.iteration);
    out.push_str(&model.vocab.dump());
    write_component(&mut out, "predictor", &model.predictor);
    write_component(&mut out, "tagger", &model.tagger);
    write_component(&mut out, "parser", &model.parser);
    match &model.trigram {
        Some(t) => {
            let _ = writeln!(out, "TRIGRAM 1");
            write_component(&mut out, "trigram", t);
        }
        None => {
            let _ = writeln!(out, "TRIGRAM 0");
        }
    }
    let _ = writeln!(out, "END");
    out
}

fn write_component(out: &mut String, name: &str, component: &ComponentModel) {
    let _ = writeln!(out, "COMPONENT {name}");
    let schema: Vec<String> = component.schema().iter().map(|a| a.to_string()).collect();
    let _ = writeln!(out, "SCHEMA {}", schema.join(" "));
    let _ = writeln!(out, "OUTCOMES {}", component.outcomes());
    for (bucket, weights) in component.weights().iter().enumerate() {
        let ws: Vec<String> = weights.iter().map(|w| format!("{w}")).collect();
        let _ = writeln!(out, "WEIGHTS {} {}", BUCKET_NAMES[bucket], ws.join(" "));
    }
    let rows = component.counts().sorted_top_events();
    let _ = writeln!(out, "COUNTS {}", rows.len());
    let arity = component.schema()[0];
    for (packed, outcome, mass) in rows {
        out.push_str("C 0");
        for i in 0..arity {
            let field = (packed >> (16 * i)) & 0xFFFF;
            let _ = write!(out, " {field}");
        }
        let _ = writeln!(out, " {outcome} {mass}");
    }
}

struct Lines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| SlmError::Format("unexpected end of model file".into()))
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<&'a str> {
        let (n, line) = self.next()?;
        line.strip_prefix(keyword)
            .map(str::trim)
            .ok_or_else(|| SlmError::Format(format!("line {n}: expected {keyword}")))
    }
}

pub fn from_str(text: &str) -> Result<SlmModel> {
    let mut lines = Lines {
        lines: text.lines().enumerate(),
    };
    let (_, magic) = lines.next()?;
    if magic != MAGIC {
        return Err(SlmError::Format(format!(
            "unsupported model header {magic:?}"
        )));
    }
    let mode = match lines.expect_keyword("MODE ")? {
        "normal" => DerivationMode::Normal,
        "right-branching" => DerivationMode::RightBranching,
        other => return Err(SlmError::Format(format!("unknown mode {other:?}"))),
    };
    let iteration: u32 = parse_num(lines.expect_keyword("ITER ")?)?;
    let words = read_symbols(&mut lines, "WORDS")?;
    let tags = read_symbols(&mut lines, "TAGS")?;
    let labels = read_symbols(&mut lines, "LABELS")?;
    let vocab = Vocabulary::new(&words, &tags, &labels)?;
    if vocab.n_words() != words.len() {
        return Err(SlmError::Format(
            "model vocabulary is missing its markers".into(),
        ));
    }
    let predictor = read_component(&mut lines, "predictor")?;
    let tagger = read_component(&mut lines, "tagger")?;
    let parser = read_component(&mut lines, "parser")?;
    let trigram = match lines.expect_keyword("TRIGRAM ")? {
        "1" => Some(read_component(&mut lines, "trigram")?),
        "0" => None,
        other => return Err(SlmError::Format(format!("bad TRIGRAM flag {other:?}"))),
    };
    lines.expect_keyword("END")?;
    Ok(SlmModel {
        vocab,
        predictor,
        tagger,
        parser,
        trigram,
        mode,
        iteration,
    })
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| SlmError::Format(format!("bad number {s:?}")))
}

fn read_symbols(lines: &mut Lines<'_>, section: &str) -> Result<Vec<String>> {
    let n: usize = parse_num(lines.expect_keyword(&format!("{section} "))?)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(lines.next()?.1.to_string());
    }
    Ok(out)
}

fn read_component(lines: &mut Lines<'_>, name: &str) -> Result<ComponentModel> {
    let got = lines.expect_keyword("COMPONENT ")?;
    if got != name {
        return Err(SlmError::Format(format!(
            "expected component {name}, found {got}"
        )));
    }
    let schema: Vec<usize> = lines
        .expect_keyword("SCHEMA ")?
        .split_whitespace()
        .map(parse_num)
        .collect::<Result<_>>()?;
    let outcomes: usize = parse_num(lines.expect_keyword("OUTCOMES ")?)?;
    let mut weights = Vec::with_capacity(N_BUCKETS);
    for name in BUCKET_NAMES {
        let rest = lines.expect_keyword("WEIGHTS ")?;
        let (bucket, ws) = rest
            .split_once(' ')
            .ok_or_else(|| SlmError::Format("bad WEIGHTS line".into()))?;
        if bucket != name {
            return Err(SlmError::Format(format!(
                "expected bucket {name}, found {bucket}"
            )));
        }
        let ws: Vec<f64> = ws
            .split_whitespace()
            .map(parse_num)
            .collect::<Result<_>>()?;
        if ws.len() != schema.len() + 1 {
            return Err(SlmError::Format("weight vector arity mismatch".into()));
        }
        let sum: f64 = ws.iter().sum();
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-6 {
            return Err(SlmError::Format(format!(
                "bucket {name} weights are not a distribution"
            )));
        }
        weights.push(ws);
    }
    let n_rows: usize = parse_num(lines.expect_keyword("COUNTS ")?)?;
    let arity = schema[0];
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let (n, line) = lines.next()?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some("C") {
            return Err(SlmError::Format(format!("line {n}: expected count row")));
        }
        let _level: usize = parse_num(fields.next().unwrap_or(""))?;
        let mut packed = 0u64;
        for i in 0..arity {
            let field: u64 = parse_num(fields.next().unwrap_or(""))?;
            packed |= field << (16 * i);
        }
        let outcome: u32 = parse_num(fields.next().unwrap_or(""))?;
        let mass: f64 = parse_num(fields.next().unwrap_or(""))?;
        if (outcome as usize) >= outcomes || !mass.is_finite() || mass < 0.0 {
            return Err(SlmError::Format(format!("line {n}: bad count row")));
        }
        rows.push((packed, outcome, mass));
    }
    let counts = CountTables::from_top_events(schema, outcomes, &rows);
    Ok(ComponentModel::new(counts, weights))
}
