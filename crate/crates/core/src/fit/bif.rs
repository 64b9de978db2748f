use std::collections::HashMap;

use super::{Cpt, FitMethod, FittedBn};
use crate::error::{Error, Result};
use crate::graph::Dag;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Sym(char),
}

fn tokenize(text: &str) -> Vec<(Tok, usize)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split("//").next().unwrap_or("");
        let mut word = String::new();
        for ch in line.chars() {
            if ch.is_whitespace() || "{}()[];,|".contains(ch) {
                if !word.is_empty() {
                    out.push((Tok::Word(std::mem::take(&mut word)), lineno + 1));
                }
                if !ch.is_whitespace() {
                    out.push((Tok::Sym(ch), lineno + 1));
                }
            } else {
                word.push(ch);
            }
        }
        if !word.is_empty() {
            out.push((Tok::Word(word), lineno + 1));
        }
    }
    out
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn err(&self, message: impl Into<String>) -> Error {
        let row = self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.1);
        Error::Parse {
            row,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone()).ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn word(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Word(w) => Ok(w),
            Tok::Sym(c) => Err(self.err(format!("expected a name, found `{c}`"))),
        }
    }

    fn sym(&mut self, c: char) -> Result<()> {
        match self.next()? {
            Tok::Sym(x) if x == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_block(&mut self) -> Result<()> {
        self.sym('{')?;
        let mut depth = 1;
        while depth > 0 {
            match self.next()? {
                Tok::Sym('{') => depth += 1,
                Tok::Sym('}') => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64> {
        let w = self.word()?;
        w.parse::<f64>().map_err(|_| self.err(format!("`{w}` is not a number")))
    }

    /// Comma-separated numbers up to (and consuming) `;`.
    fn numbers(&mut self) -> Result<Vec<f64>> {
        let mut v = vec![self.number()?];
        while self.eat(',') {
            v.push(self.number()?);
        }
        self.sym(';')?;
        Ok(v)
    }
}

/// Reads a discrete network in BIF format. Nodes keep file order and levels
/// keep their declared order.
pub fn parse_bif(text: &str) -> Result<FittedBn> {
    let mut p = Parser {
        toks: tokenize(text),
        pos: 0,
    };
    let mut names: Vec<String> = Vec::new();
    let mut levels: Vec<Vec<String>> = Vec::new();
    // node → (parents, rows keyed by parent levels, optional flat table)
    let mut probs: HashMap<String, (Vec<String>, Vec<(Vec<String>, Vec<f64>)>, Option<Vec<f64>>)> = HashMap::new();
    while p.peek().is_some() {
        let kw = p.word()?;
        match kw.as_str() {
            "network" => {
                p.word()?;
                p.skip_block()?;
            }
            "variable" => {
                let name = p.word()?;
                p.sym('{')?;
                let mut lv = None;
                while !p.eat('}') {
                    let w = p.word()?;
                    if w == "type" {
                        p.word()?; // discrete
                        p.sym('[')?;
                        p.number()?;
                        p.sym(']')?;
                        p.sym('{')?;
                        let mut l = vec![p.word()?];
                        while p.eat(',') {
                            l.push(p.word()?);
                        }
                        p.sym('}')?;
                        p.sym(';')?;
                        lv = Some(l);
                    } else {
                        while !p.eat(';') {
                            p.next()?;
                        }
                    }
                }
                names.push(name);
                levels.push(lv.ok_or_else(|| p.err("variable without levels"))?);
            }
            "probability" => {
                p.sym('(')?;
                let node = p.word()?;
                let mut parents = Vec::new();
                if p.eat('|') {
                    parents.push(p.word()?);
                    while p.eat(',') {
                        parents.push(p.word()?);
                    }
                }
                p.sym(')')?;
                p.sym('{')?;
                let mut rows = Vec::new();
                let mut table = None;
                while !p.eat('}') {
                    if p.eat('(') {
                        let mut key = vec![p.word()?];
                        while p.eat(',') {
                            key.push(p.word()?);
                        }
                        p.sym(')')?;
                        rows.push((key, p.numbers()?));
                    } else {
                        let w = p.word()?;
                        if w == "table" {
                            table = Some(p.numbers()?);
                        } else {
                            while !p.eat(';') {
                                p.next()?;
                            }
                        }
                    }
                }
                probs.insert(node, (parents, rows, table));
            }
            other => return Err(p.err(format!("unexpected `{other}`"))),
        }
    }
    let mut arcs = Vec::new();
    for name in &names {
        let (parents, _, _) = probs
            .get(name)
            .ok_or_else(|| Error::invalid(format!("no probability block for `{name}`")))?;
        for par in parents {
            arcs.push((par.clone(), name.clone()));
        }
    }
    let dag = Dag::from_arcs(names.clone(), &arcs)?;
    let mut cpts = Vec::with_capacity(names.len());
    for (v, name) in names.iter().enumerate() {
        let (file_parents, rows, table) = &probs[name];
        let parents: Vec<usize> = dag.parents(v).to_vec();
        let q: usize = parents.iter().map(|&u| levels[u].len()).product();
        let mut out = vec![Vec::new(); q];
        if file_parents.is_empty() {
            let t = table
                .clone()
                .or_else(|| rows.first().map(|r| r.1.clone()))
                .ok_or_else(|| Error::invalid(format!("`{name}` has no table")))?;
            out[0] = t;
        } else {
            if table.is_some() {
                return Err(Error::invalid(format!("flat tables with parents are not supported (`{name}`)")));
            }
            for (key, probs) in rows {
                if key.len() != file_parents.len() {
                    return Err(Error::invalid(format!("wrong key length in the table of `{name}`")));
                }
                let mut j = 0;
                let mut stride = 1;
                for &u in &parents {
                    let pos = file_parents.iter().position(|fp| *fp == names[u]).expect("same parent set");
                    let li = levels[u].iter().position(|l| *l == key[pos]).ok_or_else(|| Error::UnknownLevel {
                        node: names[u].clone(),
                        level: key[pos].clone(),
                    })?;
                    j += li * stride;
                    stride *= levels[u].len();
                }
                out[j] = probs.clone();
            }
            if out.iter().any(Vec::is_empty) {
                return Err(Error::invalid(format!("the table of `{name}` misses parent configurations")));
            }
        }
        cpts.push(Cpt {
            node: name.clone(),
            parents: parents.iter().map(|&u| names[u].clone()).collect(),
            table: out,
        });
    }
    FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0)
}
