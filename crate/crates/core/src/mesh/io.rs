//! Plain-text mesh format:
//!
//! ```text
//! NODES <n>
//! <id> <x> <y> <z>
//! HEX8 <m>
//! <id> <n1> ... <n8>
//! PATCH <name> <count>
//! <a> <b> <c> <d>
//! ```
//!
//! Ids must be consecutive from 0. Blank lines and lines starting with `#` are ignored.

use super::{BoundaryPatch, FluidMesh};
use crate::error::{FbiError, Result};
use crate::Vec3;
use std::io::{BufRead, Write};

pub fn write_mesh(mesh: &FluidMesh, mut w: impl Write) -> Result<()> {
    writeln!(w, "NODES {}", mesh.num_nodes())?;
    for (i, p) in mesh.nodes().iter().enumerate() {
        writeln!(w, "{i} {} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(w, "HEX8 {}", mesh.num_elements())?;
    for (e, conn) in mesh.elements().iter().enumerate() {
        let ids: Vec<String> = conn.iter().map(|n| n.to_string()).collect();
        writeln!(w, "{e} {}", ids.join(" "))?;
    }
    for p in mesh.patches() {
        writeln!(w, "PATCH {} {}", p.name, p.faces.len())?;
        for f in &p.faces {
            writeln!(w, "{} {} {} {}", f[0], f[1], f[2], f[3])?;
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_tokens(&mut self) -> Result<Option<(usize, Vec<String>)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some((self.number, t.split_whitespace().map(str::to_string).collect())));
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<String>)> {
        self.next_tokens()?.ok_or_else(|| FbiError::MeshFile {
            line: self.number,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| FbiError::MeshFile {
        line,
        message: format!("cannot parse '{tok}'"),
    })
}

fn header(line: usize, toks: &[String], keyword: &str, n_args: usize) -> Result<()> {
    if toks.first().map(String::as_str) != Some(keyword) || toks.len() != n_args + 1 {
        return Err(FbiError::MeshFile {
            line,
            message: format!("expected '{keyword}' header with {n_args} argument(s)"),
        });
    }
    Ok(())
}

fn record(line: usize, toks: &[String], expected_id: usize, width: usize) -> Result<()> {
    if toks.len() != width + 1 {
        return Err(FbiError::MeshFile {
            line,
            message: format!("expected id plus {width} values"),
        });
    }
    let id: usize = parse(line, &toks[0])?;
    if id != expected_id {
        return Err(FbiError::MeshFile {
            line,
            message: format!("expected id {expected_id}, found {id}"),
        });
    }
    Ok(())
}

pub fn read_mesh(r: impl BufRead) -> Result<FluidMesh> {
    let mut lines = Lines {
        inner: r.lines(),
        number: 0,
    };
    let (ln, toks) = lines.expect("NODES header")?;
    header(ln, &toks, "NODES", 1)?;
    let n: usize = parse(ln, &toks[1])?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, toks) = lines.expect("node record")?;
        record(ln, &toks, i, 3)?;
        nodes.push(Vec3::new(
            parse(ln, &toks[1])?,
            parse(ln, &toks[2])?,
            parse(ln, &toks[3])?,
        ));
    }

    let (ln, toks) = lines.expect("HEX8 header")?;
    header(ln, &toks, "HEX8", 1)?;
    let m: usize = parse(ln, &toks[1])?;
    let mut elements = Vec::with_capacity(m);
    for e in 0..m {
        let (ln, toks) = lines.expect("element record")?;
        record(ln, &toks, e, 8)?;
        let mut conn = [0usize; 8];
        for (a, c) in conn.iter_mut().enumerate() {
            *c = parse(ln, &toks[a + 1])?;
        }
        elements.push(conn);
    }

    let mut patches = Vec::new();
    while let Some((ln, toks)) = lines.next_tokens()? {
        header(ln, &toks, "PATCH", 2)?;
        let count: usize = parse(ln, &toks[2])?;
        let mut faces = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, toks) = lines.expect("patch face")?;
            if toks.len() != 4 {
                return Err(FbiError::MeshFile {
                    line: ln,
                    message: "expected 4 node ids".into(),
                });
            }
            let mut f = [0usize; 4];
            for (a, c) in f.iter_mut().enumerate() {
                *c = parse(ln, &toks[a])?;
            }
            faces.push(f);
        }
        patches.push(BoundaryPatch {
            name: toks[1].clone(),
            faces,
        });
    }
    FluidMesh::new(nodes, elements, patches)
}
