//! Mesh and state file formats.
//!
//! Native mesh format (line-oriented text, `#` comments allowed):
//!
//! ```text
//! anisofrac-mesh 1
//! nodes <N>
//! <x> <y>              (N lines)
//! triangles <M>
//! <a> <b> <c>          (M lines, zero-based CCW)
//! nodeset <name> <K>
//! <i0> <i1> ...        (K indices, any line breaks)
//! edgeset <name> <K>
//! <a> <b>              (K lines)
//! slit <P> <tip> <mouth_x> <mouth_y>
//! <upper> <lower>      (P pairs)
//! end
//! ```
//!
//! A state file wraps a mesh block plus nodal fields and step metadata.
//! An importer for Gmsh MSH 2.2 ASCII covers externally generated meshes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::mesh::{Field, Mesh, SimState, Slit};
use crate::{Error, Result};

struct LineReader<'a> {
    path: &'a str,
    tokens: Vec<(usize, String)>,
    pos: usize,
}

impl<'a> LineReader<'a> {
    fn new(path: &'a str, text: &str) -> Self {
        let mut tokens = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                tokens.push((lineno + 1, tok.to_string()));
            }
        }
        LineReader {
            path,
            tokens,
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let line = self
            .tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|(l, _)| *l)
            .unwrap_or(0);
        Error::Parse {
            path: self.path.to_string(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<&str> {
        if self.pos >= self.tokens.len() {
            return Err(self.error("unexpected end of file"));
        }
        self.pos += 1;
        Ok(&self.tokens[self.pos - 1].1)
    }

    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|(_, t)| t.as_str())
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.next()?.to_string();
        tok.parse()
            .map_err(|_| self.error(format!("cannot parse {what} from '{tok}'")))
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        let tok = self.next()?;
        if tok != keyword {
            let msg = format!("expected '{keyword}', found '{tok}'");
            return Err(self.error(msg));
        }
        Ok(())
    }
}

/// Loads a mesh, auto-detecting the native format or Gmsh MSH 2.2.
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mesh = if text.trim_start().starts_with("$MeshFormat") {
        parse_gmsh(&path.display().to_string(), &text)?
    } else {
        parse_mesh_text(&path.display().to_string(), &text)?
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn parse_mesh_text(path: &str, text: &str) -> Result<Mesh> {
    let mut r = LineReader::new(path, text);
    r.expect("anisofrac-mesh")?;
    let version: u32 = r.parse("format version")?;
    if version != 1 {
        return Err(r.error(format!("unsupported mesh format version {version}")));
    }
    let mut mesh = Mesh::default();
    loop {
        let keyword = r.next()?.to_string();
        match keyword.as_str() {
            "nodes" => {
                let n: usize = r.parse("node count")?;
                mesh.nodes.reserve(n);
                for _ in 0..n {
                    let x: f64 = r.parse("node x")?;
                    let y: f64 = r.parse("node y")?;
                    mesh.nodes.push([x, y]);
                }
            }
            "triangles" => {
                let m: usize = r.parse("triangle count")?;
                mesh.triangles.reserve(m);
                for _ in 0..m {
                    let a: usize = r.parse("triangle node")?;
                    let b: usize = r.parse("triangle node")?;
                    let c: usize = r.parse("triangle node")?;
                    mesh.triangles.push([a, b, c]);
                }
            }
            "nodeset" => {
                let name = r.next()?.to_string();
                let k: usize = r.parse("node set size")?;
                let mut set = Vec::with_capacity(k);
                for _ in 0..k {
                    set.push(r.parse("node index")?);
                }
                mesh.node_sets.insert(name, set);
            }
            "edgeset" => {
                let name = r.next()?.to_string();
                let k: usize = r.parse("edge set size")?;
                let mut set = Vec::with_capacity(k);
                for _ in 0..k {
                    let a: usize = r.parse("edge node")?;
                    let b: usize = r.parse("edge node")?;
                    set.push([a, b]);
                }
                mesh.edge_sets.insert(name, set);
            }
            "slit" => {
                let p: usize = r.parse("slit pair count")?;
                let tip: usize = r.parse("slit tip node")?;
                let mx: f64 = r.parse("slit mouth x")?;
                let my: f64 = r.parse("slit mouth y")?;
                let mut pairs = Vec::with_capacity(p);
                for _ in 0..p {
                    let upper: usize = r.parse("slit upper node")?;
                    let lower: usize = r.parse("slit lower node")?;
                    pairs.push((upper, lower));
                }
                mesh.slit = Some(Slit {
                    pairs,
                    tip_node: tip,
                    mouth: [mx, my],
                });
            }
            "end" => break,
            other => {
                let msg = format!("unknown section '{other}'");
                return Err(r.error(msg));
            }
        }
    }
    Ok(mesh)
}

/// Serializes a mesh in the native format; floats use the shortest exact
/// representation so the round trip is bit-precise.
pub fn mesh_to_text(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("anisofrac-mesh 1\n");
    let _ = writeln!(out, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    for (name, set) in &mesh.node_sets {
        let _ = writeln!(out, "nodeset {} {}", name, set.len());
        for chunk in set.chunks(12) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    for (name, set) in &mesh.edge_sets {
        let _ = writeln!(out, "edgeset {} {}", name, set.len());
        for e in set {
            let _ = writeln!(out, "{} {}", e[0], e[1]);
        }
    }
    if let Some(slit) = &mesh.slit {
        let _ = writeln!(
            out,
            "slit {} {} {} {}",
            slit.pairs.len(),
            slit.tip_node,
            slit.mouth[0],
            slit.mouth[1]
        );
        for &(a, b) in &slit.pairs {
            let _ = writeln!(out, "{} {}", a, b);
        }
    }
    out.push_str("end\n");
    out
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    std::fs::write(path, mesh_to_text(mesh)).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Minimal Gmsh MSH 2.2 ASCII importer: 2-node lines become edge sets
/// (named by physical group when present), 3-node triangles the elements.
fn parse_gmsh(path: &str, text: &str) -> Result<Mesh> {
    let mut r = LineReader::new(path, text);
    r.expect("$MeshFormat")?;
    let version = r.next()?.to_string();
    if !version.starts_with("2.2") {
        return Err(r.error(format!("unsupported MSH version {version} (need 2.2)")));
    }
    let _file_type: u32 = r.parse("file type")?;
    let _data_size: u32 = r.parse("data size")?;
    r.expect("$EndMeshFormat")?;

    let mut physical_names: BTreeMap<i64, String> = BTreeMap::new();
    let mut mesh = Mesh::default();
    let mut id_map: BTreeMap<i64, usize> = BTreeMap::new();
    let mut edge_sets: BTreeMap<String, Vec<[usize; 2]>> = BTreeMap::new();

    while let Some(tok) = r.peek() {
        match tok {
            "$PhysicalNames" => {
                r.next()?;
                let n: usize = r.parse("physical name count")?;
                for _ in 0..n {
                    let _dim: i64 = r.parse("physical dim")?;
                    let id: i64 = r.parse("physical id")?;
                    let raw = r.next()?.to_string();
                    physical_names.insert(id, raw.trim_matches('"').to_string());
                }
                r.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                r.next()?;
                let n: usize = r.parse("node count")?;
                for _ in 0..n {
                    let id: i64 = r.parse("node id")?;
                    let x: f64 = r.parse("node x")?;
                    let y: f64 = r.parse("node y")?;
                    let z: f64 = r.parse("node z")?;
                    if z.abs() > 1e-12 {
                        return Err(r.error(format!("node {id} has nonzero z = {z}")));
                    }
                    id_map.insert(id, mesh.nodes.len());
                    mesh.nodes.push([x, y]);
                }
                r.expect("$EndNodes")?;
            }
            "$Elements" => {
                r.next()?;
                let n: usize = r.parse("element count")?;
                for _ in 0..n {
                    let _id: i64 = r.parse("element id")?;
                    let etype: i64 = r.parse("element type")?;
                    let ntags: usize = r.parse("tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(r.parse::<i64>("tag")?);
                    }
                    let group = tags.first().copied().unwrap_or(0);
                    let name = physical_names
                        .get(&group)
                        .cloned()
                        .unwrap_or_else(|| format!("group_{group}"));
                    let node = |r: &mut LineReader| -> Result<usize> {
                        let id: i64 = r.parse("element node")?;
                        id_map
                            .get(&id)
                            .copied()
                            .ok_or(Error::Mesh(format!("element references unknown node {id}")))
                    };
                    match etype {
                        1 => {
                            let a = node(&mut r)?;
                            let b = node(&mut r)?;
                            edge_sets.entry(name).or_default().push([a, b]);
                        }
                        2 => {
                            let a = node(&mut r)?;
                            let b = node(&mut r)?;
                            let c = node(&mut r)?;
                            mesh.triangles.push([a, b, c]);
                        }
                        15 => {
                            let _ = node(&mut r)?; // point element, ignored
                        }
                        other => {
                            return Err(r.error(format!("unsupported element type {other}")));
                        }
                    }
                }
                r.expect("$EndElements")?;
            }
            _ => {
                // Skip unknown section.
                let open = r.next()?.to_string();
                if !open.starts_with('$') {
                    return Err(r.error(format!("unexpected token '{open}'")));
                }
                let close = format!("$End{}", &open[1..]);
                loop {
                    let t = r.next()?;
                    if t == close {
                        break;
                    }
                }
            }
        }
    }
    for (name, edges) in edge_sets {
        let mut nodes: Vec<usize> = edges.iter().flat_map(|e| e.iter().copied()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        mesh.node_sets.insert(name.clone(), nodes);
        mesh.edge_sets.insert(name, edges);
    }
    Ok(mesh)
}

/// Serializes a simulation state (mesh inline plus nodal fields).
pub fn state_to_text(state: &SimState) -> String {
    let mut out = String::new();
    out.push_str("anisofrac-state 1\n");
    let _ = writeln!(out, "step {}", state.step);
    let _ = writeln!(out, "ubar {}", state.ubar);
    let _ = writeln!(out, "reaction {}", state.reaction);
    let _ = writeln!(out, "converged {}", u8::from(state.converged));
    let _ = writeln!(out, "stagger_iters {}", state.stagger_iters);
    out.push_str(&mesh_to_text(&state.mesh));
    for (name, field) in [("u", &state.u), ("d", &state.d), ("d_prev", &state.d_prev)] {
        let _ = writeln!(
            out,
            "field {} {} {}",
            name,
            field.ncomp,
            field.values.len() / field.ncomp
        );
        for chunk in field.values.chunks(field.ncomp) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    out.push_str("endstate\n");
    out
}

pub fn write_state(path: &Path, state: &SimState) -> Result<()> {
    std::fs::write(path, state_to_text(state))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_state(path: &Path) -> Result<SimState> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_state_text(&path.display().to_string(), &text)
}

pub fn parse_state_text(path: &str, text: &str) -> Result<SimState> {
    let mut r = LineReader::new(path, text);
    r.expect("anisofrac-state")?;
    let version: u32 = r.parse("state version")?;
    if version != 1 {
        return Err(r.error(format!("unsupported state version {version}")));
    }
    r.expect("step")?;
    let step: usize = r.parse("step")?;
    r.expect("ubar")?;
    let ubar: f64 = r.parse("ubar")?;
    r.expect("reaction")?;
    let reaction: f64 = r.parse("reaction")?;
    r.expect("converged")?;
    let converged: u8 = r.parse("converged")?;
    r.expect("stagger_iters")?;
    let stagger_iters: usize = r.parse("stagger_iters")?;

    // Inline mesh block: re-parse from the remaining tokens.
    let rest: Vec<String> = r.tokens[r.pos..].iter().map(|(_, t)| t.clone()).collect();
    let rest_text = rest.join(" ");
    let mesh_end = rest_text
        .find(" end ")
        .ok_or_else(|| r.error("missing mesh terminator in state file"))?;
    let mesh = parse_mesh_text(path, &rest_text[..mesh_end + 4])?;
    mesh.validate()?;
    let mut rr = LineReader::new(path, &rest_text[mesh_end + 4..]);

    let mut fields: BTreeMap<String, Field> = BTreeMap::new();
    loop {
        let tok = rr.next()?.to_string();
        match tok.as_str() {
            "field" => {
                let name = rr.next()?.to_string();
                let ncomp: usize = rr.parse("field components")?;
                let n: usize = rr.parse("field length")?;
                if n != mesh.n_nodes() {
                    return Err(rr.error(format!(
                        "field '{name}' has {n} entries for {} nodes",
                        mesh.n_nodes()
                    )));
                }
                let mut values = Vec::with_capacity(n * ncomp);
                for _ in 0..n * ncomp {
                    values.push(rr.parse("field value")?);
                }
                fields.insert(name, Field { ncomp, values });
            }
            "endstate" => break,
            other => {
                let msg = format!("unknown state section '{other}'");
                return Err(rr.error(msg));
            }
        }
    }
    let mut fields = fields;
    let u = take_field(&mut fields, "u", 2)?;
    let d = take_field(&mut fields, "d", 1)?;
    let d_prev = take_field(&mut fields, "d_prev", 1)?;
    Ok(SimState {
        mesh: Arc::new(mesh),
        u,
        d,
        d_prev,
        step,
        ubar,
        reaction,
        converged: converged != 0,
        stagger_iters,
    })
}

fn take_field(fields: &mut BTreeMap<String, Field>, name: &str, ncomp: usize) -> Result<Field> {
    let f = fields
        .remove(name)
        .ok_or(Error::Mesh(format!("state file missing field '{name}'")))?;
    if f.ncomp != ncomp {
        return Err(Error::Mesh(format!(
            "field '{name}' has {} components, expected {ncomp}",
            f.ncomp
        )));
    }
    Ok(f)
}
