//! ASCII MSH 2.2 subset: 3/6-node triangles and 2/3-node boundary lines
//! with physical tags 1 (`Gamma`) and 2 (`Sigma`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{edge_key, BoundaryTag, Curve, Mesh};
use crate::error::{Error, Result};
use crate::point::Vec2;

const TYPE_LINE2: usize = 1;
const TYPE_TRI3: usize = 2;
const TYPE_LINE3: usize = 8;
const TYPE_TRI6: usize = 9;
const DOMAIN_TAG: i64 = 3;

pub fn read_msh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_msh(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::MeshParse { line, msg: msg.into() }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let (i, l) = self.inner.next()?;
        self.last = i + 1;
        Some((i + 1, l.trim()))
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| parse_err(self.last, format!("unexpected end of file, expected {what}")))
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

struct BoundaryLine {
    line: usize,
    nodes: Vec<usize>,
    tag: BoundaryTag,
}

pub fn parse_msh(text: &str) -> Result<Mesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let mut nodes: Vec<(usize, Vec2)> = Vec::new();
    let mut triangles: Vec<(usize, [usize; 3])> = Vec::new();
    let mut boundary: Vec<BoundaryLine> = Vec::new();
    let mut saw_format = false;

    while let Some((ln, l)) = lines.next() {
        match l {
            "" => {}
            "$MeshFormat" => {
                let (ln, v) = lines.expect("format line")?;
                let mut t = v.split_whitespace();
                let version: String = parse_num(t.next(), ln, "version")?;
                let file_type: i64 = parse_num(t.next(), ln, "file type")?;
                if version != "2.2" || file_type != 0 {
                    return Err(parse_err(ln, format!("unsupported format {v:?}, need ASCII 2.2")));
                }
                let (ln, end) = lines.expect("$EndMeshFormat")?;
                if end != "$EndMeshFormat" {
                    return Err(parse_err(ln, "expected $EndMeshFormat"));
                }
                saw_format = true;
            }
            "$Nodes" => {
                let (ln, c) = lines.expect("node count")?;
                let count: usize = parse_num(Some(c), ln, "node count")?;
                for _ in 0..count {
                    let (ln, v) = lines.expect("node")?;
                    let mut t = v.split_whitespace();
                    let id: usize = parse_num(t.next(), ln, "node id")?;
                    let x: f64 = parse_num(t.next(), ln, "x coordinate")?;
                    let y: f64 = parse_num(t.next(), ln, "y coordinate")?;
                    nodes.push((id, Vec2::new(x, y)));
                }
                let (ln, end) = lines.expect("$EndNodes")?;
                if end != "$EndNodes" {
                    return Err(parse_err(ln, "expected $EndNodes"));
                }
            }
            "$Elements" => {
                let (ln, c) = lines.expect("element count")?;
                let count: usize = parse_num(Some(c), ln, "element count")?;
                for _ in 0..count {
                    let (ln, v) = lines.expect("element")?;
                    let f: Vec<&str> = v.split_whitespace().collect();
                    let mut t = f.iter().copied();
                    let _id: usize = parse_num(t.next(), ln, "element id")?;
                    let ty: usize = parse_num(t.next(), ln, "element type")?;
                    let ntags: usize = parse_num(t.next(), ln, "tag count")?;
                    let tags: Vec<i64> =
                        (0..ntags).map(|_| parse_num(t.next(), ln, "tag")).collect::<Result<_>>()?;
                    let ids: Vec<usize> = t.map(|s| parse_num(Some(s), ln, "node id")).collect::<Result<_>>()?;
                    let expected = match ty {
                        TYPE_LINE2 => 2,
                        TYPE_TRI3 => 3,
                        TYPE_LINE3 => 3,
                        TYPE_TRI6 => 6,
                        15 => continue, // points
                        other => return Err(parse_err(ln, format!("unsupported element type {other}"))),
                    };
                    if ids.len() != expected {
                        return Err(parse_err(ln, format!("element type {ty} needs {expected} nodes")));
                    }
                    match ty {
                        TYPE_TRI3 | TYPE_TRI6 => triangles.push((ln, [ids[0], ids[1], ids[2]])),
                        _ => {
                            let phys = *tags
                                .first()
                                .ok_or_else(|| parse_err(ln, "boundary line without physical tag"))?;
                            let tag = BoundaryTag::from_physical(phys).ok_or_else(|| {
                                parse_err(ln, format!("unknown boundary tag {phys} (expected 1 or 2)"))
                            })?;
                            boundary.push(BoundaryLine { line: ln, nodes: ids, tag });
                        }
                    }
                }
                let (ln, end) = lines.expect("$EndElements")?;
                if end != "$EndElements" {
                    return Err(parse_err(ln, "expected $EndElements"));
                }
            }
            s if s.starts_with('$') => {
                // Skip unknown sections such as $PhysicalNames.
                let end = format!("$End{}", &s[1..]);
                loop {
                    let (_, l) = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            _ => return Err(parse_err(ln, format!("unexpected content {l:?}"))),
        }
    }
    if !saw_format {
        return Err(parse_err(1, "missing $MeshFormat section"));
    }

    let coords: HashMap<usize, Vec2> = nodes.iter().copied().collect();
    let mut is_corner: HashMap<usize, bool> = HashMap::new();
    for (ln, t) in &triangles {
        for id in t {
            if !coords.contains_key(id) {
                return Err(parse_err(*ln, format!("unknown node {id}")));
            }
            is_corner.insert(*id, true);
        }
    }
    let mut vertex_of: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    for &(id, p) in &nodes {
        if is_corner.contains_key(&id) && !vertex_of.contains_key(&id) {
            vertex_of.insert(id, vertices.len());
            vertices.push(p);
        }
    }
    let tris: Vec<[usize; 3]> = triangles.iter().map(|(_, t)| t.map(|id| vertex_of[&id])).collect();

    let mut edges: HashMap<(usize, usize), (BoundaryTag, Curve)> = HashMap::new();
    for b in &boundary {
        let va = *vertex_of
            .get(&b.nodes[0])
            .ok_or_else(|| parse_err(b.line, "boundary line endpoint is not a triangle corner"))?;
        let vb = *vertex_of
            .get(&b.nodes[1])
            .ok_or_else(|| parse_err(b.line, "boundary line endpoint is not a triangle corner"))?;
        let (pa, pb) = (vertices[va], vertices[vb]);
        let curve = match b.nodes.get(2) {
            Some(mid) => {
                let pm = *coords.get(mid).ok_or_else(|| parse_err(b.line, format!("unknown node {mid}")))?;
                Curve::quadratic(pa, pm, pb)
            }
            None => Curve::Straight { a: pa, b: pb },
        };
        let (key, curve) = if va < vb { ((va, vb), curve) } else { ((vb, va), curve.reversed()) };
        if edges.insert(key, (b.tag, curve)).is_some() {
            return Err(parse_err(b.line, "duplicate boundary line"));
        }
    }
    let line_count = edges.len();
    let mesh = Mesh::from_parts(vertices, &tris, |a, b| {
        edges.get(&edge_key(a, b)).map(|&(tag, curve)| (tag, if a < b { curve } else { curve.reversed() }))
    })?;
    if mesh.facets.len() != line_count {
        return Err(Error::MeshValidation(format!(
            "{} boundary lines given but the triangulation has {} boundary edges",
            line_count,
            mesh.facets.len()
        )));
    }
    Ok(mesh)
}

/// Writes 6-node triangles and 3-node boundary lines. Boundary midpoints
/// are the exact curve midpoints.
pub fn write_msh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_msh(mesh))?;
    Ok(())
}

pub(crate) fn format_msh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} 0", i + 1, p.x, p.y);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.facets.len() + mesh.cells.len());
    let mut id = 1;
    for f in &mesh.facets {
        let t = f.tag.physical();
        let [a, b, m] = f.nodes;
        let _ = writeln!(s, "{id} {TYPE_LINE3} 2 {t} {t} {} {} {}", a + 1, b + 1, m + 1);
        id += 1;
    }
    for c in &mesh.cells {
        let n: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(s, "{id} {TYPE_TRI6} 2 {DOMAIN_TAG} {DOMAIN_TAG} {}", n.join(" "));
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_SQUARE: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n\
        1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n$Elements\n6\n\
        1 1 2 2 1 1 2\n2 1 2 2 1 2 3\n3 1 2 2 1 3 4\n4 1 2 2 1 4 1\n\
        5 2 2 3 1 1 2 3\n6 2 2 3 1 1 3 4\n$EndElements\n";

    #[test]
    fn two_triangle_square() {
        let m = parse_msh(UNIT_SQUARE).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.facet_count(BoundaryTag::Sigma), 4);
        assert_eq!(m.facet_count(BoundaryTag::Gamma), 0);
    }

    #[test]
    fn unknown_tag_is_named() {
        let bad = UNIT_SQUARE.replace("3 1 2 2 1 3 4", "3 1 2 7 1 3 4");
        match parse_msh(&bad) {
            Err(Error::MeshParse { line, msg }) => {
                assert_eq!(line, 15);
                assert!(msg.contains('7'), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_input_reports_line() {
        let bad = UNIT_SQUARE.replace("2 1 0 0\n", "2 1 zero 0\n");
        assert!(matches!(parse_msh(&bad), Err(Error::MeshParse { line: 7, .. })));
        let missing = UNIT_SQUARE.replace("4 1 2 2 1 4 1\n", "");
        assert!(parse_msh(&missing).is_err());
    }

    #[test]
    fn round_trip_preserves_vertices() {
        let m = parse_msh(UNIT_SQUARE).unwrap().refine().unwrap();
        let again = parse_msh(&format_msh(&m)).unwrap();
        assert_eq!(again.vertex_count, m.vertex_count);
        assert_eq!(&again.nodes[..m.vertex_count], &m.nodes[..m.vertex_count]);
        assert_eq!(again.cells.len(), m.cells.len());
    }
}
