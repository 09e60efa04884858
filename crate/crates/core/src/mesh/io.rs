//! ASCII OFF and OBJ. Polygons are fan-triangulated on load.

use std::fmt::Write as _;
use std::path::Path;

use super::{Point, TriMesh};
use crate::error::{Error, Result};

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

fn float(tok: Option<&str>, line: usize) -> Result<f64> {
    let t = tok.ok_or_else(|| Error::parse(line, "missing coordinate"))?;
    t.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad number `{t}`")))
}

pub fn parse_off(text: &str) -> Result<TriMesh> {
    // comments and blank lines carry no data; keep original line numbers
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, first) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let rest = first
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(ln, "missing OFF header"))?
        .trim()
        .to_string();
    let (ln, counts) = if rest.is_empty() {
        let (l, c) = lines.next().ok_or_else(|| Error::parse(ln, "missing counts"))?;
        (l, c.to_string())
    } else {
        (ln, rest)
    };
    let c: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad count `{t}`"))))
        .collect::<Result<_>>()?;
    if c.len() < 2 {
        return Err(Error::parse(ln, "expected `vertices faces [edges]`"));
    }
    let (nv, nf) = (c[0], c[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| Error::InvalidData("truncated vertex list".into()))?;
        let mut t = l.split_whitespace();
        vertices.push([float(t.next(), ln)?, float(t.next(), ln)?, float(t.next(), ln)?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| Error::InvalidData("truncated face list".into()))?;
        let mut t = l.split_whitespace();
        let k: usize = t
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(ln, "bad face size"))?;
        let poly: Vec<usize> = (0..k)
            .map(|_| {
                t.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse(ln, "bad face index"))
            })
            .collect::<Result<_>>()?;
        if k < 3 {
            return Err(Error::parse(ln, "face with fewer than 3 vertices"));
        }
        fan(&poly, &mut faces);
    }
    TriMesh::new(vertices, faces)
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut t = line.split_whitespace();
        match t.next() {
            Some("v") => vertices.push([float(t.next(), ln)?, float(t.next(), ln)?, float(t.next(), ln)?]),
            Some("f") => {
                let poly: Vec<usize> = t
                    .map(|tok| {
                        let idx = tok.split('/').next().unwrap_or("");
                        let v: i64 = idx
                            .parse()
                            .map_err(|_| Error::parse(ln, format!("bad face index `{tok}`")))?;
                        // negative indices count back from the latest vertex
                        let resolved = if v < 0 { vertices.len() as i64 + v } else { v - 1 };
                        if resolved < 0 {
                            return Err(Error::parse(ln, format!("face index `{tok}` out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if poly.len() < 3 {
                    return Err(Error::parse(ln, "face with fewer than 3 vertices"));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Picks the parser from the file extension (`.off` or `.obj`).
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("off") => parse_off(&text),
        Some("obj") => parse_obj(&text),
        _ => Err(Error::InvalidData(format!(
            "unknown mesh format for {}",
            path.display()
        ))),
    }
}

pub fn write_off(m: &TriMesh) -> String {
    let mut out = format!("OFF\n{} {} 0\n", m.num_vertices(), m.num_faces());
    for v in m.vertices() {
        let _ = writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in m.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

pub fn write_obj(m: &TriMesh) -> String {
    let mut out = String::new();
    for v in m.vertices() {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
    }
    for f in m.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    const TETRA: &str = "OFF\n# unit tetrahedron\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";

    #[test]
    fn tetrahedron_off() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces(), m.graph().num_edges()), (4, 4, 6));
    }

    #[test]
    fn obj_quad_is_split() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        let neg = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(neg.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn round_trips_are_exact() {
        let m = icosphere(2);
        assert_eq!(parse_off(&write_off(&m)).unwrap(), m);
        assert_eq!(parse_obj(&write_obj(&m)).unwrap(), m);
    }

    #[test]
    fn header_on_one_line_and_errors() {
        let m = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n").unwrap();
        assert_eq!(m.num_faces(), 2);
        assert!(parse_off("").is_err());
        assert!(parse_off("PLY\n").is_err());
        assert!(parse_off("OFF\n2 0 0\n0 0 0\n").is_err());
        assert!(matches!(parse_off("OFF\n1 0 0\n0 x 0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_obj("f 1 2 3\n").is_err());
    }

    #[test]
    fn load_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.off");
        std::fs::write(&p, TETRA).unwrap();
        assert_eq!(load_mesh(&p).unwrap().num_faces(), 4);
        let q = dir.path().join("t.stl");
        std::fs::write(&q, TETRA).unwrap();
        assert!(load_mesh(&q).is_err());
    }
}
