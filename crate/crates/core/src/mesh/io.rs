//! Plain-text mesh format.
//!
//! ```text
//! # optional comment lines
//! vertices N triangles M
//! x y boundary_flag        (N lines)
//! i j k                    (M lines, 0-based)
//! field N                  (optional section)
//! value                    (N lines)
//! ```
//!
//! Reals are written with 17 significant digits so a write/read cycle is
//! bit-exact.

use std::io::{BufRead, Write};

use super::Mesh;
use crate::error::{Error, Result};

/// Contents of a mesh file.
#[derive(Debug)]
pub struct MeshFile {
    pub comments: Vec<String>,
    pub mesh: Mesh,
    pub field: Option<Vec<f64>>,
}

pub fn write_mesh<W: Write>(
    out: &mut W,
    mesh: &Mesh,
    field: Option<&[f64]>,
    comments: &[String],
) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "vertices {} triangles {}", mesh.num_vertices(), mesh.num_triangles())?;
    for (p, &b) in mesh.vertices().iter().zip(mesh.boundary_flags()) {
        writeln!(out, "{:.16e} {:.16e} {}", p[0], p[1], u8::from(b))?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    if let Some(values) = field {
        if values.len() != mesh.num_vertices() {
            return Err(Error::FieldLength {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        writeln!(out, "field {}", values.len())?;
        for v in values {
            writeln!(out, "{v:.16e}")?;
        }
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<MeshFile> {
    let mut comments = Vec::new();
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |comments: &mut Vec<String>| -> Result<Option<(usize, String)>> {
        for (no, line) in lines.by_ref() {
            let line = line?;
            let trimmed = line.trim();
            if let Some(c) = trimmed.strip_prefix('#') {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            return Ok(Some((no, trimmed.to_string())));
        }
        Ok(None)
    };
    let need = |opt: Option<(usize, String)>, what: &str| -> Result<(usize, String)> {
        opt.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    };

    let (no, header) = need(next_line(&mut comments)?, "header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let (nv, nt) = match tokens.as_slice() {
        ["vertices", n, "triangles", m] => (parse_usize(n, no)?, parse_usize(m, no)?),
        _ => {
            return Err(Error::Parse {
                line: no,
                message: "expected 'vertices N triangles M'".into(),
            })
        }
    };

    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = need(next_line(&mut comments)?, "vertex line")?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::Parse {
                line: no,
                message: "expected 'x y boundary_flag'".into(),
            });
        }
        vertices.push([parse_f64(t[0], no)?, parse_f64(t[1], no)?]);
        boundary.push(match t[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line: no,
                    message: format!("boundary flag must be 0 or 1, got '{other}'"),
                })
            }
        });
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, line) = need(next_line(&mut comments)?, "triangle line")?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::Parse {
                line: no,
                message: "expected 'i j k'".into(),
            });
        }
        triangles.push([parse_usize(t[0], no)?, parse_usize(t[1], no)?, parse_usize(t[2], no)?]);
    }

    let field = match next_line(&mut comments)? {
        None => None,
        Some((no, line)) => {
            let t: Vec<&str> = line.split_whitespace().collect();
            let n = match t.as_slice() {
                ["field", n] => parse_usize(n, no)?,
                _ => {
                    return Err(Error::Parse {
                        line: no,
                        message: "expected 'field N' or end of file".into(),
                    })
                }
            };
            if n != nv {
                return Err(Error::Parse {
                    line: no,
                    message: format!("field has {n} values for {nv} vertices"),
                });
            }
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let (no, line) = need(next_line(&mut comments)?, "field value")?;
                values.push(parse_f64(&line, no)?);
            }
            Some(values)
        }
    };

    let mesh = Mesh::from_parts(vertices, triangles, boundary, 0)?;
    Ok(MeshFile { comments, mesh, field })
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected non-negative integer, got '{s}'"),
    })
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected real number, got '{s}'"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, Domain};
    use proptest::prelude::*;

    #[test]
    fn roundtrip_with_field_and_comments() {
        let m = generate_mesh(Domain::UnitDisk, 0.3, 11).unwrap();
        let field: Vec<f64> = m.vertices().iter().map(|p| p[0].exp() / 3.0).collect();
        let mut buf = Vec::new();
        write_mesh(&mut buf, &m, Some(&field), &["seed 11".to_string()]).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.mesh, m);
        assert_eq!(back.field.unwrap(), field);
        assert_eq!(back.comments, vec!["seed 11".to_string()]);
    }

    #[test]
    fn header_is_exact() {
        let m = crate::mesh::tests::cross_mesh();
        let mut buf = Vec::new();
        write_mesh(&mut buf, &m, None, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("vertices 5 triangles 4\n"));
        assert!(text.contains("5.0000000000000000e-1 5.0000000000000000e-1 0\n"));
    }

    #[test]
    fn truncated_file_is_an_error() {
        let err = read_mesh("vertices 3 triangles 1\n0 0 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    proptest! {
        #[test]
        fn reals_roundtrip_bit_exact(x in proptest::num::f64::NORMAL, y in proptest::num::f64::NORMAL) {
            let text = format!("{x:.16e} {y:.16e}");
            let mut it = text.split(' ');
            prop_assert_eq!(it.next().unwrap().parse::<f64>().unwrap().to_bits(), x.to_bits());
            prop_assert_eq!(it.next().unwrap().parse::<f64>().unwrap().to_bits(), y.to_bits());
        }
    }
}
