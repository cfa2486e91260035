//! Legacy ASCII VTK writer for structured-points snapshots.
//!
//! Layout of a file:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET STRUCTURED_POINTS
//! DIMENSIONS nx ny nz
//! ORIGIN x0 y0 z0
//! SPACING hx hy hz
//! POINT_DATA nx*ny*nz
//! SCALARS <name> double 1
//! LOOKUP_TABLE default
//! <one value per line, x fastest>
//! ```
//!
//! with one `SCALARS` block per field.

use std::io::{self, Write};

pub struct Field<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

pub fn write_structured_points<W: Write>(
    mut w: W,
    title: &str,
    dims: [usize; 3],
    origin: [f64; 3],
    spacing: [f64; 3],
    fields: &[Field<'_>],
) -> io::Result<()> {
    let n: usize = dims.iter().product();
    if let Some(f) = fields.iter().find(|f| f.values.len() != n) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("field {} has {} values, grid has {n}", f.name, f.values.len()),
        ));
    }
    // the title line may not contain a newline
    let title: String = title.chars().filter(|&c| c != '\n' && c != '\r').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2])?;
    writeln!(w, "ORIGIN {} {} {}", origin[0], origin[1], origin[2])?;
    writeln!(w, "SPACING {} {} {}", spacing[0], spacing[1], spacing[2])?;
    writeln!(w, "POINT_DATA {n}")?;
    for f in fields {
        writeln!(w, "SCALARS {} double 1", f.name)?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in f.values {
            writeln!(w, "{v:e}")?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_values() {
        let mut buf = Vec::new();
        let a = [1.0, 2.0];
        let b = [0.5, -0.25];
        let fields = [Field { name: "C0", values: &a }, Field { name: "C1", values: &b }];
        write_structured_points(&mut buf, "t=0", [2, 1, 1], [0.0; 3], [1.25; 3], &fields).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[4], "DIMENSIONS 2 1 1");
        assert_eq!(lines[6], "SPACING 1.25 1.25 1.25");
        assert_eq!(lines[7], "POINT_DATA 2");
        assert_eq!(&lines[8..12], &["SCALARS C0 double 1", "LOOKUP_TABLE default", "1e0", "2e0"]);
        assert_eq!(&lines[12..], &["SCALARS C1 double 1", "LOOKUP_TABLE default", "5e-1", "-2.5e-1"]);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let fields = [Field { name: "C0", values: &[1.0] }];
        assert!(write_structured_points(Vec::new(), "x", [2, 1, 1], [0.0; 3], [1.0; 3], &fields).is_err());
    }
}
