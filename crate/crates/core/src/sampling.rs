//! Angular sampling lattices, sample containers, and their CSV formats.
//!
//! Two file formats are supported, both UTF-8 with LF line endings and one
//! row per (circle, node), grouped by circle with node index ascending:
//!
//! * modulus files: header `rho,j,modulus`
//! * complex files: header `rho,j,re,im`
//!
//! Angles never appear in files; node `j` of an `n`-point circle sits at
//! `2*pi*j/n`. Floats are written with 17 significant digits so every `f64`
//! survives a store/load cycle bit for bit.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Two radii closer than this name the same circle.
pub const RADIUS_TOL: f64 = 1e-12;

/// `n` equispaced angular nodes on the circle of radius `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleGrid {
    n: usize,
    rho: f64,
    nodes: Vec<f64>,
}

impl CircleGrid {
    /// Builds the lattice `x_j = 2*pi*j/n`, `j = 0..n`.
    pub fn new(n: usize, rho: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 nodes, got {n}")));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidGrid(format!("radius {rho} outside (0, 1]")));
        }
        let nodes = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        Ok(Self { n, rho, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// The sample point `rho * exp(i x_j)`.
    pub fn point(&self, j: usize) -> Complex64 {
        Complex64::from_polar(self.rho, self.nodes[j])
    }

    pub fn is_boundary(&self) -> bool {
        (self.rho - 1.0).abs() <= RADIUS_TOL
    }

    /// Same lattice at another radius.
    pub fn with_radius(&self, rho: f64) -> Result<Self> {
        Self::new(self.n, rho)
    }
}

/// Shorthand for [`CircleGrid::new`].
pub fn make_circle_grid(n: usize, rho: f64) -> Result<CircleGrid> {
    CircleGrid::new(n, rho)
}

/// Real values on the nodes of one circle.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSamples {
    grid: CircleGrid,
    values: Vec<f64>,
}

impl RealSamples {
    pub fn new(grid: CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch { expected: grid.n(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x_j)` of a function of the angle.
    pub fn from_fn(grid: CircleGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rho(&self) -> f64 {
        self.grid.rho()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// Complex values on the nodes of one circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSamples {
    grid: CircleGrid,
    values: Vec<Complex64>,
}

impl ComplexSamples {
    pub fn new(grid: CircleGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch { expected: grid.n(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(rho e^{i x_j})` of a function of the point.
    pub fn from_fn(grid: CircleGrid, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.point(j))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn rho(&self) -> f64 {
        self.grid.rho()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn modulus(&self) -> RealSamples {
        RealSamples { grid: self.grid.clone(), values: self.values.iter().map(|v| v.norm()).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| c * v).collect() }
    }
}

/// Modulus measurements on a finite set of concentric circles sharing one
/// angular lattice. Always contains the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusField {
    // sorted by radius, boundary last
    circles: Vec<RealSamples>,
}

impl ModulusField {
    pub fn new(mut circles: Vec<RealSamples>) -> Result<Self> {
        let n = circles.first().map(|c| c.len()).ok_or(Error::MissingBoundary)?;
        for c in &circles {
            if c.len() != n {
                return Err(Error::InvalidGrid(format!("circle r = {} has {} nodes, expected {n}", c.rho(), c.len())));
            }
            if let Some(j) = c.values().iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "modulus at r = {}, node {j} is negative or not finite",
                    c.rho()
                )));
            }
        }
        circles.sort_by(|a, b| a.rho().total_cmp(&b.rho()));
        for w in circles.windows(2) {
            if (w[1].rho() - w[0].rho()).abs() <= RADIUS_TOL {
                return Err(Error::InvalidArgument(format!("duplicate circle r = {}", w[0].rho())));
            }
        }
        if !circles.last().is_some_and(|c| c.grid().is_boundary()) {
            return Err(Error::MissingBoundary);
        }
        Ok(Self { circles })
    }

    pub fn n(&self) -> usize {
        self.circles[0].len()
    }

    pub fn circles(&self) -> &[RealSamples] {
        &self.circles
    }

    pub fn boundary(&self) -> &RealSamples {
        self.circles.last().expect("field always holds the boundary circle")
    }

    pub fn circle(&self, rho: f64) -> Option<&RealSamples> {
        self.circles.iter().find(|c| (c.rho() - rho).abs() <= RADIUS_TOL)
    }

    /// Radii of the circles strictly inside the disc, ascending.
    pub fn interior_radii(&self) -> Vec<f64> {
        self.circles.iter().filter(|c| !c.grid().is_boundary()).map(|c| c.rho()).collect()
    }

    /// Rotates every circle by `shift` nodes: value at `j` moves to `j + shift`.
    pub fn rotate(&self, shift: usize) -> Self {
        let circles = self
            .circles
            .iter()
            .map(|c| {
                let n = c.len();
                let values = (0..n).map(|j| c.values()[(j + n - shift % n) % n]).collect();
                RealSamples { grid: c.grid().clone(), values }
            })
            .collect();
        Self { circles }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink)
}

/// Writes real samples in the modulus format.
pub fn write_real_csv<'a, W: Write>(circles: impl IntoIterator<Item = &'a RealSamples>, sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["rho", "j", "modulus"])?;
    for c in circles {
        let rho = fmt_f64(c.rho());
        for (j, v) in c.values().iter().enumerate() {
            w.write_record([rho.as_str(), &j.to_string(), &fmt_f64(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes complex samples in the `rho,j,re,im` format.
pub fn write_complex_csv<'a, W: Write>(circles: impl IntoIterator<Item = &'a ComplexSamples>, sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["rho", "j", "re", "im"])?;
    for c in circles {
        let rho = fmt_f64(c.rho());
        for (j, v) in c.values().iter().enumerate() {
            w.write_record([rho.as_str(), &j.to_string(), &fmt_f64(v.re), &fmt_f64(v.im)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn store_modulus_field<W: Write>(field: &ModulusField, sink: W) -> Result<()> {
    write_real_csv(field.circles(), sink)
}

/// One circle's worth of parsed rows.
struct Group<const K: usize> {
    rho: f64,
    first_row: usize,
    last_row: usize,
    values: Vec<[f64; K]>,
}

fn parse_f64(s: &str, row: usize, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse { row, msg: format!("bad {what} {s:?}") })
}

fn read_groups<R: Read, const K: usize>(source: R, header: &[&str]) -> Result<Vec<Group<K>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let got: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if got != header {
        return Err(Error::Parse {
            row: 1,
            msg: format!("expected header {:?}, found {:?}", header.join(","), got.join(",")),
        });
    }
    let mut groups: Vec<Group<K>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != K + 2 {
            return Err(Error::Parse { row, msg: format!("expected {} fields, found {}", K + 2, rec.len()) });
        }
        let rho = parse_f64(&rec[0], row, "radius")?;
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Parse { row, msg: format!("radius {rho} outside (0, 1]") });
        }
        let j: usize =
            rec[1].trim().parse().map_err(|_| Error::Parse { row, msg: format!("bad node index {:?}", &rec[1]) })?;
        let mut vals = [0.0; K];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parse_f64(&rec[k + 2], row, header[k + 2])?;
            if !v.is_finite() {
                return Err(Error::Parse { row, msg: format!("non-finite {}", header[k + 2]) });
            }
        }
        let new_group = groups.last().is_none_or(|g| g.rho != rho);
        if new_group {
            if groups.iter().any(|g| (g.rho - rho).abs() <= RADIUS_TOL) {
                return Err(Error::Parse { row, msg: format!("circle r = {rho} is split across non-adjacent rows") });
            }
            groups.push(Group { rho, first_row: row, last_row: row, values: Vec::new() });
        }
        let g = groups.last_mut().expect("just pushed");
        if j != g.values.len() {
            return Err(Error::Parse { row, msg: format!("node index {j} out of order, expected {}", g.values.len()) });
        }
        g.values.push(vals);
        g.last_row = row;
    }
    let Some(first) = groups.first() else {
        return Err(Error::MissingBoundary);
    };
    let n = first.values.len();
    for g in &groups {
        if g.values.len() != n {
            return Err(Error::Parse {
                row: g.last_row,
                msg: format!(
                    "circle r = {} has {} nodes, first circle has {n} (rows {}..={})",
                    g.rho,
                    g.values.len(),
                    g.first_row,
                    g.last_row
                ),
            });
        }
    }
    Ok(groups)
}

/// Parses a modulus CSV into a field.
pub fn load_modulus_field<R: Read>(source: R) -> Result<ModulusField> {
    let groups = read_groups::<R, 1>(source, &["rho", "j", "modulus"])?;
    let mut circles = Vec::with_capacity(groups.len());
    for g in groups {
        if let Some(k) = g.values.iter().position(|v| v[0] < 0.0) {
            return Err(Error::Parse { row: g.first_row + k, msg: "negative modulus".into() });
        }
        let grid = CircleGrid::new(g.values.len(), g.rho)?;
        circles.push(RealSamples { grid, values: g.values.into_iter().map(|v| v[0]).collect() });
    }
    ModulusField::new(circles)
}

/// Parses a complex CSV; circles are returned in file order.
pub fn load_complex_samples<R: Read>(source: R) -> Result<Vec<ComplexSamples>> {
    let groups = read_groups::<R, 2>(source, &["rho", "j", "re", "im"])?;
    groups
        .into_iter()
        .map(|g| {
            let grid = CircleGrid::new(g.values.len(), g.rho)?;
            let values = g.values.into_iter().map(|v| Complex64::new(v[0], v[1])).collect();
            Ok(ComplexSamples { grid, values })
        })
        .collect()
}

/// Parses real samples in the modulus format without requiring a boundary
/// circle; circles are returned in file order.
pub fn load_real_samples<R: Read>(source: R) -> Result<Vec<RealSamples>> {
    let groups = read_groups::<R, 1>(source, &["rho", "j", "modulus"])?;
    groups
        .into_iter()
        .map(|g| {
            let grid = CircleGrid::new(g.values.len(), g.rho)?;
            Ok(RealSamples { grid, values: g.values.into_iter().map(|v| v[0]).collect() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_nodes() {
        let g = make_circle_grid(4, 1.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        let g = make_circle_grid(64, 1.0).unwrap();
        assert!((g.nodes()[1] - 0.0981747704).abs() < 1e-10);
        let g = make_circle_grid(256, 0.5).unwrap();
        assert_eq!(g.n(), 256);
        assert_eq!(g.rho(), 0.5);
        assert!((g.spacing() - TAU / 256.0).abs() < 1e-16);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_circle_grid(3, 1.0).is_err());
        assert!(make_circle_grid(8, 0.0).is_err());
        assert!(make_circle_grid(8, 1.5).is_err());
        assert!(make_circle_grid(8, f64::NAN).is_err());
    }

    #[test]
    fn grid_is_deterministic() {
        assert_eq!(make_circle_grid(100, 0.3).unwrap(), make_circle_grid(100, 0.3).unwrap());
    }

    fn constant_csv(n: usize, rhos: &[f64]) -> String {
        let mut s = String::from("rho,j,modulus\n");
        for &r in rhos {
            for j in 0..n {
                s.push_str(&format!("{r:?},{j},1.0\n"));
            }
        }
        s
    }

    #[test]
    fn load_constant_field() {
        let f = load_modulus_field(constant_csv(64, &[1.0]).as_bytes()).unwrap();
        assert_eq!(f.circles().len(), 1);
        assert!(f.boundary().values().iter().all(|&v| v == 1.0));
        let f = load_modulus_field(constant_csv(64, &[1.0, 0.7]).as_bytes()).unwrap();
        assert_eq!(f.circles().len(), 2);
        assert_eq!(f.n(), 64);
        assert_eq!(f.interior_radii(), vec![0.7]);
    }

    #[test]
    fn load_errors_carry_rows() {
        let e = load_modulus_field(constant_csv(8, &[0.5]).as_bytes()).unwrap_err();
        assert_eq!(e.to_string(), "missing boundary circle");

        let mut s = constant_csv(8, &[1.0]);
        s = s.replace("1.0,3,1.0", "1.0,3,-2.0");
        match load_modulus_field(s.as_bytes()).unwrap_err() {
            Error::Parse { row, msg } => {
                assert_eq!(row, 5);
                assert!(msg.contains("negative"));
            }
            e => panic!("unexpected {e}"),
        }

        let mut s = constant_csv(8, &[1.0]);
        s.push_str("0.5,0,1.0\n0.5,1,1.0\n0.5,2,1.0\n0.5,3,1.0\n");
        assert!(matches!(load_modulus_field(s.as_bytes()), Err(Error::Parse { row: 13, .. })));

        let s = "rho,j,modulus\n1.0,0,1\n1.0,2,1\n";
        assert!(matches!(load_modulus_field(s.as_bytes()), Err(Error::Parse { row: 3, .. })));

        let s = "rho,j,modulus\n1.0,0,abc\n";
        assert!(matches!(load_modulus_field(s.as_bytes()), Err(Error::Parse { row: 2, .. })));

        let s = "radius,j,modulus\n1.0,0,1\n";
        assert!(matches!(load_modulus_field(s.as_bytes()), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn complex_format() {
        let g = make_circle_grid(4, 0.5).unwrap();
        let c = ComplexSamples::from_fn(g, |z| z * z);
        let mut buf = Vec::new();
        write_complex_csv([&c], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rho,j,re,im\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(!text.contains('\r'));
        let back = load_complex_samples(buf.as_slice()).unwrap();
        assert_eq!(back, vec![c]);
    }

    struct FailingSink;
    impl Write for FailingSink {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("sink closed"))
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Err(std::io::Error::other("sink closed"))
        }
    }

    #[test]
    fn sink_failure_surfaces() {
        let g = make_circle_grid(8, 1.0).unwrap();
        let s = RealSamples::from_fn(g, |x| x.cos().abs());
        assert!(write_real_csv([&s], FailingSink).is_err());
    }

    #[test]
    fn rotation_moves_values() {
        let g = make_circle_grid(8, 1.0).unwrap();
        let s = RealSamples::new(g, (0..8).map(|j| j as f64).collect()).unwrap();
        let f = ModulusField::new(vec![s]).unwrap().rotate(1);
        assert_eq!(f.boundary().values()[0], 7.0);
        assert_eq!(f.boundary().values()[1], 0.0);
    }
}
