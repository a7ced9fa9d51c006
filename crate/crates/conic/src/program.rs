//! Problem and solution containers plus a plain-text dump format.
//!
//! A [`ConeProgram`] describes
//!
//! ```text
//! maximize    objective^T x
//! subject to  eq_matrix x = eq_rhs
//!             cone_rhs - cone_matrix x  in  K
//! ```
//!
//! where `K` is the product of the blocks listed in `cones`, in row order.
//!
//! The text format is line oriented. Blank lines and lines starting with `#`
//! are ignored. The first record is `cone_program <n> <p> <m>` (variables,
//! equality rows, cone rows), followed by `cones` with a list of tokens
//! `l<dim>`, `q<dim>` or `s<side>`, then the dense sections `objective`
//! (one line), `eq` (`p` lines of `n` coefficients followed by the rhs) and
//! `cone` (`m` lines likewise). An optional `warm_start` line closes the file.

use crate::cones::Cone;
use crate::error::ConicError;
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;

/// A linear cone program in maximization form.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub objective: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub cone_matrix: DMatrix<f64>,
    pub cone_rhs: DVector<f64>,
    pub cones: Vec<Cone>,
    /// Optional starting primal point.
    pub warm_start: Option<DVector<f64>>,
}

/// Outcome reported by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    /// A certificate of dual infeasibility (unbounded objective) was found.
    Unbounded,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max_iterations",
        };
        f.write_str(s)
    }
}

/// Primal-dual point returned by the solver.
///
/// `y` and `z` are the multipliers of the equality and cone constraints in the
/// minimization form `min -objective^T x`, so at optimality
/// `eq_matrix^T y + cone_matrix^T z = objective`.
#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    /// `objective^T x`.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl ConeProgram {
    /// Empty program with `n` variables and no constraints.
    pub fn new(objective: DVector<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            cone_matrix: DMatrix::zeros(0, n),
            cone_rhs: DVector::zeros(0),
            cones: Vec::new(),
            warm_start: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_cone_rows(&self) -> usize {
        self.cone_rhs.len()
    }

    /// Total barrier degree of the cone.
    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    /// Checks dimensions and cone layout.
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        let bad = |what: &str| Err(ConicError::InvalidProgram(what.to_string()));
        if n == 0 {
            return bad("program has no variables");
        }
        if self.eq_matrix.ncols() != n || self.eq_matrix.nrows() != self.eq_rhs.len() {
            return bad("equality block dimensions disagree");
        }
        if self.cone_matrix.ncols() != n || self.cone_matrix.nrows() != self.cone_rhs.len() {
            return bad("cone block dimensions disagree");
        }
        if self.cones.iter().any(|c| !c.is_valid()) {
            return bad("cone with invalid dimension");
        }
        let rows: usize = self.cones.iter().map(Cone::dim).sum();
        if rows != self.cone_rhs.len() {
            return bad("cone dimensions do not cover the cone rows");
        }
        if let Some(w) = &self.warm_start {
            if w.len() != n {
                return bad("warm start has wrong length");
            }
        }
        let finite = |m: &[f64]| m.iter().all(|x| x.is_finite());
        if !finite(self.objective.as_slice())
            || !finite(self.eq_matrix.as_slice())
            || !finite(self.eq_rhs.as_slice())
            || !finite(self.cone_matrix.as_slice())
            || !finite(self.cone_rhs.as_slice())
        {
            return bad("non-finite data");
        }
        Ok(())
    }

    /// Appends a block of cone rows.
    pub fn push_cone(&mut self, cone: Cone, matrix: &DMatrix<f64>, rhs: &DVector<f64>) {
        assert_eq!(matrix.nrows(), cone.dim());
        assert_eq!(rhs.len(), cone.dim());
        assert_eq!(matrix.ncols(), self.num_vars());
        let m = self.cone_matrix.nrows();
        let k = cone.dim();
        let g = std::mem::replace(&mut self.cone_matrix, DMatrix::zeros(0, 0));
        let mut g = g.resize_vertically(m + k, 0.0);
        g.rows_mut(m, k).copy_from(matrix);
        self.cone_matrix = g;
        let h = std::mem::replace(&mut self.cone_rhs, DVector::zeros(0));
        let mut h = h.resize_vertically(m + k, 0.0);
        h.rows_mut(m, k).copy_from(rhs);
        self.cone_rhs = h;
        self.cones.push(cone);
    }

    /// Appends equality rows.
    pub fn push_equality(&mut self, matrix: &DMatrix<f64>, rhs: &DVector<f64>) {
        let p = self.eq_matrix.nrows();
        let k = matrix.nrows();
        let a = std::mem::replace(&mut self.eq_matrix, DMatrix::zeros(0, 0));
        let mut a = a.resize_vertically(p + k, 0.0);
        a.rows_mut(p, k).copy_from(matrix);
        self.eq_matrix = a;
        let b = std::mem::replace(&mut self.eq_rhs, DVector::zeros(0));
        let mut b = b.resize_vertically(p + k, 0.0);
        b.rows_mut(p, k).copy_from(rhs);
        self.eq_rhs = b;
    }

    /// Renders the program in the plain-text format described in the module docs.
    pub fn to_text(&self) -> String {
        let n = self.num_vars();
        let mut out = String::new();
        let _ = writeln!(out, "cone_program {} {} {}", n, self.eq_rhs.len(), self.cone_rhs.len());
        let cones: Vec<String> = self
            .cones
            .iter()
            .map(|c| match *c {
                Cone::Nonnegative(d) => format!("l{d}"),
                Cone::SecondOrder(d) => format!("q{d}"),
                Cone::Psd(d) => format!("s{d}"),
            })
            .collect();
        let _ = writeln!(out, "cones {}", cones.join(" "));
        out.push_str("objective\n");
        write_row(&mut out, self.objective.iter().copied());
        out.push_str("eq\n");
        for i in 0..self.eq_rhs.len() {
            let r: Vec<f64> = self.eq_matrix.row(i).iter().copied().collect();
            write_row(&mut out, r.into_iter().chain(std::iter::once(self.eq_rhs[i])));
        }
        out.push_str("cone\n");
        for i in 0..self.cone_rhs.len() {
            let r: Vec<f64> = self.cone_matrix.row(i).iter().copied().collect();
            write_row(&mut out, r.into_iter().chain(std::iter::once(self.cone_rhs[i])));
        }
        if let Some(w) = &self.warm_start {
            out.push_str("warm_start\n");
            write_row(&mut out, w.iter().copied());
        }
        out
    }

    /// Parses the plain-text format produced by [`ConeProgram::to_text`].
    pub fn from_text(text: &str) -> Result<Self, ConicError> {
        let mut lines = Lines {
            items: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .collect(),
            pos: 0,
        };

        let (li, header) = lines.next("header")?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 || head[0] != "cone_program" {
            return Err(parse_err(li, "expected `cone_program <n> <p> <m>`"));
        }
        let dims: Result<Vec<usize>, _> = head[1..].iter().map(|t| t.parse::<usize>()).collect();
        let dims = dims.map_err(|_| parse_err(li, "bad dimension"))?;
        let (n, p, m) = (dims[0], dims[1], dims[2]);

        let (li, cone_line) = lines.next("cones")?;
        let mut toks = cone_line.split_whitespace();
        if toks.next() != Some("cones") {
            return Err(parse_err(li, "expected `cones`"));
        }
        let mut cones = Vec::new();
        for t in toks {
            let (kind, size) = t.split_at(1);
            let d: usize = size.parse().map_err(|_| parse_err(li, "bad cone size"))?;
            cones.push(match kind {
                "l" => Cone::Nonnegative(d),
                "q" => Cone::SecondOrder(d),
                "s" => Cone::Psd(d),
                _ => return Err(parse_err(li, "unknown cone kind")),
            });
        }

        lines.tag("objective")?;
        let objective = DVector::from_vec(lines.numbers(n)?);
        lines.tag("eq")?;
        let (a, b) = lines.rows(p, n)?;
        lines.tag("cone")?;
        let (g, h) = lines.rows(m, n)?;
        let mut warm_start = None;
        if lines.pos < lines.items.len() {
            lines.tag("warm_start")?;
            warm_start = Some(DVector::from_vec(lines.numbers(n)?));
        }
        if lines.pos < lines.items.len() {
            return Err(parse_err(lines.items[lines.pos].0, "unexpected trailing content"));
        }
        let prog = ConeProgram {
            objective,
            eq_matrix: a,
            eq_rhs: b,
            cone_matrix: g,
            cone_rhs: h,
            cones,
            warm_start,
        };
        prog.validate()?;
        Ok(prog)
    }
}

fn write_row(out: &mut String, vals: impl Iterator<Item = f64>) {
    let parts: Vec<String> = vals.map(|x| format!("{x:e}")).collect();
    let _ = writeln!(out, "{}", parts.join(" "));
}

fn parse_err(line: usize, message: &str) -> ConicError {
    ConicError::Parse { line, message: message.to_string() }
}

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ConicError> {
        let item = self.items.get(self.pos).copied();
        self.pos += 1;
        item.ok_or_else(|| parse_err(0, &format!("unexpected end of input, expected {what}")))
    }

    fn tag(&mut self, tag: &str) -> Result<(), ConicError> {
        let (li, l) = self.next(tag)?;
        if l != tag {
            return Err(parse_err(li, &format!("expected `{tag}`")));
        }
        Ok(())
    }

    fn numbers(&mut self, expect: usize) -> Result<Vec<f64>, ConicError> {
        let (li, l) = self.next("a row of numbers")?;
        let v: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse::<f64>).collect();
        let v = v.map_err(|_| parse_err(li, "bad number"))?;
        if v.len() != expect {
            return Err(parse_err(li, "wrong number of entries"));
        }
        Ok(v)
    }

    fn rows(&mut self, count: usize, n: usize) -> Result<(DMatrix<f64>, DVector<f64>), ConicError> {
        let mut mat = DMatrix::zeros(count, n);
        let mut rhs = DVector::zeros(count);
        for i in 0..count {
            let v = self.numbers(n + 1)?;
            for j in 0..n {
                mat[(i, j)] = v[j];
            }
            rhs[i] = v[n];
        }
        Ok((mat, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let mut prog = ConeProgram::new(DVector::from_vec(vec![1.0, -0.5]));
        prog.push_cone(
            Cone::Nonnegative(2),
            &DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            &DVector::zeros(2),
        );
        prog.push_cone(
            Cone::SecondOrder(3),
            &DMatrix::from_row_slice(3, 2, &[0.0, 0.0, -1.0, 0.0, 0.0, -1.0]),
            &DVector::from_vec(vec![1.0, 0.0, 0.0]),
        );
        prog.push_equality(&DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), &DVector::from_vec(vec![0.5]));
        prog.warm_start = Some(DVector::from_vec(vec![0.25, 0.25]));
        let text = prog.to_text();
        let back = ConeProgram::from_text(&text).unwrap();
        assert_eq!(back.cones, prog.cones);
        assert_eq!(back.cone_matrix, prog.cone_matrix);
        assert_eq!(back.eq_rhs, prog.eq_rhs);
        assert_eq!(back.warm_start, prog.warm_start);
    }

    #[test]
    fn rejects_mismatched_cones() {
        let mut prog = ConeProgram::new(DVector::from_vec(vec![1.0]));
        prog.push_cone(Cone::Nonnegative(1), &DMatrix::from_element(1, 1, -1.0), &DVector::zeros(1));
        prog.cones[0] = Cone::Nonnegative(2);
        assert!(matches!(prog.validate(), Err(ConicError::InvalidProgram(_))));
    }
}
