//! Plain-text export of [`LkCertificate`] for third-party re-verification.
//!
//! ```text
//! lk-certificate v1
//! dimension 4
//! h_max 2.1500000000000000e-1
//! kappa 0.0000000000000000e0
//! resolution 1.0000000000000000e-3
//! iterations 57
//! matrix F
//! <4 rows of 4 values>
//! matrix G
//! ...
//! matrix P1 / P2 / P3 / Q
//! end
//! ```
//!
//! Matrices are row-major, one row per line, values in scientific notation
//! with 17 significant digits so that the text round-trips exactly.
//! `resolution none` is written for certificates found outside a grid search.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{LkCertificate, LmiVariables, ThetaProblem};
use crate::error::{Error, Result};

const HEADER: &str = "lk-certificate v1";
const MATRICES: [&str; 6] = ["F", "G", "P1", "P2", "P3", "Q"];

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_text(cert: &LkCertificate) -> String {
    let mut out = String::new();
    let p = &cert.problem;
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "dimension {}", p.dim()).unwrap();
    writeln!(out, "h_max {}", number(p.h_max())).unwrap();
    writeln!(out, "kappa {}", number(p.kappa())).unwrap();
    match cert.resolution {
        Some(r) => writeln!(out, "resolution {}", number(r)).unwrap(),
        None => writeln!(out, "resolution none").unwrap(),
    }
    writeln!(out, "iterations {}", cert.iterations).unwrap();
    let v = &cert.vars;
    for (name, m) in MATRICES.iter().zip([p.f(), p.g(), &v.p1, &v.p2, &v.p3, &v.q]) {
        writeln!(out, "matrix {name}").unwrap();
        for i in 0..m.nrows() {
            let row: Vec<String> = m.row(i).iter().map(|x| number(*x)).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    writeln!(out, "end").unwrap();
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, line)) => {
                    self.last = i + 1;
                    let line = line.trim();
                    if !line.is_empty() && !line.starts_with('#') {
                        return Ok(line);
                    }
                }
                None => return Err(self.error("unexpected end of input")),
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::CertificateParse { line: self.last, message: message.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        match line.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ => Err(self.error(format!("expected `{key} <value>`, found `{line}`"))),
        }
    }

    fn float(&self, s: &str) -> Result<f64> {
        s.parse::<f64>().map_err(|_| self.error(format!("invalid number `{s}`")))
    }

    fn matrix(&mut self, name: &str, n: usize) -> Result<DMatrix<f64>> {
        let found = self.keyed("matrix")?;
        if found != name {
            return Err(self.error(format!("expected matrix {name}, found {found}")));
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let line = self.next()?;
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != n {
                return Err(self.error(format!("expected {n} values, found {}", values.len())));
            }
            for (j, s) in values.iter().enumerate() {
                m[(i, j)] = self.float(s)?;
            }
        }
        Ok(m)
    }
}

pub fn from_text(text: &str) -> Result<LkCertificate> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    if lines.next()? != HEADER {
        return Err(lines.error(format!("missing `{HEADER}` header")));
    }
    let dim_text = lines.keyed("dimension")?;
    let n: usize = dim_text
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| lines.error(format!("invalid dimension `{dim_text}`")))?;
    let h_text = lines.keyed("h_max")?;
    let h_max = lines.float(h_text)?;
    let kappa_text = lines.keyed("kappa")?;
    let kappa = lines.float(kappa_text)?;
    let res_text = lines.keyed("resolution")?;
    let resolution = if res_text == "none" { None } else { Some(lines.float(res_text)?) };
    let it_text = lines.keyed("iterations")?;
    let iterations = it_text
        .parse()
        .map_err(|_| lines.error(format!("invalid iteration count `{it_text}`")))?;
    let mut mats = Vec::with_capacity(MATRICES.len());
    for name in MATRICES {
        mats.push(lines.matrix(name, n)?);
    }
    if lines.next()? != "end" {
        return Err(lines.error("expected `end`"));
    }
    let q = mats.pop().unwrap();
    let p3 = mats.pop().unwrap();
    let p2 = mats.pop().unwrap();
    let p1 = mats.pop().unwrap();
    let g = mats.pop().unwrap();
    let f = mats.pop().unwrap();
    let problem = ThetaProblem::new(f, g, h_max, kappa)
        .map_err(|e| Error::CertificateParse { line: lines.last, message: e.to_string() })?;
    Ok(LkCertificate { vars: LmiVariables { p1, p2, p3, q }, problem, resolution, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robustness::verify_certificate;

    fn sample() -> LkCertificate {
        let f = DMatrix::from_row_slice(2, 2, &[-1.0, 0.1, 1.0 / 3.0, -2.0]);
        let g = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, std::f64::consts::PI * 1e-3, 0.1]);
        LkCertificate {
            vars: LmiVariables {
                p1: DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
                p2: DMatrix::from_row_slice(2, 2, &[0.7, -1.0e-17, 5e300, 0.9]),
                p3: DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]),
                q: DMatrix::identity(2, 2),
            },
            problem: ThetaProblem::new(f, g, 0.215, 0.0).unwrap(),
            resolution: Some(1e-3),
            iterations: 42,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let cert = sample();
        let parsed = from_text(&to_text(&cert)).unwrap();
        assert_eq!(parsed, cert);

        let mut none = cert;
        none.resolution = None;
        assert_eq!(from_text(&to_text(&none)).unwrap(), none);
    }

    #[test]
    fn verification_survives_round_trip() {
        let f = -DMatrix::identity(2, 2);
        let vars = crate::robustness::constructive_variables(&f).unwrap();
        let cert = LkCertificate {
            vars,
            problem: ThetaProblem::new(f, DMatrix::zeros(2, 2), 0.5, 0.0).unwrap(),
            resolution: None,
            iterations: 0,
        };
        assert!(verify_certificate(&cert));
        assert!(verify_certificate(&from_text(&to_text(&cert)).unwrap()));
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = to_text(&sample()).replace("iterations 42", "iterations x");
        match from_text(&text) {
            Err(Error::CertificateParse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let truncated: String = to_text(&sample()).lines().take(9).collect::<Vec<_>>().join("\n");
        assert!(from_text(&truncated).is_err());
        assert!(from_text("").is_err());
    }
}
